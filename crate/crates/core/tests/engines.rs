use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shieldlab::classical::enumerate_ground;
use shieldlab::lattice::{ParamPath, SpinLattice};
use shieldlab::operator::{build_hamiltonian, partial_trace, trace_distance};
use shieldlab::random::random_instance;
use shieldlab::shielding::{ground_oracle, sector_decompose, DEFAULT_EPS};
use shieldlab::spectral::{gibbs_state, ground_space, DEFAULT_GAP_TOL};

fn zero_field(n: usize, bonds: &[(usize, usize, i8)]) -> SpinLattice {
    let mut lat = SpinLattice::new(n).unwrap();
    for &(i, j, v) in bonds {
        if i != j {
            lat.set_coupling(i, j, v as f64 * 0.5).unwrap();
        }
    }
    lat
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn classical_and_quantum_ground_agree(
        n in 2usize..8,
        bonds in prop::collection::vec((0usize..8, 0usize..8, -3i8..=3), 0..14),
    ) {
        let bonds: Vec<_> = bonds.into_iter().filter(|&(i, j, _)| i < n && j < n).collect();
        let lat = zero_field(n, &bonds);
        let classical = enumerate_ground(&lat).unwrap();
        let quantum = ground_space(&build_hamiltonian(&lat).unwrap(), DEFAULT_GAP_TOL).unwrap();
        prop_assert!((classical.energy_min - quantum.energy).abs() < 1e-10);
        prop_assert_eq!(classical.degeneracy(), quantum.degeneracy);
    }

    #[test]
    fn far_side_edits_leave_shielded_ground_states_alone(seed in 0u64..400, scale in 0.1f64..3.0) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let y = inst.partition.set_y();
        let before = ground_oracle(&inst.lattice, &inst.partition, DEFAULT_GAP_TOL, DEFAULT_EPS).unwrap();
        prop_assume!(before.distance.is_some());
        let mut edited = inst.lattice.clone();
        for a in inst.partition.set_a() {
            edited.apply(&ParamPath::FieldX(a), scale * (a as f64 + 1.0) / 4.0).unwrap();
        }
        let after = ground_oracle(&edited, &inst.partition, DEFAULT_GAP_TOL, DEFAULT_EPS).unwrap();
        prop_assume!(after.alignment.sector_star.as_ref().map(|s| s.canonical())
            == before.alignment.sector_star.as_ref().map(|s| s.canonical()));
        let rho = |lat: &SpinLattice| {
            let gs = ground_space(&build_hamiltonian(lat).unwrap(), DEFAULT_GAP_TOL).unwrap();
            gs.reduced(&y).unwrap()
        };
        prop_assert!(trace_distance(&rho(&inst.lattice), &rho(&edited)).unwrap() < 1e-8);
    }
}

#[test]
fn sector_oracle_matches_direct_on_random_lattices() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..8 {
        let inst = random_instance(&mut rng).unwrap();
        let d = sector_decompose(&inst.lattice, &inst.partition).unwrap();
        let h = build_hamiltonian(&inst.lattice).unwrap();
        for beta in [0.4, 2.5] {
            let direct = partial_trace(&gibbs_state(&h, beta).unwrap(), &inst.partition.set_y()).unwrap();
            assert!(trace_distance(&direct, &d.sector_reduced_gibbs(beta).unwrap()).unwrap() < 1e-10);
        }
    }
}

/// Adds y fields on A and B to random instances, which the two-sector
/// prediction's derivation leaves out.
fn with_y_fields(seed: u64) -> shieldlab::random::RandomInstance {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = random_instance(&mut rng).unwrap();
    for site in inst.partition.set_a().into_iter().chain(inst.partition.set_b()) {
        inst.lattice.set_field_y(site, rng.gen_range(-1.5..1.5)).unwrap();
    }
    inst
}

#[test]
fn ground_prediction_with_y_fields() {
    let mut checked = 0;
    for seed in 0..40 {
        let inst = with_y_fields(seed);
        let outcome = ground_oracle(&inst.lattice, &inst.partition, DEFAULT_GAP_TOL, DEFAULT_EPS).unwrap();
        if let Some(d) = outcome.distance {
            assert!(d < 1e-8, "seed {seed}: {d}");
            checked += 1;
        }
    }
    assert!(checked >= 10, "only {checked} instances satisfied interface alignment");
}

#[test]
fn opposite_sectors_share_ground_degeneracy() {
    // Both halves of the two-sector state then carry the same normalization.
    for seed in 0..30 {
        let inst = with_y_fields(seed);
        let d = sector_decompose(&inst.lattice, &inst.partition).unwrap();
        let all = (1usize << d.interface_len()) - 1;
        for k in 0..=all {
            let deg = |k: usize| ground_space(&d.h_dprime[k].to_dense(), DEFAULT_GAP_TOL).unwrap().degeneracy;
            assert_eq!(deg(k), deg(k ^ all), "seed {seed}, sector {k}");
        }
    }
}
