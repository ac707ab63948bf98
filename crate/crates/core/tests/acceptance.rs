//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use shieldlab::catalog;
use shieldlab::classical::{enumerate_ground, ladder_threshold_scan, ladder_transition, pentagon_observable};
use shieldlab::closed_forms::{chain3_correlation, f, g};
use shieldlab::lattice::{ParamPath, Partition, SpinLattice};
use shieldlab::operator::{build_hamiltonian, expectation_of, partial_trace, SiteObservable};
use shieldlab::random::{oracle_suite, random_instances};
use shieldlab::shielding::{
    check_identities, correlation, lattice_sweep, single_site_verify, ground_sweep_verify, x_side_parameters, IdentityReport,
    SweepPoint, DEFAULT_EPS, GROUND_TOL,
};
use shieldlab::spectral::{gibbs_state, ground_space, DEFAULT_GAP_TOL};
use shieldlab::Result;

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

const BETAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
const FIELDS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

fn ten_values() -> Vec<f64> {
    (1..=10).map(|k| 0.2 * k as f64).collect()
}

fn thermal_zz(lattice: &SpinLattice, beta: f64, i: usize, j: usize) -> Result<f64> {
    let rho = gibbs_state(&build_hamiltonian(lattice)?, beta)?;
    expectation_of(&rho, &SiteObservable::zz(i, j))
}

fn criterion1() -> Outcome {
    let mut worst_sweep = 0.0f64;
    let mut worst_target = 0.0f64;
    let cases: Vec<(SpinLattice, Partition)> = vec![catalog::chain3(1.0, 1.0, 1.0)?, catalog::single_interface7()?];
    for (lattice, partition) in &cases {
        let params = x_side_parameters(lattice, partition);
        for beta in [0.5, 1.0, 2.0] {
            let mut points: Vec<SweepPoint> = Vec::new();
            for path in &params {
                points.extend(lattice_sweep(lattice, path, &ten_values())?);
            }
            let report = single_site_verify(partition, beta, points)?;
            worst_sweep = worst_sweep.max(report.max_sweep_distance);
            worst_target = worst_target.max(report.max_prediction_distance);
        }
    }
    let pass = worst_sweep < 1e-9 && worst_target < 1e-9;
    Ok((pass, format!("sweep {worst_sweep:.2e}, to Gibbs(H_Y) {worst_target:.2e}")))
}

fn criterion2() -> Outcome {
    let mut worst = 0.0f64;
    let mut in_range = true;
    for beta in BETAS {
        for h1 in FIELDS {
            for h4 in FIELDS {
                let (lattice, _) = catalog::diamond(h1, h4)?;
                let closed = f(beta, h1, h4);
                in_range &= (0.0..1.0).contains(&closed);
                worst = worst.max((thermal_zz(&lattice, beta, 1, 2)? - closed).abs());
            }
        }
    }
    let (lattice, partition) = catalog::diamond(1.0, 1.0)?;
    let grid: Vec<f64> = (1..=30).map(|k| 0.1 * k as f64).collect();
    let report = ground_sweep_verify(&partition, DEFAULT_GAP_TOL, DEFAULT_EPS, lattice_sweep(&lattice, &ParamPath::FieldX(0), &grid)?)?;
    let ground_ok = report.alignment_failures().is_empty() && report.max_sweep_distance < 1e-8;
    let pass = worst < 1e-9 && in_range && ground_ok;
    Ok((
        pass,
        format!(
            "|ED - f| {worst:.2e} over 80 points, 0 <= f < 1: {in_range}, ground sweep {:.2e}",
            report.max_sweep_distance
        ),
    ))
}

fn criterion3() -> Outcome {
    let report = oracle_suite(1, 60, DEFAULT_GAP_TOL, DEFAULT_EPS, GROUND_TOL)?;
    let qualifying = report.qualifying().count();
    let unaligned = report.entries.len() - qualifying;
    let pass = report.entries.len() >= 50 && report.pass() && unaligned >= 1;
    Ok((
        pass,
        format!(
            "{qualifying}/{} satisfy interface alignment, max distance {:.2e}, {unaligned} fail interface alignment",
            report.entries.len(),
            report.max_distance()
        ),
    ))
}

fn criterion4() -> Outcome {
    let betas = [0.5, 1.0, 2.0];
    let mut cases = vec![catalog::quasichain()?];
    cases.extend(random_instances(2024, 10)?.into_iter().map(|i| (i.lattice, i.partition)));
    let mut worst = IdentityReport { reassembly: 0.0, factorization: 0.0, parity_conjugation: 0.0, parity_trace: 0.0 };
    for (lattice, partition) in &cases {
        let r = check_identities(lattice, partition, &betas)?;
        worst.reassembly = worst.reassembly.max(r.reassembly);
        worst.factorization = worst.factorization.max(r.factorization);
        worst.parity_conjugation = worst.parity_conjugation.max(r.parity_conjugation);
        worst.parity_trace = worst.parity_trace.max(r.parity_trace);
    }
    Ok((
        worst.holds(),
        format!(
            "reassembly {:.2e}, factorization {:.2e}, parity {:.2e}, trace parity {:.2e}",
            worst.reassembly, worst.factorization, worst.parity_conjugation, worst.parity_trace
        ),
    ))
}

/// `k / 10` as the nearest double, the same rounding the exact enumerator uses.
fn tenths(k: i64) -> f64 {
    k as f64 / 10.0
}

fn criterion5() -> Outcome {
    let mut energies_ok = true;
    for (a10, expected10) in [(5, -35), (6, -36), (8, -38), (10, -40)].into_iter().chain([(0, -40), (2, -38), (5, -35)]) {
        let ground = enumerate_ground(&catalog::pentagon(tenths(a10))?)?;
        energies_ok &= ground.exact && ground.energy_min == tenths(expected10);
    }
    let mut signs_ok = true;
    for count in [2, 4] {
        for (a, expected) in [(0.8, Some(1)), (0.2, Some(-1)), (0.5, None)] {
            let chain = catalog::pentagon_chain(count, a)?;
            let dist = pentagon_observable(&chain.lattice, chain.far_pair)?;
            signs_ok &= match expected {
                Some(s) => dist.deterministic() == Some(s),
                None => dist.both_signs(),
            };
        }
    }
    Ok((energies_ok && signs_ok, format!("minimum energies exact: {energies_ok}, far-pair signs: {signs_ok}")))
}

fn criterion6() -> Outcome {
    let rows = ladder_threshold_scan(&[-1.0, 0.0, 1.0, 1.9, 2.1, 3.0])?;
    let below = rows.iter().filter(|r| r.m < 2.0).all(|r| r.shielded() && r.degeneracy == 2);
    let above = rows.iter().filter(|r| r.m > 2.0).all(|r| r.zz.abs() < 1.0 && r.degeneracy > 2);
    let fine: Vec<f64> = (0..=20).map(|k| 1.9 + 0.01 * k as f64).collect();
    let transition = ladder_transition(&ladder_threshold_scan(&fine)?);
    let bracket_ok = matches!(transition, Some((lo, hi)) if lo >= 1.9 - 1e-12 && hi <= 2.1 + 1e-12);
    Ok((below && above && bracket_ok, format!("shielded below: {below}, unshielded above: {above}, transition {transition:?}")))
}

fn criterion7() -> Outcome {
    let mut worst = 0.0f64;
    for beta in BETAS {
        for h in FIELDS {
            for (j1, j2) in [(1.0, 1.0), (0.5, 1.5), (1.3, 0.7)] {
                let (lattice, _) = catalog::chain3(j1, j2, h)?;
                let rho = gibbs_state(&build_hamiltonian(&lattice)?, beta)?;
                worst = worst.max((correlation(&rho, 0, 2)? - chain3_correlation(beta, j1, j2, h)).abs());
            }
            let (lattice, _) = catalog::chain5(0.4, h, 0.8)?;
            worst = worst.max((thermal_zz(&lattice, beta, 1, 3)? - g(beta, h)).abs());
        }
    }
    let h3_grid = [0.1, 0.5, 1.0, 1.5, 2.0, 3.0];
    let spread = |values: Vec<f64>| {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let mut ground = Vec::new();
    let mut thermal = Vec::new();
    for h3 in h3_grid {
        let (lattice, _) = catalog::chain5(0.4, h3, 0.8)?;
        let gs = ground_space(&build_hamiltonian(&lattice)?, DEFAULT_GAP_TOL)?;
        ground.push(expectation_of(&partial_trace(&gs.normalized(), &[0, 4])?, &SiteObservable::zz(0, 4))?);
        thermal.push(thermal_zz(&lattice, 1.0, 0, 4)?);
    }
    let (gs_spread, th_spread) = (spread(ground), spread(thermal));
    let pass = worst < 1e-9 && gs_spread < 1e-8 && th_spread > 1e-3;
    Ok((pass, format!("closed forms {worst:.2e}, ground spread {gs_spread:.2e}, beta=1 spread {th_spread:.2e}")))
}

fn zero_field_lattices() -> Result<Vec<SpinLattice>> {
    let mut out = Vec::new();
    for a in [0.0, 0.2, 0.5, 0.6, 0.8, 1.0] {
        out.push(catalog::pentagon(a)?);
        out.push(catalog::pentagon_pair(a)?.lattice);
    }
    for m in [-1.0, 0.0, 1.0, 1.9, 2.0, 2.1, 3.0] {
        out.push(catalog::ladder(m)?.0);
    }
    out.push(catalog::diamond(0.0, 0.0)?.0);
    out.push(catalog::chain5(0.0, 0.0, 0.0)?.0);
    out.push(catalog::chain3(1.0, -0.7, 0.0)?.0);
    for inst in random_instances(8, 30)? {
        let mut lat = SpinLattice::new(inst.lattice.n_sites())?;
        for ((i, j), v) in inst.lattice.couplings() {
            // Tenths keep the enumeration exact and make ties likely.
            lat.set_coupling(i, j, (v * 10.0).round() / 10.0)?;
        }
        out.push(lat);
    }
    let mut big = SpinLattice::new(12)?;
    for i in 0..12 {
        big.set_coupling(i, (i + 1) % 12, if i % 3 == 0 { -1.0 } else { 1.0 })?;
        big.set_coupling(i, (i + 5) % 12, 0.5)?;
    }
    out.push(big);
    Ok(out)
}

fn criterion8() -> Outcome {
    let lattices = zero_field_lattices()?;
    let mut worst = 0.0f64;
    let mut degeneracy_ok = true;
    for lat in &lattices {
        let classical = enumerate_ground(lat)?;
        let quantum = ground_space(&build_hamiltonian(lat)?, DEFAULT_GAP_TOL)?;
        worst = worst.max((classical.energy_min - quantum.energy).abs());
        degeneracy_ok &= classical.degeneracy() == quantum.degeneracy;
    }
    Ok((worst < 1e-10 && degeneracy_ok, format!("{} lattices, energy {worst:.2e}, degeneracy match: {degeneracy_ok}", lattices.len())))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("single-site interface exactness", criterion1),
        ("four-site diamond closed form and ground sweep", criterion2),
        ("random ground-state oracle equivalence", criterion3),
        ("sector block identities", criterion4),
        ("pentagon thresholds", criterion5),
        ("ladder scan", criterion6),
        ("chain correlations", criterion7),
        ("classical and quantum ground agreement", criterion8),
    ];
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {verdict} {name} ({detail}; {:.1}s)", k + 1, start.elapsed().as_secs_f64());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
