//! Seeded random lattices that satisfy the shielding hypotheses, and the
//! suite that compares the direct reduced ground state with the prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Partition, SpinLattice};
use crate::shielding::{ground_oracle, OracleOutcome};

#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub lattice: SpinLattice,
    pub partition: Partition,
}

/// Draws one lattice.
///
/// `n ∈ [4, 9]` sites, an interface of `m ∈ [2, min(3, n-2)]` sites, and each
/// remaining site independently in A or B. Every admissible pair gets a bond
/// with probability `p ∈ [0.2, 0.8]` and `J ∈ [-2, 2]`; A–B pairs never do.
/// Sites of A and B get `h ∈ [0, 2]`; no y fields.
pub fn random_instance(rng: &mut impl Rng) -> Result<RandomInstance> {
    let n = rng.gen_range(4..=9);
    let m = rng.gen_range(2..=3.min(n - 2));
    let p = rng.gen_range(0.2..=0.8);
    let s: Vec<usize> = (0..m).collect();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for site in m..n {
        if rng.gen_bool(0.5) {
            a.push(site);
        } else {
            b.push(site);
        }
    }
    let mut lattice = SpinLattice::new(n)?;
    for i in 0..n {
        for j in i + 1..n {
            let crosses = (a.contains(&i) && b.contains(&j)) || (b.contains(&i) && a.contains(&j));
            if !crosses && rng.gen_bool(p) {
                lattice.set_coupling(i, j, rng.gen_range(-2.0..=2.0))?;
            }
        }
    }
    for site in m..n {
        lattice.set_field_x(site, rng.gen_range(0.0..=2.0))?;
    }
    Ok(RandomInstance { lattice, partition: Partition::new(a, s, b) })
}

/// `count` instances from one ChaCha8 stream; identical for identical seeds.
pub fn random_instances(seed: u64, count: usize) -> Result<Vec<RandomInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}

#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub index: usize,
    pub n_sites: usize,
    pub interface_len: usize,
    pub outcome: OracleOutcome,
}

#[derive(Clone, Debug)]
pub struct OracleSuiteReport {
    pub seed: u64,
    pub tolerance: f64,
    pub entries: Vec<SuiteEntry>,
}

impl OracleSuiteReport {
    /// Instances where interface alignment held.
    pub fn qualifying(&self) -> impl Iterator<Item = &SuiteEntry> {
        self.entries.iter().filter(|e| e.outcome.distance.is_some())
    }

    pub fn max_distance(&self) -> f64 {
        self.qualifying().filter_map(|e| e.outcome.distance).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<usize> {
        self.qualifying().filter(|e| e.outcome.distance.unwrap() >= self.tolerance).map(|e| e.index).collect()
    }

    pub fn pass(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Generates `count` instances and runs the ground-state oracle on each.
pub fn oracle_suite(seed: u64, count: usize, gap_tol: f64, eps: f64, tolerance: f64) -> Result<OracleSuiteReport> {
    if count == 0 {
        return Err(Error::InvalidArgument("oracle suite needs at least one instance".into()));
    }
    let instances = random_instances(seed, count)?;
    let entries = instances
        .into_par_iter()
        .enumerate()
        .map(|(index, inst)| {
            let outcome = ground_oracle(&inst.lattice, &inst.partition, gap_tol, eps)?;
            Ok(SuiteEntry {
                index,
                n_sites: inst.lattice.n_sites(),
                interface_len: inst.partition.interface_len(),
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleSuiteReport { seed, tolerance, entries })
}
