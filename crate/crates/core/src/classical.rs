//! Exhaustive ground-state search for zero-field Ising lattices.
//!
//! Spin 0 is pinned up and the other `n - 1` spins are walked in Gray-code
//! order, so each step flips one spin and updates the energy from its
//! neighbours. When every coupling is a short decimal the walk runs on
//! scaled integers and ties are exact.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;

use crate::csvfmt::sci;
use crate::error::{Error, Result};
use crate::lattice::{Partition, SpinLattice, MAX_CLASSICAL_SITES};

/// Energy band for ties when couplings are not short decimals.
pub const FLOAT_TIE_BAND: f64 = 1e-12;

const CHUNK_BITS: usize = 16;
const MAX_DECIMALS: u32 = 9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinConfig {
    /// Bit `k` set means spin `k` points down.
    pub bits: u64,
    pub energy: f64,
}

impl SpinConfig {
    pub fn spin(&self, site: usize) -> i8 {
        if (self.bits >> site) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    /// Binary string with site 0 rightmost.
    pub fn binary(&self, n_sites: usize) -> String {
        (0..n_sites).rev().map(|k| if (self.bits >> k) & 1 == 1 { '1' } else { '0' }).collect()
    }
}

/// All minimum-energy configurations, closed under a global flip and sorted by bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundSet {
    pub n_sites: usize,
    pub energy_min: f64,
    pub configs: Vec<SpinConfig>,
    /// Whether energies were compared in exact scaled-integer arithmetic.
    pub exact: bool,
}

impl GroundSet {
    pub fn degeneracy(&self) -> usize {
        self.configs.len()
    }

    /// Uniform average of `s_i s_j` over the ground configurations.
    pub fn zz(&self, i: usize, j: usize) -> f64 {
        let total: i64 = self.configs.iter().map(|c| (c.spin(i) * c.spin(j)) as i64).sum();
        total as f64 / self.configs.len() as f64
    }

    /// How many ground configurations have `s_i s_j = +1` and `-1`.
    pub fn pair_distribution(&self, i: usize, j: usize) -> PairDistribution {
        let plus = self.configs.iter().filter(|c| c.spin(i) == c.spin(j)).count();
        PairDistribution { plus, minus: self.configs.len() - plus }
    }

    pub fn contains(&self, bits: u64) -> bool {
        self.configs.binary_search_by_key(&bits, |c| c.bits).is_ok()
    }

    /// CSV with one row per configuration and a `zz_i_j` column per pair.
    pub fn write_csv<W: Write>(&self, pairs: &[(usize, usize)], mut out: W) -> Result<()> {
        let mut header = vec!["bitmask".to_string(), "energy".to_string()];
        header.extend(pairs.iter().map(|(i, j)| format!("zz_{i}_{j}")));
        writeln!(out, "{}", header.join(","))?;
        for c in &self.configs {
            let mut row = vec![c.binary(self.n_sites), sci(c.energy)];
            row.extend(pairs.iter().map(|&(i, j)| (c.spin(i) * c.spin(j)).to_string()));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairDistribution {
    pub plus: usize,
    pub minus: usize,
}

impl PairDistribution {
    pub fn mean(&self) -> f64 {
        (self.plus as f64 - self.minus as f64) / (self.plus + self.minus) as f64
    }

    /// `Some(±1)` when every ground configuration agrees.
    pub fn deterministic(&self) -> Option<i8> {
        match (self.plus, self.minus) {
            (_, 0) => Some(1),
            (0, _) => Some(-1),
            _ => None,
        }
    }

    pub fn both_signs(&self) -> bool {
        self.plus > 0 && self.minus > 0
    }
}

/// `-Σ J_ij s_i s_j` for a bitmask.
pub fn config_energy(lattice: &SpinLattice, bits: u64) -> f64 {
    lattice
        .couplings()
        .map(|((i, j), v)| {
            let aligned = ((bits >> i) ^ (bits >> j)) & 1 == 0;
            if aligned {
                -v
            } else {
                v
            }
        })
        .sum()
}

trait Weight:
    Copy + Send + Sync + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    const ZERO: Self;
    const TWO: Self;
}

impl Weight for i64 {
    const ZERO: Self = 0;
    const TWO: Self = 2;
}

impl Weight for f64 {
    const ZERO: Self = 0.0;
    const TWO: Self = 2.0;
}

/// Integer couplings `J · 10^k` for the smallest `k ≤ 9` that makes all of them whole.
fn decimal_scaling(lattice: &SpinLattice) -> Option<(f64, BTreeMap<(usize, usize), i64>)> {
    let values: Vec<((usize, usize), f64)> = lattice.couplings().collect();
    for k in 0..=MAX_DECIMALS {
        let scale = 10f64.powi(k as i32);
        let mut out = BTreeMap::new();
        let mut total = 0f64;
        let ok = values.iter().all(|&(key, v)| {
            let x = v * scale;
            let r = x.round();
            total += r.abs();
            out.insert(key, r as i64);
            (x - r).abs() <= 8.0 * f64::EPSILON * x.abs().max(1.0)
        });
        if ok {
            // Keep all partial sums exactly representable.
            return (total < 2f64.powi(52)).then_some((scale, out));
        }
    }
    None
}

fn neighbor_lists<T: Copy>(n: usize, couplings: &BTreeMap<(usize, usize), T>) -> Vec<Vec<(usize, T)>> {
    let mut nbrs = vec![Vec::new(); n];
    for (&(i, j), &v) in couplings {
        nbrs[i].push((j, v));
        nbrs[j].push((i, v));
    }
    nbrs
}

fn energy_of<T: Weight>(couplings: &BTreeMap<(usize, usize), T>, bits: u64) -> T {
    couplings.iter().fold(T::ZERO, |acc, (&(i, j), &v)| {
        if ((bits >> i) ^ (bits >> j)) & 1 == 0 {
            acc - v
        } else {
            acc + v
        }
    })
}

/// Walks every configuration with spin 0 up; returns candidates within `band` of the minimum.
fn scan<T: Weight>(n: usize, couplings: &BTreeMap<(usize, usize), T>, band: T) -> (T, Vec<u64>) {
    let nbrs = neighbor_lists(n, couplings);
    let free = n - 1;
    let chunk_bits = free.min(CHUNK_BITS);
    let chunks = 1u64 << (free - chunk_bits);
    let len = 1u64 << chunk_bits;

    let per_chunk: Vec<(T, Vec<u64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let i0 = c << chunk_bits;
            let mut bits = (i0 ^ (i0 >> 1)) << 1;
            let mut e = energy_of(couplings, bits);
            let mut best = e;
            let mut found = vec![(bits, e)];
            for i in i0 + 1..i0 + len {
                let site = i.trailing_zeros() as usize + 1;
                let s = if (bits >> site) & 1 == 1 { -1i8 } else { 1 };
                let mut field = T::ZERO;
                for &(j, v) in &nbrs[site] {
                    let same = ((bits >> j) & 1 == 1) == (s == -1);
                    field = if same { field + v } else { field - v };
                }
                // Flipping s_site changes -J s_site s_j into +J s_site s_j.
                e = e + T::TWO * field;
                bits ^= 1 << site;
                if e < best - band {
                    best = e;
                    found.clear();
                    found.push((bits, e));
                } else if e <= best + band {
                    if e < best {
                        best = e;
                        found.retain(|&(_, x)| x <= best + band);
                    }
                    found.push((bits, e));
                }
            }
            (best, found.into_iter().map(|(b, _)| b).collect())
        })
        .collect();

    let best = per_chunk
        .iter()
        .map(|(b, _)| *b)
        .fold(per_chunk[0].0, |a, b| if b < a { b } else { a });
    let mut out: Vec<u64> = per_chunk
        .into_iter()
        .filter(|(b, _)| *b <= best + band)
        .flat_map(|(_, v)| v)
        .collect();
    out.sort_unstable();
    (best, out)
}

fn check_zero_fields(lattice: &SpinLattice) -> Result<()> {
    if let Some((s, _)) = lattice.fields_x().chain(lattice.fields_y()).next() {
        return Err(Error::NonzeroField(s));
    }
    Ok(())
}

/// Minimum-energy configurations of a zero-field lattice.
pub fn enumerate_ground(lattice: &SpinLattice) -> Result<GroundSet> {
    check_zero_fields(lattice)?;
    let n = lattice.n_sites();
    if n > MAX_CLASSICAL_SITES {
        return Err(Error::TooManySites { n_sites: n, limit: MAX_CLASSICAL_SITES });
    }
    let flip_all = (1u64 << n) - 1;

    let (exact, energy_min, half) = match decimal_scaling(lattice) {
        Some((scale, ints)) => {
            let (best, found) = scan::<i64>(n, &ints, 0);
            let found: Vec<u64> = found.into_iter().filter(|&b| energy_of(&ints, b) == best).collect();
            (true, best as f64 / scale, found)
        }
        None => {
            let couplings: BTreeMap<(usize, usize), f64> = lattice.couplings().collect();
            let scale = couplings.values().fold(1.0f64, |a, v| a.max(v.abs()));
            // Loose band for the incremental walk, then re-evaluate from scratch.
            let (_, candidates) = scan::<f64>(n, &couplings, 1e-9 * scale * couplings.len().max(1) as f64);
            let energies: Vec<f64> = candidates.iter().map(|&b| energy_of(&couplings, b)).collect();
            let best = energies.iter().copied().fold(f64::INFINITY, f64::min);
            let band = FLOAT_TIE_BAND * best.abs().max(1.0);
            let found = candidates
                .into_iter()
                .zip(energies)
                .filter(|&(_, e)| e <= best + band)
                .map(|(b, _)| b)
                .collect();
            (false, best, found)
        }
    };

    let all: BTreeSet<u64> = half.iter().flat_map(|&b| [b, b ^ flip_all]).collect();
    let configs = all.into_iter().map(|bits| SpinConfig { bits, energy: energy_min }).collect();
    Ok(GroundSet { n_sites: n, energy_min, configs, exact })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermStatus {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
    /// Every ground configuration puts this bond at its own minimum `-|J|`.
    pub satisfied: bool,
}

/// Per-bond frustration status for couplings inside `subset`.
pub fn frustration_free_check(lattice: &SpinLattice, subset: &[usize], ground: &GroundSet) -> Vec<TermStatus> {
    lattice
        .couplings()
        .filter(|((i, j), _)| subset.contains(i) && subset.contains(j))
        .map(|((i, j), v)| {
            let want: i8 = if v > 0.0 { 1 } else { -1 };
            let satisfied = ground.configs.iter().all(|c| c.spin(i) * c.spin(j) == want);
            TermStatus { i, j, coupling: v, satisfied }
        })
        .collect()
}

/// Sign of `⟨Z_i Z_j⟩` implied by bond signs along paths inside the interface.
///
/// Every interface bond in the component is checked, so a cycle whose sign
/// product is negative reports `Frustrated` instead of a path-dependent answer.
pub fn path_sign_prediction(lattice: &SpinLattice, partition: &Partition, i: usize, j: usize) -> Result<i8> {
    let s = partition.set_s();
    for site in [i, j] {
        if !s.contains(&site) {
            return Err(Error::InvalidArgument(format!("site {site} is not an interface site")));
        }
    }
    let mut sign: BTreeMap<usize, i8> = BTreeMap::from([(i, 1)]);
    let mut queue = VecDeque::from([i]);
    while let Some(u) = queue.pop_front() {
        for &v in s {
            let coupling = lattice.coupling(u, v);
            if v == u || coupling == 0.0 {
                continue;
            }
            let want = sign[&u] * if coupling > 0.0 { 1 } else { -1 };
            match sign.get(&v) {
                Some(&have) if have != want => return Err(Error::Frustrated(u, v)),
                Some(_) => {}
                None => {
                    sign.insert(v, want);
                    queue.push_back(v);
                }
            }
        }
    }
    sign.get(&j).copied().ok_or(Error::Disconnected(i, j))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderRow {
    pub m: f64,
    pub energy: f64,
    pub degeneracy: usize,
    /// Ground-set average of `Z_3 Z_4` (the two interface sites).
    pub zz: f64,
}

impl LadderRow {
    pub fn shielded(&self) -> bool {
        (self.zz.abs() - 1.0).abs() <= 1e-12
    }
}

/// Ground-set statistics of the ladder for each rung value `M`.
pub fn ladder_threshold_scan(grid: &[f64]) -> Result<Vec<LadderRow>> {
    grid.iter()
        .map(|&m| {
            let (lattice, partition) = crate::catalog::ladder(m)?;
            let ground = enumerate_ground(&lattice)?;
            let s = partition.set_s();
            Ok(LadderRow { m, energy: ground.energy_min, degeneracy: ground.degeneracy(), zz: ground.zz(s[0], s[1]) })
        })
        .collect()
}

/// The `[last shielded M, first unshielded M]` bracket of an ascending scan.
pub fn ladder_transition(rows: &[LadderRow]) -> Option<(f64, f64)> {
    rows.windows(2).find(|w| w[0].shielded() && !w[1].shielded()).map(|w| (w[0].m, w[1].m))
}

/// Distribution of `s_i s_j` over the ground set of a zero-field lattice.
pub fn pentagon_observable(lattice: &SpinLattice, pair: (usize, usize)) -> Result<PairDistribution> {
    Ok(enumerate_ground(lattice)?.pair_distribution(pair.0, pair.1))
}

/// A lattice whose shared sites were split in two and re-tied by strong bonds.
#[derive(Clone, Debug)]
pub struct DoubledLattice {
    pub lattice: SpinLattice,
    /// Original site `k` is doubled site `correspondence[k]`.
    pub correspondence: Vec<usize>,
    /// `(original copy, new copy)` for every shared site.
    pub copies: Vec<(usize, usize)>,
    pub m: f64,
}

/// Splits each site of `shared` into two copies tied by a bond of energy label `m`
/// (`J = -m`, so `m < 0` is ferromagnetic).
///
/// Bonds from a shared site into `right_side` move to the new copy. Bonds between
/// two shared sites are split evenly between the two copies.
pub fn doubled_lattice_build(
    original: &SpinLattice,
    shared: &[usize],
    right_side: &[usize],
    m: f64,
) -> Result<DoubledLattice> {
    if !(m < 0.0) {
        return Err(Error::InvalidArgument(format!("the tying label must be negative, got {m}")));
    }
    check_zero_fields(original)?;
    let n = original.n_sites();
    let copy_of: BTreeMap<usize, usize> = shared.iter().enumerate().map(|(k, &s)| (s, n + k)).collect();
    let mut lattice = SpinLattice::new(n + shared.len())?;
    for ((i, j), v) in original.couplings() {
        match (copy_of.get(&i), copy_of.get(&j)) {
            (Some(&ci), Some(&cj)) => {
                lattice.add_coupling(i, j, v / 2.0)?;
                lattice.add_coupling(ci, cj, v / 2.0)?;
            }
            (Some(&ci), None) if right_side.contains(&j) => lattice.add_coupling(ci, j, v)?,
            (None, Some(&cj)) if right_side.contains(&i) => lattice.add_coupling(i, cj, v)?,
            _ => lattice.add_coupling(i, j, v)?,
        }
    }
    for (&s, &c) in &copy_of {
        lattice.add_coupling(s, c, -m)?;
    }
    let copies = copy_of.into_iter().collect();
    Ok(DoubledLattice { lattice, correspondence: (0..n).collect(), copies, m })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoublingCheck {
    /// `E_doubled - (E_original + 2M)`.
    pub energy_offset_error: f64,
    pub copies_aligned: bool,
    /// Restricting doubled ground configurations reproduces the original ground set.
    pub ground_sets_match: bool,
}

impl DoublingCheck {
    pub fn holds(&self) -> bool {
        self.energy_offset_error.abs() < 1e-9 && self.copies_aligned && self.ground_sets_match
    }
}

impl DoubledLattice {
    pub fn check(&self, original: &SpinLattice) -> Result<DoublingCheck> {
        let g0 = enumerate_ground(original)?;
        let g1 = enumerate_ground(&self.lattice)?;
        let offset = self.copies.len() as f64 * self.m;
        let copies_aligned = g1.configs.iter().all(|c| self.copies.iter().all(|&(a, b)| c.spin(a) == c.spin(b)));
        let restricted: BTreeSet<u64> = g1
            .configs
            .iter()
            .map(|c| {
                self.correspondence
                    .iter()
                    .enumerate()
                    .filter(|&(_, &d)| (c.bits >> d) & 1 == 1)
                    .fold(0u64, |acc, (k, _)| acc | (1 << k))
            })
            .collect();
        let original_set: BTreeSet<u64> = g0.configs.iter().map(|c| c.bits).collect();
        Ok(DoublingCheck {
            energy_offset_error: g1.energy_min - (g0.energy_min + offset),
            copies_aligned,
            ground_sets_match: restricted == original_set,
        })
    }
}
