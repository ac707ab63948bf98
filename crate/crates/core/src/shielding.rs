//! Interface sectors and the shielding checks built on them.
//!
//! Because the interface sites carry no transverse field, every `Z_L` commutes
//! with `H`. Fixing the interface spins to `s` splits `H` into an operator on A,
//! an operator on B and a number:
//!
//! ```text
//! H'(s)  = (terms inside A) - Σ_k s_k Σ_{i∈A} J_{i L_k} Z_i
//! H''(s) = (terms inside B) - Σ_k s_k Σ_{i∈B} J_{i L_k} Z_i
//! E_S(s) = -Σ_{k<l} J_{L_k L_l} s_k s_l
//! ```
//!
//! Sector index bit `k` set means `s_k = -1`.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::csvfmt::sci;
use crate::error::{Error, Result};
use crate::lattice::{validate_partition, ParamPath, Partition, SpinLattice, MAX_QUANTUM_SITES};
use crate::operator::{
    build_hamiltonian, embed, expectation, max_entry_diff, partial_trace, sign_projector, trace_distance, CMatrix,
    DenseHermitian, DensityMatrix, IsingTerms, Pauli, PauliString, C64,
};
use crate::spectral::{eigendecompose, gibbs_state, ground_space, GroundSpace, DEFAULT_GAP_TOL};

/// Largest interface the sector path accepts.
pub const MAX_INTERFACE: usize = 6;
/// Default band on `||⟨Z Z⟩| - 1|` for interface alignment.
pub const DEFAULT_EPS: f64 = 1e-8;
/// Contract for finite-temperature single-site independence.
pub const SINGLE_SITE_TOL: f64 = 1e-9;
/// Contract for ground-state multi-site independence and the predicted state.
pub const GROUND_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorAssignment {
    signs: Vec<i8>,
}

impl SectorAssignment {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!("sector signs must be ±1, got {signs:?}")));
        }
        Ok(Self { signs })
    }

    pub fn from_index(index: usize, m: usize) -> Self {
        Self { signs: (0..m).map(|k| if (index >> k) & 1 == 1 { -1 } else { 1 }).collect() }
    }

    pub fn index(&self) -> usize {
        self.signs.iter().enumerate().filter(|(_, &s)| s == -1).fold(0, |acc, (k, _)| acc | (1 << k))
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn flipped(&self) -> Self {
        Self { signs: self.signs.iter().map(|s| -s).collect() }
    }

    /// Representative of `{s, -s}` with a leading `+1`.
    pub fn canonical(&self) -> Self {
        if self.signs.first() == Some(&-1) {
            self.flipped()
        } else {
            self.clone()
        }
    }

    /// Compact form such as `+-+`.
    pub fn label(&self) -> String {
        self.signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }
}

impl fmt::Display for SectorAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.signs.iter().map(|s| format!("{s:+}")).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The per-sector operators of a partitioned lattice.
#[derive(Clone, Debug)]
pub struct SectorDecomposition {
    pub set_a: Vec<usize>,
    pub set_s: Vec<usize>,
    pub set_b: Vec<usize>,
    /// `E_S(s)` by sector index.
    pub interface_energy: Vec<f64>,
    /// `H'(s)` by sector index, on the sites of A in ascending order.
    pub h_prime: Vec<IsingTerms>,
    /// `H''(s)` by sector index, on the sites of B in ascending order.
    pub h_dprime: Vec<IsingTerms>,
    n_sites: usize,
}

fn side_terms(lattice: &SpinLattice, side: &[usize], interface: &[usize], signs: &[i8]) -> IsingTerms {
    let local = |g: usize| side.iter().position(|&x| x == g);
    let mut terms = IsingTerms { n_sites: side.len(), ..Default::default() };
    for ((i, j), v) in lattice.couplings() {
        if let (Some(a), Some(b)) = (local(i), local(j)) {
            terms.zz.push((a, b, v));
        }
    }
    for (k, &g) in side.iter().enumerate() {
        let hx = lattice.field_x(g);
        if hx != 0.0 {
            terms.x.push((k, hx));
        }
        let hy = lattice.field_y(g);
        if hy != 0.0 {
            terms.y.push((k, hy));
        }
        let c: f64 = interface.iter().zip(signs).map(|(&l, &s)| s as f64 * lattice.coupling(g, l)).sum();
        if c != 0.0 {
            terms.z.push((k, c));
        }
    }
    terms
}

fn check_hypotheses(lattice: &SpinLattice, partition: &Partition) -> Result<()> {
    for &l in partition.set_s() {
        if lattice.has_field(l) {
            return Err(Error::InterfaceField(l));
        }
    }
    let report = validate_partition(lattice, partition)?;
    if !report.is_empty() {
        return Err(Error::Hypotheses(report));
    }
    Ok(())
}

/// Splits `H` into interface sectors.
pub fn sector_decompose(lattice: &SpinLattice, partition: &Partition) -> Result<SectorDecomposition> {
    let n = lattice.n_sites();
    if n > MAX_QUANTUM_SITES {
        return Err(Error::TooManySites { n_sites: n, limit: MAX_QUANTUM_SITES });
    }
    check_hypotheses(lattice, partition)?;
    let s = partition.set_s().to_vec();
    let m = s.len();
    if m > MAX_INTERFACE {
        return Err(Error::InvalidArgument(format!("interface of {m} sites exceeds {MAX_INTERFACE}")));
    }
    let (a, b) = (partition.set_a(), partition.set_b());
    let mut interface_energy = Vec::with_capacity(1 << m);
    let mut h_prime = Vec::with_capacity(1 << m);
    let mut h_dprime = Vec::with_capacity(1 << m);
    for idx in 0..1usize << m {
        let sector = SectorAssignment::from_index(idx, m);
        let signs = sector.signs();
        let mut e = 0.0;
        for k in 0..m {
            for l in k + 1..m {
                e -= lattice.coupling(s[k], s[l]) * (signs[k] * signs[l]) as f64;
            }
        }
        interface_energy.push(e);
        h_prime.push(side_terms(lattice, &a, &s, signs));
        h_dprime.push(side_terms(lattice, &b, &s, signs));
    }
    Ok(SectorDecomposition { set_a: a, set_s: s, set_b: b, interface_energy, h_prime, h_dprime, n_sites: n })
}

/// `P conj(M) P` with `P` the product of `X` over every site.
fn parity_conjugate(m: &CMatrix) -> CMatrix {
    let dim = m.nrows();
    let all = dim - 1;
    CMatrix::from_fn(dim, dim, |r, c| m[(r ^ all, c ^ all)].conj())
}

fn log_partition(terms: &IsingTerms, beta: f64) -> Result<f64> {
    let spec = eigendecompose(&terms.to_dense())?;
    let e0 = spec.ground_energy();
    let sum: f64 = spec.eigenvalues.iter().map(|&l| (-beta * (l - e0)).exp()).sum();
    Ok(-beta * e0 + sum.ln())
}

impl SectorDecomposition {
    pub fn interface_len(&self) -> usize {
        self.set_s.len()
    }

    pub fn sectors(&self) -> impl Iterator<Item = SectorAssignment> + '_ {
        let m = self.interface_len();
        (0..1usize << m).map(move |k| SectorAssignment::from_index(k, m))
    }

    /// `H^S` as an operator on the interface sites (in interface order).
    pub fn interface_operator(&self) -> DenseHermitian {
        let m = self.interface_len();
        let mut mat = CMatrix::zeros(1 << m, 1 << m);
        for (k, &e) in self.interface_energy.iter().enumerate() {
            mat[(k, k)] = C64::new(e, 0.0);
        }
        DenseHermitian::new(mat, m).expect("diagonal real matrix is Hermitian")
    }

    /// `Σ_s [H'(s) ⊗ P_s + P_s ⊗ H''(s)] + H^S` on the full lattice.
    pub fn reassemble(&self) -> Result<CMatrix> {
        let n = self.n_sites;
        let hs = self.interface_operator().into_matrix();
        let mut total = embed(&[(&self.set_s, &hs)], n)?;
        for sector in self.sectors() {
            let p = sign_projector(sector.signs());
            let k = sector.index();
            let hp = self.h_prime[k].to_matrix();
            let hd = self.h_dprime[k].to_matrix();
            total += embed(&[(&self.set_a, &hp), (&self.set_s, &p)], n)?;
            total += embed(&[(&self.set_s, &p), (&self.set_b, &hd)], n)?;
        }
        Ok(total)
    }

    /// Largest entry of `reassemble() - H`.
    pub fn reassembly_error(&self, lattice: &SpinLattice) -> Result<f64> {
        let h = build_hamiltonian(lattice)?;
        Ok(max_entry_diff(&self.reassemble()?, h.matrix()))
    }

    /// Largest entry of `P conj(H'(s)) P - H'(-s)` over sectors.
    ///
    /// With only x fields `H'(s)` is real and this is plain conjugation by `P`.
    /// A y field changes sign under `P` alone, so the check includes complex conjugation.
    pub fn parity_conjugation_error(&self) -> f64 {
        let all = (1usize << self.interface_len()) - 1;
        self.sectors()
            .map(|s| {
                let k = s.index();
                let lhs = parity_conjugate(&self.h_prime[k].to_matrix());
                max_entry_diff(&lhs, &self.h_prime[k ^ all].to_matrix())
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|Tr e^{-βH'(s)} - Tr e^{-βH'(-s)}| / Tr e^{-βH'(s)}` over sectors.
    pub fn parity_trace_check(&self, beta: f64) -> Result<f64> {
        if self.set_a.is_empty() {
            return Ok(0.0);
        }
        let all = (1usize << self.interface_len()) - 1;
        let logs: Vec<f64> = self.h_prime.iter().map(|t| log_partition(t, beta)).collect::<Result<_>>()?;
        Ok((0..logs.len()).map(|k| (logs[k ^ all] - logs[k]).exp_m1().abs()).fold(0.0, f64::max))
    }

    /// Relative error of `e^{-βH} = Σ_s e^{-βE_S(s)} e^{-βH'(s)} ⊗ P_s ⊗ e^{-βH''(s)}`.
    /// Both sides are scaled by `e^{β E_0}` with `E_0` the ground energy of `H`.
    pub fn gibbs_factorization_error(&self, lattice: &SpinLattice, beta: f64) -> Result<f64> {
        let n = self.n_sites;
        let spec = eigendecompose(&build_hamiltonian(lattice)?)?;
        let (direct, c) = spec.exp_neg_shifted(beta);
        let mut sum = CMatrix::zeros(1 << n, 1 << n);
        for sector in self.sectors() {
            let k = sector.index();
            let sp = eigendecompose(&self.h_prime[k].to_dense())?;
            let sd = eigendecompose(&self.h_dprime[k].to_dense())?;
            let (ep, cp) = sp.exp_neg_shifted(beta);
            let (ed, cd) = sd.exp_neg_shifted(beta);
            let weight = (-beta * (self.interface_energy[k] + cp + cd - c)).exp();
            let p = sign_projector(sector.signs());
            sum += embed(&[(&self.set_a, &ep), (&self.set_s, &p), (&self.set_b, &ed)], n)? * C64::new(weight, 0.0);
        }
        let scale = direct.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        Ok(max_entry_diff(&direct, &sum) / scale)
    }

    /// `Tr_A e^{-βH} / Z` assembled sector by sector, on `Y = S ∪ B` (ascending).
    /// Serves as an oracle independent of the full diagonalization.
    pub fn sector_reduced_gibbs(&self, beta: f64) -> Result<DensityMatrix> {
        let y = self.set_y();
        let local = |sites: &[usize]| -> Vec<usize> { sites.iter().map(|g| y.iter().position(|x| x == g).unwrap()).collect() };
        let (ls, lb) = (local(&self.set_s), local(&self.set_b));
        let mut pieces = Vec::new();
        let mut log_w = Vec::new();
        for sector in self.sectors() {
            let k = sector.index();
            let log_a = log_partition(&self.h_prime[k], beta)?;
            let sd = eigendecompose(&self.h_dprime[k].to_dense())?;
            let (ed, cd) = sd.exp_neg_shifted(beta);
            log_w.push(-beta * (self.interface_energy[k] + cd) + log_a);
            pieces.push((sector, ed));
        }
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = CMatrix::zeros(1 << y.len(), 1 << y.len());
        for ((sector, ed), lw) in pieces.iter().zip(&log_w) {
            let p = sign_projector(sector.signs());
            total += embed(&[(&ls, &p), (&lb, ed)], y.len())? * C64::new((lw - top).exp(), 0.0);
        }
        let tr = total.trace();
        Ok(DensityMatrix::from_trusted(y, total / tr))
    }

    pub fn set_y(&self) -> Vec<usize> {
        let mut y: Vec<usize> = self.set_s.iter().chain(&self.set_b).copied().collect();
        y.sort_unstable();
        y
    }
}

/// Results of the block-decomposition identities on one partitioned lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityReport {
    pub reassembly: f64,
    pub factorization: f64,
    pub parity_conjugation: f64,
    pub parity_trace: f64,
}

impl IdentityReport {
    pub const REASSEMBLY_TOL: f64 = 1e-10;
    pub const FACTORIZATION_TOL: f64 = 1e-8;
    pub const PARITY_TOL: f64 = 1e-14;
    pub const TRACE_PARITY_TOL: f64 = 1e-10;

    pub fn holds(&self) -> bool {
        self.reassembly < Self::REASSEMBLY_TOL
            && self.factorization < Self::FACTORIZATION_TOL
            && self.parity_conjugation < Self::PARITY_TOL
            && self.parity_trace < Self::TRACE_PARITY_TOL
    }
}

/// Evaluates every block identity, taking the worst case over `betas`.
pub fn check_identities(lattice: &SpinLattice, partition: &Partition, betas: &[f64]) -> Result<IdentityReport> {
    let d = sector_decompose(lattice, partition)?;
    let mut factorization = 0.0f64;
    let mut parity_trace = 0.0f64;
    for &b in betas {
        factorization = factorization.max(d.gibbs_factorization_error(lattice, b)?);
        parity_trace = parity_trace.max(d.parity_trace_check(b)?);
    }
    Ok(IdentityReport {
        reassembly: d.reassembly_error(lattice)?,
        factorization,
        parity_conjugation: d.parity_conjugation_error(),
        parity_trace,
    })
}

/// `⟨Z_i Z_j⟩ - ⟨Z_i⟩⟨Z_j⟩`.
pub fn correlation(rho: &DensityMatrix, i: usize, j: usize) -> Result<f64> {
    let sites = rho.sites();
    let z = |factors: &[(usize, Pauli)]| -> Result<f64> {
        let local = factors
            .iter()
            .map(|&(s, p)| sites.iter().position(|&x| x == s).map(|k| (k, p)).ok_or(Error::SiteNotInState(s)))
            .collect::<Result<Vec<_>>>()?;
        expectation(rho, &PauliString::from_sites(sites.len(), &local)?)
    };
    Ok(z(&[(i, Pauli::Z), (j, Pauli::Z)])? - z(&[(i, Pauli::Z)])? * z(&[(j, Pauli::Z)])?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    /// `((L_i, L_j), ⟨Z_{L_i} Z_{L_j}⟩)` for every interface pair `i < j`.
    pub values: Vec<((usize, usize), f64)>,
    pub pass: bool,
    pub sector_star: Option<SectorAssignment>,
}

/// Evaluates interface alignment on any state that contains the interface.
///
/// Signs are fixed with `s_1 = +1` and `s_j = sign⟨Z_{L_1} Z_{L_j}⟩`, then every
/// pair is re-checked; an inconsistent system fails without a sector.
pub fn alignment_from_state(rho: &DensityMatrix, interface: &[usize], eps: f64) -> Result<Alignment> {
    let mut values = Vec::new();
    for a in 0..interface.len() {
        for b in a + 1..interface.len() {
            let (i, j) = (interface[a], interface[b]);
            let v = crate::operator::expectation_of(rho, &crate::operator::SiteObservable::zz(i, j))?;
            values.push(((i, j), v));
        }
    }
    let near_one = values.iter().all(|&(_, v)| (v.abs() - 1.0).abs() <= eps);
    if !near_one {
        return Ok(Alignment { values, pass: false, sector_star: None });
    }
    let m = interface.len();
    let value = |a: usize, b: usize| values.iter().find(|((i, j), _)| *i == interface[a] && *j == interface[b]).unwrap().1;
    let mut signs = vec![1i8; m];
    for (b, sign) in signs.iter_mut().enumerate().skip(1) {
        *sign = if value(0, b) > 0.0 { 1 } else { -1 };
    }
    let consistent = (0..m).all(|a| (a + 1..m).all(|b| (signs[a] * signs[b]) as f64 * value(a, b) > 0.0));
    let sector_star = consistent.then_some(SectorAssignment { signs });
    Ok(Alignment { values, pass: consistent, sector_star })
}

/// Interface alignment on `GS[H]`.
pub fn alignment_check(lattice: &SpinLattice, partition: &Partition, gap_tol: f64, eps: f64) -> Result<Alignment> {
    let ground = ground_space(&build_hamiltonian(lattice)?, gap_tol)?;
    alignment_from_state(&ground.reduced(partition.set_s())?, partition.set_s(), eps)
}

/// `½ P_{s*} ⊗ GS[H''(s*)] + ½ P_{-s*} ⊗ GS[H''(-s*)]` on `Y = S ∪ B` (ascending).
/// Each ground-space state is normalized on its own.
pub fn predicted_reduced_state(
    decomposition: &SectorDecomposition,
    sector_star: &SectorAssignment,
    gap_tol: f64,
) -> Result<DensityMatrix> {
    let m = decomposition.interface_len();
    if sector_star.signs().len() != m {
        return Err(Error::ShapeMismatch(format!("sector of length {} for an interface of {m}", sector_star.signs().len())));
    }
    let y = decomposition.set_y();
    let local = |sites: &[usize]| -> Vec<usize> { sites.iter().map(|g| y.iter().position(|x| x == g).unwrap()).collect() };
    let (ls, lb) = (local(&decomposition.set_s), local(&decomposition.set_b));
    let mut total = CMatrix::zeros(1 << y.len(), 1 << y.len());
    for sector in [sector_star.clone(), sector_star.flipped()] {
        let gs = ground_space(&decomposition.h_dprime[sector.index()].to_dense(), gap_tol)?;
        let state = gs.normalized().into_matrix();
        let p = sign_projector(sector.signs());
        total += embed(&[(&ls, &p), (&lb, &state)], y.len())? * C64::new(0.5, 0.0);
    }
    Ok(DensityMatrix::from_trusted(y, total))
}

/// One point of a parameter sweep.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub index: usize,
    pub path: Option<ParamPath>,
    pub value: f64,
    pub alignment: Alignment,
    /// Group id among the aligned points, by sector up to global flip.
    pub group: Option<usize>,
    pub distance_to_reference: Option<f64>,
    pub distance_to_prediction: Option<f64>,
    pub state: DensityMatrix,
}

#[derive(Clone, Debug)]
pub struct SectorGroup {
    pub sector: Option<SectorAssignment>,
    pub members: Vec<usize>,
    pub max_pairwise_distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportKind {
    /// Single-site interface, finite temperature; prediction is the Gibbs state of `H_Y`.
    SingleSite,
    /// Multi-site interface, ground state; prediction is the two-sector formula.
    Ground,
}

#[derive(Clone, Debug)]
pub struct ShieldingReport {
    pub kind: ReportKind,
    pub tolerance: f64,
    pub points: Vec<PointResult>,
    pub groups: Vec<SectorGroup>,
    /// Largest distance within any group (pairwise).
    pub max_sweep_distance: f64,
    pub max_prediction_distance: f64,
    /// Largest distance between states of different groups, if there are several.
    pub cross_group_distance: Option<f64>,
}

impl ShieldingReport {
    pub fn alignment_failures(&self) -> Vec<usize> {
        self.points.iter().filter(|p| !p.alignment.pass).map(|p| p.index).collect()
    }

    pub fn pass(&self) -> bool {
        self.max_sweep_distance < self.tolerance && self.max_prediction_distance < self.tolerance
    }

    /// One row per sweep point plus a summary row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let pairs: Vec<(usize, usize)> = self.points.first().map(|p| p.alignment.values.iter().map(|v| v.0).collect()).unwrap_or_default();
        let mut header = vec!["index".to_string(), "param".into(), "value".into()];
        header.extend(pairs.iter().map(|(i, j)| format!("zz_{i}_{j}")));
        header.extend(["alignment", "sector", "group", "distance_to_reference", "distance_to_prediction"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        let opt = |x: Option<f64>| x.map(sci).unwrap_or_default();
        for p in &self.points {
            let mut row = vec![
                p.index.to_string(),
                p.path.as_ref().map(|x| x.to_string()).unwrap_or_default(),
                sci(p.value),
            ];
            row.extend(p.alignment.values.iter().map(|v| sci(v.1)));
            row.push(if p.alignment.pass { "pass".into() } else { "fail".into() });
            row.push(p.alignment.sector_star.as_ref().map(|s| s.label()).unwrap_or_default());
            row.push(p.group.map(|g| g.to_string()).unwrap_or_default());
            row.push(opt(p.distance_to_reference));
            row.push(opt(p.distance_to_prediction));
            writeln!(out, "{}", row.join(","))?;
        }
        let mut summary = vec!["summary".to_string(), String::new(), String::new()];
        summary.extend(pairs.iter().map(|_| String::new()));
        summary.push(format!("{}/{}", self.points.len() - self.alignment_failures().len(), self.points.len()));
        summary.push(if self.pass() { "PASS".into() } else { "FAIL".into() });
        summary.push(self.groups.len().to_string());
        summary.push(sci(self.max_sweep_distance));
        summary.push(sci(self.max_prediction_distance));
        writeln!(out, "{}", summary.join(","))?;
        Ok(())
    }
}

fn max_pairwise(states: &[&DensityMatrix]) -> Result<f64> {
    let mut worst = 0.0f64;
    for a in 0..states.len() {
        for b in a + 1..states.len() {
            worst = worst.max(trace_distance(states[a], states[b])?);
        }
    }
    Ok(worst)
}

fn finish_report(kind: ReportKind, tolerance: f64, mut points: Vec<PointResult>) -> Result<ShieldingReport> {
    let mut groups: Vec<SectorGroup> = Vec::new();
    for p in points.iter_mut().filter(|p| p.alignment.pass) {
        let key = p.alignment.sector_star.as_ref().map(|s| s.canonical());
        let g = match groups.iter().position(|g| g.sector == key) {
            Some(g) => g,
            None => {
                groups.push(SectorGroup { sector: key, members: vec![], max_pairwise_distance: 0.0 });
                groups.len() - 1
            }
        };
        groups[g].members.push(p.index);
        p.group = Some(g);
    }
    let by_index = |k: usize| points.iter().find(|p| p.index == k).unwrap();
    let mut updates = Vec::new();
    for g in groups.iter_mut() {
        let states: Vec<&DensityMatrix> = g.members.iter().map(|&k| &by_index(k).state).collect();
        g.max_pairwise_distance = max_pairwise(&states)?;
        let reference = states[0];
        for (&k, s) in g.members.iter().zip(&states) {
            updates.push((k, trace_distance(reference, s)?));
        }
    }
    let cross_group_distance = if groups.len() > 1 {
        let reps: Vec<&DensityMatrix> = groups.iter().map(|g| &by_index(g.members[0]).state).collect();
        Some(max_pairwise(&reps)?)
    } else {
        None
    };
    for (k, d) in updates {
        points.iter_mut().find(|p| p.index == k).unwrap().distance_to_reference = Some(d);
    }
    let max_sweep_distance = groups.iter().map(|g| g.max_pairwise_distance).fold(0.0, f64::max);
    let max_prediction_distance = points.iter().filter_map(|p| p.distance_to_prediction).fold(0.0, f64::max);
    Ok(ShieldingReport { kind, tolerance, points, groups, max_sweep_distance, max_prediction_distance, cross_group_distance })
}

/// A sweep point: the value shown in reports and the lattice it produces.
pub type SweepPoint = (Option<ParamPath>, f64, SpinLattice);

/// Finite-temperature reduced states on `Y` across `points`, without checking hypotheses.
///
/// Each point is compared with the first point and with the Gibbs state of
/// the terms supported on `Y`.
pub fn single_site_sweep(partition: &Partition, beta: f64, points: Vec<SweepPoint>) -> Result<ShieldingReport> {
    let y = partition.set_y();
    let results: Vec<PointResult> = points
        .into_par_iter()
        .enumerate()
        .map(|(index, (path, value, lattice))| -> Result<PointResult> {
            let rho = gibbs_state(&build_hamiltonian(&lattice)?, beta)?;
            let state = partial_trace(&rho, &y)?;
            let target = gibbs_state(&build_hamiltonian(&lattice.induced(&y)?)?, beta)?.relabeled(y.clone())?;
            let distance_to_prediction = Some(trace_distance(&state, &target)?);
            let alignment = alignment_from_state(&state, partition.set_s(), DEFAULT_EPS)?;
            Ok(PointResult { index, path, value, alignment, group: None, distance_to_reference: None, distance_to_prediction, state })
        })
        .collect::<Result<_>>()?;
    // Every point belongs to one group regardless of the interface correlator.
    let mut results = results;
    for p in results.iter_mut() {
        p.alignment.pass = true;
        p.alignment.sector_star = None;
    }
    finish_report(ReportKind::SingleSite, SINGLE_SITE_TOL, results)
}

/// Single-site interface at finite β: the reduced state on `Y` must not move
/// across the sweep and must equal the Gibbs state of the `Y` terms.
pub fn single_site_verify(partition: &Partition, beta: f64, points: Vec<SweepPoint>) -> Result<ShieldingReport> {
    if partition.interface_len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "single-site check needs |S| = 1, got {}",
            partition.interface_len()
        )));
    }
    for (_, _, lattice) in &points {
        check_hypotheses(lattice, partition)?;
    }
    single_site_sweep(partition, beta, points)
}

/// Ground-state sweep: groups points by interface sector and compares each
/// reduced state on `Y` with the two-sector prediction.
pub fn ground_sweep_verify(partition: &Partition, gap_tol: f64, eps: f64, points: Vec<SweepPoint>) -> Result<ShieldingReport> {
    for (_, _, lattice) in &points {
        check_hypotheses(lattice, partition)?;
    }
    let y = partition.set_y();
    let results: Vec<PointResult> = points
        .into_par_iter()
        .enumerate()
        .map(|(index, (path, value, lattice))| -> Result<PointResult> {
            let ground = ground_space(&build_hamiltonian(&lattice)?, gap_tol)?;
            let state = ground.reduced(&y)?;
            let alignment = alignment_from_state(&state, partition.set_s(), eps)?;
            let distance_to_prediction = match &alignment.sector_star {
                Some(star) => {
                    let d = sector_decompose(&lattice, partition)?;
                    Some(trace_distance(&state, &predicted_reduced_state(&d, star, gap_tol)?)?)
                }
                None => None,
            };
            Ok(PointResult { index, path, value, alignment, group: None, distance_to_reference: None, distance_to_prediction, state })
        })
        .collect::<Result<_>>()?;
    finish_report(ReportKind::Ground, GROUND_TOL, results)
}

/// Sweep points produced by setting `path` to each value of `grid` on `lattice`.
pub fn lattice_sweep(lattice: &SpinLattice, path: &ParamPath, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    grid.iter()
        .map(|&v| {
            let mut l = lattice.clone();
            l.apply(path, v)?;
            Ok((Some(path.clone()), v, l))
        })
        .collect()
}

/// Every tunable entry on the `X = A ∪ S` side that the hypotheses allow to vary:
/// x and y fields on A and couplings with both ends in X.
pub fn x_side_parameters(lattice: &SpinLattice, partition: &Partition) -> Vec<ParamPath> {
    let x = partition.set_x();
    let mut out = Vec::new();
    for a in partition.set_a() {
        out.push(ParamPath::FieldX(a));
        out.push(ParamPath::FieldY(a));
    }
    for ((i, j), _) in lattice.couplings() {
        if x.contains(&i) && x.contains(&j) {
            out.push(ParamPath::Coupling(i, j));
        }
    }
    out
}

/// Direct `Tr_{A} GS[H]` on `Y`, the reduced ground state.
pub fn ground_reduced_state(lattice: &SpinLattice, partition: &Partition, gap_tol: f64) -> Result<(GroundSpace, DensityMatrix)> {
    let ground = ground_space(&build_hamiltonian(lattice)?, gap_tol)?;
    let state = ground.reduced(&partition.set_y())?;
    Ok((ground, state))
}

/// Outcome of the ground-state oracle comparison on one lattice.
#[derive(Clone, Debug)]
pub struct OracleOutcome {
    pub alignment: Alignment,
    /// Trace distance between the direct and predicted states, when interface alignment holds.
    pub distance: Option<f64>,
}

pub fn ground_oracle(lattice: &SpinLattice, partition: &Partition, gap_tol: f64, eps: f64) -> Result<OracleOutcome> {
    let (_, state) = ground_reduced_state(lattice, partition, gap_tol)?;
    let alignment = alignment_from_state(&state, partition.set_s(), eps)?;
    let distance = match &alignment.sector_star {
        Some(star) => {
            let d = sector_decompose(lattice, partition)?;
            Some(trace_distance(&state, &predicted_reduced_state(&d, star, gap_tol)?)?)
        }
        None => None,
    };
    Ok(OracleOutcome { alignment, distance })
}

/// Default tolerance pairing used by the callers that do not override it.
pub fn default_tolerances() -> (f64, f64) {
    (DEFAULT_GAP_TOL, DEFAULT_EPS)
}
