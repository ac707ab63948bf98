//! Dense operators in the computational basis: Pauli strings, Hamiltonians,
//! density matrices, partial traces and expectation values.
//!
//! Bit `k` of a basis index is site `k` of the operator (position `k` of
//! `DensityMatrix::sites`). A set bit means spin down, `Z = -1`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::csvfmt::sci;
use crate::error::{Error, Result};
use crate::lattice::{SpinLattice, MAX_QUANTUM_SITES};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;

const IMAG_DISCARD_TOL: f64 = 1e-8;

#[inline]
pub(crate) fn bit(r: usize, k: usize) -> bool {
    (r >> k) & 1 == 1
}

#[inline]
pub(crate) fn zsign(r: usize, k: usize) -> f64 {
    if bit(r, k) {
        -1.0
    } else {
        1.0
    }
}

/// Full-space index offsets for every local index over `positions`.
/// Entry `a` places bit `k` of `a` at bit `positions[k]`.
pub(crate) fn scatter_table(positions: &[usize]) -> Vec<usize> {
    let k = positions.len();
    let mut table = vec![0usize; 1 << k];
    for (a, slot) in table.iter_mut().enumerate() {
        *slot = positions
            .iter()
            .enumerate()
            .filter(|&(b, _)| bit(a, b))
            .fold(0, |acc, (_, &p)| acc | (1 << p));
    }
    table
}

/// Local index over `positions` for every full index of an `n`-bit space.
pub(crate) fn gather_table(positions: &[usize], n: usize) -> Vec<usize> {
    (0..1usize << n)
        .map(|r| {
            positions
                .iter()
                .enumerate()
                .filter(|&(_, &p)| bit(r, p))
                .fold(0, |acc, (b, _)| acc | (1 << b))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// `c` in `P|b> = c |b'>`.
    fn phase(self, down: bool) -> C64 {
        let s = if down { -1.0 } else { 1.0 };
        match self {
            Pauli::I | Pauli::X => C64::new(1.0, 0.0),
            Pauli::Z => C64::new(s, 0.0),
            Pauli::Y => C64::new(0.0, s),
        }
    }
}

/// Tensor product of single-site Paulis; character `k` acts on site `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        Self { ops }
    }

    pub fn identity(n: usize) -> Self {
        Self { ops: vec![Pauli::I; n] }
    }

    /// String on `n` sites with the given `(site, Pauli)` factors.
    pub fn from_sites(n: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut ops = vec![Pauli::I; n];
        for &(site, p) in factors {
            if site >= n {
                return Err(Error::SiteOutOfRange { site, n_sites: n });
            }
            if ops[site] != Pauli::I && p != Pauli::I {
                return Err(Error::InvalidArgument(format!("site {site} appears twice in a Pauli string")));
            }
            ops[site] = p;
        }
        Ok(Self { ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    fn flip_mask(&self) -> usize {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .fold(0, |m, (k, _)| m | (1 << k))
    }

    fn phase(&self, r: usize) -> C64 {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .fold(C64::new(1.0, 0.0), |acc, (k, p)| acc * p.phase(bit(r, k)))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidArgument(format!("bad Pauli symbol `{c}`"))))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.ops {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Observable addressed by global site indices, written like `z2*z3` or `x0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteObservable {
    factors: Vec<(usize, Pauli)>,
}

impl SiteObservable {
    pub fn new(factors: Vec<(usize, Pauli)>) -> Self {
        Self { factors }
    }

    pub fn zz(i: usize, j: usize) -> Self {
        Self::new(vec![(i, Pauli::Z), (j, Pauli::Z)])
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    /// Pauli string over the positions of `sites`.
    pub fn on(&self, sites: &[usize]) -> Result<PauliString> {
        let mut local = Vec::with_capacity(self.factors.len());
        for &(s, p) in &self.factors {
            let pos = sites.iter().position(|&x| x == s).ok_or(Error::SiteNotInState(s))?;
            local.push((pos, p));
        }
        PauliString::from_sites(sites.len(), &local)
    }
}

impl FromStr for SiteObservable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad observable `{s}`; expected e.g. \"z2*z3\" or \"x1\""));
        let mut factors = Vec::new();
        for part in s.split('*') {
            let part = part.trim();
            let mut chars = part.chars();
            let p = chars.next().and_then(Pauli::from_char).ok_or_else(bad)?;
            let site: usize = chars.as_str().parse().map_err(|_| bad())?;
            factors.push((site, p));
        }
        if factors.is_empty() {
            return Err(bad());
        }
        Ok(Self { factors })
    }
}

impl fmt::Display for SiteObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (s, p)) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "{}{s}", p.as_char().to_ascii_lowercase())?;
        }
        Ok(())
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in 0..=c {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Copies the upper triangle onto the lower one and zeroes imaginary diagonal parts.
fn mirror_upper(m: &mut CMatrix) {
    let n = m.nrows();
    for c in 0..n {
        m[(c, c)].im = 0.0;
        for r in 0..c {
            m[(c, r)] = m[(r, c)].conj();
        }
    }
}

/// Largest entrywise difference `max |a - b|`.
pub fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_entry_diff");
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Largest entry of `[a, b]`.
pub fn commutator_max(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a * b - b * a))
}

/// A Hermitian operator on `site_count` sites.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHermitian {
    site_count: usize,
    matrix: CMatrix,
}

impl DenseHermitian {
    /// Checks Hermiticity, then mirrors the upper triangle onto the lower.
    pub fn new(mut matrix: CMatrix, site_count: usize) -> Result<Self> {
        let dim = 1usize << site_count;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for {site_count} sites (expected {dim}x{dim})",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL * max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        mirror_upper(&mut matrix);
        Ok(Self { site_count, matrix })
    }

    pub(crate) fn from_trusted(matrix: CMatrix, site_count: usize) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << site_count);
        Self { site_count, matrix }
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|c| (0..n).all(|r| r == c || self.matrix[(r, c)] == C64::new(0.0, 0.0)))
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.matrix[(k, k)].re).collect()
    }

    /// Row-major `row,col,re,im` lines with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix_csv(&self.matrix, out)
    }
}

pub(crate) fn write_matrix_csv<W: Write>(m: &CMatrix, mut out: W) -> Result<()> {
    writeln!(out, "row,col,re,im")?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            writeln!(out, "{r},{c},{},{}", sci(z.re), sci(z.im))?;
        }
    }
    Ok(())
}

/// A positive unit-trace operator on an ordered list of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    sites: Vec<usize>,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(sites: Vec<usize>, mut matrix: CMatrix) -> Result<Self> {
        let dim = 1usize << sites.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for {} sites",
                matrix.nrows(),
                matrix.ncols(),
                sites.len()
            )));
        }
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::InvalidArgument("repeated site in a density matrix".into()));
        }
        let defect = hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        mirror_upper(&mut matrix);
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::NumericalIntegrity(format!("density matrix trace {trace} != 1")));
        }
        let min_eig = crate::spectral::hermitian_eigenvalues(&matrix)
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::NumericalIntegrity(format!("density matrix eigenvalue {min_eig:e} < 0")));
        }
        Ok(Self { sites, matrix })
    }

    pub(crate) fn from_trusted(sites: Vec<usize>, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << sites.len());
        Self { sites, matrix }
    }

    /// `|ψ><ψ|` for a (not necessarily normalized) amplitude vector.
    pub fn pure(sites: Vec<usize>, amplitudes: &[C64]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|z| z / norm2.sqrt()));
        let m = &v * v.adjoint();
        Self::new(sites, m)
    }

    pub fn basis_state(sites: Vec<usize>, index: usize) -> Result<Self> {
        let dim = 1usize << sites.len();
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range")));
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = C64::new(1.0, 0.0);
        Ok(Self { sites, matrix: m })
    }

    pub fn maximally_mixed(sites: Vec<usize>) -> Self {
        let dim = 1usize << sites.len();
        let m = CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0);
        Self { sites, matrix: m }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Renames the sites without touching the matrix.
    pub fn relabeled(self, sites: Vec<usize>) -> Result<Self> {
        if sites.len() != self.sites.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for a {}-site state",
                sites.len(),
                self.sites.len()
            )));
        }
        Ok(Self { sites, matrix: self.matrix })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Same state with its sites listed in `order`.
    pub fn reorder(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.sites.len() {
            return Err(Error::ShapeMismatch(format!(
                "reorder onto {} sites of a {}-site state",
                order.len(),
                self.sites.len()
            )));
        }
        // New bit k is old bit perm[k].
        let perm = order
            .iter()
            .map(|s| self.sites.iter().position(|x| x == s).ok_or(Error::SiteNotInState(*s)))
            .collect::<Result<Vec<_>>>()?;
        let map = scatter_table(&perm);
        let dim = self.dim();
        let m = CMatrix::from_fn(dim, dim, |r, c| self.matrix[(map[r], map[c])]);
        Ok(Self { sites: order.to_vec(), matrix: m })
    }

    /// `self ⊗ other`; the result lists `self`'s sites first.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        if self.sites.iter().any(|s| other.sites.contains(s)) {
            return Err(Error::InvalidArgument("tensor factors share a site".into()));
        }
        let mut sites = self.sites.clone();
        sites.extend_from_slice(&other.sites);
        let matrix = other.matrix.kronecker(&self.matrix);
        Ok(Self { sites, matrix })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix_csv(&self.matrix, out)
    }
}

/// The terms of a transverse-field Ising operator on `n_sites` local sites:
/// `-Σ J Z_i Z_j - Σ c Z_i - Σ h X_i - Σ g Y_i + offset`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IsingTerms {
    pub n_sites: usize,
    pub zz: Vec<(usize, usize, f64)>,
    pub z: Vec<(usize, f64)>,
    pub x: Vec<(usize, f64)>,
    pub y: Vec<(usize, f64)>,
    pub offset: f64,
}

impl IsingTerms {
    pub fn from_lattice(lattice: &SpinLattice) -> Self {
        Self {
            n_sites: lattice.n_sites(),
            zz: lattice.couplings().map(|((i, j), v)| (i, j, v)).collect(),
            z: vec![],
            x: lattice.fields_x().collect(),
            y: lattice.fields_y().collect(),
            offset: 0.0,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.x.iter().all(|t| t.1 == 0.0) && self.y.iter().all(|t| t.1 == 0.0)
    }

    /// Diagonal entries of the operator in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..1usize << self.n_sites)
            .map(|r| {
                let mut e = self.offset;
                for &(i, j, v) in &self.zz {
                    e -= v * zsign(r, i) * zsign(r, j);
                }
                for &(i, c) in &self.z {
                    e -= c * zsign(r, i);
                }
                e
            })
            .collect()
    }

    pub fn to_matrix(&self) -> CMatrix {
        let dim = 1usize << self.n_sites;
        let mut m = CMatrix::zeros(dim, dim);
        for (r, e) in self.diagonal().into_iter().enumerate() {
            m[(r, r)] = C64::new(e, 0.0);
        }
        for r in 0..dim {
            for &(i, h) in &self.x {
                m[(r ^ (1 << i), r)] -= C64::new(h, 0.0);
            }
            for &(i, g) in &self.y {
                m[(r ^ (1 << i), r)] -= C64::new(0.0, g * zsign(r, i));
            }
        }
        m
    }

    pub fn to_dense(&self) -> DenseHermitian {
        DenseHermitian::from_trusted(self.to_matrix(), self.n_sites)
    }
}

/// `H = -Σ J_ij Z_i Z_j - Σ h_i X_i - Σ g_i Y_i` as a dense matrix.
pub fn build_hamiltonian(lattice: &SpinLattice) -> Result<DenseHermitian> {
    let n = lattice.n_sites();
    if n > MAX_QUANTUM_SITES {
        return Err(Error::TooManySites { n_sites: n, limit: MAX_QUANTUM_SITES });
    }
    Ok(IsingTerms::from_lattice(lattice).to_dense())
}

pub fn pauli_operator(string: &PauliString, site_count: usize) -> Result<DenseHermitian> {
    if string.len() != site_count {
        return Err(Error::ShapeMismatch(format!(
            "Pauli string of length {} for {site_count} sites",
            string.len()
        )));
    }
    if site_count > MAX_QUANTUM_SITES {
        return Err(Error::TooManySites { n_sites: site_count, limit: MAX_QUANTUM_SITES });
    }
    let dim = 1usize << site_count;
    let mask = string.flip_mask();
    let mut m = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        m[(r ^ mask, r)] = string.phase(r);
    }
    Ok(DenseHermitian::from_trusted(m, site_count))
}

/// Reduced state on `keep`, listed in the order they appear in `rho.sites()`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    for &s in keep {
        if !rho.sites.contains(&s) {
            return Err(Error::SiteNotInState(s));
        }
    }
    let (kept, traced): (Vec<usize>, Vec<usize>) = (0..rho.sites.len()).partition(|&p| keep.contains(&rho.sites[p]));
    let kmap = scatter_table(&kept);
    let tmap = scatter_table(&traced);
    let dk = kmap.len();
    let m = CMatrix::from_fn(dk, dk, |a, b| {
        let (ra, rb) = (kmap[a], kmap[b]);
        tmap.iter().map(|&t| rho.matrix[(ra | t, rb | t)]).sum()
    });
    let sites = kept.iter().map(|&p| rho.sites[p]).collect();
    Ok(DensityMatrix::from_trusted(sites, m))
}

/// `Tr(ρ O)` for a Pauli string over the positions of `rho.sites()`.
pub fn expectation(rho: &DensityMatrix, obs: &PauliString) -> Result<f64> {
    if obs.len() != rho.sites.len() {
        return Err(Error::ShapeMismatch(format!(
            "observable on {} sites, state on {}",
            obs.len(),
            rho.sites.len()
        )));
    }
    let mask = obs.flip_mask();
    let value: C64 = (0..rho.dim()).map(|r| rho.matrix[(r, r ^ mask)] * obs.phase(r)).sum();
    if value.im.abs() > IMAG_DISCARD_TOL {
        return Err(Error::NumericalIntegrity(format!(
            "expectation of {obs} has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Expectation of an observable addressed by global site indices.
pub fn expectation_of(rho: &DensityMatrix, obs: &SiteObservable) -> Result<f64> {
    expectation(rho, &obs.on(&rho.sites)?)
}

/// `½ Σ |λ(a - b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.sites != b.sites {
        let mut sa = a.sites.clone();
        let mut sb = b.sites.clone();
        sa.sort_unstable();
        sb.sort_unstable();
        if sa != sb {
            return Err(Error::ShapeMismatch(format!(
                "trace distance between states on {:?} and {:?}",
                a.sites, b.sites
            )));
        }
        return trace_distance(a, &b.reorder(&a.sites)?);
    }
    let diff = &a.matrix - &b.matrix;
    Ok(0.5 * crate::spectral::hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

/// Operator on `n_sites` sites that is the product of `factors`, each acting
/// on its listed sites (local bit `k` = `sites[k]`), and identity elsewhere.
pub fn embed(factors: &[(&[usize], &CMatrix)], n_sites: usize) -> Result<CMatrix> {
    let mut covered = 0usize;
    for (sites, m) in factors {
        if m.nrows() != 1 << sites.len() {
            return Err(Error::ShapeMismatch(format!("factor on {} sites has dim {}", sites.len(), m.nrows())));
        }
        for &s in sites.iter() {
            if s >= n_sites {
                return Err(Error::SiteOutOfRange { site: s, n_sites });
            }
            if covered & (1 << s) != 0 {
                return Err(Error::InvalidArgument(format!("site {s} appears in two tensor factors")));
            }
            covered |= 1 << s;
        }
    }
    let dim = 1usize << n_sites;
    let free = !covered & (dim - 1);
    let tables: Vec<Vec<usize>> = factors.iter().map(|(s, _)| gather_table(s, n_sites)).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            if (r ^ c) & free != 0 {
                continue;
            }
            let mut v = C64::new(1.0, 0.0);
            for ((_, m), t) in factors.iter().zip(&tables) {
                v *= m[(t[r], t[c])];
                if v == C64::new(0.0, 0.0) {
                    break;
                }
            }
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// Projector onto `Z_{sites[k]} = signs[k]` for all `k`, on the local space of `sites`.
pub fn sign_projector(signs: &[i8]) -> CMatrix {
    let dim = 1usize << signs.len();
    let mut m = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        if signs.iter().enumerate().all(|(k, &s)| zsign(r, k) == s as f64) {
            m[(r, r)] = C64::new(1.0, 0.0);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn single_site_field_is_minus_x() {
        let lat = SpinLattice::new(1).unwrap().with_field_x(0, 1.0).unwrap();
        let h = build_hamiltonian(&lat).unwrap();
        assert_eq!(h.matrix()[(0, 1)], c(-1.0));
        assert_eq!(h.matrix()[(1, 0)], c(-1.0));
        assert_eq!(h.matrix()[(0, 0)], c(0.0));
    }

    #[test]
    fn two_site_coupling_is_diagonal() {
        let lat = SpinLattice::new(2).unwrap().with_coupling(0, 1, 1.0).unwrap();
        let h = build_hamiltonian(&lat).unwrap();
        assert!(h.is_diagonal());
        assert_eq!(h.diagonal_real(), vec![-1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn four_site_zero_field_ground_energy() {
        let mut lat = SpinLattice::new(4).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            lat.set_coupling(i, j, 1.0).unwrap();
        }
        let h = build_hamiltonian(&lat).unwrap();
        let min = h.diagonal_real().into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(min, -4.0);
    }

    #[test]
    fn size_limit() {
        let lat = SpinLattice::new(13).unwrap();
        assert!(matches!(build_hamiltonian(&lat), Err(Error::TooManySites { .. })));
    }

    #[test]
    fn y_field_matches_pauli_y() {
        let lat = SpinLattice::new(2).unwrap().with_field_y(1, 0.5).unwrap();
        let h = build_hamiltonian(&lat).unwrap();
        let y = pauli_operator(&"IY".parse().unwrap(), 2).unwrap();
        let expected = y.matrix() * c(-0.5);
        assert!(max_entry_diff(h.matrix(), &expected) < 1e-15);
        assert_eq!(y.matrix()[(2, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn pauli_ordering_and_involution() {
        let z = pauli_operator(&"ZI".parse().unwrap(), 2).unwrap();
        assert_eq!(z.diagonal_real(), vec![1.0, -1.0, 1.0, -1.0]);
        for s in ["XX", "YZ", "XY", "ZZ"] {
            let p = pauli_operator(&s.parse().unwrap(), 2).unwrap();
            let sq = p.matrix() * p.matrix();
            assert!(max_entry_diff(&sq, &CMatrix::identity(4, 4)) < 1e-15, "{s}");
        }
        let rho = DensityMatrix::basis_state(vec![0, 1], 0).unwrap();
        assert_eq!(expectation(&rho, &"ZZ".parse().unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn expectation_matches_trace_product() {
        let amps = [c(0.3), C64::new(0.1, 0.4), c(-0.5), C64::new(0.2, -0.6)];
        let rho = DensityMatrix::pure(vec![0, 1], &amps).unwrap();
        for s in ["XY", "YY", "ZX", "IY", "XI"] {
            let p: PauliString = s.parse().unwrap();
            let direct = (rho.matrix() * pauli_operator(&p, 2).unwrap().matrix()).trace();
            assert_abs_diff_eq!(expectation(&rho, &p).unwrap(), direct.re, epsilon = 1e-14);
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let r1 = DensityMatrix::pure(vec![3], &[c(0.6), c(0.8)]).unwrap();
        let r2 = DensityMatrix::pure(vec![5], &[c(1.0), C64::new(0.0, 1.0)]).unwrap();
        let rho = r1.tensor(&r2).unwrap();
        let reduced = partial_trace(&rho, &[5]).unwrap();
        assert_eq!(reduced.sites(), &[5]);
        assert!(max_entry_diff(reduced.matrix(), r2.matrix()) < 1e-15);
        let reduced = partial_trace(&rho, &[3]).unwrap();
        assert!(max_entry_diff(reduced.matrix(), r1.matrix()) < 1e-15);
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let bell = DensityMatrix::pure(vec![0, 1], &[c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        let r = partial_trace(&bell, &[1]).unwrap();
        assert!(max_entry_diff(r.matrix(), DensityMatrix::maximally_mixed(vec![1]).matrix()) < 1e-15);
        assert!(matches!(partial_trace(&bell, &[]), Err(Error::EmptyKeep)));
    }

    #[test]
    fn trace_distance_examples() {
        let up = DensityMatrix::basis_state(vec![0], 0).unwrap();
        let down = DensityMatrix::basis_state(vec![0], 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(vec![0]);
        assert_abs_diff_eq!(trace_distance(&up, &up).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&up, &down).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&mixed, &up).unwrap(), 0.5, epsilon = 1e-14);
        let other = DensityMatrix::basis_state(vec![1], 0).unwrap();
        assert!(matches!(trace_distance(&up, &other), Err(Error::ShapeMismatch(_))));
        let mixed2 = DensityMatrix::maximally_mixed(vec![0, 1]);
        assert_abs_diff_eq!(expectation(&mixed2, &"XZ".parse().unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn reorder_round_trip() {
        let amps: Vec<C64> = (0..8).map(|k| C64::new(k as f64, 0.5 * k as f64 - 1.0)).collect();
        let rho = DensityMatrix::pure(vec![2, 7, 4], &amps).unwrap();
        let swapped = rho.reorder(&[4, 2, 7]).unwrap();
        let z7 = SiteObservable::zz(7, 4);
        assert_abs_diff_eq!(
            expectation_of(&rho, &z7).unwrap(),
            expectation_of(&swapped, &z7).unwrap(),
            epsilon = 1e-14
        );
        let back = swapped.reorder(&[2, 7, 4]).unwrap();
        assert!(max_entry_diff(back.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(vec![0], bad_trace).is_err());
        let mut negative = CMatrix::zeros(2, 2);
        negative[(0, 0)] = c(1.5);
        negative[(1, 1)] = c(-0.5);
        assert!(DensityMatrix::new(vec![0], negative).is_err());
        let mut nonherm = CMatrix::identity(2, 2) * c(0.5);
        nonherm[(0, 1)] = c(0.1);
        assert!(matches!(DensityMatrix::new(vec![0], nonherm), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn observable_syntax() {
        let o: SiteObservable = "z2*z3".parse().unwrap();
        assert_eq!(o, SiteObservable::zz(2, 3));
        assert_eq!(o.to_string(), "z2*z3");
        assert_eq!("x1".parse::<SiteObservable>().unwrap().to_string(), "x1");
        assert!("q1".parse::<SiteObservable>().is_err());
        assert!("z".parse::<SiteObservable>().is_err());
    }

    #[test]
    fn embed_matches_kronecker() {
        let a = pauli_operator(&"X".parse().unwrap(), 1).unwrap().into_matrix();
        let b = pauli_operator(&"Y".parse().unwrap(), 1).unwrap().into_matrix();
        let full = embed(&[(&[2], &a), (&[0], &b)], 3).unwrap();
        let direct = pauli_operator(&"YIX".parse().unwrap(), 3).unwrap();
        assert!(max_entry_diff(&full, direct.matrix()) < 1e-15);
    }

    fn small_lattice() -> impl Strategy<Value = SpinLattice> {
        (2usize..6).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(-2.0f64..2.0, n * (n - 1) / 2),
                proptest::collection::vec(prop_oneof![Just(0.0), -2.0f64..2.0], n),
                proptest::collection::vec(prop_oneof![Just(0.0), -1.0f64..1.0], n),
            )
                .prop_map(|(n, js, hs, gs)| {
                    let mut lat = SpinLattice::new(n).unwrap();
                    let mut k = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            lat.set_coupling(i, j, js[k]).unwrap();
                            k += 1;
                        }
                        lat.set_field_x(i, hs[i]).unwrap();
                        lat.set_field_y(i, gs[i]).unwrap();
                    }
                    lat
                })
        })
    }

    proptest! {
        #[test]
        fn hamiltonian_commutes_with_z_on_field_free_sites(lat in small_lattice()) {
            let h = build_hamiltonian(&lat).unwrap();
            let n = lat.n_sites();
            for l in (0..n).filter(|&l| !lat.has_field(l)) {
                let z = pauli_operator(&PauliString::from_sites(n, &[(l, Pauli::Z)]).unwrap(), n).unwrap();
                prop_assert!(commutator_max(h.matrix(), z.matrix()) < 1e-12);
            }
            prop_assert!(hermitian_defect(h.matrix()) == 0.0);
        }

        #[test]
        fn nested_partial_traces_agree(
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
            k1 in 0usize..4,
            k2 in 0usize..4,
        ) {
            prop_assume!(k1 != k2);
            let amps: Vec<C64> = amps.into_iter().map(|(a, b)| C64::new(a, b)).collect();
            prop_assume!(amps.iter().any(|z| z.norm() > 1e-3));
            let sites = vec![10, 11, 12, 13];
            let rho = DensityMatrix::pure(sites.clone(), &amps).unwrap();
            let two = partial_trace(&rho, &[sites[k1], sites[k2]]).unwrap();
            let nested = partial_trace(&two, &[sites[k1]]).unwrap();
            let direct = partial_trace(&rho, &[sites[k1]]).unwrap();
            prop_assert!(max_entry_diff(nested.matrix(), direct.matrix()) < 1e-14);
            prop_assert!((two.trace() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn expectation_is_linear(
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let amps: Vec<C64> = amps.into_iter().map(|(x, y)| C64::new(x, y)).collect();
            prop_assume!(amps.iter().any(|z| z.norm() > 1e-3));
            let rho = DensityMatrix::pure(vec![0, 1, 2], &amps).unwrap();
            let p: PauliString = "XZY".parse().unwrap();
            let q: PauliString = "ZIX".parse().unwrap();
            let combo = pauli_operator(&p, 3).unwrap().into_matrix() * c(a)
                + pauli_operator(&q, 3).unwrap().into_matrix() * c(b);
            let direct = (rho.matrix() * combo).trace().re;
            let lin = a * expectation(&rho, &p).unwrap() + b * expectation(&rho, &q).unwrap();
            prop_assert!((direct - lin).abs() < 1e-12);
        }
    }
}
