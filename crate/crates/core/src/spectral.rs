//! Eigendecomposition, Gibbs states and ground-space projectors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::operator::{max_entry_diff, trace_distance, CMatrix, DenseHermitian, DensityMatrix, PauliString, C64};

/// Default relative degeneracy tolerance for ground spaces.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn range(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1] - self.eigenvalues[0]
    }

    /// `V f(Λ) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        weighted_outer(&self.eigenvectors, &weights)
    }

    /// `(e^{-β(H - shift)}, shift)` with `shift` the ground energy.
    pub fn exp_neg_shifted(&self, beta: f64) -> (CMatrix, f64) {
        let shift = self.ground_energy();
        (self.apply(|l| (-beta * (l - shift)).exp()), shift)
    }

    /// Largest `|H v - λ v|` over all pairs.
    pub fn max_residual(&self, h: &DenseHermitian) -> f64 {
        let hv = h.matrix() * &self.eigenvectors;
        let mut worst = 0.0f64;
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let r = (hv.column(k) - self.eigenvectors.column(k) * C64::new(l, 0.0)).norm();
            worst = worst.max(r / l.abs().max(1.0));
        }
        worst
    }
}

/// `Σ_k w_k v_k v_k†` over the columns of `vectors`.
fn weighted_outer(vectors: &CMatrix, weights: &[f64]) -> CMatrix {
    let mut scaled = vectors.clone();
    for (k, &w) in weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(w);
    }
    scaled * vectors.adjoint()
}

fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|c| (0..n).all(|r| r == c || m[(r, c)] == C64::new(0.0, 0.0)))
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = if is_diagonal(m) {
        (0..m.nrows()).map(|k| m[(k, k)].re).collect()
    } else if is_real(m) {
        m.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    values
}

/// Full spectrum in ascending order.
///
/// Real matrices use the real symmetric solver; diagonal ones skip it.
pub fn eigendecompose(h: &DenseHermitian) -> Result<Spectrum> {
    let m = h.matrix();
    let n = m.nrows();
    if n > 4096 {
        return Err(Error::TooManySites { n_sites: h.site_count(), limit: 12 });
    }
    let (values, vectors): (Vec<f64>, CMatrix) = if is_diagonal(m) {
        let diag: Vec<f64> = (0..n).map(|k| m[(k, k)].re).collect();
        let order = ascending_order(&diag);
        let mut v = CMatrix::zeros(n, n);
        for (col, &row) in order.iter().enumerate() {
            v[(row, col)] = C64::new(1.0, 0.0);
        }
        return Ok(Spectrum { eigenvalues: order.iter().map(|&k| diag[k]).collect(), eigenvectors: v });
    } else if is_real(m) {
        let eig = SymmetricEigen::new(m.map(|z| z.re));
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let order = ascending_order(&values);
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::GibbsOverflow(beta));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// `e^{-βH}/Tr e^{-βH}` on sites `0..n`, exponentiated after shifting by the ground energy.
pub fn gibbs_state(h: &DenseHermitian, beta: f64) -> Result<DensityMatrix> {
    check_beta(beta)?;
    let sites: Vec<usize> = (0..h.site_count()).collect();
    if h.is_diagonal() {
        let diag = h.diagonal_real();
        let e0 = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = diag.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = w.iter().sum();
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(w.len(), w.iter().map(|&x| C64::new(x / z, 0.0))));
        return Ok(DensityMatrix::from_trusted(sites, m));
    }
    let spec = eigendecompose(h)?;
    gibbs_from_spectrum(&spec, beta, sites)
}

pub fn gibbs_from_spectrum(spec: &Spectrum, beta: f64, sites: Vec<usize>) -> Result<DensityMatrix> {
    check_beta(beta)?;
    let e0 = spec.ground_energy();
    let w: Vec<f64> = spec.eigenvalues.iter().map(|&l| (-beta * (l - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    if !z.is_finite() || z < 1.0 {
        return Err(Error::GibbsOverflow(beta));
    }
    let w: Vec<f64> = w.into_iter().map(|x| x / z).collect();
    Ok(DensityMatrix::from_trusted(sites, weighted_outer(&spec.eigenvectors, &w)))
}

/// The eigenvectors spanning the lowest level, kept as columns.
#[derive(Clone, Debug)]
pub struct GroundSpace {
    pub energy: f64,
    pub degeneracy: usize,
    /// Orthonormal columns spanning the ground space.
    pub vectors: CMatrix,
    /// Distance from the ground energy to the next level, if any.
    pub gap: Option<f64>,
    site_count: usize,
}

impl GroundSpace {
    pub fn site_count(&self) -> usize {
        self.site_count
    }

    /// Unnormalized projector `P`.
    pub fn projector(&self) -> CMatrix {
        &self.vectors * self.vectors.adjoint()
    }

    /// `GS[H] = P / rank(P)` on sites `0..n`.
    pub fn normalized(&self) -> DensityMatrix {
        let m = self.projector() / C64::new(self.degeneracy as f64, 0.0);
        DensityMatrix::from_trusted((0..self.site_count).collect(), m)
    }

    /// `Tr_{rest} GS[H]` without forming the full projector.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        for &s in keep {
            if s >= self.site_count {
                return Err(Error::SiteNotInState(s));
            }
        }
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        let traced: Vec<usize> = (0..self.site_count).filter(|s| !kept.contains(s)).collect();
        let kmap = crate::operator::scatter_table(&kept);
        let tmap = crate::operator::scatter_table(&traced);
        let dk = kmap.len();
        let mut m = CMatrix::zeros(dk, dk);
        let k = self.degeneracy as f64;
        for v in self.vectors.column_iter() {
            for b in 0..dk {
                for a in 0..dk {
                    let mut acc = C64::new(0.0, 0.0);
                    for &t in &tmap {
                        acc += v[kmap[a] | t] * v[kmap[b] | t].conj();
                    }
                    m[(a, b)] += acc / k;
                }
            }
        }
        Ok(DensityMatrix::from_trusted(kept, m))
    }

    /// `Tr(GS[H] O)`.
    pub fn expectation(&self, obs: &PauliString) -> Result<f64> {
        if obs.len() != self.site_count {
            return Err(Error::ShapeMismatch(format!(
                "observable on {} sites, ground space on {}",
                obs.len(),
                self.site_count
            )));
        }
        let op = crate::operator::pauli_operator(obs, self.site_count)?;
        let ov = op.matrix() * &self.vectors;
        let total: C64 = self.vectors.iter().zip(ov.iter()).map(|(a, b)| a.conj() * b).sum();
        Ok(total.re / self.degeneracy as f64)
    }
}

/// Eigenvectors with `λ - λmin ≤ gap_tol · (λmax - λmin)`.
/// A Hamiltonian proportional to the identity yields the full space.
pub fn ground_space(h: &DenseHermitian, gap_tol: f64) -> Result<GroundSpace> {
    if !(gap_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("gap_tol must be positive, got {gap_tol}")));
    }
    let n = h.site_count();
    let dim = h.dim();
    if h.is_diagonal() {
        let diag = h.diagonal_real();
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cut = gap_tol * (hi - lo);
        let members: Vec<usize> = (0..dim).filter(|&r| diag[r] - lo <= cut).collect();
        let gap = diag.iter().filter(|&&e| e - lo > cut).map(|&e| e - lo).fold(None, |acc: Option<f64>, g| {
            Some(acc.map_or(g, |a| a.min(g)))
        });
        let mut vectors = CMatrix::zeros(dim, members.len());
        for (col, &row) in members.iter().enumerate() {
            vectors[(row, col)] = C64::new(1.0, 0.0);
        }
        return Ok(GroundSpace { energy: lo, degeneracy: members.len(), vectors, gap, site_count: n });
    }
    let spec = eigendecompose(h)?;
    Ok(ground_from_spectrum(&spec, gap_tol, n))
}

pub fn ground_from_spectrum(spec: &Spectrum, gap_tol: f64, site_count: usize) -> GroundSpace {
    let lo = spec.ground_energy();
    let cut = gap_tol * spec.range();
    let k = spec.eigenvalues.iter().take_while(|&&l| l - lo <= cut).count();
    let gap = spec.eigenvalues.get(k).map(|&l| l - lo);
    let vectors = spec.eigenvectors.columns(0, k).into_owned();
    GroundSpace { energy: lo, degeneracy: k, vectors, gap, site_count }
}

/// Trace distance between the Gibbs state at the largest β of `betas` and `GS[H]`.
pub fn gibbs_limit_check(h: &DenseHermitian, betas: &[f64]) -> Result<f64> {
    let beta = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if betas.is_empty() {
        return Err(Error::InvalidArgument("empty beta grid".into()));
    }
    let spec = eigendecompose(h)?;
    let sites: Vec<usize> = (0..h.site_count()).collect();
    let gibbs = gibbs_from_spectrum(&spec, beta, sites)?;
    let ground = ground_from_spectrum(&spec, DEFAULT_GAP_TOL, h.site_count()).normalized();
    trace_distance(&gibbs, &ground)
}

/// Largest `|H - V Λ V†|` entry relative to `max |H|`.
pub fn reconstruction_error(h: &DenseHermitian, spec: &Spectrum) -> f64 {
    let rebuilt = spec.apply(|l| l);
    let scale = h.matrix().iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1e-300);
    max_entry_diff(h.matrix(), &rebuilt) / scale
}

/// Real-matrix helper for callers that only hold `f64` data.
pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}
