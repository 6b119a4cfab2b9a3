//! Riemannian structures on the SPD cone: the Euclidean, Log-Euclidean (LE)
//! and Affine-Invariant (AI) metric tensors with their exponential/logarithm
//! maps, geodesics, squared distances, orthonormal frames, the gradient of
//! squared distance, the AI Christoffel symbols, and the global LE chart h.
//!
//! Closed forms:
//!
//! | metric | Exp_P(S) | Log_P(Q) | d^2(P,Q) |
//! |--------|----------|----------|----------|
//! | Euclidean | S + P | Q - P | \|Q - P\|_F^2 |
//! | LE | exp(log P + D_P log.S) | D_{log P} exp.(log Q - log P) | \|log Q - log P\|_F^2 |
//! | AI | P^{1/2} exp(P^{-1/2} S P^{-1/2}) P^{1/2} | P^{1/2} log(P^{-1/2} Q P^{-1/2}) P^{1/2} | \|log(P^{-1/2} Q P^{-1/2})\|_F^2 |
//!
//! Euclidean operations fail loudly at the cone boundary rather than
//! projecting back; that failure mode is part of the demonstration suite.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symkernel::{
    basis_coords_into, dexp, dlog, sym_basis, sym_exp, sym_eigen, sym_inv_sqrt, sym_log, sym_sqrt,
    vech_len, SpdMatrix, SymMatrix, SPD_FLOOR,
};

/// The three metric tensors. Every geometry operation is total over all
/// three variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Euclidean,
    LogEuclidean,
    AffineInvariant,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::LogEuclidean => "le",
            MetricKind::AffineInvariant => "ai",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "e" => Ok(MetricKind::Euclidean),
            "le" | "log-euclidean" | "logeuclidean" => Ok(MetricKind::LogEuclidean),
            "ai" | "affine-invariant" | "affineinvariant" => Ok(MetricKind::AffineInvariant),
            other => Err(Error::config(format!(
                "metric: unknown value {other:?} (expected euclidean, le or ai)"
            ))),
        }
    }
}

/// A symmetric matrix interpreted as an element of the tangent space at
/// `base`. Operations mixing tangent vectors require equal base points.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: SpdMatrix,
    vec: SymMatrix,
}

impl TangentVector {
    pub fn new(base: SpdMatrix, vec: SymMatrix) -> Result<Self> {
        if base.dim() != vec.dim() {
            return Err(Error::contract("TangentVector: base/vector dimension mismatch"));
        }
        Ok(TangentVector { base, vec })
    }

    pub fn zero(base: SpdMatrix) -> Self {
        let n = base.dim();
        TangentVector {
            base,
            vec: SymMatrix::zeros(n),
        }
    }

    pub fn base(&self) -> &SpdMatrix {
        &self.base
    }

    pub fn vec(&self) -> &SymMatrix {
        &self.vec
    }

    pub fn into_vec(self) -> SymMatrix {
        self.vec
    }

    pub fn scaled(&self, c: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vec.scaled(c),
        }
    }

    pub fn try_add(&self, other: &TangentVector) -> Result<TangentVector> {
        if self.base != other.base {
            return Err(Error::contract("tangent vectors have different base points"));
        }
        Ok(TangentVector {
            base: self.base.clone(),
            vec: &self.vec + &other.vec,
        })
    }

    pub fn norm2(&self, metric: MetricKind) -> Result<f64> {
        metric_inner(metric, &self.base.clone(), self, self)
    }
}

/// r * s * rᵀ, symmetrized.
pub(crate) fn star(r: &DMatrix<f64>, s: &DMatrix<f64>) -> SymMatrix {
    let m = r * s * r.transpose();
    SymMatrix::from_matrix(m).expect("congruence of finite matrices is finite")
}

/// Metric tensor value g_P(S1, S2).
pub fn metric_inner(
    metric: MetricKind,
    p: &SpdMatrix,
    s1: &TangentVector,
    s2: &TangentVector,
) -> Result<f64> {
    if s1.base() != p || s2.base() != p {
        return Err(Error::contract("metric_inner: base-point mismatch"));
    }
    match metric {
        MetricKind::Euclidean => Ok(s1.vec().frobenius_inner(s2.vec())),
        MetricKind::LogEuclidean => {
            let a = dlog(p, s1.vec())?;
            let b = dlog(p, s2.vec())?;
            Ok(a.frobenius_inner(&b))
        }
        MetricKind::AffineInvariant => {
            let w = sym_inv_sqrt(p)?;
            let a = star(w.as_matrix(), s1.vec().as_matrix());
            let b = star(w.as_matrix(), s2.vec().as_matrix());
            Ok(a.frobenius_inner(&b))
        }
    }
}

/// Riemannian exponential map at the tangent vector's base point.
pub fn exp_map(metric: MetricKind, s: &TangentVector) -> Result<SpdMatrix> {
    let p = s.base();
    match metric {
        MetricKind::Euclidean => {
            SpdMatrix::try_new(p.as_sym() + s.vec()).map_err(|e| euclidean_boundary(e, None))
        }
        MetricKind::LogEuclidean => {
            let arg = &sym_log(p)? + &dlog(p, s.vec())?;
            sym_exp(&arg)
        }
        MetricKind::AffineInvariant => {
            let w = sym_inv_sqrt(p)?;
            let r = sym_sqrt(p)?;
            let inner = sym_exp(&star(w.as_matrix(), s.vec().as_matrix()))?;
            SpdMatrix::try_new(star(r.as_matrix(), inner.as_matrix()))
        }
    }
}

fn euclidean_boundary(e: Error, t: Option<f64>) -> Error {
    match e {
        Error::Boundary { eigenvalue, floor, .. } => Error::Boundary {
            context: match t {
                Some(t) => format!("Euclidean geodesic leaves the SPD cone at t = {t}"),
                None => "Euclidean exponential map leaves the SPD cone".into(),
            },
            eigenvalue,
            floor,
        },
        other => other,
    }
}

/// Riemannian logarithm map, the inverse of [`exp_map`].
pub fn log_map(metric: MetricKind, p: &SpdMatrix, q: &SpdMatrix) -> Result<TangentVector> {
    if p.dim() != q.dim() {
        return Err(Error::contract("log_map: dimension mismatch"));
    }
    let vec = match metric {
        MetricKind::Euclidean => q.as_sym() - p.as_sym(),
        MetricKind::LogEuclidean => {
            let diff = &sym_log(q)? - &sym_log(p)?;
            dexp(&sym_log(p)?, &diff)?
        }
        MetricKind::AffineInvariant => {
            let w = sym_inv_sqrt(p)?;
            let r = sym_sqrt(p)?;
            let inner = sym_log(&SpdMatrix::try_new(star(w.as_matrix(), q.as_matrix()))?)?;
            star(r.as_matrix(), inner.as_matrix())
        }
    };
    TangentVector::new(p.clone(), vec)
}

/// Point at parameter `t` on the geodesic from `p` (t = 0) to `q` (t = 1).
/// LE and AI geodesics are complete, so t outside [0, 1] is permitted there.
pub fn geodesic(metric: MetricKind, p: &SpdMatrix, q: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    let lv = log_map(metric, p, q)?.scaled(t);
    exp_map(metric, &lv).map_err(|e| {
        if metric == MetricKind::Euclidean {
            euclidean_boundary(e, Some(t))
        } else {
            e
        }
    })
}

/// Squared Riemannian distance.
pub fn dist2(metric: MetricKind, p: &SpdMatrix, q: &SpdMatrix) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::contract("dist2: dimension mismatch"));
    }
    match metric {
        MetricKind::Euclidean => {
            let d = q.as_sym() - p.as_sym();
            Ok(d.frobenius_inner(&d))
        }
        MetricKind::LogEuclidean => {
            let d = &sym_log(q)? - &sym_log(p)?;
            Ok(d.frobenius_inner(&d))
        }
        MetricKind::AffineInvariant => {
            let w = sym_inv_sqrt(p)?;
            let inner = sym_log(&SpdMatrix::try_new(star(w.as_matrix(), q.as_matrix()))?)?;
            Ok(inner.frobenius_inner(&inner))
        }
    }
}

/// An orthonormal frame of the tangent space at `base` under `metric`.
#[derive(Clone, Debug)]
pub struct Frame {
    base: SpdMatrix,
    metric: MetricKind,
    elements: Vec<TangentVector>,
}

impl Frame {
    pub fn base(&self) -> &SpdMatrix {
        &self.base
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &TangentVector {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[TangentVector] {
        &self.elements
    }
}

/// Orthonormal frame at `p`: the symmetric basis itself (Euclidean),
/// `D_{log P} exp . S_i` (LE), or `P^{1/2} S_i P^{1/2}` (AI).
pub fn frame(metric: MetricKind, p: &SpdMatrix) -> Result<Frame> {
    let n = p.dim();
    let basis = sym_basis(n);
    let mut elements = Vec::with_capacity(basis.len());
    match metric {
        MetricKind::Euclidean => {
            for s in basis.elements() {
                elements.push(TangentVector::new(p.clone(), s.clone())?);
            }
        }
        MetricKind::LogEuclidean => {
            let lp = sym_log(p)?;
            for s in basis.elements() {
                elements.push(TangentVector::new(p.clone(), dexp(&lp, s)?)?);
            }
        }
        MetricKind::AffineInvariant => {
            let r = sym_sqrt(p)?;
            for s in basis.elements() {
                elements.push(TangentVector::new(p.clone(), star(r.as_matrix(), s.as_matrix()))?);
            }
        }
    }
    Ok(Frame {
        base: p.clone(),
        metric,
        elements,
    })
}

/// The combination sum_j coeffs[j] E_j(P) without materializing the frame;
/// linearity of the frame maps makes this a single kernel call.
pub fn frame_apply(metric: MetricKind, p: &SpdMatrix, coeffs: &[f64]) -> Result<TangentVector> {
    let n = p.dim();
    if coeffs.len() != vech_len(n) {
        return Err(Error::contract(format!(
            "frame_apply: expected {} coefficients, got {}",
            vech_len(n),
            coeffs.len()
        )));
    }
    let combined = sym_basis(n).combine(coeffs);
    let vec = match metric {
        MetricKind::Euclidean => combined,
        MetricKind::LogEuclidean => dexp(&sym_log(p)?, &combined)?,
        MetricKind::AffineInvariant => {
            let r = sym_sqrt(p)?;
            star(r.as_matrix(), combined.as_matrix())
        }
    };
    TangentVector::new(p.clone(), vec)
}

/// Riemannian gradient of Q |-> d^2(P, Q) at P, which equals -2 Log_P(Q)
/// under all three metrics.
pub fn grad_dist2(metric: MetricKind, p: &SpdMatrix, q: &SpdMatrix) -> Result<TangentVector> {
    Ok(log_map(metric, p, q)?.scaled(-2.0))
}

/// Christoffel symbols of the AI metric in the frame B^AI. They do not
/// depend on the base point: Gamma_ij^k = -<S_i S_j + S_j S_i, S_k>_F / 2.
#[derive(Clone, Debug)]
pub struct Christoffel {
    n: usize,
    d: usize,
    vals: Vec<f64>,
}

pub fn christoffel_ai(n: usize) -> Christoffel {
    let basis = sym_basis(n);
    let d = basis.len();
    let mut vals = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..=i {
            let si = basis.element(i).as_matrix();
            let sj = basis.element(j).as_matrix();
            let anti = si * sj + sj * si;
            for k in 0..d {
                let g = -0.5 * crate::symkernel::frob_inner(&anti, basis.element(k).as_matrix());
                vals[(i * d + j) * d + k] = g;
                vals[(j * d + i) * d + k] = g;
            }
        }
    }
    Christoffel { n, d, vals }
}

impl Christoffel {
    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Gamma_ij^k.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.vals[(i * self.d + j) * self.d + k]
    }

    /// The contracted matrix Gamma = sum_{i,r} Gamma_ii^r S_r entering the
    /// bridge correction term.
    pub fn contracted(&self) -> SymMatrix {
        let basis = sym_basis(self.n);
        let mut coeffs = vec![0.0; self.d];
        for r in 0..self.d {
            for i in 0..self.d {
                coeffs[r] += self.get(i, i, r);
            }
        }
        basis.combine(&coeffs)
    }
}

/// The global LE chart, h_j(P) = <log P, S_j>_F. An isometry from
/// (SP(n), g^LE) onto Euclidean d-space.
pub fn chart_h(p: &SpdMatrix) -> Result<Vec<f64>> {
    let n = p.dim();
    let lp = sym_log(p)?;
    let mut out = vec![0.0; vech_len(n)];
    basis_coords_into(n, lp.as_matrix(), &mut out);
    Ok(out)
}

/// Inverse chart, h^{-1}(x) = exp(sum_j x_j S_j).
pub fn chart_h_inv(x: &[f64]) -> Result<SpdMatrix> {
    let n = matrix_dim_for(x.len())?;
    sym_exp(&sym_basis(n).combine(x))
}

/// Recover n from d = n(n+1)/2.
pub fn matrix_dim_for(d: usize) -> Result<usize> {
    let mut n = 1usize;
    while vech_len(n) < d {
        n += 1;
    }
    if vech_len(n) != d {
        return Err(Error::contract(format!(
            "{d} is not a triangular number n(n+1)/2"
        )));
    }
    Ok(n)
}

/// Matrix form of the AI metric in nu coordinates,
/// G(P) = D_nᵀ (P^{-1} ⊗ P^{-1}) D_n, together with its inverse
/// G^{-1}(P) = D_n† (P ⊗ P) (D_n†)ᵀ. Exists for cross-validation of the
/// coordinate convention; the simulation path never inverts G.
pub fn ai_metric_matrix(p: &SpdMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = p.dim();
    let dup = crate::symkernel::duplication(n);
    let eig = sym_eigen(p.as_sym())?;
    if eig.values[0] <= SPD_FLOOR {
        return Err(Error::Boundary {
            context: "ai_metric_matrix".into(),
            eigenvalue: eig.values[0],
            floor: SPD_FLOOR,
        });
    }
    let inv_vals: Vec<f64> = eig.values.iter().map(|l| 1.0 / l).collect();
    let mut p_inv = DMatrix::zeros(n, n);
    crate::symkernel::apply_spectral_into(&eig.vectors, &inv_vals, &mut p_inv);
    let g = dup.matrix().transpose() * p_inv.kronecker(&p_inv) * dup.matrix();
    let g_inv = dup.pinv() * p.as_matrix().kronecker(p.as_matrix()) * dup.pinv().transpose();
    Ok((g, g_inv))
}

#[cfg(test)]
mod tests;
