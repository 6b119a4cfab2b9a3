//! Matrix-function kernel for symmetric matrices: spectral exp/log/sqrt,
//! Frechet (directional) derivatives of exp and log, the orthonormal
//! symmetric basis, half-vectorization and the duplication matrix.
//!
//! Two entry orderings coexist and are fixed once here:
//!
//! * the **basis order** of [`SymBasis`]: the n diagonal units e_ii first,
//!   then the off-diagonal elements (e_ij + e_ji)/sqrt(2) column-major over
//!   the strict lower triangle;
//! * the **nu order** (half-vectorization [`vech`]): column-major over the
//!   full lower triangle including the diagonal, i.e. p11, p21, p22, ... for
//!   n = 2. The duplication matrix and all CSV columns use this order.

mod jacobi;

pub(crate) use jacobi::{apply_spectral_into, EigenScratch};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalue floor below which a matrix is rejected as not (numerically)
/// positive definite. A constructor-time check, never a clamp: inputs below
/// it fail loudly instead of being silently repaired.
pub const SPD_FLOOR: f64 = 1e-12;

/// Relative eigenvalue-gap threshold under which divided differences in the
/// Frechet derivatives fall back to the confluent limit f'(lambda).
pub const CONFLUENT_TOL: f64 = 1e-8;

/// Largest eigenvalue admitted by `sym_exp` before exp overflows f64.
const EXP_OVERFLOW: f64 = 709.0;

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// A dense symmetric matrix. Storage enforces exact symmetry: every
/// constructor writes the same f64 to (i,j) and (j,i).
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Build from a square matrix, averaging `(A + Aᵀ)/2`.
    pub fn from_matrix(mut m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::contract(format!(
                "SymMatrix requires a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::contract("SymMatrix entries must be finite"));
        }
        symmetrize(&mut m);
        Ok(SymMatrix { m })
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::contract(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(n, n, data))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn frobenius_inner(&self, other: &SymMatrix) -> f64 {
        frob_inner(&self.m, &other.m)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix { m: &self.m * c }
    }

    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(m.iter().all(|x| x.is_finite()));
        SymMatrix { m }
    }
}

impl std::ops::Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix { m: &self.m + &rhs.m }
    }
}

impl std::ops::Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix { m: &self.m - &rhs.m }
    }
}

pub(crate) fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// A symmetric positive-definite matrix: all eigenvalues strictly above the
/// floor passed at construction (default [`SPD_FLOOR`]).
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    sym: SymMatrix,
}

impl SpdMatrix {
    pub fn try_new(sym: SymMatrix) -> Result<Self> {
        Self::try_with_floor(sym, SPD_FLOOR)
    }

    /// Positive definiteness above `floor` is certified by a Cholesky
    /// factorization of `P - floor I`; only the failure path pays for an
    /// eigensolve, to name the offending eigenvalue.
    pub fn try_with_floor(sym: SymMatrix, floor: f64) -> Result<Self> {
        let n = sym.dim();
        let mut shifted = sym.as_matrix().clone();
        for i in 0..n {
            shifted[(i, i)] -= floor;
        }
        if nalgebra::Cholesky::new(shifted).is_none() {
            let eig = sym_eigen(&sym)?;
            return Err(Error::Boundary {
                context: "SPD constructor".into(),
                eigenvalue: eig.values[0],
                floor,
            });
        }
        Ok(SpdMatrix { sym })
    }

    /// Reconstruct `V diag(values) Vᵀ` after checking the values against the
    /// floor directly. The cheap path for spectrally-built results.
    pub fn from_eigen(vectors: &DMatrix<f64>, values: &[f64], floor: f64) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|v| **v <= floor) {
            return Err(Error::Boundary {
                context: "spectral SPD reconstruction".into(),
                eigenvalue: bad,
                floor,
            });
        }
        let n = vectors.nrows();
        let mut out = DMatrix::zeros(n, n);
        apply_spectral_into(vectors, values, &mut out);
        Ok(SpdMatrix {
            sym: SymMatrix::from_symmetric_unchecked(out),
        })
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix {
            sym: SymMatrix {
                m: DMatrix::identity(n, n),
            },
        }
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        Self::try_new(SymMatrix::from_row_slice(n, data)?)
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn into_sym(self) -> SymMatrix {
        self.sym
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.sym.as_matrix()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sym.get(i, j)
    }

    pub fn det(&self) -> f64 {
        self.sym.as_matrix().determinant()
    }

    pub fn trace(&self) -> f64 {
        self.sym.trace()
    }
}

/// Spectral factorization of a symmetric matrix: `S = V diag(values) Vᵀ`
/// with `VᵀV = I` and eigenvalues sorted ascending.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eigen(s: &SymMatrix) -> Result<SymEigen> {
    let n = s.dim();
    let mut scratch = EigenScratch::new(n);
    scratch.factor(s.as_matrix())?;
    Ok(SymEigen {
        values: scratch.w,
        vectors: scratch.v,
    })
}

fn spectral_map(s: &SymMatrix, f: impl Fn(f64) -> f64) -> Result<(SymEigen, Vec<f64>)> {
    let eig = sym_eigen(s)?;
    let fw: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    Ok((eig, fw))
}

/// Matrix exponential of a symmetric matrix; the result is always SPD.
pub fn sym_exp(s: &SymMatrix) -> Result<SpdMatrix> {
    let (eig, fw) = spectral_map(s, f64::exp)?;
    if let Some(&l) = eig.values.iter().find(|l| **l > EXP_OVERFLOW) {
        return Err(Error::NumericFailure(format!(
            "sym_exp overflow: eigenvalue {l:.3e} exceeds the f64 exponent range"
        )));
    }
    SpdMatrix::from_eigen(&eig.vectors, &fw, 0.0)
}

/// Principal matrix logarithm of an SPD matrix.
pub fn sym_log(p: &SpdMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(p.as_sym())?;
    if eig.values[0] <= SPD_FLOOR {
        return Err(Error::Boundary {
            context: "sym_log".into(),
            eigenvalue: eig.values[0],
            floor: SPD_FLOOR,
        });
    }
    let fw: Vec<f64> = eig.values.iter().map(|l| l.ln()).collect();
    let n = p.dim();
    let mut out = DMatrix::zeros(n, n);
    apply_spectral_into(&eig.vectors, &fw, &mut out);
    Ok(SymMatrix::from_symmetric_unchecked(out))
}

pub fn sym_sqrt(p: &SpdMatrix) -> Result<SpdMatrix> {
    let eig = sym_eigen(p.as_sym())?;
    let fw: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    SpdMatrix::from_eigen(&eig.vectors, &fw, 0.0)
}

pub fn sym_inv_sqrt(p: &SpdMatrix) -> Result<SpdMatrix> {
    let eig = sym_eigen(p.as_sym())?;
    if eig.values[0] <= SPD_FLOOR {
        return Err(Error::Boundary {
            context: "sym_inv_sqrt".into(),
            eigenvalue: eig.values[0],
            floor: SPD_FLOOR,
        });
    }
    let fw: Vec<f64> = eig.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    SpdMatrix::from_eigen(&eig.vectors, &fw, 0.0)
}

/// Daleckii-Krein divided differences in an eigenbasis: the shared core of
/// the Frechet derivatives. Entry (i,j) of the transformed direction is
/// scaled by (f(li) - f(lj))/(li - lj), with the confluent limit f'(li)
/// when the gap falls below `CONFLUENT_TOL * max(1, |li|)`.
fn frechet_via_divided_differences(
    eig: &SymEigen,
    direction: &SymMatrix,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> SymMatrix {
    let n = eig.vectors.nrows();
    let v = &eig.vectors;
    let s_tilde = v.transpose() * direction.as_matrix() * v;
    let mut scaled = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let li = eig.values[i];
            let lj = eig.values[j];
            let k = if (li - lj).abs() < CONFLUENT_TOL * li.abs().max(1.0) {
                df(li)
            } else {
                (f(li) - f(lj)) / (li - lj)
            };
            let val = 0.5 * (s_tilde[(i, j)] + s_tilde[(j, i)]) * k;
            scaled[(i, j)] = val;
            scaled[(j, i)] = val;
        }
    }
    let mut out = (v * scaled) * v.transpose();
    symmetrize(&mut out);
    SymMatrix::from_symmetric_unchecked(out)
}

/// Frechet derivative of the matrix logarithm at `p` in direction `s`,
/// `D_P log . S`.
pub fn dlog(p: &SpdMatrix, s: &SymMatrix) -> Result<SymMatrix> {
    if p.dim() != s.dim() {
        return Err(Error::contract("dlog: dimension mismatch"));
    }
    let eig = sym_eigen(p.as_sym())?;
    if eig.values[0] <= SPD_FLOOR {
        return Err(Error::Boundary {
            context: "dlog".into(),
            eigenvalue: eig.values[0],
            floor: SPD_FLOOR,
        });
    }
    Ok(frechet_via_divided_differences(&eig, s, f64::ln, |l| 1.0 / l))
}

/// Frechet derivative of the matrix exponential at `s0` in direction `s`,
/// `D_{S0} exp . S`.
pub fn dexp(s0: &SymMatrix, s: &SymMatrix) -> Result<SymMatrix> {
    if s0.dim() != s.dim() {
        return Err(Error::contract("dexp: dimension mismatch"));
    }
    let eig = sym_eigen(s0)?;
    Ok(frechet_via_divided_differences(&eig, s, f64::exp, f64::exp))
}

/// The standard symmetric basis: d = n(n+1)/2 matrices, orthonormal under
/// the Frobenius inner product. Diagonal units e_ii come first, then
/// (e_ij + e_ji)/sqrt(2) column-major over the strict lower triangle.
#[derive(Clone, Debug)]
pub struct SymBasis {
    n: usize,
    elements: Vec<SymMatrix>,
}

pub fn sym_basis(n: usize) -> SymBasis {
    assert!(n >= 1, "sym_basis requires n >= 1");
    let d = vech_len(n);
    let mut elements = Vec::with_capacity(d);
    for i in 0..n {
        let mut m = DMatrix::zeros(n, n);
        m[(i, i)] = 1.0;
        elements.push(SymMatrix::from_symmetric_unchecked(m));
    }
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    for c in 0..n {
        for r in c + 1..n {
            let mut m = DMatrix::zeros(n, n);
            m[(r, c)] = inv_sqrt2;
            m[(c, r)] = inv_sqrt2;
            elements.push(SymMatrix::from_symmetric_unchecked(m));
        }
    }
    SymBasis { n, elements }
}

impl SymBasis {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of basis elements, d = n(n+1)/2.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn element(&self, i: usize) -> &SymMatrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[SymMatrix] {
        &self.elements
    }

    /// The linear combination sum_i coeffs[i] S_i.
    pub fn combine(&self, coeffs: &[f64]) -> SymMatrix {
        assert_eq!(coeffs.len(), self.len());
        let mut m = DMatrix::zeros(self.n, self.n);
        basis_combine_into(self.n, coeffs, &mut m);
        SymMatrix::from_symmetric_unchecked(m)
    }

    /// Coordinates of a symmetric matrix in this basis, <S, S_i>_F.
    pub fn coords(&self, s: &SymMatrix) -> Vec<f64> {
        assert_eq!(s.dim(), self.n);
        let mut out = vec![0.0; self.len()];
        basis_coords_into(self.n, s.as_matrix(), &mut out);
        out
    }
}

pub(crate) fn basis_combine_into(n: usize, coeffs: &[f64], out: &mut DMatrix<f64>) {
    debug_assert_eq!(coeffs.len(), vech_len(n));
    out.fill(0.0);
    for i in 0..n {
        out[(i, i)] = coeffs[i];
    }
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    let mut idx = n;
    for c in 0..n {
        for r in c + 1..n {
            let v = coeffs[idx] * inv_sqrt2;
            out[(r, c)] = v;
            out[(c, r)] = v;
            idx += 1;
        }
    }
}

pub(crate) fn basis_coords_into(n: usize, m: &DMatrix<f64>, out: &mut [f64]) {
    debug_assert_eq!(out.len(), vech_len(n));
    for i in 0..n {
        out[i] = m[(i, i)];
    }
    let sqrt2 = 2.0_f64.sqrt();
    let mut idx = n;
    for c in 0..n {
        for r in c + 1..n {
            out[idx] = sqrt2 * m[(r, c)];
            idx += 1;
        }
    }
}

/// Half-vectorization length, d = n(n+1)/2.
pub fn vech_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry (r, c), r >= c, in the nu (vech) order.
pub fn vech_index(n: usize, r: usize, c: usize) -> usize {
    debug_assert!(r >= c && r < n);
    c * n - c * (c - 1) / 2 + (r - c)
}

/// (row, col) pairs in nu order: column-major over the lower triangle
/// including the diagonal.
pub fn vech_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(vech_len(n));
    for c in 0..n {
        for r in c..n {
            out.push((r, c));
        }
    }
    out
}

/// CSV column names in nu order: x11, x21, x22, ... (1-based row/col).
pub fn vech_entry_names(n: usize) -> Vec<String> {
    vech_pairs(n)
        .into_iter()
        .map(|(r, c)| format!("x{}{}", r + 1, c + 1))
        .collect()
}

/// Stack the independent entries of a symmetric matrix in nu order.
pub fn vech(s: &SymMatrix) -> Vec<f64> {
    let n = s.dim();
    vech_pairs(n).into_iter().map(|(r, c)| s.get(r, c)).collect()
}

/// Inverse of [`vech`].
pub fn unvech(n: usize, v: &[f64]) -> Result<SymMatrix> {
    if v.len() != vech_len(n) {
        return Err(Error::contract(format!(
            "unvech: expected {} entries for n = {n}, got {}",
            vech_len(n),
            v.len()
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for ((r, c), &val) in vech_pairs(n).into_iter().zip(v.iter()) {
        m[(r, c)] = val;
        m[(c, r)] = val;
    }
    SymMatrix::from_matrix(m)
}

/// The duplication matrix D_n with vec(P) = D_n nu(P), plus its
/// Moore-Penrose inverse. Entries are exact 0/1 placements, so the
/// reconstruction identity holds to floating-point equality.
#[derive(Clone, Debug)]
pub struct DuplicationMatrix {
    n: usize,
    matrix: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

pub fn duplication(n: usize) -> DuplicationMatrix {
    assert!(n >= 1, "duplication requires n >= 1");
    let d = vech_len(n);
    let mut matrix = DMatrix::zeros(n * n, d);
    let mut pinv = DMatrix::zeros(d, n * n);
    for (k, (r, c)) in vech_pairs(n).into_iter().enumerate() {
        // vec is column-major: entry (i, j) sits at j*n + i
        matrix[(c * n + r, k)] = 1.0;
        if r != c {
            matrix[(r * n + c, k)] = 1.0;
            pinv[(k, c * n + r)] = 0.5;
            pinv[(k, r * n + c)] = 0.5;
        } else {
            pinv[(k, c * n + r)] = 1.0;
        }
    }
    DuplicationMatrix { n, matrix, pinv }
}

impl DuplicationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reduced_dim(&self) -> usize {
        vech_len(self.n)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }
}
