//! Dense real symmetric matrices and the spectral calculus built on them.
//!
//! Every matrix-valued quantity in the crate (Laplacians, the rank-one
//! outer products `w wᵀ`, the moment matrices of the matrix estimator) is a
//! [`SymMatrix`]. Functions of a matrix are evaluated through its
//! eigendecomposition `A = Q·diag(λ)·Qᵀ`, which is computed by cyclic Jacobi
//! rotations.
//!
//! Tolerance conventions: positive-definiteness uses the absolute threshold
//! [`PD_TOL`], semidefiniteness the threshold [`PSD_TOL`] scaled by
//! `max(1, ‖A‖)`, and rank decisions treat eigenvalues with
//! `|λ| ≤ RANK_TOL·max|λ|` as zero.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Strict positive-definiteness threshold (absolute).
pub const PD_TOL: f64 = 1e-12;
/// Semidefiniteness slack, relative to `max(1, ‖A‖)`.
pub const PSD_TOL: f64 = 1e-9;
/// Relative threshold below which an eigenvalue counts as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Accuracy target of the eigensolver.
pub const EIG_TOL: f64 = 1e-9;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 60;

/// A dense `n × n` real symmetric matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        Self::scaled_outer(v, 1.0)
    }

    /// Builds `c · v vᵀ`.
    pub fn scaled_outer(v: &[f64], c: f64) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = c * v[i] * v[j];
            }
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Builds a matrix from rows, symmetrizing as `(A + Aᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows_reporting(rows).map(|(m, _)| m)
    }

    /// Like [`SymMatrix::from_rows`] but also returns the largest
    /// asymmetry `|a_ij − a_ji|` found before symmetrization.
    pub fn from_rows_reporting(rows: &[Vec<f64>]) -> Result<(Self, f64)> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Input("matrix must have at least one row".into()));
        }
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input("matrix entries must be finite".into()));
            }
        }
        let mut asym = 0.0f64;
        let m = Self::from_fn(n, |i, j| {
            asym = asym.max((rows[i][j] - rows[j][i]).abs());
            0.5 * (rows[i][j] + rows[j][i])
        });
        Ok((m, asym))
    }

    /// Builds a matrix from a row-major buffer, symmetrizing.
    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("matrix entries must be finite".into()));
        }
        Ok(Self::from_fn(n, |i, j| 0.5 * (data[i * n + j] + data[j * n + i])))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Adds `c · other` in place.
    pub fn add_scaled(&mut self, other: &SymMatrix, c: f64) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// Adds `c · v vᵀ` in place.
    pub fn add_outer(&mut self, v: &[f64], c: f64) {
        assert_eq!(self.n, v.len(), "dimension mismatch");
        let n = self.n;
        for i in 0..n {
            let ci = c * v[i];
            if ci == 0.0 {
                continue;
            }
            for (d, vj) in self.data[i * n..(i + 1) * n].iter_mut().zip(v) {
                *d += ci * vj;
            }
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len(), "dimension mismatch");
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// The (generally non-symmetric) product `self · other`, row-major.
    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `S · A · S` where `S = self`; symmetric whenever `A` is.
    pub fn sandwich(&self, inner: &SymMatrix) -> SymMatrix {
        let sa = self.matmul(inner);
        let n = self.n;
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| sa[i * n + k] * self.data[k * n + j]).sum())
    }

    /// `Uᵀ · A · U` for an `n × r` matrix `U` given as `r` columns of length `n`.
    pub fn congruence(&self, cols: &[Vec<f64>]) -> SymMatrix {
        let au: Vec<Vec<f64>> = cols.iter().map(|c| self.mul_vec(c)).collect();
        SymMatrix::from_fn(cols.len(), |i, j| dot(&cols[i], &au[j]))
    }

    /// Largest absolute entry of `AB − BA`.
    pub fn commutator_max(&self, other: &SymMatrix) -> f64 {
        let ab = self.matmul(other);
        let ba = other.matmul(self);
        ab.iter().zip(&ba).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn eig(&self) -> Result<EigDecomp> {
        eig_sym(self)
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.add_scaled(rhs, 1.0);
        out
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.add_scaled(rhs, -1.0);
        out
    }
}

impl AddAssign<&SymMatrix> for SymMatrix {
    fn add_assign(&mut self, rhs: &SymMatrix) {
        self.add_scaled(rhs, 1.0);
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, c: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self * -1.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigendecomposition `A = Q·diag(λ)·Qᵀ` with eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct EigDecomp {
    n: usize,
    /// Eigenvectors stored column by column: `q[k*n + i]` is entry `i` of
    /// eigenvector `k`.
    q: Vec<f64>,
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// The `k`-th eigenvector (unit norm).
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.q[k * self.n..(k + 1) * self.n]
    }

    /// Entry `(i, j)` of the orthogonal matrix `Q`.
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[j * self.n + i]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn min(&self) -> f64 {
        *self.values.first().unwrap_or(&0.0)
    }

    /// `max |λ|`.
    pub fn abs_max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Q · diag(f(λ)) · Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mut out = SymMatrix::zeros(self.n);
        for (k, &lam) in self.values.iter().enumerate() {
            let c = f(lam);
            if c != 0.0 {
                out.add_outer(self.vector(k), c);
            }
        }
        out
    }

    /// `Qᵀ · Y · Q`, i.e. `Y` expressed in this eigenbasis.
    pub fn to_basis(&self, y: &SymMatrix) -> SymMatrix {
        let cols: Vec<Vec<f64>> = (0..self.n).map(|k| self.vector(k).to_vec()).collect();
        y.congruence(&cols)
    }

    /// `Q · Y · Qᵀ`, the inverse of [`EigDecomp::to_basis`].
    pub fn from_basis(&self, y: &SymMatrix) -> SymMatrix {
        let n = self.n;
        // (Q Y)_{ij} = Σ_k q(i,k) y(k,j)
        let mut qy = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let qik = self.q(i, k);
                for j in 0..n {
                    qy[i * n + j] += qik * y.get(k, j);
                }
            }
        }
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| qy[i * n + k] * self.q(j, k)).sum())
    }

    /// Orthonormal basis of the eigenvectors with `|λ| > tol·max|λ|`.
    pub fn image_basis(&self, rel_tol: f64) -> Vec<Vec<f64>> {
        let cut = rel_tol * self.abs_max();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l.abs() > cut)
            .map(|(k, _)| self.vector(k).to_vec())
            .collect()
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-13·‖A‖_F` (at most 60 sweeps). Deterministic for identical input.
pub fn eig_sym(a: &SymMatrix) -> Result<EigDecomp> {
    if !a.is_finite() {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let n = a.n;
    let mut m = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.frobenius();
    let mut converged = scale == 0.0 || n < 2;
    let mut sweep = 0;
    while !converged {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * m[p * n + q] * m[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_TOL * scale {
            converged = true;
            break;
        }
        if sweep == JACOBI_MAX_SWEEPS {
            break;
        }
        sweep += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rows p and q hold the same data as columns p and q.
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[p * n + k];
                    let akq = m[q * n + k];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    m[p * n + k] = np;
                    m[k * n + p] = np;
                    m[q * n + k] = nq;
                    m[k * n + q] = nq;
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                // Eigenvectors are kept as rows of `v`.
                for k in 0..n {
                    let vkp = v[p * n + k];
                    let vkq = v[q * n + k];
                    v[p * n + k] = c * vkp - s * vkq;
                    v[q * n + k] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NumericFailure {
            context: "symmetric eigensolver did not converge".into(),
            best: scale,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut q = vec![0.0; n * n];
    for (k, &col) in order.iter().enumerate() {
        for i in 0..n {
            q[k * n + i] = v[col * n + i];
        }
    }
    Ok(EigDecomp { n, q, values })
}

pub fn lambda_max(a: &SymMatrix) -> Result<f64> {
    Ok(eig_sym(a)?.max())
}

pub fn lambda_min(a: &SymMatrix) -> Result<f64> {
    Ok(eig_sym(a)?.min())
}

/// Spectral norm `max |λ|`.
pub fn spectral_norm(a: &SymMatrix) -> Result<f64> {
    Ok(eig_sym(a)?.abs_max())
}

pub fn mat_exp(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(eig_sym(a)?.map(f64::exp))
}

/// Matrix logarithm of a positive-definite matrix.
pub fn mat_log(a: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(a)?;
    if e.min() <= PD_TOL {
        return Err(Error::NotPositiveDefinite {
            index: None,
            min_eig: e.min(),
        });
    }
    Ok(e.map(f64::ln))
}

/// Moore–Penrose pseudoinverse with the default relative rank tolerance.
pub fn pinv(b: &SymMatrix) -> Result<SymMatrix> {
    pinv_with_tol(b, RANK_TOL)
}

pub fn pinv_with_tol(b: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    let e = eig_sym(b)?;
    let cut = rank_tol * e.abs_max();
    Ok(e.map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 }))
}

/// The PSD square root of `B⁺`, written `B^{+/2}`.
pub fn psd_sqrt_pinv(b: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(b)?;
    check_psd(&e)?;
    let cut = RANK_TOL * e.abs_max();
    Ok(e.map(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 }))
}

/// The PSD square root of a PSD matrix.
pub fn psd_sqrt(b: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(b)?;
    check_psd(&e)?;
    Ok(e.map(|l| l.max(0.0).sqrt()))
}

fn check_psd(e: &EigDecomp) -> Result<()> {
    if e.min() < -PSD_TOL * e.abs_max().max(1.0) {
        return Err(Error::NotPositiveSemidefinite { min_eig: e.min() });
    }
    Ok(())
}

/// Orthogonal projector onto the image of `B`.
pub fn image_projector(b: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(b)?;
    let cut = RANK_TOL * e.abs_max();
    Ok(e.map(|l| if l.abs() > cut { 1.0 } else { 0.0 }))
}

pub fn is_psd(a: &SymMatrix) -> Result<bool> {
    let e = eig_sym(a)?;
    Ok(check_psd(&e).is_ok())
}

/// Löwner order test `A ⪯ B`: true iff `λmin(B − A) ≥ −tol·max(1, ‖A‖, ‖B‖)`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let scale = 1f64.max(spectral_norm(a)?).max(spectral_norm(b)?);
    Ok(lambda_min(&(b - a))? >= -tol * scale)
}

/// `tr exp(Σᵢ log Cᵢ)` for strictly positive-definite `Cᵢ`.
pub fn trace_exp_sum_logs(cs: &[SymMatrix]) -> Result<f64> {
    let first = cs
        .first()
        .ok_or_else(|| Error::Input("need at least one matrix".into()))?;
    let n = first.dim();
    let mut sum = SymMatrix::zeros(n);
    for (i, c) in cs.iter().enumerate() {
        if c.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.dim(),
            });
        }
        let e = eig_sym(c)?;
        if e.min() <= PD_TOL {
            return Err(Error::NotPositiveDefinite {
                index: Some(i),
                min_eig: e.min(),
            });
        }
        sum += &e.map(f64::ln);
    }
    Ok(eig_sym(&sum)?.values.iter().map(|l| l.exp()).sum())
}

/// Singular values (descending) of the `n × k` matrix whose columns are
/// given, by one-sided Jacobi rotations.
pub fn singular_values(cols: &[&[f64]]) -> Vec<f64> {
    let k = cols.len();
    if k == 0 {
        return Vec::new();
    }
    let mut u: Vec<Vec<f64>> = cols.iter().map(|c| c.to_vec()).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = u.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = u.iter().map(|c| dot(c, c).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}
