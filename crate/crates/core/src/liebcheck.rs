//! Numeric checks of the trace-exponential concavity behind the matrix
//! estimator, and of the operator calculus used to prove it.
//!
//! The central object is
//!
//! ```text
//! f(z) = tr exp(L + log(C₁ + zK₁) + log(C₂ − zK₂))
//! ```
//!
//! for symmetric `L`, positive-definite `C₁, C₂` and PSD `K₁, K₂`, which is
//! concave near `z = 0`. [`concavity_probe`] measures its second central
//! difference.

use crate::error::{Error, Result};
use crate::symmat::{eig_sym, EigDecomp, SymMatrix, PD_TOL, PSD_TOL};

/// Default probe step.
pub const PROBE_STEP: f64 = 1e-3;

/// Commutator threshold for the commuting flag and for `r_op`'s closed form.
pub const COMMUTE_TOL: f64 = 1e-9;

const QUAD_TOL: f64 = 1e-11;
const QUAD_MAX_DEPTH: u32 = 50;

#[derive(Clone, Debug)]
pub struct LiebInstance {
    pub l: SymMatrix,
    pub c1: SymMatrix,
    pub c2: SymMatrix,
    pub k1: SymMatrix,
    pub k2: SymMatrix,
    /// Whether `C₁K₁ = K₁C₁` and `C₂K₂ = K₂C₂`.
    pub commuting: bool,
    radius: f64,
}

impl LiebInstance {
    /// Validates definiteness and records the safe radius.
    pub fn new(l: SymMatrix, c1: SymMatrix, c2: SymMatrix, k1: SymMatrix, k2: SymMatrix) -> Result<Self> {
        let n = l.dim();
        for m in [&c1, &c2, &k1, &k2] {
            if m.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.dim(),
                });
            }
        }
        let mut parts = [0.0; 2];
        for (slot, (c, k)) in [(&c1, &k1), (&c2, &k2)].into_iter().enumerate() {
            let ec = eig_sym(c)?;
            if ec.min() <= PD_TOL {
                return Err(Error::NotPositiveDefinite {
                    index: Some(slot),
                    min_eig: ec.min(),
                });
            }
            let ek = eig_sym(k)?;
            if ek.min() < -PSD_TOL {
                return Err(Error::NotPositiveSemidefinite { min_eig: ek.min() });
            }
            let knorm = ek.abs_max();
            parts[slot] = if knorm == 0.0 { f64::INFINITY } else { ec.min() / knorm };
        }
        let commuting = c1.commutator_max(&k1) <= COMMUTE_TOL && c2.commutator_max(&k2) <= COMMUTE_TOL;
        Ok(LiebInstance {
            l,
            c1,
            c2,
            k1,
            k2,
            commuting,
            radius: 0.5 * parts[0].min(parts[1]),
        })
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    /// `ε = ½·min(λmin(C₁)/‖K₁‖, λmin(C₂)/‖K₂‖)`; infinite when both `K`
    /// vanish.
    pub fn safe_radius(&self) -> f64 {
        self.radius
    }

    /// The instance with `(C₁, K₁)` and `(C₂, K₂)` exchanged, whose curve is
    /// `z ↦ f(−z)`.
    pub fn swapped(&self) -> LiebInstance {
        LiebInstance {
            l: self.l.clone(),
            c1: self.c2.clone(),
            c2: self.c1.clone(),
            k1: self.k2.clone(),
            k2: self.k1.clone(),
            commuting: self.commuting,
            radius: self.radius,
        }
    }
}

fn pd_log(m: &SymMatrix, z: f64, radius: f64) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    if e.min() <= PD_TOL {
        return Err(Error::Domain { z, radius });
    }
    Ok(e.map(f64::ln))
}

/// `tr exp(L + log(C₁ + zK₁) + log(C₂ − zK₂))`.
pub fn f_curve(inst: &LiebInstance, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain { z, radius: inst.radius });
    }
    let mut a = inst.c1.clone();
    a.add_scaled(&inst.k1, z);
    let mut b = inst.c2.clone();
    b.add_scaled(&inst.k2, -z);
    let logs = &pd_log(&a, z, inst.radius)? + &pd_log(&b, z, inst.radius)?;
    let e = eig_sym(&(&inst.l + &logs))?;
    Ok(e.values.iter().map(|l| l.exp()).sum())
}

/// `(f(h) − 2f(0) + f(−h))/h²`. Requires `h ≤ ε`.
pub fn concavity_probe(inst: &LiebInstance, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 || h > inst.radius {
        return Err(Error::Domain {
            z: h,
            radius: inst.radius,
        });
    }
    let f0 = f_curve(inst, 0.0)?;
    let fp = f_curve(inst, h)?;
    let fm = f_curve(inst, -h)?;
    Ok((fp - 2.0 * f0 + fm) / (h * h))
}

/// Logarithmic mean and binomial mean `((√x + √y)/2)²`.
pub fn means(x: f64, y: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0 && y >= 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Input(format!(
            "means need finite nonnegative inputs, got ({x}, {y})"
        )));
    }
    let agm = ((x.sqrt() + y.sqrt()) / 2.0).powi(2);
    Ok((log_mean(x, y), agm))
}

fn log_mean(x: f64, y: f64) -> f64 {
    if x == y {
        return x;
    }
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    let d = hi.ln() - lo.ln();
    if d < 1e-8 {
        lo * (1.0 + d / 2.0 + d * d / 6.0)
    } else {
        lo * d.exp_m1() / d
    }
}

fn pd_eig(x: &SymMatrix) -> Result<EigDecomp> {
    let e = eig_sym(x)?;
    if e.min() <= PD_TOL {
        return Err(Error::NotPositiveDefinite {
            index: None,
            min_eig: e.min(),
        });
    }
    Ok(e)
}

fn lm_scaled(x: &SymMatrix, y: &SymMatrix, divide: bool) -> Result<SymMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let e = pd_eig(x)?;
    let yb = e.to_basis(y);
    let lam = &e.values;
    let scaled = SymMatrix::from_fn(x.dim(), |i, j| {
        let lm = log_mean(lam[i], lam[j]);
        if divide {
            yb.get(i, j) / lm
        } else {
            yb.get(i, j) * lm
        }
    });
    Ok(e.from_basis(&scaled))
}

/// `T_X(Y) = ∫₀^∞ (X + t)⁻¹ Y (X + t)⁻¹ dt`, computed in the eigenbasis of
/// `X` by dividing entry `(i, j)` by `LM(λᵢ, λⱼ)`.
pub fn t_op(x: &SymMatrix, y: &SymMatrix) -> Result<SymMatrix> {
    lm_scaled(x, y, true)
}

/// Inverse of [`t_op`]: entrywise multiplication by `LM(λᵢ, λⱼ)`.
pub fn t_inv(x: &SymMatrix, y: &SymMatrix) -> Result<SymMatrix> {
    lm_scaled(x, y, false)
}

/// `R_X(Y) = 2∫₀^∞ (X + t)⁻¹ Y (X + t)⁻¹ Y (X + t)⁻¹ dt`.
///
/// Commuting inputs use `Y²X⁻²`; otherwise each kernel
/// `∫ dt / ((a+t)(b+t)(c+t))` is integrated numerically after mapping
/// `t = s/(1−s)` onto `[0, 1]`.
pub fn r_op(x: &SymMatrix, y: &SymMatrix) -> Result<SymMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let n = x.dim();
    let e = pd_eig(x)?;
    let scale = x.max_abs().max(y.max_abs()).max(1.0);
    if x.commutator_max(y) <= COMMUTE_TOL * scale {
        let xinv = e.map(|l| 1.0 / l);
        let y2 = SymMatrix::from_row_major(n, &y.matmul(y))?;
        let xinv2 = SymMatrix::from_row_major(n, &xinv.matmul(&xinv))?;
        let prod = y2.matmul(&xinv2);
        return symmetrize(n, &prod);
    }
    let yb = e.to_basis(y);
    let lam = &e.values;
    let mut kernel = vec![0.0; n * n * n];
    for i in 0..n {
        for k in 0..n {
            for j in i..n {
                let v = triple_kernel(lam[i], lam[k], lam[j]);
                kernel[(i * n + k) * n + j] = v;
                kernel[(j * n + k) * n + i] = v;
            }
        }
    }
    let out = SymMatrix::from_fn(n, |i, j| {
        2.0 * (0..n)
            .map(|k| yb.get(i, k) * yb.get(k, j) * kernel[(i * n + k) * n + j])
            .sum::<f64>()
    });
    Ok(e.from_basis(&out))
}

fn symmetrize(n: usize, rm: &[f64]) -> Result<SymMatrix> {
    Ok(SymMatrix::from_fn(n, |i, j| 0.5 * (rm[i * n + j] + rm[j * n + i])))
}

/// `∫₀^∞ dt / ((a+t)(b+t)(c+t))` by adaptive Simpson on `[0, 1]`.
fn triple_kernel(a: f64, b: f64, c: f64) -> f64 {
    let f = |s: f64| {
        let r = 1.0 - s;
        r / ((a * r + s) * (b * r + s) * (c * r + s))
    };
    let (fa, fm, fb) = (f(0.0), f(0.5), f(1.0));
    let whole = (fa + 4.0 * fm + fb) / 6.0;
    simpson(
        &f,
        0.0,
        1.0,
        fa,
        fm,
        fb,
        whole,
        QUAD_TOL * whole.abs().max(1e-300),
        QUAD_MAX_DEPTH,
    )
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
