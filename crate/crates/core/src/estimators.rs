//! Pessimistic estimators and their closed-form tail bounds.
//!
//! For `X ~ D(x)`, the product distribution on `{0,1}^m` with marginals
//! `x`, each estimator `g` upper-bounds the probability of a bad event and
//! is concave along every swap direction `e_a − e_b`:
//!
//! | estimator | event | value |
//! |-----------|-------|-------|
//! | [`ChernoffEstimator`] | `wᵀX ≥ t` | `e^{−θt}·Πᵢ(1 + xᵢ(e^{θwᵢ} − 1))` |
//! | [`SubmodularEstimator`] | `f(X) ≤ t` | `e^{−θt}·E[e^{θf(X)}]`, `θ < 0` |
//! | [`MatrixEstimator`] | `λmax(Σ XᵢMᵢ) ≥ t` | `e^{−θt}·tr exp(Σᵢ log E[e^{θXᵢMᵢ}])` |

use rand::Rng;

use crate::error::{Error, Result};
use crate::sfm::BRUTE_LIMIT;
use crate::symmat::{eig_sym, SymMatrix, PSD_TOL};

/// A value oracle `g(x)` on `[0,1]^m` that is concave under swaps.
pub trait Estimator {
    fn value(&self, x: &[f64]) -> Result<f64>;

    fn name(&self) -> &str;

    fn ground_size(&self) -> usize;

    /// A closed-form bound on the starting value, when one is known.
    fn certified_bound(&self) -> Option<f64> {
        None
    }
}

fn check_point(x: &[f64], m: usize) -> Result<()> {
    if x.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: x.len(),
        });
    }
    if let Some((i, v)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < -1e-12 || **v > 1.0 + 1e-12)
    {
        return Err(Error::Input(format!("coordinate {i} = {v} lies outside [0, 1]")));
    }
    Ok(())
}

/// Scalar Chernoff estimator for the event `wᵀX ≥ t`.
#[derive(Clone, Debug)]
pub struct ChernoffEstimator {
    w: Vec<f64>,
    t: f64,
    theta: f64,
    bound: Option<f64>,
}

impl ChernoffEstimator {
    pub fn new(w: Vec<f64>, t: f64, theta: f64) -> Result<Self> {
        if w.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Input("weights must lie in [0, 1]".into()));
        }
        if !(theta > 0.0 && theta.is_finite()) || !t.is_finite() {
            return Err(Error::Input("theta must be positive and t finite".into()));
        }
        Ok(ChernoffEstimator {
            w,
            t,
            theta,
            bound: None,
        })
    }

    /// The estimator at `t = (1+δ)μ`, `θ = ln(1+δ)` with `μ = wᵀx₀`,
    /// carrying the closed-form bound.
    pub fn for_deviation(w: Vec<f64>, x0: &[f64], delta: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::Input("delta must be positive".into()));
        }
        let mu: f64 = w.iter().zip(x0).map(|(a, b)| a * b).sum();
        let mut e = Self::new(w, (1.0 + delta) * mu, (1.0 + delta).ln())?;
        e.bound = Some(chernoff_bound(mu, delta));
        Ok(e)
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl Estimator for ChernoffEstimator {
    fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.w.len())?;
        let log: f64 = self
            .w
            .iter()
            .zip(x)
            .map(|(&w, &xi)| (xi * (self.theta * w).exp_m1()).ln_1p())
            .sum();
        Ok((log - self.theta * self.t).exp())
    }

    fn name(&self) -> &str {
        "chernoff"
    }

    fn ground_size(&self) -> usize {
        self.w.len()
    }

    fn certified_bound(&self) -> Option<f64> {
        self.bound
    }
}

/// `(e^δ / (1+δ)^{1+δ})^μ`; equals 1 at `δ = 0`.
pub fn chernoff_bound(mu: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 1.0;
    }
    (mu * (delta - (1.0 + delta) * delta.ln_1p())).exp()
}

/// Product-distribution weights of every subset of `0..m`, indexed by
/// bitmask.
fn subset_probabilities(x: &[f64]) -> Vec<f64> {
    let mut p = vec![1.0];
    for (i, &xi) in x.iter().enumerate() {
        let half = 1usize << i;
        p.resize(2 * half, 0.0);
        for mask in 0..half {
            let base = p[mask];
            p[mask] = base * (1.0 - xi);
            p[mask | half] = base * xi;
        }
    }
    p
}

fn mask_to_set(mask: usize, m: usize) -> Vec<usize> {
    (0..m).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Multilinear extension `F(x) = E_{X~D(x)}[f(X)]` by exact enumeration.
pub fn multilinear_value(f: impl Fn(&[usize]) -> f64, x: &[f64]) -> Result<f64> {
    let m = x.len();
    if m > BRUTE_LIMIT {
        return Err(Error::TooLarge {
            size: m,
            limit: BRUTE_LIMIT,
        });
    }
    check_point(x, m)?;
    let p = subset_probabilities(x);
    Ok(p.iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(mask, w)| w * f(&mask_to_set(mask, m)))
        .sum())
}

/// Monte-Carlo estimate of the multilinear extension for ground sets too
/// large to enumerate.
pub fn multilinear_sampled<R: Rng + ?Sized>(
    f: impl Fn(&[usize]) -> f64,
    x: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    check_point(x, x.len())?;
    if samples == 0 {
        return Err(Error::Input("need at least one sample".into()));
    }
    let mut total = 0.0;
    let mut set = Vec::with_capacity(x.len());
    for _ in 0..samples {
        set.clear();
        set.extend((0..x.len()).filter(|&i| rng.random::<f64>() < x[i]));
        total += f(&set);
    }
    Ok(total / samples as f64)
}

/// Lower-tail estimator `e^{−θt}·E[e^{θf(X)}]` (`θ < 0`) for a monotone
/// submodular `f` with marginals in `[0,1]`, evaluated exactly.
///
/// `f` is tabulated on all `2^m` subsets at construction, so `m ≤ 22`.
#[derive(Clone, Debug)]
pub struct SubmodularEstimator {
    m: usize,
    table: Vec<f64>,
    t: f64,
    theta: f64,
    bound: Option<f64>,
}

impl SubmodularEstimator {
    pub fn new(m: usize, f: impl Fn(&[usize]) -> f64, t: f64, theta: f64) -> Result<Self> {
        if !(theta < 0.0 && theta.is_finite()) {
            return Err(Error::Input("theta must be negative".into()));
        }
        if m > BRUTE_LIMIT {
            return Err(Error::TooLarge {
                size: m,
                limit: BRUTE_LIMIT,
            });
        }
        let table: Vec<f64> = (0..1usize << m).map(|mask| f(&mask_to_set(mask, m))).collect();
        check_monotone_unit_marginals(&table, m)?;
        Ok(SubmodularEstimator {
            m,
            table,
            t,
            theta,
            bound: None,
        })
    }

    /// The estimator at `t = (1−δ)μ`, `θ = ln(1−δ)` with `μ = F(x₀)`,
    /// carrying the bound `exp(−δ²μ/2)`.
    pub fn for_deviation(m: usize, f: impl Fn(&[usize]) -> f64, x0: &[f64], delta: f64) -> Result<Self> {
        if !(0.0 < delta && delta < 1.0) {
            return Err(Error::Input("delta must lie in (0, 1)".into()));
        }
        let mu = multilinear_value(&f, x0)?;
        let mut e = Self::new(m, f, (1.0 - delta) * mu, (1.0 - delta).ln())?;
        e.bound = Some(submodular_tail_bound(mu, delta)?);
        Ok(e)
    }

    /// `f` on the set encoded by `mask`.
    pub fn f_mask(&self, mask: usize) -> f64 {
        self.table[mask]
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

fn check_monotone_unit_marginals(table: &[f64], m: usize) -> Result<()> {
    const SLACK: f64 = 1e-12;
    let exhaustive = m <= 12;
    for mask in 0..table.len() {
        if table[mask] < -SLACK {
            return Err(Error::Input("submodular function must be nonnegative".into()));
        }
        if !exhaustive && mask != 0 && mask.count_ones() != 1 {
            continue;
        }
        for i in 0..m {
            if mask >> i & 1 == 1 {
                continue;
            }
            let gain = table[mask | 1 << i] - table[mask];
            if !(-SLACK..=1.0 + SLACK).contains(&gain) {
                return Err(Error::Input(format!(
                    "marginal of element {i} is {gain}, outside [0, 1]"
                )));
            }
        }
    }
    Ok(())
}

impl Estimator for SubmodularEstimator {
    fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.m)?;
        let p = subset_probabilities(x);
        let e: f64 = p
            .iter()
            .zip(&self.table)
            .map(|(w, f)| w * (self.theta * (f - self.t)).exp())
            .sum();
        Ok(e)
    }

    fn name(&self) -> &str {
        "submodular"
    }

    fn ground_size(&self) -> usize {
        self.m
    }

    fn certified_bound(&self) -> Option<f64> {
        self.bound
    }
}

/// `exp(−δ²μ/2)` for `δ ∈ [0, 1)`.
pub fn submodular_tail_bound(mu: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Input(format!("delta = {delta} must lie in [0, 1)")));
    }
    Ok((-delta * delta * mu / 2.0).exp())
}

/// Matrix Chernoff estimator for `λmax(Σ XᵢMᵢ) ≥ t` with `Mᵢ ⪰ 0`.
///
/// With `Cᵢ = xᵢe^{θMᵢ} + (1 − xᵢ)I` the value is
/// `e^{−θt}·tr exp(Σᵢ log Cᵢ)`. Each `Mᵢ` is diagonalized once at
/// construction; `log Cᵢ` then shares its eigenvectors, with eigenvalues
/// `ln(1 + xᵢ(e^{θλ} − 1))`, so only the final exponential needs a fresh
/// eigendecomposition.
#[derive(Clone, Debug)]
pub struct MatrixEstimator {
    n: usize,
    t: f64,
    theta: f64,
    width: f64,
    /// Nonzero eigenpairs of each `Mᵢ`.
    spectra: Vec<Vec<(f64, Vec<f64>)>>,
    bound: Option<f64>,
}

impl MatrixEstimator {
    /// Width `R` defaults to `maxᵢ λmax(Mᵢ)`.
    pub fn new(ms: &[SymMatrix], t: f64, theta: f64) -> Result<Self> {
        Self::build(ms, t, theta, None)
    }

    /// Requires `Mᵢ ⪯ R·I` for every `i`.
    pub fn with_width(ms: &[SymMatrix], t: f64, theta: f64, width: f64) -> Result<Self> {
        Self::build(ms, t, theta, Some(width))
    }

    fn build(ms: &[SymMatrix], t: f64, theta: f64, width: Option<f64>) -> Result<Self> {
        let n = ms
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::Input("need at least one matrix".into()))?;
        if !(theta > 0.0 && theta.is_finite()) || !t.is_finite() {
            return Err(Error::Input("theta must be positive and t finite".into()));
        }
        let mut spectra = Vec::with_capacity(ms.len());
        let mut rmax = 0.0f64;
        for (i, m) in ms.iter().enumerate() {
            if m.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.dim(),
                });
            }
            let e = eig_sym(m)?;
            let scale = e.abs_max().max(1.0);
            if e.min() < -PSD_TOL * scale {
                log::debug!("matrix {i} has eigenvalue {}", e.min());
                return Err(Error::NotPositiveSemidefinite { min_eig: e.min() });
            }
            rmax = rmax.max(e.max());
            let cut = 1e-14 * scale;
            spectra.push(
                e.values
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l > cut)
                    .map(|(k, &l)| (l, e.vector(k).to_vec()))
                    .collect(),
            );
        }
        let width = match width {
            Some(r) => {
                if rmax > r + PSD_TOL * r.max(1.0) {
                    return Err(Error::Input(format!(
                        "width violated: λmax(M_i) = {rmax} exceeds R = {r}"
                    )));
                }
                r
            }
            None => rmax,
        };
        Ok(MatrixEstimator {
            n,
            t,
            theta,
            width,
            spectra,
            bound: None,
        })
    }

    /// Attaches a closed-form bound to be reported by
    /// [`Estimator::certified_bound`].
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `Σᵢ log Cᵢ` at `x`.
    pub fn log_moment_sum(&self, x: &[f64]) -> Result<SymMatrix> {
        check_point(x, self.spectra.len())?;
        let mut sum = SymMatrix::zeros(self.n);
        for (pairs, &xi) in self.spectra.iter().zip(x) {
            if xi == 0.0 {
                continue;
            }
            for (lam, v) in pairs {
                let c = (xi * (self.theta * lam).exp_m1()).ln_1p();
                sum.add_outer(v, c);
            }
        }
        Ok(sum)
    }
}

impl Estimator for MatrixEstimator {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let sum = self.log_moment_sum(x)?;
        let e = eig_sym(&sum)?;
        let shift = -self.theta * self.t;
        Ok(e.values.iter().map(|l| (l + shift).exp()).sum())
    }

    fn name(&self) -> &str {
        "matrix"
    }

    fn ground_size(&self) -> usize {
        self.spectra.len()
    }

    fn certified_bound(&self) -> Option<f64> {
        self.bound
    }
}

/// `n·(e^δ / (1+δ)^{1+δ})^{μ/R}`.
pub fn matrix_chernoff_bound(n: usize, mu: f64, width: f64, delta: f64) -> f64 {
    n as f64 * chernoff_bound(mu / width, delta)
}

/// `δ = 4 ln n / ln ln n`, the fixed deviation for which the bound at
/// `μ = R = 1` falls below `1/n`. Needs `n ≥ 3`.
pub fn paper_delta(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Input(format!("fixed deviation needs n ≥ 3, got {n}")));
    }
    let ln = (n as f64).ln();
    Ok(4.0 * ln / ln.ln())
}

const DELTA_GRID_MIN: f64 = 1e-6;
const DELTA_GRID_MAX: f64 = 1e6;
const DELTA_GRID_RATIO: f64 = 1.0001;

/// Smallest `δ` on the geometric grid `10⁻⁶·1.0001^k` (capped at `10⁶`)
/// with `matrix_chernoff_bound(n, μ, R, δ) < target`.
pub fn choose_delta(n: usize, mu: f64, width: f64, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Input(format!("target {target} must lie in (0, 1)")));
    }
    if !(mu > 0.0 && width > 0.0) {
        return Err(Error::Input("mu and R must be positive".into()));
    }
    let steps = ((DELTA_GRID_MAX / DELTA_GRID_MIN).ln() / DELTA_GRID_RATIO.ln()).floor() as i32;
    let delta_at = |k: i32| DELTA_GRID_MIN * DELTA_GRID_RATIO.powi(k);
    let ok = |k: i32| matrix_chernoff_bound(n, mu, width, delta_at(k)) < target;
    if !ok(steps) {
        return Err(Error::Infeasible(format!(
            "no δ ≤ {DELTA_GRID_MAX:e} brings the bound below {target}"
        )));
    }
    if ok(0) {
        return Ok(delta_at(0));
    }
    // the bound decreases in δ: find the first grid index that succeeds
    let (mut lo, mut hi) = (0, steps);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(delta_at(hi))
}
