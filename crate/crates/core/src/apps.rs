//! End-to-end applications of matrix-concentrated pipage rounding.
//!
//! Every application reduces to the same core: PSD matrices `Mᵢ ⪯ I` with
//! `Σ x0ᵢMᵢ ⪯ I` on a `d`-dimensional space, a matroid, and a point `x0` in
//! its base polytope. Rounding against the matrix estimator at
//! `t = 1 + δ`, `θ = ln(1 + δ)` yields a base `S` with
//! `λmax(Σ_{i∈S} Mᵢ) < 1 + δ` whenever
//! `d·(e^δ/(1+δ)^{1+δ}) < 1`. By default `δ` is the smallest grid value
//! driving that bound below `1/d`.
//!
//! | function | matroid | `Mᵢ` | `x0` |
//! |----------|---------|------|------|
//! | [`sdp_round`] | given | `B^{+/2}AᵢB^{+/2}` | given |
//! | [`isotropic_basis`] | linear | `wᵢwᵢᵀ` | `n·p` |
//! | [`thin_tree`] | graphic | `bₑbₑᵀ/Rₑ` | `wₑRₑ` |
//! | [`column_subset`] | truncated linear | `aᵢaᵢᵀ` | `⌊st(A)⌋/m` |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::{choose_delta, matrix_chernoff_bound, Estimator, MatrixEstimator};
use crate::graphs::{spectral_thinness, WeightedGraph};
use crate::matroid::{self, Matroid};
use crate::rounding::{pipage_deterministic, pipage_randomized, PipageConfig, RoundingTrajectory};
use crate::symmat::{eig_sym, lambda_max, loewner_leq, SymMatrix, PSD_TOL, RANK_TOL};

/// Slack on `achieved < certified` in deterministic mode.
pub const CERTIFICATE_SLACK: f64 = 1e-9;

/// Tolerance on unit norms of input vectors.
pub const UNIT_TOL: f64 = 1e-8;

/// Tolerance on `Σ pᵢwᵢwᵢᵀ = I/n`.
pub const ISOTROPY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Randomized,
    Deterministic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Randomized => "randomized",
            Mode::Deterministic => "deterministic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AppConfig {
    pub mode: Mode,
    /// Seeds a `ChaCha8Rng` in randomized mode.
    pub seed: u64,
    /// Overrides the automatically chosen deviation.
    pub delta: Option<f64>,
    pub pipage: PipageConfig,
}

impl AppConfig {
    pub fn deterministic() -> Self {
        AppConfig {
            mode: Mode::Deterministic,
            seed: 0,
            delta: None,
            pipage: PipageConfig::default(),
        }
    }

    pub fn randomized(seed: u64) -> Self {
        AppConfig {
            mode: Mode::Randomized,
            seed,
            ..Self::deterministic()
        }
    }
}

/// Outcome of an application run, measured after the fact.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingReport {
    /// Chosen ground elements, ascending.
    pub selected: Vec<usize>,
    /// The measured quality (`λmax` or spectral thinness).
    pub alpha_achieved: f64,
    /// The bound guaranteed when `bound_value < 1` in deterministic mode.
    pub alpha_certified: f64,
    /// Failure-probability bound at the chosen deviation.
    pub bound_value: f64,
    pub mode: Mode,
    pub seed: u64,
    pub trajectory: RoundingTrajectory,
}

impl RoundingReport {
    /// `alpha_achieved < alpha_certified` up to [`CERTIFICATE_SLACK`].
    pub fn within_certificate(&self) -> bool {
        self.alpha_achieved < self.alpha_certified + CERTIFICATE_SLACK
    }
}

struct Rounded {
    selected: Vec<usize>,
    trajectory: RoundingTrajectory,
    lambda: f64,
    delta: f64,
    bound: f64,
}

/// Deviation used for a `d`-dimensional instance with `μ = R = 1`.
pub fn default_delta(d: usize) -> Result<f64> {
    choose_delta(d.max(1), 1.0, 1.0, 1.0 / d.max(2) as f64)
}

fn round_reduced(ms: &[SymMatrix], matroid: &Matroid, x0: &[f64], cfg: &AppConfig) -> Result<Rounded> {
    if ms.len() != matroid.ground_size() || x0.len() != ms.len() {
        return Err(Error::DimensionMismatch {
            expected: matroid.ground_size(),
            found: ms.len().min(x0.len()),
        });
    }
    let d = ms.first().map_or(0, SymMatrix::dim);
    // a zero-dimensional space carries no constraint; a 1×1 zero keeps the
    // estimator well defined
    let padded: Vec<SymMatrix>;
    let ms = if d == 0 {
        padded = vec![SymMatrix::zeros(1); ms.len()];
        &padded[..]
    } else {
        ms
    };
    let dim = d.max(1);
    let delta = match cfg.delta {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => return Err(Error::Input(format!("delta = {v} must be positive"))),
        None => default_delta(d)?,
    };
    let bound = matrix_chernoff_bound(dim, 1.0, 1.0, delta);
    if bound >= 1.0 {
        log::warn!("bound {bound} ≥ 1 at δ = {delta}; no guarantee");
    }
    let (selected, mut trajectory) = if ms.is_empty() {
        (Vec::new(), empty_trajectory())
    } else {
        match cfg.mode {
            Mode::Deterministic => {
                let g = MatrixEstimator::with_width(ms, 1.0 + delta, delta.ln_1p(), 1.0)?.with_bound(bound);
                log::debug!("estimator starts at {}", g.value(x0)?);
                pipage_deterministic(matroid, x0, &g, &cfg.pipage)?
            }
            Mode::Randomized => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                pipage_randomized(matroid, x0, &mut rng, &cfg.pipage)?
            }
        }
    };
    if cfg.mode == Mode::Randomized {
        trajectory.seed = Some(cfg.seed);
    }
    if !matroid.is_base(&selected)? {
        return Err(Error::StepFailure("rounding did not end at a base".into()));
    }
    let mut sum = SymMatrix::zeros(dim);
    for &i in &selected {
        sum += &ms[i];
    }
    let lambda = lambda_max(&sum)?;
    Ok(Rounded {
        selected,
        trajectory,
        lambda,
        delta,
        bound,
    })
}

fn empty_trajectory() -> RoundingTrajectory {
    RoundingTrajectory {
        start: Vec::new(),
        steps: Vec::new(),
        end: Vec::new(),
        seed: None,
        snap_distance: 0.0,
    }
}

fn finish(r: Rounded, achieved: f64, certified: f64, cfg: &AppConfig) -> Result<RoundingReport> {
    let report = RoundingReport {
        selected: r.selected,
        alpha_achieved: achieved,
        alpha_certified: certified,
        bound_value: r.bound,
        mode: cfg.mode,
        seed: cfg.seed,
        trajectory: r.trajectory,
    };
    if cfg.mode == Mode::Deterministic && report.bound_value < 1.0 && !report.within_certificate() {
        return Err(Error::NumericFailure {
            context: format!(
                "deterministic rounding exceeded its certificate {}",
                report.alpha_certified
            ),
            best: report.alpha_achieved,
        });
    }
    Ok(report)
}

fn check_psd(m: &SymMatrix, what: &str) -> Result<()> {
    let e = eig_sym(m)?;
    if e.min() < -PSD_TOL * e.abs_max().max(1.0) {
        log::debug!("{what} is not PSD");
        return Err(Error::NotPositiveSemidefinite { min_eig: e.min() });
    }
    Ok(())
}

/// Rounds `x0` in `{x ∈ base polytope : Σ xᵢAᵢ ⪯ B}` to a base `S` with
/// `Σ_{i∈S} Aᵢ ⪯ α·B`. Requires `Aᵢ ⪯ B` for every `i`.
///
/// The reported `alpha_achieved` is the least `α` for the chosen set, and
/// `alpha_certified` is `1 + δ`.
pub fn sdp_round(
    a: &[SymMatrix],
    b: &SymMatrix,
    matroid: &Matroid,
    x0: &[f64],
    cfg: &AppConfig,
) -> Result<RoundingReport> {
    let n = b.dim();
    if a.len() != matroid.ground_size() || x0.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: matroid.ground_size(),
            found: if a.len() != matroid.ground_size() {
                a.len()
            } else {
                x0.len()
            },
        });
    }
    check_psd(b, "B")?;
    let mut weighted = SymMatrix::zeros(n);
    for (i, ai) in a.iter().enumerate() {
        if ai.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ai.dim(),
            });
        }
        check_psd(ai, "A_i")?;
        if !loewner_leq(ai, b, PSD_TOL)? {
            return Err(Error::Input(format!("width violated: A_{i} ⋠ B")));
        }
        weighted.add_scaled(ai, x0[i]);
    }
    if let Some(why) = matroid::base_violation(matroid, x0, cfg.pipage.coord_tol)? {
        return Err(Error::NotInPolytope(why));
    }
    if !loewner_leq(&weighted, b, PSD_TOL)? {
        return Err(Error::NotInPolytope("Σ x0ᵢAᵢ ⋠ B".into()));
    }
    // B^{+/2}·A·B^{+/2} written in an orthonormal basis of im(B)
    let e = eig_sym(b)?;
    let cut = RANK_TOL * e.abs_max();
    let w: Vec<Vec<f64>> = (0..n)
        .filter(|&k| e.values[k] > cut)
        .map(|k| {
            let s = e.values[k].sqrt();
            e.vector(k).iter().map(|q| q / s).collect()
        })
        .collect();
    let ms: Vec<SymMatrix> = a.iter().map(|ai| ai.congruence(&w)).collect();
    let mut cfg_inner = cfg.clone();
    cfg_inner.pipage.check_start = false;
    let r = round_reduced(&ms, matroid, x0, &cfg_inner)?;
    let (lambda, delta) = (r.lambda, r.delta);
    finish(r, lambda, 1.0 + delta, cfg)
}

fn check_unit(vs: &[Vec<f64>]) -> Result<usize> {
    let n = vs
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Input("need at least one vector".into()))?;
    for (i, v) in vs.iter().enumerate() {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::Input(format!("vector {i} has norm {norm}, expected 1")));
        }
    }
    Ok(n)
}

/// From unit vectors in isotropic position, `Σ pᵢwᵢwᵢᵀ = I/n`, picks a basis
/// `S` with `λmax(Σ_{i∈S} wᵢwᵢᵀ) ≤ α`.
pub fn isotropic_basis(ws: &[Vec<f64>], p: &[f64], cfg: &AppConfig) -> Result<RoundingReport> {
    let n = check_unit(ws)?;
    if p.len() != ws.len() {
        return Err(Error::DimensionMismatch {
            expected: ws.len(),
            found: p.len(),
        });
    }
    if p.iter().any(|&v| v.is_nan() || v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Input("p must be a probability vector".into()));
    }
    let mut cov = &SymMatrix::identity(n) * (-1.0 / n as f64);
    for (w, &pi) in ws.iter().zip(p) {
        cov.add_outer(w, pi);
    }
    if cov.max_abs() > ISOTROPY_TOL {
        return Err(Error::Input(format!(
            "vectors are not in isotropic position (deviation {:e})",
            cov.max_abs()
        )));
    }
    let x0: Vec<f64> = p.iter().map(|&v| (v * n as f64).min(1.0)).collect();
    let matroid = Matroid::linear(ws.to_vec())?;
    if let Some(why) = matroid::base_violation(&matroid, &x0, cfg.pipage.coord_tol)? {
        return Err(Error::NotInPolytope(why));
    }
    let ms: Vec<SymMatrix> = ws.iter().map(|w| SymMatrix::outer(w)).collect();
    let mut inner = cfg.clone();
    inner.pipage.check_start = false;
    let r = round_reduced(&ms, &matroid, &x0, &inner)?;
    let (lambda, delta) = (r.lambda, r.delta);
    finish(r, lambda, 1.0 + delta, cfg)
}

/// A spanning tree `T` of a connected graph with `L_T ⪯ α·L_G`.
///
/// Rounds the point `xₑ = wₑRₑ` of the spanning-tree polytope. The report
/// carries the measured spectral thinness and the certificate
/// `(1 + δ)·maxₑ Rₑ`.
pub fn thin_tree(g: &WeightedGraph, cfg: &AppConfig) -> Result<RoundingReport> {
    let bs = g.whitened_edges()?;
    let resist: Vec<f64> = bs.iter().map(|b| b.iter().map(|t| t * t).sum()).collect();
    let x0: Vec<f64> = g.edges().iter().zip(&resist).map(|(e, r)| (e.2 * r).min(1.0)).collect();
    let ms: Vec<SymMatrix> = bs
        .iter()
        .zip(&resist)
        .map(|(b, &r)| SymMatrix::scaled_outer(b, 1.0 / r))
        .collect();
    let matroid = g.matroid();
    let r = round_reduced(&ms, &matroid, &x0, cfg)?;
    let delta = r.delta;
    let rmax = resist.iter().fold(0.0f64, |m, &v| m.max(v));
    let thinness = if g.vertex_count() <= 1 {
        0.0
    } else {
        spectral_thinness(&r.selected, g)?
    };
    finish(r, thinness, (1.0 + delta) * rmax, cfg)
}

/// Stable rank `‖A‖_F²/‖A‖²` of the matrix with the given columns.
pub fn stable_rank(cols: &[Vec<f64>]) -> Result<f64> {
    let n = cols.first().map_or(0, Vec::len);
    let mut gram = SymMatrix::zeros(n);
    let mut fro = 0.0;
    for c in cols {
        gram.add_outer(c, 1.0);
        fro += c.iter().map(|t| t * t).sum::<f64>();
    }
    let top = lambda_max(&gram)?;
    if top <= 0.0 {
        return Err(Error::Input("matrix is zero".into()));
    }
    Ok(fro / top)
}

/// From a matrix with unit columns, picks `⌊st(A)⌋` linearly independent
/// columns `S` with `λmax(Σ_{i∈S} aᵢaᵢᵀ) ≤ α`.
pub fn column_subset(cols: &[Vec<f64>], cfg: &AppConfig) -> Result<RoundingReport> {
    check_unit(cols)?;
    let m = cols.len();
    let k = (stable_rank(cols)? + 1e-9).floor() as usize;
    let x0 = vec![k as f64 / m as f64; m];
    let matroid = Matroid::truncation(Matroid::linear(cols.to_vec())?, k);
    if let Some(why) = matroid::base_violation(&matroid, &x0, cfg.pipage.coord_tol)? {
        return Err(Error::NotInPolytope(why));
    }
    let ms: Vec<SymMatrix> = cols.iter().map(|c| SymMatrix::outer(c)).collect();
    let mut inner = cfg.clone();
    inner.pipage.check_start = false;
    let r = round_reduced(&ms, &matroid, &x0, &inner)?;
    if r.selected.len() != k {
        return Err(Error::StepFailure(format!(
            "selected {} columns, expected {k}",
            r.selected.len()
        )));
    }
    let (lambda, delta) = (r.lambda, r.delta);
    finish(r, lambda, 1.0 + delta, cfg)
}
