//! Pipage rounding over a matroid base polytope.
//!
//! Starting from a fractional point `x` in the base polytope, each step
//! picks two fractional coordinates `a < b` and moves along `e_a − e_b` to
//! one of the two ends of the feasible segment, `x + u(e_a − e_b)` or
//! `x + ℓ(e_a − e_b)` with `ℓ < 0 < u`. Either end makes a coordinate
//! integral or tightens a new rank constraint, so the walk reaches a vertex.
//!
//! The randomized variant picks `ℓ` with probability `u/(u − ℓ)`, which
//! keeps the expected point fixed. The deterministic variant evaluates an
//! [`Estimator`] at both ends and keeps the smaller value; concavity of the
//! estimator along the segment makes this a non-increasing walk.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::matroid::{self, Matroid};
use crate::sfm::{self, StepBound, WOLFE_EPS};

/// Knobs for the rounding loop.
#[derive(Clone, Debug, PartialEq)]
pub struct PipageConfig {
    /// Coordinates within this distance of 0 or 1 are frozen, and steps no
    /// longer than this are treated as blocked.
    pub coord_tol: f64,
    /// Duality-gap target for the min-norm-point solver.
    pub wolfe_eps: f64,
    /// Hard cap on the number of steps; `None` means `m²`.
    pub max_steps: Option<usize>,
    /// Verify that the starting point lies in the base polytope.
    pub check_start: bool,
}

impl Default for PipageConfig {
    fn default() -> Self {
        PipageConfig {
            coord_tol: 1e-9,
            wolfe_eps: WOLFE_EPS,
            max_steps: None,
            check_start: true,
        }
    }
}

/// One move `x ← x + z(e_a − e_b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub a: usize,
    pub b: usize,
    pub z: f64,
    /// Estimator value after the move (deterministic mode only).
    pub g: Option<f64>,
}

/// Audit log of one rounding run.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingTrajectory {
    pub start: Vec<f64>,
    pub steps: Vec<Step>,
    /// The snapped 0/1 point.
    pub end: Vec<f64>,
    pub seed: Option<u64>,
    /// Largest distance moved by the final snap to `{0, 1}`.
    pub snap_distance: f64,
}

impl RoundingTrajectory {
    /// Indices `i` with `end[i] = 1`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.end.len()).filter(|&i| self.end[i] == 1.0).collect()
    }
}

/// Feasible segment for a pair.
struct Segment {
    a: usize,
    b: usize,
    up: f64,
    down: f64,
}

struct Walker<'a> {
    matroid: &'a Matroid,
    cfg: &'a PipageConfig,
    x: Vec<f64>,
    steps: Vec<Step>,
    limit: usize,
}

impl<'a> Walker<'a> {
    fn new(matroid: &'a Matroid, x0: &[f64], cfg: &'a PipageConfig) -> Result<Self> {
        let m = matroid.ground_size();
        if x0.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: x0.len(),
            });
        }
        if cfg.check_start {
            if let Some(why) = matroid::base_violation(matroid, x0, cfg.coord_tol)? {
                return Err(Error::NotInPolytope(why));
            }
        }
        Ok(Walker {
            matroid,
            cfg,
            x: x0.to_vec(),
            steps: Vec::new(),
            limit: cfg.max_steps.unwrap_or((m * m).max(1)),
        })
    }

    fn is_fractional(&self, i: usize) -> bool {
        let v = self.x[i];
        v > self.cfg.coord_tol && v < 1.0 - self.cfg.coord_tol
    }

    fn bound(&self, a: usize, b: usize) -> Result<StepBound> {
        sfm::max_step_unchecked(self.matroid, &self.x, a, b, self.cfg.wolfe_eps)
    }

    /// First pair `a < b` in index order that can move both ways.
    ///
    /// A blocked forward query returns a tight set `S ∋ a` with `b ∉ S`;
    /// that set also blocks every other `b' ∉ S`, so only members of `S`
    /// stay candidates. A blocked reverse query rules out the members of its
    /// tight set in the same way.
    fn next_segment(&self) -> Result<Option<Segment>> {
        let tol = self.cfg.coord_tol;
        let frac: Vec<usize> = (0..self.x.len()).filter(|&i| self.is_fractional(i)).collect();
        if frac.is_empty() {
            return Ok(None);
        }
        let m = self.x.len();
        for (pos, &a) in frac.iter().enumerate() {
            let mut fwd = vec![true; m];
            let mut rev = vec![true; m];
            for &b in &frac[pos + 1..] {
                if !fwd[b] || !rev[b] {
                    continue;
                }
                let up = self.bound(a, b)?;
                if up.step <= tol {
                    match &up.witness {
                        Some(s) => {
                            let mut keep = vec![false; m];
                            for &e in s {
                                keep[e] = true;
                            }
                            for (f, k) in fwd.iter_mut().zip(keep) {
                                *f &= k;
                            }
                        }
                        None => fwd[b] = false,
                    }
                    continue;
                }
                let down = self.bound(b, a)?;
                if down.step <= tol {
                    match &down.witness {
                        Some(s) => {
                            for &e in s {
                                rev[e] = false;
                            }
                        }
                        None => rev[b] = false,
                    }
                    continue;
                }
                return Ok(Some(Segment {
                    a,
                    b,
                    up: up.step,
                    down: -down.step,
                }));
            }
        }
        Err(Error::StepFailure(format!(
            "{} fractional coordinates remain but no pair can move",
            frac.len()
        )))
    }

    fn moved(&self, seg: &Segment, z: f64) -> Vec<f64> {
        let mut y = self.x.clone();
        y[seg.a] = (y[seg.a] + z).clamp(0.0, 1.0);
        y[seg.b] = (y[seg.b] - z).clamp(0.0, 1.0);
        y
    }

    fn apply(&mut self, seg: &Segment, z: f64, y: Vec<f64>, g: Option<f64>) -> Result<()> {
        if self.steps.len() >= self.limit {
            return Err(Error::StepFailure(format!(
                "step limit {} reached without an extreme point",
                self.limit
            )));
        }
        log::trace!("step {}: ({}, {}) by {z}", self.steps.len(), seg.a, seg.b);
        self.x = y;
        self.steps.push(Step {
            a: seg.a,
            b: seg.b,
            z,
            g,
        });
        Ok(())
    }

    fn finish(self, start: &[f64]) -> (Vec<usize>, RoundingTrajectory) {
        let mut snap = 0.0f64;
        let end: Vec<f64> = self
            .x
            .iter()
            .map(|&v| {
                let r = if v >= 0.5 { 1.0 } else { 0.0 };
                snap = snap.max((r - v).abs());
                r
            })
            .collect();
        let traj = RoundingTrajectory {
            start: start.to_vec(),
            steps: self.steps,
            end,
            seed: None,
            snap_distance: snap,
        };
        (traj.support(), traj)
    }
}

/// Randomized pipage rounding. The returned base `S` satisfies
/// `E[χ(S)] = x0`.
pub fn pipage_randomized<R: Rng + ?Sized>(
    matroid: &Matroid,
    x0: &[f64],
    rng: &mut R,
    cfg: &PipageConfig,
) -> Result<(Vec<usize>, RoundingTrajectory)> {
    let mut w = Walker::new(matroid, x0, cfg)?;
    while let Some(seg) = w.next_segment()? {
        let p_down = seg.up / (seg.up - seg.down);
        let z = if rng.random::<f64>() < p_down { seg.down } else { seg.up };
        let y = w.moved(&seg, z);
        w.apply(&seg, z, y, None)?;
    }
    Ok(w.finish(x0))
}

/// Deterministic pipage rounding guided by `g`. Never increases `g` when
/// `g` is concave under swaps.
pub fn pipage_deterministic(
    matroid: &Matroid,
    x0: &[f64],
    g: &dyn Estimator,
    cfg: &PipageConfig,
) -> Result<(Vec<usize>, RoundingTrajectory)> {
    if g.ground_size() != matroid.ground_size() {
        return Err(Error::DimensionMismatch {
            expected: matroid.ground_size(),
            found: g.ground_size(),
        });
    }
    let mut w = Walker::new(matroid, x0, cfg)?;
    let g0 = g.value(x0)?;
    if g0 >= 1.0 {
        log::warn!(
            "{} estimator starts at {g0} ≥ 1; the output carries no guarantee",
            g.name()
        );
    }
    while let Some(seg) = w.next_segment()? {
        let lo = w.moved(&seg, seg.down);
        let hi = w.moved(&seg, seg.up);
        let g_lo = g.value(&lo)?;
        let g_hi = g.value(&hi)?;
        if g_lo <= g_hi {
            w.apply(&seg, seg.down, lo, Some(g_lo))?;
        } else {
            w.apply(&seg, seg.up, hi, Some(g_hi))?;
        }
    }
    Ok(w.finish(x0))
}

/// Second central difference of `z ↦ g(x + z(e_a − e_b))` at `z = 0`.
pub fn swap_concavity_probe(g: &dyn Estimator, x: &[f64], a: usize, b: usize, h: f64) -> Result<f64> {
    let m = x.len();
    for e in [a, b] {
        if e >= m {
            return Err(Error::OutOfRange { element: e, size: m });
        }
    }
    if a == b || h.is_nan() || h <= 0.0 {
        return Err(Error::Input("probe needs a ≠ b and h > 0".into()));
    }
    let inside = |v: f64| (0.0..=1.0).contains(&v);
    if !(inside(x[a] + h) && inside(x[a] - h) && inside(x[b] + h) && inside(x[b] - h)) {
        return Err(Error::Input(format!(
            "probe of width {h} leaves the unit cube at coordinates ({a}, {b})"
        )));
    }
    let shift = |z: f64| {
        let mut y = x.to_vec();
        y[a] += z;
        y[b] -= z;
        y
    };
    let f0 = g.value(x)?;
    let fp = g.value(&shift(h))?;
    let fm = g.value(&shift(-h))?;
    Ok((fp - 2.0 * f0 + fm) / (h * h))
}
