//! Randomized verification suites and the instance generators behind them.
//!
//! Every suite is a sequence of independent trials. Trial `i` draws from
//! `ChaCha8Rng` seeded with the suite seed on stream `i` ([`trial_rng`]), so
//! trials may run in any order or in parallel and still reproduce exactly.
//! Each `*_trial` function runs one trial; the matching `*_report` folds the
//! outcomes, in trial order, into a JSON report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::Result;
use crate::estimators::{ChernoffEstimator, Estimator, MatrixEstimator, SubmodularEstimator};
use crate::liebcheck::{concavity_probe, means, LiebInstance, PROBE_STEP};
use crate::matroid::Matroid;
use crate::report::{real, reals};
use crate::rounding::{pipage_randomized, swap_concavity_probe, PipageConfig};
use crate::symmat::{eig_sym, lambda_max, SymMatrix};

/// Largest second difference accepted as concave.
pub const CONCAVITY_TOL: f64 = 1e-6;

/// Slack on `P[event] ≤ estimator`.
pub const PESSIMISM_TOL: f64 = 1e-9;

/// Relative slack on the Carlson chain.
pub const CARLSON_TOL: f64 = 1e-12;

/// The generator for trial `trial` of a suite seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Symmetric matrix with entries uniform in `[−scale, scale]`.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> SymMatrix {
    let mut a = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = scale * (2.0 * rng.random::<f64>() - 1.0);
            a.set(i, j, v);
        }
    }
    a
}

/// Columns of a random orthogonal matrix (eigenvectors of a random
/// symmetric matrix).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let e = eig_sym(&random_symmetric(n, 1.0, rng)).expect("finite input");
    (0..n).map(|k| e.vector(k).to_vec()).collect()
}

fn from_spectrum(q: &[Vec<f64>], spectrum: &[f64]) -> SymMatrix {
    let mut a = SymMatrix::zeros(q.len());
    for (v, &l) in q.iter().zip(spectrum) {
        a.add_outer(v, l);
    }
    a
}

/// Positive-definite matrix with eigenvalues uniform in `[lo, hi]`.
pub fn random_pd<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> SymMatrix {
    let q = random_orthogonal(n, rng);
    let spec: Vec<f64> = (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    from_spectrum(&q, &spec)
}

/// PSD matrix of rank at most `rank` with `λmax ≤ 1`.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> SymMatrix {
    let mut a = SymMatrix::zeros(n);
    for _ in 0..rank {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        a.add_outer(&v, 1.0);
    }
    let top = lambda_max(&a).expect("finite input");
    if top > 0.0 {
        a = &a * (rng.random::<f64>() / top);
    }
    a
}

/// A [`LiebInstance`] with `‖L‖_max ≤ 0.5`, `C` spectra in `[0.5, 2]` and
/// `‖K‖ ≤ 1`. In the commuting case each `Kᵢ` shares `Cᵢ`'s eigenbasis.
pub fn random_lieb_instance<R: Rng + ?Sized>(n: usize, commuting: bool, rng: &mut R) -> LiebInstance {
    let l = random_symmetric(n, 0.5, rng);
    let mut pair = || {
        if commuting {
            let q = random_orthogonal(n, rng);
            let c: Vec<f64> = (0..n).map(|_| 0.5 + 1.5 * rng.random::<f64>()).collect();
            let k: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            (from_spectrum(&q, &c), from_spectrum(&q, &k))
        } else {
            let rank = 1 + rng.random_range(0..n);
            (random_pd(n, 0.5, 2.0, rng), random_psd(n, rank, rng))
        }
    };
    let (c1, k1) = pair();
    let (c2, k2) = pair();
    LiebInstance::new(l, c1, c2, k1, k2).expect("generated instance is valid")
}

/// Point with coordinates uniform in `[margin, 1 − margin]`.
pub fn random_point<R: Rng + ?Sized>(m: usize, margin: f64, rng: &mut R) -> Vec<f64> {
    (0..m)
        .map(|_| margin + (1.0 - 2.0 * margin) * rng.random::<f64>())
        .collect()
}

/// Normalized coverage function: element `i` covers a random subset of a
/// universe of size `u`; `f(S) = |∪ᵢ∈S Uᵢ| / max |Uᵢ|`. Monotone,
/// submodular, marginals in `[0, 1]`.
pub fn random_coverage<R: Rng + ?Sized>(m: usize, u: usize, rng: &mut R) -> impl Fn(&[usize]) -> f64 {
    let sets: Vec<u64> = (0..m)
        .map(|_| {
            let mut s = 0u64;
            while s == 0 {
                s = (0..u).filter(|_| rng.random::<f64>() < 0.4).fold(0, |s, b| s | 1 << b);
            }
            s
        })
        .collect();
    let norm = f64::from(sets.iter().map(|s| s.count_ones()).max().unwrap_or(1));
    move |set: &[usize]| f64::from(set.iter().fold(0u64, |acc, &i| acc | sets[i]).count_ones()) / norm
}

/// `(trial, value)` pairs above `threshold`.
fn failures(values: &[f64], threshold: f64) -> Vec<Value> {
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.is_nan() || v > threshold)
        .map(|(i, &v)| json!({ "trial": i, "value": real(v) }))
        .collect()
}

fn max_of(values: &[f64]) -> f64 {
    values
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| if v.is_nan() { v } else { m.max(v) })
}

/// One Lieb probe: even trials commuting, odd trials general. Probes at
/// `h = min(10⁻³, ε/2)`.
pub fn lieb_trial(dim: usize, seed: u64, trial: u64) -> Result<f64> {
    let mut rng = trial_rng(seed, trial);
    let inst = random_lieb_instance(dim, trial.is_multiple_of(2), &mut rng);
    concavity_probe(&inst, PROBE_STEP.min(inst.safe_radius() / 2.0))
}

pub fn lieb_report(dim: usize, seed: u64, values: &[f64]) -> Value {
    json!({
        "suite": "lieb",
        "trials": values.len(),
        "dim": dim,
        "seed": seed,
        "max_second_difference": real(max_of(values)),
        "failures": failures(values, CONCAVITY_TOL),
    })
}

/// Estimator families exercised by the swap and pessimism suites, chosen
/// by `trial mod 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Chernoff,
    Submodular,
    Matrix,
}

impl EstimatorKind {
    pub fn for_trial(trial: u64) -> Self {
        match trial % 3 {
            0 => EstimatorKind::Chernoff,
            1 => EstimatorKind::Submodular,
            _ => EstimatorKind::Matrix,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Chernoff => "chernoff",
            EstimatorKind::Submodular => "submodular",
            EstimatorKind::Matrix => "matrix",
        }
    }
}

/// Random matrices `Mᵢ ⪰ 0` with `λmax ≤ 1`.
pub fn random_psd_family<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Vec<SymMatrix> {
    (0..m)
        .map(|_| {
            let rank = 1 + rng.random_range(0..n);
            random_psd(n, rank, rng)
        })
        .collect()
}

/// A random estimator of the given kind over `m` elements, at a threshold
/// a random factor above (or below, for submodular) the mean at `x`.
/// Matrix instances are `n × n`.
pub fn random_estimator<R: Rng + ?Sized>(
    kind: EstimatorKind,
    m: usize,
    n: usize,
    x: &[f64],
    rng: &mut R,
) -> Result<Box<dyn Estimator>> {
    let factor = 1.0 + 2.0 * rng.random::<f64>();
    let theta = factor.ln();
    Ok(match kind {
        EstimatorKind::Chernoff => {
            let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let mu: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
            Box::new(ChernoffEstimator::new(w, factor * mu, theta)?)
        }
        EstimatorKind::Submodular => {
            let f = random_coverage(m, 8, rng);
            let mu = crate::estimators::multilinear_value(&f, x)?;
            let shrink = 0.2 + 0.7 * rng.random::<f64>();
            Box::new(SubmodularEstimator::new(m, f, shrink * mu, shrink.ln())?)
        }
        EstimatorKind::Matrix => {
            let ms = random_psd_family(m, n, rng);
            let mut mean = SymMatrix::zeros(n);
            for (mi, &xi) in ms.iter().zip(x) {
                mean.add_scaled(mi, xi);
            }
            let t = factor * lambda_max(&mean)?.max(1e-3);
            Box::new(MatrixEstimator::new(&ms, t, theta)?)
        }
    })
}

/// One swap-concavity probe with `h = 10⁻³` at a random interior point.
pub fn swaps_trial(seed: u64, trial: u64) -> Result<(EstimatorKind, f64)> {
    let mut rng = trial_rng(seed, trial);
    let kind = EstimatorKind::for_trial(trial);
    let m = match kind {
        EstimatorKind::Submodular => 2 + rng.random_range(0..11),
        _ => 2 + rng.random_range(0..15),
    };
    let n = 1 + rng.random_range(0..4);
    let h = PROBE_STEP;
    let x = random_point(m, 2.0 * h, &mut rng);
    let g = random_estimator(kind, m, n, &x, &mut rng)?;
    let a = rng.random_range(0..m);
    let b = (a + 1 + rng.random_range(0..m - 1)) % m;
    Ok((kind, swap_concavity_probe(g.as_ref(), &x, a, b, h)?))
}

pub fn swaps_report(seed: u64, outcomes: &[(EstimatorKind, f64)]) -> Value {
    let mut per_kind = serde_json::Map::new();
    for kind in [
        EstimatorKind::Chernoff,
        EstimatorKind::Submodular,
        EstimatorKind::Matrix,
    ] {
        let vals: Vec<f64> = outcomes.iter().filter(|o| o.0 == kind).map(|o| o.1).collect();
        per_kind.insert(
            kind.as_str().into(),
            json!({ "trials": vals.len(), "max_second_difference": real(max_of(&vals)) }),
        );
    }
    let values: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    json!({
        "suite": "swaps",
        "trials": outcomes.len(),
        "seed": seed,
        "max_second_difference": real(max_of(&values)),
        "estimators": per_kind,
        "failures": failures(&values, CONCAVITY_TOL),
    })
}

/// Exact `P[event]` under `D(x)` and the estimator value at `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PessimismOutcome {
    pub kind: EstimatorKind,
    pub probability: f64,
    pub estimate: f64,
}

impl PessimismOutcome {
    pub fn excess(&self) -> f64 {
        self.probability - self.estimate
    }
}

fn enumerate_probability(x: &[f64], bad: impl Fn(&[usize]) -> bool) -> f64 {
    let m = x.len();
    let mut total = 0.0;
    let mut set = Vec::with_capacity(m);
    for mask in 0usize..1 << m {
        set.clear();
        let mut p = 1.0;
        for (i, &xi) in x.iter().enumerate() {
            if mask >> i & 1 == 1 {
                set.push(i);
                p *= xi;
            } else {
                p *= 1.0 - xi;
            }
        }
        if p > 0.0 && bad(&set) {
            total += p;
        }
    }
    total
}

/// Compares an estimator against exhaustive enumeration of its event:
/// scalar `m ≤ 16`, submodular `m ≤ 12`, matrix `m ≤ 10, n ≤ 3`.
pub fn pessimism_trial(seed: u64, trial: u64) -> Result<PessimismOutcome> {
    let mut rng = trial_rng(seed, trial);
    let kind = EstimatorKind::for_trial(trial);
    let factor = 1.0 + 2.0 * rng.random::<f64>();
    let (probability, estimate) = match kind {
        EstimatorKind::Chernoff => {
            let m = 1 + rng.random_range(0..16);
            let x = random_point(m, 0.0, &mut rng);
            let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let mu: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            let g = ChernoffEstimator::new(w.clone(), factor * mu, factor.ln())?;
            let t = g.threshold();
            let p = enumerate_probability(&x, |s| s.iter().map(|&i| w[i]).sum::<f64>() >= t);
            (p, g.value(&x)?)
        }
        EstimatorKind::Submodular => {
            let m = 1 + rng.random_range(0..12);
            let x = random_point(m, 0.0, &mut rng);
            let f = random_coverage(m, 8, &mut rng);
            let mu = crate::estimators::multilinear_value(&f, &x)?;
            let shrink = 0.2 + 0.7 * rng.random::<f64>();
            let t = shrink * mu;
            let g = SubmodularEstimator::new(m, &f, t, shrink.ln())?;
            let p = enumerate_probability(&x, |s| f(s) <= t);
            (p, g.value(&x)?)
        }
        EstimatorKind::Matrix => {
            let m = 1 + rng.random_range(0..10);
            let n = 1 + rng.random_range(0..3);
            let x = random_point(m, 0.0, &mut rng);
            let ms = random_psd_family(m, n, &mut rng);
            let mut mean = SymMatrix::zeros(n);
            for (mi, &xi) in ms.iter().zip(&x) {
                mean.add_scaled(mi, xi);
            }
            let t = factor * lambda_max(&mean)?.max(1e-3);
            let g = MatrixEstimator::new(&ms, t, factor.ln())?;
            let p = enumerate_probability(&x, |s| {
                let mut sum = SymMatrix::zeros(n);
                for &i in s {
                    sum += &ms[i];
                }
                lambda_max(&sum).map_or(true, |l| l >= t)
            });
            (p, g.value(&x)?)
        }
    };
    Ok(PessimismOutcome {
        kind,
        probability,
        estimate,
    })
}

pub fn pessimism_report(seed: u64, outcomes: &[PessimismOutcome]) -> Value {
    let excess: Vec<f64> = outcomes.iter().map(PessimismOutcome::excess).collect();
    json!({
        "suite": "pessimism",
        "trials": outcomes.len(),
        "seed": seed,
        "max_excess": real(max_of(&excess)),
        "failures": failures(&excess, PESSIMISM_TOL),
    })
}

/// Worst violation of `√(xy) ≤ LM(x, y) ≤ AGM(x, y) ≤ (x + y)/2`, relative
/// to `max(1, x, y)`, over `pairs` random pairs spanning six decades (with
/// occasional zeros and ties).
pub fn carlson_trial(seed: u64, trial: u64, pairs: usize) -> Result<f64> {
    let mut rng = trial_rng(seed, trial);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let draw = |rng: &mut ChaCha8Rng| match rng.random_range(0..20) {
            0 => 0.0,
            _ => rng.random::<f64>() * 10f64.powi(rng.random_range(-3..=3)),
        };
        let x = draw(&mut rng);
        let y = if rng.random_range(0..20) == 0 {
            x
        } else {
            draw(&mut rng)
        };
        let (lm, agm) = means(x, y)?;
        let chain = [(x * y).sqrt(), lm, agm, 0.5 * (x + y)];
        let scale = 1f64.max(x).max(y);
        for w in chain.windows(2) {
            worst = worst.max((w[0] - w[1]) / scale);
        }
    }
    Ok(worst)
}

pub fn carlson_report(seed: u64, pairs_per_trial: usize, values: &[f64]) -> Value {
    json!({
        "suite": "carlson",
        "trials": values.len(),
        "pairs": values.len() * pairs_per_trial,
        "seed": seed,
        "max_violation": real(max_of(values)),
        "failures": failures(values, CARLSON_TOL),
    })
}

/// Fixed instances for the marginal suite.
pub fn marginal_instances() -> Vec<(&'static str, Matroid, Vec<f64>)> {
    vec![
        ("uniform-1-of-2", Matroid::uniform(2, 1), vec![0.5, 0.5]),
        (
            "triangle",
            Matroid::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).expect("valid triangle"),
            vec![2.0 / 3.0; 3],
        ),
    ]
}

/// The 0/1 indicator of one randomized rounding of `x0`.
pub fn marginals_trial(matroid: &Matroid, x0: &[f64], seed: u64, trial: u64) -> Result<Vec<f64>> {
    let mut rng = trial_rng(seed, trial);
    let (_, traj) = pipage_randomized(matroid, x0, &mut rng, &PipageConfig::default())?;
    Ok(traj.end)
}

/// Empirical marginals and their distance from `x0` in binomial standard
/// deviations.
pub fn marginals_report(name: &str, x0: &[f64], seed: u64, ends: &[Vec<f64>]) -> Value {
    let trials = ends.len() as f64;
    let counts: Vec<f64> = (0..x0.len()).map(|i| ends.iter().map(|e| e[i]).sum()).collect();
    let z: Vec<f64> = counts
        .iter()
        .zip(x0)
        .map(|(&c, &p)| {
            let sd = (trials * p * (1.0 - p)).sqrt();
            if sd == 0.0 {
                if c == trials * p {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (c - trials * p).abs() / sd
            }
        })
        .collect();
    json!({
        "suite": "marginals",
        "instance": name,
        "trials": ends.len(),
        "seed": seed,
        "x0": reals(x0),
        "counts": counts.iter().map(|&c| c as u64).collect::<Vec<_>>(),
        "max_sigma": real(max_of(&z)),
        "within_3_sigma": z.iter().all(|&v| v <= 3.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_streams_are_independent_and_stable() {
        let a: f64 = trial_rng(7, 0).random();
        let b: f64 = trial_rng(7, 1).random();
        let a2: f64 = trial_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn generators_respect_their_contracts() {
        let mut rng = trial_rng(1, 0);
        let pd = random_pd(4, 0.5, 2.0, &mut rng);
        let e = eig_sym(&pd).unwrap();
        assert!(e.min() >= 0.5 - 1e-12 && e.max() <= 2.0 + 1e-12);
        let psd = random_psd(4, 2, &mut rng);
        let e = eig_sym(&psd).unwrap();
        assert!(e.min() > -1e-12 && e.max() <= 1.0 + 1e-12);
        assert!(random_lieb_instance(3, true, &mut rng).commuting);
        let f = random_coverage(5, 8, &mut rng);
        assert_eq!(f(&[]), 0.0);
        assert!(f(&[0, 1, 2, 3, 4]) >= f(&[0, 1]));
    }

    #[test]
    fn small_suites_pass() {
        let lieb: Vec<f64> = (0..6).map(|t| lieb_trial(3, 5, t).unwrap()).collect();
        assert!(max_of(&lieb) <= CONCAVITY_TOL);
        let swaps: Vec<_> = (0..6).map(|t| swaps_trial(5, t).unwrap()).collect();
        assert!(swaps.iter().all(|s| s.1 <= CONCAVITY_TOL), "{swaps:?}");
        let pess: Vec<_> = (0..6).map(|t| pessimism_trial(5, t).unwrap()).collect();
        assert!(pess.iter().all(|p| p.excess() <= PESSIMISM_TOL), "{pess:?}");
        assert!(carlson_trial(5, 0, 1000).unwrap() <= CARLSON_TOL);
    }

    #[test]
    fn report_shapes() {
        let r = lieb_report(4, 7, &[-1.0, -0.5]);
        assert_eq!(r["trials"], 2);
        assert_eq!(r["failures"].as_array().unwrap().len(), 0);
        let r = lieb_report(4, 7, &[-1.0, 2e-6]);
        assert_eq!(r["failures"][0]["trial"], 1);
    }
}
