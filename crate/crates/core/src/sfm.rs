//! Submodular function minimization.
//!
//! Two backends: exhaustive enumeration for small ground sets, and the
//! Fujishige–Wolfe minimum-norm-point algorithm. Wolfe's algorithm walks
//! the base polytope `B(f)` towards its minimum-norm point `y*`; a minimizer
//! of `f` is read off as a level set `{i : y_i ≤ c}`. Every greedy vertex it
//! computes also yields the values of `f` on all level sets of the current
//! iterate, and any `y ∈ B(f)` certifies `min f ≥ Σ min(y_i, 0)`, so the
//! loop stops once the best level set is within `eps` of that lower bound.
//!
//! The pipage step length [`max_step`] is the main client: the largest `z`
//! with `x + z(e_a − e_b)` still in the base polytope is
//! `min(x_b, min {r(S) − x(S) : a ∈ S, b ∉ S})`, and the inner minimum is a
//! submodular minimization over the contraction of `a`.

use crate::error::{Error, Result};
use crate::matroid::{self, Matroid};

/// Default duality-gap target of [`minimize`].
pub const WOLFE_EPS: f64 = 1e-9;
/// Largest ground set [`minimize_brute`] accepts.
pub const BRUTE_LIMIT: usize = 22;
/// Ground sets up to this size are minimized by enumeration in
/// [`minimize_auto`].
pub const BRUTE_DEFAULT_LIMIT: usize = 8;

const AFFINE_TOL: f64 = 1e-12;

/// A normalized (`f(∅) = 0`) submodular set function on `0..m`.
pub trait SubmodularFn {
    fn ground_size(&self) -> usize;

    /// `f(set)`; `set` is sorted and duplicate-free.
    fn eval(&self, set: &[usize]) -> f64;

    /// Vertex of the base polytope produced by the greedy algorithm for the
    /// permutation `order`: entry `order[k]` is
    /// `f(order[..=k]) − f(order[..k])`.
    fn greedy_vertex(&self, order: &[usize]) -> Vec<f64> {
        let mut q = vec![0.0; self.ground_size()];
        let mut prefix: Vec<usize> = Vec::with_capacity(order.len());
        let mut prev = 0.0;
        for &e in order {
            let pos = prefix.binary_search(&e).unwrap_or_else(|p| p);
            prefix.insert(pos, e);
            let cur = self.eval(&prefix);
            q[e] = cur - prev;
            prev = cur;
        }
        q
    }
}

/// A set function given by a closure.
pub struct FnSubmodular<F: Fn(&[usize]) -> f64> {
    m: usize,
    f: F,
}

impl<F: Fn(&[usize]) -> f64> FnSubmodular<F> {
    pub fn new(m: usize, f: F) -> Self {
        FnSubmodular { m, f }
    }
}

impl<F: Fn(&[usize]) -> f64> SubmodularFn for FnSubmodular<F> {
    fn ground_size(&self) -> usize {
        self.m
    }
    fn eval(&self, set: &[usize]) -> f64 {
        (self.f)(set)
    }
}

/// `f(S) = Σ_{i∈S} w_i`.
pub struct Modular(pub Vec<f64>);

impl SubmodularFn for Modular {
    fn ground_size(&self) -> usize {
        self.0.len()
    }
    fn eval(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.0[i]).sum()
    }
    fn greedy_vertex(&self, _order: &[usize]) -> Vec<f64> {
        self.0.clone()
    }
}

/// The slack `r(S) − x(S)` of the rank constraints at a point `x`.
pub struct RankSlack<'a> {
    matroid: &'a Matroid,
    x: &'a [f64],
}

impl<'a> RankSlack<'a> {
    pub fn new(matroid: &'a Matroid, x: &'a [f64]) -> Self {
        RankSlack { matroid, x }
    }
}

impl SubmodularFn for RankSlack<'_> {
    fn ground_size(&self) -> usize {
        self.x.len()
    }
    fn eval(&self, set: &[usize]) -> f64 {
        let mut b = self.matroid.builder();
        let r = set.iter().filter(|&&e| b.try_add(e)).count() as f64;
        r - set.iter().map(|&e| self.x[e]).sum::<f64>()
    }
    fn greedy_vertex(&self, order: &[usize]) -> Vec<f64> {
        let mut b = self.matroid.builder();
        let mut q = vec![0.0; self.x.len()];
        for &e in order {
            q[e] = f64::from(u8::from(b.try_add(e))) - self.x[e];
        }
        q
    }
}

/// `h(T) = r(T ∪ K) − r(K) − x(T)` with `K = {a} ∪ ones` contracted;
/// local index `i` stands for element `ground[i]`.
struct ContractedSlack<'a> {
    matroid: &'a Matroid,
    x: &'a [f64],
    contracted: Vec<usize>,
    ground: Vec<usize>,
}

impl ContractedSlack<'_> {
    fn base_builder(&self) -> crate::matroid::IndependenceBuilder<'_> {
        let mut b = self.matroid.builder();
        for &e in &self.contracted {
            b.try_add(e);
        }
        b
    }
}

impl SubmodularFn for ContractedSlack<'_> {
    fn ground_size(&self) -> usize {
        self.ground.len()
    }
    fn eval(&self, set: &[usize]) -> f64 {
        let mut b = self.base_builder();
        let mut gains = 0usize;
        let mut xs = 0.0;
        for &i in set {
            let e = self.ground[i];
            gains += usize::from(b.try_add(e));
            xs += self.x[e];
        }
        gains as f64 - xs
    }
    fn greedy_vertex(&self, order: &[usize]) -> Vec<f64> {
        let mut b = self.base_builder();
        let mut q = vec![0.0; self.ground.len()];
        for &i in order {
            let e = self.ground[i];
            q[i] = f64::from(u8::from(b.try_add(e))) - self.x[e];
        }
        q
    }
}

fn lex_less(a: &[usize], b: &[usize]) -> bool {
    a < b
}

/// Exact minimization by enumerating all `2^m` subsets. Ties go to the
/// lexicographically smallest set (as a sorted list).
pub fn minimize_brute(f: &dyn SubmodularFn) -> Result<(Vec<usize>, f64)> {
    let m = f.ground_size();
    if m > BRUTE_LIMIT {
        return Err(Error::TooLarge {
            size: m,
            limit: BRUTE_LIMIT,
        });
    }
    let mut best_set: Vec<usize> = Vec::new();
    let mut best = f.eval(&[]);
    let mut set = Vec::with_capacity(m);
    for mask in 1u32..(1u32 << m) {
        set.clear();
        set.extend((0..m).filter(|&i| mask >> i & 1 == 1));
        let v = f.eval(&set);
        let tie = (v - best).abs() <= 1e-12 * best.abs().max(1.0);
        if (v < best && !tie) || (tie && lex_less(&set, &best_set)) {
            best = if tie { best.min(v) } else { v };
            best_set.clone_from(&set);
        }
    }
    Ok((best_set, best))
}

/// Enumeration when `m ≤ 8`, Wolfe's algorithm otherwise.
pub fn minimize_auto(f: &dyn SubmodularFn, eps: f64) -> Result<(Vec<usize>, f64)> {
    if f.ground_size() <= BRUTE_DEFAULT_LIMIT {
        minimize_brute(f)
    } else {
        minimize(f, eps)
    }
}

/// Fujishige–Wolfe minimum-norm-point minimization.
///
/// Returns a set together with its exact value, which is within `eps` of
/// the minimum. Iterations are capped at `10·m²`; on the cap (or a
/// numerical stall) the function falls back to enumeration when `m ≤ 22`
/// and otherwise reports a [`Error::NumericFailure`] carrying the best
/// value found.
pub fn minimize(f: &dyn SubmodularFn, eps: f64) -> Result<(Vec<usize>, f64)> {
    let m = f.ground_size();
    if m == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut best_set: Vec<usize> = Vec::new();
    let mut best = 0.0;

    let identity: Vec<usize> = (0..m).collect();
    let first = f.greedy_vertex(&identity);
    track_prefixes(&identity, &first, &mut best, &mut best_set);

    let mut corral = Corral::new(first.clone());
    let mut x = first;
    let cap = (10 * m * m).max(100);
    for _ in 0..cap {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(i.cmp(&j)));
        let q = f.greedy_vertex(&order);
        track_prefixes(&order, &q, &mut best, &mut best_set);
        let lower: f64 = x.iter().map(|&v| v.min(0.0)).sum();
        if best - lower <= eps {
            best_set.sort_unstable();
            return Ok((best_set, best));
        }
        let xx = dot(&x, &x);
        let xq = dot(&x, &q);
        if xx - xq <= 1e-14 * xx.max(1.0) || corral.contains(&q) {
            // x is (numerically) the min-norm point but the gap is open
            break;
        }
        if !corral.push(q) {
            break;
        }
        loop {
            let Some(alpha) = corral.affine_minimizer() else {
                corral.pop();
                break;
            };
            let y = corral.combine(&alpha);
            if alpha.iter().all(|&a| a > AFFINE_TOL) {
                x = y;
                corral.lambda = alpha;
                break;
            }
            let theta = corral
                .lambda
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= AFFINE_TOL)
                .map(|(&l, &a)| if l - a > 0.0 { l / (l - a) } else { 0.0 })
                .fold(f64::INFINITY, f64::min)
                .clamp(0.0, 1.0);
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = theta * yi + (1.0 - theta) * *xi;
            }
            let lam: Vec<f64> = corral
                .lambda
                .iter()
                .zip(&alpha)
                .map(|(&l, &a)| theta * a + (1.0 - theta) * l)
                .collect();
            corral.lambda = lam;
            corral.drop_small(AFFINE_TOL);
            x = corral.combine(&corral.lambda.clone());
        }
    }
    if m <= BRUTE_LIMIT {
        log::debug!("Wolfe minimization stalled at m = {m}; falling back to enumeration");
        return minimize_brute(f);
    }
    Err(Error::NumericFailure {
        context: format!("Fujishige–Wolfe minimization on {m} elements"),
        best,
    })
}

fn track_prefixes(order: &[usize], q: &[f64], best: &mut f64, best_set: &mut Vec<usize>) {
    let mut acc = 0.0;
    let mut best_len = None;
    for (k, &e) in order.iter().enumerate() {
        acc += q[e];
        if acc < *best - 1e-15 {
            *best = acc;
            best_len = Some(k + 1);
        }
    }
    if let Some(len) = best_len {
        *best_set = order[..len].to_vec();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Active point set of Wolfe's algorithm.
///
/// Keeps the Cholesky factor of `G + c·11ᵀ` (`G` the Gram matrix, `c`
/// fixed at creation) so that adding a point and solving for the affine
/// minimizer both cost `O(k²)`.
struct Corral {
    points: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    /// Lower-triangular factor, row `i` has `i + 1` entries.
    chol: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    shift: f64,
}

impl Corral {
    fn new(p: Vec<f64>) -> Self {
        let g = dot(&p, &p);
        let shift = g.max(1.0);
        Corral {
            points: vec![p],
            gram: vec![vec![g]],
            chol: vec![vec![(g + shift).sqrt()]],
            lambda: vec![1.0],
            shift,
        }
    }

    fn contains(&self, q: &[f64]) -> bool {
        self.points.iter().any(|p| p.as_slice() == q)
    }

    /// Cholesky row for a point with the given Gram row (including its own
    /// squared norm last); `None` if it is affinely dependent on the rest.
    fn factor_row(&self, gram_row: &[f64], upto: usize) -> Option<Vec<f64>> {
        let mut row = Vec::with_capacity(upto + 1);
        for j in 0..upto {
            let s: f64 = gram_row[j] + self.shift - dot(&row[..j], &self.chol[j][..j]);
            row.push(s / self.chol[j][j]);
        }
        let diag = gram_row[upto] + self.shift;
        let d2 = diag - dot(&row, &row);
        if d2 <= 1e-12 * diag {
            return None;
        }
        row.push(d2.sqrt());
        Some(row)
    }

    /// Adds `q`; false (and no change) if it is affinely dependent.
    fn push(&mut self, q: Vec<f64>) -> bool {
        let mut row: Vec<f64> = self.points.iter().map(|p| dot(p, &q)).collect();
        row.push(dot(&q, &q));
        let Some(c) = self.factor_row(&row, self.points.len()) else {
            return false;
        };
        for (g, &v) in self.gram.iter_mut().zip(&row) {
            g.push(v);
        }
        self.gram.push(row);
        self.chol.push(c);
        self.points.push(q);
        self.lambda.push(0.0);
        true
    }

    fn pop(&mut self) {
        self.points.pop();
        self.gram.pop();
        for g in &mut self.gram {
            g.pop();
        }
        self.chol.pop();
        self.lambda.pop();
    }

    fn drop_small(&mut self, tol: f64) {
        let keep: Vec<bool> = self.lambda.iter().map(|&l| l > tol).collect();
        let Some(first) = keep.iter().position(|k| !k) else {
            return;
        };
        let mut idx = 0;
        self.points.retain(|_| {
            idx += 1;
            keep[idx - 1]
        });
        self.gram = self
            .gram
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(row, _)| row.iter().zip(&keep).filter(|(_, &k)| k).map(|(&v, _)| v).collect())
            .collect();
        self.lambda.retain(|&l| l > tol);
        let s: f64 = self.lambda.iter().sum();
        self.lambda.iter_mut().for_each(|l| *l /= s);
        // rows before the first removed point are unchanged
        self.chol.truncate(first);
        for i in first..self.points.len() {
            let row = self.gram[i][..=i].to_vec();
            match self.factor_row(&row, i) {
                Some(c) => self.chol.push(c),
                None => {
                    // numerically dependent survivors: keep a tiny pivot
                    let mut c = self.factor_row_unchecked(&row, i);
                    c[i] = (1e-12 * (row[i] + self.shift)).sqrt();
                    self.chol.push(c);
                }
            }
        }
    }

    fn factor_row_unchecked(&self, gram_row: &[f64], upto: usize) -> Vec<f64> {
        let mut row = Vec::with_capacity(upto + 1);
        for j in 0..upto {
            let s: f64 = gram_row[j] + self.shift - dot(&row[..j], &self.chol[j][..j]);
            row.push(s / self.chol[j][j]);
        }
        row.push(0.0);
        row
    }

    fn combine(&self, alpha: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.points[0].len()];
        for (p, &a) in self.points.iter().zip(alpha) {
            for (yi, pi) in y.iter_mut().zip(p) {
                *yi += a * pi;
            }
        }
        y
    }

    /// Affine combination of the corral points with minimum norm, from
    /// `(G + c·11ᵀ)α ∝ 1`.
    fn affine_minimizer(&self) -> Option<Vec<f64>> {
        let k = self.points.len();
        let l = &self.chol;
        let mut z = vec![1.0; k];
        for i in 0..k {
            let s = dot(&l[i][..i], &z[..i]);
            z[i] = (z[i] - s) / l[i][i];
        }
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|p| l[p][i] * z[p]).sum();
            z[i] = (z[i] - s) / l[i][i];
        }
        let total: f64 = z.iter().sum();
        if !total.is_finite() || total.abs() < 1e-300 {
            return None;
        }
        Some(z.into_iter().map(|v| v / total).collect())
    }
}

/// Result of a step-length query.
#[derive(Clone, Debug, PartialEq)]
pub struct StepBound {
    /// Largest admissible step.
    pub step: f64,
    /// A rank constraint `S` (with `a ∈ S`, `b ∉ S`) of least slack, or
    /// `None` when nonnegativity of `x_b` is what binds.
    pub witness: Option<Vec<usize>>,
}

/// Largest `z` such that `x + z(e_a − e_b)` stays in the base polytope.
///
/// Fails with [`Error::NotInPolytope`] if `x` itself is not in it.
pub fn max_step(m: &Matroid, x: &[f64], a: usize, b: usize, tol: f64) -> Result<f64> {
    if let Some(why) = matroid::base_violation(m, x, tol)? {
        return Err(Error::NotInPolytope(why));
    }
    Ok(max_step_unchecked(m, x, a, b, WOLFE_EPS)?.step)
}

/// [`max_step`] without the polytope check, also returning the binding set.
pub fn max_step_unchecked(m: &Matroid, x: &[f64], a: usize, b: usize, eps: f64) -> Result<StepBound> {
    let size = m.ground_size();
    if x.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: x.len(),
        });
    }
    for e in [a, b] {
        if e >= size {
            return Err(Error::OutOfRange { element: e, size });
        }
    }
    if a == b {
        return Err(Error::Input("swap endpoints must differ".into()));
    }
    if x[b] <= 0.0 {
        return Ok(StepBound {
            step: 0.0,
            witness: None,
        });
    }
    // zeros never lower the slack and ones never raise it, so the former are
    // dropped and the latter contracted together with `a`
    let others = (0..size).filter(|&e| e != a && e != b);
    let ones: Vec<usize> = others.clone().filter(|&e| x[e] >= 1.0).collect();
    let ground: Vec<usize> = others.filter(|&e| x[e] > 0.0 && x[e] < 1.0).collect();
    let mut contracted = vec![a];
    contracted.extend_from_slice(&ones);
    let h = ContractedSlack {
        matroid: m,
        x,
        contracted,
        ground,
    };
    let rk = h.base_builder().rank() as f64;
    let x_ones: f64 = ones.iter().map(|&e| x[e]).sum();
    let (t, value) = minimize_auto(&h, eps)?;
    let slack = rk - x[a] - x_ones + value;
    if slack < x[b] {
        let mut witness: Vec<usize> = t.iter().map(|&i| h.ground[i]).collect();
        witness.extend_from_slice(&h.contracted);
        witness.sort_unstable();
        Ok(StepBound {
            step: slack.max(0.0),
            witness: Some(witness),
        })
    } else {
        Ok(StepBound {
            step: x[b],
            witness: None,
        })
    }
}
