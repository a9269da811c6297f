//! Matroids presented by independence oracles, and membership in their base
//! polytopes.
//!
//! Four kinds are supported: uniform, graphic (multigraphs allowed, a
//! self-loop is dependent), linear over real vectors, and truncations of any
//! of these. Besides the one-shot [`Matroid::is_independent`] query every
//! kind offers an incremental [`IndependenceBuilder`], which is what the
//! greedy algorithm and submodular minimization run on.
//!
//! Linear independence is decided numerically. A set is independent when the
//! smallest singular value of its columns exceeds `rank_tol` times the
//! largest. The incremental builder instead accepts a vector when its
//! residual against the span built so far exceeds `rank_tol` times its norm.
//! The two rules agree except on sets whose conditioning sits right at the
//! tolerance.

use crate::error::{Error, Result};
use crate::sfm;
use crate::symmat::{dot, singular_values};

/// Default relative tolerance for linear independence.
pub const LINEAR_RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Matroid {
    /// Every set of at most `k` of the `m` elements is independent.
    Uniform { m: usize, k: usize },
    /// Forests of a multigraph; element `i` is `edges[i]`.
    Graphic {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    /// Linearly independent subsets of a list of vectors.
    Linear { vectors: Vec<Vec<f64>>, rank_tol: f64 },
    /// Independent sets of `inner` with at most `k` elements.
    Truncation { inner: Box<Matroid>, k: usize },
}

impl Matroid {
    pub fn uniform(m: usize, k: usize) -> Self {
        Matroid::Uniform { m, k }
    }

    pub fn graphic(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= vertices || v >= vertices) {
            return Err(Error::Input(format!(
                "edge ({u}, {v}) references a vertex outside 0..{vertices}"
            )));
        }
        Ok(Matroid::Graphic { vertices, edges })
    }

    pub fn linear(vectors: Vec<Vec<f64>>) -> Result<Self> {
        Self::linear_with_tol(vectors, LINEAR_RANK_TOL)
    }

    pub fn linear_with_tol(vectors: Vec<Vec<f64>>, rank_tol: f64) -> Result<Self> {
        if let Some(first) = vectors.first() {
            let n = first.len();
            if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: bad.len(),
                });
            }
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input("vector entries must be finite".into()));
        }
        Ok(Matroid::Linear { vectors, rank_tol })
    }

    pub fn truncation(inner: Matroid, k: usize) -> Self {
        Matroid::Truncation {
            inner: Box::new(inner),
            k,
        }
    }

    /// Size of the ground set.
    pub fn ground_size(&self) -> usize {
        match self {
            Matroid::Uniform { m, .. } => *m,
            Matroid::Graphic { edges, .. } => edges.len(),
            Matroid::Linear { vectors, .. } => vectors.len(),
            Matroid::Truncation { inner, .. } => inner.ground_size(),
        }
    }

    fn check_set(&self, set: &[usize]) -> Result<Vec<usize>> {
        let m = self.ground_size();
        let mut s = set.to_vec();
        s.sort_unstable();
        for w in s.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Input(format!("element {} repeated in set", w[0])));
            }
        }
        if let Some(&e) = s.iter().find(|&&e| e >= m) {
            return Err(Error::OutOfRange { element: e, size: m });
        }
        Ok(s)
    }

    /// Independence query.
    pub fn is_independent(&self, set: &[usize]) -> Result<bool> {
        let s = self.check_set(set)?;
        Ok(self.independent_sorted(&s))
    }

    fn independent_sorted(&self, s: &[usize]) -> bool {
        match self {
            Matroid::Uniform { k, .. } => s.len() <= *k,
            Matroid::Graphic { .. } | Matroid::Truncation { .. } => {
                let mut b = self.builder();
                s.iter().all(|&e| b.try_add(e))
            }
            Matroid::Linear { vectors, rank_tol } => {
                if s.is_empty() {
                    return true;
                }
                let n = vectors[0].len();
                if s.len() > n {
                    return false;
                }
                let cols: Vec<&[f64]> = s.iter().map(|&e| vectors[e].as_slice()).collect();
                let sv = singular_values(&cols);
                let (max, min) = (sv[0], *sv.last().unwrap());
                max > 0.0 && min > rank_tol * max
            }
        }
    }

    /// A fresh incremental builder starting from the empty set.
    pub fn builder(&self) -> IndependenceBuilder<'_> {
        let state = match self {
            Matroid::Uniform { k, .. } => BuilderState::Uniform { count: 0, k: *k },
            Matroid::Graphic { vertices, edges } => BuilderState::Graphic {
                edges,
                forest: UnionFind::new(*vertices),
            },
            Matroid::Linear { vectors, rank_tol } => BuilderState::Linear {
                vectors,
                rank_tol: *rank_tol,
                basis: Vec::new(),
            },
            Matroid::Truncation { inner, k } => BuilderState::Truncation {
                inner: Box::new(inner.builder()),
                count: 0,
                k: *k,
            },
        };
        IndependenceBuilder { state, rank: 0 }
    }

    /// Rank of `set`: size of the independent subset built greedily in
    /// index order.
    pub fn rank(&self, set: &[usize]) -> Result<usize> {
        let s = self.check_set(set)?;
        let mut b = self.builder();
        for e in s {
            b.try_add(e);
        }
        Ok(b.rank())
    }

    /// Rank of the whole ground set.
    pub fn full_rank(&self) -> usize {
        let mut b = self.builder();
        for e in 0..self.ground_size() {
            b.try_add(e);
        }
        b.rank()
    }

    /// A maximum-weight base by the greedy algorithm; ties go to the smaller
    /// index. Returned sorted.
    pub fn greedy_base(&self, weights: &[f64]) -> Result<Vec<usize>> {
        let m = self.ground_size();
        if weights.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: weights.len(),
            });
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| weights[j].total_cmp(&weights[i]).then(i.cmp(&j)));
        let mut b = self.builder();
        let mut base: Vec<usize> = order.into_iter().filter(|&e| b.try_add(e)).collect();
        base.sort_unstable();
        Ok(base)
    }

    /// Whether `set` is a base: independent with size equal to the full rank.
    pub fn is_base(&self, set: &[usize]) -> Result<bool> {
        Ok(set.len() == self.full_rank() && self.is_independent(set)?)
    }
}

/// Incrementally grows an independent set.
pub struct IndependenceBuilder<'a> {
    state: BuilderState<'a>,
    rank: usize,
}

enum BuilderState<'a> {
    Uniform {
        count: usize,
        k: usize,
    },
    Graphic {
        edges: &'a [(usize, usize)],
        forest: UnionFind,
    },
    Linear {
        vectors: &'a [Vec<f64>],
        rank_tol: f64,
        basis: Vec<Vec<f64>>,
    },
    Truncation {
        inner: Box<IndependenceBuilder<'a>>,
        count: usize,
        k: usize,
    },
}

impl IndependenceBuilder<'_> {
    /// Adds `e` if the current set plus `e` stays independent; returns
    /// whether it was added.
    pub fn try_add(&mut self, e: usize) -> bool {
        let added = match &mut self.state {
            BuilderState::Uniform { count, k } => {
                if *count < *k {
                    *count += 1;
                    true
                } else {
                    false
                }
            }
            BuilderState::Graphic { edges, forest } => {
                let (u, v) = edges[e];
                forest.union(u, v)
            }
            BuilderState::Linear {
                vectors,
                rank_tol,
                basis,
            } => {
                let v = &vectors[e];
                let norm = dot(v, v).sqrt();
                if norm == 0.0 || basis.len() == v.len() {
                    false
                } else {
                    let mut r = v.clone();
                    // a second Gram–Schmidt pass only when the first one
                    // cancelled heavily
                    let mut rn = norm;
                    for _ in 0..2 {
                        for q in basis.iter() {
                            let c = dot(q, &r);
                            for (ri, qi) in r.iter_mut().zip(q) {
                                *ri -= c * qi;
                            }
                        }
                        let before = rn;
                        rn = dot(&r, &r).sqrt();
                        if rn > 0.5 * before {
                            break;
                        }
                    }
                    if rn > *rank_tol * norm {
                        r.iter_mut().for_each(|x| *x /= rn);
                        basis.push(r);
                        true
                    } else {
                        false
                    }
                }
            }
            BuilderState::Truncation { inner, count, k } => {
                if *count < *k && inner.try_add(e) {
                    *count += 1;
                    true
                } else {
                    false
                }
            }
        };
        if added {
            self.rank += 1;
        }
        added
    }

    /// Size of the independent set built so far.
    pub fn rank(&self) -> usize {
        self.rank
    }
}

#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges the classes of `a` and `b`; false if already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }
}

/// Membership of `x` in the base polytope of `m`:
/// `x ≥ −tol`, `|x([m]) − r([m])| ≤ m·tol`, and `r(S) − x(S) ≥ −tol` for
/// all `S`, the last checked by submodular minimization.
pub fn base_membership(m: &Matroid, x: &[f64], tol: f64) -> Result<bool> {
    Ok(base_violation(m, x, tol)?.is_none())
}

/// Like [`base_membership`] but describes the first violated constraint.
pub fn base_violation(m: &Matroid, x: &[f64], tol: f64) -> Result<Option<String>> {
    let size = m.ground_size();
    if x.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: x.len(),
        });
    }
    if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < -tol) {
        return Ok(Some(format!("coordinate {i} = {v} is negative")));
    }
    let total: f64 = x.iter().sum();
    let r = m.full_rank() as f64;
    if (total - r).abs() > size.max(1) as f64 * tol {
        return Ok(Some(format!("x([m]) = {total} differs from rank {r}")));
    }
    let f = sfm::RankSlack::new(m, x);
    let (set, value) = sfm::minimize_auto(&f, sfm::WOLFE_EPS)?;
    if value < -tol {
        return Ok(Some(format!(
            "rank constraint violated by {:e} on set {:?}",
            -value, set
        )));
    }
    Ok(None)
}
