//! Weighted graphs, Laplacians, effective resistances and thinness.

use crate::error::{Error, Result};
use crate::matroid::{Matroid, UnionFind};
use crate::symmat::{eig_sym, SymMatrix, RANK_TOL};

/// Largest vertex count accepted by [`cut_thinness`].
pub const CUT_BRUTE_LIMIT: usize = 24;

/// An undirected graph with positive edge weights. Parallel edges are kept.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for (i, &(u, v, w)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::OutOfRange {
                    element: u.max(v),
                    size: n,
                });
            }
            if u == v {
                return Err(Error::Input(format!("edge {i} is a self-loop at vertex {u}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Input(format!("edge {i} has weight {w}")));
            }
        }
        Ok(WeightedGraph { n, edges })
    }

    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, edges.iter().map(|&(u, v)| (u, v, 1.0)).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn endpoints(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(u, v, _)| (u, v)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.2).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut uf = UnionFind::new(self.n);
        let mut parts = self.n;
        for &(u, v, _) in &self.edges {
            if uf.union(u, v) {
                parts -= 1;
            }
        }
        parts == 1
    }

    /// The graphic matroid on this graph's edges.
    pub fn matroid(&self) -> Matroid {
        Matroid::graphic(self.n, self.endpoints()).expect("edges validated at construction")
    }

    /// Weighted Laplacian `Σ w_e (e_u − e_v)(e_u − e_v)ᵀ`.
    pub fn laplacian(&self) -> SymMatrix {
        edge_laplacian(self.n, self.edges.iter().copied())
    }

    /// Unweighted Laplacian of the edge subset `set`.
    pub fn subgraph_laplacian(&self, set: &[usize]) -> Result<SymMatrix> {
        self.check_subset(set)?;
        Ok(edge_laplacian(
            self.n,
            set.iter().map(|&i| (self.edges[i].0, self.edges[i].1, 1.0)),
        ))
    }

    fn check_subset(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&i| i >= self.edges.len()) {
            Some(&i) => Err(Error::OutOfRange {
                element: i,
                size: self.edges.len(),
            }),
            None => Ok(()),
        }
    }

    /// Columns of `W` with `WᵀL_GW = I` on the image of `L_G`, so that
    /// `W Wᵀ = L_G⁺`. Requires a connected graph; `W` has `n − 1` columns.
    pub fn whitening(&self) -> Result<Vec<Vec<f64>>> {
        if !self.is_connected() {
            return Err(Error::Input("graph is disconnected".into()));
        }
        let e = eig_sym(&self.laplacian())?;
        let cut = RANK_TOL * e.abs_max().max(1.0);
        Ok((0..self.n)
            .filter(|&k| e.values[k] > cut)
            .map(|k| {
                let s = e.values[k].sqrt();
                e.vector(k).iter().map(|q| q / s).collect()
            })
            .collect())
    }

    /// `Wᵀ(e_u − e_v)` for every edge, in the whitened coordinates of
    /// [`WeightedGraph::whitening`]. The squared norm is `R_e`.
    pub fn whitened_edges(&self) -> Result<Vec<Vec<f64>>> {
        let w = self.whitening()?;
        Ok(self
            .edges
            .iter()
            .map(|&(u, v, _)| w.iter().map(|col| col[u] - col[v]).collect())
            .collect())
    }

    /// `R_e = (e_u − e_v)ᵀ L_G⁺ (e_u − e_v)` per edge.
    pub fn effective_resistances(&self) -> Result<Vec<f64>> {
        Ok(self
            .whitened_edges()?
            .iter()
            .map(|b| b.iter().map(|t| t * t).sum())
            .collect())
    }

    /// Minimum weight of a cut (brute force, `n ≤ 24`).
    pub fn min_cut(&self) -> Result<f64> {
        let mut best = f64::INFINITY;
        sweep_cuts(self, &[], |_, g| best = best.min(g))?;
        Ok(best)
    }
}

fn edge_laplacian(n: usize, edges: impl Iterator<Item = (usize, usize, f64)>) -> SymMatrix {
    let mut l = SymMatrix::zeros(n);
    for (u, v, w) in edges {
        l.set(u, u, l.get(u, u) + w);
        l.set(v, v, l.get(v, v) + w);
        l.set(u, v, l.get(u, v) - w);
    }
    l
}

/// Complete graph `K_n`, unit weights.
pub fn complete(n: usize) -> WeightedGraph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v, 1.0))).collect();
    WeightedGraph { n, edges }
}

/// Hypercube `Q_d` on `2^d` vertices, unit weights.
pub fn hypercube(d: usize) -> WeightedGraph {
    let n = 1usize << d;
    let edges = (0..n)
        .flat_map(|u| (0..d).map(move |b| (u, u ^ (1 << b))))
        .filter(|&(u, v)| u < v)
        .map(|(u, v)| (u, v, 1.0))
        .collect();
    WeightedGraph { n, edges }
}

/// Path `0 − 1 − … − (n−1)`.
pub fn path(n: usize) -> WeightedGraph {
    let edges = (1..n).map(|v| (v - 1, v, 1.0)).collect();
    WeightedGraph { n, edges }
}

/// Star with center 0.
pub fn star(n: usize) -> WeightedGraph {
    let edges = (1..n).map(|v| (0, v, 1.0)).collect();
    WeightedGraph { n, edges }
}

/// Cycle on `n ≥ 3` vertices.
pub fn cycle(n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::Input(format!("a cycle needs 3 vertices, got {n}")));
    }
    let edges = (0..n).map(|v| (v, (v + 1) % n, 1.0)).collect();
    Ok(WeightedGraph { n, edges })
}

/// Checks that `set` is a connected spanning edge subset of `g`.
fn check_spanning(g: &WeightedGraph, set: &[usize]) -> Result<()> {
    g.check_subset(set)?;
    let mut uf = UnionFind::new(g.n);
    let mut parts = g.n;
    for &i in set {
        let (u, v, _) = g.edges[i];
        if uf.union(u, v) {
            parts -= 1;
        }
    }
    if parts > 1 {
        return Err(Error::Input(format!(
            "edge set leaves {parts} components; it must span the graph"
        )));
    }
    Ok(())
}

/// Least `ε` with `L_T ⪯ ε·L_G`, where `L_T` is the unweighted Laplacian
/// of the edge subset `tree`.
pub fn spectral_thinness(tree: &[usize], g: &WeightedGraph) -> Result<f64> {
    check_spanning(g, tree)?;
    let w = g.whitening()?;
    let lt = g.subgraph_laplacian(tree)?;
    Ok(eig_sym(&lt.congruence(&w))?.max())
}

/// Visits every cut `δ(U)` with `U` a nonempty proper vertex subset not
/// containing the last vertex, in Gray-code order, passing the number of
/// `marked` edges crossing it and its total weight.
fn sweep_cuts(g: &WeightedGraph, marked: &[usize], mut visit: impl FnMut(f64, f64)) -> Result<()> {
    let n = g.n;
    if n > CUT_BRUTE_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: CUT_BRUTE_LIMIT,
        });
    }
    if n < 2 {
        return Ok(());
    }
    let mut counted = vec![0.0; g.edges.len()];
    for &i in marked {
        counted[i] += 1.0;
    }
    let mut adj: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n];
    for (i, &(u, v, w)) in g.edges.iter().enumerate() {
        adj[u].push((v, w, counted[i]));
        adj[v].push((u, w, counted[i]));
    }
    let mut side = vec![false; n];
    let (mut cut_t, mut cut_g) = (0.0, 0.0);
    for step in 1u64..(1u64 << (n - 1)) {
        let v = step.trailing_zeros() as usize;
        side[v] = !side[v];
        for &(u, w, t) in &adj[v] {
            let sign = if side[u] != side[v] { 1.0 } else { -1.0 };
            cut_g += sign * w;
            cut_t += sign * t;
        }
        visit(cut_t, cut_g);
    }
    Ok(())
}

/// `max_U |δ_T(U)| / w(δ_G(U))` over nonempty proper `U`, by enumeration.
/// Tree edges count once each; the denominator uses `G`'s weights.
pub fn cut_thinness(tree: &[usize], g: &WeightedGraph) -> Result<f64> {
    g.check_subset(tree)?;
    let mut worst = 0.0f64;
    let mut disconnected = false;
    sweep_cuts(g, tree, |t, w| {
        if w <= 1e-12 {
            disconnected = true;
        } else {
            worst = worst.max(t / w);
        }
    })?;
    if disconnected {
        return Err(Error::Input("graph is disconnected".into()));
    }
    Ok(worst)
}

/// `zᵀ L z` for the Laplacian of `edges`, without forming it.
pub fn laplacian_quadratic(edges: impl IntoIterator<Item = (usize, usize, f64)>, z: &[f64]) -> f64 {
    edges.into_iter().map(|(u, v, w)| w * (z[u] - z[v]).powi(2)).sum()
}

/// `zᵀL_T z / zᵀL_G z` with `L_T` the unweighted Laplacian of `tree`.
pub fn rayleigh_quotient(tree: &[usize], g: &WeightedGraph, z: &[f64]) -> Result<f64> {
    g.check_subset(tree)?;
    if z.len() != g.n {
        return Err(Error::DimensionMismatch {
            expected: g.n,
            found: z.len(),
        });
    }
    let num = laplacian_quadratic(tree.iter().map(|&i| (g.edges[i].0, g.edges[i].1, 1.0)), z);
    let den = laplacian_quadratic(g.edges.iter().copied(), z);
    if den <= 0.0 {
        return Err(Error::Input("test vector is constant on every component".into()));
    }
    Ok(num / den)
}

fn check_bp_size(n: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(4) {
        return Err(Error::Input(format!("n = {n} must be a positive multiple of 4")));
    }
    Ok(())
}

/// Two `n/2`-cycles joined by a perfect matching: cycle edges weigh `k/2`,
/// matching edges `2k/n`. Vertex `i` of the first cycle is `i`, of the
/// second `n/2 + i`. Edges come in the order first cycle, second cycle,
/// matching, with cycle edge `j` joining `j` and `j + 1 mod n/2`.
pub fn boyd_pulleyblank_graph(n: usize, k: f64) -> Result<WeightedGraph> {
    check_bp_size(n)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Input(format!("k = {k} must be positive")));
    }
    let h = n / 2;
    let wc = k / 2.0;
    let wm = 2.0 * k / n as f64;
    let mut edges = Vec::with_capacity(n + h);
    for off in [0, h] {
        edges.extend((0..h).map(|j| (off + j, off + (j + 1) % h, wc)));
    }
    edges.extend((0..h).map(|j| (j, h + j, wm)));
    Ok(WeightedGraph { n, edges })
}

/// `z_i = c^{|n/4 − i|}` (1-based `i`) on the first cycle and 0 on the
/// second, with `c = 1 − n^{−1/2}`.
pub fn bp_test_vector(n: usize) -> Result<Vec<f64>> {
    check_bp_size(n)?;
    let c = 1.0 - (n as f64).powf(-0.5);
    let q = (n / 4) as i64;
    Ok((0..n)
        .map(|j| {
            if j < n / 2 {
                c.powi((q - (j as i64 + 1)).abs() as i32)
            } else {
                0.0
            }
        })
        .collect())
}

/// A spanning tree of [`boyd_pulleyblank_graph`] using a single matching
/// edge, the one at the peak of [`bp_test_vector`]: each cycle minus its
/// closing edge, plus matching edge `n/4 − 1`. Returns edge indices.
pub fn bp_single_matching_tree(n: usize) -> Result<Vec<usize>> {
    check_bp_size(n)?;
    let h = n / 2;
    let mut tree: Vec<usize> = (0..h - 1).chain(h..2 * h - 1).collect();
    tree.push(2 * h + n / 4 - 1);
    Ok(tree)
}
