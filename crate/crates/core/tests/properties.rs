use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pipage::estimators::{ChernoffEstimator, Estimator};
use pipage::graphs::{self, WeightedGraph};
use pipage::liebcheck::{means, t_inv, t_op};
use pipage::matroid::{base_membership, Matroid};
use pipage::report::fmt_real;
use pipage::rounding::{pipage_deterministic, pipage_randomized, PipageConfig};
use pipage::sfm::{max_step, minimize, minimize_brute, FnSubmodular};
use pipage::symmat::SymMatrix;
use pipage::verify;

/// A connected graph on `n` vertices: a random tree plus extra edges.
fn graph_strategy() -> impl Strategy<Value = WeightedGraph> {
    (3usize..9)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
            let extra = proptest::collection::vec((0..n, 0..n, 0.5f64..2.0), 0..2 * n);
            let weights = proptest::collection::vec(0.5f64..2.0, n - 1);
            (Just(n), parents, extra, weights)
        })
        .prop_map(|(n, parents, extra, weights)| {
            let mut edges: Vec<(usize, usize, f64)> = parents
                .iter()
                .enumerate()
                .map(|(i, &p)| (p, i + 1, weights[i]))
                .collect();
            for (u, v, w) in extra {
                let (u, v) = (u.min(v), u.max(v));
                if u != v && !edges.iter().any(|e| (e.0.min(e.1), e.0.max(e.1)) == (u, v)) {
                    edges.push((u, v, w));
                }
            }
            WeightedGraph::new(n, edges).unwrap()
        })
}

/// Uniform matroid `U(m, k)` with the interior point `x = k/m`.
fn uniform_instance() -> impl Strategy<Value = (Matroid, Vec<f64>)> {
    (2usize..9)
        .prop_flat_map(|m| (Just(m), 1..m))
        .prop_map(|(m, k)| (Matroid::uniform(m, k), vec![k as f64 / m as f64; m]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn randomized_rounding_ends_at_a_base((g, seed) in (graph_strategy(), any::<u64>())) {
        let m = g.matroid();
        let x0: Vec<f64> = g.effective_resistances().unwrap()
            .iter().zip(g.edges()).map(|(r, e)| (r * e.2).min(1.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (set, traj) = pipage_randomized(&m, &x0, &mut rng, &PipageConfig::default()).unwrap();
        prop_assert!(m.is_base(&set).unwrap());
        prop_assert!(traj.end.iter().all(|&v| v == 0.0 || v == 1.0));
        prop_assert!(traj.steps.len() <= x0.len() * x0.len());
        prop_assert_eq!(traj.support(), set);
    }

    #[test]
    fn deterministic_rounding_never_raises_the_estimator(
        (m, x0) in uniform_instance(),
        w in proptest::collection::vec(0.0f64..1.0, 8),
        factor in 1.1f64..3.0,
    ) {
        let w = w[..x0.len()].to_vec();
        let mu: f64 = w.iter().zip(&x0).map(|(a, b)| a * b).sum();
        let g = ChernoffEstimator::new(w, factor * mu.max(1e-3), factor.ln()).unwrap();
        let start = g.value(&x0).unwrap();
        let (set, traj) = pipage_deterministic(&m, &x0, &g, &PipageConfig::default()).unwrap();
        prop_assert!(m.is_base(&set).unwrap());
        let mut prev = start;
        for s in &traj.steps {
            let v = s.g.unwrap();
            prop_assert!(v <= prev + 1e-9, "{} then {}", prev, v);
            prev = v;
        }
    }

    #[test]
    fn resistances_sum_to_rank(g in graph_strategy()) {
        let total: f64 = g.effective_resistances().unwrap()
            .iter().zip(g.edges()).map(|(r, e)| r * e.2).sum();
        prop_assert!((total - (g.vertex_count() - 1) as f64).abs() <= 1e-9);
    }

    #[test]
    fn cut_thinness_never_exceeds_spectral(g in graph_strategy(), salt in any::<u64>()) {
        let weights: Vec<f64> = (0..g.edge_count())
            .map(|i| ((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt) as f64)
            .collect();
        let tree = g.matroid().greedy_base(&weights).unwrap();
        let cut = graphs::cut_thinness(&tree, &g).unwrap();
        let spectral = graphs::spectral_thinness(&tree, &g).unwrap();
        prop_assert!(cut <= spectral * (1.0 + 1e-9) + 1e-12, "cut {} spectral {}", cut, spectral);
    }

    #[test]
    fn convex_combinations_of_bases_are_in_the_polytope(
        g in graph_strategy(),
        mix in proptest::collection::vec(0.0f64..1.0, 3),
        salts in proptest::collection::vec(any::<u64>(), 3),
    ) {
        let m = g.matroid();
        let total: f64 = mix.iter().sum::<f64>() + 1e-3;
        let mut x = vec![0.0; g.edge_count()];
        for (c, salt) in mix.iter().zip(&salts) {
            let weights: Vec<f64> = (0..x.len())
                .map(|i| ((i as u64 + 1).wrapping_mul(*salt | 1) >> 11) as f64)
                .collect();
            for e in m.greedy_base(&weights).unwrap() {
                x[e] += (c + 1e-3 / 3.0) / total;
            }
        }
        prop_assert!(base_membership(&m, &x, 1e-9).unwrap());
    }

    #[test]
    fn wolfe_matches_enumeration(m in 1usize..11, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cover = verify::random_coverage(m, 6, &mut rng);
        let modular: Vec<f64> = (0..m).map(|i| ((seed >> (i % 60)) & 7) as f64 * 0.3 - 1.0).collect();
        let f = FnSubmodular::new(m, |s: &[usize]| cover(s) + s.iter().map(|&i| modular[i]).sum::<f64>());
        let (_, brute) = minimize_brute(&f).unwrap();
        let (set, wolfe) = minimize(&f, 1e-9).unwrap();
        prop_assert!((wolfe - brute).abs() <= 1e-6, "wolfe {} brute {}", wolfe, brute);
        let direct = cover(&set) + set.iter().map(|&i| modular[i]).sum::<f64>();
        prop_assert!((direct - wolfe).abs() <= 1e-9);
    }

    #[test]
    fn max_step_stops_on_the_boundary(g in graph_strategy(), pick in any::<(usize, usize)>()) {
        let m = g.matroid();
        let x: Vec<f64> = g.effective_resistances().unwrap()
            .iter().zip(g.edges()).map(|(r, e)| r * e.2).collect();
        let len = x.len();
        let (a, b) = (pick.0 % len, pick.1 % len);
        prop_assume!(a != b);
        let tol = 1e-9;
        let u = max_step(&m, &x, a, b, tol).unwrap();
        let moved = |t: f64| {
            let mut y = x.clone();
            y[a] += t;
            y[b] -= t;
            y
        };
        prop_assert!(base_membership(&m, &moved(u), tol).unwrap());
        if u < x[b] {
            prop_assert!(!base_membership(&m, &moved(u + 10.0 * tol), tol).unwrap());
        }
    }

    #[test]
    fn mean_chain_holds(x in 1e-6f64..1e3, y in 1e-6f64..1e3) {
        let (lm, agm) = means(x, y).unwrap();
        let scale = x.max(y).max(1.0) * 1e-12;
        prop_assert!((x * y).sqrt() <= lm + scale);
        prop_assert!(lm <= agm + scale);
        prop_assert!(agm <= 0.5 * (x + y) + scale);
    }

    #[test]
    fn integral_operator_round_trips(n in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = verify::random_pd(n, 0.1, 5.0, &mut rng);
        let y = verify::random_symmetric(n, 1.0, &mut rng);
        let back: SymMatrix = t_inv(&x, &t_op(&x, &y).unwrap()).unwrap();
        let err = back.as_slice().iter().zip(y.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8);
    }

    #[test]
    fn reals_round_trip_through_reports(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = fmt_real(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!(back == v || (back == 0.0 && v == 0.0));
        prop_assert!(!s.contains('e'));
    }
}
