//! Dependent rounding over matroid base polytopes.
//!
//! The crate implements pipage rounding (randomized and derandomized) for
//! matroids given by an independence oracle, together with pessimistic
//! estimators for three kinds of concentration:
//!
//! * a scalar Chernoff bound on `wᵀX`,
//! * a lower tail for a monotone submodular function `f(X)`,
//! * a matrix Chernoff bound on `λmax(Σ XᵢMᵢ)`.
//!
//! Each estimator is concave along every swap direction `e_a − e_b`, so
//! deterministic pipage rounding that never increases it lands on a matroid
//! base that avoids the bad event whenever the estimator starts below one.
//!
//! On top of this sit four applications in [`apps`]: rounding a
//! semidefinite constraint `Σ xᵢAᵢ ⪯ B` over a matroid, extracting a nearly
//! orthonormal basis from an isotropic family, building spectrally-thin
//! spanning trees, and column subset selection. [`liebcheck`] holds numeric
//! probes of the trace-exponential concavity that underpins the matrix
//! estimator.
//!
//! ```
//! use pipage::matroid::Matroid;
//! use pipage::rounding::{pipage_randomized, PipageConfig};
//! use rand::SeedableRng;
//!
//! // Spanning trees of a triangle, starting from the uniform point.
//! let m = Matroid::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let x0 = vec![2.0 / 3.0; 3];
//! let (base, traj) = pipage_randomized(&m, &x0, &mut rng, &PipageConfig::default()).unwrap();
//! assert_eq!(base.len(), 2);
//! assert!(traj.end.iter().all(|&v| v == 0.0 || v == 1.0));
//! ```

pub mod apps;
pub mod error;
pub mod estimators;
pub mod graphs;
pub mod io;
pub mod liebcheck;
pub mod matroid;
pub mod report;
pub mod rounding;
pub mod sfm;
pub mod symmat;
pub mod verify;

pub use error::{Error, Result};
pub use symmat::SymMatrix;

/// Numerical tolerances shared by the rounding loop and the applications.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub pd_tol: f64,
    pub psd_tol: f64,
    pub rank_tol: f64,
    pub eig_tol: f64,
    /// Slack for coordinates of a fractional point and for polytope
    /// constraints.
    pub coord_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pd_tol: symmat::PD_TOL,
            psd_tol: symmat::PSD_TOL,
            rank_tol: symmat::RANK_TOL,
            eig_tol: symmat::EIG_TOL,
            coord_tol: 1e-9,
        }
    }
}
