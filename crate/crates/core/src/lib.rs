//! Numerical laboratory for strongly convex billiards in Lazutkin coordinates.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] builds a closed strictly convex curve from a Fourier series of
//!   its radius of curvature in the tangent angle.
//! * [`dynamics`] iterates the billiard map in `(s, φ)` coordinates.
//! * [`lazutkin`] implements the Lazutkin change of coordinates and the
//!   conjugated map.
//! * [`expansion`] evaluates closed-form expansion coefficients of the map near
//!   the boundary, both in `(s, φ)` and in Lazutkin coordinates.
//! * [`fitting`] measures the same coefficients from the simulated map.
//! * [`rigidity`] reconstructs curvature profiles from coefficient profiles and
//!   decides whether two profiles come from the same table.
//! * [`conjugacy`] computes the boundary jet of the transition map between two
//!   tables and solves the jet equations that a conjugacy has to satisfy.
//!
//! Grid work (coefficient profiles, weight validation) runs on rayon when the
//! `parallel` feature is enabled and the caller asks for [`Execution::Parallel`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod conjugacy;
pub mod dynamics;
pub mod error;
pub mod expansion;
pub mod fitting;
pub mod geometry;
pub mod io;
pub mod lazutkin;
pub mod numeric;
pub mod rigidity;
pub mod spectral;


pub use rigidity::{
    find_annihilating_combination, k_invariant, match_profiles, reconstruct_curvature,
    Combination, CurvatureProfile, MatchResult, ReconstructionRoute,
};
pub use conjugacy::{solve_jet_system, transition_jet, verify_tangency, ConjugacyJet};
pub use dynamics::{billiard_step, orbit, PhasePoint};
pub use error::{Error, Result};
pub use expansion::{
    ab_coefficients, lazutkin_coefficients, s_coefficients, x_derivatives, LazutkinCoefficients,
    LazutkinWeights,
};
pub use fitting::{
    coefficient_profile, differentiate_profile, fit_map_coefficients, CoeffProfile, FitConfig,
    FittedCoeffs, ProfileSource,
};
pub use geometry::{build_domain, BoundaryCurve, FourierCurvatureSpec, Harmonic};
pub use lazutkin::{from_lazutkin, lazutkin_step, to_lazutkin, LazutkinPoint};

/// How grid-shaped work is scheduled.
///
/// Results never depend on the choice: every parallel map collects in grid
/// order. Without the `parallel` feature both variants run sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Evaluate `f(0..n)` and collect in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }
}
