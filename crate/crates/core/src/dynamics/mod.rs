//! ODE machinery: the one-dimensional warp equation, geodesics in charts of
//! any signature and completeness probes for warped products.

mod geodesic;
mod probe;
mod warp;

pub use geodesic::{geodesic, GeodesicOptions, GeodesicResult, GeodesicState, GeodesicStatus, TrajectoryRow};
pub use probe::{completeness_probe, AffineFit, CompletenessReport, INCOMPLETE_VERDICT};
pub use warp::{solve_warp_ode, WarpFamily, WarpODEProblem, WarpSample, WarpSolution};

#[cfg(test)]
mod tests;
