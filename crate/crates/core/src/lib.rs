//! Predictability of low-dimensional nonlinear flows.
//!
//! The crate measures how finite initial errors grow under the full
//! nonlinear dynamics (the nonlinear local Lyapunov exponent and the mean
//! relative growth of initial error up to its saturation), compares that
//! against the tangent-linear picture (finite-time and global Lyapunov
//! exponents), and checks attractor bifurcation numerically on a cubic toy
//! system.
//!
//! Ensemble computations run on the ambient rayon thread pool and are
//! bit-identical for any pool size.

pub mod bifurcation;
pub mod error;
pub mod integrate;
pub mod model;
pub mod nlle;
pub mod rng;
pub mod state;
pub mod tangent;

pub use bifurcation::{
    classify_fixed_point, find_fixed_points, pes_scan, verify_pre_bifurcation, verify_toy_attractor,
    BifurcationReport, Eigenvalue, FixedPointRecord, FixedPointSearch, PesRow, PesScan, Stability,
};
pub use error::{Error, Result};
pub use integrate::{
    integrate_trajectory, sample_attractor, sample_attractor_seeded, AttractorSample, Trajectory,
};
pub use model::Model;
pub use nlle::{
    detect_saturation, gsr_orthogonalize, local_mean_nlle, mean_nlle_curve, nlle_single,
    nlle_spectrum, nonlinear_propagate, saturation_and_limit, volume_m, Directions,
    LocalNlleRecord, NlleCurve, NlleSpectrumResult, PerturbationSpec, Saturation,
    SaturationParams,
};
pub use state::StateVector;
pub use tangent::{benettin_spectrum, finite_time_lle, tangent_propagate, LyapunovSpectrum};

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool construction")
        .install(f)
}

#[cfg(test)]
mod tests {
    #[test]
    fn float_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = super::format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
