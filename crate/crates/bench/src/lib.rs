//! Shared fixtures for the benchmarks.

use nlle_core::{sample_attractor, AttractorSample, Model, StateVector};

pub fn lorenz() -> Model {
    Model::lorenz63_default()
}

/// `count` Lorenz-63 attractor points after a 50-unit spin-up.
pub fn lorenz_sample(count: usize) -> AttractorSample {
    let x = StateVector::new(vec![1.0, 1.0, 1.0]).unwrap();
    sample_attractor(&lorenz(), &x, 50.0, count, 0.5, 0.01).unwrap()
}
