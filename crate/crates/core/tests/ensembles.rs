use nlle_core::nlle::geometric_then_linear;
use nlle_core::{
    benettin_spectrum, local_mean_nlle, mean_nlle_curve, nlle_single, nlle_spectrum, sample_attractor,
    sample_attractor_seeded, with_workers, Model, PerturbationSpec, SaturationParams, StateVector,
};

fn sv(v: &[f64]) -> StateVector {
    StateVector::new(v.to_vec()).unwrap()
}

fn lorenz() -> Model {
    Model::lorenz63_default()
}

#[test]
fn curve_and_spectrum_ignore_worker_count() {
    let m = lorenz();
    let sample = sample_attractor_seeded(&m, &sv(&[1.0, 1.0, 1.0]), 50.0, 12, 0.5, 0.01, 3, 1.0).unwrap();
    let pert = PerturbationSpec::random(1e-5, 3, 3);
    let grid = geometric_then_linear(0.05, 10.0, 30).unwrap();
    let curves: Vec<_> = [1, 4, 16]
        .iter()
        .map(|&w| with_workers(w, || mean_nlle_curve(&m, &sample, &pert, &grid, 0.01).unwrap()))
        .collect();
    let spectra: Vec<_> = [1, 4, 16]
        .iter()
        .map(|&w| with_workers(w, || nlle_spectrum(&m, &sample, &pert, 2.0, 0.1, 3, 0.01).unwrap()))
        .collect();
    for i in 1..3 {
        assert_eq!(curves[0], curves[i]);
        assert_eq!(spectra[0], spectra[i]);
    }
}

#[test]
fn lorenz_curve_shape() {
    let m = lorenz();
    let x = sv(&[1.0, 1.0, 1.0]);
    let gle = benettin_spectrum(&m, &x, 2000.0, 0.5, 1, 0.01).unwrap().exponents[0];
    let sample = sample_attractor_seeded(&m, &x, 100.0, 400, 0.5, 0.01, 21, 1.0).unwrap();
    let grid = geometric_then_linear(0.1, 25.0, 100).unwrap();
    let eps = 1e-5;
    let c = mean_nlle_curve(&m, &sample, &PerturbationSpec::random(eps, 25, 21), &grid, 0.01).unwrap();
    assert_eq!(c.ensemble_size, 10_000);

    // exponential regime: close to the global exponent
    let early: Vec<f64> = grid
        .iter()
        .zip(&c.mean_nlle)
        .filter(|(t, _)| (2.0..=10.0).contains(*t))
        .map(|(_, l)| *l)
        .collect();
    let mean = early.iter().sum::<f64>() / early.len() as f64;
    assert!((mean - gle).abs() <= 0.1, "plateau {mean} vs {gle}");

    // saturation: ln E flattens
    let k = grid.len();
    let slope = (c.rgie[k - 1].ln() - c.rgie[k - 12].ln()) / (grid[k - 1] - grid[k - 12]);
    assert!(slope.abs() < 0.1 * gle, "late slope {slope}");

    let d = sample.diameter();
    let max = c.rgie.iter().copied().fold(0.0, f64::max);
    assert!(max <= 2.0 * d / eps * (1.0 + 1e-6));
    for (l, (t, e)) in c.mean_nlle.iter().zip(grid.iter().zip(&c.rgie)) {
        assert!(((l * t).exp() - e).abs() <= 1e-12 * e);
    }
}

#[test]
fn infinitesimal_scale_invariance() {
    let m = lorenz();
    let s = sample_attractor(&m, &sv(&[1.0, 1.0, 1.0]), 100.0, 20, 0.7, 0.01).unwrap();
    let d = [0.6, -0.48, 0.64];
    for x0 in &s.points {
        for tau in [0.25, 1.0] {
            let at = |eps: f64| {
                let delta: Vec<f64> = d.iter().map(|v| v * eps).collect();
                nlle_single(&m, x0, &delta, tau, 0.01).unwrap()
            };
            let (a, b) = (at(1e-7), at(1e-8));
            assert!((a - b).abs() <= 1e-4, "{a} vs {b} at tau {tau}");
        }
    }
}

#[test]
fn local_predictability_depends_on_state() {
    let m = lorenz();
    let s = sample_attractor(&m, &sv(&[1.0, 1.0, 1.0]), 100.0, 2, 0.5, 0.01).unwrap();
    let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1).collect();
    let params = SaturationParams { window: 1, ..Default::default() };
    let run = |x: &StateVector, seed| local_mean_nlle(&m, x, 1e-5, 500, &grid, &params, 0.01, seed).unwrap();
    let (a1, a2) = (run(&s.points[0], 100), run(&s.points[0], 200));
    let (b1, b2) = (run(&s.points[1], 300), run(&s.points[1], 400));
    // standard error per point from two disjoint-seed replicates
    let separated = (0..grid.len()).any(|k| {
        let var = |r1: &[f64], r2: &[f64]| (r1[k] - r2[k]).powi(2) / 2.0;
        let se_a = var(&a1.local_mean_nlle, &a2.local_mean_nlle).sqrt().max(a1.stderr[k]);
        let se_b = var(&b1.local_mean_nlle, &b2.local_mean_nlle).sqrt().max(b1.stderr[k]);
        (a1.local_mean_nlle[k] - b1.local_mean_nlle[k]).abs() > 3.0 * (se_a * se_a + se_b * se_b).sqrt()
    });
    assert!(separated);
}
