use nlle_core::{gsr_orthogonalize, volume_m, Model, StateVector};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #[test]
    fn toy_drift_is_odd(lambda in -2.0..2.0f64, x in -3.0..3.0f64, y in -3.0..3.0f64, sx: bool, sy: bool) {
        let m = Model::toy_bifurcation(lambda);
        let s = [if sx { -1.0 } else { 1.0 }, if sy { -1.0 } else { 1.0 }];
        let f = m.eval_drift(&StateVector::new(vec![x, y]).unwrap()).unwrap();
        let g = m.eval_drift(&StateVector::new(vec![s[0] * x, s[1] * y]).unwrap()).unwrap();
        prop_assert_eq!(g[0], s[0] * f[0]);
        prop_assert_eq!(g[1], s[1] * f[1]);
    }

    #[test]
    fn gsr_orthogonal_and_volume_preserving(raw in prop::collection::vec(-1.0..1.0f64, 12), m in 1usize..=3) {
        let frame: Vec<Vec<f64>> = raw.chunks(4).take(m).map(|c| c.to_vec()).collect();
        let norms: Vec<f64> = frame.iter().map(|v| dot(v, v).sqrt()).collect();
        prop_assume!(norms.iter().all(|n| *n > 1e-3));
        let vin = volume_m(&frame);
        prop_assume!(vin > 1e-6 * norms.iter().product::<f64>());
        let out = gsr_orthogonalize(&frame).unwrap();
        for i in 0..out.len() {
            for j in 0..i {
                let scale = dot(&out[i], &out[i]).sqrt() * dot(&out[j], &out[j]).sqrt();
                prop_assert!(dot(&out[i], &out[j]).abs() <= 1e-10 * scale);
            }
        }
        let product: f64 = out.iter().map(|v| dot(v, v).sqrt()).product();
        prop_assert!((volume_m(&out) - vin).abs() <= 1e-10 * vin);
        prop_assert!((product - vin).abs() <= 1e-10 * vin);
    }
}
