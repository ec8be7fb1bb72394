use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::saturation::{detect_saturation, SaturationParams};
use super::{check_tau_grid, mean_and_stderr, nlle_on_grid, rgie_from, states_on_grid};
use crate::error::{Error, Result};
use crate::integrate::check_step;
use crate::model::Model;
use crate::rng::{member_rng, unit_vector};
use crate::state::{distance, StateVector};

/// Direction-only ensemble mean of the NLLE about one phase-space point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalNlleRecord {
    pub x0: StateVector,
    pub tau_grid: Vec<f64>,
    pub local_mean_nlle: Vec<f64>,
    /// `exp(local_mean_nlle * tau)`.
    pub lrgie: Vec<f64>,
    pub stderr: Vec<f64>,
    pub local_e_sat: Option<f64>,
    /// Absent when the LRGIE has not saturated within the grid.
    pub local_t_p: Option<f64>,
}

/// Averages the NLLE over `count` errors of size `epsilon` drawn uniformly
/// on the sphere about `x0`. Direction `j` uses the stream `(seed, j)`.
#[allow(clippy::too_many_arguments)]
pub fn local_mean_nlle(
    model: &Model,
    x0: &StateVector,
    epsilon: f64,
    count: usize,
    tau_grid: &[f64],
    saturation: &SaturationParams,
    step: f64,
    seed: u64,
) -> Result<LocalNlleRecord> {
    let n = model.dimension();
    if x0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.dim(),
        });
    }
    if count == 0 {
        return Err(Error::invalid("at least one perturbation is required"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    check_tau_grid(tau_grid)?;
    check_step(step)?;
    let base = states_on_grid(model, x0, tau_grid, step).map_err(|e| e.in_member(0, seed))?;
    let rows: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|j| {
            let d = unit_vector(&mut member_rng(seed, j as u64), n);
            let start: Vec<f64> = x0.iter().zip(&d).map(|(x, di)| x + epsilon * di).collect();
            nlle_on_grid(model, &base, &start, distance(&start, x0), tau_grid, step)
                .map_err(|e| e.in_member(j, seed))
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&rows, tau_grid.len());
    let lrgie = rgie_from(tau_grid, &mean);
    let sat = detect_saturation(tau_grid, &lrgie, saturation);
    let (local_e_sat, local_t_p) = match sat {
        Ok(s) => (Some(s.e_sat), Some(s.t_p)),
        Err(Error::SaturationNotReached { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(LocalNlleRecord {
        x0: x0.clone(),
        tau_grid: tau_grid.to_vec(),
        local_mean_nlle: mean,
        lrgie,
        stderr,
        local_e_sat,
        local_t_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn linear_is_state_independent() {
        let a = 0.2;
        let m = Model::linear_scalar(a);
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1).collect();
        for (x, eps, count) in [(1.0, 1e-3, 1), (-4.0, 1e-4, 7)] {
            let r = local_mean_nlle(&m, &sv(&[x]), eps, count, &grid, &SaturationParams::default(), 0.01, 3)
                .unwrap();
            assert!(r.local_mean_nlle.iter().all(|l| (l - a).abs() < 1e-9));
            // e^{0.2 tau} has no plateau on this grid
            assert_eq!(r.local_t_p, None);
        }
    }

    #[test]
    fn toy_node_local_mean() {
        let m = Model::toy_bifurcation(1.0);
        let grid = [0.5, 1.0];
        let params = SaturationParams { window: 1, ..Default::default() };
        let r = local_mean_nlle(&m, &sv(&[1.0, 1.0]), 1e-6, 16, &grid, &params, 0.01, 5).unwrap();
        assert!((r.local_mean_nlle[1] + 2.0).abs() < 1e-4);
        for ((t, l), e) in grid.iter().zip(&r.local_mean_nlle).zip(&r.lrgie) {
            assert!(((l * t).exp() - e).abs() <= 1e-12 * e);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = Model::toy_bifurcation(1.0);
        let p = SaturationParams::default();
        assert!(local_mean_nlle(&m, &sv(&[1.0, 1.0]), 0.0, 4, &[1.0], &p, 0.01, 0).is_err());
        assert!(local_mean_nlle(&m, &sv(&[1.0, 1.0]), 1e-3, 0, &[1.0], &p, 0.01, 0).is_err());
        assert!(local_mean_nlle(&m, &sv(&[1.0]), 1e-3, 4, &[1.0], &p, 0.01, 0).is_err());
    }
}
