use serde::{Deserialize, Serialize};

use super::NlleCurve;
use crate::error::{Error, Result};

/// Plateau detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationParams {
    /// Minimum number of trailing grid points in the plateau.
    pub window: usize,
    /// Maximum relative spread `(max - min) / min` of the RGIE on the plateau.
    pub slope_tol: f64,
    /// The predictability limit is the first time the RGIE reaches
    /// `(1 - theta) * e_sat`.
    pub theta: f64,
}

impl Default for SaturationParams {
    fn default() -> Self {
        SaturationParams {
            window: 10,
            slope_tol: 0.02,
            theta: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub e_sat: f64,
    pub t_p: f64,
    /// Index of the first grid point of the trailing plateau.
    pub plateau_start: usize,
}

/// Finds the trailing plateau of `rgie` and the first time it is reached.
///
/// The plateau is the longest trailing run whose relative spread stays
/// within `slope_tol`; it must cover at least `window` points.
pub fn detect_saturation(tau: &[f64], rgie: &[f64], params: &SaturationParams) -> Result<Saturation> {
    let k = tau.len();
    if rgie.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: rgie.len(),
        });
    }
    if params.window == 0 || k < 2 * params.window {
        return Err(Error::invalid(format!(
            "need at least {} grid points for window {}, got {k}",
            2 * params.window,
            params.window
        )));
    }
    if !(params.theta > 0.0 && params.theta < 1.0) {
        return Err(Error::invalid(format!("theta must lie in (0, 1), got {}", params.theta)));
    }
    if !(params.slope_tol.is_finite() && params.slope_tol >= 0.0) {
        return Err(Error::invalid("slope_tol must be non-negative"));
    }
    if !rgie.iter().all(|e| e.is_finite() && *e > 0.0) {
        return Err(Error::NonFinite { what: "rgie" });
    }

    let mut start = k - 1;
    let (mut lo, mut hi) = (rgie[start], rgie[start]);
    while start > 0 {
        let e = rgie[start - 1];
        let (l, h) = (lo.min(e), hi.max(e));
        if (h - l) / l > params.slope_tol {
            break;
        }
        lo = l;
        hi = h;
        start -= 1;
    }
    let run = k - start;
    if run < params.window {
        return Err(Error::SaturationNotReached {
            run,
            window: params.window,
        });
    }
    let e_sat = rgie[start..].iter().sum::<f64>() / run as f64;
    let level = (1.0 - params.theta) * e_sat;
    let idx = rgie
        .iter()
        .position(|&e| e >= level)
        .expect("the plateau itself reaches (1 - theta) of its mean");
    Ok(Saturation {
        e_sat,
        t_p: tau[idx],
        plateau_start: start,
    })
}

/// Detects saturation on `curve` and records `e_sat` and `t_p` into it.
pub fn saturation_and_limit(curve: &mut NlleCurve, params: &SaturationParams) -> Result<(f64, f64)> {
    let sat = detect_saturation(&curve.tau_grid, &curve.rgie, params)?;
    curve.e_sat = Some(sat.e_sat);
    curve.t_p = Some(sat.t_p);
    Ok((sat.e_sat, sat.t_p))
}
