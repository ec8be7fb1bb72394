//! Nonlinear error growth: the nonlinear local Lyapunov exponent (NLLE),
//! its ensemble means, the relative growth of initial error (RGIE) and its
//! saturation, NLLE spectra from volume growth, and local predictability.
//!
//! Errors are always measured as differences between a base trajectory and
//! a perturbed trajectory integrated on the identical RK4 grid, never
//! through the tangent linear model.

pub mod gsr;
mod local;
mod saturation;
mod spectrum;

pub use gsr::{gsr_orthogonalize, volume_m};
pub use local::{local_mean_nlle, LocalNlleRecord};
pub use saturation::{detect_saturation, saturation_and_limit, Saturation, SaturationParams};
pub use spectrum::{nlle_spectrum, NlleSpectrumResult, SpectrumDiagnostics};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{check_step, AttractorSample, Rk4};
use crate::model::Model;
use crate::rng::{member_rng, unit_vector};
use crate::state::{distance, norm, StateVector};

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_DIRECTIONS_PER_POINT: usize = 25;
pub const DEFAULT_SAMPLE_COUNT: usize = 400;
pub const DEFAULT_TAU_START: f64 = 0.05;
pub const DEFAULT_TAU_END: f64 = 30.0;
pub const DEFAULT_TAU_POINTS: usize = 120;

/// How initial error directions are chosen for each base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Directions {
    /// `n` directions drawn uniformly on the unit sphere per base point.
    Random(usize),
    /// The same unit directions at every base point.
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub directions: Directions,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn random(epsilon: f64, per_point: usize, seed: u64) -> Self {
        PerturbationSpec {
            epsilon,
            directions: Directions::Random(per_point),
            seed,
        }
    }

    pub fn explicit(epsilon: f64, directions: Vec<Vec<f64>>) -> Self {
        PerturbationSpec {
            epsilon,
            directions: Directions::Explicit(directions),
            seed: 0,
        }
    }

    pub fn per_point(&self) -> usize {
        match &self.directions {
            Directions::Random(n) => *n,
            Directions::Explicit(d) => d.len(),
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        match &self.directions {
            Directions::Random(0) => Err(Error::invalid("at least one direction per point")),
            Directions::Random(_) => Ok(()),
            Directions::Explicit(dirs) => {
                if dirs.is_empty() {
                    return Err(Error::invalid("at least one explicit direction"));
                }
                for d in dirs {
                    if d.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            actual: d.len(),
                        });
                    }
                    if (norm(d) - 1.0).abs() > 1e-12 {
                        return Err(Error::invalid("explicit directions must have unit norm"));
                    }
                }
                Ok(())
            }
        }
    }

    /// Unit direction for direction slot `j` of global member `member`.
    pub(crate) fn direction(&self, member: usize, j: usize, n: usize) -> Vec<f64> {
        match &self.directions {
            Directions::Random(_) => unit_vector(&mut member_rng(self.seed, member as u64), n),
            Directions::Explicit(d) => d[j].clone(),
        }
    }
}

/// Ensemble-mean NLLE and RGIE on a tau grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlleCurve {
    pub tau_grid: Vec<f64>,
    pub mean_nlle: Vec<f64>,
    /// `exp(mean_nlle * tau)`.
    pub rgie: Vec<f64>,
    /// Standard error of `mean_nlle` over ensemble members.
    pub stderr: Vec<f64>,
    pub e_sat: Option<f64>,
    pub t_p: Option<f64>,
    pub ensemble_size: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl NlleCurve {
    /// Builds a curve from mean NLLE values, filling the RGIE identity.
    pub fn from_mean(tau_grid: Vec<f64>, mean_nlle: Vec<f64>, stderr: Vec<f64>) -> Self {
        let rgie = rgie_from(&tau_grid, &mean_nlle);
        NlleCurve {
            tau_grid,
            mean_nlle,
            rgie,
            stderr,
            e_sat: None,
            t_p: None,
            ensemble_size: 0,
            epsilon: 0.0,
            seed: 0,
        }
    }

    /// Builds a curve directly from RGIE values (mean NLLE = ln(E)/tau).
    pub fn from_rgie(tau_grid: Vec<f64>, rgie: Vec<f64>) -> Self {
        let mean: Vec<f64> = tau_grid.iter().zip(&rgie).map(|(t, e)| e.ln() / t).collect();
        let k = tau_grid.len();
        Self::from_mean(tau_grid, mean, vec![0.0; k])
    }
}

pub(crate) fn rgie_from(tau: &[f64], mean: &[f64]) -> Vec<f64> {
    tau.iter().zip(mean).map(|(t, l)| (l * t).exp()).collect()
}

pub(crate) fn check_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::invalid("tau grid is empty"));
    }
    if !tau_grid.iter().all(|t| t.is_finite() && *t > 0.0) {
        return Err(Error::invalid("tau grid values must be positive and finite"));
    }
    if !tau_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("tau grid must be strictly increasing"));
    }
    Ok(())
}

/// Geometric spacing from `start` to 1, then linear spacing to `end`, with
/// one sixth of the points in the geometric part. Falls back to linear
/// spacing when 1 does not lie strictly inside `(start, end)`.
pub fn geometric_then_linear(start: f64, end: f64, points: usize) -> Result<Vec<f64>> {
    if !(start.is_finite() && end.is_finite() && start > 0.0 && end > start) {
        return Err(Error::invalid(format!(
            "tau grid needs 0 < start < end, got [{start}, {end}]"
        )));
    }
    if points < 2 {
        return Err(Error::invalid("tau grid needs at least 2 points"));
    }
    let linear = |a: f64, b: f64, count: usize, skip_first: bool| -> Vec<f64> {
        let (offset, denom) = if skip_first {
            (1, count)
        } else {
            (0, count - 1)
        };
        (0..count)
            .map(|i| {
                let k = i + offset;
                if k == denom {
                    b
                } else {
                    a + (b - a) * k as f64 / denom as f64
                }
            })
            .collect()
    };
    let pivot = 1.0;
    let n_geo = (points / 6).max(2);
    if !(start < pivot && pivot < end) || points < n_geo + 1 {
        return Ok(linear(start, end, points, false));
    }
    let ratio = pivot / start;
    let mut grid: Vec<f64> = (0..n_geo)
        .map(|i| {
            if i + 1 == n_geo {
                pivot
            } else {
                start * ratio.powf(i as f64 / (n_geo - 1) as f64)
            }
        })
        .collect();
    grid.extend(linear(pivot, end, points - n_geo, true));
    Ok(grid)
}

/// Default tau grid: 120 points over [0.05, 30].
pub fn default_tau_grid() -> Vec<f64> {
    geometric_then_linear(DEFAULT_TAU_START, DEFAULT_TAU_END, DEFAULT_TAU_POINTS)
        .expect("default grid parameters are valid")
}

fn check_pair_inputs(model: &Model, x0: &StateVector, delta0: &[f64], tau: f64, step: f64) -> Result<()> {
    let n = model.dimension();
    for len in [x0.dim(), delta0.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    if !delta0.iter().chain(x0.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite { what: "initial state or perturbation" });
    }
    if delta0.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroPerturbation);
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    check_step(step)
}

/// Error at `x0 + tau` produced by the full nonlinear flow:
/// the endpoint difference of the perturbed and base trajectories.
pub fn nonlinear_propagate(
    model: &Model,
    x0: &StateVector,
    delta0: &[f64],
    tau: f64,
    step: f64,
) -> Result<Vec<f64>> {
    check_pair_inputs(model, x0, delta0, tau, step)?;
    let mut rk = Rk4::new(model.dimension());
    let mut base = x0.to_vec();
    let mut pert: Vec<f64> = x0.iter().zip(delta0).map(|(x, d)| x + d).collect();
    rk.advance(model, &mut base, 0.0, tau, step)?;
    rk.advance(model, &mut pert, 0.0, tau, step)?;
    Ok(pert.iter().zip(&base).map(|(p, b)| p - b).collect())
}

/// `(1/tau) ln(|delta(tau)| / |delta0|)` with `delta(tau)` from
/// [`nonlinear_propagate`]. `|delta0|` is measured as represented after
/// adding it to `x0`.
pub fn nlle_single(
    model: &Model,
    x0: &StateVector,
    delta0: &[f64],
    tau: f64,
    step: f64,
) -> Result<f64> {
    let delta = nonlinear_propagate(model, x0, delta0, tau, step)?;
    Ok((norm(&delta) / represented_norm(x0, delta0)).ln() / tau)
}

/// Norm of `(x0 + delta0) - x0` as stored in floating point, the initial
/// error the two trajectories actually start from.
pub(crate) fn represented_norm(x0: &[f64], delta0: &[f64]) -> f64 {
    x0.iter()
        .zip(delta0)
        .map(|(x, d)| {
            let r = (x + d) - x;
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// States of the trajectory from `x0` at each tau grid time.
pub(crate) fn states_on_grid(
    model: &Model,
    x0: &[f64],
    tau_grid: &[f64],
    step: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut rk = Rk4::new(model.dimension());
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        rk.advance(model, &mut x, t, tau - t, step)?;
        t = tau;
        out.push(x.clone());
    }
    Ok(out)
}

/// NLLE at every grid time for one perturbed start against stored base states.
pub(crate) fn nlle_on_grid(
    model: &Model,
    base: &[Vec<f64>],
    start: &[f64],
    delta0_norm: f64,
    tau_grid: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    let mut rk = Rk4::new(model.dimension());
    let mut x = start.to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(tau_grid.len());
    for (&tau, b) in tau_grid.iter().zip(base) {
        rk.advance(model, &mut x, t, tau - t, step)?;
        t = tau;
        out.push((distance(&x, b) / delta0_norm).ln() / tau);
    }
    Ok(out)
}

/// Ordered mean and standard error over member rows.
pub(crate) fn mean_and_stderr(rows: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<f64>) {
    let count = rows.len() as f64;
    let mut sum = vec![0.0; k];
    for row in rows {
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let mut sq = vec![0.0; k];
    for row in rows {
        for ((s, v), m) in sq.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let stderr = if rows.len() > 1 {
        sq.iter()
            .map(|s| (s / (count - 1.0) / count).sqrt())
            .collect()
    } else {
        vec![0.0; k]
    };
    (mean, stderr)
}

/// Whole-ensemble mean NLLE over base points and perturbation directions.
///
/// Member `i * N + j` is direction `j` at base point `i`; its direction is
/// drawn from the stream `(pert.seed, member)`. Members are reduced in index
/// order, so the curve is bit-identical for any number of worker threads.
pub fn mean_nlle_curve(
    model: &Model,
    sample: &AttractorSample,
    pert: &PerturbationSpec,
    tau_grid: &[f64],
    step: f64,
) -> Result<NlleCurve> {
    let n = model.dimension();
    if sample.is_empty() {
        return Err(Error::invalid("attractor sample is empty"));
    }
    check_tau_grid(tau_grid)?;
    check_step(step)?;
    pert.validate(n)?;
    if let Some(p) = sample.points.iter().find(|p| p.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: p.dim(),
        });
    }
    let per_point = pert.per_point();
    let per_base: Vec<Vec<Vec<f64>>> = sample
        .points
        .par_iter()
        .enumerate()
        .map(|(i, x0)| -> Result<Vec<Vec<f64>>> {
            let first = i * per_point;
            let base = states_on_grid(model, x0, tau_grid, step)
                .map_err(|e| e.in_member(first, pert.seed))?;
            (0..per_point)
                .map(|j| {
                    let member = first + j;
                    let d = pert.direction(member, j, n);
                    let start: Vec<f64> =
                        x0.iter().zip(&d).map(|(x, di)| x + pert.epsilon * di).collect();
                    nlle_on_grid(model, &base, &start, distance(&start, x0), tau_grid, step)
                        .map_err(|e| e.in_member(member, pert.seed))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = per_base.into_iter().flatten().collect();
    let (mean, stderr) = mean_and_stderr(&rows, tau_grid.len());
    let mut curve = NlleCurve::from_mean(tau_grid.to_vec(), mean, stderr);
    curve.ensemble_size = rows.len();
    curve.epsilon = pert.epsilon;
    curve.seed = pert.seed;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn linear_propagator_is_exact() {
        let a = -0.4;
        let m = Model::linear_scalar(a);
        let d = nonlinear_propagate(&m, &sv(&[1.0]), &[0.25], 2.0, 1e-3).unwrap();
        assert!((d[0] - 0.25 * (a * 2.0f64).exp()).abs() < 1e-9);
        let m = Model::linear_scalar(0.5);
        for d0 in [1e-3, 0.7, -2.0] {
            assert!((nlle_single(&m, &sv(&[1.0]), &[d0], 3.0, 0.01).unwrap() - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn toy_node_propagator() {
        let m = Model::toy_bifurcation(1.0);
        let d = nonlinear_propagate(&m, &sv(&[1.0, 1.0]), &[1e-6, 0.0], 1.0, 0.01).unwrap();
        assert!((d[0] - 1e-6 * (-2.0f64).exp()).abs() < 1e-12);
        assert!(d[1].abs() < 1e-12);
        let l = nlle_single(&m, &sv(&[1.0, 1.0]), &[1e-8 / 2f64.sqrt(), -1e-8 / 2f64.sqrt()], 1.0, 0.01)
            .unwrap();
        assert!((l + 2.0).abs() < 1e-5);
    }

    #[test]
    fn pair_errors() {
        let m = Model::lorenz63_default();
        let x0 = sv(&[1.0, 1.0, 1.0]);
        assert!(matches!(
            nlle_single(&m, &x0, &[0.0; 3], 1.0, 0.01),
            Err(Error::ZeroPerturbation)
        ));
        assert!(nlle_single(&m, &x0, &[1e-3, 0.0, 0.0], 0.0, 0.01).is_err());
        assert!(nlle_single(&m, &x0, &[1e-3, 0.0], 1.0, 0.01).is_err());
        let blow = Model::linear_scalar(4.0);
        assert!(matches!(
            nonlinear_propagate(&blow, &sv(&[1.0]), &[1.0], 10.0, 0.01),
            Err(Error::TrajectoryEscape { .. })
        ));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_tau_grid();
        assert_eq!(g.len(), 120);
        assert_eq!(g[0], 0.05);
        assert_eq!(*g.last().unwrap(), 30.0);
        assert!(g.contains(&1.0));
        check_tau_grid(&g).unwrap();
        let lin = geometric_then_linear(2.0, 5.0, 4).unwrap();
        assert_eq!(lin, vec![2.0, 3.0, 4.0, 5.0]);
        assert!(geometric_then_linear(1.0, 0.5, 10).is_err());
    }

    #[test]
    fn tau_grid_validation() {
        assert!(check_tau_grid(&[]).is_err());
        assert!(check_tau_grid(&[0.0, 1.0]).is_err());
        assert!(check_tau_grid(&[1.0, 1.0]).is_err());
        assert!(check_tau_grid(&[0.5, 1.0]).is_ok());
    }

    #[test]
    fn linear_curve_is_flat() {
        let a = -0.3;
        let m = Model::linear_scalar(a);
        let sample = AttractorSample::from_points(vec![sv(&[1.0]), sv(&[-2.0]), sv(&[0.1])]);
        let pert = PerturbationSpec::random(1e-4, 3, 9);
        let grid = [0.1, 0.5, 1.0, 2.5];
        let c = mean_nlle_curve(&m, &sample, &pert, &grid, 0.01).unwrap();
        assert_eq!(c.ensemble_size, 9);
        for (l, e) in c.mean_nlle.iter().zip(&c.rgie) {
            assert!((l - a).abs() < 1e-9);
            assert!(e.is_finite());
        }
        for ((t, l), e) in grid.iter().zip(&c.mean_nlle).zip(&c.rgie) {
            assert!(((l * t).exp() - e).abs() <= 1e-12 * e);
        }
    }

    #[test]
    fn single_member_curve_matches_pointwise() {
        let m = Model::lorenz63_default();
        let x0 = sv(&[-3.1, -5.2, 17.9]);
        let dir = vec![0.6, 0.0, -0.8];
        let eps = 1e-4;
        let sample = AttractorSample::from_points(vec![x0.clone()]);
        let pert = PerturbationSpec::explicit(eps, vec![dir.clone()]);
        let grid = [0.25, 0.8, 1.3, 2.0];
        let c = mean_nlle_curve(&m, &sample, &pert, &grid, 0.01).unwrap();
        let d0: Vec<f64> = dir.iter().map(|d| d * eps).collect();
        for (tau, l) in grid.iter().zip(&c.mean_nlle) {
            let single = nlle_single(&m, &x0, &d0, *tau, 0.01).unwrap();
            assert!((single - l).abs() < 1e-9, "tau {tau}: {single} vs {l}");
        }
        assert_eq!(c.stderr, vec![0.0; 4]);
    }

    #[test]
    fn member_escape_names_member() {
        let m = Model::linear_scalar(3.0);
        let sample = AttractorSample::from_points(vec![sv(&[1.0])]);
        let pert = PerturbationSpec::random(1e-3, 2, 11);
        let err = mean_nlle_curve(&m, &sample, &pert, &[1.0, 20.0], 0.01).unwrap_err();
        assert!(matches!(err, Error::Member { member: 0, seed: 11, .. }), "{err:?}");
    }

    #[test]
    fn explicit_directions_must_be_unit() {
        let m = Model::toy_bifurcation(1.0);
        let sample = AttractorSample::from_points(vec![sv(&[1.0, 1.0])]);
        let pert = PerturbationSpec::explicit(1e-6, vec![vec![1.0, 1.0]]);
        assert!(mean_nlle_curve(&m, &sample, &pert, &[1.0], 0.01).is_err());
    }
}
