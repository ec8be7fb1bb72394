//! Fixed-step classical Runge-Kutta integration.
//!
//! All integrations split a duration into uniform steps of size `step`
//! followed by one shortened step that lands exactly on the end time. Base
//! and perturbed runs therefore share an identical time grid.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::rng;
use crate::state::{norm, StateVector};

pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_SPINUP: f64 = 100.0;
pub const DEFAULT_INTERVAL: f64 = 0.5;
/// States whose Euclidean norm exceeds this abort the integration.
pub const ESCAPE_NORM: f64 = 1e8;

/// Number of steps and the size of the final (possibly shortened) step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepPlan {
    pub count: usize,
    pub step: f64,
    pub last: f64,
}

impl StepPlan {
    pub fn new(duration: f64, step: f64) -> Self {
        if duration <= 0.0 {
            return StepPlan {
                count: 0,
                step,
                last: 0.0,
            };
        }
        let count = ((duration / step) - 1e-9).ceil().max(1.0) as usize;
        let last = duration - (count - 1) as f64 * step;
        StepPlan { count, step, last }
    }

    #[inline]
    pub fn size(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.last
        } else {
            self.step
        }
    }
}

pub(crate) fn check_step(step: f64) -> Result<()> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(format!("step must be positive and finite, got {step}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn check_escape(x: &[f64], time: f64) -> Result<()> {
    let n = norm(x);
    if n.is_finite() && n <= ESCAPE_NORM {
        Ok(())
    } else {
        Err(Error::TrajectoryEscape { time, norm: n })
    }
}

/// Scratch buffers for one RK4 integration.
#[derive(Debug, Clone)]
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

#[allow(clippy::needless_range_loop)]
impl Rk4 {
    pub fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    #[inline]
    pub fn step(&mut self, model: &Model, x: &mut [f64], h: f64) {
        let half = 0.5 * h;
        model.drift_into(x, &mut self.k1);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        model.drift_into(&self.tmp, &mut self.k2);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        model.drift_into(&self.tmp, &mut self.k3);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        model.drift_into(&self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for i in 0..x.len() {
            x[i] += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    /// Advances `x` in place from `t0` by `duration`.
    pub fn advance(
        &mut self,
        model: &Model,
        x: &mut [f64],
        t0: f64,
        duration: f64,
        step: f64,
    ) -> Result<()> {
        let plan = StepPlan::new(duration, step);
        for i in 0..plan.count {
            self.step(model, x, plan.size(i));
            let t = if i + 1 == plan.count {
                t0 + duration
            } else {
                t0 + (i + 1) as f64 * step
            };
            check_escape(x, t)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, StateVector::dim)
    }

    /// Writes `t,x1,..,xn` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dim()).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = std::iter::once(*t)
                .chain(s.iter().copied())
                .map(crate::format_float)
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_initial(model: &Model, x0: &StateVector) -> Result<()> {
    if x0.dim() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: x0.dim(),
        });
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { what: "initial state" });
    }
    Ok(())
}

/// Integrates `model` from `x0` at `t0` for `duration`, recording every step.
pub fn integrate_trajectory(
    model: &Model,
    x0: &StateVector,
    t0: f64,
    duration: f64,
    step: f64,
) -> Result<Trajectory> {
    check_initial(model, x0)?;
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::invalid(format!("duration must be >= 0, got {duration}")));
    }
    check_step(step)?;
    if duration > 0.0 && step > duration {
        return Err(Error::invalid(format!(
            "step {step} exceeds duration {duration}"
        )));
    }
    let plan = StepPlan::new(duration, step);
    let mut times = Vec::with_capacity(plan.count + 1);
    let mut states = Vec::with_capacity(plan.count + 1);
    times.push(t0);
    states.push(x0.clone());
    let mut rk = Rk4::new(model.dimension());
    let mut x = x0.to_vec();
    for i in 0..plan.count {
        rk.step(model, &mut x, plan.size(i));
        let t = if i + 1 == plan.count {
            t0 + duration
        } else {
            t0 + (i + 1) as f64 * step
        };
        check_escape(&x, t)?;
        times.push(t);
        states.push(StateVector::from_vec_unchecked(x.clone()));
    }
    Ok(Trajectory { times, states })
}

/// Base points for ensemble averages, taken along one long trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSample {
    pub points: Vec<StateVector>,
    pub spinup: f64,
    pub interval: f64,
    pub seed: u64,
}

impl AttractorSample {
    /// Wraps explicit base points (no spin-up performed).
    pub fn from_points(points: Vec<StateVector>) -> Self {
        AttractorSample {
            points,
            spinup: 0.0,
            interval: 0.0,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest pairwise distance among the sample points.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max(crate::state::distance(a, b));
            }
        }
        d
    }
}

/// Spins up for `spinup` time units, then records a point every `interval`
/// until `count` points are collected. The first point is the end of the
/// spin-up.
pub fn sample_attractor(
    model: &Model,
    x_init: &StateVector,
    spinup: f64,
    count: usize,
    interval: f64,
    step: f64,
) -> Result<AttractorSample> {
    check_initial(model, x_init)?;
    check_step(step)?;
    if !(spinup.is_finite() && spinup > 0.0) {
        return Err(Error::invalid(format!("spinup must be positive, got {spinup}")));
    }
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    if !(interval.is_finite() && interval > 0.0) {
        return Err(Error::invalid(format!("interval must be positive, got {interval}")));
    }
    let mut rk = Rk4::new(model.dimension());
    let mut x = x_init.to_vec();
    rk.advance(model, &mut x, 0.0, spinup, step)?;
    let mut points = Vec::with_capacity(count);
    points.push(StateVector::from_vec_unchecked(x.clone()));
    for k in 1..count {
        let t = spinup + (k - 1) as f64 * interval;
        rk.advance(model, &mut x, t, interval, step)?;
        points.push(StateVector::from_vec_unchecked(x.clone()));
    }
    Ok(AttractorSample {
        points,
        spinup,
        interval,
        seed: 0,
    })
}

/// Like [`sample_attractor`], but first displaces `x_init` by a seeded
/// random offset of Euclidean length `jitter`, so different seeds give
/// different (decorrelated after spin-up) samples of the same attractor.
#[allow(clippy::too_many_arguments)]
pub fn sample_attractor_seeded(
    model: &Model,
    x_init: &StateVector,
    spinup: f64,
    count: usize,
    interval: f64,
    step: f64,
    seed: u64,
    jitter: f64,
) -> Result<AttractorSample> {
    check_initial(model, x_init)?;
    let offset = rng::unit_vector(&mut rng::member_rng(seed, u64::MAX), model.dimension());
    let start: Vec<f64> = x_init
        .iter()
        .zip(&offset)
        .map(|(x, d)| x + jitter * d)
        .collect();
    let mut sample = sample_attractor(
        model,
        &StateVector::new(start)?,
        spinup,
        count,
        interval,
        step,
    )?;
    sample.seed = seed;
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn step_plan_lands_on_end() {
        let p = StepPlan::new(1.0, 0.3);
        assert_eq!(p.count, 4);
        assert!((3.0 * 0.3 + p.last - 1.0).abs() < 1e-15);
        let p = StepPlan::new(1.0, 0.01);
        assert_eq!(p.count, 100);
        assert!((p.last - 0.01).abs() < 1e-12);
        assert_eq!(StepPlan::new(0.0, 0.01).count, 0);
        assert_eq!(StepPlan::new(0.004, 0.01).count, 1);
    }

    #[test]
    fn exponential_decay() {
        let m = Model::linear_scalar(-1.0);
        let tr = integrate_trajectory(&m, &sv(&[1.0]), 0.0, 1.0, 1e-3).unwrap();
        assert!((tr.last()[0] - (-1.0f64).exp()).abs() < 1e-9);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
    }

    #[test]
    fn zero_duration_is_identity() {
        let m = Model::lorenz63_default();
        let x0 = sv(&[1.0, 2.0, 3.0]);
        let tr = integrate_trajectory(&m, &x0, 5.0, 0.0, 0.01).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.states[0], x0);
        assert_eq!(tr.times, vec![5.0]);
    }

    #[test]
    fn toy_flows_to_diagonal_node() {
        let m = Model::toy_bifurcation(1.0);
        let tr = integrate_trajectory(&m, &sv(&[0.1, 0.1]), 0.0, 50.0, 0.01).unwrap();
        let x = tr.last();
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn time_grid_integrity() {
        let m = Model::lorenz63_default();
        let tr = integrate_trajectory(&m, &sv(&[1.0, 1.0, 1.0]), 2.0, 3.05, 0.1).unwrap();
        assert_eq!(tr.times[0], 2.0);
        assert!((tr.times.last().unwrap() - 5.05).abs() <= 1e-12 * 3.05);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        assert!(tr.states.iter().all(|s| s.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn escape_is_typed_error() {
        let m = Model::linear_scalar(5.0);
        let err = integrate_trajectory(&m, &sv(&[1.0]), 0.0, 10.0, 0.01).unwrap_err();
        match err {
            Error::TrajectoryEscape { time, .. } => {
                // e^{5t} crosses 1e8 near t = ln(1e8)/5
                assert!((time - (1e8f64).ln() / 5.0).abs() < 0.02);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precondition_errors() {
        let m = Model::linear_scalar(-1.0);
        let x = sv(&[1.0]);
        assert!(integrate_trajectory(&m, &x, 0.0, -1.0, 0.01).is_err());
        assert!(integrate_trajectory(&m, &x, 0.0, 1.0, 0.0).is_err());
        assert!(integrate_trajectory(&m, &x, 0.0, 0.1, 0.5).is_err());
        assert!(integrate_trajectory(&m, &sv(&[1.0, 2.0]), 0.0, 1.0, 0.1).is_err());
        assert!(sample_attractor(&m, &x, 0.0, 1, 0.5, 0.01).is_err());
        assert!(sample_attractor(&m, &x, 1.0, 0, 0.5, 0.01).is_err());
        assert!(sample_attractor(&m, &x, 1.0, 1, 0.0, 0.01).is_err());
    }

    #[test]
    fn single_point_sample_is_spinup_endpoint() {
        let m = Model::lorenz63_default();
        let x0 = sv(&[1.0, 1.0, 1.0]);
        let s = sample_attractor(&m, &x0, 10.0, 1, 0.5, 0.01).unwrap();
        let tr = integrate_trajectory(&m, &x0, 0.0, 10.0, 0.01).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(&s.points[0], tr.last());
    }

    #[test]
    fn stable_origin_sample() {
        let m = Model::linear_scalar(-1.0);
        let s = sample_attractor(&m, &sv(&[1.0]), 50.0, 20, 0.5, 0.01).unwrap();
        assert!(s.points.iter().all(|p| p[0].abs() < 1e-8));
    }

    #[test]
    fn csv_header_and_rows() {
        let m = Model::toy_bifurcation(1.0);
        let tr = integrate_trajectory(&m, &sv(&[0.5, -0.5]), 0.0, 0.02, 0.01).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2");
        assert_eq!(lines.len(), 4);
        let parsed: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, 0.5);
    }
}
