//! Tangent linear model: finite-time Lyapunov exponents and the global
//! spectrum by the Benettin method.
//!
//! The state and its tangent vectors are advanced by one joint RK4 step, so
//! the Jacobian is evaluated exactly at the stage states of the base
//! integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{check_escape, check_step, StepPlan, Trajectory};
use crate::model::Model;
use crate::nlle::gsr::gsr_orthogonalize;
use crate::state::{norm, StateVector};

pub const DEFAULT_RENORM_INTERVAL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// Nonincreasing, in inverse model time units.
    pub exponents: Vec<f64>,
    pub total_time: f64,
    pub renorm_interval: f64,
}

/// Base point plus `m` tangent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentState {
    pub base: Vec<f64>,
    pub perturbations: Vec<Vec<f64>>,
}

impl TangentState {
    pub fn new(base: Vec<f64>, perturbations: Vec<Vec<f64>>) -> Result<Self> {
        if perturbations.is_empty() {
            return Err(Error::invalid("at least one tangent vector is required"));
        }
        for p in &perturbations {
            if p.len() != base.len() {
                return Err(Error::DimensionMismatch {
                    expected: base.len(),
                    actual: p.len(),
                });
            }
            if p.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroPerturbation);
            }
        }
        Ok(TangentState { base, perturbations })
    }
}

/// Scratch space for the joint state/tangent RK4 step.
struct VariationalRk4 {
    stages: [Vec<f64>; 4],
    k: [Vec<f64>; 4],
    d: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

#[allow(clippy::needless_range_loop)]
impl VariationalRk4 {
    fn new(n: usize) -> Self {
        let z = || vec![0.0; n];
        VariationalRk4 {
            stages: [z(), z(), z(), z()],
            k: [z(), z(), z(), z()],
            d: [z(), z(), z(), z()],
            tmp: z(),
        }
    }

    /// Fills the four RK4 stage states of the base integration from `x`.
    fn base_stages(&mut self, model: &Model, x: &[f64], h: f64) {
        let n = x.len();
        let coeff = [0.0, 0.5 * h, 0.5 * h, h];
        self.stages[0].copy_from_slice(x);
        model.drift_into(&self.stages[0], &mut self.k[0]);
        for s in 1..4 {
            let (prev, rest) = self.k.split_at_mut(s);
            for i in 0..n {
                self.stages[s][i] = x[i] + coeff[s] * prev[s - 1][i];
            }
            model.drift_into(&self.stages[s], &mut rest[0]);
        }
    }

    /// Applies the tangent RK4 step to `v` using the current base stages.
    fn tangent_step(&mut self, model: &Model, v: &mut [f64], h: f64) {
        let n = v.len();
        let coeff = [0.0, 0.5 * h, 0.5 * h, h];
        model.jvp_into(&self.stages[0], v, &mut self.d[0]);
        for s in 1..4 {
            let (prev, rest) = self.d.split_at_mut(s);
            for i in 0..n {
                self.tmp[i] = v[i] + coeff[s] * prev[s - 1][i];
            }
            model.jvp_into(&self.stages[s], &self.tmp, &mut rest[0]);
        }
        let sixth = h / 6.0;
        for i in 0..n {
            v[i] += sixth * (self.d[0][i] + 2.0 * self.d[1][i] + 2.0 * self.d[2][i] + self.d[3][i]);
        }
    }

    fn finish_base(&self, x: &mut [f64], h: f64) {
        let sixth = h / 6.0;
        for i in 0..x.len() {
            x[i] += sixth * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
    }

    fn step(&mut self, model: &Model, state: &mut TangentState, h: f64) {
        self.base_stages(model, &state.base, h);
        for v in state.perturbations.iter_mut() {
            self.tangent_step(model, v, h);
        }
        self.finish_base(&mut state.base, h);
    }

    fn advance(
        &mut self,
        model: &Model,
        state: &mut TangentState,
        t0: f64,
        duration: f64,
        step: f64,
    ) -> Result<()> {
        let plan = StepPlan::new(duration, step);
        for i in 0..plan.count {
            self.step(model, state, plan.size(i));
            check_escape(&state.base, t0 + (i + 1) as f64 * step)?;
            if !state.perturbations.iter().flatten().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { what: "tangent vector" });
            }
        }
        Ok(())
    }
}

fn check_direction(model: &Model, v: &[f64]) -> Result<()> {
    if v.len() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: v.len(),
        });
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { what: "perturbation" });
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroPerturbation);
    }
    Ok(())
}

/// Integrates `d delta/dt = J(x(t)) delta` along `base` on its own time grid
/// and returns the tangent vector at the last time.
pub fn tangent_propagate(model: &Model, base: &Trajectory, delta0: &[f64]) -> Result<Vec<f64>> {
    check_direction(model, delta0)?;
    if base.is_empty() || base.dim() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: base.dim(),
        });
    }
    let mut rk = VariationalRk4::new(model.dimension());
    let mut v = delta0.to_vec();
    for (w, x) in base.times.windows(2).zip(&base.states) {
        rk.base_stages(model, x, w[1] - w[0]);
        rk.tangent_step(model, &mut v, w[1] - w[0]);
    }
    Ok(v)
}

/// `(1/tau) ln(|delta(tau)| / |delta0|)` from the tangent linear model.
pub fn finite_time_lle(
    model: &Model,
    x0: &StateVector,
    direction: &[f64],
    tau: f64,
    step: f64,
) -> Result<f64> {
    check_direction(model, direction)?;
    check_step(step)?;
    if x0.dim() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: x0.dim(),
        });
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    let mut state = TangentState::new(x0.to_vec(), vec![direction.to_vec()])?;
    let mut rk = VariationalRk4::new(model.dimension());
    rk.advance(model, &mut state, 0.0, tau, step)?;
    Ok((norm(&state.perturbations[0]) / norm(direction)).ln() / tau)
}

/// Benettin estimate of the leading `m` Lyapunov exponents.
///
/// The tangent frame starts as the first `m` unit basis vectors and is
/// Gram-Schmidt reorthogonalized and normalized every `renorm_interval`.
pub fn benettin_spectrum(
    model: &Model,
    x0: &StateVector,
    total_time: f64,
    renorm_interval: f64,
    m: usize,
    step: f64,
) -> Result<LyapunovSpectrum> {
    let n = model.dimension();
    if x0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.dim(),
        });
    }
    if m == 0 || m > n {
        return Err(Error::invalid(format!("m must be in 1..={n}, got {m}")));
    }
    check_step(step)?;
    if !(renorm_interval.is_finite() && renorm_interval > 0.0) {
        return Err(Error::invalid("renorm_interval must be positive"));
    }
    if !(total_time.is_finite() && total_time >= renorm_interval) {
        return Err(Error::invalid(format!(
            "total_time {total_time} must be at least renorm_interval {renorm_interval}"
        )));
    }
    let frame: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut state = TangentState::new(x0.to_vec(), frame)?;
    let mut rk = VariationalRk4::new(n);
    let mut log_sums = vec![0.0; m];
    let plan = StepPlan::new(total_time, renorm_interval);
    for i in 0..plan.count {
        let t0 = i as f64 * renorm_interval;
        rk.advance(model, &mut state, t0, plan.size(i), step)?;
        let ortho = gsr_orthogonalize(&state.perturbations)?;
        for (k, v) in ortho.into_iter().enumerate() {
            let len = norm(&v);
            log_sums[k] += len.ln();
            state.perturbations[k] = v.into_iter().map(|x| x / len).collect();
        }
    }
    let mut exponents: Vec<f64> = log_sums.iter().map(|s| s / total_time).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(LyapunovSpectrum {
        exponents,
        total_time,
        renorm_interval,
    })
}
