use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gsr::{gsr_orthogonalize, volume_m};
use super::{Directions, PerturbationSpec};
use crate::error::{Error, Result};
use crate::integrate::{check_step, AttractorSample, Rk4};
use crate::model::Model;
use crate::rng::{member_rng, unit_vector};
use crate::state::{dot, norm};

/// Worst-case consistency checks over every reorthogonalized frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDiagnostics {
    /// Max of `|(a, b)| / (|a| |b|)` over pairs of GSR outputs.
    pub max_orthogonality_residual: f64,
    /// Max relative gap between the Gram-determinant volume of the raw
    /// error frame and the product of its GSR norms.
    pub max_volume_mismatch: f64,
    pub renormalizations: usize,
}

impl SpectrumDiagnostics {
    fn merge(&mut self, other: &SpectrumDiagnostics) {
        self.max_orthogonality_residual = self
            .max_orthogonality_residual
            .max(other.max_orthogonality_residual);
        self.max_volume_mismatch = self.max_volume_mismatch.max(other.max_volume_mismatch);
        self.renormalizations += other.renormalizations;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlleSpectrumResult {
    /// Ensemble-mean NLLE spectrum, in Gram-Schmidt order.
    pub exponents: Vec<f64>,
    /// Ensemble-mean partial sums; `exponents[k]` is the difference of
    /// consecutive entries.
    pub partial_sums: Vec<f64>,
    pub tau: f64,
    pub renorm_interval: f64,
    pub epsilon: f64,
    pub ensemble_size: usize,
    pub seed: u64,
    pub diagnostics: SpectrumDiagnostics,
}

struct MemberOutcome {
    partial_sums: Vec<f64>,
    diagnostics: SpectrumDiagnostics,
}

fn initial_frame(pert: &PerturbationSpec, member: usize, m: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    let raw: Vec<Vec<f64>> = match &pert.directions {
        Directions::Random(_) => {
            let mut rng = member_rng(pert.seed, member as u64);
            (0..m).map(|_| unit_vector(&mut rng, n)).collect()
        }
        Directions::Explicit(d) => d[..m].to_vec(),
    };
    Ok(gsr_orthogonalize(&raw)?
        .into_iter()
        .map(|v| {
            let len = norm(&v);
            v.into_iter().map(|x| pert.epsilon * x / len).collect()
        })
        .collect())
}

fn frame_checks(raw: &[Vec<f64>], ortho: &[Vec<f64>], norms: &[f64], diag: &mut SpectrumDiagnostics) {
    for i in 0..ortho.len() {
        for j in 0..i {
            let r = dot(&ortho[i], &ortho[j]).abs() / (norms[i] * norms[j]);
            diag.max_orthogonality_residual = diag.max_orthogonality_residual.max(r);
        }
    }
    let prod: f64 = norms.iter().product();
    let mismatch = (volume_m(raw) - prod).abs() / prod;
    diag.max_volume_mismatch = diag.max_volume_mismatch.max(mismatch);
    diag.renormalizations += 1;
}

fn run_member(
    model: &Model,
    x0: &[f64],
    frame: Vec<Vec<f64>>,
    epsilon: f64,
    intervals: usize,
    renorm_interval: f64,
    step: f64,
) -> Result<MemberOutcome> {
    let n = model.dimension();
    let m = frame.len();
    let mut rk = Rk4::new(n);
    let mut base = x0.to_vec();
    let mut perturbed: Vec<Vec<f64>> = frame
        .iter()
        .map(|d| base.iter().zip(d).map(|(b, di)| b + di).collect())
        .collect();
    let mut log_volume = vec![0.0; m];
    let mut diag = SpectrumDiagnostics::default();
    let differences = |perturbed: &[Vec<f64>], base: &[f64]| -> Vec<Vec<f64>> {
        perturbed
            .iter()
            .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
            .collect()
    };
    for i in 0..intervals {
        let t0 = i as f64 * renorm_interval;
        // Volumes of the frame actually represented in floating point.
        let before: Vec<f64> = gsr_orthogonalize(&differences(&perturbed, &base))?
            .iter()
            .map(|v| norm(v))
            .collect();
        rk.advance(model, &mut base, t0, renorm_interval, step)?;
        for p in perturbed.iter_mut() {
            rk.advance(model, p, t0, renorm_interval, step)?;
        }
        let raw = differences(&perturbed, &base);
        let ortho = gsr_orthogonalize(&raw)?;
        let after: Vec<f64> = ortho.iter().map(|v| norm(v)).collect();
        frame_checks(&raw, &ortho, &after, &mut diag);
        let mut partial = 0.0;
        for k in 0..m {
            partial += (after[k] / before[k]).ln();
            log_volume[k] += partial;
        }
        for (p, (v, len)) in perturbed.iter_mut().zip(ortho.iter().zip(&after)) {
            for ((pi, bi), vi) in p.iter_mut().zip(&base).zip(v) {
                *pi = bi + epsilon * vi / len;
            }
        }
    }
    let tau = intervals as f64 * renorm_interval;
    Ok(MemberOutcome {
        partial_sums: log_volume.into_iter().map(|s| s / tau).collect(),
        diagnostics: diag,
    })
}

/// Ensemble-mean NLLE spectrum from the growth of m-dimensional error volumes.
///
/// Each member carries `m` orthogonal errors of magnitude `epsilon` about a
/// base point. Every `renorm_interval` the `m + 1` trajectories are advanced
/// nonlinearly, the error frame is reorthogonalized, the log growth of each
/// leading sub-volume is accumulated, and the errors are reset to magnitude
/// `epsilon` along the orthogonalized directions.
pub fn nlle_spectrum(
    model: &Model,
    sample: &AttractorSample,
    pert: &PerturbationSpec,
    tau: f64,
    renorm_interval: f64,
    m: usize,
    step: f64,
) -> Result<NlleSpectrumResult> {
    let n = model.dimension();
    if m == 0 || m > n {
        return Err(Error::invalid(format!("m must be in 1..={n}, got {m}")));
    }
    if sample.is_empty() {
        return Err(Error::invalid("attractor sample is empty"));
    }
    check_step(step)?;
    pert.validate(n)?;
    if !(renorm_interval.is_finite() && renorm_interval > 0.0 && tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau and renorm_interval must be positive"));
    }
    let ratio = tau / renorm_interval;
    let intervals = ratio.round();
    if intervals < 1.0 || (intervals * renorm_interval - tau).abs() > 1e-9 * tau.max(1.0) {
        return Err(Error::invalid(format!(
            "tau {tau} must be a multiple of renorm_interval {renorm_interval}"
        )));
    }
    let intervals = intervals as usize;
    let per_point = match &pert.directions {
        Directions::Random(k) => *k,
        Directions::Explicit(d) => {
            if d.len() < m {
                return Err(Error::invalid(format!(
                    "{} explicit directions cannot seed an {m}-vector frame",
                    d.len()
                )));
            }
            1
        }
    };
    let members = sample.len() * per_point;
    let outcomes: Vec<MemberOutcome> = (0..members)
        .into_par_iter()
        .map(|member| {
            let x0 = &sample.points[member / per_point];
            if x0.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: x0.dim(),
                });
            }
            initial_frame(pert, member, m, n)
                .and_then(|frame| {
                    run_member(model, x0, frame, pert.epsilon, intervals, renorm_interval, step)
                })
                .map_err(|e| e.in_member(member, pert.seed))
        })
        .collect::<Result<_>>()?;

    let mut sums = vec![0.0; m];
    let mut diagnostics = SpectrumDiagnostics::default();
    for o in &outcomes {
        for (s, v) in sums.iter_mut().zip(&o.partial_sums) {
            *s += v;
        }
        diagnostics.merge(&o.diagnostics);
    }
    let partial_sums: Vec<f64> = sums.iter().map(|s| s / members as f64).collect();
    let exponents = partial_sums
        .iter()
        .scan(0.0, |prev, &s| {
            let l = s - *prev;
            *prev = s;
            Some(l)
        })
        .collect();
    Ok(NlleSpectrumResult {
        exponents,
        partial_sums,
        tau,
        renorm_interval,
        epsilon: pert.epsilon,
        ensemble_size: members,
        seed: pert.seed,
        diagnostics,
    })
}
