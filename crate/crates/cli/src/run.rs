//! Dispatches a validated experiment to the library and writes its artifacts.

use std::io;
use std::path::PathBuf;
use std::time::Instant;

use nlle_core::rng::{derive_seed, member_rng, unit_vector};
use nlle_core::{
    benettin_spectrum, find_fixed_points, finite_time_lle, local_mean_nlle, mean_nlle_curve,
    nlle_single, nlle_spectrum, pes_scan, sample_attractor_seeded, saturation_and_limit,
    verify_pre_bifurcation, verify_toy_attractor, AttractorSample, Error, FixedPointRecord,
    LocalNlleRecord, NlleCurve, PerturbationSpec, SaturationParams, StateVector,
};
use serde::Serialize;

use crate::config::{Analysis, Experiment, Format, ValidationErrors};
use crate::output::{self, indexed, json, num, opt, Csv, RunManifest, Seeds};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Validation(#[from] ValidationErrors),
    #[error("{analysis} failed during {stage}: {source}")]
    Computation {
        analysis: &'static str,
        stage: &'static str,
        #[source]
        source: Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Computation { .. } | RunError::Io { .. } => 3,
        }
    }
}

/// Files produced by an analysis, not yet written.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub notes: Vec<String>,
}

struct Ctx<'a> {
    exp: &'a Experiment,
    name: &'static str,
}

impl Ctx<'_> {
    fn stage<T>(&self, stage: &'static str, r: nlle_core::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Computation {
            analysis: self.name,
            stage,
            source,
        })
    }

    fn step(&self) -> f64 {
        self.exp.config.integrator.step
    }

    fn sample(&self, count: usize) -> Result<AttractorSample, RunError> {
        let s = &self.exp.config.sampling;
        self.stage(
            "sampling",
            sample_attractor_seeded(
                &self.exp.model,
                &self.exp.x_init,
                s.spinup,
                count,
                s.interval,
                self.step(),
                s.seed,
                s.jitter,
            ),
        )
    }

    fn perturbation(&self) -> PerturbationSpec {
        let p = &self.exp.config.perturbation;
        PerturbationSpec::random(p.epsilon, p.directions_per_point, self.exp.config.perturbation_seed())
    }

    fn emit(&self, out: &mut Artifacts, csv: impl FnOnce() -> Csv, js: impl FnOnce() -> Vec<u8>) {
        let formats = &self.exp.config.output.formats;
        if formats.contains(&Format::Csv) {
            out.files.push((format!("{}.csv", self.name), csv().into_bytes()));
        }
        if formats.contains(&Format::Json) {
            out.files.push((format!("{}.json", self.name), js()));
        }
    }
}

/// Runs the analysis in memory.
pub fn compute(exp: &Experiment) -> Result<Artifacts, RunError> {
    let name = exp.config.analysis.kind.as_str();
    let cx = Ctx { exp, name };
    let mut out = Artifacts::default();
    let model = &exp.model;
    let n = model.dimension();
    match &exp.analysis {
        Analysis::Gle {
            total_time,
            renorm_interval,
            m,
        } => {
            let x0 = cx.sample(1)?.points.remove(0);
            let spec = cx.stage(
                "tangent integration",
                benettin_spectrum(model, &x0, *total_time, *renorm_interval, *m, cx.step()),
            )?;
            #[derive(Serialize)]
            struct Gle<'a> {
                exponents: &'a [f64],
                sum: f64,
                total_time: f64,
                renorm_interval: f64,
                x0: &'a StateVector,
            }
            cx.emit(
                &mut out,
                || {
                    let mut c = Csv::new(&["index", "exponent"]);
                    for (i, l) in spec.exponents.iter().enumerate() {
                        c.row(&[(i + 1).to_string(), num(*l)]);
                    }
                    c
                },
                || {
                    json(&Gle {
                        exponents: &spec.exponents,
                        sum: spec.exponents.iter().sum(),
                        total_time: spec.total_time,
                        renorm_interval: spec.renorm_interval,
                        x0: &x0,
                    })
                },
            );
        }
        Analysis::Lle { tau } => {
            let sample = cx.sample(exp.config.sampling.count)?;
            let pert = cx.perturbation();
            let mut rows = Vec::with_capacity(sample.len());
            for (i, x0) in sample.points.iter().enumerate() {
                let d = unit_vector(&mut member_rng(pert.seed, i as u64), n);
                let lle = cx.stage("tangent integration", finite_time_lle(model, x0, &d, *tau, cx.step()))
                    .map_err(|e| with_member(e, i, pert.seed))?;
                let delta0: Vec<f64> = d.iter().map(|v| v * pert.epsilon).collect();
                let nl = cx.stage("nonlinear integration", nlle_single(model, x0, &delta0, *tau, cx.step()))
                    .map_err(|e| with_member(e, i, pert.seed))?;
                rows.push(LleRow {
                    x0: x0.clone(),
                    lle,
                    nlle: nl,
                });
            }
            cx.emit(
                &mut out,
                || {
                    let mut header = indexed("x", n);
                    header.extend(["tau", "lle", "nlle"].map(String::from));
                    let mut c = Csv::new(&header);
                    for r in &rows {
                        let mut f: Vec<String> = r.x0.iter().map(|v| num(*v)).collect();
                        f.extend([num(*tau), num(r.lle), num(r.nlle)]);
                        c.row(&f);
                    }
                    c
                },
                || {
                    json(&serde_json::json!({
                        "tau": tau,
                        "epsilon": pert.epsilon,
                        "seed": pert.seed,
                        "points": rows,
                    }))
                },
            );
        }
        Analysis::Nlle { tau_grid, saturation } => {
            let sample = cx.sample(exp.config.sampling.count)?;
            let pert = cx.perturbation();
            let mut curve = cx.stage("ensemble", mean_nlle_curve(model, &sample, &pert, tau_grid, cx.step()))?;
            let status = saturate(&cx, &mut curve, saturation, &mut out.notes)?;
            let diameter = sample.diameter();
            let summary = NlleSummary {
                e_sat: curve.e_sat,
                t_p: curve.t_p,
                saturation: status,
                window: saturation.window,
                slope_tol: saturation.slope_tol,
                theta: saturation.theta,
                ensemble_size: curve.ensemble_size,
                epsilon: curve.epsilon,
                seed: curve.seed,
                sample_diameter: diameter,
                rgie_bound: 2.0 * diameter / curve.epsilon,
                max_rgie: curve.rgie.iter().copied().fold(0.0, f64::max),
                pair_oracle: pair_oracle(&sample, curve.epsilon),
                curve: &curve,
            };
            cx.emit(
                &mut out,
                || {
                    let mut c = Csv::new(&["tau", "mean_nlle", "rgie", "stderr"]);
                    for k in 0..curve.tau_grid.len() {
                        c.row(&[
                            num(curve.tau_grid[k]),
                            num(curve.mean_nlle[k]),
                            num(curve.rgie[k]),
                            num(curve.stderr[k]),
                        ]);
                    }
                    c
                },
                || json(&summary),
            );
        }
        Analysis::Spectrum { tau, renorm_interval, m } => {
            let sample = cx.sample(exp.config.sampling.count)?;
            let pert = cx.perturbation();
            let result = cx.stage(
                "spectrum ensemble",
                nlle_spectrum(model, &sample, &pert, *tau, *renorm_interval, *m, cx.step()),
            )?;
            cx.emit(
                &mut out,
                || {
                    let mut c = Csv::new(&["index", "exponent", "partial_sum"]);
                    for (i, (l, s)) in result.exponents.iter().zip(&result.partial_sums).enumerate() {
                        c.row(&[(i + 1).to_string(), num(*l), num(*s)]);
                    }
                    c
                },
                || json(&result),
            );
        }
        Analysis::Localmap { tau_grid, saturation } => {
            let sample = cx.sample(exp.config.sampling.count)?;
            let p = &exp.config.perturbation;
            let seed = exp.config.perturbation_seed();
            let mut records: Vec<LocalNlleRecord> = Vec::with_capacity(sample.len());
            for (i, x0) in sample.points.iter().enumerate() {
                let r = local_mean_nlle(
                    model,
                    x0,
                    p.epsilon,
                    p.directions_per_point,
                    tau_grid,
                    saturation,
                    cx.step(),
                    derive_seed(seed, i as u64),
                );
                records.push(cx.stage("local ensemble", r)?);
            }
            let unsaturated = records.iter().filter(|r| r.local_t_p.is_none()).count();
            if unsaturated > 0 {
                out.notes.push(format!(
                    "{unsaturated} of {} local curves did not saturate within the tau grid",
                    records.len()
                ));
            }
            cx.emit(
                &mut out,
                || {
                    let mut header = indexed("x", n);
                    header.extend(["tau", "local_mean_nlle", "lrgie", "local_t_p"].map(String::from));
                    let mut c = Csv::new(&header);
                    for r in &records {
                        let xs: Vec<String> = r.x0.iter().map(|v| num(*v)).collect();
                        for k in 0..r.tau_grid.len() {
                            let mut f = xs.clone();
                            f.extend([
                                num(r.tau_grid[k]),
                                num(r.local_mean_nlle[k]),
                                num(r.lrgie[k]),
                                opt(r.local_t_p),
                            ]);
                            c.row(&f);
                        }
                    }
                    c
                },
                || {
                    json(&serde_json::json!({
                        "epsilon": p.epsilon,
                        "directions_per_point": p.directions_per_point,
                        "seed": seed,
                        "records": records,
                    }))
                },
            );
        }
        Analysis::FixedPoints {
            lo,
            hi,
            grid_per_axis,
            newton_tol,
        } => {
            let search = cx.stage(
                "newton search",
                find_fixed_points(model, lo, hi, *grid_per_axis, *newton_tol),
            )?;
            if !search.singular_seeds.is_empty() {
                out.notes.push(format!(
                    "{} grid seeds skipped at a singular Jacobian",
                    search.singular_seeds.len()
                ));
            }
            cx.emit(&mut out, || fixed_point_table(&search.points, n), || json(&search));
        }
        Analysis::PesScan {
            parameter,
            grid,
            equilibrium,
        } => {
            let eq = cx.stage("setup", StateVector::new(equilibrium.clone()))?;
            let scan = cx.stage(
                "eigenvalue scan",
                pes_scan(|p| model.with_parameter(parameter, p), &eq, grid),
            )?;
            if scan.critical.is_none() {
                out.notes.push("no sign change of the leading real part on the grid".into());
            }
            cx.emit(
                &mut out,
                || {
                    let mut header = vec!["parameter".to_string()];
                    header.extend(indexed("re", n));
                    let mut c = Csv::new(&header);
                    for row in &scan.rows {
                        let mut f = vec![num(row.parameter)];
                        f.extend(row.real_parts.iter().map(|v| num(*v)));
                        c.row(&f);
                    }
                    c
                },
                || {
                    json(&serde_json::json!({
                        "parameter": parameter,
                        "equilibrium": equilibrium,
                        "scan": scan,
                    }))
                },
            );
        }
        Analysis::VerifyToy {
            lambda,
            n_basin,
            horizon,
        } => {
            let seed = exp.config.sampling.seed;
            let report = if *lambda > 0.0 {
                verify_toy_attractor(*lambda, *n_basin, *horizon, seed)
            } else {
                verify_pre_bifurcation(*lambda, *n_basin, *horizon, seed)
            };
            let report = cx.stage("basin integration", report)?;
            cx.emit(&mut out, || fixed_point_table(&report.fixed_points, n), || json(&report));
        }
    }
    Ok(out)
}

fn with_member(e: RunError, member: usize, seed: u64) -> RunError {
    match e {
        RunError::Computation {
            analysis,
            stage,
            source,
        } => RunError::Computation {
            analysis,
            stage,
            source: source.in_member(member, seed),
        },
        other => other,
    }
}

#[derive(Serialize)]
struct LleRow {
    x0: StateVector,
    lle: f64,
    nlle: f64,
}

#[derive(Serialize)]
struct NlleSummary<'a> {
    e_sat: Option<f64>,
    t_p: Option<f64>,
    saturation: String,
    window: usize,
    slope_tol: f64,
    theta: f64,
    ensemble_size: usize,
    epsilon: f64,
    seed: u64,
    sample_diameter: f64,
    /// `2 D / epsilon`.
    rgie_bound: f64,
    max_rgie: f64,
    /// `exp(mean ln(|x - y| / epsilon))` over distinct sample pairs.
    pair_oracle: f64,
    curve: &'a NlleCurve,
}

fn saturate(
    cx: &Ctx<'_>,
    curve: &mut NlleCurve,
    params: &SaturationParams,
    notes: &mut Vec<String>,
) -> Result<String, RunError> {
    match saturation_and_limit(curve, params) {
        Ok(_) => Ok("reached".into()),
        Err(e @ Error::SaturationNotReached { .. }) => {
            let msg = e.to_string();
            notes.push(msg.clone());
            Ok(msg)
        }
        Err(e) => cx.stage("saturation", Err(e)),
    }
}

/// Geometric mean over distinct sample pairs of their separation in units
/// of `epsilon`; coincident pairs are skipped.
pub fn pair_oracle(sample: &AttractorSample, epsilon: f64) -> f64 {
    let pts = &sample.points;
    let (mut acc, mut count) = (0.0, 0usize);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i]
                .iter()
                .zip(pts[j].iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d > 0.0 {
                acc += (d / epsilon).ln();
                count += 1;
            }
        }
    }
    if count == 0 {
        f64::NAN
    } else {
        (acc / count as f64).exp()
    }
}

fn fixed_point_table(points: &[FixedPointRecord], n: usize) -> Csv {
    let mut header = indexed("x", n);
    header.extend(indexed("re_eig", n));
    header.extend(indexed("im_eig", n));
    header.push("class".into());
    let mut c = Csv::new(&header);
    for p in points {
        let mut f: Vec<String> = p.location.iter().map(|v| num(*v)).collect();
        f.extend(p.eigenvalues.iter().map(|e| num(e.re)));
        f.extend(p.eigenvalues.iter().map(|e| num(e.im)));
        f.push(p.classification.as_str().to_string());
        c.row(&f);
    }
    c
}

/// Computes the analysis on `workers` threads, writes its artifacts and the
/// manifest, and returns the manifest. Nothing is left on disk on failure.
pub fn run_config(exp: &Experiment, workers: usize) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let artifacts = nlle_core::with_workers(workers, || compute(exp))?;
    let dir = &exp.config.output.directory;
    let created_dir = !dir.exists();
    let files = output::write_all(dir, &artifacts.files).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        analysis: exp.config.analysis.kind.as_str().to_string(),
        config: serde_json::to_value(&exp.config).expect("config serializes"),
        seeds: Seeds {
            sampling: exp.config.sampling.seed,
            perturbation: exp.config.perturbation_seed(),
        },
        files,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        notes: artifacts.notes,
    };
    let path = dir.join("manifest.json");
    if let Err(source) = std::fs::write(&path, json(&manifest)) {
        let written: Vec<PathBuf> = manifest.files.iter().map(|f| dir.join(&f.path)).collect();
        output::remove_partial(dir, &written, created_dir);
        return Err(RunError::Io { path, source });
    }
    Ok(manifest)
}
