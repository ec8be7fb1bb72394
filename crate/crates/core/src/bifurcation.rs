//! Equilibria, their linear stability, eigenvalue crossings along a
//! parameter family, and numerical checks of the bifurcated attractor of the
//! two-dimensional cubic toy system.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::integrate::{Rk4, DEFAULT_STEP};
use crate::model::Model;
use crate::rng::member_rng;
use crate::state::{distance, norm, StateVector};

/// Real parts at or below this magnitude make a fixed point degenerate.
pub const DEGENERATE_TOL: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const DEDUP_DISTANCE: f64 = 1e-6;
const MAX_NEWTON_STEPS: usize = 50;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    StableNode,
    UnstableNode,
    Saddle,
    StableFocus,
    UnstableFocus,
    Degenerate,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::StableNode => "stable-node",
            Stability::UnstableNode => "unstable-node",
            Stability::Saddle => "saddle",
            Stability::StableFocus => "stable-focus",
            Stability::UnstableFocus => "unstable-focus",
            Stability::Degenerate => "degenerate",
        }
    }

    /// Classifies from eigenvalues given as `(re, im)` pairs.
    pub fn from_eigenvalues(eigs: &[Eigenvalue]) -> Self {
        if eigs.iter().any(|e| e.re.abs() <= DEGENERATE_TOL) {
            return Stability::Degenerate;
        }
        let oscillatory = eigs.iter().any(|e| e.im.abs() > DEGENERATE_TOL);
        let stable = eigs.iter().all(|e| e.re < 0.0);
        let unstable = eigs.iter().all(|e| e.re > 0.0);
        match (stable, unstable, oscillatory) {
            (true, _, false) => Stability::StableNode,
            (true, _, true) => Stability::StableFocus,
            (_, true, false) => Stability::UnstableNode,
            (_, true, true) => Stability::UnstableFocus,
            _ => Stability::Saddle,
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Eigenvalues of a real square matrix, sorted by descending real part then
/// descending imaginary part.
pub fn eigenvalues(j: &DMatrix<f64>) -> Vec<Eigenvalue> {
    let mut eigs: Vec<Eigenvalue> = j
        .complex_eigenvalues()
        .iter()
        .map(|c| Eigenvalue { re: c.re, im: c.im })
        .collect();
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    eigs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub location: StateVector,
    pub eigenvalues: Vec<Eigenvalue>,
    pub classification: Stability,
    /// Euclidean norm of the drift at `location`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSearch {
    /// Distinct roots, sorted lexicographically by location.
    pub points: Vec<FixedPointRecord>,
    /// Grid seeds abandoned because Newton hit a singular Jacobian.
    pub singular_seeds: Vec<StateVector>,
}

enum Newton {
    Converged(Vec<f64>),
    Singular,
    Diverged,
}

fn residual(model: &Model, x: &[f64]) -> f64 {
    let mut f = vec![0.0; x.len()];
    model.drift_into(x, &mut f);
    norm(&f)
}

/// Damped Newton: halve the step until the residual decreases.
fn newton(model: &Model, x0: &[f64], tol: f64) -> Newton {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut f = vec![0.0; n];
    model.drift_into(&x, &mut f);
    let mut r = norm(&f);
    for _ in 0..MAX_NEWTON_STEPS {
        if r <= tol {
            return Newton::Converged(x);
        }
        let j = model.jacobian(&x);
        let rhs = -DVector::from_column_slice(&f);
        let Some(dx) = j.lu().solve(&rhs) else {
            return Newton::Singular;
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, d)| xi + alpha * d).collect();
            let rt = residual(model, &trial);
            if rt.is_finite() && rt < r {
                accepted = Some((trial, rt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, rt)) = accepted else {
            return Newton::Diverged;
        };
        x = trial;
        r = rt;
        model.drift_into(&x, &mut f);
    }
    if r <= tol {
        Newton::Converged(x)
    } else {
        Newton::Diverged
    }
}

/// Polishes a root with undamped Newton steps while the residual improves.
fn refine(model: &Model, x: Vec<f64>) -> Vec<f64> {
    let mut best_r = residual(model, &x);
    let mut best = x;
    for _ in 0..8 {
        if best_r == 0.0 {
            break;
        }
        let mut f = vec![0.0; best.len()];
        model.drift_into(&best, &mut f);
        let Some(dx) = model.jacobian(&best).lu().solve(&-DVector::from_column_slice(&f)) else {
            break;
        };
        let trial: Vec<f64> = best.iter().zip(dx.iter()).map(|(a, d)| a + d).collect();
        let r = residual(model, &trial);
        if r < best_r {
            best = trial;
            best_r = r;
        } else {
            break;
        }
    }
    best
}

/// Runs Newton from every point of a `grid_per_axis`-per-axis lattice over
/// the box `[lo, hi]` and returns the distinct roots.
pub fn find_fixed_points(
    model: &Model,
    lo: &[f64],
    hi: &[f64],
    grid_per_axis: usize,
    newton_tol: f64,
) -> Result<FixedPointSearch> {
    let n = model.dimension();
    for len in [lo.len(), hi.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
        return Err(Error::invalid("search box must satisfy lo < hi on every axis"));
    }
    if grid_per_axis < 2 {
        return Err(Error::invalid("grid_per_axis must be at least 2"));
    }
    if !(newton_tol.is_finite() && newton_tol > 0.0) {
        return Err(Error::invalid("newton_tol must be positive"));
    }
    let total = grid_per_axis
        .checked_pow(n as u32)
        .ok_or_else(|| Error::invalid("search grid too large"))?;
    let seed_point = |mut idx: usize| -> Vec<f64> {
        (0..n)
            .map(|axis| {
                let k = idx % grid_per_axis;
                idx /= grid_per_axis;
                lo[axis] + (hi[axis] - lo[axis]) * k as f64 / (grid_per_axis - 1) as f64
            })
            .collect()
    };
    let outcomes: Vec<(Vec<f64>, Newton)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let seed = seed_point(idx);
            let out = newton(model, &seed, newton_tol);
            (seed, out)
        })
        .collect();

    let mut roots: Vec<Vec<f64>> = Vec::new();
    let mut singular_seeds = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Newton::Converged(x) => {
                let x = refine(model, x);
                if residual(model, &x) > RESIDUAL_TOL {
                    continue;
                }
                if !roots.iter().any(|r| distance(r, &x) <= DEDUP_DISTANCE) {
                    roots.push(x);
                }
            }
            Newton::Singular => singular_seeds.push(StateVector::from_vec_unchecked(seed)),
            Newton::Diverged => {}
        }
    }
    roots.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let points = roots
        .into_iter()
        .map(|x| record_at(model, StateVector::from_vec_unchecked(x)))
        .collect();
    Ok(FixedPointSearch {
        points,
        singular_seeds,
    })
}

fn record_at(model: &Model, location: StateVector) -> FixedPointRecord {
    let eigenvalues = eigenvalues(&model.jacobian(&location));
    FixedPointRecord {
        residual: residual(model, &location),
        classification: Stability::from_eigenvalues(&eigenvalues),
        eigenvalues,
        location,
    }
}

/// Eigenvalues and stability class at an (approximate) equilibrium. The
/// location is polished by Newton before the Jacobian is evaluated.
pub fn classify_fixed_point(model: &Model, location: &StateVector) -> Result<FixedPointRecord> {
    if location.dim() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: location.dim(),
        });
    }
    let r = residual(model, location);
    if r.is_nan() || r > 1e-8 {
        return Err(Error::NotAFixedPoint { residual: r });
    }
    let refined = refine(model, location.to_vec());
    Ok(record_at(model, StateVector::from_vec_unchecked(refined)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PesRow {
    pub parameter: f64,
    /// Real parts of the eigenvalues, descending.
    pub real_parts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PesScan {
    pub rows: Vec<PesRow>,
    /// Parameter value where the leading real part crosses zero.
    pub critical: Option<f64>,
    /// Number of eigenvalues whose real parts change sign at the crossing.
    pub crossing_count: usize,
    /// Whether the crossing eigenvalues are negative below, zero at and
    /// positive above the critical value on every grid point.
    pub exchange_of_stability: bool,
    /// Whether every non-crossing eigenvalue has negative real part at the
    /// critical value (vacuous when all eigenvalues cross).
    pub others_stable: bool,
}

/// Scans the eigenvalue real parts of the Jacobian at `equilibrium` along a
/// one-parameter family.
///
/// The crossing is bracketed by the sign change of the leading real part on
/// the grid (linear interpolation gives the first estimate) and then refined
/// by bisection on the family itself.
pub fn pes_scan<F>(family: F, equilibrium: &StateVector, grid: &[f64]) -> Result<PesScan>
where
    F: Fn(f64) -> Result<Model>,
{
    if grid.len() < 2 || !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("parameter grid must have >= 2 increasing values"));
    }
    let real_parts_at = |p: f64| -> Result<Vec<f64>> {
        let model = family(p)?;
        if equilibrium.dim() != model.dimension() {
            return Err(Error::DimensionMismatch {
                expected: model.dimension(),
                actual: equilibrium.dim(),
            });
        }
        let r = residual(&model, equilibrium);
        if r.is_nan() || r > 1e-8 {
            return Err(Error::EquilibriumDrift { parameter: p, residual: r });
        }
        Ok(eigenvalues(&model.jacobian(equilibrium))
            .into_iter()
            .map(|e| e.re)
            .collect())
    };
    let rows: Vec<PesRow> = grid
        .iter()
        .map(|&p| {
            Ok(PesRow {
                parameter: p,
                real_parts: real_parts_at(p)?,
            })
        })
        .collect::<Result<_>>()?;

    let lead = |row: &PesRow| row.real_parts[0];
    let mut critical = None;
    let mut bracket = None;
    for (k, row) in rows.iter().enumerate() {
        if lead(row) == 0.0 {
            critical = Some(row.parameter);
            bracket = Some((k.saturating_sub(1), (k + 1).min(rows.len() - 1)));
            break;
        }
        if k > 0 && lead(&rows[k - 1]) < 0.0 && lead(row) > 0.0 {
            let (p0, p1) = (rows[k - 1].parameter, row.parameter);
            let (f0, f1) = (lead(&rows[k - 1]), lead(row));
            let linear = p0 - f0 * (p1 - p0) / (f1 - f0);
            critical = Some(bisect_crossing(&real_parts_at, p0, p1, linear)?);
            bracket = Some((k - 1, k));
            break;
        }
    }
    let positive = |row: &PesRow| row.real_parts.iter().filter(|&&r| r > 0.0).count();
    let crossing_count = bracket.map_or(0, |(a, b)| positive(&rows[b]).saturating_sub(positive(&rows[a])));

    let (exchange_of_stability, others_stable) = match critical {
        Some(c) if crossing_count > 0 => {
            let m = crossing_count;
            let pattern = rows.iter().all(|row| {
                let crossing = &row.real_parts[..m];
                if row.parameter < c {
                    crossing.iter().all(|&r| r < 0.0)
                } else if row.parameter > c {
                    crossing.iter().all(|&r| r > 0.0)
                } else {
                    crossing.iter().all(|&r| r.abs() <= DEGENERATE_TOL)
                }
            });
            let at_critical = real_parts_at(c)?;
            (pattern, at_critical[m..].iter().all(|&r| r < 0.0))
        }
        _ => (false, false),
    };
    Ok(PesScan {
        rows,
        critical,
        crossing_count,
        exchange_of_stability,
        others_stable,
    })
}

fn bisect_crossing<G>(real_parts_at: &G, mut lo: f64, mut hi: f64, guess: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<Vec<f64>>,
{
    let lead = |p: f64| -> Result<f64> { Ok(real_parts_at(p)?[0]) };
    let g = lead(guess)?;
    if g == 0.0 {
        return Ok(guess);
    }
    if g < 0.0 {
        lo = guess;
    } else {
        hi = guess;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = lead(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub lambda: f64,
    pub fixed_points: Vec<FixedPointRecord>,
    /// Number of stable nodes.
    pub node_count: usize,
    pub saddle_count: usize,
    /// Range of final-state norms over the basin trajectories.
    pub attractor_radius_min: f64,
    pub attractor_radius_max: f64,
    pub basin_converged_fraction: f64,
    pub n_basin: usize,
    pub horizon: f64,
    pub seed: u64,
}

/// Box and grid used to locate the toy system's equilibria.
pub const TOY_BOX: f64 = 2.0;
pub const TOY_GRID: usize = 21;
const TOY_NEWTON_TOL: f64 = 1e-12;
const CONVERGENCE_TOL: f64 = 1e-3;

/// Distance from `x` to the boundary of the square with corners
/// `(+-s, +-s)`, the union of nodes, saddles and their connecting orbits.
fn distance_to_square(x: &[f64], s: f64) -> f64 {
    let (a, b) = (x[0].abs(), x[1].abs());
    let edge = |u: f64, v: f64| -> f64 {
        // distance to the edge {u = s, |v| <= s}
        let dv = (v - s).max(0.0);
        ((u - s).powi(2) + dv * dv).sqrt()
    };
    edge(a, b).min(edge(b, a))
}

fn basin_finals(model: &Model, n_basin: usize, horizon: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..n_basin)
        .into_par_iter()
        .map(|i| {
            let mut rng = member_rng(seed, i as u64);
            let mut x = loop {
                let p = vec![rng.random_range(-TOY_BOX..TOY_BOX), rng.random_range(-TOY_BOX..TOY_BOX)];
                if norm(&p) > 1e-8 {
                    break p;
                }
            };
            Rk4::new(2)
                .advance(model, &mut x, 0.0, horizon, DEFAULT_STEP)
                .map_err(|e| e.in_member(i, seed))?;
            Ok(x)
        })
        .collect()
}

fn check_basin_args(n_basin: usize, horizon: f64) -> Result<()> {
    if n_basin == 0 {
        return Err(Error::invalid("n_basin must be at least 1"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    Ok(())
}

fn report(
    lambda: f64,
    fixed_points: Vec<FixedPointRecord>,
    finals: &[Vec<f64>],
    converged: impl Fn(&[f64]) -> bool,
    horizon: f64,
    seed: u64,
) -> BifurcationReport {
    let count = |c: Stability| fixed_points.iter().filter(|p| p.classification == c).count();
    let radii: Vec<f64> = finals.iter().map(|x| norm(x)).collect();
    let hits = finals.iter().filter(|x| converged(x)).count();
    BifurcationReport {
        lambda,
        node_count: count(Stability::StableNode),
        saddle_count: count(Stability::Saddle),
        attractor_radius_min: radii.iter().copied().fold(f64::INFINITY, f64::min),
        attractor_radius_max: radii.iter().copied().fold(0.0, f64::max),
        basin_converged_fraction: hits as f64 / finals.len() as f64,
        fixed_points,
        n_basin: finals.len(),
        horizon,
        seed,
    }
}

/// Checks the attractor bifurcated from the origin of the toy system for
/// `lambda > 0`: equilibria and their types, the radius range of long-time
/// states, and the fraction of random starts in `[-2, 2]^2` that end on the
/// invariant square (within `1e-3`) or at rest (drift norm `<= 1e-3`).
pub fn verify_toy_attractor(lambda: f64, n_basin: usize, horizon: f64, seed: u64) -> Result<BifurcationReport> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!(
            "attractor bifurcation requires lambda > 0, got {lambda}"
        )));
    }
    check_basin_args(n_basin, horizon)?;
    let model = Model::toy_bifurcation(lambda);
    let fps = find_fixed_points(&model, &[-TOY_BOX; 2], &[TOY_BOX; 2], TOY_GRID, TOY_NEWTON_TOL)?;
    let finals = basin_finals(&model, n_basin, horizon, seed)?;
    let side = lambda.sqrt();
    let converged =
        |x: &[f64]| residual(&model, x) <= CONVERGENCE_TOL || distance_to_square(x, side) <= CONVERGENCE_TOL;
    Ok(report(lambda, fps.points, &finals, converged, horizon, seed))
}

/// Below criticality (`lambda < 0`) the origin should be the only
/// equilibrium and attract every start; convergence here means final norm
/// `<= 1e-6`.
pub fn verify_pre_bifurcation(lambda: f64, n_basin: usize, horizon: f64, seed: u64) -> Result<BifurcationReport> {
    if !(lambda.is_finite() && lambda < 0.0) {
        return Err(Error::invalid(format!(
            "pre-bifurcation check requires lambda < 0, got {lambda}"
        )));
    }
    check_basin_args(n_basin, horizon)?;
    let model = Model::toy_bifurcation(lambda);
    let fps = find_fixed_points(&model, &[-TOY_BOX; 2], &[TOY_BOX; 2], TOY_GRID, TOY_NEWTON_TOL)?;
    let finals = basin_finals(&model, n_basin, horizon, seed)?;
    Ok(report(lambda, fps.points, &finals, |x| norm(x) <= 1e-6, horizon, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn toy_has_nine_equilibria() {
        let m = Model::toy_bifurcation(1.0);
        let s = find_fixed_points(&m, &[-2.0, -2.0], &[2.0, 2.0], 21, 1e-12).unwrap();
        assert_eq!(s.points.len(), 9);
        for p in &s.points {
            for &c in p.location.iter() {
                let nearest = [-1.0, 0.0, 1.0]
                    .iter()
                    .map(|v| (c - v).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-12);
            }
            assert!(p.residual <= RESIDUAL_TOL);
        }
        let origin = s.points.iter().find(|p| p.location.norm() < 1e-12).unwrap();
        assert_eq!(origin.classification, Stability::UnstableNode);
    }

    #[test]
    fn subcritical_toy_has_only_origin() {
        let m = Model::toy_bifurcation(-1.0);
        let s = find_fixed_points(&m, &[-2.0, -2.0], &[2.0, 2.0], 21, 1e-12).unwrap();
        assert_eq!(s.points.len(), 1);
        assert!(s.points[0].location.norm() < 1e-12);
        assert_eq!(s.points[0].classification, Stability::StableNode);
    }

    #[test]
    fn lorenz_equilibria() {
        let m = Model::lorenz63_default();
        let s = find_fixed_points(&m, &[-20.0, -30.0, -5.0], &[20.0, 30.0, 50.0], 11, 1e-10).unwrap();
        assert_eq!(s.points.len(), 3, "{:?}", s.points);
        let c = (8.0f64 / 3.0 * 27.0).sqrt();
        let expected = [[-c, -c, 27.0], [0.0, 0.0, 0.0], [c, c, 27.0]];
        for (p, e) in s.points.iter().zip(&expected) {
            assert!(distance(&p.location, e) < 1e-9, "{:?}", p.location);
            assert_eq!(p.classification, Stability::Saddle);
        }
    }

    #[test]
    fn classification_examples() {
        let m = Model::toy_bifurcation(1.0);
        let node = classify_fixed_point(&m, &sv(&[1.0, 1.0])).unwrap();
        assert_eq!(node.classification, Stability::StableNode);
        assert_eq!(node.eigenvalues, vec![Eigenvalue { re: -2.0, im: 0.0 }; 2]);
        let saddle = classify_fixed_point(&m, &sv(&[1.0, 0.0])).unwrap();
        assert_eq!(saddle.classification, Stability::Saddle);
        assert_eq!(
            saddle.eigenvalues.iter().map(|e| e.re).collect::<Vec<_>>(),
            vec![1.0, -2.0]
        );
        let critical = classify_fixed_point(&Model::toy_bifurcation(0.0), &sv(&[0.0, 0.0])).unwrap();
        assert_eq!(critical.classification, Stability::Degenerate);
        assert!(matches!(
            classify_fixed_point(&m, &sv(&[0.5, 0.5])),
            Err(Error::NotAFixedPoint { .. })
        ));
    }

    #[test]
    fn focus_classes() {
        let e = |re: f64, im: f64| Eigenvalue { re, im };
        assert_eq!(Stability::from_eigenvalues(&[e(-1.0, 2.0), e(-1.0, -2.0)]), Stability::StableFocus);
        assert_eq!(Stability::from_eigenvalues(&[e(0.5, 1.0), e(0.5, -1.0)]), Stability::UnstableFocus);
        assert_eq!(Stability::from_eigenvalues(&[e(1e-9, 1.0), e(1e-9, -1.0)]), Stability::Degenerate);
    }

    #[test]
    fn toy_pes_scan() {
        let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let scan = pes_scan(|l| Ok(Model::toy_bifurcation(l)), &sv(&[0.0, 0.0]), &grid).unwrap();
        for row in &scan.rows {
            assert_eq!(row.real_parts, vec![row.parameter; 2]);
        }
        assert_eq!(scan.critical, Some(0.0));
        assert_eq!(scan.crossing_count, 2);
        assert!(scan.exchange_of_stability);
        assert!(scan.others_stable);
    }

    #[test]
    fn lorenz_pes_scan_refines_crossing() {
        let base = Model::lorenz63_default();
        let scan = pes_scan(|r| base.with_parameter("r", r), &sv(&[0.0; 3]), &[0.5, 1.5]).unwrap();
        assert!((scan.critical.unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(scan.crossing_count, 1);
        assert!(scan.others_stable);
    }

    #[test]
    fn linear_pes_scan() {
        let scan = pes_scan(|a| Ok(Model::linear_scalar(a)), &sv(&[0.0]), &[-1.0, 0.25, 2.0]).unwrap();
        assert!(scan.critical.unwrap().abs() < 1e-12);
        assert_eq!(scan.crossing_count, 1);
    }

    #[test]
    fn pes_rejects_drifting_equilibrium() {
        let err = pes_scan(|l| Ok(Model::toy_bifurcation(l)), &sv(&[1.0, 1.0]), &[0.5, 1.0, 1.5]).unwrap_err();
        assert!(matches!(err, Error::EquilibriumDrift { .. }));
    }

    #[test]
    fn square_distance() {
        assert_eq!(distance_to_square(&[1.0, 0.3], 1.0), 0.0);
        assert_eq!(distance_to_square(&[-0.2, -1.0], 1.0), 0.0);
        assert!((distance_to_square(&[0.0, 0.0], 1.0) - 1.0).abs() < 1e-15);
        assert!((distance_to_square(&[2.0, 2.0], 1.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn verify_rejects_subcritical() {
        assert!(verify_toy_attractor(0.0, 10, 10.0, 1).is_err());
        assert!(verify_toy_attractor(-1.0, 10, 10.0, 1).is_err());
        assert!(verify_pre_bifurcation(0.5, 10, 10.0, 1).is_err());
    }

    #[test]
    fn small_toy_report() {
        let r = verify_toy_attractor(1.0, 50, 50.0, 7).unwrap();
        assert_eq!(r.node_count, 4);
        assert_eq!(r.saddle_count, 4);
        assert_eq!(r.basin_converged_fraction, 1.0);
        assert!(r.attractor_radius_min >= 1.0 - 1e-3);
        assert!(r.attractor_radius_max <= 2f64.sqrt() + 1e-3);
    }
}
