//! Built-in autonomous vector fields with analytic Jacobians.
//!
//! Every model is a pure function of the state. The hot-path methods
//! (`drift_into`, `jvp_into`) skip validation and are used by the
//! integrators; `eval_drift` and `eval_jacobian` are the checked entry points.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::state::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Model {
    /// `dx_i/dt = lambda x_i - x_i^3` in two dimensions.
    ToyBifurcation { lambda: f64 },
    Lorenz63 { sigma: f64, r: f64, b: f64 },
    /// Cyclic advection-forcing model: `dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F`.
    Lorenz96 { forcing: f64, n: usize },
    /// `dx_i/dt = a_i x_i`. A single rate is the linear scalar model.
    Linear { rates: Vec<f64> },
}

impl Model {
    pub fn toy_bifurcation(lambda: f64) -> Self {
        Model::ToyBifurcation { lambda }
    }

    pub fn lorenz63(sigma: f64, r: f64, b: f64) -> Self {
        Model::Lorenz63 { sigma, r, b }
    }

    /// Lorenz-63 with sigma = 10, r = 28, b = 8/3.
    pub fn lorenz63_default() -> Self {
        Model::Lorenz63 {
            sigma: 10.0,
            r: 28.0,
            b: 8.0 / 3.0,
        }
    }

    pub fn lorenz96(forcing: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParameter {
                model: "lorenz96".into(),
                message: format!("dimension n must be at least 4, got {n}"),
            });
        }
        Ok(Model::Lorenz96 { forcing, n })
    }

    pub fn linear_scalar(a: f64) -> Self {
        Model::Linear { rates: vec![a] }
    }

    pub fn linear_diagonal(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidParameter {
                model: "linear".into(),
                message: "at least one rate is required".into(),
            });
        }
        Ok(Model::Linear { rates })
    }

    /// Builds a model from its name and a parameter map. Missing parameters
    /// take their defaults; unknown parameter names are rejected.
    pub fn from_parameters(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let unknown = |allowed: &[&str]| -> Result<()> {
            let bad: Vec<&str> = params
                .keys()
                .map(String::as_str)
                .filter(|k| !allowed.contains(k))
                .collect();
            if bad.is_empty() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    model: name.to_string(),
                    message: format!("unknown parameter(s): {}", bad.join(", ")),
                })
            }
        };
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        let model = match name {
            "toy-bifurcation" => {
                unknown(&["lambda"])?;
                Model::ToyBifurcation {
                    lambda: get("lambda", 1.0),
                }
            }
            "lorenz63" => {
                unknown(&["sigma", "r", "b"])?;
                Model::Lorenz63 {
                    sigma: get("sigma", 10.0),
                    r: get("r", 28.0),
                    b: get("b", 8.0 / 3.0),
                }
            }
            "lorenz96" => {
                unknown(&["forcing", "n"])?;
                let n = get("n", 40.0);
                if n.fract() != 0.0 || n < 4.0 {
                    return Err(Error::InvalidParameter {
                        model: name.into(),
                        message: format!("n must be an integer >= 4, got {n}"),
                    });
                }
                Model::lorenz96(get("forcing", 8.0), n as usize)?
            }
            "linear" => {
                if let Some(a) = params.get("a") {
                    unknown(&["a"])?;
                    Model::linear_scalar(*a)
                } else {
                    let mut rates = Vec::new();
                    while let Some(a) = params.get(&format!("a{}", rates.len() + 1)) {
                        rates.push(*a);
                    }
                    let names: Vec<String> = (1..=rates.len()).map(|i| format!("a{i}")).collect();
                    let allowed: Vec<&str> = names.iter().map(String::as_str).collect();
                    unknown(&allowed)?;
                    if rates.is_empty() {
                        Model::linear_scalar(-1.0)
                    } else {
                        Model::linear_diagonal(rates)?
                    }
                }
            }
            other => return Err(Error::UnknownModel(other.to_string())),
        };
        if !model.parameters().values().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter {
                model: name.into(),
                message: "parameters must be finite".into(),
            });
        }
        Ok(model)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::ToyBifurcation { .. } => "toy-bifurcation",
            Model::Lorenz63 { .. } => "lorenz63",
            Model::Lorenz96 { .. } => "lorenz96",
            Model::Linear { .. } => "linear",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Model::ToyBifurcation { .. } => 2,
            Model::Lorenz63 { .. } => 3,
            Model::Lorenz96 { n, .. } => *n,
            Model::Linear { rates } => rates.len(),
        }
    }

    pub fn parameters(&self) -> BTreeMap<String, f64> {
        let mut map = BTreeMap::new();
        match self {
            Model::ToyBifurcation { lambda } => {
                map.insert("lambda".into(), *lambda);
            }
            Model::Lorenz63 { sigma, r, b } => {
                map.insert("sigma".into(), *sigma);
                map.insert("r".into(), *r);
                map.insert("b".into(), *b);
            }
            Model::Lorenz96 { forcing, n } => {
                map.insert("forcing".into(), *forcing);
                map.insert("n".into(), *n as f64);
            }
            Model::Linear { rates } => {
                if rates.len() == 1 {
                    map.insert("a".into(), rates[0]);
                } else {
                    for (i, a) in rates.iter().enumerate() {
                        map.insert(format!("a{}", i + 1), *a);
                    }
                }
            }
        }
        map
    }

    /// Returns a copy with one named parameter replaced. Used to build
    /// one-parameter families for eigenvalue scans.
    pub fn with_parameter(&self, key: &str, value: f64) -> Result<Self> {
        let mut params = self.parameters();
        if !params.contains_key(key) {
            return Err(Error::InvalidParameter {
                model: self.name().into(),
                message: format!("no parameter named `{key}`"),
            });
        }
        params.insert(key.to_string(), value);
        Model::from_parameters(self.name(), &params)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "state" });
        }
        Ok(())
    }

    pub fn eval_drift(&self, x: &StateVector) -> Result<StateVector> {
        self.check(x)?;
        let mut out = vec![0.0; x.dim()];
        self.drift_into(x, &mut out);
        Ok(StateVector::from_vec_unchecked(out))
    }

    pub fn eval_jacobian(&self, x: &StateVector) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(self.jacobian(x))
    }

    /// Unchecked drift evaluation into `out`.
    #[inline]
    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Model::ToyBifurcation { lambda } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = lambda * xi - xi * xi * xi;
                }
            }
            Model::Lorenz63 { sigma, r, b } => {
                let (x1, x2, x3) = (x[0], x[1], x[2]);
                out[0] = sigma * (x2 - x1);
                out[1] = x1 * (r - x3) - x2;
                out[2] = x1 * x2 - b * x3;
            }
            Model::Lorenz96 { forcing, n } => {
                let n = *n;
                for i in 0..n {
                    let xp1 = x[(i + 1) % n];
                    let xm1 = x[(i + n - 1) % n];
                    let xm2 = x[(i + n - 2) % n];
                    out[i] = (xp1 - xm2) * xm1 - x[i] + forcing;
                }
            }
            Model::Linear { rates } => {
                for ((o, &xi), a) in out.iter_mut().zip(x).zip(rates) {
                    *o = a * xi;
                }
            }
        }
    }

    /// Unchecked Jacobian-vector product `J(x) v` into `out`.
    #[inline]
    pub fn jvp_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            Model::ToyBifurcation { lambda } => {
                for ((o, &xi), &vi) in out.iter_mut().zip(x).zip(v) {
                    *o = (lambda - 3.0 * xi * xi) * vi;
                }
            }
            Model::Lorenz63 { sigma, r, b } => {
                let (x1, x2, x3) = (x[0], x[1], x[2]);
                out[0] = sigma * (v[1] - v[0]);
                out[1] = (r - x3) * v[0] - v[1] - x1 * v[2];
                out[2] = x2 * v[0] + x1 * v[1] - b * v[2];
            }
            Model::Lorenz96 { n, .. } => {
                let n = *n;
                for i in 0..n {
                    let (ip1, im1, im2) = ((i + 1) % n, (i + n - 1) % n, (i + n - 2) % n);
                    out[i] = x[im1] * (v[ip1] - v[im2]) + (x[ip1] - x[im2]) * v[im1] - v[i];
                }
            }
            Model::Linear { rates } => {
                for ((o, &vi), a) in out.iter_mut().zip(v).zip(rates) {
                    *o = a * vi;
                }
            }
        }
    }

    /// Unchecked dense Jacobian.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dimension();
        let mut j = DMatrix::zeros(n, n);
        match self {
            Model::ToyBifurcation { lambda } => {
                for i in 0..n {
                    j[(i, i)] = lambda - 3.0 * x[i] * x[i];
                }
            }
            Model::Lorenz63 { sigma, r, b } => {
                j[(0, 0)] = -sigma;
                j[(0, 1)] = *sigma;
                j[(1, 0)] = r - x[2];
                j[(1, 1)] = -1.0;
                j[(1, 2)] = -x[0];
                j[(2, 0)] = x[1];
                j[(2, 1)] = x[0];
                j[(2, 2)] = -b;
            }
            Model::Lorenz96 { .. } => {
                for i in 0..n {
                    let (ip1, im1, im2) = ((i + 1) % n, (i + n - 1) % n, (i + n - 2) % n);
                    j[(i, ip1)] += x[im1];
                    j[(i, im2)] -= x[im1];
                    j[(i, im1)] += x[ip1] - x[im2];
                    j[(i, i)] -= 1.0;
                }
            }
            Model::Linear { rates } => {
                for (i, a) in rates.iter().enumerate() {
                    j[(i, i)] = *a;
                }
            }
        }
        j
    }
}
