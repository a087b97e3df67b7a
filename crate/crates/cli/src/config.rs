//! TOML run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dualdiv::estim::EstimatorSpec;
use dualdiv::models::{Bernoulli, CauchyLocation, ExponentialRate, GaussianMean, ParametricModel, Poisson};
use dualdiv::numerics::{Method, QuadratureSpec};
use dualdiv::verify::{Tolerances, VerifySpec, CHECK_NAMES};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Estimate,
    Simulate,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<ModelConfig>,
    pub divergence: Option<DivergenceConfig>,
    pub data: Option<DataConfig>,
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub quad: QuadratureSpec,
    #[serde(default)]
    pub opt: OptConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    /// Known standard deviation of the Gaussian mean model.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceConfig {
    #[serde(default = "power")]
    pub name: String,
    pub gammas: Vec<f64>,
}

fn power() -> String {
    "power".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Params {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Params {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Params::Scalar(v) => vec![*v],
            Params::Vector(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub theta_true: Params,
    pub n: usize,
    pub seeds: Vec<u64>,
}

/// Optimizer overrides. Shared keys apply to both the inner and outer search.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptConfig {
    pub x_tol: Option<f64>,
    pub f_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
    pub inner_method: Option<Method>,
    pub outer_method: Option<Method>,
    pub outer_offset: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub checks: Option<Vec<String>>,
    pub n: usize,
    pub seed: u64,
    /// A custom case for the configured model; all three are required together.
    pub theta: Option<Params>,
    pub theta_t: Option<Params>,
    pub grid: Option<Vec<Params>>,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            checks: None,
            n: 200,
            seed: 11,
            theta: None,
            theta_t: None,
            grid: None,
            tolerances: Tolerances::default(),
        }
    }
}

pub const MODEL_NAMES: [&str; 5] = ["gaussian", "poisson", "exponential", "bernoulli", "cauchy"];

impl RunConfig {
    /// Parses and validates a config, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(data) = cfg.data.as_mut() {
            if data.path.is_relative() {
                data.path = base.join(&data.path);
            }
        }
        if let Some(path) = cfg.output.path.as_mut() {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        self.quad.validate().map_err(|e| e.to_string())?;
        let spec = self.estimator();
        spec.inner.validate().map_err(|e| e.to_string())?;
        spec.outer.validate().map_err(|e| e.to_string())?;
        if let Some(d) = &self.divergence {
            if d.name != "power" {
                return Err(format!("unknown divergence '{}' (expected 'power')", d.name));
            }
            if d.gammas.is_empty() {
                return Err("divergence.gammas must be nonempty".into());
            }
            if let Some(g) = d.gammas.iter().find(|g| !g.is_finite()) {
                return Err(format!("gamma {g} is not finite"));
            }
        }
        if let Some(m) = &self.model {
            self.build_model_from(m)?;
        }
        match self.command {
            Command::Estimate | Command::Simulate => {
                let model = self.model.as_ref().ok_or("a [model] block is required")?;
                if self.divergence.is_none() {
                    return Err("a [divergence] block with gammas is required".into());
                }
                match (&self.data, &self.simulation, self.command) {
                    (Some(_), Some(_), _) | (None, None, _) => {
                        return Err("exactly one of [data] and [simulation] must be present".into())
                    }
                    (None, Some(_), Command::Estimate) | (Some(_), None, Command::Simulate) => {
                        return Err(format!(
                            "command '{}' needs a [{}] block",
                            self.command.name(),
                            if self.command == Command::Estimate { "data" } else { "simulation" }
                        ))
                    }
                    _ => {}
                }
                if let Some(sim) = &self.simulation {
                    if sim.n == 0 {
                        return Err("simulation.n must be positive".into());
                    }
                    if sim.seeds.is_empty() {
                        return Err("simulation.seeds must be nonempty".into());
                    }
                    let built = self.build_model_from(model)?;
                    built.param_domain().check(&sim.theta_true.to_vec()).map_err(|e| e.to_string())?;
                }
            }
            Command::Verify => {
                if let Some(checks) = &self.verify.checks {
                    if let Some(bad) = checks.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
                        return Err(format!("unknown check '{bad}' (known: {})", CHECK_NAMES.join(", ")));
                    }
                }
                let custom = [self.verify.theta.is_some(), self.verify.theta_t.is_some(), self.verify.grid.is_some()];
                if custom.iter().any(|&c| c) && !custom.iter().all(|&c| c) {
                    return Err("verify.theta, verify.theta_t and verify.grid must be given together".into());
                }
                if custom[0] && self.model.is_none() {
                    return Err("a custom verify case needs a [model] block".into());
                }
                if self.verify.n == 0 {
                    return Err("verify.n must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn gammas(&self) -> Option<&[f64]> {
        self.divergence.as_ref().map(|d| d.gammas.as_slice())
    }

    pub fn build_model(&self) -> Option<Arc<dyn ParametricModel>> {
        self.model.as_ref().map(|m| self.build_model_from(m).expect("validated"))
    }

    fn build_model_from(&self, m: &ModelConfig) -> Result<Arc<dyn ParametricModel>, String> {
        if m.sigma.is_some() && m.name != "gaussian" && MODEL_NAMES.contains(&m.name.as_str()) {
            return Err(format!("model '{}' takes no sigma", m.name));
        }
        Ok(match m.name.as_str() {
            "gaussian" => Arc::new(GaussianMean::new(m.sigma.unwrap_or(1.0)).map_err(|e| e.to_string())?),
            "poisson" => Arc::new(Poisson),
            "exponential" => Arc::new(ExponentialRate),
            "bernoulli" => Arc::new(Bernoulli),
            "cauchy" => Arc::new(CauchyLocation),
            other => return Err(format!("unknown model '{other}' (known: {})", MODEL_NAMES.join(", "))),
        })
    }

    pub fn estimator(&self) -> EstimatorSpec {
        let mut spec = EstimatorSpec::default();
        let o = &self.opt;
        for s in [&mut spec.inner, &mut spec.outer] {
            if let Some(v) = o.x_tol {
                s.x_tol = v;
            }
            if let Some(v) = o.f_tol {
                s.f_tol = v;
            }
            if let Some(v) = o.max_iters {
                s.max_iters = v;
            }
            if let Some(v) = o.restarts {
                s.restarts = v;
            }
        }
        if let Some(m) = o.inner_method {
            spec.inner.method = m;
        }
        if let Some(m) = o.outer_method {
            spec.outer.method = m;
        }
        if let Some(v) = o.outer_offset {
            spec.outer_offset = v;
        }
        spec
    }

    pub fn verify_spec(&self) -> VerifySpec {
        VerifySpec { estimator: self.estimator(), tolerances: self.verify.tolerances }
    }
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
        }
    }
}
