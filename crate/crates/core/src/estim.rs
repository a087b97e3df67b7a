//! Minimum dual divergence estimation.
//!
//! The inner problem maximizes the criterion over α for fixed θ, starting at
//! α = θ where the criterion is exactly zero and therefore feasible. The outer
//! problem minimizes that supremum over θ, starting from the method-of-moments
//! estimate shifted by a fixed offset so that no run starts at the MLE.

use std::cell::Cell;

use serde::Serialize;
use thiserror::Error;

use crate::dual::{DataSource, DualCriterion, DualError};
use crate::models::{ModelError, Sample};
use crate::numerics::{maximize, minimize, OptimDiagnostics, OptimError, OptimizerSpec, Optimum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimError {
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("no feasible criterion value near θ = {theta:?}")]
    NonFiniteCriterion { theta: Vec<f64> },
    #[error("target parameter {theta:?} lies on the margin of the parameter domain")]
    MarginTarget { theta: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSpec {
    pub inner: OptimizerSpec,
    pub outer: OptimizerSpec,
    /// Added to each method-of-moments coordinate to form the outer start.
    pub outer_offset: f64,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        Self { inner: OptimizerSpec::default(), outer: OptimizerSpec::nelder_mead(), outer_offset: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerSolution {
    pub alpha_hat: Vec<f64>,
    pub value: f64,
    pub diagnostics: OptimDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub theta_hat: Vec<f64>,
    pub alpha_hat: Vec<f64>,
    /// inf_θ sup_α of the empirical criterion: the divergence estimate.
    pub criterion_value: f64,
    /// Smallest inner supremum seen during the outer search; never below zero
    /// up to numerical error since M_n(θ, θ) = 0.
    pub min_inner_value: f64,
    pub inner_diagnostics: OptimDiagnostics,
    pub outer_diagnostics: OptimDiagnostics,
    pub generator: String,
    pub gamma: Option<f64>,
    pub model: String,
    pub provenance: String,
    pub outer_start: Vec<f64>,
}

impl EstimationResult {
    pub fn converged(&self) -> bool {
        self.inner_diagnostics.converged && self.outer_diagnostics.converged
    }

    pub fn at_boundary(&self) -> bool {
        self.outer_diagnostics.at_boundary
    }
}

/// An optimizer outcome where an exhausted iteration budget still yields the
/// best point, flagged as not converged.
fn accept_capped(res: Result<Optimum, OptimError>) -> Result<Optimum, EstimError> {
    match res {
        Ok(o) => Ok(o),
        Err(OptimError::IterationCap { best }) => Ok(*best),
        Err(e) => Err(e.into()),
    }
}

/// sup over α of the criterion at θ, from α = θ.
pub fn sup_alpha(
    c: &DualCriterion,
    theta: &[f64],
    data: DataSource<'_>,
    spec: &OptimizerSpec,
) -> Result<InnerSolution, EstimError> {
    let domain = c.model().param_domain();
    domain.check(theta)?;
    if let DataSource::Sample(s) = data {
        s.validate_for(c.model())?;
    }
    let objective = |alpha: &[f64]| c.criterion(theta, alpha, data).map(|v| v.total).unwrap_or(f64::NAN);
    let opt = match maximize(&objective, &domain, theta, spec) {
        Err(OptimError::NoFiniteValue { .. }) => return Err(EstimError::NonFiniteCriterion { theta: theta.to_vec() }),
        other => accept_capped(other)?,
    };
    Ok(InnerSolution { alpha_hat: opt.argmax, value: opt.value, diagnostics: opt.diagnostics })
}

fn outer_search(
    c: &DualCriterion,
    data: DataSource<'_>,
    start: &[f64],
    spec: &EstimatorSpec,
) -> Result<(Optimum, f64), EstimError> {
    let domain = c.model().param_domain();
    let lowest = Cell::new(f64::INFINITY);
    let objective = |theta: &[f64]| match sup_alpha(c, theta, data, &spec.inner) {
        Ok(sol) => {
            lowest.set(lowest.get().min(sol.value));
            sol.value
        }
        Err(_) => f64::NAN,
    };
    let opt = match minimize(&objective, &domain, start, &spec.outer) {
        Err(OptimError::NoFiniteValue { at }) => return Err(EstimError::NonFiniteCriterion { theta: at }),
        other => accept_capped(other)?,
    };
    Ok((opt, lowest.get()))
}

/// θ̂ = arg inf_θ sup_α M_n(θ, α).
pub fn estimate(c: &DualCriterion, sample: &Sample, spec: &EstimatorSpec) -> Result<EstimationResult, EstimError> {
    sample.validate_for(c.model())?;
    let moments = c.model().moment_estimate(sample);
    let start: Vec<f64> = moments.iter().map(|m| m + spec.outer_offset).collect();
    let start = c.model().param_domain().project(&start);
    let data = DataSource::Sample(sample);
    let (outer, min_inner_value) = outer_search(c, data, &start, spec)?;
    let inner = sup_alpha(c, &outer.argmax, data, &spec.inner)?;
    Ok(EstimationResult {
        theta_hat: outer.argmax,
        alpha_hat: inner.alpha_hat,
        criterion_value: inner.value,
        min_inner_value,
        inner_diagnostics: inner.diagnostics,
        outer_diagnostics: outer.diagnostics,
        generator: c.generator().label(),
        gamma: c.generator().power_index(),
        model: c.model().label(),
        provenance: sample.provenance().to_string(),
        outer_start: start,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalPoint {
    pub theta: Vec<f64>,
    pub t_theta: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationFunctionals {
    pub theta_t: Vec<f64>,
    /// T_θ(P_{θ_T}) on each grid point.
    pub t_map: Vec<FunctionalPoint>,
    /// S(P_{θ_T}).
    pub s: Vec<f64>,
    pub s_value: f64,
    pub s_converged: bool,
}

/// T_θ(P_{θ_T}) over `grid` and S(P_{θ_T}), both of which should return θ_T.
pub fn population_functionals(
    c: &DualCriterion,
    theta_t: &[f64],
    grid: &[Vec<f64>],
    spec: &EstimatorSpec,
) -> Result<PopulationFunctionals, EstimError> {
    let domain = c.model().param_domain();
    domain.check(theta_t)?;
    if domain.on_margin(theta_t) {
        return Err(EstimError::MarginTarget { theta: theta_t.to_vec() });
    }
    let data = DataSource::Population(theta_t);
    let mut t_map = Vec::with_capacity(grid.len());
    for theta in grid {
        let sol = sup_alpha(c, theta, data, &spec.inner)?;
        t_map.push(FunctionalPoint {
            theta: theta.clone(),
            t_theta: sol.alpha_hat,
            value: sol.value,
            converged: sol.diagnostics.converged,
        });
    }
    let start: Vec<f64> = theta_t.iter().map(|t| t + spec.outer_offset).collect();
    let (outer, _) = outer_search(c, data, &domain.project(&start), spec)?;
    Ok(PopulationFunctionals {
        theta_t: theta_t.to_vec(),
        t_map,
        s: outer.argmax,
        s_value: outer.value,
        s_converged: outer.diagnostics.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::PowerGenerator;
    use crate::models::{draw_sample, mle, CauchyLocation, ExponentialRate, GaussianMean, ParametricModel, Poisson};
    use crate::numerics::QuadratureSpec;
    use std::sync::Arc;

    fn crit(gamma: f64, model: impl ParametricModel + 'static) -> DualCriterion {
        DualCriterion::new(Arc::new(PowerGenerator::new(gamma).unwrap()), Arc::new(model), QuadratureSpec::default())
    }

    #[test]
    fn kl_inner_problem_is_the_likelihood() {
        let c = crit(0.0, GaussianMean::new(1.0).unwrap());
        let s = Sample::from_scalars(vec![0.0, 2.0]).unwrap();
        for theta in [-1.0, 0.4, 3.0] {
            let sol = sup_alpha(&c, &[theta], DataSource::Sample(&s), &OptimizerSpec::default()).unwrap();
            assert!((sol.alpha_hat[0] - 1.0).abs() <= 1e-6, "θ={theta}: {:?}", sol.alpha_hat);
        }
        let sample = draw_sample(&Poisson, &[1.0], 50, 3).unwrap();
        let c = crit(0.0, Poisson);
        let sol = sup_alpha(&c, &[0.2], DataSource::Sample(&sample), &OptimizerSpec::default()).unwrap();
        assert!((sol.alpha_hat[0] - mle(&Poisson, &sample).unwrap()[0]).abs() <= 1e-6);
    }

    #[test]
    fn population_sup_recovers_target() {
        let c = crit(0.5, GaussianMean::new(1.0).unwrap());
        let sol = sup_alpha(&c, &[0.0], DataSource::Population(&[0.7]), &OptimizerSpec::default()).unwrap();
        assert!((sol.alpha_hat[0] - 0.7).abs() <= 1e-6);
        let sol = sup_alpha(&c, &[0.7], DataSource::Population(&[0.7]), &OptimizerSpec::default()).unwrap();
        assert!(sol.value.abs() <= 1e-6);
    }

    #[test]
    fn gaussian_chi_square_estimate_is_the_mean() {
        let c = crit(2.0, GaussianMean::new(1.0).unwrap());
        let s = Sample::from_scalars(vec![0.0, 2.0]).unwrap();
        let r = estimate(&c, &s, &EstimatorSpec::default()).unwrap();
        assert!((r.theta_hat[0] - 1.0).abs() <= 1e-4, "{:?}", r.theta_hat);
        assert!(r.criterion_value.abs() <= 1e-6);
        assert!(r.min_inner_value >= -1e-10);
        assert!(r.converged());
        assert_ne!(r.outer_start, vec![1.0]);
    }

    #[test]
    fn exponential_chi_square_estimate_stays_feasible() {
        let sample = draw_sample(&ExponentialRate, &[1.5], 200, 8).unwrap();
        let c = crit(2.0, ExponentialRate);
        let r = estimate(&c, &sample, &EstimatorSpec::default()).unwrap();
        let ml = mle(&ExponentialRate, &sample).unwrap();
        assert!((r.theta_hat[0] - ml[0]).abs() <= 1e-4);
        assert!(r.alpha_hat[0] < 2.0 * r.theta_hat[0]);
    }

    #[test]
    fn multi_start_stability() {
        let sample = draw_sample(&Poisson, &[0.6], 200, 21).unwrap();
        let c = crit(0.5, Poisson);
        let base = EstimatorSpec::default();
        let mut hats = Vec::new();
        for offset in [0.1, -0.2, 0.3, 0.05, -0.4] {
            let spec = EstimatorSpec { outer_offset: offset, ..base };
            hats.push(estimate(&c, &sample, &spec).unwrap().theta_hat[0]);
        }
        let spread =
            hats.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - hats.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        assert!(spread <= 10.0 * base.outer.x_tol, "{hats:?}");
    }

    #[test]
    fn cauchy_estimates_share_the_likelihood_saddle() {
        // The inner problem at a likelihood stationary point is stationary at
        // α = θ; with a negative inner curvature its supremum is the lower
        // bound 0, so every divergence returns that point, outliers or not.
        let mut data = draw_sample(&CauchyLocation, &[0.0], 100, 4).unwrap().as_slice().to_vec();
        for v in data.iter_mut().take(10) {
            *v = 10.0;
        }
        let s = Sample::from_scalars(data).unwrap();
        let loglik = |t: &[f64]| s.points().map(|x| CauchyLocation.log_density(t, x)).sum::<f64>();
        let ml = maximize(
            &loglik,
            &CauchyLocation.param_domain(),
            &CauchyLocation.moment_estimate(&s),
            &OptimizerSpec::default(),
        )
        .unwrap()
        .argmax[0];
        for gamma in [0.0, 2.0] {
            let r = estimate(&crit(gamma, CauchyLocation), &s, &EstimatorSpec::default()).unwrap();
            assert!((r.theta_hat[0] - ml).abs() <= 1e-4, "γ={gamma}: {} vs {ml}", r.theta_hat[0]);
            assert!(r.criterion_value.abs() <= 1e-6);
        }
    }

    #[test]
    fn functionals_reject_margin_target() {
        let c = crit(1.0, ExponentialRate);
        let err = population_functionals(&c, &[1e-9], &[vec![1.0]], &EstimatorSpec::default()).unwrap_err();
        assert!(matches!(err, EstimError::MarginTarget { .. }));
    }
}
