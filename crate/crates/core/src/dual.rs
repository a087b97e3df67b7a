//! The dual criterion of a divergence generator φ paired with a parametric model.
//!
//! For parameters θ, α,
//!
//! ```text
//! h(θ, α, x) = ∫ φ′(dP_θ/dP_α) dP_θ − φ#(dP_θ/dP_α (x))
//! ```
//!
//! and the divergence φ(θ, θ_T) between P_θ and P_{θ_T} is the supremum over
//! α of ∫ h(θ, α, ·) dP_{θ_T}. Replacing P_{θ_T} by the empirical measure gives
//! M_n(θ, α). The ratio always has P_θ in the numerator.
//!
//! The feasible set {α : φ(θ, α) < ∞} is never written down. A pair is
//! infeasible exactly when one of the integrals diverges, and its criterion is
//! then −∞.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::divergence::{DivergenceGenerator, Term};
use crate::models::{ModelError, ParametricModel, Sample};
use crate::numerics::{integrate_weighted, QuadError, QuadratureSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("the Cressie-Read form needs a power generator with γ ∉ {{0, 1}}")]
    NotCressieRead,
}

/// Where the outer expectation is taken.
#[derive(Debug, Clone, Copy)]
pub enum DataSource<'a> {
    Sample(&'a Sample),
    Population(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionValue {
    pub total: f64,
    /// ∫ φ′(dP_θ/dP_α) dP_θ
    pub integral_term: f64,
    /// ∫ φ#(dP_θ/dP_α) dP_{θ_T}, or its sample mean.
    pub outer_term: f64,
    pub feasible: bool,
    /// Sample indices where φ# is infinite.
    pub offending: Vec<usize>,
}

impl CriterionValue {
    fn from_terms(integral_term: f64, outer_term: f64, offending: Vec<usize>) -> Self {
        let total = integral_term - outer_term;
        if integral_term.is_finite() && outer_term.is_finite() && total.is_finite() {
            Self { total, integral_term, outer_term, feasible: true, offending }
        } else {
            Self { total: f64::NEG_INFINITY, integral_term, outer_term, feasible: false, offending }
        }
    }

    fn infeasible(integral_term: f64) -> Self {
        Self { total: f64::NEG_INFINITY, integral_term, outer_term: f64::NAN, feasible: false, offending: Vec::new() }
    }
}

/// Divergent integrals become signed infinities; other quadrature failures are errors.
fn extended(res: Result<crate::numerics::Quadrature, QuadError>) -> Result<f64, DualError> {
    match res {
        Ok(q) => Ok(q.value),
        Err(QuadError::Divergent { estimate }) => Ok(if estimate < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone)]
pub struct DualCriterion {
    generator: Arc<dyn DivergenceGenerator>,
    model: Arc<dyn ParametricModel>,
    quad: QuadratureSpec,
}

impl DualCriterion {
    pub fn new(generator: Arc<dyn DivergenceGenerator>, model: Arc<dyn ParametricModel>, quad: QuadratureSpec) -> Self {
        Self { generator, model, quad }
    }

    pub fn generator(&self) -> &dyn DivergenceGenerator {
        self.generator.as_ref()
    }

    pub fn model(&self) -> &dyn ParametricModel {
        self.model.as_ref()
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    fn check(&self, params: &[&[f64]]) -> Result<(), DualError> {
        let domain = self.model.param_domain();
        for p in params {
            domain.check(p)?;
        }
        Ok(())
    }

    /// φ#(dP_θ/dP_α (x)).
    fn sharp_at(&self, theta: &[f64], alpha: &[f64], x: &[f64]) -> f64 {
        self.generator.weighted(Term::Sharp, self.model.log_ratio(theta, alpha, x), 0.0)
    }

    /// ∫ φ′(dP_θ/dP_α) dP_θ, +∞ or −∞ when it diverges.
    pub fn integral_term(&self, theta: &[f64], alpha: &[f64]) -> Result<f64, DualError> {
        self.check(&[theta, alpha])?;
        if theta == alpha {
            return Ok(0.0);
        }
        let (model, gen) = (self.model.as_ref(), self.generator.as_ref());
        extended(integrate_weighted(
            model,
            theta,
            |x, lw| gen.weighted(Term::Derivative, model.log_ratio(theta, alpha, x), lw),
            &self.quad,
        ))
    }

    /// x ↦ h(θ, α, x) with the integral term computed once.
    pub fn h_at(&self, theta: &[f64], alpha: &[f64]) -> Result<HFunction<'_>, DualError> {
        let integral_term = self.integral_term(theta, alpha)?;
        Ok(HFunction { criterion: self, theta: theta.to_vec(), alpha: alpha.to_vec(), integral_term })
    }

    pub fn h_eval(&self, theta: &[f64], alpha: &[f64], x: &[f64]) -> Result<f64, DualError> {
        Ok(self.h_at(theta, alpha)?.eval(x))
    }

    /// ∫ h(θ, α, ·) dP_{θ_T}.
    pub fn population_criterion(
        &self,
        theta: &[f64],
        alpha: &[f64],
        theta_t: &[f64],
    ) -> Result<CriterionValue, DualError> {
        self.check(&[theta_t])?;
        let integral_term = self.integral_term(theta, alpha)?;
        if !integral_term.is_finite() {
            return Ok(CriterionValue::infeasible(integral_term));
        }
        let (model, gen) = (self.model.as_ref(), self.generator.as_ref());
        let outer_term = if theta == alpha {
            0.0
        } else {
            extended(integrate_weighted(
                model,
                theta_t,
                |x, lw| gen.weighted(Term::Sharp, model.log_ratio(theta, alpha, x), lw),
                &self.quad,
            ))?
        };
        Ok(CriterionValue::from_terms(integral_term, outer_term, Vec::new()))
    }

    /// M_n(θ, α) = ∫ φ′(dP_θ/dP_α) dP_θ − (1/n) Σ φ#(dP_θ/dP_α (X_i)).
    pub fn empirical_criterion(
        &self,
        theta: &[f64],
        alpha: &[f64],
        sample: &Sample,
    ) -> Result<CriterionValue, DualError> {
        sample.validate_for(self.model.as_ref())?;
        let integral_term = self.integral_term(theta, alpha)?;
        if !integral_term.is_finite() {
            return Ok(CriterionValue::infeasible(integral_term));
        }
        let mut offending = Vec::new();
        let mut sum = 0.0;
        for (i, x) in sample.points().enumerate() {
            let s = self.sharp_at(theta, alpha, x);
            if !s.is_finite() {
                offending.push(i);
            }
            sum += s;
        }
        let outer_term = sum / sample.len() as f64;
        Ok(CriterionValue::from_terms(integral_term, outer_term, offending))
    }

    pub fn criterion(&self, theta: &[f64], alpha: &[f64], data: DataSource<'_>) -> Result<CriterionValue, DualError> {
        match data {
            DataSource::Sample(s) => self.empirical_criterion(theta, alpha, s),
            DataSource::Population(t) => self.population_criterion(theta, alpha, t),
        }
    }

    /// φ(θ, θ_T) = ∫ φ(dP_θ/dP_{θ_T}) dP_{θ_T} by direct quadrature; +∞ if it diverges.
    pub fn divergence_direct(&self, theta: &[f64], theta_t: &[f64]) -> Result<f64, DualError> {
        self.check(&[theta, theta_t])?;
        if theta == theta_t {
            return Ok(0.0);
        }
        let (model, gen) = (self.model.as_ref(), self.generator.as_ref());
        let value = extended(integrate_weighted(
            model,
            theta_t,
            |x, lw| gen.weighted(Term::Value, model.log_ratio(theta, theta_t, x), lw),
            &self.quad,
        ))?;
        // Rounding can leave a tiny negative value near θ = θ_T.
        Ok(if value.is_nan() { f64::INFINITY } else { value.max(0.0) })
    }

    /// The population criterion written out for φ_γ with γ ∉ {0, 1}:
    /// (1/(γ−1)) ∫ r^{γ−1} dP_θ − (1/γ) ∫ r^γ dP_{θ_T} − 1/(γ(γ−1)), r = dP_θ/dP_α.
    pub fn cressie_read_criterion(&self, theta: &[f64], alpha: &[f64], theta_t: &[f64]) -> Result<f64, DualError> {
        let gamma = self.generator.power_index().ok_or(DualError::NotCressieRead)?;
        if gamma == 0.0 || gamma == 1.0 {
            return Err(DualError::NotCressieRead);
        }
        self.check(&[theta, alpha, theta_t])?;
        let model = self.model.as_ref();
        let moment = |at: &[f64], power: f64| {
            extended(integrate_weighted(
                model,
                at,
                |x, lw| {
                    let v = (power * model.log_ratio(theta, alpha, x) + lw).exp();
                    if v.is_nan() {
                        0.0
                    } else {
                        v
                    }
                },
                &self.quad,
            ))
        };
        let first = moment(theta, gamma - 1.0)?;
        if !first.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        let second = moment(theta_t, gamma)?;
        if !second.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(first / (gamma - 1.0) - second / gamma - 1.0 / (gamma * (gamma - 1.0)))
    }
}

/// h(θ, α, ·) for fixed (θ, α).
#[derive(Debug, Clone)]
pub struct HFunction<'a> {
    criterion: &'a DualCriterion,
    theta: Vec<f64>,
    alpha: Vec<f64>,
    integral_term: f64,
}

impl HFunction<'_> {
    pub fn integral_term(&self) -> f64 {
        self.integral_term
    }

    pub fn feasible(&self) -> bool {
        self.integral_term.is_finite()
    }

    /// −∞ when (θ, α) is infeasible.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if !self.feasible() {
            return f64::NEG_INFINITY;
        }
        let v = self.integral_term - self.criterion.sharp_at(&self.theta, &self.alpha, x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}
