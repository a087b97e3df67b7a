use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Bernoulli as BernoulliDist, Cauchy, Distribution, Exp, Normal, Poisson as PoissonDist};

use super::{ExponentialFamily, Interval, ModelError, ParamDomain, ParametricModel, Sample, SupportDescriptor};

const LN_FACTORIAL_TABLE: usize = 256;

fn ln_factorial(k: f64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_TABLE);
        let mut acc = 0.0;
        t.push(0.0);
        for i in 1..LN_FACTORIAL_TABLE {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    if k < LN_FACTORIAL_TABLE as f64 {
        table[k as usize]
    } else {
        // Stirling series for ln Γ(k + 1)
        let n = k + 1.0;
        (n - 0.5) * n.ln() - n + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * n) - 1.0 / (360.0 * n.powi(3))
            + 1.0 / (1260.0 * n.powi(5))
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn sample_mean(sample: &Sample) -> f64 {
    sample.as_slice().iter().sum::<f64>() / sample.len() as f64
}

/// N(θ, σ²) with σ known. Canonical parameter is the mean itself:
/// T(x) = x/σ², C(θ) = θ²/(2σ²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMean {
    sigma: f64,
}

impl GaussianMean {
    pub fn new(sigma: f64) -> Result<Self, ModelError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ModelError::InvalidParameter { theta: vec![sigma], reason: "sigma must be positive".into() });
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn var(&self) -> f64 {
        self.sigma * self.sigma
    }
}

impl ParametricModel for GaussianMean {
    fn label(&self) -> String {
        format!("gaussian-mean(sigma={})", self.sigma)
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn param_domain(&self) -> ParamDomain {
        ParamDomain::unbounded(1)
    }

    fn support(&self) -> SupportDescriptor {
        SupportDescriptor::continuous(f64::NEG_INFINITY, f64::INFINITY)
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let z = x[0] - theta[0];
        -0.5 * z * z / self.var() - (self.sigma * (2.0 * PI).sqrt()).ln()
    }

    fn log_ratio(&self, theta: &[f64], alpha: &[f64], x: &[f64]) -> f64 {
        let (t, a) = (theta[0], alpha[0]);
        (t - a) * (2.0 * x[0] - t - a) / (2.0 * self.var())
    }

    fn location_scale(&self, theta: &[f64]) -> (f64, f64) {
        (theta[0], self.sigma)
    }

    fn draw(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let d = Normal::new(theta[0], self.sigma).expect("validated sigma");
        vec![d.sample(rng)]
    }

    fn moment_estimate(&self, sample: &Sample) -> Vec<f64> {
        vec![sample_mean(sample)]
    }

    fn as_exponential_family(&self) -> Option<&dyn ExponentialFamily> {
        Some(self)
    }
}

impl ExponentialFamily for GaussianMean {
    fn sufficient_stat(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, x[0] / self.var())
    }

    fn cumulant(&self, theta: &[f64]) -> f64 {
        0.5 * theta[0] * theta[0] / self.var()
    }

    fn cumulant_grad(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, theta[0] / self.var())
    }

    fn cumulant_hess(&self, _theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0 / self.var())
    }

    fn log_base_measure(&self, x: &[f64]) -> f64 {
        -0.5 * x[0] * x[0] / self.var() - (self.sigma * (2.0 * PI).sqrt()).ln()
    }

    fn mean_in_range(&self, t_mean: &DVector<f64>) -> bool {
        t_mean[0].is_finite()
    }

    fn newton_start(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// Poisson counts with θ = log λ: T(x) = x, C(θ) = e^θ, base 1/x!.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Poisson;

impl ParametricModel for Poisson {
    fn label(&self) -> String {
        "poisson".into()
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn param_domain(&self) -> ParamDomain {
        ParamDomain::unbounded(1)
    }

    fn support(&self) -> SupportDescriptor {
        SupportDescriptor::lattice(0.0, f64::INFINITY, 1.0)
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let k = x[0];
        k * theta[0] - theta[0].exp() - ln_factorial(k)
    }

    fn log_ratio(&self, theta: &[f64], alpha: &[f64], x: &[f64]) -> f64 {
        x[0] * (theta[0] - alpha[0]) + alpha[0].exp() - theta[0].exp()
    }

    fn location_scale(&self, theta: &[f64]) -> (f64, f64) {
        let lambda = theta[0].exp();
        (lambda, lambda.sqrt().max(1.0))
    }

    fn draw(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let d = PoissonDist::new(theta[0].exp()).expect("positive rate");
        vec![d.sample(rng)]
    }

    /// log x̄, with x̄ floored at 1/(2n) so an all-zero sample stays finite.
    fn moment_estimate(&self, sample: &Sample) -> Vec<f64> {
        let floor = 0.5 / sample.len() as f64;
        vec![sample_mean(sample).max(floor).ln()]
    }

    fn as_exponential_family(&self) -> Option<&dyn ExponentialFamily> {
        Some(self)
    }
}

impl ExponentialFamily for Poisson {
    fn sufficient_stat(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, x[0])
    }

    fn cumulant(&self, theta: &[f64]) -> f64 {
        theta[0].exp()
    }

    fn cumulant_grad(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, theta[0].exp())
    }

    fn cumulant_hess(&self, theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, theta[0].exp())
    }

    fn log_base_measure(&self, x: &[f64]) -> f64 {
        -ln_factorial(x[0])
    }

    fn mean_in_range(&self, t_mean: &DVector<f64>) -> bool {
        t_mean[0] > 0.0 && t_mean[0].is_finite()
    }

    fn newton_start(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// p_θ(x) = θ e^{−θx} on [0, ∞) with θ > 0: T(x) = −x, C(θ) = −log θ.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExponentialRate;

impl ParametricModel for ExponentialRate {
    fn label(&self) -> String {
        "exponential-rate".into()
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn param_domain(&self) -> ParamDomain {
        ParamDomain::new(vec![Interval::positive()])
    }

    fn support(&self) -> SupportDescriptor {
        SupportDescriptor::continuous(0.0, f64::INFINITY)
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        if x[0] < 0.0 {
            return f64::NEG_INFINITY;
        }
        theta[0].ln() - theta[0] * x[0]
    }

    fn log_ratio(&self, theta: &[f64], alpha: &[f64], x: &[f64]) -> f64 {
        (theta[0] / alpha[0]).ln() - (theta[0] - alpha[0]) * x[0]
    }

    fn location_scale(&self, theta: &[f64]) -> (f64, f64) {
        (1.0 / theta[0], 1.0 / theta[0])
    }

    fn draw(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let d = Exp::new(theta[0]).expect("positive rate");
        vec![d.sample(rng)]
    }

    fn moment_estimate(&self, sample: &Sample) -> Vec<f64> {
        let mean = sample_mean(sample);
        vec![if mean > 0.0 { 1.0 / mean } else { 1.0 }]
    }

    fn as_exponential_family(&self) -> Option<&dyn ExponentialFamily> {
        Some(self)
    }
}

impl ExponentialFamily for ExponentialRate {
    fn sufficient_stat(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, -x[0])
    }

    fn cumulant(&self, theta: &[f64]) -> f64 {
        -theta[0].ln()
    }

    fn cumulant_grad(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, -1.0 / theta[0])
    }

    fn cumulant_hess(&self, theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0 / (theta[0] * theta[0]))
    }

    fn log_base_measure(&self, x: &[f64]) -> f64 {
        if x[0] < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }

    fn mean_in_range(&self, t_mean: &DVector<f64>) -> bool {
        t_mean[0] < 0.0 && t_mean[0].is_finite()
    }

    fn newton_start(&self) -> Vec<f64> {
        vec![1.0]
    }
}

/// Bernoulli on {0, 1} with θ = logit p: T(x) = x, C(θ) = log(1 + e^θ).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bernoulli;

impl ParametricModel for Bernoulli {
    fn label(&self) -> String {
        "bernoulli".into()
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn param_domain(&self) -> ParamDomain {
        ParamDomain::unbounded(1)
    }

    fn support(&self) -> SupportDescriptor {
        SupportDescriptor::lattice(0.0, 1.0, 1.0)
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        x[0] * theta[0] - softplus(theta[0])
    }

    fn log_ratio(&self, theta: &[f64], alpha: &[f64], x: &[f64]) -> f64 {
        x[0] * (theta[0] - alpha[0]) + softplus(alpha[0]) - softplus(theta[0])
    }

    fn location_scale(&self, theta: &[f64]) -> (f64, f64) {
        (sigmoid(theta[0]), 0.5)
    }

    fn draw(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let d = BernoulliDist::new(sigmoid(theta[0])).expect("probability in [0, 1]");
        vec![if d.sample(rng) { 1.0 } else { 0.0 }]
    }

    /// logit x̄, with x̄ clamped to [1/(2n), 1 − 1/(2n)].
    fn moment_estimate(&self, sample: &Sample) -> Vec<f64> {
        let eps = 0.5 / sample.len() as f64;
        let p = sample_mean(sample).clamp(eps, 1.0 - eps);
        vec![(p / (1.0 - p)).ln()]
    }

    fn as_exponential_family(&self) -> Option<&dyn ExponentialFamily> {
        Some(self)
    }
}

impl ExponentialFamily for Bernoulli {
    fn sufficient_stat(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, x[0])
    }

    fn cumulant(&self, theta: &[f64]) -> f64 {
        softplus(theta[0])
    }

    fn cumulant_grad(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, sigmoid(theta[0]))
    }

    fn cumulant_hess(&self, theta: &[f64]) -> DMatrix<f64> {
        let p = sigmoid(theta[0]);
        DMatrix::from_element(1, 1, p * (1.0 - p))
    }

    fn log_base_measure(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn mean_in_range(&self, t_mean: &DVector<f64>) -> bool {
        t_mean[0] > 0.0 && t_mean[0] < 1.0
    }

    fn newton_start(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// Cauchy location family with unit scale. Not an exponential family.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CauchyLocation;

impl ParametricModel for CauchyLocation {
    fn label(&self) -> String {
        "cauchy-location".into()
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn param_domain(&self) -> ParamDomain {
        ParamDomain::unbounded(1)
    }

    fn support(&self) -> SupportDescriptor {
        SupportDescriptor::continuous(f64::NEG_INFINITY, f64::INFINITY)
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let z = x[0] - theta[0];
        -PI.ln() - (z * z).ln_1p()
    }

    fn log_ratio(&self, theta: &[f64], alpha: &[f64], x: &[f64]) -> f64 {
        let zt = x[0] - theta[0];
        let za = x[0] - alpha[0];
        (za * za).ln_1p() - (zt * zt).ln_1p()
    }

    fn location_scale(&self, theta: &[f64]) -> (f64, f64) {
        (theta[0], 1.0)
    }

    fn draw(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let d = Cauchy::new(theta[0], 1.0).expect("unit scale");
        vec![d.sample(rng)]
    }

    /// The Cauchy law has no mean; the sample median stands in.
    fn moment_estimate(&self, sample: &Sample) -> Vec<f64> {
        let mut xs = sample.as_slice().to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let median = if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) };
        vec![median]
    }
}
