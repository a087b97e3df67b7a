//! Parametric models P_θ and canonical exponential families.
//!
//! Parameters are plain `&[f64]` slices of length `param_dim`; observations are
//! `&[f64]` points of length `obs_dim`. Every shipped model is scalar
//! (`obs_dim == 1`), but nothing in the traits assumes it.
//!
//! Exponential families follow the canonical form
//! `p_θ(x) = exp(T(x)′θ − C(θ))` with respect to a dominating measure that
//! absorbs the base density. [`ExponentialFamily::log_base_measure`] exposes
//! that base density so `log_density` can still be a density with respect to
//! Lebesgue or counting measure, which is what quadrature and sampling need.

mod families;
mod io;

pub use families::{Bernoulli, CauchyLocation, ExponentialRate, GaussianMean, Poisson};
pub use io::{read_csv, read_csv_from};

use std::fmt;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Distance kept from open parameter bounds during optimization.
pub const INTERIOR_MARGIN: f64 = 1e-8;

const MLE_MAX_ITERS: usize = 100;
const MLE_MAX_HALVINGS: usize = 30;
const MLE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter {theta:?} is invalid: {reason}")]
    InvalidParameter { theta: Vec<f64>, reason: String },
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("observation {index} ({value:?}) lies outside the model support")]
    OutsideSupport { index: usize, value: Vec<f64> },
    #[error("sample is empty")]
    EmptySample,
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("mean sufficient statistic {mean:?} is outside the range of the cumulant gradient")]
    MeanOutsideRange { mean: Vec<f64> },
    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SupportKind {
    ContinuousInterval,
    DiscreteLattice { step: f64 },
}

/// Common support of every P_θ in a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportDescriptor {
    pub kind: SupportKind,
    pub lo: f64,
    pub hi: f64,
}

impl SupportDescriptor {
    pub fn continuous(lo: f64, hi: f64) -> Self {
        debug_assert!(lo < hi);
        Self { kind: SupportKind::ContinuousInterval, lo, hi }
    }

    pub fn lattice(lo: f64, hi: f64, step: f64) -> Self {
        debug_assert!(lo < hi && step > 0.0);
        Self { kind: SupportKind::DiscreteLattice { step }, lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !(x >= self.lo && x <= self.hi) {
            return false;
        }
        match self.kind {
            SupportKind::ContinuousInterval => true,
            SupportKind::DiscreteLattice { step } => {
                let origin = if self.lo.is_finite() { self.lo } else { 0.0 };
                let k = (x - origin) / step;
                (k - k.round()).abs() <= 1e-9 * (1.0 + k.abs())
            }
        }
    }
}

/// One coordinate of a box-shaped parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn real_line() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_open: true, hi_open: true }
    }

    pub fn positive() -> Self {
        Self { lo: 0.0, hi: f64::INFINITY, lo_open: true, hi_open: true }
    }

    fn contains(&self, v: f64) -> bool {
        let above = if self.lo_open { v > self.lo } else { v >= self.lo };
        let below = if self.hi_open { v < self.hi } else { v <= self.hi };
        v.is_finite() && above && below
    }

    fn inner_lo(&self) -> f64 {
        if self.lo_open {
            self.lo + INTERIOR_MARGIN
        } else {
            self.lo
        }
    }

    fn inner_hi(&self) -> f64 {
        if self.hi_open {
            self.hi - INTERIOR_MARGIN
        } else {
            self.hi
        }
    }
}

/// Θ as a box with optionally open bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamDomain {
    bounds: Vec<Interval>,
}

impl ParamDomain {
    pub fn new(bounds: Vec<Interval>) -> Self {
        Self { bounds }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self { bounds: vec![Interval::real_line(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.bounds.len() && self.bounds.iter().zip(theta).all(|(b, &v)| b.contains(v))
    }

    /// Clamps into the box, staying [`INTERIOR_MARGIN`] away from open bounds.
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(theta)
            .map(|(b, &v)| {
                let v = if v.is_nan() { 0.0 } else { v };
                v.clamp(b.inner_lo(), b.inner_hi())
            })
            .collect()
    }

    /// True when some coordinate sits within the interior margin of a bound (or outside).
    pub fn on_margin(&self, theta: &[f64]) -> bool {
        self.bounds
            .iter()
            .zip(theta)
            .any(|(b, &v)| !b.contains(v) || v <= b.inner_lo() + INTERIOR_MARGIN || v >= b.inner_hi() - INTERIOR_MARGIN)
    }

    pub fn check(&self, theta: &[f64]) -> Result<(), ModelError> {
        if theta.len() != self.bounds.len() {
            return Err(ModelError::DimensionMismatch { expected: self.bounds.len(), got: theta.len() });
        }
        if !self.contains(theta) {
            return Err(ModelError::InvalidParameter {
                theta: theta.to_vec(),
                reason: "outside the parameter domain".into(),
            });
        }
        Ok(())
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Simulated { model: String, theta: Vec<f64>, seed: u64 },
    File { path: PathBuf },
    Inline,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Simulated { model, theta, seed } => write!(f, "{model} theta={theta:?} seed={seed}"),
            Provenance::File { path } => write!(f, "file {}", path.display()),
            Provenance::Inline => f.write_str("inline"),
        }
    }
}

/// An ordered i.i.d. sample stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    dim: usize,
    provenance: Provenance,
}

impl Sample {
    pub fn new(data: Vec<f64>, dim: usize, provenance: Provenance) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::DimensionMismatch { expected: 1, got: 0 });
        }
        if data.is_empty() {
            return Err(ModelError::EmptySample);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(ModelError::DimensionMismatch { expected: dim, got: data.len() % dim });
        }
        Ok(Self { data, dim, provenance })
    }

    /// Scalar observations with inline provenance.
    pub fn from_scalars(data: impl Into<Vec<f64>>) -> Result<Self, ModelError> {
        Self::new(data.into(), 1, Provenance::Inline)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Rejects samples with points outside the model support.
    pub fn validate_for(&self, model: &dyn ParametricModel) -> Result<(), ModelError> {
        if self.dim != model.obs_dim() {
            return Err(ModelError::DimensionMismatch { expected: model.obs_dim(), got: self.dim });
        }
        let support = model.support();
        for (index, x) in self.points().enumerate() {
            if !x.iter().all(|&v| support.contains(v)) {
                return Err(ModelError::OutsideSupport { index, value: x.to_vec() });
            }
        }
        Ok(())
    }
}

/// A parametric model {P_θ : θ ∈ Θ} whose members share one support.
pub trait ParametricModel: Send + Sync + fmt::Debug {
    fn label(&self) -> String;

    fn param_dim(&self) -> usize;

    fn obs_dim(&self) -> usize {
        1
    }

    fn param_domain(&self) -> ParamDomain;

    fn support(&self) -> SupportDescriptor;

    /// log p_θ(x) with respect to Lebesgue (continuous) or counting (lattice) measure.
    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64;

    /// log dP_θ/dP_α at x.
    fn log_ratio(&self, theta: &[f64], alpha: &[f64], x: &[f64]) -> f64 {
        self.log_density(theta, x) - self.log_density(alpha, x)
    }

    /// Rough center and spread of P_θ, used to scale quadrature maps.
    fn location_scale(&self, _theta: &[f64]) -> (f64, f64) {
        (0.0, 1.0)
    }

    /// One observation from P_θ.
    fn draw(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;

    /// A cheap moment-based estimate of θ, always finite.
    fn moment_estimate(&self, sample: &Sample) -> Vec<f64>;

    fn as_exponential_family(&self) -> Option<&dyn ExponentialFamily> {
        None
    }
}

/// A canonical exponential family `p_θ(x) = exp(T(x)′θ − C(θ))`.
pub trait ExponentialFamily: ParametricModel {
    fn sufficient_stat(&self, x: &[f64]) -> DVector<f64>;

    fn cumulant(&self, theta: &[f64]) -> f64;

    fn cumulant_grad(&self, theta: &[f64]) -> DVector<f64>;

    fn cumulant_hess(&self, theta: &[f64]) -> DMatrix<f64>;

    /// Log density of the base measure with respect to Lebesgue/counting measure.
    fn log_base_measure(&self, x: &[f64]) -> f64;

    /// Whether a mean of T lies in the interior of the range of ∇C.
    fn mean_in_range(&self, t_mean: &DVector<f64>) -> bool;

    /// Starting point for the moment-equation Newton solve.
    fn newton_start(&self) -> Vec<f64>;
}

/// The exponent A(θ, α, x) = T(x)′(θ − α) + C(α) − C(θ), computed from T and C.
pub fn canonical_log_ratio(family: &dyn ExponentialFamily, theta: &[f64], alpha: &[f64], x: &[f64]) -> f64 {
    let t = family.sufficient_stat(x);
    let diff: f64 = t.iter().zip(theta.iter().zip(alpha)).map(|(ti, (a, b))| ti * (a - b)).sum();
    diff + family.cumulant(alpha) - family.cumulant(theta)
}

/// T(x)′θ − C(θ) + log base(x), computed from T and C.
pub fn canonical_log_density(family: &dyn ExponentialFamily, theta: &[f64], x: &[f64]) -> f64 {
    let t = family.sufficient_stat(x);
    let dot: f64 = t.iter().zip(theta).map(|(a, b)| a * b).sum();
    dot - family.cumulant(theta) + family.log_base_measure(x)
}

/// dP_θ/dP_α at x.
pub fn density_ratio(model: &dyn ParametricModel, theta: &[f64], alpha: &[f64], x: &[f64]) -> Result<f64, ModelError> {
    let domain = model.param_domain();
    domain.check(theta)?;
    domain.check(alpha)?;
    if x.len() != model.obs_dim() {
        return Err(ModelError::DimensionMismatch { expected: model.obs_dim(), got: x.len() });
    }
    Ok(model.log_ratio(theta, alpha, x).exp())
}

/// Mean of T(X_i) over the sample.
pub fn mean_sufficient_stat(family: &dyn ExponentialFamily, sample: &Sample) -> DVector<f64> {
    let mut acc = DVector::zeros(family.param_dim());
    for x in sample.points() {
        acc += family.sufficient_stat(x);
    }
    acc / sample.len() as f64
}

/// Maximum likelihood estimate: the root of ∇C(θ) = (1/n)ΣT(X_i) by damped Newton.
pub fn mle(family: &dyn ExponentialFamily, sample: &Sample) -> Result<Vec<f64>, ModelError> {
    sample.validate_for(family)?;
    let target = mean_sufficient_stat(family, sample);
    if !family.mean_in_range(&target) {
        return Err(ModelError::MeanOutsideRange { mean: target.iter().copied().collect() });
    }
    let domain = family.param_domain();
    let tol = MLE_RESIDUAL_TOL * target.norm().max(1.0);
    let residual = |theta: &[f64]| family.cumulant_grad(theta) - &target;

    let mut theta = domain.project(&family.newton_start());
    let mut res = residual(&theta);
    for _ in 0..MLE_MAX_ITERS {
        let norm = res.norm();
        let step = newton_step(family, &theta, &res);
        if norm <= tol {
            return Ok(polish(&theta, step, norm, &domain, residual));
        }
        let step = step.ok_or(ModelError::NonConvergence { iterations: 0, residual: norm })?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MLE_MAX_HALVINGS {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t - scale * s).collect();
            if domain.contains(&cand) {
                let r = residual(&cand);
                if r.norm() < norm {
                    accepted = Some((cand, r));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((cand, r)) => {
                theta = cand;
                res = r;
            }
            None => return Err(ModelError::NonConvergence { iterations: MLE_MAX_ITERS, residual: norm }),
        }
    }
    let residual = res.norm();
    if residual <= tol {
        Ok(theta)
    } else {
        Err(ModelError::NonConvergence { iterations: MLE_MAX_ITERS, residual })
    }
}

fn newton_step(family: &dyn ExponentialFamily, theta: &[f64], res: &DVector<f64>) -> Option<DVector<f64>> {
    let hess = family.cumulant_hess(theta);
    match hess.clone().cholesky() {
        Some(chol) => Some(chol.solve(res)),
        None => hess.lu().solve(res),
    }
}

/// One more full Newton step once the residual is within tolerance, kept
/// only if it stays in the domain and does not increase the residual.
fn polish(
    theta: &[f64],
    step: Option<DVector<f64>>,
    norm: f64,
    domain: &ParamDomain,
    residual: impl Fn(&[f64]) -> DVector<f64>,
) -> Vec<f64> {
    let Some(step) = step else { return theta.to_vec() };
    let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t - s).collect();
    if domain.contains(&cand) && residual(&cand).norm() <= norm {
        cand
    } else {
        theta.to_vec()
    }
}

/// `n` i.i.d. draws from P_θ, deterministic in `(theta, n, seed)`.
pub fn draw_sample(model: &dyn ParametricModel, theta: &[f64], n: usize, seed: u64) -> Result<Sample, ModelError> {
    model.param_domain().check(theta)?;
    if n == 0 {
        return Err(ModelError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * model.obs_dim());
    for _ in 0..n {
        data.extend(model.draw(theta, &mut rng));
    }
    Sample::new(data, model.obs_dim(), Provenance::Simulated { model: model.label(), theta: theta.to_vec(), seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn families() -> Vec<Box<dyn ExponentialFamily>> {
        vec![
            Box::new(GaussianMean::new(1.0).unwrap()),
            Box::new(GaussianMean::new(2.5).unwrap()),
            Box::new(Poisson),
            Box::new(ExponentialRate),
            Box::new(Bernoulli),
        ]
    }

    fn params_for(family: &dyn ExponentialFamily) -> Vec<f64> {
        if family.param_domain().bounds()[0].lo == 0.0 {
            vec![0.3, 1.0, 2.7]
        } else {
            vec![-1.2, 0.0, 0.7]
        }
    }

    #[test]
    fn density_ratio_examples() {
        let g = GaussianMean::new(1.0).unwrap();
        assert_eq!(density_ratio(&g, &[0.4], &[0.4], &[1.3]).unwrap(), 1.0);
        assert_relative_eq!(density_ratio(&g, &[0.0], &[1.0], &[0.0]).unwrap(), 0.5f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(
            density_ratio(&ExponentialRate, &[1.0], &[2.0], &[0.0]).unwrap(),
            0.5,
            max_relative = 1e-14
        );
        assert!(density_ratio(&ExponentialRate, &[-1.0], &[2.0], &[0.0]).is_err());
    }

    #[test]
    fn ratio_paths_agree() {
        for fam in families() {
            let xs: Vec<f64> = match fam.support().kind {
                SupportKind::DiscreteLattice { .. } => (0..=fam.support().hi.min(12.0) as i32).map(f64::from).collect(),
                SupportKind::ContinuousInterval => vec![0.0, 0.5, 1.7, 4.0],
            };
            for &t in &params_for(fam.as_ref()) {
                for &a in &params_for(fam.as_ref()) {
                    for &x in &xs {
                        let direct = (fam.log_density(&[t], &[x]) - fam.log_density(&[a], &[x])).exp();
                        let canonical = canonical_log_ratio(fam.as_ref(), &[t], &[a], &[x]).exp();
                        let fast = fam.log_ratio(&[t], &[a], &[x]).exp();
                        assert_relative_eq!(direct, canonical, max_relative = 1e-12);
                        assert_relative_eq!(fast, canonical, max_relative = 1e-12);
                        let ld = canonical_log_density(fam.as_ref(), &[t], &[x]);
                        assert_relative_eq!(ld, fam.log_density(&[t], &[x]), epsilon = 1e-12, max_relative = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn cumulant_derivatives_match_finite_differences() {
        for fam in families() {
            for &t in &params_for(fam.as_ref()) {
                let h = 1e-5 * t.abs().max(1.0);
                let c = |v: f64| fam.cumulant(&[v]);
                let grad = (c(t + h) - c(t - h)) / (2.0 * h);
                let g = fam.cumulant_grad(&[t])[0];
                assert!((grad - g).abs() <= 1e-5 * g.abs().max(1e-3), "{} grad at {t}", fam.label());
                let hg = (fam.cumulant_grad(&[t + h])[0] - fam.cumulant_grad(&[t - h])[0]) / (2.0 * h);
                let hess = fam.cumulant_hess(&[t]);
                assert!((hg - hess[(0, 0)]).abs() <= 1e-5 * hess[(0, 0)].abs(), "{} hess at {t}", fam.label());
                // fullness
                assert!(hess.clone().cholesky().is_some());
                assert_eq!(hess.clone(), hess.transpose());
            }
        }
    }

    #[test]
    fn mle_examples() {
        let g = GaussianMean::new(1.0).unwrap();
        let s = Sample::from_scalars(vec![0.0, 2.0]).unwrap();
        assert_relative_eq!(mle(&g, &s).unwrap()[0], 1.0, epsilon = 1e-12);

        let s = Sample::from_scalars(vec![2.0, 4.0]).unwrap();
        assert_relative_eq!(mle(&Poisson, &s).unwrap()[0], 3f64.ln(), epsilon = 1e-12);

        let s = Sample::from_scalars(vec![1.0, 3.0]).unwrap();
        assert_relative_eq!(mle(&ExponentialRate, &s).unwrap()[0], 0.5, epsilon = 1e-12);

        let s = Sample::from_scalars(vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(mle(&Bernoulli, &s).unwrap()[0], 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn mle_error_paths() {
        let zeros = Sample::from_scalars(vec![0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(mle(&Poisson, &zeros), Err(ModelError::MeanOutsideRange { .. })));
        assert!(matches!(mle(&Bernoulli, &zeros), Err(ModelError::MeanOutsideRange { .. })));
        let bad = Sample::from_scalars(vec![1.5]).unwrap();
        assert!(matches!(mle(&Poisson, &bad), Err(ModelError::OutsideSupport { .. })));
        assert_eq!(Sample::from_scalars(Vec::<f64>::new()), Err(ModelError::EmptySample));
    }

    #[test]
    fn mle_reproduces_mean_statistic() {
        for fam in families() {
            let theta = params_for(fam.as_ref())[1];
            for seed in 0..5 {
                let s = draw_sample(fam.as_ref(), &[theta], 50, seed).unwrap();
                let Ok(est) = mle(fam.as_ref(), &s) else { continue };
                let tbar = mean_sufficient_stat(fam.as_ref(), &s);
                let resid = (fam.cumulant_grad(&est) - tbar).norm();
                assert!(resid <= 1e-10, "{}: residual {resid}", fam.label());
            }
        }
        // far from the Newton start
        let s = Sample::from_scalars(vec![150.0, 250.0]).unwrap();
        assert_relative_eq!(mle(&ExponentialRate, &s).unwrap()[0], 0.005, max_relative = 1e-10);
        assert_relative_eq!(mle(&Poisson, &s).unwrap()[0], 200f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let g = GaussianMean::new(1.0).unwrap();
        let a = draw_sample(&g, &[0.0], 10_000, 7).unwrap();
        let b = draw_sample(&g, &[0.0], 10_000, 7).unwrap();
        assert_eq!(a, b);
        let mean = a.as_slice().iter().sum::<f64>() / 1e4;
        assert!(mean.abs() <= 4.0 / 100.0);

        let p = draw_sample(&Poisson, &[2f64.ln()], 1, 3).unwrap();
        let x = p.as_slice()[0];
        assert!(x >= 0.0 && x.fract() == 0.0);
        assert!(draw_sample(&ExponentialRate, &[0.0], 5, 1).is_err());
        assert!(draw_sample(&Poisson, &[0.0], 0, 1).is_err());
    }

    #[test]
    fn sampler_means_match_cumulant_gradient() {
        let n = 100_000;
        for fam in families() {
            let theta = params_for(fam.as_ref())[2];
            let s = draw_sample(fam.as_ref(), &[theta], n, 11).unwrap();
            let tbar = mean_sufficient_stat(fam.as_ref(), &s)[0];
            let mean = fam.cumulant_grad(&[theta])[0];
            let se = (fam.cumulant_hess(&[theta])[(0, 0)] / n as f64).sqrt();
            assert!((tbar - mean).abs() <= 5.0 * se, "{}: {tbar} vs {mean}", fam.label());
        }
    }

    #[test]
    fn domain_projection_keeps_margin() {
        let d = ExponentialRate.param_domain();
        let p = d.project(&[-3.0]);
        assert!(d.contains(&p));
        assert!(p[0] >= INTERIOR_MARGIN);
        assert!(d.on_margin(&p));
        assert!(!d.on_margin(&[1.0]));
        assert!(ParamDomain::unbounded(2).check(&[1.0]).is_err());
    }

    #[test]
    fn support_membership() {
        let lat = Poisson.support();
        assert!(lat.contains(3.0));
        assert!(!lat.contains(2.5));
        assert!(!lat.contains(-1.0));
        assert!(ExponentialRate.support().contains(0.0));
        assert!(!ExponentialRate.support().contains(-1e-9));
        let s = Sample::from_scalars(vec![1.0, -2.0]).unwrap();
        assert!(matches!(s.validate_for(&ExponentialRate), Err(ModelError::OutsideSupport { index: 1, .. })));
    }

    #[test]
    fn identifiability_spot_check() {
        let models: Vec<Box<dyn ParametricModel>> = vec![
            Box::new(GaussianMean::new(1.0).unwrap()),
            Box::new(Poisson),
            Box::new(ExponentialRate),
            Box::new(Bernoulli),
            Box::new(CauchyLocation),
        ];
        for m in models {
            let (a, b) = if m.param_domain().bounds()[0].lo == 0.0 { (0.5, 1.5) } else { (-0.5, 0.5) };
            let differs =
                [0.0, 1.0, 2.0].iter().any(|&x| (m.log_density(&[a], &[x]) - m.log_density(&[b], &[x])).abs() > 1e-6);
            assert!(differs, "{}", m.label());
        }
    }
}
