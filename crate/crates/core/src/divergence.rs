//! Convex divergence generators φ.
//!
//! A generator is a differentiable convex function with φ(1) = 0 whose domain
//! is an interval (a_φ, b_φ) containing 1. Besides φ and φ′ the dual criterion
//! needs φ#(x) = xφ′(x) − φ(x) and the curvature constants φ″(1), φ‴(1).
//!
//! The Cressie-Read power family is the main inhabitant:
//!
//! | γ    | divergence      | φ_γ(x)                 |
//! |------|-----------------|------------------------|
//! | 1    | KL              | x log x − x + 1        |
//! | 0    | modified KL     | −log x + x − 1         |
//! | 2    | χ²              | ½(x − 1)²              |
//! | −1   | modified χ²     | ½(x − 1)²/x            |
//! | 1/2  | Hellinger       | 2(√x − 1)²             |
//!
//! For every power generator φ_γ″(1) = 1 and φ_γ‴(1) = γ − 2. All of them
//! satisfy the regularity condition (RC) required by the dual representation;
//! it is not checked at runtime. Generators built from arbitrary closures
//! ([`FnGenerator`]) are accepted as-is.
//!
//! Values live on the extended real line: evaluating outside the domain
//! returns `+∞` instead of failing, so optimizers always see a total function.

use std::fmt;

use thiserror::Error;

/// Which of φ, φ′, φ# to evaluate in [`DivergenceGenerator::weighted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Value,
    Derivative,
    Sharp,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("x = {x} lies outside the generator domain ({lo}, {hi})")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },
    #[error("derivative is not finite at x = {x} (value {value})")]
    InfiniteDerivative { x: f64, value: f64 },
    #[error("invalid power index {0}")]
    InvalidGamma(f64),
}

/// A differentiable convex function φ with φ(1) = 0.
pub trait DivergenceGenerator: Send + Sync + fmt::Debug {
    /// φ(x), `+∞` outside the domain.
    fn value(&self, x: f64) -> f64;

    /// φ′(x). May be ±∞ at a finite domain endpoint and NaN outside the domain.
    fn derivative(&self, x: f64) -> f64;

    /// φ#(x) = xφ′(x) − φ(x).
    fn sharp(&self, x: f64) -> f64 {
        x * self.derivative(x) - self.value(x)
    }

    /// Domain endpoints (a_φ, b_φ), possibly infinite.
    fn domain(&self) -> (f64, f64);

    fn second_derivative_at_one(&self) -> f64;

    fn third_derivative_at_one(&self) -> f64;

    fn label(&self) -> String;

    /// Index γ when the generator is a member of the power family.
    fn power_index(&self) -> Option<f64> {
        None
    }

    /// Evaluates `term(r) * w` for `r = exp(log_ratio)` and `w = exp(log_weight)`.
    ///
    /// Integrands of the form φ′(dP_θ/dP_α)·p_θ routinely pair an overflowing
    /// ratio with an underflowing density. Implementations should keep the
    /// product finite whenever it is representable. A zero weight contributes
    /// nothing.
    fn weighted(&self, term: Term, log_ratio: f64, log_weight: f64) -> f64 {
        let w = log_weight.exp();
        if w == 0.0 {
            return 0.0;
        }
        let r = log_ratio.exp();
        let g = match term {
            Term::Value => self.value(r),
            Term::Derivative => self.derivative(r),
            Term::Sharp => self.sharp(r),
        };
        g * w
    }
}

/// φ′ with a flag for points outside the domain or with infinite slope.
pub fn checked_derivative(gen: &dyn DivergenceGenerator, x: f64) -> Result<f64, GeneratorError> {
    let (lo, hi) = gen.domain();
    if !(x >= lo && x <= hi) {
        return Err(GeneratorError::OutsideDomain { x, lo, hi });
    }
    let value = gen.derivative(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(GeneratorError::InfiniteDerivative { x, value })
    }
}

/// φ# with the same flags as [`checked_derivative`].
pub fn checked_sharp(gen: &dyn DivergenceGenerator, x: f64) -> Result<f64, GeneratorError> {
    checked_derivative(gen, x)?;
    let value = gen.sharp(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(GeneratorError::InfiniteDerivative { x, value })
    }
}

/// (e^u − 1)/u, continuous at 0.
fn exprel(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 + 0.5 * u
    } else {
        u.exp_m1() / u
    }
}

/// `(r^a − 1)/a · w` given `ln r` and `ln w`, with the a → 0 limit `ln r · w`.
fn power_term(a: f64, log_ratio: f64, log_weight: f64) -> f64 {
    if log_weight == f64::NEG_INFINITY {
        return 0.0;
    }
    if a == 0.0 {
        return log_ratio * log_weight.exp();
    }
    let u = a * log_ratio;
    if u.abs() <= 1.0 {
        log_ratio * exprel(u) * log_weight.exp()
    } else {
        ((u + log_weight).exp() - log_weight.exp()) / a
    }
}

/// The Cressie-Read generator φ_γ.
///
/// Evaluated through `(x^a − 1)/a = ln x · exprel(a ln x)`, which is exact at
/// γ ∈ {0, 1} and switches to a series when `a ln x` is tiny, so there is no
/// 0/0 near the two logarithmic members. On x < 0 the value is `+∞`, except
/// for γ = 2 where ½(x − 1)² is kept on the whole line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerGenerator {
    gamma: f64,
}

impl PowerGenerator {
    pub fn new(gamma: f64) -> Result<Self, GeneratorError> {
        if !gamma.is_finite() {
            return Err(GeneratorError::InvalidGamma(gamma));
        }
        Ok(Self { gamma })
    }

    pub fn kl() -> Self {
        Self { gamma: 1.0 }
    }

    pub fn modified_kl() -> Self {
        Self { gamma: 0.0 }
    }

    pub fn chi_square() -> Self {
        Self { gamma: 2.0 }
    }

    pub fn modified_chi_square() -> Self {
        Self { gamma: -1.0 }
    }

    pub fn hellinger() -> Self {
        Self { gamma: 0.5 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn is_chi_square(&self) -> bool {
        self.gamma == 2.0
    }
}

impl DivergenceGenerator for PowerGenerator {
    fn value(&self, x: f64) -> f64 {
        let g = self.gamma;
        if self.is_chi_square() {
            return 0.5 * (x - 1.0) * (x - 1.0);
        }
        if x.is_nan() {
            return f64::NAN;
        }
        if x < 0.0 || x == f64::INFINITY {
            return f64::INFINITY;
        }
        if x == 0.0 {
            return if g > 0.0 { 1.0 / g } else { f64::INFINITY };
        }
        let l = x.ln();
        let v = x * l * exprel((g - 1.0) * l) - l * exprel(g * l);
        v.max(0.0)
    }

    fn derivative(&self, x: f64) -> f64 {
        let g = self.gamma;
        if self.is_chi_square() {
            return x - 1.0;
        }
        if x.is_nan() || x < 0.0 {
            return f64::NAN;
        }
        if x == 0.0 {
            return if g > 1.0 { -1.0 / (g - 1.0) } else { f64::NEG_INFINITY };
        }
        if x == f64::INFINITY {
            return if g >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - g) };
        }
        let l = x.ln();
        l * exprel((g - 1.0) * l)
    }

    fn sharp(&self, x: f64) -> f64 {
        let g = self.gamma;
        if self.is_chi_square() {
            return 0.5 * (x * x - 1.0);
        }
        if x.is_nan() || x < 0.0 {
            return f64::NAN;
        }
        if x == 0.0 {
            return if g > 0.0 { -1.0 / g } else { f64::NEG_INFINITY };
        }
        if x == f64::INFINITY {
            return if g >= 0.0 { f64::INFINITY } else { -1.0 / g };
        }
        let l = x.ln();
        l * exprel(g * l)
    }

    fn domain(&self) -> (f64, f64) {
        if self.is_chi_square() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (0.0, f64::INFINITY)
        }
    }

    fn second_derivative_at_one(&self) -> f64 {
        1.0
    }

    fn third_derivative_at_one(&self) -> f64 {
        self.gamma - 2.0
    }

    fn label(&self) -> String {
        format!("power(gamma={})", self.gamma)
    }

    fn power_index(&self) -> Option<f64> {
        Some(self.gamma)
    }

    fn weighted(&self, term: Term, log_ratio: f64, log_weight: f64) -> f64 {
        if log_weight == f64::NEG_INFINITY {
            return 0.0;
        }
        let g = self.gamma;
        match term {
            Term::Derivative => power_term(g - 1.0, log_ratio, log_weight),
            Term::Sharp => power_term(g, log_ratio, log_weight),
            Term::Value => {
                if log_ratio.abs() <= 1.0 {
                    return self.value(log_ratio.exp()) * log_weight.exp();
                }
                // φ = rφ′(r) − φ#(r); r·w is folded into the weight.
                let first = power_term(g - 1.0, log_ratio, log_ratio + log_weight);
                let second = power_term(g, log_ratio, log_weight);
                let v = first - second;
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v.max(0.0)
                }
            }
        }
    }
}

type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied generator assembled from closures.
///
/// Nothing about convexity or (RC) is verified.
pub struct FnGenerator {
    value: ScalarFn,
    derivative: ScalarFn,
    domain: (f64, f64),
    second_at_one: f64,
    third_at_one: f64,
    label: String,
}

impl FnGenerator {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
        second_at_one: f64,
        third_at_one: f64,
    ) -> Self {
        Self {
            value: Box::new(value),
            derivative: Box::new(derivative),
            domain,
            second_at_one,
            third_at_one,
            label: label.into(),
        }
    }
}

impl fmt::Debug for FnGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnGenerator").field("label", &self.label).field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl DivergenceGenerator for FnGenerator {
    fn value(&self, x: f64) -> f64 {
        if x < self.domain.0 || x > self.domain.1 {
            return f64::INFINITY;
        }
        (self.value)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn second_derivative_at_one(&self) -> f64 {
        self.second_at_one
    }

    fn third_derivative_at_one(&self) -> f64 {
        self.third_at_one
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}
