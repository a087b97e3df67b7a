//! Integration against dP_θ.
//!
//! Continuous supports use globally adaptive 21-point Gauss-Kronrod on a
//! finite interval. Unbounded ends are first mapped onto a finite range, either
//! rationally (x = c + s·t/(1 − t²)) or by a double-exponential substitution
//! with trapezoidal refinement. Lattice supports are summed outward from the
//! finite end until the accumulated P_θ mass leaves less than
//! `tail_mass_tol` behind and the summand has died out.
//!
//! Non-integrable integrands are a normal outcome here: they mark parameter
//! pairs outside the feasible set of the dual criterion. They surface as
//! [`QuadError::Divergent`] rather than as a large number.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{ParametricModel, SupportKind};

/// Running estimates beyond this magnitude are taken as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

const MAX_LATTICE_TERMS: usize = 10_000_000;
/// Budgets below this are too small to tell divergence from slow convergence.
const MIN_STALL_CHECK: usize = 16;
const DE_MAX_LEVEL: usize = 12;
const DE_HALF_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfiniteMap {
    Rational,
    TanhSinh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail_mass_tol: f64,
    pub infinite_map: InfiniteMap,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            tail_mass_tol: 1e-12,
            infinite_map: InfiniteMap::Rational,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.abs_tol) || !positive(self.rel_tol) || !positive(self.tail_mass_tol) {
            return Err(QuadError::InvalidSpec("tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(QuadError::InvalidSpec("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    fn tolerance(&self, estimate: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * estimate.abs())
    }
}

/// A converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("integral diverges (running estimate {estimate:e})")]
    Divergent { estimate: f64 },
    #[error("accuracy not reached within the subdivision budget (estimate {estimate}, error {abs_error:e})")]
    SubdivisionCap { estimate: f64, abs_error: f64 },
    #[error("unsupported integration domain: {0}")]
    Unsupported(String),
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
}

/// ∫ f dP_θ.
pub fn integrate_wrt<F>(
    model: &dyn ParametricModel,
    theta: &[f64],
    f: F,
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError>
where
    F: Fn(&[f64]) -> f64,
{
    integrate_weighted(
        model,
        theta,
        |x, log_w| {
            let w = log_w.exp();
            if w == 0.0 {
                0.0
            } else {
                f(x) * w
            }
        },
        spec,
    )
}

/// ∫ g(x, log p_θ(x)) dλ(x), where `g` returns the already weighted integrand.
///
/// This is the entry point for integrands that must combine the density with
/// another exponential in log space to stay finite.
pub fn integrate_weighted<G>(
    model: &dyn ParametricModel,
    theta: &[f64],
    g: G,
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError>
where
    G: Fn(&[f64], f64) -> f64,
{
    spec.validate()?;
    if model.obs_dim() != 1 {
        return Err(QuadError::Unsupported(format!("observation dimension {}", model.obs_dim())));
    }
    let support = model.support();
    let (loc, scale) = model.location_scale(theta);
    let point = |x: f64| {
        let xs = [x];
        g(&xs, model.log_density(theta, &xs))
    };
    match support.kind {
        SupportKind::ContinuousInterval => integrate_line(&point, support.lo, support.hi, loc, scale, spec),
        SupportKind::DiscreteLattice { step } => {
            let mass = |x: f64| model.log_density(theta, &[x]).exp();
            sum_lattice(&point, &mass, support.lo, support.hi, step, spec)
        }
    }
}

/// ∫_lo^hi f(x) dx for a scalar integrand, with unbounded ends mapped per `spec`.
pub fn integrate_line(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    loc: f64,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError> {
    spec.validate()?;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(QuadError::Unsupported(format!("empty interval [{lo}, {hi}]")));
    }
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let loc = if loc.is_finite() { loc } else { 0.0 };
    match (lo.is_finite(), hi.is_finite(), spec.infinite_map) {
        (true, true, _) => adaptive_gk(f, &[lo, lo + 0.5 * (hi - lo), hi], spec),
        (false, false, InfiniteMap::Rational) => {
            let mapped = |t: f64| {
                let d = 1.0 - t * t;
                f(loc + scale * t / d) * scale * (1.0 + t * t) / (d * d)
            };
            adaptive_gk(&mapped, &[-1.0, -0.5, 0.0, 0.5, 1.0], spec)
        }
        (true, false, InfiniteMap::Rational) => {
            let mapped = |t: f64| {
                let d = 1.0 - t * t;
                f(lo + scale * t / d) * scale * (1.0 + t * t) / (d * d)
            };
            adaptive_gk(&mapped, &[0.0, 0.25, 0.5, 0.75, 1.0], spec)
        }
        (false, true, InfiniteMap::Rational) => {
            let mapped = |t: f64| {
                let d = 1.0 - t * t;
                f(hi - scale * t / d) * scale * (1.0 + t * t) / (d * d)
            };
            adaptive_gk(&mapped, &[0.0, 0.25, 0.5, 0.75, 1.0], spec)
        }
        (false, false, InfiniteMap::TanhSinh) => {
            let half_pi = std::f64::consts::FRAC_PI_2;
            let mapped = |u: f64| {
                let s = half_pi * u.sinh();
                f(loc + scale * s.sinh()) * scale * s.cosh() * half_pi * u.cosh()
            };
            double_exponential(&mapped, spec)
        }
        (true, false, InfiniteMap::TanhSinh) => {
            let half_pi = std::f64::consts::FRAC_PI_2;
            let mapped = |u: f64| {
                let e = scale * (half_pi * u.sinh()).exp();
                f(lo + e) * e * half_pi * u.cosh()
            };
            double_exponential(&mapped, spec)
        }
        (false, true, InfiniteMap::TanhSinh) => {
            let half_pi = std::f64::consts::FRAC_PI_2;
            let mapped = |u: f64| {
                let e = scale * (half_pi * u.sinh()).exp();
                f(hi - e) * e * half_pi * u.cosh()
            };
            double_exponential(&mapped, spec)
        }
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    estimate: f64,
    error: f64,
}

fn kronrod21(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = (fc * WGK[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let estimate = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, estimate, error }
}

fn adaptive_gk(f: &dyn Fn(f64) -> f64, breaks: &[f64], spec: &QuadratureSpec) -> Result<Quadrature, QuadError> {
    let mut segs: Vec<Segment> = breaks.windows(2).map(|w| kronrod21(f, w[0], w[1])).collect();
    let mut evaluations = 21 * segs.len();
    let mut error_at_half_budget = None;
    loop {
        let total: f64 = segs.iter().map(|s| s.estimate).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        if !total.is_finite() || !error.is_finite() || total.abs() > DIVERGENCE_THRESHOLD {
            return Err(QuadError::Divergent { estimate: total });
        }
        if error <= spec.tolerance(total) {
            return Ok(Quadrature { value: total, abs_error: error, evaluations });
        }
        if segs.len() >= spec.max_subdivisions.max(breaks.len()) {
            // A non-integrable endpoint keeps feeding error into the last segment.
            let stalled = error_at_half_budget.is_some_and(|e: f64| error >= 0.5 * e);
            return Err(if stalled {
                QuadError::Divergent { estimate: total }
            } else {
                QuadError::SubdivisionCap { estimate: total, abs_error: error }
            });
        }
        if error_at_half_budget.is_none() && segs.len() >= (spec.max_subdivisions / 2).max(MIN_STALL_CHECK) {
            error_at_half_budget = Some(error);
        }
        let (worst, _) =
            segs.iter().enumerate().max_by(|a, b| a.1.error.total_cmp(&b.1.error)).expect("at least one segment");
        let seg = segs[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // Float resolution exhausted on the worst segment.
            return Err(QuadError::SubdivisionCap { estimate: total, abs_error: error });
        }
        segs[worst] = kronrod21(f, seg.a, mid);
        segs.push(kronrod21(f, mid, seg.b));
        evaluations += 42;
    }
}

fn double_exponential(f: &dyn Fn(f64) -> f64, spec: &QuadratureSpec) -> Result<Quadrature, QuadError> {
    let mut h = 0.5;
    let n0 = (DE_HALF_WIDTH / h) as i64;
    let mut sum: f64 = (-n0..=n0).map(|j| f(j as f64 * h)).sum();
    let mut evaluations = (2 * n0 + 1) as usize;
    let mut estimate = sum * h;
    let mut prev_diff = f64::INFINITY;
    for level in 1..=DE_MAX_LEVEL {
        h *= 0.5;
        let n = (DE_HALF_WIDTH / h) as i64;
        let odd: f64 = (-n..=n).filter(|j| j % 2 != 0).map(|j| f(j as f64 * h)).sum();
        evaluations += n as usize + 1;
        sum += odd;
        let next = sum * h;
        if !next.is_finite() || next.abs() > DIVERGENCE_THRESHOLD {
            return Err(QuadError::Divergent { estimate: next });
        }
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= 3 && diff <= spec.tolerance(estimate) {
            return Ok(Quadrature { value: estimate, abs_error: diff, evaluations });
        }
        if level == DE_MAX_LEVEL {
            let stalled = diff >= 0.5 * prev_diff;
            return Err(if stalled {
                QuadError::Divergent { estimate }
            } else {
                QuadError::SubdivisionCap { estimate, abs_error: diff }
            });
        }
        prev_diff = diff;
    }
    unreachable!("loop returns at the last level")
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn sum_lattice(
    f: &dyn Fn(f64) -> f64,
    mass: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    step: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature, QuadError> {
    let (origin, dir, end) = match (lo.is_finite(), hi.is_finite()) {
        (true, _) => (lo, 1.0, hi),
        (false, true) => (hi, -1.0, lo),
        (false, false) => return Err(QuadError::Unsupported("lattice unbounded on both sides".into())),
    };
    let count = if end.is_finite() { ((end - origin).abs() / step).round() as usize + 1 } else { MAX_LATTICE_TERMS };
    let mut acc = CompensatedSum::default();
    let mut mass_acc = CompensatedSum::default();
    let mut last_mass = f64::INFINITY;
    for k in 0..count {
        let x = origin + dir * step * k as f64;
        let term = f(x);
        let m = mass(x);
        acc.add(term);
        mass_acc.add(m);
        let total = acc.value();
        if !term.is_finite() || total.abs() > DIVERGENCE_THRESHOLD {
            return Err(QuadError::Divergent { estimate: total });
        }
        let remaining = 1.0 - mass_acc.value();
        let decreasing = k > 0 && m < last_mass;
        last_mass = m;
        // Past the bulk, a vanishing point mass bounds what is left when
        // rounding keeps the accumulated mass from reaching 1.
        let past_bulk = mass_acc.value() > 0.5;
        let tail_done = remaining < spec.tail_mass_tol || (past_bulk && m < 1e-4 * spec.tail_mass_tol);
        if decreasing && tail_done && term.abs() <= 1e-3 * spec.tolerance(total) {
            return Ok(Quadrature { value: total, abs_error: term.abs(), evaluations: k + 1 });
        }
    }
    let total = acc.value();
    if end.is_finite() {
        Ok(Quadrature { value: total, abs_error: 0.0, evaluations: count })
    } else {
        Err(QuadError::SubdivisionCap { estimate: total, abs_error: f64::NAN })
    }
}
