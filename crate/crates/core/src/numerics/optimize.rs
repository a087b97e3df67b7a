//! Box-constrained maximization of criteria that may be −∞ or non-finite
//! outside a feasible region.
//!
//! Two local methods are available: Nelder-Mead, which only needs values, and
//! a projected BFGS using central finite-difference gradients with Armijo
//! backtracking. [`maximize`] wraps either in a deterministic multi-start and
//! picks the best run, breaking ties within `f_tol` by the smallest-norm
//! argmax.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::finite_diff::gradient_step;
use crate::models::ParamDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    NelderMead,
    ProjectedQuasiNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub method: Method,
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self { method: Method::ProjectedQuasiNewton, x_tol: 1e-7, f_tol: 1e-10, max_iters: 500, restarts: 2 }
    }
}

impl OptimizerSpec {
    pub fn nelder_mead() -> Self {
        Self { method: Method::NelderMead, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.x_tol > 0.0 && self.f_tol > 0.0) || self.max_iters == 0 {
            return Err(OptimError::InvalidSpec("tolerances and max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimDiagnostics {
    pub iterations: usize,
    pub evaluations: usize,
    pub runs: usize,
    pub converged: bool,
    /// Largest ∞-norm distance between the chosen argmax and the argmax of
    /// any other successful run.
    pub start_spread: f64,
    pub at_boundary: bool,
    /// Evaluations that returned a non-finite value and were rejected.
    pub infeasible_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub argmax: Vec<f64>,
    pub value: f64,
    pub diagnostics: OptimDiagnostics,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("objective is not finite at any start point near {at:?}")]
    NoFiniteValue { at: Vec<f64> },
    #[error("iteration cap reached; best value {}", best.value)]
    IterationCap { best: Box<Optimum> },
    #[error("invalid optimizer spec: {0}")]
    InvalidSpec(String),
}

struct LocalRun {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

/// Maximizes `f` over `domain`, starting from `init` (projected into the box).
pub fn maximize(
    f: &dyn Fn(&[f64]) -> f64,
    domain: &ParamDomain,
    init: &[f64],
    spec: &OptimizerSpec,
) -> Result<Optimum, OptimError> {
    spec.validate()?;
    let rejected = Cell::new(0usize);
    let counted = |x: &[f64]| {
        let v = f(x);
        if !v.is_finite() {
            rejected.set(rejected.get() + 1);
        }
        v
    };
    let f: &dyn Fn(&[f64]) -> f64 = &counted;
    let base = domain.project(init);
    let mut runs = Vec::new();
    let mut evaluations = 0;
    for k in 0..=spec.restarts {
        let start = domain.project(&perturbed(&base, k));
        let fs = f(&start);
        evaluations += 1;
        if !fs.is_finite() {
            continue;
        }
        let run = match spec.method {
            Method::NelderMead => nelder_mead(f, domain, &start, fs, spec),
            Method::ProjectedQuasiNewton => quasi_newton(f, domain, &start, fs, spec),
        };
        evaluations += run.evaluations;
        runs.push(run);
    }
    if runs.is_empty() {
        return Err(OptimError::NoFiniteValue { at: base });
    }
    let best_value = runs.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    let tie = spec.f_tol * best_value.abs().max(1.0);
    let chosen = runs
        .iter()
        .filter(|r| r.value >= best_value - tie)
        .min_by(|a, b| norm(&a.x).total_cmp(&norm(&b.x)))
        .expect("best run is within its own tolerance");
    let start_spread = runs
        .iter()
        .map(|r| r.x.iter().zip(&chosen.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let optimum = Optimum {
        argmax: chosen.x.clone(),
        value: chosen.value,
        diagnostics: OptimDiagnostics {
            iterations: runs.iter().map(|r| r.iterations).sum(),
            evaluations,
            runs: runs.len(),
            converged: chosen.converged,
            start_spread,
            at_boundary: domain.on_margin(&chosen.x),
            infeasible_evaluations: rejected.get(),
        },
    };
    if optimum.diagnostics.converged {
        Ok(optimum)
    } else {
        Err(OptimError::IterationCap { best: Box::new(optimum) })
    }
}

/// Minimizes `f` by maximizing −f; the reported value is f at the argmin.
pub fn minimize(
    f: &dyn Fn(&[f64]) -> f64,
    domain: &ParamDomain,
    init: &[f64],
    spec: &OptimizerSpec,
) -> Result<Optimum, OptimError> {
    let neg = |x: &[f64]| -f(x);
    let flip = |mut o: Optimum| {
        o.value = -o.value;
        o
    };
    match maximize(&neg, domain, init, spec) {
        Ok(o) => Ok(flip(o)),
        Err(OptimError::IterationCap { best }) => Err(OptimError::IterationCap { best: Box::new(flip(*best)) }),
        Err(e) => Err(e),
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Start k: the base point for k = 0, then shifted by ±5%·⌈k/2⌉ of scale,
/// alternating direction per restart and per coordinate.
fn perturbed(base: &[f64], k: usize) -> Vec<f64> {
    if k == 0 {
        return base.to_vec();
    }
    let size = 0.05 * k.div_ceil(2) as f64;
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    base.iter()
        .enumerate()
        .map(|(i, &v)| {
            let s = if i % 2 == 0 { sign } else { -sign };
            v + s * size * v.abs().max(1.0)
        })
        .collect()
}

fn finite_or_worst(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, domain: &ParamDomain, x0: &[f64], f0: f64, spec: &OptimizerSpec) -> LocalRun {
    let d = x0.len();
    let mut evaluations = 0;
    // Minimize g = −f, with non-finite values as the worst possible.
    let mut g = |x: &[f64]| {
        evaluations += 1;
        let v = finite_or_worst(f(x));
        if v == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            -v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), -f0)];
    for i in 0..d {
        let mut step = 0.1 * x0[i].abs().max(1.0);
        let mut vertex = None;
        for _ in 0..30 {
            for s in [step, -step] {
                let mut v = x0.to_vec();
                v[i] += s;
                let v = domain.project(&v);
                if v[i] == x0[i] {
                    continue;
                }
                let gv = g(&v);
                if gv.is_finite() {
                    vertex = Some((v, gv));
                    break;
                }
            }
            if vertex.is_some() {
                break;
            }
            step *= 0.5;
        }
        let vertex = vertex.unwrap_or_else(|| {
            let mut v = x0.to_vec();
            v[i] += step;
            let gv = g(&v);
            (v, gv)
        });
        simplex.push(vertex);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < spec.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = simplex[1..].iter().map(|(_, gv)| (gv - best.1).abs()).fold(0.0, f64::max);
        if x_spread <= spec.x_tol && f_spread <= spec.f_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; d];
        for (v, _) in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            let p: Vec<f64> = centroid.iter().zip(worst).map(|(c, w)| c + t * (w - c)).collect();
            domain.project(&p)
        };
        let worst = simplex[d].clone();
        let xr = along(-1.0, &worst.0);
        let gr = g(&xr);
        if gr < simplex[0].1 {
            let xe = along(-2.0, &worst.0);
            let ge = g(&xe);
            simplex[d] = if ge < gr { (xe, ge) } else { (xr, gr) };
            continue;
        }
        if gr < simplex[d - 1].1 {
            simplex[d] = (xr, gr);
            continue;
        }
        let (xc, gc) = if gr < worst.1 {
            let xc = along(-0.5, &worst.0);
            let gc = g(&xc);
            (xc, gc)
        } else {
            let xc = along(0.5, &worst.0);
            let gc = g(&xc);
            (xc, gc)
        };
        if gc < worst.1.min(gr) {
            simplex[d] = (xc, gc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let p: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            let p = domain.project(&p);
            vertex.1 = g(&p);
            vertex.0 = p;
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, gv) = simplex.swap_remove(0);
    LocalRun { x, value: -gv, iterations, evaluations, converged }
}

/// Central-difference gradient, falling back to a one-sided quotient when one
/// side of the stencil is non-finite. `None` when neither side is usable.
fn gradient(
    f: &dyn Fn(&[f64]) -> f64,
    domain: &ParamDomain,
    x: &[f64],
    fx: f64,
    evals: &mut usize,
    curv: &mut [f64],
) -> Option<DVector<f64>> {
    let mut p = x.to_vec();
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        let h = gradient_step(x[i]);
        p[i] = x[i] + h;
        let up = if domain.contains(&p) { f(&p) } else { f64::NAN };
        p[i] = x[i] - h;
        let down = if domain.contains(&p) { f(&p) } else { f64::NAN };
        p[i] = x[i];
        *evals += 2;
        g[i] = match (up.is_finite(), down.is_finite()) {
            (true, true) => {
                curv[i] = (up - 2.0 * fx + down) / (h * h);
                (up - down) / (2.0 * h)
            }
            (true, false) => (up - fx) / h,
            (false, true) => (fx - down) / h,
            (false, false) => return None,
        };
    }
    Some(g)
}

fn initial_inverse(curv: &[f64], g: &DVector<f64>, x: &[f64]) -> DMatrix<f64> {
    let d = curv.len();
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = if curv[i] < -1e-8 { 1.0 / -curv[i] } else { 0.1 * x[i].abs().max(1.0) / g[i].abs().max(1e-8) };
    }
    h
}

/// Zeroes gradient components that push through an active bound.
fn projected(g: &DVector<f64>, x: &[f64], domain: &ParamDomain) -> DVector<f64> {
    let inner = domain.project(x);
    let mut pg = g.clone();
    for i in 0..x.len() {
        let b = domain.bounds()[i];
        let at_lo = b.lo.is_finite() && x[i] <= inner[i] && x[i] - b.lo <= 2.0 * crate::models::INTERIOR_MARGIN;
        let at_hi = b.hi.is_finite() && x[i] >= inner[i] && b.hi - x[i] <= 2.0 * crate::models::INTERIOR_MARGIN;
        if (at_lo && g[i] < 0.0) || (at_hi && g[i] > 0.0) {
            pg[i] = 0.0;
        }
    }
    pg
}

fn quasi_newton(
    f: &dyn Fn(&[f64]) -> f64,
    domain: &ParamDomain,
    x0: &[f64],
    f0: f64,
    spec: &OptimizerSpec,
) -> LocalRun {
    let d = x0.len();
    let mut evaluations = 0;
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut curv = vec![0.0; d];
    let Some(mut g) = gradient(f, domain, &x, fx, &mut evaluations, &mut curv) else {
        return LocalRun { x, value: fx, iterations: 0, evaluations, converged: false };
    };
    let mut hinv = initial_inverse(&curv, &g, &x);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < spec.max_iters {
        iterations += 1;
        let pg = projected(&g, &x, domain);
        if pg.amax() <= 1e-14 * fx.abs().max(1.0) {
            converged = true;
            break;
        }
        let mut dir = &hinv * &pg;
        if dir.dot(&pg) <= 0.0 {
            hinv = initial_inverse(&curv, &g, &x);
            dir = &hinv * &pg;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, b)| a + t * b).collect();
            let trial = domain.project(&trial);
            if trial == x {
                break;
            }
            let ft = f(&trial);
            evaluations += 1;
            let step = DVector::from_iterator(d, trial.iter().zip(&x).map(|(a, b)| a - b));
            if ft.is_finite() && ft >= fx + 1e-4 * g.dot(&step) {
                accepted = Some((trial, ft, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, s)) = accepted else {
            // No ascent possible along the quasi-Newton direction: stationary to
            // working precision.
            converged = true;
            break;
        };
        let Some(gn) = gradient(f, domain, &xn, fnew, &mut evaluations, &mut curv) else {
            x = xn;
            fx = fnew;
            break;
        };
        // Curvature pair for the convex function −f.
        let y = &g - &gn;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(d, d);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            hinv = &left * &hinv * &right + rho * &s * s.transpose();
        }
        let df = fnew - fx;
        x = xn;
        fx = fnew;
        g = gn;
        if s.amax() <= spec.x_tol && df.abs() <= spec.f_tol * fx.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    LocalRun { x, value: fx, iterations, evaluations, converged }
}
