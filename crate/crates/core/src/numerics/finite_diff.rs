//! Central finite differences.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiniteDiffError {
    #[error("stencil point {point:?} gives a non-finite value")]
    StencilOutOfDomain { point: Vec<f64> },
}

/// ε^{1/3}·max(1, |x|): balances truncation and rounding for first derivatives.
pub fn gradient_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// ε^{1/4}·max(1, |x|), the analogue for second derivatives.
pub fn hessian_step(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, p: &[f64]) -> Result<f64, FiniteDiffError> {
    let v = f(p);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FiniteDiffError::StencilOutOfDomain { point: p.to_vec() })
    }
}

pub fn finite_diff_grad<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: Option<f64>) -> Result<Vec<f64>, FiniteDiffError> {
    let mut p = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let hi = h.unwrap_or_else(|| gradient_step(x[i]));
        p[i] = x[i] + hi;
        let up = eval(&f, &p)?;
        p[i] = x[i] - hi;
        let down = eval(&f, &p)?;
        p[i] = x[i];
        grad.push((up - down) / (2.0 * hi));
    }
    Ok(grad)
}

/// Second-order central Hessian, symmetrized.
pub fn finite_diff_hess<F: Fn(&[f64]) -> f64>(
    f: F,
    x: &[f64],
    h: Option<f64>,
) -> Result<DMatrix<f64>, FiniteDiffError> {
    let d = x.len();
    let steps: Vec<f64> = x.iter().map(|&xi| h.unwrap_or_else(|| hessian_step(xi))).collect();
    let f0 = eval(&f, x)?;
    let mut p = x.to_vec();
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        p[i] = x[i] + steps[i];
        let up = eval(&f, &p)?;
        p[i] = x[i] - steps[i];
        let down = eval(&f, &p)?;
        p[i] = x[i];
        hess[(i, i)] = (up - 2.0 * f0 + down) / (steps[i] * steps[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * steps[i];
                p[j] = x[j] + sj * steps[j];
                let v = eval(&f, &p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * steps[i] * steps[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}
