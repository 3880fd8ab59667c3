use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping rules for [`fit_gaussian_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative decrease of the residual norm on an accepted step.
    pub rel_decrease_tol: f64,
    /// Norm of `Jᵀr` in the internal unit scaling.
    pub gradient_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            rel_decrease_tol: 1e-10,
            gradient_tol: 1e-8,
        }
    }
}

/// Result of fitting `amplitude·exp(−(u−center)²/(2·width²)) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// `‖residual‖ / ‖counts‖`.
    pub residual_norm: f64,
    pub converged: bool,
    pub n_iterations: usize,
}

impl FitResult {
    /// Evaluates the fitted model at `u`.
    pub fn model(&self, u: f64) -> f64 {
        let z = (u - self.center) / self.width;
        self.amplitude * (-0.5 * z * z).exp() + self.offset
    }
}

pub fn fit_gaussian(positions: &[f64], counts: &[f64]) -> Result<FitResult> {
    fit_gaussian_with(positions, counts, &FitOptions::default())
}

/// Levenberg-Marquardt fit started from the profile moments. Positions and
/// counts are rescaled to unit range internally.
pub fn fit_gaussian_with(
    positions: &[f64],
    counts: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    if positions.len() != counts.len() {
        return Err(Error::InvalidInput(format!(
            "{} positions but {} counts",
            positions.len(),
            counts.len()
        )));
    }
    if positions.len() < 5 {
        return Err(Error::InvalidInput("fit needs at least 5 points".into()));
    }
    if positions.iter().chain(counts).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite fit input".into()));
    }
    let lo = counts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = counts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Err(Error::DegenerateProfile(if hi == 0.0 {
            "all counts zero"
        } else {
            "all counts equal"
        }));
    }

    let (pmin, pmax) = positions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| {
            (a.min(p), b.max(p))
        });
    let u0 = 0.5 * (pmin + pmax);
    let us = 0.5 * (pmax - pmin);
    if !(us > 0.0) {
        return Err(Error::DegenerateProfile("all positions equal"));
    }
    let ys = hi.abs().max(lo.abs());
    let u: Vec<f64> = positions.iter().map(|p| (p - u0) / us).collect();
    let y: Vec<f64> = counts.iter().map(|c| c / ys).collect();

    // Moments of the floor-subtracted profile.
    let floor = lo / ys;
    let w: Vec<f64> = y.iter().map(|v| v - floor).collect();
    let wsum: f64 = w.iter().sum();
    let mu0 = w.iter().zip(&u).map(|(w, u)| w * u).sum::<f64>() / wsum;
    let var0 = w
        .iter()
        .zip(&u)
        .map(|(w, u)| w * (u - mu0).powi(2))
        .sum::<f64>()
        / wsum;
    let mut p = Vector4::new(hi / ys - floor, mu0, var0.sqrt().max(1e-3), floor);

    let mut cost = residuals(&p, &u, &y).norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&p, &u, &y);
        if jtr.norm() < opts.gradient_tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial_cost = residuals(&trial, &u, &y).norm_squared();
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (cost.sqrt() - trial_cost.sqrt()) / cost.sqrt().max(f64::MIN_POSITIVE);
                let tiny_step = step.norm() <= 1e-14 * (p.norm() + 1e-14);
                p = trial;
                cost = trial_cost;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                if rel < opts.rel_decrease_tol || tiny_step {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction left at machine precision.
            let (_, jtr) = normal_equations(&p, &u, &y);
            converged = jtr.norm() < opts.gradient_tol.sqrt();
            break;
        }
        if converged {
            break;
        }
    }
    if !converged && iterations >= opts.max_iterations {
        return Err(Error::NonConvergence { iterations });
    }

    let width = p[2].abs() * us;
    let result = FitResult {
        center: p[1] * us + u0,
        width,
        amplitude: p[0] * ys,
        offset: p[3] * ys,
        residual_norm: cost.sqrt() / y.iter().map(|v| v * v).sum::<f64>().sqrt(),
        converged,
        n_iterations: iterations,
    };
    if converged && !(width > 0.0) {
        return Err(Error::DegenerateProfile("zero fitted width"));
    }
    Ok(result)
}

fn residuals(p: &Vector4<f64>, u: &[f64], y: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_iterator(
        u.len(),
        u.iter().zip(y).map(|(&u, &y)| {
            let z = (u - p[1]) / p[2];
            p[0] * (-0.5 * z * z).exp() + p[3] - y
        }),
    )
}

fn normal_equations(p: &Vector4<f64>, u: &[f64], y: &[f64]) -> (Matrix4<f64>, Vector4<f64>) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for (&u, &y) in u.iter().zip(y) {
        let z = (u - p[1]) / p[2];
        let e = (-0.5 * z * z).exp();
        let r = p[0] * e + p[3] - y;
        let j = Vector4::new(e, p[0] * e * z / p[2], p[0] * e * z * z / p[2], 1.0);
        jtj += j * j.transpose();
        jtr += j * r;
    }
    (jtj, jtr)
}
