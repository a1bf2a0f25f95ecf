//! Least squares: straight-line fits and a damped Gauss–Newton
//! (Levenberg–Marquardt) solver with numerical Jacobians and box bounds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordinary least-squares straight line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    pub residual_norm: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Validation("x and y lengths differ".into()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Validation("a line fit needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = if n > 2 { rss / (nf - 2.0) } else { 0.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_sigma: (s2 / sxx).sqrt(),
        intercept_sigma: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        residual_norm: rss.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqOptions {
    /// Converged when the relative parameter step falls below this.
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self {
            step_tol: 1e-10,
            max_iterations: 200,
            fd_step: 1e-6,
        }
    }
}

/// Outcome of a nonlinear fit. The best iterate is always reported, even
/// when `converged` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub parameters: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Condition number of the Jacobian at the solution (∞ when singular).
    pub condition: f64,
    pub singular: bool,
    /// Parameters sitting on a bound at the solution.
    pub active_bounds: Vec<bool>,
    /// `sqrt(diag((JᵀJ)⁻¹)·s²)`, a rough one-sigma proxy per parameter.
    pub std_errors: Vec<f64>,
    /// Euclidean norm of each Jacobian column, scaled by `|p|` (sensitivity).
    pub sensitivities: Vec<f64>,
}

fn jacobian<R>(residuals: &R, p: &[f64], r0: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    R: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let m = r0.len();
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    let mut q = p.to_vec();
    for j in 0..n {
        let h = step * p[j].abs().max(1e-8);
        q[j] = p[j] + h;
        residuals(&q, &mut plus)?;
        q[j] = p[j] - h;
        residuals(&q, &mut minus)?;
        q[j] = p[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn project(p: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (x, (lo, hi)) in p.iter_mut().zip(b) {
            *x = x.clamp(*lo, *hi);
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimises `‖r(p)‖²` where `residuals(p, out)` fills `out` (length
/// `n_residuals`). Starts as plain Gauss–Newton and adds Marquardt damping
/// only when a step fails to reduce the cost.
pub fn nonlinear_least_squares<R>(
    residuals: R,
    n_residuals: usize,
    guess: &[f64],
    bounds: Option<&[(f64, f64)]>,
    opts: &LsqOptions,
) -> Result<FitReport>
where
    R: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let n = guess.len();
    if n_residuals < n {
        return Err(Error::Validation(format!(
            "{n_residuals} residuals cannot determine {n} parameters"
        )));
    }
    if let Some(b) = bounds {
        if b.len() != n || b.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::Validation("malformed parameter bounds".into()));
        }
    }
    let mut p = guess.to_vec();
    project(&mut p, bounds);
    let mut r = vec![0.0; n_residuals];
    residuals(&p, &mut r)?;
    let mut cost = norm(&r);
    let mut mu = 0.0;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    let mut trial_r = vec![0.0; n_residuals];
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&residuals, &p, &r, opts.fd_step)?;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let max_diag = (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        if max_diag == 0.0 {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += mu * jtj[(i, i)].max(1e-12 * max_diag);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => match a.lu().solve(&(-&grad)) {
                    Some(s) => s,
                    None => {
                        mu = if mu == 0.0 { 1e-6 } else { mu * 10.0 };
                        continue;
                    }
                },
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            project(&mut trial, bounds);
            let moved: Vec<f64> = trial.iter().zip(&p).map(|(a, b)| a - b).collect();
            let rel_step = norm(&moved) / (norm(&p) + 1e-300);
            if residuals(&trial, &mut trial_r).is_ok() {
                let trial_cost = norm(&trial_r);
                if trial_cost.is_finite() && trial_cost <= cost {
                    p = trial;
                    std::mem::swap(&mut r, &mut trial_r);
                    cost = trial_cost;
                    mu = if mu < 1e-8 { 0.0 } else { mu / 10.0 };
                    improved = true;
                    if rel_step < opts.step_tol || cost == 0.0 {
                        converged = true;
                    }
                    break;
                }
            }
            if rel_step < opts.step_tol {
                // No representable improvement left.
                converged = true;
                break;
            }
            mu = if mu == 0.0 { 1e-4 } else { mu * 10.0 };
        }
        if !improved && !converged {
            break;
        }
    }

    let jac = jacobian(&residuals, &p, &r, opts.fd_step)?;
    let jtj = jac.transpose() * &jac;
    let eig = SymmetricEigen::new(jtj.clone());
    let (lmin, lmax) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let singular = !(lmin > lmax * 1e-28);
    let condition = if singular {
        f64::INFINITY
    } else {
        (lmax / lmin).sqrt()
    };
    let dof = (n_residuals - n).max(1) as f64;
    let s2 = cost * cost / dof;
    let std_errors = match jtj.clone().try_inverse() {
        Some(inv) if !singular => (0..n).map(|i| (inv[(i, i)].abs() * s2).sqrt()).collect(),
        _ => vec![f64::INFINITY; n],
    };
    let sensitivities = (0..n)
        .map(|j| jac.column(j).norm() * p[j].abs().max(1e-300))
        .collect();
    let active_bounds = match bounds {
        Some(b) => p
            .iter()
            .zip(b)
            .map(|(x, (lo, hi))| x <= lo || x >= hi)
            .collect(),
        None => vec![false; n],
    };
    Ok(FitReport {
        parameters: p,
        residual_norm: cost,
        iterations,
        converged,
        condition,
        singular,
        active_bounds,
        std_errors,
        sensitivities,
    })
}

/// Convenience wrapper: fits `model(x, p)` to weighted samples.
pub fn curve_fit<M>(
    model: M,
    xs: &[f64],
    ys: &[f64],
    weights: Option<&[f64]>,
    guess: &[f64],
    bounds: Option<&[(f64, f64)]>,
    opts: &LsqOptions,
) -> Result<FitReport>
where
    M: Fn(f64, &[f64]) -> Result<f64>,
{
    if xs.len() != ys.len() || weights.is_some_and(|w| w.len() != xs.len()) {
        return Err(Error::Validation("sample arrays differ in length".into()));
    }
    nonlinear_least_squares(
        |p, out| {
            for (i, o) in out.iter_mut().enumerate() {
                let w = weights.map_or(1.0, |w| w[i]);
                *o = w * (model(xs[i], p)? - ys[i]);
            }
            Ok(())
        },
        xs.len(),
        guess,
        bounds,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_exact() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_sigma < 1e-12);
    }

    #[test]
    fn linear_model_recovered_in_two_iterations() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 7.0).collect();
        let rep = curve_fit(
            |x, p| Ok(p[0] * x + p[1]),
            &xs,
            &ys,
            None,
            &[1.0, 1.0],
            None,
            &LsqOptions::default(),
        )
        .unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 2, "{} iterations", rep.iterations);
        assert!((rep.parameters[0] - 3.0).abs() < 1e-9);
        assert!((rep.parameters[1] + 7.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_decay_recovered() {
        let xs: Vec<f64> = (0..40).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.2 + 1.5 * (-x / 0.7).exp()).collect();
        let rep = curve_fit(
            |x, p| Ok(p[0] + p[1] * (-x / p[2]).exp()),
            &xs,
            &ys,
            None,
            &[0.0, 1.0, 1.0],
            None,
            &LsqOptions::default(),
        )
        .unwrap();
        assert!(rep.converged);
        for (got, want) in rep.parameters.iter().zip([0.2, 1.5, 0.7]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn bound_is_reported_active() {
        // Unconstrained optimum has p0 = 2; the bound caps it at 1.
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let rep = curve_fit(
            |x, p| Ok(p[0] * x),
            &xs,
            &ys,
            None,
            &[0.5],
            Some(&[(0.0, 1.0)]),
            &LsqOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.parameters[0], 1.0);
        assert_eq!(rep.active_bounds, vec![true]);
    }

    #[test]
    fn redundant_parameters_flag_singular_jacobian() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 4.0 * x).collect();
        let rep = curve_fit(
            |x, p| Ok((p[0] + p[1]) * x),
            &xs,
            &ys,
            None,
            &[1.0, 1.0],
            None,
            &LsqOptions::default(),
        )
        .unwrap();
        assert!(rep.singular);
        assert!((rep.parameters[0] + rep.parameters[1] - 4.0).abs() < 1e-9);
    }
}
