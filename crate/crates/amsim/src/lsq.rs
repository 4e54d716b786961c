//! Damped least-squares (Levenberg-Marquardt) driver used by every fitter in
//! the crate.
//!
//! The engine is deliberately small: dense numeric Jacobians by central
//! differences, Marquardt-scaled normal equations solved by Cholesky
//! factorisation, multiplicative damping adaptation, and optional box
//! bounds enforced by projection. It holds no global state.

use crate::error::{Error, Result};

/// Options controlling a [`least_squares`] run.
#[derive(Debug, Clone)]
pub struct LsqOptions {
    /// Gradient termination: stop when ||J^T r||_inf < gtol * (1 + ||r||).
    pub gtol: f64,
    /// Step termination: stop when ||dx|| < xtol * (1 + ||x||).
    pub xtol: f64,
    /// Iteration cap; exceeding it returns `converged = false`.
    pub max_iterations: usize,
    /// Characteristic parameter scales used for Jacobian steps. Defaults to
    /// |x_j| with a floor of 1e-8 when empty.
    pub x_scale: Vec<f64>,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-10,
            xtol: 1e-12,
            max_iterations: 500,
            x_scale: Vec::new(),
        }
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientSmall,
    StepSmall,
    ResidualZero,
    MaxIterations,
}

/// Raw engine output; domain fitters wrap this with parameter names.
#[derive(Debug, Clone)]
pub struct LsqResult {
    pub x: Vec<f64>,
    /// Gauss-Newton standard errors scaled by the residual variance.
    pub stderr: Vec<f64>,
    /// Euclidean norm of the residual vector at the solution.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Residual norm after every accepted step (starts with the initial one).
    pub cost_history: Vec<f64>,
}

/// Minimise ||r(x)||^2 over x starting from `init`, optionally inside the box
/// `bounds` (pairs of lower/upper limits).
///
/// `residual` writes the residual vector for the given parameters into its
/// output argument; the vector length must stay constant across calls.
pub fn least_squares<F>(
    mut residual: F,
    init: &[f64],
    bounds: Option<&[(f64, f64)]>,
    options: &LsqOptions,
) -> Result<LsqResult>
where
    F: FnMut(&[f64], &mut Vec<f64>),
{
    let n = init.len();
    if n == 0 {
        return Err(Error::Domain("empty parameter vector".into()));
    }
    if let Some(b) = bounds {
        if b.len() != n {
            return Err(Error::Domain("bounds length mismatch".into()));
        }
        for (j, ((lo, hi), &x)) in b.iter().zip(init).enumerate() {
            if x < *lo || x > *hi {
                return Err(Error::Domain(format!(
                    "initial parameter {j} = {x} outside [{lo}, {hi}]"
                )));
            }
        }
    }

    let mut x = init.to_vec();
    let mut r = Vec::new();
    residual(&x, &mut r);
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteResidual(x));
    }
    let m = r.len();
    let mut cost = norm2(&r);
    let mut history = vec![cost];

    let mut jac = vec![0.0; m * n];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    let mut converged = false;

    let mut r_plus = Vec::new();
    let mut r_minus = Vec::new();

    for iter in 0..options.max_iterations {
        iterations = iter + 1;

        numeric_jacobian(
            &mut residual,
            &x,
            bounds,
            &options.x_scale,
            m,
            &mut jac,
            &mut r_plus,
            &mut r_minus,
        );

        // g = J^T r, a = J^T J
        let mut g = vec![0.0; n];
        let mut a = vec![0.0; n * n];
        for i in 0..m {
            let ri = r[i];
            for j in 0..n {
                let jij = jac[i * n + j];
                g[j] += jij * ri;
                for k in j..n {
                    a[j * n + k] += jij * jac[i * n + k];
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                a[j * n + k] = a[k * n + j];
            }
        }

        let gnorm = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if gnorm < options.gtol * (1.0 + cost) {
            termination = Termination::GradientSmall;
            converged = true;
            break;
        }
        if cost == 0.0 {
            termination = Termination::ResidualZero;
            converged = true;
            break;
        }

        // Damped step with multiplicative adaptation; bail to a larger lambda
        // whenever the trial is rejected or the solve fails.
        let mut stepped = false;
        for _ in 0..30 {
            let mut damped = a.clone();
            for j in 0..n {
                let d = a[j * n + j];
                damped[j * n + j] = d + lambda * if d > 0.0 { d } else { 1.0 };
            }
            let step = match solve_spd(&damped, &g, n) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };

            let mut x_try: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - si).collect();
            if let Some(b) = bounds {
                for (xt, (lo, hi)) in x_try.iter_mut().zip(b) {
                    *xt = xt.clamp(*lo, *hi);
                }
            }

            let mut r_try = Vec::new();
            residual(&x_try, &mut r_try);
            let finite = r_try.len() == m && r_try.iter().all(|v| v.is_finite());
            let cost_try = if finite { norm2(&r_try) } else { f64::INFINITY };

            if cost_try <= cost {
                let step_norm = x
                    .iter()
                    .zip(&x_try)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x = x_try;
                r = r_try;
                cost = cost_try;
                history.push(cost);
                lambda = (lambda / 3.0).max(1e-14);
                stepped = true;
                if step_norm < options.xtol * (1.0 + x_norm) {
                    termination = Termination::StepSmall;
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }

        if converged {
            break;
        }
        if !stepped {
            // No downhill step found at any damping: treat as a stationary
            // point at the engine's resolution.
            termination = Termination::StepSmall;
            converged = true;
            break;
        }
    }

    let stderr = standard_errors(&jac, m, n, cost);
    Ok(LsqResult {
        x,
        stderr,
        residual_norm: cost,
        iterations,
        converged,
        termination,
        cost_history: history,
    })
}

fn norm2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[allow(clippy::too_many_arguments)]
fn numeric_jacobian<F>(
    residual: &mut F,
    x: &[f64],
    bounds: Option<&[(f64, f64)]>,
    x_scale: &[f64],
    m: usize,
    jac: &mut [f64],
    r_plus: &mut Vec<f64>,
    r_minus: &mut Vec<f64>,
) where
    F: FnMut(&[f64], &mut Vec<f64>),
{
    let n = x.len();
    let mut xp = x.to_vec();
    for j in 0..n {
        let scale = x_scale
            .get(j)
            .copied()
            .unwrap_or(0.0)
            .max(x[j].abs())
            .max(1e-8);
        let h = 6e-6 * scale;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        if let Some(b) = bounds {
            lo = b[j].0;
            hi = b[j].1;
        }
        let up = (x[j] + h).min(hi);
        let dn = (x[j] - h).max(lo);
        xp[j] = up;
        residual(&xp, r_plus);
        xp[j] = dn;
        residual(&xp, r_minus);
        xp[j] = x[j];
        let denom = up - dn;
        if denom == 0.0 || r_plus.len() != m || r_minus.len() != m {
            for i in 0..m {
                jac[i * n + j] = 0.0;
            }
            continue;
        }
        for i in 0..m {
            jac[i * n + j] = (r_plus[i] - r_minus[i]) / denom;
        }
    }
}

/// Solve A s = g for symmetric positive definite A (row-major, n x n).
fn solve_spd(a: &[f64], g: &[f64], n: usize) -> Option<Vec<f64>> {
    // Cholesky A = L L^T.
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    // Forward then back substitution.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = g[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut s_out = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * s_out[k];
        }
        s_out[i] = s / l[i * n + i];
    }
    Some(s_out)
}

/// Gauss-Newton standard errors at the optimum: sqrt of the diagonal of
/// sigma^2 (J^T J)^{-1} with sigma^2 the residual variance.
fn standard_errors(jac: &[f64], m: usize, n: usize, residual_norm: f64) -> Vec<f64> {
    if m <= n {
        return vec![0.0; n];
    }
    let mut a = vec![0.0; n * n];
    for i in 0..m {
        for j in 0..n {
            for k in j..n {
                a[j * n + k] += jac[i * n + j] * jac[i * n + k];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            a[j * n + k] = a[k * n + j];
        }
    }
    let sigma2 = residual_norm * residual_norm / (m - n) as f64;
    let mut out = vec![0.0; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        match solve_spd(&a, &e, n) {
            Some(col) => out[j] = (sigma2 * col[j]).max(0.0).sqrt(),
            None => out[j] = f64::INFINITY,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_recovers_exactly() {
        // y = a x + b with exact data; quadratic problem, few iterations.
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.25).collect();
        let res = least_squares(
            |p, out| {
                out.clear();
                out.extend(xs.iter().zip(&ys).map(|(x, y)| p[0] * x + p[1] - y));
            },
            &[0.0, 0.0],
            None,
            &LsqOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 3, "took {} iterations", res.iterations);
        assert!((res.x[0] - 2.5).abs() < 1e-12);
        assert!((res.x[1] + 1.25).abs() < 1e-12);
    }

    #[test]
    fn rosenbrock_valley_converges() {
        // Residuals (1 - x, 10 (y - x^2)); optimum (1, 1) checked against the
        // classic closed-form minimum and a grid refinement around it.
        let res = least_squares(
            |p, out| {
                out.clear();
                out.push(1.0 - p[0]);
                out.push(10.0 * (p[1] - p[0] * p[0]));
            },
            &[-1.2, 1.0],
            None,
            &LsqOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert!((res.x[0] - 1.0).abs() < 1e-8, "x = {:?}", res.x);
        assert!((res.x[1] - 1.0).abs() < 1e-8, "x = {:?}", res.x);
    }

    #[test]
    fn monotone_cost_history() {
        let res = least_squares(
            |p, out| {
                out.clear();
                out.push(1.0 - p[0]);
                out.push(10.0 * (p[1] - p[0] * p[0]));
            },
            &[-1.2, 1.0],
            None,
            &LsqOptions::default(),
        )
        .unwrap();
        for w in res.cost_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "cost increased: {w:?}");
        }
    }

    #[test]
    fn non_finite_initial_residual_is_an_error() {
        let err = least_squares(
            |p, out| {
                out.clear();
                out.push((p[0] - 1.0).ln());
            },
            &[0.5],
            None,
            &LsqOptions::default(),
        );
        assert!(matches!(err, Err(Error::NonFiniteResidual(_))));
    }

    #[test]
    fn bounds_are_respected() {
        let res = least_squares(
            |p, out| {
                out.clear();
                out.push(p[0] + 2.0);
            },
            &[0.5],
            Some(&[(0.0, 1.0)]),
            &LsqOptions::default(),
        )
        .unwrap();
        assert!(res.x[0] >= 0.0 && res.x[0] <= 1.0);
        assert!((res.x[0] - 0.0).abs() < 1e-9);
    }

    #[test]
    fn max_iterations_reports_unconverged() {
        let opts = LsqOptions {
            max_iterations: 2,
            gtol: 0.0,
            xtol: 0.0,
            ..LsqOptions::default()
        };
        let res = least_squares(
            |p, out| {
                out.clear();
                out.push(1.0 - p[0]);
                out.push(10.0 * (p[1] - p[0] * p[0]));
            },
            &[-1.2, 1.0],
            None,
            &opts,
        )
        .unwrap();
        assert!(!res.converged);
        assert_eq!(res.termination, Termination::MaxIterations);
    }
}
