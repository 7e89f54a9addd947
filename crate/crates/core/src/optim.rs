//! Small derivative-based and derivative-free optimizers used by the
//! regression and distribution-fitting code. All routines maximize.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    /// Converged once the largest gradient component is at most this.
    pub gtol: f64,
    pub max_iter: usize,
    /// Step halvings per line search.
    pub max_halvings: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-7,
            max_iter: 500,
            max_halvings: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Quasi-Newton ascent with an Armijo backtracking line search. Accepted
/// steps never decrease the objective.
///
/// `objective` returns the value and gradient; non-finite values are treated
/// as infeasible and trigger step halving.
pub fn bfgs<F>(objective: F, x0: &[f64], opts: &BfgsOptions) -> Maximum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut f, g) = objective(x.as_slice());
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut trace = vec![f];
    let mut restarted = false;

    for iter in 0..opts.max_iter {
        let gnorm = inf_norm(&g);
        if gnorm <= opts.gtol {
            return Maximum {
                x: x.as_slice().to_vec(),
                value: f,
                grad_norm: gnorm,
                iterations: iter,
                converged: true,
                trace,
            };
        }
        let mut dir = &h * &g;
        let mut slope = g.dot(&dir);
        if !(slope > 0.0) {
            h = DMatrix::identity(n, n);
            dir = g.clone();
            slope = g.dot(&g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_halvings {
            let trial = &x + step * &dir;
            let (ft, gt) = objective(trial.as_slice());
            if ft.is_finite() && ft >= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, DVector::from_vec(gt)));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if restarted {
                break;
            }
            restarted = true;
            h = DMatrix::identity(n, n);
            continue;
        };
        restarted = false;

        // BFGS update on the minimization of -f
        let s = &x_new - &x;
        let y = &g - &g_new;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            if iter == 0 {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (rho * rho * yhy + rho) * (&s * s.transpose())
                - rho * (&hy * s.transpose() + &s * hy.transpose());
        }
        x = x_new;
        f = f_new;
        g = g_new;
        trace.push(f);
    }
    let gnorm = inf_norm(&g);
    Maximum {
        x: x.as_slice().to_vec(),
        value: f,
        grad_norm: gnorm,
        iterations: trace.len() - 1,
        converged: gnorm <= opts.gtol,
        trace,
    }
}

/// Nelder–Mead simplex search. Non-finite objective values count as `-inf`.
pub fn nelder_mead<F>(objective: F, x0: &[f64], scale: f64, max_evals: usize, ftol: f64) -> Maximum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += scale;
        let v = eval(&p);
        simplex.push((p, v));
    }
    let mut evals = n + 1;
    let mut trace = Vec::new();
    let mut converged = false;
    while evals < max_evals {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        trace.push(simplex[0].1);
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if best.is_finite() && (best - worst).abs() <= ftol * (1.0 + best.abs()) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let reflected = along(1.0);
        let fr = eval(&reflected);
        evals += 1;
        if fr > simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded);
            evals += 1;
            simplex[n] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr > simplex[n].1 { along(0.5) } else { along(-0.5) };
            let fc = eval(&contracted);
            evals += 1;
            if fc > simplex[n].1.max(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    for (xi, bi) in p.0.iter_mut().zip(&best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    p.1 = eval(&p.0);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    Maximum {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        grad_norm: f64::NAN,
        iterations: evals,
        converged,
        trace,
    }
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
pub fn golden_section<F>(objective: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (objective(a), objective(b));
    while (hi - lo).abs() > tol * (1.0 + a.abs()) {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = objective(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = objective(b);
        }
    }
    if fa >= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}
