use statrs::function::gamma::{digamma, ln_gamma};

use super::{DesignMatrix, HurdleFit, Stage};
use crate::error::{Error, Result};
use crate::optim::{bfgs, BfgsOptions};

/// Gradient size accepted as converged when BFGS stalls on round-off.
const STALL_GTOL: f64 = 1e-5;

/// Zero-truncated negative binomial log-likelihood and its gradient with
/// respect to `(beta, ln theta)`, summed over rows. Uses a log link.
pub fn ztnb_log_likelihood(design: &DesignMatrix, params: &[f64]) -> (f64, Vec<f64>) {
    let p = design.cols();
    assert_eq!(params.len(), p + 1, "expected one coefficient per column plus ln theta");
    let x = design.x();
    let theta = params[p].exp();
    let lg_theta = ln_gamma(theta);
    let dg_theta = digamma(theta);
    let mut ll = 0.0;
    let mut grad = vec![0.0; p + 1];
    for (r, &y) in design.y().iter().enumerate() {
        let eta: f64 = (0..p).map(|c| x[(r, c)] * params[c]).sum();
        let mu = eta.exp();
        let tm = theta + mu;
        // ln(theta / (theta + mu)) without cancellation for small mu / theta
        let log_ratio = -(mu / theta).ln_1p();
        let log_p0 = theta * log_ratio;
        let log_1m_p0 = (-log_p0.exp_m1()).ln();
        // p0 / (1 - p0)
        let odds0 = 1.0 / (-log_p0).exp_m1();

        ll += ln_gamma(y + theta) - lg_theta - ln_gamma(y + 1.0) + log_p0 + y * (eta - tm.ln()) - log_1m_p0;

        let d_eta = y - (y + theta) * mu / tm - odds0 * theta * mu / tm;
        for c in 0..p {
            grad[c] += d_eta * x[(r, c)];
        }
        let d_theta = digamma(y + theta) - dg_theta + log_ratio + mu / tm - y / tm
            + odds0 * (log_ratio + mu / tm);
        grad[p] += theta * d_theta;
    }
    (ll, grad)
}

/// Zero-truncated negative binomial regression by BFGS over `(beta, ln theta)`,
/// started at the intercept-only Poisson mean and `theta_init`.
pub fn fit_ztnb(design: &DesignMatrix, theta_init: f64) -> Result<HurdleFit> {
    let (n, p) = (design.rows(), design.cols());
    if n == 0 {
        return Err(Error::InsufficientData("no rows to fit".into()));
    }
    if !(theta_init > 0.0 && theta_init.is_finite()) {
        return Err(Error::InvalidParameter("initial theta must be positive".into()));
    }
    if let Some(bad) = design.y().iter().find(|&&y| y < 1.0 || y.fract() != 0.0) {
        return Err(Error::Precondition(format!(
            "zero-truncated counts must be positive integers, found {bad}"
        )));
    }
    let mean_y = design.y().iter().sum::<f64>() / n as f64;
    let mut x0 = vec![0.0; p + 1];
    x0[0] = mean_y.ln();
    x0[p] = theta_init.ln();

    let nf = n as f64;
    let objective = |params: &[f64]| {
        let (ll, g) = ztnb_log_likelihood(design, params);
        (ll / nf, g.into_iter().map(|v| v / nf).collect::<Vec<_>>())
    };
    let m = bfgs(objective, &x0, &BfgsOptions::default());
    if !m.value.is_finite() || m.grad_norm > STALL_GTOL {
        return Err(Error::NonConvergence {
            routine: "ztnb",
            iterations: m.iterations,
            residual: m.grad_norm,
            last: m.x,
        });
    }
    Ok(HurdleFit {
        stage: Stage::Ztnb,
        columns: design.names().to_vec(),
        coefficients: m.x[..p].to_vec(),
        theta: Some(m.x[p].exp()),
        log_likelihood: m.value * nf,
        n_obs: n,
        iterations: m.iterations,
        grad_norm: m.grad_norm,
        trace: m.trace.iter().map(|v| v * nf).collect(),
    })
}
