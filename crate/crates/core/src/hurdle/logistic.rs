use nalgebra::{DMatrix, DVector};

use super::{DesignMatrix, HurdleFit, Stage};
use crate::error::{Error, Result};

const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;
const GTOL: f64 = 1e-6;
/// Coefficients (on the scaled design) beyond this signal separation.
const DIVERGENCE: f64 = 30.0;

fn log_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood of `y` under linear predictor `X beta`.
pub(crate) fn log_likelihood(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| yi * log_sigmoid(e) + (1.0 - yi) * log_sigmoid(-e))
        .sum()
}

/// Bernoulli log-likelihood and its gradient in `beta`, summed over rows.
pub fn logistic_log_likelihood(design: &DesignMatrix, beta: &[f64]) -> (f64, Vec<f64>) {
    let x = design.x();
    let b = DVector::from_column_slice(beta);
    let residual: DVector<f64> = (x * &b)
        .iter()
        .zip(design.y())
        .map(|(&e, &y)| y - sigmoid(e))
        .collect::<Vec<_>>()
        .into();
    let grad = x.transpose() * residual;
    (log_likelihood(x, design.y(), &b), grad.as_slice().to_vec())
}

/// Logistic regression fitted by Newton's method with step halving.
///
/// Fails with `Separation` when the outcome is constant or the coefficients
/// diverge, and with `Singular` when the design columns are collinear.
pub fn fit_logistic(design: &DesignMatrix) -> Result<HurdleFit> {
    let x = design.x();
    let y = design.y();
    let (n, p) = (design.rows(), design.cols());
    if n == 0 {
        return Err(Error::InsufficientData("no rows to fit".into()));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::MalformedInput("logistic outcome must be 0 or 1".into()));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(Error::Separation(format!(
            "outcome is constant ({} of {n} rows are 1)",
            ones
        )));
    }

    let yv = DVector::from_column_slice(y);
    let mut beta = DVector::<f64>::zeros(p);
    // start the intercept at the marginal log-odds
    let rate = ones as f64 / n as f64;
    beta[0] = (rate / (1.0 - rate)).ln();
    let mut ll = log_likelihood(x, y, &beta);
    let mut trace = vec![ll];
    let nf = n as f64;

    for iter in 0..MAX_ITER {
        let eta = x * &beta;
        let mu = eta.map(sigmoid);
        let grad = x.transpose() * (&yv - &mu) / nf;
        let gnorm = grad.amax();
        if gnorm <= GTOL {
            return Ok(HurdleFit {
                stage: Stage::Binomial,
                columns: design.names().to_vec(),
                coefficients: beta.as_slice().to_vec(),
                theta: None,
                log_likelihood: ll,
                n_obs: n,
                iterations: iter,
                grad_norm: gnorm,
                trace,
            });
        }
        let w = mu.map(|m| m * (1.0 - m));
        let mut info = DMatrix::<f64>::zeros(p, p);
        for (r, row) in x.row_iter().enumerate() {
            info += w[r] * row.transpose() * row;
        }
        info /= nf;
        let Some(chol) = info.clone().cholesky() else {
            return Err(singular_or_separated(design, &beta));
        };
        let step = chol.solve(&grad);

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = &beta + t * &step;
            let ll_trial = log_likelihood(x, y, &trial);
            if ll_trial.is_finite() && ll_trial >= ll {
                beta = trial;
                ll = ll_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::Optimization(format!(
                "logistic line search failed after {MAX_HALVINGS} halvings (gradient {gnorm:.3e})"
            )));
        }
        trace.push(ll);
        if beta.iter().skip(1).any(|b| b.abs() > DIVERGENCE) || beta[0].abs() > 2.0 * DIVERGENCE {
            return Err(singular_or_separated(design, &beta));
        }
    }
    Err(singular_or_separated(design, &beta))
}

fn singular_or_separated(design: &DesignMatrix, beta: &DVector<f64>) -> Error {
    let xtx = design.x().transpose() * design.x();
    let min_eig = xtx
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let max_diag = (0..xtx.nrows()).fold(0.0f64, |m, i| m.max(xtx[(i, i)]));
    if min_eig <= 1e-10 * max_diag {
        return Error::Singular(design.collinear_columns());
    }
    let cols: Vec<&str> = design
        .names()
        .iter()
        .zip(beta.iter())
        .skip(1)
        .filter(|(_, b)| b.abs() > DIVERGENCE / 3.0)
        .map(|(n, _)| n.as_str())
        .collect();
    Error::Separation(format!(
        "coefficients diverge; outcome is (quasi-)separated by {}",
        if cols.is_empty() { "the design".to_string() } else { cols.join(", ") }
    ))
}
