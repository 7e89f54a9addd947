//! Maximum-likelihood fits of discrete heavy-tailed candidates to positive
//! integer samples, compared by AIC.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::optim::{golden_section, nelder_mead};

const MIN_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    PowerLaw,
    TruncatedPowerLaw,
    LogNormal,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::PowerLaw,
        Family::TruncatedPowerLaw,
        Family::LogNormal,
        Family::Exponential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::PowerLaw => "power_law",
            Family::TruncatedPowerLaw => "truncated_power_law",
            Family::LogNormal => "lognormal",
            Family::Exponential => "exponential",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Family::PowerLaw => &["alpha"],
            Family::TruncatedPowerLaw => &["alpha", "lambda"],
            Family::LogNormal => &["mu", "sigma"],
            Family::Exponential => &["lambda"],
        }
    }

    /// True for the two power-law families.
    pub fn is_power_law(self) -> bool {
        matches!(self, Family::PowerLaw | Family::TruncatedPowerLaw)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyFit {
    pub family: Family,
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    pub aic: f64,
    /// AIC minus the winner's AIC.
    pub delta_aic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub xmin: u64,
    /// Samples at or above `xmin`.
    pub n: usize,
    /// Converged fits, in [`Family::ALL`] order.
    pub fits: Vec<FamilyFit>,
    pub failures: Vec<(Family, String)>,
    pub winner: Family,
}

impl FitReport {
    pub fn fit(&self, family: Family) -> Option<&FamilyFit> {
        self.fits.iter().find(|f| f.family == family)
    }

    pub fn winning_fit(&self) -> &FamilyFit {
        self.fit(self.winner).expect("winner is among the fits")
    }
}

/// Tail samples as `(value, multiplicity)`.
type Tail = [(u64, f64)];

/// Hurwitz zeta `sum_{k>=0} (q + k)^-s` for `s > 1`, `q > 0`, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    // B_2j / (2j)!
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    const N: usize = 12;
    let mut sum: f64 = (0..N).map(|k| (q + k as f64).powf(-s)).sum();
    let a = q + N as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) times a^(-s-2j+1)
    let mut factor = s * a.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        sum += b * factor;
        let k = 2.0 * j as f64;
        factor *= (s + k + 1.0) * (s + k + 2.0) / (a * a);
    }
    sum
}

/// `sum_{x >= xmin} x^-alpha exp(-lambda x)` for `lambda > 0`.
fn truncated_normalizer(alpha: f64, lambda: f64, xmin: u64) -> f64 {
    let term = |x: f64| (-alpha * x.ln() - lambda * x).exp();
    let mut sum = 0.0;
    let mut x = xmin as f64;
    let stop = x + 2000.0;
    while x < stop {
        let t = term(x);
        sum += t;
        if t < 1e-18 * sum {
            return sum;
        }
        x += 1.0;
    }
    // Euler–Maclaurin remainder from x onward
    let f = term(x);
    let df = f * (-alpha / x - lambda);
    sum + tail_integral(alpha, lambda, x) + 0.5 * f - df / 12.0
}

/// `int_k^inf x^-alpha exp(-lambda x) dx` via `x = k e^t` and Simpson's rule.
fn tail_integral(alpha: f64, lambda: f64, k: f64) -> f64 {
    let lk = lambda * k;
    let exponent = |t: f64| (1.0 - alpha) * t - lk * (t.exp() - 1.0);
    let mut upper = 1.0;
    while exponent(upper) > -60.0 && upper < 1e4 {
        upper *= 1.5;
    }
    let m = 4000;
    let h = upper / m as f64;
    let mut acc = exponent(0.0).exp() + exponent(upper).exp();
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * exponent(i as f64 * h).exp();
    }
    k.powf(1.0 - alpha) * (-lk).exp() * acc * h / 3.0
}

/// `ln P(a <= X < b)` for a log-normal `X`.
fn ln_lognormal_interval(a: f64, b: f64, mu: f64, sigma: f64) -> f64 {
    let z = |x: f64| (x.ln() - mu) / sigma;
    let (za, zb) = (z(a), z(b));
    let sqrt2 = std::f64::consts::SQRT_2;
    let p = if za > 0.0 {
        0.5 * (erfc(za / sqrt2) - erfc(zb / sqrt2))
    } else {
        0.5 * (erfc(-zb / sqrt2) - erfc(-za / sqrt2))
    };
    p.ln()
}

fn ln_lognormal_survival(a: f64, mu: f64, sigma: f64) -> f64 {
    (0.5 * erfc((a.ln() - mu) / (sigma * std::f64::consts::SQRT_2))).ln()
}

fn tail_ll(family: Family, params: &[f64], tail: &Tail, xmin: u64) -> f64 {
    let n: f64 = tail.iter().map(|t| t.1).sum();
    match family {
        Family::PowerLaw => {
            let alpha = params[0];
            if !(alpha > 1.0) {
                return f64::NEG_INFINITY;
            }
            let sum_ln: f64 = tail.iter().map(|&(x, c)| c * (x as f64).ln()).sum();
            -alpha * sum_ln - n * hurwitz_zeta(alpha, xmin as f64).ln()
        }
        Family::TruncatedPowerLaw => {
            let (alpha, lambda) = (params[0], params[1]);
            if !(alpha > 1.0 && lambda > 0.0) {
                return f64::NEG_INFINITY;
            }
            let body: f64 = tail
                .iter()
                .map(|&(x, c)| c * (-alpha * (x as f64).ln() - lambda * x as f64))
                .sum();
            body - n * truncated_normalizer(alpha, lambda, xmin).ln()
        }
        Family::LogNormal => {
            let (mu, sigma) = (params[0], params[1]);
            if !(sigma > 0.0) {
                return f64::NEG_INFINITY;
            }
            let body: f64 = tail
                .iter()
                .map(|&(x, c)| c * ln_lognormal_interval(x as f64, x as f64 + 1.0, mu, sigma))
                .sum();
            body - n * ln_lognormal_survival(xmin as f64, mu, sigma)
        }
        Family::Exponential => {
            let lambda = params[0];
            if !(lambda > 0.0) {
                return f64::NEG_INFINITY;
            }
            let excess: f64 = tail.iter().map(|&(x, c)| c * (x - xmin) as f64).sum();
            n * (-(-lambda).exp_m1()).ln() - lambda * excess
        }
    }
}

fn tail_of(samples: &[u64], xmin: u64) -> Vec<(u64, f64)> {
    let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
    for &x in samples.iter().filter(|&&x| x >= xmin) {
        *counts.entry(x).or_default() += 1.0;
    }
    counts.into_iter().collect()
}

/// Log-likelihood of the samples at or above `xmin` under `family` with `params`.
pub fn log_likelihood(family: Family, params: &[f64], samples: &[u64], xmin: u64) -> f64 {
    tail_ll(family, params, &tail_of(samples, xmin), xmin)
}

fn fit_family(family: Family, tail: &Tail, xmin: u64) -> std::result::Result<Vec<f64>, String> {
    let n: f64 = tail.iter().map(|t| t.1).sum();
    let mean = tail.iter().map(|&(x, c)| c * x as f64).sum::<f64>() / n;
    let params = match family {
        Family::PowerLaw => {
            let (alpha, _) = golden_section(
                |a| tail_ll(Family::PowerLaw, &[a], tail, xmin),
                1.0 + 1e-9,
                20.0,
                1e-12,
            );
            vec![alpha]
        }
        Family::Exponential => vec![(1.0 / (mean - xmin as f64)).ln_1p()],
        Family::LogNormal => {
            let logs: Vec<(f64, f64)> = tail.iter().map(|&(x, c)| ((x as f64).ln(), c)).collect();
            let mu0 = logs.iter().map(|(l, c)| l * c).sum::<f64>() / n;
            let var = logs.iter().map(|(l, c)| c * (l - mu0).powi(2)).sum::<f64>() / n;
            let start = [mu0, var.sqrt().max(0.1).ln()];
            let m = nelder_mead(
                |p| tail_ll(Family::LogNormal, &[p[0], p[1].exp()], tail, xmin),
                &start,
                0.5,
                20_000,
                1e-15,
            );
            if !m.converged {
                return Err("simplex search did not converge".into());
            }
            vec![m.x[0], m.x[1].exp()]
        }
        Family::TruncatedPowerLaw => {
            let (alpha_pl, _) = golden_section(
                |a| tail_ll(Family::PowerLaw, &[a], tail, xmin),
                1.0 + 1e-9,
                20.0,
                1e-10,
            );
            let starts = [
                [(alpha_pl - 1.0).max(0.05).ln(), (0.01 / mean).ln()],
                [(0.5f64).ln(), (1.0 / mean).ln()],
            ];
            let best = starts
                .iter()
                .map(|s| {
                    nelder_mead(
                        |p| tail_ll(Family::TruncatedPowerLaw, &[1.0 + p[0].exp(), p[1].exp()], tail, xmin),
                        s,
                        0.5,
                        20_000,
                        1e-15,
                    )
                })
                .max_by(|a, b| a.value.total_cmp(&b.value))
                .expect("at least one start");
            if !best.converged {
                return Err("simplex search did not converge".into());
            }
            vec![1.0 + best.x[0].exp(), best.x[1].exp()]
        }
    };
    Ok(params)
}

/// Fits every candidate family to the samples at or above `xmin` and selects
/// the one with the smallest AIC. Families whose fit fails are listed in
/// [`FitReport::failures`] and left out of the comparison.
pub fn fit_distributions(samples: &[u64], xmin: u64) -> Result<FitReport> {
    if xmin == 0 {
        return Err(Error::InvalidParameter("xmin must be at least 1".into()));
    }
    let tail = tail_of(samples, xmin);
    let n: usize = tail.iter().map(|t| t.1 as usize).sum();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{n} samples at or above xmin = {xmin}; at least {MIN_SAMPLES} required"
        )));
    }
    if tail.len() < 2 {
        return Err(Error::Degenerate("all samples share one value".into()));
    }

    let outcomes: Vec<(Family, std::result::Result<FamilyFit, String>)> = Family::ALL
        .par_iter()
        .map(|&family| {
            let fit = fit_family(family, &tail, xmin).and_then(|params| {
                let ll = tail_ll(family, &params, &tail, xmin);
                if ll.is_finite() {
                    Ok(FamilyFit {
                        family,
                        aic: 2.0 * params.len() as f64 - 2.0 * ll,
                        params,
                        log_likelihood: ll,
                        delta_aic: 0.0,
                    })
                } else {
                    Err("non-finite log-likelihood at the optimum".into())
                }
            });
            (family, fit)
        })
        .collect();

    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for (family, outcome) in outcomes {
        match outcome {
            Ok(f) => fits.push(f),
            Err(msg) => failures.push((family, msg)),
        }
    }
    let best = fits
        .iter()
        .min_by(|a, b| a.aic.total_cmp(&b.aic))
        .ok_or_else(|| Error::Optimization("no candidate family could be fitted".into()))?;
    let (winner, best_aic) = (best.family, best.aic);
    for f in &mut fits {
        f.delta_aic = f.aic - best_aic;
    }
    Ok(FitReport {
        xmin,
        n,
        fits,
        failures,
        winner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_known_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((hurwitz_zeta(2.0, 1.0) - pi2 / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(2.0, 2.0) - (pi2 / 6.0 - 1.0)).abs() < 1e-14);
        assert!((hurwitz_zeta(3.0, 1.0) - 1.202_056_903_159_594_3).abs() < 1e-14);
        assert!((hurwitz_zeta(4.0, 1.0) - pi2 * pi2 / 90.0).abs() < 1e-14);
    }

    #[test]
    fn zeta_matches_long_direct_sum() {
        // direct sum to 10^6 plus the leading integral tail
        for &(s, q) in &[(2.5f64, 1.0f64), (1.7, 3.0), (3.2, 10.0)] {
            let big = 1_000_000.0;
            let mut direct = 0.0;
            let mut k = 0.0f64;
            while q + k < big {
                direct += (q + k).powf(-s);
                k += 1.0;
            }
            let a: f64 = q + k;
            direct += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
            assert!(((hurwitz_zeta(s, q) - direct) / direct).abs() < 1e-10);
        }
    }

    #[test]
    fn truncated_normalizer_matches_direct_sum() {
        for &(alpha, lambda, xmin) in &[(1.5, 1e-3, 1u64), (2.0, 0.05, 3), (1.01, 1e-4, 1)] {
            let mut direct = 0.0;
            let mut x = xmin as f64;
            loop {
                let t = (-alpha * x.ln() - lambda * x).exp();
                direct += t;
                if t < 1e-22 {
                    break;
                }
                x += 1.0;
            }
            let z = truncated_normalizer(alpha, lambda, xmin);
            assert!(((z - direct) / direct).abs() < 1e-9, "{alpha} {lambda}: {z} vs {direct}");
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        for family in Family::ALL {
            let params: Vec<f64> = match family {
                Family::PowerLaw => vec![2.2],
                Family::TruncatedPowerLaw => vec![1.8, 0.01],
                Family::LogNormal => vec![1.0, 0.8],
                Family::Exponential => vec![0.3],
            };
            let xmin = 2;
            let upper = if family == Family::PowerLaw { 200_000 } else { 10_000 };
            let total: f64 = (xmin..upper)
                .map(|x| tail_ll(family, &params, &[(x, 1.0)], xmin).exp())
                .sum();
            let tol = if family == Family::PowerLaw { 1e-3 } else { 1e-8 };
            assert!((total - 1.0).abs() < tol, "{family}: {total}");
        }
    }

    #[test]
    fn too_few_or_constant_samples() {
        assert!(matches!(fit_distributions(&[3; 10], 1), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_distributions(&[3; 100], 1), Err(Error::Degenerate(_))));
    }
}
