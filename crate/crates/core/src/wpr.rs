//! Hypothesis-weighted PageRank and its evaluation against observed traffic.

use std::io::Write;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::graph::{stationary, CentralityVector, LinkGraph, Measure, PageRankConfig};
use crate::hyptrails::HypothesisMatrix;
use crate::ingest::TransitionLog;

/// Damping factors evaluated by default.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.80, 0.85, 0.90];

/// PageRank of a surfer that follows out-link `j` of `i` with probability
/// `m_ij / sum_j' m_ij'`. Rows without positive belief teleport uniformly.
pub fn weighted_pagerank(g: &LinkGraph, h: &HypothesisMatrix, config: &PageRankConfig) -> Result<CentralityVector> {
    config.validate()?;
    let beliefs = h.beliefs();
    if beliefs.len() != g.edge_count() {
        return Err(Error::Alignment(format!(
            "hypothesis {} has {} beliefs for {} edges",
            h.name(),
            beliefs.len(),
            g.edge_count()
        )));
    }
    let mut probs = vec![0.0; g.edge_count()];
    for v in g.nodes() {
        let range = g.out_edge_range(v);
        let z: f64 = beliefs[range.clone()].iter().sum();
        if z > 0.0 {
            for k in range {
                probs[k] = beliefs[k] / z;
            }
        }
    }
    Ok(CentralityVector {
        measure: Measure::PageRank,
        values: stationary(g, &probs, config)?,
    })
}

/// Views of each article from internal navigation: transition counts summed by target.
pub fn incoming_transition_sums(log: &TransitionLog, n_nodes: usize) -> Vec<u64> {
    let mut views = vec![0u64; n_nodes];
    for e in log.entries() {
        views[e.trg as usize] += e.count;
    }
    views
}

/// Ranks starting at 1, ties receiving the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("one input is constant".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation and its two-sided t-test p-value.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!("{} vs {} observations", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData("Spearman correlation needs at least 3 pairs".into()));
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y))?;
    let df = x.len() as f64 - 2.0;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.cdf(-t.abs())).min(1.0)
    };
    Ok((rho, p))
}

/// Steiger's Z for `r12` versus `r13`, two correlations sharing variable 1,
/// with `r23` the correlation of the other two. Returns `z` and the one-tailed
/// p-value for `r12 > r13`.
pub fn steiger_test(r12: f64, r13: f64, r23: f64, n: usize) -> Result<(f64, f64)> {
    if n < 10 {
        return Err(Error::Precondition(format!("Steiger's test needs n >= 10, got {n}")));
    }
    for r in [r12, r13, r23] {
        if !(r.abs() < 1.0) {
            return Err(Error::Degenerate(format!("correlation {r} has no Fisher transform")));
        }
    }
    let rbar = (r12 + r13) / 2.0;
    let rbar2 = rbar * rbar;
    let psi = r23 * (1.0 - 2.0 * rbar2) - 0.5 * rbar2 * (1.0 - 2.0 * rbar2 - r23 * r23);
    let c = psi / ((1.0 - rbar2) * (1.0 - rbar2));
    let z = (r12.atanh() - r13.atanh()) * ((n as f64 - 3.0) / (2.0 - 2.0 * c)).sqrt();
    let p = Normal::standard().sf(z);
    Ok((z, p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteigerResult {
    pub z: f64,
    pub p: f64,
}

#[derive(Debug, Clone)]
pub struct RankEvaluation {
    pub hypothesis: String,
    pub alpha: f64,
    pub pagerank: CentralityVector,
    pub rho: f64,
    pub p: f64,
    /// Against the unweighted baseline at the same damping; `None` for the
    /// baseline itself and when the test is undefined.
    pub steiger: Option<SteigerResult>,
    /// `rho` exceeds the baseline's at the same damping.
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationOptions {
    pub alphas: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Correlate only over articles with at least one incoming transition.
    pub viewed_only: bool,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        let pr = PageRankConfig::default();
        Self {
            alphas: DEFAULT_ALPHAS.to_vec(),
            tol: pr.tol,
            max_iter: pr.max_iter,
            viewed_only: false,
        }
    }
}

/// Name of the unweighted PageRank rows in evaluation output.
pub const BASELINE: &str = "baseline";

/// Correlates the unweighted and every hypothesis-weighted PageRank with
/// incoming transitions at each damping factor. Rows are ordered by
/// damping, baseline first, then hypotheses in input order.
pub fn evaluate_all(
    g: &LinkGraph,
    hyps: &[HypothesisMatrix],
    log: &TransitionLog,
    opts: &EvaluationOptions,
) -> Result<Vec<RankEvaluation>> {
    let views = incoming_transition_sums(log, g.node_count());
    let universe: Vec<usize> = (0..g.node_count())
        .filter(|&v| !opts.viewed_only || views[v] > 0)
        .collect();
    let view_values: Vec<f64> = universe.iter().map(|&v| views[v] as f64).collect();
    let restrict = |pr: &CentralityVector| -> Vec<f64> { universe.iter().map(|&v| pr.values[v]).collect() };
    let config = |alpha| PageRankConfig {
        alpha,
        tol: opts.tol,
        max_iter: opts.max_iter,
    };

    let baselines: Vec<(CentralityVector, f64, f64)> = opts
        .alphas
        .par_iter()
        .map(|&alpha| {
            let pr = g.pagerank(&config(alpha))?;
            let (rho, p) = spearman(&restrict(&pr), &view_values)?;
            Ok((pr, rho, p))
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..opts.alphas.len())
        .flat_map(|a| (0..hyps.len()).map(move |h| (a, h)))
        .collect();
    let weighted: Vec<RankEvaluation> = cells
        .par_iter()
        .map(|&(a, h)| {
            let alpha = opts.alphas[a];
            let pr = weighted_pagerank(g, &hyps[h], &config(alpha))?;
            let ranks = restrict(&pr);
            let (rho, p) = spearman(&ranks, &view_values)?;
            let (base_pr, base_rho, _) = &baselines[a];
            let steiger = spearman(&ranks, &restrict(base_pr))
                .and_then(|(r23, _)| steiger_test(rho, *base_rho, r23, universe.len()))
                .ok()
                .map(|(z, p)| SteigerResult { z, p });
            Ok(RankEvaluation {
                hypothesis: hyps[h].name().to_string(),
                alpha,
                pagerank: pr,
                rho,
                p,
                steiger,
                improved: rho > *base_rho,
            })
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(baselines.len() * (hyps.len() + 1));
    let mut weighted = weighted.into_iter();
    for (a, (pr, rho, p)) in baselines.into_iter().enumerate() {
        out.push(RankEvaluation {
            hypothesis: BASELINE.to_string(),
            alpha: opts.alphas[a],
            pagerank: pr,
            rho,
            p,
            steiger: None,
            improved: false,
        });
        out.extend(weighted.by_ref().take(hyps.len()));
    }
    Ok(out)
}

/// Tab-separated `hypothesis alpha rho p steiger_z steiger_p improved` rows;
/// Steiger columns are `NA` where undefined.
pub fn write_evaluations<W: Write>(rows: &[RankEvaluation], mut w: W) -> Result<()> {
    writeln!(w, "hypothesis\talpha\trho\tp\tsteiger_z\tsteiger_p\timproved")?;
    for r in rows {
        let (z, p) = match r.steiger {
            Some(s) => (format!("{:.6}", s.z), format!("{:.6e}", s.p)),
            None => ("NA".to_string(), "NA".to_string()),
        };
        writeln!(
            w,
            "{}\t{:.2}\t{:.6}\t{:.6e}\t{z}\t{p}\t{}",
            r.hypothesis, r.alpha, r.rho, r.p, r.improved
        )?;
    }
    Ok(())
}
