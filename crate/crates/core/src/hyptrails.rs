//! Bayesian comparison of navigation hypotheses for a first-order Markov chain
//! on the link graph.
//!
//! A hypothesis assigns a nonnegative belief to every edge. Beliefs are turned
//! into Dirichlet priors over each article's out-link distribution and scored
//! by the Dirichlet-multinomial marginal likelihood of the observed transitions.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::{CentralityVector, LinkGraph};
use crate::ingest::{LinkFeatureTable, Region, Transition, TransitionLog};

/// Regions whose links count as visually prominent.
pub const PROMINENT_REGIONS: [Region; 3] = [Region::Lead, Region::LeftBody, Region::Infobox];

/// Cheap identity check so beliefs are never applied to a different graph.
fn graph_signature(g: &LinkGraph) -> u64 {
    // FNV-1a over the edge list
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(g.node_count() as u64);
    for (s, t) in g.edges() {
        feed((u64::from(s) << 32) | u64::from(t));
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisMatrix {
    name: String,
    /// One belief per edge in forward edge order.
    beliefs: Vec<f64>,
    smoothed: bool,
    /// Edges whose belief was missing and filled with 0 before smoothing.
    missing: usize,
    signature: u64,
}

impl HypothesisMatrix {
    /// Hypothesis from explicit per-edge beliefs aligned to the forward edge order.
    pub fn from_beliefs(name: impl Into<String>, g: &LinkGraph, beliefs: Vec<f64>) -> Result<Self> {
        if beliefs.len() != g.edge_count() {
            return Err(Error::Alignment(format!(
                "{} beliefs for {} edges",
                beliefs.len(),
                g.edge_count()
            )));
        }
        if let Some(b) = beliefs.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::InvalidParameter(format!("belief {b} is not finite and nonnegative")));
        }
        Ok(Self {
            name: name.into(),
            beliefs,
            smoothed: false,
            missing: 0,
            signature: graph_signature(g),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    pub fn is_smoothed(&self) -> bool {
        self.smoothed
    }

    pub fn missing(&self) -> usize {
        self.missing
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Adds the structural belief (1 per edge).
    pub fn smoothed(mut self) -> Self {
        for b in &mut self.beliefs {
            *b += 1.0;
        }
        self.smoothed = true;
        self
    }

    /// Multiplies every belief by `c`.
    pub fn scaled(mut self, c: f64) -> Self {
        for b in &mut self.beliefs {
            *b *= c;
        }
        self
    }

    fn check_graph(&self, g: &LinkGraph) -> Result<()> {
        if self.signature != graph_signature(g) || self.beliefs.len() != g.edge_count() {
            return Err(Error::Alignment(format!(
                "hypothesis {} was built on a different graph",
                self.name
            )));
        }
        Ok(())
    }
}

/// Uniform choice among out-links: belief 1 on every edge.
pub fn structural_hypothesis(g: &LinkGraph) -> HypothesisMatrix {
    HypothesisMatrix::from_beliefs("structural", g, vec![1.0; g.edge_count()]).expect("valid beliefs")
}

/// Belief `1 / sqrt(max(kcore(target), 1))` per edge, smoothed.
pub fn kcore_hypothesis(g: &LinkGraph, kcore: &CentralityVector) -> Result<HypothesisMatrix> {
    if kcore.len() != g.node_count() {
        return Err(Error::Alignment(format!(
            "{} core numbers for {} nodes",
            kcore.len(),
            g.node_count()
        )));
    }
    if kcore.values.iter().any(|k| !(*k >= 0.0)) {
        return Err(Error::InvalidParameter("core numbers must be nonnegative".into()));
    }
    let beliefs = g.edges().map(|(_, t)| 1.0 / kcore.get(t).max(1.0).sqrt()).collect();
    Ok(HypothesisMatrix::from_beliefs("kcore", g, beliefs)?.smoothed())
}

/// Per-edge values of a feature table column; edges absent from the table get `None`.
fn edge_values<F>(g: &LinkGraph, table: &LinkFeatureTable, value: F) -> Result<Vec<Option<f64>>>
where
    F: Fn(&crate::ingest::LinkFeatures) -> Option<f64>,
{
    let mut out = vec![None; g.edge_count()];
    for r in table.records() {
        let k = g.edge_index(r.src, r.trg).ok_or(Error::Support {
            src: r.src,
            trg: r.trg,
        })?;
        out[k] = value(r);
    }
    Ok(out)
}

/// Textual similarity of source and target as belief, smoothed. Edges without
/// a similarity value are filled with 0 and tallied in [`HypothesisMatrix::missing`].
pub fn textsim_hypothesis(g: &LinkGraph, table: &LinkFeatureTable) -> Result<HypothesisMatrix> {
    let values = edge_values(g, table, |r| Some(r.text_sim).filter(|v| !v.is_nan()))?;
    if let Some(v) = values.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!("text similarity {v} outside [0, 1]")));
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    let beliefs = values.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut h = HypothesisMatrix::from_beliefs("text_sim", g, beliefs)?.smoothed();
    h.missing = missing;
    Ok(h)
}

/// Belief 1 for links in the lead, the left part of the body or the infobox,
/// 0 elsewhere, smoothed. Edges absent from the table are tallied as missing.
pub fn visual_hypothesis(g: &LinkGraph, table: &LinkFeatureTable) -> Result<HypothesisMatrix> {
    let values = edge_values(g, table, |r| {
        Some(f64::from(u8::from(PROMINENT_REGIONS.contains(&r.region))))
    })?;
    let missing = values.iter().filter(|v| v.is_none()).count();
    let beliefs = values.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut h = HypothesisMatrix::from_beliefs("visual", g, beliefs)?.smoothed();
    h.missing = missing;
    Ok(h)
}

/// Element-wise sum of hypotheses on the same graph; names are joined with `+`.
pub fn combine(hyps: &[HypothesisMatrix]) -> Result<HypothesisMatrix> {
    let (first, rest) = hyps
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("cannot combine an empty list of hypotheses".into()))?;
    let mut out = first.clone();
    for h in rest {
        if h.signature != first.signature || h.beliefs.len() != first.beliefs.len() {
            return Err(Error::Alignment(format!(
                "hypotheses {} and {} are on different graphs",
                first.name, h.name
            )));
        }
        for (a, b) in out.beliefs.iter_mut().zip(&h.beliefs) {
            *a += b;
        }
        out.name = format!("{}+{}", out.name, h.name);
        out.smoothed |= h.smoothed;
        out.missing += h.missing;
    }
    Ok(out)
}

/// The single-feature hypotheses and all their combinations:
/// `kcore`, `text_sim`, `visual`, then pairs and the triple, in that order.
pub fn standard_hypotheses(g: &LinkGraph, kcore: &CentralityVector, table: &LinkFeatureTable) -> Result<Vec<HypothesisMatrix>> {
    let k = kcore_hypothesis(g, kcore)?;
    let t = textsim_hypothesis(g, table)?;
    let v = visual_hypothesis(g, table)?;
    let combos = [
        combine(&[k.clone(), t.clone()])?,
        combine(&[k.clone(), v.clone()])?,
        combine(&[t.clone(), v.clone()])?,
        combine(&[k.clone(), t.clone(), v.clone()])?,
    ];
    let mut out = vec![k, t, v];
    out.extend(combos);
    Ok(out)
}

/// Dirichlet parameters per edge, aligned to the forward edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    pub kappa: f64,
    pub alphas: Vec<f64>,
}

/// `alpha_ij = 1 + kappa * m_ij / sum_j m_ij` for every row with out-edges.
pub fn elicit_prior(g: &LinkGraph, h: &HypothesisMatrix, kappa: f64) -> Result<DirichletPrior> {
    h.check_graph(g)?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let mut alphas = vec![0.0; g.edge_count()];
    for v in g.nodes() {
        let range = g.out_edge_range(v);
        if range.is_empty() {
            continue;
        }
        let total: f64 = h.beliefs[range.clone()].iter().sum();
        if !(total > 0.0) {
            return Err(Error::Elicitation(v));
        }
        for k in range {
            alphas[k] = 1.0 + kappa * h.beliefs[k] / total;
        }
    }
    Ok(DirichletPrior { kappa, alphas })
}

/// Sums in a fixed pairwise tree so the result does not depend on scheduling.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Transition counts grouped by source row, validated against the edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct RowCounts {
    /// `(source, [(edge index, count)])` for every source with transitions, ascending.
    rows: Vec<(u32, Vec<(usize, f64)>)>,
}

impl RowCounts {
    pub fn new(g: &LinkGraph, transitions: &[Transition]) -> Result<Self> {
        let mut cells: Vec<(u32, usize, f64)> = Vec::with_capacity(transitions.len());
        for t in transitions {
            let k = g.edge_index(t.src, t.trg).ok_or(Error::Support {
                src: t.src,
                trg: t.trg,
            })?;
            if t.count > 0 {
                cells.push((t.src, k, t.count as f64));
            }
        }
        cells.sort_by_key(|c| (c.0, c.1));
        let mut rows: Vec<(u32, Vec<(usize, f64)>)> = Vec::new();
        for (src, k, n) in cells {
            match rows.last_mut() {
                Some((s, row)) if *s == src => match row.last_mut() {
                    Some((kk, nn)) if *kk == k => *nn += n,
                    _ => row.push((k, n)),
                },
                _ => rows.push((src, vec![(k, n)])),
            }
        }
        Ok(Self { rows })
    }

    pub fn from_log(g: &LinkGraph, log: &TransitionLog) -> Result<Self> {
        Self::new(g, log.entries())
    }
}

/// Dirichlet-multinomial log evidence of the counts, without multinomial
/// coefficients. Rows without transitions contribute nothing.
pub fn log_evidence(g: &LinkGraph, prior: &DirichletPrior, counts: &RowCounts) -> f64 {
    let terms: Vec<f64> = counts
        .rows
        .par_iter()
        .map(|(src, row)| {
            let a: f64 = prior.alphas[g.out_edge_range(*src)].iter().sum();
            let n: f64 = row.iter().map(|c| c.1).sum();
            let cells: f64 = row
                .iter()
                .map(|&(k, nk)| ln_gamma(prior.alphas[k] + nk) - ln_gamma(prior.alphas[k]))
                .sum();
            ln_gamma(a) - ln_gamma(a + n) + cells
        })
        .collect();
    pairwise_sum(&terms)
}

/// Interpretation of `2 ln BF` on the Kass–Raftery scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Below 2.
    NotWorthMentioning,
    /// 2 to 6.
    Positive,
    /// 6 to 10.
    Strong,
    /// 10 and above.
    VeryStrong,
}

impl Verdict {
    pub fn from_log_bayes_factor(log_bf: f64) -> Self {
        let x = 2.0 * log_bf.abs();
        if x >= 10.0 {
            Verdict::VeryStrong
        } else if x >= 6.0 {
            Verdict::Strong
        } else if x >= 2.0 {
            Verdict::Positive
        } else {
            Verdict::NotWorthMentioning
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NotWorthMentioning => "not-worth-mentioning",
            Verdict::Positive => "positive",
            Verdict::Strong => "strong",
            Verdict::VeryStrong => "very-strong",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidencePoint {
    pub kappa: f64,
    pub log_evidence: f64,
    /// Log evidence minus the baseline's at the same kappa.
    pub log_bayes_factor: f64,
    pub verdict: Verdict,
}

impl EvidencePoint {
    /// Direction of the evidence: positive favours the hypothesis over the baseline.
    pub fn favours_hypothesis(&self) -> bool {
        self.log_bayes_factor > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceCurve {
    pub hypothesis: String,
    pub points: Vec<EvidencePoint>,
}

/// `{1, .., 5}` times the mean out-degree over articles with out-links.
pub fn default_kappa_grid(g: &LinkGraph) -> Vec<f64> {
    let sources = g.nodes().filter(|&v| g.out_degree(v) > 0).count();
    let mean = if sources == 0 {
        1.0
    } else {
        g.edge_count() as f64 / sources as f64
    };
    (1..=5).map(|k| f64::from(k) * mean).collect()
}

/// `count` values spaced evenly in log scale over `[lo, hi]`.
pub fn log_spaced_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && count >= 1) {
        return Err(Error::InvalidParameter("log grid needs 0 < lo <= hi and count >= 1".into()));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Log evidence and log Bayes factor against `baseline` for every hypothesis
/// at every kappa. Each curve is computed over the same grid.
pub fn bayes_factor_curve(
    g: &LinkGraph,
    hyps: &[HypothesisMatrix],
    baseline: &HypothesisMatrix,
    counts: &RowCounts,
    kappas: &[f64],
) -> Result<Vec<EvidenceCurve>> {
    let evidence = |h: &HypothesisMatrix| -> Result<Vec<f64>> {
        kappas
            .iter()
            .map(|&k| Ok(log_evidence(g, &elicit_prior(g, h, k)?, counts)))
            .collect()
    };
    let base = evidence(baseline)?;
    hyps.iter()
        .map(|h| {
            let ev = evidence(h)?;
            let points = kappas
                .iter()
                .zip(ev.iter().zip(&base))
                .map(|(&kappa, (&e, &b))| EvidencePoint {
                    kappa,
                    log_evidence: e,
                    log_bayes_factor: e - b,
                    verdict: Verdict::from_log_bayes_factor(e - b),
                })
                .collect();
            Ok(EvidenceCurve {
                hypothesis: h.name.clone(),
                points,
            })
        })
        .collect()
}

/// Tab-separated `hypothesis kappa log_evidence log_bf verdict` rows.
pub fn write_curves<W: Write>(curves: &[EvidenceCurve], mut w: W) -> Result<()> {
    writeln!(w, "hypothesis\tkappa\tlog_evidence\tlog_bf\tverdict")?;
    for c in curves {
        for p in &c.points {
            writeln!(
                w,
                "{}\t{}\t{:.6}\t{:.6}\t{}",
                c.hypothesis, p.kappa, p.log_evidence, p.log_bayes_factor, p.verdict
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    use super::*;
    use crate::graph::Measure;
    use crate::ingest::{LinkFeatures, NetworkFeatures};

    fn t(src: u32, trg: u32, count: u64) -> Transition {
        Transition { src, trg, count }
    }

    fn toy() -> LinkGraph {
        LinkGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (2, 0), (2, 3), (3, 0)]).unwrap()
    }

    fn record(src: u32, trg: u32, text_sim: f64, region: Region) -> LinkFeatures {
        let net = NetworkFeatures {
            degree: 0.0,
            in_degree: 0.0,
            out_degree: 0.0,
            kcore: 0.0,
            pagerank: 0.0,
        };
        LinkFeatures {
            src,
            trg,
            transitions: 0,
            src_net: net,
            trg_net: net,
            text_sim,
            topic_sim: 0.0,
            x_coord: 0.0,
            y_coord: 0.0,
            region,
        }
    }

    /// Probability of the observed counts as a sequence of Pólya-urn draws.
    fn polya_oracle(alphas: &[f64], counts: &[u64]) -> f64 {
        let mut a = alphas.to_vec();
        let mut ln = 0.0;
        let mut remaining = counts.to_vec();
        // draw in a fixed order; exchangeability makes the order irrelevant
        while let Some(j) = remaining.iter().position(|&c| c > 0) {
            let total: f64 = a.iter().sum();
            ln += (a[j] / total).ln();
            a[j] += 1.0;
            remaining[j] -= 1;
        }
        ln
    }

    #[test]
    fn structural_and_kcore_entries() {
        let g = toy();
        let s = structural_hypothesis(&g);
        assert_eq!(s.beliefs(), &[1.0; 7]);
        let kcore = CentralityVector {
            measure: Measure::KCore,
            values: vec![4.0, 1.0, 0.0, 9.0],
        };
        let k = kcore_hypothesis(&g, &kcore).unwrap();
        // edges in order: 0->1, 0->2, 0->3, 1->2, 2->0, 2->3, 3->0
        let expected = [2.0, 2.0, 1.0 + 1.0 / 3.0, 2.0, 1.5, 1.0 + 1.0 / 3.0, 1.5];
        for (a, b) in k.beliefs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(k.is_smoothed());
    }

    #[test]
    fn table_hypotheses() {
        let g = toy();
        let recs = vec![
            record(0, 1, 0.2, Region::Lead),
            record(0, 2, 1.0, Region::Navbox),
            record(0, 3, 0.0, Region::Infobox),
            record(1, 2, 0.5, Region::LeftBody),
            record(2, 0, 0.7, Region::Body),
            record(2, 3, 0.1, Region::RightBody),
        ];
        let table = LinkFeatureTable::new(vec!["a".into(), "b".into(), "c".into(), "d".into()], recs);
        let text = textsim_hypothesis(&g, &table).unwrap();
        assert_eq!(text.beliefs(), &[1.2, 2.0, 1.0, 1.5, 1.7, 1.1, 1.0]);
        assert_eq!(text.missing(), 1);
        let vis = visual_hypothesis(&g, &table).unwrap();
        assert_eq!(vis.beliefs(), &[2.0, 1.0, 2.0, 2.0, 1.0, 1.0, 1.0]);
        let both = combine(&[text.clone(), vis.clone()]).unwrap();
        for k in 0..7 {
            assert_eq!(both.beliefs()[k], text.beliefs()[k] + vis.beliefs()[k]);
        }
        assert_eq!(both.name(), "text_sim+visual");

        let other = LinkGraph::from_edges(4, &[(0, 1)]).unwrap();
        let bad = LinkFeatureTable::new(table.labels().to_vec(), vec![record(1, 0, 0.1, Region::Lead)]);
        assert!(matches!(textsim_hypothesis(&other, &bad), Err(Error::Support { .. })));
    }

    #[test]
    fn combine_errors() {
        assert!(combine(&[]).is_err());
        let a = structural_hypothesis(&toy());
        let b = structural_hypothesis(&LinkGraph::from_edges(4, &[(0, 1)]).unwrap());
        assert!(matches!(combine(&[a, b]), Err(Error::Alignment(_))));
    }

    #[test]
    fn elicitation_examples() {
        let g = LinkGraph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let p = elicit_prior(&g, &structural_hypothesis(&g), 4.0).unwrap();
        assert_eq!(p.alphas, vec![3.0, 3.0]);
        let h = HypothesisMatrix::from_beliefs("h", &g, vec![3.0, 1.0]).unwrap();
        assert_eq!(elicit_prior(&g, &h, 8.0).unwrap().alphas, vec![7.0, 3.0]);
        let zero = HypothesisMatrix::from_beliefs("z", &g, vec![0.0, 0.0]).unwrap();
        assert!(matches!(elicit_prior(&g, &zero, 1.0), Err(Error::Elicitation(0))));
        assert!(elicit_prior(&g, &h, 0.0).is_err());
    }

    #[test]
    fn evidence_examples() {
        let g = LinkGraph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let prior = DirichletPrior {
            kappa: 0.0,
            alphas: vec![1.0, 1.0],
        };
        let none = RowCounts::new(&g, &[]).unwrap();
        assert_eq!(log_evidence(&g, &prior, &none), 0.0);
        let counts = RowCounts::new(&g, &[t(0, 1, 1), t(0, 2, 1)]).unwrap();
        assert!((log_evidence(&g, &prior, &counts) - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!(matches!(RowCounts::new(&g, &[t(1, 0, 3)]), Err(Error::Support { src: 1, trg: 0 })));
    }

    #[test]
    fn evidence_matches_monte_carlo() {
        // three-state chain, every state links to the other two and itself
        let edges: Vec<(u32, u32)> = (0..3).flat_map(|s| (0..3).map(move |t| (s, t))).collect();
        let g = LinkGraph::from_edges(3, &edges).unwrap();
        let h = HypothesisMatrix::from_beliefs("h", &g, vec![3.0, 1.0, 1.0, 1.0, 2.0, 0.5, 1.0, 1.0, 4.0]).unwrap();
        let prior = elicit_prior(&g, &h, 3.0).unwrap();
        let obs = [t(0, 0, 2), t(0, 1, 1), t(1, 1, 2), t(1, 2, 1), t(2, 0, 1), t(2, 2, 2)];
        let counts = RowCounts::new(&g, &obs).unwrap();
        let exact = log_evidence(&g, &prior, &counts).exp();

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let gammas: Vec<Gamma<f64>> = prior.alphas.iter().map(|&a| Gamma::new(a, 1.0).unwrap()).collect();
        let n_draws = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n_draws {
            let mut lik = 1.0;
            for row in 0..3 {
                let draws: Vec<f64> = (0..3).map(|j| gammas[3 * row + j].sample(&mut rng)).collect();
                let z: f64 = draws.iter().sum();
                for o in obs.iter().filter(|o| o.src as usize == row) {
                    lik *= (draws[o.trg as usize] / z).powi(o.count as i32);
                }
            }
            sum += lik;
            sum_sq += lik * lik;
        }
        let mean = sum / n_draws as f64;
        let se = ((sum_sq / n_draws as f64 - mean * mean) / n_draws as f64).sqrt();
        assert!((mean - exact).abs() <= 3.0 * se, "mc {mean} +- {se}, exact {exact}");
    }

    #[test]
    fn bayes_factor_verdicts() {
        assert_eq!(Verdict::from_log_bayes_factor(0.5), Verdict::NotWorthMentioning);
        assert_eq!(Verdict::from_log_bayes_factor(1.0), Verdict::Positive);
        assert_eq!(Verdict::from_log_bayes_factor(-3.5), Verdict::Strong);
        assert_eq!(Verdict::from_log_bayes_factor(5.0), Verdict::VeryStrong);
    }

    /// Scale-free-ish random graph with a wide spread of core numbers.
    fn random_graph(rng: &mut ChaCha8Rng, n: u32) -> LinkGraph {
        let mut edges = Vec::new();
        for v in 1..n {
            let links = rng.random_range(2..12);
            for _ in 0..links {
                // bias towards low ids to create a dense core
                let t = (rng.random::<f64>().powi(3) * f64::from(n)) as u32;
                if t != v {
                    edges.push((v, t));
                }
            }
        }
        LinkGraph::from_edges(n as usize, &edges).unwrap()
    }

    fn counts_proportional_to(g: &LinkGraph, weights: &[f64], per_row: f64) -> Vec<Transition> {
        let mut out = Vec::new();
        for v in g.nodes() {
            let range = g.out_edge_range(v);
            let total: f64 = weights[range.clone()].iter().sum();
            for (k, &trg) in range.zip(g.out_neighbors(v)) {
                let c = (per_row * weights[k] / total).round() as u64;
                if c > 0 {
                    out.push(t(v, trg, c));
                }
            }
        }
        out
    }

    #[test]
    fn self_generated_counts_favour_their_hypothesis() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = random_graph(&mut rng, 300);
        let core = g.kcore();
        let kh = kcore_hypothesis(&g, &core).unwrap();
        let structural = structural_hypothesis(&g);
        let grid = default_kappa_grid(&g);

        let inverse: Vec<f64> = g.edges().map(|(_, t)| 1.0 / core.get(t).max(1.0).sqrt()).collect();
        let counts = RowCounts::new(&g, &counts_proportional_to(&g, &inverse, 200.0)).unwrap();
        let curves = bayes_factor_curve(&g, std::slice::from_ref(&kh), &structural, &counts, &grid).unwrap();
        assert!(curves[0].points.iter().all(|p| p.log_bayes_factor > 0.0), "{curves:?}");

        let direct: Vec<f64> = g.edges().map(|(_, t)| core.get(t).max(1.0)).collect();
        let counts = RowCounts::new(&g, &counts_proportional_to(&g, &direct, 200.0)).unwrap();
        let curves = bayes_factor_curve(&g, &[kh], &structural, &counts, &grid).unwrap();
        assert!(curves[0].points.iter().all(|p| p.log_bayes_factor < 0.0), "{curves:?}");
    }

    #[test]
    fn baseline_against_itself_is_zero() {
        let g = toy();
        let s = structural_hypothesis(&g);
        let counts = RowCounts::new(&g, &[t(0, 1, 5), t(2, 3, 7)]).unwrap();
        let curves = bayes_factor_curve(&g, std::slice::from_ref(&s), &s, &counts, &default_kappa_grid(&g)).unwrap();
        assert!(curves[0].points.iter().all(|p| p.log_bayes_factor == 0.0));
        assert_eq!(curves[0].points.len(), 5);
    }

    #[test]
    fn log_grid_endpoints() {
        let grid = log_spaced_grid(0.1, 1000.0, 5).unwrap();
        for (a, b) in grid.iter().zip([0.1, 1.0, 10.0, 100.0, 1000.0]) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    fn instance() -> impl Strategy<Value = (Vec<(u32, u32)>, Vec<f64>, Vec<u64>)> {
        prop::collection::vec((0u32..6, 0u32..6), 1..20).prop_flat_map(|edges| {
            let m = edges.len();
            (
                Just(edges),
                prop::collection::vec(0.05f64..5.0, m),
                prop::collection::vec(0u64..3, m),
            )
        })
    }

    proptest! {
        #[test]
        fn evidence_invariants((edges, beliefs, raw_counts) in instance(), c in 0.01f64..100.0, kappa in 0.1f64..50.0) {
            let g = LinkGraph::from_edges(6, &edges).unwrap();
            let m = g.edge_count();
            let h = HypothesisMatrix::from_beliefs("h", &g, beliefs[..m].to_vec()).unwrap();
            let obs: Vec<Transition> = g.edges().zip(&raw_counts).map(|((s, tt), &n)| t(s, tt, n)).collect();
            let counts = RowCounts::new(&g, &obs).unwrap();

            // uninformed limit agrees across hypotheses
            let tiny = 1e-12;
            let a = log_evidence(&g, &elicit_prior(&g, &h, tiny).unwrap(), &counts);
            let b = log_evidence(&g, &elicit_prior(&g, &structural_hypothesis(&g), tiny).unwrap(), &counts);
            prop_assert!((a - b).abs() <= 1e-9);

            // global scaling leaves the evidence unchanged
            let base = log_evidence(&g, &elicit_prior(&g, &h, kappa).unwrap(), &counts);
            let scaled = log_evidence(&g, &elicit_prior(&g, &h.clone().scaled(c), kappa).unwrap(), &counts);
            prop_assert!((base - scaled).abs() <= 1e-12 * (1.0 + base.abs()));

            // explicit zero-count rows change nothing
            let mut with_zeros = obs.clone();
            with_zeros.extend(g.edges().map(|(s, tt)| t(s, tt, 0)));
            let zeros = RowCounts::new(&g, &with_zeros).unwrap();
            prop_assert_eq!(log_evidence(&g, &elicit_prior(&g, &h, kappa).unwrap(), &zeros), base);

            // small instances match the sequential predictive product
            let prior = elicit_prior(&g, &h, kappa).unwrap();
            let total: u64 = obs.iter().map(|o| o.count).sum();
            if total <= 10 {
                let mut oracle = 0.0;
                for v in g.nodes() {
                    let r = g.out_edge_range(v);
                    let cnt: Vec<u64> = r.clone().map(|k| obs[k].count).collect();
                    oracle += polya_oracle(&prior.alphas[r], &cnt);
                }
                prop_assert!((oracle - base).abs() <= 1e-9);
            }
        }
    }
}
