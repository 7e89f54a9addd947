//! Focus-of-attention statistics: how transitions concentrate on few links,
//! globally and within each article.

mod fit;

use std::collections::BTreeMap;

pub use fit::{fit_distributions, hurwitz_zeta, log_likelihood, Family, FamilyFit, FitReport};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::LinkGraph;
use crate::ingest::TransitionLog;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionHistogram {
    /// Transition count -> number of links with that count.
    pub frequencies: BTreeMap<u64, usize>,
    pub links: usize,
    pub total: u64,
    /// Smallest `k` such that the `k` most-used links carry at least half of
    /// all transitions; `None` for an empty log.
    pub half_mass_links: Option<usize>,
}

pub fn transition_histogram(log: &TransitionLog) -> TransitionHistogram {
    let counts: Vec<u64> = log.entries().iter().map(|e| e.count).collect();
    histogram_of_counts(&counts)
}

pub(crate) fn histogram_of_counts(counts: &[u64]) -> TransitionHistogram {
    let mut frequencies = BTreeMap::new();
    for &c in counts {
        *frequencies.entry(c).or_insert(0) += 1;
    }
    let total: u64 = counts.iter().sum();
    // walk the histogram from the largest count down
    let mut half_mass_links = None;
    if total > 0 {
        let (mut carried, mut links) = (0u64, 0usize);
        'outer: for (&count, &freq) in frequencies.iter().rev() {
            for _ in 0..freq {
                carried += count;
                links += 1;
                if 2 * carried >= total {
                    half_mass_links = Some(links);
                    break 'outer;
                }
            }
        }
    }
    TransitionHistogram {
        frequencies,
        links: counts.len(),
        total,
        half_mass_links,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Network {
    /// Full link network.
    Wiki,
    /// Links with observed transitions.
    Trans,
}

impl Network {
    pub fn as_str(self) -> &'static str {
        match self {
            Network::Wiki => "wiki",
            Network::Trans => "trans",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    pub network: Network,
    /// Out-degree -> number of nodes.
    pub frequencies: BTreeMap<usize, usize>,
    /// Nodes counted: sources present in both networks.
    pub node_count: usize,
}

impl DegreeDistribution {
    /// Out-degrees expanded to one sample per node, ascending.
    pub fn samples(&self) -> Vec<u64> {
        self.frequencies
            .iter()
            .flat_map(|(&d, &f)| std::iter::repeat_n(d as u64, f))
            .collect()
    }
}

/// Out-degree histograms of the link network and of its used-link subgraph,
/// over nodes that have at least one used out-link.
pub fn outdegree_comparison(graph: &LinkGraph, log: &TransitionLog) -> (DegreeDistribution, DegreeDistribution) {
    let mut used = vec![0usize; graph.node_count()];
    for e in log.entries() {
        used[e.src as usize] += 1;
    }
    let mut wiki = BTreeMap::new();
    let mut trans = BTreeMap::new();
    let mut nodes = 0;
    for v in graph.nodes() {
        let u = used[v as usize];
        if u == 0 {
            continue;
        }
        nodes += 1;
        *wiki.entry(graph.out_degree(v)).or_insert(0) += 1;
        *trans.entry(u).or_insert(0) += 1;
    }
    (
        DegreeDistribution {
            network: Network::Wiki,
            frequencies: wiki,
            node_count: nodes,
        },
        DegreeDistribution {
            network: Network::Trans,
            frequencies: trans,
            node_count: nodes,
        },
    )
}

/// Gini coefficient `sum_ij |x_i - x_j| / (2 n^2 mean)`, evaluated through the
/// sorted form `sum_i (2i - n - 1) x_(i) / (n sum x)`.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("Gini needs at least one value".into()));
    }
    if values.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter("Gini values must be finite and nonnegative".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sum: f64 = sorted.iter().sum();
    if sum == 0.0 {
        return Err(Error::UndefinedGini);
    }
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok((weighted / (n * sum)).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArticleGini {
    /// `(article, coefficient)` for every article with a defined coefficient.
    pub coefficients: Vec<(u32, f64)>,
    /// Articles with out-links but no transitions at all.
    pub undefined: usize,
}

impl ArticleGini {
    /// Counts per bin of width `1 / bins` over `[0, 1]`.
    pub fn histogram(&self, bins: usize) -> Vec<usize> {
        let mut h = vec![0usize; bins];
        for &(_, g) in &self.coefficients {
            let k = ((g * bins as f64) as usize).min(bins - 1);
            h[k] += 1;
        }
        h
    }
}

/// Gini coefficient of each article's transition counts over all of its links,
/// unused links included as zeros. Articles without out-links are skipped.
pub fn article_gini(graph: &LinkGraph, log: &TransitionLog) -> ArticleGini {
    let counts = log.edge_counts(graph);
    let results: Vec<(u32, Option<f64>)> = graph
        .nodes()
        .into_par_iter()
        .filter(|&v| graph.out_degree(v) > 0)
        .map(|v| {
            let row: Vec<f64> = graph.out_edge_range(v).map(|e| counts[e] as f64).collect();
            (v, gini(&row).ok())
        })
        .collect();
    let mut coefficients = Vec::with_capacity(results.len());
    let mut undefined = 0;
    for (v, g) in results {
        match g {
            Some(g) => coefficients.push((v, g)),
            None => undefined += 1,
        }
    }
    ArticleGini {
        coefficients,
        undefined,
    }
}
