//! Shared synthetic-data builders and independent oracles for the integration tests.
#![allow(dead_code)]

use linkpop::ingest::{LinkFeatureTable, LinkFeatures, NetworkFeatures, Region, Transition};
use linkpop::LinkGraph;
use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

/// Directed graph whose targets are biased towards low ids, giving a dense
/// core and a long periphery with a wide spread of core numbers.
pub fn cored_graph(rng: &mut ChaCha8Rng, n: u32) -> LinkGraph {
    let mut edges = Vec::new();
    for v in 0..n {
        let links = rng.random_range(3..15);
        for _ in 0..links {
            let t = (rng.random::<f64>().powi(3) * f64::from(n)) as u32;
            if t != v {
                edges.push((v, t));
            }
        }
    }
    LinkGraph::from_edges(n as usize, &edges).unwrap()
}

pub fn uniform_graph(rng: &mut ChaCha8Rng, n: u32, m: usize) -> LinkGraph {
    let edges: Vec<(u32, u32)> = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    LinkGraph::from_edges(n as usize, &edges).unwrap()
}

/// `draws` multinomial samples per source over its out-links with
/// probabilities proportional to `weights` (forward edge order).
pub fn sample_rows(g: &LinkGraph, weights: &[f64], draws: usize, rng: &mut ChaCha8Rng) -> Vec<Transition> {
    let mut out = Vec::new();
    for v in g.nodes() {
        let range = g.out_edge_range(v);
        if range.is_empty() {
            continue;
        }
        let dist = WeightedIndex::new(&weights[range.clone()]).unwrap();
        let mut counts = vec![0u64; range.len()];
        for _ in 0..draws {
            counts[dist.sample(rng)] += 1;
        }
        for (c, &trg) in counts.into_iter().zip(g.out_neighbors(v)) {
            if c > 0 {
                out.push(Transition { src: v, trg, count: c });
            }
        }
    }
    out
}

/// `draws` edge traversals sampled with probability proportional to `flow`.
pub fn sample_edges(g: &LinkGraph, flow: &[f64], draws: usize, rng: &mut ChaCha8Rng) -> Vec<Transition> {
    let dist = WeightedIndex::new(flow).unwrap();
    let mut counts = vec![0u64; g.edge_count()];
    for _ in 0..draws {
        counts[dist.sample(rng)] += 1;
    }
    g.edges()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|((src, trg), count)| Transition { src, trg, count })
        .collect()
}

pub fn record(src: u32, trg: u32, region: Region, text_sim: f64) -> LinkFeatures {
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

/// Feature table with a uniformly random region per edge.
pub fn random_regions(g: &LinkGraph, rng: &mut ChaCha8Rng) -> LinkFeatureTable {
    let records = g
        .edges()
        .map(|(s, t)| record(s, t, Region::ALL[rng.random_range(0..Region::ALL.len())], 0.0))
        .collect();
    LinkFeatureTable::new(g.labels().to_vec(), records)
}

/// Log probability of the counts as sequential Pólya-urn draws.
pub fn polya_log_prob(alphas: &[f64], counts: &[u64]) -> f64 {
    let mut a = alphas.to_vec();
    let mut remaining = counts.to_vec();
    let mut ln = 0.0;
    while let Some(j) = remaining.iter().position(|&c| c > 0) {
        let total: f64 = a.iter().sum();
        ln += (a[j] / total).ln();
        a[j] += 1.0;
        remaining[j] -= 1;
    }
    ln
}

/// Weighted PageRank by a dense linear solve; rows without belief teleport uniformly.
pub fn dense_weighted_pagerank(g: &LinkGraph, beliefs: &[f64], alpha: f64) -> Vec<f64> {
    let n = g.node_count();
    let nf = n as f64;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for v in g.nodes() {
        let r = g.out_edge_range(v);
        let z: f64 = beliefs[r.clone()].iter().sum();
        if z > 0.0 {
            for (k, &t) in r.zip(g.out_neighbors(v)) {
                p[(v as usize, t as usize)] = beliefs[k] / z;
            }
        } else {
            for t in 0..n {
                p[(v as usize, t)] = 1.0 / nf;
            }
        }
    }
    let a = DMatrix::<f64>::identity(n, n) - alpha * p.transpose();
    let b = DVector::from_element(n, (1.0 - alpha) / nf);
    let x = a.lu().solve(&b).unwrap();
    let s = x.sum();
    x.iter().map(|v| v / s).collect()
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Zero-truncated negative binomial draw via the gamma-Poisson mixture.
pub fn ztnb_draw(rng: &mut ChaCha8Rng, mu: f64, theta: f64) -> f64 {
    let gamma = Gamma::new(theta, mu / theta).unwrap();
    loop {
        let lambda: f64 = gamma.sample(rng);
        if lambda <= 0.0 {
            continue;
        }
        let y: f64 = Poisson::new(lambda).unwrap().sample(rng);
        if y >= 1.0 {
            return y;
        }
    }
}

/// Largest relative discrepancy between `grad` and central differences of `f`.
pub fn max_fd_error(f: impl Fn(&[f64]) -> f64, x: &[f64], grad: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        let h = 1e-5 * (1.0 + x[k].abs());
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[k] += h;
        down[k] -= h;
        let fd = (f(&up) - f(&down)) / (2.0 * h);
        worst = worst.max((grad[k] - fd).abs() / fd.abs().max(1.0));
    }
    worst
}
