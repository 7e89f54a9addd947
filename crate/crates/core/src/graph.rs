//! Sparse directed link graph and the network features computed on it:
//! degrees, core numbers and classic PageRank.
//!
//! The graph is stored twice in compressed sparse row form, once by source
//! (out-neighbours) and once by target (in-neighbours). Both adjacency lists
//! are sorted ascending and free of duplicates, and describe the same edge set.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Snapshot magic; the trailing byte is the format version.
const SNAPSHOT_MAGIC: &[u8; 8] = b"LPGRAPH\x01";

#[derive(Debug, Clone, PartialEq)]
pub struct LinkGraph {
    labels: Vec<String>,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    self_loops: usize,
}

/// Which quantity a [`CentralityVector`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    InDegree,
    OutDegree,
    Degree,
    PageRank,
    KCore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub measure: Measure,
    pub values: Vec<f64>,
}

impl CentralityVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, node: u32) -> f64 {
        self.values[node as usize]
    }
}

/// Parameters of the damped power iteration shared by classic and weighted PageRank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    pub alpha: f64,
    /// Stop once the L1 change between iterates is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self {
            alpha: 0.85,
            tol: 1e-10,
            max_iter: 1000,
        }
    }
}

impl PageRankConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping factor must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

impl LinkGraph {
    /// Builds a graph over `node_count` nodes labelled by their numeric id.
    pub fn from_edges(node_count: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let labels = (0..node_count).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    /// Builds a graph whose node count is `labels.len()`. Duplicate edges are
    /// collapsed; self-loops are kept and counted.
    pub fn with_labels(labels: Vec<String>, edges: &[(u32, u32)]) -> Result<Self> {
        let n = labels.len();
        if let Some(&(s, t)) = edges
            .iter()
            .find(|&&(s, t)| s as usize >= n || t as usize >= n)
        {
            return Err(Error::MalformedInput(format!(
                "edge ({s}, {t}) references a node outside 0..{n}"
            )));
        }
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        sorted.dedup();

        let self_loops = sorted.iter().filter(|(s, t)| s == t).count();
        let (out_offsets, out_targets) = csr(n, sorted.iter().copied());
        sorted.sort_unstable_by_key(|&(s, t)| (t, s));
        let (in_offsets, in_sources) = csr(n, sorted.iter().map(|&(s, t)| (t, s)));

        Ok(Self {
            labels,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            self_loops,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn self_loop_count(&self) -> usize {
        self.self_loops
    }

    pub fn label(&self, node: u32) -> &str {
        &self.labels[node as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Out-neighbours of `node`, ascending.
    pub fn out_neighbors(&self, node: u32) -> &[u32] {
        let i = node as usize;
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// In-neighbours of `node`, ascending.
    pub fn in_neighbors(&self, node: u32) -> &[u32] {
        let i = node as usize;
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    pub fn out_degree(&self, node: u32) -> usize {
        let i = node as usize;
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    pub fn in_degree(&self, node: u32) -> usize {
        let i = node as usize;
        self.in_offsets[i + 1] - self.in_offsets[i]
    }

    /// Position of edge `(src, trg)` in the forward edge order, if present.
    /// Per-edge data (hypothesis beliefs, transition counts) is aligned to this order.
    pub fn edge_index(&self, src: u32, trg: u32) -> Option<usize> {
        if src as usize >= self.node_count() {
            return None;
        }
        let start = self.out_offsets[src as usize];
        self.out_neighbors(src)
            .binary_search(&trg)
            .ok()
            .map(|k| start + k)
    }

    pub fn has_edge(&self, src: u32, trg: u32) -> bool {
        self.edge_index(src, trg).is_some()
    }

    /// Range of forward edge indices leaving `node`.
    pub fn out_edge_range(&self, node: u32) -> std::ops::Range<usize> {
        let i = node as usize;
        self.out_offsets[i]..self.out_offsets[i + 1]
    }

    /// Iterates edges in forward order as `(src, trg)`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count() as u32)
            .flat_map(move |s| self.out_neighbors(s).iter().map(move |&t| (s, t)))
    }

    pub fn nodes(&self) -> std::ops::Range<u32> {
        0..self.node_count() as u32
    }

    /// In-, out- and total degree per node.
    pub fn degrees(&self) -> (CentralityVector, CentralityVector, CentralityVector) {
        let inn: Vec<f64> = self.nodes().map(|v| self.in_degree(v) as f64).collect();
        let out: Vec<f64> = self.nodes().map(|v| self.out_degree(v) as f64).collect();
        let total = inn.iter().zip(&out).map(|(a, b)| a + b).collect();
        (
            CentralityVector {
                measure: Measure::InDegree,
                values: inn,
            },
            CentralityVector {
                measure: Measure::OutDegree,
                values: out,
            },
            CentralityVector {
                measure: Measure::Degree,
                values: total,
            },
        )
    }

    /// Neighbours in the undirected projection: union of in- and out-neighbours,
    /// without the node itself.
    pub fn undirected_neighbors(&self, node: u32) -> Vec<u32> {
        let (a, b) = (self.out_neighbors(node), self.in_neighbors(node));
        let mut merged = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            if next != node {
                merged.push(next);
            }
        }
        merged
    }

    /// Core numbers on the undirected projection (self-loops ignored), by
    /// bucket-ordered minimum-degree peeling.
    pub fn kcore(&self) -> CentralityVector {
        let n = self.node_count();
        let adj: Vec<Vec<u32>> = self.nodes().map(|v| self.undirected_neighbors(v)).collect();
        let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
        let max_deg = deg.iter().copied().max().unwrap_or(0);

        // bin[d] = first position of degree-d nodes in `order`
        let mut bin = vec![0usize; max_deg + 1];
        for &d in &deg {
            bin[d] += 1;
        }
        let mut start = 0;
        for b in bin.iter_mut() {
            let count = *b;
            *b = start;
            start += count;
        }
        let mut pos = vec![0usize; n];
        let mut order = vec![0u32; n];
        {
            let mut next = bin.clone();
            for v in 0..n {
                pos[v] = next[deg[v]];
                order[pos[v]] = v as u32;
                next[deg[v]] += 1;
            }
        }

        for i in 0..n {
            let v = order[i] as usize;
            for &u in &adj[v] {
                let u = u as usize;
                if deg[u] > deg[v] {
                    let du = deg[u];
                    let pu = pos[u];
                    let pw = bin[du];
                    let w = order[pw] as usize;
                    if u != w {
                        order.swap(pu, pw);
                        pos[u] = pw;
                        pos[w] = pu;
                    }
                    bin[du] += 1;
                    deg[u] -= 1;
                }
            }
        }

        CentralityVector {
            measure: Measure::KCore,
            values: deg.into_iter().map(|d| d as f64).collect(),
        }
    }

    /// Classic PageRank: every out-link of a node is followed with equal probability.
    pub fn pagerank(&self, config: &PageRankConfig) -> Result<CentralityVector> {
        config.validate()?;
        let probs: Vec<f64> = self
            .nodes()
            .flat_map(|v| {
                let d = self.out_degree(v) as f64;
                std::iter::repeat_n(1.0 / d, self.out_degree(v))
            })
            .collect();
        let values = stationary(self, &probs, config)?;
        Ok(CentralityVector {
            measure: Measure::PageRank,
            values,
        })
    }

    /// Writes the binary snapshot: magic, node labels, then the sorted edge list.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.node_count() as u64).to_le_bytes())?;
        for label in &self.labels {
            w.write_all(&(label.len() as u32).to_le_bytes())?;
            w.write_all(label.as_bytes())?;
        }
        w.write_all(&(self.edge_count() as u64).to_le_bytes())?;
        for (s, t) in self.edges() {
            w.write_all(&s.to_le_bytes())?;
            w.write_all(&t.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::MalformedInput(
                "not a graph snapshot (bad magic or unsupported version)".into(),
            ));
        }
        let n = read_u64(&mut r)? as usize;
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let len = read_u32(&mut r)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            labels.push(
                String::from_utf8(buf)
                    .map_err(|_| Error::MalformedInput("label is not UTF-8".into()))?,
            );
        }
        let m = read_u64(&mut r)? as usize;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            edges.push((read_u32(&mut r)?, read_u32(&mut r)?));
        }
        Self::with_labels(labels, &edges)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Compressed rows from pairs sorted by `(row, col)`.
fn csr(n: usize, pairs: impl Iterator<Item = (u32, u32)>) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; n + 1];
    let mut cols = Vec::new();
    for (r, c) in pairs {
        offsets[r as usize + 1] += 1;
        cols.push(c);
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, cols)
}

/// Damped power iteration for a random walk whose step from node `i` follows
/// edge `e` with probability `probs[e]` (forward edge order). A node whose
/// outgoing probabilities sum to zero teleports uniformly. Reduction order is
/// fixed, so results are deterministic.
pub(crate) fn stationary(g: &LinkGraph, probs: &[f64], config: &PageRankConfig) -> Result<Vec<f64>> {
    debug_assert_eq!(probs.len(), g.edge_count());
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let alpha = config.alpha;
    let dangling: Vec<bool> = g
        .nodes()
        .map(|v| g.out_edge_range(v).all(|e| probs[e] == 0.0))
        .collect();

    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..config.max_iter {
        let mut dangling_mass = 0.0;
        next.iter_mut().for_each(|x| *x = 0.0);
        for v in g.nodes() {
            let r = rank[v as usize];
            if dangling[v as usize] {
                dangling_mass += r;
                continue;
            }
            for (e, &t) in g.out_edge_range(v).zip(g.out_neighbors(v)) {
                next[t as usize] += r * probs[e];
            }
        }
        let base = (1.0 - alpha) / nf + alpha * dangling_mass / nf;
        residual = 0.0;
        for (x, old) in next.iter_mut().zip(&rank) {
            *x = base + alpha * *x;
            residual += (*x - old).abs();
        }
        std::mem::swap(&mut rank, &mut next);
        if residual <= config.tol {
            let total: f64 = rank.iter().sum();
            rank.iter_mut().for_each(|x| *x /= total);
            return Ok(rank);
        }
    }
    Err(Error::NonConvergence {
        routine: "pagerank",
        iterations: config.max_iter,
        residual,
        last: rank,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_edges(rng: &mut ChaCha8Rng, n: u32, m: usize) -> Vec<(u32, u32)> {
        (0..m)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .collect()
    }

    #[test]
    fn duplicates_collapse() {
        let g = LinkGraph::from_edges(2, &[(0, 1), (0, 1), (1, 0)]).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn empty_graph() {
        let g = LinkGraph::from_edges(0, &[]).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
        let (i, o, d) = g.degrees();
        assert!(i.is_empty() && o.is_empty() && d.is_empty());
        assert!(g.pagerank(&PageRankConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_id_is_rejected() {
        assert!(matches!(
            LinkGraph::from_edges(2, &[(0, 2)]),
            Err(Error::MalformedInput(_))
        ));
    }

    #[test]
    fn self_loops_are_kept_and_counted() {
        let g = LinkGraph::from_edges(2, &[(0, 0), (0, 1), (0, 0)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.self_loop_count(), 1);
        assert!(g.has_edge(0, 0));
    }

    #[test]
    fn random_edges_match_set_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let edges = random_edges(&mut rng, 60, 1000);
        let g = LinkGraph::from_edges(60, &edges).unwrap();
        let oracle: HashSet<_> = edges.iter().copied().collect();
        assert_eq!(g.edge_count(), oracle.len());
        assert_eq!(g.edges().collect::<HashSet<_>>(), oracle);
        // reverse adjacency encodes the same set
        let reverse: HashSet<_> = g
            .nodes()
            .flat_map(|t| g.in_neighbors(t).iter().map(move |&s| (s, t)))
            .collect();
        assert_eq!(reverse, oracle);
    }

    #[test]
    fn path_degrees() {
        let g = LinkGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let (inn, out, deg) = g.degrees();
        assert_eq!(out.values, vec![1.0, 1.0, 0.0]);
        assert_eq!(inn.values, vec![0.0, 1.0, 1.0]);
        assert_eq!(deg.values, vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn degrees_match_dense_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let edges = random_edges(&mut rng, n, 300);
        let g = LinkGraph::from_edges(n as usize, &edges).unwrap();
        let mut dense = vec![vec![false; n as usize]; n as usize];
        for &(s, t) in &edges {
            dense[s as usize][t as usize] = true;
        }
        let (inn, out, _) = g.degrees();
        #[allow(clippy::needless_range_loop)]
        for v in 0..n as usize {
            let row = dense[v].iter().filter(|&&b| b).count() as f64;
            let col = (0..n as usize).filter(|&u| dense[u][v]).count() as f64;
            assert_eq!(out.values[v], row);
            assert_eq!(inn.values[v], col);
        }
        assert_eq!(out.values.iter().sum::<f64>(), g.edge_count() as f64);
        assert_eq!(inn.values.iter().sum::<f64>(), g.edge_count() as f64);
    }

    #[test]
    fn triangle_and_star_cores() {
        let tri = LinkGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(tri.kcore().values, vec![2.0; 3]);
        let star = LinkGraph::from_edges(5, &[(0, 1), (0, 2), (3, 0), (4, 0)]).unwrap();
        assert_eq!(star.kcore().values, vec![1.0; 5]);
    }

    #[test]
    fn self_loop_does_not_sustain_core() {
        let g = LinkGraph::from_edges(2, &[(0, 0), (0, 1), (1, 0)]).unwrap();
        assert_eq!(g.kcore().values, vec![1.0, 1.0]);
    }

    /// Repeatedly deletes every node of degree < k until stable, for each k.
    fn naive_cores(g: &LinkGraph) -> Vec<f64> {
        let n = g.node_count();
        let adj: Vec<HashSet<u32>> = g
            .nodes()
            .map(|v| g.undirected_neighbors(v).into_iter().collect())
            .collect();
        let mut core = vec![0.0; n];
        let mut k = 1;
        loop {
            let mut alive = vec![true; n];
            loop {
                let mut changed = false;
                for v in 0..n {
                    if alive[v] {
                        let d = adj[v].iter().filter(|&&u| alive[u as usize]).count();
                        if d < k {
                            alive[v] = false;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if !alive.iter().any(|&a| a) {
                return core;
            }
            for v in 0..n {
                if alive[v] {
                    core[v] = k as f64;
                }
            }
            k += 1;
        }
    }

    #[test]
    fn kcore_matches_repeated_deletion_on_gnp() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let n = 200u32;
        let mut edges = Vec::new();
        for s in 0..n {
            for t in 0..n {
                if s != t && rng.random_bool(0.05) {
                    edges.push((s, t));
                }
            }
        }
        let g = LinkGraph::from_edges(n as usize, &edges).unwrap();
        assert_eq!(g.kcore().values, naive_cores(&g));
    }

    #[test]
    fn two_cycle_pagerank_is_uniform() {
        let g = LinkGraph::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let pr = g.pagerank(&PageRankConfig::default()).unwrap();
        assert!((pr.values[0] - 0.5).abs() < 1e-12);
        assert!((pr.values[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_node_pagerank() {
        let g = LinkGraph::from_edges(1, &[]).unwrap();
        assert_eq!(g.pagerank(&PageRankConfig::default()).unwrap().values, vec![1.0]);
    }

    /// Solves (I - alpha * P^T) x = b directly, with P the row-stochastic matrix
    /// that sends dangling rows uniformly.
    fn dense_pagerank(n: usize, edges: &[(u32, u32)], alpha: f64) -> Vec<f64> {
        let mut p = vec![vec![0.0; n]; n];
        let mut out = vec![0usize; n];
        for &(s, _) in edges {
            out[s as usize] += 1;
        }
        for &(s, t) in edges {
            p[s as usize][t as usize] = 1.0 / out[s as usize] as f64;
        }
        for (i, row) in p.iter_mut().enumerate() {
            if out[i] == 0 {
                row.iter_mut().for_each(|x| *x = 1.0 / n as f64);
            }
        }
        let a = nalgebra::DMatrix::from_fn(n, n, |r, c| {
            (if r == c { 1.0 } else { 0.0 }) - alpha * p[c][r]
        });
        let b = nalgebra::DVector::from_element(n, (1.0 - alpha) / n as f64);
        let x = a.lu().solve(&b).unwrap();
        let s: f64 = x.iter().sum();
        x.iter().map(|v| v / s).collect()
    }

    #[test]
    fn chain_pagerank_matches_direct_solve() {
        let edges = [(0, 1), (1, 2)];
        let g = LinkGraph::from_edges(3, &edges).unwrap();
        let pr = g.pagerank(&PageRankConfig::with_alpha(0.85)).unwrap();
        let oracle = dense_pagerank(3, &edges, 0.85);
        for (a, b) in pr.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn random_pagerank_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = rng.random_range(2..50u32);
            let m = rng.random_range(0..(3 * n as usize));
            let edges = random_edges(&mut rng, n, m);
            let g = LinkGraph::from_edges(n as usize, &edges).unwrap();
            let uniq: Vec<_> = g.edges().collect();
            let pr = g.pagerank(&PageRankConfig::with_alpha(0.9)).unwrap();
            let oracle = dense_pagerank(n as usize, &uniq, 0.9);
            for (a, b) in pr.values.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn nonconvergence_carries_last_iterate() {
        let g = LinkGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cfg = PageRankConfig {
            alpha: 0.85,
            tol: 1e-15,
            max_iter: 1,
        };
        match g.pagerank(&cfg) {
            Err(Error::NonConvergence { last, .. }) => assert_eq!(last.len(), 3),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_alpha_rejected() {
        let g = LinkGraph::from_edges(1, &[]).unwrap();
        assert!(g.pagerank(&PageRankConfig::with_alpha(1.0)).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let g = LinkGraph::with_labels(
            vec!["Alpha".into(), "Beta".into(), "Γάμμα".into()],
            &[(0, 1), (2, 1), (1, 0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        g.write_snapshot(&mut buf).unwrap();
        assert_eq!(&buf[..8], SNAPSHOT_MAGIC);
        assert_eq!(LinkGraph::read_snapshot(&buf[..]).unwrap(), g);
        assert!(LinkGraph::read_snapshot(&b"NOTAGRAPH......."[..]).is_err());
    }

    proptest! {
        #[test]
        fn pagerank_is_probability_vector(
            n in 1u32..40,
            raw in prop::collection::vec((0u32..40, 0u32..40), 0..120),
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(s, t)| (s % n, t % n)).collect();
            let g = LinkGraph::from_edges(n as usize, &edges).unwrap();
            let pr = g.pagerank(&PageRankConfig::default()).unwrap();
            prop_assert!((pr.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(pr.values.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn adding_an_edge_never_lowers_a_core(
            n in 2u32..30,
            raw in prop::collection::vec((0u32..30, 0u32..30), 0..90),
            extra in (0u32..30, 0u32..30),
        ) {
            let mut edges: Vec<_> = raw.into_iter().map(|(s, t)| (s % n, t % n)).collect();
            let before = LinkGraph::from_edges(n as usize, &edges).unwrap().kcore();
            edges.push((extra.0 % n, extra.1 % n));
            let after = LinkGraph::from_edges(n as usize, &edges).unwrap().kcore();
            for (a, b) in before.values.iter().zip(&after.values) {
                prop_assert!(b >= a);
            }
        }
    }
}
