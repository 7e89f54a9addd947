//! Parsing and alignment of the input artifacts: tab-separated edge lists,
//! clickstream transition logs and precomputed link-feature tables.

mod features;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

pub use features::{
    load_feature_table, network_features, read_feature_table, ConsistencyIssue, JoinReport,
    LinkFeatureTable, LinkFeatures, LoadOptions, NetworkFeatures, Region, SimilaritySource,
    FEATURE_COLUMNS,
};

use crate::error::{Error, Result};
use crate::graph::LinkGraph;

/// Default minimum monthly transition count.
pub const DEFAULT_THRESHOLD: u64 = 10;

/// Opens an input file for buffered reading, decompressing `.gz` files.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
    }
}

/// Article names interned to dense ids in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameTable {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl NameTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Self { names, index }
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn into_names(self) -> Vec<String> {
        self.names
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub names: NameTable,
    /// Edges in input order; duplicates are passed through.
    pub edges: Vec<(u32, u32)>,
}

impl EdgeList {
    pub fn into_graph(self) -> Result<LinkGraph> {
        LinkGraph::with_labels(self.names.into_names(), &self.edges)
    }

    /// Writes the edges back as `src\ttrg` lines, in input order.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for &(s, t) in &self.edges {
            writeln!(w, "{}\t{}", self.names.name(s), self.names.name(t))?;
        }
        Ok(())
    }
}

/// Parses `src_name\ttrg_name` lines. Blank lines and `#` comments are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut list = EdgeList::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(src), Some(trg), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::line(lineno, "expected exactly two tab-separated columns"));
        };
        if src.is_empty() || trg.is_empty() {
            return Err(Error::line(lineno, "empty article name"));
        }
        let s = list.names.intern(src);
        let t = list.names.intern(trg);
        list.edges.push((s, t));
    }
    Ok(list)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: u32,
    pub trg: u32,
    pub count: u64,
}

/// Observed transition counts on graph edges, each at least `threshold`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionLog {
    threshold: u64,
    /// Sorted by `(src, trg)`.
    entries: Vec<Transition>,
}

impl TransitionLog {
    /// Validates the log invariants against `graph`.
    pub fn new(graph: &LinkGraph, mut entries: Vec<Transition>, threshold: u64) -> Result<Self> {
        entries.sort_unstable();
        for w in entries.windows(2) {
            if (w[0].src, w[0].trg) == (w[1].src, w[1].trg) {
                return Err(Error::MalformedInput(format!(
                    "duplicate transition {} -> {}",
                    w[0].src, w[0].trg
                )));
            }
        }
        for e in &entries {
            if !graph.has_edge(e.src, e.trg) {
                return Err(Error::Support {
                    src: e.src,
                    trg: e.trg,
                });
            }
            if e.count < threshold {
                return Err(Error::MalformedInput(format!(
                    "transition {} -> {} has count {} below threshold {threshold}",
                    e.src, e.trg, e.count
                )));
            }
        }
        Ok(Self { threshold, entries })
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn entries(&self) -> &[Transition] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    /// Counts aligned to the graph's forward edge order (0 for unused edges).
    pub fn edge_counts(&self, graph: &LinkGraph) -> Vec<u64> {
        let mut counts = vec![0u64; graph.edge_count()];
        for e in &self.entries {
            if let Some(k) = graph.edge_index(e.src, e.trg) {
                counts[k] = e.count;
            }
        }
        counts
    }

    pub fn count(&self, src: u32, trg: u32) -> Option<u64> {
        self.entries
            .binary_search_by(|e| (e.src, e.trg).cmp(&(src, trg)))
            .ok()
            .map(|k| self.entries[k].count)
    }

    /// Writes `src\ttrg\tcount` lines using the graph's labels.
    pub fn write<W: Write>(&self, graph: &LinkGraph, mut w: W) -> Result<()> {
        for e in &self.entries {
            writeln!(w, "{}\t{}\t{}", graph.label(e.src), graph.label(e.trg), e.count)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    FailFast,
    #[default]
    SkipAndReport,
}

#[derive(Debug, Clone, Copy)]
pub struct ClickstreamOptions {
    pub threshold: u64,
    pub mode: ErrorMode,
}

impl Default for ClickstreamOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            mode: ErrorMode::SkipAndReport,
        }
    }
}

/// Accounting for every input row of a clickstream parse.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClickstreamStats {
    pub rows: usize,
    /// Referrer is not an internal article.
    pub external_rows: usize,
    pub external_count: u64,
    /// Both ends are articles but the link is not in the graph.
    pub non_edge_rows: usize,
    pub non_edge_count: u64,
    /// Distinct pairs whose summed count is below the threshold.
    pub below_threshold_pairs: usize,
    pub below_threshold_count: u64,
    pub retained_rows: usize,
    pub retained_count: u64,
    pub malformed: Vec<(usize, String)>,
}

/// Parses clickstream rows (`referrer\tresource\tcount` or
/// `referrer\tresource\ttype\tcount`) into a transition log on `graph`.
///
/// Referrers that are not article names are treated as external traffic.
/// Duplicate pairs are summed before thresholding.
pub fn parse_clickstream<R: BufRead>(
    reader: R,
    graph: &LinkGraph,
    names: &NameTable,
    opts: &ClickstreamOptions,
) -> Result<(TransitionLog, ClickstreamStats)> {
    let mut stats = ClickstreamStats::default();
    let mut pairs: BTreeMap<(u32, u32), (u64, usize)> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parsed = match cols.len() {
            3 | 4 => cols[cols.len() - 1]
                .trim()
                .parse::<u64>()
                .map_err(|_| format!("non-numeric count `{}`", cols[cols.len() - 1])),
            n => Err(format!("expected 3 or 4 columns, found {n}")),
        };
        let count = match parsed {
            Ok(c) => c,
            Err(msg) => match opts.mode {
                ErrorMode::FailFast => return Err(Error::line(lineno, msg)),
                ErrorMode::SkipAndReport => {
                    stats.malformed.push((lineno, msg));
                    continue;
                }
            },
        };
        stats.rows += 1;
        let Some(src) = names.get(cols[0]) else {
            stats.external_rows += 1;
            stats.external_count += count;
            continue;
        };
        match names.get(cols[1]) {
            Some(trg) if graph.has_edge(src, trg) => {
                let slot = pairs.entry((src, trg)).or_default();
                slot.0 += count;
                slot.1 += 1;
            }
            _ => {
                stats.non_edge_rows += 1;
                stats.non_edge_count += count;
            }
        }
    }

    let mut entries = Vec::with_capacity(pairs.len());
    for ((src, trg), (count, rows)) in pairs {
        if count < opts.threshold {
            stats.below_threshold_pairs += 1;
            stats.below_threshold_count += count;
        } else {
            stats.retained_rows += rows;
            stats.retained_count += count;
            entries.push(Transition { src, trg, count });
        }
    }
    let log = TransitionLog {
        threshold: opts.threshold,
        entries,
    };
    Ok((log, stats))
}
