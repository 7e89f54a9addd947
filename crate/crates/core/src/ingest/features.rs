use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use csv::StringRecord;

use super::TransitionLog;
use crate::error::{Error, Result};
use crate::graph::{LinkGraph, PageRankConfig};

/// Column names of the link-feature table, in output order.
pub const FEATURE_COLUMNS: [&str; 18] = [
    "src",
    "trg",
    "transitions",
    "src_degree",
    "trg_degree",
    "src_in_degree",
    "trg_in_degree",
    "src_out_degree",
    "trg_out_degree",
    "src_kcore",
    "trg_kcore",
    "src_pagerank",
    "trg_pagerank",
    "text_sim",
    "topic_sim",
    "x_coord",
    "y_coord",
    "region",
];

const NETWORK_COLUMNS: [&str; 10] = [
    "src_degree",
    "trg_degree",
    "src_in_degree",
    "trg_in_degree",
    "src_out_degree",
    "trg_out_degree",
    "src_kcore",
    "trg_kcore",
    "src_pagerank",
    "trg_pagerank",
];

/// Page region in which a link first occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Lead,
    Body,
    LeftBody,
    RightBody,
    Infobox,
    Navbox,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::Lead,
        Region::Body,
        Region::LeftBody,
        Region::RightBody,
        Region::Infobox,
        Region::Navbox,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Lead => "lead",
            Region::Body => "body",
            Region::LeftBody => "left-body",
            Region::RightBody => "right-body",
            Region::Infobox => "infobox",
            Region::Navbox => "navbox",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Region::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown region label `{s}`")))
    }
}

/// Centralities of one article.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NetworkFeatures {
    pub degree: f64,
    pub in_degree: f64,
    pub out_degree: f64,
    pub kcore: f64,
    pub pagerank: f64,
}

/// Network features of every node of `graph`.
pub fn network_features(graph: &LinkGraph, pagerank: &PageRankConfig) -> Result<Vec<NetworkFeatures>> {
    let (inn, out, deg) = graph.degrees();
    let core = graph.kcore();
    let pr = graph.pagerank(pagerank)?;
    Ok((0..graph.node_count())
        .map(|v| NetworkFeatures {
            degree: deg.values[v],
            in_degree: inn.values[v],
            out_degree: out.values[v],
            kcore: core.values[v],
            pagerank: pr.values[v],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkFeatures {
    pub src: u32,
    pub trg: u32,
    pub transitions: u64,
    pub src_net: NetworkFeatures,
    pub trg_net: NetworkFeatures,
    pub text_sim: f64,
    pub topic_sim: f64,
    /// Screen pixels at 1920x1080.
    pub x_coord: f64,
    pub y_coord: f64,
    pub region: Region,
}

impl LinkFeatures {
    /// Numeric value of a named column; `None` for `src`, `trg`, `region` and unknown names.
    pub fn numeric(&self, column: &str) -> Option<f64> {
        let v = match column {
            "transitions" => self.transitions as f64,
            "src_degree" => self.src_net.degree,
            "trg_degree" => self.trg_net.degree,
            "src_in_degree" => self.src_net.in_degree,
            "trg_in_degree" => self.trg_net.in_degree,
            "src_out_degree" => self.src_net.out_degree,
            "trg_out_degree" => self.trg_net.out_degree,
            "src_kcore" => self.src_net.kcore,
            "trg_kcore" => self.trg_net.kcore,
            "src_pagerank" => self.src_net.pagerank,
            "trg_pagerank" => self.trg_net.pagerank,
            "text_sim" => self.text_sim,
            "topic_sim" => self.topic_sim,
            "x_coord" => self.x_coord,
            "y_coord" => self.y_coord,
            _ => return None,
        };
        Some(v)
    }
}

/// One record per link. Node ids index `labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFeatureTable {
    labels: Vec<String>,
    records: Vec<LinkFeatures>,
}

impl LinkFeatureTable {
    pub fn new(labels: Vec<String>, records: Vec<LinkFeatures>) -> Self {
        Self { labels, records }
    }

    pub fn records(&self) -> &[LinkFeatures] {
        &self.records
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_transitions(&self) -> u64 {
        self.records.iter().map(|r| r.transitions).sum()
    }

    /// Records whose source satisfies `keep`, in table order.
    pub fn filter_sources(&self, keep: impl Fn(u32) -> bool) -> Self {
        Self {
            labels: self.labels.clone(),
            records: self.records.iter().filter(|r| keep(r.src)).cloned().collect(),
        }
    }

    /// Writes the table as tab-separated text with a header row.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", FEATURE_COLUMNS.join("\t"))?;
        for r in &self.records {
            let (s, t) = (&r.src_net, &r.trg_net);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                self.label(r.src),
                self.label(r.trg),
                r.transitions,
                s.degree,
                t.degree,
                s.in_degree,
                t.in_degree,
                s.out_degree,
                t.out_degree,
                s.kcore,
                t.kcore,
                s.pagerank,
                t.pagerank,
                r.text_sim,
                r.topic_sim,
                r.x_coord,
                r.y_coord,
                r.region
            )?;
        }
        Ok(())
    }
}

/// Supplies similarity values for links whose file rows lack them.
pub trait SimilaritySource {
    fn text_similarity(&self, src: &str, trg: &str) -> Result<f64>;
    fn topic_similarity(&self, src: &str, trg: &str) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Recompute network features from the graph even when the file has them,
    /// and report disagreements.
    pub recompute_network: bool,
    pub fail_fast: bool,
    pub pagerank: PageRankConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyIssue {
    pub line: usize,
    pub column: &'static str,
    pub file_value: f64,
    pub recomputed: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinReport {
    pub input_rows: usize,
    /// Rows not joined: non-edges, unknown articles, out-of-range values, repeats.
    pub rejected: Vec<(usize, String)>,
    pub consistency: Vec<ConsistencyIssue>,
    /// Rows whose count was taken from the transition log.
    pub counts_from_log: usize,
}

struct Columns {
    index: Vec<Option<usize>>,
}

impl Columns {
    fn new(header: &StringRecord) -> Self {
        let index = FEATURE_COLUMNS
            .iter()
            .map(|c| header.iter().position(|h| h.trim() == *c))
            .collect();
        Self { index }
    }

    fn has(&self, column: &str) -> bool {
        self.pos(column).is_some()
    }

    fn pos(&self, column: &str) -> Option<usize> {
        let k = FEATURE_COLUMNS.iter().position(|c| *c == column)?;
        self.index[k]
    }

    fn require(&self, columns: &[&str]) -> Result<()> {
        let missing: Vec<&str> = columns.iter().copied().filter(|c| !self.has(c)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(format!("missing mandatory column(s): {}", missing.join(", "))))
        }
    }

    fn str<'r>(&self, rec: &'r StringRecord, column: &str) -> std::result::Result<&'r str, String> {
        let pos = self.pos(column).ok_or_else(|| format!("missing column {column}"))?;
        rec.get(pos)
            .map(str::trim)
            .ok_or_else(|| format!("row has no value for {column}"))
    }

    fn num(&self, rec: &StringRecord, column: &str) -> std::result::Result<f64, String> {
        let s = self.str(rec, column)?;
        let v: f64 = s.parse().map_err(|_| format!("{column}: `{s}` is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{column}: non-finite value"))
        }
    }

    fn similarity(&self, rec: &StringRecord, column: &str) -> std::result::Result<f64, String> {
        let v = self.num(rec, column)?;
        check_similarity(column, v)
    }

    fn network(&self, rec: &StringRecord, prefix: &str) -> std::result::Result<NetworkFeatures, String> {
        let get = |name: &str| self.num(rec, &format!("{prefix}_{name}"));
        Ok(NetworkFeatures {
            degree: get("degree")?,
            in_degree: get("in_degree")?,
            out_degree: get("out_degree")?,
            kcore: get("kcore")?,
            pagerank: get("pagerank")?,
        })
    }
}

fn check_similarity(column: &str, v: f64) -> std::result::Result<f64, String> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{column} = {v} is outside [0, 1]"))
    }
}

/// Opens a delimited reader, choosing tab or comma from the first non-comment line.
fn csv_reader<R: Read>(reader: R) -> Result<(csv::Reader<BufReader<R>>, StringRecord)> {
    let mut buffered = BufReader::with_capacity(1 << 16, reader);
    let peek = buffered.fill_buf()?;
    let first = peek
        .split(|&b| b == b'\n')
        .find(|l| !l.is_empty() && l[0] != b'#')
        .unwrap_or(&[]);
    let delimiter = if !first.contains(&b'\t') && first.contains(&b',') {
        b','
    } else {
        b'\t'
    };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .flexible(true)
        .has_headers(false)
        .from_reader(buffered);
    let mut header = StringRecord::new();
    if !rdr.read_record(&mut header)? {
        return Err(Error::Schema("empty feature file".into()));
    }
    Ok((rdr, header))
}

/// Joins a feature file (tab- or comma-separated, with header) to the graph
/// and transition log.
///
/// Mandatory columns are `src`, `trg`, `x_coord`, `y_coord` and `region`;
/// `text_sim`/`topic_sim` are mandatory unless `sims` is given. Network columns
/// are recomputed from the graph when absent or when
/// [`LoadOptions::recompute_network`] is set. A missing `transitions` value is
/// filled from the log (0 for unused links). Repeated rows for one link keep
/// the first occurrence.
pub fn load_feature_table<R: Read>(
    reader: R,
    graph: &LinkGraph,
    transitions: &TransitionLog,
    opts: &LoadOptions,
    sims: Option<&dyn SimilaritySource>,
) -> Result<(LinkFeatureTable, JoinReport)> {
    let (mut rdr, header) = csv_reader(reader)?;
    let cols = Columns::new(&header);
    cols.require(&["src", "trg", "x_coord", "y_coord", "region"])?;
    if sims.is_none() {
        cols.require(&["text_sim", "topic_sim"])?;
    }
    let file_network = NETWORK_COLUMNS.iter().all(|c| cols.has(c));
    let recompute = opts.recompute_network || !file_network;
    let computed = if recompute {
        Some(network_features(graph, &opts.pagerank)?)
    } else {
        None
    };
    let index = super::NameTable::from_names(graph.labels().to_vec());

    let mut report = JoinReport::default();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut rec = StringRecord::new();
    while rdr.read_record(&mut rec)? {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        report.input_rows += 1;
        let row = (|| -> std::result::Result<Option<LinkFeatures>, String> {
            let src_name = cols.str(&rec, "src")?;
            let trg_name = cols.str(&rec, "trg")?;
            let src = index
                .get(src_name)
                .ok_or_else(|| format!("unknown article `{src_name}`"))?;
            let trg = index
                .get(trg_name)
                .ok_or_else(|| format!("unknown article `{trg_name}`"))?;
            if !graph.has_edge(src, trg) {
                return Err(format!("{src_name} -> {trg_name} is not an edge of the graph"));
            }
            if !seen.insert((src, trg)) {
                return Err(format!("repeated row for {src_name} -> {trg_name}"));
            }
            let count = match cols.pos("transitions") {
                Some(_) if !cols.str(&rec, "transitions")?.is_empty() => {
                    let s = cols.str(&rec, "transitions")?;
                    s.parse::<u64>()
                        .map_err(|_| format!("transitions: `{s}` is not a count"))?
                }
                _ => {
                    report.counts_from_log += 1;
                    transitions.count(src, trg).unwrap_or(0)
                }
            };
            let (text_sim, topic_sim) = match sims {
                Some(source) if !cols.has("text_sim") || !cols.has("topic_sim") => {
                    let t = source.text_similarity(src_name, trg_name).map_err(|e| e.to_string())?;
                    let c = source.topic_similarity(src_name, trg_name).map_err(|e| e.to_string())?;
                    (check_similarity("text_sim", t)?, check_similarity("topic_sim", c)?)
                }
                _ => (cols.similarity(&rec, "text_sim")?, cols.similarity(&rec, "topic_sim")?),
            };
            let (src_net, trg_net) = match &computed {
                Some(net) => {
                    let (s, t) = (net[src as usize], net[trg as usize]);
                    if file_network {
                        let (fs, ft) = (cols.network(&rec, "src")?, cols.network(&rec, "trg")?);
                        compare_network(line, "src", &fs, &s, &mut report.consistency);
                        compare_network(line, "trg", &ft, &t, &mut report.consistency);
                    }
                    (s, t)
                }
                None => (cols.network(&rec, "src")?, cols.network(&rec, "trg")?),
            };
            Ok(Some(LinkFeatures {
                src,
                trg,
                transitions: count,
                src_net,
                trg_net,
                text_sim,
                topic_sim,
                x_coord: cols.num(&rec, "x_coord")?,
                y_coord: cols.num(&rec, "y_coord")?,
                region: cols.str(&rec, "region")?.parse().map_err(|e: Error| e.to_string())?,
            }))
        })();
        match row {
            Ok(Some(r)) => records.push(r),
            Ok(None) => {}
            Err(msg) if opts.fail_fast => return Err(Error::line(line, msg)),
            Err(msg) => report.rejected.push((line, msg)),
        }
    }
    Ok((LinkFeatureTable::new(graph.labels().to_vec(), records), report))
}

fn compare_network(
    line: usize,
    side: &str,
    file: &NetworkFeatures,
    recomputed: &NetworkFeatures,
    out: &mut Vec<ConsistencyIssue>,
) {
    let pairs = [
        ("degree", file.degree, recomputed.degree),
        ("in_degree", file.in_degree, recomputed.in_degree),
        ("out_degree", file.out_degree, recomputed.out_degree),
        ("kcore", file.kcore, recomputed.kcore),
        ("pagerank", file.pagerank, recomputed.pagerank),
    ];
    for (name, a, b) in pairs {
        if (a - b).abs() > 1e-6 * a.abs().max(b.abs()).max(1.0) {
            let column = NETWORK_COLUMNS
                .iter()
                .copied()
                .find(|c| c.strip_prefix(side).and_then(|r| r.strip_prefix('_')) == Some(name))
                .unwrap_or("network");
            out.push(ConsistencyIssue {
                line,
                column,
                file_value: a,
                recomputed: b,
            });
        }
    }
}

/// Reads a complete feature table without a graph, interning names in
/// first-seen order. All columns except `transitions` (default 0) are mandatory.
pub fn read_feature_table<R: Read>(reader: R) -> Result<LinkFeatureTable> {
    let (mut rdr, header) = csv_reader(reader)?;
    let cols = Columns::new(&header);
    let mandatory: Vec<&str> = FEATURE_COLUMNS
        .iter()
        .copied()
        .filter(|c| *c != "transitions")
        .collect();
    cols.require(&mandatory)?;

    let mut names = super::NameTable::new();
    let mut records = Vec::new();
    let mut rec = StringRecord::new();
    while rdr.read_record(&mut rec)? {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = (|| -> std::result::Result<LinkFeatures, String> {
            let transitions = match cols.pos("transitions") {
                Some(_) => {
                    let s = cols.str(&rec, "transitions")?;
                    s.parse::<u64>()
                        .map_err(|_| format!("transitions: `{s}` is not a count"))?
                }
                None => 0,
            };
            Ok(LinkFeatures {
                src: names.intern(cols.str(&rec, "src")?),
                trg: names.intern(cols.str(&rec, "trg")?),
                transitions,
                src_net: cols.network(&rec, "src")?,
                trg_net: cols.network(&rec, "trg")?,
                text_sim: cols.similarity(&rec, "text_sim")?,
                topic_sim: cols.similarity(&rec, "topic_sim")?,
                x_coord: cols.num(&rec, "x_coord")?,
                y_coord: cols.num(&rec, "y_coord")?,
                region: cols.str(&rec, "region")?.parse().map_err(|e: Error| e.to_string())?,
            })
        })();
        records.push(row.map_err(|msg| Error::line(line, msg))?);
    }
    Ok(LinkFeatureTable::new(names.into_names(), records))
}
