//! The pipeline stages. Each reads its inputs and upstream artifacts, skips
//! work when the manifest shows an identical earlier run, and writes its
//! outputs atomically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use linkpop::attention::{article_gini, fit_distributions, outdegree_comparison, transition_histogram, FitReport};
use linkpop::hurdle::{default_battery, run_battery, StageResult};
use linkpop::hyptrails::{
    bayes_factor_curve, default_kappa_grid, standard_hypotheses, structural_hypothesis, write_curves, RowCounts,
};
use linkpop::ingest::{
    load_feature_table, open_input, parse_clickstream, parse_edge_list, ClickstreamOptions, ErrorMode,
    LinkFeatureTable, LoadOptions, NameTable, SimilaritySource, TransitionLog,
};
use linkpop::semantics::{project, DocumentCorpus, ProjectedVectors, SemanticIndex};
use linkpop::wpr::{evaluate_all, write_evaluations, EvaluationOptions};
use linkpop::LinkGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::artifacts::{header_value, require_artifact, sha256_hex, strip_header, Header, Manifest, StageRecord};
use crate::config::RunConfig;

pub const GRAPH: &str = "graph.bin";
pub const TRANSITIONS: &str = "transitions.tsv";
pub const FEATURES: &str = "features.tsv";
pub const SAMPLE: &str = "sample.tsv";
const PROJECTION: &str = "projection.bin";

/// Gini histogram resolution.
const GINI_BINS: usize = 20;

/// One stage invocation: its parameters, the hashes of everything it reads
/// and the files it produces.
struct Stage<'a> {
    name: &'static str,
    cfg: &'a RunConfig,
    config_hash: String,
    inputs: BTreeMap<String, String>,
}

impl<'a> Stage<'a> {
    fn new(name: &'static str, cfg: &'a RunConfig, params: Value) -> Self {
        let config_hash = sha256_hex(json!({ "stage": name, "params": params }).to_string().as_bytes())[..16].to_string();
        Self {
            name,
            cfg,
            config_hash,
            inputs: BTreeMap::new(),
        }
    }

    fn input_file(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.insert(role.to_string(), crate::artifacts::hash_file(path)?);
        Ok(())
    }

    fn artifact(&mut self, name: &str, producer: &str) -> Result<Vec<u8>> {
        let path = require_artifact(&self.cfg.out, name, producer)?;
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(format!("artifact:{name}"), sha256_hex(&bytes));
        Ok(bytes)
    }

    fn header(&self) -> Header {
        Header {
            stage: self.name,
            config_hash: self.config_hash.clone(),
            sample_seed: self.cfg.sample_seed,
            projection_seed: self.cfg.projection_seed,
        }
    }

    /// Returns true (and reports it) when an identical earlier run's outputs are intact.
    fn cached(&self) -> Result<bool> {
        let manifest = Manifest::load(&self.cfg.out)?;
        let fresh = manifest.is_fresh(&self.cfg.out, self.name, &self.config_hash, &self.inputs);
        if fresh {
            eprintln!("{}: cache hit, outputs unchanged", self.name);
        }
        Ok(fresh)
    }

    fn finish(self, outputs: Vec<(&str, Vec<u8>)>) -> Result<()> {
        let header = self.header().line();
        let mut record = StageRecord {
            config_hash: self.config_hash.clone(),
            inputs: self.inputs.clone(),
            outputs: BTreeMap::new(),
        };
        for (name, body) in outputs {
            let mut bytes = header.clone().into_bytes();
            bytes.extend_from_slice(&body);
            crate::artifacts::write_atomic(&self.cfg.out.join(name), &bytes)?;
            record.outputs.insert(name.to_string(), sha256_hex(&bytes));
            eprintln!("{}: wrote {}", self.name, self.cfg.out.join(name).display());
        }
        let mut manifest = Manifest::load(&self.cfg.out)?;
        manifest.stages.insert(self.name.to_string(), record);
        manifest.save(&self.cfg.out)
    }
}

fn load_graph(bytes: &[u8]) -> Result<LinkGraph> {
    LinkGraph::read_snapshot(strip_header(bytes)).context("reading graph snapshot")
}

fn load_log(bytes: &[u8], graph: &LinkGraph) -> Result<TransitionLog> {
    let threshold = header_value(bytes, "threshold")
        .and_then(|v| v.parse().ok())
        .context("transition file lacks its threshold header")?;
    let names = NameTable::from_names(graph.labels().to_vec());
    let opts = ClickstreamOptions {
        threshold,
        mode: ErrorMode::FailFast,
    };
    let (log, _) = parse_clickstream(bytes, graph, &names, &opts)?;
    Ok(log)
}

fn load_table(bytes: &[u8], graph: &LinkGraph, log: &TransitionLog) -> Result<LinkFeatureTable> {
    let opts = LoadOptions {
        fail_fast: true,
        ..LoadOptions::default()
    };
    let (table, _) = load_feature_table(bytes, graph, log, &opts, None)?;
    Ok(table)
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> linkpop::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn build(cfg: &RunConfig) -> Result<()> {
    let mut stage = Stage::new("build", cfg, json!({ "threshold": cfg.threshold, "fail_fast": cfg.fail_fast }));
    let edges = cfg.require(&cfg.edges, "edges")?;
    let clicks = cfg.require(&cfg.clickstream, "clickstream")?;
    stage.input_file("edges", edges)?;
    stage.input_file("clickstream", clicks)?;
    if stage.cached()? {
        return Ok(());
    }

    let list = parse_edge_list(open_input(edges)?).with_context(|| format!("parsing {}", edges.display()))?;
    let names = list.names.clone();
    let graph = list.into_graph()?;
    let opts = ClickstreamOptions {
        threshold: cfg.threshold,
        mode: if cfg.fail_fast { ErrorMode::FailFast } else { ErrorMode::SkipAndReport },
    };
    let (log, stats) =
        parse_clickstream(open_input(clicks)?, &graph, &names, &opts).with_context(|| format!("parsing {}", clicks.display()))?;
    eprintln!(
        "build: {} articles, {} links ({} self-loops), {} used links carrying {} transitions",
        graph.node_count(),
        graph.edge_count(),
        graph.self_loop_count(),
        log.len(),
        log.total()
    );

    let snapshot = to_bytes(|b| graph.write_snapshot(b))?;
    let mut transitions = format!("# threshold={}\n", cfg.threshold).into_bytes();
    log.write(&graph, &mut transitions)?;

    let mut report = String::from("key\tvalue\n");
    for (k, v) in [
        ("articles", graph.node_count() as u64),
        ("links", graph.edge_count() as u64),
        ("self_loops", graph.self_loop_count() as u64),
        ("clickstream_rows", stats.rows as u64),
        ("external_rows", stats.external_rows as u64),
        ("external_count", stats.external_count),
        ("non_edge_rows", stats.non_edge_rows as u64),
        ("non_edge_count", stats.non_edge_count),
        ("below_threshold_pairs", stats.below_threshold_pairs as u64),
        ("below_threshold_count", stats.below_threshold_count),
        ("retained_rows", stats.retained_rows as u64),
        ("retained_count", stats.retained_count),
        ("used_links", log.len() as u64),
        ("malformed_rows", stats.malformed.len() as u64),
    ] {
        writeln!(report, "{k}\t{v}")?;
    }
    for (line, msg) in &stats.malformed {
        writeln!(report, "# malformed line {line}: {msg}")?;
    }

    stage.finish(vec![
        (GRAPH, snapshot),
        (TRANSITIONS, transitions),
        ("build_report.tsv", report.into_bytes()),
    ])
}

/// Similarity index over the configured corpus, reusing the cached projection
/// when its dimension, seed and corpus hash match.
fn semantic_index(cfg: &RunConfig, texts: &Path) -> Result<(SemanticIndex, Vec<u8>)> {
    let mut corpus = DocumentCorpus::new();
    corpus.read_texts(open_input(texts)?)?;
    if let Some(cats) = &cfg.categories {
        corpus.read_categories(open_input(cats)?)?;
    }
    let hash = corpus.content_hash();
    let cache = cfg.out.join(PROJECTION);
    if let Ok(bytes) = fs::read(&cache) {
        if let Ok(Some(projected)) =
            ProjectedVectors::read_cached(strip_header(&bytes), cfg.projection_dim, cfg.projection_seed, &hash)
        {
            eprintln!("features: reusing cached projection {}", cache.display());
            let body = strip_header(&bytes).to_vec();
            return Ok((SemanticIndex::new(corpus, projected)?, body));
        }
    }
    let projected = project(&corpus, cfg.projection_dim, cfg.projection_seed)?;
    let body = to_bytes(|b| projected.write(b))?;
    Ok((SemanticIndex::new(corpus, projected)?, body))
}

pub fn features(cfg: &RunConfig) -> Result<()> {
    let mut params = json!({
        "recompute_network_features": cfg.recompute_network_features,
        "fail_fast": cfg.fail_fast,
    });
    if cfg.texts.is_some() {
        params["projection_dim"] = json!(cfg.projection_dim);
        params["projection_seed"] = json!(cfg.projection_seed);
    }
    let mut stage = Stage::new("features", cfg, params);
    let graph_bytes = stage.artifact(GRAPH, "build")?;
    let log_bytes = stage.artifact(TRANSITIONS, "build")?;
    let input = cfg.require(&cfg.features, "features")?;
    stage.input_file("features", input)?;
    for (role, path) in [("texts", &cfg.texts), ("categories", &cfg.categories)] {
        if let Some(p) = path {
            stage.input_file(role, p)?;
        }
    }
    if stage.cached()? {
        return Ok(());
    }

    let graph = load_graph(&graph_bytes)?;
    let log = load_log(&log_bytes, &graph)?;
    let index = match &cfg.texts {
        Some(texts) => Some(semantic_index(cfg, texts)?),
        None => None,
    };
    let opts = LoadOptions {
        recompute_network: cfg.recompute_network_features,
        fail_fast: cfg.fail_fast,
        ..LoadOptions::default()
    };
    let sims = index.as_ref().map(|(i, _)| i as &dyn SimilaritySource);
    let (table, report) = load_feature_table(open_input(input)?, &graph, &log, &opts, sims)
        .with_context(|| format!("joining {}", input.display()))?;
    eprintln!(
        "features: {} of {} rows joined, {} rejected, {} network-feature disagreements",
        table.len(),
        report.input_rows,
        report.rejected.len(),
        report.consistency.len()
    );

    let body = to_bytes(|b| table.write(b))?;
    let mut rep = String::from("kind\tline\tdetail\n");
    for (line, msg) in &report.rejected {
        writeln!(rep, "rejected\t{line}\t{msg}")?;
    }
    for c in &report.consistency {
        writeln!(rep, "inconsistent\t{}\t{}: file {} recomputed {}", c.line, c.column, c.file_value, c.recomputed)?;
    }
    writeln!(rep, "# counts_from_log={}", report.counts_from_log)?;

    let mut outputs = vec![(FEATURES, body), ("features_report.tsv", rep.into_bytes())];
    if let Some((_, projection)) = index {
        outputs.push((PROJECTION, projection));
    }
    stage.finish(outputs)
}

pub fn sample(cfg: &RunConfig) -> Result<()> {
    let mut stage = Stage::new("sample", cfg, json!({ "size": cfg.sample_size, "seed": cfg.sample_seed }));
    let graph_bytes = stage.artifact(GRAPH, "build")?;
    let log_bytes = stage.artifact(TRANSITIONS, "build")?;
    let table_bytes = stage.artifact(FEATURES, "features")?;
    if stage.cached()? {
        return Ok(());
    }
    let graph = load_graph(&graph_bytes)?;
    let log = load_log(&log_bytes, &graph)?;
    let table = load_table(&table_bytes, &graph, &log)?;

    let eligible: Vec<u32> = log.entries().iter().map(|e| e.src).collect::<BTreeSet<_>>().into_iter().collect();
    if cfg.sample_size > eligible.len() {
        bail!(
            "sample size {} exceeds the {} articles with at least one used out-link",
            cfg.sample_size,
            eligible.len()
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);
    let chosen: BTreeSet<u32> = rand::seq::index::sample(&mut rng, eligible.len(), cfg.sample_size)
        .into_iter()
        .map(|k| eligible[k])
        .collect();
    let subset = table.filter_sources(|s| chosen.contains(&s));
    eprintln!(
        "sample: {} of {} eligible articles, {} links",
        chosen.len(),
        eligible.len(),
        subset.len()
    );
    let mut body = format!("# sampled={} eligible={}\n", chosen.len(), eligible.len()).into_bytes();
    subset.write(&mut body)?;
    stage.finish(vec![(SAMPLE, body)])
}

fn write_fits(out: &mut String, dataset: &str, fit: linkpop::Result<FitReport>) -> Result<()> {
    match fit {
        Ok(r) => {
            for f in &r.fits {
                let params: Vec<String> = f.params.iter().map(|p| p.to_string()).collect();
                writeln!(
                    out,
                    "{dataset}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.xmin,
                    r.n,
                    f.family,
                    params.join(","),
                    f.log_likelihood,
                    f.aic,
                    f.delta_aic,
                    f.family == r.winner
                )?;
            }
            for (family, msg) in &r.failures {
                writeln!(out, "# {dataset}: {family} did not converge: {msg}")?;
            }
        }
        Err(e) => writeln!(out, "# {dataset}: not fitted: {e}")?,
    }
    Ok(())
}

pub fn attention(cfg: &RunConfig) -> Result<()> {
    let mut stage = Stage::new("attention", cfg, json!({ "gini_bins": GINI_BINS }));
    let graph_bytes = stage.artifact(GRAPH, "build")?;
    let log_bytes = stage.artifact(TRANSITIONS, "build")?;
    if stage.cached()? {
        return Ok(());
    }
    let graph = load_graph(&graph_bytes)?;
    let log = load_log(&log_bytes, &graph)?;

    let hist = transition_histogram(&log);
    let mut h = format!(
        "# links={} transitions={} half_mass_links={}\ntransitions\tlinks\n",
        hist.links,
        hist.total,
        hist.half_mass_links.map_or("NA".to_string(), |k| k.to_string())
    );
    for (count, links) in &hist.frequencies {
        writeln!(h, "{count}\t{links}")?;
    }

    let (wiki, trans) = outdegree_comparison(&graph, &log);
    let mut od = String::from("network\toutdegree\tarticles\n");
    for d in [&wiki, &trans] {
        for (deg, n) in &d.frequencies {
            writeln!(od, "{}\t{deg}\t{n}", d.network.as_str())?;
        }
    }

    let gini = article_gini(&graph, &log);
    let mut g = format!("# undefined={}\narticle\tgini\n", gini.undefined);
    for (v, c) in &gini.coefficients {
        writeln!(g, "{}\t{c}", graph.label(*v))?;
    }
    let mut gh = String::from("bin_low\tbin_high\tarticles\n");
    for (k, n) in gini.histogram(GINI_BINS).iter().enumerate() {
        let w = 1.0 / GINI_BINS as f64;
        writeln!(gh, "{}\t{}\t{n}", k as f64 * w, (k + 1) as f64 * w)?;
    }

    let counts: Vec<u64> = log.entries().iter().map(|e| e.count).collect();
    let mut fits = String::from("dataset\txmin\tn\tfamily\tparams\tlog_likelihood\taic\tdelta_aic\twinner\n");
    write_fits(&mut fits, "transitions", fit_distributions(&counts, log.threshold().max(1)))?;
    write_fits(&mut fits, "wiki_outdegree", fit_distributions(&wiki.samples(), 1))?;
    write_fits(&mut fits, "trans_outdegree", fit_distributions(&trans.samples(), 1))?;

    stage.finish(vec![
        ("attention_histogram.tsv", h.into_bytes()),
        ("attention_outdegree.tsv", od.into_bytes()),
        ("attention_gini.tsv", g.into_bytes()),
        ("attention_gini_histogram.tsv", gh.into_bytes()),
        ("attention_fits.tsv", fits.into_bytes()),
    ])
}

fn stage_columns(r: &std::result::Result<StageResult, String>, with_theta: bool) -> (String, Option<String>) {
    match r {
        Ok(s) => {
            let mut cols = format!(
                "{}\t{}\t{:e}",
                s.full.coefficients[1], s.test.statistic, s.test.p
            );
            if with_theta {
                write!(cols, "\t{}", s.full.theta.unwrap_or(f64::NAN)).unwrap();
            }
            (cols, None)
        }
        Err(e) => {
            let na = if with_theta { "NA\tNA\tNA\tNA" } else { "NA\tNA\tNA" };
            (na.to_string(), Some(e.clone()))
        }
    }
}

pub fn hurdle(cfg: &RunConfig) -> Result<()> {
    let mut stage = Stage::new("hurdle", cfg, json!({ "on_sample": cfg.hurdle_on_sample }));
    let graph_bytes = stage.artifact(GRAPH, "build")?;
    let log_bytes = stage.artifact(TRANSITIONS, "build")?;
    let table_bytes = if cfg.hurdle_on_sample {
        stage.artifact(SAMPLE, "sample")?
    } else {
        stage.artifact(FEATURES, "features")?
    };
    if stage.cached()? {
        return Ok(());
    }
    let graph = load_graph(&graph_bytes)?;
    let log = load_log(&log_bytes, &graph)?;
    let table = load_table(&table_bytes, &graph, &log)?;

    // every retained count already passed the usage threshold
    let results = run_battery(&table, &default_battery(), 1)?;
    let mut out = format!("# rows={}\n", table.len());
    out.push_str(
        "feature\ttransformation\tbinomial_coef\tbinomial_lrt\tbinomial_p\tztnb_coef\tztnb_lrt\tztnb_p\tztnb_theta\n",
    );
    let mut notes = String::new();
    for r in &results {
        let (b, be) = stage_columns(&r.binomial, false);
        let (z, ze) = stage_columns(&r.ztnb, true);
        writeln!(out, "{}\t{}\t{b}\t{z}", r.feature, r.transform)?;
        for (part, e) in [("binomial", be), ("ztnb", ze)] {
            if let Some(e) = e {
                writeln!(notes, "# {} {part}: {e}", r.feature)?;
            }
        }
    }
    out.push_str(&notes);
    stage.finish(vec![("hurdle.tsv", out.into_bytes())])
}

pub fn hyptrails(cfg: &RunConfig) -> Result<()> {
    let mut stage = Stage::new("hyptrails", cfg, json!({ "kappas": cfg.kappas }));
    let graph_bytes = stage.artifact(GRAPH, "build")?;
    let log_bytes = stage.artifact(TRANSITIONS, "build")?;
    let table_bytes = stage.artifact(FEATURES, "features")?;
    if stage.cached()? {
        return Ok(());
    }
    let graph = load_graph(&graph_bytes)?;
    let log = load_log(&log_bytes, &graph)?;
    let table = load_table(&table_bytes, &graph, &log)?;

    let hyps = standard_hypotheses(&graph, &graph.kcore(), &table)?;
    let kappas = cfg.kappas.clone().unwrap_or_else(|| default_kappa_grid(&graph));
    let counts = RowCounts::from_log(&graph, &log)?;
    let curves = bayes_factor_curve(&graph, &hyps, &structural_hypothesis(&graph), &counts, &kappas)?;
    let mut out = String::from("# baseline=structural smoothing_weight=1\n");
    for h in &hyps[..3] {
        writeln!(out, "# {}: {} links without a feature value", h.name(), h.missing())?;
    }
    let mut body = out.into_bytes();
    write_curves(&curves, &mut body)?;
    stage.finish(vec![("hyptrails.tsv", body)])
}

pub fn pagerank(cfg: &RunConfig) -> Result<()> {
    let mut stage = Stage::new("pagerank", cfg, json!({ "alphas": cfg.alphas, "viewed_only": cfg.viewed_only }));
    let graph_bytes = stage.artifact(GRAPH, "build")?;
    let log_bytes = stage.artifact(TRANSITIONS, "build")?;
    let table_bytes = stage.artifact(FEATURES, "features")?;
    if stage.cached()? {
        return Ok(());
    }
    let graph = load_graph(&graph_bytes)?;
    let log = load_log(&log_bytes, &graph)?;
    let table = load_table(&table_bytes, &graph, &log)?;

    let hyps = standard_hypotheses(&graph, &graph.kcore(), &table)?;
    let opts = EvaluationOptions {
        alphas: cfg.alphas.clone(),
        viewed_only: cfg.viewed_only,
        ..EvaluationOptions::default()
    };
    let rows = evaluate_all(&graph, &hyps, &log, &opts)?;
    let mut body = format!(
        "# universe={}\n",
        if cfg.viewed_only { "viewed-articles" } else { "all-articles" }
    )
    .into_bytes();
    write_evaluations(&rows, &mut body)?;
    stage.finish(vec![("pagerank.tsv", body)])
}
