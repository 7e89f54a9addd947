//! Two-stage (hurdle) regression of link usage on single link features.
//!
//! Stage one is a logistic regression of "used at least `threshold` times" over
//! all links; stage two is a zero-truncated negative binomial regression of the
//! counts of used links. Only fixed effects are estimated; the source article
//! of each row is carried along as a group id.

mod logistic;
mod ztnb;

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use statrs::function::gamma::gamma_ur;

pub use logistic::{fit_logistic, logistic_log_likelihood};
pub use ztnb::{fit_ztnb, ztnb_log_likelihood};

use crate::error::{Error, Result};
use crate::ingest::{LinkFeatureTable, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Binomial,
    Ztnb,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Binomial => "binomial",
            Stage::Ztnb => "ztnb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// z-scored over the fitted rows.
    Scale,
    /// Used as is (binary indicators).
    None,
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::Scale => "scale",
            Transform::None => "none",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    pub transform: Transform,
}

/// Intercept plus feature columns, outcome and group id per row.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
    y: Vec<f64>,
    groups: Vec<u32>,
    /// `(mean, sd)` used to z-score each column, `None` when untransformed.
    scaling: Vec<Option<(f64, f64)>>,
}

impl DesignMatrix {
    /// Builds the matrix, prepending an intercept and z-scoring `Scale`
    /// columns with the sample standard deviation.
    pub fn new(columns: Vec<Column>, y: Vec<f64>, groups: Vec<u32>) -> Result<Self> {
        let n = y.len();
        if groups.len() != n {
            return Err(Error::MalformedInput("group ids and outcomes differ in length".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedInput("outcome has missing or non-finite values".into()));
        }
        let mut names = vec!["intercept".to_string()];
        let mut scaling = vec![None];
        let mut data = vec![1.0; n];
        for col in columns {
            if col.values.len() != n {
                return Err(Error::MalformedInput(format!(
                    "column {} has {} rows, expected {n}",
                    col.name,
                    col.values.len()
                )));
            }
            if col.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::MalformedInput(format!(
                    "column {} has missing or non-finite values",
                    col.name
                )));
            }
            match col.transform {
                Transform::Scale => {
                    let mean = col.values.iter().sum::<f64>() / n as f64;
                    let var = col.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                        / (n as f64 - 1.0);
                    let sd = var.sqrt();
                    if !(sd > 0.0) {
                        return Err(Error::Singular(vec![col.name]));
                    }
                    data.extend(col.values.iter().map(|v| (v - mean) / sd));
                    scaling.push(Some((mean, sd)));
                }
                Transform::None => {
                    data.extend_from_slice(&col.values);
                    scaling.push(None);
                }
            }
            names.push(col.name);
        }
        let x = DMatrix::from_vec(n, names.len(), data);
        Ok(Self {
            names,
            x,
            y,
            groups,
            scaling,
        })
    }

    /// Intercept-only design on the same rows.
    pub fn intercept_only(&self) -> Self {
        Self {
            names: vec![self.names[0].clone()],
            x: self.x.columns(0, 1).into_owned(),
            y: self.y.clone(),
            groups: self.groups.clone(),
            scaling: vec![None],
        }
    }

    pub fn rows(&self) -> usize {
        self.y.len()
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn groups(&self) -> &[u32] {
        &self.groups
    }

    pub fn scaling(&self, col: usize) -> Option<(f64, f64)> {
        self.scaling[col]
    }

    /// Names of the columns spanning the near-null space of `X^T X`.
    pub(crate) fn collinear_columns(&self) -> Vec<String> {
        let xtx = self.x.transpose() * &self.x;
        let diag: Vec<f64> = (0..self.cols()).map(|i| xtx[(i, i)].sqrt().max(1e-300)).collect();
        let scaled = DMatrix::from_fn(self.cols(), self.cols(), |r, c| xtx[(r, c)] / (diag[r] * diag[c]));
        let eig = scaled.symmetric_eigen();
        let (k, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one column");
        let v = eig.eigenvectors.column(k);
        self.names
            .iter()
            .zip(v.iter())
            .filter(|(_, w)| w.abs() > 1e-3)
            .map(|(n, _)| n.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurdleFit {
    pub stage: Stage,
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Negative binomial size parameter (ZTNB stage only).
    pub theta: Option<f64>,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub iterations: usize,
    /// Largest gradient component of the per-row mean log-likelihood at the optimum.
    pub grad_norm: f64,
    /// Log-likelihood after each accepted optimizer step.
    pub trace: Vec<f64>,
}

impl HurdleFit {
    pub fn n_params(&self) -> usize {
        self.coefficients.len() + usize::from(self.theta.is_some())
    }

    pub fn aic(&self) -> f64 {
        2.0 * self.n_params() as f64 - 2.0 * self.log_likelihood
    }

    pub fn bic(&self) -> f64 {
        (self.n_obs as f64).ln() * self.n_params() as f64 - 2.0 * self.log_likelihood
    }

    pub fn coefficient(&self, column: &str) -> Option<f64> {
        self.columns
            .iter()
            .position(|c| c == column)
            .map(|k| self.coefficients[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrtResult {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

/// Chi-square survival function through the regularized upper incomplete gamma.
pub fn chi_square_sf(statistic: f64, df: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, statistic / 2.0)
}

/// Likelihood-ratio chi-square test of `reduced` nested in `full`.
pub fn lrt(full: &HurdleFit, reduced: &HurdleFit) -> Result<LrtResult> {
    if full.stage != reduced.stage || full.n_obs != reduced.n_obs {
        return Err(Error::Precondition("models were fitted on different data".into()));
    }
    if !reduced.columns.iter().all(|c| full.columns.contains(c)) {
        return Err(Error::Precondition(
            "reduced model columns are not a subset of the full model's".into(),
        ));
    }
    let df = full.columns.len() - reduced.columns.len();
    let diff = full.log_likelihood - reduced.log_likelihood;
    if diff < -1e-6 {
        return Err(Error::Optimization(format!(
            "full model log-likelihood is {:.3e} below the nested model's",
            -diff
        )));
    }
    let statistic = (2.0 * diff).max(0.0);
    let p = if df == 0 { 1.0 } else { chi_square_sf(statistic, df) };
    Ok(LrtResult { statistic, df, p })
}

/// Outcomes of the two hurdle stages.
#[derive(Debug, Clone, PartialEq)]
pub struct HurdleSplit {
    /// 1 iff the link's count reaches the threshold; one entry per table row.
    pub binary: Vec<f64>,
    /// Table rows entering the count stage.
    pub count_rows: Vec<usize>,
    pub counts: Vec<f64>,
    /// Every link reaches the threshold, so stage one has a single outcome.
    pub separation_risk: bool,
}

pub fn split_hurdle(table: &LinkFeatureTable, threshold: u64) -> Result<HurdleSplit> {
    if threshold == 0 {
        return Err(Error::InvalidParameter("hurdle threshold must be at least 1".into()));
    }
    let counts: Vec<u64> = table.records().iter().map(|r| r.transitions).collect();
    Ok(split_counts(&counts, threshold))
}

pub(crate) fn split_counts(counts: &[u64], threshold: u64) -> HurdleSplit {
    let binary: Vec<f64> = counts.iter().map(|&c| f64::from(u8::from(c >= threshold))).collect();
    let count_rows: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] >= threshold).collect();
    let used = count_rows.len();
    HurdleSplit {
        separation_risk: !counts.is_empty() && (used == counts.len() || used == 0),
        counts: count_rows.iter().map(|&i| counts[i] as f64).collect(),
        count_rows,
        binary,
    }
}

/// A single-feature model of the battery.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub transform: Transform,
    source: FeatureSource,
}

#[derive(Debug, Clone, PartialEq)]
enum FeatureSource {
    Numeric(&'static str),
    Region(Region),
}

impl FeatureSpec {
    pub fn numeric(column: &'static str) -> Self {
        Self {
            name: column.to_string(),
            transform: Transform::Scale,
            source: FeatureSource::Numeric(column),
        }
    }

    pub fn region(region: Region) -> Self {
        Self {
            name: format!("position={region}"),
            transform: Transform::None,
            source: FeatureSource::Region(region),
        }
    }

    pub fn values(&self, table: &LinkFeatureTable, rows: &[usize]) -> Vec<f64> {
        let recs = table.records();
        match &self.source {
            FeatureSource::Numeric(c) => rows
                .iter()
                .map(|&i| recs[i].numeric(c).expect("known numeric column"))
                .collect(),
            FeatureSource::Region(r) => rows
                .iter()
                .map(|&i| f64::from(u8::from(recs[i].region == *r)))
                .collect(),
        }
    }
}

/// The per-feature models reported for link success, in report order.
pub fn default_battery() -> Vec<FeatureSpec> {
    let mut specs: Vec<FeatureSpec> = [
        "trg_degree",
        "trg_in_degree",
        "trg_out_degree",
        "trg_kcore",
        "trg_pagerank",
        "text_sim",
        "topic_sim",
    ]
    .into_iter()
    .map(FeatureSpec::numeric)
    .collect();
    specs.extend(Region::ALL.into_iter().map(FeatureSpec::region));
    specs.push(FeatureSpec::numeric("x_coord"));
    specs.push(FeatureSpec::numeric("y_coord"));
    specs
}

#[derive(Debug, Clone)]
pub struct StageResult {
    pub full: HurdleFit,
    pub reduced: HurdleFit,
    pub test: LrtResult,
}

#[derive(Debug, Clone)]
pub struct FeatureResult {
    pub feature: String,
    pub transform: Transform,
    pub binomial: std::result::Result<StageResult, String>,
    pub ztnb: std::result::Result<StageResult, String>,
}

fn run_stage(
    stage: Stage,
    spec: &FeatureSpec,
    table: &LinkFeatureTable,
    rows: &[usize],
    y: Vec<f64>,
) -> std::result::Result<StageResult, String> {
    let groups = rows.iter().map(|&i| table.records()[i].src).collect();
    let column = Column {
        name: spec.name.clone(),
        values: spec.values(table, rows),
        transform: spec.transform,
    };
    let design = DesignMatrix::new(vec![column], y, groups).map_err(|e| e.to_string())?;
    let reduced_design = design.intercept_only();
    let fit = |d: &DesignMatrix| match stage {
        Stage::Binomial => fit_logistic(d),
        Stage::Ztnb => fit_ztnb(d, 1.0),
    };
    let full = fit(&design).map_err(|e| e.to_string())?;
    let reduced = fit(&reduced_design).map_err(|e| e.to_string())?;
    let test = lrt(&full, &reduced).map_err(|e| e.to_string())?;
    Ok(StageResult { full, reduced, test })
}

/// Fits both hurdle stages for every feature, one feature per model.
/// Failures are recorded per stage rather than aborting the battery.
pub fn run_battery(table: &LinkFeatureTable, specs: &[FeatureSpec], threshold: u64) -> Result<Vec<FeatureResult>> {
    let split = split_hurdle(table, threshold)?;
    let all_rows: Vec<usize> = (0..table.len()).collect();
    Ok(specs
        .par_iter()
        .map(|spec| FeatureResult {
            feature: spec.name.clone(),
            transform: spec.transform,
            binomial: run_stage(Stage::Binomial, spec, table, &all_rows, split.binary.clone()),
            ztnb: run_stage(Stage::Ztnb, spec, table, &split.count_rows, split.counts.clone()),
        })
        .collect())
}
