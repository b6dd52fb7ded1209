//! GZSL evaluation protocol: seen/unseen MAE, harmonic mean, cross-dataset
//! aggregation, and supervised-vs-GZSL degradation accounting.
//!
//! The harmonic mean of seen and unseen MAE is the primary metric; it
//! penalizes methods that do well on one class group at the expense of the
//! other. Aggregation always computes the harmonic mean per dataset first
//! and averages afterwards; the harmonic of aggregated seen/unseen errors is
//! a different (and wrong) quantity.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

use crate::splitter::{Folder, SplitManifest};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("subset of scored samples is empty")]
    EmptySubset,
    #[error("no prediction for sample {0:?}")]
    MissingPrediction(String),
    #[error("no ground-truth age for sample {0:?}")]
    MissingTruth(String),
    #[error("non-finite predicted age for sample {0:?}")]
    NonFinitePrediction(String),
    #[error("duplicate prediction for sample {0:?}")]
    DuplicatePrediction(String),
    #[error("harmonic mean inputs must be nonnegative, got ({0}, {1})")]
    NegativeInput(f64, f64),
    #[error("required folder {0} holds no samples")]
    EmptyFolder(Folder),
    #[error("method {method:?} does not cover dataset {dataset:?}")]
    RaggedCoverage { method: String, dataset: String },
    #[error("method sets of the two tables differ at {0:?}")]
    MethodSetMismatch(String),
    #[error("supervised MAE for method {0:?} is zero; degradation undefined")]
    ZeroSupervisedMae(String),
    #[error("prediction row {line}: {detail}")]
    InvalidPredictionRow { line: u64, detail: String },
    #[error("cell row {line}: {detail}")]
    InvalidCellRow { line: u64, detail: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Which evaluation split a prediction set targets. Validation scores
/// folders 1 (seen) and 3 (unseen); test scores folders 2 and 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvalSplit {
    Val,
    Test,
}

impl EvalSplit {
    pub fn seen_folder(self) -> Folder {
        match self {
            EvalSplit::Val => Folder::SeenVal,
            EvalSplit::Test => Folder::SeenTest,
        }
    }

    pub fn unseen_folder(self) -> Folder {
        match self {
            EvalSplit::Val => Folder::UnseenVal,
            EvalSplit::Test => Folder::UnseenTest,
        }
    }
}

/// Predicted ages for one (method, dataset, split) run.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub method_name: String,
    pub dataset_name: String,
    pub split: EvalSplit,
    predicted: BTreeMap<String, f64>,
}

impl PredictionSet {
    pub fn new(
        method_name: impl Into<String>,
        dataset_name: impl Into<String>,
        split: EvalSplit,
        predicted: BTreeMap<String, f64>,
    ) -> Result<Self, MetricsError> {
        for (sample, value) in &predicted {
            if !value.is_finite() {
                return Err(MetricsError::NonFinitePrediction(sample.clone()));
            }
        }
        Ok(Self {
            method_name: method_name.into(),
            dataset_name: dataset_name.into(),
            split,
            predicted,
        })
    }

    /// Read a `sample_id,predicted_age` table.
    pub fn from_csv<R: Read>(
        source: R,
        method_name: &str,
        dataset_name: &str,
        split: EvalSplit,
    ) -> Result<Self, MetricsError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| {
                MetricsError::InvalidPredictionRow {
                    line: 1,
                    detail: format!("missing {name} column"),
                }
            })
        };
        let id_col = col("sample_id")?;
        let age_col = col("predicted_age")?;
        let mut predicted = BTreeMap::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |detail: String| MetricsError::InvalidPredictionRow { line, detail };
            let id = row
                .get(id_col)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| bad("missing sample_id".into()))?
                .to_string();
            let raw = row
                .get(age_col)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| bad("missing predicted_age".into()))?;
            let age: f64 = raw
                .parse()
                .map_err(|_| bad(format!("invalid predicted age {raw:?}")))?;
            if predicted.insert(id.clone(), age).is_some() {
                return Err(MetricsError::DuplicatePrediction(id));
            }
        }
        Self::new(method_name, dataset_name, split, predicted)
    }

    pub fn predicted(&self) -> &BTreeMap<String, f64> {
        &self.predicted
    }
}

/// Seen MAE, unseen MAE, and their harmonic mean for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub seen_mae: f64,
    pub unseen_mae: f64,
    pub harmonic: f64,
    pub n_seen: usize,
    pub n_unseen: usize,
}

impl EvalResult {
    pub fn triple(&self) -> MetricTriple {
        MetricTriple {
            s: self.seen_mae,
            u: self.unseen_mae,
            h: self.harmonic,
        }
    }
}

/// An (S, U, H) column triple in a results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricTriple {
    pub s: f64,
    pub u: f64,
    pub h: f64,
}

/// Mean absolute error of `predicted` against `truths` over `subset`.
pub fn mae(
    predicted: &BTreeMap<String, f64>,
    truths: &BTreeMap<String, f64>,
    subset: &BTreeSet<String>,
) -> Result<f64, MetricsError> {
    if subset.is_empty() {
        return Err(MetricsError::EmptySubset);
    }
    let mut total = 0.0;
    for sample in subset {
        let p = predicted
            .get(sample)
            .ok_or_else(|| MetricsError::MissingPrediction(sample.clone()))?;
        let t = truths
            .get(sample)
            .ok_or_else(|| MetricsError::MissingTruth(sample.clone()))?;
        total += (p - t).abs();
    }
    Ok(total / subset.len() as f64)
}

/// Harmonic mean `2SU / (S + U)`, extended by continuity to 0 at S = U = 0.
pub fn harmonic_mean(seen: f64, unseen: f64) -> Result<f64, MetricsError> {
    if seen < 0.0 || unseen < 0.0 {
        return Err(MetricsError::NegativeInput(seen, unseen));
    }
    if seen == 0.0 && unseen == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * seen * unseen / (seen + unseen))
}

/// Score a prediction set against a split: seen and unseen MAE over the
/// split's two folders plus their harmonic mean. Both folders must hold at
/// least one sample; a GZSL evaluation without an unseen side (or a seen
/// side) is meaningless.
pub fn evaluate(
    predictions: &PredictionSet,
    split: &SplitManifest,
    truths: &BTreeMap<String, f64>,
) -> Result<EvalResult, MetricsError> {
    let collect = |folder: Folder| -> BTreeSet<String> {
        split
            .assignments
            .iter()
            .filter(|(_, f)| **f == folder)
            .map(|(s, _)| s.clone())
            .collect()
    };
    let seen_folder = predictions.split.seen_folder();
    let unseen_folder = predictions.split.unseen_folder();
    let seen = collect(seen_folder);
    let unseen = collect(unseen_folder);
    if seen.is_empty() {
        return Err(MetricsError::EmptyFolder(seen_folder));
    }
    if unseen.is_empty() {
        return Err(MetricsError::EmptyFolder(unseen_folder));
    }
    let seen_mae = mae(&predictions.predicted, truths, &seen)?;
    let unseen_mae = mae(&predictions.predicted, truths, &unseen)?;
    Ok(EvalResult {
        seen_mae,
        unseen_mae,
        harmonic: harmonic_mean(seen_mae, unseen_mae)?,
        n_seen: seen.len(),
        n_unseen: unseen.len(),
    })
}

/// The model-selection objective in the GZSL setting: the harmonic mean of
/// the validation evaluation.
pub fn selection_objective(val_result: &EvalResult) -> f64 {
    val_result.harmonic
}

/// One method's row of the aggregate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRow {
    pub method: String,
    /// Aligned with the report's dataset order.
    pub cells: Vec<MetricTriple>,
    /// Arithmetic means of the per-dataset S, U, and H values.
    pub all: MetricTriple,
}

/// The full cross-dataset results table: one row per method plus Mean and
/// Std rows over methods (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub datasets: Vec<String>,
    pub rows: Vec<MethodRow>,
    pub mean_row: Vec<MetricTriple>,
    pub std_row: Vec<MetricTriple>,
    pub mean_all: MetricTriple,
    pub std_all: MetricTriple,
}

impl AggregateReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn cell(&self, method: &str, dataset: &str) -> Option<&MetricTriple> {
        let col = self.datasets.iter().position(|d| d == dataset)?;
        self.row(method).map(|r| &r.cells[col])
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<12}", "method"));
        for dataset in self.datasets.iter().chain([&"All".to_string()]) {
            out.push_str(&format!(" | {:^20}", dataset));
        }
        out.push('\n');
        out.push_str(&format!("{:<12}", ""));
        for _ in 0..=self.datasets.len() {
            out.push_str(&format!(" | {:>6} {:>6} {:>6}", "S", "U", "H"));
        }
        out.push('\n');
        let line = |label: &str, cells: &[MetricTriple], all: &MetricTriple| {
            let mut s = format!("{label:<12}");
            for cell in cells.iter().chain([all]) {
                s.push_str(&format!(
                    " | {:>6.2} {:>6.2} {:>6.2}",
                    cell.s, cell.u, cell.h
                ));
            }
            s.push('\n');
            s
        };
        for row in &self.rows {
            out.push_str(&line(&row.method, &row.cells, &row.all));
        }
        out.push_str(&line("Mean", &self.mean_row, &self.mean_all));
        out.push_str(&line("Std.", &self.std_row, &self.std_all));
        out
    }
}

fn mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    values.sum::<f64>() / n as f64
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mu = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt()
}

fn triple_mean(triples: &[MetricTriple]) -> MetricTriple {
    MetricTriple {
        s: mean(triples.iter().map(|t| t.s)),
        u: mean(triples.iter().map(|t| t.u)),
        h: mean(triples.iter().map(|t| t.h)),
    }
}

fn triple_std(triples: &[MetricTriple]) -> MetricTriple {
    MetricTriple {
        s: population_std(triples.iter().map(|t| t.s)),
        u: population_std(triples.iter().map(|t| t.u)),
        h: population_std(triples.iter().map(|t| t.h)),
    }
}

/// Build the aggregate table from per-(method, dataset) triples. Every
/// method must cover the same dataset set. Methods and datasets are sorted
/// by name for diff-stable output.
pub fn aggregate(
    cells: &BTreeMap<(String, String), MetricTriple>,
) -> Result<AggregateReport, MetricsError> {
    let methods: Vec<String> = cells
        .keys()
        .map(|(m, _)| m.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let datasets: Vec<String> = cells
        .keys()
        .map(|(_, d)| d.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut rows = Vec::with_capacity(methods.len());
    for method in &methods {
        let mut row_cells = Vec::with_capacity(datasets.len());
        for dataset in &datasets {
            let cell = cells
                .get(&(method.clone(), dataset.clone()))
                .ok_or_else(|| MetricsError::RaggedCoverage {
                    method: method.clone(),
                    dataset: dataset.clone(),
                })?;
            row_cells.push(*cell);
        }
        let all = triple_mean(&row_cells);
        rows.push(MethodRow {
            method: method.clone(),
            cells: row_cells,
            all,
        });
    }

    let mut mean_row = Vec::with_capacity(datasets.len());
    let mut std_row = Vec::with_capacity(datasets.len());
    for col in 0..datasets.len() {
        let column: Vec<MetricTriple> = rows.iter().map(|r| r.cells[col]).collect();
        mean_row.push(triple_mean(&column));
        std_row.push(triple_std(&column));
    }
    let all_column: Vec<MetricTriple> = rows.iter().map(|r| r.all).collect();
    Ok(AggregateReport {
        datasets,
        mean_all: triple_mean(&all_column),
        std_all: triple_std(&all_column),
        rows,
        mean_row,
        std_row,
    })
}

/// Read a `method,dataset,seen_mae,unseen_mae` table and recompute the
/// harmonic mean per cell.
pub fn read_cells_csv<R: Read>(
    source: R,
) -> Result<BTreeMap<(String, String), MetricTriple>, MetricsError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MetricsError::InvalidCellRow {
                line: 1,
                detail: format!("missing {name} column"),
            })
    };
    let method_col = col("method")?;
    let dataset_col = col("dataset")?;
    let seen_col = col("seen_mae")?;
    let unseen_col = col("unseen_mae")?;
    let mut cells = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |detail: String| MetricsError::InvalidCellRow { line, detail };
        let field = |idx: usize, name: &str| {
            row.get(idx)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
                .ok_or_else(|| bad(format!("missing {name}")))
        };
        let method = field(method_col, "method")?;
        let dataset = field(dataset_col, "dataset")?;
        let parse = |raw: &str| -> Result<f64, MetricsError> {
            raw.parse()
                .map_err(|_| bad(format!("invalid number {raw:?}")))
        };
        let s = parse(&field(seen_col, "seen_mae")?)?;
        let u = parse(&field(unseen_col, "unseen_mae")?)?;
        let h = harmonic_mean(s, u)?;
        if cells
            .insert((method.clone(), dataset.clone()), MetricTriple { s, u, h })
            .is_some()
        {
            return Err(bad(format!("duplicate cell ({method}, {dataset})")));
        }
    }
    Ok(cells)
}

/// Read a `method,dataset,mae` table of supervised baselines.
pub fn read_supervised_csv<R: Read>(
    source: R,
) -> Result<BTreeMap<(String, String), f64>, MetricsError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MetricsError::InvalidCellRow {
                line: 1,
                detail: format!("missing {name} column"),
            })
    };
    let method_col = col("method")?;
    let dataset_col = col("dataset")?;
    let mae_col = col("mae")?;
    let mut cells = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |detail: String| MetricsError::InvalidCellRow { line, detail };
        let method = row
            .get(method_col)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| bad("missing method".into()))?
            .to_string();
        let dataset = row
            .get(dataset_col)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| bad("missing dataset".into()))?
            .to_string();
        let raw = row
            .get(mae_col)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| bad("missing mae".into()))?;
        let value: f64 = raw
            .parse()
            .map_err(|_| bad(format!("invalid number {raw:?}")))?;
        if cells
            .insert((method.clone(), dataset.clone()), value)
            .is_some()
        {
            return Err(bad(format!("duplicate cell ({method}, {dataset})")));
        }
    }
    Ok(cells)
}

/// Per-method degradation of the GZSL harmonic mean over the supervised
/// baseline, as a percentage of the baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodDegradation {
    pub method: String,
    pub supervised_mae: f64,
    pub gzsl_h: f64,
    pub pct: f64,
}

/// The single worst (method, dataset) cell, when per-cell values are
/// supplied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDegradation {
    pub method: String,
    pub dataset: String,
    pub supervised_mae: f64,
    pub gzsl_h: f64,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationReport {
    pub per_method: Vec<MethodDegradation>,
    pub average_pct: f64,
    pub max_pct: f64,
    pub max_method: String,
    pub extreme_cell: Option<CellDegradation>,
}

impl DegradationReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>10} {:>8} {:>9}\n",
            "method", "supervised", "gzsl H", "change"
        ));
        for row in &self.per_method {
            out.push_str(&format!(
                "{:<12} {:>10.2} {:>8.2} {:>+8.1}%\n",
                row.method, row.supervised_mae, row.gzsl_h, row.pct
            ));
        }
        out.push_str(&format!(
            "average {:+.1}%, worst {:+.1}% ({})\n",
            self.average_pct, self.max_pct, self.max_method
        ));
        if let Some(cell) = &self.extreme_cell {
            out.push_str(&format!(
                "extreme cell {}/{}: {:.2} -> {:.2} ({:+.1}%)\n",
                cell.method, cell.dataset, cell.supervised_mae, cell.gzsl_h, cell.pct
            ));
        }
        out
    }
}

fn pct_change(baseline: f64, value: f64) -> f64 {
    100.0 * (value - baseline) / baseline
}

/// Per-(method, dataset) pairs of (supervised MAE, GZSL harmonic mean).
pub type CellBaselines = BTreeMap<(String, String), (f64, f64)>;

/// Degradation accounting: per-method percentage change of the aggregate
/// GZSL harmonic mean against the aggregate supervised MAE, the average and
/// maximum over methods, and optionally the most extreme individual
/// (method, dataset) cell.
pub fn degradation(
    gzsl_all_h: &BTreeMap<String, f64>,
    supervised_all_mae: &BTreeMap<String, f64>,
    per_cell: Option<&CellBaselines>,
) -> Result<DegradationReport, MetricsError> {
    if gzsl_all_h.len() != supervised_all_mae.len() {
        let diff = gzsl_all_h
            .keys()
            .find(|m| !supervised_all_mae.contains_key(*m))
            .or_else(|| {
                supervised_all_mae
                    .keys()
                    .find(|m| !gzsl_all_h.contains_key(*m))
            });
        return Err(MetricsError::MethodSetMismatch(
            diff.cloned().unwrap_or_default(),
        ));
    }
    let mut per_method = Vec::with_capacity(gzsl_all_h.len());
    for (method, h) in gzsl_all_h {
        let supervised = *supervised_all_mae
            .get(method)
            .ok_or_else(|| MetricsError::MethodSetMismatch(method.clone()))?;
        if supervised == 0.0 {
            return Err(MetricsError::ZeroSupervisedMae(method.clone()));
        }
        per_method.push(MethodDegradation {
            method: method.clone(),
            supervised_mae: supervised,
            gzsl_h: *h,
            pct: pct_change(supervised, *h),
        });
    }
    if per_method.is_empty() {
        return Err(MetricsError::MethodSetMismatch(String::new()));
    }
    let average_pct = per_method.iter().map(|m| m.pct).sum::<f64>() / per_method.len() as f64;
    let worst = per_method
        .iter()
        .max_by(|a, b| a.pct.partial_cmp(&b.pct).unwrap())
        .expect("nonempty");
    let (max_pct, max_method) = (worst.pct, worst.method.clone());

    let extreme_cell = match per_cell {
        Some(cells) => {
            let mut extreme: Option<CellDegradation> = None;
            for ((method, dataset), (supervised, h)) in cells {
                if *supervised == 0.0 {
                    return Err(MetricsError::ZeroSupervisedMae(method.clone()));
                }
                let pct = pct_change(*supervised, *h);
                if extreme.as_ref().is_none_or(|e| pct > e.pct) {
                    extreme = Some(CellDegradation {
                        method: method.clone(),
                        dataset: dataset.clone(),
                        supervised_mae: *supervised,
                        gzsl_h: *h,
                        pct,
                    });
                }
            }
            extreme
        }
        None => None,
    };

    Ok(DegradationReport {
        per_method,
        average_pct,
        max_pct,
        max_method,
        extreme_cell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::AgeGroupConfig;
    use crate::splitter::SplitFractions;
    use proptest::prelude::*;

    fn to_map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn to_set(keys: &[&str]) -> BTreeSet<String> {
        keys.iter().map(|k| k.to_string()).collect()
    }

    #[test]
    fn mae_hand_cases() {
        let truths = to_map(&[("a", 18.0), ("b", 33.0)]);
        let perfect = mae(&truths.clone(), &truths, &to_set(&["a", "b"])).unwrap();
        assert_eq!(perfect, 0.0);

        let predicted = to_map(&[("a", 20.0), ("b", 30.0)]);
        assert!((mae(&predicted, &truths, &to_set(&["a", "b"])).unwrap() - 2.5).abs() < 1e-12);

        let constant = to_map(&[("a", 25.0), ("b", 25.0)]);
        let truths2 = to_map(&[("a", 20.0), ("b", 30.0)]);
        assert!((mae(&constant, &truths2, &to_set(&["a", "b"])).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mae_contract_errors() {
        let truths = to_map(&[("a", 18.0)]);
        assert!(matches!(
            mae(&truths.clone(), &truths, &BTreeSet::new()),
            Err(MetricsError::EmptySubset)
        ));
        assert!(matches!(
            mae(&BTreeMap::new(), &truths, &to_set(&["a"])),
            Err(MetricsError::MissingPrediction(_))
        ));
        let predicted = to_map(&[("a", 20.0)]);
        assert!(matches!(
            mae(&predicted, &BTreeMap::new(), &to_set(&["a"])),
            Err(MetricsError::MissingTruth(_))
        ));
    }

    #[test]
    fn harmonic_published_pairs() {
        // Values from the published GZSL results table.
        assert!((harmonic_mean(3.03, 4.60).unwrap() - 3.65).abs() < 0.005);
        assert!((harmonic_mean(7.78, 17.81).unwrap() - 10.83).abs() < 0.005);
    }

    #[test]
    fn harmonic_edge_cases() {
        assert_eq!(harmonic_mean(0.0, 0.0).unwrap(), 0.0);
        for x in [0.5, 1.0, 7.25] {
            assert!((harmonic_mean(x, x).unwrap() - x).abs() < 1e-12);
        }
        assert!(matches!(
            harmonic_mean(-1.0, 2.0),
            Err(MetricsError::NegativeInput(..))
        ));
        assert!((harmonic_mean(4.0, 12.0).unwrap() - 6.0).abs() < 1e-12);
    }

    fn eval_fixture() -> (SplitManifest, BTreeMap<String, f64>) {
        // Hand-built split: two adults in seen test, three minors in unseen
        // test, one adult in train for completeness.
        let mut assignments = BTreeMap::new();
        assignments.insert("t1".to_string(), Folder::SeenTest);
        assignments.insert("t2".to_string(), Folder::SeenTest);
        assignments.insert("u1".to_string(), Folder::UnseenTest);
        assignments.insert("u2".to_string(), Folder::UnseenTest);
        assignments.insert("u3".to_string(), Folder::UnseenTest);
        assignments.insert("x1".to_string(), Folder::SeenTrain);
        let split = SplitManifest {
            assignments,
            discarded: BTreeMap::new(),
            subject_folder: None,
            seed: None,
            fractions: SplitFractions::default(),
            config: AgeGroupConfig::default(),
        };
        let truths = to_map(&[
            ("t1", 30.0),
            ("t2", 40.0),
            ("u1", 10.0),
            ("u2", 15.0),
            ("u3", 16.0),
            ("x1", 25.0),
        ]);
        (split, truths)
    }

    #[test]
    fn evaluate_hand_fixture() {
        let (split, truths) = eval_fixture();
        // Seen errors 2 and 3 (MAE 2.5); unseen errors 8, 4, 3 (MAE 5).
        let predicted = to_map(&[
            ("t1", 32.0),
            ("t2", 37.0),
            ("u1", 18.0),
            ("u2", 19.0),
            ("u3", 19.0),
        ]);
        let set = PredictionSet::new("m", "d", EvalSplit::Test, predicted).unwrap();
        let result = evaluate(&set, &split, &truths).unwrap();
        assert!((result.seen_mae - 2.5).abs() < 1e-12);
        assert!((result.unseen_mae - 5.0).abs() < 1e-12);
        assert!((result.harmonic - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(result.n_seen, 2);
        assert_eq!(result.n_unseen, 3);
        assert_eq!(selection_objective(&result), result.harmonic);
    }

    #[test]
    fn evaluate_perfect_predictions() {
        let (split, truths) = eval_fixture();
        let predicted = truths.clone();
        let set = PredictionSet::new("m", "d", EvalSplit::Test, predicted).unwrap();
        let result = evaluate(&set, &split, &truths).unwrap();
        assert_eq!(result.seen_mae, 0.0);
        assert_eq!(result.unseen_mae, 0.0);
        assert_eq!(result.harmonic, 0.0);
    }

    #[test]
    fn evaluate_missing_prediction_fails() {
        let (split, truths) = eval_fixture();
        let predicted = to_map(&[("t1", 32.0), ("t2", 37.0), ("u1", 18.0), ("u2", 19.0)]);
        let set = PredictionSet::new("m", "d", EvalSplit::Test, predicted).unwrap();
        assert!(matches!(
            evaluate(&set, &split, &truths),
            Err(MetricsError::MissingPrediction(_))
        ));
    }

    #[test]
    fn evaluate_requires_both_folders() {
        let (mut split, truths) = eval_fixture();
        split.assignments.retain(|_, f| *f != Folder::UnseenTest);
        let set = PredictionSet::new("m", "d", EvalSplit::Test, to_map(&[("t1", 30.0)])).unwrap();
        match evaluate(&set, &split, &truths) {
            Err(MetricsError::EmptyFolder(folder)) => assert_eq!(folder, Folder::UnseenTest),
            other => panic!("unexpected: {other:?}"),
        }
        // Val split on this fixture has no seen-val samples either.
        let set = PredictionSet::new("m", "d", EvalSplit::Val, BTreeMap::new()).unwrap();
        assert!(matches!(
            evaluate(&set, &split, &truths),
            Err(MetricsError::EmptyFolder(_))
        ));
    }

    #[test]
    fn prediction_set_rejects_non_finite() {
        let predicted = to_map(&[("a", f64::NAN)]);
        assert!(matches!(
            PredictionSet::new("m", "d", EvalSplit::Val, predicted),
            Err(MetricsError::NonFinitePrediction(_))
        ));
    }

    #[test]
    fn prediction_csv_round_trip() {
        let csv = "sample_id,predicted_age\na,20.5\nb,31\n";
        let set = PredictionSet::from_csv(csv.as_bytes(), "m", "d", EvalSplit::Test).unwrap();
        assert_eq!(set.predicted().len(), 2);
        assert_eq!(set.predicted()["a"], 20.5);

        let dup = "sample_id,predicted_age\na,20.5\na,31\n";
        assert!(matches!(
            PredictionSet::from_csv(dup.as_bytes(), "m", "d", EvalSplit::Test),
            Err(MetricsError::DuplicatePrediction(_))
        ));
    }

    #[test]
    fn aggregate_single_method_single_dataset() {
        let mut cells = BTreeMap::new();
        cells.insert(
            apair("m", "d"),
            MetricTriple {
                s: 2.0,
                u: 6.0,
                h: 3.0,
            },
        );
        let report = aggregate(&cells).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(
            report.rows[0].all,
            MetricTriple {
                s: 2.0,
                u: 6.0,
                h: 3.0
            }
        );
        assert_eq!(
            report.std_all,
            MetricTriple {
                s: 0.0,
                u: 0.0,
                h: 0.0
            }
        );
        assert_eq!(report.mean_all, report.rows[0].all);
    }

    fn apair(m: &str, d: &str) -> (String, String) {
        (m.to_string(), d.to_string())
    }

    #[test]
    fn aggregate_means_and_population_std() {
        let mut cells = BTreeMap::new();
        cells.insert(
            apair("m1", "d1"),
            MetricTriple {
                s: 1.0,
                u: 2.0,
                h: 4.0,
            },
        );
        cells.insert(
            apair("m1", "d2"),
            MetricTriple {
                s: 3.0,
                u: 4.0,
                h: 8.0,
            },
        );
        cells.insert(
            apair("m2", "d1"),
            MetricTriple {
                s: 5.0,
                u: 6.0,
                h: 2.0,
            },
        );
        cells.insert(
            apair("m2", "d2"),
            MetricTriple {
                s: 7.0,
                u: 8.0,
                h: 6.0,
            },
        );
        let report = aggregate(&cells).unwrap();
        // All column per method.
        assert_eq!(report.row("m1").unwrap().all.s, 2.0);
        assert_eq!(report.row("m2").unwrap().all.s, 6.0);
        // Mean/Std rows over methods: population std of {2, 6} is 2.
        assert_eq!(report.mean_all.s, 4.0);
        assert_eq!(report.std_all.s, 2.0);
        // Per-dataset column too: d1 S values {1, 5}.
        assert_eq!(report.mean_row[0].s, 3.0);
        assert_eq!(report.std_row[0].s, 2.0);
    }

    #[test]
    fn aggregate_rejects_ragged_coverage() {
        let mut cells = BTreeMap::new();
        cells.insert(
            apair("m1", "d1"),
            MetricTriple {
                s: 1.0,
                u: 2.0,
                h: 1.3,
            },
        );
        cells.insert(
            apair("m2", "d1"),
            MetricTriple {
                s: 1.0,
                u: 2.0,
                h: 1.3,
            },
        );
        cells.insert(
            apair("m2", "d2"),
            MetricTriple {
                s: 1.0,
                u: 2.0,
                h: 1.3,
            },
        );
        assert!(matches!(
            aggregate(&cells),
            Err(MetricsError::RaggedCoverage { .. })
        ));
    }

    #[test]
    fn degradation_hand_values() {
        // Aggregate values from the two published tables.
        let gzsl = to_map(&[("Regression", 6.49)]);
        let supervised = to_map(&[("Regression", 4.26)]);
        let report = degradation(&gzsl, &supervised, None).unwrap();
        assert!((report.per_method[0].pct - 52.3).abs() < 0.1);
        assert_eq!(report.max_method, "Regression");
        assert!(report.extreme_cell.is_none());
    }

    #[test]
    fn degradation_tracks_extreme_cell() {
        let gzsl = to_map(&[("A", 6.0), ("B", 5.0)]);
        let supervised = to_map(&[("A", 4.0), ("B", 4.0)]);
        let mut per_cell = BTreeMap::new();
        per_cell.insert(apair("A", "d1"), (6.19, 12.49));
        per_cell.insert(apair("A", "d2"), (5.0, 6.0));
        let report = degradation(&gzsl, &supervised, Some(&per_cell)).unwrap();
        let cell = report.extreme_cell.unwrap();
        assert_eq!(cell.dataset, "d1");
        assert!((cell.pct - 101.8).abs() < 0.1);
        assert!((report.average_pct - (50.0 + 25.0) / 2.0).abs() < 1e-9);
        assert_eq!(report.max_method, "A");
    }

    #[test]
    fn degradation_contract_errors() {
        let gzsl = to_map(&[("A", 6.0)]);
        assert!(matches!(
            degradation(&gzsl, &to_map(&[("B", 4.0)]), None),
            Err(MetricsError::MethodSetMismatch(_))
        ));
        assert!(matches!(
            degradation(&gzsl, &to_map(&[("A", 0.0)]), None),
            Err(MetricsError::ZeroSupervisedMae(_))
        ));
    }

    #[test]
    fn cells_csv_recomputes_harmonic() {
        let csv = "method,dataset,seen_mae,unseen_mae\nReg,AFAD,3.03,4.60\n";
        let cells = read_cells_csv(csv.as_bytes()).unwrap();
        let cell = &cells[&apair("Reg", "AFAD")];
        assert!((cell.h - 3.65).abs() < 0.005);
    }

    proptest! {
        #[test]
        fn harmonic_dominated_by_other_means(s in 0.0f64..100.0, u in 0.0f64..100.0) {
            let h = harmonic_mean(s, u).unwrap();
            let geometric = (s * u).sqrt();
            let arithmetic = (s + u) / 2.0;
            prop_assert!(h <= geometric + 1e-12);
            prop_assert!(geometric <= arithmetic + 1e-12);
            prop_assert!(h <= 2.0 * s.min(u) + 1e-12);
            prop_assert!(h >= 0.0);
            prop_assert!(h <= s.max(u) + 1e-12);
        }

        #[test]
        fn harmonic_symmetric_and_scale_equivariant(s in 0.0f64..50.0, u in 0.0f64..50.0, c in 0.1f64..10.0) {
            let h = harmonic_mean(s, u).unwrap();
            prop_assert!((harmonic_mean(u, s).unwrap() - h).abs() < 1e-12);
            prop_assert!((harmonic_mean(c * s, c * u).unwrap() - c * h).abs() < 1e-9);
        }

        #[test]
        fn mae_translation_bound(
            truth_ages in proptest::collection::vec(0.0f64..101.0, 1..40),
            noise in proptest::collection::vec(-10.0f64..10.0, 40),
            delta in 0.0f64..15.0,
        ) {
            let truths: BTreeMap<String, f64> = truth_ages
                .iter()
                .enumerate()
                .map(|(i, &a)| (format!("s{i}"), a))
                .collect();
            let predicted: BTreeMap<String, f64> = truth_ages
                .iter()
                .zip(&noise)
                .enumerate()
                .map(|(i, (&a, &n))| (format!("s{i}"), a + n))
                .collect();
            let shifted: BTreeMap<String, f64> =
                predicted.iter().map(|(k, v)| (k.clone(), v + delta)).collect();
            let subset: BTreeSet<String> = truths.keys().cloned().collect();
            let base = mae(&predicted, &truths, &subset).unwrap();
            let moved = mae(&shifted, &truths, &subset).unwrap();
            // Shifting all predictions by delta changes MAE by at most delta.
            prop_assert!((moved - base).abs() <= delta + 1e-9);
            // And by exactly delta when every residual keeps its sign.
            if predicted.iter().all(|(k, v)| v + delta >= truths[k]) && predicted.iter().all(|(k, v)| *v >= truths[k]) {
                prop_assert!(((moved - base) - delta).abs() < 1e-9);
            }
        }
    }
}
