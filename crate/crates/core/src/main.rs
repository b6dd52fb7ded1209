use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gzsl_age::ingest::{filter_no_face, histogram, parse_manifest, AgeGroupConfig};
use gzsl_age::metrics::{
    aggregate, degradation, evaluate, read_cells_csv, read_supervised_csv, EvalSplit, PredictionSet,
};
use gzsl_age::selftest::run_kernel_self_test;
use gzsl_age::splitter::{
    split_with_ids, split_without_ids, SplitFractions, SplitManifest, SplitSummary,
};
use gzsl_age::{split_stats, verify};

#[derive(Parser)]
#[command(
    name = "gzsl-age",
    version,
    about = "Build, audit, and score generalized zero-shot age-estimation splits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Val,
    Test,
}

impl From<SplitArg> for EvalSplit {
    fn from(value: SplitArg) -> Self {
        match value {
            SplitArg::Val => EvalSplit::Val,
            SplitArg::Test => EvalSplit::Test,
        }
    }
}

/// Run configuration from flags and an optional JSON config file; explicit
/// flags win over file values, which win over the defaults (18, 60, 0.8,
/// 0.1).
#[derive(clap::Args, Clone, Debug)]
struct ConfigFlags {
    /// Lower adult bound in years (minors are below this).
    #[arg(long)]
    a_min: Option<u32>,
    /// Upper adult bound in years, exclusive (elders are at or above this).
    #[arg(long)]
    a_max: Option<u32>,
    /// Train fraction of the adult pool.
    #[arg(long)]
    alpha: Option<f64>,
    /// Validation fraction of the adult pool.
    #[arg(long)]
    beta: Option<f64>,
    /// Shuffle seed; required (and only used) for manifests without subject
    /// ids.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file with any of a_min, a_max, alpha, beta, seed.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    a_min: Option<u32>,
    a_max: Option<u32>,
    alpha: Option<f64>,
    beta: Option<f64>,
    seed: Option<u64>,
}

struct RunConfig {
    config: AgeGroupConfig,
    fractions: SplitFractions,
    seed: Option<u64>,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<RunConfig> {
        let file: FileConfig = match &self.config {
            Some(path) => serde_json::from_reader(open(path)?)
                .with_context(|| format!("invalid config file {}", path.display()))?,
            None => FileConfig::default(),
        };
        let a_min = self.a_min.or(file.a_min).unwrap_or(18);
        let a_max = self.a_max.or(file.a_max).unwrap_or(60);
        let alpha = self.alpha.or(file.alpha).unwrap_or(0.8);
        let beta = self.beta.or(file.beta).unwrap_or(0.1);
        Ok(RunConfig {
            config: AgeGroupConfig::new(a_min, a_max)?,
            fractions: SplitFractions::new(alpha, beta)?,
            seed: self.seed.or(file.seed),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Construct a folder assignment from an annotation manifest.
    Split {
        /// Annotation manifest (CSV with sample_id, age, face_ok columns).
        #[arg(long)]
        input: PathBuf,
        /// Split CSV to write; a .summary.json sibling is written next to it.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        run: ConfigFlags,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Check a split against the benchmark invariants. Exits nonzero on any
    /// violation.
    Verify {
        /// The annotation manifest the split was built from.
        #[arg(long)]
        input: PathBuf,
        /// The split CSV to verify.
        #[arg(long)]
        split: PathBuf,
        #[command(flatten)]
        run: ConfigFlags,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Per-folder counts and percentages of a split.
    Stats {
        /// The split CSV to summarize.
        #[arg(long)]
        split: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Age histogram of a manifest as a bin_start,count table.
    Histogram {
        #[arg(long)]
        input: PathBuf,
        /// Bin width in years.
        #[arg(long, default_value_t = 1)]
        bin_width: u32,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score predictions on one evaluation split of a split manifest.
    Evaluate {
        /// Which evaluation split to score.
        #[arg(long, value_enum)]
        split: SplitArg,
        /// The split CSV assigning samples to folders.
        #[arg(long)]
        manifest: PathBuf,
        /// The annotation manifest carrying ground-truth ages.
        #[arg(long)]
        truth: PathBuf,
        /// Predictions as a sample_id,predicted_age table.
        #[arg(long)]
        pred: PathBuf,
        /// Method name recorded in the output.
        #[arg(long, default_value = "method")]
        method: String,
        #[command(flatten)]
        run: ConfigFlags,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Aggregate a method x dataset metrics table; with a supervised
    /// baseline table, also report per-method degradation.
    Report {
        /// GZSL results as a method,dataset,seen_mae,unseen_mae table.
        #[arg(long)]
        gzsl: PathBuf,
        /// Supervised baselines as a method,dataset,mae table.
        #[arg(long)]
        supervised: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run the kernel self-test battery, or call one kernel on explicit
    /// vectors from a JSON document. Exits nonzero if any battery check
    /// fails.
    Kernels {
        /// JSON kernel call, e.g. {"kernel":"median_age","probs":[...]};
        /// runs the battery when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn run_split(input: &Path, output: &Path, run: &ConfigFlags, format: Format) -> Result<ExitCode> {
    let RunConfig {
        config,
        fractions,
        seed,
    } = run.resolve()?;
    let dataset_name = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let raw = parse_manifest(open(input)?, &dataset_name)?;
    let (filtered, mut filter_stats) = filter_no_face(&raw);

    let split = if filtered.has_subject_ids && !filtered.is_empty() {
        split_with_ids(&filtered, &config, &fractions)?
    } else {
        let Some(seed) = seed else {
            bail!(
                "manifest {dataset_name:?} has no subject ids; pass --seed for the \
                 deterministic age-only split"
            );
        };
        split_without_ids(&filtered, &config, &fractions, seed)
    };
    filter_stats.filtered_exclusivity = split.discarded.len();
    filter_stats.selected = split.assignments.len();

    split.write_csv(create(output)?)?;
    let summary = SplitSummary::compute(&split, &filtered);
    let summary_path = output.with_extension("summary.json");
    serde_json::to_writer_pretty(create(&summary_path)?, &summary)?;

    let violations = verify(&split, &filtered, &config);
    if !violations.is_empty() {
        for violation in &violations {
            eprintln!("{violation}");
        }
        bail!("constructed split failed self-verification");
    }

    let stats = split_stats(&split);
    match format {
        Format::Text => {
            println!(
                "{}: {} available, {} without faces, {} discarded for exclusivity, {} assigned",
                dataset_name,
                filter_stats.available,
                filter_stats.filtered_no_face,
                filter_stats.filtered_exclusivity,
                filter_stats.selected
            );
            print!("{}", stats.render_text());
            println!("split written to {}", output.display());
            println!("summary written to {}", summary_path.display());
        }
        Format::Structured => {
            let doc = serde_json::json!({
                "dataset": dataset_name,
                "filter": filter_stats,
                "stats": stats,
                "split_path": output.display().to_string(),
                "summary_path": summary_path.display().to_string(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(input: &Path, split: &Path, run: &ConfigFlags, format: Format) -> Result<ExitCode> {
    let RunConfig { config, .. } = run.resolve()?;
    let dataset_name = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let raw = parse_manifest(open(input)?, &dataset_name)?;
    let (filtered, _) = filter_no_face(&raw);
    let manifest = SplitManifest::read_csv(open(split)?, config, SplitFractions::default())?;
    let violations = verify(&manifest, &filtered, &config);
    match format {
        Format::Text => {
            for violation in &violations {
                println!("{violation}");
            }
            println!("{} violations", violations.len());
        }
        Format::Structured => println!("{}", serde_json::to_string_pretty(&violations)?),
    }
    Ok(if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_stats(split: &Path, format: Format) -> Result<ExitCode> {
    let manifest = SplitManifest::read_csv(
        open(split)?,
        AgeGroupConfig::default(),
        SplitFractions::default(),
    )?;
    let stats = split_stats(&manifest);
    match format {
        Format::Text => print!("{}", stats.render_text()),
        Format::Structured => println!("{}", serde_json::to_string_pretty(&stats)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_histogram(input: &Path, bin_width: u32, output: Option<&Path>) -> Result<ExitCode> {
    let dataset_name = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let manifest = parse_manifest(open(input)?, &dataset_name)?;
    let bins = histogram(&manifest, bin_width)?;
    let mut rendered = String::from("bin_start,count\n");
    for (start, count) in bins {
        rendered.push_str(&format!("{start},{count}\n"));
    }
    match output {
        Some(path) => create(path)?.write_all(rendered.as_bytes())?,
        None => print!("{rendered}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_evaluate(
    split: SplitArg,
    manifest_path: &Path,
    truth: &Path,
    pred: &Path,
    method: &str,
    run: &ConfigFlags,
    format: Format,
) -> Result<ExitCode> {
    let RunConfig { config, .. } = run.resolve()?;
    let dataset_name = truth
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let truths_manifest = parse_manifest(open(truth)?, &dataset_name)?;
    let truths: BTreeMap<String, f64> = truths_manifest
        .records
        .iter()
        .map(|r| (r.sample_id.clone(), r.age as f64))
        .collect();
    let split_manifest =
        SplitManifest::read_csv(open(manifest_path)?, config, SplitFractions::default())?;
    let predictions = PredictionSet::from_csv(open(pred)?, method, &dataset_name, split.into())?;
    let result = evaluate(&predictions, &split_manifest, &truths)?;
    match format {
        Format::Text => {
            println!(
                "{method} on {dataset_name} ({:?}): seen MAE {:.4} ({} samples), unseen MAE \
                 {:.4} ({} samples), harmonic mean {:.4}",
                predictions.split,
                result.seen_mae,
                result.n_seen,
                result.unseen_mae,
                result.n_unseen,
                result.harmonic
            );
        }
        Format::Structured => println!("{}", serde_json::to_string_pretty(&result)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_report(gzsl: &Path, supervised: Option<&Path>, format: Format) -> Result<ExitCode> {
    let cells = read_cells_csv(open(gzsl)?)?;
    let report = aggregate(&cells)?;

    let degradation_report = match supervised {
        Some(path) => {
            let baseline = read_supervised_csv(open(path)?)?;
            for key in cells.keys() {
                if !baseline.contains_key(key) {
                    bail!("supervised table is missing cell ({}, {})", key.0, key.1);
                }
            }
            for key in baseline.keys() {
                if !cells.contains_key(key) {
                    bail!("gzsl table is missing cell ({}, {})", key.0, key.1);
                }
            }
            let mut gzsl_all = BTreeMap::new();
            for row in &report.rows {
                gzsl_all.insert(row.method.clone(), row.all.h);
            }
            let mut supervised_all = BTreeMap::new();
            for row in &report.rows {
                let values: Vec<f64> = report
                    .datasets
                    .iter()
                    .map(|d| baseline[&(row.method.clone(), d.clone())])
                    .collect();
                supervised_all.insert(
                    row.method.clone(),
                    values.iter().sum::<f64>() / values.len() as f64,
                );
            }
            let per_cell: BTreeMap<(String, String), (f64, f64)> = cells
                .iter()
                .map(|(key, triple)| (key.clone(), (baseline[key], triple.h)))
                .collect();
            Some(degradation(&gzsl_all, &supervised_all, Some(&per_cell))?)
        }
        None => None,
    };

    match format {
        Format::Text => {
            print!("{}", report.render_text());
            if let Some(deg) = &degradation_report {
                println!();
                print!("{}", deg.render_text());
            }
        }
        Format::Structured => {
            let doc = serde_json::json!({
                "aggregate": report,
                "degradation": degradation_report,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_kernels(input: Option<&Path>, format: Format) -> Result<ExitCode> {
    if let Some(path) = input {
        let call: serde_json::Value = serde_json::from_reader(open(path)?)
            .with_context(|| format!("invalid kernel call document {}", path.display()))?;
        let result = kernel_call(&call)?;
        match format {
            Format::Text => println!("{result}"),
            Format::Structured => println!("{}", serde_json::to_string_pretty(&result)?),
        }
        return Ok(ExitCode::SUCCESS);
    }
    let report = run_kernel_self_test();
    match format {
        Format::Text => print!("{}", report.render_text()),
        Format::Structured => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

/// Dispatch one kernel call described by a JSON document: a `kernel` name
/// plus its explicit vector and scalar arguments. The grid defaults to the
/// full 0..=101 range and can be overridden with `"grid": {"lo": .., "hi": ..}`.
fn kernel_call(doc: &serde_json::Value) -> Result<serde_json::Value> {
    use gzsl_age::heads::{self, AgeGrid, ProbabilityVector, SoftLabel};

    let name = doc["kernel"]
        .as_str()
        .ok_or_else(|| anyhow::anyhow!("kernel call needs a \"kernel\" name"))?;
    let grid = match &doc["grid"] {
        serde_json::Value::Null => AgeGrid::full(),
        spec => AgeGrid::new(
            spec["lo"].as_u64().unwrap_or(0) as u32,
            spec["hi"]
                .as_u64()
                .ok_or_else(|| anyhow::anyhow!("grid override needs \"hi\""))? as u32,
        )?,
    };
    let vector = |field: &str| -> Result<Vec<f64>> {
        doc[field]
            .as_array()
            .ok_or_else(|| anyhow::anyhow!("kernel {name} needs a {field:?} array"))?
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| anyhow::anyhow!("{field} must hold numbers"))
            })
            .collect()
    };
    let scalar = |field: &str, default: f64| doc[field].as_f64().unwrap_or(default);
    let target = |field: &str| -> Result<u32> {
        doc[field]
            .as_u64()
            .map(|v| v as u32)
            .ok_or_else(|| anyhow::anyhow!("kernel {name} needs an integer {field:?}"))
    };
    let soft_label = |field: &str, target: u32| -> Result<SoftLabel> {
        Ok(SoftLabel {
            q: ProbabilityVector::new(vector(field)?)?,
            target,
            spread: scalar("spread", 0.0),
        })
    };
    let probs =
        |field: &str| -> Result<ProbabilityVector> { Ok(ProbabilityVector::new(vector(field)?)?) };

    let result = match name {
        "softmax" => serde_json::json!(heads::softmax(&vector("logits")?)?.values()),
        "expected_age" => serde_json::json!(heads::expected_age(&probs("probs")?, &grid)?),
        "median_age" => serde_json::json!(heads::median_age(&probs("probs")?, &grid)?),
        "gaussian_label" => serde_json::json!(heads::gaussian_label(
            target("target")?,
            scalar("sigma", 2.0),
            &grid
        )?
        .q
        .values()),
        "sord_label" => {
            serde_json::json!(
                heads::sord_label(target("target")?, scalar("scale", 5.0), &grid)?
                    .q
                    .values()
            )
        }
        "kl_loss" => {
            let q = soft_label("q", doc["target"].as_u64().unwrap_or(0) as u32)?;
            serde_json::json!(heads::kl_loss(&q, &probs("p")?)?)
        }
        "dldl_v2_loss" => {
            let q = soft_label("q", target("target")?)?;
            serde_json::json!(heads::dldl_v2_loss(
                &q,
                &probs("p")?,
                scalar("lambda", 1.0),
                &grid
            )?)
        }
        "mean_variance_loss" => serde_json::json!(heads::mean_variance_loss(
            &probs("p")?,
            target("target")?,
            scalar("w_m", 0.2),
            scalar("w_v", 0.05),
            &grid
        )?),
        "rank_encode" => {
            serde_json::json!(heads::rank_encode(target("target")?, &grid)?.to_probs())
        }
        "rank_decode" => serde_json::json!(heads::rank_decode(
            &vector("probs")?,
            scalar("threshold", 0.5),
            &grid
        )?),
        "corn_decode" => serde_json::json!(heads::corn_decode(
            &vector("conditionals")?,
            scalar("threshold", 0.5),
            &grid
        )?),
        other => bail!(
            "unknown kernel {other:?}; expected one of softmax, expected_age, median_age, \
             gaussian_label, sord_label, kl_loss, dldl_v2_loss, mean_variance_loss, \
             rank_encode, rank_decode, corn_decode"
        ),
    };
    Ok(serde_json::json!({ "kernel": name, "result": result }))
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Split {
            input,
            output,
            run,
            format,
        } => run_split(&input, &output, &run, format),
        Command::Verify {
            input,
            split,
            run,
            format,
        } => run_verify(&input, &split, &run, format),
        Command::Stats { split, format } => run_stats(&split, format),
        Command::Histogram {
            input,
            bin_width,
            output,
        } => run_histogram(&input, bin_width, output.as_deref()),
        Command::Evaluate {
            split,
            manifest,
            truth,
            pred,
            method,
            run,
            format,
        } => run_evaluate(split, &manifest, &truth, &pred, &method, &run, format),
        Command::Report {
            gzsl,
            supervised,
            format,
        } => run_report(&gzsl, supervised.as_deref(), format),
        Command::Kernels { input, format } => run_kernels(input.as_deref(), format),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
