use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use som_cwm::checker::{check_bottom, ReportRecord};
use som_cwm::concept::{ConceptExpr, InclusionKind};
use som_cwm::global::{default_concept_pool, PropertyReport};
use som_cwm::revision::run_trace;
use som_cwm::som::feature_ranges;
use som_cwm::{
    check_strict, check_typicality, derive_specificity, extract_kb, parse_inclusion, CwmModel,
    SemanticModel, SomMap, Stimulus, TrainConfig,
};

use crate::dataset::{read_dataset, read_probes};
use crate::error::{CliError, CliResult};

/// Map shape and training schedule shared by `train` and `trace`.
#[derive(Debug, Clone, clap::Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 6)]
    pub rows: usize,
    #[arg(long, default_value_t = 6)]
    pub cols: usize,
    /// Passes over the data [default: 50 for train, 1 for trace]
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub lr_start: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr_end: f64,
    /// Initial neighbourhood radius [default: half the longer grid side, at least 1]
    #[arg(long)]
    pub radius_start: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub radius_end: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

impl TrainArgs {
    pub fn config(&self, default_epochs: usize) -> CliResult<TrainConfig<f64>> {
        if self.rows == 0 || self.cols == 0 {
            return Err(CliError::Validation(
                "--rows and --cols must be positive".into(),
            ));
        }
        let radius_start = self.radius_start.unwrap_or_else(|| {
            (self.rows.max(self.cols) as f64 / 2.0)
                .max(1.0)
                .max(self.radius_end)
        });
        let cfg = TrainConfig {
            epochs: self.epochs.unwrap_or(default_epochs),
            lr_start: self.lr_start,
            lr_end: self.lr_end,
            radius_start,
            radius_end: self.radius_end,
            seed: self.seed,
            shuffle: true,
        };
        cfg.validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(cfg)
    }

    fn init_map(&self, data: &[Stimulus<f64>]) -> CliResult<SomMap<f64>> {
        let ranges = feature_ranges(data)?;
        Ok(SomMap::init(
            self.rows,
            self.cols,
            ranges.len(),
            self.seed,
            &ranges,
        )?)
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: PathBuf, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_map(path: &Path) -> CliResult<SomMap<f64>> {
    SomMap::from_json(&read(path)?).map_err(|e| CliError::Load {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn load_model(path: &Path) -> CliResult<SemanticModel<f64>> {
    SemanticModel::from_json(&read(path)?).map_err(|e| CliError::Load {
        path: path.into(),
        message: e.to_string(),
    })
}

fn qe_csv(log: &[f64]) -> String {
    let mut out = String::from("epoch,quantization_error\n");
    for (epoch, qe) in log.iter().enumerate() {
        out.push_str(&format!("{epoch},{qe}\n"));
    }
    out
}

/// Writes `map.json` and `qe.csv` (epoch 0 is the untrained map).
pub fn train(data: &Path, out: &Path, args: &TrainArgs) -> CliResult<()> {
    let cfg = args.config(50)?;
    let dataset = read_dataset(data)?;
    let mut map = args.init_map(&dataset.rows)?;
    let mut log = vec![map.quantization_error(&dataset.rows)?];
    log.extend(map.train(&dataset.rows, &cfg)?);
    create_dir(out)?;
    write(out.join("map.json"), map.to_json())?;
    write(out.join("qe.csv"), qe_csv(&log))?;
    println!(
        "trained {}x{} map on {} stimuli for {} epochs: quantization error {} -> {}",
        map.rows,
        map.cols,
        dataset.rows.len(),
        cfg.epochs,
        log[0],
        log[log.len() - 1]
    );
    Ok(())
}

/// Writes `model.json`, `kb.txt`, `reports.jsonl` and `specificity.json`
/// and prints the check table.
pub fn extract(map: &Path, data: &Path, probes: Option<&Path>, out: &Path) -> CliResult<()> {
    let map = load_map(map)?;
    let dataset = read_dataset(data)?;
    let probes = match probes {
        Some(p) => read_probes(p)?,
        None => Vec::new(),
    };
    let model = SemanticModel::build(&map, &dataset.rows, &probes)?;
    let kb = extract_kb(&model);
    create_dir(out)?;
    write(out.join("model.json"), model.to_json())?;
    write(out.join("kb.txt"), kb.to_kb_text())?;
    write(out.join("reports.jsonl"), kb.to_json_lines())?;
    print!("{}", kb.to_table());
    let specificity = derive_specificity(&model)?;
    write(out.join("specificity.json"), specificity.to_json())?;
    Ok(())
}

/// Prints the report for `query` as one JSON line; `Ok(false)` when the
/// inclusion does not hold.
pub fn check(model: &Path, query: &str) -> CliResult<bool> {
    let inclusion =
        parse_inclusion(query).map_err(|e| CliError::Validation(format!("query: {e}")))?;
    let model = load_model(model)?;
    let names: Vec<&str> = model.category_names().collect();
    inclusion.lhs.resolve(names.iter().copied())?;
    inclusion.rhs.resolve(names.iter().copied())?;
    let report = match (inclusion.kind, inclusion.lhs.as_name(), &inclusion.rhs) {
        (InclusionKind::Strict, Some(a), ConceptExpr::Name(b)) => check_strict(&model, a, b)?,
        (InclusionKind::Strict, Some(a), ConceptExpr::Bot) => check_bottom(&model, a)?,
        (InclusionKind::Defeasible, Some(a), ConceptExpr::Name(b)) => {
            check_typicality(&model, a, b)?
        }
        _ => {
            let specificity = derive_specificity(&model)?;
            CwmModel::build(model, specificity)?.check(&inclusion)?
        }
    };
    let record: ReportRecord<f64> = report.to_record();
    println!(
        "{}",
        serde_json::to_string(&record).expect("report serialisation cannot fail")
    );
    Ok(report.holds())
}

/// Output of `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub specificity: Vec<(String, String)>,
    pub preferential: PropertyReport,
    pub klm: PropertyReport,
}

/// Prints the order and KLM report; `Ok(false)` on any violation.
pub fn verify(model: &Path, out: Option<&Path>) -> CliResult<bool> {
    let model = load_model(model)?;
    let specificity = derive_specificity(&model)?;
    let pairs = specificity.pairs().iter().cloned().collect();
    let cwm = CwmModel::build(model, specificity)?;
    let preferential = cwm.verify_preferential();
    let klm = cwm.verify_klm(&default_concept_pool(cwm.base()))?;
    let report = VerifyReport {
        ok: preferential.ok() && klm.ok(),
        specificity: pairs,
        preferential,
        klm,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serialisation cannot fail");
    println!("{text}");
    if let Some(dir) = out {
        create_dir(dir)?;
        write(dir.join("verify.json"), &text)?;
    }
    for check in report.preferential.checks.iter().chain(&report.klm.checks) {
        if !check.passed() && !check.informational {
            eprintln!(
                "violation: {} ({} instance(s) listed)",
                check.check,
                check.violations.len()
            );
            for v in &check.violations {
                eprintln!("  {}", v.instance);
            }
        }
    }
    Ok(report.ok)
}

/// Writes `trace.jsonl` and the final `map.json`.
pub fn trace(data: &Path, out: &Path, args: &TrainArgs) -> CliResult<()> {
    let cfg = args.config(1)?;
    let dataset = read_dataset(data)?;
    let map = args.init_map(&dataset.rows)?;
    let trace = run_trace(map, &dataset.rows, &cfg)?;
    create_dir(out)?;
    write(out.join("trace.jsonl"), trace.to_json_lines())?;
    write(out.join("map.json"), trace.state.map().to_json())?;
    let last = trace
        .steps
        .last()
        .expect("non-empty data gives at least one step");
    println!(
        "{} revision steps; final domain has {} elements and the kb {} inclusions",
        trace.steps.len(),
        last.domain_size,
        last.kb_after.len()
    );
    Ok(())
}
