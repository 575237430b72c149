//! Monte-Carlo experiments over seeds, sweep values and baselines, and their
//! export as comma-separated tables plus a key-value manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::{validate_config, ScenarioConfig};
use crate::scheduler::{run_episode, Baseline};
use crate::trace::{real, EpisodeTrace};

/// Header of every summary table, in column order.
pub const SUMMARY_HEADER: &str =
    "sweep_key,sweep_value,baseline,num_seeds,mean_ee,std_ee,mean_aoi,aoi_per_target,violation_rate,mean_backlog,failures";

/// Short sweep names and the config keys they set.
const SWEEP_ALIASES: [(&str, &str); 8] = [
    ("M", "atoms_per_layer"),
    ("L", "num_layers"),
    ("U", "num_users"),
    ("gamma_th", "beampattern_threshold"),
    ("lambda_u", "arrival_rate"),
    ("P_max", "p_max"),
    ("C", "num_rbs"),
    ("V", "lyapunov_v"),
];

/// One swept parameter. Values are in config-file units (dBm for powers).
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

impl Sweep {
    /// Parses `key=v1,v2,...`. The key is a short name (`M`, `L`, `U`,
    /// `gamma_th`, `lambda_u`, `P_max`, `C`, `V`) or a config key.
    pub fn parse(text: &str) -> Result<Sweep> {
        let (key, values) = text
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("sweep `{text}` is not of the form key=v1,v2,...")))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(String::is_empty) {
            return Err(Error::Domain(format!("sweep `{text}` has an empty value")));
        }
        Ok(Sweep { key: key.trim().to_string(), values })
    }

    pub fn config_key(&self) -> &str {
        SWEEP_ALIASES
            .iter()
            .find(|(alias, _)| *alias == self.key)
            .map_or(self.key.as_str(), |(_, key)| key)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub config: ScenarioConfig,
    pub config_path: Option<PathBuf>,
    pub sweep: Option<Sweep>,
    pub baselines: Vec<Baseline>,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(config: ScenarioConfig, baselines: Vec<Baseline>, seeds: Vec<u64>) -> Self {
        ExperimentSpec {
            config,
            config_path: None,
            sweep: None,
            baselines,
            seeds,
            out: None,
        }
    }

    pub fn with_sweep(mut self, sweep: Sweep) -> Self {
        self.sweep = Some(sweep);
        self
    }

    /// The configuration of every sweep cell, each validated. Without a
    /// sweep there is one cell labelled `-`.
    pub fn cells(&self) -> Result<Vec<(String, ScenarioConfig)>> {
        if self.baselines.is_empty() {
            return Err(Error::InvalidConfig(vec!["at least one baseline is required".into()]));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig(vec!["at least one seed is required".into()]));
        }
        let cells = match &self.sweep {
            None => vec![("-".to_string(), self.config.clone())],
            Some(sweep) => sweep
                .values
                .iter()
                .map(|v| {
                    let mut cfg = self.config.clone();
                    cfg.set(sweep.config_key(), v)
                        .map_err(|msg| Error::InvalidConfig(vec![format!("sweep {}: {msg}", sweep.key)]))?;
                    Ok((v.clone(), cfg))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        for (value, cfg) in &cells {
            let bad = validate_config(cfg);
            if !bad.is_empty() {
                return Err(Error::InvalidConfig(
                    bad.iter().map(|v| format!("at sweep value {value}: {v}")).collect(),
                ));
            }
        }
        Ok(cells)
    }

    pub fn sweep_key(&self) -> &str {
        self.sweep.as_ref().map_or("-", |s| s.key.as_str())
    }
}

/// Hex SHA-256 of the canonical config text.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(cfg.to_config_string().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: String,
    pub baseline: Baseline,
    /// Seeds whose episode completed.
    pub num_seeds: usize,
    /// Mean episode objective over completed seeds.
    pub mean_ee: f64,
    /// Sample standard deviation, zero below two seeds.
    pub std_ee: f64,
    pub mean_aoi: f64,
    pub aoi_per_target: Vec<f64>,
    pub violation_rate: f64,
    pub mean_backlog: f64,
    /// Seeds whose episode returned an error, with the message.
    pub failures: Vec<(u64, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub sweep_key: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub baselines: Vec<Baseline>,
    /// Ordered by sweep value, then baseline.
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone)]
pub struct CellTrace {
    pub sweep_value: String,
    pub trace: EpisodeTrace,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub table: SummaryTable,
    /// Completed episodes, in (sweep value, baseline, seed) order.
    pub traces: Vec<CellTrace>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn aggregate(sweep_value: &str, baseline: Baseline, runs: &[(u64, Result<EpisodeTrace>)]) -> SummaryRow {
    let ok: Vec<&EpisodeTrace> = runs.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let failures = runs
        .iter()
        .filter_map(|(seed, r)| r.as_ref().err().map(|e| (*seed, e.to_string())))
        .collect();
    let ee: Vec<f64> = ok.iter().map(|t| t.summary.objective).collect();
    let m = mean(&ee);
    let std_ee = if ee.len() < 2 {
        0.0
    } else {
        (ee.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (ee.len() - 1) as f64).sqrt()
    };
    let targets = ok.iter().map(|t| t.summary.aoi.len()).max().unwrap_or(0);
    let aoi_per_target = (0..targets)
        .map(|k| mean(&ok.iter().filter_map(|t| t.summary.aoi.get(k).copied()).collect::<Vec<_>>()))
        .collect();
    SummaryRow {
        sweep_value: sweep_value.to_string(),
        baseline,
        num_seeds: ok.len(),
        mean_ee: m,
        std_ee,
        mean_aoi: mean(&ok.iter().map(|t| t.summary.mean_aoi()).collect::<Vec<_>>()),
        aoi_per_target,
        violation_rate: mean(&ok.iter().map(|t| t.summary.violation_rate()).collect::<Vec<_>>()),
        mean_backlog: mean(&ok.iter().map(|t| t.summary.mean_backlog).collect::<Vec<_>>()),
        failures,
    }
}

/// Runs every (sweep value, baseline, seed) episode in parallel and reduces
/// them in a fixed order. Episode errors are recorded in their row.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let cells = spec.cells()?;
    let jobs: Vec<(usize, Baseline, u64)> = (0..cells.len())
        .flat_map(|c| {
            spec.baselines
                .iter()
                .flat_map(move |&b| spec.seeds.iter().map(move |&s| (c, b, s)))
        })
        .collect();
    let results: Vec<Result<EpisodeTrace>> = jobs
        .par_iter()
        .map(|&(c, b, s)| run_episode(&cells[c].1, b, s))
        .collect();

    let per_cell = spec.seeds.len();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut results = results.into_iter();
    for (value, _) in &cells {
        for &baseline in &spec.baselines {
            let runs: Vec<(u64, Result<EpisodeTrace>)> =
                spec.seeds.iter().copied().zip(results.by_ref().take(per_cell)).collect();
            rows.push(aggregate(value, baseline, &runs));
            traces.extend(runs.into_iter().filter_map(|(_, r)| r.ok()).map(|trace| CellTrace {
                sweep_value: value.clone(),
                trace,
            }));
        }
    }
    Ok(ExperimentOutput {
        table: SummaryTable {
            sweep_key: spec.sweep_key().to_string(),
            config_hash: config_hash(&spec.config),
            seeds: spec.seeds.clone(),
            baselines: spec.baselines.clone(),
            rows,
        },
        traces,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for r in &self.rows {
            let aoi = if r.aoi_per_target.is_empty() {
                "-".to_string()
            } else {
                r.aoi_per_target.iter().map(|&x| real(x)).collect::<Vec<_>>().join(";")
            };
            let failures = if r.failures.is_empty() {
                "-".to_string()
            } else {
                r.failures.iter().map(|(s, msg)| format!("{s}: {msg}")).collect::<Vec<_>>().join(";")
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&self.sweep_key),
                csv_field(&r.sweep_value),
                r.baseline,
                r.num_seeds,
                real(r.mean_ee),
                real(r.std_ee),
                real(r.mean_aoi),
                aoi,
                real(r.violation_rate),
                real(r.mean_backlog),
                csv_field(&failures)
            );
        }
        out
    }

    pub fn manifest(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let baselines: Vec<&str> = self.baselines.iter().map(|b| b.name()).collect();
        let mut values: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !values.contains(&r.sweep_value.as_str()) {
                values.push(&r.sweep_value);
            }
        }
        format!(
            "version = {}\nconfig_hash = {}\nsweep_key = {}\nsweep_values = {}\nbaselines = {}\nseeds = {}\nrows = {}\n",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.sweep_key,
            values.join(","),
            baselines.join(","),
            seeds.join(","),
            self.rows.len()
        )
    }

    fn table_name(&self) -> String {
        let key: String = self
            .sweep_key
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
            .collect();
        if self.sweep_key == "-" {
            "summary.csv".into()
        } else {
            format!("summary_{key}.csv")
        }
    }
}

/// Writes the summary table and `manifest.txt` into `dir`, creating it if
/// needed, and returns the written paths.
pub fn export_tables(table: &SummaryTable, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::NothingToExport);
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        (dir.join(table.table_name()), table.to_csv()),
        (dir.join("manifest.txt"), table.manifest()),
    ];
    let mut written = Vec::new();
    for (path, body) in files {
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes one trace file per episode under `dir` and returns their paths.
pub fn write_traces(traces: &[CellTrace], sweep_key: &str, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for ct in traces {
        let name = if sweep_key == "-" {
            format!("{}_seed{}.trace", ct.trace.baseline, ct.trace.seed)
        } else {
            format!("{sweep_key}={}_{}_seed{}.trace", ct.sweep_value, ct.trace.baseline, ct.trace.seed)
        };
        let path = dir.join(name);
        fs::write(&path, ct.trace.to_text()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
