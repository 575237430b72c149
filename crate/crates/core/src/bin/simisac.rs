use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use simisac::harness::{export_tables, run_experiment, write_traces, ExperimentSpec, Sweep};
use simisac::scenario::{validate_config, ScenarioConfig};
use simisac::scheduler::Baseline;

/// Energy-efficiency scheduler for a SIM-aided ISAC downlink.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config file and list every violated invariant.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run episodes and print their summaries; traces go to --out.
    Run(Common),
    /// Run a sweep and write traces, the summary table and the manifest.
    Sweep(Common),
    /// Run a sweep and write only the summary table and the manifest.
    Export(Common),
}

#[derive(Args)]
struct Common {
    /// Config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds as `a..b` (exclusive), a comma list, or a count `n` meaning `0..n`.
    #[arg(long, default_value = "0..30", value_parser = parse_seeds)]
    seeds: Seeds,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Baselines, comma-separated or repeated. Defaults to all of them,
    /// except `run`, which defaults to `proposed`.
    #[arg(long, value_delimiter = ',')]
    baseline: Vec<Baseline>,
    /// `key=v1,v2,...` with key one of M, L, U, gamma_th, lambda_u, P_max, C, V
    /// or any config key.
    #[arg(long, value_parser = |s: &str| Sweep::parse(s).map_err(|e| e.to_string()))]
    sweep: Option<Sweep>,
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(text: &str) -> Result<Seeds, String> {
    let bad = |_| format!("invalid seed list `{text}`");
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        (a.trim().parse().map_err(bad)?..b.trim().parse().map_err(bad)?).collect()
    } else if text.contains(',') {
        text.split(',').map(|s| s.trim().parse().map_err(bad)).collect::<Result<_, _>>()?
    } else {
        (0..text.trim().parse().map_err(bad)?).collect()
    };
    if seeds.is_empty() {
        return Err(format!("seed list `{text}` is empty"));
    }
    Ok(Seeds(seeds))
}

fn load(path: &Option<PathBuf>) -> simisac::Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn spec(c: Common, default_baselines: &[Baseline]) -> simisac::Result<ExperimentSpec> {
    let baselines = if c.baseline.is_empty() { default_baselines.to_vec() } else { c.baseline };
    let mut spec = ExperimentSpec::new(load(&c.config)?, baselines, c.seeds.0);
    spec.config_path = c.config;
    spec.sweep = c.sweep;
    spec.out = c.out;
    Ok(spec)
}

fn out_dir(spec: &ExperimentSpec) -> simisac::Result<PathBuf> {
    spec.out.clone().ok_or_else(|| simisac::Error::Domain("--out is required".into()))
}

fn execute(cmd: Command) -> simisac::Result<ExitCode> {
    match cmd {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let bad = validate_config(&cfg);
            if bad.is_empty() {
                println!("ok");
                return Ok(ExitCode::SUCCESS);
            }
            for v in &bad {
                println!("{v}");
            }
            Ok(ExitCode::from(2))
        }
        Command::Run(c) => {
            let spec = spec(c, &[Baseline::Proposed])?;
            let out = run_experiment(&spec)?;
            for ct in &out.traces {
                println!("seed={} baseline={} {}", ct.trace.seed, ct.trace.baseline, ct.trace.summary.to_line());
            }
            for row in &out.table.rows {
                for (seed, msg) in &row.failures {
                    eprintln!("seed={seed} baseline={} failed: {msg}", row.baseline);
                }
            }
            if let Some(dir) = &spec.out {
                write_traces(&out.traces, out.table.sweep_key.as_str(), dir)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(c) => {
            let spec = spec(c, &Baseline::ALL)?;
            let dir = out_dir(&spec)?;
            let out = run_experiment(&spec)?;
            write_traces(&out.traces, &out.table.sweep_key, dir.join("traces"))?;
            for p in export_tables(&out.table, &dir)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export(c) => {
            let spec = spec(c, &Baseline::ALL)?;
            let dir = out_dir(&spec)?;
            let out = run_experiment(&spec)?;
            for p in export_tables(&out.table, &dir)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
