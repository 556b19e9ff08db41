//! Command-line front end: single experiments, parameter sweeps with
//! optional learning-curve tracking, and full trace dumps.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use flate2::write::GzEncoder;
use flate2::Compression;

use ra_sim::config::{ConfigDraft, Scheme, SimConfig};
use ra_sim::engine::{run_simulation, Engine};
use ra_sim::harness::{self, ExperimentResult, GainCurve};
use ra_sim::rng::{stream_rng, Stream};
use ra_sim::strategy::StrategyMatrix;
use ra_sim::traffic::place_devices;
use ra_sim::{baselines, export};

#[derive(Parser)]
#[command(name = "ra-sim", version, about = "Random-access simulator for correlated machine-type traffic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config file (flat key = value format)
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set lambda=0.04 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override base_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replications (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (all replications of the configured scenario)
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter over a list of values
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to sweep: lambda | mu | alpha | beta | n_devices | k_slots
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 0.01,0.04,0.08
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Schemes to run at every sweep point (default: the config's)
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
        /// Also track LRI learning curves and write gain_curve.csv
        #[arg(long)]
        gain: bool,
    },
    /// Dump the full per-frame trace of replication 0
    Trace {
        #[command(flatten)]
        common: Common,
        /// Gzip the trace to trace.csv.gz
        #[arg(long)]
        gzip: bool,
    },
}

fn load(common: &Common) -> anyhow::Result<SimConfig> {
    let text = fs::read_to_string(&common.config)?;
    let mut draft = ConfigDraft::parse(&text)?;
    for kv in &common.sets {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got '{kv}'"))?;
        draft
            .set(key.trim(), value.trim())
            .map_err(|e| anyhow::anyhow!(e))?;
    }
    if let Some(seed) = common.seed {
        draft.set("base_seed", &seed.to_string()).unwrap();
    }
    let config = draft.build()?;
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    fs::create_dir_all(&common.out)?;
    Ok(config)
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn echo_config(out: &Path, config: &SimConfig) -> anyhow::Result<()> {
    write(
        &out.join("config_echo.json"),
        &format!("{}\n", serde_json::to_string_pretty(config)?),
    )
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { common } => {
            let config = load(&common)?;
            let result = harness::run_experiment(&config);
            summarize(&result);
            write(
                &common.out.join("metrics.csv"),
                &export::metrics_csv([("", 0.0, &result)]),
            )?;
            echo_config(&common.out, &config)?;
        }
        Command::Sweep {
            common,
            param,
            values,
            schemes,
            gain,
        } => {
            let config = load(&common)?;
            let schemes: Vec<Scheme> = if schemes.is_empty() {
                vec![config.scheme]
            } else {
                schemes
                    .iter()
                    .map(|s| Scheme::from_str(s).map_err(|e| anyhow::anyhow!(e)))
                    .collect::<anyhow::Result<_>>()?
            };
            let mut results: Vec<(f64, ExperimentResult)> = Vec::new();
            for &scheme in &schemes {
                let mut cfg = config.clone();
                cfg.scheme = scheme;
                cfg.validate()?;
                for (value, result) in values.iter().copied().zip(harness::sweep(&cfg, &param, &values)?) {
                    summarize(&result);
                    results.push((value, result));
                }
            }
            write(
                &common.out.join("metrics.csv"),
                &export::metrics_csv(results.iter().map(|(v, r)| (param.as_str(), *v, r))),
            )?;
            if gain {
                let mut curves: Vec<(f64, GainCurve)> = Vec::new();
                for &value in &values {
                    let mut cfg = harness::with_param(&config, &param, value)?;
                    cfg.scheme = Scheme::Lri;
                    curves.push((value, harness::gain_experiment(&cfg)?));
                }
                write(
                    &common.out.join("gain_curve.csv"),
                    &export::gain_csv(curves.iter().map(|(v, c)| (param.as_str(), *v, c))),
                )?;
            }
            echo_config(&common.out, &config)?;
        }
        Command::Trace { common, gzip } => {
            let config = load(&common)?;
            let mut placement = stream_rng(config.base_seed, 0, Stream::Placement);
            let arena = place_devices(config.side, config.radius, config.n_devices, &mut placement);
            let strategies = match config.scheme {
                Scheme::Mmpc => {
                    let assignment = harness::mmpc_assignment(&config, 0)?;
                    write(
                        &common.out.join("assignment.csv"),
                        &export::assignment_csv(&assignment),
                    )?;
                    assignment
                        .iter()
                        .map(|&s| StrategyMatrix::pure_on_slot(s, config.k_slots, config.beta))
                        .collect()
                }
                Scheme::Saloha => {
                    vec![baselines::saloha_strategy(config.k_slots, config.beta); config.n_devices]
                }
                Scheme::Lri => {
                    vec![StrategyMatrix::uniform(config.k_slots, config.beta); config.n_devices]
                }
            };
            let mut engine = Engine::new(
                config.k_slots,
                config.beta,
                config.alpha,
                config.buffer_policy,
                config.scheme == Scheme::Lri,
                strategies,
            );
            let mut traffic = stream_rng(config.base_seed, 0, Stream::TrafficMeasure);
            let mut policy = stream_rng(config.base_seed, 0, Stream::PolicyMeasure);
            let out = run_simulation(&config, &mut engine, &arena, &mut traffic, &mut policy);
            for snapshot in &out.snapshots {
                write(
                    &common.out.join(format!("strategies_f{}.csv", snapshot.frame)),
                    &export::strategies_csv(&snapshot.strategies),
                )?;
            }
            let trace = export::trace_csv(&out.records);
            if gzip {
                let path = common.out.join("trace.csv.gz");
                let file = fs::File::create(&path)?;
                let mut enc = GzEncoder::new(file, Compression::default());
                enc.write_all(trace.as_bytes())?;
                enc.finish()?;
                eprintln!("wrote {}", path.display());
            } else {
                write(&common.out.join("trace.csv"), &trace)?;
            }
            write(
                &common.out.join("traffic.csv"),
                &export::traffic_csv(&out.records, &out.traffic),
            )?;
            write(
                &common.out.join("strategies.csv"),
                &export::strategies_csv(&engine.strategies),
            )?;
            echo_config(&common.out, &config)?;
        }
    }
    Ok(())
}

fn summarize(result: &ExperimentResult) {
    let a = &result.aggregate;
    eprintln!(
        "{} (λ={}, μ={}, β={}): T = {:.4} ± {:.4}, L = {:.4} ± {:.4} ({} defined / {} reps)",
        result.config.scheme,
        result.config.lambda,
        result.config.mu,
        result.config.beta,
        a.mean_t,
        a.ci95_t,
        a.mean_l,
        a.ci95_l,
        a.defined_replications,
        result.outcomes.len(),
    );
}
