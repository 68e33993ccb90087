//! `stmimo`: simulate scenes, run single estimates and Monte Carlo benchmarks.
//!
//! Exit status is 0 on success, 1 for usage or configuration errors and 2 when
//! a run fails.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use stmimo::estimator::Method;
use stmimo::experiments::{
    emit_csv, format_g9, parse_methods, resolve_threads, run_experiment, run_method, with_threads,
    ExperimentConfig, ExperimentKind, Preset,
};
use stmimo::frontend::{direct_synthesis, run_chain, ChainOptions, DecimateOptions, FastTimeOptions};
use stmimo::scene::{sample_scene, trial_rng};
use stmimo::{Error, TargetScene64};

#[derive(Parser, Debug)]
#[command(name = "stmimo", version, about = "Slow-time MIMO radar DOD/DOA estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one scene's received tensor, and optionally its range-Doppler map, as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Tensor CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the fast-time chain and write receiver 0's range-Doppler magnitude here.
        #[arg(long, value_name = "PATH")]
        range_doppler: Option<PathBuf>,
    },
    /// Estimate DOD/DOA pairs for one scene and print them in degrees.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Feed the proposed method the fast-time chain output instead of the direct tensor.
        #[arg(long)]
        chain: bool,
    },
    /// Run an RMSE or resolution sweep and write the result table.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo trials per SNR point.
        #[arg(long)]
        trials: Option<usize>,
        /// CSV destination (stdout when omitted); a `.meta` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: STMIMO_THREADS, else all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the small 4x4x32 preset instead of the full-size one.
    #[arg(long)]
    desk: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// SNR in dB, comma-separated. `simulate` and `estimate` take one value.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Methods, comma-separated: proposed, parafac_small, esprit.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    noiseless: bool,
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Scene(_) => Failure::Usage(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { common, out, range_doppler } => simulate(&common, out.as_deref(), range_doppler.as_deref()),
        Command::Estimate { common, chain } => estimate(&common, chain),
        Command::Benchmark { common, trials, out, threads } => {
            let mut cfg = load_config(&common)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if out.is_some() {
                cfg.output = out;
            }
            cfg.validate()?;
            let threads = resolve_threads(threads)?;
            let table = with_threads(threads, || run_experiment(&cfg))??;
            match &cfg.output {
                Some(path) => emit_csv(&table, path)?,
                None => io::stdout()
                    .write_all(table.to_csv().as_bytes())
                    .context("writing to stdout")
                    .map_err(runtime)?,
            }
            Ok(())
        }
    }
}

/// Config file (or preset) with command-line overrides applied.
fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::preset(
            ExperimentKind::Rmse,
            if common.desk { Preset::Desk } else { Preset::Paper },
        ),
    };
    if common.config.is_some() && common.desk {
        return Err(usage(anyhow!("--desk selects a preset and cannot be combined with --config")));
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(snr) = &common.snr {
        cfg.snr_grid = snr.clone();
    }
    if let Some(m) = &common.method {
        cfg.methods = parse_methods(m)?;
    }
    cfg.noiseless |= common.noiseless;
    cfg.validate()?;
    Ok(cfg)
}

/// The single SNR used by `simulate` and `estimate`: `--noiseless`, else one
/// `--snr` value, else noiseless.
fn single_snr(common: &Common, cfg: &ExperimentConfig) -> Result<f64, Failure> {
    if cfg.noiseless {
        return Ok(f64::INFINITY);
    }
    match common.snr.as_deref() {
        None => Ok(f64::INFINITY),
        Some([s]) => Ok(*s),
        Some(v) => Err(usage(anyhow!("expected one --snr value, got {}", v.len()))),
    }
}

fn scene_of(cfg: &ExperimentConfig) -> Result<TargetScene64, Failure> {
    let scene = sample_scene(&cfg.scene, &mut trial_rng(cfg.seed, 0))?;
    scene.validate(&cfg.radar)?;
    Ok(scene)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).map_err(runtime)?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn chain_options(cfg: &ExperimentConfig, snr_db: f64) -> ChainOptions<f64> {
    ChainOptions {
        fast_time: FastTimeOptions {
            snr_db: snr_db.is_finite().then_some(snr_db),
            ..FastTimeOptions::noiseless(&cfg.radar)
        },
        decimate: DecimateOptions::default(),
    }
}

fn simulate(common: &Common, out: Option<&Path>, rd: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let snr = single_snr(common, &cfg)?;
    let scene = scene_of(&cfg)?;
    let y = direct_synthesis(&scene, &cfg.radar, snr, &mut trial_rng(cfg.seed, 1))?;

    let write = |w: &mut dyn Write| -> io::Result<()> {
        writeln!(w, "m,n,q,re,im")?;
        let (d1, d2, d3) = y.dims();
        let data = y.as_slice();
        for i in 0..d1 {
            for j in 0..d2 {
                for k in 0..d3 {
                    let z = data[(i * d2 + j) * d3 + k];
                    writeln!(w, "{i},{j},{k},{},{}", format_g9(z.re), format_g9(z.im))?;
                }
            }
        }
        w.flush()
    };
    write(&mut *open_out(out)?).context("writing tensor").map_err(runtime)?;

    if let Some(path) = rd {
        let chain = run_chain(&scene, &cfg.radar, &chain_options(&cfg, snr), &mut trial_rng(cfg.seed, 2))?;
        let mut w = open_out(Some(path))?;
        chain
            .range_doppler
            .write_csv(0, &mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(runtime)?;
    }
    Ok(())
}

fn estimate(common: &Common, chain: bool) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let snr = single_snr(common, &cfg)?;
    let scene = scene_of(&cfg)?;
    let methods = if common.method.is_some() { cfg.methods.clone() } else { vec![Method::Proposed] };
    if chain && methods.iter().any(|&m| m != Method::Proposed) {
        return Err(usage(anyhow!("--chain applies to the proposed method only")));
    }

    let mut out = String::from("method,target,dod_deg,doa_deg\n");
    for method in methods {
        let result = if chain {
            let restored = run_chain(&scene, &cfg.radar, &chain_options(&cfg, snr), &mut trial_rng(cfg.seed, 2))?.restored;
            stmimo::estimator::estimate_proposed(
                &restored,
                &stmimo::scene::build_mask(&cfg.radar),
                scene.k(),
                &cfg.als,
            )
        } else {
            run_method(method, &scene, &cfg, snr, 0)
        }
        .with_context(|| format!("{method} failed"))
        .map_err(runtime)?;
        if result.flags.any() {
            eprintln!("warning: {method}: {:?}", result.flags);
        }
        for (idx, (dod, doa)) in result.pairs_deg().into_iter().enumerate() {
            out.push_str(&format!("{method},{idx},{},{}\n", format_g9(dod), format_g9(doa)));
        }
    }
    io::stdout().write_all(out.as_bytes()).context("writing to stdout").map_err(runtime)
}
