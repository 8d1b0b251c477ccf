use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wlgrid_core::harness::{
    case_study, case_study_configs, parse_algorithms, run, sweep_configs, write_outputs, Algorithm,
    RunConfig, RunResult, StudyOverrides,
};
use wlgrid_core::HarnessError;

/// Distributed widely linear frequency estimation for three-phase grids.
#[derive(Parser, Debug)]
#[command(name = "wlgrid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct RunOverrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated algorithms, e.g. D-ACEKF,CEKF,HILBERT.
    #[arg(long, value_parser = parse_algo_list)]
    algos: Option<AlgoList>,
}

#[derive(Debug, Clone)]
struct AlgoList(Vec<Algorithm>);

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario described by a TOML config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Run one of the canonical case studies (1 to 5).
    CaseStudy {
        /// 1 sags, 2 noise, 3 frequency step, 4 Hilbert baseline, 5 bias/variance sweep.
        #[arg(value_parser = clap::value_parser!(u32).range(1..=5))]
        study: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Per-node SNR in dB.
        #[arg(long)]
        snr: Option<f64>,
        /// SNR levels for study 5.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Repeat a scenario over SNR levels and tabulate bias and variance.
    SweepSnr {
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
        /// Base scenario; the Type D bias/variance study when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
}

fn parse_algo_list(s: &str) -> Result<AlgoList, String> {
    parse_algorithms(s).map(AlgoList).map_err(|e| e.to_string())
}

fn apply(cfg: &mut RunConfig, o: &RunOverrides) {
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if let Some(a) = &o.algos {
        cfg.algorithms = a.0.iter().map(|a| a.name().to_string()).collect();
    }
}

fn print_summary(label: &str, r: &RunResult) {
    println!("{label} (config {})", &r.config_hash[..12]);
    for &alg in &r.algorithms {
        let aggs: Vec<_> = r.aggregates.iter().filter(|a| a.algorithm == alg).collect();
        let n = aggs.len() as f64;
        let bias = aggs.iter().map(|a| a.metrics.bias).sum::<f64>() / n;
        let var = aggs.iter().map(|a| a.metrics.variance).sum::<f64>() / n;
        println!("  {:<12} bias {bias:+.3e} Hz  variance {var:.3e} Hz^2", alg.name());
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    let (out, runs, combined) = match cli.command {
        Command::Simulate { config, out, overrides } => {
            let mut cfg = RunConfig::from_file(&config)?;
            apply(&mut cfg, &overrides);
            let result = run(&cfg)?;
            (out, vec![("simulate".to_string(), result)], None)
        }
        Command::CaseStudy { study, out, snr, levels, overrides } => {
            let o = StudyOverrides {
                trials: overrides.trials,
                seed: overrides.seed,
                algorithms: overrides.algos.map(|a| a.0),
                snr_db: snr,
                snr_levels: levels,
            };
            let runs = case_study(study, &o)?;
            let runs: Vec<_> = runs.into_iter().map(|(label, r)| (format!("cs{study}_{label}"), r)).collect();
            let combined = (study == 5).then_some("cs5_sweep.csv");
            (out, runs, combined)
        }
        Command::SweepSnr { levels, config, out, overrides } => {
            let mut base = match config {
                Some(path) => RunConfig::from_file(&path)?,
                None => case_study_configs(5)?.remove(0).1,
            };
            apply(&mut base, &overrides);
            let runs = sweep_configs(&levels, &base)?
                .into_iter()
                .map(|(label, cfg)| Ok((label, run(&cfg)?)))
                .collect::<Result<Vec<_>, HarnessError>>()?;
            (out, runs, Some("sweep.csv"))
        }
    };
    for (label, r) in &runs {
        print_summary(label, r);
    }
    let written = write_outputs(&out, &runs, combined)?;
    println!("wrote {} files to {}", written.files.len() + 1, out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
