use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ns_fourier::harness::{
    compare_dirs, load_config, oracle_check_dir, run_sweep, ExperimentConfig, Preset, SweepReport,
};

#[derive(Parser)]
#[command(name = "ns-fourier", version, about = "Taylor-series Fourier-Galerkin Navier-Stokes sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a JSON config file.
    Run { config: PathBuf },
    /// Run a built-in initial condition (paper-example, single-mode, random).
    Preset {
        name: String,
        #[arg(long = "vmax", num_args = 1.., value_delimiter = ',')]
        v_max: Option<Vec<f64>>,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[arg(long = "N", alias = "n", num_args = 1.., value_delimiter = ',')]
        bounds: Option<Vec<usize>>,
        #[arg(long)]
        pmax: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        phase_seed: Option<u64>,
        /// Use the FFT convolution path.
        #[arg(long)]
        fast: bool,
        /// Cross-check likely-convergent runs with RK4.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        oracle_dt: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare two run directories of different N.
    Compare { a: PathBuf, b: PathBuf },
    /// Integrate a stored run with RK4 and report the gap to its Taylor sum.
    OracleCheck {
        dir: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn print_report(report: &SweepReport) {
    print!("{}", report.summary_csv());
    for point in &report.points {
        let v = point.v_max.map_or_else(|| "ic".to_string(), |v| v.to_string());
        println!(
            "v_max={v} t={}: {} (monotonicity violations: {}, anomalies: {})",
            point.t, point.extrapolation, point.monotonicity_violations, point.anomalies
        );
        for c in &point.comparisons {
            if let Some(d) = c.max_rel_disagreement {
                println!("  N={} vs N={}: max relative disagreement {d:.3e}", c.small_bound, c.large_bound);
            }
        }
    }
    for record in &report.records {
        if let Some(e) = &record.error {
            eprintln!("N={} t={}: {e}", record.bound, record.t);
        }
        if let Some(check) = &record.oracle {
            match (check.max_abs_difference, &check.skipped) {
                (Some(d), _) => println!("N={} t={}: oracle max |diff| {d:.3e} (dt={})", record.bound, record.t, check.dt),
                (None, Some(why)) => println!("N={} t={}: oracle skipped: {why}", record.bound, record.t),
                _ => {}
            }
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config } => {
            let config = load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            print_report(&run_sweep(&config)?);
        }
        Command::Preset { name, v_max, t, bounds, pmax, alpha, out, phase_seed, fast, oracle, oracle_dt, workers } => {
            let preset = Preset::from_name(&name)?;
            let mut config = ExperimentConfig::for_preset(preset);
            if let Some(v) = v_max {
                config.v_max = Some(v);
            }
            if let Some(t) = t {
                config.t = t;
            }
            if let Some(n) = bounds {
                config.n = n;
            }
            if let Some(p) = pmax {
                config.p_max = p;
            }
            if let Some(a) = alpha {
                config.alpha = a;
            }
            config.output_dir = out;
            config.phase_seed = phase_seed;
            config.fast_convolution = fast;
            config.oracle = oracle;
            config.oracle_dt = oracle_dt;
            config.workers = workers;
            print_report(&run_sweep(&config)?);
        }
        Command::Compare { a, b } => {
            let cmp = compare_dirs(&a, &b)?;
            println!("{}", serde_json::to_string_pretty(&cmp)?);
        }
        Command::OracleCheck { dir, dt } => {
            let check = oracle_check_dir(&dir, dt)?;
            println!("{}", serde_json::to_string_pretty(&check)?);
        }
    }
    Ok(())
}
