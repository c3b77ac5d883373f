//! Command-line interface.
//!
//! Exit status: 0 success, 1 a verification check failed, 2 unusable config
//! or CSV input, 3 the instance violates an assumption (reducible or periodic
//! chain, zero features, inconsistent system), 4 a run diverged.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{apply_overrides, ExperimentConfig, ExplicitMdp, MdpSpec};
use crate::error::{Error, Result};
use crate::experiments::{boyan_instance, rate_fit, read_csv, run_experiment, write_outputs};
use crate::oracle::{Analysis, Setting};
use crate::report::OracleReport;
use crate::verify::verify_instance;

#[derive(Debug, Parser)]
#[command(name = "linear-td", version, about = "Linear TD(lambda) with arbitrary features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the instance exactly and report ranks, margins and the solution set.
    Oracle(Common),
    /// Check the structural assumptions on the instance.
    Verify(Common),
    /// Run TD(lambda) over several seeds and write the convergence curve.
    Run(Common),
    /// Fit the log-log slope of mean d^2 from a run CSV.
    Fit(FitArgs),
    /// Write a built-in instance as a self-contained config file.
    ExportBuiltin(ExportArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; the discounted boyan15 setup when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted-path override, e.g. `--set lambda=0.4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, env = "LINEAR_TD_OUT")]
    pub out: Option<PathBuf>,
    /// Number of runs (seeds 0..N).
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub csv: PathBuf,
    /// Window start.
    #[arg(long, default_value_t = 1e5)]
    pub lo: f64,
    /// Window end.
    #[arg(long, default_value_t = 1e6)]
    pub hi: f64,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(default_value = "boyan15")]
    pub name: String,
    #[arg(long, env = "LINEAR_TD_OUT")]
    pub out: Option<PathBuf>,
}

const DEFAULT_OUT: &str = "out";

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut extra = self.overrides.clone();
        if let Some(n) = self.seeds {
            extra.push(format!("num_runs={n}"));
        }
        if let Some(h) = self.horizon {
            extra.push(format!("horizon={h}"));
        }
        match &self.config {
            Some(p) => ExperimentConfig::load(p, &extra),
            None => {
                let base = ExperimentConfig::boyan(Setting::Discounted { gamma: 0.9 }, 0.0);
                let mut v = serde_json::to_value(&base)?;
                apply_overrides(&mut v, &extra)?;
                ExperimentConfig::from_value(v)
            }
        }
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

fn say(quiet: bool, text: &str) {
    if !quiet {
        print!("{text}");
    }
}

fn cmd_oracle(args: &Common) -> Result<i32> {
    let cfg = args.load()?;
    let inst = cfg.instance()?;
    let schedule = cfg.lr_schedule()?;
    let analysis = Analysis::new(&inst, cfg.setting, cfg.lambda, schedule.c_beta, cfg.cutoff())?;
    let report = OracleReport::new(&analysis, &cfg.verify.c_beta_grid)?;
    let text = report.to_text();
    let dir = args.out_dir(&cfg);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("oracle.txt"), &text)?;
    fs::write(dir.join("oracle.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    say(args.quiet, &text);
    Ok(0)
}

fn cmd_verify(args: &Common) -> Result<i32> {
    let cfg = args.load()?;
    let inst = cfg.instance()?;
    let schedule = cfg.lr_schedule()?;
    let summary = verify_instance(&inst, cfg.setting, cfg.lambda, schedule.c_beta, &cfg.verify, cfg.cutoff())?;
    let dir = args.out_dir(&cfg);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("verify.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    say(args.quiet, &summary.to_text());
    Ok(if summary.all_passed() { 0 } else { 1 })
}

fn run_stem(cfg: &ExperimentConfig) -> String {
    match cfg.setting {
        Setting::Discounted { gamma } => format!("discounted_gamma{gamma}_lambda{}", cfg.lambda),
        Setting::AverageReward => format!("average_lambda{}_cbeta{}", cfg.lambda, cfg.schedule.c_beta),
    }
}

fn cmd_run(args: &Common) -> Result<i32> {
    let cfg = args.load()?;
    let record = run_experiment(&cfg)?;
    let (csv, meta) = write_outputs(&record, &args.out_dir(&cfg), &run_stem(&cfg))?;
    let last = record.len() - 1;
    say(
        args.quiet,
        &format!(
            "{} checkpoints, final mean d^2 = {:e} (stderr {:e})\nwrote {}\nwrote {}\n",
            record.len(),
            record.mean_d2[last],
            record.stderr_d2[last],
            csv.display(),
            meta.display()
        ),
    );
    Ok(0)
}

fn cmd_fit(args: &FitArgs) -> Result<i32> {
    let record = read_csv(&args.csv)?;
    let fit = rate_fit(&record, args.lo, args.hi)?;
    say(
        args.quiet,
        &format!(
            "slope {:.6} +/- {:.6} over [{}, {}], {} points, log residual {:.3e}\n",
            fit.slope, fit.slope_stderr, args.lo, args.hi, fit.points, fit.residual
        ),
    );
    Ok(0)
}

fn cmd_export(args: &ExportArgs) -> Result<i32> {
    if args.name != "boyan15" {
        return Err(Error::Config(format!("unknown builtin {:?}", args.name)));
    }
    let mut cfg = ExperimentConfig::boyan(Setting::Discounted { gamma: 0.9 }, 0.0);
    cfg.mdp = MdpSpec::Explicit(ExplicitMdp::from_instance(&boyan_instance()));
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{}.json", args.name));
    fs::write(&path, cfg.to_json() + "\n")?;
    println!("wrote {}", path.display());
    Ok(0)
}

/// Parses `args` and runs the command; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Oracle(a) => cmd_oracle(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Run(a) => cmd_run(a),
        Command::Fit(a) => cmd_fit(a),
        Command::ExportBuiltin(a) => cmd_export(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Path of the CSV written by `run` for `cfg` inside `dir`.
pub fn run_csv_path(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    dir.join(format!("{}.csv", run_stem(cfg)))
}
