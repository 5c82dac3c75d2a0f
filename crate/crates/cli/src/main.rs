use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use slideregret::theory::predict;
use slideregret::verify::{run_all, VerifyOptions};
use slideregret::PolicyKind;
use slideregret_cli::analyze::{analyze_dir, render};
use slideregret_cli::config::{ExperimentConfig, Overrides, Workers};
use slideregret_cli::experiment::run_experiment;
use slideregret_cli::output::write_outputs;
use slideregret_cli::ExitError;

#[derive(Parser)]
#[command(
    name = "slideregret",
    version,
    about = "Two-arm bandit experiments: regret of exploration and sliding regret"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured policy for `runs` seeds and write CSV/JSON outputs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "SLIDEREGRET_WORKERS")]
        workers: Option<String>,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the predicted regret of exploration as JSON.
    Predict {
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long)]
        mu1: f64,
        #[arg(long)]
        mu2: f64,
        #[arg(long = "T")]
        window: usize,
        #[arg(long, default_value_t = slideregret::policies::DEFAULT_UCBV_C)]
        c: f64,
    },
    /// Run the numerical cross-check suites.
    Verify,
    /// Re-estimate RegExp' at chosen rounds from simulate outputs.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "t", value_delimiter = ',', required = true)]
        ts: Vec<usize>,
    },
}

fn simulate(
    config: PathBuf,
    runs: Option<usize>,
    horizon: Option<usize>,
    seed: Option<u64>,
    workers: Option<String>,
    out: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let mut cfg = ExperimentConfig::load(&config)?;
    let workers = workers.as_deref().map(Workers::parse).transpose()?;
    cfg.apply(&Overrides {
        runs,
        horizon,
        seed,
        workers,
        output_dir: out,
    });
    let result = run_experiment(&cfg)?;
    let files = write_outputs(&result, &cfg.output_dir)?;
    for p in &result.policies {
        let s = &p.summary;
        let slireg = s.max_window_regret.as_ref().map_or(f64::NAN, |m| m.mean);
        let n2 = s.n2_final.as_ref().map_or(f64::NAN, |m| m.median);
        println!(
            "{:<6} runs={} samples={} mean_max_window_regret={slireg:.6} median_N2={n2}",
            p.config.kind.name(),
            s.runs,
            s.episode_samples
        );
    }
    println!(
        "wrote {} files to {}",
        files.len(),
        cfg.output_dir.display()
    );
    Ok(0)
}

fn run_predict(
    policy: PolicyKind,
    mu1: f64,
    mu2: f64,
    window: usize,
    c: f64,
) -> anyhow::Result<u8> {
    let record =
        predict(policy, mu1, mu2, window, c).map_err(|e| ExitError::usage(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(0)
}

fn verify() -> anyhow::Result<u8> {
    let reports = run_all(VerifyOptions::default());
    let mut ok = true;
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!(
            "{status} {:<14} cases={:<6} failed={:<4} max_error={:.3e} time={:.2}s",
            r.name, r.cases, r.failed, r.max_error, r.seconds
        );
        for f in &r.failures {
            println!("    {f}");
        }
        ok &= r.passed();
    }
    Ok(if ok { 0 } else { 1 })
}

fn analyze(input: PathBuf, ts: Vec<usize>) -> anyhow::Result<u8> {
    let rows =
        analyze_dir(&input, &ts).with_context(|| format!("analyzing {}", input.display()))?;
    print!("{}", render(&rows));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            runs,
            horizon,
            seed,
            workers,
            out,
        } => simulate(config, runs, horizon, seed, workers, out),
        Command::Predict {
            policy,
            mu1,
            mu2,
            window,
            c,
        } => run_predict(policy, mu1, mu2, window, c),
        Command::Verify => verify(),
        Command::Analyze { input, ts } => analyze(input, ts),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<ExitError>())
                .map_or(1, |x| x.code);
            ExitCode::from(code)
        }
    }
}
