//! Command-line front end: run campaigns, benchmark the variants against
//! each other, regenerate reports, and inspect or verify the bug catalog.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bugs::{witness, BUGS};
use crate::campaign::{Campaign, CampaignConfig, TargetCoverage, Variant};
use crate::detector::compare_traces;
use crate::dut::{golden_execute, simulate};
use crate::error::Error;
use crate::report::{
    bug_table, coverage_table, curves_table, outcomes_jsonl, parse_outcomes, TrialOutcome,
};

#[derive(Debug, Parser)]
#[command(
    name = "swarmfuzz",
    version,
    about = "Coverage-feedback fuzzing of a toy processor with swarm-scheduled mutations and seeds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one fuzzing campaign and write campaign.csv, bugs.csv and
    /// mismatches.jsonl.
    Fuzz(FuzzArgs),
    /// Run every variant for several trials and write comparison tables.
    Bench(BenchArgs),
    /// Rebuild the comparison tables from saved trial outcomes.
    Report(ReportArgs),
    /// Print the injected-bug catalog with witness programs.
    ShowBugs,
    /// Run the six bug witnesses through the detector.
    Verify,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    /// Scheduling policy variant.
    #[arg(long, value_enum, default_value_t = Variant::Psofuzz)]
    pub variant: Variant,
    /// Fuzzer threads (and particles per swarm).
    #[arg(long, default_value_t = 10)]
    pub particles: usize,
    /// Instructions per test program.
    #[arg(long, default_value_t = 20)]
    pub seed_len: usize,
    /// Velocity inertia constant.
    #[arg(long, default_value_t = 0.5)]
    pub k: f64,
    /// Reset threshold for scheduling particles.
    #[arg(long, default_value_t = 3)]
    pub beta_m: u32,
    /// Reset threshold for seed particles.
    #[arg(long, default_value_t = 3)]
    pub beta_t: u32,
    /// Stop at this coverage: a point count (e.g. 150) or fraction (e.g. 0.8).
    #[arg(long)]
    pub target_coverage: Option<String>,
    /// Stop after this many tests.
    #[arg(long, default_value_t = 5000)]
    pub max_tests: u64,
    /// Stop after this many wall-clock seconds.
    #[arg(long)]
    pub time_limit_secs: Option<u64>,
    /// Seed for all random streams.
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Output directory (the SWARMFUZZ_OUT env var overrides this default).
    #[arg(long, env = "SWARMFUZZ_OUT", default_value = "swarmfuzz-out")]
    pub out: PathBuf,
    /// Resume from a checkpoint file instead of starting fresh.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Write out/checkpoint.bin every this many iterations.
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
}

impl FuzzArgs {
    pub fn to_config(&self) -> Result<CampaignConfig, Error> {
        let target_coverage = self
            .target_coverage
            .as_deref()
            .map(str::parse::<TargetCoverage>)
            .transpose()?;
        let config = CampaignConfig {
            variant: self.variant,
            particles: self.particles,
            program_len: self.seed_len,
            k: self.k,
            beta_m: self.beta_m,
            beta_t: self.beta_t,
            target_coverage,
            max_tests: Some(self.max_tests),
            time_limit_secs: self.time_limit_secs,
            rng_seed: self.rng_seed,
            out_dir: self.out.clone(),
            checkpoint_every: self.checkpoint_every,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Trials per variant.
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    /// Tests per trial.
    #[arg(long, default_value_t = 5000)]
    pub max_tests: u64,
    /// Base rng seed; trial t of every variant uses seed + t.
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Fuzzer threads per campaign.
    #[arg(long, default_value_t = 10)]
    pub particles: usize,
    /// Instructions per test program.
    #[arg(long, default_value_t = 20)]
    pub seed_len: usize,
    /// Output directory (the SWARMFUZZ_OUT env var overrides this default).
    #[arg(long, env = "SWARMFUZZ_OUT", default_value = "swarmfuzz-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Saved trial outcomes (trials.jsonl from a bench run).
    #[arg(long)]
    pub r#in: PathBuf,
    /// Output directory (the SWARMFUZZ_OUT env var overrides this default).
    #[arg(long, env = "SWARMFUZZ_OUT", default_value = "swarmfuzz-out")]
    pub out: PathBuf,
}

/// Parse argv and run. Returns the process exit code: 0 on success, 2 on
/// configuration errors, 1 on runtime failures (and for `verify`, nonzero
/// when a witness fails to classify).
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e @ (Error::Config(_) | Error::Parse { .. })) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Fuzz(args) => fuzz(&args),
        Command::Bench(args) => bench(&args),
        Command::Report(args) => report(&args),
        Command::ShowBugs => {
            show_bugs();
            Ok(0)
        }
        Command::Verify => verify(),
    }
}

fn fuzz(args: &FuzzArgs) -> Result<i32, Error> {
    let mut campaign = match &args.resume {
        Some(path) => Campaign::from_checkpoint(path)?,
        None => Campaign::new(args.to_config()?)?,
    };
    let result = campaign.run()?;
    println!(
        "{}: {} iterations, {} tests, {}/{} points covered, {} bug(s) detected -> {}",
        result.config.variant,
        result.iterations,
        result.tests_total,
        result.coverage.count(),
        result.coverage.total_points(),
        result.bug_detections.len(),
        result.config.out_dir.display()
    );
    Ok(0)
}

fn bench(args: &BenchArgs) -> Result<i32, Error> {
    if args.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let bench_dir = args.out.join("bench");
    std::fs::create_dir_all(&bench_dir)?;
    let mut outcomes = Vec::new();
    for variant in Variant::ALL {
        for trial in 0..args.trials {
            let config = CampaignConfig {
                variant,
                particles: args.particles,
                program_len: args.seed_len,
                max_tests: Some(args.max_tests),
                rng_seed: args.rng_seed + trial,
                out_dir: bench_dir.join(format!("{variant}-trial{trial}")),
                checkpoint_every: None,
                ..CampaignConfig::default()
            };
            let mut campaign = Campaign::new(config)?;
            loop {
                if !campaign.step()? {
                    break;
                }
            }
            let result = campaign.result();
            println!(
                "{variant} trial {trial}: coverage {}, bugs {}",
                result.coverage.count(),
                result.bug_detections.len()
            );
            outcomes.push(TrialOutcome::from_result(&result, trial));
        }
    }
    std::fs::write(bench_dir.join("trials.jsonl"), outcomes_jsonl(&outcomes)?)?;
    write_tables(&bench_dir, &outcomes)?;
    println!("wrote {}", bench_dir.display());
    Ok(0)
}

fn report(args: &ReportArgs) -> Result<i32, Error> {
    let text = std::fs::read_to_string(&args.r#in)?;
    let outcomes = parse_outcomes(&text)?;
    if outcomes.is_empty() {
        return Err(Error::Config(format!(
            "{} holds no trial outcomes",
            args.r#in.display()
        )));
    }
    std::fs::create_dir_all(&args.out)?;
    write_tables(&args.out, &outcomes)?;
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn write_tables(dir: &std::path::Path, outcomes: &[TrialOutcome]) -> Result<(), Error> {
    std::fs::write(dir.join("bench_bugs.csv"), bug_table(outcomes))?;
    std::fs::write(dir.join("bench_coverage.csv"), coverage_table(outcomes))?;
    std::fs::write(dir.join("bench_curves.csv"), curves_table(outcomes))?;
    Ok(())
}

fn show_bugs() {
    for bug in BUGS {
        println!("{}: {}", bug.name(), bug.description());
        println!("witness:");
        for line in witness(bug, 20).to_text().lines() {
            println!("    {line}");
        }
        println!();
    }
}

fn verify() -> Result<i32, Error> {
    let mut all_ok = true;
    for bug in BUGS {
        let test = witness(bug, 20);
        let (_, dut_trace) = simulate(&test);
        let golden_trace = golden_execute(&test);
        let mismatches = compare_traces(&dut_trace, &golden_trace)?;
        let classified = mismatches
            .iter()
            .any(|m| !m.cascading && m.matched_bug == Some(bug));
        let status = if classified { "ok" } else { "FAIL" };
        println!(
            "{} {status} - {} ({} mismatch(es))",
            bug.name(),
            bug.description(),
            mismatches.len()
        );
        all_ok &= classified;
    }
    Ok(if all_ok { 0 } else { 1 })
}
