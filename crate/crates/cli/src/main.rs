use clap::{Args, Parser, Subcommand};
use npfp_cli::commands::{self, CommandError};
use npfp_cli::config::{self, Overrides};
use npfp_core::policy::PolicyVariant;
use npfp_core::sim::SamplingMode;
use std::path::PathBuf;
use std::process::ExitCode;

/// Scheduling engine and simulator for two-stage detection pipelines under
/// non-preemptive fixed-priority dispatch with optional batching.
#[derive(Parser)]
#[command(name = "npfp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Path to the JSON configuration.
    #[arg(long)]
    config: PathBuf,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Horizon override in milliseconds.
    #[arg(long = "horizon-ms")]
    horizon_ms: Option<u64>,
    /// Execution-time sampling: wcet or mean-centered.
    #[arg(long)]
    sampling: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the offline response-time test and print the verdict as JSON.
    /// Exits 0 when schedulable, 2 when not.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate one run and write trace.csv, trace.json and report.json.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Policy variant override: c, cf, cbf, cfb or cbfb.
        #[arg(long)]
        policy: Option<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Simulate even if the offline test fails.
        #[arg(long)]
        force: bool,
    },
    /// Run every (policy, seed) combination and write summary.csv.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Inclusive seed range, e.g. 1..20, or a single seed.
        #[arg(long, default_value = "1..20")]
        seeds: String,
        /// Comma-separated policy list; defaults to the config's policy.
        #[arg(long, value_delimiter = ',')]
        policy: Vec<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the fine-batch partition DP on its reference scenario and
    /// verify the expected table; exits nonzero on mismatch.
    DpDemo,
}

fn parse_overrides(common: &CommonArgs, policy: Option<&str>) -> Result<Overrides, String> {
    let policy = policy.map(|s| s.parse::<PolicyVariant>()).transpose()?;
    let sampling = match common.sampling.as_deref() {
        None => None,
        Some("wcet") => Some(SamplingMode::Wcet),
        Some("mean-centered") => Some(SamplingMode::MeanCentered),
        Some(other) => {
            return Err(format!(
                "unknown sampling mode '{other}' (expected wcet|mean-centered)"
            ))
        }
    };
    Ok(Overrides {
        policy,
        seed: common.seed,
        horizon_ms: common.horizon_ms,
        sampling,
    })
}

fn load(common: &CommonArgs, policy: Option<&str>) -> Result<config::LoadedConfig, ExitCode> {
    let overrides = parse_overrides(common, policy).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })?;
    config::load(&common.config, &overrides).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze { common } => {
            let cfg = match load(&common, None) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            let output = commands::analyze(&cfg);
            println!(
                "{}",
                serde_json::to_string_pretty(&output).expect("serializable")
            );
            if output.schedulable {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Simulate {
            common,
            policy,
            out,
            force,
        } => {
            let cfg = match load(&common, policy.as_deref()) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            match commands::simulate(&cfg, &out, force) {
                Ok(report) => {
                    println!(
                        "policy {} seed {}: {} jobs, {} coarse misses, critical {:.4}, overall {:.4}",
                        report.policy,
                        report.seed,
                        report.total_jobs,
                        report.total_coarse_misses,
                        report.proxy_scores.critical_score,
                        report.proxy_scores.overall_score
                    );
                    println!("wrote {}", out.join("trace.csv").display());
                    println!("wrote {}", out.join("trace.json").display());
                    println!("wrote {}", out.join("report.json").display());
                    ExitCode::SUCCESS
                }
                Err(CommandError::Unschedulable) => {
                    eprintln!("error: {}", CommandError::Unschedulable);
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Sweep {
            common,
            seeds,
            policy,
            out,
        } => {
            let cfg = match load(&common, None) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            let seed_range = match npfp_cli::parse_seed_range(&seeds) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let policy_list: Result<Vec<PolicyVariant>, String> = if policy.is_empty() {
                Ok(vec![cfg.policy])
            } else {
                policy.iter().map(|s| s.parse()).collect()
            };
            let policy_list = match policy_list {
                Ok(list) => list,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match commands::sweep(&cfg, &policy_list, seed_range, &out) {
                Ok(rows) => {
                    println!("wrote {} ({} rows)", out.join("summary.csv").display(), rows);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::DpDemo => {
            let demo = commands::dp_demo();
            print!("{}", demo.output);
            if demo.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
