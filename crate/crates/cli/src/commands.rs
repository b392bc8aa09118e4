//! The four subcommands. Every output is byte-stable for identical inputs:
//! fixed field order, integer microsecond times, six-decimal floats in CSV.

use crate::config::LoadedConfig;
use npfp_core::analysis::{self, ResponseTime};
use npfp_core::metrics::{compute_report, Report, RunMeta};
use npfp_core::model::{BatchWcetTables, PerLevel, TaskId, WorkloadLevel};
use npfp_core::policy::{dba_table, FineRequest, PolicyVariant};
use npfp_core::sim::{run, SimConfig, Trace};
use npfp_core::time::Duration;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("task set fails the offline response-time test; rerun with --force to simulate anyway")]
    Unschedulable,
    #[error("simulation failed: {0}")]
    Sim(#[from] npfp_core::sim::SimError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Serialize)]
pub struct AnalyzeTaskRow {
    pub id: TaskId,
    pub priority: u32,
    pub period_ms: f64,
    pub coarse_wcet_ms: f64,
    pub blocking_ms: f64,
    pub response_time_us: Option<u64>,
    pub response_time_ms: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeOutput {
    pub schedulable: bool,
    pub tasks: Vec<AnalyzeTaskRow>,
}

/// Runs the offline test and renders the per-task verdict.
pub fn analyze(cfg: &LoadedConfig) -> AnalyzeOutput {
    let result = analysis::schedulable(&cfg.tasks);
    let tasks = cfg
        .tasks
        .iter()
        .map(|task| {
            let response = result
                .per_task
                .iter()
                .find(|(id, _)| *id == task.id)
                .map(|(_, r)| *r)
                .unwrap_or(ResponseTime::Diverged);
            let response_us = response.converged().map(|d| d.as_us());
            AnalyzeTaskRow {
                id: task.id,
                priority: task.priority,
                period_ms: task.period.as_ms_f64(),
                coarse_wcet_ms: task.coarse_wcet().as_ms_f64(),
                blocking_ms: analysis::blocking(task, &cfg.tasks).as_ms_f64(),
                response_time_us: response_us,
                response_time_ms: response_us.map(|us| us as f64 / 1_000.0),
                diverged: response_us.is_none(),
            }
        })
        .collect();
    AnalyzeOutput {
        schedulable: result.schedulable,
        tasks,
    }
}

/// One simulation run with the config's policy and seed.
pub fn run_one(cfg: &LoadedConfig, policy: PolicyVariant, seed: u64) -> Result<(Trace, Report), CommandError> {
    let sim_cfg = SimConfig {
        horizon: cfg.horizon,
        seed,
        sampling: cfg.sampling,
        scheduler_overhead: cfg.scheduler_overhead,
        initial_busy_until: None,
    };
    let trace = run(&cfg.tasks, policy, &cfg.tables, &sim_cfg)?;
    let meta = RunMeta {
        seed,
        policy,
        sampling: cfg.sampling,
    };
    let report = compute_report(&trace, &cfg.tasks, cfg.horizon, &cfg.proxy, &meta);
    Ok((trace, report))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CommandError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CommandError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Simulates one run and writes `trace.csv`, `trace.json` and
/// `report.json` under `out_dir`. Refuses unschedulable task sets unless
/// forced.
pub fn simulate(cfg: &LoadedConfig, out_dir: &Path, force: bool) -> Result<Report, CommandError> {
    if !analysis::schedulable(&cfg.tasks).schedulable && !force {
        return Err(CommandError::Unschedulable);
    }
    let (trace, report) = run_one(cfg, cfg.policy, cfg.seed)?;
    write_file(&out_dir.join("trace.csv"), &trace.to_csv())?;
    write_file(
        &out_dir.join("trace.json"),
        &format!("{}\n", serde_json::to_string_pretty(&trace).expect("serializable")),
    )?;
    write_file(
        &out_dir.join("report.json"),
        &format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")),
    )?;
    Ok(report)
}

/// One sweep cell: a (policy, seed) pair and its report.
pub struct SweepRow {
    pub policy: PolicyVariant,
    pub seed: u64,
    pub report: Report,
}

/// Runs every (policy, seed) combination independently, in the given
/// policy order and ascending seed order.
pub fn run_sweep(
    cfg: &LoadedConfig,
    policies: &[PolicyVariant],
    seeds: impl Iterator<Item = u64> + Clone,
) -> Result<Vec<SweepRow>, CommandError> {
    let mut rows = Vec::new();
    for &policy in policies {
        for seed in seeds.clone() {
            let (_, report) = run_one(cfg, policy, seed)?;
            rows.push(SweepRow {
                policy,
                seed,
                report,
            });
        }
    }
    Ok(rows)
}

/// Renders sweep rows as CSV: one row per (policy, seed), aggregate scores
/// first, then per-task FPS and fine completion rate columns in task-id
/// order.
pub fn sweep_csv(cfg: &LoadedConfig, rows: &[SweepRow]) -> String {
    let mut ids: Vec<TaskId> = cfg.tasks.iter().map(|t| t.id).collect();
    ids.sort();
    let mut out = String::from("policy,seed,critical_score,overall_score,total_coarse_misses");
    for id in &ids {
        write!(out, ",coarse_fps_{id},fine_rate_{id}").unwrap();
    }
    out.push('\n');
    for row in rows {
        write!(
            out,
            "{},{},{:.6},{:.6},{}",
            row.policy,
            row.seed,
            row.report.proxy_scores.critical_score,
            row.report.proxy_scores.overall_score,
            row.report.total_coarse_misses
        )
        .unwrap();
        for id in &ids {
            let task = row
                .report
                .tasks
                .iter()
                .find(|t| t.task == *id)
                .expect("report covers every task");
            write!(out, ",{:.6},{:.6}", task.coarse_fps, task.fine_completion_rate).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes the sweep summary to `out_dir/summary.csv`.
pub fn sweep(
    cfg: &LoadedConfig,
    policies: &[PolicyVariant],
    seeds: impl Iterator<Item = u64> + Clone,
    out_dir: &Path,
) -> Result<usize, CommandError> {
    let rows = run_sweep(cfg, policies, seeds)?;
    write_file(&out_dir.join("summary.csv"), &sweep_csv(cfg, &rows))?;
    Ok(rows.len())
}

/// Reference scenario for the fine-batch partition DP: four pending fine
/// subtasks with workloads (S, M, M, L), unit costs S=1, M=2, L=3, and a
/// batch of n > 1 costing `level * n / 2`. Durations are scaled to 1000 us
/// per cost unit so the half-unit entries stay exact.
pub struct DpDemo {
    pub output: String,
    pub ok: bool,
}

pub fn dp_demo() -> DpDemo {
    const UNIT: u64 = 1_000;
    let cost_entries = |unit: u64| -> Vec<Duration> {
        (1..=4)
            .map(|n| {
                if n == 1 {
                    Duration::from_us(unit)
                } else {
                    Duration::from_us(unit * n / 2)
                }
            })
            .collect()
    };
    let tables = BatchWcetTables::new(
        vec![],
        PerLevel {
            s: cost_entries(UNIT),
            m: cost_entries(2 * UNIT),
            l: cost_entries(3 * UNIT),
        },
    );
    let levels = [
        WorkloadLevel::S,
        WorkloadLevel::M,
        WorkloadLevel::M,
        WorkloadLevel::L,
    ];
    let requests: Vec<FineRequest> = levels
        .iter()
        .enumerate()
        .map(|(i, level)| FineRequest {
            task: TaskId(i as u32 + 1),
            level: *level,
            deadline: Duration::MAX,
        })
        .collect();

    let units = |d: Duration| -> String {
        if d.as_us().is_multiple_of(UNIT) {
            (d.as_us() / UNIT).to_string()
        } else {
            format!("{:.1}", d.as_us() as f64 / UNIT as f64)
        }
    };

    let computation = dba_table(&requests, Duration::ZERO, Duration::MAX, &tables);
    let mut out = String::new();
    out.push_str("fine-batch partition DP reference scenario\n");
    out.push_str("workloads: S M M L  (unit costs S=1 M=2 L=3; batch of n>1 costs level*n/2)\n");
    for k in 1..=4usize {
        write!(out, "k={k}:").unwrap();
        for j in (1..=k).rev() {
            let prev = computation.dba[j - 1].map(units).unwrap_or_else(|| "-".into());
            let cost = computation.cost[k - 1][j - 1]
                .map(units)
                .unwrap_or_else(|| "inf".into());
            write!(out, " [last={j}..{k} prev={prev} cost={cost}]").unwrap();
        }
        out.push('\n');
    }
    let final_row: Vec<String> = (1..=4usize)
        .rev()
        .map(|j| {
            computation.cost[3][j - 1]
                .map(units)
                .unwrap_or_else(|| "inf".into())
        })
        .collect();
    writeln!(out, "k=4 cost row: {}", final_row.join(" ")).unwrap();
    let dba_row: Vec<String> = (1..=4usize)
        .map(|k| computation.dba[k].map(units).unwrap_or_else(|| "inf".into()))
        .collect();
    writeln!(out, "DBA: {}", dba_row.join(" ")).unwrap();

    let batches =
        npfp_core::policy::dba_partition(&requests, Duration::ZERO, Duration::MAX, &tables);
    let rendered: Vec<String> = batches
        .iter()
        .map(|b| {
            b.tasks
                .iter()
                .map(|id| {
                    requests
                        .iter()
                        .find(|r| r.task == *id)
                        .unwrap()
                        .level
                        .letter()
                })
                .collect::<String>()
        })
        .collect();
    let total: Duration = batches.iter().map(|b| b.wcet).sum();
    writeln!(out, "partition: {}", rendered.join(" | ")).unwrap();
    writeln!(out, "total: {}", units(total)).unwrap();

    let ok = dba_row == ["1", "2", "3", "5"]
        && final_row == ["6", "5", "5.5", "6"]
        && rendered == ["SM", "ML"]
        && units(total) == "5";
    writeln!(out, "self-check: {}", if ok { "OK" } else { "FAILED" }).unwrap();
    DpDemo { output: out, ok }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dp_demo_self_check_passes() {
        let demo = dp_demo();
        assert!(demo.ok, "{}", demo.output);
        assert!(demo.output.contains("DBA: 1 2 3 5"));
        assert!(demo.output.contains("k=4 cost row: 6 5 5.5 6"));
        assert!(demo.output.contains("partition: SM | ML"));
        assert!(demo.output.contains("total: 5"));
    }
}
