//! Trace post-processing into per-task and aggregate figures.
//!
//! The aggregate scores are synthetic proxies in [0, 1], not detection
//! accuracy: the critical score is the fraction of frames whose coarse
//! stage met its deadline, and the overall score credits easy frames and
//! fine-refined hard frames fully, un-refined hard frames with a
//! configurable partial credit.

use crate::model::{Task, TaskId};
use crate::policy::PolicyVariant;
use crate::sim::{SamplingMode, Trace};
use crate::time::Duration;
use crate::workload::FrameOutcome;
use serde::Serialize;
use std::collections::BTreeMap;

/// Parameters of the accuracy proxy. `base_credit` is the score a hard
/// frame earns when its fine stage never completes; it has no measured
/// grounding and any cross-policy ordering claim is conditional on it
/// lying strictly inside (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProxyParams {
    pub base_credit: f64,
}

impl Default for ProxyParams {
    fn default() -> Self {
        ProxyParams { base_credit: 0.6 }
    }
}

/// Identification of one run, echoed into its report.
#[derive(Clone, Copy, Debug)]
pub struct RunMeta {
    pub seed: u64,
    pub policy: PolicyVariant,
    pub sampling: SamplingMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskMetrics {
    pub task: TaskId,
    pub priority: u32,
    pub released: u64,
    pub coarse_completed: u64,
    pub coarse_fps: f64,
    pub coarse_deadline_misses: u64,
    pub hard_frames: u64,
    pub fine_completed: u64,
    pub fine_expired: u64,
    /// Completed fine stages per hard frame; 0 when no frame was hard.
    pub fine_completion_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub policy: String,
    pub sampling: String,
    pub horizon_us: u64,
    pub tasks: Vec<TaskMetrics>,
    pub total_jobs: u64,
    pub total_coarse_misses: u64,
    pub proxy_scores: ProxyScores,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProxyScores {
    pub critical_score: f64,
    pub overall_score: f64,
    pub base_credit: f64,
}

/// Reduces a finished trace to per-task rates and the proxy scores.
pub fn compute_report(
    trace: &Trace,
    tasks: &[Task],
    horizon: Duration,
    proxy: &ProxyParams,
    meta: &RunMeta,
) -> Report {
    assert!(
        (0.0..=1.0).contains(&proxy.base_credit),
        "base_credit must lie in [0, 1]"
    );
    let horizon_s = horizon.as_secs_f64();
    #[derive(Default)]
    struct Acc {
        released: u64,
        coarse_completed: u64,
        misses: u64,
        hard: u64,
        fine_completed: u64,
        fine_expired: u64,
    }
    let mut acc: BTreeMap<TaskId, Acc> = tasks.iter().map(|t| (t.id, Acc::default())).collect();
    let mut credit = 0.0;
    for job in &trace.jobs {
        let a = acc.entry(job.task).or_default();
        a.released += 1;
        if job.coarse_completed.is_some() {
            a.coarse_completed += 1;
        }
        if job.coarse_missed {
            a.misses += 1;
        }
        let fine_on_time = job
            .fine_completed
            .is_some_and(|done| done <= job.deadline);
        match job.outcome {
            FrameOutcome::Easy => credit += 1.0,
            FrameOutcome::Hard(_) => {
                a.hard += 1;
                if fine_on_time {
                    a.fine_completed += 1;
                    credit += 1.0;
                } else {
                    credit += proxy.base_credit;
                }
                if job.fine_expired {
                    a.fine_expired += 1;
                }
            }
        }
    }
    let total_jobs = trace.jobs.len() as u64;
    let total_misses: u64 = acc.values().map(|a| a.misses).sum();
    let critical_score = if total_jobs == 0 {
        1.0
    } else {
        (total_jobs - total_misses) as f64 / total_jobs as f64
    };
    let overall_score = if total_jobs == 0 {
        1.0
    } else {
        credit / total_jobs as f64
    };
    let task_metrics = tasks
        .iter()
        .map(|task| {
            let a = &acc[&task.id];
            TaskMetrics {
                task: task.id,
                priority: task.priority,
                released: a.released,
                coarse_completed: a.coarse_completed,
                coarse_fps: a.coarse_completed as f64 / horizon_s,
                coarse_deadline_misses: a.misses,
                hard_frames: a.hard,
                fine_completed: a.fine_completed,
                fine_expired: a.fine_expired,
                fine_completion_rate: if a.hard == 0 {
                    0.0
                } else {
                    a.fine_completed as f64 / a.hard as f64
                },
            }
        })
        .collect();
    Report {
        seed: meta.seed,
        policy: meta.policy.to_string(),
        sampling: meta.sampling.to_string(),
        horizon_us: horizon.as_us(),
        tasks: task_metrics,
        total_jobs,
        total_coarse_misses: total_misses,
        proxy_scores: ProxyScores {
            critical_score,
            overall_score,
            base_credit: proxy.base_credit,
        },
    }
}
