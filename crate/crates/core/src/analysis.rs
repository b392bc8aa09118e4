//! Offline schedulability: rate-monotonic priority assignment and the
//! non-preemptive fixed-priority response-time test for the coarse stages.
//!
//! Only coarse subtasks carry the guarantee; fine work is admitted at
//! runtime under conditions that cannot disturb the analysis, so the test
//! here considers coarse WCETs exclusively.

use crate::model::{Task, TaskId};
use crate::time::Duration;
use serde::Serialize;

/// Outcome of the fixed-point iteration for one task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ResponseTime {
    /// Least fixed point of the recurrence; guaranteed `<= period`.
    Converged(Duration),
    /// The iterate exceeded the period, so the deadline test fails.
    Diverged,
}

impl ResponseTime {
    pub fn converged(self) -> Option<Duration> {
        match self {
            ResponseTime::Converged(r) => Some(r),
            ResponseTime::Diverged => None,
        }
    }
}

/// Per-task response times plus the set-level verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RtaResult {
    pub per_task: Vec<(TaskId, ResponseTime)>,
    pub schedulable: bool,
}

/// Assigns rate-monotonic priorities in place: shorter period means higher
/// priority (lower number), ties broken by ascending task id.
pub fn rm_assign(tasks: &mut [Task]) {
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by_key(|&i| (tasks[i].period, tasks[i].id));
    for (rank, &i) in order.iter().enumerate() {
        tasks[i].priority = rank as u32 + 1;
    }
}

/// Worst-case blocking a task suffers from one already-running
/// lower-priority coarse subtask: the largest coarse WCET among tasks of
/// lower priority, or zero when none exist.
pub fn blocking(task: &Task, tasks: &[Task]) -> Duration {
    tasks
        .iter()
        .filter(|other| other.priority > task.priority)
        .map(|other| other.coarse_wcet())
        .max()
        .unwrap_or(Duration::ZERO)
}

/// Iterates the response-time recurrence
/// `R(x+1) = C_i + B_i + sum_h ceil(R(x) / T_h) * C_h` over the
/// higher-priority tasks, starting at `R(0) = C_i + B_i`, to its least
/// fixed point. Declares divergence as soon as an iterate exceeds the
/// period, since only the deadline test matters and the sequence is
/// monotone non-decreasing.
pub fn response_time(task: &Task, tasks: &[Task]) -> ResponseTime {
    let base = task.coarse_wcet() + blocking(task, tasks);
    let higher: Vec<&Task> = tasks
        .iter()
        .filter(|other| other.priority < task.priority)
        .collect();
    let mut r = base;
    loop {
        if r > task.period {
            return ResponseTime::Diverged;
        }
        let next = base
            + higher
                .iter()
                .map(|h| h.coarse_wcet() * r.div_ceil(h.period))
                .sum();
        if next == r {
            return ResponseTime::Converged(r);
        }
        r = next;
    }
}

/// Runs the response-time test on every task. The set is schedulable iff
/// every task converges (convergence already implies `R_i <= T_i`).
pub fn schedulable(tasks: &[Task]) -> RtaResult {
    let per_task: Vec<(TaskId, ResponseTime)> = tasks
        .iter()
        .map(|task| (task.id, response_time(task, tasks)))
        .collect();
    let schedulable = per_task
        .iter()
        .all(|(_, r)| matches!(r, ResponseTime::Converged(_)));
    RtaResult {
        per_task,
        schedulable,
    }
}
