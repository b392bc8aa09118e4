//! Runtime dispatch policy.
//!
//! At each scheduling instant the policy picks the next work item:
//! individual or batched coarse subtasks (always dominant), then — only
//! when no coarse work is pending — individual or batched fine subtasks,
//! admitted under slack and deadline checks that keep the offline coarse
//! guarantee intact. Fine batching partitions the workload-sorted pending
//! set with a quadratic dynamic program over contiguous groups.

use crate::model::{BatchWcetTables, TaskId, WorkloadLevel};
use crate::time::Duration;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// How coarse subtasks execute under a policy variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoarseMode {
    Individual,
    Batched,
}

/// How fine subtasks execute under a policy variant, if at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FineMode {
    None,
    Individual,
    Batched,
}

/// A policy variant: coarse mode plus fine mode. The five named variants
/// are `c`, `cf`, `cbf` (batched coarse, individual fine), `cfb`
/// (individual coarse, batched fine) and `cbfb` (both batched).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyVariant {
    pub coarse: CoarseMode,
    pub fine: FineMode,
}

impl PolicyVariant {
    /// Coarse only, no fine execution.
    pub const C: PolicyVariant = PolicyVariant {
        coarse: CoarseMode::Individual,
        fine: FineMode::None,
    };
    /// Individual coarse, individual fine.
    pub const CF: PolicyVariant = PolicyVariant {
        coarse: CoarseMode::Individual,
        fine: FineMode::Individual,
    };
    /// Batched coarse, individual fine.
    pub const CBF: PolicyVariant = PolicyVariant {
        coarse: CoarseMode::Batched,
        fine: FineMode::Individual,
    };
    /// Individual coarse, batched fine.
    pub const CFB: PolicyVariant = PolicyVariant {
        coarse: CoarseMode::Individual,
        fine: FineMode::Batched,
    };
    /// Batched coarse, batched fine.
    pub const CBFB: PolicyVariant = PolicyVariant {
        coarse: CoarseMode::Batched,
        fine: FineMode::Batched,
    };

    pub const ALL: [PolicyVariant; 5] = [
        PolicyVariant::C,
        PolicyVariant::CF,
        PolicyVariant::CBF,
        PolicyVariant::CFB,
        PolicyVariant::CBFB,
    ];

    pub fn name(self) -> &'static str {
        match (self.coarse, self.fine) {
            (CoarseMode::Individual, FineMode::None) => "c",
            (CoarseMode::Individual, FineMode::Individual) => "cf",
            (CoarseMode::Batched, FineMode::Individual) => "cbf",
            (CoarseMode::Individual, FineMode::Batched) => "cfb",
            (CoarseMode::Batched, FineMode::Batched) => "cbfb",
            (CoarseMode::Batched, FineMode::None) => "cb",
        }
    }
}

impl FromStr for PolicyVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c" => Ok(PolicyVariant::C),
            "cf" => Ok(PolicyVariant::CF),
            "cbf" => Ok(PolicyVariant::CBF),
            "cfb" => Ok(PolicyVariant::CFB),
            "cbfb" => Ok(PolicyVariant::CBFB),
            other => Err(format!(
                "unknown policy '{other}' (expected c|cf|cbf|cfb|cbfb)"
            )),
        }
    }
}

impl fmt::Display for PolicyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A pending coarse subtask visible to the dispatcher.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoarsePending {
    pub task: TaskId,
    pub priority: u32,
}

/// A pending fine subtask. Its workload level has been revealed (at coarse
/// completion) and it expires at `deadline`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FinePending {
    pub task: TaskId,
    pub priority: u32,
    pub level: WorkloadLevel,
    pub deadline: Duration,
    /// Individual fine WCET at the revealed level.
    pub wcet: Duration,
}

/// Dispatcher view of the system at a scheduling instant.
#[derive(Clone, Debug, Default)]
pub struct SchedulerState {
    /// Pending coarse subtasks, sorted by ascending priority value
    /// (highest priority first).
    pub active_coarse: Vec<CoarsePending>,
    /// Pending fine subtasks, in no particular order.
    pub active_fine: Vec<FinePending>,
    /// Next release instant of every task in the set, pending or not.
    pub next_release: Vec<(TaskId, Duration)>,
}

impl SchedulerState {
    /// Time from `now` until the earliest future release of any task: the
    /// window available for work that must not disturb coarse releases.
    pub fn coarse_slack(&self, now: Duration) -> Duration {
        self.next_release
            .iter()
            .map(|(_, r)| r.saturating_sub(now))
            .min()
            .unwrap_or(Duration::MAX)
    }
}

/// One fine batch: members in workload order, padded to `level`, with the
/// table WCET for that (level, size).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FineBatch {
    pub tasks: Vec<TaskId>,
    pub level: WorkloadLevel,
    pub wcet: Duration,
}

/// What to run next on the resource.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    RunCoarse(TaskId),
    /// Members in descending priority; always a prefix of the
    /// priority-sorted pending coarse set.
    RunCoarseBatch(Vec<TaskId>),
    RunFine(TaskId),
    /// Batches execute back-to-back in the given order.
    RunFineBatchSequence(Vec<FineBatch>),
    Idle,
}

/// Picks the next work item at instant `now`. Coarse work always wins;
/// fine work is considered only when no coarse subtask is pending, and only
/// under admission checks that protect future coarse releases.
pub fn decide(
    state: &SchedulerState,
    now: Duration,
    variant: PolicyVariant,
    tables: &BatchWcetTables,
) -> Decision {
    if !state.active_coarse.is_empty() {
        return match variant.coarse {
            CoarseMode::Individual => Decision::RunCoarse(state.active_coarse[0].task),
            CoarseMode::Batched => select_coarse_batch(state, now, tables),
        };
    }
    if state.active_fine.is_empty() {
        return Decision::Idle;
    }
    let slack = state.coarse_slack(now);
    match variant.fine {
        FineMode::None => Decision::Idle,
        FineMode::Individual => {
            let top = state
                .active_fine
                .iter()
                .min_by_key(|f| (f.priority, f.task))
                .expect("nonempty");
            if admit_individual_fine(top.wcet, now, slack, top.deadline) {
                Decision::RunFine(top.task)
            } else {
                Decision::Idle
            }
        }
        FineMode::Batched => {
            let requests = sorted_requests(&state.active_fine);
            let batches = dba_partition(&requests, now, slack, tables);
            if batches.is_empty() {
                Decision::Idle
            } else {
                Decision::RunFineBatchSequence(batches)
            }
        }
    }
}

/// Candidate coarse batches are priority prefixes of the pending set. The
/// largest batch of at least two members whose table WCET fits before the
/// earliest future release of any task is chosen; otherwise the single
/// highest-priority coarse subtask runs (which needs no runtime check).
pub fn select_coarse_batch(
    state: &SchedulerState,
    now: Duration,
    tables: &BatchWcetTables,
) -> Decision {
    debug_assert!(
        state
            .active_coarse
            .windows(2)
            .all(|w| w[0].priority < w[1].priority),
        "active coarse set must be sorted by priority"
    );
    let pending = &state.active_coarse;
    if pending.len() >= 2 {
        let slack = state.coarse_slack(now);
        for size in (2..=pending.len()).rev() {
            if let Some(batch_wcet) = tables.coarse(size) {
                if batch_wcet <= slack {
                    return Decision::RunCoarseBatch(
                        pending[..size].iter().map(|p| p.task).collect(),
                    );
                }
            }
        }
    }
    Decision::RunCoarse(pending[0].task)
}

/// Individual fine admission: the subtask must fit inside the coarse slack
/// window and finish by its own deadline.
pub fn admit_individual_fine(
    wcet: Duration,
    now: Duration,
    coarse_slack: Duration,
    deadline: Duration,
) -> bool {
    wcet <= coarse_slack && now.saturating_add(wcet) <= deadline
}

/// A fine subtask as seen by the partitioner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FineRequest {
    pub task: TaskId,
    pub level: WorkloadLevel,
    pub deadline: Duration,
}

/// Sorts pending fine subtasks into the partitioner's canonical order:
/// non-decreasing workload level, ties by ascending task id.
pub fn sorted_requests(pending: &[FinePending]) -> Vec<FineRequest> {
    let mut requests: Vec<FineRequest> = pending
        .iter()
        .map(|f| FineRequest {
            task: f.task,
            level: f.level,
            deadline: f.deadline,
        })
        .collect();
    requests.sort_by_key(|r| (r.level, r.task));
    requests
}

/// Full table of one partitioning run over `n` requests.
///
/// `dba[k]` is the minimal makespan of a feasible partition of the first
/// `k` requests (`dba[0] = 0`), `cost[k-1][j-1]` the candidate that makes
/// `(j..=k)` the last batch, and `chosen[k-1]` the minimizing `j`.
/// `None` marks infeasibility.
#[derive(Clone, Debug)]
pub struct DbaComputation {
    pub dba: Vec<Option<Duration>>,
    pub cost: Vec<Vec<Option<Duration>>>,
    pub chosen: Vec<Option<usize>>,
}

impl DbaComputation {
    /// Largest prefix length with a feasible partition, if any.
    pub fn feasible_prefix(&self) -> Option<usize> {
        (1..self.dba.len()).rev().find(|&k| self.dba[k].is_some())
    }
}

/// Runs the partition DP. `requests` must be in canonical sorted order.
///
/// A candidate last batch `(j..=k)` is feasible iff, appended after the
/// minimal-makespan partition of the first `j-1` requests, it finishes
/// within `coarse_slack` of `now` and no later than any member's deadline.
/// Batch sizes missing from the table are infeasible. Cost ties prefer the
/// smallest `j` (the largest last batch), which means fewer dispatches.
pub fn dba_table(
    requests: &[FineRequest],
    now: Duration,
    coarse_slack: Duration,
    tables: &BatchWcetTables,
) -> DbaComputation {
    debug_assert!(
        requests
            .windows(2)
            .all(|w| (w[0].level, w[0].task) <= (w[1].level, w[1].task)),
        "requests must be sorted by (level, id)"
    );
    let n = requests.len();
    let mut dba: Vec<Option<Duration>> = vec![None; n + 1];
    dba[0] = Some(Duration::ZERO);
    let mut cost: Vec<Vec<Option<Duration>>> = Vec::with_capacity(n);
    let mut chosen: Vec<Option<usize>> = vec![None; n];
    for k in 1..=n {
        let mut row: Vec<Option<Duration>> = vec![None; k];
        let mut min_deadline = Duration::MAX;
        for j in (1..=k).rev() {
            min_deadline = min_deadline.min(requests[j - 1].deadline);
            let Some(prefix) = dba[j - 1] else { continue };
            let Some(batch_wcet) = tables.fine(requests[k - 1].level, k - j + 1) else {
                continue;
            };
            let makespan = prefix + batch_wcet;
            let finish = now.saturating_add(makespan);
            if makespan <= coarse_slack && finish <= min_deadline {
                row[j - 1] = Some(makespan);
            }
        }
        let mut best: Option<(Duration, usize)> = None;
        for (idx, entry) in row.iter().enumerate() {
            if let Some(value) = entry {
                if best.is_none_or(|(b, _)| *value < b) {
                    best = Some((*value, idx + 1));
                }
            }
        }
        if let Some((value, j)) = best {
            dba[k] = Some(value);
            chosen[k - 1] = Some(j);
        }
        cost.push(row);
    }
    DbaComputation { dba, cost, chosen }
}

/// Partitions the sorted pending fine subtasks into an ordered batch
/// sequence. When no full partition is feasible, the longest feasible
/// prefix runs and the remaining subtasks stay queued; an empty result
/// means nothing can run at all.
pub fn dba_partition(
    requests: &[FineRequest],
    now: Duration,
    coarse_slack: Duration,
    tables: &BatchWcetTables,
) -> Vec<FineBatch> {
    let computation = dba_table(requests, now, coarse_slack, tables);
    let Some(prefix) = computation.feasible_prefix() else {
        return Vec::new();
    };
    let mut bounds = Vec::new();
    let mut k = prefix;
    while k > 0 {
        let j = computation.chosen[k - 1].expect("feasible prefix has a chosen split");
        bounds.push((j, k));
        k = j - 1;
    }
    bounds.reverse();
    bounds
        .into_iter()
        .map(|(j, k)| {
            let level = requests[k - 1].level;
            FineBatch {
                tasks: requests[j - 1..k].iter().map(|r| r.task).collect(),
                level,
                wcet: tables.fine(level, k - j + 1).expect("checked by the DP"),
            }
        })
        .collect()
}
