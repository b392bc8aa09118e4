//! Task model for two-stage detection pipelines: a safety-critical coarse
//! stage that always runs, and an optional fine refinement stage whose cost
//! depends on a per-frame workload level. Execution costs are table-driven.

use crate::time::Duration;
use crate::workload::HardnessModel;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Task identifier, unique within a task set.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Fine-stage workload level, ordered by the number of fine patches it
/// implies: `Zero < S < M < L`. `Zero` encodes a skipped fine stage, which
/// costs nothing.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum WorkloadLevel {
    Zero,
    S,
    M,
    L,
}

impl WorkloadLevel {
    /// The three levels a non-skipped fine stage can take.
    pub const BATCHED: [WorkloadLevel; 3] = [WorkloadLevel::S, WorkloadLevel::M, WorkloadLevel::L];

    pub fn letter(self) -> &'static str {
        match self {
            WorkloadLevel::Zero => "0",
            WorkloadLevel::S => "S",
            WorkloadLevel::M => "M",
            WorkloadLevel::L => "L",
        }
    }
}

impl fmt::Display for WorkloadLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

/// A measured execution-time pair. The mean drives stochastic sampling,
/// the WCET drives every guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecTime {
    pub mean: Duration,
    pub wcet: Duration,
}

impl ExecTime {
    pub const ZERO: ExecTime = ExecTime {
        mean: Duration::ZERO,
        wcet: Duration::ZERO,
    };

    pub fn new(mean: Duration, wcet: Duration) -> Self {
        ExecTime { mean, wcet }
    }

    pub fn from_ms(mean_ms: f64, wcet_ms: f64) -> Self {
        ExecTime {
            mean: Duration::from_ms_f64(mean_ms),
            wcet: Duration::from_ms_f64(wcet_ms),
        }
    }
}

/// One value per batched fine level (S, M, L).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerLevel<T> {
    pub s: T,
    pub m: T,
    pub l: T,
}

impl<T> PerLevel<T> {
    pub fn splat(value: T) -> Self
    where
        T: Clone,
    {
        PerLevel {
            s: value.clone(),
            m: value.clone(),
            l: value,
        }
    }

    /// Panics on `Zero`: the skipped stage has no table entry.
    pub fn get(&self, level: WorkloadLevel) -> &T {
        match level {
            WorkloadLevel::S => &self.s,
            WorkloadLevel::M => &self.m,
            WorkloadLevel::L => &self.l,
            WorkloadLevel::Zero => panic!("level Zero has no per-level entry"),
        }
    }
}

/// Cost components of the coarse stage: patch split, attention over the
/// fixed coarse patch grid, and hardness determination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseProfile {
    /// Coarse patch grid size, identical for every task in a set.
    pub patch_count: u32,
    pub patch_split: ExecTime,
    pub attention: ExecTime,
    pub hardness_determination: ExecTime,
}

impl CoarseProfile {
    /// Total coarse WCET: the component sum.
    pub fn wcet(&self) -> Duration {
        self.patch_split.wcet + self.attention.wcet + self.hardness_determination.wcet
    }

    /// Total coarse mean execution time: the component sum.
    pub fn mean(&self) -> Duration {
        self.patch_split.mean + self.attention.mean + self.hardness_determination.mean
    }
}

/// Cost components of the optional fine stage, per workload level:
/// selective patch split plus attention over the selected patches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineProfile {
    pub selective_patch_split: PerLevel<ExecTime>,
    pub attention: PerLevel<ExecTime>,
}

impl FineProfile {
    /// Fine WCET at `level`; `Zero` means the stage is skipped and costs 0.
    pub fn wcet(&self, level: WorkloadLevel) -> Duration {
        match level {
            WorkloadLevel::Zero => Duration::ZERO,
            _ => self.selective_patch_split.get(level).wcet + self.attention.get(level).wcet,
        }
    }

    pub fn mean(&self, level: WorkloadLevel) -> Duration {
        match level {
            WorkloadLevel::Zero => Duration::ZERO,
            _ => self.selective_patch_split.get(level).mean + self.attention.get(level).mean,
        }
    }
}

/// A strictly-periodic task with an implicit deadline and a fixed priority
/// (lower value = higher priority).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub period: Duration,
    pub deadline: Duration,
    pub priority: u32,
    pub coarse: CoarseProfile,
    pub fine: FineProfile,
    pub hardness: HardnessModel,
}

impl Task {
    pub fn coarse_wcet(&self) -> Duration {
        self.coarse.wcet()
    }

    pub fn fine_wcet(&self, level: WorkloadLevel) -> Duration {
        self.fine.wcet(level)
    }
}

/// Measured batch WCETs: coarse batches indexed by size, fine batches by
/// (padded level, size). A missing size means batches of that size are not
/// executable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchWcetTables {
    coarse: Vec<Duration>,
    fine: PerLevel<Vec<Duration>>,
}

impl BatchWcetTables {
    pub fn new(coarse: Vec<Duration>, fine: PerLevel<Vec<Duration>>) -> Self {
        BatchWcetTables { coarse, fine }
    }

    /// WCET of a coarse batch of `n` members (`n >= 1`).
    pub fn coarse(&self, n: usize) -> Option<Duration> {
        if n == 0 {
            return None;
        }
        self.coarse.get(n - 1).copied()
    }

    /// WCET of a fine batch of `n` members padded to `level`.
    pub fn fine(&self, level: WorkloadLevel, n: usize) -> Option<Duration> {
        if n == 0 || level == WorkloadLevel::Zero {
            return None;
        }
        self.fine.get(level).get(n - 1).copied()
    }

    pub fn max_coarse_batch(&self) -> usize {
        self.coarse.len()
    }

    pub fn max_fine_batch(&self) -> usize {
        self.fine.s.len().min(self.fine.m.len()).min(self.fine.l.len())
    }

    /// Builds tables from the task profiles with a flat batching gain:
    /// a batch of `n >= 2` costs `n * single * (1 - gain)`, clamped so the
    /// result stays non-decreasing in size. Size 1 is the single-subtask
    /// WCET. These tables are synthetic stand-ins for measured ones.
    pub fn synthesize(tasks: &[Task], gain: f64) -> Self {
        assert!((0.0..1.0).contains(&gain), "gain must be in [0, 1)");
        let n_max = tasks.len().max(1);
        let coarse_single = tasks
            .iter()
            .map(|t| t.coarse_wcet())
            .max()
            .unwrap_or(Duration::ZERO);
        let scale = |base: Duration, n: usize| -> Duration {
            Duration::from_us(((n as f64) * base.as_us() as f64 * (1.0 - gain)).round() as u64)
        };
        let build = |base: Duration| -> Vec<Duration> {
            let mut out = Vec::with_capacity(n_max);
            out.push(base);
            for n in 2..=n_max {
                let prev = out[n - 2];
                out.push(prev.max(scale(base, n)));
            }
            out
        };
        let fine_single = |level| {
            tasks
                .iter()
                .map(|t| t.fine_wcet(level))
                .max()
                .unwrap_or(Duration::ZERO)
        };
        BatchWcetTables {
            coarse: build(coarse_single),
            fine: PerLevel {
                s: build(fine_single(WorkloadLevel::S)),
                m: build(fine_single(WorkloadLevel::M)),
                l: build(fine_single(WorkloadLevel::L)),
            },
        }
    }
}

/// A broken consistency rule found by [`validate_task_set`] or
/// [`validate_tables`]. An empty report means the input is usable.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    MeanExceedsWcet {
        task: TaskId,
        component: &'static str,
    },
    AttentionNotMonotone {
        task: TaskId,
        measure: &'static str,
    },
    PatchCountMismatch {
        task: TaskId,
        expected: u32,
        found: u32,
    },
    DeadlineNotEqualPeriod {
        task: TaskId,
    },
    ZeroPeriod {
        task: TaskId,
    },
    DuplicatePriority {
        priority: u32,
    },
    DuplicateTaskId {
        id: TaskId,
    },
    BadHardness {
        task: TaskId,
        reason: String,
    },
    MissingCoarseSingle,
    CoarseSingleMismatch {
        task: TaskId,
        task_wcet: Duration,
        table: Duration,
    },
    MissingFineSingle {
        level: WorkloadLevel,
    },
    FineSingleMismatch {
        task: TaskId,
        level: WorkloadLevel,
        task_wcet: Duration,
        table: Duration,
    },
    CoarseBatchingProperty {
        size: usize,
        value: Duration,
        bound: Duration,
    },
    FineBatchingProperty {
        level: WorkloadLevel,
        size: usize,
        value: Duration,
        bound: Duration,
    },
    FineLevelOrder {
        size: usize,
        lower: WorkloadLevel,
        upper: WorkloadLevel,
    },
    FineSizeOrder {
        level: WorkloadLevel,
        size: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MeanExceedsWcet { task, component } => {
                write!(f, "task {task}: mean exceeds WCET for {component}")
            }
            Violation::AttentionNotMonotone { task, measure } => {
                write!(f, "task {task}: fine attention {measure} not monotone in level")
            }
            Violation::PatchCountMismatch {
                task,
                expected,
                found,
            } => write!(
                f,
                "task {task}: coarse patch count {found} differs from {expected}"
            ),
            Violation::DeadlineNotEqualPeriod { task } => {
                write!(f, "task {task}: deadline must equal period")
            }
            Violation::ZeroPeriod { task } => write!(f, "task {task}: period must be positive"),
            Violation::DuplicatePriority { priority } => {
                write!(f, "priority {priority} assigned to more than one task")
            }
            Violation::DuplicateTaskId { id } => {
                write!(f, "task id {id} used more than once")
            }
            Violation::BadHardness { task, reason } => {
                write!(f, "task {task}: invalid hardness model: {reason}")
            }
            Violation::MissingCoarseSingle => {
                write!(f, "coarse batch table has no size-1 entry")
            }
            Violation::CoarseSingleMismatch {
                task,
                task_wcet,
                table,
            } => write!(
                f,
                "coarse(1) = {table} does not match task {task} coarse WCET {task_wcet}"
            ),
            Violation::MissingFineSingle { level } => {
                write!(f, "fine batch table has no size-1 entry for level {level}")
            }
            Violation::FineSingleMismatch {
                task,
                level,
                task_wcet,
                table,
            } => write!(
                f,
                "fine({level},1) = {table} does not match task {task} fine WCET {task_wcet}"
            ),
            Violation::CoarseBatchingProperty { size, value, bound } => write!(
                f,
                "coarse({size}) = {value} exceeds member-sum bound {bound}"
            ),
            Violation::FineBatchingProperty {
                level,
                size,
                value,
                bound,
            } => write!(
                f,
                "fine({level},{size}) = {value} exceeds member-sum bound {bound}"
            ),
            Violation::FineLevelOrder { size, lower, upper } => write!(
                f,
                "fine table not monotone in level at size {size}: {lower} > {upper}"
            ),
            Violation::FineSizeOrder { level, size } => write!(
                f,
                "fine({level}) table decreases from size {} to {size}",
                size - 1
            ),
        }
    }
}

/// Checks the per-task invariants: exact component ordering (mean <= WCET),
/// fine attention monotone in level, a shared coarse patch count, implicit
/// deadlines, positive periods, unique priorities, and a valid hardness
/// model.
pub fn validate_task_set(tasks: &[Task]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen_priorities = std::collections::BTreeMap::new();
    let mut seen_ids = std::collections::BTreeMap::new();
    let expected_patches = tasks.first().map(|t| t.coarse.patch_count);
    for task in tasks {
        *seen_ids.entry(task.id).or_insert(0u32) += 1;
        let comps: [(&'static str, ExecTime); 3] = [
            ("coarse patch split", task.coarse.patch_split),
            ("coarse attention", task.coarse.attention),
            ("hardness determination", task.coarse.hardness_determination),
        ];
        for (name, c) in comps {
            if c.mean > c.wcet {
                out.push(Violation::MeanExceedsWcet {
                    task: task.id,
                    component: name,
                });
            }
        }
        for level in WorkloadLevel::BATCHED {
            let sps = task.fine.selective_patch_split.get(level);
            let at = task.fine.attention.get(level);
            if sps.mean > sps.wcet {
                out.push(Violation::MeanExceedsWcet {
                    task: task.id,
                    component: "fine selective patch split",
                });
            }
            if at.mean > at.wcet {
                out.push(Violation::MeanExceedsWcet {
                    task: task.id,
                    component: "fine attention",
                });
            }
        }
        let at = &task.fine.attention;
        if at.s.wcet > at.m.wcet || at.m.wcet > at.l.wcet {
            out.push(Violation::AttentionNotMonotone {
                task: task.id,
                measure: "wcet",
            });
        }
        if at.s.mean > at.m.mean || at.m.mean > at.l.mean {
            out.push(Violation::AttentionNotMonotone {
                task: task.id,
                measure: "mean",
            });
        }
        if let Some(expected) = expected_patches {
            if task.coarse.patch_count != expected {
                out.push(Violation::PatchCountMismatch {
                    task: task.id,
                    expected,
                    found: task.coarse.patch_count,
                });
            }
        }
        if task.deadline != task.period {
            out.push(Violation::DeadlineNotEqualPeriod { task: task.id });
        }
        if task.period.is_zero() {
            out.push(Violation::ZeroPeriod { task: task.id });
        }
        if let Err(reason) = task.hardness.check() {
            out.push(Violation::BadHardness {
                task: task.id,
                reason,
            });
        }
        *seen_priorities.entry(task.priority).or_insert(0u32) += 1;
    }
    for (priority, count) in seen_priorities {
        if count > 1 {
            out.push(Violation::DuplicatePriority { priority });
        }
    }
    for (id, count) in seen_ids {
        if count > 1 {
            out.push(Violation::DuplicateTaskId { id });
        }
    }
    out
}

/// Checks every batch-table invariant against the task set: size-1 entries
/// match the single-subtask WCETs, no entry exceeds the sum of its members'
/// individual WCETs, and the fine table is monotone in level and size.
/// Returns every violated rule; an empty report means the tables are valid.
pub fn validate_tables(tasks: &[Task], tables: &BatchWcetTables) -> Vec<Violation> {
    let mut out = Vec::new();

    match tables.coarse(1) {
        None => out.push(Violation::MissingCoarseSingle),
        Some(single) => {
            for task in tasks {
                if task.coarse_wcet() != single {
                    out.push(Violation::CoarseSingleMismatch {
                        task: task.id,
                        task_wcet: task.coarse_wcet(),
                        table: single,
                    });
                }
            }
            for n in 2..=tables.max_coarse_batch() {
                let value = tables.coarse(n).unwrap();
                let bound = single * n as u64;
                if value > bound {
                    out.push(Violation::CoarseBatchingProperty {
                        size: n,
                        value,
                        bound,
                    });
                }
            }
        }
    }

    for level in WorkloadLevel::BATCHED {
        match tables.fine(level, 1) {
            None => out.push(Violation::MissingFineSingle { level }),
            Some(single) => {
                for task in tasks {
                    if task.fine_wcet(level) != single {
                        out.push(Violation::FineSingleMismatch {
                            task: task.id,
                            level,
                            task_wcet: task.fine_wcet(level),
                            table: single,
                        });
                    }
                }
                let entries = tables.fine.get(level);
                for n in 2..=entries.len() {
                    let value = entries[n - 1];
                    let bound = single * n as u64;
                    if value > bound {
                        out.push(Violation::FineBatchingProperty {
                            level,
                            size: n,
                            value,
                            bound,
                        });
                    }
                    if value < entries[n - 2] {
                        out.push(Violation::FineSizeOrder { level, size: n });
                    }
                }
            }
        }
    }

    let pairs = [
        (WorkloadLevel::S, WorkloadLevel::M),
        (WorkloadLevel::M, WorkloadLevel::L),
    ];
    for (lo, hi) in pairs {
        let lo_entries = tables.fine.get(lo);
        let hi_entries = tables.fine.get(hi);
        for n in 1..=lo_entries.len().min(hi_entries.len()) {
            if lo_entries[n - 1] > hi_entries[n - 1] {
                out.push(Violation::FineLevelOrder {
                    size: n,
                    lower: lo,
                    upper: hi,
                });
            }
        }
    }

    out
}
