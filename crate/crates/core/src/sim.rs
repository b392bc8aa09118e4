//! Deterministic discrete-event execution of a task set under a policy
//! variant on one exclusive compute resource.
//!
//! Releases are strictly periodic from t = 0 up to (exclusive) the horizon.
//! Scheduling decisions happen exactly at job completions and at arrivals
//! into an idle resource; dispatched work runs to completion. A task's new
//! release closes its previous job: an unfinished coarse stage records a
//! deadline miss, a still-pending fine stage expires. After the horizon no
//! new jobs are released, but the engine drains until every released job is
//! closed, so tail jobs are neither cut short nor misclassified.

use crate::model::{BatchWcetTables, Task, TaskId, WorkloadLevel};
use crate::policy::{
    self, CoarsePending, Decision, FineBatch, FinePending, PolicyVariant, SchedulerState,
};
use crate::time::Duration;
use crate::workload::{self, FrameOutcome};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::fmt;
use thiserror::Error;

/// How execution times are drawn for dispatched work.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Every work item takes exactly its WCET.
    Wcet,
    /// Uniform on `[max(1us, 2*mean - wcet), wcet]`, so the draw averages
    /// to the configured mean (up to clipping at 1us).
    MeanCentered,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Wcet => "wcet",
            SamplingMode::MeanCentered => "mean-centered",
        })
    }
}

/// Run parameters. `initial_busy_until` pre-occupies the resource from the
/// start of time, which is how the critical-instant harness injects a
/// lower-priority blocker that began just before t = 0.
#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    pub horizon: Duration,
    pub seed: u64,
    pub sampling: SamplingMode,
    /// Charged on the resource ahead of each decision's dispatched work.
    pub scheduler_overhead: Duration,
    pub initial_busy_until: Option<Duration>,
}

impl SimConfig {
    pub fn new(horizon: Duration, seed: u64) -> Self {
        SimConfig {
            horizon,
            seed,
            sampling: SamplingMode::Wcet,
            scheduler_overhead: Duration::ZERO,
            initial_busy_until: None,
        }
    }
}

/// Draws one execution time between the configured mean and WCET.
pub fn sample_execution_time<R: Rng + ?Sized>(
    mean: Duration,
    wcet: Duration,
    mode: SamplingMode,
    rng: &mut R,
) -> Duration {
    debug_assert!(mean <= wcet, "mean {mean} above wcet {wcet}");
    match mode {
        SamplingMode::Wcet => wcet,
        SamplingMode::MeanCentered => {
            if mean == wcet {
                return wcet;
            }
            let lo = Duration::from_us(1).max(Duration::from_us(
                (2 * mean.as_us()).saturating_sub(wcet.as_us()),
            ));
            Duration::from_us(rng.random_range(lo.as_us()..=wcet.as_us()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Release,
    DispatchCoarse,
    DispatchCoarseBatch,
    DispatchFine,
    DispatchFineBatch,
    Complete,
    CoarseDeadlineMiss,
    FineExpired,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Release => "release",
            EventKind::DispatchCoarse => "dispatch_coarse",
            EventKind::DispatchCoarseBatch => "dispatch_coarse_batch",
            EventKind::DispatchFine => "dispatch_fine",
            EventKind::DispatchFineBatch => "dispatch_fine_batch",
            EventKind::Complete => "complete",
            EventKind::CoarseDeadlineMiss => "coarse_deadline_miss",
            EventKind::FineExpired => "fine_expired",
        }
    }
}

/// One trace record. Dispatches carry the batch composition (descending
/// priority for coarse batches, workload order for fine batches), the
/// sampled duration, and for fine work the padded level; the matching
/// `Complete` mirrors that payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: Duration,
    pub kind: EventKind,
    pub tasks: Vec<TaskId>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub level: Option<WorkloadLevel>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub duration: Option<Duration>,
}

/// Ground truth for one released job, kept alongside the event log so the
/// trace is self-contained for metrics and audits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRecord {
    pub task: TaskId,
    pub index: u64,
    pub release: Duration,
    pub deadline: Duration,
    pub outcome: FrameOutcome,
    pub coarse_completed: Option<Duration>,
    pub fine_completed: Option<Duration>,
    pub coarse_missed: bool,
    pub fine_expired: bool,
}

/// Complete, replayable record of one simulation run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub jobs: Vec<JobRecord>,
}

impl Trace {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Worst observed coarse response time per task, over completed jobs.
    pub fn max_coarse_response(&self) -> BTreeMap<TaskId, Duration> {
        let mut out = BTreeMap::new();
        for job in &self.jobs {
            if let Some(done) = job.coarse_completed {
                let response = done - job.release;
                let entry = out.entry(job.task).or_insert(Duration::ZERO);
                *entry = (*entry).max(response);
            }
        }
        out
    }

    /// One event per row: `time_us,kind,task_ids,batch_size,duration_us`.
    /// Task ids within a row are semicolon-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_us,kind,task_ids,batch_size,duration_us\n");
        for event in &self.events {
            let ids: Vec<String> = event.tasks.iter().map(|t| t.to_string()).collect();
            let duration = event
                .duration
                .map(|d| d.as_us().to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                event.time.as_us(),
                event.kind.name(),
                ids.join(";"),
                event.tasks.len(),
                duration
            ));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("invalid task set: {}", format_violations(.0))]
    InvalidTaskSet(Vec<crate::model::Violation>),
    #[error("invalid batch tables: {}", format_violations(.0))]
    InvalidTables(Vec<crate::model::Violation>),
}

fn format_violations(violations: &[crate::model::Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

enum Occupancy {
    /// Pre-history blocker occupying the resource until the given instant;
    /// produces no trace events.
    Blocker { finish: Duration },
    Work(Running),
}

impl Occupancy {
    fn finish(&self) -> Duration {
        match self {
            Occupancy::Blocker { finish } => *finish,
            Occupancy::Work(w) => w.finish,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum WorkKind {
    Coarse,
    Fine(WorkloadLevel),
}

struct Running {
    kind: WorkKind,
    /// Indexes into the jobs vector, in dispatch order.
    members: Vec<usize>,
    finish: Duration,
    sampled: Duration,
}

/// Per-task runtime bookkeeping.
struct TaskRt {
    /// Next release/boundary instant, `None` once the task is finished.
    event_next: Option<Duration>,
    /// Index of the open job in the jobs vector.
    current: Option<usize>,
    coarse_queued: bool,
    fine_pending: Option<WorkloadLevel>,
    releases: u64,
}

struct Engine<'a> {
    tasks: &'a [Task],
    variant: PolicyVariant,
    tables: &'a BatchWcetTables,
    cfg: SimConfig,
    rng: ChaCha8Rng,
    rt: Vec<TaskRt>,
    jobs: Vec<JobRecord>,
    dispatched: Vec<bool>,
    events: Vec<TraceEvent>,
    busy: Option<Occupancy>,
    plan: VecDeque<FineBatch>,
    /// Task indexes in ascending id order, the processing order for
    /// same-instant releases.
    id_order: Vec<usize>,
    /// Task indexes in ascending priority order.
    priority_order: Vec<usize>,
}

/// Runs the simulation. The task set and tables must validate; the horizon
/// must be positive. The returned trace is complete and replayable:
/// identical inputs produce identical traces.
pub fn run(
    tasks: &[Task],
    variant: PolicyVariant,
    tables: &BatchWcetTables,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    if cfg.horizon.is_zero() {
        return Err(SimError::ZeroHorizon);
    }
    let task_violations = crate::model::validate_task_set(tasks);
    if !task_violations.is_empty() {
        return Err(SimError::InvalidTaskSet(task_violations));
    }
    let table_violations = crate::model::validate_tables(tasks, tables);
    if !table_violations.is_empty() {
        return Err(SimError::InvalidTables(table_violations));
    }

    let mut id_order: Vec<usize> = (0..tasks.len()).collect();
    id_order.sort_by_key(|&i| tasks[i].id);
    let mut priority_order: Vec<usize> = (0..tasks.len()).collect();
    priority_order.sort_by_key(|&i| tasks[i].priority);

    let mut engine = Engine {
        tasks,
        variant,
        tables,
        cfg: *cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        rt: tasks
            .iter()
            .map(|_| TaskRt {
                event_next: Some(Duration::ZERO),
                current: None,
                coarse_queued: false,
                fine_pending: None,
                releases: 0,
            })
            .collect(),
        jobs: Vec::new(),
        dispatched: Vec::new(),
        events: Vec::new(),
        busy: cfg
            .initial_busy_until
            .filter(|d| !d.is_zero())
            .map(|finish| Occupancy::Blocker { finish }),
        plan: VecDeque::new(),
        id_order,
        priority_order,
    };
    engine.run_loop();
    Ok(Trace {
        events: engine.events,
        jobs: engine.jobs,
    })
}

impl<'a> Engine<'a> {
    fn run_loop(&mut self) {
        loop {
            let mut next: Option<Duration> = self.busy.as_ref().map(|o| o.finish());
            for rt in &self.rt {
                if let Some(e) = rt.event_next {
                    next = Some(next.map_or(e, |n| n.min(e)));
                }
            }
            let Some(now) = next else { break };

            let mut completed = false;
            let mut released = false;

            // Completions free the resource before the arrival check.
            if self.busy.as_ref().is_some_and(|o| o.finish() == now) {
                match self.busy.take().unwrap() {
                    Occupancy::Blocker { .. } => {}
                    Occupancy::Work(running) => self.complete(now, running),
                }
                completed = true;
            }

            for i in 0..self.id_order.len() {
                let idx = self.id_order[i];
                if self.rt[idx].event_next == Some(now) {
                    released |= self.boundary(idx, now);
                }
            }

            if self.busy.is_none() {
                self.dispatch_instant(now, completed, released);
            }
        }
        debug_assert!(self.plan.is_empty());
    }

    /// Closes the expiring job of task `idx` (deadline = `now`) and, while
    /// releases are still due, opens the next one. Returns whether a new
    /// job arrived.
    fn boundary(&mut self, idx: usize, now: Duration) -> bool {
        let task = &self.tasks[idx];
        if let Some(job_idx) = self.rt[idx].current {
            if self.jobs[job_idx].coarse_completed.is_none() && !self.jobs[job_idx].coarse_missed {
                self.jobs[job_idx].coarse_missed = true;
                if !self.dispatched[job_idx] {
                    // Stale queued work is dropped; a late-running stage is
                    // non-preemptive and finishes on its own.
                    self.rt[idx].coarse_queued = false;
                }
                self.push_event(now, EventKind::CoarseDeadlineMiss, vec![task.id], None, None);
            }
            if self.rt[idx].fine_pending.take().is_some() {
                self.jobs[job_idx].fine_expired = true;
                self.push_event(now, EventKind::FineExpired, vec![task.id], None, None);
            }
        }
        if now < self.cfg.horizon {
            let outcome = workload::sample_frame(&task.hardness, &mut self.rng);
            let job_idx = self.jobs.len();
            self.jobs.push(JobRecord {
                task: task.id,
                index: self.rt[idx].releases,
                release: now,
                deadline: now + task.deadline,
                outcome,
                coarse_completed: None,
                fine_completed: None,
                coarse_missed: false,
                fine_expired: false,
            });
            self.dispatched.push(false);
            self.rt[idx].releases += 1;
            self.rt[idx].current = Some(job_idx);
            self.rt[idx].coarse_queued = true;
            self.rt[idx].event_next = Some(now + task.period);
            self.push_event(now, EventKind::Release, vec![task.id], None, None);
            true
        } else {
            self.rt[idx].current = None;
            self.rt[idx].coarse_queued = false;
            self.rt[idx].event_next = None;
            false
        }
    }

    fn complete(&mut self, now: Duration, running: Running) {
        let ids: Vec<TaskId> = running
            .members
            .iter()
            .map(|&j| self.jobs[j].task)
            .collect();
        let level = match running.kind {
            WorkKind::Fine(level) => Some(level),
            WorkKind::Coarse => None,
        };
        self.push_event(now, EventKind::Complete, ids, level, Some(running.sampled));
        for &job_idx in &running.members {
            let task_idx = self.task_index(self.jobs[job_idx].task);
            match running.kind {
                WorkKind::Coarse => {
                    self.jobs[job_idx].coarse_completed = Some(now);
                    if !self.jobs[job_idx].coarse_missed {
                        if let FrameOutcome::Hard(level) = self.jobs[job_idx].outcome {
                            self.rt[task_idx].fine_pending = Some(level);
                        }
                    }
                }
                WorkKind::Fine(_) => {
                    self.jobs[job_idx].fine_completed = Some(now);
                }
            }
        }
    }

    fn dispatch_instant(&mut self, now: Duration, completed: bool, released: bool) {
        if !self.plan.is_empty() {
            if self.rt.iter().any(|rt| rt.coarse_queued) {
                // A coarse release landed exactly on a batch boundary; the
                // remaining planned batches are re-decided below.
                self.plan.clear();
            } else {
                let batch = self.plan.pop_front().unwrap();
                self.dispatch_fine_batch(now, batch, false);
                return;
            }
        }
        if !(completed || released) {
            return;
        }
        let effective_now = now + self.cfg.scheduler_overhead;
        let state = self.build_state(now);
        match policy::decide(&state, effective_now, self.variant, self.tables) {
            Decision::Idle => {}
            Decision::RunCoarse(task_id) => {
                let idx = self.task_index(task_id);
                let sampled = sample_execution_time(
                    self.tasks[idx].coarse.mean(),
                    self.tasks[idx].coarse.wcet(),
                    self.cfg.sampling,
                    &mut self.rng,
                );
                self.start_coarse(effective_now, vec![task_id], sampled, EventKind::DispatchCoarse);
            }
            Decision::RunCoarseBatch(task_ids) => {
                let wcet = self
                    .tables
                    .coarse(task_ids.len())
                    .expect("policy only batches table sizes");
                let mean = self.scaled_batch_mean(&task_ids, None, wcet);
                let sampled =
                    sample_execution_time(mean, wcet, self.cfg.sampling, &mut self.rng);
                self.start_coarse(
                    effective_now,
                    task_ids,
                    sampled,
                    EventKind::DispatchCoarseBatch,
                );
            }
            Decision::RunFine(task_id) => {
                let idx = self.task_index(task_id);
                let level = self.rt[idx]
                    .fine_pending
                    .expect("policy admits only pending fine work");
                let batch = FineBatch {
                    tasks: vec![task_id],
                    level,
                    wcet: self.tasks[idx].fine.wcet(level),
                };
                self.dispatch_fine_single(effective_now, batch);
            }
            Decision::RunFineBatchSequence(batches) => {
                let mut queue: VecDeque<FineBatch> = batches.into();
                let first = queue.pop_front().expect("nonempty sequence");
                self.plan = queue;
                self.dispatch_fine_batch(now, first, true);
            }
        }
    }

    fn start_coarse(
        &mut self,
        start: Duration,
        task_ids: Vec<TaskId>,
        sampled: Duration,
        kind: EventKind,
    ) {
        let mut members = Vec::with_capacity(task_ids.len());
        for task_id in &task_ids {
            let idx = self.task_index(*task_id);
            let job_idx = self.rt[idx].current.expect("pending coarse has a job");
            debug_assert!(self.rt[idx].coarse_queued);
            self.rt[idx].coarse_queued = false;
            self.dispatched[job_idx] = true;
            members.push(job_idx);
        }
        self.push_event(start, kind, task_ids, None, Some(sampled));
        self.busy = Some(Occupancy::Work(Running {
            kind: WorkKind::Coarse,
            members,
            finish: start + sampled,
            sampled,
        }));
    }

    fn dispatch_fine_single(&mut self, start: Duration, batch: FineBatch) {
        let idx = self.task_index(batch.tasks[0]);
        let level = self.rt[idx].fine_pending.take().expect("pending fine");
        let job_idx = self.rt[idx].current.expect("pending fine has a job");
        let sampled = sample_execution_time(
            self.tasks[idx].fine.mean(level),
            self.tasks[idx].fine.wcet(level),
            self.cfg.sampling,
            &mut self.rng,
        );
        self.push_event(
            start,
            EventKind::DispatchFine,
            batch.tasks.clone(),
            Some(level),
            Some(sampled),
        );
        self.busy = Some(Occupancy::Work(Running {
            kind: WorkKind::Fine(level),
            members: vec![job_idx],
            finish: start + sampled,
            sampled,
        }));
    }

    fn dispatch_fine_batch(&mut self, now: Duration, batch: FineBatch, charge_overhead: bool) {
        let start = if charge_overhead {
            now + self.cfg.scheduler_overhead
        } else {
            now
        };
        let mean = self.scaled_batch_mean(&batch.tasks, Some(batch.level), batch.wcet);
        let sampled = sample_execution_time(mean, batch.wcet, self.cfg.sampling, &mut self.rng);
        let mut members = Vec::with_capacity(batch.tasks.len());
        for task_id in &batch.tasks {
            let idx = self.task_index(*task_id);
            self.rt[idx].fine_pending.take().expect("planned fine is pending");
            members.push(self.rt[idx].current.expect("pending fine has a job"));
        }
        self.push_event(
            start,
            EventKind::DispatchFineBatch,
            batch.tasks,
            Some(batch.level),
            Some(sampled),
        );
        self.busy = Some(Occupancy::Work(Running {
            kind: WorkKind::Fine(batch.level),
            members,
            finish: start + sampled,
            sampled,
        }));
    }

    /// Batch mean derived from the members' single-subtask statistics:
    /// the batch WCET scaled by the members' mean-to-WCET ratio.
    fn scaled_batch_mean(
        &self,
        task_ids: &[TaskId],
        level: Option<WorkloadLevel>,
        batch_wcet: Duration,
    ) -> Duration {
        let mut sum_mean: u128 = 0;
        let mut sum_wcet: u128 = 0;
        for task_id in task_ids {
            let task = &self.tasks[self.task_index(*task_id)];
            let (mean, wcet) = match level {
                None => (task.coarse.mean(), task.coarse.wcet()),
                Some(level) => (task.fine.mean(level), task.fine.wcet(level)),
            };
            sum_mean += mean.as_us() as u128;
            sum_wcet += wcet.as_us() as u128;
        }
        if sum_wcet == 0 {
            return batch_wcet;
        }
        Duration::from_us((batch_wcet.as_us() as u128 * sum_mean / sum_wcet) as u64)
    }

    fn build_state(&self, now: Duration) -> SchedulerState {
        let mut active_coarse = Vec::new();
        for &idx in &self.priority_order {
            if self.rt[idx].coarse_queued {
                active_coarse.push(CoarsePending {
                    task: self.tasks[idx].id,
                    priority: self.tasks[idx].priority,
                });
            }
        }
        let mut active_fine = Vec::new();
        for &idx in &self.id_order {
            if let Some(level) = self.rt[idx].fine_pending {
                let job_idx = self.rt[idx].current.expect("pending fine has a job");
                active_fine.push(FinePending {
                    task: self.tasks[idx].id,
                    priority: self.tasks[idx].priority,
                    level,
                    deadline: self.jobs[job_idx].deadline,
                    wcet: self.tasks[idx].fine.wcet(level),
                });
            }
        }
        let next_release = self
            .id_order
            .iter()
            .map(|&idx| (self.tasks[idx].id, next_periodic_release(&self.tasks[idx], now)))
            .collect();
        SchedulerState {
            active_coarse,
            active_fine,
            next_release,
        }
    }

    fn task_index(&self, id: TaskId) -> usize {
        self.tasks
            .iter()
            .position(|t| t.id == id)
            .expect("task id belongs to the set")
    }

    fn push_event(
        &mut self,
        time: Duration,
        kind: EventKind,
        tasks: Vec<TaskId>,
        level: Option<WorkloadLevel>,
        duration: Option<Duration>,
    ) {
        self.events.push(TraceEvent {
            time,
            kind,
            tasks,
            level,
            duration,
        });
    }
}

/// Earliest strictly-periodic release of `task` after instant `now`
/// (releases at `now` itself are considered already processed).
pub fn next_periodic_release(task: &Task, now: Duration) -> Duration {
    let period = task.period.as_us();
    Duration::from_us((now.as_us() / period + 1) * period)
}

/// Critical-instant harness for one task: synchronous release at t = 0
/// with the largest lower-priority coarse WCET already occupying the
/// resource since one microsecond before time zero. Returns the worst
/// coarse response the task shows within `horizon_periods` of the longest
/// period, under WCET sampling and coarse-only dispatch.
pub fn critical_instant_max_response(
    tasks: &[Task],
    task_id: TaskId,
    tables: &BatchWcetTables,
    horizon_periods: u64,
) -> Result<Option<Duration>, SimError> {
    let task = tasks
        .iter()
        .find(|t| t.id == task_id)
        .expect("task id belongs to the set");
    let blocker = tasks
        .iter()
        .filter(|t| t.priority > task.priority)
        .map(|t| t.coarse_wcet())
        .max()
        .unwrap_or(Duration::ZERO);
    let max_period = tasks
        .iter()
        .map(|t| t.period)
        .max()
        .unwrap_or(Duration::ZERO);
    let cfg = SimConfig {
        horizon: max_period * horizon_periods,
        seed: 0,
        sampling: SamplingMode::Wcet,
        scheduler_overhead: Duration::ZERO,
        initial_busy_until: Some(blocker.saturating_sub(Duration::from_us(1))),
    };
    let trace = run(tasks, PolicyVariant::C, tables, &cfg)?;
    Ok(trace.max_coarse_response().get(&task_id).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis;
    use crate::model::{ExecTime, PerLevel, Task};
    use crate::workload::{HardnessModel, Platform};

    fn task_from(platform: Platform, id: u32, period_ms: u64, hardness: HardnessModel) -> Task {
        let period = Duration::from_ms(period_ms);
        Task {
            id: TaskId(id),
            period,
            deadline: period,
            priority: 0,
            coarse: platform.coarse_profile(),
            fine: platform.fine_profile(),
            hardness,
        }
    }

    fn simple_task(id: u32, period_ms: u64, wcet_ms: f64) -> Task {
        let period = Duration::from_ms(period_ms);
        Task {
            id: TaskId(id),
            period,
            deadline: period,
            priority: 0,
            coarse: crate::model::CoarseProfile {
                patch_count: 1,
                patch_split: ExecTime::from_ms(wcet_ms, wcet_ms),
                attention: ExecTime::ZERO,
                hardness_determination: ExecTime::ZERO,
            },
            fine: crate::model::FineProfile {
                selective_patch_split: PerLevel::splat(ExecTime::ZERO),
                attention: PerLevel {
                    s: ExecTime::from_ms(5.0, 5.0),
                    m: ExecTime::from_ms(10.0, 10.0),
                    l: ExecTime::from_ms(15.0, 15.0),
                },
            },
            hardness: HardnessModel::ALWAYS_EASY,
        }
    }

    #[test]
    fn sampling_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean = Duration::from_ms(45);
        let wcet = Duration::from_ms(49);
        assert_eq!(
            sample_execution_time(mean, wcet, SamplingMode::Wcet, &mut rng),
            wcet
        );
        for _ in 0..1000 {
            let d = sample_execution_time(mean, wcet, SamplingMode::MeanCentered, &mut rng);
            assert!(d >= Duration::from_ms(41) && d <= wcet, "{d} out of range");
        }
        // Degenerate interval pins both modes.
        assert_eq!(
            sample_execution_time(wcet, wcet, SamplingMode::MeanCentered, &mut rng),
            wcet
        );
    }

    #[test]
    fn isolated_task_trace_counts() {
        let mut tasks = vec![simple_task(1, 100, 30.0)];
        analysis::rm_assign(&mut tasks);
        let tables = BatchWcetTables::synthesize(&tasks, 0.0);
        let cfg = SimConfig::new(Duration::from_ms(1000), 42);
        let trace = run(&tasks, PolicyVariant::C, &tables, &cfg).unwrap();
        assert_eq!(trace.count(EventKind::Release), 10);
        assert_eq!(trace.count(EventKind::DispatchCoarse), 10);
        assert_eq!(trace.count(EventKind::Complete), 10);
        assert_eq!(trace.count(EventKind::CoarseDeadlineMiss), 0);
        assert_eq!(trace.jobs.len(), 10);
    }

    #[test]
    fn case_study_pair_has_no_misses() {
        let mut tasks = vec![
            task_from(Platform::Tx2, 1, 1600, HardnessModel::default()),
            task_from(Platform::Tx2, 2, 2400, HardnessModel::default()),
        ];
        analysis::rm_assign(&mut tasks);
        let tables = BatchWcetTables::synthesize(&tasks, 0.35);
        let cfg = SimConfig::new(Duration::from_ms(48_000), 7);
        let trace = run(&tasks, PolicyVariant::C, &tables, &cfg).unwrap();
        assert_eq!(trace.count(EventKind::CoarseDeadlineMiss), 0);
        // Schedulable set: worst observed response stays within the bound.
        for (_, response) in trace.max_coarse_response() {
            assert!(response <= Duration::from_ms(1555));
        }
    }

    #[test]
    fn monolithic_shape_misses_quickly() {
        // A single task whose only stage carries the whole pipeline WCET
        // (coarse + fine at the largest level: 777.5 + 1516 ms) cannot fit
        // a 1600 ms period.
        let mut tasks = vec![simple_task(1, 1600, 2293.5)];
        analysis::rm_assign(&mut tasks);
        let tables = BatchWcetTables::synthesize(&tasks, 0.0);
        let cfg = SimConfig::new(Duration::from_ms(3200), 0);
        let trace = run(&tasks, PolicyVariant::C, &tables, &cfg).unwrap();
        assert!(trace.count(EventKind::CoarseDeadlineMiss) >= 1);
    }

    #[test]
    fn replay_is_byte_identical() {
        let mut tasks = vec![
            task_from(Platform::Orin, 1, 490, HardnessModel::default()),
            task_from(Platform::Orin, 2, 640, HardnessModel::default()),
            task_from(Platform::Orin, 3, 840, HardnessModel::default()),
            task_from(Platform::Orin, 4, 980, HardnessModel::default()),
        ];
        analysis::rm_assign(&mut tasks);
        let tables = BatchWcetTables::synthesize(&tasks, 0.35);
        let mut cfg = SimConfig::new(Duration::from_ms(20_000), 99);
        cfg.sampling = SamplingMode::MeanCentered;
        let a = run(&tasks, PolicyVariant::CBFB, &tables, &cfg).unwrap();
        let b = run(&tasks, PolicyVariant::CBFB, &tables, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        // A different seed changes the trace.
        let mut cfg2 = cfg;
        cfg2.seed = 100;
        let c = run(&tasks, PolicyVariant::CBFB, &tables, &cfg2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut tasks = vec![simple_task(1, 100, 30.0)];
        analysis::rm_assign(&mut tasks);
        let tables = BatchWcetTables::synthesize(&tasks, 0.0);
        let cfg = SimConfig::new(Duration::ZERO, 0);
        assert!(matches!(
            run(&tasks, PolicyVariant::C, &tables, &cfg),
            Err(SimError::ZeroHorizon)
        ));
        let bad_tables = BatchWcetTables::new(vec![Duration::from_ms(999)], {
            PerLevel::splat(vec![Duration::from_ms(5)])
        });
        let cfg = SimConfig::new(Duration::from_ms(100), 0);
        assert!(matches!(
            run(&tasks, PolicyVariant::C, &bad_tables, &cfg),
            Err(SimError::InvalidTables(_))
        ));
    }

    #[test]
    fn fine_expires_at_deadline_even_when_coarse_finishes_there() {
        // Coarse takes the whole period, so a hard frame's fine stage is
        // revealed exactly at the deadline and expires with zero budget.
        let mut task = simple_task(1, 100, 100.0);
        task.hardness = HardnessModel {
            p_hard: 1.0,
            level_dist: [0.0, 0.0, 1.0],
        };
        let mut tasks = vec![task];
        analysis::rm_assign(&mut tasks);
        let tables = BatchWcetTables::synthesize(&tasks, 0.0);
        let cfg = SimConfig::new(Duration::from_ms(300), 5);
        let trace = run(&tasks, PolicyVariant::CF, &tables, &cfg).unwrap();
        assert_eq!(trace.count(EventKind::CoarseDeadlineMiss), 0);
        assert_eq!(trace.count(EventKind::FineExpired), 3);
        assert_eq!(trace.count(EventKind::DispatchFine), 0);
    }

    #[test]
    fn scheduler_overhead_is_charged_before_work() {
        let mut tasks = vec![simple_task(1, 100, 30.0), simple_task(2, 100, 30.0)];
        analysis::rm_assign(&mut tasks);
        let tables = BatchWcetTables::synthesize(&tasks, 0.35);
        let mut cfg = SimConfig::new(Duration::from_ms(100), 0);
        cfg.scheduler_overhead = Duration::from_ms(5);
        let trace = run(&tasks, PolicyVariant::CBFB, &tables, &cfg).unwrap();
        // Both coarse stages batch (2 * 30 * 0.65 = 39 ms <= 95 ms of
        // slack after the 5 ms charge) and start only after it.
        let dispatch = trace
            .events
            .iter()
            .find(|e| e.kind == EventKind::DispatchCoarseBatch)
            .expect("batch dispatched");
        assert_eq!(dispatch.time, Duration::from_ms(5));
        assert_eq!(dispatch.tasks.len(), 2);
        assert_eq!(trace.count(EventKind::CoarseDeadlineMiss), 0);
        if let Err(errors) = crate::audit::audit_trace(&trace, &tasks, &tables) {
            panic!("{errors:?}");
        }
    }

    #[test]
    fn csv_has_fixed_header_and_row_shape() {
        let mut tasks = vec![simple_task(1, 100, 30.0)];
        analysis::rm_assign(&mut tasks);
        let tables = BatchWcetTables::synthesize(&tasks, 0.0);
        let cfg = SimConfig::new(Duration::from_ms(100), 0);
        let trace = run(&tasks, PolicyVariant::C, &tables, &cfg).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "time_us,kind,task_ids,batch_size,duration_us"
        );
        assert_eq!(lines.next().unwrap(), "0,release,1,1,");
        assert_eq!(lines.next().unwrap(), "0,dispatch_coarse,1,1,30000");
        assert_eq!(lines.next().unwrap(), "30000,complete,1,1,30000");
    }
}
