//! Replayed invariant checks over simulation traces.
//!
//! The auditor reconstructs the pending sets from the event log alone and
//! verifies, independently of the engine internals: resource exclusivity,
//! coarse-over-fine dominance, that every coarse batch is a priority prefix
//! of the pending set, that batch WCETs fit before every future release,
//! and that fine work always fits its members' deadlines and the release
//! window it was admitted into.

use crate::model::{BatchWcetTables, Task, TaskId};
use crate::sim::{next_periodic_release, EventKind, Trace, TraceEvent};
use crate::time::Duration;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AuditError {
    OverlappingExecution {
        time: Duration,
    },
    CompletionWithoutDispatch {
        time: Duration,
    },
    DispatchOfInactiveTask {
        time: Duration,
        task: TaskId,
    },
    CoarseNotHighestPriority {
        time: Duration,
        task: TaskId,
    },
    BatchNotPriorityPrefix {
        time: Duration,
        batch: Vec<TaskId>,
    },
    BatchPastNextRelease {
        time: Duration,
        finish_bound: Duration,
        next_release: Duration,
    },
    FineWhileCoarsePending {
        time: Duration,
    },
    FinePastDeadline {
        time: Duration,
        task: TaskId,
        finish_bound: Duration,
        deadline: Duration,
    },
    FinePastNextRelease {
        time: Duration,
        finish_bound: Duration,
        next_release: Duration,
    },
    DurationAboveWcet {
        time: Duration,
        sampled: Duration,
        wcet: Duration,
    },
    MissingTableEntry {
        time: Duration,
        size: usize,
    },
}

impl fmt::Display for AuditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditError::OverlappingExecution { time } => {
                write!(f, "overlapping execution at {time}")
            }
            AuditError::CompletionWithoutDispatch { time } => {
                write!(f, "completion without open dispatch at {time}")
            }
            AuditError::DispatchOfInactiveTask { time, task } => {
                write!(f, "dispatch of inactive task {task} at {time}")
            }
            AuditError::CoarseNotHighestPriority { time, task } => {
                write!(f, "coarse dispatch of {task} at {time} skips a higher-priority task")
            }
            AuditError::BatchNotPriorityPrefix { time, batch } => {
                write!(f, "coarse batch at {time} is not a priority prefix: {batch:?}")
            }
            AuditError::BatchPastNextRelease {
                time,
                finish_bound,
                next_release,
            } => write!(
                f,
                "coarse batch at {time} may finish {finish_bound}, past release {next_release}"
            ),
            AuditError::FineWhileCoarsePending { time } => {
                write!(f, "fine dispatch at {time} while coarse work is pending")
            }
            AuditError::FinePastDeadline {
                time,
                task,
                finish_bound,
                deadline,
            } => write!(
                f,
                "fine work at {time} may finish {finish_bound}, past deadline {deadline} of {task}"
            ),
            AuditError::FinePastNextRelease {
                time,
                finish_bound,
                next_release,
            } => write!(
                f,
                "fine work at {time} may finish {finish_bound}, past release {next_release}"
            ),
            AuditError::DurationAboveWcet {
                time,
                sampled,
                wcet,
            } => write!(f, "sampled duration {sampled} above WCET {wcet} at {time}"),
            AuditError::MissingTableEntry { time, size } => {
                write!(f, "batch of size {size} at {time} has no table entry")
            }
        }
    }
}

struct Auditor<'a> {
    tasks: &'a [Task],
    tables: &'a BatchWcetTables,
    errors: Vec<AuditError>,
    /// Pending coarse subtasks as (priority, id), i.e. priority-sorted.
    active_coarse: BTreeSet<(u32, TaskId)>,
    /// Deadline of each task's current job.
    deadline: BTreeMap<TaskId, Duration>,
    open_dispatch: bool,
    last_finish: Duration,
}

/// Replays the event log and returns every violated invariant.
pub fn audit_trace(
    trace: &Trace,
    tasks: &[Task],
    tables: &BatchWcetTables,
) -> Result<(), Vec<AuditError>> {
    let mut auditor = Auditor {
        tasks,
        tables,
        errors: Vec::new(),
        active_coarse: BTreeSet::new(),
        deadline: BTreeMap::new(),
        open_dispatch: false,
        last_finish: Duration::ZERO,
    };
    for event in &trace.events {
        auditor.step(event);
    }
    if auditor.errors.is_empty() {
        Ok(())
    } else {
        Err(auditor.errors)
    }
}

impl<'a> Auditor<'a> {
    fn task(&self, id: TaskId) -> &Task {
        self.tasks.iter().find(|t| t.id == id).expect("known task")
    }

    fn min_next_release(&self, now: Duration) -> Duration {
        self.tasks
            .iter()
            .map(|t| next_periodic_release(t, now))
            .min()
            .unwrap_or(Duration::MAX)
    }

    fn begin_execution(&mut self, event: &TraceEvent) {
        if self.open_dispatch || event.time < self.last_finish {
            self.errors
                .push(AuditError::OverlappingExecution { time: event.time });
        }
        self.open_dispatch = true;
    }

    fn check_wcet_bound(&mut self, event: &TraceEvent, wcet: Duration) {
        if let Some(sampled) = event.duration {
            if sampled > wcet {
                self.errors.push(AuditError::DurationAboveWcet {
                    time: event.time,
                    sampled,
                    wcet,
                });
            }
        }
    }

    fn step(&mut self, event: &TraceEvent) {
        match event.kind {
            EventKind::Release => {
                let id = event.tasks[0];
                let (priority, deadline) = {
                    let task = self.task(id);
                    (task.priority, task.deadline)
                };
                self.active_coarse.insert((priority, id));
                self.deadline.insert(id, event.time + deadline);
            }
            EventKind::CoarseDeadlineMiss => {
                let id = event.tasks[0];
                let priority = self.task(id).priority;
                // Queued stale work is dropped at its deadline; a running
                // stage was already removed at dispatch.
                self.active_coarse.remove(&(priority, id));
            }
            EventKind::FineExpired => {}
            EventKind::DispatchCoarse => {
                self.begin_execution(event);
                let id = event.tasks[0];
                let priority = self.task(id).priority;
                match self.active_coarse.first() {
                    Some(&(_, top)) if top == id => {}
                    Some(_) => self.errors.push(AuditError::CoarseNotHighestPriority {
                        time: event.time,
                        task: id,
                    }),
                    None => self.errors.push(AuditError::DispatchOfInactiveTask {
                        time: event.time,
                        task: id,
                    }),
                }
                self.check_wcet_bound(event, self.task(id).coarse_wcet());
                self.active_coarse.remove(&(priority, id));
            }
            EventKind::DispatchCoarseBatch => {
                self.begin_execution(event);
                let prefix: Vec<TaskId> = self
                    .active_coarse
                    .iter()
                    .take(event.tasks.len())
                    .map(|&(_, id)| id)
                    .collect();
                if prefix != event.tasks {
                    self.errors.push(AuditError::BatchNotPriorityPrefix {
                        time: event.time,
                        batch: event.tasks.clone(),
                    });
                }
                match self.tables.coarse(event.tasks.len()) {
                    None => self.errors.push(AuditError::MissingTableEntry {
                        time: event.time,
                        size: event.tasks.len(),
                    }),
                    Some(wcet) => {
                        let finish_bound = event.time + wcet;
                        let next_release = self.min_next_release(event.time);
                        if finish_bound > next_release {
                            self.errors.push(AuditError::BatchPastNextRelease {
                                time: event.time,
                                finish_bound,
                                next_release,
                            });
                        }
                        self.check_wcet_bound(event, wcet);
                    }
                }
                for id in &event.tasks {
                    let priority = self.task(*id).priority;
                    if !self.active_coarse.remove(&(priority, *id)) {
                        self.errors.push(AuditError::DispatchOfInactiveTask {
                            time: event.time,
                            task: *id,
                        });
                    }
                }
            }
            EventKind::DispatchFine | EventKind::DispatchFineBatch => {
                self.begin_execution(event);
                if !self.active_coarse.is_empty() {
                    self.errors
                        .push(AuditError::FineWhileCoarsePending { time: event.time });
                }
                let wcet = match (event.kind, event.level) {
                    (EventKind::DispatchFine, Some(level)) => {
                        Some(self.task(event.tasks[0]).fine.wcet(level))
                    }
                    (EventKind::DispatchFineBatch, Some(level)) => {
                        let entry = self.tables.fine(level, event.tasks.len());
                        if entry.is_none() {
                            self.errors.push(AuditError::MissingTableEntry {
                                time: event.time,
                                size: event.tasks.len(),
                            });
                        }
                        entry
                    }
                    _ => None,
                };
                if let Some(wcet) = wcet {
                    let finish_bound = event.time + wcet;
                    for id in &event.tasks {
                        let deadline = self.deadline.get(id).copied().unwrap_or(Duration::MAX);
                        if finish_bound > deadline {
                            self.errors.push(AuditError::FinePastDeadline {
                                time: event.time,
                                task: *id,
                                finish_bound,
                                deadline,
                            });
                        }
                    }
                    let next_release = self.min_next_release(event.time);
                    if finish_bound > next_release {
                        self.errors.push(AuditError::FinePastNextRelease {
                            time: event.time,
                            finish_bound,
                            next_release,
                        });
                    }
                    self.check_wcet_bound(event, wcet);
                }
            }
            EventKind::Complete => {
                if !self.open_dispatch {
                    self.errors
                        .push(AuditError::CompletionWithoutDispatch { time: event.time });
                }
                self.open_dispatch = false;
                self.last_finish = event.time;
            }
        }
    }
}
