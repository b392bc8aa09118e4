//! Scheduling engine and discrete-event simulator for two-stage detection
//! pipelines on a single shared accelerator.
//!
//! Tasks are strictly periodic and split into a safety-critical coarse
//! stage, always executed and covered by an offline non-preemptive
//! fixed-priority response-time guarantee, and an optional fine stage that
//! runs opportunistically in the slack, individually or batched. The crate
//! provides the offline analysis, the runtime dispatch policies (including
//! a dynamic-programming fine-batch partitioner), a deterministic
//! simulator with full audit traces, and metric extraction.

pub mod analysis;
pub mod audit;
pub mod metrics;
pub mod model;
pub mod policy;
pub mod sim;
pub mod time;
pub mod workload;

pub use analysis::{blocking, response_time, rm_assign, schedulable, ResponseTime, RtaResult};
pub use metrics::{compute_report, ProxyParams, Report, RunMeta, TaskMetrics};
pub use model::{
    validate_tables, validate_task_set, BatchWcetTables, CoarseProfile, ExecTime, FineProfile,
    PerLevel, Task, TaskId, Violation, WorkloadLevel,
};
pub use policy::{
    admit_individual_fine, dba_partition, dba_table, decide, select_coarse_batch, Decision,
    DbaComputation, FineBatch, FineRequest, PolicyVariant, SchedulerState,
};
pub use sim::{
    run, sample_execution_time, EventKind, JobRecord, SamplingMode, SimConfig, SimError, Trace,
    TraceEvent,
};
pub use time::Duration;
pub use workload::{
    generate_taskset, random_schedulable_taskset, sample_frame, FrameOutcome, HardnessModel,
    PeriodSpec, Platform, ProfileSource, TaskSetSpec,
};
