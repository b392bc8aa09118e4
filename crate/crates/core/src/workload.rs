//! Stochastic stand-in for the detector: per-frame hardness sampling and
//! randomized task-set generation from measured platform profiles.

use crate::analysis;
use crate::model::{CoarseProfile, ExecTime, FineProfile, PerLevel, Task, TaskId, WorkloadLevel};
use crate::time::Duration;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Per-frame difficulty model: a frame is hard with probability `p_hard`,
/// and a hard frame draws its fine workload level from `level_dist` over
/// (S, M, L). The defaults are synthetic and freely configurable; they make
/// no fidelity claim about any particular dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessModel {
    pub p_hard: f64,
    pub level_dist: [f64; 3],
}

impl Default for HardnessModel {
    fn default() -> Self {
        HardnessModel {
            p_hard: 0.5,
            level_dist: [0.4, 0.35, 0.25],
        }
    }
}

impl HardnessModel {
    pub const ALWAYS_EASY: HardnessModel = HardnessModel {
        p_hard: 0.0,
        level_dist: [1.0, 0.0, 0.0],
    };

    pub fn check(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.p_hard) || !self.p_hard.is_finite() {
            return Err(format!("p_hard {} outside [0, 1]", self.p_hard));
        }
        if self.level_dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err("level_dist entries must be non-negative".into());
        }
        let sum: f64 = self.level_dist.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("level_dist sums to {sum}, expected 1"));
        }
        Ok(())
    }
}

/// Ground-truth difficulty of one frame, sampled at release and revealed
/// to the scheduler only when the frame's coarse stage completes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameOutcome {
    Easy,
    Hard(WorkloadLevel),
}

impl FrameOutcome {
    pub fn is_hard(self) -> bool {
        matches!(self, FrameOutcome::Hard(_))
    }
}

/// Draws one frame outcome. Hard with probability `p_hard`; the level then
/// follows `level_dist`, with rounding mass assigned to `L`.
pub fn sample_frame<R: Rng + ?Sized>(model: &HardnessModel, rng: &mut R) -> FrameOutcome {
    if model.p_hard <= 0.0 || rng.random::<f64>() >= model.p_hard {
        return FrameOutcome::Easy;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, level) in WorkloadLevel::BATCHED.iter().enumerate() {
        acc += model.level_dist[i];
        if u < acc {
            return FrameOutcome::Hard(*level);
        }
    }
    FrameOutcome::Hard(WorkloadLevel::L)
}

/// Hardware platforms with measured stage execution times (milliseconds,
/// mean and WCET per component).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Server,
    Orin,
    Tx2,
}

impl Platform {
    pub const ALL: [Platform; 3] = [Platform::Server, Platform::Orin, Platform::Tx2];

    /// Fixed coarse patch-grid size used by every preset.
    pub const COARSE_PATCH_COUNT: u32 = 1024;

    pub fn coarse_profile(self) -> CoarseProfile {
        let (ps, at, dt) = match self {
            Platform::Server => ((20.0, 30.0), (45.0, 49.0), (0.2, 0.3)),
            Platform::Orin => ((59.0, 70.0), (68.0, 69.0), (0.5, 0.7)),
            Platform::Tx2 => ((349.0, 408.0), (288.0, 368.0), (1.1, 1.5)),
        };
        CoarseProfile {
            patch_count: Self::COARSE_PATCH_COUNT,
            patch_split: ExecTime::from_ms(ps.0, ps.1),
            attention: ExecTime::from_ms(at.0, at.1),
            hardness_determination: ExecTime::from_ms(dt.0, dt.1),
        }
    }

    pub fn fine_profile(self) -> FineProfile {
        let (sps, s, m, l) = match self {
            Platform::Server => ((2.0, 3.0), (44.0, 46.0), (52.0, 55.0), (55.0, 58.0)),
            Platform::Orin => ((5.0, 8.0), (65.0, 78.0), (80.0, 96.0), (85.0, 107.0)),
            Platform::Tx2 => (
                (32.0, 38.0),
                (962.0, 1147.0),
                (1207.0, 1245.0),
                (1441.0, 1478.0),
            ),
        };
        FineProfile {
            selective_patch_split: PerLevel::splat(ExecTime::from_ms(sps.0, sps.1)),
            attention: PerLevel {
                s: ExecTime::from_ms(s.0, s.1),
                m: ExecTime::from_ms(m.0, m.1),
                l: ExecTime::from_ms(l.0, l.1),
            },
        }
    }
}

impl FromStr for Platform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "server" => Ok(Platform::Server),
            "orin" => Ok(Platform::Orin),
            "tx2" => Ok(Platform::Tx2),
            other => Err(format!("unknown platform '{other}' (expected server|orin|tx2)")),
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::Server => "server",
            Platform::Orin => "orin",
            Platform::Tx2 => "tx2",
        })
    }
}

/// Where a generated task set takes its execution-time profiles from.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSource {
    Platform(Platform),
    Explicit {
        coarse: CoarseProfile,
        fine: FineProfile,
    },
}

/// Task periods: a fixed list (one per task) or a uniform range sampled at
/// whole-millisecond granularity.
#[derive(Clone, Debug, PartialEq)]
pub enum PeriodSpec {
    List(Vec<Duration>),
    RangeMs { min_ms: u64, max_ms: u64 },
}

/// Recipe for a randomized or fixed task set.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSetSpec {
    pub count: usize,
    pub periods: PeriodSpec,
    pub profiles: ProfileSource,
    pub hardness: HardnessModel,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("task count must be at least 1")]
    ZeroCount,
    #[error("period list has {got} entries for {expected} tasks")]
    PeriodCount { expected: usize, got: usize },
    #[error("period range is empty or zero")]
    BadPeriodRange,
    #[error("task {task}: period must be positive")]
    NonPositivePeriod { task: TaskId },
    #[error("task {task}: coarse WCET {wcet} exceeds period {period}")]
    CoarseExceedsPeriod {
        task: TaskId,
        wcet: Duration,
        period: Duration,
    },
    #[error("invalid hardness model: {0}")]
    InvalidHardness(String),
}

/// Instantiates the spec: one task per period, the named platform's (or the
/// explicit) profiles, rate-monotonic priorities. Randomly drawn period
/// sets that fail basic sanity (coarse WCET above the period) are rejected
/// as bad draws; explicitly listed periods pass through so that overloaded
/// shapes can still be analyzed and force-simulated.
pub fn generate_taskset<R: Rng + ?Sized>(
    spec: &TaskSetSpec,
    rng: &mut R,
) -> Result<Vec<Task>, SpecError> {
    if spec.count == 0 {
        return Err(SpecError::ZeroCount);
    }
    spec.hardness.check().map_err(SpecError::InvalidHardness)?;
    let periods: Vec<Duration> = match &spec.periods {
        PeriodSpec::List(list) => {
            if list.len() != spec.count {
                return Err(SpecError::PeriodCount {
                    expected: spec.count,
                    got: list.len(),
                });
            }
            list.clone()
        }
        PeriodSpec::RangeMs { min_ms, max_ms } => {
            if min_ms > max_ms || *max_ms == 0 {
                return Err(SpecError::BadPeriodRange);
            }
            (0..spec.count)
                .map(|_| Duration::from_ms(rng.random_range(*min_ms..=*max_ms)))
                .collect()
        }
    };
    let (coarse, fine) = match &spec.profiles {
        ProfileSource::Platform(p) => (p.coarse_profile(), p.fine_profile()),
        ProfileSource::Explicit { coarse, fine } => (*coarse, *fine),
    };
    let mut tasks: Vec<Task> = periods
        .iter()
        .enumerate()
        .map(|(i, period)| Task {
            id: TaskId(i as u32 + 1),
            period: *period,
            deadline: *period,
            priority: 0,
            coarse,
            fine,
            hardness: spec.hardness,
        })
        .collect();
    analysis::rm_assign(&mut tasks);
    let drawn = matches!(spec.periods, PeriodSpec::RangeMs { .. });
    for task in &tasks {
        if task.period.is_zero() {
            return Err(SpecError::NonPositivePeriod { task: task.id });
        }
        if drawn && task.coarse_wcet() > task.period {
            return Err(SpecError::CoarseExceedsPeriod {
                task: task.id,
                wcet: task.coarse_wcet(),
                period: task.period,
            });
        }
    }
    Ok(tasks)
}

/// Draws task sets (random platform, task count in `min_tasks..=max_tasks`,
/// periods scaled to the platform's coarse WCET) until one passes the
/// offline response-time test, and returns it with RM priorities assigned.
/// Rejection keeps the loop short: the sampled utilization band admits most
/// candidates.
pub fn random_schedulable_taskset<R: Rng + ?Sized>(
    rng: &mut R,
    min_tasks: usize,
    max_tasks: usize,
) -> Vec<Task> {
    loop {
        let count = rng.random_range(min_tasks..=max_tasks);
        let platform = Platform::ALL[rng.random_range(0..Platform::ALL.len())];
        let coarse_ms = platform.coarse_profile().wcet().as_us().div_ceil(1_000);
        let min_ms = (coarse_ms * count as u64 * 6) / 5;
        let max_ms = coarse_ms * count as u64 * 3;
        let spec = TaskSetSpec {
            count,
            periods: PeriodSpec::RangeMs { min_ms, max_ms },
            profiles: ProfileSource::Platform(platform),
            hardness: HardnessModel::default(),
        };
        let Ok(tasks) = generate_taskset(&spec, rng) else {
            continue;
        };
        if crate::analysis::schedulable(&tasks).schedulable {
            return tasks;
        }
    }
}
