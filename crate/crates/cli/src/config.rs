//! JSON configuration loading.
//!
//! The schema is strict (unknown keys are rejected) and all time values are
//! milliseconds with up to three decimal places; they convert exactly to
//! the engine's microsecond base. Platform profiles can be named presets,
//! inline objects, or paths to profile files of the same shape as the
//! shipped `tables/*.json`.

use npfp_core::metrics::ProxyParams;
use npfp_core::model::{
    BatchWcetTables, CoarseProfile, ExecTime, FineProfile, PerLevel, Task,
};
use npfp_core::policy::PolicyVariant;
use npfp_core::sim::SamplingMode;
use npfp_core::time::Duration;
use npfp_core::workload::{
    generate_taskset, HardnessModel, PeriodSpec, Platform, ProfileSource, TaskSetSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line} column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: field {field}: {message}")]
    Field {
        path: PathBuf,
        field: &'static str,
        message: String,
    },
    #[error("invalid task set: {0}")]
    TaskSet(String),
    #[error("invalid batch tables: {0}")]
    Tables(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    taskset: TasksetSection,
    batch_tables: BatchTablesSection,
    #[serde(default = "default_policy")]
    policy: String,
    #[serde(default)]
    sim: SimSection,
    #[serde(default)]
    proxy: ProxySection,
}

fn default_policy() -> String {
    "cbfb".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TasksetSection {
    count: usize,
    #[serde(default)]
    periods_ms: Option<Vec<f64>>,
    #[serde(default)]
    period_range_ms: Option<[f64; 2]>,
    #[serde(default)]
    platform: Option<String>,
    #[serde(default)]
    profiles: Option<ProfilesJson>,
    #[serde(default)]
    profiles_path: Option<PathBuf>,
    #[serde(default)]
    hardness: Option<HardnessJson>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardnessJson {
    p_hard: f64,
    level_dist: [f64; 3],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeanWcetMs {
    mean: f64,
    wcet: f64,
}

impl MeanWcetMs {
    fn to_exec(&self) -> ExecTime {
        ExecTime::from_ms(self.mean, self.wcet)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfilesJson {
    patch_count: u32,
    coarse_ms: CoarseJson,
    fine_ms: FineJson,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoarseJson {
    patch_split: MeanWcetMs,
    attention: MeanWcetMs,
    hardness_determination: MeanWcetMs,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FineJson {
    selective_patch_split: MeanWcetMs,
    attention: PerLevelJson<MeanWcetMs>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerLevelJson<T> {
    s: T,
    m: T,
    l: T,
}

impl ProfilesJson {
    fn to_profiles(&self) -> (CoarseProfile, FineProfile) {
        let coarse = CoarseProfile {
            patch_count: self.patch_count,
            patch_split: self.coarse_ms.patch_split.to_exec(),
            attention: self.coarse_ms.attention.to_exec(),
            hardness_determination: self.coarse_ms.hardness_determination.to_exec(),
        };
        let fine = FineProfile {
            selective_patch_split: PerLevel::splat(self.fine_ms.selective_patch_split.to_exec()),
            attention: PerLevel {
                s: self.fine_ms.attention.s.to_exec(),
                m: self.fine_ms.attention.m.to_exec(),
                l: self.fine_ms.attention.l.to_exec(),
            },
        };
        (coarse, fine)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchTablesSection {
    #[serde(default)]
    synthesize_gain: Option<f64>,
    #[serde(default)]
    path: Option<PathBuf>,
    #[serde(default)]
    explicit: Option<TablesJson>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TablesJson {
    /// File metadata: marks tables not backed by measurements. Accepted so
    /// strict parsing does not reject annotated table files.
    #[serde(default)]
    #[allow(dead_code)]
    synthetic: bool,
    #[serde(default)]
    #[allow(dead_code)]
    note: Option<String>,
    #[serde(default)]
    gain: Option<f64>,
    #[serde(default)]
    coarse_ms: Option<Vec<f64>>,
    #[serde(default)]
    fine_ms: Option<PerLevelJson<Vec<f64>>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimSection {
    #[serde(default)]
    horizon_ms: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    sampling: Option<SamplingMode>,
    #[serde(default)]
    scheduler_overhead_us: Option<u64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ProxySection {
    #[serde(default)]
    base_credit: Option<f64>,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub policy: Option<PolicyVariant>,
    pub seed: Option<u64>,
    pub horizon_ms: Option<u64>,
    pub sampling: Option<SamplingMode>,
}

/// A fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub tasks: Vec<Task>,
    pub tables: BatchWcetTables,
    pub policy: PolicyVariant,
    pub horizon: Duration,
    pub seed: u64,
    pub sampling: SamplingMode,
    pub scheduler_overhead: Duration,
    pub proxy: ProxyParams,
}

/// Separates task-set generation from execution-time sampling so a seed
/// sweep over a fixed-period config perturbs only the simulated frames.
const GENERATION_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn load(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, ConfigError> {
    let file: ConfigFile = read_json(path)?;

    let seed = overrides.seed.or(file.sim.seed).unwrap_or(1);
    let horizon_ms = overrides.horizon_ms.or(file.sim.horizon_ms).unwrap_or(60_000);
    let sampling = overrides
        .sampling
        .or(file.sim.sampling)
        .unwrap_or(SamplingMode::Wcet);
    let policy = match overrides.policy {
        Some(p) => p,
        None => file
            .policy
            .parse::<PolicyVariant>()
            .map_err(|message| ConfigError::Field {
                path: path.to_path_buf(),
                field: "policy",
                message,
            })?,
    };

    let spec = resolve_taskset(path, &file.taskset)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ GENERATION_SEED_SALT);
    let tasks = generate_taskset(&spec, &mut rng)
        .map_err(|e| ConfigError::TaskSet(e.to_string()))?;
    let task_violations = npfp_core::validate_task_set(&tasks);
    if !task_violations.is_empty() {
        return Err(ConfigError::TaskSet(join_violations(&task_violations)));
    }

    let tables = resolve_tables(path, &file.batch_tables, &tasks)?;
    let table_violations = npfp_core::validate_tables(&tasks, &tables);
    if !table_violations.is_empty() {
        return Err(ConfigError::Tables(join_violations(&table_violations)));
    }

    let base_credit = file.proxy.base_credit.unwrap_or(0.6);
    if !(0.0..=1.0).contains(&base_credit) {
        return Err(ConfigError::Field {
            path: path.to_path_buf(),
            field: "proxy.base_credit",
            message: format!("{base_credit} outside [0, 1]"),
        });
    }

    Ok(LoadedConfig {
        tasks,
        tables,
        policy,
        horizon: Duration::from_ms(horizon_ms),
        seed,
        sampling,
        scheduler_overhead: Duration::from_us(file.sim.scheduler_overhead_us.unwrap_or(0)),
        proxy: ProxyParams { base_credit },
    })
}

fn join_violations(violations: &[npfp_core::Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Paths inside a config resolve relative to the config file's directory.
fn resolve_relative(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn resolve_taskset(path: &Path, section: &TasksetSection) -> Result<TaskSetSpec, ConfigError> {
    let periods = match (&section.periods_ms, &section.period_range_ms) {
        (Some(list), None) => PeriodSpec::List(
            list.iter().map(|ms| Duration::from_ms_f64(*ms)).collect(),
        ),
        (None, Some([min, max])) => PeriodSpec::RangeMs {
            min_ms: min.round() as u64,
            max_ms: max.round() as u64,
        },
        _ => {
            return Err(ConfigError::Field {
                path: path.to_path_buf(),
                field: "taskset",
                message: "exactly one of periods_ms / period_range_ms is required".into(),
            })
        }
    };
    let sources = [
        section.platform.is_some(),
        section.profiles.is_some(),
        section.profiles_path.is_some(),
    ];
    if sources.iter().filter(|x| **x).count() != 1 {
        return Err(ConfigError::Field {
            path: path.to_path_buf(),
            field: "taskset",
            message: "exactly one of platform / profiles / profiles_path is required".into(),
        });
    }
    let profiles = if let Some(name) = &section.platform {
        let platform: Platform = name.parse().map_err(|message| ConfigError::Field {
            path: path.to_path_buf(),
            field: "taskset.platform",
            message,
        })?;
        ProfileSource::Platform(platform)
    } else {
        let json: ProfilesJson = match &section.profiles {
            Some(inline) => inline.clone(),
            None => {
                let p = resolve_relative(path, section.profiles_path.as_ref().unwrap());
                read_json(&p)?
            }
        };
        let (coarse, fine) = json.to_profiles();
        ProfileSource::Explicit { coarse, fine }
    };
    let hardness = section
        .hardness
        .as_ref()
        .map(|h| HardnessModel {
            p_hard: h.p_hard,
            level_dist: h.level_dist,
        })
        .unwrap_or_default();
    Ok(TaskSetSpec {
        count: section.count,
        periods,
        profiles,
        hardness,
    })
}

fn resolve_tables(
    path: &Path,
    section: &BatchTablesSection,
    tasks: &[Task],
) -> Result<BatchWcetTables, ConfigError> {
    let choices = [
        section.synthesize_gain.is_some(),
        section.path.is_some(),
        section.explicit.is_some(),
    ];
    if choices.iter().filter(|x| **x).count() != 1 {
        return Err(ConfigError::Field {
            path: path.to_path_buf(),
            field: "batch_tables",
            message: "exactly one of synthesize_gain / path / explicit is required".into(),
        });
    }
    let from_json = |json: &TablesJson, origin: &Path| -> Result<BatchWcetTables, ConfigError> {
        if let Some(gain) = json.gain {
            return Ok(BatchWcetTables::synthesize(tasks, gain));
        }
        match (&json.coarse_ms, &json.fine_ms) {
            (Some(coarse), Some(fine)) => {
                let to_durations =
                    |v: &Vec<f64>| v.iter().map(|ms| Duration::from_ms_f64(*ms)).collect();
                Ok(BatchWcetTables::new(
                    to_durations(coarse),
                    PerLevel {
                        s: to_durations(&fine.s),
                        m: to_durations(&fine.m),
                        l: to_durations(&fine.l),
                    },
                ))
            }
            _ => Err(ConfigError::Field {
                path: origin.to_path_buf(),
                field: "batch_tables",
                message: "either gain or coarse_ms + fine_ms is required".into(),
            }),
        }
    };
    if let Some(gain) = section.synthesize_gain {
        Ok(BatchWcetTables::synthesize(tasks, gain))
    } else if let Some(p) = &section.path {
        let p = resolve_relative(path, p);
        let json: TablesJson = read_json(&p)?;
        from_json(&json, &p)
    } else {
        from_json(section.explicit.as_ref().unwrap(), path)
    }
}
