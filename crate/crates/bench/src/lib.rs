//! Shared fixtures for the benchmark targets.

use npfp_core::model::{BatchWcetTables, Task, TaskId, WorkloadLevel};
use npfp_core::policy::FineRequest;
use npfp_core::time::Duration;
use npfp_core::workload::{HardnessModel, Platform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The four-task reference configuration with synthesized batch tables.
pub fn four_task_fixture() -> (Vec<Task>, BatchWcetTables) {
    let mut tasks: Vec<Task> = [490u64, 640, 840, 980]
        .iter()
        .enumerate()
        .map(|(i, ms)| {
            let period = Duration::from_ms(*ms);
            Task {
                id: TaskId(i as u32 + 1),
                period,
                deadline: period,
                priority: 0,
                coarse: Platform::Orin.coarse_profile(),
                fine: Platform::Orin.fine_profile(),
                hardness: HardnessModel::default(),
            }
        })
        .collect();
    npfp_core::analysis::rm_assign(&mut tasks);
    let tables = BatchWcetTables::synthesize(&tasks, 0.35);
    (tasks, tables)
}

/// A sorted request list plus fine tables sized for `n` pending subtasks.
pub fn partition_fixture(n: usize, seed: u64) -> (Vec<FineRequest>, BatchWcetTables) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = [
        Duration::from_ms(40),
        Duration::from_ms(55),
        Duration::from_ms(70),
    ];
    let entries = |single: Duration| -> Vec<Duration> {
        (1..=n)
            .map(|size| Duration::from_us(single.as_us() * size as u64 * 13 / 20))
            .map(|d| d.max(single))
            .collect()
    };
    let tables = BatchWcetTables::new(
        vec![],
        npfp_core::model::PerLevel {
            s: entries(base[0]),
            m: entries(base[1]),
            l: entries(base[2]),
        },
    );
    let mut requests: Vec<FineRequest> = (0..n)
        .map(|i| FineRequest {
            task: TaskId(i as u32 + 1),
            level: WorkloadLevel::BATCHED[rng.random_range(0..3)],
            deadline: Duration::MAX,
        })
        .collect();
    requests.sort_by_key(|r| (r.level, r.task));
    (requests, tables)
}
