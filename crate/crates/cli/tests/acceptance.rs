//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! 1. DP reference-table reproduction through the dp-demo command.
//! 2. Fine-batch partitioner equals exhaustive enumeration on >= 1000
//!    random instances.
//! 3. Offline response-time bounds dominate critical-instant simulation on
//!    200 random schedulable sets.
//! 4. Those 200 sets, run under all four variants for >= 10^4 jobs each,
//!    never miss a coarse deadline and pass every trace audit.
//! 5. Case-study timing: the two-camera pair analyzes to 1555 ms responses
//!    while the monolithic shape is unschedulable and misses immediately.
//! 6. Batching trend on the four-task config: batched-fine completion
//!    rates dominate, and coarse batching never lowers the lowest-priority
//!    task's throughput.
//! 7. Repeated simulate invocations produce byte-identical outputs.

use npfp_cli::commands::{run_sweep, SweepRow};
use npfp_cli::config::{load, Overrides};
use npfp_core::model::{BatchWcetTables, PerLevel, Task, TaskId, WorkloadLevel};
use npfp_core::policy::{dba_partition, FineRequest, PolicyVariant};
use npfp_core::sim::{critical_instant_max_response, run, EventKind, SimConfig};
use npfp_core::time::Duration;
use npfp_core::workload::random_schedulable_taskset;
use npfp_core::{analysis, audit, ResponseTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn npfp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npfp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn pass(criterion: &str, details: &str) {
    println!("acceptance {criterion}: PASS ({details})");
}

#[test]
fn criterion_1_dp_reference_table() {
    let out = npfp(&["dp-demo"]);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(out.status.code(), Some(0), "dp-demo self-check failed:\n{text}");
    for expected in [
        "DBA: 1 2 3 5",
        "k=4 cost row: 6 5 5.5 6",
        "partition: SM | ML",
        "total: 5",
        "self-check: OK",
    ] {
        assert!(text.contains(expected), "missing '{expected}' in:\n{text}");
    }
    pass(
        "criterion 1 (DP reference table)",
        "DBA=(1,2,3,5), cost row (6,5,5.5,6), partition SM|ML, exit 0",
    );
}

/// Random fine tables satisfying every invariant by construction, for the
/// enumeration oracle.
fn random_monotone_fine_tables<R: Rng>(rng: &mut R, n_max: usize) -> BatchWcetTables {
    let mut base = [0u64; 3];
    base[0] = rng.random_range(1..=500);
    base[1] = rng.random_range(base[0]..=1_000);
    base[2] = rng.random_range(base[1]..=2_000);
    let mut levels: Vec<Vec<Duration>> = Vec::with_capacity(3);
    for (li, single) in base.iter().enumerate() {
        let mut entries = vec![Duration::from_us(*single)];
        for n in 2..=n_max {
            let floor_same = entries[n - 2].as_us();
            let floor_lower = if li > 0 { levels[li - 1][n - 1].as_us() } else { 0 };
            let hi = single * n as u64;
            entries.push(Duration::from_us(
                rng.random_range(floor_same.max(floor_lower)..=hi),
            ));
        }
        levels.push(entries);
    }
    let mut it = levels.into_iter();
    BatchWcetTables::new(
        vec![],
        PerLevel {
            s: it.next().unwrap(),
            m: it.next().unwrap(),
            l: it.next().unwrap(),
        },
    )
}

/// Independent oracle: minimal total WCET over all contiguous partitions
/// of the sorted workload list, by exhausting the 2^(n-1) split masks.
fn enumerate_min_partition(requests: &[FineRequest], tables: &BatchWcetTables) -> Duration {
    let n = requests.len();
    let mut best = Duration::MAX;
    for mask in 0..(1u32 << (n - 1)) {
        let mut total = Duration::ZERO;
        let mut start = 0;
        for (end, request) in requests.iter().enumerate() {
            if end == n - 1 || mask & (1 << end) != 0 {
                total += tables.fine(request.level, end - start + 1).unwrap();
                start = end + 1;
            }
        }
        best = best.min(total);
    }
    best
}

#[test]
fn criterion_2_dba_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    let instances = 1200;
    for _ in 0..instances {
        let n = rng.random_range(1..=8);
        let tables = random_monotone_fine_tables(&mut rng, 8);
        let mut requests: Vec<FineRequest> = (0..n)
            .map(|i| FineRequest {
                task: TaskId(i as u32 + 1),
                level: WorkloadLevel::BATCHED[rng.random_range(0..3)],
                deadline: Duration::MAX,
            })
            .collect();
        requests.sort_by_key(|r| (r.level, r.task));
        let batches = dba_partition(&requests, Duration::ZERO, Duration::MAX, &tables);
        let covered: usize = batches.iter().map(|b| b.tasks.len()).sum();
        assert_eq!(covered, n, "partition must cover all requests");
        let total: Duration = batches.iter().map(|b| b.wcet).sum();
        let oracle = enumerate_min_partition(&requests, &tables);
        assert_eq!(total, oracle, "suboptimal partition for {requests:?}");
    }
    pass(
        "criterion 2 (DP vs exhaustive enumeration)",
        &format!("{instances} random instances, N <= 8, exact equality"),
    );
}

/// The 200 random schedulable sets shared by criteria 3 and 4.
fn schedulable_sets() -> Vec<Vec<Task>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC34);
    (0..200)
        .map(|_| random_schedulable_taskset(&mut rng, 2, 6))
        .collect()
}

#[test]
fn criterion_3_rta_soundness() {
    let sets = schedulable_sets();
    let mut checked = 0;
    for tasks in &sets {
        let tables = BatchWcetTables::synthesize(tasks, 0.35);
        for task in tasks {
            let bound = match analysis::response_time(task, tasks) {
                ResponseTime::Converged(r) => r,
                ResponseTime::Diverged => unreachable!("sets pass the offline test"),
            };
            let observed = critical_instant_max_response(tasks, task.id, &tables, 8)
                .expect("valid inputs")
                .expect("task completes within the horizon");
            assert!(
                observed <= bound,
                "task {} observed {observed} > bound {bound}",
                task.id
            );
            checked += 1;
        }
    }
    pass(
        "criterion 3 (offline bound vs critical-instant simulation)",
        &format!("200 sets, {checked} task bounds, max response <= R in every case"),
    );
}

#[test]
fn criterion_4_no_misses_and_audits_under_all_variants() {
    let sets = schedulable_sets();
    let variants = [
        PolicyVariant::C,
        PolicyVariant::CFB,
        PolicyVariant::CBF,
        PolicyVariant::CBFB,
    ];
    let mut total_jobs: u64 = 0;
    for (i, tasks) in sets.iter().enumerate() {
        let tables = BatchWcetTables::synthesize(tasks, 0.35);
        // Horizon sized for at least 10^4 releases across the set.
        let rate: f64 = tasks.iter().map(|t| 1.0 / t.period.as_secs_f64()).sum();
        let horizon = Duration::from_us((10_000.0 / rate * 1e6).ceil() as u64);
        for variant in variants {
            let cfg = SimConfig::new(horizon, i as u64);
            let trace = run(tasks, variant, &tables, &cfg).expect("valid inputs");
            assert!(
                trace.jobs.len() >= 10_000,
                "set {i}: only {} jobs released",
                trace.jobs.len()
            );
            assert_eq!(
                trace.count(EventKind::CoarseDeadlineMiss),
                0,
                "set {i} variant {variant} missed a coarse deadline"
            );
            if let Err(errors) = audit::audit_trace(&trace, tasks, &tables) {
                panic!("set {i} variant {variant} audit failures: {errors:?}");
            }
            total_jobs += trace.jobs.len() as u64;
        }
    }
    pass(
        "criterion 4 (zero misses + batch audits under all variants)",
        &format!("200 sets x 4 variants, {total_jobs} jobs, all audits green"),
    );
}

#[test]
fn criterion_5_case_study_timing() {
    let pair = repo_path("configs/tx2_case_study.json");
    let out = npfp(&["analyze", "--config", pair.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(json["schedulable"], true);
    assert_eq!(json["tasks"][0]["coarse_wcet_ms"], 777.5);
    assert_eq!(json["tasks"][0]["response_time_us"], 1_555_000);
    assert_eq!(json["tasks"][1]["response_time_us"], 1_555_000);

    let mono = repo_path("configs/tx2_monolithic.json");
    let out = npfp(&["analyze", "--config", mono.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "monolithic shape must fail the test");

    // Refusal without --force, then a forced run over the first two
    // hyperperiods must record a miss.
    let dir = tempfile::tempdir().unwrap();
    let out = npfp(&[
        "simulate",
        "--config",
        mono.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = npfp(&[
        "simulate",
        "--config",
        mono.to_str().unwrap(),
        "--force",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let misses = report["total_coarse_misses"].as_u64().unwrap();
    assert!(misses >= 1, "expected a miss within two hyperperiods");
    pass(
        "criterion 5 (case-study timing)",
        &format!("pair R1=R2=1555 ms schedulable; monolithic diverges and records {misses} misses in 3.2 s"),
    );
}

#[test]
fn criterion_6_batching_trends() {
    let config = repo_path("configs/orin_four_task.json");
    let cfg = load(&config, &Overrides::default()).expect("shipped config loads");
    let policies = [
        PolicyVariant::C,
        PolicyVariant::CFB,
        PolicyVariant::CBF,
        PolicyVariant::CBFB,
    ];
    let rows = run_sweep(&cfg, &policies, 1..=20u64).expect("sweep runs");
    assert_eq!(rows.len(), 80);

    let mean_fine_rate = |policy: PolicyVariant| -> f64 {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.policy == policy)
            .map(|r: &SweepRow| {
                let per_task: Vec<f64> = r
                    .report
                    .tasks
                    .iter()
                    .map(|t| t.fine_completion_rate)
                    .collect();
                per_task.iter().sum::<f64>() / per_task.len() as f64
            })
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };
    let lowest_priority_task = cfg
        .tasks
        .iter()
        .max_by_key(|t| t.priority)
        .expect("nonempty")
        .id;
    let mean_low_fps = |policy: PolicyVariant| -> f64 {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.policy == policy)
            .map(|r| {
                r.report
                    .tasks
                    .iter()
                    .find(|t| t.task == lowest_priority_task)
                    .unwrap()
                    .coarse_fps
            })
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };

    let fr_cbfb = mean_fine_rate(PolicyVariant::CBFB);
    let fr_cfb = mean_fine_rate(PolicyVariant::CFB);
    let fr_cbf = mean_fine_rate(PolicyVariant::CBF);
    assert!(
        fr_cbfb >= fr_cfb,
        "fine completion: cbfb {fr_cbfb} < cfb {fr_cfb}"
    );
    assert!(
        fr_cbfb >= fr_cbf,
        "fine completion: cbfb {fr_cbfb} < cbf {fr_cbf}"
    );
    for batched in [PolicyVariant::CBF, PolicyVariant::CBFB] {
        for individual in [PolicyVariant::C, PolicyVariant::CFB] {
            let b = mean_low_fps(batched);
            let i = mean_low_fps(individual);
            assert!(
                b >= i,
                "lowest-priority FPS: {batched} {b} < {individual} {i}"
            );
        }
    }
    pass(
        "criterion 6 (batching trends over 20 seeds)",
        &format!(
            "fine rate cbfb {fr_cbfb:.3} >= cfb {fr_cfb:.3}, >= cbf {fr_cbf:.3}; low-priority FPS preserved by coarse batching"
        ),
    );
}

#[test]
fn criterion_7_byte_identical_outputs() {
    let config = repo_path("configs/orin_four_task.json");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let out = npfp(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--sampling",
            "mean-centered",
            "--horizon-ms",
            "30000",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["trace.csv", "trace.json", "report.json"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    pass(
        "criterion 7 (determinism)",
        "trace.csv, trace.json, report.json byte-identical across repeated runs",
    );
}
