//! Parallel against sequential trajectory batches. The `parallel` feature
//! only changes who runs the trajectories, so both sides produce the same
//! records.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use endwalk::chains::{mc_green_birthdeath, BirthDeathChain, ChainParams, ResistanceTable};
use endwalk::measures::{example1_measure, GroupMeasure};
use endwalk::simulate::{run_walks, run_walks_sequential, CutSpec, Target, WalkConfig};
use endwalk::{Action, ActionPoint, CombVertex};

fn configs() -> Vec<(&'static str, WalkConfig)> {
    let thompson = Target::Induced {
        measure: GroupMeasure::uniform(Action::Thompson),
        start: Action::Thompson.parse_point("5/8").unwrap(),
    };
    let psi = Target::Induced {
        measure: example1_measure(),
        start: ActionPoint::Psi(CombVertex::new(0, 0)),
    };
    let chain = Target::Chain {
        params: ChainParams::Counterexample,
        start: 0,
    };
    vec![
        (
            "thompson",
            WalkConfig::new(thompson, 5_000, 64, 1).with_cuts(vec![CutSpec::savchuk()]),
        ),
        (
            "psi",
            WalkConfig::new(psi, 5_000, 64, 1).with_cuts(vec![CutSpec::Ball { radius: 5 }]),
        ),
        ("chain", WalkConfig::new(chain, 50_000, 64, 1)),
    ]
}

fn walk_batches(c: &mut Criterion) {
    let mut group = c.benchmark_group("walk_batches");
    group.sample_size(10);
    for (name, cfg) in configs() {
        group.throughput(Throughput::Elements(cfg.steps * cfg.trajectories));
        group.bench_with_input(BenchmarkId::new("parallel", name), &cfg, |b, cfg| {
            b.iter(|| run_walks(cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", name), &cfg, |b, cfg| {
            b.iter(|| run_walks_sequential(cfg).unwrap())
        });
    }
    group.finish();
}

fn green_sampling(c: &mut Criterion) {
    let chain = BirthDeathChain::reflected(ChainParams::Counterexample).unwrap();
    let table = ResistanceTable::build(&chain, 100_000).unwrap();
    let mut group = c.benchmark_group("green_mc");
    group.sample_size(10);
    for n in [1u64, 5] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| mc_green_birthdeath(&table, n, 10_000, 3).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, walk_batches, green_sampling);
criterion_main!(benches);
