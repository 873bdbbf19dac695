use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use tetherplan_bench::{clustered_samples, indoor_grid, indoor_reel, indoor_reward, indoor_start};
use tetherplan_core::viewpoint::{pairwise_dissimilarities, upgma_linkage};
use tetherplan_core::{Candidates, Planner, RewardMode, RiskConfig, WorldPoint};

fn workspace(c: &mut Criterion) {
    let grid = indoor_grid();
    let a = WorldPoint::new(0.3, 1.1, 0.4);
    let b = WorldPoint::new(5.7, 1.4, 5.6);
    c.bench_function("line_of_sight", |bch| bch.iter(|| grid.line_of_sight(black_box(&a), black_box(&b)).unwrap()));
    c.bench_function("isovist_64", |bch| bch.iter(|| grid.isovist_visibility(black_box(&a), 64, 4.0).unwrap()));
    c.bench_function("inflate", |bch| bch.iter(|| grid.inflate(black_box(0.3)).unwrap()));
}

fn planning(c: &mut Criterion) {
    let raw = indoor_grid();
    let flight = raw.inflate(0.3).unwrap();
    let planner = Planner::with_options(&flight, &raw, indoor_reel(), RiskConfig::default(), true).unwrap();
    let start = indoor_start();
    let mut group = c.benchmark_group("planner");
    group.sample_size(10);
    group.bench_function("search_tree", |b| b.iter(|| planner.search_tree(black_box(&start)).unwrap()));

    let tree = planner.search_tree(&start).unwrap();
    let far = flight.free_cells().filter(|g| tree.path_to(g).is_some()).max_by_key(|g| g.z * 100 + g.x).unwrap();
    let path = tree.path_to(&far).unwrap().0;
    group.bench_function("evaluate", |b| b.iter(|| planner.evaluate(black_box(&path)).unwrap()));

    let reward = indoor_reward(&flight);
    group.bench_function("select_viewpoint", |b| {
        b.iter(|| planner.select_viewpoint(&start, &reward, &Candidates::Auto, RewardMode::Integrated).unwrap())
    });
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let samples = clustered_samples(120);
    c.bench_function("upgma_120", |b| {
        b.iter(|| {
            let d = pairwise_dissimilarities(black_box(&samples)).unwrap();
            upgma_linkage(&d).unwrap()
        })
    });
}

criterion_group!(benches, workspace, planning, clustering);
criterion_main!(benches);
