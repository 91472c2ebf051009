use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use furrow_bench::{open_field, straight_reference, straight_trajectory, turn_scenario};
use furrow_core::geometry::sdf_convex;
use furrow_core::harness::{simulate_closed_loop, SimConfig};
use furrow_core::planner::plan_chained;
use furrow_core::reeds_shepp::rs_shortest;
use furrow_core::tracker::track_step;
use furrow_core::vehicle::footprint;
use furrow_core::{MpcConfig, PlannerConfig, Polygon, Pose, Smoother, VehicleParams};

fn reeds_shepp(c: &mut Criterion) {
    let params = VehicleParams::default();
    let start = Pose::new(0.0, 0.0, 0.0);
    let goal = Pose::new(6.0, -3.0, 2.5);
    c.bench_function("rs_shortest", |b| {
        b.iter(|| rs_shortest(black_box(&start), black_box(&goal), params.turning_radius()))
    });
}

fn separation(c: &mut Criterion) {
    let params = VehicleParams::default();
    let body = footprint(&Pose::new(0.0, 0.0, 0.3), &params);
    let rock = Polygon::rectangle(4.0, 1.0, 6.0, 5.0).unwrap();
    c.bench_function("sdf_convex", |b| {
        b.iter(|| sdf_convex(black_box(&body), black_box(&rock)))
    });
}

fn planning(c: &mut Criterion) {
    let s = turn_scenario();
    let r = &s.reference_paths[0];
    let config = PlannerConfig::default();
    let mut g = c.benchmark_group("plan");
    g.sample_size(10);
    g.bench_function("headland_turn", |b| {
        b.iter(|| plan_chained(r, &s.field, &[], &s.vehicle, &config).unwrap())
    });
    let straight = straight_reference();
    let field = open_field();
    g.bench_function("straight", |b| {
        b.iter(|| plan_chained(&straight, &field, &[], &s.vehicle, &config).unwrap())
    });
    g.finish();
}

fn tracking(c: &mut Criterion) {
    let traj = straight_trajectory();
    let field = open_field();
    let params = VehicleParams::default();
    let config = MpcConfig::default();
    let mut x = traj.points[0].state;
    x.y += 0.3;
    c.bench_function("track_step", |b| {
        b.iter(|| track_step(black_box(&x), &traj, 0, &field, &[], &params, &config).is_ok())
    });
}

fn closed_loop(c: &mut Criterion) {
    let s = turn_scenario();
    let config = SimConfig::default();
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("hybrid_headland_turn", |b| {
        b.iter(|| simulate_closed_loop(&s, 0, Smoother::HybridAStar, &config).unwrap())
    });
    g.finish();
}

criterion_group!(benches, reeds_shepp, separation, planning, tracking, closed_loop);
criterion_main!(benches);
