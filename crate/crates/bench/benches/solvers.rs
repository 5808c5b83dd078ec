use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use hkflow::analysis::{filippov_inclusion_residual, hull_contractivity_report};
use hkflow::enumeration::{catalogue, delta1};
use hkflow::scenarios::builtin;
use hkflow::solvers::{solve_caratheodory, solve_clss, StepSchedule};
use hkflow::{BranchSpec, ModelVariant};

fn caratheodory(c: &mut Criterion) {
    let ic_e = builtin("ic-e").unwrap();
    let beta = BranchSpec::parse("wait=0:both").unwrap();
    c.bench_function("caratheodory ic-e merge", |b| b.iter(|| solve_caratheodory(black_box(&ic_e), &beta, 30.0).unwrap()));
    let square = builtin("square").unwrap();
    let all = BranchSpec::parse("wait=0:all").unwrap();
    c.bench_function("caratheodory square", |b| b.iter(|| solve_caratheodory(black_box(&square), &all, 10.0).unwrap()));
}

fn clss(c: &mut Criterion) {
    let s = builtin("clss10").unwrap();
    let schedule = StepSchedule::uniform(0.05, 20_000).unwrap();
    c.bench_function("clss10 uniform 2e4 steps", |b| b.iter(|| solve_clss(black_box(&s), &schedule).unwrap()));
}

fn checks(c: &mut Criterion) {
    let s = builtin("ic-e").unwrap();
    let traj = solve_caratheodory(&s, &BranchSpec::parse("wait=0:all").unwrap(), 30.0).unwrap();
    c.bench_function("hull check ic-e", |b| b.iter(|| hull_contractivity_report(black_box(&traj), 1).unwrap()));
    c.bench_function("inclusion residual ic-e", |b| b.iter(|| filippov_inclusion_residual(black_box(&traj), &s.kernel).unwrap()));
}

fn combinatorics(c: &mut Criterion) {
    c.bench_function("delta1 n=12", |b| b.iter(|| delta1(black_box(12)).unwrap()));
    c.bench_function("catalogue n=8 closed", |b| b.iter(|| catalogue(black_box(8), ModelVariant::ClosedAtOne).unwrap()));
}

criterion_group!(benches, caratheodory, clss, checks, combinatorics);
criterion_main!(benches);
