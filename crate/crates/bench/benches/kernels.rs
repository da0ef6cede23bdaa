use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hierpin_bench::{children, params, warm_population};
use hierpin_core::annealed::DEFAULT_MAX_LEVELS;
use hierpin_core::certificate::estimate_p_good;
use hierpin_core::lattice::{enumerate_partition_weights, DiamondLattice};
use hierpin_core::model::reduce_leaves;
use hierpin_core::population::population_step;
use hierpin_core::walk::build_q_table;
use hierpin_core::{annealed_free_energy, combine_children, DisorderLaw};

fn combine(c: &mut Criterion) {
    let pair = children(2);
    c.bench_function("combine_children s=2", |b| {
        b.iter(|| combine_children(black_box(&pair), 2, 2))
    });
    let leaves = children(1 << 12);
    c.bench_function("reduce_leaves 4096", |b| {
        b.iter(|| reduce_leaves(black_box(&leaves), 2, 2))
    });
}

fn population(c: &mut Criterion) {
    let mut g = c.benchmark_group("population_step");
    g.sample_size(20);
    for m in [10_000, 100_000] {
        let pop = warm_population(m);
        g.bench_function(format!("M={m}"), |b| {
            b.iter(|| population_step(black_box(&pop)))
        });
    }
    g.finish();
}

fn annealed(c: &mut Criterion) {
    for h in [1.0, 0.05] {
        let p = params(0.0, h);
        c.bench_function(&format!("annealed_free_energy h={h}"), |b| {
            b.iter(|| annealed_free_energy(black_box(&p), 1e-14, DEFAULT_MAX_LEVELS))
        });
    }
    c.bench_function("build_q_table n=1e5", |b| {
        b.iter(|| build_q_table(2, black_box(100_000)))
    });
}

fn enumeration(c: &mut Criterion) {
    let lat = DiamondLattice::new(2, 2, 3).expect("small lattice");
    let x: Vec<f64> = children(lat.wall_len()).iter().map(|w| w.0 / 5.0).collect();
    c.bench_function("enumerate_partition b=s=2 n=3", |b| {
        b.iter(|| enumerate_partition_weights(&lat, black_box(&x)))
    });
}

fn good_diamonds(c: &mut Criterion) {
    let p = params(1.0, 0.5);
    let mut g = c.benchmark_group("estimate_p_good");
    g.sample_size(10);
    g.bench_function("k=1 n=6 trials=1000", |b| {
        b.iter(|| {
            estimate_p_good(
                black_box(&p),
                &DisorderLaw::StandardGaussian,
                1,
                6,
                1000,
                42,
            )
        })
    });
    g.finish();
}

criterion_group!(
    benches,
    combine,
    population,
    annealed,
    enumeration,
    good_diamonds
);
criterion_main!(benches);
