use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use ttspec::hamiltonians::heisenberg_tt;
use ttspec::{block_split, Direction, LocalOperator};
use ttspec_bench::{random_block_core, random_columns, LocalFixture};

fn local_matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("local_matvec");
    for rank in [16, 32, 64] {
        let fx = LocalFixture::new(heisenberg_tt(20).unwrap(), rank, 10, 1);
        let local = LocalOperator::new(&fx.left, fx.op.core(fx.site), &fx.right).unwrap();
        for cols in [1, 8] {
            let x = random_columns(local.dim(), cols, 2);
            group.bench_with_input(BenchmarkId::new(format!("heisenberg_r{rank}"), cols), &x, |b, x| {
                b.iter(|| black_box(local.apply_block(x, cols)))
            });
        }
    }
    group.finish();
}

fn split(c: &mut Criterion) {
    let mut group = c.benchmark_group("block_split");
    for states in [1, 4, 16] {
        let core = random_block_core(32, 2, 32, states, 3);
        group.bench_with_input(BenchmarkId::new("r32_n2_right", states), &core, |b, core| {
            b.iter(|| black_box(block_split(core, Direction::Right, 1e-6, 64).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("r32_n2_left", states), &core, |b, core| {
            b.iter(|| black_box(block_split(core, Direction::Left, 1e-6, 64).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, local_matvec, split);
criterion_main!(benches);
