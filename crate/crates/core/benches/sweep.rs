use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use weylgroupoid::catalog::{exhaustive_sweep, verify_row, Catalog, Table, VerifyOptions};
use weylgroupoid::{Caps, Execution};

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn sweep(c: &mut Criterion) {
    let cat = Catalog::builtin();
    let mut g = c.benchmark_group("sweep_d4_n3");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exhaustive_sweep(cat, 4, 3, Caps::default(), exec).unwrap())
        });
    }
    g.finish();
}

fn table_row(c: &mut Criterion) {
    let cat = Catalog::builtin();
    // many diagrams per row, so the instances are spread over the pool
    let row = cat.row(Table::Rank4, 18).unwrap();
    let mut g = c.benchmark_group("verify_rank4_row18");
    g.sample_size(10);
    for (name, exec) in modes() {
        let opts = VerifyOptions { caps: Caps::default(), exec };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| verify_row(cat, row, &[], &[], opts)));
    }
    g.finish();
}

criterion_group!(benches, sweep, table_row);
criterion_main!(benches);
