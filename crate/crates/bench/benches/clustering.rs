use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use isext_core::corpus::{self, random_ddg};
use isext_core::{clone_and_combine, max_miso, ArchConstraints};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_graphs(c: &mut Criterion) {
    let mut group = c.benchmark_group("corpus");
    for (name, g) in corpus::ddgs() {
        for k in [2, 4, 6] {
            let ac = ArchConstraints::new(k).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{name}/maxmiso"), k), &ac, |b, ac| {
                b.iter(|| max_miso(black_box(&g), ac).len())
            });
            let miso = max_miso(&g, &ac);
            group.bench_with_input(BenchmarkId::new(format!("{name}/combine"), k), &ac, |b, ac| {
                b.iter(|| clone_and_combine(black_box(&miso), ac).passes)
            });
        }
    }
    group.finish();
}

fn random_graphs(c: &mut Criterion) {
    let mut group = c.benchmark_group("random");
    let ac = ArchConstraints::new(4).unwrap();
    for ops in [16, 64, 256] {
        let mut rng = ChaCha8Rng::seed_from_u64(ops as u64);
        let graphs: Vec<_> = (0..8).map(|_| random_ddg(&mut rng, ops, 32)).collect();
        group.bench_with_input(BenchmarkId::new("extract_and_combine", ops), &graphs, |b, gs| {
            b.iter(|| {
                gs.iter()
                    .map(|g| clone_and_combine(&max_miso(g, &ac), &ac).graph.len())
                    .sum::<usize>()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, corpus_graphs, random_graphs);
criterion_main!(benches);
