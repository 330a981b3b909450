use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fullpack::{pack, read_packed, unpack, write_packed, BitWidth};
use fullpack_bench::random_tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn pack_unpack(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (rows, cols) = (1024, 1024);
    let mut group = c.benchmark_group("packing/1024x1024");
    group.throughput(Throughput::Elements((rows * cols) as u64));
    for bits in BitWidth::PACKED {
        let t = random_tensor(&mut rng, bits, rows, cols);
        let packed = pack(&t).unwrap();
        group.bench_function(BenchmarkId::new("pack", bits), |b| b.iter(|| pack(black_box(&t)).unwrap()));
        group.bench_function(BenchmarkId::new("unpack", bits), |b| b.iter(|| unpack(black_box(&packed)).unwrap()));
        let mut file = Vec::new();
        write_packed(&packed, &mut file).unwrap();
        group.bench_function(BenchmarkId::new("read", bits), |b| {
            b.iter(|| read_packed(black_box(file.as_slice())).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pack_unpack);
criterion_main!(benches);
