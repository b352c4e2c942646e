use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use pivot_core::analysis::{fightin_words, ks_two_sample, mann_whitney, run_batch, Backends, BatchConfig, DEFAULT_PRIOR_MASS};
use pivot_core::backends::{EmbeddingVector, RetryPolicy, SimulatorParams};
use pivot_core::conversation::{extract_moments, merge_turns};
use pivot_core::measures::{compute_piv, piv_from_probs, range_from_vectors};
use pivot_core::synthetic::{generate_corpus_with, GeneratorConfig, MovePolicy, OracleForecaster, WorldParams, WorldSimulator};
use std::hint::black_box;
use std::sync::Arc;

/// Deterministic values in (0, 1) without pulling in an RNG.
fn values(n: usize, salt: u64) -> Vec<f64> {
    (0..n as u64)
        .map(|i| {
            let x = (i.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            ((x >> 11) as f64 + 0.5) / (1u64 << 53) as f64
        })
        .collect()
}

fn piv(c: &mut Criterion) {
    let mut group = c.benchmark_group("piv_from_probs");
    for n in [10, 100, 1000] {
        let probs = values(n, 1);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &probs, |b, p| b.iter(|| piv_from_probs(black_box(p))));
    }
    group.finish();
}

fn range(c: &mut Criterion) {
    let mut group = c.benchmark_group("range_from_vectors");
    for dim in [64, 768] {
        let vectors: Vec<EmbeddingVector> = (0..10).map(|i| EmbeddingVector::new(values(dim, i))).collect();
        group.bench_with_input(BenchmarkId::new("n10", dim), &vectors, |b, v| {
            b.iter(|| range_from_vectors(black_box(v)))
        });
    }
    group.finish();
}

fn tests(c: &mut Criterion) {
    let a = values(5000, 2);
    let b: Vec<f64> = values(5000, 3).iter().map(|v| v * 1.1).collect();
    c.bench_function("mann_whitney/5000x5000", |bench| bench.iter(|| mann_whitney(black_box(&a), black_box(&b))));
    c.bench_function("ks_two_sample/5000x5000", |bench| bench.iter(|| ks_two_sample(black_box(&a), black_box(&b))));
}

fn world(c: &mut Criterion) {
    let params = WorldParams::counseling();
    let corpus = generate_corpus_with(7, &params, &GeneratorConfig::counseling(), 50, 12).unwrap();
    let turns = merge_turns(&corpus.conversations[0]).unwrap();
    let moment = extract_moments("bench", &turns).pop().unwrap();
    let simulator = WorldSimulator::new(&params, MovePolicy::Uniform);
    let forecaster = OracleForecaster::new(params.clone());
    let sim_params = SimulatorParams {
        seed: Some(1),
        ..SimulatorParams::default()
    };
    let retry = RetryPolicy::immediate();
    c.bench_function("compute_piv/world_n10", |b| {
        b.iter(|| compute_piv(black_box(&moment), &simulator, &forecaster, &sim_params, &retry))
    });

    let backends = Backends {
        simulator: Arc::new(simulator),
        forecaster: Arc::new(forecaster),
        embedder: None,
    };
    let config = BatchConfig {
        params: sim_params,
        retry,
        ..BatchConfig::default()
    };
    let moments = corpus.annotations.len() as u64;
    let mut group = c.benchmark_group("run_batch");
    group.throughput(Throughput::Elements(moments));
    group.sample_size(20);
    group.bench_function("world_50_conversations", |b| {
        b.iter(|| run_batch(black_box(&corpus.conversations), &backends, &config))
    });
    group.finish();

    let texts: Vec<String> = corpus
        .conversations
        .iter()
        .flat_map(|c| c.utterances.iter().map(|u| u.text.clone()))
        .collect();
    let (a, b) = texts.split_at(texts.len() / 2);
    c.bench_function("fightin_words/world_50", |bench| {
        bench.iter(|| fightin_words(black_box(a), black_box(b), DEFAULT_PRIOR_MASS))
    });
}

criterion_group!(benches, piv, range, tests, world);
criterion_main!(benches);
