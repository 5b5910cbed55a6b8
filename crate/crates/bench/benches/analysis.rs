use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use tokennet_bench::{network, SIZES};
use tokennet_core::backbone::extract_backbone;
use tokennet_core::centrality::{pagerank, PageRankParams};
use tokennet_core::community::{louvain, project_undirected};
use tokennet_core::structure::{compute_diameters, scc_decomposition};
use tokennet_core::synthetic::synthetic_dataset;
use tokennet_core::temporal::{snapshot_series, Resolution};
use tokennet_core::{build_entity_map, build_mtn, Grouping};

fn bench_pagerank(c: &mut Criterion) {
    let mut group = c.benchmark_group("pagerank");
    for size in SIZES {
        let net = network(size);
        group.throughput(Throughput::Elements(net.edge_count() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(size), &net, |b, net| {
            b.iter(|| pagerank(black_box(net), &PageRankParams::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_backbone(c: &mut Criterion) {
    let mut group = c.benchmark_group("backbone");
    for size in SIZES {
        let net = network(size);
        group.throughput(Throughput::Elements(net.edge_count() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(size), &net, |b, net| {
            b.iter(|| extract_backbone(black_box(net), 0.01).unwrap())
        });
    }
    group.finish();
}

fn bench_scc(c: &mut Criterion) {
    let mut group = c.benchmark_group("scc");
    for size in SIZES {
        let net = network(size);
        group.bench_with_input(BenchmarkId::from_parameter(size), &net, |b, net| {
            b.iter(|| {
                let mut summary = scc_decomposition(black_box(net));
                compute_diameters(net, &mut summary);
                summary
            })
        });
    }
    group.finish();
}

fn bench_louvain(c: &mut Criterion) {
    let mut group = c.benchmark_group("louvain");
    group.sample_size(10);
    for size in SIZES {
        let graph = project_undirected(&network(size));
        group.bench_with_input(BenchmarkId::from_parameter(size), &graph, |b, g| {
            b.iter(|| louvain(black_box(g), 1.0, 42).unwrap())
        });
    }
    group.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    let data = synthetic_dataset(1, 20_000);
    let ego = data.ego_tags.iter().cloned().collect();
    let entities = build_entity_map(&data.labels, &ego, Grouping::Entity);
    c.bench_function("build_mtn/20k", |b| b.iter(|| build_mtn(black_box(&data.transfers), &entities)));
    c.bench_function("snapshots/day/20k", |b| {
        b.iter(|| snapshot_series(black_box(&data.transfers), Resolution::Day, &entities))
    });
}

criterion_group!(benches, bench_pagerank, bench_backbone, bench_scc, bench_louvain, bench_pipeline);
criterion_main!(benches);
