use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use flowdim_core::capture::{decode_packet, read_capture, LINKTYPE_ETHERNET};
use flowdim_core::dynamics::{fnn_fraction, FnnParams, NeighborSearch};
use flowdim_core::params::extract_params;
use flowdim_core::rules::{ack_scan_rule, builtin_catalog, RuleEngine};
use flowdim_core::series::boxcar_average;
use flowdim_core::synth::traffic::{crafted_capture, pcap_bytes};
use flowdim_core::synth::{lorenz_x, uniform_noise};
use flowdim_core::{DecodedPacket, TimeSeries};

fn decode(c: &mut Criterion) {
    let bytes = pcap_bytes(&crafted_capture(None, 1));
    let (recs, _) = read_capture(&bytes).unwrap();
    let mut g = c.benchmark_group("capture");
    g.throughput(Throughput::Elements(recs.len() as u64));
    g.bench_function("read_decode_extract", |b| {
        b.iter(|| {
            let (recs, link) = read_capture(black_box(&bytes)).unwrap();
            recs.iter()
                .filter_map(|r| decode_packet(r, link).ok())
                .map(|p| extract_params(&p).len())
                .sum::<usize>()
        })
    });
    g.finish();
}

fn rules(c: &mut Criterion) {
    let pkts: Vec<DecodedPacket> = crafted_capture(None, 2)
        .iter()
        .map(|r| decode_packet(r, LINKTYPE_ETHERNET).unwrap())
        .collect();
    let mut rules = builtin_catalog();
    rules.push(ack_scan_rule());
    let mut g = c.benchmark_group("rules");
    g.throughput(Throughput::Elements(pkts.len() as u64));
    g.bench_function("catalog", |b| {
        b.iter(|| RuleEngine::new(rules.clone()).run(black_box(&pkts)).unwrap().len())
    });
    g.finish();
}

fn fnn(c: &mut Criterion) {
    let series = TimeSeries::from_values(lorenz_x(4000), 0.1);
    let mut g = c.benchmark_group("fnn_lorenz_4000_d3");
    g.sample_size(10);
    for (name, search) in [("kdtree", NeighborSearch::KdTree), ("brute", NeighborSearch::BruteForce)] {
        let params = FnnParams {
            search,
            ..FnnParams::with_delay(2)
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &params, |b, p| {
            b.iter(|| fnn_fraction(black_box(&series), 3, p).unwrap())
        });
    }
    g.finish();
}

fn boxcar(c: &mut Criterion) {
    let series = TimeSeries::from_values(uniform_noise(100_000, 1), 1.0);
    let mut g = c.benchmark_group("boxcar_100k");
    for w in [4usize, 64] {
        g.bench_with_input(BenchmarkId::from_parameter(w), &w, |b, &w| {
            b.iter(|| boxcar_average(black_box(&series), w).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, decode, rules, fnn, boxcar);
criterion_main!(benches);
