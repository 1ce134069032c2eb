use criterion::{black_box, criterion_group, criterion_main, Criterion};

use covertkey_bench::{channel_one, codebooks};
use covertkey_core::covert::reliability_atoms;
use covertkey_core::prob::iid_sum_law;
use covertkey_core::regions::{csk_region, default_rho_grid};
use covertkey_core::sim::{decode, exact_error, exact_protocol_metrics, protocol_metrics, Decoder};
use covertkey_core::{BinaryMacPair, Subset};

fn regions(c: &mut Criterion) {
    let grid = default_rho_grid();
    for (name, mac) in [
        ("channel1", BinaryMacPair::table1_channel1()),
        ("channel2", BinaryMacPair::table1_channel2()),
    ] {
        c.bench_function(&format!("csk_region_1001_{name}"), |b| {
            b.iter(|| csk_region(black_box(&mac), &grid, false).unwrap())
        });
    }
}

fn sum_law(c: &mut Criterion) {
    let (mac, cfg) = channel_one(0.1);
    let (values, probs) = reliability_atoms(&mac, &cfg, Subset::Both);
    for n in [8, 16] {
        c.bench_function(&format!("iid_sum_law_joint_n{n}"), |b| {
            b.iter(|| iid_sum_law(black_box(&values), &probs, n).unwrap())
        });
    }
}

fn simulation(c: &mut Criterion) {
    let (mac, cfg) = channel_one(0.25);
    let cb = codebooks(4, (2, 2, 2), &cfg, 7);
    c.bench_function("exact_error_n4", |b| {
        b.iter(|| exact_error(black_box(&cb), &mac, Decoder::KeyPosterior).unwrap())
    });
    c.bench_function("exact_protocol_metrics_n4", |b| {
        b.iter(|| exact_protocol_metrics(black_box(&cb), &mac, &cfg, Decoder::KeyPosterior).unwrap())
    });
    c.bench_function("protocol_metrics_n4_10k", |b| {
        b.iter(|| protocol_metrics(black_box(&cb), &mac, &cfg, 10_000, 3, Decoder::KeyPosterior).unwrap())
    });

    let big = codebooks(16, (4, 4, 8), &cfg, 7);
    let y = vec![1u8; 16];
    c.bench_function("decode_n16_key_posterior", |b| {
        b.iter(|| decode(black_box(&big), &mac, Decoder::KeyPosterior, (1, 2), &y))
    });
}

criterion_group!(benches, regions, sum_law, simulation);
criterion_main!(benches);
