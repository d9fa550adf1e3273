use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cvqkd::analysis::{distance_to_transmittance, tolerable_epsilon};
use cvqkd::{key_rate, ChannelParams, ProtocolScenario, Variant};

fn scenario(variant: Variant) -> ProtocolScenario {
    let t = distance_to_transmittance(20.0, 0.2).unwrap();
    ProtocolScenario::symmetric(variant, 100.0, 100.0, 0.8, 0.99, ChannelParams::new(t, 0.2).unwrap()).unwrap()
}

fn rates(c: &mut Criterion) {
    let mut g = c.benchmark_group("key_rate");
    for v in [Variant::Het2M, Variant::Hom2M, Variant::OneWayHet] {
        let s = scenario(v);
        g.bench_function(v.as_str(), |b| b.iter(|| key_rate(black_box(&s)).unwrap()));
    }
    g.finish();

    let s = scenario(Variant::Het2M);
    c.bench_function("tolerable_epsilon/het2m_20km", |b| {
        b.iter(|| tolerable_epsilon(black_box(&s), 20.0, 0.2).unwrap())
    });
}

criterion_group!(benches, rates);
criterion_main!(benches);
