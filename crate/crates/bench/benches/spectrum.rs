use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cvqkd::gaussian::{symplectic_invariants, symplectic_spectrum_generic, symplectic_spectrum_quartic};
use cvqkd::protocols::pre_heterodyne_closed_form;
use cvqkd::{ChannelParams, ProtocolScenario, Variant};

fn spectrum(c: &mut Criterion) {
    let ch = ChannelParams::new(0.4, 0.1).unwrap();
    let s = ProtocolScenario::symmetric(Variant::Het2M, 100.0, 100.0, 0.8, 0.99, ch).unwrap();
    let cm = pre_heterodyne_closed_form(&s).unwrap();

    let mut g = c.benchmark_group("spectrum_4mode");
    g.bench_function("generic", |b| b.iter(|| symplectic_spectrum_generic(black_box(&cm)).unwrap()));
    g.bench_function("quartic", |b| {
        b.iter(|| symplectic_spectrum_quartic(&symplectic_invariants(black_box(&cm)).unwrap()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, spectrum);
criterion_main!(benches);
