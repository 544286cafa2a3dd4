use criterion::{criterion_group, criterion_main, Criterion};
use purify_core::graphmc::{channel_distribution, exact_recurrence, role_for_round};
use purify_core::{
    mc_purification, ChannelParams, MCConfig, NoiseParams, Scheme, TwoColorableGraph,
};

fn steane(c: &mut Criterion) {
    let g = TwoColorableGraph::steane7();
    let noise = NoiseParams::uniform(0.01, 0.01).unwrap();
    let f_ch = ChannelParams::new(0.95).unwrap();
    let mut group = c.benchmark_group("steane7");
    group.sample_size(10);
    for scheme in Scheme::ALL {
        let mut cfg = MCConfig::new(g.clone(), scheme, noise.clone(), f_ch);
        cfg.rounds = 3;
        cfg.samples = 100_000;
        group.bench_function(format!("mc_{scheme}_1e5"), |b| {
            b.iter(|| mc_purification(&cfg).unwrap())
        });
        let start = channel_distribution(&g, f_ch, role_for_round(0), None);
        group.bench_function(format!("exact_{scheme}_3_rounds"), |b| {
            b.iter(|| exact_recurrence(&g, scheme, &noise, start.clone(), 3).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, steane);
criterion_main!(benches);
