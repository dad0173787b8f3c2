use criterion::{criterion_group, criterion_main, Criterion};
use nlcmd_bench::{synthetic_kb, utterances};
use nlcmd_core::grounding::{Grounder, Utterance};
use nlcmd_core::similarity::Weighting;
use std::hint::black_box;

fn grounding(c: &mut Criterion) {
    let kb = synthetic_kb(100, 5);
    let grounder = Grounder::new(&kb, Weighting::Idf);
    let utts: Vec<Utterance> = utterances(64).into_iter().map(Utterance::new).collect();
    let mut i = 0;
    c.bench_function("ground_100x5", |b| {
        b.iter(|| {
            i = (i + 1) % utts.len();
            black_box(grounder.ground(black_box(&utts[i])).unwrap())
        })
    });
    c.bench_function("grounder_build_100x5", |b| {
        b.iter(|| black_box(Grounder::new(black_box(&kb), Weighting::Idf)))
    });
}

criterion_group!(benches, grounding);
criterion_main!(benches);
