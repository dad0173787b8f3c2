use nlcmd_bench::{synthetic_kb, utterances};
use nlcmd_core::grounding::{Grounder, Utterance};
use nlcmd_core::similarity::Weighting;

fn main() {
    let kb = synthetic_kb(100, 5);
    let g = Grounder::new(&kb, Weighting::Idf);
    let mut total = 0.0;
    for u in utterances(100) {
        total += g.ground(&Utterance::new(u)).unwrap().best_per_api[0].score;
    }
    println!("{total}");
}
