//! Synthetic workloads shared by the benchmarks.

use hedge_core::evaluation::LabeledScore;
use hedge_core::judges::RuleNli;
use hedge_core::{AnswerSample, Label, PromptConfig, QuestionCase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: [&str; 8] = ["yes", "no", "polyp", "ulcer", "normal", "mass", "absent", "present"];

/// `count` texts drawn from a small vocabulary with numbered variants, so
/// both exact repeats and near-misses occur.
pub fn answer_texts(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let word = VOCAB[rng.random_range(0..VOCAB.len())];
            match rng.random_range(0..3) {
                0 => word.to_string(),
                v => format!("{word} {v}"),
            }
        })
        .collect()
}

pub fn case(n: usize, seed: u64) -> QuestionCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = |rng: &mut ChaCha8Rng| -> Vec<AnswerSample> {
        answer_texts(n, rng.random())
            .into_iter()
            .map(|t| AnswerSample::new(t, -rng.random_range(0.01..3.0)))
            .collect()
    };
    let clean = pool(&mut rng);
    let noisy = pool(&mut rng);
    QuestionCase {
        id: format!("bench-{seed}"),
        question: "Is there an abnormality?".into(),
        image_ref: "bench.png".into(),
        prompt_config: PromptConfig::Default,
        baseline: AnswerSample::new("yes", -0.05),
        clean,
        noisy,
        label: Label::from(seed.is_multiple_of(2)),
    }
}

pub fn dataset(cases: usize, n: usize) -> Vec<QuestionCase> {
    (0..cases as u64).map(|s| case(n, s)).collect()
}

pub fn labeled_scores(len: usize, seed: u64) -> Vec<LabeledScore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|i| LabeledScore {
            case_id: i.to_string(),
            score: (rng.random_range(0..1000) as f64) / 1000.0,
            label: Label::from(rng.random_bool(0.4)),
        })
        .collect()
}

pub fn nli() -> RuleNli {
    RuleNli::new()
        .equivalent(&["no", "absent"])
        .equivalent(&["yes", "present"])
        .contradiction("yes", "no")
        .contradiction("present", "absent")
}
