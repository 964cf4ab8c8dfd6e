//! Question cases, answer pools and the assembled clustering sequence.
//!
//! Every case carries one low-temperature baseline answer `A0`, `n` clean
//! high-temperature answers and `n` answers sampled from distorted images.
//! Clustering always runs over the flat sequence `[A0, A1..An, N1..Nn]`; the
//! [`Spans`] index map tells downstream stages which slice belongs to which pool.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HedgeError, Result};

/// One generated answer and its mean token log-probability (nats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSample {
    pub text: String,
    pub mean_logprob: f64,
}

impl AnswerSample {
    pub fn new(text: impl Into<String>, mean_logprob: f64) -> Self {
        Self {
            text: text.into(),
            mean_logprob,
        }
    }

    fn violation(&self) -> Option<String> {
        if self.text.trim().is_empty() {
            return Some("answer text is empty".to_string());
        }
        if !self.mean_logprob.is_finite() {
            return Some(format!("mean_logprob {} is not finite", self.mean_logprob));
        }
        if self.mean_logprob > 0.0 {
            return Some(format!("mean_logprob {} is positive", self.mean_logprob));
        }
        None
    }
}

/// Answer-length prompt template used to elicit the answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptConfig {
    Default,
    MinimalLabel,
    OneSentence,
    ClinicalPhrase,
}

impl PromptConfig {
    pub const ALL: [PromptConfig; 4] = [
        PromptConfig::Default,
        PromptConfig::MinimalLabel,
        PromptConfig::OneSentence,
        PromptConfig::ClinicalPhrase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptConfig::Default => "default",
            PromptConfig::MinimalLabel => "minimal-label",
            PromptConfig::OneSentence => "one-sentence",
            PromptConfig::ClinicalPhrase => "clinical-phrase",
        }
    }
}

impl fmt::Display for PromptConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Adjudicated label of the baseline answer. Serialized as `0` / `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Supported,
    Hallucinated,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Hallucinated
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Label::Supported),
            1 => Ok(Label::Hallucinated),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        match l {
            Label::Supported => 0,
            Label::Hallucinated => 1,
        }
    }
}

impl From<bool> for Label {
    fn from(hallucinated: bool) -> Self {
        if hallucinated {
            Label::Hallucinated
        } else {
            Label::Supported
        }
    }
}

/// One image-question pair with its baseline, clean and noisy answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionCase {
    pub id: String,
    pub question: String,
    pub image_ref: String,
    pub prompt_config: PromptConfig,
    pub baseline: AnswerSample,
    pub clean: Vec<AnswerSample>,
    pub noisy: Vec<AnswerSample>,
    pub label: Label,
}

impl QuestionCase {
    /// Pool size `n`.
    pub fn n(&self) -> usize {
        self.clean.len()
    }

    /// All invariant violations, in field order. Empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.clean.is_empty() {
            out.push("clean pool is empty".to_string());
        }
        if self.clean.len() != self.noisy.len() {
            out.push(format!(
                "unbalanced pools: {} clean vs {} noisy",
                self.clean.len(),
                self.noisy.len()
            ));
        }
        if let Some(v) = self.baseline.violation() {
            out.push(format!("baseline: {v}"));
        }
        for (pool, samples) in [("clean", &self.clean), ("noisy", &self.noisy)] {
            for (i, s) in samples.iter().enumerate() {
                if let Some(v) = s.violation() {
                    out.push(format!("{pool}[{i}]: {v}"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(reason) => Err(HedgeError::invalid_case(&self.id, reason)),
        }
    }

    /// Copy of this case keeping only the first `n` clean and first `n` noisy answers.
    pub fn truncated(&self, n: usize) -> Result<QuestionCase> {
        let have = self.clean.len().min(self.noisy.len());
        if n == 0 || n > have {
            return Err(HedgeError::InsufficientSamples {
                case_id: self.id.clone(),
                need: n.max(1),
                have,
            });
        }
        let mut out = self.clone();
        out.clean.truncate(n);
        out.noisy.truncate(n);
        Ok(out)
    }
}

/// Whether the question text is prefixed to every answer before clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    AnswerOnly,
    AnswerPlusQuestion,
}

impl InputMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InputMode::AnswerOnly => "answer_only",
            InputMode::AnswerPlusQuestion => "answer_plus_question",
        }
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputMode {
    type Err = HedgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "answer_only" | "ao" => Ok(InputMode::AnswerOnly),
            "answer_plus_question" | "aq" => Ok(InputMode::AnswerPlusQuestion),
            other => Err(HedgeError::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

/// Index map over an assembled sequence of length `2n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spans {
    n: usize,
}

impl Spans {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        2 * self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn baseline(&self) -> usize {
        0
    }

    pub fn clean(&self) -> Range<usize> {
        1..self.n + 1
    }

    pub fn noisy(&self) -> Range<usize> {
        self.n + 1..2 * self.n + 1
    }
}

/// `[A0] + [A1..An] + [N1..Nn]` with log-probs aligned to the raw answers.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSequence {
    pub texts: Vec<String>,
    pub logprobs: Vec<f64>,
    pub spans: Spans,
}

impl AssembledSequence {
    pub fn clean_logprobs(&self) -> &[f64] {
        &self.logprobs[self.spans.clean()]
    }

    pub fn noisy_logprobs(&self) -> &[f64] {
        &self.logprobs[self.spans.noisy()]
    }

    /// Splits the sequence back into (baseline, clean, noisy) pools.
    pub fn pools(&self) -> (AnswerSample, Vec<AnswerSample>, Vec<AnswerSample>) {
        let pick = |r: Range<usize>| -> Vec<AnswerSample> {
            r.map(|i| AnswerSample::new(self.texts[i].clone(), self.logprobs[i]))
                .collect()
        };
        let b = self.spans.baseline();
        (
            AnswerSample::new(self.texts[b].clone(), self.logprobs[b]),
            pick(self.spans.clean()),
            pick(self.spans.noisy()),
        )
    }
}

pub fn assemble_sequence(case: &QuestionCase, mode: InputMode) -> Result<AssembledSequence> {
    case.validate()?;
    let n = case.n();
    let samples = std::iter::once(&case.baseline).chain(&case.clean).chain(&case.noisy);
    let mut texts = Vec::with_capacity(2 * n + 1);
    let mut logprobs = Vec::with_capacity(2 * n + 1);
    for s in samples {
        texts.push(match mode {
            InputMode::AnswerOnly => s.text.clone(),
            InputMode::AnswerPlusQuestion => format!("{} {}", case.question, s.text),
        });
        logprobs.push(s.mean_logprob);
    }
    Ok(AssembledSequence {
        texts,
        logprobs,
        spans: Spans::new(n),
    })
}

/// Per-response cluster ids in canonical form: ids are numbered in order of
/// first occurrence, so the id of a cluster is the rank of its smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub ids: Vec<usize>,
    pub num_clusters: usize,
}

impl ClusterLabeling {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn same_cluster(&self, i: usize, j: usize) -> bool {
        self.ids[i] == self.ids[j]
    }

    /// Members of every cluster, indexed by cluster id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, &c) in self.ids.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

pub fn canonicalize_labels(ids: &[usize]) -> ClusterLabeling {
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let ids: Vec<usize> = ids
        .iter()
        .map(|&raw| {
            let next = remap.len();
            *remap.entry(raw).or_insert(next)
        })
        .collect();
    ClusterLabeling {
        ids,
        num_clusters: remap.len(),
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::case;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn assemble_answer_only_layout() {
        let c = case("c", "A0", &["A1", "A2"], &["N1", "N2"], 0);
        let seq = assemble_sequence(&c, InputMode::AnswerOnly).unwrap();
        assert_eq!(seq.texts, ["A0", "A1", "A2", "N1", "N2"]);
        assert_eq!(seq.spans.clean(), 1..3);
        assert_eq!(seq.spans.noisy(), 3..5);
        assert_eq!(seq.spans.len(), 5);
    }

    #[test]
    fn assemble_prefixes_question_and_keeps_logprobs() {
        let mut c = case("c", "yes", &["no"], &["yes"], 1);
        c.baseline.mean_logprob = -0.25;
        c.clean[0].mean_logprob = -1.5;
        c.noisy[0].mean_logprob = -3.0;
        let seq = assemble_sequence(&c, InputMode::AnswerPlusQuestion).unwrap();
        assert_eq!(seq.texts, ["Q? yes", "Q? no", "Q? yes"]);
        assert_eq!(seq.logprobs, [-0.25, -1.5, -3.0]);
        let raw = assemble_sequence(&c, InputMode::AnswerOnly).unwrap();
        assert_eq!(raw.logprobs, seq.logprobs);
    }

    #[test]
    fn pools_round_trip() {
        let c = case("c", "a", &["b", "c", "d"], &["e", "f", "g"], 0);
        let seq = assemble_sequence(&c, InputMode::AnswerOnly).unwrap();
        let (b, clean, noisy) = seq.pools();
        assert_eq!(b, c.baseline);
        assert_eq!(clean, c.clean);
        assert_eq!(noisy, c.noisy);
    }

    #[test]
    fn rejects_unbalanced_and_empty_pools() {
        let c = case("bad", "a", &["b", "c"], &["d"], 0);
        let err = assemble_sequence(&c, InputMode::AnswerOnly).unwrap_err();
        assert!(matches!(err, HedgeError::InvalidCase { ref id, .. } if id == "bad"));

        let c = case("empty", "a", &[], &[], 0);
        assert!(assemble_sequence(&c, InputMode::AnswerOnly).is_err());
    }

    #[test]
    fn rejects_positive_logprob_and_blank_text() {
        let mut c = case("c", "a", &["b"], &["c"], 0);
        c.clean[0].mean_logprob = 0.3;
        assert!(c.validate().is_err());
        let mut c = case("c", "a", &["b"], &["c"], 0);
        c.noisy[0].text = "   ".into();
        assert!(c.validate().is_err());
        let mut c = case("c", "a", &["b"], &["c"], 0);
        c.baseline.mean_logprob = f64::NAN;
        assert!(c.validate().is_err());
    }

    #[test]
    fn label_serde_is_integral() {
        let c = case("c", "a", &["b"], &["c"], 1);
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["label"], 1);
        assert_eq!(json["prompt_config"], "default");
        let mut bad = json.clone();
        bad["label"] = 2.into();
        assert!(serde_json::from_value::<QuestionCase>(bad).is_err());
    }

    #[test]
    fn truncation() {
        let c = case("c", "a", &["b", "c", "d"], &["e", "f", "g"], 0);
        let t = c.truncated(2).unwrap();
        assert_eq!(t.clean.len(), 2);
        assert_eq!(t.noisy[1].text, "f");
        assert!(matches!(
            c.truncated(4),
            Err(HedgeError::InsufficientSamples { need: 4, have: 3, .. })
        ));
    }

    #[test]
    fn canonical_examples() {
        let l = canonicalize_labels(&[5, 5, 2, 9]);
        assert_eq!(l.ids, [0, 0, 1, 2]);
        assert_eq!(l.num_clusters, 3);
        assert_eq!(canonicalize_labels(&[0, 1, 2]).ids, [0, 1, 2]);
        assert_eq!(canonicalize_labels(&[3, 1, 3, 1]).ids, [0, 1, 0, 1]);
        assert_eq!(canonicalize_labels(&[]).num_clusters, 0);
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent_and_preserves_grouping(
            ids in prop::collection::vec(0usize..12, 1..64)
        ) {
            let l = canonicalize_labels(&ids);
            prop_assert_eq!(&canonicalize_labels(&l.ids), &l);
            for i in 0..ids.len() {
                for j in 0..ids.len() {
                    prop_assert_eq!(ids[i] == ids[j], l.ids[i] == l.ids[j]);
                }
            }
            // gapless and ordered by smallest member
            let mut seen = 0;
            for &c in &l.ids {
                prop_assert!(c <= seen);
                if c == seen { seen += 1; }
            }
            prop_assert_eq!(seen, l.num_clusters);
        }
    }
}
