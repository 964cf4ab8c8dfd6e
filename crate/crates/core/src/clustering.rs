//! Semantic clustering of an assembled answer sequence.
//!
//! Two strategies:
//!
//! * **Entailment graph.** Every ordered pair `(i, j)`, `i != j`, is judged.
//!   `i` and `j` are mutually linked when both directions entail. Mutual links
//!   are merged with union-find in ascending `(i, j)` order, and a merge is
//!   skipped whenever it would put a contradicting pair (either direction)
//!   into one component.
//! * **Similarity graph.** Unit embeddings are linked when their cosine is at
//!   least `tau`, optionally also to their `k` nearest neighbors; clusters are
//!   the connected components.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{HedgeError, Result};
use crate::judges::{embed_batch, judge_pairs, Embedder, EmbeddingVector, EntailmentJudge, EntailmentLabel, TextPair};
use crate::model::{canonicalize_labels, ClusterLabeling};
use crate::union_find::UnionFind;

/// Which clustering strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Nli,
    Embedding { tau: f64, k: Option<usize> },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Nli => "nli",
            Strategy::Embedding { .. } => "embedding",
        }
    }
}

/// Dense symmetric cosine-similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Builds from explicit rows; used for scripted graphs.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }
}

/// Dot products of unit vectors clamped to `[-1, 1]`. Identical vectors get
/// exactly `1`, so duplicate texts always clear any threshold `tau <= 1`.
pub fn pairwise_cosines(vectors: &[EmbeddingVector]) -> SimilarityMatrix {
    let n = vectors.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = 1.0;
        for j in i + 1..n {
            let s = if vectors[i] == vectors[j] {
                1.0
            } else {
                vectors[i].dot(&vectors[j]).clamp(-1.0, 1.0)
            };
            data[i * n + j] = s;
            data[j * n + i] = s;
        }
    }
    SimilarityMatrix { n, data }
}

/// Undirected graph over `n` responses, edges stored as `(i, j)` with `i < j`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimilarityGraph {
    pub n: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl SimilarityGraph {
    pub fn components(&self) -> ClusterLabeling {
        let mut uf = UnionFind::new(self.n);
        for &(i, j) in &self.edges {
            uf.union(i, j);
        }
        canonicalize_labels(&uf.roots())
    }
}

pub fn threshold_edges(sims: &SimilarityMatrix, tau: f64) -> BTreeSet<(usize, usize)> {
    let n = sims.n();
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if sims.get(i, j) >= tau {
                edges.insert((i, j));
            }
        }
    }
    edges
}

/// Links every node to its `k` most similar other nodes (ties go to the lower
/// index). `k >= n` is clamped to `n - 1`.
pub fn knn_edges(sims: &SimilarityMatrix, k: usize) -> Result<BTreeSet<(usize, usize)>> {
    if k == 0 {
        return Err(HedgeError::InvalidConfig("kNN requires k >= 1".into()));
    }
    let n = sims.n();
    let k = k.min(n.saturating_sub(1));
    let mut edges = BTreeSet::new();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        let row = sims.row(i);
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &j in &order[..k] {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    Ok(edges)
}

pub fn similarity_graph(sims: &SimilarityMatrix, tau: f64, k: Option<usize>) -> Result<SimilarityGraph> {
    check_tau(tau)?;
    let mut edges = threshold_edges(sims, tau);
    if let Some(k) = k {
        edges.extend(knn_edges(sims, k)?);
    }
    Ok(SimilarityGraph { n: sims.n(), edges })
}

pub fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(HedgeError::InvalidConfig(format!("tau must lie in (0, 1], got {tau}")))
    }
}

/// Clusters precomputed similarities; lets threshold sweeps skip re-embedding.
pub fn cluster_similarities(sims: &SimilarityMatrix, tau: f64, k: Option<usize>) -> Result<ClusterLabeling> {
    Ok(similarity_graph(sims, tau, k)?.components())
}

pub fn cluster_by_embedding<E: Embedder + ?Sized>(
    texts: &[String],
    embedder: &E,
    tau: f64,
    k: Option<usize>,
) -> Result<ClusterLabeling> {
    check_tau(tau)?;
    let vectors = embed_batch(texts, embedder)?;
    cluster_similarities(&pairwise_cosines(&vectors), tau, k)
}

/// Directed entailment edges plus undirected contradictions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntailmentGraph {
    pub n: usize,
    pub entails: BTreeSet<(usize, usize)>,
    /// Stored as `(i, j)` with `i < j`.
    pub contradicts: BTreeSet<(usize, usize)>,
}

impl EntailmentGraph {
    /// `labels[k]` belongs to the `k`-th pair of [`ordered_pairs`].
    pub fn from_labels(n: usize, labels: &[EntailmentLabel]) -> Self {
        let mut g = EntailmentGraph {
            n,
            ..Default::default()
        };
        for ((i, j), label) in ordered_index_pairs(n).zip(labels) {
            match label {
                EntailmentLabel::Entails => {
                    g.entails.insert((i, j));
                }
                EntailmentLabel::Contradicts => {
                    g.contradicts.insert((i.min(j), i.max(j)));
                }
                EntailmentLabel::Neutral => {}
            }
        }
        g
    }

    pub fn mutual_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entails
            .iter()
            .copied()
            .filter(|&(i, j)| i < j && self.entails.contains(&(j, i)))
    }

    pub fn contradict(&self, i: usize, j: usize) -> bool {
        self.contradicts.contains(&(i.min(j), i.max(j)))
    }

    /// Union-find over mutual edges in ascending order with the contradiction veto.
    pub fn cluster(&self) -> ClusterLabeling {
        let n = self.n;
        let mut conflict = vec![false; n * n];
        for &(i, j) in &self.contradicts {
            conflict[i * n + j] = true;
            conflict[j * n + i] = true;
        }
        let mut uf = UnionFind::new(n);
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (i, j) in self.mutual_edges() {
            let (ri, rj) = (uf.find(i), uf.find(j));
            if ri == rj {
                continue;
            }
            let vetoed = members[ri]
                .iter()
                .any(|&a| members[rj].iter().any(|&b| conflict[a * n + b]));
            if vetoed {
                continue;
            }
            let root = uf.union(ri, rj).expect("distinct roots");
            let absorbed = if root == ri { rj } else { ri };
            let moved = std::mem::take(&mut members[absorbed]);
            members[root].extend(moved);
        }
        canonicalize_labels(&uf.roots())
    }
}

fn ordered_index_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}

/// All `n(n-1)` ordered `(premise, hypothesis)` pairs, row-major, self-pairs excluded.
pub fn ordered_pairs(texts: &[String]) -> Vec<TextPair> {
    ordered_index_pairs(texts.len())
        .map(|(i, j)| (texts[i].clone(), texts[j].clone()))
        .collect()
}

pub fn cluster_by_nli<J: EntailmentJudge + ?Sized>(texts: &[String], judge: &J) -> Result<ClusterLabeling> {
    if texts.is_empty() {
        return Err(HedgeError::EmptyPool);
    }
    if texts.len() == 1 {
        return Ok(canonicalize_labels(&[0]));
    }
    let labels = judge_pairs(&ordered_pairs(texts), judge)?;
    Ok(EntailmentGraph::from_labels(texts.len(), &labels).cluster())
}

/// Runs `strategy` over `texts` with whichever judge it needs.
pub fn cluster_texts<E, J>(texts: &[String], strategy: &Strategy, embedder: &E, nli: &J) -> Result<ClusterLabeling>
where
    E: Embedder + ?Sized,
    J: EntailmentJudge + ?Sized,
{
    match *strategy {
        Strategy::Nli => cluster_by_nli(texts, nli),
        Strategy::Embedding { tau, k } => cluster_by_embedding(texts, embedder, tau, k),
    }
}
