//! Brute-force reference implementations used by the integration and
//! acceptance tests. Written against plain vectors and matrices only, so
//! they share no code path with the library under test.

#![allow(dead_code)]

use rand::Rng;

/// Entailment relation codes used by the scripted instances.
pub const ENTAILS: u8 = 0;
pub const CONTRADICTS: u8 = 1;
pub const NEUTRAL: u8 = 2;

/// Cluster ids numbered by first occurrence.
pub fn first_occurrence(raw: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    raw.iter()
        .map(|r| match seen.iter().position(|s| s == r) {
            Some(p) => p,
            None => {
                seen.push(*r);
                seen.len() - 1
            }
        })
        .collect()
}

/// Reachability closure (Floyd-Warshall style) of an undirected adjacency
/// matrix; each node is labeled by the smallest node it reaches.
pub fn closure_labels(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut reach: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i == j || adj[i][j] || adj[j][i]).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let raw: Vec<usize> = (0..n).map(|i| (0..n).find(|&j| reach[i][j]).unwrap()).collect();
    first_occurrence(&raw)
}

/// Replays mutual-entailment merges over explicit member sets, visiting the
/// candidate edges in ascending `(i, j)` order and refusing any merge whose
/// union would hold a pair judged contradictory in either direction.
pub fn skip_rule_labels(rel: &[Vec<u8>]) -> Vec<usize> {
    let n = rel.len();
    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let group_of = |groups: &Vec<Vec<usize>>, x: usize| groups.iter().position(|g| g.contains(&x)).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            if rel[i][j] != ENTAILS || rel[j][i] != ENTAILS {
                continue;
            }
            let (gi, gj) = (group_of(&groups, i), group_of(&groups, j));
            if gi == gj {
                continue;
            }
            let mut merged = groups[gi].clone();
            merged.extend(groups[gj].iter().copied());
            let clash = merged.iter().any(|&a| {
                merged
                    .iter()
                    .any(|&b| a != b && (rel[a][b] == CONTRADICTS || rel[b][a] == CONTRADICTS))
            });
            if clash {
                continue;
            }
            let (hi, lo) = (gi.max(gj), gi.min(gj));
            let taken = groups.remove(hi);
            groups[lo].extend(taken);
        }
    }
    let raw: Vec<usize> = (0..n).map(|x| group_of(&groups, x)).collect();
    first_occurrence(&raw)
}

/// True when `a` and `b` induce the same partition (all pairs compared).
pub fn same_grouping(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Path of mutual-entailment edges between `from` and `to`, by DFS.
pub fn mutual_path_exists(rel: &[Vec<u8>], from: usize, to: usize) -> bool {
    let n = rel.len();
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    while let Some(x) = stack.pop() {
        if x == to {
            return true;
        }
        if std::mem::replace(&mut seen[x], true) {
            continue;
        }
        for y in 0..n {
            if y != x && rel[x][y] == ENTAILS && rel[y][x] == ENTAILS && !seen[y] {
                stack.push(y);
            }
        }
    }
    false
}

/// `sum(1[s+ > s-] + 0.5 * 1[s+ == s-]) / (P * N)` over all pairs.
pub fn pair_count_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &sp) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sn) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            if sp > sn {
                num += 1.0;
            } else if sp == sn {
                num += 0.5;
            }
        }
    }
    num / pairs
}

/// Direct evaluation of the cluster distribution, no stabilization beyond
/// the per-pool max shift that is part of the definition.
pub fn eq1_distribution(logprobs: &[f64], clusters: &[usize], support: usize) -> Vec<f64> {
    let max = logprobs.iter().cloned().fold(f64::MIN, f64::max);
    let mut inner = vec![None::<f64>; support];
    for (lp, &c) in logprobs.iter().zip(clusters) {
        *inner[c].get_or_insert(0.0) += (lp - max).exp();
    }
    let outer: Vec<f64> = inner.iter().map(|v| v.map_or(0.0, f64::exp)).collect();
    let z: f64 = outer.iter().sum();
    outer.iter().map(|v| v / z).collect()
}

pub fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

pub fn softmax_direct(x: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

/// Random entailment relation over `n` texts drawn from hidden groups:
/// within-group pairs mostly entail, a few pairs contradict.
pub fn random_relation<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<u8>> {
    let groups: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
    let mut rel = vec![vec![NEUTRAL; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                rel[i][j] = ENTAILS;
                continue;
            }
            let r: f64 = rng.random();
            rel[i][j] = if groups[i] == groups[j] {
                if r < 0.8 {
                    ENTAILS
                } else if r < 0.9 {
                    CONTRADICTS
                } else {
                    NEUTRAL
                }
            } else if r < 0.1 {
                ENTAILS
            } else if r < 0.3 {
                CONTRADICTS
            } else {
                NEUTRAL
            };
        }
    }
    rel
}

/// Random unit vectors in `dim` dimensions, perturbed around a few centers
/// so that thresholds in [0.5, 1) produce non-trivial components.
pub fn random_clustered_vectors<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let centers: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            let c = &centers[rng.random_range(0..centers.len())];
            let noise: f64 = rng.random_range(0.05..0.6);
            let v: Vec<f64> = c.iter().map(|x| x + noise * rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / norm).collect()
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
