//! Sparse symmetric pairwise supervision `y_ij ∈ {+1, -1}`.

use std::collections::HashMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Parallelism};
use crate::seed;

/// Which pairs receive a defined relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PairPolicy {
    /// Every pair `i != j`.
    Full,
    /// Each point draws `per_point` distinct partners; the union is symmetrized.
    Sampled { per_point: usize },
    /// `Full` up to `full_up_to` points, `Sampled` beyond.
    Auto { full_up_to: usize, per_point: usize },
}

impl Default for PairPolicy {
    fn default() -> Self {
        PairPolicy::Auto { full_up_to: 5000, per_point: 100 }
    }
}

impl PairPolicy {
    fn resolve(self, n: usize) -> PairPolicy {
        match self {
            PairPolicy::Auto { full_up_to, per_point } => {
                if n <= full_up_to {
                    PairPolicy::Full
                } else {
                    PairPolicy::Sampled { per_point }
                }
            }
            other => other,
        }
    }
}

/// Compressed symmetric adjacency: row `i` lists every `j` with a defined
/// relation, sorted ascending, together with `y_ij`. Both `(i, j)` and
/// `(j, i)` are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinityStore {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    values: Vec<i8>,
}

impl AffinityStore {
    /// Builds a store from unordered pairs. Repeating a pair with the same
    /// label is allowed; conflicting labels are not.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, i8)>,
    {
        let mut rows: Vec<Vec<(u32, i8)>> = vec![Vec::new(); n];
        for (i, j, y) in pairs {
            if i >= n || j >= n {
                return Err(Error::input(format!("pair ({i}, {j}) out of range for {n} points")));
            }
            if i == j {
                return Err(Error::input(format!("self-pair ({i}, {i}) is not allowed")));
            }
            if y != 1 && y != -1 {
                return Err(Error::input(format!("pair ({i}, {j}) has label {y}, expected ±1")));
            }
            rows[i].push((j as u32, y));
            rows[j].push((i as u32, y));
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
                    return Err(Error::input(format!(
                        "pair ({i}, {}) given conflicting labels",
                        w[0].0
                    )));
                }
            }
            row.dedup();
        }
        Ok(Self::from_rows(rows))
    }

    fn from_rows(rows: Vec<Vec<(u32, i8)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let total: usize = rows.iter().map(Vec::len).sum();
        let mut neighbors = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        for row in rows {
            for (j, y) in row {
                neighbors.push(j);
                values.push(y);
            }
            offsets.push(neighbors.len());
        }
        AffinityStore { offsets, neighbors, values }
    }

    /// Builds a store by evaluating a symmetric relation on the pairs chosen
    /// by `policy`. The relation returns `+1`, `-1`, or `0` for undefined.
    pub fn from_relation<F>(
        n: usize,
        policy: PairPolicy,
        seed: u64,
        mode: Parallelism,
        relation: F,
    ) -> Result<Self>
    where
        F: Fn(usize, usize) -> i8 + Sync + Send,
    {
        if n == 0 {
            return Err(Error::input("affinity needs at least one point"));
        }
        let rel = |i: usize, j: usize| if i < j { relation(i, j) } else { relation(j, i) };
        let rows = match policy.resolve(n) {
            PairPolicy::Full => par::map_indexed(n, mode, |i| {
                (0..n)
                    .filter(|&j| j != i)
                    .filter_map(|j| match rel(i, j) {
                        0 => None,
                        y => Some((j as u32, y)),
                    })
                    .collect::<Vec<_>>()
            }),
            PairPolicy::Sampled { per_point } => {
                let k = per_point.min(n - 1);
                let picks = par::map_indexed(n, mode, |i| {
                    let mut rng = seed::stream(seed, "pairs", i as u64);
                    index::sample(&mut rng, n - 1, k)
                        .into_iter()
                        .map(|j| if j >= i { j + 1 } else { j })
                        .collect::<Vec<_>>()
                });
                let mut cand: Vec<Vec<u32>> = picks
                    .iter()
                    .map(|p| p.iter().map(|&j| j as u32).collect())
                    .collect();
                for (i, p) in picks.iter().enumerate() {
                    for &j in p {
                        cand[j].push(i as u32);
                    }
                }
                par::map_indexed(n, mode, |i| {
                    let mut c = cand[i].clone();
                    c.sort_unstable();
                    c.dedup();
                    c.into_iter()
                        .filter_map(|j| match rel(i, j as usize) {
                            0 => None,
                            y => Some((j, y)),
                        })
                        .collect::<Vec<_>>()
                })
            }
            PairPolicy::Auto { .. } => unreachable!("resolved above"),
        };
        for row in &rows {
            if row.iter().any(|&(_, y)| y != 1 && y != -1) {
                return Err(Error::input("relation returned a value outside {-1, 0, 1}"));
            }
        }
        Ok(Self::from_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of unordered pairs with a defined relation.
    pub fn pair_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Number of ordered pairs `(i, j)` with a defined relation.
    pub fn ordered_pair_count(&self) -> usize {
        self.neighbors.len()
    }

    /// `y_ij`, or 0 when the relation is undefined.
    pub fn get(&self, i: usize, j: usize) -> i8 {
        let (nb, vals) = self.row(i);
        match nb.binary_search(&(j as u32)) {
            Ok(p) => vals[p],
            Err(_) => 0,
        }
    }

    /// Neighbor ids and labels of point `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[i8]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.neighbors[r.clone()], &self.values[r])
    }

    #[inline]
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn neighbors_flat(&self) -> &[u32] {
        &self.neighbors
    }

    pub fn values_flat(&self) -> &[i8] {
        &self.values
    }

    /// Iterates unordered pairs `(i, j, y)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        (0..self.n()).flat_map(move |i| {
            let (nb, vals) = self.row(i);
            nb.iter()
                .zip(vals)
                .filter(move |(&j, _)| (j as usize) > i)
                .map(move |(&j, &y)| (i, j as usize, y))
        })
    }
}

/// Similarity from multi-class label agreement.
pub fn affinity_from_class_labels(
    labels: &[i64],
    policy: PairPolicy,
    seed: u64,
    mode: Parallelism,
) -> Result<AffinityStore> {
    AffinityStore::from_relation(labels.len(), policy, seed, mode, |i, j| {
        if labels[i] == labels[j] {
            1
        } else {
            -1
        }
    })
}

/// Treatment of pairs that share some tags, but fewer than the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartialOverlap {
    #[default]
    Dissimilar,
    Undefined,
}

/// Per-point tag sets, interned to sorted integer ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TagSets {
    sets: Vec<Vec<u32>>,
}

impl TagSets {
    pub fn from_ids(mut sets: Vec<Vec<u32>>) -> Self {
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        TagSets { sets }
    }

    /// Interns string tokens; identical spellings share an id.
    pub fn from_tokens<S: AsRef<str>>(lines: &[Vec<S>]) -> Self {
        Self::from_token_groups(&[lines]).pop().unwrap()
    }

    /// Interns several token collections against one shared vocabulary, so
    /// ids are comparable across the returned sets.
    pub fn from_token_groups<S: AsRef<str>>(groups: &[&[Vec<S>]]) -> Vec<Self> {
        let mut vocab: HashMap<String, u32> = HashMap::new();
        groups
            .iter()
            .map(|lines| {
                let sets = lines
                    .iter()
                    .map(|toks| {
                        toks.iter()
                            .map(|t| {
                                let next = vocab.len() as u32;
                                *vocab.entry(t.as_ref().to_owned()).or_insert(next)
                            })
                            .collect()
                    })
                    .collect();
                Self::from_ids(sets)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, i: usize) -> &[u32] {
        &self.sets[i]
    }

    /// Size of the intersection of two points' tag sets.
    pub fn shared(&self, i: usize, j: usize) -> usize {
        shared_count(&self.sets[i], &self.sets[j])
    }

    /// Intersection size between point `i` here and point `j` of `other`.
    /// Only meaningful when both sets were interned together.
    pub fn shared_with(&self, i: usize, other: &TagSets, j: usize) -> usize {
        shared_count(&self.sets[i], &other.sets[j])
    }
}

pub(crate) fn shared_count(a: &[u32], b: &[u32]) -> usize {
    let (mut p, mut q, mut c) = (0, 0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                p += 1;
                q += 1;
            }
        }
    }
    c
}

/// Tag-overlap relation: `+1` when at least `threshold` tags are shared.
pub fn tag_relation(shared: usize, threshold: usize, partial: PartialOverlap) -> i8 {
    if shared >= threshold {
        1
    } else if shared == 0 || partial == PartialOverlap::Dissimilar {
        -1
    } else {
        0
    }
}

/// Similarity from shared tags.
pub fn affinity_from_tags(
    tags: &TagSets,
    threshold: usize,
    partial: PartialOverlap,
    policy: PairPolicy,
    seed: u64,
    mode: Parallelism,
) -> Result<AffinityStore> {
    if threshold == 0 {
        return Err(Error::input("tag threshold must be at least 1"));
    }
    AffinityStore::from_relation(tags.len(), policy, seed, mode, |i, j| {
        tag_relation(tags.shared(i, j), threshold, partial)
    })
}
