//! Directed binary networks on a fixed node set, stored as dense bit-rows.
//!
//! Both the out-adjacency (rows) and in-adjacency (columns) are kept as
//! bitsets so that degree and shared-partner queries reduce to popcounts
//! of word-wise ANDs. Node identity is positional (0-based).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// Which degree margin to read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeMode {
    In,
    Out,
}

/// Shared-partner orientation: outgoing two-paths i->h->j or incoming j->h->i.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SharedPartnerType {
    Otp,
    Itp,
}

/// Whether a shared-partner histogram is restricted to tied pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SharedPartnerRelation {
    Edgewise,
    Dyadwise,
}

/// Directed binary graph with zero diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    n: usize,
    words: usize,
    /// rows[i] = bitset of j with i -> j
    rows: Vec<u64>,
    /// cols[j] = bitset of i with i -> j
    cols: Vec<u64>,
}

impl Network {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(WORD_BITS).max(1);
        Network {
            n,
            words,
            rows: vec![0; n * words],
            cols: vec![0; n * words],
        }
    }

    /// Build from a dense 0/1 matrix; rejects self-loops and non-binary entries.
    pub fn from_adjacency(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut net = Network::empty(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => {
                        if i == j {
                            return Err(Error::SelfLoop(i));
                        }
                        net.set(i, j, true);
                    }
                    other => {
                        return Err(Error::NonBinaryEntry {
                            row: i,
                            col: j,
                            value: other as f64,
                        })
                    }
                }
            }
        }
        Ok(net)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut net = Network::empty(n);
        for &(i, j) in edges {
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange {
                    node: i.max(j),
                    n,
                });
            }
            net.set(i, j, true);
        }
        Ok(net)
    }

    pub fn complete(n: usize) -> Self {
        let mut net = Network::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    net.set(i, j, true);
                }
            }
        }
        net
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, present: bool) {
        debug_assert!(i != j && i < self.n && j < self.n);
        let rw = i * self.words + j / WORD_BITS;
        let cw = j * self.words + i / WORD_BITS;
        let rbit = 1u64 << (j % WORD_BITS);
        let cbit = 1u64 << (i % WORD_BITS);
        if present {
            self.rows[rw] |= rbit;
            self.cols[cw] |= cbit;
        } else {
            self.rows[rw] &= !rbit;
            self.cols[cw] &= !cbit;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize, j: usize) {
        let present = self.get(i, j);
        self.set(i, j, !present);
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    fn col(&self, j: usize) -> &[u64] {
        &self.cols[j * self.words..(j + 1) * self.words]
    }

    #[inline]
    pub fn outdegree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn indegree(&self, j: usize) -> usize {
        self.col(j).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.outdegree(i)).sum()
    }

    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (self.n * (self.n - 1)) as f64
    }

    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        BitIter::new(self.row(i))
    }

    pub fn in_neighbors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        BitIter::new(self.col(j))
    }

    #[inline]
    fn and_count(a: &[u64], b: &[u64]) -> usize {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x & y).count_ones() as usize)
            .sum()
    }

    /// Number of h with i -> h and h -> j.
    #[inline]
    pub fn otp_count(&self, i: usize, j: usize) -> usize {
        Self::and_count(self.row(i), self.col(j))
    }

    /// Number of h with j -> h and h -> i.
    #[inline]
    pub fn itp_count(&self, i: usize, j: usize) -> usize {
        Self::and_count(self.row(j), self.col(i))
    }

    /// Number of i with i -> a and i -> b (common senders).
    #[inline]
    pub fn common_senders(&self, a: usize, b: usize) -> usize {
        Self::and_count(self.col(a), self.col(b))
    }

    /// Number of h with a -> h and b -> h (common receivers).
    #[inline]
    pub fn common_receivers(&self, a: usize, b: usize) -> usize {
        Self::and_count(self.row(a), self.row(b))
    }

    /// Hamming distance over ordered off-diagonal dyads.
    pub fn hamming(&self, other: &Network) -> Result<usize> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        let d = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum();
        Ok(d)
    }

    pub fn complement(&self) -> Network {
        let mut c = Network::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && !self.get(i, j) {
                    c.set(i, j, true);
                }
            }
        }
        c
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }

    /// Apply a node permutation: result has tie (p[i], p[j]) iff self has (i, j).
    pub fn relabel(&self, perm: &[usize]) -> Network {
        let mut out = Network::empty(self.n);
        for i in 0..self.n {
            for j in self.out_neighbors(i) {
                out.set(perm[i], perm[j], true);
            }
        }
        out
    }
}

struct BitIter<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl<'a> BitIter<'a> {
    fn new(words: &'a [u64]) -> Self {
        BitIter {
            words,
            word_idx: 0,
            current: if words.is_empty() { 0 } else { words[0] },
        }
    }
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.word_idx * WORD_BITS + bit)
    }
}

/// Column sums (in) or row sums (out) for every node.
pub fn degrees(net: &Network, mode: DegreeMode) -> Vec<usize> {
    match mode {
        DegreeMode::In => (0..net.n()).map(|j| net.indegree(j)).collect(),
        DegreeMode::Out => (0..net.n()).map(|i| net.outdegree(i)).collect(),
    }
}

/// Counts of ordered pairs by directed geodesic distance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicDistribution {
    /// counts[k] = ordered pairs at distance k+1
    pub counts: Vec<u64>,
    pub unreachable: u64,
}

impl GeodesicDistribution {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.unreachable
    }
}

/// BFS geodesic distribution with buckets 1..=max_bucket.
///
/// Distances beyond `max_bucket` are pooled into `unreachable` only when
/// `pool_beyond` is set; otherwise `max_bucket` must cover all finite
/// distances (>= n-1).
pub fn geodesic_distribution(
    net: &Network,
    max_bucket: usize,
    pool_beyond: bool,
) -> Result<GeodesicDistribution> {
    let n = net.n();
    if !pool_beyond && max_bucket + 1 < n {
        return Err(Error::BucketTooSmall {
            max_bucket,
            needed: n.saturating_sub(1),
        });
    }
    let mut counts = vec![0u64; max_bucket];
    let mut unreachable = 0u64;
    let mut dist = vec![usize::MAX; n];
    let mut queue = Vec::with_capacity(n);
    for s in 0..n {
        dist.fill(usize::MAX);
        dist[s] = 0;
        queue.clear();
        queue.push(s);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for v in net.out_neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push(v);
                }
            }
        }
        for (t, &d) in dist.iter().enumerate() {
            if t == s {
                continue;
            }
            if d == usize::MAX || d > max_bucket {
                unreachable += 1;
            } else {
                counts[d - 1] += 1;
            }
        }
    }
    Ok(GeodesicDistribution {
        counts,
        unreachable,
    })
}

/// Geodesic distribution with the exact default bucketing (nothing pooled).
pub fn geodesic_distribution_full(net: &Network) -> GeodesicDistribution {
    geodesic_distribution(net, net.n().saturating_sub(1).max(1), false)
        .expect("full bucketing never pools")
}

/// Histogram over shared-partner counts 0..=n-2.
///
/// Edgewise restricts to ordered pairs with a tie; dyadwise counts every
/// ordered off-diagonal pair.
pub fn shared_partner_counts(
    net: &Network,
    relation: SharedPartnerRelation,
    sp_type: SharedPartnerType,
) -> Vec<u64> {
    let n = net.n();
    let mut hist = vec![0u64; n.saturating_sub(1)];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if relation == SharedPartnerRelation::Edgewise && !net.get(i, j) {
                continue;
            }
            let sp = match sp_type {
                SharedPartnerType::Otp => net.otp_count(i, j),
                SharedPartnerType::Itp => net.itp_count(i, j),
            };
            hist[sp] += 1;
        }
    }
    hist
}

/// Indegree histogram: slot d = number of nodes with indegree d.
pub fn indegree_distribution(net: &Network) -> Vec<u64> {
    let n = net.n();
    let mut hist = vec![0u64; n];
    for j in 0..n {
        hist[net.indegree(j)] += 1;
    }
    hist
}
