//! Structural network metrics: degree and betweenness centrality, triad
//! census (4-class undirected, 16-class directed), transitivity, and
//! density.
//!
//! All metrics read the network as unweighted topology; callers apply
//! [`crate::graph::threshold_binary`] first when weights matter. For
//! betweenness, `score(v) = sum over pairs (s, t) of sigma_st(v) /
//! sigma_st`, where `sigma_st` counts shortest s-t paths and `sigma_st(v)`
//! those passing through `v`. Pairs with no connecting path contribute
//! nothing; undirected networks count each unordered pair once.
//!
//! Betweenness runs Brandes-style dependency accumulation per source. The
//! triad census enumerates all C(n,3) triples directly; rosters cap at 64
//! members so that is at most ~42k triples.

use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::{Directedness, SocialNetwork};
use crate::model::MemberId;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{metric} needs at least {needed} nodes, got {got}")]
    TooFewNodes {
        metric: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("{metric} requires an {expected} network")]
    WrongDirectedness {
        metric: &'static str,
        expected: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralityMetric {
    Degree,
    Betweenness,
}

/// Per-member centrality scores, in roster order.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub metric: CentralityMetric,
    pub normalized: bool,
    members: Vec<MemberId>,
    values: Vec<f64>,
}

impl CentralityScores {
    pub fn get(&self, member: &MemberId) -> Option<f64> {
        let i = self.members.iter().position(|m| m == member)?;
        Some(self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MemberId, f64)> + '_ {
        self.members.iter().zip(self.values.iter().copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Out-neighbor lists for directed nets; full adjacency for undirected.
fn adjacency(net: &SocialNetwork) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); net.node_count()];
    for (a, b, _) in net.edges() {
        adj[a].push(b);
        if !net.is_directed() {
            adj[b].push(a);
        }
    }
    adj
}

/// Degree centrality: incident edges (undirected) or in+out arcs
/// (directed). Normalization divides by n-1, or 2(n-1) when directed.
pub fn degree_centrality(
    net: &SocialNetwork,
    normalized: bool,
) -> Result<CentralityScores, MetricsError> {
    let n = net.node_count();
    if normalized && n < 2 {
        return Err(MetricsError::TooFewNodes {
            metric: "normalized degree centrality",
            needed: 2,
            got: n,
        });
    }
    let mut values = vec![0.0; n];
    for (a, b, _) in net.edges() {
        values[a] += 1.0;
        values[b] += 1.0;
    }
    if normalized {
        let denom = match net.directedness() {
            Directedness::Undirected => (n - 1) as f64,
            Directedness::Directed => 2.0 * (n - 1) as f64,
        };
        for v in &mut values {
            *v /= denom;
        }
    }
    Ok(CentralityScores {
        metric: CentralityMetric::Degree,
        normalized,
        members: net.nodes().to_vec(),
        values,
    })
}

/// Betweenness centrality on the unweighted topology.
///
/// Normalization divides by (n-1)(n-2)/2 for undirected networks and
/// (n-1)(n-2) for directed ones.
pub fn betweenness_centrality(
    net: &SocialNetwork,
    normalized: bool,
) -> Result<CentralityScores, MetricsError> {
    let n = net.node_count();
    if normalized && n < 3 {
        return Err(MetricsError::TooFewNodes {
            metric: "normalized betweenness centrality",
            needed: 3,
            got: n,
        });
    }

    let adj = adjacency(net);
    let mut values = vec![0.0; n];

    for source in 0..n {
        // BFS from `source`, tracking shortest-path counts and predecessors.
        let mut order: Vec<usize> = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0_f64; n];
        let mut dist = vec![usize::MAX; n];
        sigma[source] = 1.0;
        dist[source] = 0;

        let mut queue = VecDeque::new();
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }

        // Accumulate dependencies in reverse BFS order.
        let mut delta = vec![0.0_f64; n];
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w]);
            }
            if w != source {
                values[w] += delta[w];
            }
        }
    }

    if !net.is_directed() {
        // Each unordered pair was visited from both endpoints.
        for v in &mut values {
            *v /= 2.0;
        }
    }
    if normalized {
        let denom = match net.directedness() {
            Directedness::Undirected => ((n - 1) * (n - 2)) as f64 / 2.0,
            Directedness::Directed => ((n - 1) * (n - 2)) as f64,
        };
        for v in &mut values {
            *v /= denom;
        }
    }
    Ok(CentralityScores {
        metric: CentralityMetric::Betweenness,
        normalized,
        members: net.nodes().to_vec(),
        values,
    })
}

pub const UNDIRECTED_TRIAD_LABELS: [&str; 4] = ["T0", "T1", "T2", "T3"];

/// The sixteen directed triad isomorphism classes in conventional
/// census order (mutual/asymmetric/null dyad counts plus orientation).
pub const DIRECTED_TRIAD_LABELS: [&str; 16] = [
    "003", "012", "102", "021D", "021U", "021C", "111D", "111U", "030T", "030C", "201", "120D",
    "120U", "120C", "210", "300",
];

/// Triad counts over all C(n,3) node triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriadCensus {
    /// Counts indexed by the number of edges in the triple (0..=3).
    Undirected([u64; 4]),
    /// Counts indexed per [`DIRECTED_TRIAD_LABELS`].
    Directed([u64; 16]),
}

impl TriadCensus {
    pub fn is_directed(&self) -> bool {
        matches!(self, TriadCensus::Directed(_))
    }

    pub fn labels(&self) -> &'static [&'static str] {
        match self {
            TriadCensus::Undirected(_) => &UNDIRECTED_TRIAD_LABELS,
            TriadCensus::Directed(_) => &DIRECTED_TRIAD_LABELS,
        }
    }

    pub fn counts(&self) -> &[u64] {
        match self {
            TriadCensus::Undirected(c) => c,
            TriadCensus::Directed(c) => c,
        }
    }

    pub fn count(&self, label: &str) -> Option<u64> {
        let i = self.labels().iter().position(|l| *l == label)?;
        Some(self.counts()[i])
    }

    pub fn total(&self) -> u64 {
        self.counts().iter().sum()
    }

    /// Class proportions; all zero when there are no triads.
    pub fn proportions(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts().len()];
        }
        self.counts()
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

fn adjacency_matrix(net: &SocialNetwork) -> Vec<Vec<bool>> {
    let n = net.node_count();
    let mut m = vec![vec![false; n]; n];
    for (a, b, _) in net.edges() {
        m[a][b] = true;
        if !net.is_directed() {
            m[b][a] = true;
        }
    }
    m
}

/// Undirected triad census: triples classified by edge count.
pub fn triad_census_undirected(net: &SocialNetwork) -> Result<TriadCensus, MetricsError> {
    if net.is_directed() {
        return Err(MetricsError::WrongDirectedness {
            metric: "undirected triad census",
            expected: "undirected",
        });
    }
    let n = net.node_count();
    if n < 3 {
        return Err(MetricsError::TooFewNodes {
            metric: "triad census",
            needed: 3,
            got: n,
        });
    }
    let adj = adjacency_matrix(net);
    let mut counts = [0u64; 4];
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let edges =
                    adj[i][j] as usize + adj[i][k] as usize + adj[j][k] as usize;
                counts[edges] += 1;
            }
        }
    }
    Ok(TriadCensus::Undirected(counts))
}

/// Directed triad census over the sixteen isomorphism classes.
pub fn triad_census_directed(net: &SocialNetwork) -> Result<TriadCensus, MetricsError> {
    if !net.is_directed() {
        return Err(MetricsError::WrongDirectedness {
            metric: "directed triad census",
            expected: "directed",
        });
    }
    let n = net.node_count();
    if n < 3 {
        return Err(MetricsError::TooFewNodes {
            metric: "triad census",
            needed: 3,
            got: n,
        });
    }
    let adj = adjacency_matrix(net);
    let mut counts = [0u64; 16];
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                counts[classify_directed_triad(&adj, [i, j, k])] += 1;
            }
        }
    }
    Ok(TriadCensus::Directed(counts))
}

#[derive(Clone, Copy, PartialEq)]
enum Dyad {
    Null,
    /// One arc, recorded as (source, target) positions within the triple.
    Asymmetric(usize, usize),
    Mutual(usize, usize),
}

/// Classify one node triple into its census slot (index into
/// [`DIRECTED_TRIAD_LABELS`]). Dispatches on the dyad-state multiset, then
/// disambiguates orientation within each (mutual, asymmetric) count class.
fn classify_directed_triad(adj: &[Vec<bool>], nodes: [usize; 3]) -> usize {
    let dyad = |x: usize, y: usize| -> Dyad {
        let fwd = adj[nodes[x]][nodes[y]];
        let back = adj[nodes[y]][nodes[x]];
        match (fwd, back) {
            (false, false) => Dyad::Null,
            (true, true) => Dyad::Mutual(x, y),
            (true, false) => Dyad::Asymmetric(x, y),
            (false, true) => Dyad::Asymmetric(y, x),
        }
    };
    let dyads = [dyad(0, 1), dyad(0, 2), dyad(1, 2)];

    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut mutuals: Vec<(usize, usize)> = Vec::new();
    for d in dyads {
        match d {
            Dyad::Null => {}
            Dyad::Asymmetric(s, t) => arcs.push((s, t)),
            Dyad::Mutual(a, b) => mutuals.push((a, b)),
        }
    }

    match (mutuals.len(), arcs.len()) {
        (0, 0) => 0,  // 003
        (0, 1) => 1,  // 012
        (1, 0) => 2,  // 102
        (0, 2) => {
            let ((s1, t1), (s2, t2)) = (arcs[0], arcs[1]);
            if s1 == s2 {
                3 // 021D: common source
            } else if t1 == t2 {
                4 // 021U: common target
            } else {
                5 // 021C: chain
            }
        }
        (1, 1) => {
            let (a, b) = mutuals[0];
            let (_, target) = arcs[0];
            if target == a || target == b {
                6 // 111D: arc points into the mutual dyad
            } else {
                7 // 111U: arc leaves the mutual dyad
            }
        }
        (0, 3) => {
            // Cyclic iff every node has exactly one outgoing arc.
            let mut out = [0u8; 3];
            for &(s, _) in &arcs {
                out[s] += 1;
            }
            if out == [1, 1, 1] {
                9 // 030C
            } else {
                8 // 030T
            }
        }
        (1, 2) => {
            // The third node is the one outside the mutual dyad.
            let (a, b) = mutuals[0];
            let third = 3 - a - b;
            let from_third = arcs.iter().filter(|&&(s, _)| s == third).count();
            match from_third {
                2 => 11, // 120D: third sends to both
                0 => 12, // 120U: third receives from both
                _ => 13, // 120C: chain through the third node
            }
        }
        (2, 0) => 10, // 201
        (2, 1) => 14, // 210
        (3, 0) => 15, // 300
        _ => unreachable!("three dyads cap the counts"),
    }
}

/// Transitivity from an undirected census: closed triples over all
/// connected triples, `3*T3 / (3*T3 + T2)`. Returns `None` when the graph
/// has no connected triples at all, and an error for directed censuses.
pub fn transitivity(census: &TriadCensus) -> Result<Option<f64>, MetricsError> {
    let TriadCensus::Undirected(counts) = census else {
        return Err(MetricsError::WrongDirectedness {
            metric: "transitivity",
            expected: "undirected",
        });
    };
    let closed = 3 * counts[3];
    let open = counts[2];
    if closed + open == 0 {
        return Ok(None);
    }
    Ok(Some(closed as f64 / (closed + open) as f64))
}

/// Edge density: `|edges| / C(n,2)` undirected, `|arcs| / n(n-1)` directed.
pub fn density(net: &SocialNetwork) -> Result<f64, MetricsError> {
    let n = net.node_count();
    if n < 2 {
        return Err(MetricsError::TooFewNodes {
            metric: "density",
            needed: 2,
            got: n,
        });
    }
    let possible = match net.directedness() {
        Directedness::Undirected => n * (n - 1) / 2,
        Directedness::Directed => n * (n - 1),
    };
    Ok(net.edge_count() as f64 / possible as f64)
}
