//! Socio-technical congruence: coordination requirements mined from commit
//! activity versus actual communication.
//!
//! The pipeline is: a binary member-by-file assignment matrix and a binary
//! file-by-file dependency matrix produce an integer coordination-
//! requirements matrix `CR = T_A * T_D * T_A^T` (diagonal zeroed); a binary
//! actual-coordination matrix `A` is thresholded from a communication
//! network; the congruence score is the proportion of coordination-needing
//! pairs that actually communicated, at team level and per member. Members
//! with no coordination needs get no score at all rather than zero.

use thiserror::Error;

use crate::graph::SocialNetwork;
use crate::model::{EventPayload, InteractionEvent, MemberId, TeamRoster};

#[derive(Debug, Error, PartialEq)]
pub enum CongruenceError {
    #[error("matrix dimensions disagree: {context}")]
    DimensionMismatch { context: String },
    #[error("network nodes do not match the roster")]
    RosterMismatch,
}

/// Which file pairs count as dependent when deriving coordination needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DependencyRule {
    /// Only same-file edits create needs (identity dependency matrix).
    SameFileOnly,
    /// Files co-occurring in at least one commit are dependent.
    #[default]
    CoCommit,
}

/// Binary member-by-file assignment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    pub members: Vec<MemberId>,
    pub files: Vec<String>,
    /// `data[i][k]`: member `i` touched file `k`.
    pub data: Vec<Vec<bool>>,
}

/// Binary, symmetric file-by-file dependency matrix with an all-ones
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyMatrix {
    pub files: Vec<String>,
    pub data: Vec<Vec<bool>>,
}

/// Integer coordination-requirements matrix, symmetric with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinationRequirements {
    pub members: Vec<MemberId>,
    pub data: Vec<Vec<u64>>,
}

/// Binary, symmetric actual-coordination matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ActualCoordination {
    pub members: Vec<MemberId>,
    pub data: Vec<Vec<bool>>,
}

/// A coordination-needing pair with no observed communication. Carries the
/// requirement magnitude so downstream diagnostics can rank pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmetPair {
    pub a: MemberId,
    pub b: MemberId,
    pub requirement: u64,
}

/// Team and per-member congruence scores. `None` means undefined (no
/// coordination needs), which is deliberately distinct from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceResult {
    pub team_score: Option<f64>,
    /// In matrix member order.
    pub member_scores: Vec<(MemberId, Option<f64>)>,
    /// Pairs with CR > 0 and A = 0, in row-major member order.
    pub unmet_pairs: Vec<UnmetPair>,
}

/// All distinct file paths in the commit events, sorted.
pub fn file_universe(events: &[InteractionEvent]) -> Vec<String> {
    let mut files: Vec<String> = events
        .iter()
        .filter_map(|e| match &e.payload {
            EventPayload::Commit { files } => Some(files.iter().map(|f| f.path.clone())),
            _ => None,
        })
        .flatten()
        .collect();
    files.sort();
    files.dedup();
    files
}

/// `T_A[i][k] = 1` iff member `i` touched file `k` in at least one commit.
pub fn assignment_matrix(
    events: &[InteractionEvent],
    roster: &TeamRoster,
    files: &[String],
) -> AssignmentMatrix {
    let m = roster.len();
    let mut data = vec![vec![false; files.len()]; m];
    for event in events {
        let EventPayload::Commit { files: changed } = &event.payload else {
            continue;
        };
        let Some(i) = roster.index_of(&event.actor) else {
            continue;
        };
        for change in changed {
            if let Ok(k) = files.binary_search(&change.path) {
                data[i][k] = true;
            }
        }
    }
    AssignmentMatrix {
        members: roster.members().to_vec(),
        files: files.to_vec(),
        data,
    }
}

/// Dependency matrix over the file universe. The diagonal is always 1 so
/// that two members editing the same file have a coordination need.
pub fn dependency_matrix(
    events: &[InteractionEvent],
    files: &[String],
    rule: DependencyRule,
) -> DependencyMatrix {
    let f = files.len();
    let mut data = vec![vec![false; f]; f];
    for (k, row) in data.iter_mut().enumerate() {
        row[k] = true;
    }
    if rule == DependencyRule::CoCommit {
        for event in events {
            let EventPayload::Commit { files: changed } = &event.payload else {
                continue;
            };
            let indices: Vec<usize> = changed
                .iter()
                .filter_map(|c| files.binary_search(&c.path).ok())
                .collect();
            for (i, &k) in indices.iter().enumerate() {
                for &l in &indices[i + 1..] {
                    data[k][l] = true;
                    data[l][k] = true;
                }
            }
        }
    }
    DependencyMatrix {
        files: files.to_vec(),
        data,
    }
}

/// `CR = T_A * T_D * T_A^T` with the diagonal zeroed.
pub fn coordination_requirements(
    assignment: &AssignmentMatrix,
    dependency: &DependencyMatrix,
) -> Result<CoordinationRequirements, CongruenceError> {
    let m = assignment.members.len();
    let f = assignment.files.len();
    if dependency.files != assignment.files || dependency.data.len() != f {
        return Err(CongruenceError::DimensionMismatch {
            context: format!(
                "assignment is {m}x{f} but dependency is over {} files",
                dependency.data.len()
            ),
        });
    }

    // U = T_A * T_D, then CR = U * T_A^T.
    let mut intermediate = vec![vec![0u64; f]; m];
    for (out_row, touched) in intermediate.iter_mut().zip(&assignment.data) {
        for (k, _) in touched.iter().enumerate().filter(|(_, &t)| t) {
            for (cell, &dep) in out_row.iter_mut().zip(&dependency.data[k]) {
                if dep {
                    *cell += 1;
                }
            }
        }
    }
    let mut data = vec![vec![0u64; m]; m];
    for (i, row) in data.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i == j {
                continue;
            }
            *cell = intermediate[i]
                .iter()
                .zip(&assignment.data[j])
                .filter_map(|(&count, &touched)| touched.then_some(count))
                .sum();
        }
    }
    Ok(CoordinationRequirements {
        members: assignment.members.clone(),
        data,
    })
}

/// Binary actual-coordination matrix: `A[i][j] = 1` iff the symmetrized
/// communication weight between `i` and `j` is at least `min_weight`.
pub fn actual_coordination(
    net: &SocialNetwork,
    roster: &TeamRoster,
    min_weight: f64,
) -> Result<ActualCoordination, CongruenceError> {
    if net.nodes() != roster.members() {
        return Err(CongruenceError::RosterMismatch);
    }
    let symmetric = net.symmetrized();
    let m = roster.len();
    let mut data = vec![vec![false; m]; m];
    for (a, b, w) in symmetric.edges() {
        if w >= min_weight {
            data[a][b] = true;
            data[b][a] = true;
        }
    }
    Ok(ActualCoordination {
        members: roster.members().to_vec(),
        data,
    })
}

/// Congruence scores from requirements and actuals.
///
/// Team score: met coordination-needing pairs over all coordination-needing
/// pairs. Member score: met partners over needed partners. Pairs and
/// members with no needs stay undefined.
pub fn congruence(
    requirements: &CoordinationRequirements,
    actual: &ActualCoordination,
) -> Result<CongruenceResult, CongruenceError> {
    let m = requirements.members.len();
    if actual.members != requirements.members {
        return Err(CongruenceError::DimensionMismatch {
            context: format!(
                "requirements over {m} members, actuals over {}",
                actual.members.len()
            ),
        });
    }

    let mut needed_pairs = 0u64;
    let mut met_pairs = 0u64;
    let mut unmet_pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if requirements.data[i][j] == 0 {
                continue;
            }
            needed_pairs += 1;
            if actual.data[i][j] {
                met_pairs += 1;
            } else {
                unmet_pairs.push(UnmetPair {
                    a: requirements.members[i].clone(),
                    b: requirements.members[j].clone(),
                    requirement: requirements.data[i][j],
                });
            }
        }
    }
    let team_score = if needed_pairs > 0 {
        Some(met_pairs as f64 / needed_pairs as f64)
    } else {
        None
    };

    let member_scores = (0..m)
        .map(|i| {
            let needed = (0..m)
                .filter(|&j| j != i && requirements.data[i][j] > 0)
                .count();
            let met = (0..m)
                .filter(|&j| j != i && requirements.data[i][j] > 0 && actual.data[i][j])
                .count();
            let score = if needed > 0 {
                Some(met as f64 / needed as f64)
            } else {
                None
            };
            (requirements.members[i].clone(), score)
        })
        .collect();

    Ok(CongruenceResult {
        team_score,
        member_scores,
        unmet_pairs,
    })
}

/// Ordinary least-squares slope of score on sprint index. `None` with
/// fewer than two points or zero index variance; exactly zero for a
/// constant score series.
pub fn congruence_trend(series: &[(i64, f64)]) -> Option<f64> {
    if series.len() < 2 {
        return None;
    }
    let first_x = series[0].0;
    if series.iter().all(|&(x, _)| x == first_x) {
        return None;
    }
    let first_y = series[0].1;
    if series.iter().all(|&(_, y)| y == first_y) {
        return Some(0.0);
    }

    let n = series.len() as f64;
    let mean_x = series.iter().map(|&(x, _)| x as f64).sum::<f64>() / n;
    let mean_y = series.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    for &(x, y) in series {
        let dx = x as f64 - mean_x;
        cov += dx * (y - mean_y);
        var_x += dx * dx;
    }
    Some(cov / var_x)
}
