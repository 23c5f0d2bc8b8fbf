//! Anti-pattern detection over computed metrics, and the v0 rule table
//! that turns findings into concrete intervention recommendations.
//!
//! All detectors are deterministic: identical inputs produce identical
//! diagnostic and recommendation lists, ordering included. Severities are
//! normalized to [0, 1] so reports can rank across kinds.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::congruence::CongruenceResult;
use crate::metrics::{CentralityMetric, CentralityScores, TriadCensus};
use crate::model::{EventPayload, InteractionEvent, MemberId, TeamRoster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    CommunicationBroker,
    FragmentedTeam,
    PairDominated,
    UnmetCoordination,
    PairingGap,
}

impl DiagnosticKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagnosticKind::CommunicationBroker => "communication_broker",
            DiagnosticKind::FragmentedTeam => "fragmented_team",
            DiagnosticKind::PairDominated => "pair_dominated",
            DiagnosticKind::UnmetCoordination => "unmet_coordination",
            DiagnosticKind::PairingGap => "pairing_gap",
        }
    }
}

/// Who a diagnostic or recommendation is about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subjects {
    Members(Vec<MemberId>),
    Pairs(Vec<(MemberId, MemberId)>),
    WholeTeam,
}

/// A detected anti-pattern with the metric values that triggered it.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub subjects: Subjects,
    pub severity: f64,
    pub evidence: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommendedAction {
    CoordinateDirectly,
    RotatePairProgramming,
    RebalanceTasks,
    ShareKnowledgeSession,
}

/// A concrete suggested action, linked back to its triggering diagnostic
/// through the rationale.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub action: RecommendedAction,
    pub subjects: Subjects,
    pub rationale: String,
}

/// Broker detection thresholds. A member is flagged when their normalized
/// betweenness is at least `floor` and at least `ratio_threshold` times the
/// team mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokerParams {
    pub ratio_threshold: f64,
    pub floor: f64,
}

impl Default for BrokerParams {
    fn default() -> Self {
        BrokerParams {
            ratio_threshold: 2.0,
            floor: 0.2,
        }
    }
}

/// Census-proportion thresholds for fragmentation / pair-dominance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragmentationParams {
    pub zero_edge_threshold: f64,
    pub pair_threshold: f64,
}

impl Default for FragmentationParams {
    fn default() -> Self {
        FragmentationParams {
            zero_edge_threshold: 0.5,
            pair_threshold: 0.6,
        }
    }
}

/// Flag members whose normalized betweenness marks them as communication
/// brokers. Expects normalized betweenness scores. Evidence keys: `score`,
/// `team_mean`.
///
/// A zero team mean (edgeless topology) flags nobody; with no shortest
/// paths there is nothing to broker, and the fragmentation detector covers
/// that situation.
pub fn detect_brokers(scores: &CentralityScores, params: &BrokerParams) -> Vec<Diagnostic> {
    debug_assert!(scores.metric == CentralityMetric::Betweenness && scores.normalized);
    let mean = scores.mean();
    if mean == 0.0 {
        return Vec::new();
    }
    let mut diagnostics = Vec::new();
    for (member, score) in scores.iter() {
        if score >= params.floor && score >= params.ratio_threshold * mean {
            let mut evidence = BTreeMap::new();
            evidence.insert("score".to_string(), score);
            evidence.insert("team_mean".to_string(), mean);
            diagnostics.push(Diagnostic {
                kind: DiagnosticKind::CommunicationBroker,
                subjects: Subjects::Members(vec![member.clone()]),
                severity: score.min(1.0),
                evidence,
            });
        }
    }
    diagnostics
}

/// Flag a team whose undirected census shows fragmentation (many empty
/// triads) or pair-dominance (mostly one- and two-edge triads with almost
/// no closed ones). Evidence keys: `t0_prop` through `t3_prop`.
pub fn detect_fragmentation(
    census: &TriadCensus,
    params: &FragmentationParams,
) -> Vec<Diagnostic> {
    let TriadCensus::Undirected(counts) = census else {
        return Vec::new();
    };
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Vec::new();
    }
    let prop = |c: u64| c as f64 / total as f64;
    let (t0, t1, t2, t3) = (prop(counts[0]), prop(counts[1]), prop(counts[2]), prop(counts[3]));

    let evidence: BTreeMap<String, f64> = [
        ("t0_prop".to_string(), t0),
        ("t1_prop".to_string(), t1),
        ("t2_prop".to_string(), t2),
        ("t3_prop".to_string(), t3),
    ]
    .into();

    let mut diagnostics = Vec::new();
    if t0 >= params.zero_edge_threshold {
        diagnostics.push(Diagnostic {
            kind: DiagnosticKind::FragmentedTeam,
            subjects: Subjects::WholeTeam,
            severity: t0,
            evidence: evidence.clone(),
        });
    }
    if t1 + t2 >= params.pair_threshold && t3 < 0.1 {
        diagnostics.push(Diagnostic {
            kind: DiagnosticKind::PairDominated,
            subjects: Subjects::WholeTeam,
            severity: t1 + t2,
            evidence,
        });
    }
    diagnostics
}

/// One diagnostic per coordination-needing pair with no communication,
/// ranked by requirement magnitude relative to the heaviest unmet pair.
/// Evidence keys: `requirement`, `max_requirement`.
pub fn detect_unmet_coordination(result: &CongruenceResult) -> Vec<Diagnostic> {
    let max_requirement = result
        .unmet_pairs
        .iter()
        .map(|p| p.requirement)
        .max()
        .unwrap_or(0);
    if max_requirement == 0 {
        return Vec::new();
    }
    result
        .unmet_pairs
        .iter()
        .map(|pair| {
            let evidence: BTreeMap<String, f64> = [
                ("requirement".to_string(), pair.requirement as f64),
                ("max_requirement".to_string(), max_requirement as f64),
            ]
            .into();
            Diagnostic {
                kind: DiagnosticKind::UnmetCoordination,
                subjects: Subjects::Pairs(vec![(pair.a.clone(), pair.b.clone())]),
                severity: pair.requirement as f64 / max_requirement as f64,
                evidence,
            }
        })
        .collect()
}

/// Roster pairs that never collaborated in the window: no shared task and
/// no shared file. Emits one diagnostic listing all gap pairs, or nothing
/// when every pair collaborated. Evidence keys: `gap_count`, `pair_count`.
pub fn pairing_coverage(events: &[InteractionEvent], roster: &TeamRoster) -> Vec<Diagnostic> {
    let n = roster.len();
    let mut covered = vec![vec![false; n]; n];

    // Shared tasks: same grouping as the collaboration network.
    let mut tasked: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut items: Vec<Vec<usize>> = Vec::new();
    // Shared files: member -> touched paths.
    let mut touched: Vec<Vec<&str>> = vec![Vec::new(); n];

    for event in events {
        let Some(actor) = roster.index_of(&event.actor) else {
            continue;
        };
        match &event.payload {
            EventPayload::Commit { files } => {
                for f in files {
                    touched[actor].push(f.path.as_str());
                }
            }
            EventPayload::WorkLog {
                task_id,
                co_workers,
            } => {
                let mut members = vec![actor];
                members.extend(co_workers.iter().filter_map(|m| roster.index_of(m)));
                match task_id {
                    Some(id) => tasked.entry(id.as_str()).or_default().extend(members),
                    None => items.push(members),
                }
            }
            EventPayload::TaskAssign { task_id } => match task_id {
                Some(id) => tasked.entry(id.as_str()).or_default().push(actor),
                None => items.push(vec![actor]),
            },
            EventPayload::Message { .. } => {}
        }
    }

    items.extend(tasked.into_values());
    for group in items {
        for (i, &a) in group.iter().enumerate() {
            for &b in &group[i + 1..] {
                covered[a][b] = true;
                covered[b][a] = true;
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if touched[a].iter().any(|p| touched[b].contains(p)) {
                covered[a][b] = true;
                covered[b][a] = true;
            }
        }
    }

    let gaps: Vec<(MemberId, MemberId)> = roster
        .pairs()
        .filter(|&(a, b)| !covered[a][b])
        .map(|(a, b)| (roster.members()[a].clone(), roster.members()[b].clone()))
        .collect();
    if gaps.is_empty() {
        return Vec::new();
    }

    let pair_count = (n * (n - 1) / 2) as f64;
    let evidence: BTreeMap<String, f64> = [
        ("gap_count".to_string(), gaps.len() as f64),
        ("pair_count".to_string(), pair_count),
    ]
    .into();
    vec![Diagnostic {
        kind: DiagnosticKind::PairingGap,
        subjects: Subjects::Pairs(gaps.clone()),
        severity: gaps.len() as f64 / pair_count,
        evidence,
    }]
}

/// Version tag of the recommendation rule table below.
pub const RECOMMENDATION_POLICY: &str = "v0";

/// Map diagnostics to recommendations with the v0 rule table:
///
/// - unmet coordination -> coordinate directly (that pair)
/// - pairing gap -> rotate pair programming for the three gap pairs whose
///   members are least covered, roster order breaking ties
/// - communication broker -> rebalance the broker's tasks, plus coordinate
///   directly for up to three unmet pairs so traffic bypasses the broker
/// - fragmentation / pair-dominance -> whole-team knowledge-sharing session
///
/// Output is sorted by descending source severity, then roster order;
/// duplicate (action, subjects) entries keep their highest-severity source.
pub fn recommend(diagnostics: &[Diagnostic], roster: &TeamRoster) -> Vec<Recommendation> {
    let member_rank = |m: &MemberId| roster.index_of(m).unwrap_or(usize::MAX);
    let pair_rank = |p: &(MemberId, MemberId)| {
        let (x, y) = (member_rank(&p.0), member_rank(&p.1));
        (x.min(y), x.max(y))
    };
    let subjects_rank = |s: &Subjects| -> (usize, usize) {
        match s {
            Subjects::WholeTeam => (0, 0),
            Subjects::Members(ms) => (
                ms.iter().map(&member_rank).min().unwrap_or(usize::MAX),
                usize::MAX,
            ),
            Subjects::Pairs(ps) => ps
                .iter()
                .map(&pair_rank)
                .min()
                .unwrap_or((usize::MAX, usize::MAX)),
        }
    };

    let unmet_pairs: Vec<(&Diagnostic, &(MemberId, MemberId))> = diagnostics
        .iter()
        .filter(|d| d.kind == DiagnosticKind::UnmetCoordination)
        .filter_map(|d| match &d.subjects {
            Subjects::Pairs(ps) => ps.first().map(|p| (d, p)),
            _ => None,
        })
        .collect();

    // (severity, subject rank, recommendation) for final ordering.
    let mut staged: Vec<(f64, (usize, usize), Recommendation)> = Vec::new();

    for diagnostic in diagnostics {
        match diagnostic.kind {
            DiagnosticKind::UnmetCoordination => {
                let Subjects::Pairs(pairs) = &diagnostic.subjects else {
                    continue;
                };
                for pair in pairs {
                    staged.push((
                        diagnostic.severity,
                        pair_rank(pair),
                        Recommendation {
                            action: RecommendedAction::CoordinateDirectly,
                            subjects: Subjects::Pairs(vec![pair.clone()]),
                            rationale: format!(
                                "unmet_coordination: {} and {} share a coordination need but did not communicate",
                                pair.0, pair.1
                            ),
                        },
                    ));
                }
            }
            DiagnosticKind::PairingGap => {
                let Subjects::Pairs(gaps) = &diagnostic.subjects else {
                    continue;
                };
                // Under-coverage per member: how many gaps they appear in.
                let mut uncovered = vec![0usize; roster.len()];
                for (a, b) in gaps {
                    if let Some(i) = roster.index_of(a) {
                        uncovered[i] += 1;
                    }
                    if let Some(j) = roster.index_of(b) {
                        uncovered[j] += 1;
                    }
                }
                let mut ranked: Vec<&(MemberId, MemberId)> = gaps.iter().collect();
                ranked.sort_by(|p, q| {
                    let score = |p: &(MemberId, MemberId)| {
                        roster.index_of(&p.0).map_or(0, |i| uncovered[i])
                            + roster.index_of(&p.1).map_or(0, |i| uncovered[i])
                    };
                    score(q)
                        .cmp(&score(p))
                        .then_with(|| pair_rank(p).cmp(&pair_rank(q)))
                });
                for pair in ranked.into_iter().take(3) {
                    staged.push((
                        diagnostic.severity,
                        pair_rank(pair),
                        Recommendation {
                            action: RecommendedAction::RotatePairProgramming,
                            subjects: Subjects::Pairs(vec![pair.clone()]),
                            rationale: format!(
                                "pairing_gap: {} and {} never worked on a shared task or file",
                                pair.0, pair.1
                            ),
                        },
                    ));
                }
            }
            DiagnosticKind::CommunicationBroker => {
                let Subjects::Members(members) = &diagnostic.subjects else {
                    continue;
                };
                let Some(broker) = members.first() else {
                    continue;
                };
                staged.push((
                    diagnostic.severity,
                    subjects_rank(&diagnostic.subjects),
                    Recommendation {
                        action: RecommendedAction::RebalanceTasks,
                        subjects: Subjects::Members(vec![broker.clone()]),
                        rationale: format!(
                            "communication_broker: {broker} mediates a disproportionate share of shortest paths"
                        ),
                    },
                ));
                // Route up to three unmet pairs around the broker.
                let mut bypass: Vec<&(&Diagnostic, &(MemberId, MemberId))> =
                    unmet_pairs.iter().collect();
                bypass.sort_by(|x, y| {
                    y.0.severity
                        .partial_cmp(&x.0.severity)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then_with(|| pair_rank(x.1).cmp(&pair_rank(y.1)))
                });
                for (_, pair) in bypass.into_iter().take(3) {
                    staged.push((
                        diagnostic.severity,
                        pair_rank(pair),
                        Recommendation {
                            action: RecommendedAction::CoordinateDirectly,
                            subjects: Subjects::Pairs(vec![(*pair).clone()]),
                            rationale: format!(
                                "communication_broker: direct contact between {} and {} reduces load on {broker}",
                                pair.0, pair.1
                            ),
                        },
                    ));
                }
            }
            DiagnosticKind::FragmentedTeam | DiagnosticKind::PairDominated => {
                staged.push((
                    diagnostic.severity,
                    (0, 0),
                    Recommendation {
                        action: RecommendedAction::ShareKnowledgeSession,
                        subjects: Subjects::WholeTeam,
                        rationale: format!(
                            "{}: triad profile shows the team rarely communicates beyond isolated members or pairs",
                            diagnostic.kind.as_str()
                        ),
                    },
                ));
            }
        }
    }

    staged.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.1.cmp(&y.1))
    });

    // Deduplicate by (action, subjects); the first (highest-severity) wins.
    let mut out: Vec<Recommendation> = Vec::new();
    for (_, _, rec) in staged {
        if !out
            .iter()
            .any(|r| r.action == rec.action && r.subjects == rec.subjects)
        {
            out.push(rec);
        }
    }
    out
}
