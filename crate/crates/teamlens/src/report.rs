//! Canonical report serialization and graph export.
//!
//! Reports are JSON documents with sorted object keys, floats rendered to
//! 12 significant digits, and lists kept in the deterministic order their
//! producing operations define. Equal in-memory reports serialize to equal
//! bytes; undefined values are omitted rather than written as 0 or null.
//!
//! Graph export uses dot notation, nodes in roster order and edge weights
//! as attributes.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::Value;

use crate::congruence::CongruenceResult;
use crate::diagnostics::{Diagnostic, Recommendation, Subjects};
use crate::graph::SocialNetwork;
use crate::metrics::{CentralityScores, TriadCensus};

pub const SCHEMA_VERSION: u64 = 1;

/// Round to 12 significant digits via decimal round-trip. Canonical float
/// rendering starts here; `-0.0` normalizes to `0.0`.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    debug_assert!(x.is_finite(), "reports never contain non-finite numbers");
    format!("{x:.11e}").parse().expect("decimal round-trip")
}

/// Deterministic number rendering for text outputs (dot, tables).
pub fn format_number(x: f64) -> String {
    format!("{}", round_sig12(x))
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let rounded = round_sig12(n.as_f64().expect("checked f64"));
                *n = serde_json::Number::from_f64(rounded).expect("finite after rounding");
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Canonical serialization: sorted keys, rounded floats, trailing newline.
pub fn emit_canonical<T: Serialize>(value: &T) -> String {
    let mut tree = serde_json::to_value(value).expect("reports are serializable");
    round_floats(&mut tree);
    let mut text = serde_json::to_string_pretty(&tree).expect("valid json tree");
    text.push('\n');
    text
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityRow {
    pub member: String,
    pub score: f64,
}

impl From<&CentralityScores> for Vec<CentralityRow> {
    fn from(scores: &CentralityScores) -> Self {
        scores
            .iter()
            .map(|(member, score)| CentralityRow {
                member: member.to_string(),
                score,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusTable {
    pub counts: BTreeMap<String, u64>,
    pub proportions: BTreeMap<String, f64>,
    pub total: u64,
}

impl From<&TriadCensus> for CensusTable {
    fn from(census: &TriadCensus) -> Self {
        let labels = census.labels();
        let counts = labels
            .iter()
            .zip(census.counts())
            .map(|(l, &c)| (l.to_string(), c))
            .collect();
        let proportions = labels
            .iter()
            .zip(census.proportions())
            .map(|(l, p)| (l.to_string(), p))
            .collect();
        CensusTable {
            counts,
            proportions,
            total: census.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberScoreRow {
    pub member: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnmetPairRow {
    pub a: String,
    pub b: String,
    pub requirement: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CongruenceTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub team_score: Option<f64>,
    pub member_scores: Vec<MemberScoreRow>,
    pub unmet_pairs: Vec<UnmetPairRow>,
}

impl From<&CongruenceResult> for CongruenceTable {
    fn from(result: &CongruenceResult) -> Self {
        CongruenceTable {
            team_score: result.team_score,
            member_scores: result
                .member_scores
                .iter()
                .map(|(member, score)| MemberScoreRow {
                    member: member.to_string(),
                    score: *score,
                })
                .collect(),
            unmet_pairs: result
                .unmet_pairs
                .iter()
                .map(|p| UnmetPairRow {
                    a: p.a.to_string(),
                    b: p.b.to_string(),
                    requirement: p.requirement,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubjectsRow {
    Members { members: Vec<String> },
    Pairs { pairs: Vec<(String, String)> },
    WholeTeam,
}

impl From<&Subjects> for SubjectsRow {
    fn from(subjects: &Subjects) -> Self {
        match subjects {
            Subjects::Members(ms) => SubjectsRow::Members {
                members: ms.iter().map(|m| m.to_string()).collect(),
            },
            Subjects::Pairs(ps) => SubjectsRow::Pairs {
                pairs: ps
                    .iter()
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .collect(),
            },
            Subjects::WholeTeam => SubjectsRow::WholeTeam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub kind: String,
    pub subjects: SubjectsRow,
    pub severity: f64,
    pub evidence: BTreeMap<String, f64>,
}

impl From<&Diagnostic> for DiagnosticRow {
    fn from(d: &Diagnostic) -> Self {
        DiagnosticRow {
            kind: d.kind.as_str().to_string(),
            subjects: (&d.subjects).into(),
            severity: d.severity,
            evidence: d.evidence.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationRow {
    pub action: String,
    pub subjects: SubjectsRow,
    pub rationale: String,
}

impl From<&Recommendation> for RecommendationRow {
    fn from(r: &Recommendation) -> Self {
        let action = match r.action {
            crate::diagnostics::RecommendedAction::CoordinateDirectly => "coordinate_directly",
            crate::diagnostics::RecommendedAction::RotatePairProgramming => {
                "rotate_pair_programming"
            }
            crate::diagnostics::RecommendedAction::RebalanceTasks => "rebalance_tasks",
            crate::diagnostics::RecommendedAction::ShareKnowledgeSession => {
                "share_knowledge_session"
            }
        };
        RecommendationRow {
            action: action.to_string(),
            subjects: (&r.subjects).into(),
            rationale: r.rationale.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityTables {
    pub degree: Vec<CentralityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betweenness: Option<Vec<CentralityRow>>,
}

/// One sprint's full analysis, ready for canonical serialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprintReport {
    pub document: String,
    pub schema_version: u64,
    pub team_id: String,
    pub sprint_label: String,
    pub event_count: usize,
    pub network_summaries: BTreeMap<String, NetworkSummary>,
    pub centrality: CentralityTables,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census_undirected: Option<CensusTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census_directed: Option<CensusTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transitivity: Option<f64>,
    pub congruence: CongruenceTable,
    pub diagnostics: Vec<DiagnosticRow>,
    pub recommendations: Vec<RecommendationRow>,
    pub tool_version: String,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprintSummaryRow {
    pub sprint_label: String,
    pub event_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub congruence_team_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transitivity: Option<f64>,
    pub diagnostic_count: usize,
    pub recommendation_count: usize,
}

/// Cross-sprint rollup for one team, including the congruence trend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamSummary {
    pub document: String,
    pub schema_version: u64,
    pub team_id: String,
    pub sprints: Vec<SprintSummaryRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub congruence_trend: Option<f64>,
    pub unassigned_events: usize,
    pub tool_version: String,
    pub config_fingerprint: String,
}

/// Canonical report document.
pub fn emit_report(report: &SprintReport) -> String {
    emit_canonical(report)
}

pub fn write_report<W: io::Write>(report: &SprintReport, sink: &mut W) -> io::Result<()> {
    sink.write_all(emit_report(report).as_bytes())
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Dot-notation graph text: `graph`/`digraph` per directedness, nodes in
/// roster order, then edges with weight attributes.
pub fn export_graph(net: &SocialNetwork) -> String {
    let (keyword, arrow) = if net.is_directed() {
        ("digraph", "->")
    } else {
        ("graph", "--")
    };
    let mut out = format!("{keyword} team {{\n");
    for node in net.nodes() {
        out.push_str(&format!("  {};\n", dot_quote(node.as_str())));
    }
    for (a, b, w) in net.edges() {
        out.push_str(&format!(
            "  {} {} {} [weight={}];\n",
            dot_quote(net.nodes()[a].as_str()),
            arrow,
            dot_quote(net.nodes()[b].as_str()),
            format_number(w),
        ));
    }
    out.push_str("}\n");
    out
}

pub fn write_graph<W: io::Write>(net: &SocialNetwork, sink: &mut W) -> io::Result<()> {
    sink.write_all(export_graph(net).as_bytes())
}

fn centrality_stat(document: &Value, table: &str, stat: &str) -> Option<f64> {
    let rows = document.get("centrality")?.get(table)?.as_array()?;
    let scores: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.get("score")?.as_f64())
        .collect();
    if scores.is_empty() {
        return None;
    }
    match stat {
        "max" => scores.iter().copied().reduce(f64::max),
        "mean" => Some(scores.iter().sum::<f64>() / scores.len() as f64),
        _ => None,
    }
}

/// Pull a numeric metric out of a sprint-report document.
///
/// Supports the computed names `betweenness.max`, `betweenness.mean`,
/// `degree.max`, `degree.mean`, `diagnostics.count`, and
/// `recommendations.count`; any other name is read as a dotted path into
/// the document (for example `transitivity`, `congruence.team_score`, or
/// `census_undirected.proportions.T0`). Undefined metrics return `None`.
pub fn extract_metric(document: &Value, name: &str) -> Option<f64> {
    match name {
        "betweenness.max" | "betweenness.mean" | "degree.max" | "degree.mean" => {
            let (table, stat) = name.split_once('.').expect("checked shape");
            centrality_stat(document, table, stat)
        }
        "diagnostics.count" | "recommendations.count" => {
            let (field, _) = name.split_once('.').expect("checked shape");
            Some(document.get(field)?.as_array()?.len() as f64)
        }
        path => {
            let pointer = format!("/{}", path.replace('.', "/"));
            document.pointer(&pointer)?.as_f64()
        }
    }
}
