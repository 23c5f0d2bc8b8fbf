//! End-to-end per-team analysis: window events, build and merge networks,
//! compute metrics, congruence, diagnostics, and assemble reports.
//!
//! Sprint analyses are pure functions of (config, window events), so they
//! can run on several worker threads; results are collected by sprint
//! index, which keeps output bit-identical to the sequential path.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::config::Config;
use crate::congruence::{
    actual_coordination, assignment_matrix, congruence, congruence_trend,
    coordination_requirements, dependency_matrix, file_universe, CongruenceError,
};
use crate::diagnostics::{
    detect_brokers, detect_fragmentation, detect_unmet_coordination, pairing_coverage, recommend,
};
use crate::graph::{
    build_cochange_network, build_collaboration_network, build_message_network, merge_networks,
    threshold_binary, GraphError, SocialNetwork,
};
use crate::ingest::{window_events, UNASSIGNED_LABEL};
use crate::metrics::{
    betweenness_centrality, degree_centrality, density, transitivity, triad_census_directed,
    triad_census_undirected, MetricsError,
};
use crate::model::InteractionEvent;
use crate::report::{
    CensusTable, CentralityTables, NetworkSummary, SprintReport, SprintSummaryRow, TeamSummary,
    SCHEMA_VERSION,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Congruence(#[from] CongruenceError),
}

/// Network sources analyzed per sprint, in report key order.
pub const NETWORK_SOURCES: [&str; 4] = ["cochange", "collaboration", "merged", "messages"];

/// The per-source networks for one sprint window.
pub struct SprintNetworks {
    pub messages: SocialNetwork,
    pub cochange: SocialNetwork,
    pub collaboration: SocialNetwork,
    pub merged: SocialNetwork,
}

pub fn build_sprint_networks(
    config: &Config,
    events: &[InteractionEvent],
) -> Result<SprintNetworks, PipelineError> {
    let roster = &config.roster;
    let messages = build_message_network(events, roster, config.channel_policy)?;
    let cochange = build_cochange_network(events, roster)?;
    let collaboration = build_collaboration_network(events, roster)?;
    let merged = merge_networks(
        &[messages.clone(), cochange.clone(), collaboration.clone()],
        &[
            config.merge_weights.messages,
            config.merge_weights.cochange,
            config.merge_weights.collaboration,
        ],
    )?;
    Ok(SprintNetworks {
        messages,
        cochange,
        collaboration,
        merged,
    })
}

/// Analyze one sprint window into a report.
pub fn analyze_sprint(
    config: &Config,
    label: &str,
    events: &[InteractionEvent],
) -> Result<SprintReport, PipelineError> {
    let roster = &config.roster;
    let n = roster.len();
    let nets = build_sprint_networks(config, events)?;

    let mut network_summaries = std::collections::BTreeMap::new();
    for (name, net) in [
        ("messages", &nets.messages),
        ("cochange", &nets.cochange),
        ("collaboration", &nets.collaboration),
        ("merged", &nets.merged),
    ] {
        network_summaries.insert(
            name.to_string(),
            NetworkSummary {
                node_count: net.node_count(),
                edge_count: net.edge_count(),
                density: density(net)?,
            },
        );
    }

    let topology = threshold_binary(&nets.merged, config.threshold_min_weight);
    let message_topology = threshold_binary(&nets.messages, config.threshold_min_weight);

    let degree = degree_centrality(&topology, true)?;
    // Normalized betweenness and triad censuses need three nodes; a
    // two-member roster simply has no brokers or triads to report.
    let betweenness = if n >= 3 {
        Some(betweenness_centrality(&topology, true)?)
    } else {
        None
    };
    let census_undirected = if n >= 3 {
        Some(triad_census_undirected(&topology)?)
    } else {
        None
    };
    let census_directed = if n >= 3 {
        Some(triad_census_directed(&message_topology)?)
    } else {
        None
    };
    let transitivity_score = match &census_undirected {
        Some(census) => transitivity(census)?,
        None => None,
    };

    let files = file_universe(events);
    let t_a = assignment_matrix(events, roster, &files);
    let t_d = dependency_matrix(events, &files, config.dependency_rule);
    let requirements = coordination_requirements(&t_a, &t_d)?;
    let actual = actual_coordination(&nets.messages, roster, config.actual_min_weight)?;
    let congruence_result = congruence(&requirements, &actual)?;

    let mut diagnostics = Vec::new();
    if let Some(scores) = &betweenness {
        diagnostics.extend(detect_brokers(scores, &config.broker));
    }
    if let Some(census) = &census_undirected {
        diagnostics.extend(detect_fragmentation(census, &config.fragmentation));
    }
    diagnostics.extend(detect_unmet_coordination(&congruence_result));
    diagnostics.extend(pairing_coverage(events, roster));
    let recommendations = recommend(&diagnostics, roster);

    Ok(SprintReport {
        document: "sprint_report".to_string(),
        schema_version: SCHEMA_VERSION,
        team_id: roster.team_id().to_string(),
        sprint_label: label.to_string(),
        event_count: events.len(),
        network_summaries,
        centrality: CentralityTables {
            degree: (&degree).into(),
            betweenness: betweenness.as_ref().map(|b| b.into()),
        },
        census_undirected: census_undirected.as_ref().map(CensusTable::from),
        census_directed: census_directed.as_ref().map(CensusTable::from),
        transitivity: transitivity_score,
        congruence: (&congruence_result).into(),
        diagnostics: diagnostics.iter().map(Into::into).collect(),
        recommendations: recommendations.iter().map(Into::into).collect(),
        tool_version: TOOL_VERSION.to_string(),
        config_fingerprint: config.fingerprint(),
    })
}

/// Full team analysis output.
#[derive(Debug)]
pub struct AnalysisOutput {
    /// One report per configured sprint, in config order.
    pub sprint_reports: Vec<SprintReport>,
    pub team_summary: TeamSummary,
}

/// Analyze every configured sprint, on `jobs` worker threads when asked.
pub fn analyze_events(
    events: Vec<InteractionEvent>,
    config: &Config,
    jobs: usize,
) -> Result<AnalysisOutput, PipelineError> {
    let mut buckets = window_events(events, &config.sprints);
    let unassigned_events = buckets
        .get(UNASSIGNED_LABEL)
        .map(|b| b.len())
        .unwrap_or(0);

    let work: Vec<(String, Vec<InteractionEvent>)> = config
        .sprints
        .iter()
        .map(|sprint| {
            let events = buckets.remove(&sprint.label).unwrap_or_default();
            (sprint.label.clone(), events)
        })
        .collect();

    let results = run_indexed(jobs, &work, |(label, sprint_events)| {
        analyze_sprint(config, label, sprint_events)
    });
    let mut sprint_reports = Vec::with_capacity(results.len());
    for result in results {
        sprint_reports.push(result?);
    }

    let trend_series: Vec<(i64, f64)> = sprint_reports
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.congruence.team_score.map(|s| (i as i64, s)))
        .collect();
    let congruence_trend = congruence_trend(&trend_series);

    let sprints = sprint_reports
        .iter()
        .map(|r| SprintSummaryRow {
            sprint_label: r.sprint_label.clone(),
            event_count: r.event_count,
            congruence_team_score: r.congruence.team_score,
            transitivity: r.transitivity,
            diagnostic_count: r.diagnostics.len(),
            recommendation_count: r.recommendations.len(),
        })
        .collect();

    let team_summary = TeamSummary {
        document: "team_summary".to_string(),
        schema_version: SCHEMA_VERSION,
        team_id: config.roster.team_id().to_string(),
        sprints,
        congruence_trend,
        unassigned_events,
        tool_version: TOOL_VERSION.to_string(),
        config_fingerprint: config.fingerprint(),
    };

    Ok(AnalysisOutput {
        sprint_reports,
        team_summary,
    })
}

/// Map `f` over `items`, preserving order. With `jobs > 1` the items are
/// claimed from a shared counter by scoped worker threads; results land in
/// their original slots, so the output is identical either way.
fn run_indexed<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = jobs.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(f).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let result = f(&items[i]);
                *slots[i].lock().expect("worker never panics holding lock") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("no poisoned slots")
                .expect("every slot filled")
        })
        .collect()
}
