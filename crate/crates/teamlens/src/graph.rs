//! Weighted social networks over a team roster, and the builders that
//! derive them from interaction events.
//!
//! Networks always carry the full roster as their node set, isolates
//! included, so that metrics and matrices line up across sources. Edges
//! with weight zero are simply absent, and self-loops cannot be
//! represented.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{EventPayload, InteractionEvent, MemberId, TeamRoster};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("member `{member}` is not in the roster")]
    UnknownMember { member: String },
    #[error("got {nets} networks but {weights} weights")]
    WeightCountMismatch { nets: usize, weights: usize },
    #[error("negative merge weight {weight}")]
    NegativeWeight { weight: f64 },
    #[error("cannot merge zero networks")]
    NothingToMerge,
    #[error("node sets differ: {difference}")]
    NodeSetMismatch { difference: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directedness {
    Directed,
    Undirected,
}

/// How channel messages with no explicit recipients enter the message
/// network. `Ignore` drops them; `Clique` spreads weight `1/(n-1)` from the
/// sender to every other roster member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelPolicy {
    #[default]
    Ignore,
    Clique,
}

/// Weighted graph over the roster. Node indices are roster positions;
/// undirected edge keys are stored as (min, max).
#[derive(Debug, Clone, PartialEq)]
pub struct SocialNetwork {
    directedness: Directedness,
    nodes: Vec<MemberId>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl SocialNetwork {
    pub fn new(directedness: Directedness, roster: &TeamRoster) -> Self {
        SocialNetwork {
            directedness,
            nodes: roster.members().to_vec(),
            edges: BTreeMap::new(),
        }
    }

    pub fn directedness(&self) -> Directedness {
        self.directedness
    }

    pub fn is_directed(&self) -> bool {
        self.directedness == Directedness::Directed
    }

    pub fn nodes(&self) -> &[MemberId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, member: &MemberId) -> Option<usize> {
        self.nodes.iter().position(|m| m == member)
    }

    fn key(&self, a: usize, b: usize) -> (usize, usize) {
        match self.directedness {
            Directedness::Directed => (a, b),
            Directedness::Undirected => (a.min(b), a.max(b)),
        }
    }

    /// Add weight to an edge. Self-pairs are dropped; zero stays absent.
    pub fn add_weight(&mut self, a: usize, b: usize, w: f64) {
        assert!(a < self.nodes.len() && b < self.nodes.len(), "node index out of range");
        debug_assert!(w >= 0.0, "edge weights are non-negative");
        if a == b || w == 0.0 {
            return;
        }
        *self.edges.entry(self.key(a, b)).or_insert(0.0) += w;
    }

    /// Weight of the edge (a, b), or 0 when absent.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        self.edges.get(&self.key(a, b)).copied().unwrap_or(0.0)
    }

    /// Edges in deterministic key order. For undirected networks each
    /// unordered pair appears once, as (min, max).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Undirected view: arc weights (u,v) and (v,u) are summed.
    pub fn symmetrized(&self) -> SocialNetwork {
        match self.directedness {
            Directedness::Undirected => self.clone(),
            Directedness::Directed => {
                let mut out = SocialNetwork {
                    directedness: Directedness::Undirected,
                    nodes: self.nodes.clone(),
                    edges: BTreeMap::new(),
                };
                for (a, b, w) in self.edges() {
                    out.add_weight(a, b, w);
                }
                out
            }
        }
    }

    fn same_nodes(&self, other: &SocialNetwork) -> bool {
        self.nodes == other.nodes
    }
}

fn roster_index(roster: &TeamRoster, member: &MemberId) -> Result<usize, GraphError> {
    roster
        .index_of(member)
        .ok_or_else(|| GraphError::UnknownMember {
            member: member.to_string(),
        })
}

/// Directed message network: arc (a -> b) weight counts messages from `a`
/// naming `b` as a recipient, plus the channel contribution under
/// [`ChannelPolicy::Clique`]. Non-message events are ignored.
pub fn build_message_network(
    events: &[InteractionEvent],
    roster: &TeamRoster,
    channel_policy: ChannelPolicy,
) -> Result<SocialNetwork, GraphError> {
    let mut net = SocialNetwork::new(Directedness::Directed, roster);
    let n = roster.len();
    for event in events {
        let EventPayload::Message {
            recipients,
            channel,
        } = &event.payload
        else {
            continue;
        };
        let actor = roster_index(roster, &event.actor)?;
        if recipients.is_empty() {
            if channel.is_some() && channel_policy == ChannelPolicy::Clique {
                let share = 1.0 / (n as f64 - 1.0);
                for other in 0..n {
                    net.add_weight(actor, other, share);
                }
            }
            continue;
        }
        for recipient in recipients {
            let r = roster_index(roster, recipient)?;
            net.add_weight(actor, r, 1.0);
        }
    }
    Ok(net)
}

/// Undirected co-change network: edge weight (a, b) is the number of
/// distinct file paths both members touched across the commit events.
pub fn build_cochange_network(
    events: &[InteractionEvent],
    roster: &TeamRoster,
) -> Result<SocialNetwork, GraphError> {
    let mut touched: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); roster.len()];
    for event in events {
        let EventPayload::Commit { files } = &event.payload else {
            continue;
        };
        let actor = roster_index(roster, &event.actor)?;
        for file in files {
            touched[actor].insert(file.path.as_str());
        }
    }

    let mut net = SocialNetwork::new(Directedness::Undirected, roster);
    for (a, b) in roster.pairs() {
        let shared = touched[a].intersection(&touched[b]).count();
        net.add_weight(a, b, shared as f64);
    }
    Ok(net)
}

/// Undirected collaboration network from work logs and task assignments:
/// for each work item, every unordered pair of members on it gains weight 1.
/// Members on an item are the actors and co-workers of its events, grouped
/// by `task_id`; an event without a task id forms its own work item.
pub fn build_collaboration_network(
    events: &[InteractionEvent],
    roster: &TeamRoster,
) -> Result<SocialNetwork, GraphError> {
    let mut tasked: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    let mut solo_items: Vec<BTreeSet<usize>> = Vec::new();

    for event in events {
        let (task_id, co_workers): (&Option<String>, Option<&BTreeSet<MemberId>>) =
            match &event.payload {
                EventPayload::WorkLog {
                    task_id,
                    co_workers,
                } => (task_id, Some(co_workers)),
                EventPayload::TaskAssign { task_id } => (task_id, None),
                _ => continue,
            };
        let mut members = BTreeSet::new();
        members.insert(roster_index(roster, &event.actor)?);
        if let Some(co_workers) = co_workers {
            for member in co_workers {
                members.insert(roster_index(roster, member)?);
            }
        }
        match task_id {
            Some(id) => {
                tasked.entry(id.as_str()).or_default().extend(members);
            }
            None => solo_items.push(members),
        }
    }

    let mut net = SocialNetwork::new(Directedness::Undirected, roster);
    for members in tasked.values().chain(solo_items.iter()) {
        let members: Vec<usize> = members.iter().copied().collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                net.add_weight(a, b, 1.0);
            }
        }
    }
    Ok(net)
}

/// Weighted sum of networks into one undirected network. Directed inputs
/// are symmetrized first (both arc weights summed). All inputs must share
/// the node set; coefficients must be non-negative.
pub fn merge_networks(
    nets: &[SocialNetwork],
    weights: &[f64],
) -> Result<SocialNetwork, GraphError> {
    if nets.is_empty() {
        return Err(GraphError::NothingToMerge);
    }
    if nets.len() != weights.len() {
        return Err(GraphError::WeightCountMismatch {
            nets: nets.len(),
            weights: weights.len(),
        });
    }
    for &w in weights {
        if w < 0.0 {
            return Err(GraphError::NegativeWeight { weight: w });
        }
    }
    for net in &nets[1..] {
        if !nets[0].same_nodes(net) {
            let first: BTreeSet<&MemberId> = nets[0].nodes().iter().collect();
            let other: BTreeSet<&MemberId> = net.nodes().iter().collect();
            let missing: Vec<String> = first.difference(&other).map(|m| m.to_string()).collect();
            let extra: Vec<String> = other.difference(&first).map(|m| m.to_string()).collect();
            return Err(GraphError::NodeSetMismatch {
                difference: format!("missing [{}], extra [{}]", missing.join(", "), extra.join(", ")),
            });
        }
    }

    let mut merged = SocialNetwork {
        directedness: Directedness::Undirected,
        nodes: nets[0].nodes().to_vec(),
        edges: BTreeMap::new(),
    };
    for (net, &coefficient) in nets.iter().zip(weights) {
        if coefficient == 0.0 {
            continue;
        }
        for (a, b, w) in net.symmetrized().edges() {
            merged.add_weight(a, b, coefficient * w);
        }
    }
    Ok(merged)
}

/// Binary topology: edges with weight >= `min_weight` kept at weight 1,
/// everything else dropped. Directedness and nodes are preserved.
pub fn threshold_binary(net: &SocialNetwork, min_weight: f64) -> SocialNetwork {
    assert!(min_weight > 0.0, "threshold must be positive");
    let mut out = SocialNetwork {
        directedness: net.directedness,
        nodes: net.nodes().to_vec(),
        edges: BTreeMap::new(),
    };
    for (a, b, w) in net.edges() {
        if w >= min_weight {
            out.add_weight(a, b, 1.0);
        }
    }
    out
}
