//! Core domain types: team members, rosters, interaction events, sprint
//! windows, and outcome records.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("member id must be non-empty")]
    EmptyMemberId,
    #[error("team `{team_id}` has duplicate member `{member}`")]
    DuplicateMember { team_id: String, member: String },
    #[error("team `{team_id}` has {got} members; expected between 2 and 64")]
    RosterSize { team_id: String, got: usize },
    #[error("actor in recipients")]
    ActorInRecipients,
    #[error("commit event requires a non-empty file list")]
    EmptyCommitFiles,
    #[error("message event needs recipients or a channel")]
    MessageWithoutTarget,
    #[error("sprint window `{label}` has start >= end")]
    WindowOrder { label: String },
    #[error("sprint windows `{first}` and `{second}` overlap or are out of order")]
    WindowOverlap { first: String, second: String },
    #[error("duplicate sprint label `{label}`")]
    DuplicateWindowLabel { label: String },
    #[error("sprint label `{label}` is reserved")]
    ReservedWindowLabel { label: String },
    #[error("communication score {got} outside Likert bounds [1,5]")]
    LikertBounds { got: f64 },
}

/// Opaque, case-sensitive member identifier. Always non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MemberId(String);

impl MemberId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyMemberId);
        }
        Ok(MemberId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for MemberId {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        MemberId::new(value)
    }
}

impl From<MemberId> for String {
    fn from(value: MemberId) -> Self {
        value.0
    }
}

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered team roster. Member order is the canonical ordering used for
/// network nodes, matrices, and report tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamRoster {
    team_id: String,
    members: Vec<MemberId>,
}

impl TeamRoster {
    /// Rosters hold 2..=64 unique members.
    pub fn new(team_id: impl Into<String>, members: Vec<MemberId>) -> Result<Self, ModelError> {
        let team_id = team_id.into();
        if members.len() < 2 || members.len() > 64 {
            return Err(ModelError::RosterSize {
                team_id,
                got: members.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for m in &members {
            if !seen.insert(m.clone()) {
                return Err(ModelError::DuplicateMember {
                    team_id,
                    member: m.to_string(),
                });
            }
        }
        Ok(TeamRoster { team_id, members })
    }

    pub fn team_id(&self) -> &str {
        &self.team_id
    }

    pub fn members(&self) -> &[MemberId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Position of a member in roster order.
    pub fn index_of(&self, member: &MemberId) -> Option<usize> {
        self.members.iter().position(|m| m == member)
    }

    pub fn contains(&self, member: &MemberId) -> bool {
        self.index_of(member).is_some()
    }

    /// Unordered member pairs (i, j) with i < j, in roster order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.members.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Message,
    Commit,
    WorkLog,
    TaskAssign,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Message => "message",
            EventKind::Commit => "commit",
            EventKind::WorkLog => "worklog",
            EventKind::TaskAssign => "task_assign",
        }
    }
}

/// One file touched by a commit, with line counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub added: u64,
    pub deleted: u64,
}

/// Kind-specific payload of an interaction event.
#[derive(Debug, Clone, PartialEq)]
pub enum EventPayload {
    Message {
        recipients: BTreeSet<MemberId>,
        channel: Option<String>,
    },
    Commit {
        files: Vec<FileChange>,
    },
    WorkLog {
        task_id: Option<String>,
        co_workers: BTreeSet<MemberId>,
    },
    TaskAssign {
        task_id: Option<String>,
    },
}

/// One normalized trace record. Timestamps are always UTC.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionEvent {
    pub timestamp: DateTime<Utc>,
    pub actor: MemberId,
    pub payload: EventPayload,
}

impl InteractionEvent {
    pub fn kind(&self) -> EventKind {
        match self.payload {
            EventPayload::Message { .. } => EventKind::Message,
            EventPayload::Commit { .. } => EventKind::Commit,
            EventPayload::WorkLog { .. } => EventKind::WorkLog,
            EventPayload::TaskAssign { .. } => EventKind::TaskAssign,
        }
    }

    /// Checks the cross-field invariants that the constructors cannot
    /// enforce structurally.
    pub fn validate(&self) -> Result<(), ModelError> {
        match &self.payload {
            EventPayload::Message {
                recipients,
                channel,
            } => {
                if recipients.contains(&self.actor) {
                    return Err(ModelError::ActorInRecipients);
                }
                if recipients.is_empty() && channel.is_none() {
                    return Err(ModelError::MessageWithoutTarget);
                }
            }
            EventPayload::Commit { files } => {
                if files.is_empty() {
                    return Err(ModelError::EmptyCommitFiles);
                }
            }
            EventPayload::WorkLog { .. } | EventPayload::TaskAssign { .. } => {}
        }
        Ok(())
    }
}

/// Half-open sprint window: `start <= t < end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SprintWindow {
    pub label: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl SprintWindow {
    pub fn new(
        label: impl Into<String>,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Self, ModelError> {
        let label = label.into();
        if start >= end {
            return Err(ModelError::WindowOrder { label });
        }
        Ok(SprintWindow { label, start, end })
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

/// Windows within one config must be sorted, non-overlapping, and uniquely
/// labeled; the unassigned bucket label is reserved.
pub fn validate_windows(windows: &[SprintWindow], reserved: &str) -> Result<(), ModelError> {
    let mut labels = BTreeSet::new();
    for w in windows {
        if w.label == reserved {
            return Err(ModelError::ReservedWindowLabel {
                label: w.label.clone(),
            });
        }
        if !labels.insert(w.label.clone()) {
            return Err(ModelError::DuplicateWindowLabel {
                label: w.label.clone(),
            });
        }
    }
    for pair in windows.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(ModelError::WindowOverlap {
                first: pair[0].label.clone(),
                second: pair[1].label.clone(),
            });
        }
    }
    Ok(())
}

/// Per-sprint outcome measures reported for a team.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub team_id: String,
    pub sprint_label: String,
    pub stories_passed: u64,
    pub story_points_passed: u64,
    /// Likert rating in [1, 5].
    pub communication_score: f64,
}

impl OutcomeRecord {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(1.0..=5.0).contains(&self.communication_score) {
            return Err(ModelError::LikertBounds {
                got: self.communication_score,
            });
        }
        Ok(())
    }
}
