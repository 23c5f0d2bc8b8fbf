//! Trace ingestion: event-line streams, commit-log numstat text, outcome
//! CSVs, and sprint windowing.
//!
//! The event-line format is one JSON object per line:
//!
//! ```text
//! {"kind":"message","ts":"2025-03-01T10:00:00Z","actor":"alice","recipients":["bob"]}
//! ```
//!
//! Required fields are `kind` (`message` | `commit` | `worklog` |
//! `task_assign`), `ts` (ISO-8601 with zone), and `actor`. Kind-specific
//! fields: `recipients` and `channel` (message), `files` (commit),
//! `task_id` (worklog / task_assign), `co_workers` (worklog). A field on
//! the wrong kind is rejected, as is any unknown field.
//!
//! Strict parsers abort on the first bad line; the `_lenient` variants skip
//! bad lines (or bad commit blocks) and report what was skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    EventPayload, FileChange, InteractionEvent, MemberId, OutcomeRecord, SprintWindow,
};

/// Bucket label for events that fall outside every sprint window.
pub const UNASSIGNED_LABEL: &str = "__unassigned__";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("line {line}: unmapped author alias `{author}`")]
    UnmappedAuthor { line: usize, author: String },
    #[error("truncated commit block starting at line {start_line}: {reason}")]
    TruncatedBlock { start_line: usize, reason: String },
    #[error("outcomes record {record}: {reason}")]
    BadOutcome { record: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Raw event-line object. Field order here fixes the serialization order.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventLine {
    kind: String,
    ts: String,
    actor: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    recipients: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    files: Option<Vec<FileChange>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    task_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    co_workers: Option<Vec<String>>,
}

fn bad(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::BadLine {
        line,
        reason: reason.into(),
    }
}

fn parse_timestamp(line: usize, raw: &str) -> Result<DateTime<Utc>, IngestError> {
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| bad(line, format!("bad timestamp `{raw}`: {e}")))
}

fn parse_member(line: usize, field: &str, raw: &str) -> Result<MemberId, IngestError> {
    MemberId::new(raw).map_err(|_| bad(line, format!("{field} must be a non-empty string")))
}

fn parse_member_set(
    line: usize,
    field: &str,
    raw: Option<Vec<String>>,
) -> Result<BTreeSet<MemberId>, IngestError> {
    raw.unwrap_or_default()
        .into_iter()
        .map(|s| parse_member(line, field, &s))
        .collect()
}

fn reject_foreign(
    line: usize,
    kind: &str,
    fields: &[(&str, bool)],
) -> Result<(), IngestError> {
    for (name, present) in fields {
        if *present {
            return Err(bad(
                line,
                format!("field `{name}` not allowed for kind `{kind}`"),
            ));
        }
    }
    Ok(())
}

fn event_from_line(line_no: usize, text: &str) -> Result<InteractionEvent, IngestError> {
    let raw: EventLine = serde_json::from_str(text).map_err(|e| bad(line_no, e.to_string()))?;
    let timestamp = parse_timestamp(line_no, &raw.ts)?;
    let actor = parse_member(line_no, "actor", &raw.actor)?;

    let payload = match raw.kind.as_str() {
        "message" => {
            reject_foreign(
                line_no,
                "message",
                &[
                    ("files", raw.files.is_some()),
                    ("task_id", raw.task_id.is_some()),
                    ("co_workers", raw.co_workers.is_some()),
                ],
            )?;
            EventPayload::Message {
                recipients: parse_member_set(line_no, "recipients", raw.recipients)?,
                channel: raw.channel,
            }
        }
        "commit" => {
            reject_foreign(
                line_no,
                "commit",
                &[
                    ("recipients", raw.recipients.is_some()),
                    ("channel", raw.channel.is_some()),
                    ("task_id", raw.task_id.is_some()),
                    ("co_workers", raw.co_workers.is_some()),
                ],
            )?;
            EventPayload::Commit {
                files: raw.files.unwrap_or_default(),
            }
        }
        "worklog" => {
            reject_foreign(
                line_no,
                "worklog",
                &[
                    ("recipients", raw.recipients.is_some()),
                    ("channel", raw.channel.is_some()),
                    ("files", raw.files.is_some()),
                ],
            )?;
            EventPayload::WorkLog {
                task_id: raw.task_id,
                co_workers: parse_member_set(line_no, "co_workers", raw.co_workers)?,
            }
        }
        "task_assign" => {
            reject_foreign(
                line_no,
                "task_assign",
                &[
                    ("recipients", raw.recipients.is_some()),
                    ("channel", raw.channel.is_some()),
                    ("files", raw.files.is_some()),
                    ("co_workers", raw.co_workers.is_some()),
                ],
            )?;
            EventPayload::TaskAssign {
                task_id: raw.task_id,
            }
        }
        other => return Err(bad(line_no, format!("unknown event kind `{other}`"))),
    };

    let event = InteractionEvent {
        timestamp,
        actor,
        payload,
    };
    event.validate().map_err(|e| bad(line_no, e.to_string()))?;
    Ok(event)
}

/// Parse an event-line stream, aborting on the first malformed line.
///
/// Events come back in input order. Blank lines are skipped.
pub fn parse_events<R: BufRead>(reader: R) -> Result<Vec<InteractionEvent>, IngestError> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(event_from_line(idx + 1, &line)?);
    }
    Ok(events)
}

/// Outcome of a lenient parse: the good events plus what was skipped.
#[derive(Debug)]
pub struct LenientParse {
    pub events: Vec<InteractionEvent>,
    /// (line number, reason) per skipped line or block.
    pub skipped: Vec<(usize, String)>,
}

/// Like [`parse_events`] but skips malformed lines instead of aborting.
/// I/O errors still abort.
pub fn parse_events_lenient<R: BufRead>(reader: R) -> Result<LenientParse, IngestError> {
    let mut events = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match event_from_line(idx + 1, &line) {
            Ok(ev) => events.push(ev),
            Err(e) => skipped.push((idx + 1, e.to_string())),
        }
    }
    Ok(LenientParse { events, skipped })
}

/// Serialize one event back to its event-line form.
pub fn serialize_event(event: &InteractionEvent) -> String {
    let ts = event
        .timestamp
        .to_rfc3339_opts(SecondsFormat::AutoSi, true);
    let raw = match &event.payload {
        EventPayload::Message {
            recipients,
            channel,
        } => EventLine {
            kind: "message".into(),
            ts,
            actor: event.actor.to_string(),
            recipients: Some(recipients.iter().map(|m| m.to_string()).collect()),
            channel: channel.clone(),
            files: None,
            task_id: None,
            co_workers: None,
        },
        EventPayload::Commit { files } => EventLine {
            kind: "commit".into(),
            ts,
            actor: event.actor.to_string(),
            recipients: None,
            channel: None,
            files: Some(files.clone()),
            task_id: None,
            co_workers: None,
        },
        EventPayload::WorkLog {
            task_id,
            co_workers,
        } => EventLine {
            kind: "worklog".into(),
            ts,
            actor: event.actor.to_string(),
            recipients: None,
            channel: None,
            files: None,
            task_id: task_id.clone(),
            co_workers: Some(co_workers.iter().map(|m| m.to_string()).collect()),
        },
        EventPayload::TaskAssign { task_id } => EventLine {
            kind: "task_assign".into(),
            ts,
            actor: event.actor.to_string(),
            recipients: None,
            channel: None,
            files: None,
            task_id: task_id.clone(),
            co_workers: None,
        },
    };
    serde_json::to_string(&raw).expect("event lines are always serializable")
}

// ---------------------------------------------------------------------------
// Commit-log (numstat) parsing
// ---------------------------------------------------------------------------

/// Commit-log block layout:
///
/// ```text
/// commit <hash>
/// author <string>
/// date <ISO-8601>
///
/// <added>\t<deleted>\t<path>
/// ...
/// ```
///
/// `added` / `deleted` are decimal integers or `-` (binary files, parsed as
/// 0/0). Blocks with no file lines (e.g. merge commits) yield no event since
/// commit events must carry at least one file.
pub fn parse_commit_log<R: BufRead>(
    reader: R,
    author_map: &BTreeMap<String, MemberId>,
) -> Result<Vec<InteractionEvent>, IngestError> {
    let lines = read_lines(reader)?;
    let mut events = Vec::new();
    let mut cursor = 0;
    while let Some(block) = next_block(&lines, &mut cursor)? {
        if let Some(event) = block.into_event(author_map)? {
            events.push(event);
        }
    }
    Ok(events)
}

/// Lenient commit-log parse: a bad block is skipped as a whole (scanning
/// resumes at the next `commit` line) and recorded with its start line.
pub fn parse_commit_log_lenient<R: BufRead>(
    reader: R,
    author_map: &BTreeMap<String, MemberId>,
) -> Result<LenientParse, IngestError> {
    let lines = read_lines(reader)?;
    let mut events = Vec::new();
    let mut skipped = Vec::new();

    let record_junk = |range: std::ops::Range<usize>, skipped: &mut Vec<(usize, String)>| {
        if let Some(j) = lines[range.clone()]
            .iter()
            .position(|l| !l.trim().is_empty())
        {
            let line = range.start + j + 1;
            skipped.push((line, bad(line, "expected `commit <hash>`").to_string()));
        }
    };

    let mut start = resync(&lines, 0);
    record_junk(0..start, &mut skipped);

    while start < lines.len() {
        let next_start = resync(&lines, start + 1);
        let mut cursor = start;
        match next_block(&lines, &mut cursor) {
            Ok(Some(block)) => {
                let start_line = block.start_line;
                match block.into_event(author_map) {
                    Ok(Some(event)) => events.push(event),
                    Ok(None) => {}
                    Err(e) => skipped.push((start_line, e.to_string())),
                }
                // Anything non-blank left between this block and the next
                // boundary would be a strict-mode error.
                record_junk(cursor.min(next_start)..next_start, &mut skipped);
            }
            Ok(None) => {}
            Err(e) => {
                let line = match &e {
                    IngestError::BadLine { line, .. } => *line,
                    IngestError::TruncatedBlock { start_line, .. } => *start_line,
                    _ => return Err(e),
                };
                skipped.push((line, e.to_string()));
            }
        }
        start = next_start;
    }
    Ok(LenientParse { events, skipped })
}

fn read_lines<R: BufRead>(reader: R) -> Result<Vec<String>, IngestError> {
    reader
        .lines()
        .collect::<Result<Vec<_>, _>>()
        .map_err(IngestError::Io)
}

/// Advance to the next `commit ` line at or after `from`.
fn resync(lines: &[String], from: usize) -> usize {
    let mut i = from;
    while i < lines.len() && !lines[i].starts_with("commit ") {
        i += 1;
    }
    i
}

struct CommitBlock {
    start_line: usize,
    author: String,
    author_line: usize,
    timestamp: DateTime<Utc>,
    files: Vec<FileChange>,
}

impl CommitBlock {
    fn into_event(
        self,
        author_map: &BTreeMap<String, MemberId>,
    ) -> Result<Option<InteractionEvent>, IngestError> {
        let actor = author_map
            .get(&self.author)
            .cloned()
            .ok_or(IngestError::UnmappedAuthor {
                line: self.author_line,
                author: self.author,
            })?;
        if self.files.is_empty() {
            return Ok(None);
        }
        Ok(Some(InteractionEvent {
            timestamp: self.timestamp,
            actor,
            payload: EventPayload::Commit { files: self.files },
        }))
    }
}

/// Parse one block starting at `*cursor` (0-based index into `lines`),
/// leaving `*cursor` on the line after the block. Returns `None` at EOF.
fn next_block(lines: &[String], cursor: &mut usize) -> Result<Option<CommitBlock>, IngestError> {
    // Skip blank separator lines between blocks.
    while *cursor < lines.len() && lines[*cursor].trim().is_empty() {
        *cursor += 1;
    }
    if *cursor >= lines.len() {
        return Ok(None);
    }

    let start_line = *cursor + 1;
    let truncated = |reason: &str| IngestError::TruncatedBlock {
        start_line,
        reason: reason.into(),
    };

    let hash = lines[*cursor]
        .strip_prefix("commit ")
        .ok_or_else(|| bad(*cursor + 1, "expected `commit <hash>`"))?;
    if hash.trim().is_empty() {
        return Err(bad(*cursor + 1, "expected `commit <hash>`"));
    }
    *cursor += 1;

    let author = lines
        .get(*cursor)
        .ok_or_else(|| truncated("missing `author` line"))?
        .strip_prefix("author ")
        .ok_or_else(|| truncated("missing `author` line"))?
        .to_string();
    let author_line = *cursor + 1;
    *cursor += 1;

    let date_raw = lines
        .get(*cursor)
        .ok_or_else(|| truncated("missing `date` line"))?
        .strip_prefix("date ")
        .ok_or_else(|| truncated("missing `date` line"))?;
    let timestamp = DateTime::parse_from_rfc3339(date_raw.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| truncated(&format!("bad date `{}`: {e}", date_raw.trim())))?;
    *cursor += 1;

    match lines.get(*cursor) {
        Some(l) if l.trim().is_empty() => {
            *cursor += 1;
        }
        _ => return Err(truncated("missing blank line after header")),
    }

    let mut files = Vec::new();
    while *cursor < lines.len() {
        let line = &lines[*cursor];
        if line.trim().is_empty() || line.starts_with("commit ") {
            break;
        }
        files.push(parse_numstat_line(*cursor + 1, line)?);
        *cursor += 1;
    }

    Ok(Some(CommitBlock {
        start_line,
        author,
        author_line,
        timestamp,
        files,
    }))
}

fn parse_numstat_line(line_no: usize, line: &str) -> Result<FileChange, IngestError> {
    let mut parts = line.splitn(3, '\t');
    let added = parts.next().unwrap_or("");
    let deleted = parts
        .next()
        .ok_or_else(|| bad(line_no, "expected `<added>\\t<deleted>\\t<path>`"))?;
    let path = parts
        .next()
        .ok_or_else(|| bad(line_no, "expected `<added>\\t<deleted>\\t<path>`"))?;
    if path.is_empty() {
        return Err(bad(line_no, "empty file path in numstat line"));
    }
    Ok(FileChange {
        path: path.to_string(),
        added: parse_count(line_no, added)?,
        deleted: parse_count(line_no, deleted)?,
    })
}

/// `-` marks a binary file; it counts as zero lines.
fn parse_count(line_no: usize, raw: &str) -> Result<u64, IngestError> {
    if raw == "-" {
        return Ok(0);
    }
    raw.parse::<u64>()
        .map_err(|_| bad(line_no, format!("bad line count `{raw}`")))
}

// ---------------------------------------------------------------------------
// Sprint windowing
// ---------------------------------------------------------------------------

/// Partition events into sprint buckets. An event lands in window `w` iff
/// `w.start <= t < w.end`; everything else goes under [`UNASSIGNED_LABEL`].
/// Every window gets a bucket, empty or not, and within-bucket order follows
/// input order.
pub fn window_events(
    events: Vec<InteractionEvent>,
    windows: &[SprintWindow],
) -> BTreeMap<String, Vec<InteractionEvent>> {
    let mut buckets: BTreeMap<String, Vec<InteractionEvent>> = BTreeMap::new();
    for w in windows {
        buckets.insert(w.label.clone(), Vec::new());
    }
    buckets.insert(UNASSIGNED_LABEL.to_string(), Vec::new());

    for event in events {
        let label = windows
            .iter()
            .find(|w| w.contains(event.timestamp))
            .map(|w| w.label.as_str())
            .unwrap_or(UNASSIGNED_LABEL);
        buckets
            .get_mut(label)
            .expect("bucket pre-created for every label")
            .push(event);
    }
    buckets
}

// ---------------------------------------------------------------------------
// Outcomes CSV
// ---------------------------------------------------------------------------

const OUTCOME_HEADERS: [&str; 5] = [
    "team_id",
    "sprint_label",
    "stories_passed",
    "story_points_passed",
    "communication_score",
];

#[derive(Debug, Deserialize)]
struct OutcomeRow {
    team_id: String,
    sprint_label: String,
    stories_passed: u64,
    story_points_passed: u64,
    communication_score: f64,
}

/// Read the outcomes CSV (`team_id,sprint_label,stories_passed,
/// story_points_passed,communication_score`, header required).
pub fn read_outcomes<R: std::io::Read>(reader: R) -> Result<Vec<OutcomeRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::BadOutcome {
            record: 0,
            reason: e.to_string(),
        })?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != OUTCOME_HEADERS {
        return Err(IngestError::BadOutcome {
            record: 0,
            reason: format!(
                "expected header `{}`, got `{}`",
                OUTCOME_HEADERS.join(","),
                got.join(",")
            ),
        });
    }

    let mut records = Vec::new();
    for (idx, row) in rdr.deserialize::<OutcomeRow>().enumerate() {
        let record_no = idx + 1;
        let row = row.map_err(|e| IngestError::BadOutcome {
            record: record_no,
            reason: e.to_string(),
        })?;
        let record = OutcomeRecord {
            team_id: row.team_id,
            sprint_label: row.sprint_label,
            stories_passed: row.stories_passed,
            story_points_passed: row.story_points_passed,
            communication_score: row.communication_score,
        };
        record.validate().map_err(|e| IngestError::BadOutcome {
            record: record_no,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
