//! Declarative analysis configuration: roster, sprint windows, author
//! aliases, network and congruence knobs, diagnostic thresholds.
//!
//! Precedence is flags > config file > defaults; [`Config::apply_overrides`]
//! layers flag values on top of a loaded file and re-validates. The
//! canonical effective form (see [`Config::effective_toml`]) feeds the
//! config fingerprint that reports carry, so threshold drift between runs
//! is detectable.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::congruence::DependencyRule;
use crate::diagnostics::{BrokerParams, FragmentationParams, RECOMMENDATION_POLICY};
use crate::graph::ChannelPolicy;
use crate::ingest::UNASSIGNED_LABEL;
use crate::model::{MemberId, ModelError, SprintWindow, TeamRoster};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("alias `{alias}` maps to `{member}`, which is not in the roster")]
    AliasTargetNotInRoster { alias: String, member: String },
    #[error("label `{label}` may only contain [A-Za-z0-9._-]")]
    BadLabel { label: String },
    #[error("sprint `{label}`: bad timestamp `{value}`: {reason}")]
    BadTimestamp {
        label: String,
        value: String,
        reason: String,
    },
    #[error("unknown {field} `{value}` (expected one of {expected})")]
    BadEnum {
        field: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("{field} = {value} outside {expected}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("unsupported recommendation policy `{policy}` (this build implements `v0`)")]
    UnsupportedPolicy { policy: String },
}

/// Coefficients for merging the per-source networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeWeights {
    pub messages: f64,
    pub cochange: f64,
    pub collaboration: f64,
}

impl Default for MergeWeights {
    fn default() -> Self {
        MergeWeights {
            messages: 1.0,
            cochange: 1.0,
            collaboration: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub roster: TeamRoster,
    pub sprints: Vec<SprintWindow>,
    pub aliases: BTreeMap<String, MemberId>,
    pub channel_policy: ChannelPolicy,
    pub merge_weights: MergeWeights,
    pub threshold_min_weight: f64,
    pub dependency_rule: DependencyRule,
    pub actual_min_weight: f64,
    pub broker: BrokerParams,
    pub fragmentation: FragmentationParams,
    pub recommendation_policy: String,
}

/// Flag-level overrides, applied on top of the loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub channel_policy: Option<ChannelPolicy>,
    pub threshold_min_weight: Option<f64>,
    pub dependency_rule: Option<DependencyRule>,
    pub actual_min_weight: Option<f64>,
}

// --- raw TOML shape ---------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    team: RawTeam,
    #[serde(default)]
    sprints: Vec<RawSprint>,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    congruence: RawCongruence,
    #[serde(default)]
    diagnostics: RawDiagnostics,
    #[serde(default)]
    recommendation: RawRecommendation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTeam {
    id: String,
    members: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSprint {
    label: String,
    start: String,
    end: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    channel_policy: Option<String>,
    threshold_min_weight: Option<f64>,
    merge_weights: Option<RawMergeWeights>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMergeWeights {
    messages: Option<f64>,
    cochange: Option<f64>,
    collaboration: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCongruence {
    dependency_rule: Option<String>,
    actual_min_weight: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    broker_ratio_threshold: Option<f64>,
    broker_floor: Option<f64>,
    zero_edge_threshold: Option<f64>,
    pair_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecommendation {
    policy: Option<String>,
}

fn check_label(label: &str) -> Result<(), ConfigError> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(ConfigError::BadLabel {
            label: label.to_string(),
        })
    }
}

fn parse_instant(label: &str, value: &str) -> Result<DateTime<Utc>, ConfigError> {
    DateTime::parse_from_rfc3339(value)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| ConfigError::BadTimestamp {
            label: label.to_string(),
            value: value.to_string(),
            reason: e.to_string(),
        })
}

fn check_range(
    field: &'static str,
    value: f64,
    min: f64,
    max: f64,
    expected: &'static str,
) -> Result<f64, ConfigError> {
    if value.is_finite() && value >= min && value <= max {
        Ok(value)
    } else {
        Err(ConfigError::OutOfRange {
            field,
            value,
            expected,
        })
    }
}

fn check_positive(field: &'static str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ConfigError::OutOfRange {
            field,
            value,
            expected: "(0, inf)",
        })
    }
}

fn check_non_negative(field: &'static str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ConfigError::OutOfRange {
            field,
            value,
            expected: "[0, inf)",
        })
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Config::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Config, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;

        check_label(&raw.team.id)?;
        let members = raw
            .team
            .members
            .into_iter()
            .map(MemberId::new)
            .collect::<Result<Vec<_>, _>>()?;
        let roster = TeamRoster::new(raw.team.id, members)?;

        let mut sprints = Vec::with_capacity(raw.sprints.len());
        for s in raw.sprints {
            check_label(&s.label)?;
            let start = parse_instant(&s.label, &s.start)?;
            let end = parse_instant(&s.label, &s.end)?;
            sprints.push(SprintWindow::new(s.label, start, end)?);
        }
        crate::model::validate_windows(&sprints, UNASSIGNED_LABEL)?;

        let mut aliases = BTreeMap::new();
        for (alias, target) in raw.aliases {
            let member = MemberId::new(target.clone())?;
            if !roster.contains(&member) {
                return Err(ConfigError::AliasTargetNotInRoster {
                    alias,
                    member: target,
                });
            }
            aliases.insert(alias, member);
        }

        let channel_policy = match raw.network.channel_policy.as_deref() {
            None | Some("ignore") => ChannelPolicy::Ignore,
            Some("clique") => ChannelPolicy::Clique,
            Some(other) => {
                return Err(ConfigError::BadEnum {
                    field: "network.channel_policy",
                    value: other.to_string(),
                    expected: "ignore, clique",
                })
            }
        };
        let raw_weights = raw.network.merge_weights.unwrap_or_default();
        let defaults = MergeWeights::default();
        let merge_weights = MergeWeights {
            messages: check_non_negative(
                "network.merge_weights.messages",
                raw_weights.messages.unwrap_or(defaults.messages),
            )?,
            cochange: check_non_negative(
                "network.merge_weights.cochange",
                raw_weights.cochange.unwrap_or(defaults.cochange),
            )?,
            collaboration: check_non_negative(
                "network.merge_weights.collaboration",
                raw_weights.collaboration.unwrap_or(defaults.collaboration),
            )?,
        };
        let threshold_min_weight = check_positive(
            "network.threshold_min_weight",
            raw.network.threshold_min_weight.unwrap_or(1.0),
        )?;

        let dependency_rule = match raw.congruence.dependency_rule.as_deref() {
            None | Some("co_commit") => DependencyRule::CoCommit,
            Some("same_file_only") => DependencyRule::SameFileOnly,
            Some(other) => {
                return Err(ConfigError::BadEnum {
                    field: "congruence.dependency_rule",
                    value: other.to_string(),
                    expected: "co_commit, same_file_only",
                })
            }
        };
        let actual_min_weight = check_positive(
            "congruence.actual_min_weight",
            raw.congruence.actual_min_weight.unwrap_or(1.0),
        )?;

        let broker_defaults = BrokerParams::default();
        let ratio = raw
            .diagnostics
            .broker_ratio_threshold
            .unwrap_or(broker_defaults.ratio_threshold);
        if !ratio.is_finite() || ratio <= 1.0 {
            return Err(ConfigError::OutOfRange {
                field: "diagnostics.broker_ratio_threshold",
                value: ratio,
                expected: "(1, inf)",
            });
        }
        let broker = BrokerParams {
            ratio_threshold: ratio,
            floor: check_range(
                "diagnostics.broker_floor",
                raw.diagnostics.broker_floor.unwrap_or(broker_defaults.floor),
                0.0,
                1.0,
                "[0, 1]",
            )?,
        };
        let frag_defaults = FragmentationParams::default();
        let fragmentation = FragmentationParams {
            zero_edge_threshold: check_range(
                "diagnostics.zero_edge_threshold",
                raw.diagnostics
                    .zero_edge_threshold
                    .unwrap_or(frag_defaults.zero_edge_threshold),
                0.0,
                1.0,
                "[0, 1]",
            )?,
            pair_threshold: check_range(
                "diagnostics.pair_threshold",
                raw.diagnostics
                    .pair_threshold
                    .unwrap_or(frag_defaults.pair_threshold),
                0.0,
                1.0,
                "[0, 1]",
            )?,
        };

        let recommendation_policy = raw
            .recommendation
            .policy
            .unwrap_or_else(|| RECOMMENDATION_POLICY.to_string());
        if recommendation_policy != RECOMMENDATION_POLICY {
            return Err(ConfigError::UnsupportedPolicy {
                policy: recommendation_policy,
            });
        }

        Ok(Config {
            roster,
            sprints,
            aliases,
            channel_policy,
            merge_weights,
            threshold_min_weight,
            dependency_rule,
            actual_min_weight,
            broker,
            fragmentation,
            recommendation_policy,
        })
    }

    /// Layer flag values over the loaded config and re-check ranges.
    pub fn apply_overrides(&mut self, overrides: &Overrides) -> Result<(), ConfigError> {
        if let Some(policy) = overrides.channel_policy {
            self.channel_policy = policy;
        }
        if let Some(w) = overrides.threshold_min_weight {
            self.threshold_min_weight = check_positive("network.threshold_min_weight", w)?;
        }
        if let Some(rule) = overrides.dependency_rule {
            self.dependency_rule = rule;
        }
        if let Some(w) = overrides.actual_min_weight {
            self.actual_min_weight = check_positive("congruence.actual_min_weight", w)?;
        }
        Ok(())
    }

    pub fn sprint(&self, label: &str) -> Option<&SprintWindow> {
        self.sprints.iter().find(|s| s.label == label)
    }

    /// Canonical TOML rendering of the effective configuration, every
    /// field populated.
    pub fn effective_toml(&self) -> String {
        #[derive(Serialize)]
        struct EffTeam<'a> {
            id: &'a str,
            members: Vec<&'a str>,
        }
        #[derive(Serialize)]
        struct EffSprint<'a> {
            label: &'a str,
            start: String,
            end: String,
        }
        #[derive(Serialize)]
        struct EffMergeWeights {
            messages: f64,
            cochange: f64,
            collaboration: f64,
        }
        #[derive(Serialize)]
        struct EffNetwork {
            channel_policy: &'static str,
            threshold_min_weight: f64,
            merge_weights: EffMergeWeights,
        }
        #[derive(Serialize)]
        struct EffCongruence {
            dependency_rule: &'static str,
            actual_min_weight: f64,
        }
        #[derive(Serialize)]
        struct EffDiagnostics {
            broker_ratio_threshold: f64,
            broker_floor: f64,
            zero_edge_threshold: f64,
            pair_threshold: f64,
        }
        #[derive(Serialize)]
        struct EffRecommendation<'a> {
            policy: &'a str,
        }
        #[derive(Serialize)]
        struct Effective<'a> {
            team: EffTeam<'a>,
            sprints: Vec<EffSprint<'a>>,
            aliases: &'a BTreeMap<String, MemberId>,
            network: EffNetwork,
            congruence: EffCongruence,
            diagnostics: EffDiagnostics,
            recommendation: EffRecommendation<'a>,
        }

        let effective = Effective {
            team: EffTeam {
                id: self.roster.team_id(),
                members: self.roster.members().iter().map(|m| m.as_str()).collect(),
            },
            sprints: self
                .sprints
                .iter()
                .map(|s| EffSprint {
                    label: &s.label,
                    start: s.start.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    end: s.end.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                })
                .collect(),
            aliases: &self.aliases,
            network: EffNetwork {
                channel_policy: match self.channel_policy {
                    ChannelPolicy::Ignore => "ignore",
                    ChannelPolicy::Clique => "clique",
                },
                threshold_min_weight: self.threshold_min_weight,
                merge_weights: EffMergeWeights {
                    messages: self.merge_weights.messages,
                    cochange: self.merge_weights.cochange,
                    collaboration: self.merge_weights.collaboration,
                },
            },
            congruence: EffCongruence {
                dependency_rule: match self.dependency_rule {
                    DependencyRule::CoCommit => "co_commit",
                    DependencyRule::SameFileOnly => "same_file_only",
                },
                actual_min_weight: self.actual_min_weight,
            },
            diagnostics: EffDiagnostics {
                broker_ratio_threshold: self.broker.ratio_threshold,
                broker_floor: self.broker.floor,
                zero_edge_threshold: self.fragmentation.zero_edge_threshold,
                pair_threshold: self.fragmentation.pair_threshold,
            },
            recommendation: EffRecommendation {
                policy: &self.recommendation_policy,
            },
        };
        toml::to_string(&effective).expect("effective config serializes")
    }

    /// Hex SHA-256 of the effective configuration.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.effective_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
