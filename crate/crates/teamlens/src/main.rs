//! `teamlens` — sprint-windowed social network analysis for software team
//! interaction traces.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use teamlens::config::{Config, Overrides};
use teamlens::congruence::DependencyRule;
use teamlens::graph::{threshold_binary, ChannelPolicy};
use teamlens::ingest::{
    parse_commit_log, parse_commit_log_lenient, parse_events, parse_events_lenient, read_outcomes,
    window_events,
};
use teamlens::metrics::{triad_census_directed, triad_census_undirected, TriadCensus};
use teamlens::model::InteractionEvent;
use teamlens::pipeline::{analyze_events, build_sprint_networks};
use teamlens::report::{emit_canonical, emit_report, export_graph, extract_metric, format_number};
use teamlens::stats::{pearson, spearman, PairedSeries};

#[derive(Parser)]
#[command(
    name = "teamlens",
    version,
    about = "Turn team interaction traces into per-sprint social network reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command that reads traces through a config.
#[derive(Args)]
struct InputArgs {
    /// Event-line trace file (one JSON object per line).
    #[arg(long)]
    events: PathBuf,

    /// Commit-log (numstat) file, merged into the event stream via the
    /// config's author alias map.
    #[arg(long)]
    commit_log: Option<PathBuf>,

    /// Analysis config (TOML). Falls back to $TEAMLENS_CONFIG.
    #[arg(long, env = "TEAMLENS_CONFIG")]
    config: PathBuf,

    /// Skip malformed lines (and commit blocks) instead of aborting;
    /// skipped counts go to stderr.
    #[arg(long)]
    skip_bad_lines: bool,

    /// Override the config's channel-message policy.
    #[arg(long, value_parser = ["ignore", "clique"])]
    channel_policy: Option<String>,

    /// Override the binary-topology weight threshold.
    #[arg(long)]
    min_weight: Option<f64>,

    /// Override the file-dependency rule.
    #[arg(long, value_parser = ["co_commit", "same_file_only"])]
    dependency_rule: Option<String>,

    /// Override the actual-coordination weight threshold.
    #[arg(long)]
    actual_min_weight: Option<f64>,

    /// Print the effective config (flags > config > defaults) and exit.
    #[arg(long)]
    print_effective_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: one report per sprint plus a team summary.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory for report documents.
        #[arg(long)]
        out: PathBuf,
        /// Analyze sprints on this many worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print the triad census for one sprint.
    Census {
        #[command(flatten)]
        input: InputArgs,
        /// Sprint label from the config.
        #[arg(long)]
        sprint: String,
        /// Use the 16-class directed census of the message network instead
        /// of the 4-class undirected census of the merged network.
        #[arg(long)]
        directed: bool,
        /// Human-readable table instead of tab-separated output.
        #[arg(long)]
        pretty: bool,
    },
    /// Print the congruence table for one sprint.
    Congruence {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        sprint: String,
        #[arg(long)]
        pretty: bool,
    },
    /// Correlate a report metric with an outcome across team-sprints.
    Correlate {
        /// Directory holding analyze output (scanned recursively).
        #[arg(long)]
        reports: PathBuf,
        /// Outcomes CSV.
        #[arg(long)]
        outcomes: PathBuf,
        /// Metric name, e.g. transitivity, congruence.team_score,
        /// census_undirected.proportions.T0, betweenness.max.
        #[arg(long)]
        metric: String,
        /// Outcome column: stories_passed, story_points_passed, or
        /// communication_score.
        #[arg(long)]
        outcome: String,
        /// Correlation method.
        #[arg(long, default_value = "spearman", value_parser = ["spearman", "pearson"])]
        method: String,
        #[arg(long)]
        pretty: bool,
    },
    /// Print one sprint network in dot notation.
    ExportDot {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        sprint: String,
        /// Which network to export.
        #[arg(long, default_value = "merged", value_parser = ["messages", "cochange", "collaboration", "merged"])]
        source: String,
    },
}

/// Die quietly on a closed pipe (`teamlens ... | head`) like other
/// line-oriented tools instead of panicking mid-print.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("teamlens: error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze { input, out, jobs } => cmd_analyze(&input, &out, jobs),
        Command::Census {
            input,
            sprint,
            directed,
            pretty,
        } => cmd_census(&input, &sprint, directed, pretty),
        Command::Congruence {
            input,
            sprint,
            pretty,
        } => cmd_congruence(&input, &sprint, pretty),
        Command::Correlate {
            reports,
            outcomes,
            metric,
            outcome,
            method,
            pretty,
        } => cmd_correlate(&reports, &outcomes, &metric, &outcome, &method, pretty),
        Command::ExportDot {
            input,
            sprint,
            source,
        } => cmd_export_dot(&input, &sprint, &source),
    }
}

fn overrides_from(input: &InputArgs) -> Overrides {
    Overrides {
        channel_policy: input.channel_policy.as_deref().map(|p| match p {
            "clique" => ChannelPolicy::Clique,
            _ => ChannelPolicy::Ignore,
        }),
        threshold_min_weight: input.min_weight,
        dependency_rule: input.dependency_rule.as_deref().map(|r| match r {
            "same_file_only" => DependencyRule::SameFileOnly,
            _ => DependencyRule::CoCommit,
        }),
        actual_min_weight: input.actual_min_weight,
    }
}

/// Load config + events per the shared flags. Returns `None` when
/// `--print-effective-config` already did all the work.
fn load_inputs(input: &InputArgs) -> Result<Option<(Config, Vec<InteractionEvent>)>> {
    let mut config = Config::load(&input.config)
        .with_context(|| format!("loading config {}", input.config.display()))?;
    config.apply_overrides(&overrides_from(input))?;

    if input.print_effective_config {
        print!("{}", config.effective_toml());
        return Ok(None);
    }

    let events_file = fs::File::open(&input.events)
        .with_context(|| format!("opening events file {}", input.events.display()))?;
    let reader = BufReader::new(events_file);
    let mut events = if input.skip_bad_lines {
        let parsed = parse_events_lenient(reader)?;
        if !parsed.skipped.is_empty() {
            eprintln!(
                "teamlens: skipped {} bad line(s) in {}",
                parsed.skipped.len(),
                input.events.display()
            );
        }
        parsed.events
    } else {
        parse_events(reader)
            .with_context(|| format!("parsing events from {}", input.events.display()))?
    };

    if let Some(commit_log) = &input.commit_log {
        let file = fs::File::open(commit_log)
            .with_context(|| format!("opening commit log {}", commit_log.display()))?;
        let reader = BufReader::new(file);
        let commits = if input.skip_bad_lines {
            let parsed = parse_commit_log_lenient(reader, &config.aliases)?;
            if !parsed.skipped.is_empty() {
                eprintln!(
                    "teamlens: skipped {} bad block(s)/line(s) in {}",
                    parsed.skipped.len(),
                    commit_log.display()
                );
            }
            parsed.events
        } else {
            parse_commit_log(reader, &config.aliases)
                .with_context(|| format!("parsing commit log {}", commit_log.display()))?
        };
        events.extend(commits);
    }

    Ok(Some((config, events)))
}

fn sprint_events(
    config: &Config,
    events: Vec<InteractionEvent>,
    label: &str,
) -> Result<Vec<InteractionEvent>> {
    if config.sprint(label).is_none() {
        let known: Vec<&str> = config.sprints.iter().map(|s| s.label.as_str()).collect();
        bail!(
            "unknown sprint `{label}`; config defines [{}]",
            known.join(", ")
        );
    }
    let mut buckets = window_events(events, &config.sprints);
    Ok(buckets.remove(label).unwrap_or_default())
}

fn cmd_analyze(input: &InputArgs, out_dir: &Path, jobs: usize) -> Result<()> {
    let Some((config, events)) = load_inputs(input)? else {
        return Ok(());
    };
    let output = analyze_events(events, &config, jobs)?;

    // Render everything first; only then touch the filesystem, staging each
    // document to a temp name and renaming after all writes succeed.
    let team = config.roster.team_id();
    let mut documents: Vec<(String, String)> = output
        .sprint_reports
        .iter()
        .map(|r| (format!("{team}__{}.report.json", r.sprint_label), emit_report(r)))
        .collect();
    documents.push((
        format!("{team}__summary.json"),
        emit_canonical(&output.team_summary),
    ));

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    for (name, text) in &documents {
        let tmp = out_dir.join(format!(".tmp-{name}"));
        let final_path = out_dir.join(name);
        if let Err(err) = fs::write(&tmp, text) {
            for (tmp_path, _) in &staged {
                let _ = fs::remove_file(tmp_path);
            }
            let _ = fs::remove_file(&tmp);
            return Err(err).with_context(|| format!("writing {}", tmp.display()));
        }
        staged.push((tmp, final_path));
    }
    for (tmp, final_path) in staged {
        fs::rename(&tmp, &final_path)
            .with_context(|| format!("renaming {} into place", tmp.display()))?;
        println!("wrote {}", final_path.display());
    }
    Ok(())
}

fn census_rows(census: &TriadCensus) -> Vec<(String, u64, f64)> {
    census
        .labels()
        .iter()
        .zip(census.counts().iter().zip(census.proportions()))
        .map(|(label, (&count, proportion))| (label.to_string(), count, proportion))
        .collect()
}

fn cmd_census(input: &InputArgs, sprint: &str, directed: bool, pretty: bool) -> Result<()> {
    let Some((config, events)) = load_inputs(input)? else {
        return Ok(());
    };
    let window = sprint_events(&config, events, sprint)?;
    let nets = build_sprint_networks(&config, &window)?;
    let census = if directed {
        triad_census_directed(&threshold_binary(&nets.messages, config.threshold_min_weight))?
    } else {
        triad_census_undirected(&threshold_binary(&nets.merged, config.threshold_min_weight))?
    };

    let rows = census_rows(&census);
    if pretty {
        println!(
            "Triad census for {} / {} ({})",
            config.roster.team_id(),
            sprint,
            if directed { "directed" } else { "undirected" }
        );
        println!("{:<6} {:>10} {:>14}", "class", "count", "proportion");
        for (label, count, proportion) in rows {
            println!(
                "{label:<6} {count:>10} {:>14}",
                format_number(proportion)
            );
        }
        println!("{:<6} {:>10} {:>14}", "total", census.total(), "1");
    } else {
        println!("class\tcount\tproportion");
        for (label, count, proportion) in rows {
            println!("{label}\t{count}\t{}", format_number(proportion));
        }
    }
    Ok(())
}

fn cmd_congruence(input: &InputArgs, sprint: &str, pretty: bool) -> Result<()> {
    let Some((config, events)) = load_inputs(input)? else {
        return Ok(());
    };
    let window = sprint_events(&config, events, sprint)?;
    let report = teamlens::pipeline::analyze_sprint(&config, sprint, &window)?;
    let table = &report.congruence;

    let fmt_score = |score: Option<f64>| match score {
        Some(s) => format_number(s),
        None => "undefined".to_string(),
    };
    if pretty {
        println!(
            "Congruence for {} / {}",
            config.roster.team_id(),
            sprint
        );
        println!("team score: {}", fmt_score(table.team_score));
        for row in &table.member_scores {
            println!("  {:<20} {}", row.member, fmt_score(row.score));
        }
        if table.unmet_pairs.is_empty() {
            println!("no unmet coordination pairs");
        } else {
            println!("unmet coordination pairs:");
            for pair in &table.unmet_pairs {
                println!("  {} <-> {} (requirement {})", pair.a, pair.b, pair.requirement);
            }
        }
    } else {
        println!("team_score\t{}", fmt_score(table.team_score));
        for row in &table.member_scores {
            println!("member\t{}\t{}", row.member, fmt_score(row.score));
        }
        for pair in &table.unmet_pairs {
            println!("unmet\t{}\t{}\t{}", pair.a, pair.b, pair.requirement);
        }
    }
    Ok(())
}

/// Collect report documents under `dir` (recursively), sorted by path for
/// determinism.
fn collect_report_documents(dir: &Path) -> Result<Vec<serde_json::Value>> {
    let mut json_files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        let entries = fs::read_dir(&current)
            .with_context(|| format!("reading reports directory {}", current.display()))?;
        for entry in entries {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "json") {
                json_files.push(path);
            }
        }
    }
    json_files.sort();

    let mut documents = Vec::new();
    for path in json_files {
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading report {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing report {}", path.display()))?;
        if value.get("document").and_then(|d| d.as_str()) == Some("sprint_report") {
            documents.push(value);
        }
    }
    Ok(documents)
}

fn cmd_correlate(
    reports_dir: &Path,
    outcomes_path: &Path,
    metric: &str,
    outcome: &str,
    method: &str,
    pretty: bool,
) -> Result<()> {
    let outcomes_file = fs::File::open(outcomes_path)
        .with_context(|| format!("opening outcomes file {}", outcomes_path.display()))?;
    let outcomes = read_outcomes(BufReader::new(outcomes_file))?;
    let outcome_value = |record: &teamlens::model::OutcomeRecord| -> Result<f64> {
        Ok(match outcome {
            "stories_passed" => record.stories_passed as f64,
            "story_points_passed" => record.story_points_passed as f64,
            "communication_score" => record.communication_score,
            other => bail!(
                "unknown outcome `{other}`; expected stories_passed, \
                 story_points_passed, or communication_score"
            ),
        })
    };

    let documents = collect_report_documents(reports_dir)?;
    let mut by_key: BTreeMap<(String, String), &serde_json::Value> = BTreeMap::new();
    for doc in &documents {
        let team = doc.get("team_id").and_then(|v| v.as_str());
        let sprint = doc.get("sprint_label").and_then(|v| v.as_str());
        if let (Some(team), Some(sprint)) = (team, sprint) {
            by_key.insert((team.to_string(), sprint.to_string()), doc);
        }
    }

    let mut labels = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0usize;
    for record in &outcomes {
        let key = (record.team_id.clone(), record.sprint_label.clone());
        let Some(doc) = by_key.get(&key) else {
            continue; // no report for this team-sprint
        };
        match extract_metric(doc, metric) {
            Some(x) => {
                labels.push(key);
                xs.push(x);
                ys.push(outcome_value(record)?);
            }
            None => dropped += 1,
        }
    }

    let n = xs.len();
    let series = PairedSeries::new(labels, xs, ys)
        .map_err(|e| anyhow!("cannot correlate `{metric}` vs `{outcome}`: {e}"))?;
    let coefficient = match method {
        "pearson" => pearson(&series)?,
        _ => spearman(&series)?,
    };

    if pretty {
        println!(
            "{method} correlation of {metric} vs {outcome}: {} (n = {n}, dropped {dropped})",
            format_number(coefficient)
        );
    } else {
        println!("metric\toutcome\tmethod\tcoefficient\tn\tn_dropped");
        println!(
            "{metric}\t{outcome}\t{method}\t{}\t{n}\t{dropped}",
            format_number(coefficient)
        );
    }
    Ok(())
}

fn cmd_export_dot(input: &InputArgs, sprint: &str, source: &str) -> Result<()> {
    let Some((config, events)) = load_inputs(input)? else {
        return Ok(());
    };
    let window = sprint_events(&config, events, sprint)?;
    let nets = build_sprint_networks(&config, &window)?;
    let net = match source {
        "messages" => &nets.messages,
        "cochange" => &nets.cochange,
        "collaboration" => &nets.collaboration,
        _ => &nets.merged,
    };
    print!("{}", export_graph(net));
    Ok(())
}
