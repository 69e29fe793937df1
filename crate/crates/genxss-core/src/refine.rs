//! Feedback-driven rule refinement: generate rules from cluster summaries,
//! evaluate against bypass and benign corpora, build structured feedback
//! (including optional human annotations) and re-prompt until targets, an
//! iteration cap, or stalled progress.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterSummary;
use crate::corpus::{BenignSample, Payload};
use crate::harness::{
    compute_confusion, metrics, test_benign, test_payloads, ConfusionMatrix, Metrics, WafTarget,
};
use crate::llm::{
    build_refine_prompt, build_rule_prompt, complete, parse_ruleset_block, FeedbackItem,
    FeedbackReport, HumanNote, ProviderConfig,
};
use crate::secrule::{lint_ruleset, parse_ruleset};
use crate::{Error, Result};

pub use crate::llm::MAX_FEEDBACK_FALSE_NEGATIVES;

/// Loop settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineConfig {
    pub max_iterations: usize,
    pub target_recall: f64,
    pub max_fp: u64,
    /// Where per-iteration checkpoints are written
    /// (`iter-<n>/{ruleset.conf, metrics.json, feedback.json}`).
    pub checkpoint_dir: Option<PathBuf>,
    /// Operator annotations merged into every feedback report.
    pub annotations: Vec<HumanNote>,
    /// How many bypass payloads to quote in the initial rule prompt.
    pub sample_count: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            max_iterations: 5,
            target_recall: 0.85,
            max_fp: 0,
            checkpoint_dir: None,
            annotations: Vec::new(),
            sample_count: 5,
        }
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetsMet,
    MaxIterations,
    NoProgress,
}

/// The retained ruleset and its evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestRuleset {
    pub iteration: usize,
    pub text: String,
    pub num_rules: usize,
    pub recall: f64,
    pub false_positives: u64,
    pub blocked: usize,
    pub bypassing: usize,
    /// Ids and raws of payloads this ruleset still misses.
    pub false_negatives: Vec<FeedbackItem>,
    /// Benign samples this ruleset wrongly blocks.
    pub false_positive_samples: Vec<FeedbackItem>,
}

/// One loop iteration: what the candidate was and how it scored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub parsed: bool,
    pub num_rules: usize,
    pub confusion: Option<ConfusionMatrix>,
    pub metrics: Option<Metrics>,
    pub lint_warnings: Vec<String>,
    pub parse_errors: Vec<String>,
    pub annotation_warnings: Vec<String>,
    /// Candidate strictly improved the retained (recall, -fp) pair.
    pub improved: bool,
}

/// Loop outcome: retained best ruleset, per-iteration history, stop reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineState {
    pub iterations_completed: usize,
    pub bypass_total: usize,
    pub benign_total: usize,
    pub best: Option<BestRuleset>,
    pub history: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

/// Counts from the retained best ruleset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCountReport {
    pub num_rules: usize,
    pub num_blocked: usize,
    pub num_bypassing: usize,
}

/// Load operator annotations: a JSON list of `{target_id, note}`. A
/// missing file yields no notes (annotations are optional).
pub fn ingest_annotations(path: impl AsRef<Path>) -> Result<Vec<HumanNote>> {
    let path = path.as_ref();
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path.display().to_string(), e)),
    };
    serde_json::from_str(&text).map_err(|e| Error::BadAnnotations {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Counts from the retained ruleset of a completed refinement.
pub fn rule_count_report(state: &RefineState) -> Result<RuleCountReport> {
    if state.iterations_completed == 0 {
        return Err(Error::Config(
            "refinement has no completed iterations".into(),
        ));
    }
    Ok(match &state.best {
        Some(best) => RuleCountReport {
            num_rules: best.num_rules,
            num_blocked: best.blocked,
            num_bypassing: best.bypassing,
        },
        None => RuleCountReport {
            num_rules: 0,
            num_blocked: 0,
            num_bypassing: state.bypass_total,
        },
    })
}

/// Run the refinement loop.
///
/// Iteration 0 prompts from cluster summaries; later iterations prompt from
/// the prior feedback report. Every candidate is extracted, parsed, linted
/// and evaluated on both corpora; the best ruleset by (recall, then fewer
/// false positives, then fewer rules) is retained. The loop stops when
/// recall and false positives meet their targets, at `max_iterations`, or
/// after two consecutive evaluated candidates without improvement.
pub fn run_refinement(
    bypass_corpus: &[Payload],
    benign_corpus: &[BenignSample],
    summaries: &[ClusterSummary],
    provider: &ProviderConfig,
    config: &RefineConfig,
) -> Result<RefineState> {
    if bypass_corpus.is_empty() {
        return Err(Error::Config("bypass corpus is empty".into()));
    }

    let mut state = RefineState {
        iterations_completed: 0,
        bypass_total: bypass_corpus.len(),
        benign_total: benign_corpus.len(),
        best: None,
        history: Vec::new(),
        stop_reason: StopReason::MaxIterations,
    };
    let mut next_feedback: Option<FeedbackReport> = None;

    for iteration in 0..config.max_iterations {
        let prompt = match &next_feedback {
            None => {
                let samples: Vec<Payload> = bypass_corpus
                    .iter()
                    .take(config.sample_count)
                    .cloned()
                    .collect();
                build_rule_prompt(summaries, &samples)?
            }
            Some(feedback) => {
                let previous = state
                    .best
                    .as_ref()
                    .map(|b| b.text.clone())
                    .unwrap_or_else(|| "# no accepted ruleset yet\n".to_string());
                build_refine_prompt(&previous, feedback)?
            }
        };

        // gateway failure aborts; checkpoints written so far stay on disk
        let response = complete(&prompt, provider)?;

        let mut record = IterationRecord {
            iteration,
            parsed: false,
            num_rules: 0,
            confusion: None,
            metrics: None,
            lint_warnings: Vec::new(),
            parse_errors: Vec::new(),
            annotation_warnings: Vec::new(),
            improved: false,
        };
        let mut checkpoint_text = response.text.clone();
        let mut stop: Option<StopReason> = None;

        match parse_ruleset_block(&response.text) {
            Err(e) => {
                record.parse_errors.push(e.to_string());
            }
            Ok(block) => {
                checkpoint_text = block.clone();
                let rules = parse_ruleset(&block)?;
                record.parsed = true;
                record.num_rules = rules.len();
                record.lint_warnings = lint_ruleset(&rules)
                    .into_iter()
                    .map(|w| w.to_string())
                    .collect();

                let target = WafTarget::Embedded(rules);
                let attack_outcome = test_payloads(bypass_corpus, &target)?;
                let (benign_tested, _) = test_benign(benign_corpus, &target)?;
                let cm = compute_confusion(&attack_outcome.payloads, &benign_tested)?;
                let derived = metrics(&cm)?;
                record.confusion = Some(cm);
                record.metrics = Some(derived);

                let recall = derived.recall.unwrap_or(0.0);
                let candidate = BestRuleset {
                    iteration,
                    text: block,
                    num_rules: record.num_rules,
                    recall,
                    false_positives: cm.fp,
                    blocked: attack_outcome.blocked_count(),
                    bypassing: attack_outcome.bypassed_count(),
                    false_negatives: attack_outcome
                        .payloads
                        .iter()
                        .filter(|p| p.waf_outcome == crate::corpus::WafOutcome::Bypassed)
                        .map(|p| FeedbackItem {
                            id: p.id.clone(),
                            raw: p.raw.clone(),
                        })
                        .collect(),
                    false_positive_samples: benign_tested
                        .iter()
                        .filter(|s| matches!(s.waf_outcome, crate::corpus::WafOutcome::Blocked(_)))
                        .map(|s| FeedbackItem {
                            id: s.id.clone(),
                            raw: s.raw.clone(),
                        })
                        .collect(),
                };

                record.improved = match &state.best {
                    None => true,
                    Some(best) => {
                        (candidate.recall, -(candidate.false_positives as i64))
                            > (best.recall, -(best.false_positives as i64))
                    }
                };
                let retain = match &state.best {
                    None => true,
                    Some(best) => {
                        let cand_key = (
                            candidate.recall,
                            -(candidate.false_positives as i64),
                            -(candidate.num_rules as i64),
                        );
                        let best_key = (
                            best.recall,
                            -(best.false_positives as i64),
                            -(best.num_rules as i64),
                        );
                        cand_key > best_key
                    }
                };
                if retain {
                    state.best = Some(candidate);
                }
                let best = state.best.as_ref().expect("retained above");
                if best.recall >= config.target_recall && best.false_positives <= config.max_fp {
                    stop = Some(StopReason::TargetsMet);
                }
            }
        }

        // feedback for the next prompt comes from the retained ruleset's
        // misses plus this candidate's lint/parse findings
        let feedback = FeedbackReport {
            iteration: iteration + 1,
            false_negative_payloads: match &state.best {
                Some(best) => best.false_negatives.clone(),
                None => bypass_corpus
                    .iter()
                    .map(|p| FeedbackItem {
                        id: p.id.clone(),
                        raw: p.raw.clone(),
                    })
                    .collect(),
            },
            false_positive_samples: state
                .best
                .as_ref()
                .map(|b| b.false_positive_samples.clone())
                .unwrap_or_default(),
            lint_warnings: record.lint_warnings.clone(),
            parse_errors: record.parse_errors.clone(),
            human_notes: config.annotations.clone(),
        };
        record.annotation_warnings =
            annotation_warnings(&config.annotations, &checkpoint_text, bypass_corpus);
        let feedback = feedback.capped();

        if let Some(dir) = &config.checkpoint_dir {
            write_checkpoint(dir, iteration, &checkpoint_text, &record, &feedback)?;
        }

        state.history.push(record);
        state.iterations_completed = iteration + 1;

        // two consecutive evaluated candidates without improvement stall
        // the loop; unparseable candidates do not count as evaluated
        let stalled = state
            .history
            .iter()
            .rev()
            .filter(|r| r.parsed)
            .take(2)
            .filter(|r| !r.improved)
            .count()
            == 2;
        if stop.is_none() && stalled {
            stop = Some(StopReason::NoProgress);
        }

        next_feedback = Some(feedback);

        if let Some(reason) = stop {
            state.stop_reason = reason;
            break;
        }
    }

    if let Some(dir) = &config.checkpoint_dir {
        let path = dir.join("state.json");
        let json = serde_json::to_string_pretty(&state).expect("state serializes");
        fs::write(&path, json).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(state)
}

/// Annotations referencing neither a rule id in the candidate nor a payload
/// id in the bypass corpus get a warning; the note is still included.
fn annotation_warnings(
    annotations: &[HumanNote],
    ruleset_text: &str,
    bypass_corpus: &[Payload],
) -> Vec<String> {
    let rule_ids: Vec<String> = parse_ruleset(ruleset_text)
        .map(|rs| rs.rules.iter().map(|r| r.id.to_string()).collect())
        .unwrap_or_default();
    annotations
        .iter()
        .filter(|note| {
            !rule_ids.iter().any(|id| id == &note.target_id)
                && !bypass_corpus.iter().any(|p| p.id == note.target_id)
        })
        .map(|note| {
            format!(
                "annotation target {:?} matches no rule or payload id",
                note.target_id
            )
        })
        .collect()
}

fn write_checkpoint(
    dir: &Path,
    iteration: usize,
    ruleset_text: &str,
    record: &IterationRecord,
    feedback: &FeedbackReport,
) -> Result<()> {
    let iter_dir = dir.join(format!("iter-{iteration}"));
    fs::create_dir_all(&iter_dir).map_err(|e| Error::io(iter_dir.display().to_string(), e))?;
    let write = |name: &str, contents: String| -> Result<()> {
        let path = iter_dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))
    };
    write("ruleset.conf", ruleset_text.to_string())?;
    write(
        "metrics.json",
        serde_json::to_string_pretty(record).expect("record serializes"),
    )?;
    write(
        "feedback.json",
        serde_json::to_string_pretty(feedback).expect("feedback serializes"),
    )?;
    Ok(())
}
