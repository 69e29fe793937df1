//! Aggregated pipeline report: per-attack-type counts, clustering summary
//! and the metrics table, as JSON and human-readable text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterOutput;
use crate::corpus::{BenignSample, Corpus, Validation, WafOutcome};
use crate::harness::{compute_confusion, metrics, ConfusionMatrix, Metrics};
use crate::refine::{rule_count_report, RefineState, StopReason};
use crate::Result;

/// Per-attack-type pipeline counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub generated: usize,
    pub valid: usize,
    pub invalid: usize,
    pub blocked: usize,
    pub bypassed: usize,
}

/// Refinement digest for the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementSection {
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub num_rules: usize,
    pub num_blocked: usize,
    pub num_bypassing: usize,
}

/// The machine-readable pipeline report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    /// Raw generation count before exact-duplicate removal.
    pub generated_total: usize,
    /// Distinct payloads in the corpus.
    pub distinct_total: usize,
    pub attack_types: BTreeMap<String, TypeCounts>,
    pub confusion: Option<ConfusionMatrix>,
    pub metrics: Option<Metrics>,
    pub clustering: Option<ClusterOutput>,
    pub refinement: Option<RefinementSection>,
}

/// Assemble the report from whatever stages have run.
pub fn build_report(
    corpus: &Corpus,
    benign: Option<&[BenignSample]>,
    clustering: Option<ClusterOutput>,
    refine_state: Option<&RefineState>,
) -> Result<PipelineReport> {
    let mut attack_types: BTreeMap<String, TypeCounts> = BTreeMap::new();
    for payload in &corpus.payloads {
        let entry = attack_types
            .entry(payload.attack_type.as_str().to_string())
            .or_default();
        entry.generated += 1;
        match &payload.validation {
            Validation::Valid => entry.valid += 1,
            Validation::Invalid(_) => entry.invalid += 1,
            Validation::Unchecked => {}
        }
        match &payload.waf_outcome {
            WafOutcome::Blocked(_) => entry.blocked += 1,
            WafOutcome::Bypassed => entry.bypassed += 1,
            WafOutcome::Untested => {}
        }
    }

    let generated_total = corpus
        .metadata
        .get("generated_total")
        .and_then(|v| v.parse().ok())
        .unwrap_or(corpus.len());

    // confusion: the refined ruleset's evaluation when refinement ran,
    // otherwise computed from fully tested corpora
    let tested_attacks: Vec<_> = corpus
        .payloads
        .iter()
        .filter(|p| p.waf_outcome != WafOutcome::Untested)
        .cloned()
        .collect();
    let confusion = match refine_state.and_then(|s| s.best.as_ref().map(|b| (s, b))) {
        Some((state, best)) => Some(ConfusionMatrix::new(
            best.blocked as u64,
            best.false_positives,
            state.benign_total as u64 - best.false_positives,
            best.bypassing as u64,
        )),
        None => match benign {
            Some(benign)
                if !tested_attacks.is_empty()
                    && benign.iter().all(|s| s.waf_outcome != WafOutcome::Untested) =>
            {
                Some(compute_confusion(&tested_attacks, benign)?)
            }
            _ => None,
        },
    };
    let derived = match &confusion {
        Some(cm) => Some(metrics(cm)?),
        None => None,
    };

    let refinement = match refine_state {
        Some(state) if state.iterations_completed > 0 => {
            let counts = rule_count_report(state)?;
            Some(RefinementSection {
                iterations: state.iterations_completed,
                stop_reason: state.stop_reason,
                num_rules: counts.num_rules,
                num_blocked: counts.num_blocked,
                num_bypassing: counts.num_bypassing,
            })
        }
        _ => None,
    };

    Ok(PipelineReport {
        generated_total,
        distinct_total: corpus.len(),
        attack_types,
        confusion,
        metrics: derived,
        clustering,
        refinement,
    })
}

fn fmt_metric(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "undefined".to_string(),
    }
}

impl PipelineReport {
    /// Human-readable rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("payload corpus\n");
        out.push_str(&format!("  generated (raw) {:>6}\n", self.generated_total));
        out.push_str(&format!("  distinct        {:>6}\n\n", self.distinct_total));

        out.push_str(&format!(
            "{:<12} {:>9} {:>6} {:>8} {:>8} {:>9}\n",
            "attack type", "generated", "valid", "invalid", "blocked", "bypassed"
        ));
        for (name, counts) in &self.attack_types {
            out.push_str(&format!(
                "{:<12} {:>9} {:>6} {:>8} {:>8} {:>9}\n",
                name,
                counts.generated,
                counts.valid,
                counts.invalid,
                counts.blocked,
                counts.bypassed
            ));
        }

        if let Some(cm) = &self.confusion {
            out.push_str(&format!(
                "\nconfusion matrix\n  tp {:>5}  fp {:>5}\n  fn {:>5}  tn {:>5}\n",
                cm.tp, cm.fp, cm.fn_, cm.tn
            ));
        }
        if let Some(m) = &self.metrics {
            out.push_str(&format!(
                "\nmetrics\n  accuracy  {}\n  precision {}\n  recall    {}\n  f1        {}\n",
                fmt_metric(m.accuracy),
                fmt_metric(m.precision),
                fmt_metric(m.recall),
                fmt_metric(m.f1)
            ));
        }
        if let Some(c) = &self.clustering {
            out.push_str(&format!(
                "\nclustering ({:?})\n  clusters {}  noise {}  silhouette {}\n",
                c.method,
                c.num_clusters(),
                c.num_noise(),
                fmt_metric(c.silhouette)
            ));
            for summary in &c.summaries {
                out.push_str(&format!(
                    "  cluster {} (size {}): {}\n",
                    summary.cluster_id,
                    summary.size,
                    summary.shared_tokens.join(" ")
                ));
            }
        }
        if let Some(r) = &self.refinement {
            out.push_str(&format!(
                "\nrefinement\n  iterations {} ({:?})\n  rules {}  blocked {}/{}\n",
                r.iterations,
                r.stop_reason,
                r.num_rules,
                r.num_blocked,
                r.num_blocked + r.num_bypassing
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AttackType, Payload, Source};

    fn tested_payload(id: &str, attack_type: AttackType, blocked: bool) -> Payload {
        Payload {
            validation: Validation::Valid,
            waf_outcome: if blocked {
                WafOutcome::Blocked(vec![900001])
            } else {
                WafOutcome::Bypassed
            },
            source: Source::Manual,
            ..Payload::new(id, format!("payload-{id}"), attack_type)
        }
    }

    #[test]
    fn reference_counts_render_expected_metrics() {
        let mut corpus = Corpus::new();
        for i in 0..150 {
            corpus
                .push(tested_payload(
                    &format!("a{i:04}"),
                    AttackType::Reflected,
                    true,
                ))
                .unwrap();
        }
        for i in 0..24 {
            corpus
                .push(tested_payload(
                    &format!("b{i:04}"),
                    AttackType::Reflected,
                    false,
                ))
                .unwrap();
        }
        let benign: Vec<BenignSample> = (0..800)
            .map(|i| BenignSample {
                id: format!("n{i:04}"),
                raw: "red".into(),
                waf_outcome: WafOutcome::Bypassed,
            })
            .collect();
        let report = build_report(&corpus, Some(&benign), None, None).unwrap();
        assert_eq!(
            report.confusion,
            Some(ConfusionMatrix::new(150, 0, 800, 24))
        );
        let m = report.metrics.unwrap();
        assert!((m.accuracy.unwrap() - 0.9753).abs() < 1e-4);
        assert!((m.f1.unwrap() - 0.9259).abs() < 1e-4);
        let text = report.render_text();
        assert!(text.contains("0.8621"), "text:\n{text}");
        assert!(text.contains("0.9259"), "text:\n{text}");
        assert!(text.contains("1.0000"));
    }

    #[test]
    fn empty_results_render_zeroed_report() {
        let corpus = Corpus::new();
        let report = build_report(&corpus, None, None, None).unwrap();
        assert_eq!(report.distinct_total, 0);
        assert!(report.attack_types.is_empty());
        assert!(report.confusion.is_none());
        let text = report.render_text();
        assert!(text.contains("distinct             0"));
    }

    #[test]
    fn mixed_types_have_two_rows() {
        let mut corpus = Corpus::new();
        corpus
            .push(tested_payload("r1", AttackType::Reflected, true))
            .unwrap();
        corpus
            .push(tested_payload("d1", AttackType::DomBased, false))
            .unwrap();
        let report = build_report(&corpus, None, None, None).unwrap();
        assert_eq!(report.attack_types.len(), 2);
        assert_eq!(report.attack_types["reflected"].blocked, 1);
        assert_eq!(report.attack_types["dom_based"].bypassed, 1);
        let text = report.render_text();
        assert!(text.contains("reflected"));
        assert!(text.contains("dom_based"));
    }

    #[test]
    fn pre_dedup_count_comes_from_metadata() {
        let mut corpus = Corpus::new();
        corpus
            .push(tested_payload("r1", AttackType::Reflected, true))
            .unwrap();
        corpus
            .metadata
            .insert("generated_total".into(), "264".into());
        let report = build_report(&corpus, None, None, None).unwrap();
        assert_eq!(report.generated_total, 264);
        assert_eq!(report.distinct_total, 1);
    }

    #[test]
    fn json_shape_is_stable() {
        let corpus = Corpus::new();
        let report = build_report(&corpus, None, None, None).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "generated_total",
            "distinct_total",
            "attack_types",
            "confusion",
            "metrics",
            "clustering",
            "refinement",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
    }
}
