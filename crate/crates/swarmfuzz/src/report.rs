//! Aggregation of repeated campaign runs into comparison tables: per-bug
//! median tests-to-detection with speedups against the baseline, coverage
//! totals, and coverage-versus-tests curves with mean and deviation across
//! trials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bugs::{BugId, BUGS};
use crate::campaign::{CampaignResult, Variant};
use crate::error::Error;

/// The slice of one campaign run that reporting needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub variant: Variant,
    pub trial: u64,
    pub rng_seed: u64,
    pub tests_total: u64,
    pub final_coverage: usize,
    pub bug_detections: BTreeMap<BugId, u64>,
    /// `(tests executed, cumulative coverage)` per iteration.
    pub curve: Vec<(u64, usize)>,
}

impl TrialOutcome {
    pub fn from_result(result: &CampaignResult, trial: u64) -> Self {
        Self {
            variant: result.config.variant,
            trial,
            rng_seed: result.config.rng_seed,
            tests_total: result.tests_total,
            final_coverage: result.coverage.count(),
            bug_detections: result.bug_detections.clone(),
            curve: result
                .records
                .iter()
                .map(|r| (r.tests_total, r.coverage))
                .collect(),
        }
    }
}

fn outcomes_for(outcomes: &[TrialOutcome], variant: Variant) -> Vec<&TrialOutcome> {
    outcomes.iter().filter(|o| o.variant == variant).collect()
}

/// Median tests-to-detection for one bug across trials; trials that never
/// detected count as unbounded, and a majority of them makes the median
/// undefined (`None`, rendered as `N.D.`).
pub fn median_tests_to_detection(outcomes: &[TrialOutcome], variant: Variant, bug: BugId) -> Option<f64> {
    let per_trial: Vec<Option<u64>> = outcomes_for(outcomes, variant)
        .iter()
        .map(|o| o.bug_detections.get(&bug).copied())
        .collect();
    if per_trial.is_empty() {
        return None;
    }
    let mut sorted = per_trial;
    sorted.sort_by_key(|d| d.unwrap_or(u64::MAX));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2].map(|v| v as f64)
    } else {
        let lo = sorted[n / 2 - 1]?;
        let hi = sorted[n / 2]?;
        Some((lo + hi) as f64 / 2.0)
    }
}

/// Median final coverage across trials.
pub fn median_final_coverage(outcomes: &[TrialOutcome], variant: Variant) -> Option<f64> {
    let mut totals: Vec<usize> = outcomes_for(outcomes, variant)
        .iter()
        .map(|o| o.final_coverage)
        .collect();
    if totals.is_empty() {
        return None;
    }
    totals.sort_unstable();
    let n = totals.len();
    Some(if n % 2 == 1 {
        totals[n / 2] as f64
    } else {
        (totals[n / 2 - 1] + totals[n / 2]) as f64 / 2.0
    })
}

/// Mean coverage curve for one variant: iterations are aligned by index,
/// truncated to the shortest trial.
pub fn mean_curve(outcomes: &[TrialOutcome], variant: Variant) -> Vec<(u64, f64, f64)> {
    let trials = outcomes_for(outcomes, variant);
    if trials.is_empty() {
        return Vec::new();
    }
    let len = trials.iter().map(|o| o.curve.len()).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let tests = trials[0].curve[i].0;
            let values: Vec<f64> = trials.iter().map(|o| o.curve[i].1 as f64).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let std = if values.len() > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (values.len() - 1) as f64;
                var.sqrt()
            } else {
                0.0
            };
            (tests, mean, std)
        })
        .collect()
}

/// Tests the mean curve needs to first reach `target` coverage.
fn tests_to_reach(curve: &[(u64, f64, f64)], target: f64) -> Option<u64> {
    curve.iter().find(|(_, mean, _)| *mean >= target).map(|(t, _, _)| *t)
}

fn fmt_median(m: Option<f64>) -> String {
    match m {
        Some(v) => {
            if v.fract() == 0.0 {
                format!("{}", v as u64)
            } else {
                format!("{v:.1}")
            }
        }
        None => "N.D.".into(),
    }
}

fn fmt_speedup(baseline: Option<f64>, variant: Option<f64>) -> String {
    match (baseline, variant) {
        (_, None) => "N.D.".into(),
        (None, Some(_)) => "inf".into(),
        (Some(b), Some(v)) => format!("{:.2}x", b / v),
    }
}

/// Per-bug table: median tests-to-detection per variant plus speedup
/// against the baseline.
pub fn bug_table(outcomes: &[TrialOutcome]) -> String {
    let mut out = String::from(
        "bug,baseline,pso,pso_speedup,pso-reset,pso-reset_speedup,psofuzz,psofuzz_speedup\n",
    );
    for bug in BUGS {
        let base = median_tests_to_detection(outcomes, Variant::Baseline, bug);
        let mut row = format!("{bug},{}", fmt_median(base));
        for variant in [Variant::Pso, Variant::PsoReset, Variant::Psofuzz] {
            let med = median_tests_to_detection(outcomes, variant, bug);
            row.push_str(&format!(",{},{}", fmt_median(med), fmt_speedup(base, med)));
        }
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Per-variant coverage table: median total, increment over the baseline,
/// and the tests-to-reach speedup at matched coverage.
pub fn coverage_table(outcomes: &[TrialOutcome]) -> String {
    let mut out = String::from("variant,total_median,increment_pct,speedup\n");
    let base_total = median_final_coverage(outcomes, Variant::Baseline);
    let base_curve = mean_curve(outcomes, Variant::Baseline);
    for variant in Variant::ALL {
        let total = median_final_coverage(outcomes, variant);
        let (total_s, inc_s, speed_s) = match (total, base_total) {
            (Some(t), Some(b)) => {
                let inc = if b > 0.0 { (t - b) / b * 100.0 } else { 0.0 };
                let curve = mean_curve(outcomes, variant);
                // Match at the lower of the two final coverages so both
                // curves actually get there.
                let base_final = base_curve.last().map(|(_, m, _)| *m).unwrap_or(0.0);
                let var_final = curve.last().map(|(_, m, _)| *m).unwrap_or(0.0);
                let target = base_final.min(var_final);
                let speed = match (
                    tests_to_reach(&base_curve, target),
                    tests_to_reach(&curve, target),
                ) {
                    (Some(bt), Some(vt)) if vt > 0 => format!("{:.2}x", bt as f64 / vt as f64),
                    _ => "N.D.".into(),
                };
                (format!("{t}"), format!("{inc:.2}"), speed)
            }
            (Some(t), None) => (format!("{t}"), "N.D.".into(), "N.D.".into()),
            _ => ("N.D.".into(), "N.D.".into(), "N.D.".into()),
        };
        out.push_str(&format!("{variant},{total_s},{inc_s},{speed_s}\n"));
    }
    out
}

/// Coverage-versus-tests curves, one row per variant per iteration, sorted
/// by tests executed. The deviation column is omitted for single trials.
pub fn curves_table(outcomes: &[TrialOutcome]) -> String {
    let multi_trial = Variant::ALL
        .iter()
        .any(|&v| outcomes_for(outcomes, v).len() > 1);
    let mut out = String::from(if multi_trial {
        "variant,iter,tests,mean_coverage,std_coverage\n"
    } else {
        "variant,iter,tests,mean_coverage\n"
    });
    for variant in Variant::ALL {
        for (i, (tests, mean, std)) in mean_curve(outcomes, variant).iter().enumerate() {
            if multi_trial {
                out.push_str(&format!(
                    "{variant},{},{tests},{mean:.3},{std:.3}\n",
                    i + 1
                ));
            } else {
                out.push_str(&format!("{variant},{},{tests},{mean:.3}\n", i + 1));
            }
        }
    }
    out
}

/// Serialize trial outcomes as one JSON object per line.
pub fn outcomes_jsonl(outcomes: &[TrialOutcome]) -> Result<String, Error> {
    let mut out = String::new();
    for o in outcomes {
        out.push_str(&serde_json::to_string(o)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse trial outcomes back from the JSONL form.
pub fn parse_outcomes(text: &str) -> Result<Vec<TrialOutcome>, Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
