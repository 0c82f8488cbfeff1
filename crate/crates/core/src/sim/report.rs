//! Comparison summaries, CSV and markdown output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stats::{mean, paired_t_test, sample_sd};
use super::{Run, SimConfig};

/// Significance level of all reported tests.
pub const LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub name: String,
    /// Discounted value per initial state.
    pub values: Vec<f64>,
    /// Gap in percent against the reference per initial state.
    pub gaps: Vec<f64>,
    pub gap_mean: f64,
    pub gap_sd: f64,
    /// Paired test of this policy's values against the reference.
    pub p_value: f64,
    pub mean_value: f64,
    pub rejection_hours: f64,
    pub diversion_hours: f64,
    pub overtime_hours: f64,
    pub travel_time: f64,
    pub tour_length: f64,
    /// Accepted over arrived referrals.
    pub acceptance_rate: f64,
    pub heuristic_days: usize,
}

/// Paired test on per-state gaps of two non-reference policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: String,
    pub b: String,
    pub mean_difference: f64,
    pub t: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub reference: String,
    pub config: SimConfig,
    pub policies: Vec<PolicySummary>,
    pub tests: Vec<PairTest>,
    /// Raw runs, indexed `[policy][state]`.
    #[serde(skip)]
    pub runs: Vec<Vec<Run>>,
}

/// `100 (reference − value) / reference`, zero when both are zero.
pub fn gap_percent(reference: f64, value: f64) -> f64 {
    if reference == 0.0 && value == 0.0 {
        0.0
    } else {
        100.0 * (reference - value) / reference
    }
}

impl SimReport {
    pub fn build(names: Vec<String>, reference: usize, config: SimConfig, runs: Vec<Vec<Run>>) -> Self {
        let ref_values: Vec<f64> = runs[reference].iter().map(|r| r.value).collect();
        let policies: Vec<PolicySummary> = names
            .iter()
            .zip(&runs)
            .map(|(name, rs)| {
                let values: Vec<f64> = rs.iter().map(|r| r.value).collect();
                let gaps: Vec<f64> = ref_values.iter().zip(&values).map(|(&r, &v)| gap_percent(r, v)).collect();
                let daily: Vec<_> = rs.iter().map(Run::daily_mean).collect();
                let avg = |f: fn(&super::DayMetrics) -> f64| mean(&daily.iter().map(f).collect::<Vec<_>>());
                let (arrived, accepted) =
                    daily.iter().fold((0u64, 0u64), |(a, b), d| (a + d.referrals as u64, b + d.accepted as u64));
                PolicySummary {
                    name: name.clone(),
                    gap_mean: mean(&gaps),
                    gap_sd: sample_sd(&gaps),
                    p_value: paired_t_test(&ref_values, &values).p_value,
                    mean_value: mean(&values),
                    rejection_hours: avg(|d| d.rejection_hours),
                    diversion_hours: avg(|d| d.diversion_hours),
                    overtime_hours: avg(|d| d.overtime_hours),
                    travel_time: avg(|d| d.travel_time),
                    tour_length: avg(|d| d.tour_length),
                    acceptance_rate: if arrived == 0 { 1.0 } else { accepted as f64 / arrived as f64 },
                    heuristic_days: rs.iter().map(|r| r.heuristic_days).sum(),
                    values,
                    gaps,
                }
            })
            .collect();
        let mut tests = Vec::new();
        for i in 0..policies.len() {
            for j in i + 1..policies.len() {
                if i == reference || j == reference {
                    continue;
                }
                let t = paired_t_test(&policies[i].gaps, &policies[j].gaps);
                tests.push(PairTest {
                    a: policies[i].name.clone(),
                    b: policies[j].name.clone(),
                    mean_difference: t.mean_difference,
                    t: t.t,
                    p_value: t.p_value,
                    significant: t.significant(LEVEL),
                });
            }
        }
        Self { reference: names[reference].clone(), config, policies, tests, runs }
    }

    pub fn policy(&self, name: &str) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.name == name)
    }

    /// One row per initial state and policy, six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "state,policy,value,gap_pct,rejection_hours,diversion_hours,overtime_hours,travel_time,tour_length\n",
        );
        for (p, summary) in self.policies.iter().enumerate() {
            for (n, run) in self.runs[p].iter().enumerate() {
                let d = run.daily_mean();
                writeln!(
                    out,
                    "{n},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    summary.name,
                    run.value,
                    summary.gaps[n],
                    d.rejection_hours,
                    d.diversion_hours,
                    d.overtime_hours,
                    d.travel_time,
                    d.tour_length
                )
                .expect("writing to a string");
            }
        }
        out
    }

    /// Summary table with one row per policy.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("Reference policy: {}\n\n", self.reference);
        out.push_str("| Policy | Gap% (SD) | Rejection (h/day) | Diversion (h/day) | Overtime (h/day) | Travel (h/day) | Tour length (h/day) | p-value |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        for p in &self.policies {
            writeln!(
                out,
                "| {} | {:.2} ({:.2}) | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.4} |",
                p.name, p.gap_mean, p.gap_sd, p.rejection_hours, p.diversion_hours, p.overtime_hours, p.travel_time, p.tour_length, p.p_value
            )
            .expect("writing to a string");
        }
        if !self.tests.is_empty() {
            out.push_str("\n| Pair | Mean gap difference | t | p-value | Significant at 95% |\n|---|---|---|---|---|\n");
            for t in &self.tests {
                writeln!(
                    out,
                    "| {} vs {} | {:.3} | {:.3} | {:.4} | {} |",
                    t.a,
                    t.b,
                    t.mean_difference,
                    t.t,
                    t.p_value,
                    if t.significant { "yes" } else { "no" }
                )
                .expect("writing to a string");
            }
        }
        out
    }
}
