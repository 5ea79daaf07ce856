use serde::{Deserialize, Serialize};

use super::ExperimentKind;
use crate::distance::Distance;

/// Schema id carried by every summary record.
pub const SCHEMA: &str = "irgraph.experiment/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Outcome {
    Diameter {
        edges: usize,
        connected: bool,
        diameter: Distance,
        bfs_sweeps_used: usize,
        /// `None` when disconnected or without a prediction.
        in_interval: Option<bool>,
    },
    Tail {
        u_size: usize,
        count: usize,
        s_ij: f64,
        /// `count ≤ S_{i,j}/4`.
        violated: bool,
    },
    Expansion {
        start: u32,
        gamma_sizes: Vec<usize>,
        gamma_prime_sizes: Vec<usize>,
        bound: Vec<f64>,
        satisfied: bool,
    },
    Coupling {
        edges_kernel: usize,
        edges_er: usize,
        subgraph: bool,
        diameter_kernel: Distance,
        diameter_er: Distance,
        /// `diam G(n,K,p) ≥ diam G(n,p)`, when both are connected.
        ordered: Option<bool>,
    },
}

impl Outcome {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Outcome::Diameter { .. } => ExperimentKind::Diameter,
            Outcome::Tail { .. } => ExperimentKind::Tail,
            Outcome::Expansion { .. } => ExperimentKind::Expansion,
            Outcome::Coupling { .. } => ExperimentKind::Coupling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

fn fraction(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Summary statistics of one sweep point, recomputable from its trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Aggregate {
    Diameter {
        trials: usize,
        connected: usize,
        connected_fraction: f64,
        /// `(diameter, count)` in increasing order, `inf` last.
        histogram: Vec<(Distance, usize)>,
        /// Connected trials with a prediction.
        interval_trials: usize,
        interval_hits: usize,
        interval_fraction: Option<f64>,
    },
    Tail {
        trials: usize,
        s_ij: f64,
        violations: usize,
        violation_fraction: f64,
        /// `e^{−S/16}`.
        bound: f64,
        /// Binomial standard deviation of the frequency at the bound.
        sigma: f64,
        /// `violation_fraction ≤ bound + 3σ`.
        within_bound: bool,
        degenerate: bool,
    },
    Expansion {
        trials: usize,
        satisfied: usize,
        success_fraction: f64,
        mean_gamma: Vec<f64>,
        min_gamma: Vec<usize>,
        bound: Vec<f64>,
    },
    Coupling {
        trials: usize,
        subgraph_fraction: f64,
        connected_pairs: usize,
        ordered: usize,
        ordered_fraction: Option<f64>,
        equal: usize,
    },
}

impl Aggregate {
    /// Records of another kind are ignored.
    pub fn from_records(kind: ExperimentKind, records: &[TrialRecord]) -> Aggregate {
        let outcomes: Vec<&Outcome> = records
            .iter()
            .map(|r| &r.outcome)
            .filter(|o| o.kind() == kind)
            .collect();
        let trials = outcomes.len();
        match kind {
            ExperimentKind::Diameter => {
                let mut histogram: Vec<(Distance, usize)> = Vec::new();
                let (mut connected, mut interval_trials, mut interval_hits) = (0, 0, 0);
                for o in &outcomes {
                    if let Outcome::Diameter { connected: c, diameter, in_interval, .. } = o {
                        connected += *c as usize;
                        match histogram.iter_mut().find(|(d, _)| d == diameter) {
                            Some(entry) => entry.1 += 1,
                            None => histogram.push((*diameter, 1)),
                        }
                        if let Some(hit) = in_interval {
                            interval_trials += 1;
                            interval_hits += *hit as usize;
                        }
                    }
                }
                histogram.sort();
                Aggregate::Diameter {
                    trials,
                    connected,
                    connected_fraction: fraction(connected, trials).unwrap_or(0.0),
                    histogram,
                    interval_trials,
                    interval_hits,
                    interval_fraction: fraction(interval_hits, interval_trials),
                }
            }
            ExperimentKind::Tail => {
                let mut s = 0.0;
                let mut violations = 0;
                for o in &outcomes {
                    if let Outcome::Tail { s_ij, violated, .. } = o {
                        s = *s_ij;
                        violations += *violated as usize;
                    }
                }
                let bound = (-s / 16.0).exp();
                let sigma = (bound * (1.0 - bound) / trials.max(1) as f64).sqrt();
                let violation_fraction = fraction(violations, trials).unwrap_or(0.0);
                Aggregate::Tail {
                    trials,
                    s_ij: s,
                    violations,
                    violation_fraction,
                    bound,
                    sigma,
                    within_bound: violation_fraction <= bound + 3.0 * sigma,
                    degenerate: s <= 0.0,
                }
            }
            ExperimentKind::Expansion => {
                let mut satisfied = 0;
                let mut sums: Vec<f64> = Vec::new();
                let mut mins: Vec<usize> = Vec::new();
                let mut bound = Vec::new();
                for o in &outcomes {
                    if let Outcome::Expansion { gamma_sizes, bound: b, satisfied: ok, .. } = o {
                        satisfied += *ok as usize;
                        if sums.is_empty() {
                            sums = vec![0.0; gamma_sizes.len()];
                            mins = vec![usize::MAX; gamma_sizes.len()];
                            bound = b.clone();
                        }
                        for (k, &g) in gamma_sizes.iter().enumerate().take(sums.len()) {
                            sums[k] += g as f64;
                            mins[k] = mins[k].min(g);
                        }
                    }
                }
                Aggregate::Expansion {
                    trials,
                    satisfied,
                    success_fraction: fraction(satisfied, trials).unwrap_or(0.0),
                    mean_gamma: sums.iter().map(|s| s / trials as f64).collect(),
                    min_gamma: mins,
                    bound,
                }
            }
            ExperimentKind::Coupling => {
                let (mut subgraph, mut pairs, mut ordered, mut equal) = (0, 0, 0, 0);
                for o in &outcomes {
                    if let Outcome::Coupling {
                        subgraph: sg,
                        ordered: ord,
                        diameter_kernel,
                        diameter_er,
                        ..
                    } = o
                    {
                        subgraph += *sg as usize;
                        equal += (diameter_kernel == diameter_er) as usize;
                        if let Some(ok) = ord {
                            pairs += 1;
                            ordered += *ok as usize;
                        }
                    }
                }
                Aggregate::Coupling {
                    trials,
                    subgraph_fraction: fraction(subgraph, trials).unwrap_or(0.0),
                    connected_pairs: pairs,
                    ordered,
                    ordered_fraction: fraction(ordered, pairs),
                    equal,
                }
            }
        }
    }

    /// The fraction compared with the acceptance level, if the kind has one.
    pub fn success_fraction(&self) -> Option<f64> {
        match self {
            Aggregate::Diameter { interval_fraction, .. } => *interval_fraction,
            Aggregate::Tail { .. } => None,
            Aggregate::Expansion { success_fraction, .. } => Some(*success_fraction),
            Aggregate::Coupling { ordered_fraction, .. } => *ordered_fraction,
        }
    }

    pub fn trials(&self) -> usize {
        match self {
            Aggregate::Diameter { trials, .. }
            | Aggregate::Tail { trials, .. }
            | Aggregate::Expansion { trials, .. }
            | Aggregate::Coupling { trials, .. } => *trials,
        }
    }

    /// Fraction of trials whose diameter is exactly `d`.
    pub fn diameter_fraction(&self, d: Distance) -> Option<f64> {
        match self {
            Aggregate::Diameter { trials, histogram, .. } => Some(
                histogram
                    .iter()
                    .find(|(x, _)| *x == d)
                    .map_or(0, |&(_, c)| c) as f64
                    / *trials as f64,
            ),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub point: usize,
    pub p: f64,
    /// The regime report used for the prediction.
    pub report: Option<serde_json::Value>,
    pub predicted_interval: Option<[u32; 2]>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub meets_acceptance: Option<bool>,
    pub aggregate: Aggregate,
    /// Written as separate trial lines.
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema: String,
    pub kind: ExperimentKind,
    pub kernel_id: String,
    pub kernel_digest: String,
    pub n: usize,
    pub seed: u64,
    pub trials: usize,
    pub acceptance: f64,
    pub points: Vec<PointResult>,
    pub wall_seconds: f64,
}

impl ExperimentResult {
    /// All trial records in point-then-trial order.
    pub fn records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.points.iter().flat_map(|p| p.records.iter())
    }
}
