//! Seeded Monte Carlo batches: empirical diameters against the predicted
//! regime, the neighbourhood tail bound, neighbourhood expansion along a walk
//! and the `G(n, p)` coupling.
//!
//! Trial `t` at sweep point `k` draws everything from
//! `derive_seed(root, [k, t])`, and trials are merged in index order, so a
//! result depends on the config alone and not on the number of workers.

mod config;
mod io;
mod record;

use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;

pub use config::{
    ExpansionSpec, ExperimentConfig, ExperimentKind, KernelRef, PartitionDef, Sweep, TailSpec,
};
pub use io::{load_result, write_plot_data, write_result};
pub use record::{Aggregate, ExperimentResult, Outcome, PointResult, TrialRecord, SCHEMA};

use crate::error::{Error, Result};
use crate::graphalg::exact_diameter;
use crate::graphalg::{
    expansion_trace, neighbor_hit_count, s_ij, CellMembership, WalkSpec,
};
use crate::kernel::Kernel;
use crate::partition::{Partition, PartitionGraph};
use crate::regimes::{phi, predict_with, PredictOptions, RegimeReport};
use crate::rng::{self, derive_seed, phase};
use crate::sampler::{coupled_pair, SampleParams, Sampler};

/// Run whatever `config.kind` asks for.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.kind {
        ExperimentKind::Diameter => run_diameter_experiment(config),
        ExperimentKind::Tail => {
            let spec = config
                .tail
                .clone()
                .ok_or_else(|| Error::Domain("tail experiments need a [tail] table".into()))?;
            run_tail_experiment(config, (spec.source_cell, spec.target_cell), spec.u_size)
        }
        ExperimentKind::Expansion => {
            let spec = config.expansion.clone().ok_or_else(|| {
                Error::Domain("expansion experiments need an [expansion] table".into())
            })?;
            run_expansion_experiment(config, &spec)
        }
        ExperimentKind::Coupling => run_coupling_experiment(config),
    }
}

struct Setup {
    kernel: Kernel,
    densities: Vec<f64>,
    started: Instant,
}

fn setup(config: &ExperimentConfig) -> Result<Setup> {
    config.validate()?;
    Ok(Setup {
        kernel: config.load_kernel()?,
        densities: config.densities()?,
        started: Instant::now(),
    })
}

fn params(config: &ExperimentConfig, p: f64, seed: u64) -> Result<SampleParams> {
    let mut params = SampleParams::new(config.n, p, seed)?;
    params.omega = config.omega;
    Ok(params)
}

/// Run `trial` for every index on a pool of the configured width. The first
/// failing index (not the first to fail in time) decides the error.
fn run_trials<F>(config: &ExperimentConfig, point: usize, trial: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64) -> Result<Outcome> + Sync,
{
    let body = || {
        (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(config.seed, &[point as u64, t as u64]);
                trial(seed).map(|outcome| TrialRecord {
                    point,
                    trial: t,
                    seed,
                    outcome,
                })
            })
            .collect::<Vec<_>>()
    };
    let results = if config.parallel > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallel)
            .build()
            .map_err(|e| Error::Domain(format!("cannot build a pool of {}: {e}", config.parallel)))?
            .install(body)
    } else {
        body()
    };
    results.into_iter().collect()
}

fn finish(
    config: &ExperimentConfig,
    kernel: &Kernel,
    points: Vec<PointResult>,
    started: Instant,
) -> ExperimentResult {
    ExperimentResult {
        schema: SCHEMA.to_string(),
        kind: config.kind,
        kernel_id: kernel.id(),
        kernel_digest: kernel.digest(),
        n: config.n,
        seed: config.seed,
        trials: config.trials,
        acceptance: config.acceptance,
        points,
        wall_seconds: started.elapsed().as_secs_f64(),
    }
}

fn point_result(
    config: &ExperimentConfig,
    point: usize,
    p: f64,
    report: Option<&RegimeReport>,
    records: Vec<TrialRecord>,
    mut notes: Vec<String>,
    started: Instant,
) -> Result<PointResult> {
    let aggregate = Aggregate::from_records(config.kind, &records);
    if let Some(r) = report {
        notes.extend(r.diagnostics.iter().cloned());
    }
    let meets_acceptance = aggregate.success_fraction().map(|f| f >= config.acceptance);
    Ok(PointResult {
        point,
        p,
        report: report
            .map(serde_json::to_value)
            .transpose()
            .map_err(|e| Error::Invariant(format!("report does not serialise: {e}")))?,
        predicted_interval: report.and_then(|r| r.predicted_interval),
        notes,
        meets_acceptance,
        aggregate,
        records,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

fn predict_options(config: &ExperimentConfig) -> PredictOptions {
    PredictOptions {
        omega: config.omega,
        delta: config.delta.unwrap_or_default(),
    }
}

/// Sample, measure the exact diameter and compare with the predicted
/// interval. Disconnected samples count as diameter `∞`; they are reported in
/// the connected fraction and left out of the interval fraction. Points with
/// `np ≤ 1` run without a prediction.
pub fn run_diameter_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let s = setup(config)?;
    let sampler = Sampler::new(&s.kernel);
    let options = predict_options(config);
    let mut points = Vec::new();
    for (k, &p) in s.densities.iter().enumerate() {
        let started = Instant::now();
        let mut notes = Vec::new();
        let report = if config.n as f64 * p > 1.0 {
            Some(predict_with(&s.kernel, config.n, p, &options)?)
        } else {
            notes.push(format!("np = {} ≤ 1: no prediction", config.n as f64 * p));
            None
        };
        let records = run_trials(config, k, |seed| {
            let g = sampler.sample(&params(config, p, seed)?)?;
            let d = exact_diameter(&g.graph);
            Ok(Outcome::Diameter {
                edges: g.edge_count(),
                connected: d.connected,
                diameter: d.diameter,
                bfs_sweeps_used: d.bfs_sweeps_used,
                in_interval: if d.connected {
                    report.as_ref().and_then(|r| r.predicts(d.diameter))
                } else {
                    None
                },
            })
        })?;
        points.push(point_result(config, k, p, report.as_ref(), records, notes, started)?);
    }
    Ok(finish(config, &s.kernel, points, s.started))
}

/// Count `|N(U) ∩ (V(A_j) \ U)|` for a random `U ⊆ V(A_i)` of size `u_size`
/// and compare with `S_{i,j}/4`, where
/// `S_{i,j} = n μ(A_j) (1 − (1 − K_ℓ p)^{|U|})` and `K_ℓ` is the lower
/// partition graph weight of `(A_i, A_j)`.
pub fn run_tail_experiment(
    config: &ExperimentConfig,
    cells: (usize, usize),
    u_size: usize,
) -> Result<ExperimentResult> {
    let s = setup(config)?;
    let sampler = Sampler::new(&s.kernel);
    let partition = config.partition_for(&s.kernel)?;
    let (i, j) = cells;
    if i >= partition.len() || j >= partition.len() {
        return Err(Error::Domain(format!(
            "cells ({i}, {j}) out of range for a partition of {}",
            partition.len()
        )));
    }
    let expected = config.n as f64 * partition.measures()[i];
    if 2.0 * u_size as f64 > expected {
        return Err(Error::Precondition(format!(
            "|U| = {u_size} exceeds the expected |V(A_{i})|/2 = {}",
            expected / 2.0
        )));
    }
    let lower = PartitionGraph::lower(&s.kernel, &partition)?;
    let k_l = lower.value(i, j);
    let mu_j = partition.measures()[j];
    let mut points = Vec::new();
    for (k, &p) in s.densities.iter().enumerate() {
        let started = Instant::now();
        let big_s = s_ij(config.n as f64, mu_j, k_l, p, u_size as f64);
        let mut notes = Vec::new();
        if big_s <= 0.0 {
            notes.push("S = 0: degenerate, the bound is vacuous".into());
        }
        let records = run_trials(config, k, |seed| {
            let g = sampler.sample(&params(config, p, seed)?)?;
            let membership = CellMembership::from_partition(&partition, &g.types)?;
            let members = membership.members(i);
            if 2 * u_size > members.len() {
                return Err(Error::Precondition(format!(
                    "trial seed {seed}: |U| = {u_size} exceeds |V(A_{i})|/2 = {}/2",
                    members.len()
                )));
            }
            let mut rng = rng::stream(seed, &[phase::CHOICE]);
            let u: Vec<u32> = index::sample(&mut rng, members.len(), u_size)
                .into_iter()
                .map(|x| members[x])
                .collect();
            let count = neighbor_hit_count(&g.graph, &membership, &u, i, j)?;
            Ok(Outcome::Tail {
                u_size,
                count,
                s_ij: big_s,
                violated: count as f64 <= big_s / 4.0,
            })
        })?;
        points.push(point_result(config, k, p, None, records, notes, started)?);
    }
    Ok(finish(config, &s.kernel, points, s.started))
}

/// `⌈ω⌉` with `ω` from the config, or `⌈ln ln n⌉`.
fn walk_cap(config: &ExperimentConfig) -> u32 {
    let w = config
        .omega
        .unwrap_or_else(|| (config.n as f64).ln().ln());
    w.ceil().max(1.0) as u32
}

/// Expansion along a fixed walk from a random start vertex of `A_0`.
///
/// Refuses to run unless `p ≥ ω ln n / n` and the walk has length at most
/// `ω`.
pub fn run_expansion_experiment(
    config: &ExperimentConfig,
    spec: &ExpansionSpec,
) -> Result<ExperimentResult> {
    let s = setup(config)?;
    let sampler = Sampler::new(&s.kernel);
    let n = config.n as f64;
    let omega = walk_cap(config);
    if spec.walk.is_empty() {
        return Err(Error::Precondition("the walk needs at least one cell".into()));
    }
    let len = spec.walk.len() - 1;
    if len > omega as usize {
        return Err(Error::Hypothesis(format!(
            "walk length {len} > ω = {omega}"
        )));
    }
    let threshold = omega as f64 * n.ln() / n;
    if let Some(&p) = s.densities.iter().find(|&&p| p < threshold) {
        return Err(Error::Hypothesis(format!(
            "p = {p} < ω ln n / n = {omega} · ln {} / {} = {threshold}",
            config.n, config.n
        )));
    }
    let partition = config.partition_for(&s.kernel)?;
    let lower = PartitionGraph::lower(&s.kernel, &partition)?;
    check_walk(&partition, &lower, &spec.walk)?;
    let mut points = Vec::new();
    for (k, &p) in s.densities.iter().enumerate() {
        let started = Instant::now();
        let ph = match spec.phi {
            Some(v) => v,
            None => phi(config.n, p)?.value,
        };
        let records = run_trials(config, k, |seed| {
            let g = sampler.sample(&params(config, p, seed)?)?;
            let membership = CellMembership::from_partition(&partition, &g.types)?;
            let first = membership.members(spec.walk[0]);
            if first.is_empty() {
                return Err(Error::Precondition(format!(
                    "trial seed {seed}: cell {} has no vertices",
                    spec.walk[0]
                )));
            }
            let mut rng = rng::stream(seed, &[phase::CHOICE]);
            let start = first[index::sample(&mut rng, first.len(), 1).index(0)];
            let walk = WalkSpec {
                walk: spec.walk.clone(),
                start,
                phi: ph,
                omega,
                truncation_seed: derive_seed(seed, &[phase::TRUNCATION]),
            };
            let trace = expansion_trace(&g.graph, &membership, &lower, p, &walk)?;
            Ok(Outcome::Expansion {
                start,
                satisfied: trace.all_satisfied(),
                gamma_sizes: trace.gamma_sizes,
                gamma_prime_sizes: trace.gamma_prime_sizes,
                bound: trace.bound,
            })
        })?;
        points.push(point_result(config, k, p, None, records, Vec::new(), started)?);
    }
    Ok(finish(config, &s.kernel, points, s.started))
}

fn check_walk(partition: &Partition, lower: &PartitionGraph, walk: &[usize]) -> Result<()> {
    if let Some(&c) = walk.iter().find(|&&c| c >= partition.len()) {
        return Err(Error::Precondition(format!(
            "cell {c} out of range for a partition of {}",
            partition.len()
        )));
    }
    for w in walk.windows(2) {
        if !lower.has_edge(w[0], w[1]) {
            return Err(Error::Precondition(format!(
                "cells {} and {} are not adjacent in the lower partition graph",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Coupled `G(n, K, p) ⊆ G(n, p)` with both diameters. A broken subgraph
/// relation is a sampler bug and aborts the batch.
pub fn run_coupling_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let s = setup(config)?;
    let mut points = Vec::new();
    for (k, &p) in s.densities.iter().enumerate() {
        let started = Instant::now();
        let records = run_trials(config, k, |seed| {
            let (kg, er) = coupled_pair(&s.kernel, &params(config, p, seed)?)?;
            let dk = exact_diameter(&kg.graph);
            let de = exact_diameter(&er.graph);
            Ok(Outcome::Coupling {
                edges_kernel: kg.edge_count(),
                edges_er: er.edge_count(),
                subgraph: kg.graph.is_subgraph_of(&er.graph),
                diameter_kernel: dk.diameter,
                diameter_er: de.diameter,
                ordered: (dk.connected && de.connected).then(|| dk.diameter >= de.diameter),
            })
        })?;
        points.push(point_result(config, k, p, None, records, Vec::new(), started)?);
    }
    Ok(finish(config, &s.kernel, points, s.started))
}
