use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use irgraph::experiments::{
    self, ExpansionSpec, ExperimentConfig, ExperimentKind, ExperimentResult, KernelRef, Sweep,
};
use irgraph::graphalg::{exact_diameter, CsrGraph};
use irgraph::partition::{check_diff2, delta_bounds_with, DeltaOptions};
use irgraph::regimes::{predict_with, PredictOptions};
use irgraph::sampler::{coupled_pair, sample_graph, SampleParams};
use irgraph::{Error, Kernel};

#[derive(Parser)]
#[command(name = "irgraph", version, about = "Diameters of inhomogeneous random graphs G(n, K, p)")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write (x, y) series files next to the output.
    #[arg(long, global = true)]
    plot_data: bool,
}

#[derive(Args, Clone)]
struct Model {
    /// Kernel file (TOML).
    #[arg(long)]
    kernel: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Give `np` instead of `p`.
    #[arg(long, conflicts_with = "p")]
    np: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
}

impl Model {
    fn kernel(&self) -> Result<Kernel> {
        let path = self.kernel.as_ref().context("--kernel is required")?;
        Ok(Kernel::load(path)?)
    }

    fn n(&self) -> Result<usize> {
        self.n.context("--n is required")
    }

    fn p(&self) -> Result<f64> {
        let n = self.n()? as f64;
        match (self.p, self.np) {
            (Some(p), _) => Ok(p),
            (None, Some(np)) => Ok(np / n),
            (None, None) => bail!("give --p or --np"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph and write it as an edge list with a metadata sidecar.
    Sample {
        #[command(flatten)]
        model: Model,
        /// Also write the coupled G(n, p) graph to `<out>.er`.
        #[arg(long)]
        coupled: bool,
    },
    /// Exact diameter of an edge-list file or of a fresh sample.
    Diameter {
        #[arg(long, conflicts_with = "kernel")]
        graph: Option<PathBuf>,
        #[command(flatten)]
        model: Model,
    },
    /// Partition-graph diameter bounds of a kernel.
    Deltas {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        start_cells: Option<usize>,
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// Predicted diameter interval and regime.
    Predict {
        #[command(flatten)]
        model: Model,
    },
    /// Run a Monte Carlo experiment.
    Experiment {
        #[arg(long)]
        kind: Option<ExperimentKind>,
        #[command(flatten)]
        model: Model,
    },
    /// Run an expansion experiment along a walk of cells.
    Expansion {
        /// Comma-separated cell indices, e.g. `0,1,2`.
        #[arg(long, value_delimiter = ',')]
        walk: Vec<usize>,
        #[arg(long)]
        phi: Option<u32>,
        #[command(flatten)]
        model: Model,
    },
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn sample_params(model: &Model, seed: u64) -> Result<SampleParams> {
    let mut params = SampleParams::new(model.n()?, model.p()?, seed)?;
    params.omega = model.omega;
    Ok(params)
}

fn config_for(common: &Common, model: &Model, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let kernel = model.kernel()?;
            let mut c = ExperimentConfig::new(
                kind.unwrap_or(ExperimentKind::Diameter),
                &kernel,
                model.n()?,
                model.p()?,
            );
            if let Some(path) = &model.kernel {
                c.kernel = KernelRef::Path(path.clone());
            }
            c
        }
    };
    if common.config.is_some() {
        if let Some(path) = &model.kernel {
            cfg.kernel = KernelRef::Path(std::path::absolute(path)?);
        }
        if let Some(n) = model.n {
            cfg.n = n;
        }
        if model.p.is_some() || model.np.is_some() {
            cfg.p = Some(Sweep::One(model.p()?));
            cfg.np = None;
            cfg.np_exponent = None;
        }
    }
    if let Some(k) = kind {
        cfg.kind = k;
    }
    if let Some(w) = model.omega {
        cfg.omega = Some(w);
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(w) = common.parallel {
        cfg.parallel = w;
    }
    if let Some(out) = &common.out {
        // Relative to the working directory, unlike paths inside the config.
        cfg.output = Some(std::path::absolute(out)?);
    }
    Ok(cfg)
}

fn report_experiment(cfg: &ExperimentConfig, result: &ExperimentResult, plot: bool) -> Result<()> {
    let out = cfg.output.as_ref().map(|p| cfg.resolve(p));
    if let Some(path) = &out {
        experiments::write_result(result, path)?;
        eprintln!("wrote {}", path.display());
        if plot {
            for f in experiments::write_plot_data(result, path.with_extension(""))? {
                eprintln!("wrote {}", f.display());
            }
        }
    } else if plot {
        bail!("--plot-data needs an output path");
    }
    let points: Vec<_> = result
        .points
        .iter()
        .map(|p| {
            json!({
                "p": p.p,
                "predicted_interval": p.predicted_interval,
                "meets_acceptance": p.meets_acceptance,
                "aggregate": p.aggregate,
                "notes": p.notes,
            })
        })
        .collect();
    print_json(&json!({
        "kind": result.kind,
        "kernel": result.kernel_id,
        "n": result.n,
        "trials": result.trials,
        "seed": result.seed,
        "wall_seconds": result.wall_seconds,
        "points": points,
    }))
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.common;
    match cli.command {
        Command::Sample { model, coupled } => {
            let kernel = model.kernel()?;
            let params = sample_params(&model, common.seed.unwrap_or(0))?;
            let out = common.out.clone().context("--out is required")?;
            let graphs = if coupled {
                let (kg, er) = coupled_pair(&kernel, &params)?;
                vec![(kg, out.clone()), (er, PathBuf::from(format!("{}.er", out.display())))]
            } else {
                vec![(sample_graph(&kernel, &params)?, out)]
            };
            for (g, path) in graphs {
                let meta = g.write(&path)?;
                eprintln!("wrote {} and {}", path.display(), meta.display());
                print_json(&g.meta())?;
            }
            Ok(())
        }
        Command::Diameter { graph, model } => {
            let g = match graph {
                Some(path) => CsrGraph::read_edge_list(&path)?,
                None => {
                    let kernel = model.kernel()?;
                    sample_graph(&kernel, &sample_params(&model, common.seed.unwrap_or(0))?)?.graph
                }
            };
            let d = exact_diameter(&g);
            print_json(&json!({
                "n": g.len(),
                "edges": g.edge_count(),
                "diameter": d.diameter,
                "connected": d.connected,
                "bfs_sweeps_used": d.bfs_sweeps_used,
            }))
        }
        Command::Deltas { kernel, start_cells, max_cells } => {
            let kernel = Kernel::load(&kernel)?;
            let mut options = DeltaOptions::default();
            if let Some(c) = start_cells {
                options.start_cells = c;
            }
            if let Some(c) = max_cells {
                options.max_cells = c;
            }
            let bounds = delta_bounds_with(&kernel, &options)?;
            let diff2 = check_diff2(&bounds).ok();
            print_json(&json!({ "kernel": kernel.id(), "bounds": bounds, "within_two": diff2 }))
        }
        Command::Predict { model } => {
            let kernel = model.kernel()?;
            let options = PredictOptions { omega: model.omega, ..Default::default() };
            let report = predict_with(&kernel, model.n()?, model.p()?, &options)?;
            for d in &report.diagnostics {
                eprintln!("warning: {d}");
            }
            print_json(&report)
        }
        Command::Experiment { kind, model } => {
            let cfg = config_for(&common, &model, kind)?;
            let result = experiments::run(&cfg)?;
            report_experiment(&cfg, &result, common.plot_data)
        }
        Command::Expansion { walk, phi, model } => {
            let mut cfg = config_for(&common, &model, Some(ExperimentKind::Expansion))?;
            if !walk.is_empty() {
                cfg.expansion = Some(ExpansionSpec { walk, phi });
            } else if let (Some(spec), Some(phi)) = (cfg.expansion.as_mut(), phi) {
                spec.phi = Some(phi);
            }
            let result = experiments::run(&cfg)?;
            report_experiment(&cfg, &result, common.plot_data)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Hypothesis(_)) => 2,
        Some(Error::Invariant(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
