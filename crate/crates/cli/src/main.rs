//! `brwlab`: seeded experiment runner for branching random walks and their traces.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brwlab::stats::RandomStreamSpec;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use commands::Plan;
use config::{default_out, CliError, CliResult, Config, RUNTIME_KEYS};

const ENV_HELP: &str = "Output directory: --out, then the config file, then $BRWLAB_OUT, then ./brwlab-out.
Exit status: 0 success, 2 invalid input (the message names the field), 3 resource bound or non-convergence.";

#[derive(Parser)]
#[command(name = "brwlab", version, about = "Branching random walks on Cayley graphs and their trace networks", after_help = ENV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

/// Every flag is also a config-file key of the same name.
#[derive(Args, Default)]
struct Opts {
    /// key=value file; flags override its entries
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    threads: Option<String>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Group: free:<d>, abelian:<d> or zprod:<n1>,<n2>,...
    #[arg(long, global = true)]
    group: Option<String>,
    /// Offspring law k:p,k:p,...
    #[arg(long, global = true)]
    p: Option<String>,
    /// Tree rooting: gw, agw or ugw
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true)]
    depth: Option<String>,
    #[arg(long, global = true)]
    horizon: Option<String>,
    #[arg(long, global = true)]
    replicas: Option<String>,
    /// Retention thresholds N for T_N
    #[arg(long = "n-sweep", global = true)]
    n_sweep: Option<String>,
    /// Shell radii for effective resistance
    #[arg(long, global = true)]
    radii: Option<String>,
    #[arg(long, global = true)]
    radius: Option<String>,
    #[arg(long, global = true)]
    tolerance: Option<String>,
    /// trace, tree:<arity>:<depth>, grid:<radius>, path:<k> or cycle:<k>
    #[arg(long, global = true)]
    network: Option<String>,
    #[arg(long, global = true)]
    windows: Option<String>,
    /// Comma-separated retention probabilities
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Bracketing crossing fractions low,high
    #[arg(long, global = true)]
    thresholds: Option<String>,
    /// Fit range lo,hi
    #[arg(long, global = true)]
    range: Option<String>,
    /// Minimum segment length in edges
    #[arg(long = "min-length", global = true)]
    min_length: Option<String>,
    #[arg(long, global = true)]
    samples: Option<String>,
    /// Criterion ids for `all`
    #[arg(long, global = true)]
    criteria: Option<String>,
}

impl Opts {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("out", &self.out),
            ("threads", &self.threads),
            ("seed", &self.seed),
            ("group", &self.group),
            ("p", &self.p),
            ("kind", &self.kind),
            ("depth", &self.depth),
            ("horizon", &self.horizon),
            ("replicas", &self.replicas),
            ("n-sweep", &self.n_sweep),
            ("radii", &self.radii),
            ("radius", &self.radius),
            ("tolerance", &self.tolerance),
            ("network", &self.network),
            ("windows", &self.windows),
            ("grid", &self.grid),
            ("thresholds", &self.thresholds),
            ("range", &self.range),
            ("min-length", &self.min_length),
            ("samples", &self.samples),
            ("criteria", &self.criteria),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample one BRW and write its trace
    #[command(after_help = "Outputs:
  trace_edges.csv     x,y,N                 edges in order of first traversal, N = traversal count
  trace_vertices.csv  x,level,degree        vertices in order of first visit
  tree.csv            vertex,parent,level   the underlying tree (root has no parent)
  simulate.json       sizes and extent")]
    Simulate,
    /// Classify recurrence from root-revisit counts
    #[command(after_help = "Keys: group, p, depth (or horizon), replicas, radius (spectral ball), seed.
Outputs:
  revisits.csv     replica,revisits_half,revisits_full,growing   cumulative root visits at horizon/2 and horizon
  recurrence.json  growing fraction, spectral radius, threshold 1/rho, verdict")]
    Recurrence,
    /// Unit flows on T_N, induced trace flows and effective resistances
    #[command(after_help = "Keys: group, p, kind, depth, seed, n-sweep, radii.
Outputs:
  flow.csv        N,retained_fraction,root_component_size,tree_energy,induced_energy,cauchy_schwarz_bound,bound_holds,effective_resistance,half_depth_induced_energy,relative_change
                  relative_change compares the induced energy at depth and depth/2
  resistance.csv  radius,effective_resistance   root to the shell of levels >= radius
  trace_flow.json  rows above plus smallest_stable_n (first N with relative_change < 0.05)")]
    TraceFlow,
    /// Spectral radius of a killed ball
    #[command(after_help = "Keys: radius, tolerance, and either group or network (trace keys apply to network=trace).
Outputs:
  spectral.json  target,radius,value,iterations,residual,tolerance")]
    Spectral,
    /// Bond percolation crossing sweeps and the p_c < 1 verdict
    #[command(after_help = "Keys: network (default trace), trace keys, windows, replicas, grid, thresholds, seed.
Outputs:
  sweep.csv         p,window,replicas,crossing_fraction,ci_low,ci_high
  percolation.json  brackets per window and the verdict")]
    Percolate,
    /// Volume growth of the trace and its exponential fit
    #[command(after_help = "Keys: trace keys and range.
Outputs:
  volume.csv   n,volume   trace vertices at word length <= n
  growth.json  c, r, curvature t-statistic")]
    Growth,
    /// Vertices separating the root from a distant shell
    #[command(after_help = "Keys: trace keys and windows.
Outputs:
  cutpoints.csv   window,vertex,element,level
  cutpoints.json  counts per window")]
    Cutpoints,
    /// Maximal line segments and the spectral lower bound they give
    #[command(after_help = "Keys: trace keys and min-length.
Outputs:
  segments.csv   start,end,length,closed   segments with at least min-length edges
  segments.json  count and lower bound on the spectral radius")]
    Segments,
    /// Root-degree and mass-transport tests on sampled trees
    #[command(name = "mtp-test", after_help = "Keys: p, kind, samples, seed.
Outputs:
  root_degree.csv  degree,observed,expected
  mtp.json         chi-square report, transport mean with interval, exact mean")]
    MtpTest,
    /// The full acceptance suite
    #[command(after_help = "Keys: seed, criteria.
Outputs:
  criterion_NN_*.csv  per-criterion data
  summary.json        outcome of every criterion")]
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Recurrence => "recurrence",
            Command::TraceFlow => "trace-flow",
            Command::Spectral => "spectral",
            Command::Percolate => "percolate",
            Command::Growth => "growth",
            Command::Cutpoints => "cutpoints",
            Command::Segments => "segments",
            Command::MtpTest => "mtp-test",
            Command::All => "all",
        }
    }

    fn plan(self, cfg: &mut Config) -> CliResult<Plan> {
        match self {
            Command::Simulate => commands::simulate(cfg),
            Command::Recurrence => commands::recurrence(cfg),
            Command::TraceFlow => commands::trace_flow(cfg),
            Command::Spectral => commands::spectral(cfg),
            Command::Percolate => commands::percolate(cfg),
            Command::Growth => commands::growth(cfg),
            Command::Cutpoints => commands::cutpoints(cfg),
            Command::Segments => commands::segments(cfg),
            Command::MtpTest => commands::mtp_test(cfg),
            Command::All => commands::all(cfg),
        }
    }
}

fn write(path: &Path, body: &str) -> CliResult<()> {
    std::fs::write(path, body).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn manifest(command: &str, config: &BTreeMap<String, String>, streams: &[(String, RandomStreamSpec)], artifacts: &[Value]) -> String {
    let streams: Vec<Value> = streams
        .iter()
        .map(|(name, s)| json!({"use": name, "master_seed": s.master_seed, "path": s.path, "key": format!("{:016x}", s.key())}))
        .collect();
    let body = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "streams": streams,
        "artifacts": artifacts,
    });
    serde_json::to_string_pretty(&body).expect("manifest serialises") + "\n"
}

fn run(cli: Cli) -> CliResult<Value> {
    let command = cli.command;
    let mut cfg = Config::new(cli.opts.config.as_deref(), cli.opts.flags())?;
    let out = PathBuf::from(cfg.text("out", &default_out()));
    let threads: usize = cfg.value("threads", "0")?;
    let plan = command.plan(&mut cfg)?;
    let mut resolved = cfg.finish(command.name())?;
    resolved.retain(|k, _| !RUNTIME_KEYS.contains(&k.as_str()));

    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::field("threads", e.to_string()))?;
    }
    std::fs::create_dir_all(&out).map_err(|source| CliError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let config_text: String = resolved.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    write(&out.join("config.txt"), &config_text)?;
    let Plan { streams, run } = plan;
    write(&out.join("manifest.json"), &manifest(command.name(), &resolved, &streams, &[]))?;

    let (record, artifacts) = run()?;
    let mut listed = Vec::new();
    for (name, body) in &artifacts {
        write(&out.join(name), body)?;
        listed.push(json!({
            "file": name,
            "bytes": body.len(),
            "sha256": hex::encode(Sha256::digest(body.as_bytes())),
        }));
    }
    write(&out.join("manifest.json"), &manifest(command.name(), &resolved, &streams, &listed))?;
    Ok(record)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(record) => {
            println!("{}", serde_json::to_string(&record).expect("records serialise"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("brwlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
