//! Subcommand planning (configuration only) and execution.

use std::fmt::Write as _;

use brwlab::brw::no_revisit_probability;
use brwlab::electrical::{build_t_n, effective_resistance, flow_energy, induce_flow, unit_flow_on_tree, FlowAssignment};
use brwlab::experiments::{exact_mtp_mean, run_criterion, CRITERIA};
use brwlab::percolation::{certify_pc_below_one, sweep_csv, BracketThresholds};
use brwlab::stats::{growth_rate_fit, mtp_check, purpose, root_degree_test, RandomStreamSpec, DEFAULT_LEVEL};
use brwlab::trace_net::{
    estimate_spectral_radius, find_cutpoints, line_segments, segment_lower_bound,
    volume_growth, RestrictedKernel, WalkKernel,
};
use brwlab::tree::{sample_tree, DEFAULT_VERTEX_BUDGET};
use brwlab::{classify_recurrence, run_brw, BrwRun, GroupSpec, Network, OffspringDist, RecurrenceConfig, TraceNetwork, TreeKind};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CliError, CliResult, Config};

pub type Artifacts = Vec<(String, String)>;

/// A fully configured command: the random streams it will use and the
/// deferred computation.
pub struct Plan {
    pub streams: Vec<(String, RandomStreamSpec)>,
    pub run: Box<dyn FnOnce() -> CliResult<(Value, Artifacts)>>,
}

fn json_artifact(name: &str, value: &Value) -> (String, String) {
    (format!("{name}.json"), serde_json::to_string_pretty(value).expect("json values serialise") + "\n")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

struct TraceParams {
    group: GroupSpec,
    dist: OffspringDist,
    kind: TreeKind,
    depth: u32,
    stream: RandomStreamSpec,
}

impl TraceParams {
    fn read(cfg: &mut Config, default_depth: &str) -> CliResult<Self> {
        let group = cfg.parsed("group", "free:2", GroupSpec::parse)?;
        let dist = cfg.parsed("p", "1:0.95,2:0.05", OffspringDist::parse)?;
        let kind = cfg.value("kind", "gw")?;
        let depth = cfg.value("depth", default_depth)?;
        let seed = cfg.value("seed", "1")?;
        Ok(TraceParams {
            group,
            dist,
            kind,
            depth,
            stream: RandomStreamSpec::new(seed).child(purpose::TREE),
        })
    }

    fn sample(&self) -> CliResult<(BrwRun, TraceNetwork)> {
        let mut rng = self.stream.stream();
        let run = run_brw(&self.group, &self.dist, self.kind, self.depth, DEFAULT_VERTEX_BUDGET, &mut rng)?;
        let trace = TraceNetwork::from_run(&run)?;
        Ok((run, trace))
    }
}

fn require_positive(field: &str, v: usize) -> CliResult<usize> {
    if v == 0 {
        return Err(CliError::field(field, "must be positive"));
    }
    Ok(v)
}

pub fn simulate(cfg: &mut Config) -> CliResult<Plan> {
    let t = TraceParams::read(cfg, "20")?;
    Ok(Plan {
        streams: vec![("trace".into(), t.stream.clone())],
        run: Box::new(move || {
            let (run, trace) = t.sample()?;
            let record = json!({
                "group": t.group.presentation(),
                "offspring": t.dist.to_config_string(),
                "kind": t.kind,
                "depth": t.depth,
                "tree_vertices": run.labelled.tree().len(),
                "trace_vertices": trace.len(),
                "trace_edges": trace.edge_count(),
                "traversals": trace.total_edge_count(),
                "max_level": trace.max_level(),
            });
            Ok((
                record.clone(),
                vec![
                    ("trace_edges.csv".into(), trace.to_edge_csv()),
                    ("trace_vertices.csv".into(), trace.to_vertex_csv()),
                    ("tree.csv".into(), run.labelled.tree().to_parent_csv()),
                    json_artifact("simulate", &record),
                ],
            ))
        }),
    })
}

pub fn recurrence(cfg: &mut Config) -> CliResult<Plan> {
    let group = cfg.parsed("group", "free:2", GroupSpec::parse)?;
    let dist = cfg.parsed("p", "1:0.95,2:0.05", OffspringDist::parse)?;
    let depth: u32 = cfg.value("depth", "60")?;
    let horizon: u32 = if cfg.has("horizon") { cfg.value("horizon", "60")? } else { depth };
    let replicas = require_positive("replicas", cfg.value("replicas", "200")?)?;
    let radius = cfg.value("radius", "40")?;
    let seed = cfg.value("seed", "1")?;
    if horizon == 0 {
        return Err(CliError::field("horizon", "must be positive"));
    }
    let stream = RandomStreamSpec::new(seed).child(purpose::RECURRENCE);
    let config = RecurrenceConfig {
        horizon,
        replicas,
        spectral_radius: radius,
        ..RecurrenceConfig::default()
    };
    Ok(Plan {
        streams: vec![("replicas, path + [replica]".into(), stream.clone())],
        run: Box::new(move || {
            let report = classify_recurrence(&group, &dist, &config, &stream)?;
            let mut csv = String::from("replica,revisits_half,revisits_full,growing\n");
            for r in &report.replicas {
                let _ = writeln!(csv, "{},{},{},{}", r.replica, r.at_half_horizon, r.at_horizon, r.growing());
            }
            let never = group
                .is_regular_tree()
                .then(|| no_revisit_probability(group.degree() as u32, &dist, horizon));
            let record = json!({
                "group": report.group,
                "mean_offspring": report.mean_offspring,
                "horizon": report.horizon,
                "replicas": replicas,
                "growing_fraction": report.growing_fraction,
                "growing_interval": report.growing_interval,
                "spectral_radius": report.spectral,
                "threshold": report.threshold,
                "predicted": report.predicted,
                "verdict": report.verdict,
                "no_revisit_probability": never,
            });
            Ok((record.clone(), vec![("revisits.csv".into(), csv), json_artifact("recurrence", &record)]))
        }),
    })
}

/// Relative energy change between half and full depth counted as stable.
const STABLE_CHANGE: f64 = 0.05;

pub fn trace_flow(cfg: &mut Config) -> CliResult<Plan> {
    let t = TraceParams::read(cfg, "40")?;
    let sweep: Vec<u64> = cfg.list("n-sweep", "1,2,5,10,20")?;
    let radii: Vec<u32> = cfg.list("radii", "10,20")?;
    if sweep.contains(&0) {
        return Err(CliError::field("n-sweep", "thresholds must be positive"));
    }
    Ok(Plan {
        streams: vec![("trace".into(), t.stream.clone())],
        run: Box::new(move || {
            let (run, trace) = t.sample()?;
            let mut csv = String::from(
                "N,retained_fraction,root_component_size,tree_energy,induced_energy,cauchy_schwarz_bound,bound_holds,effective_resistance,half_depth_induced_energy,relative_change\n",
            );
            let induced_energy = |keep: &[bool], depth: u32| -> CliResult<Option<(f64, f64, FlowAssignment)>> {
                match unit_flow_on_tree(run.labelled.tree(), Some(keep), depth) {
                    Ok(f) => {
                        let induced = induce_flow(&f, &run.labelled, &trace);
                        Ok(Some((flow_energy(&f).energy, flow_energy(&induced).energy, induced)))
                    }
                    Err(brwlab::Error::NoSurvivingRay { .. }) => Ok(None),
                    Err(e) => Err(e.into()),
                }
            };
            let mut rows = Vec::new();
            let mut smallest_stable = None;
            for &n in &sweep {
                let tn = build_t_n(&run.labelled, &trace, n)?;
                let full = induced_energy(&tn.root_component, t.depth)?;
                let half = if t.depth >= 2 { induced_energy(&tn.root_component, t.depth / 2)? } else { None };
                let (tree_e, induced_e, reff) = match &full {
                    Some((tree_e, induced_e, induced)) => {
                        let reff = effective_resistance(&trace, trace.root(), &induced.sinks)?;
                        (Some(*tree_e), Some(*induced_e), Some(reff))
                    }
                    None => (None, None, None),
                };
                let half_e = half.map(|h| h.1);
                let change = match (induced_e, half_e) {
                    (Some(a), Some(b)) if b > 0.0 => Some((a - b).abs() / b),
                    _ => None,
                };
                if smallest_stable.is_none() && change.is_some_and(|c| c < STABLE_CHANGE) {
                    smallest_stable = Some(n);
                }
                let bound = tree_e.map(|e| n as f64 * e);
                let holds = match (induced_e, bound) {
                    (Some(a), Some(b)) => Some(a <= b * (1.0 + 1e-12)),
                    _ => None,
                };
                let _ = writeln!(
                    csv,
                    "{n},{},{},{},{},{},{},{},{},{}",
                    tn.retained_fraction(),
                    tn.root_component_size(),
                    opt(tree_e),
                    opt(induced_e),
                    opt(bound),
                    holds.map(|h| h.to_string()).unwrap_or_default(),
                    opt(reff),
                    opt(half_e),
                    opt(change)
                );
                rows.push(json!({
                    "N": n,
                    "tree_energy": tree_e,
                    "induced_energy": induced_e,
                    "bound_holds": holds,
                    "effective_resistance": reff,
                    "half_depth_induced_energy": half_e,
                    "relative_change": change,
                }));
            }
            let mut rcsv = String::from("radius,effective_resistance\n");
            let mut shells = Vec::new();
            for &r in &radii {
                let sinks: Vec<usize> = (0..trace.len()).filter(|&v| trace.level(v) >= r).collect();
                let reff = if sinks.is_empty() || r == 0 {
                    None
                } else {
                    Some(effective_resistance(&trace, trace.root(), &sinks)?)
                };
                let _ = writeln!(rcsv, "{r},{}", opt(reff));
                shells.push(json!({"radius": r, "effective_resistance": reff}));
            }
            let record = json!({
                "depth": t.depth,
                "trace_vertices": trace.len(),
                "flows": rows,
                "smallest_stable_n": smallest_stable,
                "shells": shells,
            });
            Ok((
                record.clone(),
                vec![("flow.csv".into(), csv), ("resistance.csv".into(), rcsv), json_artifact("trace_flow", &record)],
            ))
        }),
    })
}

/// Named fixed networks, or `trace` for a sampled BRW trace.
enum NetworkChoice {
    Trace(Box<TraceParams>),
    Fixed(String, Network),
    PathInterior(usize),
}

fn network_choice(cfg: &mut Config, default: &str, trace_depth: &str) -> CliResult<NetworkChoice> {
    let text = cfg.text("network", default);
    let bad = || CliError::field("network", format!("{text:?}: expected trace, tree:<arity>:<depth>, grid:<radius>, path:<k> or cycle:<k>"));
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
    Ok(match parts.as_slice() {
        ["trace"] => NetworkChoice::Trace(Box::new(TraceParams::read(cfg, trace_depth)?)),
        ["tree", a, d] if num(a)? >= 1 => NetworkChoice::Fixed(text.clone(), Network::complete_tree(num(a)?, num(d)?)),
        ["grid", r] => NetworkChoice::Fixed(text.clone(), Network::grid_ball(num(r)? as i64)),
        ["path", k] if num(k)? >= 1 => {
            let k = num(k)?;
            NetworkChoice::PathInterior(k)
        }
        ["cycle", k] if num(k)? >= 3 => NetworkChoice::Fixed(text.clone(), Network::cycle(num(k)?)),
        _ => return Err(bad()),
    })
}

impl NetworkChoice {
    fn streams(&self) -> Vec<(String, RandomStreamSpec)> {
        match self {
            NetworkChoice::Trace(t) => vec![("trace".into(), t.stream.clone())],
            _ => Vec::new(),
        }
    }

    fn build(self) -> CliResult<(String, Network)> {
        match self {
            NetworkChoice::Trace(t) => {
                let (_, trace) = t.sample()?;
                Ok(("trace".into(), trace.network().clone()))
            }
            NetworkChoice::Fixed(name, net) => Ok((name, net)),
            NetworkChoice::PathInterior(k) => Ok((format!("path:{k}"), Network::path(k))),
        }
    }
}

pub fn spectral(cfg: &mut Config) -> CliResult<Plan> {
    let radius: u32 = cfg.value("radius", "30")?;
    let tol: f64 = cfg.value("tolerance", "1e-8")?;
    if !(tol > 0.0) {
        return Err(CliError::field("tolerance", "must be positive"));
    }
    let target = if cfg.has("network") {
        Err(network_choice(cfg, "trace", "60")?)
    } else {
        Ok(cfg.parsed("group", "free:2", GroupSpec::parse)?)
    };
    let streams = match &target {
        Err(n) => n.streams(),
        Ok(_) => Vec::new(),
    };
    Ok(Plan {
        streams,
        run: Box::new(move || {
            let (name, est) = match target {
                Ok(group) => {
                    let kernel = if group.is_regular_tree() {
                        RestrictedKernel::radial_tree_ball(group.degree() as u32, radius)
                    } else {
                        RestrictedKernel::cayley_ball(&group, radius, DEFAULT_VERTEX_BUDGET)?
                    };
                    (group.presentation(), estimate_spectral_radius(&kernel, tol, brwlab::trace_net::DEFAULT_MAX_ITERATIONS)?)
                }
                Err(NetworkChoice::PathInterior(k)) => (
                    format!("path:{k}"),
                    estimate_spectral_radius(&RestrictedKernel::path_interior(k), tol, brwlab::trace_net::DEFAULT_MAX_ITERATIONS)?,
                ),
                Err(choice) => {
                    let (name, net) = choice.build()?;
                    let kernel = RestrictedKernel::network_ball(&net, radius, WalkKernel::Simple);
                    (name, estimate_spectral_radius(&kernel, tol, brwlab::trace_net::DEFAULT_MAX_ITERATIONS)?)
                }
            };
            let record = json!({
                "target": name,
                "radius": est.radius,
                "value": est.value,
                "iterations": est.iterations,
                "residual": est.residual,
                "tolerance": tol,
            });
            Ok((record.clone(), vec![json_artifact("spectral", &record)]))
        }),
    })
}

pub fn percolate(cfg: &mut Config) -> CliResult<Plan> {
    let choice = network_choice(cfg, "trace", "60")?;
    if matches!(choice, NetworkChoice::PathInterior(_)) {
        return Err(CliError::field("network", "path targets are only available for `spectral`"));
    }
    let windows: Vec<u32> = cfg.list("windows", "8,12")?;
    let replicas = require_positive("replicas", cfg.value("replicas", "200")?)?;
    let grid: Vec<f64> = if cfg.has("grid") {
        cfg.list("grid", "")?
    } else {
        cfg.text("grid", "0.025..1 step 0.025");
        brwlab::percolation::default_grid()
    };
    let th: Vec<f64> = cfg.list("thresholds", "0.05,0.5")?;
    let seed: u64 = cfg.value("seed", "1")?;
    let [low, high] = th[..] else {
        return Err(CliError::field("thresholds", "expected two values low,high"));
    };
    if !(0.0 <= low && low <= high && high <= 1.0) {
        return Err(CliError::field("thresholds", "need 0 <= low <= high <= 1"));
    }
    if windows.is_empty() || windows.contains(&0) {
        return Err(CliError::field("windows", "windows must be positive"));
    }
    let stream = RandomStreamSpec::new(seed).child(purpose::PERCOLATION);
    let mut streams = choice.streams();
    streams.push(("percolation, path + [window, replica]".into(), stream.clone()));
    Ok(Plan {
        streams,
        run: Box::new(move || {
            let (name, net) = choice.build()?;
            if let Some(&w) = windows.iter().find(|&&w| w > net.max_level()) {
                return Err(CliError::field("windows", format!("window {w} exceeds the network extent {}", net.max_level())));
            }
            let verdict = certify_pc_below_one(&net, &windows, replicas, &grid, BracketThresholds { low, high }, &stream)?;
            let record = json!({
                "network": name,
                "windows": windows,
                "replicas": replicas,
                "thresholds": {"low": low, "high": high},
                "brackets": verdict.estimates.iter().map(|e| json!({"window": e.window, "lower": e.lower, "upper": e.upper})).collect::<Vec<_>>(),
                "upper": verdict.upper,
                "certified": verdict.certified,
                "verdict": verdict.verdict,
            });
            Ok((
                record.clone(),
                vec![("sweep.csv".into(), sweep_csv(&verdict.estimates)), json_artifact("percolation", &record)],
            ))
        }),
    })
}

pub fn growth(cfg: &mut Config) -> CliResult<Plan> {
    let t = TraceParams::read(cfg, "60")?;
    let range: Vec<usize> = cfg.list("range", "5,20")?;
    let [lo, hi] = range[..] else {
        return Err(CliError::field("range", "expected two values lo,hi"));
    };
    Ok(Plan {
        streams: vec![("trace".into(), t.stream.clone())],
        run: Box::new(move || {
            let (_, trace) = t.sample()?;
            let volume = volume_growth(&trace, hi as u32);
            let values: Vec<f64> = volume.iter().map(|&v| v as f64).collect();
            let fit = growth_rate_fit(&values, (lo, hi))?;
            let mut csv = String::from("n,volume\n");
            for (n, v) in volume.iter().enumerate() {
                let _ = writeln!(csv, "{n},{v}");
            }
            let record = json!({
                "range": [lo, hi],
                "c": fit.c,
                "r": fit.r,
                "curvature_t": fit.curvature_t(),
                "fit": fit,
            });
            Ok((record.clone(), vec![("volume.csv".into(), csv), json_artifact("growth", &record)]))
        }),
    })
}

pub fn cutpoints(cfg: &mut Config) -> CliResult<Plan> {
    let t = TraceParams::read(cfg, "120")?;
    let windows: Vec<u32> = cfg.list("windows", "20,30,40")?;
    Ok(Plan {
        streams: vec![("trace".into(), t.stream.clone())],
        run: Box::new(move || {
            let (_, trace) = t.sample()?;
            let mut csv = String::from("window,vertex,element,level\n");
            let mut counts = Vec::new();
            for &w in &windows {
                let cuts = find_cutpoints(&trace, w).map_err(|e| CliError::field("windows", e.to_string()))?;
                for &v in &cuts {
                    let _ = writeln!(csv, "{w},{v},{},{}", trace.spec().encode(trace.element(v)), trace.level(v));
                }
                counts.push(cuts.len());
            }
            let stable = counts.windows(2).all(|c| c[0] == c[1]);
            let record = json!({"windows": windows, "counts": counts, "stable": stable, "extent": trace.max_level()});
            Ok((record.clone(), vec![("cutpoints.csv".into(), csv), json_artifact("cutpoints", &record)]))
        }),
    })
}

pub fn segments(cfg: &mut Config) -> CliResult<Plan> {
    let t = TraceParams::read(cfg, "60")?;
    let min_len: usize = cfg.value("min-length", "6")?;
    Ok(Plan {
        streams: vec![("trace".into(), t.stream.clone())],
        run: Box::new(move || {
            let (_, trace) = t.sample()?;
            let segs = line_segments(&trace);
            let mut csv = String::from("start,end,length,closed\n");
            let spec = trace.spec();
            for s in segs.iter().filter(|s| s.length() >= min_len) {
                let a = s.vertices[0];
                let b = *s.vertices.last().unwrap();
                let _ = writeln!(csv, "{},{},{},{}", spec.encode(trace.element(a)), spec.encode(trace.element(b)), s.length(), a == b);
            }
            let count = segs.iter().filter(|s| s.length() >= min_len).count();
            let bound = segment_lower_bound(&trace)?;
            let record = json!({
                "min_length": min_len,
                "segments": count,
                "longest": segs.iter().map(|s| s.length()).max(),
                "spectral_lower_bound": bound.as_ref().map(|b| b.bound.value),
                "closed_form": bound.as_ref().map(|b| b.closed_form),
            });
            Ok((record.clone(), vec![("segments.csv".into(), csv), json_artifact("segments", &record)]))
        }),
    })
}

pub fn mtp_test(cfg: &mut Config) -> CliResult<Plan> {
    let dist = cfg.parsed("p", "1:0.5,2:0.5", OffspringDist::parse)?;
    let kind: TreeKind = cfg.value("kind", "ugw")?;
    let samples = require_positive("samples", cfg.value("samples", "100000")?)?;
    let seed: u64 = cfg.value("seed", "1")?;
    let stream = RandomStreamSpec::new(seed).child(purpose::MTP);
    Ok(Plan {
        streams: vec![("samples, path + [sample]".into(), stream.clone())],
        run: Box::new(move || {
            let trees = (0..samples)
                .into_par_iter()
                .map(|i| sample_tree(&dist, kind, 2, DEFAULT_VERTEX_BUDGET, &mut stream.child(i as u64).stream()))
                .collect::<brwlab::Result<Vec<_>>>()?;
            let law = dist.root_law(kind);
            let mut observed = vec![0u64; law.len()];
            for t in &trees {
                let k = t.child_count(t.root()) as u32;
                if let Some(slot) = law.iter().position(|&(j, _)| j == k) {
                    observed[slot] += 1;
                }
            }
            let mut csv = String::from("degree,observed,expected\n");
            for (&(k, p), o) in law.iter().zip(&observed) {
                let _ = writeln!(csv, "{k},{o},{}", p * samples as f64);
            }
            let degree = root_degree_test(&trees, &dist, kind, DEFAULT_LEVEL)?;
            let mtp = mtp_check(&trees, DEFAULT_LEVEL)?;
            let record = json!({
                "kind": kind,
                "samples": samples,
                "root_degree": degree,
                "mtp": mtp,
                "exact_mean": exact_mtp_mean(&dist, kind),
            });
            Ok((record.clone(), vec![("root_degree.csv".into(), csv), json_artifact("mtp", &record)]))
        }),
    })
}

pub fn all(cfg: &mut Config) -> CliResult<Plan> {
    let seed: u64 = cfg.value("seed", "1")?;
    let all_ids: Vec<String> = CRITERIA.iter().map(|c| c.0.to_string()).collect();
    let ids: Vec<u32> = cfg.list("criteria", &all_ids.join(","))?;
    if let Some(bad) = ids.iter().find(|&&i| !(1..=CRITERIA.len() as u32).contains(&i)) {
        return Err(CliError::field("criteria", format!("no criterion {bad}")));
    }
    let streams = ids
        .iter()
        .map(|&i| (format!("criterion {i}"), RandomStreamSpec::new(seed).child(i as u64)))
        .collect();
    Ok(Plan {
        streams,
        run: Box::new(move || {
            let mut artifacts = Vec::new();
            let mut results = Vec::new();
            for id in ids {
                let o = run_criterion(id, seed)?;
                eprintln!("{}", o.line());
                for (name, body) in &o.artifacts {
                    artifacts.push((format!("criterion_{:02}_{name}", o.id), body.clone()));
                }
                results.push(o);
            }
            let passed = results.iter().all(|o| o.passed);
            let record = json!({
                "seed": seed,
                "passed": passed,
                "criteria": results,
            });
            artifacts.push(json_artifact("summary", &record));
            let brief = json!({
                "passed": passed,
                "criteria": results.iter().map(|o| json!({"id": o.id, "name": o.name, "passed": o.passed})).collect::<Vec<_>>(),
            });
            Ok((brief, artifacts))
        }),
    })
}
