//! The fixed experiment suite: one runner per acceptance criterion, each
//! returning a pass/fail outcome, a JSON summary and CSV artifacts.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::brw::{classify_recurrence, network_recurrence, no_revisit_probability, run_brw, BrwRun, RecurrenceConfig};
use crate::electrical::{
    build_t_n, effective_resistance, flow_energy, induce_flow, tree_network, unit_flow_on_tree,
};
use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::network::Network;
use crate::percolation::{certify_pc_below_one, default_grid, estimate_pc, BracketThresholds};
use crate::stats::{growth_rate_fit, mtp_check, root_degree_test, RandomStreamSpec, DEFAULT_LEVEL};
use crate::trace::TraceNetwork;
use crate::trace_net::{
    estimate_spectral_radius, find_cutpoints, find_line_segments, group_spectral_radius, segment_lower_bound,
    volume_growth, RestrictedKernel, WalkKernel, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use crate::tree::{sample_tree, OffspringDist, RootedTree, TreeKind, DEFAULT_VERTEX_BUDGET};

/// Offspring laws used by the suite, keyed by their mean.
pub const LAW_1_05: &str = "1:0.95,2:0.05";
pub const LAW_1_20: &str = "1:0.8,2:0.2";
pub const LAW_1_35: &str = "1:0.65,2:0.35";
pub const LAW_1_50: &str = "1:0.5,2:0.5";

pub const RECURRENCE_HORIZON: u32 = 60;
/// The amenable case has no horizon attached; its returns are rare early on.
pub const ABELIAN_HORIZON: u32 = 300;
pub const RECURRENCE_REPLICAS: usize = 200;
pub const FLOW_TRACES: usize = 50;
pub const FLOW_DEPTHS: (u32, u32) = (20, 40);
pub const FLOW_THRESHOLDS: [u64; 2] = [5, 10];
pub const RESISTANCE_RADII: (u32, u32) = (10, 20);
pub const PC_TRACES: usize = 50;
pub const PC_DEPTH: u32 = 60;
pub const PC_WINDOWS: [u32; 2] = [8, 12];
pub const PC_REPLICAS: usize = 200;
pub const CALIBRATION_DEPTH: u32 = 20;
pub const GROWTH_TRACES: usize = 100;
pub const GROWTH_DEPTH: u32 = 60;
pub const GROWTH_RANGE: (usize, usize) = (5, 20);
pub const CUTPOINT_TRACES: usize = 100;
pub const CUTPOINT_DEPTH: u32 = 120;
pub const CUTPOINT_WINDOWS: [u32; 3] = [20, 30, 40];
pub const SEGMENT_TRACES: usize = 200;
pub const SEGMENT_DEPTHS: [u32; 3] = [30, 60, 90];
/// Segments need this many interior vertices for the `cos(π/6)` bound.
pub const SEGMENT_INTERIOR: usize = 5;
pub const SECOND_BRW_TRACES: usize = 50;
pub const SECOND_BRW_REPLICAS: usize = 10;
pub const SECOND_BRW_HORIZON: u32 = 40;
pub const MTP_SAMPLES: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub details: Value,
    #[serde(skip)]
    pub artifacts: Vec<(String, String)>,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<28} {}  {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.summary
        )
    }
}

pub const CRITERIA: [(u32, &str); 11] = [
    (1, "spectral-oracle"),
    (2, "recurrence-transition"),
    (3, "trace-transience"),
    (4, "percolation"),
    (5, "exponential-growth"),
    (6, "cutpoints"),
    (7, "line-segments"),
    (8, "second-brw-recurrence"),
    (9, "unimodularity"),
    (10, "electrical-exactness"),
    (11, "determinism"),
];

pub fn run_criterion(id: u32, seed: u64) -> Result<CriterionOutcome> {
    let stream = RandomStreamSpec::new(seed).child(id as u64);
    let (passed, summary, details, artifacts) = match id {
        1 => spectral_oracle()?,
        2 => recurrence_transition(&stream)?,
        3 => trace_transience(&stream)?,
        4 => percolation(&stream)?,
        5 => exponential_growth(&stream)?,
        6 => cutpoints(&stream)?,
        7 => line_segments(&stream)?,
        8 => second_brw(&stream)?,
        9 => unimodularity(&stream)?,
        10 => electrical_exactness()?,
        11 => determinism(seed)?,
        _ => return Err(Error::validation("criterion", format!("unknown criterion {id}"))),
    };
    Ok(CriterionOutcome {
        id,
        name: CRITERIA[id as usize - 1].1.into(),
        passed,
        summary,
        details,
        artifacts,
    })
}

type Parts = (bool, String, Value, Vec<(String, String)>);

fn law(text: &str) -> OffspringDist {
    OffspringDist::parse(text).expect("suite laws are valid")
}

fn group(text: &str) -> GroupSpec {
    GroupSpec::parse(text).expect("suite groups are valid")
}

/// BRW run `i` of a family, generated from `stream.child(i)`.
pub fn sample_run(spec: &GroupSpec, dist: &OffspringDist, depth: u32, stream: &RandomStreamSpec) -> Result<BrwRun> {
    let mut rng = stream.stream();
    run_brw(spec, dist, TreeKind::Gw, depth, DEFAULT_VERTEX_BUDGET, &mut rng)
}

fn sample_traces(spec: &GroupSpec, dist: &OffspringDist, depth: u32, count: usize, stream: &RandomStreamSpec) -> Result<Vec<(BrwRun, TraceNetwork)>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let run = sample_run(spec, dist, depth, &stream.child(i as u64))?;
            let trace = TraceNetwork::from_run(&run)?;
            Ok((run, trace))
        })
        .collect()
}

fn fraction(flags: impl IntoIterator<Item = bool>) -> f64 {
    let (mut yes, mut n) = (0usize, 0usize);
    for f in flags {
        n += 1;
        yes += f as usize;
    }
    yes as f64 / n.max(1) as f64
}

fn spectral_oracle() -> Result<Parts> {
    let t4 = group_spectral_radius(&group("zprod:2,2,2,2"), 30)?;
    let l9 = estimate_spectral_radius(&RestrictedKernel::path_interior(9), DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;
    let z2 = group("abelian:2");
    let radii = [10, 20, 30, 40];
    let grid = radii.iter().map(|&r| group_spectral_radius(&z2, r)).collect::<Result<Vec<_>>>()?;
    let l9_exact = (std::f64::consts::PI / 10.0).cos();
    let t4_ok = (0.856..=0.8661).contains(&t4.value);
    let l9_ok = (l9.value - l9_exact).abs() <= 1e-6;
    let monotone = grid.windows(2).all(|w| w[1].value >= w[0].value);
    let z2_ok = monotone && grid[3].value >= 0.98;
    let mut csv = String::from("graph,radius,value,iterations,residual\n");
    for (name, e) in [("T4", &t4), ("L9", &l9)].into_iter().chain(grid.iter().map(|e| ("Z2", e))) {
        let _ = writeln!(csv, "{name},{},{},{},{}", e.radius, e.value, e.iterations, e.residual);
    }
    Ok((
        t4_ok && l9_ok && z2_ok,
        format!(
            "T4 r30 = {:.6}, L9 = {:.9} (exact {:.9}), Z2 r40 = {:.5}, monotone = {monotone}",
            t4.value, l9.value, l9_exact, grid[3].value
        ),
        json!({"t4": t4, "l9": l9, "l9_exact": l9_exact, "z2": grid}),
        vec![("spectral.csv".into(), csv)],
    ))
}

fn recurrence_transition(stream: &RandomStreamSpec) -> Result<Parts> {
    let config = |horizon| RecurrenceConfig {
        horizon,
        replicas: RECURRENCE_REPLICAS,
        ..RecurrenceConfig::default()
    };
    let free = group("free:2");
    let high = classify_recurrence(&free, &law(LAW_1_35), &config(RECURRENCE_HORIZON), &stream.child(1))?;
    let low = classify_recurrence(&free, &law(LAW_1_05), &config(RECURRENCE_HORIZON), &stream.child(2))?;
    let grid = classify_recurrence(&group("abelian:2"), &law(LAW_1_05), &config(ABELIAN_HORIZON), &stream.child(3))?;
    let stable_low = 1.0 - low.growing_fraction;
    let never_high = no_revisit_probability(free.degree() as u32, &law(LAW_1_35), RECURRENCE_HORIZON);
    let passed = high.growing_fraction >= 0.99 && stable_low >= 0.95 && grid.growing_fraction >= 0.99;
    let mut csv = String::from("case,replica,revisits_half,revisits_full,growing\n");
    for (name, rep) in [("free2_m1.35", &high), ("free2_m1.05", &low), ("z2_m1.05", &grid)] {
        for r in &rep.replicas {
            let _ = writeln!(csv, "{name},{},{},{},{}", r.replica, r.at_half_horizon, r.at_horizon, r.growing());
        }
    }
    Ok((
        passed,
        format!(
            "free:2 threshold {:.4}: m=1.35 growing {:.3} (exact no-revisit probability {:.4}), m=1.05 stable {:.3}; Z2 m=1.05 growing {:.3} (horizon {ABELIAN_HORIZON})",
            high.threshold, high.growing_fraction, never_high, stable_low, grid.growing_fraction
        ),
        json!({
            "free_high": summary_of(&high),
            "free_high_no_revisit_probability": never_high,
            "free_low": summary_of(&low),
            "abelian": summary_of(&grid),
        }),
        vec![("recurrence.csv".into(), csv)],
    ))
}

fn summary_of(r: &crate::brw::RecurrenceReport) -> Value {
    json!({
        "group": r.group,
        "mean_offspring": r.mean_offspring,
        "horizon": r.horizon,
        "growing_fraction": r.growing_fraction,
        "growing_interval": r.growing_interval,
        "spectral": r.spectral,
        "threshold": r.threshold,
        "predicted": r.predicted,
        "verdict": r.verdict,
    })
}

#[derive(Clone, Debug, Serialize)]
struct FlowRow {
    trace: usize,
    threshold: u64,
    energy_short: Option<f64>,
    energy_long: Option<f64>,
    tree_energy_long: Option<f64>,
    relative_change: Option<f64>,
    bound_ok: bool,
    thomson_ok: bool,
}

fn flow_energies(run: &BrwRun, trace: &TraceNetwork, n: u64, depth: u32) -> Result<Option<(f64, f64, bool, bool)>> {
    let tn = build_t_n(&run.labelled, trace, n)?;
    let flow = match unit_flow_on_tree(run.labelled.tree(), Some(&tn.root_component), depth) {
        Ok(f) => f,
        Err(Error::NoSurvivingRay { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let induced = induce_flow(&flow, &run.labelled, trace);
    let tree_energy = flow_energy(&flow).energy;
    let energy = flow_energy(&induced).energy;
    let bound_ok = energy <= n as f64 * tree_energy * (1.0 + 1e-12);
    let reff = effective_resistance(trace, trace.root(), &induced.sinks)?;
    let thomson_ok = reff <= energy * (1.0 + 1e-9);
    let tree_net = tree_network(run.labelled.tree());
    let tree_reff = effective_resistance(&tree_net, 0, &flow.sinks)?;
    Ok(Some((energy, tree_energy, bound_ok, thomson_ok && tree_reff <= tree_energy * (1.0 + 1e-9))))
}

fn shell_resistance(net: &Network, radius: u32) -> Result<Option<f64>> {
    let shell: Vec<usize> = (0..net.len()).filter(|&v| net.level(v) >= radius).collect();
    if shell.is_empty() {
        return Ok(None);
    }
    effective_resistance(net, net.root(), &shell).map(Some)
}

fn trace_transience(stream: &RandomStreamSpec) -> Result<Parts> {
    let spec = group("free:2");
    let dist = law(LAW_1_05);
    let (short, long) = FLOW_DEPTHS;
    let per_trace: Vec<(Vec<FlowRow>, Option<f64>, Option<f64>)> = (0..FLOW_TRACES)
        .into_par_iter()
        .map(|i| {
            let s = stream.child(i as u64);
            let a = sample_run(&spec, &dist, short, &s)?;
            let b = sample_run(&spec, &dist, long, &s)?;
            let ta = TraceNetwork::from_run(&a)?;
            let tb = TraceNetwork::from_run(&b)?;
            let mut rows = Vec::new();
            for n in FLOW_THRESHOLDS {
                let ea = flow_energies(&a, &ta, n, short)?;
                let eb = flow_energies(&b, &tb, n, long)?;
                let change = match (ea, eb) {
                    (Some(x), Some(y)) => Some((y.0 - x.0).abs() / x.0),
                    _ => None,
                };
                rows.push(FlowRow {
                    trace: i,
                    threshold: n,
                    energy_short: ea.map(|e| e.0),
                    energy_long: eb.map(|e| e.0),
                    tree_energy_long: eb.map(|e| e.1),
                    relative_change: change,
                    bound_ok: ea.is_none_or(|e| e.2) && eb.is_none_or(|e| e.2),
                    thomson_ok: ea.is_none_or(|e| e.3) && eb.is_none_or(|e| e.3),
                });
            }
            let r1 = shell_resistance(&tb, RESISTANCE_RADII.0)?;
            let r2 = shell_resistance(&tb, RESISTANCE_RADII.1)?;
            Ok((rows, r1, r2))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("trace,N,energy_depth20,energy_depth40,tree_energy_depth40,relative_change,reff_r10,reff_r20\n");
    let mut stable = Vec::new();
    let mut bound_violations = 0;
    let mut thomson_violations = 0;
    let mut energy_ok_count = 0;
    let mut reff_ok_count = 0;
    for (rows, r1, r2) in &per_trace {
        let energy_ok = rows.iter().all(|r| r.relative_change.is_some_and(|c| c < 0.05));
        let reff_ok = matches!((r1, r2), (Some(a), Some(b)) if (b - a).abs() / a < 0.1);
        energy_ok_count += energy_ok as usize;
        reff_ok_count += reff_ok as usize;
        stable.push(energy_ok && reff_ok);
        for r in rows {
            bound_violations += !r.bound_ok as usize;
            thomson_violations += !r.thomson_ok as usize;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                r.trace,
                r.threshold,
                opt(r.energy_short),
                opt(r.energy_long),
                opt(r.tree_energy_long),
                opt(r.relative_change),
                opt(*r1),
                opt(*r2)
            );
        }
    }
    let frac = fraction(stable.iter().copied());
    let passed = frac >= 0.9 && bound_violations == 0 && thomson_violations == 0;
    Ok((
        passed,
        format!(
            "stable traces {frac:.2} (energy {energy_ok_count}/{FLOW_TRACES}, resistance {reff_ok_count}/{FLOW_TRACES}); Cauchy-Schwarz violations {bound_violations}, Thomson violations {thomson_violations}"
        ),
        json!({
            "stable_fraction": frac,
            "energy_stable": energy_ok_count,
            "resistance_stable": reff_ok_count,
            "bound_violations": bound_violations,
            "thomson_violations": thomson_violations,
        }),
        vec![("trace_flow.csv".into(), csv)],
    ))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn percolation(stream: &RandomStreamSpec) -> Result<Parts> {
    let spec = group("free:2");
    let dist = law(LAW_1_05);
    let grid = default_grid();
    let thresholds = BracketThresholds::default();
    let traces = sample_traces(&spec, &dist, PC_DEPTH, PC_TRACES, &stream.child(0))?;
    let verdicts: Vec<Option<f64>> = traces
        .par_iter()
        .enumerate()
        .map(|(i, (_, tr))| {
            if tr.max_level() < PC_WINDOWS[1] {
                return Ok(None);
            }
            let v = certify_pc_below_one(tr, &PC_WINDOWS, PC_REPLICAS, &grid, thresholds, &stream.child(1).child(i as u64))?;
            Ok(v.upper)
        })
        .collect::<Result<_>>()?;
    let good = fraction(verdicts.iter().map(|u| u.is_some_and(|u| u <= 0.95)));
    let binary = Network::complete_tree(2, CALIBRATION_DEPTH as usize);
    let calib = estimate_pc(&binary, CALIBRATION_DEPTH, PC_REPLICAS, &grid, thresholds, &stream.child(2))?;
    let calib_ok = matches!((calib.lower, calib.upper), (Some(l), Some(u)) if l <= 0.5 && 0.5 <= u);
    let mut csv = String::from("trace,extent,upper_bracket\n");
    for (i, ((_, tr), u)) in traces.iter().zip(&verdicts).enumerate() {
        let _ = writeln!(csv, "{i},{},{}", tr.max_level(), opt(*u));
    }
    Ok((
        good >= 0.9 && calib_ok,
        format!(
            "upper bracket <= 0.95 in {good:.2} of traces (windows {PC_WINDOWS:?}); binary-tree bracket [{}, {}]",
            opt(calib.lower),
            opt(calib.upper)
        ),
        json!({"trace_fraction": good, "uppers": verdicts, "calibration": calib}),
        vec![
            ("percolation_traces.csv".into(), csv),
            ("percolation_calibration.csv".into(), crate::percolation::sweep_csv(&[calib])),
        ],
    ))
}

fn exponential_growth(stream: &RandomStreamSpec) -> Result<Parts> {
    let dist = law(LAW_1_05);
    let (lo, hi) = GROWTH_RANGE;
    let fits = |spec: &GroupSpec, s: &RandomStreamSpec| -> Result<Vec<crate::stats::GrowthFit>> {
        sample_traces(spec, &dist, GROWTH_DEPTH, GROWTH_TRACES, s)?
            .iter()
            .map(|(_, tr)| {
                let v: Vec<f64> = volume_growth(tr, hi as u32).into_iter().map(|x| x as f64).collect();
                growth_rate_fit(&v, (lo, hi))
            })
            .collect()
    };
    let free = fits(&group("free:2"), &stream.child(1))?;
    let grid = fits(&group("abelian:2"), &stream.child(2))?;
    let exp_frac = fraction(free.iter().map(|f| f.r > 1.02));
    let flagged = fraction(grid.iter().map(|f| f.r <= 1.1 && f.curvature_t() < -2.0));
    let mut csv = String::from("group,trace,r,c,curvature_t\n");
    for (name, set) in [("free:2", &free), ("abelian:2", &grid)] {
        for (i, f) in set.iter().enumerate() {
            let _ = writeln!(csv, "{name},{i},{},{},{}", f.r, f.c, f.curvature_t());
        }
    }
    Ok((
        exp_frac >= 0.95 && flagged >= 0.95,
        format!("free:2 r > 1.02 in {exp_frac:.2}; Z2 flagged non-exponential in {flagged:.2}"),
        json!({"free_fraction": exp_frac, "z2_flagged": flagged}),
        vec![("growth.csv".into(), csv)],
    ))
}

fn cutpoints(stream: &RandomStreamSpec) -> Result<Parts> {
    let path = Network::path(3);
    let cycle = Network::cycle(12);
    let oracle_ok = find_cutpoints(&path, 3)? == vec![1, 2]
        && (1..=cycle.max_level()).all(|w| find_cutpoints(&cycle, w).is_ok_and(|c| c.is_empty()));
    let traces = sample_traces(&group("free:2"), &law(LAW_1_05), CUTPOINT_DEPTH, CUTPOINT_TRACES, stream)?;
    let counts: Vec<Option<Vec<usize>>> = traces
        .par_iter()
        .map(|(_, tr)| {
            CUTPOINT_WINDOWS
                .iter()
                .map(|&w| find_cutpoints(tr, w).map(|c| c.len()).ok())
                .collect::<Option<Vec<_>>>()
        })
        .collect();
    let stable = fraction(counts.iter().map(|c| c.as_ref().is_some_and(|c| c.windows(2).all(|w| w[0] == w[1]))));
    let mut csv = String::from("trace,extent,count_w20,count_w30,count_w40\n");
    for (i, ((_, tr), c)) in traces.iter().zip(&counts).enumerate() {
        let cells: Vec<String> = match c {
            Some(c) => c.iter().map(|x| x.to_string()).collect(),
            None => vec![String::new(); 3],
        };
        let _ = writeln!(csv, "{i},{},{}", tr.max_level(), cells.join(","));
    }
    Ok((
        oracle_ok && stable >= 0.9,
        format!("path/cycle oracles {}; counts stable over {CUTPOINT_WINDOWS:?} in {stable:.2} of traces", if oracle_ok { "ok" } else { "wrong" }),
        json!({"oracle_ok": oracle_ok, "stable_fraction": stable}),
        vec![("cutpoints.csv".into(), csv)],
    ))
}

fn line_segments(stream: &RandomStreamSpec) -> Result<Parts> {
    let spec = group("free:2");
    let dist = law(LAW_1_05);
    let min_len = SEGMENT_INTERIOR + 1;
    let rows: Vec<Vec<(bool, Option<f64>)>> = (0..SEGMENT_TRACES)
        .into_par_iter()
        .map(|i| {
            SEGMENT_DEPTHS
                .iter()
                .map(|&d| {
                    let run = sample_run(&spec, &dist, d, &stream.child(i as u64))?;
                    let tr = TraceNetwork::from_run(&run)?;
                    let has = find_line_segments(&tr, min_len)? > 0;
                    let bound = if has { segment_lower_bound(&tr)?.map(|b| b.bound.value) } else { None };
                    Ok((has, bound))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let fractions: Vec<f64> = (0..SEGMENT_DEPTHS.len()).map(|j| fraction(rows.iter().map(|r| r[j].0))).collect();
    let monotone = fractions.windows(2).all(|w| w[1] >= w[0]);
    let cos6 = (std::f64::consts::PI / 6.0).cos();
    let min_bound = rows.iter().flat_map(|r| r.iter().filter_map(|x| x.1)).fold(f64::INFINITY, f64::min);
    let bound_ok = min_bound >= cos6 - 1e-8;
    let mut csv = String::from("trace,depth,has_segment,bound\n");
    for (i, r) in rows.iter().enumerate() {
        for (j, (has, b)) in r.iter().enumerate() {
            let _ = writeln!(csv, "{i},{},{has},{}", SEGMENT_DEPTHS[j], opt(*b));
        }
    }
    Ok((
        fractions[1] >= 0.5 && monotone && bound_ok,
        format!(
            "fraction with {SEGMENT_INTERIOR}-interior segments at depths {SEGMENT_DEPTHS:?}: {fractions:.3?}; smallest certified bound {min_bound:.4} (cos(pi/6) = {cos6:.4})"
        ),
        json!({"fractions": fractions, "monotone": monotone, "min_bound": min_bound, "cos_pi_6": cos6}),
        vec![("segments.csv".into(), csv)],
    ))
}

fn second_brw(stream: &RandomStreamSpec) -> Result<Parts> {
    let traces = sample_traces(&group("free:2"), &law(LAW_1_05), PC_DEPTH, SECOND_BRW_TRACES, &stream.child(0))?;
    let second = law(LAW_1_50);
    let config = RecurrenceConfig {
        horizon: SECOND_BRW_HORIZON,
        replicas: SECOND_BRW_REPLICAS,
        ..RecurrenceConfig::default()
    };
    let reports = traces
        .par_iter()
        .enumerate()
        .map(|(i, (_, tr))| network_recurrence(tr, WalkKernel::Simple, &second, &config, &stream.child(1).child(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let growing = fraction(reports.iter().flat_map(|r| r.replicas.iter().map(|x| x.growing())));
    let mut csv = String::from("trace,replica,revisits_half,revisits_full\n");
    for (i, r) in reports.iter().enumerate() {
        for x in &r.replicas {
            let _ = writeln!(csv, "{i},{},{},{}", x.replica, x.at_half_horizon, x.at_horizon);
        }
    }
    Ok((
        growing >= 0.98,
        format!("growing revisits in {growing:.3} of (trace, replica) pairs"),
        json!({"growing_fraction": growing}),
        vec![("second_brw.csv".into(), csv)],
    ))
}

/// `E[Σ_{x~o} 1/deg(x)]` for a rooting of the law: the root's child count
/// follows the rooting law and each child has `1 + K` neighbours.
pub fn exact_mtp_mean(dist: &OffspringDist, kind: TreeKind) -> f64 {
    let root_mean: f64 = dist.root_law(kind).iter().map(|&(k, p)| k as f64 * p).sum();
    let inv: f64 = dist.atoms().iter().map(|&(k, p)| p / (k as f64 + 1.0)).sum();
    root_mean * inv
}

fn unimodularity(stream: &RandomStreamSpec) -> Result<Parts> {
    let dist = law(LAW_1_50);
    let sample = |kind: TreeKind, s: RandomStreamSpec| -> Result<Vec<RootedTree>> {
        (0..MTP_SAMPLES)
            .into_par_iter()
            .map(|i| sample_tree(&dist, kind, 2, DEFAULT_VERTEX_BUDGET, &mut s.child(i as u64).stream()))
            .collect()
    };
    let ugw = sample(TreeKind::Ugw, stream.child(1))?;
    let gw = sample(TreeKind::Gw, stream.child(2))?;
    let degree = root_degree_test(&ugw, &dist, TreeKind::Ugw, DEFAULT_LEVEL)?;
    let mtp_ugw = mtp_check(&ugw, DEFAULT_LEVEL)?;
    let mtp_gw = mtp_check(&gw, DEFAULT_LEVEL)?;
    let exact_ugw = exact_mtp_mean(&dist, TreeKind::Ugw);
    let exact_gw = exact_mtp_mean(&dist, TreeKind::Gw);
    let gw_interval = mtp_gw.interval.unwrap();
    let passed = degree.passed && mtp_ugw.passed && !mtp_gw.passed && gw_interval.contains(exact_gw);
    Ok((
        passed,
        format!(
            "root-degree chi2 p = {:.3}; MTP mean UGW {:.4} (exact {exact_ugw}), GW {:.4} (exact {exact_gw:.4}, rejected: {})",
            degree.p_value.unwrap_or(f64::NAN),
            mtp_ugw.statistic,
            mtp_gw.statistic,
            !mtp_gw.passed
        ),
        json!({
            "root_degree": degree,
            "mtp_ugw": mtp_ugw,
            "mtp_gw": mtp_gw,
            "exact_ugw": exact_ugw,
            "exact_gw": exact_gw,
        }),
        Vec::new(),
    ))
}

fn electrical_exactness() -> Result<Parts> {
    let mut worst: f64 = 0.0;
    let mut thomson_ok = true;
    for d in 1..=12u32 {
        for (arity, ratio) in [(2u32, 0.5f64), (3, 1.0 / 3.0)] {
            let t = RootedTree::complete(arity, d);
            let flow = unit_flow_on_tree(&t, None, d)?;
            let e = flow_energy(&flow).energy;
            let series: f64 = (1..=d as i32).map(|n| ratio.powi(n)).sum();
            worst = worst.max((e - series).abs());
            if t.len() <= 200_000 {
                let net = tree_network(&t);
                let r = effective_resistance(&net, 0, &flow.sinks)?;
                thomson_ok &= r <= e * (1.0 + 1e-9);
            }
        }
    }
    let mut path_err: f64 = 0.0;
    for k in 1..=50 {
        let r = effective_resistance(&Network::path(k), 0, &[k])?;
        path_err = path_err.max((r - k as f64).abs());
    }
    Ok((
        worst <= 1e-9 && path_err <= 1e-9 && thomson_ok,
        format!("max energy error {worst:.1e}, max path resistance error {path_err:.1e}, Thomson {}", if thomson_ok { "holds" } else { "violated" }),
        json!({"energy_error": worst, "path_error": path_err, "thomson_ok": thomson_ok}),
        Vec::new(),
    ))
}

const REPEATED: [u32; 5] = [4, 5, 7, 8, 9];

/// Re-runs the cheaper stochastic criteria and compares serialised output.
fn determinism(seed: u64) -> Result<Parts> {
    let mut identical = true;
    let mut checked = Vec::new();
    for id in REPEATED {
        let a = run_criterion(id, seed)?;
        let b = run_criterion(id, seed)?;
        let same = serde_json::to_string(&a.details).unwrap() == serde_json::to_string(&b.details).unwrap()
            && a.artifacts == b.artifacts;
        identical &= same;
        checked.push(json!({"criterion": id, "identical": same}));
    }
    Ok((
        identical,
        format!("criteria {REPEATED:?} repeated with seed {seed}: {}", if identical { "byte-identical" } else { "outputs differ" }),
        json!({"checked": checked}),
        Vec::new(),
    ))
}
