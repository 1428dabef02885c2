//! Seeded Monte Carlo checks of the library against exact laws computed here.

use brwlab::electrical::{build_t_n, effective_resistance};
use brwlab::network::Network;
use brwlab::percolation::{default_grid, estimate_pc, BracketThresholds};
use brwlab::stats::{chi_square, RandomStreamSpec, DEFAULT_LEVEL};
use brwlab::trace_net::{estimate_ends, srw_on_trace, step_law, walk_step, WalkConfig, WalkKernel};
use brwlab::tree::{extract_stretched_binary, sample_tree, DEFAULT_VERTEX_BUDGET};
use brwlab::{run_brw, GroupSpec, OffspringDist, RootedTree, TraceNetwork, TreeKind};
use rayon::prelude::*;

fn group(s: &str) -> GroupSpec {
    GroupSpec::parse(s).unwrap()
}

fn law(s: &str) -> OffspringDist {
    OffspringDist::parse(s).unwrap()
}

fn trace(spec: &GroupSpec, dist: &OffspringDist, depth: u32, stream: RandomStreamSpec) -> TraceNetwork {
    let run = run_brw(spec, dist, TreeKind::Gw, depth, DEFAULT_VERTEX_BUDGET, &mut stream.stream()).unwrap();
    TraceNetwork::from_run(&run).unwrap()
}

/// Merges trailing categories until each expected count is at least 5.
fn pooled(observed: &[u64], probs: &[f64], n: f64) -> (Vec<u64>, Vec<f64>) {
    let (mut o, mut p) = (Vec::new(), Vec::new());
    let (mut acc_o, mut acc_p) = (0, 0.0);
    for (&ob, &pr) in observed.iter().zip(probs) {
        acc_o += ob;
        acc_p += pr;
        if acc_p * n >= 5.0 {
            o.push(acc_o);
            p.push(acc_p);
            acc_o = 0;
            acc_p = 0.0;
        }
    }
    if acc_p > 0.0 {
        *o.last_mut().unwrap() += acc_o;
        *p.last_mut().unwrap() += acc_p;
    }
    (o, p)
}

#[test]
fn srw_steps_are_uniform_over_generators() {
    for name in ["free:2", "abelian:3", "zprod:2,3"] {
        let spec = group(name);
        let mut rng = RandomStreamSpec::new(1).stream();
        let mut counts = vec![0u64; spec.degree()];
        for _ in 0..100_000 {
            counts[spec.sample_generator(&mut rng)] += 1;
        }
        let uniform = vec![1.0 / spec.degree() as f64; spec.degree()];
        assert!(chi_square(&counts, &uniform, DEFAULT_LEVEL).unwrap().passed, "{name}");
    }
}

#[test]
fn free_group_steps_move_outward_three_times_in_four() {
    let spec = group("free:2");
    let x = spec.decode("a.B").unwrap();
    let mut rng = RandomStreamSpec::new(2).stream();
    let n = 40_000;
    let out = (0..n).filter(|_| spec.word_length(&spec.srw_step(&x, &mut rng)) == 3).count() as f64;
    let sd = (n as f64 * 0.75 * 0.25).sqrt();
    assert!((out - 0.75 * n as f64).abs() < 3.0 * sd);
}

#[test]
fn gw_level_sizes_have_mean_m_to_the_n() {
    let dist = law("1:0.5,2:0.5");
    let depth = 8;
    let sizes: Vec<Vec<usize>> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let t = sample_tree(&dist, TreeKind::Gw, depth, DEFAULT_VERTEX_BUDGET, &mut RandomStreamSpec::new(3).child(i).stream()).unwrap();
            t.level_sizes()
        })
        .collect();
    for n in 0..=depth as usize {
        let xs: Vec<f64> = sizes.iter().map(|s| s[n] as f64).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let se = (var / xs.len() as f64).sqrt();
        let exact = 1.5f64.powi(n as i32);
        assert!((mean - exact).abs() <= 3.0 * se.max(1e-12), "level {n}: {mean} vs {exact}");
    }
}

/// Bottom-up search for a stretched binary skeleton, written independently
/// of the library's top-down search.
fn has_skeleton(tree: &RootedTree, k: u32) -> bool {
    let n = tree.len();
    let depth = tree.depth();
    let mut usable = vec![false; n];
    // reach[b][v]: a usable vertex lies at most b steps below v
    let mut reach = vec![vec![false; n]; k as usize + 1];
    for v in (0..n).rev() {
        usable[v] = if tree.level(v) + k > depth {
            true
        } else {
            tree.children(v).filter(|&c| reach[k as usize - 1][c]).count() >= 2
        };
        reach[0][v] = usable[v];
        for b in 1..=k as usize {
            reach[b][v] = usable[v] || tree.children(v).any(|c| reach[b - 1][c]);
        }
    }
    reach[k as usize][0]
}

#[test]
fn stretched_binary_skeletons_are_common_and_match_search() {
    let dist = law("1:0.5,2:0.5");
    let found: Vec<(bool, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let t = sample_tree(&dist, TreeKind::Gw, 30, DEFAULT_VERTEX_BUDGET, &mut RandomStreamSpec::new(4).child(i).stream()).unwrap();
            (extract_stretched_binary(&t, 6).is_some(), has_skeleton(&t, 6))
        })
        .collect();
    assert!(found.iter().all(|(a, b)| a == b));
    let frac = found.iter().filter(|f| f.0).count() as f64 / found.len() as f64;
    assert!(frac >= 0.95, "{frac}");
}

#[test]
fn ray_positions_follow_the_tree_distance_law() {
    let spec = group("free:2");
    let dist = law("1:0.5,2:0.5");
    let n = 10usize;
    // distance law of SRW on the 4-regular tree by convolution
    let mut p = vec![0.0; n + 2];
    p[0] = 1.0;
    for _ in 0..n {
        let mut q = vec![0.0; n + 2];
        q[1] += p[0];
        for d in 1..=n {
            q[d - 1] += p[d] * 0.25;
            q[d + 1] += p[d] * 0.75;
        }
        p = q;
    }
    let reps = 20_000u64;
    let lengths: Vec<usize> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let run = run_brw(&spec, &dist, TreeKind::Gw, n as u32, DEFAULT_VERTEX_BUDGET, &mut RandomStreamSpec::new(5).child(i).stream()).unwrap();
            let tree = run.labelled.tree();
            let mut v = tree.root();
            while tree.level(v) < n as u32 {
                v = tree.children(v).start;
            }
            spec.word_length(run.positions.get(v))
        })
        .collect();
    let mut observed = vec![0u64; n + 1];
    for l in lengths {
        observed[l] += 1;
    }
    let (o, e) = pooled(&observed, &p[..=n], reps as f64);
    assert!(chi_square(&o, &e, DEFAULT_LEVEL).unwrap().passed);
}

#[test]
fn dense_grid_traces_fill_the_radius_three_ball() {
    let spec = group("abelian:2");
    let dist = law("2:1");
    let ball = spec.ball(3, 1000).unwrap();
    assert_eq!(ball.len(), 25);
    let filled = (0..1000u64)
        .into_par_iter()
        .filter(|&i| {
            let tr = trace(&spec, &dist, 14, RandomStreamSpec::new(6).child(i));
            ball.iter().all(|x| tr.contains(x))
        })
        .count();
    assert!(filled >= 990, "{filled}");
}

#[test]
fn retained_fraction_grows_with_threshold() {
    let spec = group("free:2");
    let dist = law("1:0.95,2:0.05");
    let at_five: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let run = run_brw(&spec, &dist, TreeKind::Gw, 40, DEFAULT_VERTEX_BUDGET, &mut RandomStreamSpec::new(7).child(i).stream()).unwrap();
            let tr = TraceNetwork::from_run(&run).unwrap();
            let fr: Vec<f64> = (1..=10).map(|n| build_t_n(&run.labelled, &tr, n).unwrap().retained_fraction()).collect();
            assert!(fr.windows(2).all(|w| w[0] <= w[1]));
            fr[4]
        })
        .collect();
    let mean = at_five.iter().sum::<f64>() / at_five.len() as f64;
    assert!(mean >= 0.9, "{mean}");
}

#[test]
fn walks_on_transient_traces_escape() {
    let spec = group("free:2");
    let dist = law("1:0.95,2:0.05");
    let tr = trace(&spec, &dist, 60, RandomStreamSpec::new(8));
    let grid = Network::grid_ball(30);
    let run = |net: &Network, steps, absorb| {
        let cfg = WalkConfig {
            steps,
            replicas: 400,
            absorb_level: absorb,
        };
        srw_on_trace(net, &cfg, &RandomStreamSpec::new(9)).unwrap()
    };
    let short = run(&tr, 10_000, Some(tr.max_level()));
    let long = run(&tr, 20_000, Some(tr.max_level()));
    // escape before absorption has probability 1 / (deg(o) R_eff(o, frontier))
    let frontier: Vec<usize> = (0..tr.len()).filter(|&v| tr.level(v) >= tr.max_level()).collect();
    let reff = effective_resistance(&tr, tr.root(), &frontier).unwrap();
    let exact = 1.0 / (tr.degree(tr.root()) as f64 * reff);
    let sd = (exact * (1.0 - exact) / short.replicas as f64).sqrt();
    assert!((short.escape_fraction - exact).abs() <= 4.0 * sd, "{} vs {exact}", short.escape_fraction);
    let (a, b) = (short.mean_returns(), long.mean_returns());
    assert!((b - a).abs() <= 0.05 * a.max(1.0), "{a} vs {b}");
    // without absorption the grid walk keeps returning
    let g_short = run(&grid, 10_000, None);
    let g_long = run(&grid, 20_000, None);
    assert!(g_long.mean_returns() > 1.5 * g_short.mean_returns());
}

#[test]
fn biased_first_step_matches_stored_counts() {
    let spec = group("free:2");
    let dist = law("1:0.5,2:0.5");
    let tr = (0..)
        .map(|i| trace(&spec, &dist, 12, RandomStreamSpec::new(10).child(i)))
        .find(|t| t.degree(t.root()) >= 2 && t.neighbors(t.root()).map(|(_, c)| c).collect::<std::collections::BTreeSet<_>>().len() >= 2)
        .unwrap();
    let root = tr.root();
    let probs = step_law(&tr, root, WalkKernel::Counts);
    let total: u64 = tr.neighbors(root).map(|(_, c)| c).sum();
    let exact: Vec<f64> = tr.neighbors(root).map(|(_, c)| c as f64 / total as f64).collect();
    assert_eq!(probs, exact);
    let targets: Vec<usize> = tr.neighbors(root).map(|(w, _)| w).collect();
    let mut rng = RandomStreamSpec::new(11).stream();
    let mut counts = vec![0u64; targets.len()];
    for _ in 0..20_000 {
        let w = walk_step(&tr, root, WalkKernel::Counts, &mut rng).unwrap();
        counts[targets.iter().position(|&t| t == w).unwrap()] += 1;
    }
    assert!(chi_square(&counts, &exact, DEFAULT_LEVEL).unwrap().passed);
}

#[test]
fn trace_ends_increase_with_radius() {
    let spec = group("zprod:2,2,2,2");
    let dist = law("1:0.95,2:0.05");
    let growing = (0..100u64)
        .into_par_iter()
        .filter(|&i| {
            let tr = trace(&spec, &dist, 80, RandomStreamSpec::new(12).child(i));
            let near = estimate_ends(&tr, 5, 25).unwrap();
            let far = estimate_ends(&tr, 20, 40).unwrap();
            far >= near
        })
        .count();
    assert!(growing >= 90, "{growing}");
}

#[test]
fn square_lattice_brackets_one_half() {
    let net = Network::grid_ball(40);
    for (i, window) in [30u32, 40].into_iter().enumerate() {
        let est = estimate_pc(&net, window, 200, &default_grid(), BracketThresholds::default(), &RandomStreamSpec::new(13).child(i as u64)).unwrap();
        let (lo, hi) = (est.lower.unwrap(), est.upper.unwrap());
        assert!(lo <= 0.5 && 0.5 <= hi, "window {window}: [{lo}, {hi}]");
    }
}
