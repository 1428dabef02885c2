use std::collections::{HashMap, VecDeque};

use brwlab::electrical::{build_t_n, flow_energy, induce_flow, tree_network, unit_flow_on_tree, FlowAssignment};
use brwlab::percolation::percolate;
use brwlab::stats::RandomStreamSpec;
use brwlab::trace_net::find_cutpoints;
use brwlab::tree::{sample_tree, DEFAULT_VERTEX_BUDGET};
use brwlab::{run_brw, BrwRun, GroupElement, GroupSpec, Network, OffspringDist, TraceNetwork, TreeKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GROUPS: [&str; 5] = ["free:1", "free:2", "abelian:2", "abelian:3", "zprod:2,3"];
const LAWS: [&str; 3] = ["1:0.95,2:0.05", "1:0.5,2:0.5", "1:0.3,2:0.5,3:0.2"];

fn element(spec: &GroupSpec, word: &[usize]) -> GroupElement {
    word.iter().fold(spec.identity(), |x, &s| spec.mul_generator(&x, s % spec.degree()))
}

/// Word lengths by breadth-first search of the Cayley graph.
fn cayley_distances(spec: &GroupSpec, radius: usize) -> HashMap<GroupElement, usize> {
    let mut dist = HashMap::from([(spec.identity(), 0)]);
    let mut queue = VecDeque::from([spec.identity()]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == radius {
            continue;
        }
        for y in spec.neighbors(&x) {
            if !dist.contains_key(&y) {
                dist.insert(y.clone(), d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

fn brw(group: &str, law: &str, depth: u32, seed: u64) -> (BrwRun, TraceNetwork) {
    let spec = GroupSpec::parse(group).unwrap();
    let dist = OffspringDist::parse(law).unwrap();
    let run = run_brw(&spec, &dist, TreeKind::Gw, depth, DEFAULT_VERTEX_BUDGET, &mut RandomStreamSpec::new(seed).stream()).unwrap();
    let trace = TraceNetwork::from_run(&run).unwrap();
    (run, trace)
}

fn words() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..6, 0..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_forms_are_unique(g in 0..GROUPS.len(), w in words()) {
        let spec = GroupSpec::parse(GROUPS[g]).unwrap();
        let x = element(&spec, &w);
        prop_assert_eq!(spec.decode(&spec.encode(&x)).unwrap(), x.clone());
        prop_assert_eq!(element(&spec, &spec.word(&x)), x.clone());
        prop_assert_eq!(spec.word(&x).len(), spec.word_length(&x));
    }

    #[test]
    fn inverses_and_associativity(g in 0..GROUPS.len(), a in words(), b in words(), c in words()) {
        let spec = GroupSpec::parse(GROUPS[g]).unwrap();
        let (a, b, c) = (element(&spec, &a), element(&spec, &b), element(&spec, &c));
        prop_assert_eq!(spec.multiply(&a, &spec.inverse(&a)), spec.identity());
        prop_assert_eq!(spec.multiply(&spec.inverse(&a), &a), spec.identity());
        prop_assert_eq!(spec.multiply(&spec.multiply(&a, &b), &c), spec.multiply(&a, &spec.multiply(&b, &c)));
    }

    #[test]
    fn word_length_is_cayley_distance(g in 0..GROUPS.len(), w in prop::collection::vec(0usize..6, 0..6)) {
        let spec = GroupSpec::parse(GROUPS[g]).unwrap();
        let x = element(&spec, &w);
        let dist = cayley_distances(&spec, 6);
        prop_assert_eq!(dist.get(&x).copied(), Some(spec.word_length(&x)));
    }

    #[test]
    fn trace_counts_every_tree_edge_once(g in 0..GROUPS.len(), l in 0..LAWS.len(), depth in 0u32..10, seed: u64) {
        let (run, trace) = brw(GROUPS[g], LAWS[l], depth, seed);
        let tree = run.labelled.tree();
        prop_assert_eq!(trace.total_edge_count(), tree.len() as u64 - 1);
        prop_assert!(trace.is_connected());
        for e in trace.edges() {
            let (x, y) = (trace.element(e.a), trace.element(e.b));
            prop_assert!(spec_step(trace.spec(), x, y));
        }
        for v in 0..tree.len() {
            prop_assert_eq!(trace.element(trace.vertex_of_tree(v)), run.positions.get(v));
        }
    }

    #[test]
    fn t_n_grows_with_the_threshold(l in 1..LAWS.len(), depth in 1u32..10, seed: u64) {
        let (run, trace) = brw("free:2", LAWS[l], depth, seed);
        let subtrees: Vec<_> = (1..=6).map(|n| build_t_n(&run.labelled, &trace, n).unwrap()).collect();
        for pair in subtrees.windows(2) {
            prop_assert!(pair[0].retained.iter().zip(&pair[1].retained).all(|(&lo, &hi)| !lo || hi));
            prop_assert!(pair[0].root_component_size() <= pair[1].root_component_size());
        }
    }

    #[test]
    fn unit_flows_conserve_and_induce_conserving_flows(l in 1..LAWS.len(), depth in 1u32..9, seed: u64) {
        let (run, trace) = brw("free:2", LAWS[l], depth, seed);
        let tree = run.labelled.tree();
        prop_assume!(tree.level_sizes().len() > depth as usize);
        let flow = unit_flow_on_tree(tree, None, depth).unwrap();
        let net = tree_network(tree);
        prop_assert!(flow.divergence_defect(&net) < 1e-9);
        let induced = induce_flow(&flow, &run.labelled, &trace);
        let div = induced.divergence(&trace);
        prop_assert!(div.iter().sum::<f64>().abs() < 1e-9);
        if !induced.sinks.contains(&induced.source) {
            prop_assert!(induced.divergence_defect(&trace) < 1e-9);
        }
        prop_assert!(flow_energy(&induced).energy.is_finite());
    }

    #[test]
    fn flows_are_antisymmetric(k in 2usize..20, t in 0.1f64..5.0) {
        let net = Network::path(k);
        let both = FlowAssignment::from_directed(&net, 0, vec![k], &[(0, 1, t), (1, 0, -t)]).unwrap();
        let one = FlowAssignment::from_directed(&net, 0, vec![k], &[(1, 0, -t)]).unwrap();
        prop_assert_eq!(&both.theta, &one.theta);
        prop_assert!(FlowAssignment::from_directed(&net, 0, vec![k], &[(0, 1, t), (1, 0, t)]).is_err());
    }

    #[test]
    fn percolation_is_monotone_in_p(radius in 2i64..8, p in 0.0f64..1.0, q in 0.0f64..1.0, seed: u64) {
        let net = Network::grid_ball(radius);
        let (lo, hi) = (p.min(q), p.max(q));
        let a = percolate(&net, lo, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = percolate(&net, hi, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(a.kept.iter().zip(&b.kept).all(|(&x, &y)| !x || y));
        prop_assert!(a.root_cluster_size <= b.root_cluster_size);
        prop_assert!(a.root_extent <= b.root_extent);
    }

    #[test]
    fn cutpoints_persist_as_the_window_grows(g in 0..GROUPS.len(), depth in 2u32..14, seed: u64) {
        let (_, trace) = brw(GROUPS[g], "1:0.8,2:0.2", depth, seed);
        let top = trace.max_level();
        for w in 1..top {
            let near = find_cutpoints(&trace, w).unwrap();
            let far = find_cutpoints(&trace, w + 1).unwrap();
            prop_assert!(near.iter().all(|x| far.contains(x)), "window {}: {:?} vs {:?}", w, near, far);
        }
    }

    #[test]
    fn sampled_trees_respect_depth_and_support(l in 0..LAWS.len(), depth in 0u32..10, seed: u64) {
        let dist = OffspringDist::parse(LAWS[l]).unwrap();
        let t = sample_tree(&dist, TreeKind::Gw, depth, DEFAULT_VERTEX_BUDGET, &mut RandomStreamSpec::new(seed).stream()).unwrap();
        prop_assert!(t.depth() <= depth);
        for v in 0..t.len() {
            if t.level(v) < depth {
                prop_assert!(dist.prob(t.child_count(v) as u32) > 0.0);
            } else {
                prop_assert_eq!(t.child_count(v), 0);
            }
        }
    }
}

fn spec_step(spec: &GroupSpec, x: &GroupElement, y: &GroupElement) -> bool {
    (0..spec.degree()).any(|s| &spec.mul_generator(x, s) == y)
}
