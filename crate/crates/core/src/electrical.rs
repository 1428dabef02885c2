//! Flows, energies and effective resistances with unit resistances, on
//! family trees, their `T_N` subtrees, and trace networks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::brw::LabelledTree;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::trace::TraceNetwork;
use crate::tree::RootedTree;

pub const RESISTANCE_TOLERANCE: f64 = 1e-9;
pub const RESISTANCE_MAX_ITERATIONS: usize = 100_000;

/// The family tree as a network: edge `v - 1` joins `parent(v)` to `v`.
pub fn tree_network(tree: &RootedTree) -> Network {
    let edges = (1..tree.len()).map(|v| (tree.parent(v).unwrap(), v, 1));
    let levels = (0..tree.len()).map(|v| tree.level(v)).collect();
    Network::from_edges(tree.len(), 0, edges, Some(levels)).expect("trees are simple graphs")
}

/// Tree edges whose image edge in the trace has at most `n` preimages.
#[derive(Clone, Debug, PartialEq)]
pub struct SubtreeTN {
    pub threshold: u64,
    /// Per tree vertex: the edge to its parent is retained (root: true).
    pub retained: Vec<bool>,
    /// Per tree vertex: connected to the root through retained edges.
    pub root_component: Vec<bool>,
}

impl SubtreeTN {
    /// Fraction of non-root tree edges that are retained.
    pub fn retained_fraction(&self) -> f64 {
        let n = self.retained.len().saturating_sub(1);
        if n == 0 {
            return 1.0;
        }
        self.retained[1..].iter().filter(|&&r| r).count() as f64 / n as f64
    }

    pub fn root_component_size(&self) -> usize {
        self.root_component.iter().filter(|&&r| r).count()
    }
}

pub fn build_t_n(labelled: &LabelledTree, trace: &TraceNetwork, threshold: u64) -> Result<SubtreeTN> {
    if threshold < 1 {
        return Err(Error::validation("N", "threshold must be at least 1"));
    }
    let tree = labelled.tree();
    let mut retained = vec![true; tree.len()];
    let mut root_component = vec![true; tree.len()];
    for v in 1..tree.len() {
        let e = trace.edge_of_tree(v).expect("non-root vertex has an edge");
        retained[v] = trace.edges()[e].count <= threshold;
        root_component[v] = retained[v] && root_component[tree.parent(v).unwrap()];
    }
    Ok(SubtreeTN {
        threshold,
        retained,
        root_component,
    })
}

/// Antisymmetric edge function stored once per undirected edge, oriented
/// from `edge.a` to `edge.b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowAssignment {
    pub theta: Vec<f64>,
    pub resistance: Vec<f64>,
    pub source: usize,
    pub sinks: Vec<usize>,
}

impl FlowAssignment {
    /// Builds a flow from directed values `θ(x, y)`. Both orientations of an
    /// edge may be given but must agree up to sign.
    pub fn from_directed(net: &Network, source: usize, sinks: Vec<usize>, values: &[(usize, usize, f64)]) -> Result<Self> {
        let mut theta: Vec<Option<f64>> = vec![None; net.edge_count()];
        for &(x, y, t) in values {
            let Some((_, e)) = net.incident(x).find(|&(w, _)| w == y) else {
                return Err(Error::validation("flow", format!("({x},{y}) is not an edge")));
            };
            let oriented = if net.edges()[e].a == x { t } else { -t };
            match theta[e] {
                Some(prev) if (prev - oriented).abs() > 1e-12 * prev.abs().max(1.0) => {
                    return Err(Error::validation(
                        "flow",
                        format!("antisymmetry violated on edge ({x},{y})"),
                    ));
                }
                _ => theta[e] = Some(oriented),
            }
        }
        Ok(FlowAssignment {
            theta: theta.into_iter().map(|t| t.unwrap_or(0.0)).collect(),
            resistance: vec![1.0; net.edge_count()],
            source,
            sinks,
        })
    }

    /// `Σ_{e⁻ = x} θ(e)` at every vertex.
    pub fn divergence(&self, net: &Network) -> Vec<f64> {
        let mut div = vec![0.0; net.len()];
        for (e, edge) in net.edges().iter().enumerate() {
            div[edge.a] += self.theta[e];
            div[edge.b] -= self.theta[e];
        }
        div
    }

    /// Largest divergence violation: `|div(source) - 1|` and `|div(x)|` at
    /// vertices that are neither source nor sink.
    pub fn divergence_defect(&self, net: &Network) -> f64 {
        let div = self.divergence(net);
        let mut is_sink = vec![false; net.len()];
        self.sinks.iter().for_each(|&s| is_sink[s] = true);
        (0..net.len())
            .map(|x| {
                if x == self.source {
                    (div[x] - 1.0).abs()
                } else if is_sink[x] {
                    0.0
                } else {
                    div[x].abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// CSV `x,y,theta` for edges carrying flow, with vertex names from `name`.
    pub fn to_csv(&self, net: &Network, name: impl Fn(usize) -> String) -> String {
        let mut out = String::from("x,y,theta\n");
        for (e, edge) in net.edges().iter().enumerate() {
            if self.theta[e] != 0.0 {
                let _ = writeln!(out, "{},{},{}", name(edge.a), name(edge.b), self.theta[e]);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: f64,
    /// Edges carrying non-zero flow.
    pub edges: usize,
    pub max_flow: f64,
}

/// `Σ r(e) θ(e)²` over undirected edges.
pub fn flow_energy(flow: &FlowAssignment) -> EnergyReport {
    let mut energy = 0.0;
    let mut edges = 0;
    let mut max_flow: f64 = 0.0;
    for (t, r) in flow.theta.iter().zip(&flow.resistance) {
        if *t != 0.0 {
            energy += r * t * t;
            edges += 1;
            max_flow = max_flow.max(t.abs());
        }
    }
    EnergyReport { energy, edges, max_flow }
}

/// Unit flow from the root to the vertices at `depth`, split equally at each
/// vertex among children (in `keep`, if given) whose subtree reaches `depth`.
/// The flow lives on `tree_network(tree)`.
pub fn unit_flow_on_tree(tree: &RootedTree, keep: Option<&[bool]>, depth: u32) -> Result<FlowAssignment> {
    if depth > tree.depth() {
        return Err(Error::validation("depth", format!("depth {depth} exceeds tree depth {}", tree.depth())));
    }
    let kept = |v: usize| keep.is_none_or(|k| k[v]);
    let mut survives = vec![false; tree.len()];
    for v in (0..tree.len()).rev() {
        let l = tree.level(v);
        if l > depth || !kept(v) {
            continue;
        }
        survives[v] = l == depth || tree.children(v).any(|c| survives[c]);
    }
    if !survives[0] {
        return Err(Error::NoSurvivingRay { depth });
    }
    let mut mass = vec![0.0; tree.len()];
    mass[0] = 1.0;
    let mut sinks = Vec::new();
    let mut theta = vec![0.0; tree.len().saturating_sub(1)];
    for v in 0..tree.len() {
        if mass[v] == 0.0 {
            continue;
        }
        if tree.level(v) == depth {
            sinks.push(v);
            continue;
        }
        let alive: Vec<usize> = tree.children(v).filter(|&c| survives[c]).collect();
        let share = mass[v] / alive.len() as f64;
        for c in alive {
            mass[c] = share;
            theta[c - 1] = share;
        }
    }
    Ok(FlowAssignment {
        resistance: vec![1.0; theta.len()],
        theta,
        source: 0,
        sinks,
    })
}

/// Pushes a tree flow forward to the trace: the value on a trace edge is
/// the signed sum over its tree preimages.
pub fn induce_flow(flow: &FlowAssignment, labelled: &LabelledTree, trace: &TraceNetwork) -> FlowAssignment {
    let tree = labelled.tree();
    let mut theta = vec![0.0; trace.edge_count()];
    for v in 1..tree.len() {
        let t = flow.theta[v - 1];
        if t == 0.0 {
            continue;
        }
        let e = trace.edge_of_tree(v).unwrap();
        let from = trace.vertex_of_tree(tree.parent(v).unwrap());
        theta[e] += if trace.edges()[e].a == from { t } else { -t };
    }
    let mut sinks: Vec<usize> = flow.sinks.iter().map(|&v| trace.vertex_of_tree(v)).collect();
    sinks.sort_unstable();
    sinks.dedup();
    FlowAssignment {
        resistance: vec![1.0; theta.len()],
        theta,
        source: trace.vertex_of_tree(0),
        sinks,
    }
}

/// Effective resistance between `source` and the sink set (shorted
/// together), unit resistances. Solves the Dirichlet problem for the
/// potential with Jacobi-preconditioned conjugate gradients.
pub fn effective_resistance(net: &Network, source: usize, sinks: &[usize]) -> Result<f64> {
    let n = net.len();
    let mut role = vec![Role::Free; n];
    for &s in sinks {
        if s == source {
            return Err(Error::validation("sinks", "source belongs to the sink set"));
        }
        role[s] = Role::Sink;
    }
    role[source] = Role::Source;
    // unknowns: vertices reachable from the source without crossing sinks
    let mut index = vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    let mut reaches_sink = false;
    let mut stack = vec![source];
    let mut seen = vec![false; n];
    seen[source] = true;
    while let Some(v) = stack.pop() {
        for (w, _) in net.incident(v) {
            match role[w] {
                Role::Sink => reaches_sink = true,
                _ if !seen[w] => {
                    seen[w] = true;
                    index[w] = unknowns.len();
                    unknowns.push(w);
                    stack.push(w);
                }
                _ => {}
            }
        }
    }
    if !reaches_sink {
        return Err(Error::Disconnected);
    }
    // (L u)_i = deg(i) u_i - Σ_{j free} u_j, with b_i = #edges to the source
    let m = unknowns.len();
    let diag: Vec<f64> = unknowns.iter().map(|&v| net.degree(v) as f64).collect();
    let b: Vec<f64> = unknowns
        .iter()
        .map(|&v| net.incident(v).filter(|&(w, _)| w == source).count() as f64)
        .collect();
    let apply = |u: &[f64], out: &mut [f64]| {
        for (i, &v) in unknowns.iter().enumerate() {
            let mut s = diag[i] * u[i];
            for (w, _) in net.incident(v) {
                if index[w] != usize::MAX {
                    s -= u[index[w]];
                }
            }
            out[i] = s;
        }
    };
    let mut u = vec![0.0; m];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = dot(&r, &z);
    let mut ap = vec![0.0; m];
    let mut residual = dot(&r, &r).sqrt();
    let mut iterations = 0;
    while residual > RESISTANCE_TOLERANCE {
        if iterations == RESISTANCE_MAX_ITERATIONS {
            return Err(Error::NonConvergence {
                what: "effective resistance solve".into(),
                iterations,
                residual,
            });
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..m {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = dot(&r, &r).sqrt();
        for i in 0..m {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }
    let current: f64 = net
        .incident(source)
        .map(|(w, _)| match role[w] {
            Role::Sink => 1.0,
            _ if index[w] != usize::MAX => 1.0 - u[index[w]],
            _ => 0.0,
        })
        .sum();
    Ok(1.0 / current)
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Free,
    Source,
    Sink,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `min_Π Σ_{v ∈ Π} λ^{-|v|}` over cutsets separating the root from level
/// `depth`, restricted to `keep` if given, computed by
/// `value(v) = min(λ^{-|v|}, Σ_children value(c))`. Vertices above `depth`
/// without (kept) children contribute nothing. Returns the sum over the
/// root's children.
pub fn cutset_infimum(tree: &RootedTree, keep: Option<&[bool]>, lambda: f64, depth: u32) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(Error::validation("lambda", "base must exceed 1"));
    }
    if depth == 0 || depth > tree.depth() {
        return Err(Error::validation("depth", format!("depth must lie in 1..={}", tree.depth())));
    }
    let kept = |v: usize| keep.is_none_or(|k| k[v]);
    let mut value = vec![0.0; tree.len()];
    for v in (1..tree.len()).rev() {
        let l = tree.level(v);
        if l > depth || !kept(v) {
            continue;
        }
        let own = lambda.powi(-(l as i32));
        value[v] = if l == depth {
            own
        } else {
            own.min(tree.children(v).map(|c| value[c]).sum())
        };
    }
    Ok(tree.children(0).filter(|&c| kept(c)).map(|c| value[c]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_tree_flow_energy() {
        for d in 1..=12 {
            let t = RootedTree::complete(2, d);
            let f = unit_flow_on_tree(&t, None, d).unwrap();
            let e = flow_energy(&f).energy;
            assert!((e - (1.0 - 0.5f64.powi(d as i32))).abs() < 1e-12);
            assert!(f.divergence_defect(&tree_network(&t)) < 1e-12);
        }
        let t = RootedTree::complete(2, 10);
        let e = flow_energy(&unit_flow_on_tree(&t, None, 10).unwrap()).energy;
        assert!((e - 0.9990234375).abs() < 1e-15);
    }

    #[test]
    fn ternary_and_path_energies() {
        let t = RootedTree::complete(3, 8);
        let e = flow_energy(&unit_flow_on_tree(&t, None, 8).unwrap()).energy;
        let series: f64 = (1..=8).map(|n| (1.0f64 / 3.0).powi(n)).sum();
        assert!((e - series).abs() < 1e-12);
        let p = RootedTree::complete(1, 17);
        assert!((flow_energy(&unit_flow_on_tree(&p, None, 17).unwrap()).energy - 17.0).abs() < 1e-12);
    }

    #[test]
    fn hand_built_flows() {
        let edge = Network::path(1);
        let f = FlowAssignment::from_directed(&edge, 0, vec![1], &[(0, 1, 1.0), (1, 0, -1.0)]).unwrap();
        assert_eq!(flow_energy(&f).energy, 1.0);
        let star = Network::star(&[1, 1]);
        let f = FlowAssignment::from_directed(&star, 0, vec![1, 2], &[(0, 1, 0.5), (2, 0, -0.5)]).unwrap();
        assert_eq!(flow_energy(&f).energy, 0.5);
        assert!(FlowAssignment::from_directed(&edge, 0, vec![1], &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
    }

    #[test]
    fn dead_ends_are_pruned() {
        // root with a child reaching depth 2 and a child that stops
        let t = RootedTree::from_child_counts(&[2, 1, 1, 0, 0], 2, crate::tree::TreeKind::Gw).unwrap();
        let keep = vec![true, true, true, true, false];
        let f = unit_flow_on_tree(&t, Some(&keep), 2).unwrap();
        assert_eq!(f.sinks, vec![3]);
        assert_eq!(flow_energy(&f).energy, 2.0);
        let keep = vec![true, true, true, false, false];
        assert_eq!(unit_flow_on_tree(&t, Some(&keep), 2), Err(Error::NoSurvivingRay { depth: 2 }));
    }

    #[test]
    fn path_resistance_is_length() {
        for k in 1..=30 {
            let p = Network::path(k);
            let r = effective_resistance(&p, 0, &[k]).unwrap();
            assert!((r - k as f64).abs() < 1e-8, "k={k}: {r}");
        }
    }

    #[test]
    fn binary_tree_resistance_and_thomson() {
        for d in 1..=10 {
            let t = RootedTree::complete(2, d);
            let net = tree_network(&t);
            let leaves: Vec<usize> = t.vertices_at_level(d).collect();
            let r = effective_resistance(&net, 0, &leaves).unwrap();
            assert!((r - (1.0 - 0.5f64.powi(d as i32))).abs() < 1e-8);
            let flow = unit_flow_on_tree(&t, None, d).unwrap();
            assert!(r <= flow_energy(&flow).energy + 1e-9);
        }
    }

    #[test]
    fn disconnected_sink_is_an_error() {
        let net = Network::from_edges(4, 0, [(0, 1, 1), (2, 3, 1)], None).unwrap();
        assert_eq!(effective_resistance(&net, 0, &[3]), Err(Error::Disconnected));
    }

    #[test]
    fn grid_resistance_grows_logarithmically() {
        let mut r = Vec::new();
        for n in [8, 16, 32] {
            let g = Network::grid_ball(n);
            let shell: Vec<usize> = (0..g.len()).filter(|&v| g.level(v) == n as u32).collect();
            r.push(effective_resistance(&g, g.root(), &shell).unwrap());
        }
        let d1 = r[1] - r[0];
        let d2 = r[2] - r[1];
        // additive increments per doubling, close to log(2)/(2π) ≈ 0.110
        assert!((d1 - d2).abs() < 0.1 * d1, "{r:?}");
        assert!(d1 > 0.08 && d1 < 0.14, "{r:?}");
    }

    #[test]
    fn cutset_values() {
        for d in 1..=10 {
            let t = RootedTree::complete(2, d);
            assert!((cutset_infimum(&t, None, 2.0, d).unwrap() - 1.0).abs() < 1e-12);
            let v = cutset_infimum(&t, None, 3.0, d).unwrap();
            assert!((v - (2.0f64 / 3.0).powi(d as i32)).abs() < 1e-12);
            let p = RootedTree::complete(1, d);
            assert!((cutset_infimum(&p, None, 1.1, d).unwrap() - 1.1f64.powi(-(d as i32))).abs() < 1e-12);
        }
    }
}
