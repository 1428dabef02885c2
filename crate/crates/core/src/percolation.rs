//! Bernoulli bond percolation on finite networks with a monotone coupling:
//! every edge carries one uniform `u_e` and is kept at level `p` iff
//! `u_e <= p`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::stats::stream::splitmix64;
use crate::stats::{wilson_interval, Interval, RandomStreamSpec, DEFAULT_LEVEL};

pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    pub fn size_of(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}

/// Uniform attached to edge `e` by a replica key. The generator is
/// counter-based so that any subset of edges can be evaluated on demand.
fn edge_uniform(key: u64, e: usize) -> f64 {
    (splitmix64(key ^ splitmix64(e as u64 + 1)) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn edge_uniforms(net: &Network, key: u64) -> Vec<f64> {
    (0..net.edge_count()).map(|e| edge_uniform(key, e)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PercolationSample {
    pub p: f64,
    pub kept: Vec<bool>,
    /// Cluster representative of every vertex.
    pub cluster: Vec<usize>,
    pub root_cluster_size: usize,
    /// Largest level in the root cluster.
    pub root_extent: u32,
    /// Root cluster reaches the outermost level of the network.
    pub crossing: bool,
}

impl PercolationSample {
    pub fn reaches(&self, window: u32) -> bool {
        self.root_extent >= window
    }
}

pub fn percolate<R: Rng + ?Sized>(net: &Network, p: f64, rng: &mut R) -> Result<PercolationSample> {
    check_probability(p)?;
    let u = edge_uniforms(net, rng.random());
    Ok(sample_from_uniforms(net, p, &u))
}

fn sample_from_uniforms(net: &Network, p: f64, u: &[f64]) -> PercolationSample {
    let mut uf = UnionFind::new(net.len());
    let kept: Vec<bool> = u.iter().map(|&x| x <= p).collect();
    for (e, edge) in net.edges().iter().enumerate() {
        if kept[e] {
            uf.union(edge.a, edge.b);
        }
    }
    let cluster: Vec<usize> = (0..net.len()).map(|v| uf.find(v)).collect();
    let r = cluster[net.root()];
    let root_extent = (0..net.len()).filter(|&v| cluster[v] == r).map(|v| net.level(v)).max().unwrap_or(0);
    PercolationSample {
        p,
        kept,
        root_cluster_size: uf.size_of(net.root()),
        root_extent,
        crossing: root_extent >= net.max_level() && net.max_level() > 0,
        cluster,
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::validation("p", format!("{p} is not a probability")))
    }
}

fn check_window(net: &Network, window: u32) -> Result<()> {
    if window == 0 || window > net.max_level() {
        Err(Error::validation(
            "window",
            format!("window {window} outside the network extent 1..={}", net.max_level()),
        ))
    } else {
        Ok(())
    }
}

/// Smallest `p` at which the root connects to the shell `level >= window`:
/// the bottleneck (largest uniform) of the best path, found by a
/// Dijkstra-type search that only touches edges below the answer.
fn crossing_threshold(net: &Network, window: u32, key: u64) -> f64 {
    let mut best = vec![f64::INFINITY; net.len()];
    let root = net.root();
    best[root] = 0.0;
    let mut heap = BinaryHeap::from([(Reverse(0u64), root)]);
    while let Some((Reverse(bits), v)) = heap.pop() {
        let b = f64::from_bits(bits);
        if b > best[v] {
            continue;
        }
        if net.level(v) >= window {
            return b;
        }
        for (w, e) in net.incident(v) {
            let nb = b.max(edge_uniform(key, e));
            if nb < best[w] {
                best[w] = nb;
                heap.push((Reverse(nb.to_bits()), w));
            }
        }
    }
    f64::INFINITY
}

fn replica_key(stream: &RandomStreamSpec, r: usize) -> u64 {
    stream.child(r as u64).stream().random()
}

/// Per-replica crossing thresholds; replica `r` uses stream child `r`.
pub fn crossing_thresholds(net: &Network, window: u32, replicas: usize, stream: &RandomStreamSpec) -> Result<Vec<f64>> {
    check_window(net, window)?;
    if replicas == 0 {
        return Err(Error::validation("replicas", "need at least one replica"));
    }
    Ok((0..replicas)
        .into_par_iter()
        .map(|r| crossing_threshold(net, window, replica_key(stream, r)))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub p: f64,
    pub window: u32,
    pub replicas: usize,
    pub crossings: usize,
    pub fraction: f64,
    pub interval: Interval,
}

fn crossing_from_thresholds(thresholds: &[f64], p: f64, window: u32) -> CrossingEstimate {
    let crossings = thresholds.iter().filter(|&&t| t <= p).count();
    let n = thresholds.len();
    CrossingEstimate {
        p,
        window,
        replicas: n,
        crossings,
        fraction: crossings as f64 / n as f64,
        interval: wilson_interval(crossings as u64, n as u64, DEFAULT_LEVEL),
    }
}

/// Fraction of replicas whose root cluster reaches level `window`.
pub fn crossing_probability(
    net: &Network,
    p: f64,
    window: u32,
    replicas: usize,
    stream: &RandomStreamSpec,
) -> Result<CrossingEstimate> {
    check_probability(p)?;
    let t = crossing_thresholds(net, window, replicas, stream)?;
    Ok(crossing_from_thresholds(&t, p, window))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for BracketThresholds {
    fn default() -> Self {
        BracketThresholds { low: 0.05, high: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    pub window: u32,
    pub thresholds: BracketThresholds,
    pub sweep: Vec<CrossingEstimate>,
    /// Largest grid `p` with crossing fraction below `thresholds.low`.
    pub lower: Option<f64>,
    /// Smallest grid `p` with crossing fraction above `thresholds.high`.
    pub upper: Option<f64>,
}

impl PcEstimate {
    pub fn is_bracketed(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }
}

/// Crossing sweep over `grid` with one coupled set of uniforms per replica.
pub fn estimate_pc(
    net: &Network,
    window: u32,
    replicas: usize,
    grid: &[f64],
    thresholds: BracketThresholds,
    stream: &RandomStreamSpec,
) -> Result<PcEstimate> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] <= 0.0 || grid[grid.len() - 1] > 1.0 {
        return Err(Error::validation("grid", "grid must be strictly increasing within (0, 1]"));
    }
    let t = crossing_thresholds(net, window, replicas, stream)?;
    let sweep: Vec<CrossingEstimate> = grid.iter().map(|&p| crossing_from_thresholds(&t, p, window)).collect();
    let lower = sweep.iter().filter(|c| c.fraction < thresholds.low).map(|c| c.p).next_back();
    let upper = sweep.iter().find(|c| c.fraction > thresholds.high).map(|c| c.p);
    Ok(PcEstimate {
        window,
        thresholds,
        sweep,
        lower,
        upper,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcVerdict {
    pub estimates: Vec<PcEstimate>,
    /// Largest upper bracket over the windows (absent if any window is
    /// unbracketed from above).
    pub upper: Option<f64>,
    /// Upper bracket below 1 at every window.
    pub certified: bool,
    pub verdict: String,
}

/// `p_c < 1` verdict from sweeps at several windows.
pub fn certify_pc_below_one(
    net: &Network,
    windows: &[u32],
    replicas: usize,
    grid: &[f64],
    thresholds: BracketThresholds,
    stream: &RandomStreamSpec,
) -> Result<PcVerdict> {
    let estimates = windows
        .iter()
        .map(|&w| estimate_pc(net, w, replicas, grid, thresholds, &stream.child(w as u64)))
        .collect::<Result<Vec<_>>>()?;
    let upper = estimates
        .iter()
        .map(|e| e.upper)
        .try_fold(0.0f64, |acc, u| u.map(|u| acc.max(u)));
    let certified = upper.is_some_and(|u| u < 1.0);
    let verdict = match (certified, estimates.iter().all(PcEstimate::is_bracketed)) {
        (true, _) => "pc-below-one",
        (false, true) => "not-certified",
        (false, false) => "inconclusive",
    };
    Ok(PcVerdict {
        estimates,
        upper,
        certified,
        verdict: verdict.into(),
    })
}

/// Sweep CSV `p,window,replicas,crossing_fraction,ci_low,ci_high`.
pub fn sweep_csv(estimates: &[PcEstimate]) -> String {
    let mut out = String::from("p,window,replicas,crossing_fraction,ci_low,ci_high\n");
    for e in estimates {
        for c in &e.sweep {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.p, c.window, c.replicas, c.fraction, c.interval.low, c.interval.high
            );
        }
    }
    out
}

/// `0.025, 0.05, ..., 1.0`.
pub fn default_grid() -> Vec<f64> {
    (1..=40).map(|i| i as f64 / 40.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Survival probability of GW percolation on the binary tree: `1 - q`
    /// with `q` the smallest fixed point of `q = (1 - p + p q)²`.
    fn binary_survival(p: f64) -> f64 {
        let mut q = 0.0;
        for _ in 0..100_000 {
            q = (1.0 - p + p * q).powi(2);
        }
        1.0 - q
    }

    #[test]
    fn extremes() {
        let net = Network::complete_tree(2, 4);
        let mut rng = RandomStreamSpec::new(1).stream();
        let full = percolate(&net, 1.0, &mut rng).unwrap();
        assert_eq!(full.root_cluster_size, net.len());
        assert!(full.crossing);
        let none = percolate(&net, 0.0, &mut rng).unwrap();
        assert_eq!(none.root_cluster_size, 1);
        assert!(!none.crossing);
        assert!(percolate(&net, 1.5, &mut rng).is_err());
    }

    #[test]
    fn kept_fraction_is_binomial() {
        let net = Network::grid_ball(70);
        assert!(net.edge_count() > 10_000);
        let mut rng = RandomStreamSpec::new(2).stream();
        let s = percolate(&net, 0.3, &mut rng).unwrap();
        let n = net.edge_count() as f64;
        let kept = s.kept.iter().filter(|&&k| k).count() as f64;
        assert!((kept - 0.3 * n).abs() < 3.0 * (n * 0.21).sqrt());
    }

    #[test]
    fn thresholds_agree_with_direct_percolation() {
        let net = Network::grid_ball(6);
        let stream = RandomStreamSpec::new(3);
        let t = crossing_thresholds(&net, 6, 50, &stream).unwrap();
        for p in [0.3, 0.5, 0.7] {
            for (r, &tr) in t.iter().enumerate() {
                let mut rng = stream.child(r as u64).stream();
                let s = percolate(&net, p, &mut rng).unwrap();
                assert_eq!(s.reaches(6), tr <= p);
            }
        }
    }

    #[test]
    fn binary_tree_crossing_matches_gw_survival() {
        let net = Network::complete_tree(2, 20);
        let s = RandomStreamSpec::new(4);
        let above = crossing_probability(&net, 0.6, 20, 400, &s).unwrap();
        assert!(above.fraction >= 0.3, "{above:?}");
        assert!(binary_survival(0.6) > 0.3);
        let below = crossing_probability(&net, 0.4, 20, 400, &s).unwrap();
        assert!(below.fraction <= 0.05, "{below:?}");
    }

    #[test]
    fn sweep_is_monotone_and_csv_has_rows() {
        let net = Network::complete_tree(2, 10);
        let e = estimate_pc(&net, 10, 100, &default_grid(), BracketThresholds::default(), &RandomStreamSpec::new(5)).unwrap();
        assert!(e.sweep.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        assert_eq!(e.sweep.last().unwrap().fraction, 1.0);
        assert_eq!(sweep_csv(&[e]).lines().count(), 41);
    }

    #[test]
    fn clusters_refine_as_p_decreases() {
        let net = Network::grid_ball(8);
        let u = edge_uniforms(&net, 6);
        let hi = sample_from_uniforms(&net, 0.6, &u);
        let lo = sample_from_uniforms(&net, 0.4, &u);
        for a in 0..net.len() {
            for b in 0..net.len() {
                if lo.cluster[a] == lo.cluster[b] {
                    assert_eq!(hi.cluster[a], hi.cluster[b]);
                }
            }
        }
    }

    #[test]
    fn grid_validation() {
        let net = Network::path(4);
        let s = RandomStreamSpec::new(0);
        assert!(estimate_pc(&net, 4, 10, &[0.5, 0.4], BracketThresholds::default(), &s).is_err());
        assert!(estimate_pc(&net, 5, 10, &[0.5], BracketThresholds::default(), &s).is_err());
    }
}
