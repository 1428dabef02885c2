//! Single random walks on a finite network: SRW and the count-biased walk.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::stats::RandomStreamSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkKernel {
    /// `p(x, y) = 1 / deg(x)`.
    Simple,
    /// `p(x, y) = N(x, y) / Σ_z N(x, z)`.
    Counts,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub steps: u64,
    pub replicas: usize,
    /// Stop a walker once it reaches this level (the truncation frontier
    /// standing in for infinity).
    pub absorb_level: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub kernel: WalkKernel,
    pub replicas: usize,
    pub steps: u64,
    pub return_counts: Vec<u64>,
    /// Replicas that never came back to the root after step 0.
    pub escape_fraction: f64,
    /// Replicas stopped at the absorbing level.
    pub absorbed_fraction: f64,
}

impl WalkStats {
    pub fn mean_returns(&self) -> f64 {
        self.return_counts.iter().sum::<u64>() as f64 / self.replicas.max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("replica,returns\n");
        for (r, c) in self.return_counts.iter().enumerate() {
            out.push_str(&format!("{r},{c}\n"));
        }
        out
    }
}

/// One step of the walk from `v`; `None` if `v` is isolated.
pub fn walk_step<R: Rng + ?Sized>(net: &Network, v: usize, kernel: WalkKernel, rng: &mut R) -> Option<usize> {
    let deg = net.degree(v);
    if deg == 0 {
        return None;
    }
    match kernel {
        WalkKernel::Simple => net.incident(v).nth(rng.random_range(0..deg)).map(|(w, _)| w),
        WalkKernel::Counts => {
            let total = net.total_count(v);
            let mut u = rng.random_range(0..total);
            for (w, c) in net.neighbors(v) {
                if u < c {
                    return Some(w);
                }
                u -= c;
            }
            unreachable!("counts sum to the total")
        }
    }
}

/// Exact one-step law from `v` over `net.incident(v)` order.
pub fn step_law(net: &Network, v: usize, kernel: WalkKernel) -> Vec<f64> {
    match kernel {
        WalkKernel::Simple => vec![1.0 / net.degree(v) as f64; net.degree(v)],
        WalkKernel::Counts => {
            let total = net.total_count(v) as f64;
            net.neighbors(v).map(|(_, c)| c as f64 / total).collect()
        }
    }
}

fn run_walks(net: &Network, kernel: WalkKernel, config: &WalkConfig, stream: &RandomStreamSpec) -> Result<WalkStats> {
    if config.replicas == 0 {
        return Err(Error::validation("replicas", "need at least one replica"));
    }
    let root = net.root();
    let results: Vec<(u64, bool)> = (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.child(r as u64).stream();
            let mut v = root;
            let mut returns = 0;
            for _ in 0..config.steps {
                if config.absorb_level.is_some_and(|l| net.level(v) >= l) {
                    return (returns, true);
                }
                match walk_step(net, v, kernel, &mut rng) {
                    Some(w) => v = w,
                    None => break,
                }
                if v == root {
                    returns += 1;
                }
            }
            (returns, false)
        })
        .collect();
    let n = results.len() as f64;
    Ok(WalkStats {
        kernel,
        replicas: config.replicas,
        steps: config.steps,
        escape_fraction: results.iter().filter(|r| r.0 == 0).count() as f64 / n,
        absorbed_fraction: results.iter().filter(|r| r.1).count() as f64 / n,
        return_counts: results.into_iter().map(|r| r.0).collect(),
    })
}

/// Simple random walks from the root of `net`.
pub fn srw_on_trace(net: &Network, config: &WalkConfig, stream: &RandomStreamSpec) -> Result<WalkStats> {
    run_walks(net, WalkKernel::Simple, config, stream)
}

/// Walks with transition probabilities proportional to traversal counts.
pub fn biased_walk_pn(net: &Network, config: &WalkConfig, stream: &RandomStreamSpec) -> Result<WalkStats> {
    run_walks(net, WalkKernel::Counts, config, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_square, DEFAULT_LEVEL};

    fn cfg(steps: u64, replicas: usize) -> WalkConfig {
        WalkConfig {
            steps,
            replicas,
            absorb_level: None,
        }
    }

    #[test]
    fn single_edge_alternates() {
        let net = Network::path(1);
        for steps in [1, 2, 7, 10] {
            let s = srw_on_trace(&net, &cfg(steps, 3), &RandomStreamSpec::new(1)).unwrap();
            assert!(s.return_counts.iter().all(|&c| c == steps / 2));
        }
    }

    #[test]
    fn star_first_step_frequency() {
        let net = Network::star(&[3, 1]);
        let s = RandomStreamSpec::new(9);
        let mut to_first = 0;
        let n = 10_000;
        for r in 0..n {
            let mut rng = s.child(r).stream();
            if walk_step(&net, 0, WalkKernel::Counts, &mut rng) == Some(1) {
                to_first += 1;
            }
        }
        let sd = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((to_first as f64 - 0.75 * n as f64).abs() < 3.0 * sd);
    }

    #[test]
    fn equal_counts_reduce_to_srw() {
        let net = Network::star(&[2, 2, 2]);
        assert_eq!(step_law(&net, 0, WalkKernel::Counts), step_law(&net, 0, WalkKernel::Simple));
        let a = biased_walk_pn(&net, &cfg(50, 20), &RandomStreamSpec::new(3)).unwrap();
        let b = srw_on_trace(&net, &cfg(50, 20), &RandomStreamSpec::new(3)).unwrap();
        // star: every other step is a return regardless of kernel
        assert_eq!(a.return_counts, b.return_counts);
    }

    #[test]
    fn occupation_is_proportional_to_degree() {
        let net = Network::from_edges(5, 0, [(0, 1, 1), (1, 2, 1), (2, 0, 1), (2, 3, 1), (3, 4, 1)], None).unwrap();
        let mut rng = RandomStreamSpec::new(5).stream();
        let mut occ = vec![0u64; 5];
        let mut v = 0;
        // thin the chain so that successive samples are nearly independent
        for t in 0..400_000 {
            v = walk_step(&net, v, WalkKernel::Simple, &mut rng).unwrap();
            if t % 20 == 0 {
                occ[v] += 1;
            }
        }
        let deg: Vec<f64> = (0..5).map(|v| net.degree(v) as f64).collect();
        let r = chi_square(&occ, &deg, DEFAULT_LEVEL).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn absorption_stops_walkers() {
        let net = Network::path(3);
        let c = WalkConfig {
            steps: 1000,
            replicas: 50,
            absorb_level: Some(3),
        };
        let s = srw_on_trace(&net, &c, &RandomStreamSpec::new(2)).unwrap();
        assert_eq!(s.absorbed_fraction, 1.0);
        assert!(s.escape_fraction > 0.0 && s.escape_fraction < 1.0);
    }
}
