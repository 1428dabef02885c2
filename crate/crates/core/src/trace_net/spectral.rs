//! Spectral radius of a random walk restricted (and killed) on a finite set.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::WalkKernel;
use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::network::Network;
use crate::tree::DEFAULT_VERTEX_BUDGET;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// A reversible kernel `p(i, j) = c(i, j) / W(i)` restricted to a finite
/// vertex set. `W(i)` includes conductance to vertices outside the set, so
/// the restriction is substochastic.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedKernel {
    radius: u32,
    weight: Vec<f64>,
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl RestrictedKernel {
    /// `weight[i]` is the total conductance at `i`; `edges` lists each
    /// internal undirected edge once.
    pub fn new(radius: u32, weight: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = weight.len();
        if n == 0 {
            return Err(Error::validation("ball", "restricted set is empty"));
        }
        let mut internal = vec![0.0; n];
        for &(a, b, c) in edges {
            if a >= n || b >= n || a == b || !(c > 0.0) {
                return Err(Error::validation("kernel", format!("bad edge ({a},{b},{c})")));
            }
            internal[a] += c;
            internal[b] += c;
        }
        if let Some(i) = (0..n).find(|&i| internal[i] > weight[i] * (1.0 + 1e-12)) {
            return Err(Error::validation("kernel", format!("conductance at {i} exceeds its weight")));
        }
        Ok(Self::assemble(radius, weight, edges.to_vec()))
    }

    /// Vertices of `net` at level `<= radius`.
    pub fn network_ball(net: &Network, radius: u32, kernel: WalkKernel) -> Self {
        Self::network_subset(net, &net.ball(radius), kernel, radius)
    }

    /// Arbitrary vertex subset of `net`; walks leaving it are killed.
    pub fn network_subset(net: &Network, vertices: &[usize], kernel: WalkKernel, radius: u32) -> Self {
        let local: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let conductance = |c: u64| match kernel {
            WalkKernel::Simple => 1.0,
            WalkKernel::Counts => c as f64,
        };
        let weight = vertices
            .iter()
            .map(|&v| net.neighbors(v).map(|(_, c)| conductance(c)).sum())
            .collect();
        let mut edges = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for (w, c) in net.neighbors(v) {
                if let Some(&j) = local.get(&w) {
                    if i < j {
                        edges.push((i, j, conductance(c)));
                    }
                }
            }
        }
        Self::assemble(radius, weight, edges)
    }

    /// Ball of the Cayley graph of `spec`, built by breadth-first search.
    pub fn cayley_ball(spec: &GroupSpec, radius: u32, budget: usize) -> Result<Self> {
        let ball = spec.ball(radius as usize, budget)?;
        let index: HashMap<_, usize> = ball.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
        let mut edges = Vec::new();
        let mut weight = Vec::with_capacity(ball.len());
        for (i, x) in ball.iter().enumerate() {
            let nbrs = spec.neighbors(x);
            weight.push(nbrs.len() as f64);
            for y in nbrs {
                if let Some(&j) = index.get(&y) {
                    if i < j {
                        edges.push((i, j, 1.0));
                    }
                }
            }
        }
        Ok(Self::assemble(radius, weight, edges))
    }

    /// Distance-from-root chain of SRW on the `degree`-regular tree, killed
    /// beyond `radius`. The top eigenvector on a tree ball is radial, so this
    /// chain has the same restricted spectral radius as the full ball.
    pub fn radial_tree_ball(degree: u32, radius: u32) -> Self {
        let q = degree as f64;
        // sphere sizes: 1, q, q(q-1), ...
        let sphere = |d: u32| if d == 0 { 1.0 } else { q * (q - 1.0).powi(d as i32 - 1) };
        let weight = (0..=radius).map(|d| q * sphere(d)).collect();
        let edges = (0..radius).map(|d| (d as usize, d as usize + 1, sphere(d + 1))).collect();
        Self::assemble(radius, weight, edges)
    }

    /// `k` consecutive interior vertices of Z (a line segment with killed
    /// endpoints).
    pub fn path_interior(k: usize) -> Self {
        let edges = (1..k).map(|i| (i - 1, i, 1.0)).collect();
        Self::assemble(k as u32, vec![2.0; k], edges)
    }

    fn assemble(radius: u32, weight: Vec<f64>, edges: Vec<(usize, usize, f64)>) -> Self {
        let n = weight.len();
        let mut deg = vec![0usize; n];
        for &(a, b, _) in &edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![(0usize, 0.0); offsets[n]];
        for &(a, b, c) in &edges {
            let s = c / (weight[a] * weight[b]).sqrt();
            entries[fill[a]] = (b, s);
            fill[a] += 1;
            entries[fill[b]] = (a, s);
            fill[b] += 1;
        }
        RestrictedKernel {
            radius,
            weight,
            offsets,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// `y = S x` with `S = W^{1/2} P_F W^{-1/2}` symmetric.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.entries[self.offsets[i]..self.offsets[i + 1]]
                .iter()
                .map(|&(j, s)| s * x[j])
                .sum();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub radius: u32,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Largest eigenvalue of the killed kernel by power iteration on the lazy
/// symmetrised operator `(I + S) / 2`, which avoids the ±ρ oscillation on
/// bipartite graphs. The Rayleigh quotient of `S` is reported once the
/// eigen-residual `|S v - ρ v|` drops below `tol`.
pub fn estimate_spectral_radius(kernel: &RestrictedKernel, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    let n = kernel.len();
    if n == 0 {
        return Err(Error::validation("ball", "restricted set is empty"));
    }
    let mut v: Vec<f64> = kernel.weight.iter().map(|w| w.sqrt()).collect();
    normalise(&mut v);
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        kernel.apply(&v, &mut y);
        let value = dot(&v, &y);
        residual = y.iter().zip(&v).map(|(a, b)| (a - value * b).powi(2)).sum::<f64>().sqrt();
        if residual <= tol {
            return Ok(SpectralEstimate {
                radius: kernel.radius,
                value,
                iterations: it,
                residual,
            });
        }
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi += yi;
        }
        normalise(&mut v);
    }
    Err(Error::NonConvergence {
        what: "spectral power iteration".into(),
        iterations: max_iter,
        residual,
    })
}

/// Restricted spectral radius of SRW on a ball of the Cayley graph.
pub fn group_spectral_radius(spec: &GroupSpec, radius: u32) -> Result<SpectralEstimate> {
    let kernel = if spec.is_regular_tree() {
        RestrictedKernel::radial_tree_ball(spec.degree() as u32, radius)
    } else {
        RestrictedKernel::cayley_ball(spec, radius, DEFAULT_VERTEX_BUDGET)?
    };
    estimate_spectral_radius(&kernel, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalise(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}
