//! Tree-indexed random walks: labelled family trees, positions, and the
//! generation-lumped particle process used for recurrence classification.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::network::Network;
use crate::stats::{wilson_interval, Interval, RandomStreamSpec, DEFAULT_LEVEL};
use crate::trace_net::{group_spectral_radius, SpectralEstimate, WalkKernel};
use crate::tree::{draw_offspring, OffspringDist, RootedTree, TreeBuilder, TreeKind};

const NO_LABEL: u16 = u16::MAX;

/// Family tree whose edge `(v⁻, v)` carries the generator index `X_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelledTree {
    tree: RootedTree,
    labels: Vec<u16>,
}

impl LabelledTree {
    pub fn new(tree: RootedTree, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != tree.len() {
            return Err(Error::validation("labels", "one label slot per vertex required"));
        }
        if (1..tree.len()).any(|v| labels[v] == NO_LABEL) {
            return Err(Error::validation("labels", "every non-root vertex needs a label"));
        }
        let mut labels = labels;
        labels[0] = NO_LABEL;
        Ok(LabelledTree { tree, labels })
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        match self.labels[v] {
            NO_LABEL => None,
            s => Some(s as usize),
        }
    }
}

/// Positions `S_v` of every tree vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionMap {
    positions: Vec<GroupElement>,
}

impl PositionMap {
    /// Recomputes `S_v = S_{v⁻}·X_v` from the labels.
    pub fn from_labels(spec: &GroupSpec, labelled: &LabelledTree) -> Self {
        let tree = labelled.tree();
        let mut positions = Vec::with_capacity(tree.len());
        positions.push(spec.identity());
        for v in 1..tree.len() {
            let p = tree.parent(v).unwrap();
            let s = labelled.label(v).unwrap();
            positions.push(spec.mul_generator(&positions[p], s));
        }
        PositionMap { positions }
    }

    pub fn get(&self, v: usize) -> &GroupElement {
        &self.positions[v]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupElement> {
        self.positions.iter()
    }
}

#[derive(Clone, Debug)]
pub struct BrwRun {
    pub spec: GroupSpec,
    pub labelled: LabelledTree,
    pub positions: PositionMap,
}

/// Samples the family tree and its labels level by level.
///
/// For every vertex (breadth-first) the offspring count is drawn, followed by
/// one uniform generator per child, so a run to depth `d` is a prefix of the
/// run to any depth `d' > d` on the same stream.
pub fn run_brw<R: Rng + ?Sized>(
    spec: &GroupSpec,
    dist: &OffspringDist,
    kind: TreeKind,
    depth: u32,
    budget: usize,
    rng: &mut R,
) -> Result<BrwRun> {
    let root_law = dist.root_law(kind);
    let mut builder = TreeBuilder::new(kind, depth);
    let mut labels = vec![NO_LABEL];
    let mut v = 0;
    while v < builder.len() {
        if builder.level(v) < depth {
            let k = draw_offspring(dist, &root_law, v, rng);
            let children = builder.add_children(v, k, budget)?;
            for _ in children {
                labels.push(spec.sample_generator(rng) as u16);
            }
        }
        v += 1;
    }
    let labelled = LabelledTree {
        tree: builder.finish(),
        labels,
    };
    let positions = PositionMap::from_labels(spec, &labelled);
    Ok(BrwRun {
        spec: spec.clone(),
        labelled,
        positions,
    })
}

impl BrwRun {
    /// Number of tree vertices other than the root sitting at the identity,
    /// cumulated by generation (`out[t]` counts generations `1..=t`).
    pub fn cumulative_revisits(&self) -> Vec<u64> {
        let tree = self.labelled.tree();
        let id = self.spec.identity();
        let mut per_level = vec![0u64; tree.depth() as usize + 1];
        for v in 1..tree.len() {
            if *self.positions.get(v) == id {
                per_level[tree.level(v) as usize] += 1;
            }
        }
        let mut acc = 0;
        per_level
            .into_iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect()
    }
}

/// Total offspring of `n` independent particles.
pub(crate) fn total_offspring<R: Rng + ?Sized>(dist: &OffspringDist, n: u64, rng: &mut R) -> u64 {
    let atoms = dist.atoms();
    let mut remaining = n;
    let mut mass = 1.0;
    let mut total = 0u64;
    for (i, &(k, p)) in atoms.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let m = if i + 1 == atoms.len() {
            remaining
        } else {
            binomial(remaining, (p / mass).min(1.0), rng)
        };
        total += k as u64 * m;
        remaining -= m;
        mass -= p;
    }
    total
}

pub(crate) fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Splits `n` items over categories with the given (unnormalised) weights.
pub(crate) fn multinomial<R: Rng + ?Sized>(n: u64, weights: &[f64], rng: &mut R, out: &mut Vec<u64>) {
    out.clear();
    let mut mass: f64 = weights.iter().sum();
    let mut remaining = n;
    for (i, &w) in weights.iter().enumerate() {
        let m = if i + 1 == weights.len() {
            remaining
        } else {
            binomial(remaining, (w / mass).min(1.0), rng)
        };
        out.push(m);
        remaining -= m;
        mass -= w;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceConfig {
    pub horizon: u32,
    pub replicas: usize,
    /// Abort once a generation holds more particles than this.
    pub population_cap: u64,
    /// Ball radius used for the spectral threshold.
    pub spectral_radius: u32,
}

impl Default for RecurrenceConfig {
    fn default() -> Self {
        RecurrenceConfig {
            horizon: 60,
            replicas: 200,
            population_cap: 1 << 50,
            spectral_radius: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRevisits {
    pub replica: usize,
    pub at_half_horizon: u64,
    pub at_horizon: u64,
}

impl ReplicaRevisits {
    /// Revisit count strictly increased between horizon/2 and horizon.
    pub fn growing(&self) -> bool {
        self.at_horizon > self.at_half_horizon
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub group: String,
    pub mean_offspring: f64,
    pub horizon: u32,
    pub replicas: Vec<ReplicaRevisits>,
    pub growing_fraction: f64,
    pub growing_interval: Interval,
    pub spectral: SpectralEstimate,
    /// `1/ρ` from the finite-ball estimate (an upper bound on the true value).
    pub threshold: f64,
    pub predicted: String,
    pub verdict: String,
}

/// Particle cloud aggregated by state; every generation each particle
/// branches and each offspring takes one step.
trait LumpedWalk: Sync {
    type State: Ord + Clone + Send;
    fn origin(&self) -> Self::State;
    fn scatter<R: Rng + ?Sized>(&self, state: &Self::State, n: u64, rng: &mut R, out: &mut Vec<(Self::State, u64)>);
}

/// Word length of SRW on a regular tree: a birth–death chain.
struct RadialTree {
    degree: u64,
}

impl LumpedWalk for RadialTree {
    type State = u32;

    fn origin(&self) -> u32 {
        0
    }

    fn scatter<R: Rng + ?Sized>(&self, &d: &u32, n: u64, rng: &mut R, out: &mut Vec<(u32, u64)>) {
        if d == 0 {
            out.push((1, n));
            return;
        }
        let down = binomial(n, 1.0 / self.degree as f64, rng);
        if down > 0 {
            out.push((d - 1, down));
        }
        if n > down {
            out.push((d + 1, n - down));
        }
    }
}

struct CayleyWalk<'a> {
    spec: &'a GroupSpec,
}

impl LumpedWalk for CayleyWalk<'_> {
    type State = GroupElement;

    fn origin(&self) -> GroupElement {
        self.spec.identity()
    }

    fn scatter<R: Rng + ?Sized>(&self, x: &GroupElement, n: u64, rng: &mut R, out: &mut Vec<(GroupElement, u64)>) {
        let weights = vec![1.0; self.spec.degree()];
        let mut split = Vec::new();
        multinomial(n, &weights, rng, &mut split);
        for (s, &m) in split.iter().enumerate() {
            if m > 0 {
                out.push((self.spec.mul_generator(x, s), m));
            }
        }
    }
}

struct NetworkWalk<'a> {
    net: &'a Network,
    kernel: WalkKernel,
}

impl LumpedWalk for NetworkWalk<'_> {
    type State = usize;

    fn origin(&self) -> usize {
        self.net.root()
    }

    fn scatter<R: Rng + ?Sized>(&self, &v: &usize, n: u64, rng: &mut R, out: &mut Vec<(usize, u64)>) {
        let nbrs: Vec<(usize, u64)> = self.net.neighbors(v).collect();
        let weights: Vec<f64> = nbrs
            .iter()
            .map(|&(_, c)| match self.kernel {
                WalkKernel::Simple => 1.0,
                WalkKernel::Counts => c as f64,
            })
            .collect();
        let mut split = Vec::new();
        multinomial(n, &weights, rng, &mut split);
        for (&(w, _), &m) in nbrs.iter().zip(&split) {
            if m > 0 {
                out.push((w, m));
            }
        }
    }
}

/// Cumulative origin visits per generation `0..=horizon` for one replica.
fn lumped_revisits<W: LumpedWalk, R: Rng + ?Sized>(
    walk: &W,
    dist: &OffspringDist,
    horizon: u32,
    cap: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let origin = walk.origin();
    let mut cloud: BTreeMap<W::State, u64> = BTreeMap::from([(origin.clone(), 1)]);
    let mut cumulative = vec![0u64; horizon as usize + 1];
    let mut visits = 0u64;
    let mut moves = Vec::new();
    for t in 1..=horizon as usize {
        let mut next: BTreeMap<W::State, u64> = BTreeMap::new();
        let mut population = 0u64;
        for (state, &n) in &cloud {
            let offspring = total_offspring(dist, n, rng);
            moves.clear();
            walk.scatter(state, offspring, rng, &mut moves);
            for (s, m) in moves.drain(..) {
                *next.entry(s).or_insert(0) += m;
            }
            population = population.saturating_add(offspring);
        }
        if population > cap {
            return Err(Error::Resource {
                bound: format!("particle population at generation {t}"),
                limit: cap,
            });
        }
        visits += next.get(&origin).copied().unwrap_or(0);
        cumulative[t] = visits;
        cloud = next;
    }
    Ok(cumulative)
}

fn replica_revisits<W: LumpedWalk>(
    walk: &W,
    dist: &OffspringDist,
    config: &RecurrenceConfig,
    stream: &RandomStreamSpec,
) -> Result<Vec<ReplicaRevisits>> {
    let h = config.horizon as usize;
    (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.child(r as u64).stream();
            let cum = lumped_revisits(walk, dist, config.horizon, config.population_cap, &mut rng)?;
            Ok(ReplicaRevisits {
                replica: r,
                at_half_horizon: cum[h / 2],
                at_horizon: cum[h],
            })
        })
        .collect()
}

/// Root-revisit statistics of a BRW on the Cayley graph of `spec`.
///
/// Particles are aggregated per generation by position (or by word length on
/// regular trees), which has the same law for visit counts as the tree-first
/// construction but does not store the family tree.
pub fn classify_recurrence(
    spec: &GroupSpec,
    dist: &OffspringDist,
    config: &RecurrenceConfig,
    stream: &RandomStreamSpec,
) -> Result<RecurrenceReport> {
    if config.replicas == 0 {
        return Err(Error::validation("replicas", "need at least one replica"));
    }
    let spectral = group_spectral_radius(spec, config.spectral_radius)?;
    let replicas = if spec.is_regular_tree() {
        let walk = RadialTree {
            degree: spec.degree() as u64,
        };
        replica_revisits(&walk, dist, config, stream)?
    } else {
        replica_revisits(&CayleyWalk { spec }, dist, config, stream)?
    };
    let threshold = 1.0 / spectral.value;
    let predicted = if dist.mean() > threshold {
        "recurrent"
    } else {
        "transient"
    };
    Ok(summarise(spec.presentation(), dist, config.horizon, replicas, spectral, threshold, predicted))
}

/// Exact probability that a BRW on the `degree`-regular tree, started from
/// one particle at the root, has no particle at the root in generations
/// `1..=horizon`.
pub fn no_revisit_probability(degree: u32, dist: &OffspringDist, horizon: u32) -> f64 {
    if horizon == 0 {
        return 1.0;
    }
    let down = 1.0 / degree as f64;
    let pgf = |s: f64| dist.atoms().iter().map(|&(k, p)| p * s.powi(k as i32)).sum::<f64>();
    // g[d]: no root visit within the remaining generations from distance d
    let len = horizon as usize + 2;
    let mut g = vec![1.0; len + 1];
    for _ in 1..horizon {
        let mut next = vec![1.0; len + 1];
        for d in 1..len {
            let back = if d > 1 { g[d - 1] } else { 0.0 };
            next[d] = pgf(down * back + (1.0 - down) * g[d + 1]);
        }
        g = next;
    }
    pgf(g[1])
}

fn summarise(
    group: String,
    dist: &OffspringDist,
    horizon: u32,
    replicas: Vec<ReplicaRevisits>,
    spectral: SpectralEstimate,
    threshold: f64,
    predicted: &str,
) -> RecurrenceReport {
    let growing = replicas.iter().filter(|r| r.growing()).count() as u64;
    let n = replicas.len() as u64;
    let fraction = growing as f64 / n as f64;
    RecurrenceReport {
        group,
        mean_offspring: dist.mean(),
        horizon,
        replicas,
        growing_fraction: fraction,
        growing_interval: wilson_interval(growing, n, DEFAULT_LEVEL),
        spectral,
        threshold,
        predicted: predicted.to_string(),
        verdict: if fraction >= 0.5 {
            "recurrent-consistent".into()
        } else {
            "transient-consistent".into()
        },
    }
}

/// Root-revisit statistics of a BRW whose particles walk on a finite
/// network with the given kernel (used for a second BRW on a trace).
pub fn network_recurrence(
    net: &Network,
    kernel: WalkKernel,
    dist: &OffspringDist,
    config: &RecurrenceConfig,
    stream: &RandomStreamSpec,
) -> Result<RecurrenceReport> {
    if config.replicas == 0 {
        return Err(Error::validation("replicas", "need at least one replica"));
    }
    let walk = NetworkWalk { net, kernel };
    let replicas = replica_revisits(&walk, dist, config, stream)?;
    // kill at the outermost level so the estimate is not trivially 1
    let radius = if net.max_level() >= 2 { net.max_level() - 1 } else { net.max_level() };
    let spectral = crate::trace_net::estimate_spectral_radius(
        &crate::trace_net::RestrictedKernel::network_ball(net, radius, kernel),
        crate::trace_net::DEFAULT_TOLERANCE,
        crate::trace_net::DEFAULT_MAX_ITERATIONS,
    )?;
    let threshold = 1.0 / spectral.value;
    let predicted = if dist.mean() > threshold {
        "recurrent"
    } else {
        "transient"
    };
    Ok(summarise("network".into(), dist, config.horizon, replicas, spectral, threshold, predicted))
}
