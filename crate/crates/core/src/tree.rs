//! Truncated Galton–Watson family trees with plain, augmented and
//! unimodular rootings, and the stretched binary skeleton search.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_VERTEX_BUDGET: usize = 10_000_000;

const PROB_TOLERANCE: f64 = 1e-12;

/// Offspring law with finite support, `p_0 = 0` and `p_1 < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringDist {
    atoms: Vec<(u32, f64)>,
    mean: f64,
}

impl OffspringDist {
    pub fn new(atoms: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        const FIELD: &str = "offspring";
        let mut merged: Vec<(u32, f64)> = Vec::new();
        for (k, p) in atoms {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::validation(FIELD, format!("probability for k={k} must be non-negative")));
            }
            if p == 0.0 {
                continue;
            }
            if k == 0 {
                return Err(Error::validation(FIELD, "p_0 must be 0 (every particle has an offspring)"));
            }
            match merged.iter_mut().find(|(j, _)| *j == k) {
                Some(atom) => atom.1 += p,
                None => merged.push((k, p)),
            }
        }
        merged.sort_by_key(|&(k, _)| k);
        let total: f64 = merged.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::validation(FIELD, format!("probabilities sum to {total}, not 1")));
        }
        if merged.len() == 1 && merged[0].0 == 1 {
            return Err(Error::validation(FIELD, "p_1 must be < 1 (the walk must branch)"));
        }
        let mean = merged.iter().map(|&(k, p)| k as f64 * p).sum();
        Ok(OffspringDist { atoms: merged, mean })
    }

    /// Parses `1:0.95,2:0.05`, optionally prefixed by `p=`.
    pub fn parse(text: &str) -> Result<Self> {
        const FIELD: &str = "offspring";
        let body = text.trim();
        let (body, base) = match body.strip_prefix("p=") {
            Some(rest) => (rest, 2),
            None => (body, 0),
        };
        let mut atoms = Vec::new();
        let mut pos = base;
        for part in body.split(',') {
            let (k, p) = part
                .split_once(':')
                .ok_or_else(|| Error::syntax(FIELD, pos, format!("expected `k:p`, found `{part}`")))?;
            let k = k
                .trim()
                .parse::<u32>()
                .map_err(|_| Error::syntax(FIELD, pos, format!("bad offspring count `{k}`")))?;
            let p = p
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::syntax(FIELD, pos + part.find(':').unwrap() + 1, format!("bad probability `{p}`")))?;
            atoms.push((k, p));
            pos += part.len() + 1;
        }
        Self::new(atoms)
    }

    /// Mean number of offspring, `Σ k p_k`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn atoms(&self) -> &[(u32, f64)] {
        &self.atoms
    }

    pub fn prob(&self, k: u32) -> f64 {
        self.atoms.iter().find(|&&(j, _)| j == k).map_or(0.0, |&(_, p)| p)
    }

    pub fn min_offspring(&self) -> u32 {
        self.atoms[0].0
    }

    pub fn max_offspring(&self) -> u32 {
        self.atoms[self.atoms.len() - 1].0
    }

    /// Normalising constant `c = Σ p_k / (k+1)` of the unimodular root bias.
    pub fn ugw_constant(&self) -> f64 {
        self.atoms.iter().map(|&(k, p)| p / (k as f64 + 1.0)).sum()
    }

    /// Law of the number of root children under the given rooting.
    pub fn root_law(&self, kind: TreeKind) -> Vec<(u32, f64)> {
        match kind {
            TreeKind::Gw => self.atoms.clone(),
            TreeKind::Agw => self.atoms.iter().map(|&(k, p)| (k + 1, p)).collect(),
            TreeKind::Ugw => {
                let c = self.ugw_constant();
                self.atoms
                    .iter()
                    .map(|&(k, p)| (k + 1, p / ((k as f64 + 1.0) * c)))
                    .collect()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        sample_atoms(&self.atoms, rng)
    }

    pub fn to_config_string(&self) -> String {
        let parts: Vec<String> = self.atoms.iter().map(|(k, p)| format!("{k}:{p}")).collect();
        parts.join(",")
    }
}

pub(crate) fn sample_atoms<R: Rng + ?Sized>(atoms: &[(u32, f64)], rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(k, p) in atoms {
        acc += p;
        if u < acc {
            return k;
        }
    }
    atoms[atoms.len() - 1].0
}

impl Serialize for OffspringDist {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_config_string())
    }
}

impl<'de> Deserialize<'de> for OffspringDist {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        OffspringDist::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Gw,
    Agw,
    Ugw,
}

impl std::str::FromStr for TreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gw" => Ok(TreeKind::Gw),
            "agw" => Ok(TreeKind::Agw),
            "ugw" => Ok(TreeKind::Ugw),
            other => Err(Error::validation("kind", format!("unknown tree kind `{other}` (gw, agw, ugw)"))),
        }
    }
}

/// A rooted tree stored in breadth-first order: children of a vertex are
/// contiguous and vertex 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct RootedTree {
    parent: Vec<u32>,
    level: Vec<u32>,
    first_child: Vec<u32>,
    child_count: Vec<u32>,
    depth: u32,
    kind: TreeKind,
}

const NO_PARENT: u32 = u32::MAX;

impl RootedTree {
    /// Builds a tree from per-vertex child counts listed in breadth-first
    /// order. Vertices at `depth` must have zero children.
    pub fn from_child_counts(counts: &[u32], depth: u32, kind: TreeKind) -> Result<Self> {
        let mut builder = TreeBuilder::new(kind, depth);
        let mut next = 0usize;
        while next < builder.len() {
            let k = *counts
                .get(next)
                .ok_or_else(|| Error::validation("tree", "child count list is too short"))?;
            if builder.level[next] == depth && k > 0 {
                return Err(Error::validation("tree", "vertex at the truncation depth has children"));
            }
            builder.add_children(next, k, usize::MAX)?;
            next += 1;
        }
        if counts.len() != builder.len() {
            return Err(Error::validation("tree", "child count list has trailing entries"));
        }
        Ok(builder.finish())
    }

    pub fn complete(arity: u32, depth: u32) -> Self {
        let mut builder = TreeBuilder::new(TreeKind::Gw, depth);
        let mut next = 0;
        while next < builder.len() {
            if builder.level[next] < depth {
                builder.add_children(next, arity, usize::MAX).unwrap();
            } else {
                builder.add_children(next, 0, usize::MAX).unwrap();
            }
            next += 1;
        }
        builder.finish()
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        match self.parent[v] {
            NO_PARENT => None,
            p => Some(p as usize),
        }
    }

    pub fn level(&self, v: usize) -> u32 {
        self.level[v]
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let start = self.first_child[v] as usize;
        start..start + self.child_count[v] as usize
    }

    pub fn child_count(&self, v: usize) -> usize {
        self.child_count[v] as usize
    }

    /// Graph degree of `v` inside the tree (children plus parent).
    pub fn degree(&self, v: usize) -> usize {
        self.child_count(v) + usize::from(v != 0)
    }

    /// Number of vertices at each level `0..=depth`.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.depth as usize + 1];
        for &l in &self.level {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub fn vertices_at_level(&self, level: u32) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.level[v] == level)
    }

    /// Parent-array CSV (`vertex,parent,level`); the root has an empty parent.
    pub fn to_parent_csv(&self) -> String {
        let mut out = String::from("vertex,parent,level\n");
        for v in 0..self.len() {
            match self.parent(v) {
                Some(p) => writeln!(out, "{v},{p},{}", self.level[v]).unwrap(),
                None => writeln!(out, "{v},,{}", self.level[v]).unwrap(),
            }
        }
        out
    }
}

pub(crate) struct TreeBuilder {
    parent: Vec<u32>,
    level: Vec<u32>,
    first_child: Vec<u32>,
    child_count: Vec<u32>,
    depth: u32,
    kind: TreeKind,
}

impl TreeBuilder {
    pub(crate) fn new(kind: TreeKind, depth: u32) -> Self {
        TreeBuilder {
            parent: vec![NO_PARENT],
            level: vec![0],
            first_child: vec![0],
            child_count: vec![0],
            depth,
            kind,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.parent.len()
    }

    pub(crate) fn level(&self, v: usize) -> u32 {
        self.level[v]
    }

    /// Children must be added in breadth-first order of their parents.
    pub(crate) fn add_children(&mut self, v: usize, k: u32, budget: usize) -> Result<std::ops::Range<usize>> {
        let start = self.parent.len();
        if start + k as usize > budget {
            return Err(Error::Resource {
                bound: "tree vertex budget".into(),
                limit: budget as u64,
            });
        }
        if k > 0 {
            self.first_child[v] = start as u32;
        }
        self.child_count[v] = k;
        let l = self.level[v] + 1;
        for _ in 0..k {
            self.parent.push(v as u32);
            self.level.push(l);
            self.first_child.push(0);
            self.child_count.push(0);
        }
        Ok(start..start + k as usize)
    }

    pub(crate) fn finish(self) -> RootedTree {
        RootedTree {
            parent: self.parent,
            level: self.level,
            first_child: self.first_child,
            child_count: self.child_count,
            depth: self.depth,
            kind: self.kind,
        }
    }
}

/// Draws the number of children of `v` given its position in the tree.
pub(crate) fn draw_offspring<R: Rng + ?Sized>(
    dist: &OffspringDist,
    root_law: &[(u32, f64)],
    v: usize,
    rng: &mut R,
) -> u32 {
    if v == 0 {
        sample_atoms(root_law, rng)
    } else {
        dist.sample(rng)
    }
}

/// Samples a family tree truncated at `depth`. Offspring are drawn vertex by
/// vertex in breadth-first order, so with the same stream a shallower tree is
/// a prefix of a deeper one.
pub fn sample_tree<R: Rng + ?Sized>(
    dist: &OffspringDist,
    kind: TreeKind,
    depth: u32,
    budget: usize,
    rng: &mut R,
) -> Result<RootedTree> {
    let root_law = dist.root_law(kind);
    let mut builder = TreeBuilder::new(kind, depth);
    let mut v = 0;
    while v < builder.len() {
        if builder.level(v) < depth {
            let k = draw_offspring(dist, &root_law, v, rng);
            builder.add_children(v, k, budget)?;
        }
        v += 1;
    }
    Ok(builder.finish())
}

/// A full binary tree whose edges are stretched into tree paths of length
/// at most `stretch`, found inside a truncated family tree.
#[derive(Clone, Debug, PartialEq)]
pub struct StretchedBinary {
    /// The skeleton re-indexed as its own rooted tree.
    pub tree: RootedTree,
    /// Original vertex id of every skeleton vertex.
    pub source: Vec<usize>,
    /// Whether each skeleton vertex is a branch point.
    pub branch: Vec<bool>,
    pub stretch: u32,
}

/// Greedy depth-first search for a stretched binary skeleton hanging from
/// the root.
///
/// A vertex is usable when it lies deeper than `depth - stretch` (it may end
/// the skeleton) or when two of its children each lead, within `stretch`
/// steps of it, to usable vertices. The root may reach the first branch point
/// through a stem of at most `stretch` edges. Returns `None` when no such
/// skeleton exists.
pub fn extract_stretched_binary(tree: &RootedTree, stretch: u32) -> Option<StretchedBinary> {
    assert!(stretch >= 1, "stretch length must be at least 1");
    let mut search = SkeletonSearch {
        tree,
        stretch,
        usable: vec![None; tree.len()],
    };
    let top = search.find_within(0, stretch)?;
    let mut keep = vec![false; tree.len()];
    let mut branch = vec![false; tree.len()];
    mark_path(tree, 0, top, &mut keep);
    let mut stack = vec![top];
    while let Some(b) = stack.pop() {
        if tree.level(b) + stretch > tree.depth() {
            continue;
        }
        branch[b] = true;
        let (left, right) = search.split(b).expect("usable vertex has a split");
        for end in [left, right] {
            mark_path(tree, b, end, &mut keep);
            stack.push(end);
        }
    }
    Some(compact(tree, &keep, &branch, stretch))
}

struct SkeletonSearch<'a> {
    tree: &'a RootedTree,
    stretch: u32,
    usable: Vec<Option<bool>>,
}

impl SkeletonSearch<'_> {
    fn is_usable(&mut self, v: usize) -> bool {
        if let Some(known) = self.usable[v] {
            return known;
        }
        let ok = self.tree.level(v) + self.stretch > self.tree.depth() || self.split(v).is_some();
        self.usable[v] = Some(ok);
        ok
    }

    /// First pair of children (in order) that both reach a usable vertex.
    fn split(&mut self, v: usize) -> Option<(usize, usize)> {
        let mut found = None;
        for c in self.tree.children(v) {
            if let Some(end) = self.find_within(c, self.stretch - 1) {
                match found {
                    None => found = Some(end),
                    Some(first) => return Some((first, end)),
                }
            }
        }
        None
    }

    /// Depth-first search below `v` (inclusive) for a usable vertex at most
    /// `budget` steps further down.
    fn find_within(&mut self, v: usize, budget: u32) -> Option<usize> {
        if self.is_usable(v) {
            return Some(v);
        }
        if budget == 0 {
            return None;
        }
        let children = self.tree.children(v);
        children.into_iter().find_map(|c| self.find_within(c, budget - 1))
    }
}

fn mark_path(tree: &RootedTree, top: usize, mut v: usize, keep: &mut [bool]) {
    keep[v] = true;
    while v != top {
        v = tree.parent(v).expect("path stays below top");
        keep[v] = true;
    }
}

fn compact(tree: &RootedTree, keep: &[bool], branch: &[bool], stretch: u32) -> StretchedBinary {
    let source: Vec<usize> = (0..tree.len()).filter(|&v| keep[v]).collect();
    let mut new_id = vec![usize::MAX; tree.len()];
    for (i, &v) in source.iter().enumerate() {
        new_id[v] = i;
    }
    let mut builder = TreeBuilder::new(tree.kind(), tree.depth());
    let mut out_source = vec![0usize];
    let mut i = 0;
    while i < builder.len() {
        let v = out_source[i];
        let kids: Vec<usize> = tree.children(v).filter(|&c| keep[c]).collect();
        builder.add_children(i, kids.len() as u32, usize::MAX).unwrap();
        out_source.extend(kids);
        i += 1;
    }
    let branch = out_source.iter().map(|&v| branch[v]).collect();
    debug_assert_eq!(out_source.len(), source.len());
    StretchedBinary {
        tree: builder.finish(),
        source: out_source,
        branch,
        stretch,
    }
}
