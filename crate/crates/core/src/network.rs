//! Finite undirected networks with traversal counts on the edges and a
//! level (distance from the root in the ambient graph) on every vertex.
//!
//! Trace networks carry Cayley word lengths as levels; the small reference
//! graphs built here use breadth-first distance from the root.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub count: u64,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    offsets: Vec<usize>,
    adj: Vec<(u32, u32)>,
    edges: Vec<Edge>,
    level: Vec<u32>,
    root: usize,
}

impl Network {
    /// Builds a simple graph; `levels` defaults to breadth-first distance
    /// from `root` (unreachable vertices get `u32::MAX`).
    pub fn from_edges(
        n: usize,
        root: usize,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
        levels: Option<Vec<u32>>,
    ) -> Result<Self> {
        if root >= n {
            return Err(Error::validation("root", format!("root {root} out of range for {n} vertices")));
        }
        let mut seen = HashMap::new();
        let mut list = Vec::new();
        for (a, b, count) in edges {
            if a >= n || b >= n {
                return Err(Error::validation("edges", format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(Error::validation("edges", format!("self-loop at {a}")));
            }
            if count == 0 {
                return Err(Error::validation("edges", format!("edge ({a},{b}) has zero count")));
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key, list.len()).is_some() {
                return Err(Error::validation("edges", format!("duplicate edge ({a},{b})")));
            }
            list.push(Edge { a, b, count });
        }
        let mut deg = vec![0usize; n];
        for e in &list {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0u32, 0u32); offsets[n]];
        for (id, e) in list.iter().enumerate() {
            adj[fill[e.a]] = (e.b as u32, id as u32);
            fill[e.a] += 1;
            adj[fill[e.b]] = (e.a as u32, id as u32);
            fill[e.b] += 1;
        }
        let mut net = Network {
            offsets,
            adj,
            edges: list,
            level: Vec::new(),
            root,
        };
        net.level = match levels {
            Some(l) => {
                if l.len() != n {
                    return Err(Error::validation("levels", "one level per vertex required"));
                }
                l
            }
            None => net
                .bfs_distances(root)
                .into_iter()
                .map(|d| d.unwrap_or(u32::MAX))
                .collect(),
        };
        Ok(net)
    }

    /// Path `0 - 1 - ... - k` rooted at 0.
    pub fn path(k: usize) -> Self {
        Self::from_edges(k + 1, 0, (0..k).map(|i| (i, i + 1, 1)), None).unwrap()
    }

    /// Path of `2k + 1` vertices rooted at its midpoint.
    pub fn centred_path(k: usize) -> Self {
        Self::from_edges(2 * k + 1, k, (0..2 * k).map(|i| (i, i + 1, 1)), None).unwrap()
    }

    pub fn cycle(k: usize) -> Self {
        Self::from_edges(k, 0, (0..k).map(|i| (i, (i + 1) % k, 1)), None).unwrap()
    }

    /// Star centred at the root with one leaf per count.
    pub fn star(counts: &[u64]) -> Self {
        Self::from_edges(
            counts.len() + 1,
            0,
            counts.iter().enumerate().map(|(i, &c)| (0, i + 1, c)),
            None,
        )
        .unwrap()
    }

    /// Complete `arity`-ary rooted tree of the given depth.
    pub fn complete_tree(arity: usize, depth: usize) -> Self {
        let mut edges = Vec::new();
        let mut frontier = vec![0usize];
        let mut n = 1;
        for _ in 0..depth {
            let mut next = Vec::with_capacity(frontier.len() * arity);
            for &v in &frontier {
                for _ in 0..arity {
                    edges.push((v, n, 1));
                    next.push(n);
                    n += 1;
                }
            }
            frontier = next;
        }
        Self::from_edges(n, 0, edges, None).unwrap()
    }

    /// Ball of radius `radius` in the `degree`-regular tree.
    pub fn regular_tree_ball(degree: usize, radius: usize) -> Self {
        let mut edges = Vec::new();
        let mut frontier = vec![0usize];
        let mut n = 1;
        for r in 0..radius {
            let mut next = Vec::new();
            let fan = if r == 0 { degree } else { degree - 1 };
            for &v in &frontier {
                for _ in 0..fan {
                    edges.push((v, n, 1));
                    next.push(n);
                    n += 1;
                }
            }
            frontier = next;
        }
        Self::from_edges(n, 0, edges, None).unwrap()
    }

    /// The ℓ¹ ball `|x| + |y| <= radius` of the square lattice, rooted at 0.
    pub fn grid_ball(radius: i64) -> Self {
        let mut index = HashMap::new();
        let mut coords = Vec::new();
        for x in -radius..=radius {
            let span = radius - x.abs();
            for y in -span..=span {
                index.insert((x, y), coords.len());
                coords.push((x, y));
            }
        }
        let mut edges = Vec::new();
        for (i, &(x, y)) in coords.iter().enumerate() {
            for (dx, dy) in [(1, 0), (0, 1)] {
                if let Some(&j) = index.get(&(x + dx, y + dy)) {
                    edges.push((i, j, 1));
                }
            }
        }
        let root = index[&(0, 0)];
        let levels = coords.iter().map(|&(x, y)| (x.abs() + y.abs()) as u32).collect();
        Self::from_edges(coords.len(), root, edges, Some(levels)).unwrap()
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn level(&self, v: usize) -> u32 {
        self.level[v]
    }

    pub fn levels(&self) -> &[u32] {
        &self.level
    }

    /// Largest level present (the extent of the network).
    pub fn max_level(&self) -> u32 {
        self.level.iter().copied().filter(|&l| l != u32::MAX).max().unwrap_or(0)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbour, edge id)` pairs of `v`.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|&(w, e)| (w as usize, e as usize))
    }

    /// `(neighbour, count)` pairs of `v`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.incident(v).map(move |(w, e)| (w, self.edges[e].count))
    }

    /// `Σ_{z~v} N(v, z)`.
    pub fn total_count(&self, v: usize) -> u64 {
        self.neighbors(v).map(|(_, c)| c).sum()
    }

    /// `Σ N(x, y)` over all edges.
    pub fn total_edge_count(&self) -> u64 {
        self.edges.iter().map(|e| e.count).sum()
    }

    pub fn bfs_distances(&self, from: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for (w, _) in self.incident(v) {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(self.root).iter().all(Option::is_some)
    }

    /// Vertices at level `<= radius`.
    pub fn ball(&self, radius: u32) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.level[v] <= radius).collect()
    }
}
