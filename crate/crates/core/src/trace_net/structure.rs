//! Combinatorial structure of a finite network: maximal line segments,
//! volume growth, cutpoints separating the root from a far shell, and a
//! lower estimate for the number of ends.

use serde::{Deserialize, Serialize};

use super::spectral::{estimate_spectral_radius, RestrictedKernel, SpectralEstimate, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use super::WalkKernel;
use crate::error::{Error, Result};
use crate::network::Network;

/// A maximal path whose interior vertices all have degree 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub vertices: Vec<usize>,
}

impl Segment {
    /// Length in edges.
    pub fn length(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn interior(&self) -> &[usize] {
        &self.vertices[1..self.vertices.len() - 1]
    }
}

/// All maximal segments. Each edge belongs to exactly one segment; a cycle
/// made only of degree-2 vertices is reported once, closed at its smallest
/// vertex.
pub fn line_segments(net: &Network) -> Vec<Segment> {
    let mut used = vec![false; net.edge_count()];
    let mut out = Vec::new();
    let walk = |start: usize, first: (usize, usize), used: &mut Vec<bool>| {
        let mut vertices = vec![start];
        let (mut v, mut e) = first;
        loop {
            used[e] = true;
            vertices.push(v);
            if net.degree(v) != 2 || v == start {
                break;
            }
            let next = net.incident(v).find(|&(_, f)| f != e).unwrap();
            v = next.0;
            e = next.1;
        }
        Segment { vertices }
    };
    for u in 0..net.len() {
        if net.degree(u) == 2 {
            continue;
        }
        for (w, e) in net.incident(u) {
            if !used[e] {
                out.push(walk(u, (w, e), &mut used));
            }
        }
    }
    for u in 0..net.len() {
        if let Some((w, e)) = net.incident(u).find(|&(_, e)| !used[e]) {
            out.push(walk(u, (w, e), &mut used));
        }
    }
    out
}

/// Number of maximal segments of length at least `k`.
pub fn find_line_segments(net: &Network, k: usize) -> Result<usize> {
    if k < 1 {
        return Err(Error::validation("k", "segment length must be at least 1"));
    }
    Ok(line_segments(net).iter().filter(|s| s.length() >= k).count())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentBound {
    pub length: usize,
    /// Restricted spectral radius of SRW on the segment interior, a lower
    /// bound on the spectral radius of the whole network.
    pub bound: SpectralEstimate,
    /// `cos(π / length)`, the closed form for `length - 1` interior vertices.
    pub closed_form: f64,
}

/// Lower bound on the spectral radius from the interior of the longest
/// segment (if any segment has an interior vertex).
pub fn segment_lower_bound(net: &Network) -> Result<Option<SegmentBound>> {
    let Some(best) = line_segments(net)
        .into_iter()
        .filter(|s| s.length() >= 2)
        .max_by_key(|s| s.length())
    else {
        return Ok(None);
    };
    let kernel = RestrictedKernel::network_subset(net, best.interior(), WalkKernel::Simple, best.length() as u32);
    let bound = estimate_spectral_radius(&kernel, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;
    Ok(Some(SegmentBound {
        length: best.length(),
        bound,
        closed_form: (std::f64::consts::PI / best.length() as f64).cos(),
    }))
}

/// `|B(n)|` for `n = 0..=max_radius`, counted by vertex level.
pub fn volume_growth(net: &Network, max_radius: u32) -> Vec<u64> {
    let mut per_level = vec![0u64; max_radius as usize + 1];
    for &l in net.levels() {
        if l <= max_radius {
            per_level[l as usize] += 1;
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

/// Vertices `x != root` with level at most `ceil(window / 2)` (and below
/// `window`) whose removal
/// disconnects the root from every vertex at level `>= window`.
///
/// The shell is contracted to one extra node and articulation points are
/// found by an iterative depth-first search; `x` separates the root from the
/// shell exactly when it is a tree ancestor of the shell node whose child on
/// that path has no back edge above `x`.
pub fn find_cutpoints(net: &Network, window: u32) -> Result<Vec<usize>> {
    if window == 0 || window > net.max_level() {
        return Err(Error::validation(
            "window",
            format!("window {window} outside the network extent 1..={}", net.max_level()),
        ));
    }
    let n = net.len();
    let shell = n;
    let inside = |v: usize| net.level(v) < window;
    let node_nbrs = |v: usize| -> Vec<usize> {
        if v == shell {
            (0..n)
                .filter(|&u| inside(u) && net.incident(u).any(|(w, _)| !inside(w)))
                .collect()
        } else {
            net.incident(v).map(|(w, _)| if inside(w) { w } else { shell }).collect()
        }
    };
    let mut disc = vec![u32::MAX; n + 1];
    let mut low = vec![0u32; n + 1];
    let mut parent = vec![usize::MAX; n + 1];
    let mut time = 0;
    let root = net.root();
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(root, node_nbrs(root), 0)];
    disc[root] = 0;
    low[root] = 0;
    while let Some(top) = stack.last_mut() {
        let v = top.0;
        if top.2 < top.1.len() {
            let w = top.1[top.2];
            top.2 += 1;
            if disc[w] == u32::MAX {
                time += 1;
                disc[w] = time;
                low[w] = time;
                parent[w] = v;
                let nbrs = node_nbrs(w);
                stack.push((w, nbrs, 0));
            } else if w != parent[v] {
                low[v] = low[v].min(disc[w]);
            }
        } else {
            stack.pop();
            if let Some(p) = stack.last() {
                let p = p.0;
                low[p] = low[p].min(low[v]);
            }
        }
    }
    if disc[shell] == u32::MAX {
        return Err(Error::Disconnected);
    }
    let limit = window.div_ceil(2).min(window - 1);
    let mut out = Vec::new();
    let mut child = shell;
    let mut x = parent[shell];
    while x != root {
        if low[child] >= disc[x] && net.level(x) <= limit {
            out.push(x);
        }
        child = x;
        x = parent[x];
    }
    out.sort_by_key(|&v| (net.level(v), v));
    Ok(out)
}

/// Components of the network with the open ball `level < radius` removed
/// that reach level `probe`.
pub fn estimate_ends(net: &Network, radius: u32, probe: u32) -> Result<usize> {
    if probe <= radius {
        return Err(Error::validation("probe", "probe radius must exceed the ball radius"));
    }
    let n = net.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] || net.level(s) < radius {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut reaches = false;
        while let Some(v) = stack.pop() {
            reaches |= net.level(v) >= probe;
            for (w, _) in net.incident(v) {
                if !seen[w] && net.level(w) >= radius {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if reaches {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Removes `x` and checks by BFS whether the root still reaches the shell.
    fn separates(net: &Network, x: usize, window: u32) -> bool {
        let mut seen = vec![false; net.len()];
        seen[x] = true;
        seen[net.root()] = true;
        let mut stack = vec![net.root()];
        while let Some(v) = stack.pop() {
            if net.level(v) >= window {
                return false;
            }
            for (w, _) in net.incident(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        true
    }

    fn brute_cutpoints(net: &Network, window: u32) -> Vec<usize> {
        let mut out: Vec<usize> = (0..net.len())
            .filter(|&x| x != net.root() && net.level(x) <= window.div_ceil(2).min(window - 1) && separates(net, x, window))
            .collect();
        out.sort_by_key(|&v| (net.level(v), v));
        out
    }

    #[test]
    fn path_segments() {
        let p = Network::path(10);
        for k in 1..=10 {
            assert_eq!(find_line_segments(&p, k).unwrap(), 1);
        }
        assert_eq!(find_line_segments(&p, 11).unwrap(), 0);
    }

    #[test]
    fn tree_ball_has_no_long_segments() {
        let t = Network::regular_tree_ball(4, 4);
        assert_eq!(find_line_segments(&t, 2).unwrap(), 0);
        assert_eq!(find_line_segments(&t, 1).unwrap(), t.edge_count());
    }

    #[test]
    fn segments_partition_edges() {
        let g = Network::grid_ball(3);
        let total: usize = line_segments(&g).iter().map(Segment::length).sum();
        assert_eq!(total, g.edge_count());
        let c = Network::cycle(7);
        let segs = line_segments(&c);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].length(), 7);
    }

    #[test]
    fn segment_bound_matches_cosine() {
        let p = Network::path(6);
        let b = segment_lower_bound(&p).unwrap().unwrap();
        assert_eq!(b.length, 6);
        assert!((b.bound.value - b.closed_form).abs() < 1e-7);
        assert!(segment_lower_bound(&Network::regular_tree_ball(3, 3)).unwrap().is_none());
        let c = segment_lower_bound(&Network::cycle(8)).unwrap().unwrap();
        assert!((c.bound.value - (std::f64::consts::PI / 8.0).cos()).abs() < 1e-7);
    }

    #[test]
    fn volume_growth_counts_balls() {
        let g = Network::grid_ball(5);
        let v = volume_growth(&g, 5);
        for (n, &b) in v.iter().enumerate() {
            assert_eq!(b, 2 * (n * n + n) as u64 + 1);
        }
        let single = Network::from_edges(1, 0, Vec::<(usize, usize, u64)>::new(), None).unwrap();
        assert_eq!(volume_growth(&single, 0), vec![1]);
    }

    #[test]
    fn path_cutpoints() {
        let p = Network::path(3);
        assert_eq!(find_cutpoints(&p, 3).unwrap(), vec![1, 2]);
        let q = Network::path(20);
        assert_eq!(find_cutpoints(&q, 20).unwrap(), (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn cycle_has_no_cutpoints() {
        let c = Network::cycle(12);
        for w in 1..=6 {
            assert!(find_cutpoints(&c, w).unwrap().is_empty());
        }
    }

    #[test]
    fn window_beyond_extent_is_rejected() {
        assert!(matches!(find_cutpoints(&Network::path(3), 4), Err(Error::Validation { .. })));
    }

    #[test]
    fn cutpoints_match_brute_force_on_lollipops() {
        // cycle of 6 through the root, then a path with a triangle
        let edges = vec![
            (0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1), (5, 0, 1),
            (3, 6, 1), (6, 7, 1), (7, 8, 1), (8, 9, 1), (9, 7, 1), (9, 10, 1), (10, 11, 1),
        ];
        let net = Network::from_edges(12, 0, edges, None).unwrap();
        for w in 1..=net.max_level() {
            assert_eq!(find_cutpoints(&net, w).unwrap(), brute_cutpoints(&net, w), "window {w}");
        }
    }

    #[test]
    fn ends_of_paths_and_tree_balls() {
        let p = Network::centred_path(10);
        assert_eq!(estimate_ends(&p, 3, 8).unwrap(), 2);
        let t = Network::regular_tree_ball(4, 6);
        for r in 1..=4 {
            assert_eq!(estimate_ends(&t, r, 6).unwrap(), 4 * 3usize.pow(r - 1));
        }
        assert!(estimate_ends(&t, 3, 3).is_err());
    }

    proptest::proptest! {
        #[test]
        fn cutpoints_agree_with_brute_force(
            extra in proptest::collection::vec((0usize..30, 0usize..30), 0..12),
            seed_tree in proptest::collection::vec(0usize..1000, 29),
        ) {
            // random spanning tree on 30 vertices plus a few chords
            let mut edges = std::collections::BTreeSet::new();
            for (i, &r) in seed_tree.iter().enumerate() {
                let v = i + 1;
                edges.insert((r % v, v));
            }
            for (a, b) in extra {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            let net = Network::from_edges(30, 0, edges.into_iter().map(|(a, b)| (a, b, 1)), None).unwrap();
            for w in 1..=net.max_level() {
                proptest::prop_assert_eq!(find_cutpoints(&net, w).unwrap(), brute_cutpoints(&net, w));
            }
        }
    }
}
