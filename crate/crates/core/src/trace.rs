//! The trace of a BRW: visited group elements and traversed Cayley edges
//! with undirected traversal counts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Deref;

use crate::brw::{BrwRun, LabelledTree, PositionMap};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::network::Network;

#[derive(Clone, Debug)]
pub struct TraceNetwork {
    spec: GroupSpec,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    network: Network,
    /// Trace vertex carrying `S_v`, per tree vertex.
    vertex_of: Vec<u32>,
    /// Trace edge traversed by `(v⁻, v)`, per non-root tree vertex.
    edge_of: Vec<u32>,
}

impl Deref for TraceNetwork {
    type Target = Network;

    fn deref(&self) -> &Network {
        &self.network
    }
}

pub fn build_trace(spec: &GroupSpec, labelled: &LabelledTree, positions: &PositionMap) -> Result<TraceNetwork> {
    let tree = labelled.tree();
    if positions.len() != tree.len() {
        return Err(Error::validation("positions", "position map does not match the tree"));
    }
    let mut elements = Vec::new();
    let mut index: HashMap<GroupElement, usize> = HashMap::new();
    let mut vertex_of = Vec::with_capacity(tree.len());
    for x in positions.iter() {
        let next = elements.len();
        let id = *index.entry(x.clone()).or_insert(next);
        if id == next {
            elements.push(x.clone());
        }
        vertex_of.push(id as u32);
    }
    let mut edge_index: HashMap<(u32, u32), usize> = HashMap::new();
    let mut edges: Vec<(usize, usize, u64)> = Vec::new();
    let mut edge_of = vec![u32::MAX; tree.len()];
    for v in 1..tree.len() {
        let a = vertex_of[tree.parent(v).unwrap()];
        let b = vertex_of[v];
        let key = (a.min(b), a.max(b));
        let id = *edge_index.entry(key).or_insert_with(|| {
            edges.push((a as usize, b as usize, 0));
            edges.len() - 1
        });
        edges[id].2 += 1;
        edge_of[v] = id as u32;
    }
    let levels = elements.iter().map(|x| spec.word_length(x) as u32).collect();
    let network = Network::from_edges(elements.len(), 0, edges, Some(levels))?;
    Ok(TraceNetwork {
        spec: spec.clone(),
        elements,
        index,
        network,
        vertex_of,
        edge_of,
    })
}

impl TraceNetwork {
    pub fn from_run(run: &BrwRun) -> Result<Self> {
        build_trace(&run.spec, &run.labelled, &run.positions)
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn element(&self, v: usize) -> &GroupElement {
        &self.elements[v]
    }

    pub fn index_of(&self, x: &GroupElement) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.index.contains_key(x)
    }

    pub fn vertex_of_tree(&self, v: usize) -> usize {
        self.vertex_of[v] as usize
    }

    pub fn edge_of_tree(&self, v: usize) -> Option<usize> {
        match self.edge_of[v] {
            u32::MAX => None,
            e => Some(e as usize),
        }
    }

    /// Edge list CSV `x,y,N` in order of first traversal.
    pub fn to_edge_csv(&self) -> String {
        let mut out = String::from("x,y,N\n");
        for e in self.network.edges() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.spec.encode(&self.elements[e.a]),
                self.spec.encode(&self.elements[e.b]),
                e.count
            );
        }
        out
    }

    /// Vertex list CSV `x,level,degree` in order of first visit.
    pub fn to_vertex_csv(&self) -> String {
        let mut out = String::from("x,level,degree\n");
        for v in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.spec.encode(&self.elements[v]),
                self.network.level(v),
                self.network.degree(v)
            );
        }
        out
    }

    /// Order-independent description: sorted `(x, y, N)` with `x < y`.
    pub fn canonical_edges(&self) -> Vec<(GroupElement, GroupElement, u64)> {
        let mut out: Vec<_> = self
            .network
            .edges()
            .iter()
            .map(|e| {
                let (x, y) = (self.elements[e.a].clone(), self.elements[e.b].clone());
                if x <= y {
                    (x, y, e.count)
                } else {
                    (y, x, e.count)
                }
            })
            .collect();
        out.sort();
        out
    }
}
