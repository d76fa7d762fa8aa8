//! Node feature vectors for the graph network.
//!
//! Layout of the 79 slots:
//!
//! | range     | content                                              |
//! |-----------|------------------------------------------------------|
//! | `0..4`    | node type one-hot: variable, value, operation, application |
//! | `4..15`   | operator one-hot (operation nodes only)              |
//! | `15..47`  | IEEE-754 single-precision bits of the node's value   |
//! | `47..79`  | bits of the signed difference `value - target`       |
//!
//! Bit blocks are ordered sign, exponent (MSB first), significand (MSB
//! first). Variable and value nodes carry both bit blocks; everything else
//! leaves them zero.

use alloc::vec::Vec;

use crate::data::SrTask;
use crate::expr::Op;
use crate::semgraph::{SemGraph, ValueKind};

pub const FEATURE_DIM: usize = 79;
pub const TYPE_OFFSET: usize = 0;
pub const OP_OFFSET: usize = 4;
pub const VALUE_OFFSET: usize = 15;
pub const DIFF_OFFSET: usize = 47;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeType {
    Variable = 0,
    Value = 1,
    Operation = 2,
    Application = 3,
}

/// A node of the network's view of a [`SemGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphNode {
    Value(crate::semgraph::ValueId),
    Operation(Op),
    Application(crate::semgraph::AppId),
}

/// IEEE-754 single-precision bit pattern of `x` (rounded to `f32` first).
pub fn float32_bits(x: f64) -> [u8; 32] {
    let bits = (x as f32).to_bits();
    let mut out = [0u8; 32];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = ((bits >> (31 - k)) & 1) as u8;
    }
    out
}

fn write_bits(out: &mut [f32], x: f64) {
    let bits = (x as f32).to_bits();
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = ((bits >> (31 - k)) & 1) as f32;
    }
}

/// Flattened node list and neighbourhoods of a semantic graph.
///
/// Nodes are ordered value nodes, then one operation node per used operator,
/// then application nodes. Stored arcs run operation -> application,
/// argument -> application and application -> result; each node's
/// neighbourhood for attention holds itself plus every node it shares an
/// arc with, in either direction, without repeats.
#[derive(Clone, Debug)]
pub struct GraphLayout {
    pub nodes: Vec<GraphNode>,
    /// CSR offsets into `neighbors`, length `nodes.len() + 1`.
    pub offsets: Vec<usize>,
    pub neighbors: Vec<u32>,
    /// Layout index of each front application node, in front order.
    pub front: Vec<usize>,
    op_slot: [usize; Op::COUNT],
    app_base: usize,
}

impl GraphLayout {
    pub fn new(g: &SemGraph) -> Self {
        let n_values = g.values().len();
        let ops = g.used_ops();
        let mut op_slot = [usize::MAX; Op::COUNT];
        let mut nodes: Vec<GraphNode> = g.values().iter().map(|v| GraphNode::Value(v.id)).collect();
        for (k, &op) in ops.iter().enumerate() {
            op_slot[op.index()] = n_values + k;
            nodes.push(GraphNode::Operation(op));
        }
        let app_base = nodes.len();
        nodes.extend(g.apps().iter().map(|a| GraphNode::Application(a.id)));

        let n = nodes.len();
        let mut adj: Vec<Vec<u32>> = (0..n).map(|i| alloc::vec![i as u32]).collect();
        let mut link = |a: usize, b: usize| {
            adj[a].push(b as u32);
            adj[b].push(a as u32);
        };
        for a in g.apps() {
            let ai = app_base + a.id.index();
            link(op_slot[a.op.index()], ai);
            for arg in &a.args {
                link(arg.index(), ai);
            }
            link(ai, a.result.index());
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend(list);
            offsets.push(neighbors.len());
        }
        let front = g.front().iter().map(|a| app_base + a.index()).collect();
        GraphLayout { nodes, offsets, neighbors, front, op_slot, app_base }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors_of(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn app_index(&self, app: crate::semgraph::AppId) -> usize {
        self.app_base + app.index()
    }

    pub fn op_index(&self, op: Op) -> Option<usize> {
        let k = self.op_slot[op.index()];
        (k != usize::MAX).then_some(k)
    }
}

pub fn node_type(g: &SemGraph, node: GraphNode) -> NodeType {
    match node {
        GraphNode::Value(v) => match g.value(v).kind {
            ValueKind::Variable => NodeType::Variable,
            ValueKind::Value => NodeType::Value,
        },
        GraphNode::Operation(_) => NodeType::Operation,
        GraphNode::Application(_) => NodeType::Application,
    }
}

/// Writes the feature vector of `node`, instantiated for example `j`, into `out`.
pub fn write_node_features(g: &SemGraph, node: GraphNode, j: usize, task: &SrTask, out: &mut [f32]) {
    assert_eq!(out.len(), FEATURE_DIM);
    out.fill(0.0);
    out[TYPE_OFFSET + node_type(g, node) as usize] = 1.0;
    match node {
        GraphNode::Value(v) => {
            let x = g.value(v).values()[j];
            write_bits(&mut out[VALUE_OFFSET..DIFF_OFFSET], x);
            write_bits(&mut out[DIFF_OFFSET..FEATURE_DIM], x - task.targets[j]);
        }
        GraphNode::Operation(op) => out[OP_OFFSET + op.index()] = 1.0,
        GraphNode::Application(_) => {}
    }
}

/// Feature vector of one node for example `j`.
pub fn node_features(g: &SemGraph, node: GraphNode, j: usize, task: &SrTask) -> [f32; FEATURE_DIM] {
    let mut out = [0.0; FEATURE_DIM];
    write_node_features(g, node, j, task, &mut out);
    out
}

/// Row-major `layout.len() x 79` feature matrix for example `j`.
pub fn feature_matrix(g: &SemGraph, layout: &GraphLayout, j: usize, task: &SrTask) -> Vec<f32> {
    let mut x = alloc::vec![0.0f32; layout.len() * FEATURE_DIM];
    for (row, &node) in x.chunks_exact_mut(FEATURE_DIM).zip(&layout.nodes) {
        write_node_features(g, node, j, task, row);
    }
    x
}
