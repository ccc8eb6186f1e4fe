//! The support flowgraph of a program under an assignment.
//!
//! Nodes are a source `⊤` plus one node per atom and per body. A body's
//! predecessors are its support atoms `φ(β)` minus the false ones, where
//! `φ(β)` is the positive body restricted to the body's own component when
//! that intersection is non-empty, and the full positive body otherwise.
//! An atom's predecessors are its non-false bodies. `⊤` feeds exactly the
//! bodies with statically empty `φ`. False nodes keep their incoming edges
//! but contribute no outgoing support.

use crate::assignment::Assignment;
use crate::dominators::DominatorTree;
use crate::program::{AtomId, BodyId, GraphNode, Program};
use std::collections::BTreeSet;
use std::fmt::Write as _;

/// A flowgraph node. Dense index: 0 is the source, atoms follow, then bodies.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Node {
    Top,
    Atom(AtomId),
    Body(BodyId),
}

impl Node {
    pub fn graph_node(self) -> Option<GraphNode> {
        match self {
            Node::Top => None,
            Node::Atom(a) => Some(GraphNode::Atom(a)),
            Node::Body(b) => Some(GraphNode::Body(b)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SupportFlowgraph {
    n_atoms: usize,
    n_bodies: usize,
    succs: Vec<Vec<u32>>,
    preds: Vec<Vec<u32>>,
}

impl SupportFlowgraph {
    /// Build the flowgraph for the current assignment. Total construction;
    /// dominator inference is only read off under body-saturation, but the
    /// graph itself is defined for any assignment.
    pub fn build(program: &Program, a: &Assignment) -> SupportFlowgraph {
        let n_atoms = program.n_atoms();
        let n_bodies = program.n_bodies();
        let n = 1 + n_atoms + n_bodies;
        let mut g = SupportFlowgraph {
            n_atoms,
            n_bodies,
            succs: vec![Vec::new(); n],
            preds: vec![Vec::new(); n],
        };
        for b in program.body_ids() {
            let bn = g.index(Node::Body(b));
            let phi = program.phi(b);
            if phi.is_empty() {
                g.add_edge(0, bn);
            } else {
                for &p in phi {
                    if !a.is_false_atom(p) {
                        g.add_edge(g.index(Node::Atom(p)), bn);
                    }
                }
            }
        }
        for p in program.atom_ids() {
            let pn = g.index(Node::Atom(p));
            for &b in program.bodies_of(p) {
                if !a.is_false_body(b) {
                    g.add_edge(g.index(Node::Body(b)), pn);
                }
            }
        }
        g
    }

    fn add_edge(&mut self, from: usize, to: usize) {
        self.succs[from].push(to as u32);
        self.preds[to].push(from as u32);
    }

    pub fn node_count(&self) -> usize {
        1 + self.n_atoms + self.n_bodies
    }

    pub fn index(&self, node: Node) -> usize {
        match node {
            Node::Top => 0,
            Node::Atom(a) => 1 + a.idx(),
            Node::Body(b) => 1 + self.n_atoms + b.idx(),
        }
    }

    pub fn node_at(&self, idx: usize) -> Node {
        if idx == 0 {
            Node::Top
        } else if idx <= self.n_atoms {
            Node::Atom(AtomId((idx - 1) as u32))
        } else {
            Node::Body(BodyId((idx - 1 - self.n_atoms) as u32))
        }
    }

    pub fn successors(&self, idx: usize) -> &[u32] {
        &self.succs[idx]
    }

    pub fn predecessors(&self, idx: usize) -> &[u32] {
        &self.preds[idx]
    }

    pub fn has_edge(&self, from: Node, to: Node) -> bool {
        let f = self.index(from);
        let t = self.index(to) as u32;
        self.succs[f].contains(&t)
    }

    pub fn node_display(&self, program: &Program, node: Node) -> String {
        match node {
            Node::Top => "TOP".to_string(),
            Node::Atom(a) => program.atom_name(a).to_string(),
            Node::Body(b) => program.body_display(b),
        }
    }

    /// DOT rendering with deterministic node order; dominator-tree edges are
    /// overlaid dashed when a tree is supplied.
    pub fn to_dot(&self, program: &Program, tree: Option<&DominatorTree>) -> String {
        let mut out = String::new();
        out.push_str("digraph support_flowgraph {\n  rankdir=LR;\n");
        for idx in 0..self.node_count() {
            let node = self.node_at(idx);
            let shape = match node {
                Node::Top => " shape=diamond",
                Node::Atom(_) => "",
                Node::Body(_) => " shape=box",
            };
            let label = self.node_display(program, node).replace('"', "\\\"");
            let _ = writeln!(out, "  n{idx} [label=\"{label}\"{shape}];");
        }
        for idx in 0..self.node_count() {
            for &s in &self.succs[idx] {
                let _ = writeln!(out, "  n{idx} -> n{s};");
            }
        }
        if let Some(tree) = tree {
            for idx in 0..self.node_count() {
                if let Some(d) = tree.idom(idx) {
                    let _ = writeln!(out, "  n{d} -> n{idx} [style=dashed, constraint=false];");
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// A proposed cut: the source-side node set. The sink side is the complement.
#[derive(Clone, Debug)]
pub struct CutSpec {
    pub source_side: BTreeSet<Node>,
}

/// Classification of a cut per the frontier conditions. `front` are
/// source-side nodes with an edge into the sink side, `back` the converse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CutVerdict {
    Valid {
        /// Frontier is all bodies and back-edges come only from bodies.
        support: bool,
        /// Frontier is all atoms and back-edges come only from bodies.
        atom: bool,
        front: Vec<Node>,
        back: Vec<Node>,
    },
    Invalid {
        reason: String,
    },
}

/// Classify a cut of the flowgraph. The source side must contain `⊤`; the
/// partition is given by membership in `spec.source_side`.
pub fn validate_cut(g: &SupportFlowgraph, spec: &CutSpec) -> CutVerdict {
    if !spec.source_side.contains(&Node::Top) {
        return CutVerdict::Invalid {
            reason: "source side must contain the source node".to_string(),
        };
    }
    let mut in_s = vec![false; g.node_count()];
    for &n in &spec.source_side {
        in_s[g.index(n)] = true;
    }
    let mut front = Vec::new();
    let mut back = Vec::new();
    for idx in 0..g.node_count() {
        let crosses = g
            .successors(idx)
            .iter()
            .any(|&t| in_s[t as usize] != in_s[idx]);
        if crosses {
            if in_s[idx] {
                front.push(g.node_at(idx));
            } else {
                back.push(g.node_at(idx));
            }
        }
    }
    let back_all_bodies = back.iter().all(|n| matches!(n, Node::Body(_)));
    let support = front.iter().all(|n| matches!(n, Node::Body(_))) && back_all_bodies;
    let atom = front.iter().all(|n| matches!(n, Node::Atom(_))) && back_all_bodies;
    if support || atom {
        CutVerdict::Valid {
            support,
            atom,
            front,
            back,
        }
    } else {
        CutVerdict::Invalid {
            reason: "frontier mixes atoms and bodies or an atom has a back-edge".to_string(),
        }
    }
}
