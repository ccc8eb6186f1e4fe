//! Ground normal logic programs: atoms, deduplicated bodies, rules, and the
//! indexes the propagators need (head/body maps, dependency graph, strongly
//! connected components, positive-support sets).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Index into a program's atom table.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AtomId(pub u32);

/// Index into a program's body table.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BodyId(pub u32);

impl AtomId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl BodyId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// A node of the dependency graph: either an atom or a body.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum GraphNode {
    Atom(AtomId),
    Body(BodyId),
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub name: String,
}

/// A rule body, split into positive and negative atom sets. Both vectors are
/// sorted and deduplicated; a body is identified by this pair. The positive
/// and negative sets may overlap (such a body is never satisfiable).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Body {
    pub positive: Vec<AtomId>,
    pub negative: Vec<AtomId>,
}

impl Body {
    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rule {
    pub head: AtomId,
    pub body: BodyId,
}

/// Syntactic class of a program, per the positive-body restriction. `Unary`
/// is the stricter class and is reported in preference to `ComponentUnary`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgramClass {
    Unary,
    ComponentUnary,
    General,
}

impl fmt::Display for ProgramClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramClass::Unary => write!(f, "unary"),
            ProgramClass::ComponentUnary => write!(f, "component-unary"),
            ProgramClass::General => write!(f, "general"),
        }
    }
}

/// A ground normal logic program, immutable after construction.
///
/// Rules are kept in first-occurrence order with duplicates collapsed; bodies
/// are deduplicated globally, so a body shared by several rules is a single
/// node in every derived structure (nogoods, dependency graph, flowgraph).
#[derive(Clone, Debug)]
pub struct Program {
    atoms: Vec<Atom>,
    bodies: Vec<Body>,
    rules: Vec<Rule>,
    /// Per atom: bodies of rules with that head, in first-occurrence order.
    bodies_of: Vec<Vec<BodyId>>,
    /// Per body: heads of rules with that body, deduplicated.
    heads_of: Vec<Vec<AtomId>>,
    /// Per atom: bodies containing the atom positively.
    pos_occurrences: Vec<Vec<BodyId>>,
    /// Per dependency-graph node (atoms then bodies): component id.
    scc_id: Vec<u32>,
    /// Per component id: the atoms in that component.
    scc_atoms: Vec<Vec<AtomId>>,
    /// Per body: the chosen positive-support set, restricted to the body's
    /// own component when the component contains positive body atoms.
    phi: Vec<Vec<AtomId>>,
    /// Per atom: bodies whose support set contains the atom.
    phi_occurrences: Vec<Vec<BodyId>>,
    class: ProgramClass,
}

impl Program {
    pub fn builder() -> ProgramBuilder {
        ProgramBuilder::default()
    }

    pub fn empty() -> Program {
        ProgramBuilder::default().build()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_bodies(&self) -> usize {
        self.bodies.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn atom_name(&self, a: AtomId) -> &str {
        &self.atoms[a.idx()].name
    }

    pub fn body(&self, b: BodyId) -> &Body {
        &self.bodies[b.idx()]
    }

    pub fn atom_ids(&self) -> impl Iterator<Item = AtomId> {
        (0..self.atoms.len() as u32).map(AtomId)
    }

    pub fn body_ids(&self) -> impl Iterator<Item = BodyId> {
        (0..self.bodies.len() as u32).map(BodyId)
    }

    pub fn find_atom(&self, name: &str) -> Option<AtomId> {
        self.atoms
            .iter()
            .position(|a| a.name == name)
            .map(|i| AtomId(i as u32))
    }

    /// Find the body with exactly these positive/negative atoms.
    pub fn find_body(&self, positive: &[AtomId], negative: &[AtomId]) -> Option<BodyId> {
        let key = Body {
            positive: sorted_dedup(positive),
            negative: sorted_dedup(negative),
        };
        self.bodies
            .iter()
            .position(|b| *b == key)
            .map(|i| BodyId(i as u32))
    }

    /// Bodies of rules whose head is `p`.
    pub fn bodies_of(&self, p: AtomId) -> &[BodyId] {
        &self.bodies_of[p.idx()]
    }

    /// Heads of rules whose body is `b`.
    pub fn heads_of(&self, b: BodyId) -> &[AtomId] {
        &self.heads_of[b.idx()]
    }

    /// Bodies in which `p` occurs positively.
    pub fn pos_occurrences(&self, p: AtomId) -> &[BodyId] {
        &self.pos_occurrences[p.idx()]
    }

    pub fn phi(&self, b: BodyId) -> &[AtomId] {
        &self.phi[b.idx()]
    }

    pub fn phi_occurrences(&self, p: AtomId) -> &[BodyId] {
        &self.phi_occurrences[p.idx()]
    }

    pub fn class(&self) -> ProgramClass {
        self.class
    }

    pub fn node_count(&self) -> usize {
        self.atoms.len() + self.bodies.len()
    }

    pub fn node_index(&self, n: GraphNode) -> usize {
        match n {
            GraphNode::Atom(a) => a.idx(),
            GraphNode::Body(b) => self.atoms.len() + b.idx(),
        }
    }

    pub fn node_at(&self, idx: usize) -> GraphNode {
        if idx < self.atoms.len() {
            GraphNode::Atom(AtomId(idx as u32))
        } else {
            GraphNode::Body(BodyId((idx - self.atoms.len()) as u32))
        }
    }

    pub fn scc_of(&self, n: GraphNode) -> u32 {
        self.scc_id[self.node_index(n)]
    }

    pub fn scc_count(&self) -> usize {
        self.scc_atoms.len()
    }

    /// Atoms in the same strongly connected component as body `b`.
    pub fn scc_atoms_of_body(&self, b: BodyId) -> &[AtomId] {
        &self.scc_atoms[self.scc_of(GraphNode::Body(b)) as usize]
    }

    pub fn scc_atom_groups(&self) -> &[Vec<AtomId>] {
        &self.scc_atoms
    }

    /// Successors of a node in the dependency graph: an atom points to the
    /// bodies it occurs in positively, a body points to the heads it derives.
    pub fn dependency_successors(&self, n: GraphNode) -> Vec<GraphNode> {
        match n {
            GraphNode::Atom(a) => self.pos_occurrences[a.idx()]
                .iter()
                .map(|&b| GraphNode::Body(b))
                .collect(),
            GraphNode::Body(b) => self.heads_of[b.idx()]
                .iter()
                .map(|&a| GraphNode::Atom(a))
                .collect(),
        }
    }

    /// External support of an atom set: bodies of rules whose head lies in
    /// `u` and whose positive part avoids `u`, minus bodies judged false by
    /// the predicate. Pass `|_| false` for the static external support.
    pub fn external_support<F>(&self, u: &BTreeSet<AtomId>, is_false_body: F) -> Vec<BodyId>
    where
        F: Fn(BodyId) -> bool,
    {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            if !u.contains(&r.head) || is_false_body(r.body) {
                continue;
            }
            if self.bodies[r.body.idx()]
                .positive
                .iter()
                .all(|p| !u.contains(p))
            {
                out.insert(r.body);
            }
        }
        out.into_iter().collect()
    }

    /// Render a body as `{a, not b}`; the empty body renders as `{}`.
    pub fn body_display(&self, b: BodyId) -> String {
        let body = &self.bodies[b.idx()];
        let mut parts: Vec<String> = body
            .positive
            .iter()
            .map(|&a| self.atom_name(a).to_string())
            .collect();
        parts.extend(
            body.negative
                .iter()
                .map(|&a| format!("not {}", self.atom_name(a))),
        );
        format!("{{{}}}", parts.join(", "))
    }

    pub fn node_display(&self, n: GraphNode) -> String {
        match n {
            GraphNode::Atom(a) => self.atom_name(a).to_string(),
            GraphNode::Body(b) => self.body_display(b),
        }
    }
}

impl fmt::Display for Program {
    /// Pretty-prints in the input grammar, rules in input order, body
    /// literals positive-first in atom-index order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            let body = &self.bodies[r.body.idx()];
            write!(f, "{}", self.atom_name(r.head))?;
            if !body.is_empty() {
                write!(f, " :- ")?;
                let mut first = true;
                for &p in &body.positive {
                    if !first {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", self.atom_name(p))?;
                    first = false;
                }
                for &n in &body.negative {
                    if !first {
                        write!(f, ", ")?;
                    }
                    write!(f, "not {}", self.atom_name(n))?;
                    first = false;
                }
            }
            writeln!(f, ".")?;
        }
        Ok(())
    }
}

fn sorted_dedup(xs: &[AtomId]) -> Vec<AtomId> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Incremental program construction; atom and body indexes are assigned in
/// first-registration order so downstream tie-breaking is deterministic.
#[derive(Default)]
pub struct ProgramBuilder {
    atoms: Vec<Atom>,
    atom_index: HashMap<String, AtomId>,
    bodies: Vec<Body>,
    body_index: HashMap<Body, BodyId>,
    rules: Vec<Rule>,
    rule_seen: HashMap<(AtomId, BodyId), ()>,
}

impl ProgramBuilder {
    /// Register (or look up) an atom by name.
    pub fn atom(&mut self, name: &str) -> AtomId {
        if let Some(&id) = self.atom_index.get(name) {
            return id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(Atom {
            name: name.to_string(),
        });
        self.atom_index.insert(name.to_string(), id);
        id
    }

    fn body(&mut self, positive: &[AtomId], negative: &[AtomId]) -> BodyId {
        let body = Body {
            positive: sorted_dedup(positive),
            negative: sorted_dedup(negative),
        };
        if let Some(&id) = self.body_index.get(&body) {
            return id;
        }
        let id = BodyId(self.bodies.len() as u32);
        self.body_index.insert(body.clone(), id);
        self.bodies.push(body);
        id
    }

    /// Add a rule; duplicate rules collapse (set semantics).
    pub fn rule(&mut self, head: AtomId, positive: &[AtomId], negative: &[AtomId]) {
        let body = self.body(positive, negative);
        if self.rule_seen.insert((head, body), ()).is_none() {
            self.rules.push(Rule { head, body });
        }
    }

    pub fn fact(&mut self, head: AtomId) {
        self.rule(head, &[], &[]);
    }

    pub fn build(self) -> Program {
        let n_atoms = self.atoms.len();
        let n_bodies = self.bodies.len();
        let mut bodies_of = vec![Vec::new(); n_atoms];
        let mut heads_of = vec![Vec::new(); n_bodies];
        for r in &self.rules {
            let bo: &mut Vec<BodyId> = &mut bodies_of[r.head.idx()];
            if !bo.contains(&r.body) {
                bo.push(r.body);
            }
            let ho: &mut Vec<AtomId> = &mut heads_of[r.body.idx()];
            if !ho.contains(&r.head) {
                ho.push(r.head);
            }
        }
        let mut pos_occurrences = vec![Vec::new(); n_atoms];
        for (i, b) in self.bodies.iter().enumerate() {
            for &p in &b.positive {
                pos_occurrences[p.idx()].push(BodyId(i as u32));
            }
        }

        let mut prog = Program {
            atoms: self.atoms,
            bodies: self.bodies,
            rules: self.rules,
            bodies_of,
            heads_of,
            pos_occurrences,
            scc_id: Vec::new(),
            scc_atoms: Vec::new(),
            phi: Vec::new(),
            phi_occurrences: Vec::new(),
            class: ProgramClass::Unary,
        };
        prog.compute_sccs();
        prog.compute_phi();
        prog.classify();
        prog
    }
}

impl Program {
    /// Tarjan's algorithm, iterative, over the atom+body node space.
    fn compute_sccs(&mut self) {
        let n = self.node_count();
        const UNSET: u32 = u32::MAX;
        let mut index = vec![UNSET; n];
        let mut lowlink = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![UNSET; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut next_index = 0u32;
        let mut n_comps = 0u32;

        // Call-stack frames: (node, successor cursor).
        let mut frames: Vec<(usize, usize)> = Vec::new();
        for start in 0..n {
            if index[start] != UNSET {
                continue;
            }
            frames.push((start, 0));
            index[start] = next_index;
            lowlink[start] = next_index;
            next_index += 1;
            stack.push(start);
            on_stack[start] = true;

            while let Some(&mut (v, ref mut cursor)) = frames.last_mut() {
                let succs = self.node_successor_indices(v);
                if *cursor < succs.len() {
                    let w = succs[*cursor];
                    *cursor += 1;
                    if index[w] == UNSET {
                        index[w] = next_index;
                        lowlink[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        frames.push((w, 0));
                    } else if on_stack[w] {
                        lowlink[v] = lowlink[v].min(index[w]);
                    }
                } else {
                    frames.pop();
                    if lowlink[v] == index[v] {
                        loop {
                            let w = stack.pop().expect("tarjan stack underflow");
                            on_stack[w] = false;
                            comp[w] = n_comps;
                            if w == v {
                                break;
                            }
                        }
                        n_comps += 1;
                    }
                    if let Some(&(parent, _)) = frames.last() {
                        lowlink[parent] = lowlink[parent].min(lowlink[v]);
                    }
                }
            }
        }

        let mut scc_atoms = vec![Vec::new(); n_comps as usize];
        for a in 0..self.atoms.len() {
            scc_atoms[comp[a] as usize].push(AtomId(a as u32));
        }
        self.scc_id = comp;
        self.scc_atoms = scc_atoms;
    }

    fn node_successor_indices(&self, idx: usize) -> Vec<usize> {
        match self.node_at(idx) {
            GraphNode::Atom(a) => self.pos_occurrences[a.idx()]
                .iter()
                .map(|b| self.atoms.len() + b.idx())
                .collect(),
            GraphNode::Body(b) => self.heads_of[b.idx()].iter().map(|a| a.idx()).collect(),
        }
    }

    fn compute_phi(&mut self) {
        let mut phi = Vec::with_capacity(self.bodies.len());
        for b in 0..self.bodies.len() {
            let bid = BodyId(b as u32);
            let body_scc = self.scc_of(GraphNode::Body(bid));
            let local: Vec<AtomId> = self.bodies[b]
                .positive
                .iter()
                .copied()
                .filter(|&p| self.scc_of(GraphNode::Atom(p)) == body_scc)
                .collect();
            if local.is_empty() {
                phi.push(self.bodies[b].positive.clone());
            } else {
                phi.push(local);
            }
        }
        let mut phi_occurrences = vec![Vec::new(); self.atoms.len()];
        for (b, atoms) in phi.iter().enumerate() {
            for &p in atoms {
                phi_occurrences[p.idx()].push(BodyId(b as u32));
            }
        }
        self.phi = phi;
        self.phi_occurrences = phi_occurrences;
    }

    fn classify(&mut self) {
        let unary = self
            .rules
            .iter()
            .all(|r| self.bodies[r.body.idx()].positive.len() <= 1);
        if unary {
            self.class = ProgramClass::Unary;
            return;
        }
        let component_unary = self.rules.iter().all(|r| {
            let body_scc = self.scc_of(GraphNode::Body(r.body));
            let in_scc = self.bodies[r.body.idx()]
                .positive
                .iter()
                .filter(|&&p| self.scc_of(GraphNode::Atom(p)) == body_scc)
                .count();
            in_scc <= 1
        });
        self.class = if component_unary {
            ProgramClass::ComponentUnary
        } else {
            ProgramClass::General
        };
    }
}
