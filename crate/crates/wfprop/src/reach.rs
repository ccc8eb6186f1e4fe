//! Reachability instances over graph and node-set variables with lattice
//! bounds, their encoding as ground rules, and a brute-force domain
//! consistency checker for the encoded constraint.
//!
//! An instance carries a graph variable (edge bounds), a start-set variable,
//! and a reached-set variable. The encoding emits `reached(x) :- start(x)`
//! for start candidates and `reached(x) :- reached(y), edge(y,x)` for edge
//! candidates; undetermined edge/start memberships get an even-negation
//! choice pair, fixed-in members become facts, out members are omitted.
//! Fixed reached values are returned as assumptions rather than rules, since
//! normal rules cannot express integrity constraints.

use crate::assignment::Literal;
use crate::engine::{Conflict, Propagators};
use crate::program::{AtomId, Program};
use crate::solver;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use thiserror::Error;

/// Membership state of one candidate element in a set variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    In,
    Out,
    Maybe,
}

impl Membership {
    fn fixed(self) -> bool {
        self != Membership::Maybe
    }
}

/// Which variables the generator fixes completely.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixMode {
    /// Graph and start set fixed; reached set open.
    GraphStart,
    /// Reached set fixed; graph and start partially open.
    Reached,
    /// Everything partially open.
    None,
}

/// A reachability instance: node labels are `v0..v{n-1}`.
#[derive(Clone, Debug)]
pub struct ReachInstance {
    n_nodes: usize,
    /// Dense (from, to) -> membership; defaults to Out.
    edges: Vec<Membership>,
    start: Vec<Membership>,
    reached: Vec<Membership>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("instance parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{what} enumeration guard: {actual} exceeds {limit}")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
}

impl ReachInstance {
    pub fn new(n_nodes: usize) -> ReachInstance {
        ReachInstance {
            n_nodes,
            edges: vec![Membership::Out; n_nodes * n_nodes],
            start: vec![Membership::Out; n_nodes],
            reached: vec![Membership::Maybe; n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn node_label(&self, i: usize) -> String {
        format!("v{i}")
    }

    pub fn set_edge(&mut self, from: usize, to: usize, m: Membership) {
        self.edges[from * self.n_nodes + to] = m;
    }

    pub fn edge(&self, from: usize, to: usize) -> Membership {
        self.edges[from * self.n_nodes + to]
    }

    pub fn set_start(&mut self, node: usize, m: Membership) {
        self.start[node] = m;
    }

    pub fn start(&self, node: usize) -> Membership {
        self.start[node]
    }

    pub fn set_reached(&mut self, node: usize, m: Membership) {
        self.reached[node] = m;
    }

    pub fn reached(&self, node: usize) -> Membership {
        self.reached[node]
    }

    pub fn edge_candidates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_nodes;
        (0..n * n)
            .filter(|i| self.edges[*i] != Membership::Out)
            .map(move |i| (i / n, i % n))
    }

    /// Count of undetermined memberships across all three variables.
    pub fn open_count(&self) -> usize {
        self.edges
            .iter()
            .chain(self.start.iter())
            .chain(self.reached.iter())
            .filter(|m| !m.fixed())
            .count()
    }

    /// Parse the flat text record: a `nodes N` line, then `edge vI vJ
    /// in|maybe`, `start vI in|maybe`, and `reached vI in|out|maybe` lines.
    /// Unlisted edges and starts are out; unlisted reached entries are open.
    pub fn parse(text: &str) -> Result<ReachInstance, InstanceError> {
        let mut inst: Option<ReachInstance> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let src = raw.split('%').next().unwrap_or("").trim();
            if src.is_empty() {
                continue;
            }
            let mut parts = src.split_whitespace();
            let kind = parts.next().expect("non-empty line has a first token");
            let fail = |message: String| InstanceError::Parse { line, message };
            match kind {
                "nodes" => {
                    let n: usize = parts
                        .next()
                        .ok_or_else(|| fail("missing node count".into()))?
                        .parse()
                        .map_err(|_| fail("node count must be an integer".into()))?;
                    if inst.is_some() {
                        return Err(fail("duplicate nodes line".into()));
                    }
                    inst = Some(ReachInstance::new(n));
                }
                "edge" | "start" | "reached" => {
                    let inst = inst
                        .as_mut()
                        .ok_or_else(|| fail("nodes line must come first".into()))?;
                    let node = |tok: Option<&str>| -> Result<usize, InstanceError> {
                        let t = tok.ok_or_else(|| InstanceError::Parse {
                            line,
                            message: "missing node label".into(),
                        })?;
                        let idx: usize = t
                            .strip_prefix('v')
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| InstanceError::Parse {
                                line,
                                message: format!("bad node label '{t}' (expected vK)"),
                            })?;
                        if idx >= inst.n_nodes {
                            return Err(InstanceError::Parse {
                                line,
                                message: format!("node {t} out of range"),
                            });
                        }
                        Ok(idx)
                    };
                    let a = node(parts.next())?;
                    let b = if kind == "edge" {
                        Some(node(parts.next())?)
                    } else {
                        None
                    };
                    let m = match parts.next() {
                        Some("in") => Membership::In,
                        Some("out") if kind == "reached" => Membership::Out,
                        Some("maybe") => Membership::Maybe,
                        other => return Err(fail(format!("bad membership {other:?} for {kind}"))),
                    };
                    match (kind, b) {
                        ("edge", Some(b)) => inst.set_edge(a, b, m),
                        ("start", None) => inst.set_start(a, m),
                        ("reached", None) => inst.set_reached(a, m),
                        _ => unreachable!(),
                    }
                }
                other => return Err(fail(format!("unknown record '{other}'"))),
            }
        }
        inst.ok_or(InstanceError::Parse {
            line: 0,
            message: "missing nodes line".into(),
        })
    }
}

impl fmt::Display for ReachInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes {}", self.n_nodes)?;
        for from in 0..self.n_nodes {
            for to in 0..self.n_nodes {
                match self.edge(from, to) {
                    Membership::Out => {}
                    m => writeln!(
                        f,
                        "edge v{from} v{to} {}",
                        if m == Membership::In { "in" } else { "maybe" }
                    )?,
                }
            }
        }
        for v in 0..self.n_nodes {
            match self.start(v) {
                Membership::Out => {}
                m => writeln!(
                    f,
                    "start v{v} {}",
                    if m == Membership::In { "in" } else { "maybe" }
                )?,
            }
        }
        for v in 0..self.n_nodes {
            let m = match self.reached(v) {
                Membership::In => "in",
                Membership::Out => "out",
                Membership::Maybe => continue,
            };
            writeln!(f, "reached v{v} {m}")?;
        }
        Ok(())
    }
}

/// The encoded program plus the fixed reached values as assumptions.
pub struct ReachEncoding {
    pub program: Program,
    pub assumptions: Vec<Literal>,
    /// reached atom per node, in node order.
    pub reached_atoms: Vec<AtomId>,
    /// edge atom per in/maybe candidate.
    pub edge_atoms: Vec<((usize, usize), AtomId)>,
    /// start atom per in/maybe candidate.
    pub start_atoms: Vec<(usize, AtomId)>,
}

/// Emit the rule families for the instance. The result is component-unary:
/// only reached atoms can form positive cycles, and each recursive rule has a
/// single reached atom in its body's component.
#[allow(clippy::needless_range_loop)]
pub fn encode_reach(inst: &ReachInstance) -> ReachEncoding {
    let mut b = Program::builder();
    // Register reached atoms first so every node has one, rule or not.
    let reached_atoms: Vec<AtomId> = (0..inst.n_nodes())
        .map(|v| b.atom(&format!("reached(v{v})")))
        .collect();

    let mut start_atoms = Vec::new();
    for v in 0..inst.n_nodes() {
        let m = inst.start(v);
        if m == Membership::Out {
            continue;
        }
        let s = b.atom(&format!("start(v{v})"));
        start_atoms.push((v, s));
        b.rule(reached_atoms[v], &[s], &[]);
        match m {
            Membership::In => b.fact(s),
            Membership::Maybe => {
                let ns = b.atom(&format!("nstart(v{v})"));
                b.rule(s, &[], &[ns]);
                b.rule(ns, &[], &[s]);
            }
            Membership::Out => unreachable!(),
        }
    }
    let mut edge_atoms = Vec::new();
    for (from, to) in inst.edge_candidates() {
        let e = b.atom(&format!("edge(v{from},v{to})"));
        edge_atoms.push(((from, to), e));
        b.rule(reached_atoms[to], &[reached_atoms[from], e], &[]);
        match inst.edge(from, to) {
            Membership::In => b.fact(e),
            Membership::Maybe => {
                let ne = b.atom(&format!("nedge(v{from},v{to})"));
                b.rule(e, &[], &[ne]);
                b.rule(ne, &[], &[e]);
            }
            Membership::Out => unreachable!(),
        }
    }
    let program = b.build();
    let assumptions = (0..inst.n_nodes())
        .filter_map(|v| match inst.reached(v) {
            Membership::In => Some(Literal::t_atom(reached_atoms[v])),
            Membership::Out => Some(Literal::f_atom(reached_atoms[v])),
            Membership::Maybe => None,
        })
        .collect();
    ReachEncoding {
        program,
        assumptions,
        reached_atoms,
        edge_atoms,
        start_atoms,
    }
}

/// Deterministic random instance. A hidden completion is sampled first and
/// fixed values are taken from it, so fixed-reached instances stay
/// satisfiable by construction.
#[allow(clippy::needless_range_loop)]
pub fn random_instance(
    seed: u64,
    n_nodes: usize,
    edge_density: f64,
    fixed_fraction: f64,
    fix_mode: FixMode,
) -> ReachInstance {
    assert!(n_nodes >= 1, "instance needs at least one node");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = ReachInstance::new(n_nodes);

    // Candidate memberships and a hidden completion over them.
    let mut hidden_edges = vec![false; n_nodes * n_nodes];
    for from in 0..n_nodes {
        for to in 0..n_nodes {
            if from == to || !rng.gen_bool(edge_density) {
                continue;
            }
            let hidden = rng.gen_bool(0.5);
            hidden_edges[from * n_nodes + to] = hidden;
            let fixed = match fix_mode {
                FixMode::GraphStart => true,
                _ => rng.gen_bool(fixed_fraction),
            };
            inst.set_edge(
                from,
                to,
                match (fixed, hidden) {
                    (true, true) => Membership::In,
                    (true, false) => Membership::Out,
                    (false, _) => Membership::Maybe,
                },
            );
        }
    }
    let mut hidden_start = vec![false; n_nodes];
    for v in 0..n_nodes {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let hidden = rng.gen_bool(0.6);
        hidden_start[v] = hidden;
        let fixed = match fix_mode {
            FixMode::GraphStart => true,
            _ => rng.gen_bool(fixed_fraction),
        };
        inst.set_start(
            v,
            match (fixed, hidden) {
                (true, true) => Membership::In,
                (true, false) => Membership::Out,
                (false, _) => Membership::Maybe,
            },
        );
    }

    // Reached values come from the hidden completion's reachable set.
    let hidden_reach = reachable_set(n_nodes, &hidden_start, |f, t| hidden_edges[f * n_nodes + t]);
    for v in 0..n_nodes {
        let fix = match fix_mode {
            FixMode::GraphStart => false,
            FixMode::Reached => true,
            FixMode::None => rng.gen_bool(fixed_fraction),
        };
        if fix {
            inst.set_reached(
                v,
                if hidden_reach[v] {
                    Membership::In
                } else {
                    Membership::Out
                },
            );
        }
    }
    inst
}

#[allow(clippy::needless_range_loop)]
fn reachable_set(n: usize, start: &[bool], has_edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| start[v]).collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(v) = stack.pop() {
        for t in 0..n {
            if !seen[t] && has_edge(v, t) {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// Verdict for one undetermined membership value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DcVerdict {
    Consistent,
    MissedPruning,
    UnsoundPruning,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DcEntry {
    /// Constraint variable, e.g. `edge(v0,v1)`.
    pub var: String,
    /// The membership value under test: true = in, false = out.
    pub value_in: bool,
    pub verdict: DcVerdict,
}

/// Domain-consistency report for one instance and propagator configuration.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DcReport {
    pub props: Vec<&'static str>,
    pub entries: Vec<DcEntry>,
    pub consistent: usize,
    pub missed_pruning: usize,
    pub unsound_pruning: usize,
    /// Propagation conflicted at the root.
    pub root_conflict: bool,
    /// Root conflict although satisfying completions exist; always a bug.
    pub unsound_conflict: bool,
    /// Number of satisfying completions found by the enumeration oracle.
    pub completions: u64,
}

impl DcReport {
    pub fn domain_consistent(&self) -> bool {
        self.missed_pruning == 0 && self.unsound_pruning == 0 && !self.unsound_conflict
    }
}

const DC_NODE_GUARD: usize = 8;
const DC_OPEN_GUARD: usize = 24;

/// Compare root propagation against exhaustive completion enumeration.
///
/// The oracle side enumerates every completion of the undetermined edge and
/// start memberships, computes the reachable set by plain graph search, and
/// keeps completions whose reachable set respects the fixed reached values.
/// A membership value is supported when some kept completion realizes it.
/// The propagation side encodes the instance, assumes the fixed reached
/// values, and runs the configured propagators to their root fixpoint.
pub fn check_domain_consistency(
    inst: &ReachInstance,
    props: Propagators,
) -> Result<DcReport, InstanceError> {
    if inst.n_nodes() > DC_NODE_GUARD {
        return Err(InstanceError::GuardExceeded {
            what: "domain-consistency nodes",
            limit: DC_NODE_GUARD,
            actual: inst.n_nodes(),
        });
    }
    let n = inst.n_nodes();
    let open_edges: Vec<(usize, usize)> = inst
        .edge_candidates()
        .filter(|&(f, t)| inst.edge(f, t) == Membership::Maybe)
        .collect();
    let open_starts: Vec<usize> = (0..n)
        .filter(|&v| inst.start(v) == Membership::Maybe)
        .collect();
    let k = open_edges.len() + open_starts.len();
    if k > DC_OPEN_GUARD {
        return Err(InstanceError::GuardExceeded {
            what: "domain-consistency open memberships",
            limit: DC_OPEN_GUARD,
            actual: k,
        });
    }

    // Supported values per undetermined membership, by exhaustive completion.
    let mut edge_support = vec![[false; 2]; open_edges.len()];
    let mut start_support = vec![[false; 2]; open_starts.len()];
    let open_reached: Vec<usize> = (0..n)
        .filter(|&v| inst.reached(v) == Membership::Maybe)
        .collect();
    let mut reached_support = vec![[false; 2]; open_reached.len()];
    let mut completions = 0u64;
    for choice in 0u64..(1 << k) {
        let edge_in = |f: usize, t: usize| -> bool {
            match inst.edge(f, t) {
                Membership::In => true,
                Membership::Out => false,
                Membership::Maybe => {
                    let i = open_edges
                        .iter()
                        .position(|&e| e == (f, t))
                        .expect("open edge is indexed");
                    choice & (1 << i) != 0
                }
            }
        };
        let start: Vec<bool> = (0..n)
            .map(|v| match inst.start(v) {
                Membership::In => true,
                Membership::Out => false,
                Membership::Maybe => {
                    let i = open_starts
                        .iter()
                        .position(|&s| s == v)
                        .expect("open start is indexed");
                    choice & (1 << (open_edges.len() + i)) != 0
                }
            })
            .collect();
        let reach = reachable_set(n, &start, edge_in);
        let respects_fixed = (0..n).all(|v| match inst.reached(v) {
            Membership::In => reach[v],
            Membership::Out => !reach[v],
            Membership::Maybe => true,
        });
        if !respects_fixed {
            continue;
        }
        completions += 1;
        for (i, &(f, t)) in open_edges.iter().enumerate() {
            edge_support[i][edge_in(f, t) as usize] = true;
        }
        for (i, &v) in open_starts.iter().enumerate() {
            start_support[i][start[v] as usize] = true;
        }
        for (i, &v) in open_reached.iter().enumerate() {
            reached_support[i][reach[v] as usize] = true;
        }
    }

    // Propagation side.
    let enc = encode_reach(inst);
    let fixpoint: Result<_, (_, Conflict)> =
        solver::root_fixpoint(&enc.program, props, &enc.assumptions);
    let mut report = DcReport {
        props: props.names(),
        entries: Vec::new(),
        consistent: 0,
        missed_pruning: 0,
        unsound_pruning: 0,
        root_conflict: false,
        unsound_conflict: false,
        completions,
    };
    let eng = match fixpoint {
        Ok(eng) => eng,
        Err(_) => {
            report.root_conflict = true;
            report.unsound_conflict = completions > 0;
            return Ok(report);
        }
    };

    let mut record = |var: String, atom: AtomId, support: [bool; 2]| {
        let value = eng.trail().value(crate::assignment::Var::Atom(atom));
        for value_in in [true, false] {
            let supported = support[value_in as usize];
            // The value is pruned when the atom is pinned to the opposite.
            let pruned = value == Some(!value_in);
            let verdict = match (supported, pruned) {
                (true, true) => DcVerdict::UnsoundPruning,
                (false, false) => DcVerdict::MissedPruning,
                _ => DcVerdict::Consistent,
            };
            match verdict {
                DcVerdict::Consistent => report.consistent += 1,
                DcVerdict::MissedPruning => report.missed_pruning += 1,
                DcVerdict::UnsoundPruning => report.unsound_pruning += 1,
            }
            report.entries.push(DcEntry {
                var: var.clone(),
                value_in,
                verdict,
            });
        }
    };

    for (i, &(f, t)) in open_edges.iter().enumerate() {
        let atom = enc
            .edge_atoms
            .iter()
            .find(|(e, _)| *e == (f, t))
            .expect("open edge has an atom")
            .1;
        record(format!("edge(v{f},v{t})"), atom, edge_support[i]);
    }
    for (i, &v) in open_starts.iter().enumerate() {
        let atom = enc
            .start_atoms
            .iter()
            .find(|(s, _)| *s == v)
            .expect("open start has an atom")
            .1;
        record(format!("start(v{v})"), atom, start_support[i]);
    }
    for (i, &v) in open_reached.iter().enumerate() {
        record(
            format!("reached(v{v})"),
            enc.reached_atoms[v],
            reached_support[i],
        );
    }
    Ok(report)
}

/// A chain of two-node cycles, each reachable only over one undetermined
/// gateway edge, every node fixed reached; optional backward decoy edges add
/// free choices without offering alternative support. Each gateway is the
/// single external support of its cycle, the regime where justification
/// inference prunes and completion nogoods alone cannot.
pub fn gateway_chain_instance(n_cycles: usize, decoys: usize, seed: u64) -> ReachInstance {
    let n = 1 + 2 * n_cycles;
    let mut inst = ReachInstance::new(n);
    inst.set_start(0, Membership::In);
    let mut prev = 0usize;
    for c in 0..n_cycles {
        let a = 1 + 2 * c;
        let b = a + 1;
        inst.set_edge(a, b, Membership::In);
        inst.set_edge(b, a, Membership::In);
        inst.set_edge(prev, a, Membership::Maybe);
        prev = a;
    }
    for v in 0..n {
        inst.set_reached(v, Membership::In);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed = 0;
    let mut tries = 0;
    while placed < decoys && tries < 100 {
        tries += 1;
        // Backward edges only: they never add support to a later cycle.
        let from = rng.gen_range(1..n);
        let to = rng.gen_range(0..from);
        if inst.edge(from, to) == Membership::Out {
            inst.set_edge(from, to, Membership::Maybe);
            placed += 1;
        }
    }
    inst
}

/// The worked counterexample: a two-cycle `v1 <-> v2` reachable only over an
/// undetermined edge from the fixed start `v0`, with every node fixed
/// reached. Unit propagation and forward-loop leave the edge open although
/// only its presence admits a completion.
pub fn counterexample_instance() -> ReachInstance {
    let mut inst = ReachInstance::new(3);
    inst.set_start(0, Membership::In);
    inst.set_edge(1, 2, Membership::In);
    inst.set_edge(2, 1, Membership::In);
    inst.set_edge(0, 1, Membership::Maybe);
    inst.set_reached(0, Membership::In);
    inst.set_reached(1, Membership::In);
    inst.set_reached(2, Membership::In);
    inst
}
