//! The propagation engine: unit propagation, forward-loop, dominator
//! consequences, and failed-literal probing composed round-robin to a joint
//! fixpoint over one trail.

use crate::assignment::{Assigned, Assignment, Literal, Reason, Var};
use crate::dominators::{self, DomConflict};
use crate::flowgraph::SupportFlowgraph;
use crate::nogoods::{NogoodId, NogoodStore};
use crate::program::{AtomId, BodyId, Program};
use crate::unfounded::{self, UnfoundedConflict};
use std::rc::Rc;

/// Which propagators run on top of unit propagation (always enabled).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Propagators {
    pub fl: bool,
    pub dom: bool,
    pub blprobe: bool,
}

impl Propagators {
    pub fn up_only() -> Propagators {
        Propagators::default()
    }

    pub fn up_fl() -> Propagators {
        Propagators {
            fl: true,
            ..Default::default()
        }
    }

    pub fn up_fl_dom() -> Propagators {
        Propagators {
            fl: true,
            dom: true,
            blprobe: false,
        }
    }

    /// The dominator walk reads the flowgraph at an unfounded-free fixpoint,
    /// which forward-loop establishes.
    pub fn validate(self) -> Result<Propagators, ConfigError> {
        if self.dom && !self.fl {
            return Err(ConfigError::DomRequiresFl);
        }
        Ok(self)
    }

    pub fn names(self) -> Vec<&'static str> {
        let mut v = vec!["up"];
        if self.fl {
            v.push("fl");
        }
        if self.dom {
            v.push("dom");
        }
        if self.blprobe {
            v.push("blprobe");
        }
        v
    }

    /// Parse a comma-separated list like `up,fl,dom`. Unit propagation is
    /// always on, so a leading `up` is accepted and redundant.
    pub fn parse(s: &str) -> Result<Propagators, ConfigError> {
        let mut props = Propagators::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "up" => {}
                "fl" => props.fl = true,
                "dom" => props.dom = true,
                "blprobe" => props.blprobe = true,
                other => return Err(ConfigError::UnknownPropagator(other.to_string())),
            }
        }
        props.validate()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("propagator 'dom' requires 'fl'")]
    DomRequiresFl,
    #[error("unknown propagator '{0}' (expected up, fl, dom, blprobe)")]
    UnknownPropagator(String),
}

/// Which propagator produced an effect or a conflict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorKind {
    Up,
    Fl,
    Dom,
    BlProbe,
}

impl PropagatorKind {
    pub fn name(self) -> &'static str {
        match self {
            PropagatorKind::Up => "up",
            PropagatorKind::Fl => "fl",
            PropagatorKind::Dom => "dom",
            PropagatorKind::BlProbe => "blprobe",
        }
    }
}

/// Conflict details, tagged with the originating propagator.
#[derive(Clone, Debug)]
pub enum ConflictDetail {
    /// The identified nogood is contained in the assignment.
    Nogood(NogoodId),
    /// An unfounded set contains a true atom.
    Unfounded(UnfoundedConflict),
    /// A dominator consequence contradicts the assignment.
    Dominator(DomConflict),
    /// An external assumption contradicts the current assignment.
    AssumptionClash(Literal),
}

#[derive(Clone, Debug)]
pub struct Conflict {
    pub by: PropagatorKind,
    pub detail: ConflictDetail,
}

/// Literals inferred per propagator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct InferenceCounts {
    pub up: u64,
    pub fl: u64,
    pub dom: u64,
    pub blprobe: u64,
}

/// One propagation engine instance: nogood store, trail, and the propagator
/// stack. Single-writer; distinct instances share nothing mutable.
pub struct Engine<'p> {
    program: &'p Program,
    store: NogoodStore,
    trail: Assignment,
    qhead: usize,
    props: Propagators,
    counts: InferenceCounts,
    root_done: bool,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program, props: Propagators) -> Engine<'p> {
        Engine {
            program,
            store: NogoodStore::completion_nogoods(program),
            trail: Assignment::new(program),
            qhead: 0,
            props,
            counts: InferenceCounts::default(),
            root_done: false,
        }
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn trail(&self) -> &Assignment {
        &self.trail
    }

    pub fn store(&self) -> &NogoodStore {
        &self.store
    }

    pub fn counts(&self) -> InferenceCounts {
        self.counts
    }

    pub fn props(&self) -> Propagators {
        self.props
    }

    pub fn level(&self) -> usize {
        self.trail.level()
    }

    /// Open a decision level and place a literal. The caller picks the reason
    /// (decision vs. assumption).
    pub fn assume(
        &mut self,
        lit: Literal,
        reason: Reason,
    ) -> Result<(), crate::assignment::AssignError> {
        self.trail.assume(lit, reason)
    }

    pub fn backtrack(&mut self, level: usize) {
        self.trail
            .backtrack(level)
            .expect("engine backtracks only to existing levels");
        self.qhead = self.qhead.min(self.trail.len());
    }

    fn propagate_up(&mut self) -> Result<usize, Conflict> {
        if !self.root_done {
            self.root_done = true;
            let added = self
                .store
                .assert_root_units(&mut self.trail)
                .map_err(|id| Conflict {
                    by: PropagatorKind::Up,
                    detail: ConflictDetail::Nogood(id),
                })?;
            self.counts.up += added as u64;
        }
        match self.store.propagate(&mut self.trail, &mut self.qhead) {
            Ok(added) => {
                self.counts.up += added as u64;
                Ok(added)
            }
            Err(id) => Err(Conflict {
                by: PropagatorKind::Up,
                detail: ConflictDetail::Nogood(id),
            }),
        }
    }

    fn sweep_fl(&mut self) -> Result<usize, Conflict> {
        match unfounded::forward_loop_sweep(self.program, &mut self.trail) {
            Ok(added) => {
                self.counts.fl += added as u64;
                Ok(added)
            }
            Err(c) => Err(Conflict {
                by: PropagatorKind::Fl,
                detail: ConflictDetail::Unfounded(c),
            }),
        }
    }

    fn sweep_dom(&mut self) -> Result<usize, Conflict> {
        let graph = SupportFlowgraph::build(self.program, &self.trail);
        let tree = dominators::compute_dominators(&graph);
        let cons = dominators::dominator_consequences(self.program, &self.trail, &graph, &tree)
            .map_err(|c| Conflict {
                by: PropagatorKind::Dom,
                detail: ConflictDetail::Dominator(c),
            })?;
        let added =
            dominators::assert_consequences(&mut self.trail, &cons).map_err(|c| Conflict {
                by: PropagatorKind::Dom,
                detail: ConflictDetail::Dominator(c),
            })?;
        self.counts.dom += added as u64;
        Ok(added)
    }

    /// Probe each unassigned body: assume it false, run unit propagation and
    /// forward-loop to fixpoint, and if that conflicts the body must be true.
    /// The probe level is fully undone either way before the next probe.
    fn sweep_blprobe(&mut self) -> Result<usize, Conflict> {
        debug_assert_eq!(self.qhead, self.trail.len(), "probing requires a fixpoint");
        let level = self.trail.level();
        let bodies: Vec<BodyId> = self.trail.unassigned_bodies().collect();
        let mut forced: Vec<BodyId> = Vec::new();
        for b in bodies {
            if !self.trail.is_unassigned(Var::Body(b)) {
                continue;
            }
            self.trail
                .assume(Literal::f_body(b), Reason::Assumption)
                .expect("probed body is unassigned");
            let failed = self.probe_fixpoint().is_err();
            self.backtrack(level);
            if failed {
                forced.push(b);
            }
        }
        let added = forced.len();
        for b in forced {
            match self.trail.assign(Literal::t_body(b), Reason::Probe) {
                Assigned::Fresh => {}
                Assigned::Duplicate | Assigned::Clash => {
                    unreachable!("probed bodies were unassigned and probing asserts nothing")
                }
            }
        }
        self.counts.blprobe += added as u64;
        Ok(added)
    }

    /// Unit propagation and forward-loop under a probe assumption. Dominator
    /// and probe propagators stay out of probes.
    fn probe_fixpoint(&mut self) -> Result<(), ()> {
        loop {
            match self.store.propagate(&mut self.trail, &mut self.qhead) {
                Ok(_) => {}
                Err(_) => return Err(()),
            }
            match unfounded::forward_loop_sweep(self.program, &mut self.trail) {
                Ok(0) => return Ok(()),
                Ok(_) => continue,
                Err(_) => return Err(()),
            }
        }
    }

    /// Run the enabled propagators round-robin until none adds a literal.
    /// Every round that reaches the dominator stage rebuilds the flowgraph
    /// and its dominator tree. Conflict is a normal outcome and names the
    /// propagator that hit it.
    pub fn propagate_fixpoint(&mut self) -> Result<(), Conflict> {
        loop {
            self.propagate_up()?;
            if self.props.fl && self.sweep_fl()? > 0 {
                continue;
            }
            if self.props.dom && self.sweep_dom()? > 0 {
                continue;
            }
            if self.props.blprobe && self.sweep_blprobe()? > 0 {
                continue;
            }
            return Ok(());
        }
    }

    /// Render the current trail with the inferring propagator per literal.
    pub fn trail_lines(&self, explain: bool) -> Vec<String> {
        let mut out = Vec::new();
        for (i, lit) in self.trail.trail().iter().enumerate() {
            let reason = self.trail.reason(i);
            let tag = match reason {
                Reason::Assumption => "assume",
                Reason::Decision => "decide",
                Reason::Nogood(_) => "up",
                Reason::Unfounded(_) => "fl",
                Reason::Dominator { .. } => "dom",
                Reason::Probe => "blprobe",
            };
            let mut line = format!("{} ({})", lit.display(self.program), tag);
            if explain {
                match reason {
                    Reason::Nogood(id) => {
                        let lits: Vec<String> = self
                            .store
                            .nogood(*id)
                            .literals()
                            .iter()
                            .map(|l| l.display(self.program))
                            .collect();
                        line.push_str(&format!("  reason nogood {{{}}}", lits.join(", ")));
                    }
                    Reason::Unfounded(set) => {
                        line.push_str(&format!("  unfounded {}", self.atom_set_display(set)));
                    }
                    Reason::Dominator {
                        node,
                        trigger,
                        dominated,
                    } => {
                        line.push_str(&format!(
                            "  dominator {} of true atom {}, separates {}",
                            self.program.node_display(*node),
                            self.program.atom_name(*trigger),
                            self.atom_set_display(dominated)
                        ));
                    }
                    Reason::Probe => {
                        line.push_str("  assuming it false conflicts");
                    }
                    _ => {}
                }
            }
            out.push(line);
        }
        out
    }

    pub fn conflict_display(&self, c: &Conflict) -> String {
        match &c.detail {
            ConflictDetail::Nogood(id) => {
                let lits: Vec<String> = self
                    .store
                    .nogood(*id)
                    .literals()
                    .iter()
                    .map(|l| l.display(self.program))
                    .collect();
                format!(
                    "conflict ({}): violated nogood {{{}}}",
                    c.by.name(),
                    lits.join(", ")
                )
            }
            ConflictDetail::Unfounded(u) => format!(
                "conflict ({}): unfounded set {} contains true atom {}",
                c.by.name(),
                self.atom_set_display(&u.set),
                self.program.atom_name(u.true_atom)
            ),
            ConflictDetail::Dominator(d) => format!(
                "conflict ({}): dominator consequence {} of true atom {} clashes",
                c.by.name(),
                d.lit.display(self.program),
                self.program.atom_name(d.trigger)
            ),
            ConflictDetail::AssumptionClash(lit) => format!(
                "conflict: assumption {} contradicts the propagated assignment",
                lit.display(self.program)
            ),
        }
    }

    fn atom_set_display(&self, set: &Rc<[AtomId]>) -> String {
        let names: Vec<&str> = set.iter().map(|&a| self.program.atom_name(a)).collect();
        format!("{{{}}}", names.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_program;
    use std::collections::BTreeSet;

    const EXAMPLE_1: &str =
        "a :- not b.\nb :- not a.\nc :- d.\nd :- c.\ne :- f.\nf :- e.\nc :- a.\ne :- not a.";

    fn fixpoint_from(
        src: &str,
        props: Propagators,
        assume: &[(&str, bool)],
    ) -> (Program, BTreeSet<String>) {
        let p = parse_program(src).unwrap();
        let mut eng = Engine::new(&p, props);
        eng.propagate_fixpoint().unwrap();
        for &(name, positive) in assume {
            let atom = p.find_atom(name).unwrap();
            eng.assume(
                Literal {
                    var: Var::Atom(atom),
                    positive,
                },
                Reason::Assumption,
            )
            .unwrap();
        }
        eng.propagate_fixpoint().unwrap();
        let set = eng.trail().trail().iter().map(|l| l.display(&p)).collect();
        (p, set)
    }

    #[test]
    fn example_1_up_fl_fixpoint_exact() {
        let (_, got) = fixpoint_from(EXAMPLE_1, Propagators::up_fl(), &[("c", true)]);
        let want: BTreeSet<String> = ["Tc", "T{c}", "Td", "T{d}"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn example_1_dom_extends_fixpoint() {
        let (_, got) = fixpoint_from(EXAMPLE_1, Propagators::up_fl_dom(), &[("c", true)]);
        for lit in ["T{a}", "Ta", "F{not a}", "Fb", "Fe", "Ff"] {
            assert!(got.contains(lit), "missing {lit} in {got:?}");
        }
    }

    #[test]
    fn empty_program_empty_fixpoint() {
        let (_, got) = fixpoint_from("", Propagators::up_fl_dom(), &[]);
        assert!(got.is_empty());
    }

    #[test]
    fn fact_propagates_at_root() {
        let (_, got) = fixpoint_from("p.", Propagators::up_only(), &[]);
        let want: BTreeSet<String> = ["T{}", "Tp"].iter().map(|s| s.to_string()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn probe_finds_loop_support_body() {
        // From Tc, probing F{a} falsifies the only loop support of {c,d}.
        let p = parse_program(EXAMPLE_1).unwrap();
        let mut eng = Engine::new(
            &p,
            Propagators {
                fl: true,
                dom: false,
                blprobe: true,
            },
        );
        eng.propagate_fixpoint().unwrap();
        eng.assume(
            Literal::t_atom(p.find_atom("c").unwrap()),
            Reason::Assumption,
        )
        .unwrap();
        eng.propagate_fixpoint().unwrap();
        let b_a = p.find_body(&[p.find_atom("a").unwrap()], &[]).unwrap();
        assert!(eng.trail().is_true_body(b_a));
        assert!(eng.trail().is_true_atom(p.find_atom("a").unwrap()));
    }

    #[test]
    fn probe_restores_state_on_no_conflict() {
        let p = parse_program("a :- not b. b :- not a.").unwrap();
        let mut eng = Engine::new(
            &p,
            Propagators {
                fl: true,
                dom: false,
                blprobe: true,
            },
        );
        eng.propagate_fixpoint().unwrap();
        // Neither body is forced: both answer sets remain.
        assert_eq!(eng.trail().len(), 0);
        assert_eq!(eng.level(), 0);
    }

    #[test]
    fn dom_requires_fl() {
        assert_eq!(
            Propagators {
                fl: false,
                dom: true,
                blprobe: false
            }
            .validate(),
            Err(ConfigError::DomRequiresFl)
        );
        assert!(Propagators::parse("up,fl,dom").is_ok());
        assert!(Propagators::parse("up,dom").is_err());
        assert!(Propagators::parse("up,zz").is_err());
    }

    #[test]
    fn backtrack_restores_engine_state() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let mut eng = Engine::new(&p, Propagators::up_fl());
        eng.propagate_fixpoint().unwrap();
        let root_len = eng.trail().len();
        eng.assume(Literal::t_atom(p.find_atom("c").unwrap()), Reason::Decision)
            .unwrap();
        eng.propagate_fixpoint().unwrap();
        assert!(eng.trail().len() > root_len);
        eng.backtrack(0);
        assert_eq!(eng.trail().len(), root_len);
        // Propagating again from the root adds nothing new.
        eng.propagate_fixpoint().unwrap();
        assert_eq!(eng.trail().len(), root_len);
    }

    #[test]
    fn odd_loop_conflicts() {
        let p = parse_program("a :- not a.").unwrap();
        let mut eng = Engine::new(&p, Propagators::up_only());
        eng.propagate_fixpoint().unwrap();
        eng.assume(Literal::t_atom(p.find_atom("a").unwrap()), Reason::Decision)
            .unwrap();
        let c = eng.propagate_fixpoint().unwrap_err();
        assert_eq!(c.by, PropagatorKind::Up);
    }
}
