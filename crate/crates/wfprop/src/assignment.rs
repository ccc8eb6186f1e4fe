//! Trail-based assignment over atom and body variables with decision levels,
//! chronological backtracking, and per-literal inference reasons.

use crate::program::{AtomId, BodyId, GraphNode, Program};
use std::rc::Rc;
use thiserror::Error;

/// An assignable variable: an atom or a body of the owning program.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Var {
    Atom(AtomId),
    Body(BodyId),
}

impl Var {
    pub fn node(self) -> GraphNode {
        match self {
            Var::Atom(a) => GraphNode::Atom(a),
            Var::Body(b) => GraphNode::Body(b),
        }
    }
}

/// A signed variable. `positive` means assigned-true.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    pub var: Var,
    pub positive: bool,
}

impl Literal {
    pub fn t(var: Var) -> Literal {
        Literal {
            var,
            positive: true,
        }
    }

    pub fn f(var: Var) -> Literal {
        Literal {
            var,
            positive: false,
        }
    }

    pub fn t_atom(a: AtomId) -> Literal {
        Literal::t(Var::Atom(a))
    }

    pub fn f_atom(a: AtomId) -> Literal {
        Literal::f(Var::Atom(a))
    }

    pub fn t_body(b: BodyId) -> Literal {
        Literal::t(Var::Body(b))
    }

    pub fn f_body(b: BodyId) -> Literal {
        Literal::f(Var::Body(b))
    }

    pub fn complement(self) -> Literal {
        Literal {
            var: self.var,
            positive: !self.positive,
        }
    }

    pub fn display(self, program: &Program) -> String {
        let sign = if self.positive { "T" } else { "F" };
        format!("{}{}", sign, program.node_display(self.var.node()))
    }
}

/// Which inference produced a trail literal.
#[derive(Clone, Debug)]
pub enum Reason {
    /// Externally supplied assumption (CLI `--assume`, probes, fixed values).
    Assumption,
    /// Search decision.
    Decision,
    /// Unit-resulting literal of the identified nogood.
    Nogood(u32),
    /// Atom falsified as part of an unfounded set.
    Unfounded(Rc<[AtomId]>),
    /// Consequence of a flowgraph dominator: the dominating node, asserted
    /// true because the trigger atom is true.
    Dominator {
        node: GraphNode,
        trigger: AtomId,
        /// Atoms the dominator separated from the source at inference time.
        dominated: Rc<[AtomId]>,
    },
    /// Failed-literal probe: assuming the body false led to conflict.
    Probe,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignError {
    #[error("variable already assigned")]
    AlreadyAssigned,
    #[error("backtrack target level {target} above current level {current}")]
    LevelOutOfRange { target: usize, current: usize },
}

/// Outcome of adding one literal.
#[derive(Debug, PartialEq, Eq)]
pub enum Assigned {
    /// Literal appended to the trail.
    Fresh,
    /// Variable already held this value; nothing changed.
    Duplicate,
    /// Variable holds the complementary value.
    Clash,
}

/// The assignment: values plus the trail that produced them. Conflict-free by
/// construction; `assign` refuses to store complementary literals.
#[derive(Clone, Debug)]
pub struct Assignment {
    n_atoms: usize,
    value: Vec<i8>, // 0 unassigned, 1 true, -1 false; atoms then bodies
    trail: Vec<Literal>,
    reasons: Vec<Reason>,
    level_marks: Vec<usize>,
}

impl Assignment {
    pub fn new(program: &Program) -> Assignment {
        Assignment::with_counts(program.n_atoms(), program.n_bodies())
    }

    pub fn with_counts(n_atoms: usize, n_bodies: usize) -> Assignment {
        Assignment {
            n_atoms,
            value: vec![0; n_atoms + n_bodies],
            trail: Vec::new(),
            reasons: Vec::new(),
            level_marks: Vec::new(),
        }
    }

    fn dense(&self, var: Var) -> usize {
        match var {
            Var::Atom(a) => a.idx(),
            Var::Body(b) => self.n_atoms + b.idx(),
        }
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        match self.value[self.dense(var)] {
            0 => None,
            1 => Some(true),
            _ => Some(false),
        }
    }

    pub fn is_unassigned(&self, var: Var) -> bool {
        self.value(var).is_none()
    }

    /// Whether the assignment contains the literal.
    pub fn holds(&self, lit: Literal) -> bool {
        self.value(lit.var) == Some(lit.positive)
    }

    pub fn is_true_atom(&self, a: AtomId) -> bool {
        self.holds(Literal::t_atom(a))
    }

    pub fn is_false_atom(&self, a: AtomId) -> bool {
        self.holds(Literal::f_atom(a))
    }

    pub fn is_true_body(&self, b: BodyId) -> bool {
        self.holds(Literal::t_body(b))
    }

    pub fn is_false_body(&self, b: BodyId) -> bool {
        self.holds(Literal::f_body(b))
    }

    /// Append a literal with its reason.
    pub fn assign(&mut self, lit: Literal, reason: Reason) -> Assigned {
        let d = self.dense(lit.var);
        match self.value[d] {
            0 => {
                self.value[d] = if lit.positive { 1 } else { -1 };
                self.trail.push(lit);
                self.reasons.push(reason);
                Assigned::Fresh
            }
            v => {
                if (v == 1) == lit.positive {
                    Assigned::Duplicate
                } else {
                    Assigned::Clash
                }
            }
        }
    }

    /// Open a new decision level and append the literal.
    pub fn assume(&mut self, lit: Literal, reason: Reason) -> Result<(), AssignError> {
        if !self.is_unassigned(lit.var) {
            return Err(AssignError::AlreadyAssigned);
        }
        self.level_marks.push(self.trail.len());
        let r = self.assign(lit, reason);
        debug_assert_eq!(r, Assigned::Fresh);
        Ok(())
    }

    pub fn level(&self) -> usize {
        self.level_marks.len()
    }

    /// Pop the trail back to `level`, restoring the earlier state exactly.
    pub fn backtrack(&mut self, level: usize) -> Result<(), AssignError> {
        if level > self.level() {
            return Err(AssignError::LevelOutOfRange {
                target: level,
                current: self.level(),
            });
        }
        if level == self.level() {
            return Ok(());
        }
        let mark = self.level_marks[level];
        while self.trail.len() > mark {
            let lit = self.trail.pop().expect("trail length checked");
            self.reasons.pop();
            let d = self.dense(lit.var);
            self.value[d] = 0;
        }
        self.level_marks.truncate(level);
        Ok(())
    }

    pub fn trail(&self) -> &[Literal] {
        &self.trail
    }

    pub fn reason(&self, trail_pos: usize) -> &Reason {
        &self.reasons[trail_pos]
    }

    pub fn len(&self) -> usize {
        self.trail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trail.is_empty()
    }

    /// Trail position of the literal that opened the given level.
    pub fn level_mark(&self, level: usize) -> usize {
        if level == 0 {
            0
        } else {
            self.level_marks[level - 1]
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_assigned(&self) -> usize {
        self.trail.len()
    }

    pub fn true_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.n_atoms)
            .filter(|&i| self.value[i] == 1)
            .map(|i| AtomId(i as u32))
    }

    pub fn false_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.n_atoms)
            .filter(|&i| self.value[i] == -1)
            .map(|i| AtomId(i as u32))
    }

    pub fn unassigned_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.n_atoms)
            .filter(|&i| self.value[i] == 0)
            .map(|i| AtomId(i as u32))
    }

    pub fn unassigned_bodies(&self) -> impl Iterator<Item = BodyId> + '_ {
        (self.n_atoms..self.value.len())
            .filter(|&i| self.value[i] == 0)
            .map(move |i| BodyId((i - self.n_atoms) as u32))
    }
}
