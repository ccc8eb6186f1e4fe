//! Brute-force ground truth at desk scale: answer-set enumeration via
//! reducts, loop enumeration, exhaustive one-step unfounded-set operators
//! over a candidate-set family, and the failed-literal realization of
//! backward-loop inference.
//!
//! The operators here are one-step consequence sets, not fixpoints, matching
//! their definitions; fixpoint variants are compositions in the test code.
//! Everything below enumerates subsets and is guarded accordingly.

use crate::assignment::{Assignment, Literal, Reason, Var};
use crate::engine::{Engine, Propagators};
use crate::program::{AtomId, BodyId, Program};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{what} requires at most {limit} atoms, got {actual}")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
    #[error("least_model requires a positive program (rule {rule} has a negative body)")]
    NotPositive { rule: usize },
}

/// Default guard for whole-program subset enumeration.
pub const ANSWER_SET_GUARD: usize = 20;
/// Default guard for per-component subset enumeration.
pub const SCC_GUARD: usize = 15;
/// Below this atom count the candidate family for the unrestricted operators
/// is all subsets; above it, only component-confined subsets.
pub const FULL_SUBSET_LIMIT: usize = 12;

/// The reduct w.r.t. a candidate atom set: rules whose negative body meets
/// the set are dropped, remaining negative bodies are stripped. The returned
/// program keeps the original atom table so atom ids remain comparable.
pub fn reduct(program: &Program, x: &BTreeSet<AtomId>) -> Program {
    let mut b = Program::builder();
    for a in program.atom_ids() {
        b.atom(program.atom_name(a));
    }
    for r in program.rules() {
        let body = program.body(r.body);
        if body.negative.iter().any(|n| x.contains(n)) {
            continue;
        }
        b.rule(r.head, &body.positive, &[]);
    }
    b.build()
}

/// Least model of a positive program by forward chaining.
pub fn least_model(program: &Program) -> Result<BTreeSet<AtomId>, OracleError> {
    for (i, r) in program.rules().iter().enumerate() {
        if !program.body(r.body).negative.is_empty() {
            return Err(OracleError::NotPositive { rule: i });
        }
    }
    let mut model: BTreeSet<AtomId> = BTreeSet::new();
    loop {
        let mut changed = false;
        for r in program.rules() {
            if model.contains(&r.head) {
                continue;
            }
            if program
                .body(r.body)
                .positive
                .iter()
                .all(|p| model.contains(p))
            {
                model.insert(r.head);
                changed = true;
            }
        }
        if !changed {
            return Ok(model);
        }
    }
}

fn check_atom_guard(
    program: &Program,
    what: &'static str,
    limit: usize,
) -> Result<(), OracleError> {
    let n = program.n_atoms();
    if n > limit || n > 63 {
        return Err(OracleError::GuardExceeded {
            what,
            limit: limit.min(63),
            actual: n,
        });
    }
    Ok(())
}

fn mask_to_set(mask: u64) -> BTreeSet<AtomId> {
    (0..64)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| AtomId(i as u32))
        .collect()
}

/// Per-rule bit view used by the subset loops.
struct BitProgram {
    /// (head bit, positive-body mask, negative-body mask, body id)
    rules: Vec<(u64, u64, u64, BodyId)>,
}

impl BitProgram {
    fn new(program: &Program) -> BitProgram {
        let rules = program
            .rules()
            .iter()
            .map(|r| {
                let body = program.body(r.body);
                let pos = body.positive.iter().fold(0u64, |m, p| m | 1 << p.idx());
                let neg = body.negative.iter().fold(0u64, |m, p| m | 1 << p.idx());
                (1u64 << r.head.idx(), pos, neg, r.body)
            })
            .collect();
        BitProgram { rules }
    }

    /// Least model of the reduct w.r.t. `x`, as a mask.
    fn reduct_least_model(&self, x: u64) -> u64 {
        let mut model = 0u64;
        loop {
            let mut changed = false;
            for &(head, pos, neg, _) in &self.rules {
                if neg & x != 0 || head & model != 0 {
                    continue;
                }
                if pos & !model == 0 {
                    model |= head;
                    changed = true;
                }
            }
            if !changed {
                return model;
            }
        }
    }
}

/// All answer sets by subset checking. Guarded.
pub fn enumerate_answer_sets(
    program: &Program,
    guard: usize,
) -> Result<Vec<BTreeSet<AtomId>>, OracleError> {
    check_atom_guard(program, "answer-set enumeration", guard)?;
    let bits = BitProgram::new(program);
    let n = program.n_atoms();
    let mut out = Vec::new();
    for x in 0..(1u64 << n) {
        if bits.reduct_least_model(x) == x {
            out.push(mask_to_set(x));
        }
    }
    Ok(out)
}

/// All loops: non-empty atom sets where every ordered pair is connected by a
/// dependency-graph path whose atoms stay inside the set. A singleton is a
/// loop exactly when the atom reaches itself through one of its own bodies.
/// Loops are confined to strongly connected components, so enumeration is
/// per-component and guarded by component size.
pub fn enumerate_loops(
    program: &Program,
    scc_guard: usize,
) -> Result<Vec<BTreeSet<AtomId>>, OracleError> {
    if program.n_atoms() > 63 {
        return Err(OracleError::GuardExceeded {
            what: "loop enumeration",
            limit: 63,
            actual: program.n_atoms(),
        });
    }
    let mut out = Vec::new();
    for scc in program.scc_atom_groups() {
        if scc.is_empty() {
            continue;
        }
        if scc.len() > scc_guard {
            return Err(OracleError::GuardExceeded {
                what: "loop enumeration (component size)",
                limit: scc_guard,
                actual: scc.len(),
            });
        }
        for sub in 1u64..(1 << scc.len()) {
            let u: Vec<AtomId> = (0..scc.len())
                .filter(|i| sub & (1 << i) != 0)
                .map(|i| scc[i])
                .collect();
            if is_loop(program, &u) {
                out.push(u.into_iter().collect());
            }
        }
    }
    Ok(out)
}

/// Path check for the loop condition: from each atom, which atoms of `u` are
/// reachable through bodies while intermediate atoms stay in `u`.
fn is_loop(program: &Program, u: &[AtomId]) -> bool {
    let in_u: BTreeSet<AtomId> = u.iter().copied().collect();
    for &start in u {
        // BFS over nodes; atom nodes outside u are not expanded.
        let mut seen_atoms: BTreeSet<AtomId> = BTreeSet::new();
        let mut seen_bodies: BTreeSet<BodyId> = BTreeSet::new();
        let mut queue: Vec<BodyId> = Vec::new();
        for &b in program.pos_occurrences(start) {
            if seen_bodies.insert(b) {
                queue.push(b);
            }
        }
        while let Some(b) = queue.pop() {
            for &h in program.heads_of(b) {
                if seen_atoms.insert(h) && in_u.contains(&h) {
                    for &nb in program.pos_occurrences(h) {
                        if seen_bodies.insert(nb) {
                            queue.push(nb);
                        }
                    }
                }
            }
        }
        // Every atom of u must be reachable from `start` by a non-empty path.
        if !u.iter().all(|q| seen_atoms.contains(q)) {
            return false;
        }
    }
    true
}

/// Candidate-set family for the unfounded-set operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Omega {
    /// All subsets for small programs; component-confined subsets otherwise.
    All,
    /// All loops.
    Loops,
}

fn candidate_sets(program: &Program, omega: Omega) -> Result<Vec<u64>, OracleError> {
    match omega {
        Omega::Loops => Ok(enumerate_loops(program, SCC_GUARD)?
            .into_iter()
            .map(|u| u.iter().fold(0u64, |m, p| m | 1 << p.idx()))
            .collect()),
        Omega::All => {
            let n = program.n_atoms();
            if n <= FULL_SUBSET_LIMIT {
                Ok((1..(1u64 << n)).collect())
            } else {
                // Component-confined subsets only; adequate for the operators'
                // single-support triggers, exact generality kept to tiny scale.
                let mut out = Vec::new();
                for scc in program.scc_atom_groups() {
                    if scc.is_empty() {
                        continue;
                    }
                    if scc.len() > SCC_GUARD {
                        return Err(OracleError::GuardExceeded {
                            what: "candidate-set enumeration (component size)",
                            limit: SCC_GUARD,
                            actual: scc.len(),
                        });
                    }
                    for sub in 1u64..(1 << scc.len()) {
                        let mask = (0..scc.len())
                            .filter(|i| sub & (1 << i) != 0)
                            .fold(0u64, |m, i| m | 1 << scc[i].idx());
                        out.push(mask);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Shared per-assignment view for the one-step operators.
struct OperatorContext {
    /// Per body: union of head bits over its rules, positive mask, id.
    bodies: Vec<(u64, u64, BodyId)>,
    /// Per body: positive mask (again, for the domination check).
    true_atoms: u64,
    false_atoms_mask: u64,
    false_body: Vec<bool>,
}

impl OperatorContext {
    fn new(program: &Program, a: &Assignment) -> OperatorContext {
        let bodies = program
            .body_ids()
            .map(|b| {
                let heads = program
                    .heads_of(b)
                    .iter()
                    .fold(0u64, |m, h| m | 1 << h.idx());
                let pos = program
                    .body(b)
                    .positive
                    .iter()
                    .fold(0u64, |m, p| m | 1 << p.idx());
                (heads, pos, b)
            })
            .collect();
        OperatorContext {
            bodies,
            true_atoms: program
                .atom_ids()
                .filter(|&p| a.is_true_atom(p))
                .fold(0u64, |m, p| m | 1 << p.idx()),
            false_atoms_mask: program
                .atom_ids()
                .filter(|&p| a.is_false_atom(p))
                .fold(0u64, |m, p| m | 1 << p.idx()),
            false_body: program.body_ids().map(|b| a.is_false_body(b)).collect(),
        }
    }

    /// Non-false external support bodies of the candidate set.
    fn external_support(&self, u: u64) -> impl Iterator<Item = (u64, BodyId)> + '_ {
        let _ = self.false_atoms_mask;
        self.bodies
            .iter()
            .filter(move |&&(heads, pos, b)| {
                heads & u != 0 && pos & u == 0 && !self.false_body[b.idx()]
            })
            .map(|&(_, pos, b)| (pos, b))
    }
}

/// One-step well-founded negation: atoms of candidate sets whose external
/// support is entirely false.
pub fn wfn_oracle(
    program: &Program,
    a: &Assignment,
    omega: Omega,
) -> Result<BTreeSet<AtomId>, OracleError> {
    let ctx = OperatorContext::new(program, a);
    let mut out = 0u64;
    for u in candidate_sets(program, omega)? {
        if ctx.external_support(u).next().is_none() {
            out |= u;
        }
    }
    Ok(mask_to_set(out))
}

/// One-step well-founded justification: bodies that are the single non-false
/// external support of a candidate set containing a true atom.
pub fn wfj_oracle(
    program: &Program,
    a: &Assignment,
    omega: Omega,
) -> Result<BTreeSet<BodyId>, OracleError> {
    let ctx = OperatorContext::new(program, a);
    let mut out = BTreeSet::new();
    for u in candidate_sets(program, omega)? {
        if u & ctx.true_atoms == 0 {
            continue;
        }
        let mut es = ctx.external_support(u);
        if let (Some((_, b)), None) = (es.next(), es.next()) {
            out.insert(b);
        }
    }
    Ok(out)
}

/// One-step well-founded domination: atoms outside a candidate set (that
/// contains a true atom) appearing positively in every non-false external
/// support of the set.
pub fn wfd_oracle(
    program: &Program,
    a: &Assignment,
    omega: Omega,
) -> Result<BTreeSet<AtomId>, OracleError> {
    let ctx = OperatorContext::new(program, a);
    let all_atoms = if program.n_atoms() == 64 {
        u64::MAX
    } else {
        (1u64 << program.n_atoms()) - 1
    };
    let mut out = 0u64;
    for u in candidate_sets(program, omega)? {
        if u & ctx.true_atoms == 0 {
            continue;
        }
        let mut common = all_atoms;
        for (pos, _) in ctx.external_support(u) {
            common &= pos;
        }
        out |= common & !u;
    }
    Ok(mask_to_set(out))
}

/// Failed-literal probing over bodies: every unassigned body whose assumed
/// falsity drives unit propagation and forward-loop into conflict must be
/// true. Runs on a scratch engine; `assumptions` are replayed first. Returns
/// `None` when the assumptions themselves already conflict.
pub fn failed_literal_bl(program: &Program, assumptions: &[Literal]) -> Option<BTreeSet<BodyId>> {
    let mut eng = Engine::new(program, Propagators::up_fl());
    if eng.propagate_fixpoint().is_err() {
        return None;
    }
    for &lit in assumptions {
        if eng.trail().holds(lit) {
            continue;
        }
        if eng.assume(lit, Reason::Assumption).is_err() {
            return None;
        }
        if eng.propagate_fixpoint().is_err() {
            return None;
        }
    }
    let level = eng.level();
    let mut out = BTreeSet::new();
    let bodies: Vec<BodyId> = eng.trail().unassigned_bodies().collect();
    for b in bodies {
        if !eng.trail().is_unassigned(Var::Body(b)) {
            continue;
        }
        eng.assume(Literal::f_body(b), Reason::Assumption)
            .expect("body is unassigned");
        if eng.propagate_fixpoint().is_err() {
            out.insert(b);
        }
        eng.backtrack(level);
    }
    Some(out)
}
