//! Completion nogoods and unit propagation.
//!
//! For each body `{a1..am, not am+1..an}` the store holds one long nogood
//! `{Ta1..Tam, Fam+1..Fan, Fβ}` plus one binary nogood per member; for each
//! atom `p` with bodies `β1..βk` one binary nogood `{Tβi, Fp}` per body plus
//! `{Fβ1..Fβk, Tp}`. Atoms with no bodies get the unary nogood `{Tp}` as the
//! degenerate case. A total conflict-free assignment violating none of these
//! is a model of the program's completion.

use crate::assignment::{Assigned, Assignment, Literal, Reason, Var};
use crate::program::Program;

pub type NogoodId = u32;

#[derive(Clone, Debug)]
pub struct Nogood {
    /// Watched literals are kept in positions 0 and 1.
    lits: Vec<Literal>,
}

impl Nogood {
    pub fn literals(&self) -> &[Literal] {
        &self.lits
    }
}

/// The completion nogood set with a two-watched-literal index.
pub struct NogoodStore {
    nogoods: Vec<Nogood>,
    /// Literal (dense) -> nogoods currently watching that literal. A watched
    /// literal is inspected when it enters the assignment.
    watches: Vec<Vec<NogoodId>>,
    /// Complements of unary nogoods, to assert once at the root.
    root_units: Vec<(Literal, NogoodId)>,
    n_atoms: usize,
}

/// Result of propagating to fixpoint: count of appended literals, or the
/// violated nogood. Conflict is a normal outcome, not a failure.
pub type PropResult = Result<usize, NogoodId>;

impl NogoodStore {
    /// Build the completion nogood set for a program.
    ///
    /// Nogoods containing complementary literals (possible only when a body
    /// mentions an atom both positively and negatively) are vacuous and
    /// dropped; the member nogoods still falsify such bodies.
    pub fn completion_nogoods(program: &Program) -> NogoodStore {
        let n_atoms = program.n_atoms();
        let n_vars = n_atoms + program.n_bodies();
        let mut store = NogoodStore {
            nogoods: Vec::new(),
            watches: vec![Vec::new(); n_vars * 2],
            root_units: Vec::new(),
            n_atoms,
        };

        for b in program.body_ids() {
            let body = program.body(b);
            let mut long = Vec::with_capacity(body.positive.len() + body.negative.len() + 1);
            for &p in &body.positive {
                long.push(Literal::t_atom(p));
                store.add(vec![Literal::f_atom(p), Literal::t_body(b)]);
            }
            for &p in &body.negative {
                long.push(Literal::f_atom(p));
                store.add(vec![Literal::t_atom(p), Literal::t_body(b)]);
            }
            long.push(Literal::f_body(b));
            store.add(long);
        }
        for p in program.atom_ids() {
            let bodies = program.bodies_of(p);
            let mut long = Vec::with_capacity(bodies.len() + 1);
            for &b in bodies {
                long.push(Literal::f_body(b));
                store.add(vec![Literal::t_body(b), Literal::f_atom(p)]);
            }
            long.push(Literal::t_atom(p));
            store.add(long);
        }
        store
    }

    fn dense(&self, lit: Literal) -> usize {
        let v = match lit.var {
            Var::Atom(a) => a.idx(),
            Var::Body(b) => self.n_atoms + b.idx(),
        };
        v * 2 + lit.positive as usize
    }

    fn add(&mut self, mut lits: Vec<Literal>) {
        lits.sort_unstable();
        lits.dedup();
        // Complementary pair within one nogood: can never be contained in a
        // conflict-free assignment.
        if lits
            .windows(2)
            .any(|w| w[0].var == w[1].var && w[0].positive != w[1].positive)
        {
            return;
        }
        let id = self.nogoods.len() as NogoodId;
        if lits.len() == 1 {
            self.root_units.push((lits[0].complement(), id));
            self.nogoods.push(Nogood { lits });
            return;
        }
        self.watch(lits[0], id);
        self.watch(lits[1], id);
        self.nogoods.push(Nogood { lits });
    }

    fn watch(&mut self, lit: Literal, id: NogoodId) {
        let d = self.dense(lit);
        self.watches[d].push(id);
    }

    pub fn len(&self) -> usize {
        self.nogoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nogoods.is_empty()
    }

    pub fn nogood(&self, id: NogoodId) -> &Nogood {
        &self.nogoods[id as usize]
    }

    /// Assert the complements of all unary nogoods. Root-level only.
    pub fn assert_root_units(&self, a: &mut Assignment) -> PropResult {
        debug_assert_eq!(a.level(), 0);
        let mut added = 0;
        for &(lit, id) in &self.root_units {
            match a.assign(lit, Reason::Nogood(id)) {
                Assigned::Fresh => added += 1,
                Assigned::Duplicate => {}
                Assigned::Clash => return Err(id),
            }
        }
        Ok(added)
    }

    /// Run unit propagation to fixpoint from `*qhead`, appending inferred
    /// literals to the trail. On conflict the queue head is left at the
    /// conflicting position; the violated nogood is returned.
    pub fn propagate(&mut self, a: &mut Assignment, qhead: &mut usize) -> PropResult {
        let mut added = 0usize;
        while *qhead < a.trail().len() {
            let lit = a.trail()[*qhead];
            *qhead += 1;
            let d = self.dense(lit);
            let mut i = 0;
            'nogoods: while i < self.watches[d].len() {
                let id = self.watches[d][i];
                let ng = &mut self.nogoods[id as usize];
                if ng.lits[0] != lit {
                    ng.lits.swap(0, 1);
                }
                debug_assert_eq!(ng.lits[0], lit);
                let other = ng.lits[1];
                // Disarmed: the other watch can never enter the assignment
                // while its complement holds.
                if a.holds(other.complement()) {
                    i += 1;
                    continue;
                }
                // Look for a replacement watch not contained in A.
                for k in 2..ng.lits.len() {
                    if !a.holds(ng.lits[k]) {
                        ng.lits.swap(0, k);
                        let moved = ng.lits[0];
                        self.watches[d].swap_remove(i);
                        let nd = self.dense(moved);
                        self.watches[nd].push(id);
                        continue 'nogoods;
                    }
                }
                // All literals but `other` hold.
                if a.holds(other) {
                    return Err(id);
                }
                match a.assign(other.complement(), Reason::Nogood(id)) {
                    Assigned::Fresh => added += 1,
                    Assigned::Duplicate => {}
                    Assigned::Clash => return Err(id),
                }
                i += 1;
            }
        }
        Ok(added)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_program;
    use crate::program::{AtomId, BodyId};
    use std::collections::BTreeSet;

    fn lit_set(program: &Program, a: &Assignment) -> BTreeSet<String> {
        a.trail().iter().map(|l| l.display(program)).collect()
    }

    const EXAMPLE_1: &str =
        "a :- not b.\nb :- not a.\nc :- d.\nd :- c.\ne :- f.\nf :- e.\nc :- a.\ne :- not a.";

    #[test]
    fn single_negative_body_nogoods() {
        // body {not a}: nogoods {Fa, F{not a}} and {Ta, T{not a}}.
        let p = parse_program("e :- not a.").unwrap();
        let store = NogoodStore::completion_nogoods(&p);
        let b = p.find_body(&[], &[p.find_atom("a").unwrap()]).unwrap();
        let want_long: BTreeSet<Literal> = [
            Literal::f_atom(p.find_atom("a").unwrap()),
            Literal::f_body(b),
        ]
        .into();
        let want_member: BTreeSet<Literal> = [
            Literal::t_atom(p.find_atom("a").unwrap()),
            Literal::t_body(b),
        ]
        .into();
        let all: Vec<BTreeSet<Literal>> = (0..store.len() as u32)
            .map(|i| store.nogood(i).literals().iter().copied().collect())
            .collect();
        assert!(all.contains(&want_long));
        assert!(all.contains(&want_member));
    }

    #[test]
    fn empty_body_forces_true() {
        // {F∅} is the only body nogood for a fact's body.
        let p = parse_program("p.").unwrap();
        let store = NogoodStore::completion_nogoods(&p);
        let mut a = Assignment::new(&p);
        let mut qhead = 0;
        store.assert_root_units(&mut a).unwrap();
        let mut store = store;
        store.propagate(&mut a, &mut qhead).unwrap();
        assert!(a.is_true_body(BodyId(0)));
        assert!(a.is_true_atom(AtomId(0)));
    }

    #[test]
    fn atom_with_two_bodies_nogoods() {
        // e with bodies {f} and {not a}: {T{f}, Fe}, {T{not a}, Fe},
        // {F{f}, F{not a}, Te}.
        let p = parse_program(EXAMPLE_1).unwrap();
        let e = p.find_atom("e").unwrap();
        let f = p.find_atom("f").unwrap();
        let a_atom = p.find_atom("a").unwrap();
        let b_f = p.find_body(&[f], &[]).unwrap();
        let b_na = p.find_body(&[], &[a_atom]).unwrap();
        let store = NogoodStore::completion_nogoods(&p);
        let all: Vec<BTreeSet<Literal>> = (0..store.len() as u32)
            .map(|i| store.nogood(i).literals().iter().copied().collect())
            .collect();
        let want1: BTreeSet<Literal> = [Literal::t_body(b_f), Literal::f_atom(e)].into();
        let want2: BTreeSet<Literal> = [Literal::t_body(b_na), Literal::f_atom(e)].into();
        let want3: BTreeSet<Literal> = [
            Literal::f_body(b_f),
            Literal::f_body(b_na),
            Literal::t_atom(e),
        ]
        .into();
        assert!(all.contains(&want1));
        assert!(all.contains(&want2));
        assert!(all.contains(&want3));
    }

    #[test]
    fn example_1_fixpoint_from_tc() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let mut store = NogoodStore::completion_nogoods(&p);
        let mut a = Assignment::new(&p);
        let mut qhead = 0;
        store.assert_root_units(&mut a).unwrap();
        store.propagate(&mut a, &mut qhead).unwrap();
        assert!(a.is_empty());
        a.assume(
            Literal::t_atom(p.find_atom("c").unwrap()),
            Reason::Assumption,
        )
        .unwrap();
        store.propagate(&mut a, &mut qhead).unwrap();
        let got = lit_set(&p, &a);
        let want: BTreeSet<String> = ["Tc", "T{c}", "Td", "T{d}"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn example_1_conflict_from_tc_fd() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let mut store = NogoodStore::completion_nogoods(&p);
        let mut a = Assignment::new(&p);
        let mut qhead = 0;
        store.assert_root_units(&mut a).unwrap();
        a.assume(
            Literal::t_atom(p.find_atom("c").unwrap()),
            Reason::Assumption,
        )
        .unwrap();
        a.assume(
            Literal::f_atom(p.find_atom("d").unwrap()),
            Reason::Assumption,
        )
        .unwrap();
        assert!(store.propagate(&mut a, &mut qhead).is_err());
    }

    #[test]
    fn bodiless_atom_falsified_at_root() {
        let p = parse_program("p :- q.").unwrap();
        let mut store = NogoodStore::completion_nogoods(&p);
        let mut a = Assignment::new(&p);
        let mut qhead = 0;
        store.assert_root_units(&mut a).unwrap();
        store.propagate(&mut a, &mut qhead).unwrap();
        assert!(a.is_false_atom(p.find_atom("q").unwrap()));
        assert!(a.is_false_atom(p.find_atom("p").unwrap()));
    }

    #[test]
    fn contradictory_body_falsified_once_member_assigned() {
        let p = parse_program("p :- q, not q. q.").unwrap();
        let mut store = NogoodStore::completion_nogoods(&p);
        let mut a = Assignment::new(&p);
        let mut qhead = 0;
        store.assert_root_units(&mut a).unwrap();
        store.propagate(&mut a, &mut qhead).unwrap();
        let q = p.find_atom("q").unwrap();
        let b = p.find_body(&[q], &[q]).unwrap();
        assert!(a.is_true_atom(q));
        assert!(a.is_false_body(b));
        assert!(a.is_false_atom(p.find_atom("p").unwrap()));
    }

    #[test]
    fn violated_nogood_is_contained_in_assignment() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let mut store = NogoodStore::completion_nogoods(&p);
        let mut a = Assignment::new(&p);
        let mut qhead = 0;
        store.assert_root_units(&mut a).unwrap();
        a.assume(
            Literal::t_atom(p.find_atom("c").unwrap()),
            Reason::Assumption,
        )
        .unwrap();
        a.assume(
            Literal::f_atom(p.find_atom("d").unwrap()),
            Reason::Assumption,
        )
        .unwrap();
        let id = store.propagate(&mut a, &mut qhead).unwrap_err();
        for lit in store.nogood(id).literals() {
            assert!(a.holds(*lit));
        }
    }

    #[test]
    fn fixpoint_idempotent() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let mut store = NogoodStore::completion_nogoods(&p);
        let mut a = Assignment::new(&p);
        let mut qhead = 0;
        store.assert_root_units(&mut a).unwrap();
        a.assume(
            Literal::t_atom(p.find_atom("c").unwrap()),
            Reason::Assumption,
        )
        .unwrap();
        store.propagate(&mut a, &mut qhead).unwrap();
        let first = a.trail().to_vec();
        let added = store.propagate(&mut a, &mut qhead).unwrap();
        assert_eq!(added, 0);
        assert_eq!(a.trail(), &first[..]);
    }
}
