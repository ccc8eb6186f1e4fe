//! Forward-loop propagation: per strongly connected component, compute the
//! greatest unfounded subset of the non-false atoms and falsify it.
//!
//! The residue computation is iterative removal: starting from all non-false
//! candidate atoms, an atom is removed when one of its non-false bodies has
//! no positive atom left in the candidate set. What remains has no external
//! support outside the falsified bodies. Interleaved with unit propagation to
//! a joint fixpoint this reproduces the effect of full well-founded negation.

use crate::assignment::{Assigned, Assignment, Literal, Reason};
use crate::program::{AtomId, Program};
use std::collections::VecDeque;
use std::rc::Rc;

/// An unfounded set was detected while one of its atoms is assigned true.
#[derive(Clone, Debug)]
pub struct UnfoundedConflict {
    pub set: Rc<[AtomId]>,
    pub true_atom: AtomId,
}

/// Greatest unfounded subset of `candidates` w.r.t. the assignment.
///
/// `candidates` must be closed under the supports considered, i.e. a body
/// counts as internal support only through positive atoms inside the slice.
fn unfounded_residue(program: &Program, a: &Assignment, candidates: &[AtomId]) -> Vec<AtomId> {
    let mut in_set = vec![false; program.n_atoms()];
    for &p in candidates {
        if !a.is_false_atom(p) {
            in_set[p.idx()] = true;
        }
    }

    // Count, per body, the positive atoms still inside the candidate set.
    let mut count = vec![0u32; program.n_bodies()];
    for &p in candidates {
        if in_set[p.idx()] {
            for &b in program.pos_occurrences(p) {
                count[b.idx()] += 1;
            }
        }
    }

    let mut queue: VecDeque<AtomId> = VecDeque::new();
    let mut queued = vec![false; program.n_atoms()];
    for &p in candidates {
        if in_set[p.idx()]
            && program
                .bodies_of(p)
                .iter()
                .any(|&b| !a.is_false_body(b) && count[b.idx()] == 0)
        {
            queue.push_back(p);
            queued[p.idx()] = true;
        }
    }

    while let Some(p) = queue.pop_front() {
        in_set[p.idx()] = false;
        for &b in program.pos_occurrences(p) {
            count[b.idx()] -= 1;
            if count[b.idx()] == 0 && !a.is_false_body(b) {
                for &h in program.heads_of(b) {
                    if in_set[h.idx()] && !queued[h.idx()] {
                        queue.push_back(h);
                        queued[h.idx()] = true;
                    }
                }
            }
        }
    }

    candidates
        .iter()
        .copied()
        .filter(|p| in_set[p.idx()])
        .collect()
}

/// One forward-loop sweep: falsify the greatest unfounded subset of every
/// component. Returns the number of literals added, or a conflict when a
/// detected unfounded atom is already true.
pub fn forward_loop_sweep(
    program: &Program,
    a: &mut Assignment,
) -> Result<usize, UnfoundedConflict> {
    let mut added = 0;
    for scc in program.scc_atom_groups() {
        if scc.is_empty() {
            continue;
        }
        let residue = unfounded_residue(program, a, scc);
        if residue.is_empty() {
            continue;
        }
        let set: Rc<[AtomId]> = residue.into();
        for &p in set.iter() {
            if a.is_true_atom(p) {
                return Err(UnfoundedConflict { set, true_atom: p });
            }
        }
        for &p in set.iter() {
            match a.assign(Literal::f_atom(p), Reason::Unfounded(set.clone())) {
                Assigned::Fresh => added += 1,
                Assigned::Duplicate => {}
                Assigned::Clash => {
                    return Err(UnfoundedConflict {
                        set: set.clone(),
                        true_atom: p,
                    })
                }
            }
        }
    }
    Ok(added)
}

/// Residue of the iterative removal over all non-false atoms at once. Empty
/// exactly when the assignment is unfounded-free; used as the final check on
/// total assignments.
pub fn global_unfounded_residue(program: &Program, a: &Assignment) -> Vec<AtomId> {
    let candidates: Vec<AtomId> = program
        .atom_ids()
        .filter(|&p| !a.is_false_atom(p))
        .collect();
    unfounded_residue(program, a, &candidates)
}
