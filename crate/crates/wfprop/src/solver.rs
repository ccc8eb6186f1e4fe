//! Chronological-backtracking search over the propagation engine,
//! enumerating answer sets and collecting branch/conflict statistics.

use crate::assignment::{Literal, Reason, Var};
use crate::engine::{ConfigError, Engine, InferenceCounts, Propagators};
use crate::program::{AtomId, Program};
use crate::unfounded;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heuristic {
    /// Lowest-index unassigned atom, true branch first. Deterministic.
    LowestIndexTrueFirst,
    /// Uniform random unassigned atom and polarity, from the seeded stream.
    SeededRandom,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub props: Propagators,
    pub heuristic: Heuristic,
    /// Stop after this many answer sets (None enumerates all).
    pub enum_limit: Option<usize>,
    pub time_budget: Option<Duration>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            props: Propagators::up_fl(),
            heuristic: Heuristic::LowestIndexTrueFirst,
            enum_limit: None,
            time_budget: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(self) -> Result<SolverConfig, ConfigError> {
        self.props.validate()?;
        Ok(self)
    }
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct SolverStats {
    /// Decisions taken, counting each flipped branch once more.
    pub branches: u64,
    /// Conflicts hit, including rejected total assignments.
    pub conflicts: u64,
    pub time_ms: u128,
    pub inferences: InferenceCounts,
    pub answer_sets_found: usize,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Each answer set as a sorted atom-id set, in discovery order.
    pub answer_sets: Vec<BTreeSet<AtomId>>,
    pub stats: SolverStats,
    /// False when a limit or the time budget cut enumeration short.
    pub complete: bool,
    /// The wall-clock budget expired mid-search.
    pub timed_out: bool,
}

impl SolveResult {
    pub fn answer_set_names(&self, program: &Program) -> Vec<Vec<String>> {
        self.answer_sets
            .iter()
            .map(|s| {
                let mut names: Vec<String> = s
                    .iter()
                    .map(|&a| program.atom_name(a).to_string())
                    .collect();
                names.sort();
                names
            })
            .collect()
    }
}

/// The assumptions conflict with the program at the root.
#[derive(Debug, thiserror::Error)]
#[error("assumptions are inconsistent with the program")]
pub struct AssumptionConflict;

struct Frame {
    atom: AtomId,
    /// Decision level at which this frame's literal sits.
    level: usize,
    flipped: bool,
}

/// Enumerate answer sets under `assumptions`. Assumption levels are never
/// backtracked; decisions stack above them. Chronological backtracking flips
/// the most recent unflipped decision after each conflict or recorded model.
pub fn solve(program: &Program, config: &SolverConfig, assumptions: &[Literal]) -> SolveResult {
    let start = Instant::now();
    let mut stats = SolverStats::default();
    let mut eng = Engine::new(program, config.props);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut result = SolveResult {
        answer_sets: Vec::new(),
        stats: SolverStats::default(),
        complete: true,
        timed_out: false,
    };

    // Root propagation and assumptions.
    let mut root_ok = eng.propagate_fixpoint().is_ok();
    if root_ok {
        for &lit in assumptions {
            if eng.trail().holds(lit) {
                continue;
            }
            if eng.trail().holds(lit.complement())
                || eng.assume(lit, Reason::Assumption).is_err()
                || eng.propagate_fixpoint().is_err()
            {
                root_ok = false;
                break;
            }
        }
    }
    if !root_ok {
        stats.conflicts = 1;
        stats.inferences = eng.counts();
        stats.time_ms = start.elapsed().as_millis();
        result.stats = stats;
        return result;
    }

    let floor = eng.level();
    let mut frames: Vec<Frame> = Vec::new();

    'search: loop {
        if let Some(budget) = config.time_budget {
            if start.elapsed() > budget {
                result.complete = false;
                result.timed_out = true;
                break;
            }
        }

        match pick_atom(&eng, config, &mut rng) {
            Some((atom, polarity)) => {
                stats.branches += 1;
                let lit = Literal {
                    var: Var::Atom(atom),
                    positive: polarity,
                };
                eng.assume(lit, Reason::Decision)
                    .expect("picked atom is unassigned");
                frames.push(Frame {
                    atom,
                    level: eng.level(),
                    flipped: false,
                });
                if eng.propagate_fixpoint().is_err() {
                    stats.conflicts += 1;
                    if !backtrack_flip(&mut eng, &mut frames, floor, &mut stats) {
                        break 'search;
                    }
                }
            }
            None => {
                // All atoms assigned; bodies follow from unit propagation.
                debug_assert!(eng.trail().unassigned_bodies().next().is_none());
                if unfounded::global_unfounded_residue(program, eng.trail()).is_empty() {
                    result.answer_sets.push(eng.trail().true_atoms().collect());
                    stats.answer_sets_found += 1;
                    if let Some(limit) = config.enum_limit {
                        if result.answer_sets.len() >= limit {
                            result.complete = false;
                            break;
                        }
                    }
                } else {
                    // Supported model that is not an answer set.
                    stats.conflicts += 1;
                }
                if !backtrack_flip(&mut eng, &mut frames, floor, &mut stats) {
                    break 'search;
                }
            }
        }
    }

    stats.inferences = eng.counts();
    stats.time_ms = start.elapsed().as_millis();
    result.stats = stats;
    result
}

fn pick_atom(eng: &Engine, config: &SolverConfig, rng: &mut ChaCha8Rng) -> Option<(AtomId, bool)> {
    match config.heuristic {
        Heuristic::LowestIndexTrueFirst => eng.trail().unassigned_atoms().next().map(|a| (a, true)),
        Heuristic::SeededRandom => {
            let open: Vec<AtomId> = eng.trail().unassigned_atoms().collect();
            if open.is_empty() {
                None
            } else {
                let atom = open[rng.gen_range(0..open.len())];
                Some((atom, rng.gen_bool(0.5)))
            }
        }
    }
}

/// Undo to the deepest unflipped decision, flip it, and propagate; repeated
/// until propagation succeeds. False when the tree is exhausted.
fn backtrack_flip(
    eng: &mut Engine,
    frames: &mut Vec<Frame>,
    floor: usize,
    stats: &mut SolverStats,
) -> bool {
    loop {
        while frames.last().is_some_and(|f| f.flipped) {
            frames.pop();
        }
        let Some(frame) = frames.last_mut() else {
            eng.backtrack(floor);
            return false;
        };
        let value = eng
            .trail()
            .value(Var::Atom(frame.atom))
            .expect("decision atom is assigned");
        eng.backtrack(frame.level - 1);
        frame.flipped = true;
        stats.branches += 1;
        let lit = Literal {
            var: Var::Atom(frame.atom),
            positive: !value,
        };
        eng.assume(lit, Reason::Decision)
            .expect("atom was unassigned after backtracking");
        debug_assert_eq!(eng.level(), frame.level);
        if eng.propagate_fixpoint().is_ok() {
            return true;
        }
        stats.conflicts += 1;
    }
}

/// Propagate to the joint fixpoint without searching: the root view used by
/// the propagate command and the consistency checks. The engine rides along
/// in the error so callers can render the partial trail.
#[allow(clippy::result_large_err)]
pub fn root_fixpoint<'p>(
    program: &'p Program,
    props: Propagators,
    assumptions: &[Literal],
) -> Result<Engine<'p>, (Engine<'p>, crate::engine::Conflict)> {
    let mut eng = Engine::new(program, props);
    if let Err(c) = eng.propagate_fixpoint() {
        return Err((eng, c));
    }
    for &lit in assumptions {
        if eng.trail().holds(lit) {
            continue;
        }
        if eng.trail().holds(lit.complement()) {
            let conflict = crate::engine::Conflict {
                by: crate::engine::PropagatorKind::Up,
                detail: crate::engine::ConflictDetail::AssumptionClash(lit),
            };
            return Err((eng, conflict));
        }
        eng.assume(lit, Reason::Assumption)
            .expect("unassigned checked above");
        if let Err(c) = eng.propagate_fixpoint() {
            return Err((eng, c));
        }
    }
    Ok(eng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::parse::parse_program;

    const EXAMPLE_1: &str =
        "a :- not b.\nb :- not a.\nc :- d.\nd :- c.\ne :- f.\nf :- e.\nc :- a.\ne :- not a.";
    const EXAMPLE_2: &str = "a :- b, c. b :- a. b :- not c. c :- not b.";

    fn all_configs() -> Vec<Propagators> {
        vec![
            Propagators::up_only(),
            Propagators::up_fl(),
            Propagators {
                fl: false,
                dom: false,
                blprobe: true,
            },
            Propagators::up_fl_dom(),
            Propagators {
                fl: true,
                dom: false,
                blprobe: true,
            },
            Propagators {
                fl: true,
                dom: true,
                blprobe: true,
            },
        ]
    }

    fn solve_names(src: &str, props: Propagators) -> BTreeSet<Vec<String>> {
        let p = parse_program(src).unwrap();
        let config = SolverConfig {
            props,
            ..Default::default()
        };
        let r = solve(&p, &config, &[]);
        assert!(r.complete);
        r.answer_set_names(&p).into_iter().collect()
    }

    #[test]
    fn example_1_two_answer_sets_any_config() {
        let want: BTreeSet<Vec<String>> = [
            vec!["a".into(), "c".into(), "d".into()],
            vec!["b".into(), "e".into(), "f".into()],
        ]
        .into();
        for props in all_configs() {
            assert_eq!(solve_names(EXAMPLE_1, props), want, "config {props:?}");
        }
    }

    #[test]
    fn odd_loop_unsat_with_conflicts() {
        let p = parse_program("a :- not a.").unwrap();
        let r = solve(&p, &SolverConfig::default(), &[]);
        assert!(r.answer_sets.is_empty());
        assert!(r.stats.conflicts >= 1);
        assert!(r.complete);
    }

    #[test]
    fn example_2_matches_oracle_all_configs() {
        let p = parse_program(EXAMPLE_2).unwrap();
        let want: BTreeSet<BTreeSet<AtomId>> = oracle::enumerate_answer_sets(&p, 20)
            .unwrap()
            .into_iter()
            .collect();
        for props in all_configs() {
            let config = SolverConfig {
                props,
                ..Default::default()
            };
            let r = solve(&p, &config, &[]);
            let got: BTreeSet<BTreeSet<AtomId>> = r.answer_sets.into_iter().collect();
            assert_eq!(got, want, "config {props:?}");
        }
    }

    #[test]
    fn empty_program_has_empty_answer_set() {
        let p = parse_program("").unwrap();
        let r = solve(&p, &SolverConfig::default(), &[]);
        assert_eq!(r.answer_sets, vec![BTreeSet::new()]);
    }

    #[test]
    fn enum_limit_flags_incomplete() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let config = SolverConfig {
            enum_limit: Some(1),
            ..Default::default()
        };
        let r = solve(&p, &config, &[]);
        assert_eq!(r.answer_sets.len(), 1);
        assert!(!r.complete);
    }

    #[test]
    fn assumptions_restrict_enumeration() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let c = p.find_atom("c").unwrap();
        let r = solve(&p, &SolverConfig::default(), &[Literal::t_atom(c)]);
        assert_eq!(r.answer_set_names(&p), vec![vec!["a", "c", "d"]]);
    }

    #[test]
    fn conflicting_assumptions_yield_unsat() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let c = p.find_atom("c").unwrap();
        let d = p.find_atom("d").unwrap();
        let r = solve(
            &p,
            &SolverConfig::default(),
            &[Literal::t_atom(c), Literal::f_atom(d)],
        );
        assert!(r.answer_sets.is_empty());
        assert_eq!(r.stats.conflicts, 1);
    }

    #[test]
    fn deterministic_stats_with_lowest_index() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let config = SolverConfig::default();
        let r1 = solve(&p, &config, &[]);
        let r2 = solve(&p, &config, &[]);
        assert_eq!(r1.stats.branches, r2.stats.branches);
        assert_eq!(r1.stats.conflicts, r2.stats.conflicts);
        assert_eq!(r1.answer_sets, r2.answer_sets);
    }

    #[test]
    fn seeded_random_reproducible() {
        let p = parse_program(EXAMPLE_1).unwrap();
        let config = SolverConfig {
            heuristic: Heuristic::SeededRandom,
            seed: 7,
            ..Default::default()
        };
        let r1 = solve(&p, &config, &[]);
        let r2 = solve(&p, &config, &[]);
        assert_eq!(r1.stats.branches, r2.stats.branches);
        let got: BTreeSet<_> = r1.answer_sets.into_iter().collect();
        let want: BTreeSet<_> = solve(&p, &SolverConfig::default(), &[])
            .answer_sets
            .into_iter()
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn up_only_still_rejects_unfounded_models() {
        // Completion models of "c :- d. d :- c." include {c,d}; only the
        // empty set is an answer set.
        let p = parse_program("c :- d. d :- c.").unwrap();
        let config = SolverConfig {
            props: Propagators::up_only(),
            ..Default::default()
        };
        let r = solve(&p, &config, &[]);
        assert_eq!(r.answer_sets, vec![BTreeSet::new()]);
        assert!(r.stats.conflicts >= 1);
    }
}
