//! Randomized cross-validation suites: every propagator against its
//! brute-force oracle. Shared by the `verify` command and the acceptance
//! tests; each suite reports violations with a replayable reproducer.

use crate::assignment::{Assignment, Literal, Reason, Var};
use crate::dominators::{self, EdgeListGraph};
use crate::engine::{Engine, Propagators};
use crate::flowgraph::SupportFlowgraph;
use crate::oracle::{self, Omega};
use crate::program::{Program, ProgramClass};
use crate::reach::{self, FixMode};
use crate::solver::{self, SolverConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub struct Violation {
    pub suite: &'static str,
    pub case_seed: u64,
    pub message: String,
    /// Self-contained input to replay the failure.
    pub reproducer: String,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub cases: usize,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Random program over `p0..p{n-1}`: up to `max_rules` rules with bodies of
/// at most `max_body` literals. `max_pos` caps positive literals per body
/// (1 yields unary programs by construction).
pub fn random_program(
    rng: &mut ChaCha8Rng,
    max_atoms: usize,
    max_rules: usize,
    max_body: usize,
    max_pos: usize,
) -> Program {
    let n_atoms = rng.gen_range(2..=max_atoms.max(2));
    let n_rules = rng.gen_range(1..=max_rules.max(1));
    let mut b = Program::builder();
    let atoms: Vec<_> = (0..n_atoms).map(|i| b.atom(&format!("p{i}"))).collect();
    for _ in 0..n_rules {
        let head = atoms[rng.gen_range(0..n_atoms)];
        let len = rng.gen_range(0..=max_body);
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for _ in 0..len {
            let atom = atoms[rng.gen_range(0..n_atoms)];
            if pos.len() < max_pos && rng.gen_bool(0.6) {
                pos.push(atom);
            } else {
                neg.push(atom);
            }
        }
        b.rule(head, &pos, &neg);
    }
    b.build()
}

/// A conflict-free joint fixpoint of unit propagation and forward-loop after
/// up to `max_assumptions` random assumptions, mostly on atoms with an
/// occasional body literal. None when propagation conflicts along the way.
fn random_up_fl_fixpoint(
    program: &Program,
    rng: &mut ChaCha8Rng,
    max_assumptions: usize,
) -> Option<Assignment> {
    let mut eng = Engine::new(program, Propagators::up_fl());
    eng.propagate_fixpoint().ok()?;
    let k = rng.gen_range(0..=max_assumptions);
    for _ in 0..k {
        let var = if rng.gen_bool(0.25) {
            let open: Vec<_> = eng.trail().unassigned_bodies().collect();
            if open.is_empty() {
                continue;
            }
            Var::Body(open[rng.gen_range(0..open.len())])
        } else {
            let open: Vec<_> = eng.trail().unassigned_atoms().collect();
            if open.is_empty() {
                break;
            }
            Var::Atom(open[rng.gen_range(0..open.len())])
        };
        let lit = Literal {
            var,
            positive: rng.gen_bool(0.5),
        };
        eng.assume(lit, Reason::Assumption).ok()?;
        eng.propagate_fixpoint().ok()?;
    }
    Some(eng.trail().clone())
}

fn assignment_display(program: &Program, a: &Assignment) -> String {
    let lits: Vec<String> = a.trail().iter().map(|l| l.display(program)).collect();
    format!("{{{}}}", lits.join(", "))
}

fn reproducer(program: &Program, a: &Assignment) -> String {
    format!(
        "program:\n{}assignment: {}",
        program,
        assignment_display(program, a)
    )
}

/// Consequences of one dominator sweep at the given assignment, split into
/// body and atom literals.
fn dom_consequences_at(
    program: &Program,
    a: &Assignment,
) -> Option<(
    BTreeSet<crate::program::BodyId>,
    BTreeSet<crate::program::AtomId>,
)> {
    let g = SupportFlowgraph::build(program, a);
    let tree = dominators::compute_dominators(&g);
    let cons = dominators::dominator_consequences(program, a, &g, &tree).ok()?;
    let mut bodies = BTreeSet::new();
    let mut atoms = BTreeSet::new();
    for c in cons {
        match c.lit.var {
            Var::Body(b) => {
                bodies.insert(b);
            }
            Var::Atom(p) => {
                atoms.insert(p);
            }
        }
    }
    Some((bodies, atoms))
}

/// Dominator consequences stay inside the exhaustive one-step justification
/// and domination sets over all candidate sets.
pub fn soundness_suite(seed: u64, programs: usize) -> SuiteReport {
    let mut report = SuiteReport {
        suite: "dominator-soundness",
        cases: 0,
        violations: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut produced = 0;
    while produced < programs {
        let case_seed = rng.gen();
        let mut prng = ChaCha8Rng::seed_from_u64(case_seed);
        let program = random_program(&mut prng, 12, 14, 3, 3);
        produced += 1;
        for _ in 0..3 {
            let Some(a) = random_up_fl_fixpoint(&program, &mut prng, 3) else {
                continue;
            };
            report.cases += 1;
            let Some((dom_bodies, dom_atoms)) = dom_consequences_at(&program, &a) else {
                report.violations.push(Violation {
                    suite: report.suite,
                    case_seed,
                    message: "dominator walk conflicted at a conflict-free fixpoint".into(),
                    reproducer: reproducer(&program, &a),
                });
                continue;
            };
            let wfj = oracle::wfj_oracle(&program, &a, Omega::All).expect("guarded size");
            let wfd = oracle::wfd_oracle(&program, &a, Omega::All).expect("guarded size");
            for b in dom_bodies.difference(&wfj) {
                report.violations.push(Violation {
                    suite: report.suite,
                    case_seed,
                    message: format!(
                        "T{} emitted but not a justification consequence",
                        program.body_display(*b)
                    ),
                    reproducer: reproducer(&program, &a),
                });
            }
            for p in dom_atoms.difference(&wfd) {
                report.violations.push(Violation {
                    suite: report.suite,
                    case_seed,
                    message: format!(
                        "T{} emitted but not a domination consequence",
                        program.atom_name(*p)
                    ),
                    reproducer: reproducer(&program, &a),
                });
            }
        }
    }
    report
}

/// On component-unary programs the dominator consequences cover backward-loop
/// and loop-domination (the loop-restricted operators) on unassigned
/// variables; on unary programs they coincide with the unrestricted
/// operators.
pub fn exactness_suite(seed: u64, programs: usize, unary: bool) -> SuiteReport {
    let mut report = SuiteReport {
        suite: if unary {
            "unary-exactness"
        } else {
            "component-unary-exactness"
        },
        cases: 0,
        violations: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut produced = 0;
    while produced < programs {
        let case_seed = rng.gen();
        let mut prng = ChaCha8Rng::seed_from_u64(case_seed);
        let program = if unary {
            random_program(&mut prng, 10, 12, 3, 1)
        } else {
            let p = random_program(&mut prng, 10, 12, 3, 2);
            if p.class() == ProgramClass::General {
                continue; // rejection sampling for the component-unary class
            }
            p
        };
        if unary {
            debug_assert_eq!(program.class(), ProgramClass::Unary);
        }
        produced += 1;
        let omega = if unary { Omega::All } else { Omega::Loops };
        for _ in 0..3 {
            let Some(a) = random_up_fl_fixpoint(&program, &mut prng, 3) else {
                continue;
            };
            report.cases += 1;
            let Some((dom_bodies, dom_atoms)) = dom_consequences_at(&program, &a) else {
                continue;
            };
            let wfj = oracle::wfj_oracle(&program, &a, omega).expect("guarded size");
            let wfd = oracle::wfd_oracle(&program, &a, omega).expect("guarded size");
            let wfj_open: BTreeSet<_> = wfj
                .into_iter()
                .filter(|&b| a.is_unassigned(Var::Body(b)))
                .collect();
            let wfd_open: BTreeSet<_> = wfd
                .into_iter()
                .filter(|&p| a.is_unassigned(Var::Atom(p)))
                .collect();
            let mut complain = |message: String| {
                report.violations.push(Violation {
                    suite: report.suite,
                    case_seed,
                    message,
                    reproducer: reproducer(&program, &a),
                });
            };
            for b in wfj_open.difference(&dom_bodies) {
                complain(format!(
                    "justification consequence T{} missed by dominators",
                    program.body_display(*b)
                ));
            }
            for p in wfd_open.difference(&dom_atoms) {
                complain(format!(
                    "domination consequence T{} missed by dominators",
                    program.atom_name(*p)
                ));
            }
            if unary {
                for b in dom_bodies.difference(&wfj_open) {
                    complain(format!(
                        "T{} emitted beyond the one-step operator on a unary program",
                        program.body_display(*b)
                    ));
                }
                for p in dom_atoms.difference(&wfd_open) {
                    complain(format!(
                        "T{} emitted beyond the one-step operator on a unary program",
                        program.atom_name(*p)
                    ));
                }
            }
        }
    }
    report
}

/// Lengauer-Tarjan output equals the naive deletion oracle on random rooted
/// digraphs.
pub fn dominator_oracle_suite(seed: u64, graphs: usize, max_nodes: usize) -> SuiteReport {
    let mut report = SuiteReport {
        suite: "dominator-oracle",
        cases: 0,
        violations: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..graphs {
        let case_seed: u64 = rng.gen();
        let mut grng = ChaCha8Rng::seed_from_u64(case_seed);
        let n = grng.gen_range(2..=max_nodes.max(2));
        let density = grng.gen_range(0.05..0.35);
        let mut edges = Vec::new();
        for f in 0..n as u32 {
            for t in 0..n as u32 {
                if f != t && grng.gen_bool(density) {
                    edges.push((f, t));
                }
            }
        }
        // Root gets a couple of guaranteed out-edges so graphs are not
        // trivially empty.
        for _ in 0..2 {
            let t = grng.gen_range(1..n) as u32;
            edges.push((0, t));
        }
        let g = EdgeListGraph::new(n, &edges);
        let fast = dominators::compute_dominators(&g);
        let slow = dominators::naive_dominator_tree(&g);
        report.cases += 1;
        for v in 0..n {
            if fast.is_reachable(v) != slow.is_reachable(v) || fast.idom(v) != slow.idom(v) {
                report.violations.push(Violation {
                    suite: report.suite,
                    case_seed,
                    message: format!(
                        "node {v}: computed idom {:?} (reachable {}), oracle {:?} ({})",
                        fast.idom(v),
                        fast.is_reachable(v),
                        slow.idom(v),
                        slow.is_reachable(v)
                    ),
                    reproducer: format!("n = {n}, edges = {edges:?}"),
                });
            }
        }
    }
    report
}

/// Solver answer sets equal oracle enumeration under every propagator
/// configuration.
pub fn answer_set_suite(seed: u64, programs: usize) -> SuiteReport {
    let mut report = SuiteReport {
        suite: "answer-set-equivalence",
        cases: 0,
        violations: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs = [
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
    ];
    for _ in 0..programs {
        let case_seed: u64 = rng.gen();
        let mut prng = ChaCha8Rng::seed_from_u64(case_seed);
        let program = random_program(&mut prng, 12, 14, 3, 3);
        report.cases += 1;
        let want: BTreeSet<BTreeSet<_>> = oracle::enumerate_answer_sets(&program, 20)
            .expect("guarded size")
            .into_iter()
            .collect();
        for props in configs {
            let config = SolverConfig {
                props,
                ..Default::default()
            };
            let result = solver::solve(&program, &config, &[]);
            let got: BTreeSet<BTreeSet<_>> = result.answer_sets.into_iter().collect();
            if got != want {
                let mismatch = |p: &Program| {
                    let solved: BTreeSet<BTreeSet<_>> = solver::solve(p, &config, &[])
                        .answer_sets
                        .into_iter()
                        .collect();
                    match oracle::enumerate_answer_sets(p, 20) {
                        Ok(sets) => solved != sets.into_iter().collect(),
                        Err(_) => false,
                    }
                };
                let shrunk = shrink_program(&program, mismatch);
                report.violations.push(Violation {
                    suite: report.suite,
                    case_seed,
                    message: format!(
                        "config {:?}: solver found {} set(s), oracle {}",
                        props.names(),
                        got.len(),
                        want.len()
                    ),
                    reproducer: format!("program:\n{shrunk}"),
                });
            }
        }
    }
    report
}

/// At every conflict-free joint fixpoint of unit propagation and
/// forward-loop, the one-step negation operator over all candidate sets adds
/// nothing: the assignment is unfounded-free.
pub fn wfn_completeness_suite(seed: u64, programs: usize) -> SuiteReport {
    let mut report = SuiteReport {
        suite: "unfounded-freeness",
        cases: 0,
        violations: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..programs {
        let case_seed: u64 = rng.gen();
        let mut prng = ChaCha8Rng::seed_from_u64(case_seed);
        let program = random_program(&mut prng, 12, 14, 3, 3);
        for _ in 0..3 {
            let Some(a) = random_up_fl_fixpoint(&program, &mut prng, 3) else {
                continue;
            };
            report.cases += 1;
            let wfn = oracle::wfn_oracle(&program, &a, Omega::All).expect("guarded size");
            for p in wfn {
                if !a.is_false_atom(p) {
                    report.violations.push(Violation {
                        suite: report.suite,
                        case_seed,
                        message: format!(
                            "atom {} is unfounded but not false at the fixpoint",
                            program.atom_name(p)
                        ),
                        reproducer: reproducer(&program, &a),
                    });
                }
            }
        }
    }
    report
}

/// Propagation soundness of root-level inference: literals forced at the
/// root hold in every answer set.
pub fn root_soundness_suite(seed: u64, programs: usize) -> SuiteReport {
    let mut report = SuiteReport {
        suite: "root-inference-soundness",
        cases: 0,
        violations: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs = [
        Propagators::up_fl(),
        Propagators::up_fl_dom(),
        Propagators {
            fl: true,
            dom: true,
            blprobe: true,
        },
    ];
    for _ in 0..programs {
        let case_seed: u64 = rng.gen();
        let mut prng = ChaCha8Rng::seed_from_u64(case_seed);
        let program = random_program(&mut prng, 10, 12, 3, 3);
        let sets = oracle::enumerate_answer_sets(&program, 20).expect("guarded size");
        for props in configs {
            report.cases += 1;
            let mut eng = Engine::new(&program, props);
            if eng.propagate_fixpoint().is_err() {
                if !sets.is_empty() {
                    report.violations.push(Violation {
                        suite: report.suite,
                        case_seed,
                        message: "root conflict on a satisfiable program".into(),
                        reproducer: format!("program:\n{program}"),
                    });
                }
                continue;
            }
            for lit in eng.trail().trail() {
                let Var::Atom(p) = lit.var else { continue };
                let ok = sets.iter().all(|s| s.contains(&p) == lit.positive);
                if !ok {
                    report.violations.push(Violation {
                        suite: report.suite,
                        case_seed,
                        message: format!(
                            "root literal {} fails in some answer set (config {:?})",
                            lit.display(&program),
                            props.names()
                        ),
                        reproducer: format!("program:\n{program}"),
                    });
                }
            }
        }
    }
    report
}

/// Reachability domain-consistency suites, one per fixed-variable regime.
pub fn dc_suite(seed: u64, instances: usize, mode: FixMode) -> SuiteReport {
    let (suite, configs): (&'static str, Vec<Propagators>) = match mode {
        FixMode::GraphStart => ("dc-fixed-graph-start", vec![Propagators::up_fl()]),
        FixMode::Reached => (
            "dc-fixed-reached",
            vec![
                Propagators {
                    fl: false,
                    dom: false,
                    blprobe: true,
                },
                Propagators::up_fl_dom(),
            ],
        ),
        FixMode::None => ("dc-open", vec![Propagators::up_fl_dom()]),
    };
    let mut report = SuiteReport {
        suite,
        cases: 0,
        violations: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let case_seed: u64 = rng.gen();
        let mut irng = ChaCha8Rng::seed_from_u64(case_seed);
        let n = irng.gen_range(2..=6);
        let density = irng.gen_range(0.2..0.6);
        let fixed_fraction = irng.gen_range(0.3..0.8);
        let inst = reach::random_instance(case_seed, n, density, fixed_fraction, mode);
        for &props in &configs {
            report.cases += 1;
            match reach::check_domain_consistency(&inst, props) {
                Ok(r) if r.domain_consistent() => {}
                Ok(r) => {
                    let message = if r.unsound_pruning > 0 || r.unsound_conflict {
                        format!(
                            "UNSOUND config {:?}: {} unsound prunings, conflict {}",
                            props.names(),
                            r.unsound_pruning,
                            r.unsound_conflict
                        )
                    } else {
                        format!(
                            "config {:?}: {} missed prunings",
                            props.names(),
                            r.missed_pruning
                        )
                    };
                    let shrunk = shrink_instance(&inst, |cand| {
                        reach::check_domain_consistency(cand, props)
                            .map(|r| !r.domain_consistent())
                            .unwrap_or(false)
                    });
                    report.violations.push(Violation {
                        suite,
                        case_seed,
                        message,
                        reproducer: format!("instance:\n{shrunk}"),
                    });
                }
                Err(e) => {
                    report.violations.push(Violation {
                        suite,
                        case_seed,
                        message: format!("checker guard: {e}"),
                        reproducer: format!("instance:\n{inst}"),
                    });
                }
            }
        }
    }
    report
}

/// Every suite at acceptance scale, apportioned by `count` (cases per suite;
/// zero runs nothing).
pub fn run_all(seed: u64, count: usize) -> Vec<SuiteReport> {
    vec![
        soundness_suite(seed, count),
        exactness_suite(seed.wrapping_add(1), count, false),
        exactness_suite(seed.wrapping_add(2), count, true),
        dominator_oracle_suite(seed.wrapping_add(3), count, 50),
        answer_set_suite(seed.wrapping_add(4), count),
        wfn_completeness_suite(seed.wrapping_add(5), count),
        root_soundness_suite(seed.wrapping_add(6), count.min(100)),
        dc_suite(seed.wrapping_add(7), count, FixMode::GraphStart),
        dc_suite(seed.wrapping_add(8), count, FixMode::Reached),
        dc_suite(seed.wrapping_add(9), count, FixMode::None),
    ]
}

/// Greedy membership shrink for reachability instances: demote edges and
/// starts to out and fixed reached values to open while the failure
/// predicate keeps firing.
pub fn shrink_instance<F>(inst: &reach::ReachInstance, fails: F) -> reach::ReachInstance
where
    F: Fn(&reach::ReachInstance) -> bool,
{
    use crate::reach::Membership;
    let mut cur = inst.clone();
    let mut progress = true;
    while progress {
        progress = false;
        let n = cur.n_nodes();
        for from in 0..n {
            for to in 0..n {
                if cur.edge(from, to) != Membership::Out {
                    let mut cand = cur.clone();
                    cand.set_edge(from, to, Membership::Out);
                    if fails(&cand) {
                        cur = cand;
                        progress = true;
                    }
                }
            }
        }
        for v in 0..n {
            if cur.start(v) != Membership::Out {
                let mut cand = cur.clone();
                cand.set_start(v, Membership::Out);
                if fails(&cand) {
                    cur = cand;
                    progress = true;
                }
            }
            if cur.reached(v) != Membership::Maybe {
                let mut cand = cur.clone();
                cand.set_reached(v, Membership::Maybe);
                if fails(&cand) {
                    cur = cand;
                    progress = true;
                }
            }
        }
    }
    cur
}

/// Greedy rule-removal shrink: drop rules while the failure predicate keeps
/// firing. Returns the smaller program's text.
pub fn shrink_program<F>(program: &Program, fails: F) -> String
where
    F: Fn(&Program) -> bool,
{
    let mut rules: Vec<(String, Vec<String>, Vec<String>)> = program
        .rules()
        .iter()
        .map(|r| {
            let body = program.body(r.body);
            (
                program.atom_name(r.head).to_string(),
                body.positive
                    .iter()
                    .map(|&p| program.atom_name(p).to_string())
                    .collect(),
                body.negative
                    .iter()
                    .map(|&p| program.atom_name(p).to_string())
                    .collect(),
            )
        })
        .collect();
    let rebuild = |rules: &[(String, Vec<String>, Vec<String>)]| -> Program {
        let mut b = Program::builder();
        for (head, pos, neg) in rules {
            let h = b.atom(head);
            let pos: Vec<_> = pos.iter().map(|n| b.atom(n)).collect();
            let neg: Vec<_> = neg.iter().map(|n| b.atom(n)).collect();
            b.rule(h, &pos, &neg);
        }
        b.build()
    };
    let mut progress = true;
    while progress {
        progress = false;
        let mut i = 0;
        while i < rules.len() {
            let mut candidate = rules.clone();
            candidate.remove(i);
            if fails(&rebuild(&candidate)) {
                rules = candidate;
                progress = true;
            } else {
                i += 1;
            }
        }
    }
    rebuild(&rules).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(soundness_suite(1, 25).passed());
        assert!(exactness_suite(2, 20, false).passed());
        assert!(exactness_suite(3, 20, true).passed());
        assert!(dominator_oracle_suite(4, 20, 25).passed());
        assert!(answer_set_suite(5, 15).passed());
        assert!(wfn_completeness_suite(6, 15).passed());
        assert!(root_soundness_suite(7, 10).passed());
    }

    #[test]
    fn dc_suites_smoke() {
        assert!(dc_suite(8, 10, FixMode::GraphStart).passed());
        assert!(dc_suite(9, 10, FixMode::Reached).passed());
        assert!(dc_suite(10, 10, FixMode::None).passed());
    }

    #[test]
    fn zero_count_runs_nothing() {
        let reports = run_all(0, 0);
        assert!(reports.iter().all(|r| r.cases == 0 && r.passed()));
    }

    #[test]
    fn shrink_keeps_failure() {
        // Failure predicate: the program has no answer set.
        let mut b = Program::builder();
        let p0 = b.atom("p0");
        let p1 = b.atom("p1");
        b.rule(p0, &[], &[p0]);
        b.rule(p1, &[p0], &[]);
        b.rule(p1, &[], &[p1]);
        let program = b.build();
        let fails = |p: &Program| {
            oracle::enumerate_answer_sets(p, 20)
                .map(|s| s.is_empty())
                .unwrap_or(false)
        };
        assert!(fails(&program));
        let shrunk = shrink_program(&program, fails);
        assert!(shrunk.lines().count() < 3);
        assert!(fails(&crate::parse::parse_program(&shrunk).unwrap()));
    }
}
