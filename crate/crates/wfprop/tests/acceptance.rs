//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured numbers. Golden values come from the worked examples; the
//! randomized suites cross-check every propagator against its brute-force
//! oracle at the stated scales.

use std::collections::BTreeSet;
use std::time::Instant;
use wfprop::assignment::{Literal, Reason, Var};
use wfprop::dominators::{self};
use wfprop::engine::{Engine, Propagators};
use wfprop::flowgraph::SupportFlowgraph;
use wfprop::reach::{self, DcVerdict, FixMode};
use wfprop::solver::{self, Heuristic, SolverConfig};
use wfprop::verify;
use wfprop::{parse_program, Program};

const EXAMPLE_1: &str =
    "a :- not b.\nb :- not a.\nc :- d.\nd :- c.\ne :- f.\nf :- e.\nc :- a.\ne :- not a.";
const EXAMPLE_2: &str = "a :- b, c. b :- a. b :- not c. c :- not b.";
const EXAMPLE_3: &str = "a :- b, not c. a :- b, not d. b :- not c. c :- not d. d :- not c.";

fn fixpoint_literals(
    program: &Program,
    props: Propagators,
    assumptions: &[(&str, bool)],
) -> BTreeSet<String> {
    let mut eng = Engine::new(program, props);
    eng.propagate_fixpoint()
        .expect("root fixpoint is conflict-free");
    for &(name, positive) in assumptions {
        let atom = program.find_atom(name).expect("known atom");
        eng.assume(
            Literal {
                var: Var::Atom(atom),
                positive,
            },
            Reason::Assumption,
        )
        .expect("assumption variable unassigned");
        eng.propagate_fixpoint().expect("fixpoint is conflict-free");
    }
    eng.trail()
        .trail()
        .iter()
        .map(|l| l.display(program))
        .collect()
}

#[test]
fn criterion_1_example_1_golden_trace() {
    let started = Instant::now();
    let program = parse_program(EXAMPLE_1).unwrap();

    let up_fl = fixpoint_literals(&program, Propagators::up_fl(), &[("c", true)]);
    let want: BTreeSet<String> = ["Tc", "T{c}", "Td", "T{d}"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(up_fl, want, "joint fixpoint must match exactly");

    let with_dom = fixpoint_literals(&program, Propagators::up_fl_dom(), &[("c", true)]);
    for lit in ["T{a}", "Ta", "F{not a}", "Fb", "Fe", "Ff"] {
        assert!(with_dom.contains(lit), "missing {lit}");
    }
    assert!(with_dom.is_superset(&want));
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 1, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: exact fixpoint of 4 literals; dominator run adds {} more in {:?}",
        with_dom.len() - want.len(),
        elapsed
    );
}

fn dominator_consequence_set(program: &Program, trigger: &str) -> BTreeSet<String> {
    let mut trail = wfprop::Assignment::new(program);
    trail
        .assume(
            Literal::t_atom(program.find_atom(trigger).unwrap()),
            Reason::Assumption,
        )
        .unwrap();
    let graph = SupportFlowgraph::build(program, &trail);
    let tree = dominators::compute_dominators(&graph);
    dominators::dominator_consequences(program, &trail, &graph, &tree)
        .expect("no conflict on the golden assignments")
        .into_iter()
        .map(|c| c.lit.display(program))
        .collect()
}

#[test]
fn criterion_2_example_2_and_3_dominator_goldens() {
    let p2 = parse_program(EXAMPLE_2).unwrap();
    let got2 = dominator_consequence_set(&p2, "a");
    let want2: BTreeSet<String> = ["T{not c}", "T{b, c}", "Tb"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(got2, want2);

    let p3 = parse_program(EXAMPLE_3).unwrap();
    let got3 = dominator_consequence_set(&p3, "a");
    assert!(
        got3.contains("Tb"),
        "the domination consequence must appear"
    );
    let want3: BTreeSet<String> = ["Tb", "T{not c}"].iter().map(|s| s.to_string()).collect();
    assert_eq!(got3, want3);
    println!("criterion 2 PASS: consequence sets {got2:?} and {got3:?}");
}

#[test]
fn criterion_3_dominator_soundness_500_programs() {
    let started = Instant::now();
    let report = verify::soundness_suite(0xC3, 500);
    assert!(
        report.passed(),
        "violations: {:?}",
        report.violations.first()
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    println!(
        "criterion 3 PASS: {} fixpoints over 500 programs, zero violations in {:?}",
        report.cases, elapsed
    );
}

#[test]
fn criterion_4_exactness_suites() {
    let cu = verify::exactness_suite(0xC4, 300, false);
    assert!(cu.passed(), "violations: {:?}", cu.violations.first());
    let unary = verify::exactness_suite(0xC4 + 1, 300, true);
    assert!(unary.passed(), "violations: {:?}", unary.violations.first());
    println!(
        "criterion 4 PASS: component-unary covering on {} fixpoints, unary equality on {}",
        cu.cases, unary.cases
    );
}

#[test]
fn criterion_5_dominator_oracle_equivalence() {
    let report = verify::dominator_oracle_suite(0xC5, 100, 50);
    assert!(
        report.passed(),
        "violations: {:?}",
        report.violations.first()
    );
    assert_eq!(report.cases, 100);
    println!("criterion 5 PASS: 100 random flowgraphs match the deletion oracle on every node");
}

#[test]
fn criterion_6_answer_set_equivalence() {
    let report = verify::answer_set_suite(0xC6, 300);
    assert!(
        report.passed(),
        "violations: {:?}",
        report.violations.first()
    );
    assert_eq!(report.cases, 300);
    println!(
        "criterion 6 PASS: 300 random programs agree with the oracle under every configuration"
    );
}

#[test]
fn criterion_7_domain_consistency_fixed_variable_suites() {
    let started = Instant::now();
    let gs = verify::dc_suite(0xC7, 100, FixMode::GraphStart);
    assert!(gs.passed(), "violations: {:?}", gs.violations.first());
    let t_gs = started.elapsed();
    assert!(t_gs.as_secs() < 120, "fixed graph/start took {t_gs:?}");

    let at = Instant::now();
    let fixed_n = verify::dc_suite(0xC7 + 1, 100, FixMode::Reached);
    assert!(
        fixed_n.passed(),
        "violations: {:?}",
        fixed_n.violations.first()
    );
    let t_n = at.elapsed();
    assert!(t_n.as_secs() < 120, "fixed reached took {t_n:?}");

    println!(
        "criterion 7 (fixed graph/start, fixed reached) PASS: {}+{} checks consistent in {:?}/{:?}",
        gs.cases, fixed_n.cases, t_gs, t_n
    );
}

#[test]
fn criterion_7_domain_consistency_open_instances() {
    // Soundness holds throughout, but full domain consistency on open
    // instances needs unrestricted-set justification conclusions that this
    // propagator stack cannot emit: loop-restricted reasoning never fires on
    // acyclic support chains, and the dominator walk cannot see a support
    // atom shared by bodies whose other atoms carry their own source paths
    // (see dominators::tests::shared_support_atom_is_not_a_dominator for a
    // minimal witness of the latter). The suite is kept at its stated
    // strength and the missed prunings are reported rather than masked.
    let started = Instant::now();
    let open = verify::dc_suite(0xC7 + 2, 100, FixMode::None);
    let t_open = started.elapsed();
    assert!(t_open.as_secs() < 120, "open instances took {t_open:?}");
    let unsound = open
        .violations
        .iter()
        .any(|v| v.message.starts_with("UNSOUND"));
    assert!(!unsound, "unsound pruning: {:?}", open.violations.first());
    if open.passed() {
        println!(
            "criterion 7 (open instances) PASS: {} checks consistent in {t_open:?}",
            open.cases
        );
    } else {
        println!(
            "criterion 7 (open instances) FAIL: {} of {} checks missed prunings (zero unsound)",
            open.violations.len(),
            open.cases
        );
    }
    assert!(
        open.passed(),
        "missed prunings on open instances: {:?}",
        open.violations.first()
    );
}

#[test]
fn criterion_8_counterexample_witness() {
    let inst = reach::counterexample_instance();
    let base = reach::check_domain_consistency(&inst, Propagators::up_fl()).unwrap();
    assert!(base.missed_pruning >= 1);
    assert_eq!(base.unsound_pruning, 0);
    assert!(base.entries.iter().any(|e| {
        e.var == "edge(v0,v1)" && !e.value_in && e.verdict == DcVerdict::MissedPruning
    }));
    let dom = reach::check_domain_consistency(&inst, Propagators::up_fl_dom()).unwrap();
    assert!(dom.domain_consistent());
    println!(
        "criterion 8 PASS: witness misses {} pruning(s) without dominators and none with them",
        base.missed_pruning
    );
}

#[test]
fn criterion_9_directional_branch_reduction() {
    let mut base_branches = 0u64;
    let mut dom_branches = 0u64;
    let mut rows = Vec::new();
    for i in 0..30u64 {
        let cycles = 2 + (i as usize % 4);
        let decoys = i as usize % 3;
        let inst = reach::gateway_chain_instance(cycles, decoys, 0xC9 + i);
        let enc = reach::encode_reach(&inst);
        let run = |props: Propagators| -> u64 {
            let config = SolverConfig {
                props,
                heuristic: Heuristic::LowestIndexTrueFirst,
                enum_limit: Some(1),
                time_budget: None,
                seed: 0,
            };
            let result = solver::solve(&enc.program, &config, &enc.assumptions);
            assert!(
                !result.answer_sets.is_empty(),
                "chain instance {i} is satisfiable"
            );
            result.stats.branches
        };
        let b = run(Propagators::up_fl());
        let d = run(Propagators::up_fl_dom());
        rows.push((i, cycles, decoys, b, d));
        base_branches += b;
        dom_branches += d;
    }
    println!("instance cycles decoys #B(up,fl) #B(up,fl,dom)");
    for (i, cycles, decoys, b, d) in &rows {
        println!("chain-{i:03}   {cycles}      {decoys}        {b}          {d}");
    }
    assert!(
        (dom_branches as f64) <= 0.8 * (base_branches as f64),
        "aggregate {dom_branches} vs {base_branches}"
    );
    println!(
        "criterion 9 PASS: aggregate branches {dom_branches} with dominators vs {base_branches} without ({:.0}%)",
        100.0 * dom_branches as f64 / base_branches as f64
    );
}
