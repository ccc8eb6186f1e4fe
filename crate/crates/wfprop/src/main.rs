//! Command-line frontend: parse, solve, propagate, check-dc, bench, verify,
//! and dump.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;
use wfprop::assignment::{Literal, Var};
use wfprop::dominators;
use wfprop::engine::Propagators;
use wfprop::flowgraph::SupportFlowgraph;
use wfprop::program::Program;
use wfprop::reach::{self, FixMode, ReachInstance};
use wfprop::solver::{self, Heuristic, SolverConfig};
use wfprop::verify;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_GUARD: u8 = 2;
const EXIT_UNSAT: u8 = 20;

#[derive(Parser)]
#[command(
    name = "wfprop",
    about = "Answer-set propagation engine with dominator-based support justification",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and pretty-print it with summary statistics.
    Parse { file: PathBuf },
    /// Enumerate answer sets.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        props: PropsArg,
        /// Stop after this many answer sets.
        #[arg(long = "enum")]
        enum_limit: Option<usize>,
        /// Wall-clock budget in milliseconds.
        #[arg(long)]
        time_limit_ms: Option<u64>,
        /// Decision heuristic: lowest | random.
        #[arg(long, default_value = "lowest")]
        heuristic: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Assumptions, e.g. `t:a,f:b,t:{c, not d}`.
        #[arg(long)]
        assume: Option<String>,
        /// Emit the structured result record instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Print the root propagation fixpoint with per-literal provenance.
    Propagate {
        file: PathBuf,
        #[command(flatten)]
        props: PropsArg,
        #[arg(long)]
        assume: Option<String>,
        /// Also print reason nogoods, unfounded sets, and dominators.
        #[arg(long)]
        explain: bool,
    },
    /// Check domain consistency of a reachability instance.
    CheckDc {
        file: PathBuf,
        #[command(flatten)]
        props: PropsArg,
        #[arg(long)]
        json: bool,
    },
    /// Solve a set of instances under several configurations and tabulate
    /// branches and conflicts.
    Bench {
        /// Directory of .lp programs and .reach instances.
        dir: Option<PathBuf>,
        /// Semicolon-separated configurations, e.g. `up,fl;up,fl,dom`.
        #[arg(long, default_value = "up,fl;up,fl,dom")]
        configs: String,
        /// Generate this many reachability instances instead of reading a
        /// directory.
        #[arg(long)]
        gen_reach: Option<usize>,
        #[arg(long, default_value_t = 6)]
        gen_nodes: usize,
        /// Generator mode: gs | n | none | chain.
        #[arg(long, default_value = "chain")]
        gen_mode: String,
        /// Stop each run after this many answer sets.
        #[arg(long = "enum")]
        enum_limit: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        time_limit_ms: Option<u64>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the randomized oracle cross-check suites.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        /// Cases per suite.
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Emit the support flowgraph as DOT, dominator tree overlaid.
    Dump {
        file: PathBuf,
        #[arg(long)]
        assume: Option<String>,
        /// Skip the dominator-tree overlay.
        #[arg(long)]
        no_domtree: bool,
    },
}

#[derive(Args)]
struct PropsArg {
    /// Propagators: comma list of up, fl, dom, blprobe.
    #[arg(long, default_value = "up,fl")]
    props: String,
}

fn main() -> ExitCode {
    // Die quietly on closed pipes instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version paths exit clean; usage errors exit 1.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::from(EXIT_OK);
        }
    };
    let code = match cli.command {
        Command::Parse { file } => cmd_parse(&file),
        Command::Solve {
            file,
            props,
            enum_limit,
            time_limit_ms,
            heuristic,
            seed,
            assume,
            json,
        } => cmd_solve(
            &file,
            &props.props,
            enum_limit,
            time_limit_ms,
            &heuristic,
            seed,
            assume.as_deref(),
            json,
        ),
        Command::Propagate {
            file,
            props,
            assume,
            explain,
        } => cmd_propagate(&file, &props.props, assume.as_deref(), explain),
        Command::CheckDc { file, props, json } => cmd_check_dc(&file, &props.props, json),
        Command::Bench {
            dir,
            configs,
            gen_reach,
            gen_nodes,
            gen_mode,
            enum_limit,
            seed,
            time_limit_ms,
            jobs,
            json,
        } => cmd_bench(
            dir.as_deref(),
            &configs,
            gen_reach,
            gen_nodes,
            &gen_mode,
            enum_limit,
            seed,
            time_limit_ms,
            jobs,
            json,
        ),
        Command::Verify { seed, count } => cmd_verify(seed, count),
        Command::Dump {
            file,
            assume,
            no_domtree,
        } => cmd_dump(&file, assume.as_deref(), no_domtree),
    };
    ExitCode::from(code)
}

fn default_seed(cli_seed: Option<u64>) -> u64 {
    cli_seed.unwrap_or_else(|| {
        std::env::var("WFPROP_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    })
}

fn load_program(path: &Path) -> Result<Program, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_USAGE
    })?;
    wfprop::parse_program(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn parse_props(s: &str) -> Result<Propagators, u8> {
    Propagators::parse(s).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

/// Split a comma list, keeping commas inside braces or parens together.
fn split_assumptions(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '{' | '(' => {
                depth += 1;
                cur.push(c);
            }
            '}' | ')' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur = String::new();
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out.retain(|p| !p.is_empty());
    out
}

/// `t:atom`, `f:atom`, or `t:{a, not b}` for bodies by literal content.
fn parse_assumptions(program: &Program, s: &str) -> Result<Vec<Literal>, u8> {
    let mut out = Vec::new();
    for part in split_assumptions(s) {
        let fail = |msg: String| {
            eprintln!("error: assumption '{part}': {msg}");
            EXIT_USAGE
        };
        let (sign, rest) = match part.split_once(':') {
            Some(("t", rest)) => (true, rest.trim()),
            Some(("f", rest)) => (false, rest.trim()),
            _ => return Err(fail("expected t:<ref> or f:<ref>".into())),
        };
        let var = if let Some(inner) = rest.strip_prefix('{') {
            let inner = inner
                .strip_suffix('}')
                .ok_or_else(|| fail("unterminated body reference".into()))?;
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for lit in inner.split(',').map(str::trim).filter(|l| !l.is_empty()) {
                if let Some(name) = lit.strip_prefix("not ") {
                    let atom = program
                        .find_atom(name.trim())
                        .ok_or_else(|| fail(format!("unknown atom '{}'", name.trim())))?;
                    neg.push(atom);
                } else {
                    let atom = program
                        .find_atom(lit)
                        .ok_or_else(|| fail(format!("unknown atom '{lit}'")))?;
                    pos.push(atom);
                }
            }
            let body = program
                .find_body(&pos, &neg)
                .ok_or_else(|| fail("no body with these literals".into()))?;
            Var::Body(body)
        } else {
            let atom = program
                .find_atom(rest)
                .ok_or_else(|| fail(format!("unknown atom '{rest}'")))?;
            Var::Atom(atom)
        };
        out.push(Literal {
            var,
            positive: sign,
        });
    }
    Ok(out)
}

fn cmd_parse(file: &Path) -> u8 {
    let program = match load_program(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    print!("{program}");
    println!(
        "% atoms={} bodies={} rules={} sccs={} class={}",
        program.n_atoms(),
        program.n_bodies(),
        program.rules().len(),
        program
            .scc_atom_groups()
            .iter()
            .filter(|g| !g.is_empty())
            .count(),
        program.class()
    );
    EXIT_OK
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    file: &Path,
    props: &str,
    enum_limit: Option<usize>,
    time_limit_ms: Option<u64>,
    heuristic: &str,
    seed: Option<u64>,
    assume: Option<&str>,
    json: bool,
) -> u8 {
    let program = match load_program(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let props = match parse_props(props) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let heuristic = match heuristic {
        "lowest" => Heuristic::LowestIndexTrueFirst,
        "random" => Heuristic::SeededRandom,
        other => {
            eprintln!("error: unknown heuristic '{other}' (expected lowest or random)");
            return EXIT_USAGE;
        }
    };
    let assumptions = match assume {
        Some(s) => match parse_assumptions(&program, s) {
            Ok(a) => a,
            Err(code) => return code,
        },
        None => Vec::new(),
    };
    let config = SolverConfig {
        props,
        heuristic,
        enum_limit,
        time_budget: time_limit_ms.map(Duration::from_millis),
        seed: default_seed(seed),
    };
    let result = solver::solve(&program, &config, &assumptions);
    let names = result.answer_set_names(&program);
    if json {
        let record = serde_json::json!({
            "instance": file.display().to_string(),
            "props": props.names(),
            "answer_sets": names,
            "branches": result.stats.branches,
            "conflicts": result.stats.conflicts,
            "time_ms": result.stats.time_ms,
            "inferences": result.stats.inferences,
            "complete": result.complete,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&record).expect("serializable record")
        );
    } else {
        for (i, set) in names.iter().enumerate() {
            println!("answer {}: {}", i + 1, set.join(" "));
        }
        if names.is_empty() {
            println!("unsatisfiable");
        }
        println!(
            "stats: branches={} conflicts={} time_ms={} up={} fl={} dom={} blprobe={} answer_sets={}{}",
            result.stats.branches,
            result.stats.conflicts,
            result.stats.time_ms,
            result.stats.inferences.up,
            result.stats.inferences.fl,
            result.stats.inferences.dom,
            result.stats.inferences.blprobe,
            result.stats.answer_sets_found,
            if result.complete { "" } else { " (incomplete)" },
        );
    }
    if !result.complete && result.answer_sets.is_empty() {
        EXIT_GUARD
    } else if result.answer_sets.is_empty() {
        EXIT_UNSAT
    } else {
        EXIT_OK
    }
}

fn cmd_propagate(file: &Path, props: &str, assume: Option<&str>, explain: bool) -> u8 {
    let program = match load_program(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let props = match parse_props(props) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let assumptions = match assume {
        Some(s) => match parse_assumptions(&program, s) {
            Ok(a) => a,
            Err(code) => return code,
        },
        None => Vec::new(),
    };
    match solver::root_fixpoint(&program, props, &assumptions) {
        Ok(eng) => {
            for line in eng.trail_lines(explain) {
                println!("{line}");
            }
            EXIT_OK
        }
        Err((eng, conflict)) => {
            for line in eng.trail_lines(explain) {
                println!("{line}");
            }
            println!("{}", eng.conflict_display(&conflict));
            EXIT_UNSAT
        }
    }
}

fn cmd_check_dc(file: &Path, props: &str, json: bool) -> u8 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return EXIT_USAGE;
        }
    };
    let inst = match ReachInstance::parse(&text) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return EXIT_USAGE;
        }
    };
    let props = match parse_props(props) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match reach::check_domain_consistency(&inst, props) {
        Ok(report) => {
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable report")
                );
            } else {
                println!(
                    "config: {}  completions: {}",
                    report.props.join(","),
                    report.completions
                );
                if report.root_conflict {
                    println!(
                        "root conflict ({})",
                        if report.unsound_conflict {
                            "UNSOUND: completions exist"
                        } else {
                            "consistent: no completions"
                        }
                    );
                }
                for e in &report.entries {
                    println!(
                        "{} {} -> {:?}",
                        e.var,
                        if e.value_in { "in" } else { "out" },
                        e.verdict
                    );
                }
                println!(
                    "summary: consistent={} missed_pruning={} unsound_pruning={} domain_consistent={}",
                    report.consistent,
                    report.missed_pruning,
                    report.unsound_pruning,
                    report.domain_consistent()
                );
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_GUARD
        }
    }
}

enum BenchInput {
    Program(String, Program),
    Instance(String, ReachInstance),
}

#[derive(serde::Serialize, Clone)]
struct BenchRow {
    instance: String,
    props: String,
    answer_sets: usize,
    branches: u64,
    conflicts: u64,
    time_ms: u128,
    complete: bool,
    timed_out: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    dir: Option<&Path>,
    configs: &str,
    gen_reach: Option<usize>,
    gen_nodes: usize,
    gen_mode: &str,
    enum_limit: Option<usize>,
    seed: Option<u64>,
    time_limit_ms: Option<u64>,
    jobs: usize,
    json: bool,
) -> u8 {
    let mut parsed_configs = Vec::new();
    for part in configs.split(';').filter(|p| !p.trim().is_empty()) {
        match parse_props(part.trim()) {
            Ok(p) => parsed_configs.push(p),
            Err(code) => return code,
        }
    }
    if parsed_configs.is_empty() {
        eprintln!("error: no configurations given");
        return EXIT_USAGE;
    }

    let seed = default_seed(seed);
    let mut inputs: Vec<BenchInput> = Vec::new();
    if let Some(n) = gen_reach {
        if gen_mode == "chain" {
            for i in 0..n {
                let s = seed.wrapping_add(i as u64);
                let cycles = 2 + (i % 4);
                let decoys = i % 3;
                let inst = reach::gateway_chain_instance(cycles, decoys, s);
                inputs.push(BenchInput::Instance(format!("chain-{i:03}"), inst));
            }
        } else {
            let mode = match gen_mode {
                "gs" => FixMode::GraphStart,
                "n" => FixMode::Reached,
                "none" => FixMode::None,
                other => {
                    eprintln!("error: unknown gen mode '{other}' (expected gs, n, none, chain)");
                    return EXIT_USAGE;
                }
            };
            for i in 0..n {
                let inst =
                    reach::random_instance(seed.wrapping_add(i as u64), gen_nodes, 0.45, 0.6, mode);
                inputs.push(BenchInput::Instance(format!("gen-{i:03}"), inst));
            }
        }
    } else if let Some(dir) = dir {
        let mut entries: Vec<PathBuf> = match std::fs::read_dir(dir) {
            Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).collect(),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", dir.display());
                return EXIT_USAGE;
            }
        };
        entries.sort();
        for path in entries {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            match path.extension().and_then(|e| e.to_str()) {
                Some("lp") => match load_program(&path) {
                    Ok(p) => inputs.push(BenchInput::Program(name, p)),
                    Err(code) => return code,
                },
                Some("reach") => {
                    let text = match std::fs::read_to_string(&path) {
                        Ok(t) => t,
                        Err(e) => {
                            eprintln!("error: cannot read {}: {e}", path.display());
                            return EXIT_USAGE;
                        }
                    };
                    match ReachInstance::parse(&text) {
                        Ok(i) => inputs.push(BenchInput::Instance(name, i)),
                        Err(e) => {
                            eprintln!("error: {}: {e}", path.display());
                            return EXIT_USAGE;
                        }
                    }
                }
                _ => {}
            }
        }
    } else {
        eprintln!("error: bench needs a directory or --gen-reach");
        return EXIT_USAGE;
    }
    if inputs.is_empty() {
        eprintln!("error: no .lp or .reach inputs found");
        return EXIT_USAGE;
    }

    let run_one = |input: &BenchInput, props: Propagators| -> BenchRow {
        let config = SolverConfig {
            props,
            heuristic: Heuristic::LowestIndexTrueFirst,
            enum_limit,
            time_budget: time_limit_ms.map(Duration::from_millis),
            seed,
        };
        let (name, result) = match input {
            BenchInput::Program(name, p) => (name.clone(), solver::solve(p, &config, &[])),
            BenchInput::Instance(name, inst) => {
                let enc = reach::encode_reach(inst);
                (
                    name.clone(),
                    solver::solve(&enc.program, &config, &enc.assumptions),
                )
            }
        };
        BenchRow {
            instance: name,
            props: props.names().join(","),
            answer_sets: result.answer_sets.len(),
            branches: result.stats.branches,
            conflicts: result.stats.conflicts,
            time_ms: result.stats.time_ms,
            complete: result.complete,
            timed_out: result.timed_out,
        }
    };

    let mut tasks: Vec<(usize, Propagators)> = Vec::new();
    for i in 0..inputs.len() {
        for &c in &parsed_configs {
            tasks.push((i, c));
        }
    }
    let jobs = jobs.max(1);
    let rows: Vec<BenchRow> = if jobs == 1 {
        tasks.iter().map(|&(i, c)| run_one(&inputs[i], c)).collect()
    } else {
        // Workers take interleaved task slices; rows are re-ordered by task
        // index afterwards so the output matches a sequential run exactly.
        let indexed: Vec<(usize, usize, Propagators)> = tasks
            .iter()
            .enumerate()
            .map(|(k, &(i, c))| (k, i, c))
            .collect();
        let chunks: Vec<Vec<(usize, usize, Propagators)>> = indexed
            .chunks(indexed.len().div_ceil(jobs))
            .map(<[_]>::to_vec)
            .collect();
        let mut results: Vec<(usize, BenchRow)> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    scope.spawn(|| {
                        chunk
                            .iter()
                            .map(|&(k, i, c)| (k, run_one(&inputs[i], c)))
                            .collect::<Vec<(usize, BenchRow)>>()
                    })
                })
                .collect();
            for h in handles {
                results.extend(h.join().expect("bench worker panicked"));
            }
        });
        results.sort_by_key(|&(k, _)| k);
        results.into_iter().map(|(_, row)| row).collect()
    };

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rows).expect("serializable rows")
        );
        return EXIT_OK;
    }
    println!(
        "{:<12} {:<18} {:>6} {:>9} {:>9} {:>9}",
        "instance", "config", "#sets", "time_ms", "#B", "#C"
    );
    for row in &rows {
        println!(
            "{:<12} {:<18} {:>6} {:>9} {:>9} {:>9}{}",
            row.instance,
            row.props,
            row.answer_sets,
            row.time_ms,
            row.branches,
            row.conflicts,
            if row.timed_out { " *timeout" } else { "" }
        );
    }
    println!("---");
    for &c in &parsed_configs {
        let name = c.names().join(",");
        let sel: Vec<&BenchRow> = rows.iter().filter(|r| r.props == name).collect();
        let solved = sel.iter().filter(|r| !r.timed_out).count();
        let time: u128 = sel.iter().map(|r| r.time_ms).sum();
        let branches: u64 = sel.iter().map(|r| r.branches).sum();
        let conflicts: u64 = sel.iter().map(|r| r.conflicts).sum();
        println!(
            "aggregate {name}: #S={solved}/{} time_ms={time} #B={branches} #C={conflicts}",
            sel.len()
        );
    }
    println!(
        "note: #B/#C are chronological-search counts; they are not comparable to learning solvers."
    );
    EXIT_OK
}

fn cmd_verify(seed: Option<u64>, count: usize) -> u8 {
    let seed = default_seed(seed);
    let reports = verify::run_all(seed, count);
    let mut failed = false;
    for report in &reports {
        println!(
            "suite {:<28} cases {:>5}  {}",
            report.suite,
            report.cases,
            if report.passed() { "ok" } else { "FAILED" }
        );
        if !report.passed() {
            failed = true;
            for v in report.violations.iter().take(3) {
                println!("  violation (seed {}): {}", v.case_seed, v.message);
                for line in v.reproducer.lines() {
                    println!("    {line}");
                }
            }
        }
    }
    if failed {
        EXIT_USAGE
    } else {
        EXIT_OK
    }
}

fn cmd_dump(file: &Path, assume: Option<&str>, no_domtree: bool) -> u8 {
    let program = match load_program(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let assumptions = match assume {
        Some(s) => match parse_assumptions(&program, s) {
            Ok(a) => a,
            Err(code) => return code,
        },
        None => Vec::new(),
    };
    let mut trail = wfprop::Assignment::new(&program);
    for lit in assumptions {
        trail.assign(lit, wfprop::Reason::Assumption);
    }
    let graph = SupportFlowgraph::build(&program, &trail);
    let tree;
    let overlay = if no_domtree {
        None
    } else {
        tree = dominators::compute_dominators(&graph);
        Some(&tree)
    };
    print!("{}", graph.to_dot(&program, overlay));
    EXIT_OK
}
