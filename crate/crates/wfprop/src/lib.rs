//! Propagation engine and backtracking answer-set solver for ground normal
//! logic programs, built around support-flowgraph dominators for
//! justification-style inference, with brute-force oracles and a reachability
//! domain-consistency checker.
//!
//! ```
//! use wfprop::engine::Propagators;
//! use wfprop::solver::{self, SolverConfig};
//!
//! let program = wfprop::parse_program(
//!     "a :- not b. b :- not a. c :- d. d :- c. c :- a.",
//! )?;
//! let config = SolverConfig {
//!     props: Propagators::up_fl_dom(),
//!     ..Default::default()
//! };
//! let result = solver::solve(&program, &config, &[]);
//! let names = result.answer_set_names(&program);
//! assert_eq!(names, vec![vec!["a", "c", "d"], vec!["b"]]);
//! # Ok::<(), wfprop::ParseError>(())
//! ```

pub mod assignment;
pub mod dominators;
pub mod engine;
pub mod flowgraph;
pub mod nogoods;
pub mod oracle;
pub mod parse;
pub mod program;
pub mod reach;
pub mod solver;
pub mod unfounded;
pub mod verify;

pub use assignment::{Assignment, Literal, Reason, Var};
pub use parse::{parse_program, ParseError};
pub use program::{Atom, AtomId, Body, BodyId, GraphNode, Program, ProgramClass, Rule};
