//! Placement of functional blocks onto a typed FPGA grid, cast as an
//! unbalanced quadratic assignment problem and solved by cyclic expansion:
//! a sequence of small QUBO problems, each choosing which of a sampled set of
//! disjoint 2-cycles to apply to the current sub-permutation.
//!
//! Module map:
//!
//! * [`qap`]: flow/distance matrices, sub-permutations and the cost function.
//! * [`cycles`]: 2-cycles, disjoint cycle sets, selection and sampling.
//! * [`qubo`]: QUBO builders (penalty formulation, sub-problem, cycle selection)
//!   and the JSON exchange format.
//! * [`solvers`]: exhaustive, simulated annealing and external-process backends.
//! * [`expansion`]: the outer/inner cyclic expansion loop.
//! * [`fpga`]: typed grid architectures, netlists and instance generation.

pub mod cycles;
pub mod error;
pub mod expansion;
pub mod fpga;
pub mod qap;
pub mod qubo;
pub mod solvers;

pub use error::{Error, Result};
