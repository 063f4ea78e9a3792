//! Parametric worst-case execution time certification for dual active-set QP
//! solvers, with an MPC front end.
//!
//! Pipeline: condense an MPC problem into a multi-parametric QP (`mpc`),
//! solve instances with a trace-instrumented dual active-set method
//! (`solver`), enumerate parameter regions with their exact working-set
//! sequences (`cert`), and bound execution time under a deterministic cycle
//! cost model (`wcet`).

pub mod cert;
pub mod geometry;
pub mod io;
pub mod mpc;
pub mod mpqp;
pub mod poly;
pub mod rng;
pub mod solver;
pub mod wcet;
