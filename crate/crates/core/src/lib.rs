//! A query-model laboratory for testing unateness of Boolean functions.
//!
//! The crate provides the hypercube algebra with a placeholder variable,
//! query-counting oracles, the edge-search primitives (path binary search and
//! adaptive edge search), persistence preprocessing, high-influence edge
//! harvesting, the top-level one-sided tester, brute-force ground-truth
//! oracles, and a seeded experiment harness.

pub mod error;
pub mod exact;
pub mod harness;
pub mod hypercube;
pub mod oracle;
pub mod persistence;
pub mod revealing;
pub mod search;
pub mod tester;
mod util;

pub use error::{Error, Result};
pub use hypercube::{path_point, Edge, Ordering, Point, VarSet};
pub use oracle::{
    classify_edge, make_oracle, verify_certificate, EdgeClass, EdgeFinding, Family,
    FunctionSpec, OracleHandle, Orientation, ViolationCertificate,
};
