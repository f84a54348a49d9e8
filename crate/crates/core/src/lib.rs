//! Computational laboratory for reduced graph products of finite-dimensional
//! operator algebras: word combinatorics in right-angled Coxeter groups,
//! lazy sparse Fock-space operators, closed covering-walk families, and the
//! numeric certification of the walk-based isometry and state-absorption
//! operators they generate.

pub mod algebra;
pub mod coxeter;
pub mod fock;
pub mod graph;
pub mod harness;
pub mod oracle;

pub use algebra::{AlgebraError, CMat, CVec, VertexAlgebra, C64};
pub use coxeter::{Coxeter, CoxeterError, GroupElement, Side};
pub use fock::{FockContext, FockError, FockIndex, FockVector, OperatorExpression};
pub use graph::{GraphError, SimplicialGraph, VertexId, Walk, WalkError};
