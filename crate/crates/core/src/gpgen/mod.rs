//! Proxy function generation: typed expression trees over a fixed primitive
//! catalog, evolved so that their landscape feature distributions match a
//! target problem's.
//!
//! The pieces: [`primitives`] defines what trees are made of, [`tree`] the
//! structure, text form, and random generation, [`compile`] the stack
//! evaluator, and [`evolve`] the generational search plus its fitness.

pub mod compile;
pub mod evolve;
pub mod primitives;
pub mod tree;

pub use compile::{compile_and_evaluate, CompiledProgram};
pub use evolve::{
    evolve, proxy_fitness, EvolveReport, FitnessEnv, GpParams, ProxyCandidate, CONSTANT_RANGE,
    PENALTY,
};
pub use primitives::{Agg, Op1, Op2, PrimitiveInfo, Ty, PRIMITIVES};
pub use tree::{init_half_and_half, ExpressionTree, Node, CONST_RANGE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("no valid candidate in any generation")]
    NoValidCandidate,
    #[error("malformed expression: {0}")]
    Parse(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Ela(#[from] crate::ela::ElaError),
}
