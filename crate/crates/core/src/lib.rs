//! Rank and left-null-space structure of random r-out s-uniform hypergraph
//! incidence matrices over GF(2) and prime fields, with the limiting theory
//! they are compared against.

pub mod analyzer;
pub mod error;
pub mod fixture;
pub mod gf2;
pub mod gfp;
pub mod harness;
pub mod model;
pub mod theory;
pub mod unionfind;

pub use error::{Error, Result};
pub use gf2::{combine_codewords, gf2_rank, gf2_rank_nullspace, BitMatrix, BitVec, NullSpaceBasis};
pub use gfp::{gfp_rank, gfp_rank_nullspace, PrimeFieldMatrix};
pub use model::{
    derive_seed, functional_graph_components, sample, sample_gf2, sample_gft, Field, GftModel,
    MatrixData, ModelConfig, Replacement, SampledMatrix,
};
