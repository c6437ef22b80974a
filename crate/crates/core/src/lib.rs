//! SACC: code classification with a Transformer whose self-attention is
//! restricted to a union of sparse patterns, one of them derived from the
//! program's syntax tree.

pub mod cfront;
pub mod corpus;
pub mod treesplit;
pub mod tensor;
pub mod encoder;
pub mod attention;
pub mod model;
pub mod train;
pub mod bench;
