//! Mining small pattern sets that describe how two labeled groups of
//! transactions differ.
//!
//! A [`LabeledDatabase`] holds transactions of items, each labeled `l⁻` or
//! `l⁺`. [`mine`] greedily builds a model of patterns, each a conjunction of
//! exclusive-or clauses, that shortens the two-part codelength of the data
//! the most. A one-sided Fisher exact test keeps label-neutral patterns out.
//!
//! ```
//! use labeldesc::{mine, Label, LabeledDatabase, SearchConfig};
//!
//! let rows = (0..20).map(|t| {
//!     let label = if t < 10 { Label::Neg } else { Label::Pos };
//!     (label, if t < 10 { vec!["y"] } else { vec!["x", "y"] })
//! });
//! let db = LabeledDatabase::from_token_rows(rows).unwrap();
//! let (model, _) = mine(&db, &SearchConfig::default(), None).unwrap();
//! assert_eq!(model.len(), 1);
//! ```

// comparisons are negated on purpose so that NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod candidates;
pub mod codelen;
pub mod data;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod search;
pub mod stats;
pub mod synth;
pub mod tidset;

pub use candidates::SearchConfig;
pub use data::{Clause, Conjunction, ItemId, Label, LabeledDatabase, Pattern};
pub use error::{Error, Result};
pub use model::Model;
pub use search::{mine, SearchTrace};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub struct Intro;
    #[doc = include_str!("../../../book/src/data.md")]
    pub struct Data;
    #[doc = include_str!("../../../book/src/codelengths.md")]
    pub struct Codelengths;
    #[doc = include_str!("../../../book/src/search.md")]
    pub struct Search;
    #[doc = include_str!("../../../book/src/significance.md")]
    pub struct Significance;
    #[doc = include_str!("../../../book/src/xor.md")]
    pub struct Xor;
    #[doc = include_str!("../../../book/src/synthetic.md")]
    pub struct Synthetic;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
