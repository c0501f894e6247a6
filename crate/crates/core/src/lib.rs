//! Drug entity extraction from death-certificate cause-of-death text.
//!
//! The crate covers the whole surveillance pipeline: tokenization,
//! BILOU span coding, inter-annotator agreement, the lookup-table
//! baseline, a linear-chain CRF tagger, exact-span scoring, dictionary
//! enrichment and a seeded synthetic corpus generator.

pub mod agreement;
pub mod bilou;
pub mod cli;
pub mod conll;
pub mod corpus;
pub mod crf;
pub mod enrichment;
pub mod error;
pub mod evaluator;
pub mod io;
pub mod lookup;
pub mod num;
pub mod pipeline;
pub mod synth;
pub mod tokenizer;

pub use bilou::{EntitySpan, Span, Tag, TaggedSequence};
pub use corpus::{Record, SplitSpec};
pub use error::{Error, Result};
pub use lookup::LookupTable;
pub use tokenizer::Token;
pub use num::Scalar;

/// Double-precision CRF.
pub type Crf64 = crf::CrfModel<f64>;
/// Single-precision CRF.
pub type Crf32 = crf::CrfModel<f32>;
