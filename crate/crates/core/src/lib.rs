//! Code clone detection over a global graph of lexical features.
//!
//! Every code sample becomes a node linked to the Java reserved words it
//! uses and to a handful of structural metrics. A spectral embedding of
//! that graph gives each sample a vector; pairs of samples whose vectors
//! are close are reported as clones.
//!
//! The crate needs only `alloc`. File formats, corpus walking and the
//! command line live in the `graphclone` crate.

#![no_std]

extern crate alloc;

pub mod detect;
pub mod embed;
pub mod eval;
pub mod graph;
pub mod lexis;
pub mod linalg;
pub mod rsvd;
pub mod split;

pub use detect::{
    combine_vectors, cosine, detect_all_pairs, overlap_baseline, ClonePair, CombineMode,
    DetectError, IndividualVectors, Scope, SimilarityQuery,
};
pub use embed::{embed, EmbedConfig, EmbedError, EmbeddingMatrix};
pub use eval::{score, CloneType, EvalMetrics, LabeledPair};
pub use graph::{build_global_graph, FeatureSet, GlobalGraph, GraphError, NodeId, WeightTransform};
pub use lexis::{extract_individual_info, tokenize, IndividualInfo, LexError, Metric, TokenStream};
pub use split::{split_methods, MethodSpan};
