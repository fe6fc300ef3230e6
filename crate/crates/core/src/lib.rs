//! Reference-free summary evaluation.
//!
//! Reference-based metrics (BERTScore, ROUGE, MoverScore) are computed with the
//! source document in the reference slot, at token and at sentence level. The
//! [`harness`] module measures how well each metric agrees with human ratings.

pub mod backend;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod lexical;
pub mod score;
pub mod sentence;
pub mod text;
pub mod token_metrics;

pub use backend::{
    Backend, EmbeddingSequence, FixtureBackend, IdfTable, ModelConfig, NliDistribution, NliLabel,
    OnnxBackend,
};
pub use dataset::{load_dataset, Dataset, DatasetFormat, Document, SummaryRecord};
pub use error::{Error, Result};
pub use harness::{
    run_benchmark, summary_level_correlation, Backends, CorrelationReport, MetricKind, MetricRun,
    MetricSpec, Pooling,
};
pub use lexical::{rouge_reffree, RougeVariant};
pub use score::{Component, MetricValue, ScoreTriple};
pub use sentence::{sentence_bertscore, SentenceSimConfig, SimKind, Weighting};
pub use text::{split_sentences, word_tokenize};
pub use token_metrics::{bertscore_reffree, moverscore_greedy, GreedyMatchConfig};
