//! Language identification and LangID-based filtering.

mod eval;
mod filter;
mod model;

pub use eval::{filter_eval, FilterCounts, FilterMetrics, MetricSet};
pub use filter::{filter_corpus, DecisionStatus, FilterDecision, LangIdFilter};
pub use model::{LangIdConfig, LangIdModel, LanguageClassifier, Prediction, MODEL_FORMAT};
