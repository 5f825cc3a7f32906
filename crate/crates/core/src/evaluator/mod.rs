//! COCO-style detection evaluation: greedy score-ordered matching, 101-point
//! interpolated AP over an IOU sweep, area ranges and per-image detection caps.

mod config;
mod curve;
mod engine;
mod matching;

pub use config::{linspace, AreaRange, EvalConfig, IouKernel};
pub use curve::{average_precision, average_recall, mean_defined, PrCurve};
pub use engine::{evaluate, ClassMetrics, EvalSummary, Evaluation, Metrics, PrPoint};
pub use matching::{match_greedy, IouMatrix, MatchResult, MatchTarget};

pub(crate) use engine::sorted_by_score;
