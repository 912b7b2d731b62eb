//! Scoring predictions: answer matching, the two accuracy aggregates, the
//! deceptive-color judge, and numeric, box, polygon and label metrics.

mod judge;
mod metrics;
mod normalize;
mod run;

pub use judge::{deception_reason, rule_declines, Judge, LlmJudge, RuleJudge};
pub use metrics::{acc_eq1, acc_eq2, box_iou, example_f1, label_set, matched_ciou, numbers, ratio, DomainError};
pub use normalize::{canonical, first_color, leading_yes_no, normalize_answer};
pub use run::{
    evaluate_run, gold_predictions, read_predictions, Component, EvalConfig, EvalError, PredictionRecord, ScoreReport, Status, TaskScore, Verdict,
};
