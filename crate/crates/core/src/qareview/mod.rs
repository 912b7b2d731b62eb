//! Caption quality assessment: sampled caption pairs are split into
//! sentences and information pieces, judged by a reviewer, and summarized as
//! completely accurate, completely inaccurate and partially accurate
//! sentence fractions plus an overall accuracy.

mod demo;
mod sentences;
mod server;
mod session;
mod store;

pub use demo::{demo_session, DEMO_SESSION_ID};
pub use sentences::{sentence_spans, split_sentences};
pub use server::{Reply, ReviewApi, ReviewServer, ShutdownHandle};
pub use session::{
    accuracy_report, overall_accuracy, percent_floor, pieces_consistent, sample_pairs, sentence_category, CaptionPair, Exact, Piece, PieceVerdict,
    QaReport, ReviewError, ReviewPair, ReviewSession, Sentence, SentenceCategory, SessionSummary, DEFAULT_SAMPLE_SIZE,
};
pub use store::{valid_session_id, SessionStore, StoreError};
