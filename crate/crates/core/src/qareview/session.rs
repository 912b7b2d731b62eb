//! Review sessions: sampled caption pairs, sentence and piece verdicts, and
//! the accuracy statistic.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sentences::split_sentences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceVerdict {
    Accurate,
    Inaccurate,
    Unjudged,
}

impl PieceVerdict {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "accurate" => Some(Self::Accurate),
            "inaccurate" => Some(Self::Inaccurate),
            "unjudged" => Some(Self::Unjudged),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SentenceCategory {
    #[serde(rename = "CA")]
    CompletelyAccurate,
    #[serde(rename = "CI")]
    CompletelyInaccurate,
    #[serde(rename = "PA")]
    PartiallyAccurate,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReviewError {
    #[error("sentence has unjudged pieces")]
    Incomplete,
    #[error("no pair {0}")]
    NoPair(usize),
    #[error("no sentence {1} in pair {0}")]
    NoSentence(usize, usize),
    #[error("no piece {2} in pair {0} sentence {1}")]
    NoPiece(usize, usize, usize),
    #[error("split offset {0} must fall strictly inside the piece on a character boundary")]
    BadSplit(usize),
    #[error("piece {0} has no right neighbour to merge with")]
    NothingToMerge(usize),
    #[error("cannot sample {n} pairs from {size}")]
    TooFew { n: usize, size: usize },
}

/// Sentence category from its piece verdicts.
pub fn sentence_category(verdicts: &[PieceVerdict]) -> Result<SentenceCategory, ReviewError> {
    if verdicts.is_empty() || verdicts.contains(&PieceVerdict::Unjudged) {
        return Err(ReviewError::Incomplete);
    }
    let accurate = verdicts.iter().filter(|v| **v == PieceVerdict::Accurate).count();
    Ok(if accurate == verdicts.len() {
        SentenceCategory::CompletelyAccurate
    } else if accurate == 0 {
        SentenceCategory::CompletelyInaccurate
    } else {
        SentenceCategory::PartiallyAccurate
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub text: String,
    pub verdict: PieceVerdict,
}

/// Pieces are contiguous substrings; their concatenation is the sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub pieces: Vec<Piece>,
}

impl Sentence {
    pub fn new(text: String) -> Self {
        Self {
            pieces: vec![Piece {
                text: text.clone(),
                verdict: PieceVerdict::Unjudged,
            }],
            text,
        }
    }

    pub fn verdicts(&self) -> Vec<PieceVerdict> {
        self.pieces.iter().map(|p| p.verdict).collect()
    }

    pub fn category(&self) -> Option<SentenceCategory> {
        sentence_category(&self.verdicts()).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionPair {
    #[serde(alias = "image_id")]
    pub image: String,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewPair {
    pub image: String,
    pub caption: String,
    pub sentences: Vec<Sentence>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSession {
    pub session_id: String,
    pub revision: u64,
    pub pairs: Vec<ReviewPair>,
}

/// Uniform sample of `n` items without replacement, in sampled order.
pub fn sample_pairs<T: Clone>(dataset: &[T], n: usize, seed: u64) -> Result<Vec<T>, ReviewError> {
    if n > dataset.len() {
        return Err(ReviewError::TooFew { n, size: dataset.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, dataset.len(), n).into_iter().map(|i| dataset[i].clone()).collect())
}

pub const DEFAULT_SAMPLE_SIZE: usize = 315;

impl ReviewSession {
    pub fn new(session_id: impl Into<String>, pairs: &[CaptionPair]) -> Self {
        Self {
            session_id: session_id.into(),
            revision: 0,
            pairs: pairs
                .iter()
                .map(|p| ReviewPair {
                    image: p.image.clone(),
                    caption: p.caption.clone(),
                    sentences: split_sentences(&p.caption).into_iter().map(Sentence::new).collect(),
                    note: String::new(),
                })
                .collect(),
        }
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().flat_map(|p| &p.sentences)
    }

    pub fn is_complete(&self) -> bool {
        self.sentences().all(|s| s.category().is_some())
    }

    fn sentence_mut(&mut self, pair: usize, sentence: usize) -> Result<&mut Sentence, ReviewError> {
        self.pairs
            .get_mut(pair)
            .ok_or(ReviewError::NoPair(pair))?
            .sentences
            .get_mut(sentence)
            .ok_or(ReviewError::NoSentence(pair, sentence))
    }

    /// Sets one verdict. The session is untouched on error.
    pub fn record_verdict(&mut self, pair: usize, sentence: usize, piece: usize, verdict: PieceVerdict) -> Result<(), ReviewError> {
        let s = self.sentence_mut(pair, sentence)?;
        s.pieces.get_mut(piece).ok_or(ReviewError::NoPiece(pair, sentence, piece))?.verdict = verdict;
        self.revision += 1;
        Ok(())
    }

    /// Splits a piece at byte `offset` into two unjudged pieces.
    pub fn split_piece(&mut self, pair: usize, sentence: usize, piece: usize, offset: usize) -> Result<(), ReviewError> {
        let s = self.sentence_mut(pair, sentence)?;
        let p = s.pieces.get(piece).ok_or(ReviewError::NoPiece(pair, sentence, piece))?;
        if offset == 0 || offset >= p.text.len() || !p.text.is_char_boundary(offset) {
            return Err(ReviewError::BadSplit(offset));
        }
        let (left, right) = p.text.split_at(offset);
        if left.trim().is_empty() || right.trim().is_empty() {
            return Err(ReviewError::BadSplit(offset));
        }
        let (left, right) = (left.to_string(), right.to_string());
        s.pieces.splice(
            piece..=piece,
            [
                Piece {
                    text: left,
                    verdict: PieceVerdict::Unjudged,
                },
                Piece {
                    text: right,
                    verdict: PieceVerdict::Unjudged,
                },
            ],
        );
        self.revision += 1;
        Ok(())
    }

    /// Joins a piece with its right neighbour. Matching verdicts carry over;
    /// otherwise the merged piece is unjudged.
    pub fn merge_pieces(&mut self, pair: usize, sentence: usize, piece: usize) -> Result<(), ReviewError> {
        let s = self.sentence_mut(pair, sentence)?;
        if piece >= s.pieces.len() {
            return Err(ReviewError::NoPiece(pair, sentence, piece));
        }
        if piece + 1 >= s.pieces.len() {
            return Err(ReviewError::NothingToMerge(piece));
        }
        let right = s.pieces.remove(piece + 1);
        let left = &mut s.pieces[piece];
        left.text.push_str(&right.text);
        if left.verdict != right.verdict {
            left.verdict = PieceVerdict::Unjudged;
        }
        self.revision += 1;
        Ok(())
    }

    pub fn set_note(&mut self, pair: usize, note: String) -> Result<(), ReviewError> {
        self.pairs.get_mut(pair).ok_or(ReviewError::NoPair(pair))?.note = note;
        self.revision += 1;
        Ok(())
    }

    pub fn summary(&self) -> SessionSummary {
        let total = self.sentences().count();
        let judged = self.sentences().filter(|s| s.category().is_some()).count();
        SessionSummary {
            session_id: self.session_id.clone(),
            revision: self.revision,
            pairs: self.pairs.len(),
            sentences: total,
            judged_sentences: judged,
            complete: judged == total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub revision: u64,
    pub pairs: usize,
    pub sentences: usize,
    pub judged_sentences: usize,
    pub complete: bool,
}

pub type Exact = Ratio<i64>;

/// Sentence-category tallies and the overall accuracy
/// `CA/N + (PA/N) * p`, with `p` pooled over the pieces of PA sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub total_sentences: usize,
    pub judged_sentences: usize,
    /// Some sentences are still unjudged; figures cover judged ones only.
    pub partial: bool,
    pub ca: usize,
    pub ci: usize,
    pub pa: usize,
    pub pa_pieces: usize,
    pub pa_accurate_pieces: usize,
    pub ca_fraction: Option<f64>,
    pub ci_fraction: Option<f64>,
    pub pa_fraction: Option<f64>,
    pub piece_accuracy: Option<f64>,
    pub overall: Option<f64>,
    /// `overall` as an exact fraction, e.g. "1647/2000".
    pub overall_exact: Option<String>,
    /// Percent with two decimals, e.g. "82.35%".
    pub percent: Option<String>,
    /// One decimal, truncated: "82.3%".
    pub display: Option<String>,
}

fn to_f64(r: Exact) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Truncated percent with `decimals` digits, computed exactly.
pub fn percent_floor(r: Exact, decimals: u32) -> String {
    let scale = 10i64.pow(decimals);
    let v = (r * Exact::from_integer(100 * scale)).floor().to_integer();
    if decimals == 0 {
        format!("{v}%")
    } else {
        format!("{}.{:0width$}%", v / scale, v % scale, width = decimals as usize)
    }
}

/// Exact overall accuracy from tallies.
pub fn overall_accuracy(ca: usize, ci: usize, pa: usize, pa_accurate_pieces: usize, pa_pieces: usize) -> Option<Exact> {
    let n = (ca + ci + pa) as i64;
    if n == 0 {
        return None;
    }
    let ca_frac = Exact::new(ca as i64, n);
    if pa == 0 {
        return Some(ca_frac);
    }
    let p = Exact::new(pa_accurate_pieces as i64, pa_pieces as i64);
    Some(ca_frac + Exact::new(pa as i64, n) * p)
}

pub fn accuracy_report(session: &ReviewSession) -> QaReport {
    let (mut ca, mut ci, mut pa, mut pieces, mut acc_pieces, mut total) = (0, 0, 0, 0, 0, 0);
    for s in session.sentences() {
        total += 1;
        match s.category() {
            Some(SentenceCategory::CompletelyAccurate) => ca += 1,
            Some(SentenceCategory::CompletelyInaccurate) => ci += 1,
            Some(SentenceCategory::PartiallyAccurate) => {
                pa += 1;
                pieces += s.pieces.len();
                acc_pieces += s.pieces.iter().filter(|p| p.verdict == PieceVerdict::Accurate).count();
            }
            None => {}
        }
    }
    let judged = ca + ci + pa;
    let frac = |k: usize| (judged > 0).then(|| to_f64(Exact::new(k as i64, judged as i64)));
    let overall = overall_accuracy(ca, ci, pa, acc_pieces, pieces);
    QaReport {
        total_sentences: total,
        judged_sentences: judged,
        partial: judged < total,
        ca,
        ci,
        pa,
        pa_pieces: pieces,
        pa_accurate_pieces: acc_pieces,
        ca_fraction: frac(ca),
        ci_fraction: frac(ci),
        pa_fraction: frac(pa),
        piece_accuracy: (pieces > 0).then(|| to_f64(Exact::new(acc_pieces as i64, pieces as i64))),
        overall: overall.map(to_f64),
        overall_exact: overall.map(|r| format!("{}/{}", r.numer(), r.denom())),
        percent: overall.map(|r| percent_floor(r, 2)),
        display: overall.map(|r| percent_floor(r, 1)),
    }
}

impl QaReport {
    pub fn table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        let mut s = format!(
            "sentences {} (judged {}{})\nCA {}  CI {}  PA {}\nfractions CA {}  CI {}  PA {}\npiece accuracy in PA {} ({}/{})\n",
            self.total_sentences,
            self.judged_sentences,
            if self.partial { ", partial" } else { "" },
            self.ca,
            self.ci,
            self.pa,
            opt(self.ca_fraction),
            opt(self.ci_fraction),
            opt(self.pa_fraction),
            opt(self.piece_accuracy),
            self.pa_accurate_pieces,
            self.pa_pieces,
        );
        match (&self.overall, &self.percent, &self.display) {
            (Some(v), Some(p), Some(d)) => s.push_str(&format!("overall accuracy {v:.4} ({p}), displayed {d}\n")),
            _ => s.push_str("overall accuracy undefined: no judged sentences\n"),
        }
        s
    }
}

/// Checks that the pieces of every sentence still concatenate to it.
pub fn pieces_consistent(session: &ReviewSession) -> bool {
    session.sentences().all(|s| s.pieces.iter().map(|p| p.text.as_str()).collect::<String>() == s.text)
}
