//! Absent-category sampling: random, popular and adversarial.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::CoOccurrenceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Popular,
    Adversarial,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::Popular, Strategy::Adversarial];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Popular => "popular",
            Strategy::Adversarial => "adversarial",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why an image produced no sample for a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoAbsentCategory,
    NoAbsentPopularCategory,
    ColorInconsistent,
    CoLocated,
    /// The image does not meet the stream's precondition.
    Ineligible,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkipReason::NoAbsentCategory => "no absent category",
            SkipReason::NoAbsentPopularCategory => "no absent popular category",
            SkipReason::ColorInconsistent => "color answers disagree",
            SkipReason::CoLocated => "objects share a centroid",
            SkipReason::Ineligible => "precondition not met",
        })
    }
}

/// Corpus statistics the samplers need, computed once per build.
#[derive(Debug, Clone)]
pub struct NegativeContext {
    pub cooccur: CoOccurrenceMatrix,
    pub popular: BTreeSet<String>,
}

impl NegativeContext {
    pub fn new(cooccur: CoOccurrenceMatrix, popular_fraction: f64) -> Self {
        let popular = cooccur.popular(popular_fraction).into_iter().map(str::to_string).collect();
        Self { cooccur, popular }
    }
}

/// Picks a vocabulary category not in `present`.
///
/// Adversarial scores each absent `c` by the sum of `counts[c][p]` over the
/// present categories and takes the maximum, ties to the lexicographically
/// smaller name.
pub fn select_absent_category<R: Rng>(
    present: &BTreeSet<&str>,
    strategy: Strategy,
    ctx: &NegativeContext,
    rng: &mut R,
) -> Result<String, SkipReason> {
    let absent: Vec<&str> = ctx.cooccur.categories().iter().map(String::as_str).filter(|c| !present.contains(c)).collect();
    if absent.is_empty() {
        return Err(SkipReason::NoAbsentCategory);
    }
    match strategy {
        Strategy::Random => Ok(absent[rng.gen_range(0..absent.len())].to_string()),
        Strategy::Popular => {
            let pool: Vec<&str> = absent.into_iter().filter(|c| ctx.popular.contains(*c)).collect();
            if pool.is_empty() {
                return Err(SkipReason::NoAbsentPopularCategory);
            }
            Ok(pool[rng.gen_range(0..pool.len())].to_string())
        }
        Strategy::Adversarial => {
            let m = &ctx.cooccur;
            let present_idx: Vec<usize> = present.iter().filter_map(|p| m.index_of(p)).collect();
            let mut best: Option<(u64, &str)> = None;
            for c in absent {
                let row = &m.counts()[m.index_of(c).expect("vocabulary member")];
                let score: u64 = present_idx.iter().map(|&p| row[p]).sum();
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, c));
                }
            }
            Ok(best.expect("non-empty").1.to_string())
        }
    }
}

/// Smooth weighted round-robin: an interleaved schedule whose prefix counts
/// track the weights as closely as integers allow.
#[derive(Debug, Clone)]
pub struct StrategySchedule {
    weights: [f64; 3],
    current: [f64; 3],
}

impl StrategySchedule {
    pub fn new(weights: [f64; 3]) -> Self {
        Self { weights, current: [0.0; 3] }
    }

    pub fn next_strategy(&mut self) -> Strategy {
        let total: f64 = self.weights.iter().sum();
        for (c, w) in self.current.iter_mut().zip(self.weights) {
            *c += w;
        }
        let mut best = 0;
        for i in 1..3 {
            if self.current[i] > self.current[best] + 1e-12 {
                best = i;
            }
        }
        self.current[best] -= total;
        Strategy::ALL[best]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_cooccurrence, AnnotatedImage, ImageMeta, ObjectInstance};
    use crate::geometry::Polygon;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn image(id: &str, cats: &[&str]) -> AnnotatedImage {
        let sq = Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap();
        ImageMeta::new(id, 10, 10).into_image(
            cats.iter()
                .map(|c| ObjectInstance {
                    category: c.to_string(),
                    footprint: sq.clone(),
                    difficulty: None,
                })
                .collect(),
        )
    }

    fn ctx(images: &[AnnotatedImage]) -> NegativeContext {
        NegativeContext::new(build_cooccurrence(images), 0.2)
    }

    fn set<'a>(v: &[&'a str]) -> BTreeSet<&'a str> {
        v.iter().copied().collect()
    }

    #[test]
    fn adversarial_prefers_frequent_partner() {
        let mut corpus: Vec<_> = (0..5).map(|i| image(&format!("ab{i}"), &["A", "B"])).collect();
        corpus.push(image("ac", &["A", "C"]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_absent_category(&set(&["A"]), Strategy::Adversarial, &ctx(&corpus), &mut rng).unwrap(), "B");
    }

    #[test]
    fn adversarial_tie_goes_to_smaller_name() {
        let mut corpus = Vec::new();
        for i in 0..3 {
            corpus.push(image(&format!("ab{i}"), &["A", "B"]));
            corpus.push(image(&format!("ac{i}"), &["A", "C"]));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_absent_category(&set(&["A"]), Strategy::Adversarial, &ctx(&corpus), &mut rng).unwrap(), "B");
    }

    #[test]
    fn full_image_is_skipped() {
        let corpus = vec![image("x", &["A", "B"])];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in Strategy::ALL {
            assert_eq!(
                select_absent_category(&set(&["A", "B"]), s, &ctx(&corpus), &mut rng),
                Err(SkipReason::NoAbsentCategory)
            );
        }
    }

    #[test]
    fn random_and_popular_stay_in_pool() {
        let corpus: Vec<_> = (0..20).map(|i| image(&format!("i{i}"), &[["A", "B", "C", "D", "E"][i % 5], "A"])).collect();
        let c = ctx(&corpus);
        assert_eq!(c.popular, ["A".to_string()].into());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r = select_absent_category(&set(&["B"]), Strategy::Random, &c, &mut rng).unwrap();
            assert_ne!(r, "B");
        }
        assert_eq!(select_absent_category(&set(&["B"]), Strategy::Popular, &c, &mut rng).unwrap(), "A");
        assert_eq!(
            select_absent_category(&set(&["A"]), Strategy::Popular, &c, &mut rng),
            Err(SkipReason::NoAbsentPopularCategory)
        );
    }

    #[test]
    fn schedule_thirds() {
        let mut s = StrategySchedule::new([1.0 / 3.0; 3]);
        let seq: Vec<Strategy> = (0..9).map(|_| s.next_strategy()).collect();
        for st in Strategy::ALL {
            assert_eq!(seq.iter().filter(|&&x| x == st).count(), 3);
        }
        assert_eq!(&seq[..3], &Strategy::ALL);
    }
}
