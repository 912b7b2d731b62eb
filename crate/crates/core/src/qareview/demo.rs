//! A seeded demo session whose verdicts reproduce the reference statistic:
//! 73% completely accurate, 10% completely inaccurate and 17% partially
//! accurate sentences, with 55% accurate pieces inside the partial ones.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::session::{CaptionPair, PieceVerdict, ReviewSession, SentenceCategory};

pub const DEMO_SESSION_ID: &str = "demo";

const SUBJECTS: [&str; 10] = [
    "A straight road",
    "Several small houses",
    "A large storage tank",
    "The river",
    "Two tennis courts",
    "A parking lot",
    "Dense green trees",
    "A harbor with ships",
    "An open farmland area",
    "A wide bridge",
];

const PLACES: [&str; 10] = [
    "runs across the center of the image",
    "are arranged along the left side",
    "sits near the top right corner",
    "curves through the lower part of the scene",
    "are located next to a parking area",
    "is filled with cars, e.g. white vans",
    "surround the buildings at the bottom",
    "occupies the upper left region",
    "stretches to the right edge at about 0.5 m resolution",
    "connects both banks of the river",
];

fn sentence(k: usize) -> String {
    format!("{} {}.", SUBJECTS[k % 10], PLACES[(k / 10 + k) % 10])
}

/// 20 pairs of 5 sentences. Sentence categories are shuffled under `seed`;
/// partial sentences are split into 2 or 3 pieces, 22 of their 40 pieces
/// judged accurate.
pub fn demo_session(seed: u64) -> ReviewSession {
    let pairs: Vec<CaptionPair> = (0..20)
        .map(|i| CaptionPair {
            image: format!("demo-{i:02}.png"),
            caption: (0..5).map(|j| sentence(i * 5 + j)).collect::<Vec<_>>().join(" "),
        })
        .collect();
    let mut session = ReviewSession::new(DEMO_SESSION_ID, &pairs);
    let mut cats: Vec<SentenceCategory> = [
        (SentenceCategory::CompletelyAccurate, 73),
        (SentenceCategory::CompletelyInaccurate, 10),
        (SentenceCategory::PartiallyAccurate, 17),
    ]
    .into_iter()
    .flat_map(|(c, n)| std::iter::repeat_n(c, n))
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cats.shuffle(&mut rng);
    // piece plans for the 17 partial sentences: (pieces, accurate)
    let mut plans: Vec<(usize, usize)> = std::iter::repeat_n((2, 1), 11).chain(std::iter::repeat_n((3, 2), 5)).chain([(3, 1)]).collect();
    plans.shuffle(&mut rng);
    let mut plan = plans.into_iter();
    let positions: Vec<(usize, usize)> = (0..20).flat_map(|p| (0..5).map(move |s| (p, s))).collect();
    for ((p, s), cat) in positions.into_iter().zip(cats) {
        let verdict = match cat {
            SentenceCategory::CompletelyAccurate => PieceVerdict::Accurate,
            SentenceCategory::CompletelyInaccurate => PieceVerdict::Inaccurate,
            SentenceCategory::PartiallyAccurate => {
                let (pieces, accurate) = plan.next().expect("17 plans");
                let text = session.pairs[p].sentences[s].text.clone();
                let cuts: Vec<usize> = text.match_indices(' ').map(|(i, _)| i + 1).collect();
                // cut right to left so piece 0 always holds the remaining prefix
                for k in (1..pieces).rev() {
                    session.split_piece(p, s, 0, cuts[k * cuts.len() / pieces]).expect("split inside sentence");
                }
                for k in 0..pieces {
                    let v = if k < accurate { PieceVerdict::Accurate } else { PieceVerdict::Inaccurate };
                    session.record_verdict(p, s, k, v).expect("valid piece");
                }
                continue;
            }
        };
        session.record_verdict(p, s, 0, verdict).expect("valid piece");
    }
    session
}
