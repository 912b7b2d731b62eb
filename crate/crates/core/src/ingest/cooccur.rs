use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::model::AnnotatedImage;

/// Image-level category co-occurrence counts. `counts[i][i]` is the number
/// of images containing category `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoOccurrenceMatrix {
    categories: Vec<String>,
    counts: Vec<Vec<u64>>,
    presence_counts: Vec<u64>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl CoOccurrenceMatrix {
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn index_of(&self, category: &str) -> Option<usize> {
        self.index.get(category).copied()
    }

    pub fn count(&self, a: &str, b: &str) -> u64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    pub fn presence(&self, category: &str) -> u64 {
        self.index_of(category).map_or(0, |i| self.presence_counts[i])
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn presence_counts(&self) -> &[u64] {
        &self.presence_counts
    }

    /// The top `fraction` of categories by presence count (at least one),
    /// ties broken by name.
    pub fn popular(&self, fraction: f64) -> BTreeSet<&str> {
        let k = ((self.categories.len() as f64 * fraction).ceil() as usize).clamp(1, self.categories.len().max(1));
        let mut order: Vec<usize> = (0..self.categories.len()).collect();
        order.sort_by(|&a, &b| self.presence_counts[b].cmp(&self.presence_counts[a]).then_with(|| self.categories[a].cmp(&self.categories[b])));
        order.into_iter().take(k).map(|i| self.categories[i].as_str()).collect()
    }

    fn with_categories(categories: BTreeSet<String>) -> Self {
        let categories: Vec<String> = categories.into_iter().collect();
        let n = categories.len();
        let index = categories.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        Self {
            categories,
            counts: vec![vec![0; n]; n],
            presence_counts: vec![0; n],
            index,
        }
    }

    fn rebuild_index(&mut self) {
        self.index = self.categories.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.categories.len();
        (0..n).all(|i| self.counts[i][i] == self.presence_counts[i] && (0..n).all(|j| self.counts[i][j] == self.counts[j][i]))
    }
}

impl CoOccurrenceMatrix {
    /// Deserializes and restores the lookup index.
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let mut m: Self = serde_json::from_str(text)?;
        m.rebuild_index();
        Ok(m)
    }
}

/// Counts over observed categories, ordered lexicographically.
pub fn build_cooccurrence(corpus: &[AnnotatedImage]) -> CoOccurrenceMatrix {
    build_cooccurrence_with_vocabulary(corpus, std::iter::empty::<&str>())
}

/// Same as [`build_cooccurrence`], but also lists declared categories that
/// never occur (with zero counts) so they remain selectable as absent ones.
pub fn build_cooccurrence_with_vocabulary<'a>(
    corpus: &[AnnotatedImage],
    vocabulary: impl IntoIterator<Item = &'a str>,
) -> CoOccurrenceMatrix {
    let mut all: BTreeSet<String> = vocabulary.into_iter().map(str::to_string).collect();
    for img in corpus {
        all.extend(img.instances.iter().map(|i| i.category.clone()));
    }
    let mut m = CoOccurrenceMatrix::with_categories(all);
    for img in corpus {
        let present: Vec<usize> = img.categories().into_iter().map(|c| m.index[c]).collect();
        for &i in &present {
            m.presence_counts[i] += 1;
            for &j in &present {
                m.counts[i][j] += 1;
            }
        }
    }
    m
}
