use serde::{Deserialize, Serialize};

/// Sample targets for one split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskTargets {
    /// Split evenly between "Yes" and "No"; an odd extra goes to "Yes".
    pub presence: usize,
    pub color_factual: usize,
    pub color_deceptive_ex: usize,
    pub color_deceptive_pan: usize,
    pub absolute_factual: usize,
    pub absolute_deceptive: usize,
    pub relative_factual: usize,
    pub relative_deceptive: usize,
}

impl TaskTargets {
    pub fn paper_train() -> Self {
        Self {
            presence: 8000,
            color_factual: 8000,
            color_deceptive_ex: 4000,
            color_deceptive_pan: 1000,
            absolute_factual: 8000,
            absolute_deceptive: 4000,
            relative_factual: 8000,
            relative_deceptive: 4000,
        }
    }

    pub fn paper_test() -> Self {
        Self {
            presence: 242,
            color_factual: 200,
            color_deceptive_ex: 300,
            color_deceptive_pan: 100,
            absolute_factual: 100,
            absolute_deceptive: 300,
            relative_factual: 100,
            relative_deceptive: 300,
        }
    }

    pub fn total(&self) -> usize {
        self.presence
            + self.color_factual
            + self.color_deceptive_ex
            + self.color_deceptive_pan
            + self.absolute_factual
            + self.absolute_deceptive
            + self.relative_factual
            + self.relative_deceptive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HnstConfig {
    pub seed: u64,
    pub train: TaskTargets,
    pub test: TaskTargets,
    /// Weights for random, popular, adversarial.
    pub strategy_mix: [f64; 3],
    /// Share of categories, by image-presence count, treated as popular.
    pub popular_fraction: f64,
    /// Lowest proportional scale accepted when the corpus cannot meet the
    /// targets. 1.0 turns any shortfall into an error.
    pub min_scale: f64,
}

impl Default for HnstConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train: TaskTargets::paper_train(),
            test: TaskTargets::paper_test(),
            strategy_mix: [1.0 / 3.0; 3],
            popular_fraction: 0.2,
            min_scale: 0.0,
        }
    }
}

impl HnstConfig {
    /// Table counts pinned, no down-scaling.
    pub fn paper(seed: u64) -> Self {
        Self {
            seed,
            min_scale: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.strategy_mix.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err("strategy weights must be finite and non-negative".into());
        }
        if (self.strategy_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err("strategy weights must sum to 1".into());
        }
        if !(self.popular_fraction > 0.0 && self.popular_fraction <= 1.0) {
            return Err("popular fraction must be in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.min_scale) {
            return Err("minimum scale must be in [0, 1]".into());
        }
        Ok(())
    }
}
