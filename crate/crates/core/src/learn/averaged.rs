use std::collections::HashMap;
use std::hash::Hash;

/// Perceptron weights with lazy averaging: alongside each weight we keep
/// the sum of `step * delta`, so the average is `w - acc / steps`.
pub(crate) struct Averaged<K> {
    weights: HashMap<K, (f64, f64)>,
    step: u64,
}

impl<K: Hash + Eq + Clone> Averaged<K> {
    pub fn new() -> Self {
        Averaged { weights: HashMap::new(), step: 1 }
    }

    pub fn get(&self, key: &K) -> f64 {
        self.weights.get(key).map_or(0.0, |w| w.0)
    }

    pub fn update(&mut self, key: &K, delta: f64) {
        let entry = self.weights.entry(key.clone()).or_insert((0.0, 0.0));
        entry.0 += delta;
        entry.1 += self.step as f64 * delta;
    }

    pub fn tick(&mut self) {
        self.step += 1;
    }

    /// Averaged weights with exact zeros dropped.
    pub fn finish(self) -> impl Iterator<Item = (K, f64)> {
        let steps = self.step as f64;
        self.weights.into_iter().filter_map(move |(k, (w, acc))| {
            let avg = w - acc / steps;
            (avg != 0.0 && avg.is_finite()).then_some((k, avg))
        })
    }
}
