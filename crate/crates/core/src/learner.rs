//! The base online learner: a hashed-weight linear regressor trained by
//! online gradient descent on squared loss, with namespace-interaction
//! feature crossing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::config::Config;
use crate::example::Example;

/// Reserved weight index for the constant bias feature.
pub const BIAS_INDEX: usize = 0;

/// Default weight-table size exponent.
pub const DEFAULT_BIT_PRECISION: u32 = 18;

/// Magnitude cap on the per-update weight step.
pub const GRADIENT_CLIP_BOUND: f64 = 1e3;

const PART_SEPARATOR: u8 = 0x1f;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LearnerError {
    /// Weights went non-finite even after clipping; the input scaling is
    /// pathological.
    NumericOverflow,
}

impl fmt::Display for LearnerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerError::NumericOverflow => f.write_str("learner weights became non-finite"),
        }
    }
}

/// FNV-1a over a byte stream.
fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut feed = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    };
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            feed(PART_SEPARATOR);
        }
        for &b in part.as_bytes() {
            feed(b);
        }
    }
    h
}

/// Hashes an ordered list of string parts into a weight index.
///
/// Deterministic across runs and platforms: a 64-bit FNV-1a of the parts
/// joined with a `0x1f` separator, masked to `bit_precision` bits.
pub fn hash_index(parts: &[&str], bit_precision: u32) -> usize {
    debug_assert!(!parts.is_empty());
    let mask = (1u64 << bit_precision) - 1;
    (fnv1a(parts) & mask) as usize
}

/// Expands an example into the sparse feature vector induced by a config:
/// the constant bias, every base feature, and the full cross product of each
/// interaction pair. Namespaces outside the config's base set are dropped.
pub fn featurize(example: &Example, config: &Config, bit_precision: u32) -> Vec<(usize, f64)> {
    let mut out = vec![(BIAS_INDEX, 1.0)];
    for ns in &example.namespaces {
        if !config.base_namespaces().contains(&ns.id) {
            continue;
        }
        for feat in &ns.features {
            out.push((hash_index(&[&ns.id, &feat.name], bit_precision), feat.value));
        }
    }
    for pair in config.interactions() {
        let (Some(u), Some(v)) = (example.namespace(pair.first()), example.namespace(pair.second()))
        else {
            continue;
        };
        for fu in &u.features {
            for fv in &v.features {
                // pair is stored sorted, so the part order is canonical
                let idx = hash_index(&[&u.id, &fu.name, &v.id, &fv.name], bit_precision);
                out.push((idx, fu.value * fv.value));
            }
        }
    }
    out
}

/// A hashed-weight linear model owned by one configuration.
#[derive(Clone, Debug)]
pub struct LearnerModel {
    weights: Vec<f64>,
    bit_precision: u32,
    update_count: u64,
    config: Config,
}

impl LearnerModel {
    pub fn new(config: Config, bit_precision: u32) -> Self {
        LearnerModel {
            weights: vec![0.0; 1 << bit_precision],
            bit_precision,
            update_count: 0,
            config,
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn bit_precision(&self) -> u32 {
        self.bit_precision
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// Expands an example under this model's config.
    pub fn featurize(&self, example: &Example) -> Vec<(usize, f64)> {
        featurize(example, &self.config, self.bit_precision)
    }

    /// Dot product of the weights with a sparse vector.
    pub fn predict(&self, x: &[(usize, f64)]) -> f64 {
        x.iter().map(|&(i, v)| self.weights[i] * v).sum()
    }

    /// One online gradient step on squared loss with a power-0.5 decayed
    /// learning rate: `w <- w - eta_t (yhat - y) x`,
    /// `eta_t = lr / sqrt(update_count + 1)`. The step scale is clipped to
    /// [`GRADIENT_CLIP_BOUND`] in magnitude.
    pub fn update(&mut self, x: &[(usize, f64)], y: f64) -> Result<(), LearnerError> {
        let prediction = self.predict(x);
        let eta = self.config.learning_rate() / libm::sqrt((self.update_count + 1) as f64);
        let scale = (eta * (prediction - y)).clamp(-GRADIENT_CLIP_BOUND, GRADIENT_CLIP_BOUND);
        for &(i, v) in x {
            let w = self.weights[i] - scale * v;
            if !w.is_finite() {
                return Err(LearnerError::NumericOverflow);
            }
            self.weights[i] = w;
        }
        self.update_count += 1;
        Ok(())
    }
}

/// Tracks the distinct feature names observed per namespace, from which the
/// effective dimensionality of a config is derived.
#[derive(Clone, Debug, Default)]
pub struct DimensionTracker {
    seen: BTreeMap<String, BTreeSet<String>>,
    observed: bool,
}

impl DimensionTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, example: &Example) {
        self.observed = true;
        for ns in &example.namespaces {
            let set = self.seen.entry(ns.id.clone()).or_default();
            for feat in &ns.features {
                if !set.contains(&feat.name) {
                    set.insert(feat.name.clone());
                }
            }
        }
    }

    pub fn has_observed(&self) -> bool {
        self.observed
    }

    pub fn count(&self, namespace: &str) -> u64 {
        self.seen.get(namespace).map_or(0, |s| s.len() as u64)
    }

    /// Total distinct raw features across all namespaces.
    pub fn raw_feature_count(&self) -> u64 {
        self.seen.values().map(|s| s.len() as u64).sum()
    }
}

/// Effective dimensionality of the feature space induced by a config: base
/// feature counts, plus the product of counts for each interaction pair,
/// plus the bias; capped at the weight-table size.
pub fn dimension(config: &Config, tracker: &DimensionTracker, bit_precision: u32) -> u64 {
    let cap = 1u64 << bit_precision;
    let mut d: u64 = 1;
    for ns in config.base_namespaces() {
        d = d.saturating_add(tracker.count(ns));
    }
    for pair in config.interactions() {
        d = d.saturating_add(tracker.count(pair.first()).saturating_mul(tracker.count(pair.second())));
    }
    d.min(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InteractionPair;
    use crate::example::{Feature, Namespace};

    fn ex(namespaces: Vec<Namespace>) -> Example {
        Example::new(0.0, namespaces)
    }

    #[test]
    fn hash_is_deterministic() {
        let a = hash_index(&["a", "x"], 18);
        let b = hash_index(&["a", "x"], 18);
        assert_eq!(a, b);
        assert!(a < (1 << 18));
    }

    #[test]
    fn featurize_base_only() {
        let config = Config::plain(["a"]);
        let e = ex(vec![Namespace::new("a", vec![Feature::new("x", 2.0)])]);
        let v = featurize(&e, &config, 18);
        assert_eq!(v.len(), 2);
        assert_eq!(v[0], (BIAS_INDEX, 1.0));
        assert_eq!(v[1], (hash_index(&["a", "x"], 18), 2.0));
    }

    #[test]
    fn featurize_single_cross_value() {
        let ab = InteractionPair::new("a", "b").unwrap();
        let config = Config::plain(["a", "b"]).with_interaction(ab).unwrap();
        let e = ex(vec![
            Namespace::new("a", vec![Feature::new("x", 2.0)]),
            Namespace::new("b", vec![Feature::new("z", 3.0)]),
        ]);
        let v = featurize(&e, &config, 18);
        // bias + 2 base + 1 crossed
        assert_eq!(v.len(), 4);
        assert_eq!(v.last().unwrap().1, 6.0);
    }

    #[test]
    fn featurize_cross_product_count() {
        let ab = InteractionPair::new("a", "b").unwrap();
        let config = Config::plain(["a", "b"]).with_interaction(ab).unwrap();
        let e = ex(vec![
            Namespace::new(
                "a",
                vec![Feature::new("x", 1.0), Feature::new("y", 1.0)],
            ),
            Namespace::new(
                "b",
                vec![
                    Feature::new("p", 1.0),
                    Feature::new("q", 1.0),
                    Feature::new("r", 1.0),
                ],
            ),
        ]);
        let v = featurize(&e, &config, 18);
        // bias + 5 base + 2*3 crossed
        assert_eq!(v.len(), 1 + 5 + 6);
    }

    #[test]
    fn featurize_drops_extra_namespaces() {
        let config = Config::plain(["a"]);
        let e = ex(vec![
            Namespace::new("a", vec![Feature::new("x", 1.0)]),
            Namespace::new("zz", vec![Feature::new("w", 9.0)]),
        ]);
        assert_eq!(featurize(&e, &config, 18).len(), 2);
    }

    #[test]
    fn zero_model_predicts_zero() {
        let model = LearnerModel::new(Config::plain(["a"]), 10);
        assert_eq!(model.predict(&[(0, 1.0), (5, 2.0)]), 0.0);
    }

    #[test]
    fn one_step_gd_by_hand() {
        let mut model = LearnerModel::new(Config::plain(["a"]), 10);
        model.update(&[(0, 1.0)], 1.0).unwrap();
        // w[0] = 0 - 0.5 * (0 - 1) * 1 = 0.5
        assert_eq!(model.predict(&[(0, 1.0)]), 0.5);
    }

    #[test]
    fn zero_gradient_leaves_model_unchanged() {
        let mut model = LearnerModel::new(Config::plain(["a"]), 10);
        model.update(&[(0, 1.0)], 1.0).unwrap();
        let before = model.predict(&[(0, 1.0)]);
        model.update(&[(0, 1.0)], before).unwrap();
        assert_eq!(model.predict(&[(0, 1.0)]), before);
    }

    #[test]
    fn step_size_decays() {
        let mut m1 = LearnerModel::new(Config::plain(["a"]), 10);
        m1.update(&[(0, 1.0)], 1.0).unwrap();
        let first = m1.predict(&[(0, 1.0)]);
        m1.update(&[(0, 1.0)], 2.0).unwrap();
        let second_step = m1.predict(&[(0, 1.0)]) - first;
        // eta_2 = eta_1 / sqrt(2); gradient magnitude also 1.5 vs 1.0
        let expected = 0.5 / libm::sqrt(2.0) * (2.0 - first);
        assert!((second_step - expected).abs() < 1e-12);
    }

    #[test]
    fn prediction_moves_toward_label() {
        let config = Config::plain(["a"]);
        let mut model = LearnerModel::new(config.clone(), 10);
        let e = ex(vec![Namespace::new("a", vec![Feature::new("x", 1.5)])]);
        let x = featurize(&e, &config, 10);
        let before = model.predict(&x);
        model.update(&x, 3.0).unwrap();
        let after = model.predict(&x);
        assert!((after - before).signum() == (3.0 - before).signum());
    }

    #[test]
    fn dimension_formula() {
        let mut tracker = DimensionTracker::new();
        tracker.observe(&ex(vec![
            Namespace::new(
                "a",
                vec![Feature::new("x", 1.0), Feature::new("y", 1.0)],
            ),
            Namespace::new(
                "b",
                vec![
                    Feature::new("p", 1.0),
                    Feature::new("q", 1.0),
                    Feature::new("r", 1.0),
                ],
            ),
        ]));
        let plain = Config::plain(["a", "b"]);
        assert_eq!(dimension(&plain, &tracker, 18), 6);
        let ab = InteractionPair::new("a", "b").unwrap();
        let crossed = plain.with_interaction(ab).unwrap();
        assert_eq!(dimension(&crossed, &tracker, 18), 12);
    }

    #[test]
    fn dimension_is_capped() {
        let mut tracker = DimensionTracker::new();
        let many: Vec<Feature> = (0..100)
            .map(|i| Feature::new(alloc::format!("f{i}"), 1.0))
            .collect();
        tracker.observe(&ex(vec![Namespace::new("a", many)]));
        let config = Config::plain(["a"]);
        assert_eq!(dimension(&config, &tracker, 4), 16);
    }

    #[test]
    fn tracker_counts_are_nondecreasing_and_distinct() {
        let mut tracker = DimensionTracker::new();
        let e = ex(vec![Namespace::new("a", vec![Feature::new("x", 1.0)])]);
        tracker.observe(&e);
        tracker.observe(&e);
        assert_eq!(tracker.count("a"), 1);
        assert_eq!(tracker.raw_feature_count(), 1);
    }
}
