//! Progressive-validation loss tracking with the clipped-MAE proxy, the
//! sample-complexity confidence radius, and the promotion/elimination tests
//! on bound intervals.

use libm::{log, sqrt};

/// Parameters of the confidence radius.
#[derive(Clone, Copy, Debug)]
pub struct BoundParams {
    /// Failure probability of the bound, in (0, 1).
    pub delta: f64,
    /// Multiplier on the observed label span giving the loss-scale constant
    /// `a = loss_scale_factor * (y_max - y_min)`.
    pub loss_scale_factor: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            delta: 0.1,
            loss_scale_factor: 0.05,
        }
    }
}

/// Running min/max of observed labels, global across all configs. Updated
/// once per step before any per-config loss recording.
#[derive(Clone, Copy, Debug, Default)]
pub struct LabelRange {
    bounds: Option<(f64, f64)>,
}

impl LabelRange {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, label: f64) {
        self.bounds = Some(match self.bounds {
            None => (label, label),
            Some((lo, hi)) => (lo.min(label), hi.max(label)),
        });
    }

    pub fn is_initialized(&self) -> bool {
        self.bounds.is_some()
    }

    pub fn span(&self) -> f64 {
        self.bounds.map_or(0.0, |(lo, hi)| hi - lo)
    }

    /// Clips a prediction into the observed label range.
    pub fn clip(&self, prediction: f64) -> f64 {
        match self.bounds {
            None => prediction,
            Some((lo, hi)) => prediction.max(lo).min(hi),
        }
    }
}

/// Accumulates the clipped mean absolute error of one config's live spell.
#[derive(Clone, Copy, Debug, Default)]
pub struct LossAccumulator {
    pub sum_clipped_abs_error: f64,
    pub count: u64,
}

impl LossAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one clipped absolute error. The range must already include the
    /// current label.
    pub fn record(&mut self, prediction: f64, label: f64, range: &LabelRange) {
        debug_assert!(range.is_initialized());
        let err = (range.clip(prediction) - label).abs();
        self.sum_clipped_abs_error += err;
        self.count += 1;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_clipped_abs_error / self.count as f64)
    }

    pub fn reset(&mut self) {
        *self = LossAccumulator::new();
    }
}

/// A probabilistic loss interval `[mean - eps, mean + eps]`. Untrained
/// configs carry the vacuous `(-inf, +inf)` interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

/// Confidence radius `a * sqrt(d * ln(count * pool_size / delta) / count)`
/// with `a = loss_scale_factor * (y_max - y_min)`. Infinite when the config
/// has consumed no samples.
pub fn epsilon(
    acc: &LossAccumulator,
    d: u64,
    pool_size: usize,
    params: &BoundParams,
    range: &LabelRange,
) -> f64 {
    if acc.count == 0 {
        return f64::INFINITY;
    }
    let a = params.loss_scale_factor * range.span();
    let n = acc.count as f64;
    a * sqrt(d as f64 * log(n * pool_size as f64 / params.delta) / n)
}

/// The loss interval `mean ± epsilon` for one config.
pub fn bounds(
    acc: &LossAccumulator,
    d: u64,
    pool_size: usize,
    params: &BoundParams,
    range: &LabelRange,
) -> Bounds {
    match acc.mean() {
        None => Bounds {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        },
        Some(mean) => {
            let eps = epsilon(acc, d, pool_size, params, range);
            Bounds {
                lower: mean - eps,
                upper: mean + eps,
            }
        }
    }
}

/// Promotion test: the challenger's upper bound clears the champion's lower
/// bound by at least the champion's own radius.
pub fn better_than(challenger: Bounds, champion: Bounds, champion_epsilon: f64) -> bool {
    challenger.upper < champion.lower - champion_epsilon
}

/// Elimination test: the challenger's lower bound exceeds the champion's
/// upper bound.
pub fn worse_than(challenger: Bounds, champion: Bounds) -> bool {
    challenger.lower > champion.upper
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range(lo: f64, hi: f64) -> LabelRange {
        let mut r = LabelRange::new();
        r.observe(lo);
        r.observe(hi);
        r
    }

    #[test]
    fn record_clips_high_prediction() {
        let r = range(0.0, 5.0);
        let mut acc = LossAccumulator::new();
        acc.record(10.0, 3.0, &r);
        assert_eq!(acc.sum_clipped_abs_error, 2.0);
    }

    #[test]
    fn record_perfect_prediction() {
        let r = range(0.0, 5.0);
        let mut acc = LossAccumulator::new();
        acc.record(3.0, 3.0, &r);
        assert_eq!(acc.sum_clipped_abs_error, 0.0);
    }

    #[test]
    fn record_clips_low_prediction() {
        let r = range(0.0, 5.0);
        let mut acc = LossAccumulator::new();
        acc.record(-7.0, 0.0, &r);
        assert_eq!(acc.sum_clipped_abs_error, 0.0);
    }

    #[test]
    fn per_step_error_bounded_by_span() {
        let r = range(-1.0, 4.0);
        let mut acc = LossAccumulator::new();
        acc.record(100.0, -1.0, &r);
        assert!(acc.sum_clipped_abs_error <= r.span());
    }

    #[test]
    fn epsilon_matches_hand_evaluation() {
        // a = 1 via span 20 and factor 0.05
        let r = range(0.0, 20.0);
        let params = BoundParams::default();
        let acc = LossAccumulator {
            sum_clipped_abs_error: 0.0,
            count: 100,
        };
        let eps = epsilon(&acc, 10, 10, &params, &r);
        assert!((eps - 0.95971).abs() < 1e-4);
    }

    #[test]
    fn epsilon_infinite_when_untrained() {
        let r = range(0.0, 1.0);
        let acc = LossAccumulator::new();
        assert!(epsilon(&acc, 5, 3, &BoundParams::default(), &r).is_infinite());
    }

    #[test]
    fn epsilon_zero_when_range_degenerate() {
        let r = range(2.0, 2.0);
        let acc = LossAccumulator {
            sum_clipped_abs_error: 0.0,
            count: 10,
        };
        assert_eq!(epsilon(&acc, 5, 3, &BoundParams::default(), &r), 0.0);
    }

    #[test]
    fn epsilon_halves_when_count_quadruples_log_held() {
        // hold the log argument fixed by shrinking pool_size by 4
        let r = range(0.0, 20.0);
        let params = BoundParams::default();
        let a1 = LossAccumulator {
            sum_clipped_abs_error: 0.0,
            count: 100,
        };
        let a4 = LossAccumulator {
            sum_clipped_abs_error: 0.0,
            count: 400,
        };
        let e1 = epsilon(&a1, 10, 40, &params, &r);
        let e4 = epsilon(&a4, 10, 10, &params, &r);
        assert!((e4 - e1 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_are_mean_plus_minus_eps() {
        let r = range(0.0, 20.0);
        let params = BoundParams::default();
        let acc = LossAccumulator {
            sum_clipped_abs_error: 50.0,
            count: 100,
        };
        let b = bounds(&acc, 10, 10, &params, &r);
        let eps = epsilon(&acc, 10, 10, &params, &r);
        assert!((b.upper - (0.5 + eps)).abs() < 1e-12);
        assert!((b.lower - (0.5 - eps)).abs() < 1e-12);
    }

    #[test]
    fn untrained_bounds_are_vacuous() {
        let r = range(0.0, 1.0);
        let b = bounds(&LossAccumulator::new(), 5, 1, &BoundParams::default(), &r);
        assert!(b.upper.is_infinite() && b.upper > 0.0);
        assert!(b.lower.is_infinite() && b.lower < 0.0);
    }

    #[test]
    fn better_than_cases() {
        let chal = Bounds {
            lower: 0.1,
            upper: 0.3,
        };
        let champ = Bounds {
            lower: 0.5,
            upper: 0.9,
        };
        assert!(better_than(chal, champ, 0.1));
        let chal2 = Bounds {
            lower: 0.2,
            upper: 0.45,
        };
        assert!(!better_than(chal2, champ, 0.1));
    }

    #[test]
    fn better_than_self_is_false() {
        let b = Bounds {
            lower: 0.2,
            upper: 0.6,
        };
        assert!(!better_than(b, b, 0.2));
    }

    #[test]
    fn worse_than_cases() {
        let chal = Bounds {
            lower: 0.6,
            upper: 0.9,
        };
        let champ = Bounds {
            lower: 0.1,
            upper: 0.5,
        };
        assert!(worse_than(chal, champ));
        assert!(!worse_than(champ, champ));
        let untrained = Bounds {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        };
        assert!(!worse_than(untrained, champ));
        assert!(!better_than(untrained, champ, 0.1));
    }
}
