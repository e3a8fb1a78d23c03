//! Deterministic synthetic streams for desk-scale experiments: a plain
//! linear target, an interaction target that a crossed config can realize,
//! and a piecewise-stationary drift variant.

use chacha_core::{Example, Feature, Namespace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    /// `y` linear in one feature of each namespace; the plain config is
    /// correctly specified.
    Linear,
    /// `y = x_a * x_b + noise`; the optimal config needs the `{a,b}` cross.
    Interaction,
    /// Interaction target whose true cross switches from `{a,b}` to `{a,c}`
    /// at the midpoint.
    Drift,
}

impl SynthKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(SynthKind::Linear),
            "interaction" => Some(SynthKind::Interaction),
            "drift" => Some(SynthKind::Drift),
            _ => None,
        }
    }
}

const LINEAR_WEIGHTS: [f64; 3] = [0.6, -0.4, 0.3];

/// Generates a synthetic stream of `n_examples`, fully determined by the
/// seed. All features are uniform on [-1, 1); namespaces are `a`, `b`, `c`
/// with three features each (only the first carries signal).
pub fn synth_stream(kind: SynthKind, n_examples: usize, noise_sigma: f64, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).expect("sigma is nonnegative");
    let mut out = Vec::with_capacity(n_examples);
    for t in 0..n_examples {
        let mut values = [[0.0f64; 3]; 3];
        for ns in &mut values {
            for v in ns.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let signal = match kind {
            SynthKind::Linear => (0..3).map(|i| LINEAR_WEIGHTS[i] * values[i][0]).sum(),
            SynthKind::Interaction => values[0][0] * values[1][0],
            SynthKind::Drift => {
                if t < n_examples / 2 {
                    values[0][0] * values[1][0]
                } else {
                    values[0][0] * values[2][0]
                }
            }
        };
        let label = signal + noise.sample(&mut rng);
        let namespaces = ["a", "b", "c"]
            .iter()
            .zip(values.iter())
            .map(|(id, vals)| {
                Namespace::new(
                    *id,
                    vals.iter()
                        .enumerate()
                        .map(|(i, &v)| Feature::new(format!("x{i}"), v))
                        .collect(),
                )
            })
            .collect();
        out.push(Example::new(label, namespaces));
    }
    out
}
