//! Challenger generation: expand a champion by one additional pairwise
//! namespace interaction, and perturb its learning rate geometrically.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::{Config, ConfigId};

/// Which hyperparameters the run tunes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TuningTask {
    /// Namespace interactions only.
    Ni,
    /// Namespace interactions and learning rate.
    NiLr,
}

/// Learning-rate neighborhood parameters.
#[derive(Clone, Debug)]
pub struct OracleParams {
    pub lr_factors: Vec<f64>,
    pub lr_min: f64,
    pub lr_max: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            lr_factors: vec![0.5, 2.0],
            lr_min: libm::exp2(-10.0),
            lr_max: 8.0,
        }
    }
}

/// One config per unordered namespace pair not yet in the champion's
/// interaction set; same learning rate. Excludes the champion itself.
pub fn interaction_neighbors(champion: &Config) -> Vec<Config> {
    champion
        .missing_pairs()
        .into_iter()
        .map(|pair| {
            champion
                .with_interaction(pair)
                .expect("missing pair is over base namespaces")
        })
        .collect()
}

/// One config per factor, with the rate clamped into `[lr_min, lr_max]`.
/// Copies whose clamped rate equals the champion's are dropped.
pub fn lr_neighbors(champion: &Config, params: &OracleParams) -> Vec<Config> {
    let mut out = Vec::new();
    for &factor in &params.lr_factors {
        let rate = (factor * champion.learning_rate())
            .max(params.lr_min)
            .min(params.lr_max);
        if rate == champion.learning_rate() {
            continue;
        }
        out.push(
            champion
                .with_learning_rate(rate)
                .expect("clamped rate is positive finite"),
        );
    }
    out
}

/// The full challenger frontier of a champion for a tuning task,
/// deduplicated by config id and sorted by id for determinism.
pub fn oracle(champion: &Config, task: TuningTask, params: &OracleParams) -> Vec<Config> {
    let mut by_id: BTreeMap<ConfigId, Config> = BTreeMap::new();
    let mut add = |c: Config| {
        by_id.entry(c.id().clone()).or_insert(c);
    };
    let interaction = interaction_neighbors(champion);
    match task {
        TuningTask::Ni => {
            for c in interaction {
                add(c);
            }
        }
        TuningTask::NiLr => {
            let rates: Vec<f64> = lr_neighbors(champion, params)
                .iter()
                .map(|c| c.learning_rate())
                .collect();
            for c in &interaction {
                for &rate in &rates {
                    add(c.with_learning_rate(rate).expect("valid rate"));
                }
            }
            for c in interaction {
                add(c);
            }
            for c in lr_neighbors(champion, params) {
                add(c);
            }
        }
    }
    by_id.remove(champion.id());
    by_id.into_values().collect()
}
