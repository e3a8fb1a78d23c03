//! Experiment runner: the full engine, the Naive/Exhaustive/RandomInit
//! baselines, the scheduling ablations, normalized scores, and per-seed
//! aggregation.

use std::str::FromStr;

use chacha_core::bounds::{self, BoundParams, LabelRange, LossAccumulator};
use chacha_core::engine::{
    BoundSnapshot, EliminationEvent, Engine, EngineMode, EngineParams, PromotionEvent, StepRecord,
};
use chacha_core::learner::{self, DimensionTracker, LearnerModel};
use chacha_core::oracle::{self, OracleParams, TuningTask};
use chacha_core::{Config, Example, SchedulerParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("empty example stream")]
    EmptyStream,
    #[error("learner diverged: {0}")]
    Learner(chacha_core::LearnerError),
    #[error("engine: {0}")]
    Engine(chacha_core::EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Chacha,
    Naive,
    Exhaustive,
    RandomInit,
    ChachaAggressive,
    ChachaNoChampion,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Chacha => "chacha",
            Algorithm::Naive => "naive",
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::RandomInit => "random-init",
            Algorithm::ChachaAggressive => "chacha-aggressive",
            Algorithm::ChachaNoChampion => "chacha-no-champion",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chacha" => Ok(Algorithm::Chacha),
            "naive" => Ok(Algorithm::Naive),
            "exhaustive" => Ok(Algorithm::Exhaustive),
            "random-init" | "random_init" => Ok(Algorithm::RandomInit),
            "chacha-aggressive" | "chacha_aggressive" => Ok(Algorithm::ChachaAggressive),
            "chacha-no-champion" | "chacha_no_champion" => Ok(Algorithm::ChachaNoChampion),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

/// Everything one run needs besides the example stream itself.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub task: TuningTask,
    pub budget: usize,
    pub max_examples: usize,
    pub seed: u64,
    pub bit_precision: u32,
    pub delta: f64,
    pub loss_scale_factor: f64,
    /// Overrides the default `5 x raw feature dimensionality`.
    pub n_min: Option<u64>,
    /// Keep per-step bound snapshots for offline test replay.
    pub log_bounds: bool,
}

impl RunSpec {
    pub fn new(algorithm: Algorithm, task: TuningTask, seed: u64) -> Self {
        RunSpec {
            algorithm,
            task,
            budget: 5,
            max_examples: 100_000,
            seed,
            bit_precision: learner::DEFAULT_BIT_PRECISION,
            delta: 0.1,
            loss_scale_factor: 0.05,
            n_min: None,
            log_bounds: false,
        }
    }
}

/// The full record of one run.
#[derive(Clone, Debug, Default)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
    pub promotions: Vec<PromotionEvent>,
    pub eliminations: Vec<EliminationEvent>,
    pub bound_log: Vec<BoundSnapshot>,
    pub final_champion: String,
}

impl RunTrace {
    /// Final progressive raw MSE over the whole run.
    pub fn final_mse(&self) -> f64 {
        mean(self.steps.iter().map(|s| s.sq_err))
    }

    /// Final progressive clipped MAE of the served predictions.
    pub fn final_clipped_mae(&self) -> f64 {
        mean(self.steps.iter().map(|s| s.clipped_abs_err))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0u64;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Distinct raw (namespace, feature) pairs in a stream.
pub fn raw_feature_dimensionality(examples: &[Example]) -> u64 {
    let mut tracker = DimensionTracker::new();
    for ex in examples {
        tracker.observe(ex);
    }
    tracker.raw_feature_count()
}

/// The initial configuration for a stream: every observed namespace, no
/// interactions, learning rate 0.5.
pub fn initial_config(examples: &[Example]) -> Config {
    let mut namespaces: Vec<&str> = Vec::new();
    for ex in examples {
        for ns in &ex.namespaces {
            if !namespaces.contains(&ns.id.as_str()) {
                namespaces.push(&ns.id);
            }
        }
    }
    namespaces.sort_unstable();
    Config::plain(namespaces)
}

fn engine_params(spec: &RunSpec, examples: &[Example], mode: EngineMode) -> EngineParams {
    let n_min = spec
        .n_min
        .unwrap_or_else(|| 5 * raw_feature_dimensionality(examples).max(1));
    EngineParams {
        bounds: BoundParams {
            delta: spec.delta,
            loss_scale_factor: spec.loss_scale_factor,
        },
        scheduler: SchedulerParams { n_min },
        oracle: OracleParams::default(),
        task: spec.task,
        bit_precision: spec.bit_precision,
        mode,
        seed: spec.seed,
        log_bounds: spec.log_bounds,
    }
}

/// Runs one algorithm over a stream.
pub fn run(spec: &RunSpec, examples: &[Example]) -> Result<RunTrace, HarnessError> {
    if examples.is_empty() {
        return Err(HarnessError::EmptyStream);
    }
    let examples = &examples[..examples.len().min(spec.max_examples)];
    match spec.algorithm {
        Algorithm::Chacha => run_engine(spec, examples, EngineMode::Standard),
        Algorithm::ChachaAggressive => run_engine(spec, examples, EngineMode::AggressiveScheduling),
        Algorithm::ChachaNoChampion => run_engine(spec, examples, EngineMode::NoChampion),
        Algorithm::Naive => {
            let c_init = initial_config(examples);
            run_static_pool(spec, examples, vec![c_init])
        }
        Algorithm::Exhaustive => {
            let c_init = initial_config(examples);
            let mut configs = vec![c_init.clone()];
            configs.extend(oracle::oracle(&c_init, spec.task, &OracleParams::default()));
            run_static_pool(spec, examples, configs)
        }
        Algorithm::RandomInit => {
            let c_init = initial_config(examples);
            let mut pool = oracle::oracle(&c_init, spec.task, &OracleParams::default());
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut configs = vec![c_init];
            // uniform sample without replacement from the first batch
            let picks = (spec.budget.saturating_sub(1)).min(pool.len());
            for _ in 0..picks {
                let idx = (rand::RngCore::next_u64(&mut rng) % pool.len() as u64) as usize;
                configs.push(pool.swap_remove(idx));
            }
            run_static_pool(spec, examples, configs)
        }
    }
}

fn run_engine(
    spec: &RunSpec,
    examples: &[Example],
    mode: EngineMode,
) -> Result<RunTrace, HarnessError> {
    let c_init = initial_config(examples);
    let params = engine_params(spec, examples, mode);
    let mut engine = Engine::new(c_init, spec.budget, params).map_err(HarnessError::Engine)?;
    let mut steps = Vec::with_capacity(examples.len());
    for ex in examples {
        steps.push(engine.step(ex).map_err(HarnessError::Learner)?);
    }
    Ok(RunTrace {
        steps,
        promotions: engine.promotions().to_vec(),
        eliminations: engine.eliminations().to_vec(),
        bound_log: engine.bound_log().to_vec(),
        final_champion: engine.champion_id().to_string(),
    })
}

/// A fixed pool of live learners with no scheduling, promotion, or
/// elimination; configs[0] plays the champion for tie-breaking. Backs the
/// Naive, Exhaustive and RandomInit baselines.
fn run_static_pool(
    spec: &RunSpec,
    examples: &[Example],
    configs: Vec<Config>,
) -> Result<RunTrace, HarnessError> {
    let bound_params = BoundParams {
        delta: spec.delta,
        loss_scale_factor: spec.loss_scale_factor,
    };
    let champion_id = configs[0].id().clone();
    let mut models: Vec<LearnerModel> = configs
        .iter()
        .map(|c| LearnerModel::new(c.clone(), spec.bit_precision))
        .collect();
    let mut losses = vec![LossAccumulator::new(); configs.len()];
    let mut range = LabelRange::new();
    let mut tracker = DimensionTracker::new();
    let challenger_count = configs.len() - 1;
    let pool_size = challenger_count.max(1);

    let mut steps = Vec::with_capacity(examples.len());
    for (t, ex) in examples.iter().enumerate() {
        tracker.observe(ex);
        // incumbent: minimum upper bound, champion wins ties (it is first)
        let mut incumbent = 0;
        let mut best = f64::INFINITY;
        for (i, model) in models.iter().enumerate() {
            let d = learner::dimension(model.config(), &tracker, spec.bit_precision);
            let b = bounds::bounds(&losses[i], d, pool_size, &bound_params, &range);
            if b.upper < best {
                best = b.upper;
                incumbent = i;
            }
        }
        let x = models[incumbent].featurize(ex);
        let prediction = models[incumbent].predict(&x);

        let label = ex.label;
        range.observe(label);
        for (i, model) in models.iter_mut().enumerate() {
            let x = model.featurize(ex);
            let own = model.predict(&x);
            losses[i].record(own, label, &range);
            model.update(&x, label).map_err(HarnessError::Learner)?;
        }

        let sq_err = (prediction - label) * (prediction - label);
        let clipped_abs_err = (range.clip(prediction) - label).abs();
        steps.push(StepRecord {
            t: t as u64 + 1,
            incumbent: configs[incumbent].id().clone(),
            prediction,
            label,
            sq_err,
            clipped_abs_err,
            champion: champion_id.clone(),
            pool_size: challenger_count,
            live_size: challenger_count,
        });
    }
    Ok(RunTrace {
        steps,
        final_champion: champion_id.to_string(),
        ..RunTrace::default()
    })
}

/// `(L(naive) - L(alg)) / (L(naive) - L(exhaustive))`; `None` when the
/// denominator vanishes.
pub fn normalized_score(loss_alg: f64, loss_naive: f64, loss_exhaustive: f64) -> Option<f64> {
    let denom = loss_naive - loss_exhaustive;
    if denom == 0.0 {
        None
    } else {
        Some((loss_naive - loss_alg) / denom)
    }
}

/// Sample mean and (n-1) standard deviation; a single value reports 0.
pub fn aggregate(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 1, "aggregate needs at least one value");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
