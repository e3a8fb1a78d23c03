//! The per-example champion-challenger loop: schedule live challengers,
//! pick the incumbent, predict, observe the label, update every live
//! learner, then run the elimination and promotion tests against the
//! champion and expand the candidate pool on promotion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{self, BoundParams, Bounds, LabelRange};
use crate::config::{Config, ConfigId};
use crate::example::Example;
use crate::learner::{self, DimensionTracker, LearnerError, LearnerModel};
use crate::oracle::{self, OracleParams, TuningTask};
use crate::scheduler::{self, ChallengerRecord, SchedulerParams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EngineError {
    /// Budget must allow at least the champion's slot.
    InvalidBudget,
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::InvalidBudget => f.write_str("budget must be at least 1"),
        }
    }
}

/// Scheduling-policy variants of the engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EngineMode {
    #[default]
    Standard,
    /// No median guard: every lease-expiring live challenger is evicted
    /// when the pool exceeds the budget.
    AggressiveScheduling,
    /// Aggressive scheduling without a reserved champion slot: the champion
    /// rotates through the lease scheduler like any challenger and its
    /// model resets like theirs when evicted.
    NoChampion,
}

#[derive(Clone, Debug)]
pub struct EngineParams {
    pub bounds: BoundParams,
    pub scheduler: SchedulerParams,
    pub oracle: OracleParams,
    pub task: TuningTask,
    pub bit_precision: u32,
    pub mode: EngineMode,
    pub seed: u64,
    /// Record per-step bound snapshots of every candidate, for offline
    /// replay of the promotion/elimination tests.
    pub log_bounds: bool,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            bounds: BoundParams::default(),
            scheduler: SchedulerParams { n_min: 15 },
            oracle: OracleParams::default(),
            task: TuningTask::Ni,
            bit_precision: learner::DEFAULT_BIT_PRECISION,
            mode: EngineMode::Standard,
            seed: 0,
            log_bounds: false,
        }
    }
}

/// One row of the run trace.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t: u64,
    pub incumbent: ConfigId,
    pub prediction: f64,
    pub label: f64,
    pub sq_err: f64,
    pub clipped_abs_err: f64,
    pub champion: ConfigId,
    pub pool_size: usize,
    pub live_size: usize,
}

#[derive(Clone, Debug)]
pub struct PromotionEvent {
    pub t: u64,
    pub old_champion: ConfigId,
    pub new_champion: ConfigId,
}

#[derive(Clone, Debug)]
pub struct EliminationEvent {
    pub t: u64,
    pub config: ConfigId,
}

/// Bound values the elimination/promotion tests consumed at one step.
#[derive(Clone, Debug)]
pub struct BoundSnapshot {
    pub t: u64,
    pub champion: ConfigId,
    pub champion_bounds: Bounds,
    pub champion_epsilon: f64,
    pub candidates: Vec<(ConfigId, Bounds)>,
}

pub struct Engine {
    records: BTreeMap<ConfigId, ChallengerRecord>,
    champion_id: ConfigId,
    pool: BTreeSet<ConfigId>,
    live: BTreeSet<ConfigId>,
    seen: BTreeSet<ConfigId>,
    range: LabelRange,
    tracker: DimensionTracker,
    budget: usize,
    t: u64,
    params: EngineParams,
    rng: ChaCha8Rng,
    promotions: Vec<PromotionEvent>,
    eliminations: Vec<EliminationEvent>,
    bound_log: Vec<BoundSnapshot>,
}

impl Engine {
    pub fn new(c_init: Config, budget: usize, params: EngineParams) -> Result<Self, EngineError> {
        if budget < 1 {
            return Err(EngineError::InvalidBudget);
        }
        let champion_id = c_init.id().clone();
        let mut records = BTreeMap::new();
        let mut seen = BTreeSet::new();
        let mut pool = BTreeSet::new();

        let mut champion = ChallengerRecord::new(c_init.clone());
        champion.model = Some(LearnerModel::new(c_init.clone(), params.bit_precision));
        champion.live = true;
        champion.lease = Some(params.scheduler.n_min);
        seen.insert(champion_id.clone());
        records.insert(champion_id.clone(), champion);

        for config in oracle::oracle(&c_init, params.task, &params.oracle) {
            let id = config.id().clone();
            if seen.insert(id.clone()) {
                pool.insert(id.clone());
                records.insert(id, ChallengerRecord::new(config));
            }
        }

        let mut live = BTreeSet::new();
        if params.mode == EngineMode::NoChampion {
            // the champion starts in one of the b undifferentiated slots
            live.insert(champion_id.clone());
        }

        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Ok(Engine {
            records,
            champion_id,
            pool,
            live,
            seen,
            range: LabelRange::new(),
            tracker: DimensionTracker::new(),
            budget,
            t: 0,
            params,
            rng,
            promotions: Vec::new(),
            eliminations: Vec::new(),
            bound_log: Vec::new(),
        })
    }

    pub fn champion_id(&self) -> &ConfigId {
        &self.champion_id
    }

    pub fn champion_config(&self) -> &Config {
        &self.records[&self.champion_id].config
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn live_size(&self) -> usize {
        self.live.len()
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn promotions(&self) -> &[PromotionEvent] {
        &self.promotions
    }

    pub fn eliminations(&self) -> &[EliminationEvent] {
        &self.eliminations
    }

    pub fn bound_log(&self) -> &[BoundSnapshot] {
        &self.bound_log
    }

    fn epsilon_pool_size(&self) -> usize {
        self.pool.len().max(1)
    }

    fn bounds_of(&self, record: &ChallengerRecord) -> Bounds {
        let d = learner::dimension(&record.config, &self.tracker, self.params.bit_precision);
        bounds::bounds(
            &record.loss,
            d,
            self.epsilon_pool_size(),
            &self.params.bounds,
            &self.range,
        )
    }

    fn epsilon_of(&self, record: &ChallengerRecord) -> f64 {
        let d = learner::dimension(&record.config, &self.tracker, self.params.bit_precision);
        bounds::epsilon(
            &record.loss,
            d,
            self.epsilon_pool_size(),
            &self.params.bounds,
            &self.range,
        )
    }

    fn upper_of(&self, record: &ChallengerRecord) -> f64 {
        self.bounds_of(record).upper
    }

    /// The member of the live pool (plus the champion, when it holds its
    /// reserved slot) with the minimum loss upper bound. Untrained members
    /// never win unless everyone is untrained, in which case the champion
    /// does; ties go to the champion, then to the smallest config id.
    fn select_incumbent(&self) -> ConfigId {
        // champion first so that exact ties resolve to it
        let mut best: Option<(f64, &ConfigId)> = None;
        let champion = &self.records[&self.champion_id];
        if champion.live {
            best = Some((self.upper_of(champion), &self.champion_id));
        }
        for id in &self.live {
            if *id == self.champion_id {
                continue;
            }
            let upper = self.upper_of(&self.records[id]);
            if best.is_none_or(|(u, _)| upper < u) {
                best = Some((upper, id));
            }
        }
        match best {
            Some((upper, id)) if upper.is_finite() => id.clone(),
            Some((_, id)) if !self.records[&self.champion_id].live => id.clone(),
            _ => self.champion_id.clone(),
        }
    }

    fn live_learner_ids(&self) -> Vec<ConfigId> {
        let mut ids: Vec<ConfigId> = self.live.iter().cloned().collect();
        let champion = &self.records[&self.champion_id];
        if champion.live && !self.live.contains(&self.champion_id) {
            ids.push(self.champion_id.clone());
        }
        ids
    }

    fn run_scheduler(&mut self) {
        let (slots, scheduling_pool) = match self.params.mode {
            EngineMode::NoChampion => {
                let mut pool = self.pool.clone();
                pool.insert(self.champion_id.clone());
                (self.budget, pool)
            }
            _ => (self.budget - 1, self.pool.clone()),
        };
        let uppers: BTreeMap<ConfigId, f64> = self
            .live
            .iter()
            .map(|id| (id.clone(), self.upper_of(&self.records[id])))
            .collect();
        let median_guard = self.params.mode == EngineMode::Standard;
        let outcome = scheduler::schedule(
            slots,
            self.budget,
            &mut self.records,
            &mut self.live,
            &scheduling_pool,
            &self.params.scheduler,
            median_guard,
            |rec| uppers.get(rec.config.id()).copied().unwrap_or(f64::INFINITY),
            &mut self.rng,
        );
        for id in &outcome.admitted {
            let rec = self.records.get_mut(id).expect("admitted record exists");
            rec.model = Some(LearnerModel::new(
                rec.config.clone(),
                self.params.bit_precision,
            ));
        }
        if self.params.mode == EngineMode::NoChampion {
            // an evicted champion keeps only its (stale) statistics
            let champ = self.records.get_mut(&self.champion_id).expect("champion");
            champ.live = self.live.contains(&self.champion_id);
        }
    }

    /// One predict-observe-update cycle.
    pub fn step(&mut self, example: &Example) -> Result<StepRecord, LearnerError> {
        // observe X_t
        self.tracker.observe(example);

        self.run_scheduler();

        // predict before the label is read
        let incumbent = self.select_incumbent();
        let prediction = match &self.records[&incumbent].model {
            Some(model) => model.predict(&model.featurize(example)),
            None => 0.0,
        };

        // observe Y_t; the range must include it before any loss recording
        let label = example.label;
        self.range.observe(label);
        for id in self.live_learner_ids() {
            let rec = self.records.get_mut(&id).expect("live record exists");
            let Some(model) = rec.model.as_mut() else {
                continue;
            };
            let x = model.featurize(example);
            let own_prediction = model.predict(&x);
            rec.loss.record(own_prediction, label, &self.range);
            model.update(&x, label)?;
        }

        // bound values the tests below will consume
        let champion_bounds = self.bounds_of(&self.records[&self.champion_id]);
        let champion_epsilon = self.epsilon_of(&self.records[&self.champion_id]);
        let candidate_bounds: Vec<(ConfigId, Bounds)> = self
            .pool
            .iter()
            .map(|id| (id.clone(), self.bounds_of(&self.records[id])))
            .collect();
        if self.params.log_bounds {
            self.bound_log.push(BoundSnapshot {
                t: self.t,
                champion: self.champion_id.clone(),
                champion_bounds,
                champion_epsilon,
                candidates: candidate_bounds.clone(),
            });
        }

        // elimination, then at most one promotion, both against the
        // champion as of this point
        for (id, b) in &candidate_bounds {
            if bounds::worse_than(*b, champion_bounds) {
                self.pool.remove(id);
                self.records.get_mut(id).expect("record exists").eliminated = true;
                self.eliminations.push(EliminationEvent {
                    t: self.t,
                    config: id.clone(),
                });
            }
        }
        let winner = candidate_bounds
            .iter()
            .filter(|(id, _)| self.pool.contains(id))
            .filter(|(_, b)| bounds::better_than(*b, champion_bounds, champion_epsilon))
            .min_by(|a, b| f64::total_cmp(&a.1.upper, &b.1.upper).then(a.0.cmp(&b.0)))
            .map(|(id, _)| id.clone());
        if let Some(new_champion) = winner {
            self.promote(new_champion);
        }

        self.t += 1;
        let sq_err = (prediction - label) * (prediction - label);
        let clipped_abs_err = (self.range.clip(prediction) - label).abs();
        Ok(StepRecord {
            t: self.t,
            incumbent,
            prediction,
            label,
            sq_err,
            clipped_abs_err,
            champion: self.champion_id.clone(),
            pool_size: self.pool.len(),
            live_size: self.live.len(),
        })
    }

    fn promote(&mut self, new_champion: ConfigId) {
        let old_champion = self.champion_id.clone();
        self.pool.remove(&new_champion);
        self.live.remove(&new_champion);

        {
            let rec = self.records.get_mut(&new_champion).expect("record exists");
            if rec.model.is_none() {
                rec.model = Some(LearnerModel::new(
                    rec.config.clone(),
                    self.params.bit_precision,
                ));
            }
            rec.live = true;
        }

        // the old champion re-enters the candidate pool with state intact
        self.pool.insert(old_champion.clone());
        match self.params.mode {
            EngineMode::NoChampion => {
                // it keeps whatever slot it held; the new champion rejoins
                // the undifferentiated live set
                self.live.insert(new_champion.clone());
                while self.live.len() > self.budget {
                    let drop = self.live.iter().next_back().expect("nonempty").clone();
                    self.live.remove(&drop);
                    let rec = self.records.get_mut(&drop).expect("record exists");
                    rec.live = false;
                    rec.model = None;
                }
            }
            _ => {
                // promoting freed one challenger slot; the demoted champion
                // takes it when there is room, otherwise the scheduler
                // decides its fate from a non-live state
                if self.live.len() < self.budget - 1 {
                    self.live.insert(old_champion.clone());
                } else {
                    let rec = self.records.get_mut(&old_champion).expect("record exists");
                    rec.live = false;
                    rec.model = None;
                }
            }
        }

        self.champion_id = new_champion.clone();
        self.promotions.push(PromotionEvent {
            t: self.t,
            old_champion,
            new_champion,
        });

        // expand the pool with the new champion's frontier
        let champion_config = self.records[&self.champion_id].config.clone();
        for config in oracle::oracle(&champion_config, self.params.task, &self.params.oracle) {
            let id = config.id().clone();
            if self.seen.insert(id.clone()) {
                self.pool.insert(id.clone());
                self.records.insert(id, ChallengerRecord::new(config));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::{Feature, Namespace};
    use alloc::vec;

    fn three_ns_example(label: f64, a: f64, b: f64, c: f64) -> Example {
        Example::new(
            label,
            vec![
                Namespace::new("a", vec![Feature::new("x", a)]),
                Namespace::new("b", vec![Feature::new("x", b)]),
                Namespace::new("c", vec![Feature::new("x", c)]),
            ],
        )
    }

    fn params(seed: u64) -> EngineParams {
        EngineParams {
            scheduler: SchedulerParams { n_min: 5 },
            bit_precision: 12,
            seed,
            ..EngineParams::default()
        }
    }

    #[test]
    fn init_pool_size_matches_oracle() {
        let engine = Engine::new(Config::plain(["a", "b", "c"]), 5, params(0)).unwrap();
        assert_eq!(engine.pool_size(), 3);
        assert_eq!(engine.live_size(), 0);
    }

    #[test]
    fn invalid_budget_rejected() {
        assert_eq!(
            Engine::new(Config::plain(["a"]), 0, params(0)).err(),
            Some(EngineError::InvalidBudget)
        );
    }

    #[test]
    fn budget_one_keeps_live_set_empty() {
        let mut engine = Engine::new(Config::plain(["a", "b", "c"]), 1, params(0)).unwrap();
        for i in 0..50 {
            let ex = three_ns_example(i as f64 % 3.0, 1.0, 0.5, -0.5);
            engine.step(&ex).unwrap();
        }
        assert_eq!(engine.live_size(), 0);
        assert!(engine.promotions().is_empty());
    }

    #[test]
    fn large_budget_makes_all_challengers_live() {
        let mut engine = Engine::new(Config::plain(["a", "b", "c"]), 1000, params(0)).unwrap();
        engine.step(&three_ns_example(1.0, 1.0, 0.5, -0.5)).unwrap();
        assert_eq!(engine.live_size(), 3);
    }

    #[test]
    fn first_step_predicts_with_champion() {
        let mut engine = Engine::new(Config::plain(["a", "b", "c"]), 5, params(0)).unwrap();
        let rec = engine.step(&three_ns_example(2.0, 1.0, 1.0, 1.0)).unwrap();
        // everyone untrained at t=1: champion is the incumbent, zero model
        assert_eq!(&rec.incumbent, engine.champion_id());
        assert_eq!(rec.prediction, 0.0);
        assert_eq!(rec.sq_err, 4.0);
    }

    #[test]
    fn champion_stays_live_and_loss_never_resets() {
        let mut engine = Engine::new(Config::plain(["a", "b", "c"]), 5, params(3)).unwrap();
        let mut last_count = 0;
        for i in 0..200 {
            let v = (i % 7) as f64 / 7.0;
            engine.step(&three_ns_example(v, v, 1.0 - v, 0.5)).unwrap();
            if engine.promotions().is_empty() {
                let champ = &engine.records[engine.champion_id()];
                assert!(champ.live);
                assert!(champ.loss.count > last_count);
                last_count = champ.loss.count;
            }
        }
    }

    #[test]
    fn eliminated_configs_never_reenter() {
        let mut engine = Engine::new(Config::plain(["a", "b", "c"]), 5, params(1)).unwrap();
        for i in 0..2000 {
            let a = ((i * 7) % 11) as f64 / 11.0 - 0.5;
            let b = ((i * 5) % 13) as f64 / 13.0 - 0.5;
            let ex = three_ns_example(a * b, a, b, 0.1);
            engine.step(&ex).unwrap();
            for ev in engine.eliminations() {
                assert!(!engine.pool.contains(&ev.config));
                assert!(engine.records[&ev.config].eliminated);
            }
        }
    }

    #[test]
    fn step_record_counts_advance() {
        let mut engine = Engine::new(Config::plain(["a", "b", "c"]), 5, params(0)).unwrap();
        let r1 = engine.step(&three_ns_example(1.0, 1.0, 0.0, 0.0)).unwrap();
        let r2 = engine.step(&three_ns_example(0.0, 0.0, 1.0, 0.0)).unwrap();
        assert_eq!(r1.t, 1);
        assert_eq!(r2.t, 2);
        assert_eq!(engine.step_count(), 2);
    }
}
