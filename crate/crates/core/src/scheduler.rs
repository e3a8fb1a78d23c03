//! Live-challenger scheduling: doubling resource leases, median-based
//! eviction of underperformers, and starvation-free admission.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::bounds::LossAccumulator;
use crate::config::{Config, ConfigId};
use crate::learner::LearnerModel;

#[derive(Clone, Copy, Debug)]
pub struct SchedulerParams {
    /// Minimum resource lease granted on first admission.
    pub n_min: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchedulerError {
    EmptyCandidateSet,
}

impl fmt::Display for SchedulerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerError::EmptyCandidateSet => f.write_str("no candidates available to choose"),
        }
    }
}

/// Per-configuration runtime state.
///
/// A record's model exists only while it is live; eviction drops the model
/// irrecoverably and readmission restarts the loss accumulator from zero.
/// The lease survives eviction as scheduling metadata.
#[derive(Clone, Debug)]
pub struct ChallengerRecord {
    pub config: Config,
    pub model: Option<LearnerModel>,
    pub loss: LossAccumulator,
    pub lease: Option<u64>,
    pub live: bool,
    pub eliminated: bool,
}

impl ChallengerRecord {
    pub fn new(config: Config) -> Self {
        ChallengerRecord {
            config,
            model: None,
            loss: LossAccumulator::new(),
            lease: None,
            live: false,
            eliminated: false,
        }
    }

    /// Samples consumed in the current live spell.
    pub fn consumed(&self) -> u64 {
        self.loss.count
    }
}

/// What one scheduling call did. Admitted records have live state reset and
/// no model yet; the caller instantiates fresh learners for them.
#[derive(Clone, Debug, Default)]
pub struct ScheduleOutcome {
    pub admitted: Vec<ConfigId>,
    pub evicted: Vec<ConfigId>,
}

/// Median with the lower of the two middle values on even sizes, so that a
/// strict `>` test marks exactly the worse half.
pub fn median_upper(values: &[f64]) -> Result<f64, SchedulerError> {
    if values.is_empty() {
        return Err(SchedulerError::EmptyCandidateSet);
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// Picks the next candidate to go live: a uniformly random record whose
/// lease was never set (granting it `n_min`), otherwise the record with the
/// minimum lease, ties broken by smallest config id.
pub fn choose<R: RngCore>(
    records: &mut BTreeMap<ConfigId, ChallengerRecord>,
    candidates: &BTreeSet<ConfigId>,
    n_min: u64,
    rng: &mut R,
) -> Result<ConfigId, SchedulerError> {
    let eligible: Vec<&ConfigId> = candidates
        .iter()
        .filter(|id| records.get(*id).is_some_and(|r| !r.eliminated))
        .collect();
    if eligible.is_empty() {
        return Err(SchedulerError::EmptyCandidateSet);
    }
    let pending: Vec<&ConfigId> = eligible
        .iter()
        .copied()
        .filter(|id| records[*id].lease.is_none())
        .collect();
    let chosen = if !pending.is_empty() {
        let idx = (rng.next_u64() % pending.len() as u64) as usize;
        let id = pending[idx].clone();
        records.get_mut(&id).expect("candidate exists").lease = Some(n_min);
        id
    } else {
        eligible
            .into_iter()
            .min_by_key(|id| (records[*id].lease.expect("no pending left"), (*id).clone()))
            .expect("eligible nonempty")
            .clone()
    };
    Ok(chosen)
}

/// One scheduling pass over the live set.
///
/// In order: drop records eliminated from the pool; double the lease of
/// every live record that consumed it, evicting those strictly above the
/// live pool's median upper bound (when the pool exceeds the budget); then
/// refill up to `slots` live records via [`choose`]. With `median_guard`
/// off, every lease-expiring record is evicted when the pool exceeds the
/// budget.
///
/// `upper` supplies each record's loss upper bound; it is evaluated on the
/// state records have before any admission of this call.
#[allow(clippy::too_many_arguments)]
pub fn schedule<F, R>(
    slots: usize,
    budget: usize,
    records: &mut BTreeMap<ConfigId, ChallengerRecord>,
    live: &mut BTreeSet<ConfigId>,
    pool: &BTreeSet<ConfigId>,
    params: &SchedulerParams,
    median_guard: bool,
    upper: F,
    rng: &mut R,
) -> ScheduleOutcome
where
    F: Fn(&ChallengerRecord) -> f64,
    R: RngCore,
{
    let mut outcome = ScheduleOutcome::default();
    let evict = |records: &mut BTreeMap<ConfigId, ChallengerRecord>,
                     live: &mut BTreeSet<ConfigId>,
                     out: &mut ScheduleOutcome,
                     id: &ConfigId| {
        live.remove(id);
        if let Some(rec) = records.get_mut(id) {
            rec.live = false;
            rec.model = None;
        }
        out.evicted.push(id.clone());
    };

    // drop records whose config left the pool (eliminated)
    for id in live.clone() {
        if !pool.contains(&id) {
            evict(records, live, &mut outcome, &id);
        }
    }

    // lease expiry: double, then consider eviction against the live median
    let uppers: Vec<f64> = live.iter().map(|id| upper(&records[id])).collect();
    let mut expiring: Vec<(ConfigId, f64)> = Vec::new();
    for id in live.clone() {
        let rec = records.get_mut(&id).expect("live record exists");
        let lease = rec.lease.expect("live record has a lease");
        if rec.consumed() >= lease {
            rec.lease = Some(lease * 2);
            expiring.push((id.clone(), upper(rec)));
        }
    }
    if pool.len() > budget && !expiring.is_empty() {
        if median_guard {
            let median = median_upper(&uppers).expect("live nonempty when expiring");
            let mut eligible: Vec<(ConfigId, f64)> = expiring
                .iter()
                .filter(|(_, u)| *u > median)
                .cloned()
                .collect();
            // worst first, capped so at most half of the expiring set leaves
            eligible.sort_by(|a, b| f64::total_cmp(&b.1, &a.1).then(a.0.cmp(&b.0)));
            let cap = expiring.len().div_ceil(2);
            for (id, _) in eligible.into_iter().take(cap) {
                evict(records, live, &mut outcome, &id);
            }
        } else {
            for (id, _) in &expiring {
                evict(records, live, &mut outcome, id);
            }
        }
    }

    // refill: admit until the slots are full or no candidate remains
    while live.len() < slots {
        let candidates: BTreeSet<ConfigId> = pool.difference(live).cloned().collect();
        let Ok(id) = choose(records, &candidates, params.n_min, rng) else {
            break;
        };
        let rec = records.get_mut(&id).expect("chosen record exists");
        rec.live = true;
        rec.loss.reset();
        rec.model = None;
        live.insert(id.clone());
        outcome.admitted.push(id);
    }

    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(lr: f64) -> (ConfigId, ChallengerRecord) {
        let config = Config::plain(["a", "b", "c"]).with_learning_rate(lr).unwrap();
        (config.id().clone(), ChallengerRecord::new(config))
    }

    fn setup(n: usize) -> (BTreeMap<ConfigId, ChallengerRecord>, BTreeSet<ConfigId>) {
        let mut records = BTreeMap::new();
        let mut pool = BTreeSet::new();
        for i in 0..n {
            let (id, rec) = record(0.1 + i as f64 * 0.1);
            pool.insert(id.clone());
            records.insert(id, rec);
        }
        (records, pool)
    }

    #[test]
    fn median_rules() {
        assert_eq!(median_upper(&[0.1, 0.5, 0.9]).unwrap(), 0.5);
        assert_eq!(median_upper(&[0.1, 0.5, 0.7, 0.9]).unwrap(), 0.5);
        assert_eq!(median_upper(&[0.4]).unwrap(), 0.4);
        assert!(median_upper(&[]).is_err());
    }

    #[test]
    fn choose_prefers_pending_and_sets_n_min() {
        let (mut records, pool) = setup(3);
        let some_id = pool.iter().next().unwrap().clone();
        records.get_mut(&some_id).unwrap().lease = Some(40);
        let candidates: BTreeSet<ConfigId> = pool.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let chosen = choose(&mut records, &candidates, 5, &mut rng).unwrap();
        assert_ne!(chosen, some_id);
        assert_eq!(records[&chosen].lease, Some(5));
    }

    #[test]
    fn choose_min_lease_when_no_pending() {
        let (mut records, pool) = setup(3);
        let leases = [40u64, 10, 20];
        for (id, lease) in pool.iter().zip(leases) {
            records.get_mut(id).unwrap().lease = Some(lease);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let chosen = choose(&mut records, &pool, 5, &mut rng).unwrap();
        assert_eq!(records[&chosen].lease, Some(10));
    }

    #[test]
    fn choose_ties_break_by_id() {
        let (mut records, pool) = setup(2);
        for id in &pool {
            records.get_mut(id).unwrap().lease = Some(10);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let chosen = choose(&mut records, &pool, 5, &mut rng).unwrap();
        assert_eq!(&chosen, pool.iter().next().unwrap());
    }

    #[test]
    fn choose_empty_errors() {
        let (mut records, _) = setup(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            choose(&mut records, &BTreeSet::new(), 5, &mut rng),
            Err(SchedulerError::EmptyCandidateSet)
        );
    }

    #[test]
    fn schedule_fills_slots_and_respects_cap() {
        let (mut records, pool) = setup(6);
        let mut live = BTreeSet::new();
        let params = SchedulerParams { n_min: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = schedule(4, 5, &mut records, &mut live, &pool, &params, true, |_| 0.0, &mut rng);
        assert_eq!(live.len(), 4);
        assert_eq!(out.admitted.len(), 4);
        for id in &live {
            assert!(records[id].live);
            assert_eq!(records[id].consumed(), 0);
        }
    }

    #[test]
    fn small_pool_never_evicts() {
        // |S| <= b: expiring records double their lease but stay live
        let (mut records, pool) = setup(3);
        let mut live = BTreeSet::new();
        let params = SchedulerParams { n_min: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        schedule(4, 5, &mut records, &mut live, &pool, &params, true, |_| 0.0, &mut rng);
        for id in live.clone() {
            let rec = records.get_mut(&id).unwrap();
            rec.loss.count = 5;
        }
        let out = schedule(4, 5, &mut records, &mut live, &pool, &params, true, |_| 1.0, &mut rng);
        assert!(out.evicted.is_empty());
        assert_eq!(live.len(), 3);
        for id in &live {
            assert_eq!(records[id].lease, Some(10));
        }
    }

    #[test]
    fn expiring_above_median_is_evicted() {
        let (mut records, pool) = setup(6);
        let mut live = BTreeSet::new();
        let params = SchedulerParams { n_min: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        schedule(4, 5, &mut records, &mut live, &pool, &params, true, |_| 0.0, &mut rng);
        // make every live record expire; uppers ordered by learning rate
        for id in live.clone() {
            records.get_mut(&id).unwrap().loss.count = 5;
        }
        let out = schedule(
            4,
            5,
            &mut records,
            &mut live,
            &pool,
            &params,
            true,
            |r| r.config.learning_rate(),
            &mut rng,
        );
        // 4 expiring, lower median splits them: exactly the worse half leaves
        assert_eq!(out.evicted.len(), 2);
        // slots refilled afterwards
        assert_eq!(live.len(), 4);
    }

    #[test]
    fn aggressive_mode_evicts_all_expiring() {
        let (mut records, pool) = setup(6);
        let mut live = BTreeSet::new();
        let params = SchedulerParams { n_min: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        schedule(4, 5, &mut records, &mut live, &pool, &params, false, |_| 0.0, &mut rng);
        let before: BTreeSet<ConfigId> = live.clone();
        for id in live.clone() {
            records.get_mut(&id).unwrap().loss.count = 5;
        }
        let out = schedule(
            4,
            5,
            &mut records,
            &mut live,
            &pool,
            &params,
            false,
            |r| r.config.learning_rate(),
            &mut rng,
        );
        assert_eq!(out.evicted.len(), before.len());
    }

    #[test]
    fn eliminated_records_leave_live_set() {
        let (mut records, mut pool) = setup(6);
        let mut live = BTreeSet::new();
        let params = SchedulerParams { n_min: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        schedule(4, 5, &mut records, &mut live, &pool, &params, true, |_| 0.0, &mut rng);
        let victim = live.iter().next().unwrap().clone();
        records.get_mut(&victim).unwrap().eliminated = true;
        pool.remove(&victim);
        schedule(4, 5, &mut records, &mut live, &pool, &params, true, |_| 0.0, &mut rng);
        assert!(!live.contains(&victim));
        assert!(!records[&victim].live);
        assert!(records[&victim].model.is_none());
    }

    #[test]
    fn readmission_restarts_loss_but_keeps_lease() {
        let (mut records, pool) = setup(2);
        let mut live = BTreeSet::new();
        let params = SchedulerParams { n_min: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // one slot: admit one, force expiry+eviction, readmit the other, etc.
        schedule(1, 1, &mut records, &mut live, &pool, &params, true, |_| 0.0, &mut rng);
        let first = live.iter().next().unwrap().clone();
        {
            let rec = records.get_mut(&first).unwrap();
            rec.loss.count = 5;
            rec.loss.sum_clipped_abs_error = 3.0;
        }
        schedule(1, 1, &mut records, &mut live, &pool, &params, true, |_| 1.0, &mut rng);
        // singleton median: never strictly above itself, stays live
        assert!(live.contains(&first));
        assert_eq!(records[&first].lease, Some(10));
    }
}
