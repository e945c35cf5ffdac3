use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use super::{resolve_point, ResolvedPoint, SweepSpec};
use crate::power::{energy_efficiency, total_power};
use crate::rng::derive_key;
use crate::uplink::{
    ergodic_average, ergodic_sumrate_points, Mode, OperatingPoint, Receiver, SumrateResult,
    TrialAverage, UplinkConfig,
};
use crate::{Error, Result};

const SWEEP_STREAM: u64 = 0x0053_5745_4550;

/// Seed shared by every grid point with `M` antennas and `K` users.
pub fn point_seed(master: u64, m: usize, k: usize) -> u64 {
    derive_key(master, &[SWEEP_STREAM, m as u64, k as u64])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    Failed(String),
}

impl PointStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PointStatus::Ok)
    }
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointStatus::Ok => f.write_str("ok"),
            PointStatus::Failed(why) => write!(f, "failed: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub receiver: Receiver,
    pub point: ResolvedPoint,
    /// Bits per second.
    pub sumrate: f64,
    /// Watts.
    pub p_tot: f64,
    /// Bits per Joule.
    pub eta: f64,
    pub trials_used: u64,
    pub trials_discarded: u64,
    /// Seconds spent on this record's share of its trial batch. Not deterministic.
    pub wall_time: f64,
    pub status: PointStatus,
}

impl SweepRecord {
    fn failed(receiver: Receiver, point: ResolvedPoint, why: String) -> Self {
        Self {
            receiver,
            point,
            sumrate: f64::NAN,
            p_tot: f64::NAN,
            eta: f64::NAN,
            trials_used: 0,
            trials_discarded: 0,
            wall_time: 0.0,
            status: PointStatus::Failed(why),
        }
    }
}

/// Uplink configuration of one resolved grid point.
pub fn point_config(spec: &SweepSpec, p: &ResolvedPoint, receiver: Receiver) -> UplinkConfig {
    let mut cfg = UplinkConfig::new(p.m, p.k, p.t)
        .with_tau(p.tau)
        .with_bits(p.b)
        .with_receiver(receiver)
        .with_mode(spec.mode)
        .with_backoff(spec.backoff);
    cfg.p_u = spec.p_u;
    cfg = cfg.with_snr_db(p.snr_db);
    cfg.bandwidth = spec.bandwidth;
    cfg.pqn_noise = spec.pqn_noise;
    cfg.hardware_symbols = spec.hardware_symbols;
    cfg
}

/// Trial batch: everything sharing `(M, K, tau)` in PQN mode, or a single point in hardware
/// mode.
struct Task {
    base: UplinkConfig,
    ops: Vec<OperatingPoint>,
}

type GroupKey = (usize, usize, usize, Option<(u32, u64, Receiver)>);

fn op_key(op: &OperatingPoint) -> (u32, u64, Receiver) {
    (op.b, op.p_n.to_bits(), op.receiver)
}

/// Runs every grid point for every receiver on a pool of `workers` threads.
///
/// Records come out in lexicographic grid order with receivers innermost. The numbers do not
/// depend on `workers`. Points whose derived configuration is invalid, or whose trials were
/// all singular, come back as failed records; the rest of the sweep still runs.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    if workers == 0 {
        return Err(Error::invalid("worker count must be >= 1"));
    }
    if spec.grid_len() == 0 {
        return Err(Error::invalid("sweep grid is empty"));
    }

    // Resolve every job, sort valid ones into trial batches.
    enum Job {
        Bad(SweepRecord),
        Run {
            receiver: Receiver,
            point: ResolvedPoint,
            group: GroupKey,
            op: OperatingPoint,
        },
    }
    let mut jobs = Vec::new();
    let mut tasks: BTreeMap<GroupKey, Task> = BTreeMap::new();
    for values in spec.grid() {
        let resolved = resolve_point(&values);
        for &receiver in &spec.receivers {
            let point = match &resolved {
                Ok(p) => *p,
                Err((p, why)) => {
                    jobs.push(Job::Bad(SweepRecord::failed(receiver, *p, why.clone())));
                    continue;
                }
            };
            let cfg = point_config(spec, &point, receiver);
            let problems = cfg.violations();
            if !problems.is_empty() {
                jobs.push(Job::Bad(SweepRecord::failed(
                    receiver,
                    point,
                    problems.join("; "),
                )));
                continue;
            }
            let op = OperatingPoint::from_config(&cfg);
            let group = match spec.mode {
                Mode::Pqn => (point.m, point.k, point.tau, None),
                Mode::Hardware => (point.m, point.k, point.tau, Some(op_key(&op))),
            };
            let task = tasks.entry(group).or_insert_with(|| Task {
                base: cfg.clone(),
                ops: Vec::new(),
            });
            if !task.ops.iter().any(|o| op_key(o) == op_key(&op)) {
                task.ops.push(op);
            }
            jobs.push(Job::Run {
                receiver,
                point,
                group,
                op,
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::SimulationFailure(format!("cannot start worker pool: {e}")))?;
    let task_list: Vec<(&GroupKey, &Task)> = tasks.iter().collect();
    let outcomes: Vec<(Vec<Result<TrialAverage>>, f64)> = pool.install(|| {
        task_list
            .par_iter()
            .map(|(key, task)| {
                let start = Instant::now();
                let seed = point_seed(spec.seed, key.0, key.1);
                let results = match spec.mode {
                    Mode::Pqn => {
                        match ergodic_sumrate_points(&task.base, &task.ops, spec.n_trials, seed) {
                            Ok(r) => r,
                            Err(e) => {
                                let why = e.to_string();
                                let fail = || Err(Error::SimulationFailure(why.clone()));
                                task.ops.iter().map(|_| fail()).collect()
                            }
                        }
                    }
                    // one point per task; its base is that point's own configuration
                    Mode::Hardware => vec![ergodic_average(&task.base, spec.n_trials, seed)],
                };
                let elapsed = start.elapsed().as_secs_f64() / task.ops.len() as f64;
                (results, elapsed)
            })
            .collect()
    });
    let index: BTreeMap<&GroupKey, usize> = task_list
        .iter()
        .enumerate()
        .map(|(i, (k, _))| (*k, i))
        .collect();

    let power = spec.effective_power();
    let records = jobs
        .into_iter()
        .map(|job| match job {
            Job::Bad(r) => r,
            Job::Run {
                receiver,
                point,
                group,
                op,
            } => {
                let ti = index[&group];
                let slot = task_list[ti]
                    .1
                    .ops
                    .iter()
                    .position(|o| op_key(o) == op_key(&op))
                    .expect("operating point registered with its task");
                let (results, elapsed) = &outcomes[ti];
                finish_record(spec, &power, receiver, point, &results[slot], *elapsed)
            }
        })
        .collect();
    Ok(records)
}

fn finish_record(
    spec: &SweepSpec,
    power: &crate::power::AdcPowerParams,
    receiver: Receiver,
    point: ResolvedPoint,
    avg: &Result<TrialAverage>,
    wall_time: f64,
) -> SweepRecord {
    let avg = match avg {
        Ok(a) => a.clone(),
        Err(e) => {
            let mut r = SweepRecord::failed(receiver, point, e.to_string());
            r.trials_discarded = spec.n_trials;
            return r;
        }
    };
    let rate = SumrateResult::from_average(avg, spec.bandwidth, point.t, point.tau);
    let eff = total_power(point.m, point.b, point.alpha, power, spec.b_ref)
        .and_then(|budget| energy_efficiency(rate.sumrate, &budget));
    match eff {
        Ok(e) => SweepRecord {
            receiver,
            point,
            sumrate: e.sumrate,
            p_tot: e.p_tot,
            eta: e.eta,
            trials_used: rate.trials_used,
            trials_discarded: rate.trials_discarded,
            wall_time,
            status: PointStatus::Ok,
        },
        Err(err) => SweepRecord::failed(receiver, point, err.to_string()),
    }
}
