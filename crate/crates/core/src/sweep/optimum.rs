use std::cmp::Ordering;
use std::fmt;

use super::SweepRecord;
use crate::uplink::Receiver;
use crate::{Error, Result};

/// Record columns usable as grouping keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Receiver,
    B,
    M,
    K,
    T,
    Tau,
    SnrDb,
    Alpha,
    KOverM,
    KOverT,
    /// Resolved `tau / T`.
    TauOverT,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::Receiver => "receiver",
            Column::B => "b",
            Column::M => "M",
            Column::K => "K",
            Column::T => "T",
            Column::Tau => "tau",
            Column::SnrDb => "snr_db",
            Column::Alpha => "alpha",
            Column::KOverM => "K_over_M",
            Column::KOverT => "K_over_T",
            Column::TauOverT => "tau_over_T",
        }
    }

    /// Numeric value; receivers map to 0 (MRC) and 1 (ZF).
    pub fn value(self, r: &SweepRecord) -> f64 {
        let p = &r.point;
        match self {
            Column::Receiver => Self::receiver_code(r.receiver),
            Column::B => f64::from(p.b),
            Column::M => p.m as f64,
            Column::K => p.k as f64,
            Column::T => p.t as f64,
            Column::Tau => p.tau as f64,
            Column::SnrDb => p.snr_db,
            Column::Alpha => p.alpha,
            Column::KOverM => p.k_over_m,
            Column::KOverT => p.k_over_t,
            Column::TauOverT => p.tau_over_t,
        }
    }

    pub fn receiver_code(r: Receiver) -> f64 {
        match r {
            Receiver::Mrc => 0.0,
            Receiver::Zf => 1.0,
        }
    }

    pub fn format(self, value: f64) -> String {
        match self {
            Column::Receiver if value == 0.0 => "mrc".into(),
            Column::Receiver => "zf".into(),
            _ => value.to_string(),
        }
    }

    /// Every grouping column except `excluded`, used when the caller wants one group per
    /// slice of the grid.
    pub fn all_except(excluded: &[Column]) -> Vec<Column> {
        [
            Column::Receiver,
            Column::M,
            Column::KOverM,
            Column::KOverT,
            Column::SnrDb,
            Column::Alpha,
            Column::B,
            Column::TauOverT,
        ]
        .into_iter()
        .filter(|c| !excluded.contains(c))
        .collect()
    }
}

/// Optimum of `eta` within one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupOptimum {
    pub group: Vec<(Column, f64)>,
    /// `b*` or `(tau/T)*`.
    pub argmax: f64,
    pub eta: f64,
}

impl GroupOptimum {
    pub fn get(&self, col: Column) -> Option<f64> {
        self.group.iter().find(|(c, _)| *c == col).map(|(_, v)| *v)
    }
}

impl fmt::Display for GroupOptimum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, v) in &self.group {
            write!(f, "{}={} ", c.name(), c.format(*v))?;
        }
        write!(f, "-> {} (eta {:.6e})", self.argmax, self.eta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFactor {
    pub group: Vec<(Column, f64)>,
    pub b_star: u32,
    /// `eta(b*) / eta(b = 1)`.
    pub factor: f64,
}

type Groups<'a> = Vec<(Vec<f64>, Vec<&'a SweepRecord>)>;

/// Groups records by `keys`, in order of first appearance.
fn group<'a>(records: &'a [SweepRecord], keys: &[Column]) -> Result<Groups<'a>> {
    if records.is_empty() {
        return Err(Error::invalid("no records to group"));
    }
    let mut groups: Groups<'a> = Vec::new();
    for r in records {
        let key: Vec<f64> = keys.iter().map(|c| c.value(r)).collect();
        match groups.iter_mut().find(|(k, _)| {
            k.iter()
                .zip(&key)
                .all(|(a, b)| a.total_cmp(b) == Ordering::Equal)
        }) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    for (key, members) in &mut groups {
        members.retain(|r| r.status.is_ok() && r.eta.is_finite());
        if members.is_empty() {
            return Err(Error::InvalidState(format!(
                "empty group {}",
                describe(keys, key)
            )));
        }
    }
    Ok(groups)
}

fn describe(keys: &[Column], values: &[f64]) -> String {
    let parts: Vec<String> = keys
        .iter()
        .zip(values)
        .map(|(c, v)| format!("{}={}", c.name(), c.format(*v)))
        .collect();
    format!("({})", parts.join(", "))
}

/// Arg max of `eta` over `arg`, ties resolved toward the smaller argument.
fn argmax<'a>(members: &[&'a SweepRecord], arg: Column) -> &'a SweepRecord {
    let mut sorted = members.to_vec();
    sorted.sort_by(|a, b| arg.value(a).total_cmp(&arg.value(b)));
    let mut best = sorted[0];
    for r in &sorted[1..] {
        if r.eta > best.eta {
            best = r;
        }
    }
    best
}

fn optimise(records: &[SweepRecord], keys: &[Column], arg: Column) -> Result<Vec<GroupOptimum>> {
    Ok(group(records, keys)?
        .into_iter()
        .map(|(key, members)| {
            let best = argmax(&members, arg);
            GroupOptimum {
                group: keys.iter().copied().zip(key).collect(),
                argmax: arg.value(best),
                eta: best.eta,
            }
        })
        .collect())
}

/// `b*` per group. Equal `eta` resolves to the smaller resolution.
pub fn find_optimal_b(records: &[SweepRecord], group_keys: &[Column]) -> Result<Vec<GroupOptimum>> {
    optimise(records, group_keys, Column::B)
}

/// `(tau/T)*` per group, using the resolved training fraction. Equal `eta` resolves to
/// shorter training.
pub fn find_optimal_training(
    records: &[SweepRecord],
    group_keys: &[Column],
) -> Result<Vec<GroupOptimum>> {
    optimise(records, group_keys, Column::TauOverT)
}

/// `eta(b*) / eta(1)` per group. Fails if a group has no successful `b = 1` record.
pub fn degradation_factor(
    records: &[SweepRecord],
    group_keys: &[Column],
) -> Result<Vec<GroupFactor>> {
    group(records, group_keys)?
        .into_iter()
        .map(|(key, members)| {
            let best = argmax(&members, Column::B);
            let one_bit = members.iter().find(|r| r.point.b == 1).ok_or_else(|| {
                Error::InvalidState(format!(
                    "missing b = 1 point in group {}",
                    describe(group_keys, &key)
                ))
            })?;
            let factor = if best.eta == one_bit.eta {
                1.0
            } else {
                best.eta / one_bit.eta
            };
            Ok(GroupFactor {
                group: group_keys.iter().copied().zip(key).collect(),
                b_star: best.point.b,
                factor,
            })
        })
        .collect()
}
