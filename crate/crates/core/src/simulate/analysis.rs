use std::collections::BTreeMap;

use serde::Serialize;

use super::TrajectoryRecord;
use crate::actions::{Action, ActionPoint};
use crate::chains::GreenEstimate;
use crate::error::{Error, Result};
use crate::schreier::savchuk::EndClass;

/// Anchor of the component the trajectory stabilized in at exhaustion level
/// `level`, or `None` (unresolved).
pub fn classify_end(record: &TrajectoryRecord, level: usize) -> Option<&str> {
    let trace = record.cuts.get(level)?;
    if trace.stabilized {
        trace.final_anchor.as_deref()
    } else {
        None
    }
}

/// Kind of end of the comb Ψ reached through the component anchored at
/// `anchor`: a right or left ray at some level, or one half of the spine.
pub fn comb_end_kind(anchor: &str) -> Option<&'static str> {
    match Action::Psi.parse_point(anchor).ok()? {
        ActionPoint::Psi(v) if v.offset > 0 => Some("right-ray"),
        ActionPoint::Psi(v) if v.offset < 0 => Some("left-ray"),
        ActionPoint::Psi(v) if v.level > 0 => Some("spine-up"),
        ActionPoint::Psi(_) => Some("spine-down"),
        _ => None,
    }
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassEstimate {
    pub name: String,
    pub count: u64,
    pub proportion: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitMeasureEstimate {
    pub classes: Vec<ClassEstimate>,
    pub unresolved: u64,
    pub total: u64,
    /// At least two classes with a positive Wilson lower bound.
    pub nontrivial: bool,
}

impl ExitMeasureEstimate {
    pub fn class(&self, name: &str) -> Option<&ClassEstimate> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn unresolved_fraction(&self) -> f64 {
        self.unresolved as f64 / self.total as f64
    }
}

fn estimate<'a, F>(records: &'a [TrajectoryRecord], classifier: F, seed: &[&str]) -> ExitMeasureEstimate
where
    F: Fn(&'a TrajectoryRecord) -> Option<String>,
{
    let mut counts: BTreeMap<String, u64> = seed.iter().map(|s| (s.to_string(), 0)).collect();
    let mut unresolved = 0;
    for r in records {
        match classifier(r) {
            Some(c) => *counts.entry(c).or_default() += 1,
            None => unresolved += 1,
        }
    }
    let n = records.len() as u64;
    let classes: Vec<ClassEstimate> = counts
        .into_iter()
        .map(|(name, count)| {
            let (lo, hi) = wilson_interval(count, n, 1.96);
            ClassEstimate {
                name,
                count,
                proportion: count as f64 / n as f64,
                lo,
                hi,
            }
        })
        .collect();
    let nontrivial = classes.iter().filter(|c| c.lo > 0.0).count() >= 2;
    ExitMeasureEstimate {
        classes,
        unresolved,
        total: n,
        nontrivial,
    }
}

/// Empirical distribution of `classifier` over the records; `None` counts as
/// unresolved.
pub fn exit_measure<'a, F>(records: &'a [TrajectoryRecord], classifier: F) -> ExitMeasureEstimate
where
    F: Fn(&'a TrajectoryRecord) -> Option<String>,
{
    estimate(records, classifier, &[])
}

/// Exit measure over the five Savchuk classes, all listed even when empty.
pub fn thompson_exit_measure(records: &[TrajectoryRecord]) -> ExitMeasureEstimate {
    let names = EndClass::RESOLVED.map(|c| c.name());
    estimate(
        records,
        |r| match r.end_class {
            Some(EndClass::Unresolved) | None => None,
            Some(c) => Some(c.name().to_string()),
        },
        &names,
    )
}

/// `Ĝ(𝔬,𝔬)` from the visit counts of the records: one for time 0 plus the
/// returns. Cut at the record horizon, so it is a lower bound.
pub fn green_from_returns(records: &[TrajectoryRecord]) -> Result<GreenEstimate> {
    if records.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = records.len() as f64;
    let visits: Vec<f64> = records.iter().map(|r| 1.0 + r.returns as f64).collect();
    let mean = visits.iter().sum::<f64>() / n;
    let var = if records.len() > 1 {
        visits.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std_err = (var / n).sqrt();
    Ok(GreenEstimate {
        mean,
        std_err,
        lo: mean - 1.96 * std_err,
        hi: mean + 1.96 * std_err,
        trials: records.len() as u64,
        horizon: Some(records[0].steps),
        lower_bound: true,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentChangeStats {
    pub cut: String,
    pub exited: u64,
    pub mean: f64,
    pub std_err: f64,
    /// `Ĝ(𝔬,𝔬)·|K|·‖μ‖₁`.
    pub bound: f64,
    pub within: bool,
}

/// Mean number of component changes after the first exit from cut `level`,
/// against the bound `Ĝ^(p̌)(𝔬,𝔬)·|K|·‖μ‖₁`.
pub fn component_change_stats(
    records: &[TrajectoryRecord],
    level: usize,
    green: &GreenEstimate,
    cut_size: usize,
    first_moment: f64,
) -> Result<ComponentChangeStats> {
    let changes: Vec<f64> = records
        .iter()
        .filter_map(|r| r.cuts.get(level))
        .filter(|t| t.first_exit.is_some())
        .map(|t| t.changes_after_first_exit as f64)
        .collect();
    if changes.is_empty() {
        return Err(Error::NoExit);
    }
    let n = changes.len() as f64;
    let mean = changes.iter().sum::<f64>() / n;
    let var = if changes.len() > 1 {
        changes.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std_err = (var / n).sqrt();
    let bound = green.mean * cut_size as f64 * first_moment;
    Ok(ComponentChangeStats {
        cut: records[0].cuts[level].cut.clone(),
        exited: changes.len() as u64,
        mean,
        std_err,
        bound,
        within: mean <= bound + 3.0 * std_err,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignFlipProfile {
    pub steps: Vec<u64>,
    pub median: Vec<f64>,
    pub mean: Vec<f64>,
    pub median_distance: Vec<f64>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Medians and means of cumulative sign changes at each checkpoint.
pub fn sign_flip_profile(records: &[TrajectoryRecord]) -> Result<SignFlipProfile> {
    let first = records.first().ok_or(Error::EmptySet)?;
    if records
        .iter()
        .any(|r| r.checkpoints.iter().any(|c| c.sign_flips.is_none()))
    {
        return Err(Error::NotZChain);
    }
    let steps: Vec<u64> = first.checkpoints.iter().map(|c| c.step).collect();
    let column = |i: usize, f: &dyn Fn(&super::Checkpoint) -> f64| -> Vec<f64> {
        records.iter().map(|r| f(&r.checkpoints[i])).collect()
    };
    let flips = |c: &super::Checkpoint| c.sign_flips.unwrap_or(0) as f64;
    let dist = |c: &super::Checkpoint| c.distance as f64;
    let n = records.len() as f64;
    Ok(SignFlipProfile {
        median: (0..steps.len()).map(|i| median(column(i, &flips))).collect(),
        mean: (0..steps.len())
            .map(|i| column(i, &flips).iter().sum::<f64>() / n)
            .collect(),
        median_distance: (0..steps.len()).map(|i| median(column(i, &dist))).collect(),
        steps,
    })
}

/// Fraction of trajectories that visit the start again after each time `t`.
pub fn revisit_fractions(records: &[TrajectoryRecord], times: &[u64]) -> Vec<f64> {
    let n = records.len().max(1) as f64;
    times
        .iter()
        .map(|&t| records.iter().filter(|r| r.last_return.is_some_and(|l| l > t)).count() as f64 / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        assert!(wilson_interval(1, 1000, 1.96).0 > 0.0);
    }

    #[test]
    fn medians() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
