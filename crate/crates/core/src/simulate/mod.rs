//! The walk engine. Trajectories are independent: trajectory `i` draws from
//! ChaCha8 stream `i` under the key derived from the master seed, so records
//! do not depend on how the batch is scheduled.

mod analysis;

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{Action, ActionPoint, Letter, PlaneVertex};
use crate::chains::{ChainParams, CounterexampleChain};
use crate::error::{Error, Result};
use crate::measures::GroupMeasure;
use crate::par::{map_indexed, map_indexed_sequential, task_rng};
use crate::schreier::savchuk::EndClass;
use crate::schreier::{ComponentIndex, CutSet, SchreierGraph};

pub use analysis::{
    classify_end, comb_end_kind, component_change_stats, exit_measure, green_from_returns, revisit_fractions,
    sign_flip_profile, thompson_exit_measure, wilson_interval, ClassEstimate, ComponentChangeStats,
    ExitMeasureEstimate, SignFlipProfile,
};

/// What is being walked on.
#[derive(Clone, Debug)]
pub enum Target {
    /// The walk `x ← x.h` with increments `h ~ μ`, on the orbit of `start`.
    Induced { measure: GroupMeasure, start: ActionPoint },
    /// The chain on Z with the given parameters.
    Chain { params: ChainParams, start: i64 },
}

impl Target {
    pub fn start_name(&self) -> String {
        match self {
            Target::Induced { start, .. } => start.to_string(),
            Target::Chain { start, .. } => start.to_string(),
        }
    }
}

/// One level of an exhaustion: a finite set whose complement is watched.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CutSpec {
    /// Ball of the given radius around the start.
    Ball { radius: u64 },
    /// Explicit vertices.
    Points { points: Vec<String> },
}

impl CutSpec {
    /// `{5/8, 3/4}` in the Thompson action.
    pub fn savchuk() -> Self {
        CutSpec::Points {
            points: vec!["5/8".into(), "3/4".into()],
        }
    }
}

#[derive(Clone, Debug)]
pub struct WalkConfig {
    pub target: Target,
    pub steps: u64,
    pub trajectories: u64,
    pub seed: u64,
    pub cuts: Vec<CutSpec>,
    pub checkpoints: Vec<u64>,
}

/// Powers of two below `steps`, then `steps`.
pub fn default_checkpoints(steps: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |c| c.checked_mul(2))
        .take_while(|&c| c < steps)
        .collect();
    out.push(steps);
    out
}

impl WalkConfig {
    pub fn new(target: Target, steps: u64, trajectories: u64, seed: u64) -> Self {
        Self {
            target,
            steps,
            trajectories,
            seed,
            cuts: Vec::new(),
            checkpoints: default_checkpoints(steps),
        }
    }

    pub fn with_cuts(mut self, cuts: Vec<CutSpec>) -> Self {
        self.cuts = cuts;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    /// The same configuration driven by the inverse measure `μ̌`.
    pub fn inverted(&self) -> Self {
        let mut out = self.clone();
        if let Target::Induced { measure, .. } = &mut out.target {
            *measure = measure.inverse();
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.steps == 0 || self.trajectories == 0 {
            return bad("steps and trajectories must be at least 1".into());
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("checkpoints must be strictly increasing".into());
        }
        if self.checkpoints.iter().any(|&c| c == 0 || c > self.steps) {
            return bad(format!("checkpoints must lie in 1..={}", self.steps));
        }
        match &self.target {
            Target::Induced { measure, start } => measure.check_action(start.action())?,
            Target::Chain { params, .. } => {
                params.validate()?;
                if self.cuts.iter().any(|c| !matches!(c, CutSpec::Ball { .. })) {
                    return bad("chains on Z only take ball cuts".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    pub step: u64,
    pub position: String,
    pub distance: u64,
    /// Component anchor for the first cut; `None` inside the cut.
    pub anchor: Option<String>,
    pub sign_flips: Option<u64>,
}

/// What one trajectory did relative to one cut set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutTrace {
    pub cut: String,
    /// Times at which the walk entered a component of the complement, either
    /// coming out of the cut or jumping over it, with that component's anchor.
    pub crossings: Vec<(u64, String)>,
    pub first_exit: Option<u64>,
    /// Crossings into a different component than the previous one.
    pub changes_after_first_exit: u64,
    /// Last step whose increment touched the cut.
    pub last_touch: Option<u64>,
    pub final_anchor: Option<String>,
    /// Outside the cut at the end, with no touch or crossing in the final
    /// quarter of the run.
    pub stabilized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub steps: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub cuts: Vec<CutTrace>,
    /// Savchuk class, for Thompson walks watched through `{5/8, 3/4}`.
    pub end_class: Option<EndClass>,
    /// Visits to the start after time 0.
    pub returns: u64,
    pub last_return: Option<u64>,
    pub final_position: String,
    pub final_distance: u64,
    pub sign_flips: Option<u64>,
}

// One per cut and run, so the size gap between variants does not matter.
#[allow(clippy::large_enum_variant)]
enum CutKind {
    Graph {
        set: CutSet,
        index: ComponentIndex,
        classes: Option<HashMap<String, EndClass>>,
    },
    Interval {
        lo: i64,
        hi: i64,
        below: Arc<str>,
        above: Arc<str>,
    },
}

struct PreparedCut {
    id: String,
    kind: CutKind,
}

struct Prepared {
    cuts: Vec<PreparedCut>,
    /// Per-`|x|` thresholds `(up, up + down)` for chains on Z.
    thresholds: Vec<(f64, f64)>,
    initial: Vec<Option<Arc<str>>>,
}

fn prepare(config: &WalkConfig) -> Result<Prepared> {
    config.validate()?;
    let mut cuts = Vec::new();
    let mut initial = Vec::new();
    let mut thresholds = Vec::new();
    match &config.target {
        Target::Induced { start, .. } => {
            let graph = Arc::new(SchreierGraph::new(start.clone()));
            let savchuk_id = CutSet::new(["5/8", "3/4"].map(|s| Action::Thompson.parse_point(s).expect("literal")))?
                .id()
                .to_string();
            for spec in &config.cuts {
                let set = match spec {
                    CutSpec::Ball { radius } => CutSet::new(graph.ball(start, *radius)?)?,
                    CutSpec::Points { points } => CutSet::new(
                        points
                            .iter()
                            .map(|p| start.action().parse_point(p))
                            .collect::<Result<Vec<_>>>()?,
                    )?,
                };
                let id = set.id().to_string();
                let classes = (start.action() == Action::Thompson && id == savchuk_id).then(|| {
                    EndClass::RESOLVED
                        .into_iter()
                        .map(|c| {
                            let v = ActionPoint::Dyadic(c.boundary_vertex().expect("resolved"));
                            (v.to_string(), c)
                        })
                        .collect()
                });
                let index = ComponentIndex::new(graph.clone(), set.clone())?;
                initial.push(if set.contains(start) {
                    None
                } else {
                    match index.component_label_escalating(start)?.anchor() {
                        Some(a) => Some(Arc::from(a)),
                        None => {
                            return Err(Error::InvalidConfig(format!(
                                "cannot locate the component of {start} in the complement of {id}"
                            )))
                        }
                    }
                });
                cuts.push(PreparedCut {
                    id,
                    kind: CutKind::Graph { set, index, classes },
                });
            }
        }
        Target::Chain { params, start } => {
            for spec in &config.cuts {
                let CutSpec::Ball { radius } = spec else {
                    unreachable!("validated");
                };
                let r = *radius as i64;
                let (lo, hi) = (start - r, start + r);
                cuts.push(PreparedCut {
                    id: format!("[{lo},{hi}]"),
                    kind: CutKind::Interval {
                        lo,
                        hi,
                        below: Arc::from((lo - 1).to_string()),
                        above: Arc::from((hi + 1).to_string()),
                    },
                });
                initial.push(None);
            }
            let chain = CounterexampleChain::new(*params)?;
            thresholds = chain.thresholds(start.unsigned_abs() + config.steps);
        }
    }
    Ok(Prepared {
        cuts,
        thresholds,
        initial,
    })
}

struct Tracker {
    in_k: bool,
    label: Option<Arc<str>>,
    touched: bool,
    last_outside: Option<Arc<str>>,
    trace: CutTrace,
}

impl Tracker {
    fn new(id: &str, initial: Option<Arc<str>>) -> Self {
        let mut trace = CutTrace {
            cut: id.to_string(),
            crossings: Vec::new(),
            first_exit: None,
            changes_after_first_exit: 0,
            last_touch: None,
            final_anchor: None,
            stabilized: false,
        };
        if let Some(a) = &initial {
            trace.crossings.push((0, a.to_string()));
            trace.first_exit = Some(0);
        }
        Self {
            in_k: initial.is_none(),
            label: initial.clone(),
            touched: false,
            last_outside: initial,
            trace,
        }
    }

    fn inside(&mut self) {
        self.in_k = true;
        self.touched = true;
        self.label = None;
    }

    fn commit(&mut self, t: u64) {
        if self.touched {
            self.trace.last_touch = Some(t);
        }
        if let Some(l) = &self.label {
            if self.touched || self.last_outside.as_ref() != Some(l) {
                if self.last_outside.as_ref().is_some_and(|prev| prev != l) {
                    self.trace.changes_after_first_exit += 1;
                }
                self.trace.crossings.push((t, l.to_string()));
                self.trace.first_exit.get_or_insert(t);
                self.last_outside = Some(l.clone());
            }
        }
        self.touched = false;
    }

    fn finish(mut self, steps: u64) -> CutTrace {
        let last_event = self.trace.last_touch.max(self.trace.crossings.last().map(|c| c.0));
        self.trace.final_anchor = self.label.as_ref().map(|l| l.to_string());
        self.trace.stabilized = self.label.is_some() && last_event.is_none_or(|e| 4 * e <= 3 * steps);
        self.trace
    }
}

fn plane_distance(a: PlaneVertex, b: PlaneVertex) -> u64 {
    if a.level == b.level {
        a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
    } else {
        a.level.abs_diff(b.level) + a.x.unsigned_abs() + a.y.unsigned_abs() + b.x.unsigned_abs() + b.y.unsigned_abs()
    }
}

fn walk_induced(
    config: &WalkConfig,
    prepared: &Prepared,
    measure: &GroupMeasure,
    start: &ActionPoint,
    index: u64,
) -> Result<TrajectoryRecord> {
    let mut rng = task_rng(config.seed, index);
    let tree = start.action().is_tree();
    let mut x = start.clone();
    // Loop-erased path from the start; in a tree its length is the distance.
    let mut stack: Vec<Letter> = Vec::new();
    let mut trackers: Vec<Tracker> = prepared
        .cuts
        .iter()
        .zip(&prepared.initial)
        .map(|(c, i)| Tracker::new(&c.id, i.clone()))
        .collect();
    let distance = |x: &ActionPoint, stack: &[Letter]| match (x, start) {
        (ActionPoint::PsiPrime(a), ActionPoint::PsiPrime(b)) => plane_distance(*a, *b),
        _ => stack.len() as u64,
    };
    let mut buf = Vec::new();
    let mut checkpoints = Vec::with_capacity(config.checkpoints.len());
    let mut next_cp = 0;
    let (mut returns, mut last_return) = (0, None);
    for t in 1..=config.steps {
        measure.sample_into(&mut rng, &mut buf);
        for &s in &buf {
            let back = tree && stack.last().is_some_and(|&l| x.images_equal(s, l.inverse()));
            let moved = x.apply_in_place(s);
            if back {
                stack.pop();
            } else if tree && moved {
                stack.push(s);
            }
            for (tr, cut) in trackers.iter_mut().zip(&prepared.cuts) {
                let CutKind::Graph { set, index, .. } = &cut.kind else {
                    unreachable!("graph cuts for induced walks");
                };
                if set.contains(&x) {
                    tr.inside();
                } else if tr.in_k {
                    tr.in_k = false;
                    let a = index
                        .boundary_anchor(&x)
                        .expect("a vertex next to the cut is a boundary vertex");
                    tr.label = Some(Arc::from(a));
                }
            }
        }
        for tr in trackers.iter_mut() {
            tr.commit(t);
        }
        if x == *start {
            returns += 1;
            last_return = Some(t);
        }
        if config.checkpoints.get(next_cp) == Some(&t) {
            checkpoints.push(Checkpoint {
                step: t,
                position: x.to_string(),
                distance: distance(&x, &stack),
                anchor: trackers.first().and_then(|tr| tr.label.as_ref().map(|l| l.to_string())),
                sign_flips: None,
            });
            next_cp += 1;
        }
    }
    let final_distance = distance(&x, &stack);
    let cuts: Vec<CutTrace> = trackers.into_iter().map(|t| t.finish(config.steps)).collect();
    let end_class = prepared.cuts.iter().zip(&cuts).find_map(|(c, tr)| match &c.kind {
        CutKind::Graph { classes: Some(map), .. } => Some(match (&tr.final_anchor, tr.stabilized) {
            (Some(a), true) => map[a.as_str()],
            _ => EndClass::Unresolved,
        }),
        _ => None,
    });
    Ok(TrajectoryRecord {
        index,
        steps: config.steps,
        checkpoints,
        cuts,
        end_class,
        returns,
        last_return,
        final_position: x.to_string(),
        final_distance,
        sign_flips: None,
    })
}

fn walk_chain(config: &WalkConfig, prepared: &Prepared, start: i64, index: u64) -> TrajectoryRecord {
    let mut rng = task_rng(config.seed, index);
    let mut trackers: Vec<Tracker> = prepared.cuts.iter().map(|c| Tracker::new(&c.id, None)).collect();
    let mut x = start;
    let mut sign = x.signum();
    let mut flips = 0u64;
    let mut checkpoints = Vec::with_capacity(config.checkpoints.len());
    let mut next_cp = 0;
    let (mut returns, mut last_return) = (0, None);
    let observe = |trackers: &mut [Tracker], x: i64| {
        for (tr, cut) in trackers.iter_mut().zip(&prepared.cuts) {
            let CutKind::Interval { lo, hi, below, above } = &cut.kind else {
                unreachable!("interval cuts for chains");
            };
            if (*lo..=*hi).contains(&x) {
                tr.inside();
            } else {
                tr.in_k = false;
                tr.label = Some(if x < *lo { below.clone() } else { above.clone() });
            }
        }
    };
    observe(&mut trackers, x);
    for tr in trackers.iter_mut() {
        // Time 0 only fixes the starting side.
        tr.touched = false;
        if let Some(l) = &tr.label {
            tr.last_outside = Some(l.clone());
            tr.trace.crossings.push((0, l.to_string()));
            tr.trace.first_exit = Some(0);
        }
    }
    for t in 1..=config.steps {
        let u: f64 = rng.random();
        x = if x == 0 {
            if u < 0.5 {
                1
            } else {
                -1
            }
        } else {
            let (up, up_down) = prepared.thresholds[x.unsigned_abs() as usize];
            if u < up {
                x + x.signum()
            } else if u < up_down {
                x - x.signum()
            } else {
                -x
            }
        };
        if x != 0 {
            if sign != 0 && x.signum() != sign {
                flips += 1;
            }
            sign = x.signum();
        }
        observe(&mut trackers, x);
        for tr in trackers.iter_mut() {
            tr.commit(t);
        }
        if x == start {
            returns += 1;
            last_return = Some(t);
        }
        if config.checkpoints.get(next_cp) == Some(&t) {
            checkpoints.push(Checkpoint {
                step: t,
                position: x.to_string(),
                distance: x.abs_diff(start),
                anchor: trackers.first().and_then(|tr| tr.label.as_ref().map(|l| l.to_string())),
                sign_flips: Some(flips),
            });
            next_cp += 1;
        }
    }
    TrajectoryRecord {
        index,
        steps: config.steps,
        checkpoints,
        cuts: trackers.into_iter().map(|t| t.finish(config.steps)).collect(),
        end_class: None,
        returns,
        last_return,
        final_position: x.to_string(),
        final_distance: x.abs_diff(start),
        sign_flips: Some(flips),
    }
}

fn run_one(config: &WalkConfig, prepared: &Prepared, index: u64) -> Result<TrajectoryRecord> {
    match &config.target {
        Target::Induced { measure, start } => walk_induced(config, prepared, measure, start, index),
        Target::Chain { start, .. } => Ok(walk_chain(config, prepared, *start, index)),
    }
}

/// Runs every trajectory, in parallel when the `parallel` feature is on.
/// Records come back sorted by index.
pub fn run_walks(config: &WalkConfig) -> Result<Vec<TrajectoryRecord>> {
    let prepared = prepare(config)?;
    map_indexed(config.trajectories, |i| run_one(config, &prepared, i))
        .into_iter()
        .collect()
}

/// [`run_walks`] on the calling thread.
pub fn run_walks_sequential(config: &WalkConfig) -> Result<Vec<TrajectoryRecord>> {
    let prepared = prepare(config)?;
    map_indexed_sequential(config.trajectories, |i| run_one(config, &prepared, i))
        .into_iter()
        .collect()
}

/// One row per trajectory and checkpoint:
/// `trajectory,step,position,distance,component_anchor,sign_flips`.
pub fn write_records_csv<W: Write>(records: &[TrajectoryRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trajectory",
        "step",
        "position",
        "distance",
        "component_anchor",
        "sign_flips",
    ])?;
    for r in records {
        for c in &r.checkpoints {
            w.write_record([
                r.index.to_string(),
                c.step.to_string(),
                c.position.clone(),
                c.distance.to_string(),
                c.anchor.clone().unwrap_or_default(),
                c.sign_flips.map(|f| f.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{CombVertex, Word};
    use crate::measures::example1_measure;

    fn psi_origin() -> ActionPoint {
        ActionPoint::Psi(CombVertex::new(0, 0))
    }

    #[test]
    fn dirac_identity_stays_put() {
        let target = Target::Induced {
            measure: GroupMeasure::dirac(Word::empty()),
            start: psi_origin(),
        };
        let cfg = WalkConfig::new(target, 100, 3, 1).with_cuts(vec![CutSpec::Ball { radius: 1 }]);
        for r in run_walks(&cfg).unwrap() {
            assert!(r.checkpoints.iter().all(|c| c.position == "(0,0)" && c.distance == 0));
            assert_eq!(r.returns, 100);
            assert_eq!(r.cuts[0].changes_after_first_exit, 0);
            assert!(!r.cuts[0].stabilized);
        }
    }

    #[test]
    fn distances_agree_with_the_comb_metric() {
        let target = Target::Induced {
            measure: example1_measure(),
            start: psi_origin(),
        };
        let cfg = WalkConfig::new(target, 500, 20, 3);
        for r in run_walks(&cfg).unwrap() {
            for c in &r.checkpoints {
                let v = Action::Psi.parse_point(&c.position).unwrap();
                assert_eq!(c.distance, v.size());
                assert!(c.distance <= c.step);
            }
        }
    }

    #[test]
    fn thompson_distances_match_bfs() {
        let start = Action::Thompson.parse_point("5/8").unwrap();
        let g = SchreierGraph::new(start.clone());
        let target = Target::Induced {
            measure: GroupMeasure::uniform(Action::Thompson),
            start: start.clone(),
        };
        let cfg = WalkConfig::new(target, 64, 30, 9).with_cuts(vec![CutSpec::savchuk()]);
        for r in run_walks(&cfg).unwrap() {
            for c in &r.checkpoints {
                let v = Action::Thompson.parse_point(&c.position).unwrap();
                assert_eq!(Some(c.distance), g.graph_distance(&start, &v, 64).unwrap());
            }
            assert!(r.end_class.is_some());
        }
    }

    #[test]
    fn chain_flips_and_csv() {
        let target = Target::Chain {
            params: ChainParams::Constant { p: 0.0, eps: 1.0 },
            start: 0,
        };
        let cfg = WalkConfig::new(target, 50, 4, 2).with_cuts(vec![CutSpec::Ball { radius: 3 }]);
        let recs = run_walks(&cfg).unwrap();
        for r in &recs {
            assert_eq!(r.sign_flips, Some(0));
            assert_eq!(r.final_distance, 50);
            assert_eq!(r.cuts[0].crossings.len(), 1);
            assert!(r.cuts[0].stabilized);
        }
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trajectory,step,position,distance,component_anchor,sign_flips\n"));
        assert_eq!(text.lines().count(), 1 + 4 * cfg.checkpoints.len());
    }

    #[test]
    fn config_validation() {
        let target = Target::Chain {
            params: ChainParams::Counterexample,
            start: 0,
        };
        let cfg = WalkConfig::new(target.clone(), 10, 1, 0).with_checkpoints(vec![5, 3]);
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let cfg = WalkConfig::new(target, 10, 1, 0).with_cuts(vec![CutSpec::savchuk()]);
        assert!(cfg.validate().is_err());
        let bad = Target::Induced {
            measure: example1_measure(),
            start: Action::Thompson.parse_point("1/2").unwrap(),
        };
        assert!(WalkConfig::new(bad, 10, 1, 0).validate().is_err());
    }
}
