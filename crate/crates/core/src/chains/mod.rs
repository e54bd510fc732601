//! Markov kernels: the counterexample chain on Z, its reflection on N₀ with
//! resistances and Green functions, kernels induced by group measures, and
//! the diagnostics that go with them.

mod birth_death;
mod counterexample;
mod diagnostics;
mod green;
mod series;

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use rand::Rng;

use crate::actions::ActionPoint;
use crate::error::{Error, Result};
use crate::measures::GroupMeasure;
use crate::schreier::SchreierGraph;

pub use birth_death::{
    exact_green_birthdeath, expected_sign_flips, sign_flip_terms, transience_series, BirthDeathChain, GreenInterval,
    ResistanceTable,
};
pub use counterexample::{counterexample_params, first_moment_series, ChainParams, CounterexampleChain};
pub use diagnostics::{
    compare_kernels, spectral_radius_estimate, uniform_irreducibility, ComparisonReport, IrreducibilityOutcome,
};
pub use green::{mc_green, mc_green_birthdeath, GreenEstimate};
pub use series::{NeumaierSum, SeriesCertificate, Verdict};

/// Rows must sum to one within this tolerance.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// A Markov kernel with finitely many transitions out of every state.
pub trait MarkovKernel {
    type State: Clone + Eq + Hash + Debug;

    /// Outgoing transitions with positive probabilities, destinations distinct.
    fn transitions(&self, x: &Self::State) -> Result<Vec<(Self::State, f64)>>;

    /// Graph distance used for step distributions.
    fn distance(&self, x: &Self::State, y: &Self::State) -> u64;

    /// Neighbors of `x` in the underlying graph, excluding `x`.
    fn neighbors(&self, x: &Self::State) -> Vec<Self::State>;

    fn state_name(&self, x: &Self::State) -> String {
        format!("{x:?}")
    }

    fn sample_step<R: Rng + ?Sized>(&self, x: &Self::State, rng: &mut R) -> Result<Self::State> {
        let row = self.transitions(x)?;
        let mut u: f64 = rng.random();
        for (y, p) in &row {
            if u < *p {
                return Ok(y.clone());
            }
            u -= p;
        }
        Ok(row.last().expect("rows are nonempty").0.clone())
    }
}

/// Transition probability `P(x,y)`.
pub fn transition_prob<K: MarkovKernel>(kernel: &K, x: &K::State, y: &K::State) -> Result<f64> {
    Ok(kernel
        .transitions(x)?
        .into_iter()
        .find(|(z, _)| z == y)
        .map_or(0.0, |(_, p)| p))
}

/// `P(x,y) = Σ_{x.g = y} μ(g)` for a finitely supported measure.
#[derive(Clone, Debug)]
pub struct InducedKernel {
    graph: Arc<SchreierGraph>,
    measure: GroupMeasure,
    max_len: u64,
}

impl InducedKernel {
    pub fn new(graph: Arc<SchreierGraph>, measure: GroupMeasure) -> Result<Self> {
        if !measure.is_finite() {
            return Err(Error::InfiniteSupport(
                "induced kernels are enumerated only for finite measures".into(),
            ));
        }
        measure.check_action(graph.action())?;
        let max_len = measure.atoms().iter().map(|a| a.word.len() as u64).max().unwrap_or(0);
        Ok(Self {
            graph,
            measure,
            max_len,
        })
    }

    pub fn graph(&self) -> &Arc<SchreierGraph> {
        &self.graph
    }

    pub fn measure(&self) -> &GroupMeasure {
        &self.measure
    }
}

impl MarkovKernel for InducedKernel {
    type State = ActionPoint;

    fn transitions(&self, x: &ActionPoint) -> Result<Vec<(ActionPoint, f64)>> {
        let mut order: Vec<ActionPoint> = Vec::new();
        let mut mass: HashMap<ActionPoint, f64> = HashMap::new();
        for atom in self.measure.atoms() {
            let y = crate::actions::apply_word(x, &atom.word)?;
            match mass.get_mut(&y) {
                Some(m) => *m += atom.prob,
                None => {
                    mass.insert(y.clone(), atom.prob);
                    order.push(y);
                }
            }
        }
        Ok(order
            .into_iter()
            .map(|y| {
                let p = mass[&y];
                (y, p)
            })
            .collect())
    }

    fn distance(&self, x: &ActionPoint, y: &ActionPoint) -> u64 {
        self.graph
            .graph_distance(x, y, self.max_len)
            .ok()
            .flatten()
            .unwrap_or(u64::MAX)
    }

    fn neighbors(&self, x: &ActionPoint) -> Vec<ActionPoint> {
        let mut out: Vec<ActionPoint> = Vec::new();
        for w in self.graph.adjacent(x).iter() {
            if w != x && !out.contains(w) {
                out.push(w.clone());
            }
        }
        out
    }

    fn state_name(&self, x: &ActionPoint) -> String {
        x.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{Action, CombVertex};
    use crate::measures::{example1_measure, step_distribution};

    #[test]
    fn induced_rows_sum_to_one() {
        let o = ActionPoint::Psi(CombVertex::new(0, 0));
        let g = Arc::new(SchreierGraph::new(o.clone()));
        let k = InducedKernel::new(g.clone(), example1_measure()).unwrap();
        for v in g.ball(&o, 3).unwrap() {
            let s: f64 = k.transitions(&v).unwrap().iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < ROW_TOLERANCE);
        }
        let off = ActionPoint::Psi(CombVertex::new(0, 2));
        assert_eq!(transition_prob(&k, &off, &off).unwrap(), 0.5);
    }

    #[test]
    fn simple_walk_steps_have_length_one() {
        let x = Action::Thompson.parse_point("13/16").unwrap();
        let g = Arc::new(SchreierGraph::new(x.clone()));
        let k = InducedKernel::new(g, GroupMeasure::uniform(Action::Thompson)).unwrap();
        let s = step_distribution(&k, &x, 3).unwrap();
        assert_eq!(s.masses, vec![0.0, 1.0, 0.0, 0.0]);
    }
}
