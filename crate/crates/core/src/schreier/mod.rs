//! Lazily generated Schreier graphs.
//!
//! The vertex set is the orbit of a basepoint and the edges are `(x, x.s)` for
//! every generator `s`. Adjacency is computed on demand and memoized; the cache
//! never changes answers.

mod components;
mod dot;
pub mod savchuk;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::actions::{Action, ActionPoint, Letter};
use crate::error::{Error, Result};

pub use components::{ComponentIndex, ComponentLabel, CutSet, LabelOutcome, DEFAULT_CAP, MAX_CAP};
pub use dot::{export_csv, export_dot, EdgeStyle};

/// Upper bound on memoized adjacency lists before the cache stops growing.
const CACHE_LIMIT: usize = 1 << 20;

#[derive(Debug)]
pub struct SchreierGraph {
    action: Action,
    letters: Vec<Letter>,
    basepoint: ActionPoint,
    cache: RwLock<HashMap<ActionPoint, Arc<[ActionPoint]>>>,
}

impl SchreierGraph {
    pub fn new(basepoint: ActionPoint) -> Self {
        let action = basepoint.action();
        Self {
            action,
            letters: action.letters(),
            basepoint,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn action(&self) -> Action {
        self.action
    }

    pub fn basepoint(&self) -> &ActionPoint {
        &self.basepoint
    }

    /// Generators and inverses in neighbor order.
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    fn check(&self, v: &ActionPoint) -> Result<()> {
        if v.action() == self.action {
            Ok(())
        } else {
            Err(Error::WrongAction {
                point: v.to_string(),
                action: self.action.name(),
            })
        }
    }

    /// Images of `v` under each letter, in letter order (loops included).
    pub(crate) fn adjacent(&self, v: &ActionPoint) -> Arc<[ActionPoint]> {
        if let Some(hit) = self.cache.read().expect("cache lock").get(v) {
            return hit.clone();
        }
        let images: Arc<[ActionPoint]> = self
            .letters
            .iter()
            .map(|&l| {
                let mut w = v.clone();
                w.apply_in_place(l);
                w
            })
            .collect();
        let mut cache = self.cache.write().expect("cache lock");
        if cache.len() < CACHE_LIMIT {
            cache.insert(v.clone(), images.clone());
        }
        images
    }

    /// One entry per letter and inverse, `2|S|` in total, loops included.
    pub fn neighbors(&self, v: &ActionPoint) -> Result<Vec<(Letter, ActionPoint)>> {
        self.check(v)?;
        let adj = self.adjacent(v);
        Ok(self.letters.iter().copied().zip(adj.iter().cloned()).collect())
    }

    /// Spheres of radius 0..=r around `center`, each in discovery order.
    pub fn ball_layers(&self, center: &ActionPoint, r: u64) -> Result<Vec<Vec<ActionPoint>>> {
        self.check(center)?;
        let mut seen: HashMap<ActionPoint, u64> = HashMap::new();
        seen.insert(center.clone(), 0);
        let mut layers = vec![vec![center.clone()]];
        for d in 1..=r {
            let mut next = Vec::new();
            for v in &layers[d as usize - 1] {
                for w in self.adjacent(v).iter() {
                    if !seen.contains_key(w) {
                        seen.insert(w.clone(), d);
                        next.push(w.clone());
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layers.push(next);
        }
        Ok(layers)
    }

    /// All vertices within distance `r` of `center`, in breadth-first order.
    pub fn ball(&self, center: &ActionPoint, r: u64) -> Result<Vec<ActionPoint>> {
        Ok(self.ball_layers(center, r)?.into_iter().flatten().collect())
    }

    /// Bidirectional breadth-first distance; `None` when it exceeds `cap`.
    pub fn graph_distance(&self, u: &ActionPoint, v: &ActionPoint, cap: u64) -> Result<Option<u64>> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Ok(Some(0));
        }
        let mut dist = [HashMap::new(), HashMap::new()];
        let mut frontier = [vec![u.clone()], vec![v.clone()]];
        dist[0].insert(u.clone(), 0u64);
        dist[1].insert(v.clone(), 0u64);
        let mut radius = [0u64, 0u64];
        while radius[0] + radius[1] < cap {
            let side = usize::from(frontier[1].len() < frontier[0].len());
            if frontier[side].is_empty() {
                return Ok(None);
            }
            let other = 1 - side;
            radius[side] += 1;
            let mut best: Option<u64> = None;
            let mut next = Vec::new();
            for x in std::mem::take(&mut frontier[side]) {
                for y in self.adjacent(&x).iter() {
                    if dist[side].contains_key(y) {
                        continue;
                    }
                    if let Some(&dy) = dist[other].get(y) {
                        let total = radius[side] + dy;
                        best = Some(best.map_or(total, |b: u64| b.min(total)));
                    }
                    dist[side].insert(y.clone(), radius[side]);
                    next.push(y.clone());
                }
            }
            if let Some(b) = best {
                return Ok((b <= cap).then_some(b));
            }
            frontier[side] = next;
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::CombVertex;

    fn t(s: &str) -> ActionPoint {
        Action::Thompson.parse_point(s).unwrap()
    }

    fn graph() -> SchreierGraph {
        SchreierGraph::new(t("3/4"))
    }

    #[test]
    fn neighbors_of_three_quarters() {
        let g = graph();
        let n: Vec<String> = g
            .neighbors(&t("3/4"))
            .unwrap()
            .into_iter()
            .map(|(l, v)| format!("{l}:{v}"))
            .collect();
        assert_eq!(n, ["A:1/2^1", "A':7/2^3", "B:5/2^3", "B':7/2^3"]);
        let half = g.neighbors(&t("1/2")).unwrap();
        assert_eq!(half[2].1, t("1/2"));
        assert_eq!(half[3].1, t("1/2"));
    }

    #[test]
    fn comb_loops() {
        let v = ActionPoint::Psi(CombVertex::new(0, 5));
        let g = SchreierGraph::new(v.clone());
        let n = g.neighbors(&v).unwrap();
        assert_eq!(n.len(), 4);
        assert_eq!(n[2], (Letter::new('b'), v.clone()));
    }

    #[test]
    fn balls_and_distances() {
        let g = graph();
        assert_eq!(g.ball(&t("3/4"), 0).unwrap(), vec![t("3/4")]);
        let mut b1: Vec<String> = g.ball(&t("3/4"), 1).unwrap().iter().map(|p| p.to_string()).collect();
        b1.sort();
        assert_eq!(b1, ["1/2^1", "3/2^2", "5/2^3", "7/2^3"]);
        assert_eq!(g.graph_distance(&t("3/4"), &t("3/4"), 10).unwrap(), Some(0));
        assert_eq!(g.graph_distance(&t("3/4"), &t("5/8"), 10).unwrap(), Some(1));
        assert_eq!(g.graph_distance(&t("3/4"), &t("9/16"), 10).unwrap(), Some(2));
        assert_eq!(g.graph_distance(&t("3/4"), &t("9/16"), 1).unwrap(), None);
        assert!(g.neighbors(&ActionPoint::Psi(CombVertex::new(0, 0))).is_err());
    }
}
