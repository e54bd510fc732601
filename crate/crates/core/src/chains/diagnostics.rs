use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::{transition_prob, MarkovKernel};
use crate::error::{Error, Result};

/// Largest `ε` with `P₁ ≥ ε·P₂` on the pairs inside a vertex set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub eps_max: f64,
    pub pairs: usize,
    /// The pair attaining `eps_max`.
    pub tight_pair: (String, String),
    pub verified: bool,
}

/// Computes `ε_max = min P₁(x,y)/P₂(x,y)` over `x, y` in `vertices` with
/// `P₂(x,y) > 0`, after checking that `P₂` is symmetric there.
pub fn compare_kernels<K1, K2>(p1: &K1, p2: &K2, vertices: &[K1::State]) -> Result<ComparisonReport>
where
    K1: MarkovKernel,
    K2: MarkovKernel<State = K1::State>,
{
    if vertices.is_empty() {
        return Err(Error::EmptySet);
    }
    let inside: HashSet<&K1::State> = vertices.iter().collect();
    let mut eps = f64::INFINITY;
    let mut tight = None;
    let mut pairs = Vec::new();
    for x in vertices {
        for (y, q) in p2.transitions(x)? {
            if !inside.contains(&y) {
                continue;
            }
            let back = transition_prob(p2, &y, x)?;
            if (back - q).abs() > 1e-12 {
                return Err(Error::Asymmetric {
                    x: p2.state_name(x),
                    y: p2.state_name(&y),
                    forward: q,
                    backward: back,
                });
            }
            let p = transition_prob(p1, x, &y)?;
            if p / q < eps {
                eps = p / q;
                tight = Some((p1.state_name(x), p1.state_name(&y)));
            }
            pairs.push((x.clone(), y, p, q));
        }
    }
    let Some(tight_pair) = tight else {
        return Err(Error::EmptySet);
    };
    let verified = pairs.iter().all(|(_, _, p, q)| *p >= eps * q - 1e-15);
    Ok(ComparisonReport {
        eps_max: eps,
        pairs: pairs.len(),
        tight_pair,
        verified,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum IrreducibilityOutcome {
    /// `p^(j)(x,y) ≥ c` for some `j ≤ k` on every edge checked.
    Witness {
        c: f64,
        k: u32,
        edges: usize,
        weakest_edge: (String, String),
    },
    /// Edges with `p^(j)(x,y) = 0` for every `j ≤ K`.
    Failure { edges: Vec<(String, String)> },
}

/// For every vertex `x` in `vertices` and every graph neighbor `y`, finds
/// `max_{j ≤ k_max} p^(j)(x,y)`. The witness `c` is the least of these and
/// `k` the largest step count needed to reach it.
pub fn uniform_irreducibility<K: MarkovKernel>(
    kernel: &K,
    vertices: &[K::State],
    k_max: u32,
) -> Result<IrreducibilityOutcome> {
    if vertices.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut c = f64::INFINITY;
    let mut k_need = 0;
    let mut weakest = None;
    let mut failures = Vec::new();
    let mut edges = 0;
    for x in vertices {
        let targets = kernel.neighbors(x);
        let mut best: Vec<(f64, u32)> = vec![(0.0, 0); targets.len()];
        let mut dist: HashMap<K::State, f64> = HashMap::from([(x.clone(), 1.0)]);
        for j in 1..=k_max {
            let mut next: HashMap<K::State, f64> = HashMap::new();
            for (z, pz) in &dist {
                for (w, p) in kernel.transitions(z)? {
                    *next.entry(w).or_default() += pz * p;
                }
            }
            dist = next;
            for (t, b) in targets.iter().zip(best.iter_mut()) {
                let v = dist.get(t).copied().unwrap_or(0.0);
                if v > b.0 {
                    *b = (v, j);
                }
            }
        }
        for (t, (v, j)) in targets.iter().zip(best) {
            edges += 1;
            if v == 0.0 {
                failures.push((kernel.state_name(x), kernel.state_name(t)));
                continue;
            }
            k_need = k_need.max(j);
            if v < c {
                c = v;
                weakest = Some((kernel.state_name(x), kernel.state_name(t)));
            }
        }
    }
    if !failures.is_empty() {
        return Ok(IrreducibilityOutcome::Failure { edges: failures });
    }
    let Some(weakest_edge) = weakest else {
        return Err(Error::EmptySet);
    };
    Ok(IrreducibilityOutcome::Witness {
        c,
        k: k_need,
        edges,
        weakest_edge,
    })
}

/// `(p^(2n)(x,x))^(1/2n)` for `n = 1..=n_max`, by exact propagation of the
/// distribution. Fails once more than `cap` states carry mass.
pub fn spectral_radius_estimate<K: MarkovKernel>(kernel: &K, x: &K::State, n_max: u32, cap: usize) -> Result<Vec<f64>> {
    let mut dist: HashMap<K::State, f64> = HashMap::from([(x.clone(), 1.0)]);
    let mut out = Vec::with_capacity(n_max as usize);
    for step in 1..=2 * n_max {
        let mut next: HashMap<K::State, f64> = HashMap::with_capacity(dist.len() * 2);
        for (z, pz) in &dist {
            for (w, p) in kernel.transitions(z)? {
                *next.entry(w).or_default() += pz * p;
            }
        }
        if next.len() > cap {
            return Err(Error::StateCapExceeded {
                cap,
                step: step as usize,
            });
        }
        dist = next;
        if step % 2 == 0 {
            let ret = dist.get(x).copied().unwrap_or(0.0);
            out.push(ret.powf(1.0 / step as f64));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{ChainParams, CounterexampleChain};

    #[test]
    fn simple_walk_return_probabilities() {
        let srw = CounterexampleChain::new(ChainParams::Constant { p: 0.0, eps: 0.0 }).unwrap();
        let rho = spectral_radius_estimate(&srw, &0, 5, 1000).unwrap();
        // p^(2)(0,0) = 1/2, p^(4)(0,0) = 3/8
        assert!((rho[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((rho[1] - 0.375f64.powf(0.25)).abs() < 1e-15);
        assert!(matches!(
            spectral_radius_estimate(&srw, &0, 5, 3),
            Err(Error::StateCapExceeded { cap: 3, step: 3 })
        ));
    }

    #[test]
    fn counterexample_edges() {
        let c = CounterexampleChain::standard();
        let xs: Vec<i64> = (-1000..=1000).filter(|x: &i64| x.abs() >= 2).collect();
        match uniform_irreducibility(&c, &xs, 1).unwrap() {
            IrreducibilityOutcome::Witness { c, k, .. } => {
                assert!((c - 0.100_596).abs() < 1e-6);
                assert_eq!(k, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn comparison_with_itself() {
        let srw = CounterexampleChain::new(ChainParams::Constant { p: 0.0, eps: 0.0 }).unwrap();
        let xs: Vec<i64> = (-5..=5).collect();
        let r = compare_kernels(&srw, &srw, &xs).unwrap();
        assert_eq!(r.eps_max, 1.0);
        assert!(r.verified);
        let c = CounterexampleChain::standard();
        assert!(matches!(compare_kernels(&srw, &c, &xs), Err(Error::Asymmetric { .. })));
    }
}
