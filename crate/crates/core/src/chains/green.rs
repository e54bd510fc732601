use rand::Rng;
use serde::Serialize;

use super::birth_death::ResistanceTable;
use super::MarkovKernel;
use crate::error::{Error, Result};
use crate::par::{map_indexed, task_rng};

/// Monte Carlo estimate of a Green function value with a 95% normal interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub lo: f64,
    pub hi: f64,
    pub trials: u64,
    /// Step horizon per trial, if the walk was cut off.
    pub horizon: Option<u64>,
    /// True when cutting at the horizon can only undercount visits.
    pub lower_bound: bool,
}

impl GreenEstimate {
    fn from_counts(counts: &[u64], horizon: Option<u64>) -> Self {
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<u64>() as f64 / n;
        let var = if counts.len() > 1 {
            counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std_err = (var / n).sqrt();
        Self {
            mean,
            std_err,
            lo: mean - 1.96 * std_err,
            hi: mean + 1.96 * std_err,
            trials: counts.len() as u64,
            horizon,
            lower_bound: horizon.is_some(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Visits to `x` (time 0 included) over `trials` walks of `horizon` steps.
/// Trial `i` uses stream `i` of the generator keyed by `seed`.
pub fn mc_green<K>(kernel: &K, x: &K::State, trials: u64, horizon: u64, seed: u64) -> Result<GreenEstimate>
where
    K: MarkovKernel + Sync,
    K::State: Send + Sync,
{
    if trials == 0 {
        return Err(Error::OutOfRange("need at least one trial".into()));
    }
    let counts: Vec<Result<u64>> = map_indexed(trials, |i| {
        let mut rng = task_rng(seed, i);
        let mut y = x.clone();
        let mut visits = 1;
        for _ in 0..horizon {
            y = kernel.sample_step(&y, &mut rng)?;
            if &y == x {
                visits += 1;
            }
        }
        Ok(visits)
    });
    let counts = counts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(GreenEstimate::from_counts(&counts, Some(horizon)))
}

/// Green function `G̃(n,n)` of the reflected chain without a step horizon.
/// Each trial runs until it reaches `L = 2n + 8`; from there it comes back to
/// `n` with the exact probability `T(L)/T(n)` and otherwise escapes for good.
pub fn mc_green_birthdeath(table: &ResistanceTable, n: u64, trials: u64, seed: u64) -> Result<GreenEstimate> {
    let far = 2 * n + 8;
    if n < 1 || far >= table.n_max() {
        return Err(Error::OutOfRange(format!("need 1 <= n and 2n + 8 < {}", table.n_max())));
    }
    if !table.is_transient() {
        return Err(Error::Recurrent("the reflected chain does not escape".into()));
    }
    if trials == 0 {
        return Err(Error::OutOfRange("need at least one trial".into()));
    }
    let (tl, tl_hi) = table.tail_from(far);
    let (tn, tn_hi) = table.tail_from(n);
    let back = 0.5 * (tl + tl_hi) / (0.5 * (tn + tn_hi));
    let chain = table.chain();
    let rows: Vec<(f64, f64)> = (0..=far).map(|k| (chain.up(k), chain.up(k) + chain.down(k))).collect();
    let counts = map_indexed(trials, |i| {
        let mut rng = task_rng(seed, i);
        let mut x = n;
        let mut visits = 1u64;
        loop {
            let (up, up_down) = rows[x as usize];
            let u: f64 = rng.random();
            x = if u < up {
                x + 1
            } else if u < up_down {
                x - 1
            } else {
                x
            };
            if x == far {
                if rng.random::<f64>() < back {
                    x = n;
                } else {
                    break;
                }
            }
            if x == n {
                visits += 1;
            }
        }
        visits
    });
    Ok(GreenEstimate::from_counts(&counts, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{exact_green_birthdeath, BirthDeathChain, ChainParams, CounterexampleChain};

    #[test]
    fn hybrid_matches_formula() {
        let c = BirthDeathChain::reflected(ChainParams::Counterexample).unwrap();
        let t = ResistanceTable::build(&c, 100_000).unwrap();
        for n in [1, 4] {
            let g = exact_green_birthdeath(&t, n).unwrap();
            let e = mc_green_birthdeath(&t, n, 20_000, 7).unwrap();
            assert!((e.mean - g.mid()).abs() < 4.0 * e.std_err, "{n}: {e:?} vs {g:?}");
        }
    }

    #[test]
    fn horizon_counts_start() {
        let c = CounterexampleChain::standard();
        let e = mc_green(&c, &0, 10, 0, 1).unwrap();
        assert_eq!(e.mean, 1.0);
        assert!(e.lower_bound);
    }
}
