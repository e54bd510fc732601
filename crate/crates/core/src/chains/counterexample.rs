use rand::Rng;
use serde::{Deserialize, Serialize};

use super::series::{NeumaierSum, SeriesCertificate, Verdict};
use super::MarkovKernel;
use crate::error::{Error, Result};

/// Parameter sequences `(p_n, ε_n)` of the chain on Z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainParams {
    /// `p_n = 1/(n² ln² n)` and the matching `ε_n` for `n ≥ 2`; zero below.
    Counterexample,
    /// The same `(p, ε)` at every `n ≥ 1`; `p₀ = ε₀ = 0`.
    Constant { p: f64, eps: f64 },
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        if let ChainParams::Constant { p, eps } = *self {
            if !(0.0..1.0).contains(&p) || !(0.0..=1.0).contains(&eps) {
                return Err(Error::OutOfRange(format!(
                    "constant chain needs 0 <= p < 1 and 0 <= eps <= 1, got p = {p}, eps = {eps}"
                )));
            }
        }
        Ok(())
    }

    pub fn at(&self, n: u64) -> (f64, f64) {
        match *self {
            ChainParams::Counterexample => counterexample_params(n),
            ChainParams::Constant { p, eps } => {
                if n == 0 {
                    (0.0, 0.0)
                } else {
                    (p, eps)
                }
            }
        }
    }

    /// `(up, down, jump)` probabilities at `|x| = n ≥ 1`.
    pub fn moves(&self, n: u64) -> (f64, f64, f64) {
        let (p, e) = self.at(n);
        ((1.0 - p) * (1.0 + e) / 2.0, (1.0 - p) * (1.0 - e) / 2.0, p)
    }
}

fn n_ln2(n: f64) -> f64 {
    let l = n.ln();
    n * l * l
}

/// `(p_n, ε_n)`; the closed forms are singular at `n = 1`, so `n < 2` gives
/// `(0, 0)`.
pub fn counterexample_params(n: u64) -> (f64, f64) {
    if n < 2 {
        return (0.0, 0.0);
    }
    let x = n as f64;
    let l = x.ln();
    let p = 1.0 / (x * x * l * l);
    let (a, b) = (n_ln2(x + 1.0), n_ln2(x));
    (p, (a - b) / (a + b))
}

/// The chain on Z: from `x` with `|x| = n`, move outward with probability
/// `(1−p_n)(1+ε_n)/2`, inward with `(1−p_n)(1−ε_n)/2`, and jump to `−x` with
/// `p_n`. From 0 it moves to ±1 with probability ½ each.
#[derive(Clone, Debug)]
pub struct CounterexampleChain {
    params: ChainParams,
}

impl CounterexampleChain {
    pub fn new(params: ChainParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn standard() -> Self {
        Self {
            params: ChainParams::Counterexample,
        }
    }

    pub fn params(&self) -> ChainParams {
        self.params
    }

    /// Cumulative thresholds `(up, up + down)` for `|x| = 0..=max_n`, for fast
    /// simulation with a single uniform per step.
    pub fn thresholds(&self, max_n: u64) -> Vec<(f64, f64)> {
        (0..=max_n)
            .map(|n| {
                if n == 0 {
                    (0.5, 1.0)
                } else {
                    let (u, d, _) = self.params.moves(n);
                    (u, u + d)
                }
            })
            .collect()
    }
}

impl MarkovKernel for CounterexampleChain {
    type State = i64;

    fn transitions(&self, &x: &i64) -> Result<Vec<(i64, f64)>> {
        if x == 0 {
            return Ok(vec![(1, 0.5), (-1, 0.5)]);
        }
        let n = x.unsigned_abs();
        let s = x.signum();
        let (up, down, jump) = self.params.moves(n);
        let mut row = vec![(x + s, up), (x - s, down), (-x, jump)];
        row.retain(|&(_, p)| p > 0.0);
        Ok(row)
    }

    fn distance(&self, x: &i64, y: &i64) -> u64 {
        x.abs_diff(*y)
    }

    fn neighbors(&self, x: &i64) -> Vec<i64> {
        vec![x + 1, x - 1]
    }

    fn state_name(&self, x: &i64) -> String {
        x.to_string()
    }

    fn sample_step<R: Rng + ?Sized>(&self, &x: &i64, rng: &mut R) -> Result<i64> {
        let u: f64 = rng.random();
        if x == 0 {
            return Ok(if u < 0.5 { 1 } else { -1 });
        }
        let s = x.signum();
        let (up, down, _) = self.params.moves(x.unsigned_abs());
        Ok(if u < up {
            x + s
        } else if u < up + down {
            x - s
        } else {
            -x
        })
    }
}

fn checkpoints(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |c| c.checked_mul(10))
        .take_while(|&c| c < n)
        .collect();
    out.push(n);
    out
}

/// `Σ_{n=2}^{N} n·p_n` with the tail bound `Σ_{n>N} n·p_n ≤ ∫_N^∞ dx/(x ln² x)
/// = 1/ln N` for the counterexample parameters.
pub fn first_moment_series(params: ChainParams, n_max: u64) -> Result<SeriesCertificate> {
    if n_max < 2 {
        return Err(Error::OutOfRange("series need N >= 2".into()));
    }
    params.validate()?;
    let marks = checkpoints(n_max);
    let mut sum = NeumaierSum::default();
    let mut points = Vec::with_capacity(marks.len());
    let mut next = 0;
    for n in 2..=n_max {
        sum.add(n as f64 * params.at(n).0);
        if n == marks[next] {
            points.push((n, sum.value()));
            next += 1;
        }
    }
    let (tail_bound, formula, verdict) = match params {
        ChainParams::Counterexample => (
            1.0 / (n_max as f64).ln(),
            "integral of 1/(x ln^2 x) from N: 1/ln N",
            Verdict::Converges,
        ),
        ChainParams::Constant { p: 0.0, .. } => (0.0, "all terms vanish", Verdict::Converges),
        ChainParams::Constant { p, .. } => (
            f64::INFINITY,
            "terms n*p grow linearly",
            if p > 0.0 {
                Verdict::Diverges
            } else {
                Verdict::Inconclusive
            },
        ),
    };
    Ok(SeriesCertificate {
        series: "sum n p_n".into(),
        checkpoints: points,
        tail_bound,
        tail_formula: formula.into(),
        verdict,
    })
}
