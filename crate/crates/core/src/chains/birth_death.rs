use rand::Rng;
use serde::Serialize;

use super::counterexample::ChainParams;
use super::series::{NeumaierSum, SeriesCertificate, Verdict};
use super::MarkovKernel;
use crate::error::{Error, Result};

/// The reflection `|X|` of the chain on Z: a nearest-neighbor chain on N₀
/// with holding probability `p_k` (the jump `x → −x` keeps `|x|`).
/// State 0 always moves to 1.
#[derive(Clone, Debug)]
pub struct BirthDeathChain {
    params: ChainParams,
}

impl BirthDeathChain {
    pub fn reflected(params: ChainParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> ChainParams {
        self.params
    }

    pub fn up(&self, k: u64) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.params.moves(k).0
        }
    }

    pub fn down(&self, k: u64) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.params.moves(k).1
        }
    }

    pub fn stay(&self, k: u64) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.params.moves(k).2
        }
    }

    /// `ln(down(k)/up(k))`, the log of `r(e_{k+1})/r(e_k)`, for `k ≥ 1`.
    fn log_ratio(&self, k: u64) -> Result<f64> {
        let up = self.up(k);
        if up <= 0.0 {
            return Err(Error::ZeroUpProbability { state: k });
        }
        let (_, e) = self.params.at(k);
        // The holding probability cancels; log1p keeps small ε accurate.
        Ok((-e).ln_1p() - e.ln_1p())
    }

    /// `r(e_k) = P(k−1,k−2)…P(1,0) / (P(0,1)…P(k−1,k))`, evaluated in log space.
    pub fn resistance(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::OutOfRange("edges are numbered from 1".into()));
        }
        let mut log_r = -self.up(0).ln();
        for i in 1..k {
            log_r += self.log_ratio(i)?;
        }
        Ok(log_r.exp())
    }
}

impl MarkovKernel for BirthDeathChain {
    type State = u64;

    fn transitions(&self, &k: &u64) -> Result<Vec<(u64, f64)>> {
        let mut row = vec![(k + 1, self.up(k)), (k, self.stay(k))];
        if k > 0 {
            row.push((k - 1, self.down(k)));
        }
        row.retain(|&(_, p)| p > 0.0);
        Ok(row)
    }

    fn distance(&self, x: &u64, y: &u64) -> u64 {
        x.abs_diff(*y)
    }

    fn neighbors(&self, &k: &u64) -> Vec<u64> {
        if k == 0 {
            vec![1]
        } else {
            vec![k + 1, k - 1]
        }
    }

    fn state_name(&self, x: &u64) -> String {
        x.to_string()
    }

    fn sample_step<R: Rng + ?Sized>(&self, &k: &u64, rng: &mut R) -> Result<u64> {
        if k == 0 {
            return Ok(1);
        }
        let u: f64 = rng.random();
        let (up, down, _) = self.params.moves(k);
        Ok(if u < up {
            k + 1
        } else if u < up + down {
            k - 1
        } else {
            k
        })
    }
}

/// Resistances `r(e_1..=e_N)` and an enclosure of the tail `Σ_{k>N} r(e_k)`.
#[derive(Clone, Debug)]
pub struct ResistanceTable {
    chain: BirthDeathChain,
    r: Vec<f64>,
    tail: (f64, f64),
    tail_formula: &'static str,
}

impl ResistanceTable {
    pub fn build(chain: &BirthDeathChain, n_max: u64) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::OutOfRange("series need N >= 2".into()));
        }
        let mut r = Vec::with_capacity(n_max as usize + 1);
        r.push(f64::NAN);
        let mut log_r = -chain.up(0).ln();
        r.push(log_r.exp());
        for k in 1..n_max {
            log_r += chain.log_ratio(k)?;
            r.push(log_r.exp());
        }
        let last = r[n_max as usize];
        let (tail, tail_formula) = match chain.params {
            ChainParams::Counterexample => {
                // r(e_k) = C/(k ln² k) for k ≥ 2 with C read off at N; the sum
                // of a decreasing function lies between its integrals.
                let n = n_max as f64;
                let c = last * n * n.ln().powi(2);
                (
                    (c / (n + 1.0).ln(), c / n.ln()),
                    "C/ln(N+1) <= tail <= C/ln N with C = r(e_N) N ln^2 N",
                )
            }
            ChainParams::Constant { eps, .. } => {
                let rho = (1.0 - eps) / (1.0 + eps);
                if rho < 1.0 {
                    let t = last * rho / (1.0 - rho);
                    ((t, t), "geometric tail r(e_N) rho/(1-rho)")
                } else {
                    ((f64::INFINITY, f64::INFINITY), "r(e_k) constant")
                }
            }
        };
        Ok(Self {
            chain: chain.clone(),
            r,
            tail,
            tail_formula,
        })
    }

    pub fn chain(&self) -> &BirthDeathChain {
        &self.chain
    }

    pub fn n_max(&self) -> u64 {
        self.r.len() as u64 - 1
    }

    /// `r(e_k)` for `1 ≤ k ≤ N`.
    pub fn r(&self, k: u64) -> f64 {
        self.r[k as usize]
    }

    pub fn tail(&self) -> (f64, f64) {
        self.tail
    }

    pub fn is_transient(&self) -> bool {
        self.tail.1.is_finite()
    }

    /// Enclosure of `T(n) = Σ_{k>n} r(e_k)`.
    pub fn tail_from(&self, n: u64) -> (f64, f64) {
        let s: NeumaierSum = self.r[(n as usize + 1).min(self.r.len())..].iter().copied().collect();
        (s.value() + self.tail.0, s.value() + self.tail.1)
    }

    /// `T(n)` lower ends for every `n = 0..=N`, in one backward pass.
    fn tails_lower(&self) -> Vec<f64> {
        let n = self.r.len();
        let mut out = vec![0.0; n];
        let mut acc = NeumaierSum::default();
        acc.add(self.tail.0);
        for k in (0..n).rev() {
            out[k] = acc.value();
            if k >= 1 {
                acc.add(self.r[k]);
            }
        }
        out
    }
}

fn checkpoints(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |c| c.checked_mul(10))
        .take_while(|&c| c < n)
        .collect();
    out.push(n);
    out
}

/// `Σ_{k=1}^{N} r(e_k)` with the tail enclosure of the table.
pub fn transience_series(table: &ResistanceTable) -> SeriesCertificate {
    let n = table.n_max();
    let marks = checkpoints(n);
    let mut sum = NeumaierSum::default();
    let mut points = Vec::new();
    let mut next = 0;
    for k in 1..=n {
        sum.add(table.r(k));
        if k == marks[next] {
            points.push((k, sum.value()));
            next += 1;
        }
    }
    let verdict = if table.is_transient() {
        Verdict::Converges
    } else {
        Verdict::Diverges
    };
    SeriesCertificate {
        series: "sum r(e_k)".into(),
        checkpoints: points,
        tail_bound: table.tail.1,
        tail_formula: table.tail_formula.into(),
        verdict,
    }
}

/// Enclosure of `G̃(n,n) = T(n) / (r(e_n) P̃(n,n−1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenInterval {
    pub n: u64,
    pub lo: f64,
    pub hi: f64,
}

impl GreenInterval {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

pub fn exact_green_birthdeath(table: &ResistanceTable, n: u64) -> Result<GreenInterval> {
    if n < 1 || n >= table.n_max() {
        return Err(Error::OutOfRange(format!(
            "need 1 <= n < N = {}, got {n}",
            table.n_max()
        )));
    }
    if !table.is_transient() {
        return Err(Error::Recurrent(table.tail_formula.into()));
    }
    let (lo, hi) = table.tail_from(n);
    let denom = table.r(n) * table.chain.down(n);
    Ok(GreenInterval {
        n,
        lo: lo / denom,
        hi: hi / denom,
    })
}

/// `p_n T(n) / r(e_n)` for `n = 2..=N`, using the lower end of `T(n)`.
pub fn sign_flip_terms(table: &ResistanceTable) -> Result<Vec<f64>> {
    let params = table.chain.params;
    if !table.is_transient() && params.at(2).0 > 0.0 {
        return Err(Error::Recurrent(table.tail_formula.into()));
    }
    let tails = table.tails_lower();
    Ok((2..=table.n_max())
        .map(|n| {
            let p = params.at(n).0;
            if p == 0.0 {
                0.0
            } else {
                p * tails[n as usize] / table.r(n)
            }
        })
        .collect())
}

/// Partial sums `J(N) = Σ_{n=2}^{N} p_n T(n)/r(e_n)`. Divergence is certified
/// by the term-wise minorant `κ/(n ln(n+1))` whose sum grows like `κ ln ln N`;
/// `κ` is the smallest ratio observed over `2 ≤ n ≤ N`.
pub fn expected_sign_flips(table: &ResistanceTable) -> Result<(SeriesCertificate, f64)> {
    let terms = sign_flip_terms(table)?;
    let n = table.n_max();
    let marks = checkpoints(n);
    let mut sum = NeumaierSum::default();
    let mut points = Vec::new();
    let mut next = 0;
    let mut kappa = f64::INFINITY;
    for (i, t) in terms.iter().enumerate() {
        let k = i as u64 + 2;
        sum.add(*t);
        let kf = k as f64;
        kappa = kappa.min(t * kf * (kf + 1.0).ln());
        if k == marks[next] {
            points.push((k, sum.value()));
            next += 1;
        }
    }
    let cert = if sum.value() == 0.0 {
        SeriesCertificate {
            series: "sum p_n T(n)/r(e_n)".into(),
            checkpoints: points,
            tail_bound: 0.0,
            tail_formula: "all terms vanish".into(),
            verdict: Verdict::Converges,
        }
    } else if kappa > 0.0 {
        SeriesCertificate {
            series: "sum p_n T(n)/r(e_n)".into(),
            checkpoints: points,
            tail_bound: f64::INFINITY,
            tail_formula: format!("terms >= {kappa:.6}/(n ln(n+1)), sum ~ ln ln N"),
            verdict: Verdict::Diverges,
        }
    } else {
        SeriesCertificate {
            series: "sum p_n T(n)/r(e_n)".into(),
            checkpoints: points,
            tail_bound: f64::NAN,
            tail_formula: "no minorant".into(),
            verdict: Verdict::Inconclusive,
        }
    };
    Ok((cert, kappa))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reflected_counterexample() -> BirthDeathChain {
        BirthDeathChain::reflected(ChainParams::Counterexample).unwrap()
    }

    #[test]
    fn resistances_match_ratio_identity() {
        let c = reflected_counterexample();
        let t = ResistanceTable::build(&c, 100_000).unwrap();
        assert_eq!(t.r(1), 1.0);
        assert!((c.resistance(50).unwrap() - t.r(50)).abs() < 1e-14);
        for k in 1..100_000 {
            let (_, e) = ChainParams::Counterexample.at(k);
            let want = (1.0 - e) / (1.0 + e);
            assert!((t.r(k + 1) / t.r(k) - want).abs() < 1e-12, "k = {k}");
        }
        // r(e_k) k ln² k is constant from k = 2 on
        let c2 = t.r(2) * 2.0 * 2f64.ln().powi(2);
        for k in [3u64, 10, 1000, 99_999] {
            let kf = k as f64;
            assert!((t.r(k) * kf * kf.ln().powi(2) / c2 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_chain_is_recurrent() {
        let c = BirthDeathChain::reflected(ChainParams::Constant { p: 0.2, eps: 0.0 }).unwrap();
        let t = ResistanceTable::build(&c, 1000).unwrap();
        assert!((t.r(500) - t.r(1)).abs() < 1e-12);
        assert_eq!(transience_series(&t).verdict, Verdict::Diverges);
        assert!(matches!(exact_green_birthdeath(&t, 3), Err(Error::Recurrent(_))));
    }

    #[test]
    fn green_values() {
        let t = ResistanceTable::build(&reflected_counterexample(), 1_000_000).unwrap();
        for n in 1..=10 {
            let g = exact_green_birthdeath(&t, n).unwrap();
            assert!(g.lo >= 1.0);
            assert!(g.hi - g.lo < 1e-6 * g.lo);
        }
        // drifted geometric chain: G(n,n) = 1/(1 - return probability)
        let c = BirthDeathChain::reflected(ChainParams::Constant { p: 0.0, eps: 0.5 }).unwrap();
        let t = ResistanceTable::build(&c, 200).unwrap();
        let g = exact_green_birthdeath(&t, 5).unwrap();
        // from 5: down w.p. 1/4 always returns; up w.p. 3/4 returns w.p. 1/3
        assert!((g.mid() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flips_terms_positive() {
        let t = ResistanceTable::build(&reflected_counterexample(), 10_000).unwrap();
        let terms = sign_flip_terms(&t).unwrap();
        assert!(terms.iter().all(|&x| x > 0.0));
        let (cert, kappa) = expected_sign_flips(&t).unwrap();
        assert_eq!(cert.verdict, Verdict::Diverges);
        assert!(kappa > 0.5);
        let z = BirthDeathChain::reflected(ChainParams::Constant { p: 0.0, eps: 0.3 }).unwrap();
        let (zc, _) = expected_sign_flips(&ResistanceTable::build(&z, 100).unwrap()).unwrap();
        assert_eq!(zc.last(), 0.0);
    }
}
