//! Probability measures on the acting groups.
//!
//! A [`GroupMeasure`] is a finite list of atoms (reduced words with
//! probabilities) plus, optionally, a symmetric radial power law on the Z²
//! factor generated by `b` and `c`. The power law has countable support, so it
//! is never enumerated: its radius is drawn from the exact radial law (alias
//! table up to the truncation radius, rejection sampling beyond it) and the
//! site uniformly on that ℓ¹ sphere.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::actions::{Action, Letter, Word};
use crate::chains::MarkovKernel;
use crate::error::{Error, Result};

/// Tolerance on the total mass of user-supplied atoms.
const INPUT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub word: Word,
    pub prob: f64,
}

/// `μ(z) = C‖z‖₁^{-(2+α)}` on Z² ∖ {0}, scaled by `weight`.
#[derive(Clone, Debug)]
pub struct PowerLawZ2 {
    pub alpha: f64,
    pub radius: u64,
    pub weight: f64,
    radial: WeightedAliasIndex<f64>,
    zeta: f64,
    tail_envelope: f64,
}

impl PowerLawZ2 {
    fn new(alpha: f64, radius: u64, weight: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::OutOfRange(format!("alpha = {alpha} must lie in (1,2)")));
        }
        if radius < 1 {
            return Err(Error::OutOfRange("truncation radius must be at least 1".into()));
        }
        let s = 1.0 + alpha;
        let zeta = zeta_tail(s, 1);
        let mut weights: Vec<f64> = (1..=radius).map(|m| (m as f64).powf(-s) / zeta).collect();
        weights.push(zeta_tail(s, radius + 1) / zeta);
        let radial = WeightedAliasIndex::new(weights).map_err(|e| Error::InvalidMeasure(format!("radial law: {e}")))?;
        let r1 = (radius + 1) as f64;
        Ok(Self {
            alpha,
            radius,
            weight,
            radial,
            zeta,
            tail_envelope: (1.0 + 1.0 / r1).powf(s),
        })
    }

    /// The normalizing constant `C` of the unit-weight law.
    pub fn constant(&self) -> f64 {
        1.0 / (4.0 * self.zeta)
    }

    /// Mass of a single site `z`, including the family weight.
    pub fn mass_at(&self, x: i64, y: i64) -> f64 {
        let m = x.unsigned_abs() + y.unsigned_abs();
        if m == 0 {
            0.0
        } else {
            self.weight * self.constant() * (m as f64).powf(-(2.0 + self.alpha))
        }
    }

    /// Probability that `‖z‖₁ = m` under the unit-weight law.
    pub fn radial_mass(&self, m: u64) -> f64 {
        if m == 0 {
            0.0
        } else {
            (m as f64).powf(-(1.0 + self.alpha)) / self.zeta
        }
    }

    /// Probability that `‖z‖₁ > r` under the unit-weight law.
    pub fn radial_tail(&self, r: u64) -> f64 {
        zeta_tail(1.0 + self.alpha, r + 1) / self.zeta
    }

    /// `E‖z‖₁ = ζ(α)/ζ(1+α)` for the unit-weight law.
    pub fn mean_norm(&self) -> f64 {
        zeta_tail(self.alpha, 1) / self.zeta
    }

    fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let i = self.radial.sample(rng);
        if (i as u64) < self.radius {
            return i as u64 + 1;
        }
        // Beyond the table: propose floor of a continuous Pareto on [R+1, ∞)
        // and accept with the ratio of the exact law to the proposal.
        let a = self.alpha;
        let r1 = (self.radius + 1) as f64;
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let x = r1 * u.powf(-1.0 / a);
            if !x.is_finite() || x >= 9.0e18 {
                continue;
            }
            let m = x.floor();
            let target = m.powf(-(1.0 + a));
            let cell = m.powf(-a) * -(-a * (1.0 / m).ln_1p()).exp_m1() / a;
            if rng.random::<f64>() * self.tail_envelope * cell <= target {
                return m as u64;
            }
        }
    }

    fn sample_site<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        let m = self.sample_radius(rng) as i64;
        let k = rng.random_range(0..4 * m);
        let (q, i) = (k / m, k % m);
        match q {
            0 => (m - i, i),
            1 => (-i, m - i),
            2 => (-(m - i), -i),
            _ => (i, -(m - i)),
        }
    }
}

/// `Σ_{m ≥ n0} m^{-s}` for `s > 1` by Euler–Maclaurin summation.
pub fn zeta_tail(s: f64, n0: u64) -> f64 {
    const BERNOULLI: [f64; 6] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
    ];
    let n = n0.max(1).max(20);
    let mut head = 0.0;
    for m in n0.max(1)..n {
        head += (m as f64).powf(-s);
    }
    let nf = n as f64;
    let mut sum = head + nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // B_{2k}/(2k)! * s(s+1)...(s+2k-2) * n^{-s-2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let k = k + 1;
        sum += b / fact * rising * nf.powf(-s - 2.0 * k as f64 + 1.0);
        let j = 2.0 * k as f64;
        rising *= (s + j - 1.0) * (s + j);
        fact *= (j + 1.0) * (j + 2.0);
    }
    sum
}

#[derive(Clone, Debug)]
pub struct GroupMeasure {
    atoms: Vec<Atom>,
    family: Option<PowerLawZ2>,
    sampler: WeightedAliasIndex<f64>,
}

impl PartialEq for GroupMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
            && match (&self.family, &other.family) {
                (None, None) => true,
                (Some(a), Some(b)) => a.alpha == b.alpha && a.radius == b.radius && a.weight == b.weight,
                _ => false,
            }
    }
}

impl GroupMeasure {
    /// Finite measure from `(word, probability)` pairs. Words are reduced and
    /// merged; rounding defect up to 1e-9 is moved into the largest atom.
    pub fn new(atoms: impl IntoIterator<Item = (Word, f64)>) -> Result<Self> {
        Self::build(atoms, None)
    }

    fn build(atoms: impl IntoIterator<Item = (Word, f64)>, family: Option<(f64, u64, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<Word, f64> = BTreeMap::new();
        for (w, p) in atoms {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom {w} has probability {p}")));
            }
            *merged.entry(w.reduce()).or_insert(0.0) += p;
        }
        let family_weight = family.map_or(0.0, |f| f.2);
        let total: f64 = merged.values().sum::<f64>() + family_weight;
        if (total - 1.0).abs() > INPUT_TOLERANCE {
            return Err(Error::NotNormalized { total });
        }
        let mut atoms: Vec<Atom> = merged.into_iter().map(|(word, prob)| Atom { word, prob }).collect();
        if let Some(big) = atoms.iter_mut().max_by(|a, b| a.prob.total_cmp(&b.prob)) {
            big.prob += 1.0 - total;
        }
        let family = family
            .map(|(alpha, radius, weight)| PowerLawZ2::new(alpha, radius, weight))
            .transpose()?;
        let mut weights: Vec<f64> = atoms.iter().map(|a| a.prob).collect();
        if let Some(f) = &family {
            weights.push(f.weight);
        }
        let sampler = WeightedAliasIndex::new(weights).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        Ok(Self { atoms, family, sampler })
    }

    pub fn dirac(word: Word) -> Self {
        Self::new([(word, 1.0)]).expect("point mass is valid")
    }

    /// Uniform on the generators and their inverses: the simple random walk.
    pub fn uniform(action: Action) -> Self {
        let letters = action.letters();
        let p = 1.0 / letters.len() as f64;
        Self::new(letters.into_iter().map(|l| (Word(vec![l]), p))).expect("uniform is valid")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn family(&self) -> Option<&PowerLawZ2> {
        self.family.as_ref()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob).sum::<f64>() + self.family.as_ref().map_or(0.0, |f| f.weight)
    }

    /// Probability of a (reduced) word among the atoms, ignoring the family.
    pub fn prob(&self, word: &Word) -> f64 {
        let w = word.reduce();
        self.atoms.iter().find(|a| a.word == w).map_or(0.0, |a| a.prob)
    }

    /// Letters used by any support word.
    pub fn symbols(&self) -> BTreeSet<char> {
        let mut s: BTreeSet<char> = self.atoms.iter().flat_map(|a| a.word.symbols()).collect();
        if self.family.is_some() {
            s.extend(['b', 'c']);
        }
        s
    }

    pub fn check_action(&self, action: Action) -> Result<()> {
        for c in self.symbols() {
            action.check_letter(Letter::new(c))?;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.family.is_none()
    }

    pub fn is_symmetric(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| (self.prob(&a.word.inverse()) - a.prob).abs() <= 1e-15)
    }

    /// `Σ μ(g)|g|` with `|g|` the reduced word length.
    pub fn first_moment(&self) -> f64 {
        self.first_moment_with_bound().0
    }

    /// First moment together with a bound on its numerical error.
    pub fn first_moment_with_bound(&self) -> (f64, f64) {
        let head: f64 = self.atoms.iter().map(|a| a.prob * a.word.len() as f64).sum();
        match &self.family {
            None => (head, 0.0),
            Some(f) => (head + f.weight * f.mean_norm(), 1e-12),
        }
    }

    /// `g ↦ μ(g⁻¹)`.
    pub fn inverse(&self) -> Self {
        let atoms = self.atoms.iter().map(|a| (a.word.inverse(), a.prob));
        Self::build(atoms, self.family.as_ref().map(|f| (f.alpha, f.radius, f.weight)))
            .expect("inverse of a valid measure is valid")
    }

    /// Draws one element, written into `out` (cleared first).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<Letter>) {
        out.clear();
        let i = self.sampler.sample(rng);
        if let Some(a) = self.atoms.get(i) {
            out.extend_from_slice(&a.word.0);
            return;
        }
        let f = self.family.as_ref().expect("index past atoms is the family");
        let (x, y) = f.sample_site(rng);
        push_power(out, 'b', x);
        push_power(out, 'c', y);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        let mut v = Vec::new();
        self.sample_into(rng, &mut v);
        Word(v)
    }

    pub fn to_doc(&self) -> MeasureDoc {
        MeasureDoc {
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomDoc {
                    word: a.word.clone(),
                    prob: a.prob,
                })
                .collect(),
            family: self.family.as_ref().map(|f| FamilyDoc {
                kind: POWER_LAW_KIND.into(),
                alpha: f.alpha,
                radius: f.radius,
            }),
        }
    }

    pub fn from_doc(doc: &MeasureDoc) -> Result<Self> {
        let atom_mass: f64 = doc.atoms.iter().map(|a| a.prob).sum();
        let family = match &doc.family {
            None => None,
            Some(f) if f.kind == POWER_LAW_KIND => Some((f.alpha, f.radius, 1.0 - atom_mass)),
            Some(f) => return Err(Error::InvalidMeasure(format!("unknown family kind {:?}", f.kind))),
        };
        Self::build(doc.atoms.iter().map(|a| (a.word.clone(), a.prob)), family)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("measure serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: MeasureDoc = serde_json::from_str(s).map_err(|e| Error::Parse {
            input: "measure document".into(),
            reason: e.to_string(),
        })?;
        Self::from_doc(&doc)
    }
}

fn push_power(out: &mut Vec<Letter>, symbol: char, k: i64) {
    let l = if k >= 0 {
        Letter::new(symbol)
    } else {
        Letter::inv(symbol)
    };
    out.extend(std::iter::repeat_n(l, k.unsigned_abs() as usize));
}

const POWER_LAW_KIND: &str = "power-law-z2";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub word: Word,
    pub prob: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub kind: String,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: u64,
}

/// JSON form `{atoms: [{word, prob}], family: {kind, alpha, R}}`; the family
/// carries whatever mass the atoms leave.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    #[serde(default)]
    pub atoms: Vec<AtomDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyDoc>,
}

pub const DEFAULT_TRUNCATION: u64 = 1000;

/// μ(a) = 3/8, μ(a⁻¹) = 1/8, μ(b) = μ(b⁻¹) = 1/4 on F₂ acting on Ψ.
pub fn example1_measure() -> GroupMeasure {
    let w = |s: &str| s.parse::<Word>().expect("literal");
    GroupMeasure::new([(w("a"), 0.375), (w("a'"), 0.125), (w("b"), 0.25), (w("b'"), 0.25)]).expect("literal measure")
}

/// The symmetric power law on Z² = ⟨b, c⟩.
pub fn heavy_tail_z2(alpha: f64, radius: u64) -> Result<GroupMeasure> {
    GroupMeasure::build([], Some((alpha, radius, 1.0)))
}

/// ¼(δ_a + δ_{a⁻¹}) + ½μ on Z∗Z² with μ the power law on ⟨b, c⟩.
pub fn example2_measure(alpha: f64, radius: u64) -> Result<GroupMeasure> {
    let w = |s: &str| s.parse::<Word>().expect("literal");
    GroupMeasure::build([(w("a"), 0.25), (w("a'"), 0.25)], Some((alpha, radius, 0.5)))
}

/// Reduced supports of `μ^{*j}` for `j = 1..=k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionSupport {
    pub per_step: Vec<BTreeSet<Word>>,
    /// First `j` whose support exceeded the cap; later powers are not computed.
    pub truncated_at: Option<usize>,
}

impl ConvolutionSupport {
    pub fn union(&self) -> BTreeSet<Word> {
        self.per_step.iter().flatten().cloned().collect()
    }
}

pub fn convolution_power_support(measure: &GroupMeasure, k: usize, cap: usize) -> Result<ConvolutionSupport> {
    if k == 0 {
        return Err(Error::OutOfRange("convolution power must be at least 1".into()));
    }
    if !measure.is_finite() {
        return Err(Error::InfiniteSupport(
            "convolution supports need a finite measure".into(),
        ));
    }
    let base: Vec<&Word> = measure.atoms.iter().map(|a| &a.word).collect();
    let mut per_step: Vec<BTreeSet<Word>> = vec![base.iter().map(|w| (*w).clone()).collect()];
    let mut truncated_at = (per_step[0].len() > cap).then_some(1);
    while per_step.len() < k && truncated_at.is_none() {
        let prev = per_step.last().expect("nonempty");
        let mut next = BTreeSet::new();
        'outer: for u in prev {
            for v in &base {
                next.insert(u.concat(v).reduce());
                if next.len() > cap {
                    truncated_at = Some(per_step.len() + 1);
                    break 'outer;
                }
            }
        }
        per_step.push(next);
    }
    Ok(ConvolutionSupport { per_step, truncated_at })
}

/// `σ_x(n) = Σ_{y: d(x,y) = n} p(x,y)` for `n = 0..=radius`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDistributionSummary {
    pub center: String,
    pub radius: u64,
    pub masses: Vec<f64>,
    /// Mass at distance beyond `radius`.
    pub beyond: f64,
}

pub fn step_distribution<K: MarkovKernel>(kernel: &K, x: &K::State, radius: u64) -> Result<StepDistributionSummary> {
    let mut masses = vec![0.0; radius as usize + 1];
    let mut beyond = 0.0;
    for (y, p) in kernel.transitions(x)? {
        let d = kernel.distance(x, &y);
        match masses.get_mut(d as usize) {
            Some(m) if d <= radius => *m += p,
            _ => beyond += p,
        }
    }
    Ok(StepDistributionSummary {
        center: kernel.state_name(x),
        radius,
        masses,
        beyond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn first_moments() {
        assert_eq!(GroupMeasure::dirac(Word::empty()).first_moment(), 0.0);
        assert_eq!(GroupMeasure::uniform(Action::Thompson).first_moment(), 1.0);
        assert_eq!(example1_measure().first_moment(), 1.0);
        let m = GroupMeasure::new([(w("ab"), 0.5), (w("aa'"), 0.5)]).unwrap();
        assert_eq!(m.first_moment(), 1.0);
    }

    #[test]
    fn inverse_measures() {
        assert_eq!(GroupMeasure::dirac(w("A")).inverse(), GroupMeasure::dirac(w("A'")));
        let inv = example1_measure().inverse();
        assert_eq!(inv.prob(&w("a")), 0.125);
        assert_eq!(inv.prob(&w("a'")), 0.375);
        assert_eq!(inv.prob(&w("b")), 0.25);
        let u = GroupMeasure::uniform(Action::Psi);
        assert_eq!(u.inverse(), u);
        assert!(!example1_measure().is_symmetric());
    }

    #[test]
    fn validation() {
        assert!(matches!(
            GroupMeasure::new([(w("a"), 0.5)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(GroupMeasure::new([(w("a"), 1.5), (w("b"), -0.5)]).is_err());
        assert!(heavy_tail_z2(2.5, 10).is_err());
        assert!(heavy_tail_z2(1.0, 10).is_err());
    }

    #[test]
    fn zeta_values() {
        assert!((zeta_tail(2.0, 1) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((zeta_tail(4.0, 1) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-13);
        let direct: f64 = (5..20).map(|m| (m as f64).powf(-2.5)).sum::<f64>() + zeta_tail(2.5, 20);
        assert!((zeta_tail(2.5, 5) - direct).abs() < 1e-13);
    }

    #[test]
    fn power_law_is_normalized_and_symmetric() {
        let m = heavy_tail_z2(1.5, 1000).unwrap();
        let f = m.family().unwrap();
        let head: f64 = (1..=1000).map(|r| f.radial_mass(r)).sum();
        assert!((head + f.radial_tail(1000) - 1.0).abs() < 1e-12);
        assert_eq!(f.mass_at(3, -4), f.mass_at(-3, 4));
        let sites: f64 = (1..=50i64).map(|r| 4.0 * r as f64 * f.mass_at(r, 0)).sum();
        let radial: f64 = (1..=50).map(|r| f.radial_mass(r)).sum();
        assert!((sites - radial).abs() < 1e-14);
        assert!(m.first_moment().is_finite());
    }

    #[test]
    fn mixture_weights() {
        let m = example2_measure(1.5, 1000).unwrap();
        assert_eq!(m.prob(&w("a")), 0.25);
        assert_eq!(m.prob(&w("a'")), 0.25);
        let f = m.family().unwrap();
        let single = heavy_tail_z2(1.5, 1000).unwrap();
        assert_eq!(f.mass_at(2, 1), 0.5 * single.family().unwrap().mass_at(2, 1));
        assert!(m.is_symmetric());
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = example2_measure(1.5, 10).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200).map(|_| m.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = GroupMeasure::dirac(w("A"));
        assert!((0..10).all(|_| d.sample(&mut rng) == w("A")));
    }

    #[test]
    fn json_round_trip() {
        for m in [example1_measure(), example2_measure(1.5, 100).unwrap()] {
            let back = GroupMeasure::from_json(&m.to_json()).unwrap();
            assert_eq!(back, m);
        }
        assert!(GroupMeasure::from_json(r#"{"atoms": [], "extra": 1}"#).is_err());
    }

    #[test]
    fn convolution_supports() {
        let s = convolution_power_support(&GroupMeasure::dirac(w("A")), 3, 100).unwrap();
        assert_eq!(s.per_step[2], BTreeSet::from([w("AAA")]));
        let u = convolution_power_support(&GroupMeasure::uniform(Action::Psi), 2, 100).unwrap();
        // 1 + 4 + 12 reduced words of length at most two
        assert_eq!(u.union().len(), 17);
        let e = convolution_power_support(&example1_measure(), 2, 100).unwrap();
        assert_eq!(e.per_step[1].len(), 13);
        let t = convolution_power_support(&GroupMeasure::uniform(Action::Psi), 3, 10).unwrap();
        assert_eq!(t.truncated_at, Some(2));
        assert!(convolution_power_support(&heavy_tail_z2(1.5, 5).unwrap(), 1, 10).is_err());
    }
}
