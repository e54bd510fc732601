//! The three group actions: Thompson's group F on dyadic rationals in (0,1),
//! the free group F₂ on the comb graph Ψ, and Z∗Z² on the plane comb Ψ′.
//!
//! Words act on points left to right: `x.w` applies the first letter first.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicPoint, DyadicRational, ThompsonMap};
use crate::error::{Error, Result};

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub symbol: char,
    pub inverted: bool,
}

impl Letter {
    pub const fn new(symbol: char) -> Self {
        Self {
            symbol,
            inverted: false,
        }
    }

    pub const fn inv(symbol: char) -> Self {
        Self { symbol, inverted: true }
    }

    pub fn inverse(self) -> Self {
        Self {
            symbol: self.symbol,
            inverted: !self.inverted,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "{}'", self.symbol)
        } else {
            write!(f, "{}", self.symbol)
        }
    }
}

/// A finite word over a generator alphabet. Serializes as a letter string with
/// `'` marking inverses, e.g. `ABA'`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// Cancels adjacent letter/inverse pairs until none remain.
    pub fn reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// The word of the inverse element: reversed, each letter inverted.
    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn symbols(&self) -> impl Iterator<Item = char> + '_ {
        self.0.iter().map(|l| l.symbol)
    }
}

pub fn reduce_word(word: &Word) -> Word {
    word.reduce()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut letters: Vec<Letter> = Vec::new();
        for c in s.chars() {
            if c == '\'' {
                match letters.last_mut() {
                    Some(l) if !l.inverted => l.inverted = true,
                    _ => {
                        return Err(Error::Parse {
                            input: s.to_string(),
                            reason: "misplaced inverse mark".into(),
                        })
                    }
                }
            } else if c.is_ascii_alphabetic() {
                letters.push(Letter::new(c));
            } else if !c.is_whitespace() {
                return Err(Error::Parse {
                    input: s.to_string(),
                    reason: format!("unexpected character {c:?}"),
                });
            }
        }
        Ok(Word(letters))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Vertex of Ψ: a bi-infinite vertical spine (offset 0) with a horizontal line
/// through every spine vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CombVertex {
    pub level: i64,
    pub offset: i64,
}

/// Vertex of Ψ′: the horizontal lines of Ψ replaced by Z² planes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaneVertex {
    pub level: i64,
    pub x: i64,
    pub y: i64,
}

impl CombVertex {
    pub fn new(level: i64, offset: i64) -> Self {
        Self { level, offset }
    }
    pub fn is_spine(&self) -> bool {
        self.offset == 0
    }
}

impl PlaneVertex {
    pub fn new(level: i64, x: i64, y: i64) -> Self {
        Self { level, x, y }
    }
    pub fn is_spine(&self) -> bool {
        self.x == 0 && self.y == 0
    }
}

/// Which of the three actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    /// Thompson's group F on dyadic rationals in (0,1), generators A, B.
    Thompson,
    /// F₂ = ⟨a, b⟩ on Ψ.
    Psi,
    /// Z∗Z² = ⟨a⟩∗⟨b, c⟩ on Ψ′.
    PsiPrime,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Thompson => "thompson",
            Action::Psi => "psi",
            Action::PsiPrime => "psi-prime",
        }
    }

    pub fn alphabet(self) -> &'static [char] {
        match self {
            Action::Thompson => &['A', 'B'],
            Action::Psi => &['a', 'b'],
            Action::PsiPrime => &['a', 'b', 'c'],
        }
    }

    /// All generators and inverses in the fixed order `s, s', t, t', ...`.
    pub fn letters(self) -> Vec<Letter> {
        self.alphabet()
            .iter()
            .flat_map(|&c| [Letter::new(c), Letter::inv(c)])
            .collect()
    }

    /// Whether the Schreier graph is a tree once loops and parallel edges are
    /// ignored.
    pub fn is_tree(self) -> bool {
        matches!(self, Action::Thompson | Action::Psi)
    }

    pub fn check_letter(self, letter: Letter) -> Result<()> {
        if self.alphabet().contains(&letter.symbol) {
            Ok(())
        } else {
            Err(Error::UnknownLetter {
                letter: letter.to_string(),
                action: self.name(),
                alphabet: self.alphabet(),
            })
        }
    }

    pub fn check_word(self, word: &Word) -> Result<()> {
        word.letters().iter().try_for_each(|&l| self.check_letter(l))
    }

    /// Parses a point in this action's serialization.
    pub fn parse_point(self, s: &str) -> Result<ActionPoint> {
        let bad = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        match self {
            Action::Thompson => Ok(ActionPoint::Dyadic(s.parse()?)),
            Action::Psi | Action::PsiPrime => {
                let inner = s
                    .trim()
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| bad("expected a parenthesized tuple"))?;
                let parts: Vec<i64> = inner
                    .split(',')
                    .map(|p| p.trim().parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("coordinates must be integers"))?;
                match (self, parts.as_slice()) {
                    (Action::Psi, &[level, offset]) => Ok(ActionPoint::Psi(CombVertex::new(level, offset))),
                    (Action::PsiPrime, &[level, x, y]) => Ok(ActionPoint::PsiPrime(PlaneVertex::new(level, x, y))),
                    _ => Err(bad("wrong number of coordinates")),
                }
            }
        }
    }
}

impl FromStr for Action {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thompson" | "F" => Ok(Action::Thompson),
            "psi" => Ok(Action::Psi),
            "psi-prime" | "psi_prime" => Ok(Action::PsiPrime),
            _ => Err(Error::Parse {
                input: s.into(),
                reason: "expected thompson, psi or psi-prime".into(),
            }),
        }
    }
}

/// A point of one of the three actions; the tag never changes under the action.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ActionPoint {
    Dyadic(DyadicPoint),
    Psi(CombVertex),
    PsiPrime(PlaneVertex),
}

impl ActionPoint {
    pub fn action(&self) -> Action {
        match self {
            ActionPoint::Dyadic(_) => Action::Thompson,
            ActionPoint::Psi(_) => Action::Psi,
            ActionPoint::PsiPrime(_) => Action::PsiPrime,
        }
    }

    pub fn dyadic(value: &DyadicRational) -> Result<Self> {
        Ok(ActionPoint::Dyadic(DyadicPoint::from_rational(value)?))
    }

    pub fn as_dyadic(&self) -> Option<&DyadicPoint> {
        match self {
            ActionPoint::Dyadic(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_comb(&self) -> Option<CombVertex> {
        match self {
            ActionPoint::Psi(v) => Some(*v),
            _ => None,
        }
    }

    /// A cheap size measure that never decreases by more than one per letter:
    /// binary depth for dyadics, ℓ¹ norm for comb vertices.
    pub fn size(&self) -> u64 {
        match self {
            ActionPoint::Dyadic(p) => p.depth() as u64,
            ActionPoint::Psi(v) => v.level.unsigned_abs() + v.offset.unsigned_abs(),
            ActionPoint::PsiPrime(v) => v.level.unsigned_abs() + v.x.unsigned_abs() + v.y.unsigned_abs(),
        }
    }

    /// Whether `self.s == self.t`.
    pub fn images_equal(&self, s: Letter, t: Letter) -> bool {
        if s == t {
            return true;
        }
        match self {
            ActionPoint::Dyadic(p) => p.images_equal(thompson_map(s), thompson_map(t)),
            _ => {
                let (mut a, mut b) = (self.clone(), self.clone());
                a.apply_in_place(s);
                b.apply_in_place(t);
                a == b
            }
        }
    }

    /// Applies a letter in place; returns false when the point is fixed.
    /// The letter must already be validated against the point's alphabet.
    pub fn apply_in_place(&mut self, letter: Letter) -> bool {
        match self {
            ActionPoint::Dyadic(p) => p.apply(thompson_map(letter)),
            ActionPoint::Psi(v) => {
                let step = if letter.inverted { -1 } else { 1 };
                match letter.symbol {
                    'a' => {
                        v.offset += step;
                        true
                    }
                    _ => {
                        if v.offset == 0 {
                            v.level -= step;
                            true
                        } else {
                            false
                        }
                    }
                }
            }
            ActionPoint::PsiPrime(v) => {
                let step = if letter.inverted { -1 } else { 1 };
                match letter.symbol {
                    'a' => {
                        if v.is_spine() {
                            v.level -= step;
                            true
                        } else {
                            false
                        }
                    }
                    'b' => {
                        v.x += step;
                        true
                    }
                    _ => {
                        v.y += step;
                        true
                    }
                }
            }
        }
    }
}

impl fmt::Display for ActionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionPoint::Dyadic(p) => write!(f, "{p}"),
            ActionPoint::Psi(v) => write!(f, "({},{})", v.level, v.offset),
            ActionPoint::PsiPrime(v) => write!(f, "({},{},{})", v.level, v.x, v.y),
        }
    }
}

pub(crate) fn thompson_map(letter: Letter) -> ThompsonMap {
    match (letter.symbol, letter.inverted) {
        ('A', false) => ThompsonMap::A,
        ('A', true) => ThompsonMap::AInv,
        ('B', false) => ThompsonMap::B,
        _ => ThompsonMap::BInv,
    }
}

/// Image of `point` under one generator (or its inverse).
pub fn apply_generator(point: &ActionPoint, letter: Letter) -> Result<ActionPoint> {
    point.action().check_letter(letter)?;
    let mut out = point.clone();
    out.apply_in_place(letter);
    Ok(out)
}

/// `point.word`, letters applied left to right.
pub fn apply_word(point: &ActionPoint, word: &Word) -> Result<ActionPoint> {
    point.action().check_word(word)?;
    let mut out = point.clone();
    for &l in word.letters() {
        out.apply_in_place(l);
    }
    Ok(out)
}

/// The prefix path `x, x.s₁, x.s₁s₂, …, x.w`.
pub fn orbit_path(point: &ActionPoint, word: &Word) -> Result<Vec<ActionPoint>> {
    point.action().check_word(word)?;
    let mut path = Vec::with_capacity(word.len() + 1);
    let mut cur = point.clone();
    path.push(cur.clone());
    for &l in word.letters() {
        cur.apply_in_place(l);
        path.push(cur.clone());
    }
    Ok(path)
}

/// One affine piece `t ↦ 2^log2_slope · t + offset` on `[lo, hi]`.
struct Piece {
    lo: (i64, u64),
    hi: (i64, u64),
    log2_slope: i64,
    offset: (i64, u64),
}

const fn piece(lo: (i64, u64), hi: (i64, u64), log2_slope: i64, offset: (i64, u64)) -> Piece {
    Piece {
        lo,
        hi,
        log2_slope,
        offset,
    }
}

// Standard generators of F as piecewise-linear maps of [0,1]; values are
// (numerator, exponent) pairs.
const PIECES_A: [Piece; 3] = [
    piece((0, 0), (1, 1), -1, (0, 0)),
    piece((1, 1), (3, 2), 0, (-1, 2)),
    piece((3, 2), (1, 0), 1, (-1, 0)),
];
const PIECES_A_INV: [Piece; 3] = [
    piece((0, 0), (1, 2), 1, (0, 0)),
    piece((1, 2), (1, 1), 0, (1, 2)),
    piece((1, 1), (1, 0), -1, (1, 1)),
];
const PIECES_B: [Piece; 4] = [
    piece((0, 0), (1, 1), 0, (0, 0)),
    piece((1, 1), (3, 2), -1, (1, 2)),
    piece((3, 2), (7, 3), 0, (-1, 3)),
    piece((7, 3), (1, 0), 1, (-1, 0)),
];
const PIECES_B_INV: [Piece; 4] = [
    piece((0, 0), (1, 1), 0, (0, 0)),
    piece((1, 1), (5, 3), 1, (-1, 1)),
    piece((5, 3), (3, 2), 0, (1, 3)),
    piece((3, 2), (1, 0), -1, (1, 1)),
];

/// Evaluates a generator of F on `t ∈ [0,1]` with exact dyadic arithmetic,
/// straight from the piecewise-linear definition. This is independent of the
/// prefix-rewriting route used by [`DyadicPoint`].
pub fn thompson_piecewise(letter: Letter, t: &DyadicRational) -> Result<DyadicRational> {
    Action::Thompson.check_letter(letter)?;
    if *t < DyadicRational::zero() || *t > DyadicRational::one() {
        return Err(Error::OutOfUnitInterval { point: t.to_string() });
    }
    let pieces: &[Piece] = match thompson_map(letter) {
        ThompsonMap::A => &PIECES_A,
        ThompsonMap::AInv => &PIECES_A_INV,
        ThompsonMap::B => &PIECES_B,
        ThompsonMap::BInv => &PIECES_B_INV,
    };
    let dy = |(n, e): (i64, u64)| DyadicRational::from_parts(n, e);
    let p = pieces
        .iter()
        .find(|p| dy(p.lo) <= *t && *t <= dy(p.hi))
        .expect("pieces cover [0,1]");
    Ok(&t.mul_pow2(p.log2_slope) + &dy(p.offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: &str) -> ActionPoint {
        Action::Thompson.parse_point(s).unwrap()
    }

    #[test]
    fn labeled_edges_sample() {
        let a = Letter::new('A');
        let b = Letter::new('B');
        assert_eq!(apply_generator(&pt("3/4"), a).unwrap(), pt("1/2"));
        assert_eq!(apply_generator(&pt("13/16"), b).unwrap(), pt("11/16"));
        assert_eq!(apply_generator(&pt("1/2"), b).unwrap(), pt("1/2"));
        assert_eq!(apply_generator(&pt("3/8"), a).unwrap(), pt("3/16"));
    }

    #[test]
    fn words_apply_left_to_right() {
        let w: Word = "B".parse().unwrap();
        assert_eq!(apply_word(&pt("3/4"), &w).unwrap(), pt("5/8"));
        assert_eq!(apply_word(&pt("3/4"), &Word::empty()).unwrap(), pt("3/4"));
        let w: Word = "AA'".parse().unwrap();
        assert_eq!(apply_word(&pt("3/4"), &w).unwrap(), pt("3/4"));
        let path = orbit_path(&pt("3/4"), &"BB".parse().unwrap()).unwrap();
        assert_eq!(path, vec![pt("3/4"), pt("5/8"), pt("9/16")]);
        assert_eq!(orbit_path(&pt("3/4"), &Word::empty()).unwrap(), vec![pt("3/4")]);
    }

    #[test]
    fn reduction_examples() {
        let r = |s: &str| s.parse::<Word>().unwrap().reduce().to_string();
        assert_eq!(r("aa'"), "");
        assert_eq!(r("abb'a"), "aa");
        assert_eq!(r("ABA'"), "ABA'");
        assert_eq!(r("ab'ba'b"), "b");
    }

    #[test]
    fn word_serialization() {
        let w: Word = "ABA'".parse().unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.to_string(), "ABA'");
        assert_eq!(w.inverse().to_string(), "AB'A'");
        assert!("A''".parse::<Word>().is_err());
        assert!("'A".parse::<Word>().is_err());
    }

    #[test]
    fn unknown_letters_are_rejected() {
        assert!(matches!(
            apply_generator(&pt("1/2"), Letter::new('a')),
            Err(Error::UnknownLetter { .. })
        ));
        let v = ActionPoint::Psi(CombVertex::new(0, 0));
        assert!(apply_generator(&v, Letter::new('c')).is_err());
    }

    #[test]
    fn comb_actions() {
        let a = Letter::new('a');
        let b = Letter::new('b');
        let v = |l, o| ActionPoint::Psi(CombVertex::new(l, o));
        assert_eq!(apply_generator(&v(0, 0), a).unwrap(), v(0, 1));
        assert_eq!(apply_generator(&v(3, 0), b).unwrap(), v(2, 0));
        assert_eq!(apply_generator(&v(3, 0), b.inverse()).unwrap(), v(4, 0));
        assert_eq!(apply_generator(&v(0, 5), b).unwrap(), v(0, 5));
        let w = |l, x, y| ActionPoint::PsiPrime(PlaneVertex::new(l, x, y));
        assert_eq!(apply_generator(&w(0, 0, 0), a).unwrap(), w(-1, 0, 0));
        assert_eq!(apply_generator(&w(0, 1, 0), a).unwrap(), w(0, 1, 0));
        assert_eq!(apply_generator(&w(2, 1, 0), Letter::inv('c')).unwrap(), w(2, 1, -1));
        assert_eq!(Action::Psi.parse_point("(3,-2)").unwrap(), v(3, -2));
        assert_eq!(v(3, -2).to_string(), "(3,-2)");
        assert_eq!(w(1, 2, 3).to_string(), "(1,2,3)");
    }

    #[test]
    fn piecewise_reference_on_breakpoints() {
        let d = |s: &str| s.parse::<DyadicRational>().unwrap();
        let a = Letter::new('A');
        let b = Letter::new('B');
        assert_eq!(thompson_piecewise(a, &d("3/4")).unwrap(), d("1/2"));
        assert_eq!(thompson_piecewise(b, &d("7/8")).unwrap(), d("3/4"));
        assert_eq!(thompson_piecewise(b, &d("0")).unwrap(), d("0"));
        assert_eq!(thompson_piecewise(a.inverse(), &d("1")).unwrap(), d("1"));
        assert_eq!(thompson_piecewise(b.inverse(), &d("5/8")).unwrap(), d("3/4"));
    }
}
