//! The Schreier graph of F acting on dyadic rationals in (0,1), known as the
//! Savchuk graph: a tree rooted at 3/4 whose complement of the cut {5/8, 3/4}
//! splits into two branches and three rays.
//!
//! Everything here works on binary digit strings (most significant first,
//! always ending in 1), so classification and parent lookups never need a
//! graph search.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicPoint, ThompsonMap};
use crate::error::{Error, Result};

/// The five components of the Savchuk graph minus {5/8, 3/4}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EndClass {
    /// Rooted at 13/16.
    LeftBranch,
    /// Rooted at 9/16.
    RightBranch,
    /// The dashed ray 3/8, 3/16, ... hanging off 5/8.
    Ray58,
    /// 7/8, 15/16, ...
    RayTowardsOne,
    /// 1/2, 1/4, ...
    RayTowardsZero,
    Unresolved,
}

impl EndClass {
    pub const RESOLVED: [EndClass; 5] = [
        EndClass::LeftBranch,
        EndClass::RightBranch,
        EndClass::Ray58,
        EndClass::RayTowardsOne,
        EndClass::RayTowardsZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EndClass::LeftBranch => "LeftBranch",
            EndClass::RightBranch => "RightBranch",
            EndClass::Ray58 => "Ray58",
            EndClass::RayTowardsOne => "RayTowardsOne",
            EndClass::RayTowardsZero => "RayTowardsZero",
            EndClass::Unresolved => "Unresolved",
        }
    }

    /// The boundary vertex of the cut lying in this class.
    pub fn boundary_vertex(self) -> Option<DyadicPoint> {
        let digits = match self {
            EndClass::LeftBranch => "1101",
            EndClass::RightBranch => "1001",
            EndClass::Ray58 => "011",
            EndClass::RayTowardsOne => "111",
            EndClass::RayTowardsZero => "1",
            EndClass::Unresolved => return None,
        };
        Some(DyadicPoint::from_binary_digits(digits).expect("literal"))
    }
}

impl fmt::Display for EndClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EndClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EndClass::RESOLVED
            .into_iter()
            .chain([EndClass::Unresolved])
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse {
                input: s.into(),
                reason: "unknown end class".into(),
            })
    }
}

const T: bool = true;
const F: bool = false;

/// The cut vertices 5/8 and 3/4.
pub fn is_cut_vertex(v: &DyadicPoint) -> bool {
    v.is_digits(&[T, F, T]) || v.is_digits(&[T, T])
}

pub fn cut_points() -> [DyadicPoint; 2] {
    [
        DyadicPoint::from_binary_digits("101").expect("literal"),
        DyadicPoint::from_binary_digits("11").expect("literal"),
    ]
}

fn by_last_two(v: &DyadicPoint) -> EndClass {
    // Generators only rewrite a prefix of at most three digits, so away from
    // the cut the last two digits are invariant within a component.
    let n = v.depth();
    if v.digit(n - 2) {
        EndClass::LeftBranch
    } else {
        EndClass::RightBranch
    }
}

/// Component of `v` in the Savchuk graph minus {5/8, 3/4}.
pub fn savchuk_end_class(v: &DyadicPoint) -> Result<EndClass> {
    if is_cut_vertex(v) {
        return Err(Error::VertexInCut { vertex: v.to_string() });
    }
    let n = v.depth();
    if !v.digit(0) {
        let zeros = (0..n).take_while(|&i| !v.digit(i)).count();
        return Ok(match n - zeros {
            1 => EndClass::RayTowardsZero,
            2 if v.digit(n - 1) => EndClass::Ray58,
            _ => by_last_two(v),
        });
    }
    let ones = (0..n).take_while(|&i| v.digit(i)).count();
    Ok(if ones == n {
        if n == 1 {
            EndClass::RayTowardsZero
        } else {
            EndClass::RayTowardsOne
        }
    } else if ones >= 2 && n == ones + 2 {
        // 1^j 0 1
        EndClass::LeftBranch
    } else {
        by_last_two(v)
    })
}

/// The generator moving `v` one step closer to the root 3/4; `None` at the
/// root itself.
pub fn parent(v: &DyadicPoint) -> Option<ThompsonMap> {
    let n = v.depth();
    if v.is_digits(&[T, T]) {
        return None;
    }
    if !v.digit(0) || n == 1 {
        return Some(ThompsonMap::AInv);
    }
    if v.digit(1) {
        // 11..., including the ray 1^j and 1^j 0 v
        return Some(ThompsonMap::A);
    }
    // 10...
    Some(ThompsonMap::BInv)
}

/// Distance from `v` to the root 3/4.
pub fn depth_from_root(v: &DyadicPoint) -> usize {
    let mut cur = v.clone();
    let mut d = 0;
    while let Some(m) = parent(&cur) {
        cur.apply(m);
        d += 1;
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedDirection {
    LeftIntoRight,
    RightIntoLeft,
}

impl EmbedDirection {
    pub fn source(self) -> EndClass {
        match self {
            EmbedDirection::LeftIntoRight => EndClass::LeftBranch,
            EmbedDirection::RightIntoLeft => EndClass::RightBranch,
        }
    }

    pub fn target(self) -> EndClass {
        match self {
            EmbedDirection::LeftIntoRight => EndClass::RightBranch,
            EmbedDirection::RightIntoLeft => EndClass::LeftBranch,
        }
    }

    /// Source root and its chosen image.
    pub fn roots(self) -> (DyadicPoint, DyadicPoint) {
        let p = |s: &str| DyadicPoint::from_binary_digits(s).expect("literal");
        match self {
            // 13/16 -> 25/32
            EmbedDirection::LeftIntoRight => (p("1101"), p("11001")),
            // 9/16 -> 11/16
            EmbedDirection::RightIntoLeft => (p("1001"), p("1011")),
        }
    }
}

impl FromStr for EmbedDirection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left-into-right" | "LeftIntoRight" => Ok(Self::LeftIntoRight),
            "right-into-left" | "RightIntoLeft" => Ok(Self::RightIntoLeft),
            _ => Err(Error::Parse {
                input: s.into(),
                reason: "expected left-into-right or right-into-left".into(),
            }),
        }
    }
}

fn in_branch(v: &DyadicPoint, class: EndClass) -> bool {
    savchuk_end_class(v).ok() == Some(class)
}

/// Equivariant image of `v` under the branch embedding: with `v = root.w` for
/// a word `w` staying in the source branch, returns `image_root.w`.
pub fn embed_branch(v: &DyadicPoint, direction: EmbedDirection) -> Result<DyadicPoint> {
    let (root, image_root) = direction.roots();
    let source = direction.source();
    if !in_branch(v, source) {
        return Err(Error::NotInBranch {
            vertex: v.to_string(),
            branch: source.name(),
        });
    }
    let mut up = Vec::new();
    let mut cur = v.clone();
    while cur != root {
        let m = parent(&cur).expect("branch vertices are below their root");
        cur.apply(m);
        up.push(m);
    }
    let mut img = image_root;
    for m in up.into_iter().rev() {
        img.apply(m.inverse());
        if !in_branch(&img, direction.target()) {
            return Err(Error::NotInBranch {
                vertex: img.to_string(),
                branch: direction.target().name(),
            });
        }
    }
    Ok(img)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmbeddingViolation {
    pub vertex: String,
    pub letter: String,
    pub expected: String,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmbeddingReport {
    pub direction: EmbedDirection,
    pub radius: u64,
    pub checked: usize,
    pub violations: Vec<EmbeddingViolation>,
}

const MAPS: [(ThompsonMap, &str); 4] = [
    (ThompsonMap::A, "A"),
    (ThompsonMap::AInv, "A'"),
    (ThompsonMap::B, "B"),
    (ThompsonMap::BInv, "B'"),
];

/// Checks `embed(v).s == embed(v.s)` for every vertex `v` of the source
/// branch within `radius` of its root and every generator `s` keeping `v.s`
/// in the branch.
pub fn verify_embedding(radius: u64, direction: EmbedDirection) -> EmbeddingReport {
    let (root, image_root) = direction.roots();
    let source = direction.source();
    let target = direction.target();

    // Images are computed through the parent map, memoized from the root down.
    let mut image: HashMap<DyadicPoint, DyadicPoint> = HashMap::new();
    image.insert(root.clone(), image_root);
    let mut layer = vec![root];
    let mut all = Vec::new();
    for d in 0..=radius {
        let mut next = Vec::new();
        for v in &layer {
            for (m, _) in MAPS {
                let w = v.applied(m);
                if image.contains_key(&w) || !in_branch(&w, source) {
                    continue;
                }
                if d < radius {
                    next.push(w.clone());
                }
                let up = parent(&w).expect("branch vertices have parents");
                let p = w.applied(up);
                let base = image
                    .get(&p)
                    .cloned()
                    .unwrap_or_else(|| embed_branch(&p, direction).expect("parent stays in branch"));
                image.insert(w, base.applied(up.inverse()));
            }
        }
        all.append(&mut layer);
        layer = next;
    }

    let mut violations = Vec::new();
    for v in &all {
        let ev = &image[v];
        if !in_branch(ev, target) {
            violations.push(EmbeddingViolation {
                vertex: v.to_string(),
                letter: String::new(),
                expected: target.name().into(),
                found: ev.to_string(),
            });
        }
        for (m, name) in MAPS {
            let w = v.applied(m);
            if !in_branch(&w, source) {
                continue;
            }
            let expected = ev.applied(m);
            let found = &image[&w];
            if expected != *found {
                violations.push(EmbeddingViolation {
                    vertex: v.to_string(),
                    letter: name.into(),
                    expected: expected.to_string(),
                    found: found.to_string(),
                });
            }
        }
    }
    EmbeddingReport {
        direction,
        radius,
        checked: all.len(),
        violations,
    }
}
