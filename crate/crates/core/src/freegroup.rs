//! Words in a finitely generated free group and their evaluation through a
//! holonomy map into PSL(2,ℝ).
//!
//! A [`Word`] is a freely reduced string of nonzero signed generator
//! indices (letter `i` is the i-th generator, `-i` its inverse, 1-based).
//! [`enumerate_ball`] lists every nontrivial reduced word up to a given
//! length in a deterministic order, evaluating each through the generators
//! by extending the already evaluated parent prefix, so the whole ball
//! costs one Möbius composition per word.  The limit set is sampled from
//! fixed points of ball elements, deduplicated by boundary angle, keeping
//! the shortest witness per point.

use crate::hyperbolic::{BoundaryPoint, FixedPoints, MoebiusClass, MoebiusMap};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FreeGroupError {
    #[error("letter 0 is not a valid generator index")]
    ZeroLetter,
    #[error("word uses generator index {0} but only {1} generators are available")]
    GeneratorIndexOutOfRange(usize, usize),
    #[error("ball of radius {radius} in rank {rank} has {required} elements, exceeding the cap {cap}")]
    EnumerationCapExceeded {
        rank: usize,
        radius: usize,
        required: u128,
        cap: u64,
    },
    #[error("at least one generator is required")]
    NoGenerators,
}

/// A freely reduced word in a free group, stored as signed 1-based
/// generator indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    letters: Vec<i32>,
}

/// Letter ordering used for deterministic enumeration: generators sort
/// before their inverses, lower indices first (1 < 1⁻¹ < 2 < 2⁻¹ < …).
fn letter_key(l: i32) -> (u32, bool) {
    (l.unsigned_abs(), l < 0)
}

impl Word {
    /// Builds a word, freely reducing adjacent inverse pairs.
    pub fn new(letters: Vec<i32>) -> Result<Self, FreeGroupError> {
        if letters.contains(&0) {
            return Err(FreeGroupError::ZeroLetter);
        }
        let mut reduced: Vec<i32> = Vec::with_capacity(letters.len());
        for l in letters {
            if reduced.last() == Some(&-l) {
                reduced.pop();
            } else {
                reduced.push(l);
            }
        }
        Ok(Word { letters: reduced })
    }

    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    /// Concatenation followed by free reduction at the seam.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            if letters.last() == Some(&-l) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Word { letters }
    }

    /// `n`-th power (negative exponents use the inverse).
    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    /// Splits `self = u · core · u⁻¹` with `core` cyclically reduced
    /// (its first letter is not the inverse of its last).  Returns
    /// `(core, u)`.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let mut lo = 0usize;
        let mut hi = self.letters.len();
        while hi - lo >= 2 && self.letters[lo] == -self.letters[hi - 1] {
            lo += 1;
            hi -= 1;
        }
        (
            Word {
                letters: self.letters[lo..hi].to_vec(),
            },
            Word {
                letters: self.letters[..lo].to_vec(),
            },
        )
    }

    /// Largest generator index used (0 for the identity).
    pub fn max_generator_index(&self) -> usize {
        self.letters
            .iter()
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// True if the word is `base` concatenated with itself (possibly zero
    /// times); used for peripheral power detection.
    fn is_power_of(&self, base: &Word) -> bool {
        if base.is_identity() {
            return self.is_identity();
        }
        if !self.len().is_multiple_of(base.len()) {
            return false;
        }
        self.letters
            .chunks(base.len())
            .all(|chunk| chunk == base.letters.as_slice())
    }

    fn lex_key(&self) -> (usize, Vec<(u32, bool)>) {
        (self.len(), self.letters.iter().map(|&l| letter_key(l)).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        let mut first = true;
        for &l in &self.letters {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if l > 0 {
                write!(f, "g{l}")?;
            } else {
                write!(f, "g{}^-1", -l)?;
            }
        }
        Ok(())
    }
}

/// A ball element: the word together with its evaluated holonomy and the
/// derived geometric quantities.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub word: Word,
    pub map: MoebiusMap,
    /// dist(i, map·i)
    pub displacement: f64,
    pub class: MoebiusClass,
    /// Translation length (0 off the hyperbolic class).
    pub translation_length: f64,
}

/// All nontrivial reduced words of length ≤ radius, evaluated, in
/// deterministic (length, lexicographic) order.
#[derive(Debug, Clone)]
pub struct Ball {
    pub rank: usize,
    pub radius: usize,
    pub elements: Vec<GroupElement>,
    generators: Vec<MoebiusMap>,
}

/// Number of nontrivial reduced words of length ≤ radius in a free group
/// of the given rank: Σ_{n=1..radius} 2r·(2r−1)^{n−1}.
pub fn expected_ball_count(rank: usize, radius: usize) -> u128 {
    if rank == 0 {
        return 0;
    }
    let mut total: u128 = 0;
    let mut layer: u128 = 2 * rank as u128;
    for _ in 0..radius {
        total += layer;
        layer *= 2 * rank as u128 - 1;
    }
    total
}

/// Enumerates the ball of the given radius, evaluating each word through
/// the generator holonomies.  Each word is obtained from its length-(n−1)
/// prefix by one composition.  Fails before any work if the exact element
/// count exceeds `cap`.
pub fn enumerate_ball(
    generators: &[MoebiusMap],
    radius: usize,
    cap: u64,
) -> Result<Ball, FreeGroupError> {
    if generators.is_empty() {
        return Err(FreeGroupError::NoGenerators);
    }
    let rank = generators.len();
    let required = expected_ball_count(rank, radius);
    if required > cap as u128 {
        return Err(FreeGroupError::EnumerationCapExceeded {
            rank,
            radius,
            required,
            cap,
        });
    }

    // Letters in enumeration order: 1, −1, 2, −2, …
    let letters: Vec<i32> = (1..=rank as i32).flat_map(|i| [i, -i]).collect();
    let image = |l: i32| -> MoebiusMap {
        let g = &generators[(l.unsigned_abs() - 1) as usize];
        if l > 0 {
            *g
        } else {
            g.inverse()
        }
    };

    let mut elements: Vec<GroupElement> = Vec::with_capacity(required as usize);
    // Frontier of (word, map) pairs of the current length, kept in
    // enumeration order so children are generated in order too.
    let mut frontier: Vec<(Vec<i32>, MoebiusMap)> = vec![(Vec::new(), MoebiusMap::identity())];
    for _ in 0..radius {
        let mut next = Vec::with_capacity(frontier.len() * (2 * rank - 1));
        for (word, map) in &frontier {
            for &l in &letters {
                if word.last() == Some(&-l) {
                    continue; // would not be reduced
                }
                let mut w = word.clone();
                w.push(l);
                let m = map.compose(&image(l));
                let element = GroupElement {
                    word: Word { letters: w.clone() },
                    displacement: m.displacement(),
                    class: m.classify(),
                    translation_length: m.translation_length(),
                    map: m,
                };
                elements.push(element);
                next.push((w, m));
            }
        }
        frontier = next;
    }
    debug_assert_eq!(elements.len() as u128, required);
    Ok(Ball {
        rank,
        radius,
        elements,
        generators: generators.to_vec(),
    })
}

impl Ball {
    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    /// Collapses elements whose canonical PSL(2,ℝ) matrices agree
    /// entrywise within `tol`, keeping the earliest (shortest, then
    /// lexicographically first) representative.  Useful when the holonomy
    /// is not faithful on the free group, e.g. for relators in surface
    /// group presentations.
    pub fn dedup_by_matrix(&self, tol: f64) -> Ball {
        let quant = |x: f64| -> i64 { (x / tol).round() as i64 };
        // The canonical PSL sign flips discontinuously when the trace
        // crosses 0, so re-normalise for hashing: make the first entry of
        // magnitude above a fixed threshold positive.  Matrices of the
        // same class then agree entrywise within tol.
        let sign_fix = |ent: [f64; 4]| -> [f64; 4] {
            for &e in &ent {
                if e.abs() > 1e-4 {
                    if e < 0.0 {
                        return [-ent[0], -ent[1], -ent[2], -ent[3]];
                    }
                    return ent;
                }
            }
            ent
        };
        let mut buckets: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
        let mut kept: Vec<GroupElement> = Vec::new();
        let mut kept_hash_entries: Vec<[f64; 4]> = Vec::new();
        'outer: for e in &self.elements {
            let ent = sign_fix(e.map.entries());
            let cell = [quant(ent[0]), quant(ent[1]), quant(ent[2]), quant(ent[3])];
            // Look for an existing representative in the same or any
            // adjacent quantisation cell.
            for d0 in -1..=1_i64 {
                for d1 in -1..=1_i64 {
                    for d2 in -1..=1_i64 {
                        for d3 in -1..=1_i64 {
                            let key = [cell[0] + d0, cell[1] + d1, cell[2] + d2, cell[3] + d3];
                            if let Some(idxs) = buckets.get(&key) {
                                for &i in idxs {
                                    let f = kept_hash_entries[i];
                                    let close = (0..4).all(|j| (ent[j] - f[j]).abs() <= tol);
                                    if close {
                                        continue 'outer;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            buckets.entry(cell).or_default().push(kept.len());
            kept.push(e.clone());
            kept_hash_entries.push(ent);
        }
        Ball {
            rank: self.rank,
            radius: self.radius,
            elements: kept,
            generators: self.generators.clone(),
        }
    }
}

/// A sampled point of the limit set.
#[derive(Debug, Clone)]
pub struct LimitPoint {
    pub point: BoundaryPoint,
    pub angle: f64,
    /// Shortest ball element having this point as attracting (hyperbolic)
    /// or unique (parabolic) fixed point.
    pub witness: Word,
    /// True if the kept witness is parabolic, i.e. the point lies in the
    /// sampled set of parabolic fixed points Λ_p.
    pub parabolic: bool,
    /// A second witness with a different word, when the deduplication
    /// merged several; used for uniqueness probes.
    pub alt_witness: Option<Word>,
}

/// Limit set sample, sorted by boundary angle.
#[derive(Debug, Clone)]
pub struct LimitSample {
    pub points: Vec<LimitPoint>,
    pub delta_angle: f64,
}

/// Samples the limit set from fixed points of ball elements: attracting
/// and repelling fixed points of hyperbolic elements (the repelling point
/// is witnessed by the inverse word) and fixed points of parabolic
/// elements.  Points within `delta_angle` of each other are merged; the
/// representative prefers parabolic witnesses and otherwise the shortest
/// word.
pub fn sample_limit_set(ball: &Ball, delta_angle: f64) -> LimitSample {
    struct Raw {
        angle: f64,
        point: BoundaryPoint,
        witness: Word,
        parabolic: bool,
    }
    let mut raw: Vec<Raw> = Vec::new();
    for e in &ball.elements {
        match e.map.fixed_points() {
            FixedPoints::Hyperbolic {
                attracting,
                repelling,
            } => {
                raw.push(Raw {
                    angle: attracting.angle(),
                    point: attracting,
                    witness: e.word.clone(),
                    parabolic: false,
                });
                raw.push(Raw {
                    angle: repelling.angle(),
                    point: repelling,
                    witness: e.word.inverse(),
                    parabolic: false,
                });
            }
            FixedPoints::Parabolic(p) => {
                raw.push(Raw {
                    angle: p.angle(),
                    point: p,
                    witness: e.word.clone(),
                    parabolic: true,
                });
            }
            _ => {}
        }
    }
    raw.sort_by(|a, b| {
        a.angle
            .total_cmp(&b.angle)
            .then_with(|| a.witness.lex_key().cmp(&b.witness.lex_key()))
    });

    // Chain-merge along the circle: a new cluster starts when the gap to
    // the previous point exceeds delta_angle.  The wrap-around pair is
    // merged at the end.
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, r) in raw.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if r.angle - raw[*c.last().unwrap()].angle <= delta_angle => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    if clusters.len() >= 2 {
        let first_angle = raw[clusters[0][0]].angle;
        let last_angle = raw[*clusters.last().unwrap().last().unwrap()].angle;
        if first_angle + 2.0 * std::f64::consts::PI - last_angle <= delta_angle {
            let tail = clusters.pop().unwrap();
            clusters[0].extend(tail);
        }
    }

    let mut points: Vec<LimitPoint> = Vec::new();
    for cluster in clusters {
        let best = cluster
            .iter()
            .copied()
            .min_by(|&i, &j| {
                let a = &raw[i];
                let b = &raw[j];
                (!a.parabolic, a.witness.lex_key())
                    .cmp(&(!b.parabolic, b.witness.lex_key()))
            })
            .unwrap();
        let alt_witness = cluster
            .iter()
            .copied()
            .filter(|&i| raw[i].witness != raw[best].witness)
            .min_by(|&i, &j| raw[i].witness.lex_key().cmp(&raw[j].witness.lex_key()))
            .map(|i| raw[i].witness.clone());
        points.push(LimitPoint {
            point: raw[best].point,
            angle: raw[best].angle,
            witness: raw[best].witness.clone(),
            parabolic: raw[best].parabolic,
            alt_witness,
        });
    }
    points.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    LimitSample {
        points,
        delta_angle,
    }
}

/// Why an element was marked peripheral.
#[derive(Debug, Clone)]
pub struct PeripheralElement {
    pub word: Word,
    /// The evaluated holonomy is parabolic (or the identity).
    pub numerically_parabolic: bool,
    /// Index of a declared peripheral generator whose cyclic subgroup
    /// contains a conjugate of this word, when one exists.
    pub conjugate_into: Option<usize>,
}

/// Finds the peripheral elements of the ball: those whose holonomy is
/// numerically parabolic and those conjugate, as abstract words, into one
/// of the declared peripheral cyclic subgroups ⟨p⟩.  A word w is conjugate
/// into ⟨p⟩ exactly when its cyclic reduction is a power of some cyclic
/// rotation of the cyclic reduction of p or of p⁻¹.
pub fn peripheral_elements(ball: &Ball, declared: &[Word]) -> Vec<PeripheralElement> {
    // Precompute all rotations of each declared core and its inverse.
    let mut rotation_sets: Vec<Vec<Word>> = Vec::new();
    for p in declared {
        let (core, _) = p.cyclic_reduce();
        let mut rots = Vec::new();
        for base in [core.clone(), core.inverse()] {
            let n = base.len();
            for r in 0..n.max(1) {
                let mut letters = base.letters[r..].to_vec();
                letters.extend_from_slice(&base.letters[..r]);
                rots.push(Word { letters });
            }
        }
        rotation_sets.push(rots);
    }

    let mut out = Vec::new();
    for e in &ball.elements {
        let numerically_parabolic = matches!(
            e.class,
            MoebiusClass::Parabolic | MoebiusClass::Identity
        );
        let (core, _) = e.word.cyclic_reduce();
        let conjugate_into = rotation_sets
            .iter()
            .position(|rots| rots.iter().any(|r| core.is_power_of(r)));
        if numerically_parabolic || conjugate_into.is_some() {
            out.push(PeripheralElement {
                word: e.word.clone(),
                numerically_parabolic,
                conjugate_into,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn gens_punctured_sphere() -> Vec<MoebiusMap> {
        vec![
            MoebiusMap::new(1.0, 2.0, 0.0, 1.0).unwrap(),
            MoebiusMap::new(1.0, 0.0, 2.0, 1.0).unwrap(),
        ]
    }

    fn gens_schottky() -> Vec<MoebiusMap> {
        vec![
            MoebiusMap::new(4.0, 0.0, 0.0, 0.25).unwrap(),
            MoebiusMap::new(17.0 / 4.0, 15.0 / 4.0, 15.0 / 4.0, 17.0 / 4.0).unwrap(),
        ]
    }

    #[test]
    fn words_reduce_on_construction() {
        let w = Word::new(vec![1, 2, -2, -1, 1]).unwrap();
        assert_eq!(w.letters(), &[1]);
        let u = Word::new(vec![1, -1]).unwrap();
        assert!(u.is_identity());
        assert!(Word::new(vec![1, 0]).is_err());
    }

    #[test]
    fn concat_reduces_across_the_seam() {
        let a = Word::new(vec![1, 2]).unwrap();
        let b = Word::new(vec![-2, -1, 2]).unwrap();
        assert_eq!(a.concat(&b).letters(), &[2]);
        let w = Word::new(vec![1, 2, 1]).unwrap();
        assert!(w.concat(&w.inverse()).is_identity());
    }

    #[test]
    fn cyclic_reduction_strips_conjugating_prefix() {
        let w = Word::new(vec![1, 2, 2, -1]).unwrap();
        let (core, u) = w.cyclic_reduce();
        assert_eq!(core.letters(), &[2, 2]);
        assert_eq!(u.letters(), &[1]);
        // w = u · core · u⁻¹
        assert_eq!(u.concat(&core).concat(&u.inverse()), w);
    }

    #[test]
    fn rank_two_radius_three_ball_has_52_elements() {
        assert_eq!(expected_ball_count(2, 3), 52);
        let ball = enumerate_ball(&gens_punctured_sphere(), 3, 10_000).unwrap();
        assert_eq!(ball.elements.len(), 52);
        // Deterministic order: length first, then 1 < 1⁻¹ < 2 < 2⁻¹.
        assert_eq!(ball.elements[0].word.letters(), &[1]);
        assert_eq!(ball.elements[1].word.letters(), &[-1]);
        assert_eq!(ball.elements[2].word.letters(), &[2]);
        assert_eq!(ball.elements[3].word.letters(), &[-2]);
        assert_eq!(ball.elements[4].word.letters(), &[1, 1]);
    }

    #[test]
    fn enumeration_cap_is_checked_before_work() {
        let err = enumerate_ball(&gens_punctured_sphere(), 3, 51).unwrap_err();
        match err {
            FreeGroupError::EnumerationCapExceeded { required, cap, .. } => {
                assert_eq!(required, 52);
                assert_eq!(cap, 51);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn punctured_sphere_generators_are_parabolic_and_mixed_words_hyperbolic() {
        let ball = enumerate_ball(&gens_punctured_sphere(), 2, 1000).unwrap();
        let find = |letters: &[i32]| {
            ball.elements
                .iter()
                .find(|e| e.word.letters() == letters)
                .unwrap()
        };
        assert_eq!(find(&[1]).class, MoebiusClass::Parabolic);
        assert_eq!(find(&[2]).class, MoebiusClass::Parabolic);
        assert_eq!(find(&[1, 1]).class, MoebiusClass::Parabolic);
        let ab = find(&[1, 2]);
        assert_eq!(ab.class, MoebiusClass::Hyperbolic);
        assert!((ab.map.trace() - 6.0).abs() < 1e-12);
        // The third cusp: g1·g2⁻¹ has trace −2.
        assert_eq!(find(&[1, -2]).class, MoebiusClass::Parabolic);
    }

    #[test]
    fn ball_evaluation_is_a_homomorphism() {
        let gens = gens_punctured_sphere();
        let ball = enumerate_ball(&gens, 4, 100_000).unwrap();
        let lookup: HashMap<&[i32], &GroupElement> = ball
            .elements
            .iter()
            .map(|e| (e.word.letters(), e))
            .collect();
        let a = lookup[&[1, 2][..]];
        let b = lookup[&[-2, 1][..]];
        let prod_word = a.word.concat(&b.word);
        let expect = lookup[prod_word.letters()];
        let prod = a.map.compose(&b.map);
        let pe = prod.entries();
        let ee = expect.map.entries();
        for j in 0..4 {
            assert!((pe[j] - ee[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn displacement_is_subadditive_on_products() {
        let ball = enumerate_ball(&gens_punctured_sphere(), 3, 10_000).unwrap();
        let lookup: HashMap<&[i32], &GroupElement> = ball
            .elements
            .iter()
            .map(|e| (e.word.letters(), e))
            .collect();
        for (w1, w2) in [([1, 2], [1, -2]), ([1, 1], [2, 1]), ([-2, -1], [-1, 2])] {
            let a = lookup[&w1[..]];
            let b = lookup[&w2[..]];
            let prod = a.word.concat(&b.word);
            if let Some(p) = lookup.get(prod.letters()) {
                assert!(p.displacement <= a.displacement + b.displacement + 1e-12);
            }
        }
    }

    #[test]
    fn limit_sample_keeps_shortest_witnesses_and_flags_parabolics() {
        let ball = enumerate_ball(&gens_punctured_sphere(), 3, 10_000).unwrap();
        let sample = sample_limit_set(&ball, 1e-9);
        assert!(!sample.points.is_empty());
        // ∞ is the fixed point of g1 (parabolic): witness must be the
        // one-letter word and the point flagged as parabolic.
        let at_infinity = sample
            .points
            .iter()
            .find(|p| p.point == BoundaryPoint::Infinity)
            .expect("∞ must appear in the sample");
        assert!(at_infinity.parabolic);
        assert_eq!(at_infinity.witness.letters(), &[1]);
        // Merged clusters remember an alternative witness (g1² also
        // fixes ∞).
        assert!(at_infinity.alt_witness.is_some());
        // 0 is fixed by g2.
        let at_zero = sample
            .points
            .iter()
            .find(|p| matches!(p.point, BoundaryPoint::Finite(x) if x.abs() < 1e-9))
            .expect("0 must appear in the sample");
        assert!(at_zero.parabolic);
        assert_eq!(at_zero.witness.letters(), &[2]);
        // Points are sorted by angle and pairwise separated by more than
        // the merge tolerance.
        for pair in sample.points.windows(2) {
            assert!(pair[1].angle > pair[0].angle + sample.delta_angle);
        }
    }

    #[test]
    fn limit_sample_is_equivariant_under_generators() {
        let gens = gens_punctured_sphere();
        let small = enumerate_ball(&gens, 2, 10_000).unwrap();
        let big = enumerate_ball(&gens, 4, 100_000).unwrap();
        let delta = 1e-6;
        let sample_small = sample_limit_set(&small, delta);
        let sample_big = sample_limit_set(&big, delta);
        // g·Λ(sample radius 2) should reappear in the radius-4 sample.
        for g in &gens {
            for p in &sample_small.points {
                let moved = g.apply_boundary(p.point);
                let hit = sample_big
                    .points
                    .iter()
                    .any(|q| q.point.angular_distance(moved) < 1e-5);
                assert!(hit, "missing image of {:?}", p.point);
            }
        }
    }

    #[test]
    fn schottky_ball_has_no_peripheral_elements() {
        let ball = enumerate_ball(&gens_schottky(), 3, 10_000).unwrap();
        for e in &ball.elements {
            assert_eq!(
                e.class,
                MoebiusClass::Hyperbolic,
                "word {} is not hyperbolic",
                e.word
            );
        }
        let peripherals = peripheral_elements(&ball, &[]);
        assert!(peripherals.is_empty());
    }

    #[test]
    fn peripheral_detection_by_word_and_by_trace() {
        let ball = enumerate_ball(&gens_punctured_sphere(), 4, 100_000).unwrap();
        let declared = vec![
            Word::new(vec![1]).unwrap(),
            Word::new(vec![2]).unwrap(),
        ];
        let peripherals = peripheral_elements(&ball, &declared);
        let find = |letters: &[i32]| {
            peripherals
                .iter()
                .find(|p| p.word.letters() == letters)
        };
        // g1³ is a declared peripheral power and parabolic.
        let p = find(&[1, 1, 1]).expect("g1³ must be peripheral");
        assert!(p.numerically_parabolic);
        assert_eq!(p.conjugate_into, Some(0));
        // A conjugate g2 g1 g2⁻¹ is word-conjugate into ⟨g1⟩.
        let c = find(&[2, 1, -2]).expect("conjugate of g1 must be peripheral");
        assert_eq!(c.conjugate_into, Some(0));
        // The third cusp class g1 g2⁻¹ is parabolic numerically but not
        // conjugate into a declared subgroup.
        let third = find(&[1, -2]).expect("g1 g2⁻¹ must be detected");
        assert!(third.numerically_parabolic);
        assert_eq!(third.conjugate_into, None);
        // Hyperbolic non-peripheral words are absent.
        assert!(find(&[1, 2]).is_none());
    }

    #[test]
    fn dedup_collapses_equal_matrices() {
        // An order-4 elliptic: z ↦ rotation by π/2 about i; its 4th power
        // is the identity, so the rank-1 "free" ball is highly non-faithful.
        let th = std::f64::consts::PI / 4.0;
        let rot = MoebiusMap::new(th.cos(), th.sin(), -th.sin(), th.cos()).unwrap();
        let ball = enumerate_ball(&[rot], 8, 10_000).unwrap();
        assert_eq!(ball.elements.len(), 16);
        let deduped = ball.dedup_by_matrix(1e-8);
        // In PSL(2,ℝ) the image group is cyclic of order 4 (rotation by
        // π is −I = id), so the 16 words collapse to the 4 classes
        // rot⁰…rot³ — the identity class is hit by the nontrivial word
        // rot⁴.
        assert_eq!(deduped.elements.len(), 4);
        for e in &deduped.elements {
            assert!(e.word.len() <= 4);
        }
    }

    #[test]
    fn displacement_matches_direct_distance() {
        let gens = gens_punctured_sphere();
        let ball = enumerate_ball(&gens, 2, 1000).unwrap();
        let i = Complex64::new(0.0, 1.0);
        for e in &ball.elements {
            let d = crate::hyperbolic::dist_h2(i, e.map.apply(i)).unwrap();
            assert!((d - e.displacement).abs() < 1e-12);
        }
    }
}
