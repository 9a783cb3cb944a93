//! Möbius maps on the upper half plane ℍ² and its circle at infinity.
//!
//! A Möbius map is stored as a matrix in SL(2,ℝ) normalised to a canonical
//! PSL(2,ℝ) representative (trace ≥ 0, ties broken by the first nonzero
//! entry) together with a sign recording which of the two SL(2,ℝ) lifts was
//! supplied.  Classification follows the trace: |tr| = 2 parabolic (or the
//! identity), |tr| > 2 hyperbolic with translation length 2·arccosh(|tr|/2),
//! |tr| < 2 elliptic.  Boundary points are parametrised by the angle of
//! their image under the Cayley transform z ↦ (z−i)/(z+i), which sends the
//! extended real line to the unit circle; the orientation convention makes
//! the triple (0, 1, ∞) positively ordered.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative scale for the trace tolerance used by [`MoebiusMap::classify`].
pub const TRACE_TOL_SCALE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HyperbolicError {
    #[error("matrix determinant {0} is not positive; not an orientation preserving isometry")]
    NonPositiveDeterminant(f64),
    #[error("point with imaginary part {0} is not in the open upper half plane")]
    NotInUpperHalfPlane(f64),
    #[error("geodesic endpoints coincide")]
    DegenerateGeodesic,
}

/// Conjugacy type of a Möbius map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoebiusClass {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Fixed point data of a Möbius map, by class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPoints {
    /// Attracting and repelling fixed points on the circle at infinity.
    Hyperbolic {
        attracting: BoundaryPoint,
        repelling: BoundaryPoint,
    },
    /// The unique boundary fixed point.
    Parabolic(BoundaryPoint),
    /// The unique interior fixed point.
    Elliptic(Complex64),
    /// Every point is fixed.
    Identity,
}

/// A point of the circle at infinity ∂ℍ² = ℝ ∪ {∞}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Finite(f64),
    Infinity,
}

impl BoundaryPoint {
    /// Angle in [0, 2π) of the image under the Cayley transform
    /// z ↦ (z−i)/(z+i).  ∞ maps to angle 0 and the angle increases
    /// strictly with the real coordinate, so (0, 1, ∞) is positively
    /// cyclically ordered (angles π, 3π/2, 2π).
    pub fn angle(self) -> f64 {
        match self {
            BoundaryPoint::Infinity => 0.0,
            BoundaryPoint::Finite(x) => {
                // (x−i)/(x+i) = ((x²−1) − 2xi)/(x²+1)
                let theta = (-2.0 * x).atan2(x * x - 1.0);
                let t = theta.rem_euclid(2.0 * std::f64::consts::PI);
                if t >= 2.0 * std::f64::consts::PI {
                    0.0
                } else {
                    t
                }
            }
        }
    }

    /// Absolute angular distance between two boundary points, in [0, π].
    pub fn angular_distance(self, other: BoundaryPoint) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let d = (self.angle() - other.angle()).rem_euclid(two_pi);
        d.min(two_pi - d)
    }
}

/// Cyclic orientation of a boundary triple: +1 if (x, y, z) is positively
/// (counterclockwise) ordered, −1 if negatively, 0 if any two coincide.
pub fn cyclic_compare(x: BoundaryPoint, y: BoundaryPoint, z: BoundaryPoint) -> i32 {
    if x == y || y == z || x == z {
        return 0;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let a = (y.angle() - x.angle()).rem_euclid(two_pi);
    let b = (z.angle() - x.angle()).rem_euclid(two_pi);
    if a == b {
        return 0;
    }
    if a < b {
        1
    } else {
        -1
    }
}

/// Hyperbolic distance between two points of the open upper half plane,
/// dist(z₁, z₂) = arccosh(1 + |z₁−z₂|² / (2·Im z₁·Im z₂)).
pub fn dist_h2(z1: Complex64, z2: Complex64) -> Result<f64, HyperbolicError> {
    if z1.im <= 0.0 {
        return Err(HyperbolicError::NotInUpperHalfPlane(z1.im));
    }
    if z2.im <= 0.0 {
        return Err(HyperbolicError::NotInUpperHalfPlane(z2.im));
    }
    let q = (z1 - z2).norm_sqr() / (2.0 * z1.im * z2.im);
    Ok((1.0 + q).acosh())
}

/// An orientation preserving isometry of ℍ², i.e. an element of PSL(2,ℝ)
/// with a remembered SL(2,ℝ) lift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    /// Canonical PSL(2,ℝ) representative (a, b, c, d), determinant 1,
    /// trace ≥ 0, and if the trace vanishes the first nonzero entry is
    /// positive.
    entries: [f64; 4],
    /// The supplied SL(2,ℝ) lift equals `sign` times `entries`.
    sign: f64,
}

impl MoebiusMap {
    /// Builds a map from matrix entries (row major).  The determinant must
    /// be positive; it is renormalised to 1.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, HyperbolicError> {
        let det = a * d - b * c;
        if !det.is_finite() || det <= 0.0 {
            return Err(HyperbolicError::NonPositiveDeterminant(det));
        }
        let s = det.sqrt();
        let raw = [a / s, b / s, c / s, d / s];
        let flip = Self::canonical_sign(&raw);
        Ok(MoebiusMap {
            entries: [flip * raw[0], flip * raw[1], flip * raw[2], flip * raw[3]],
            sign: flip,
        })
    }

    /// Sign ε ∈ {±1} such that ε·raw is the canonical representative.
    fn canonical_sign(raw: &[f64; 4]) -> f64 {
        let tr = raw[0] + raw[3];
        if tr > 0.0 {
            return 1.0;
        }
        if tr < 0.0 {
            return -1.0;
        }
        for &e in raw {
            if e != 0.0 {
                return if e > 0.0 { 1.0 } else { -1.0 };
            }
        }
        1.0
    }

    pub fn identity() -> Self {
        MoebiusMap {
            entries: [1.0, 0.0, 0.0, 1.0],
            sign: 1.0,
        }
    }

    /// Canonical PSL(2,ℝ) entries (a, b, c, d).
    pub fn entries(&self) -> [f64; 4] {
        self.entries
    }

    /// The SL(2,ℝ) lift that was supplied on construction (and is tracked
    /// through compositions), as row-major entries.
    pub fn lift(&self) -> [f64; 4] {
        let s = self.sign;
        let e = self.entries;
        [s * e[0], s * e[1], s * e[2], s * e[3]]
    }

    /// Trace of the canonical representative; always ≥ 0.
    pub fn trace(&self) -> f64 {
        self.entries[0] + self.entries[3]
    }

    /// Composition, tracking lifts: `self.compose(&g)` is the isometry
    /// z ↦ self(g(z)) and its lift is the product of the lifts.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        let p = self.lift();
        let q = other.lift();
        let raw = [
            p[0] * q[0] + p[1] * q[2],
            p[0] * q[1] + p[1] * q[3],
            p[2] * q[0] + p[3] * q[2],
            p[2] * q[1] + p[3] * q[3],
        ];
        // Compositions drift away from determinant 1 in floating point;
        // renormalise each time.
        let det = raw[0] * raw[3] - raw[1] * raw[2];
        let s = det.sqrt();
        let raw = [raw[0] / s, raw[1] / s, raw[2] / s, raw[3] / s];
        let flip = Self::canonical_sign(&raw);
        MoebiusMap {
            entries: [flip * raw[0], flip * raw[1], flip * raw[2], flip * raw[3]],
            sign: flip,
        }
    }

    pub fn inverse(&self) -> MoebiusMap {
        let l = self.lift();
        // Inverse of an SL(2) matrix: [[d, −b], [−c, a]].
        let raw = [l[3], -l[1], -l[2], l[0]];
        let flip = Self::canonical_sign(&raw);
        MoebiusMap {
            entries: [flip * raw[0], flip * raw[1], flip * raw[2], flip * raw[3]],
            sign: flip,
        }
    }

    /// Action on the open upper half plane.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let [a, b, c, d] = self.entries;
        (Complex64::new(a, 0.0) * z + b) / (Complex64::new(c, 0.0) * z + d)
    }

    /// Action on the circle at infinity.
    pub fn apply_boundary(&self, x: BoundaryPoint) -> BoundaryPoint {
        let [a, b, c, d] = self.entries;
        match x {
            BoundaryPoint::Infinity => {
                if c == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(a / c)
                }
            }
            BoundaryPoint::Finite(t) => {
                let den = c * t + d;
                if den == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((a * t + b) / den)
                }
            }
        }
    }

    /// Classification with the default trace tolerance
    /// `1e-9 · max(1, |tr|)`.
    pub fn classify(&self) -> MoebiusClass {
        let tr = self.trace();
        self.classify_with_tol(TRACE_TOL_SCALE * tr.abs().max(1.0))
    }

    /// Classification with an explicit trace tolerance.  The identity is
    /// detected first by an entrywise comparison of the canonical
    /// representative with I at the same tolerance.
    pub fn classify_with_tol(&self, tol: f64) -> MoebiusClass {
        let e = self.entries;
        let id_dev = (e[0] - 1.0)
            .abs()
            .max(e[1].abs())
            .max(e[2].abs())
            .max((e[3] - 1.0).abs());
        if id_dev <= tol {
            return MoebiusClass::Identity;
        }
        let tr = self.trace();
        if (tr.abs() - 2.0).abs() <= tol {
            MoebiusClass::Parabolic
        } else if tr.abs() > 2.0 {
            MoebiusClass::Hyperbolic
        } else {
            MoebiusClass::Elliptic
        }
    }

    /// Translation length: 2·arccosh(|tr|/2) for hyperbolic maps, 0 for
    /// every other class.
    pub fn translation_length(&self) -> f64 {
        match self.classify() {
            MoebiusClass::Hyperbolic => 2.0 * (self.trace().abs() / 2.0).acosh(),
            _ => 0.0,
        }
    }

    /// Displacement of the base point i, dist(i, m·i).
    pub fn displacement(&self) -> f64 {
        dist_h2(Complex64::new(0.0, 1.0), self.apply(Complex64::new(0.0, 1.0)))
            .expect("Möbius maps preserve the upper half plane")
    }

    /// Fixed points, labelled by class.  Finite fixed points solve
    /// c·z² + (d−a)·z − b = 0; when c = 0 the map fixes ∞.
    pub fn fixed_points(&self) -> FixedPoints {
        let [a, b, c, d] = self.entries;
        match self.classify() {
            MoebiusClass::Identity => FixedPoints::Identity,
            MoebiusClass::Parabolic => {
                if c == 0.0 {
                    FixedPoints::Parabolic(BoundaryPoint::Infinity)
                } else {
                    FixedPoints::Parabolic(BoundaryPoint::Finite((a - d) / (2.0 * c)))
                }
            }
            MoebiusClass::Elliptic => {
                // Roots of cz² + (d−a)z − b with negative discriminant;
                // the fixed point is the root in the upper half plane.
                let disc = (d - a) * (d - a) + 4.0 * b * c;
                let im = (-disc).max(0.0).sqrt() / (2.0 * c.abs());
                let re = (a - d) / (2.0 * c);
                FixedPoints::Elliptic(Complex64::new(re, im))
            }
            MoebiusClass::Hyperbolic => {
                let (p, q) = if c == 0.0 {
                    // Fixes ∞ and b/(d−a).
                    (BoundaryPoint::Infinity, BoundaryPoint::Finite(b / (d - a)))
                } else {
                    let disc = ((d - a) * (d - a) + 4.0 * b * c).max(0.0).sqrt();
                    let r1 = (a - d + disc) / (2.0 * c);
                    let r2 = (a - d - disc) / (2.0 * c);
                    (BoundaryPoint::Finite(r1), BoundaryPoint::Finite(r2))
                };
                // |m′(z)| = 1/(cz+d)² < 1 at the attracting fixed point;
                // at ∞ the map is attracting iff |a| > |d|.
                let attracts = |x: BoundaryPoint| -> bool {
                    match x {
                        BoundaryPoint::Infinity => a.abs() > d.abs(),
                        BoundaryPoint::Finite(t) => (c * t + d).abs() > 1.0,
                    }
                };
                if attracts(p) {
                    FixedPoints::Hyperbolic {
                        attracting: p,
                        repelling: q,
                    }
                } else {
                    FixedPoints::Hyperbolic {
                        attracting: q,
                        repelling: p,
                    }
                }
            }
        }
    }
}

/// A unit tangent vector along a geodesic, encoded by the ordered endpoint
/// pair (backward, forward) and the time coordinate along the geodesic.
/// Time 0 sits at the image of i under the canonical map taking (0, ∞) to
/// the endpoints, and the geodesic flow acts by t ↦ t + s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicVector {
    pub backward: BoundaryPoint,
    pub forward: BoundaryPoint,
    pub time: f64,
}

impl GeodesicVector {
    pub fn new(
        backward: BoundaryPoint,
        forward: BoundaryPoint,
        time: f64,
    ) -> Result<Self, HyperbolicError> {
        if backward == forward {
            return Err(HyperbolicError::DegenerateGeodesic);
        }
        Ok(GeodesicVector {
            backward,
            forward,
            time,
        })
    }

    /// Canonical Möbius map taking (0, ∞) to (backward, forward).
    fn chart(&self) -> MoebiusMap {
        match (self.backward, self.forward) {
            (BoundaryPoint::Finite(p), BoundaryPoint::Finite(q)) => {
                if q > p {
                    MoebiusMap::new(q, p, 1.0, 1.0)
                } else {
                    MoebiusMap::new(q, -p, 1.0, -1.0)
                }
            }
            (BoundaryPoint::Finite(p), BoundaryPoint::Infinity) => {
                MoebiusMap::new(1.0, p, 0.0, 1.0)
            }
            (BoundaryPoint::Infinity, BoundaryPoint::Finite(q)) => {
                MoebiusMap::new(q, -1.0, 1.0, 0.0)
            }
            (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => unreachable!(),
        }
        .expect("endpoint charts have positive determinant")
    }

    /// The base point in ℍ² at the current time.
    pub fn base_point(&self) -> Complex64 {
        self.chart().apply(Complex64::new(0.0, self.time.exp()))
    }

    /// Geodesic flow for time `dt` (additive reparametrisation).
    pub fn flow(&self, dt: f64) -> GeodesicVector {
        GeodesicVector {
            backward: self.backward,
            forward: self.forward,
            time: self.time + dt,
        }
    }

    /// The same geodesic with reversed orientation at the same base point.
    pub fn reversed(&self) -> GeodesicVector {
        GeodesicVector {
            backward: self.forward,
            forward: self.backward,
            time: -self.time,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(a: f64, b: f64, c: f64, d: f64) -> MoebiusMap {
        MoebiusMap::new(a, b, c, d).unwrap()
    }

    #[test]
    fn distance_between_i_and_2i_is_log_2() {
        let d = dist_h2(Complex64::new(0.0, 1.0), Complex64::new(0.0, 2.0)).unwrap();
        assert!((d - 2.0_f64.ln()).abs() < 1e-14, "got {d}");
    }

    #[test]
    fn distance_matches_line_element_integral_on_imaginary_axis() {
        // Along the imaginary axis the metric reduces to dy/y, so
        // dist(i, 2i) = ∫₁² dy/y.  Composite Simpson quadrature.
        let n = 4000;
        let h = 1.0 / n as f64;
        let f = |y: f64| 1.0 / y;
        let mut integral = f(1.0) + f(2.0);
        for j in 1..n {
            let y = 1.0 + j as f64 * h;
            integral += if j % 2 == 1 { 4.0 * f(y) } else { 2.0 * f(y) };
        }
        integral *= h / 3.0;
        let d = dist_h2(Complex64::new(0.0, 1.0), Complex64::new(0.0, 2.0)).unwrap();
        assert!((d - integral).abs() < 1e-12, "dist {d} vs integral {integral}");
    }

    #[test]
    fn distance_between_i_and_1_plus_i() {
        let d = dist_h2(Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0)).unwrap();
        assert!((d - 1.5_f64.acosh()).abs() < 1e-14);
        assert!((d - 0.9624236501192069).abs() < 1e-12);
    }

    #[test]
    fn distance_rejects_lower_half_plane() {
        assert!(dist_h2(Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn classification_of_standard_examples() {
        assert_eq!(map(1.0, 1.0, 0.0, 1.0).classify(), MoebiusClass::Parabolic);
        assert_eq!(map(2.0, 1.0, 1.0, 1.0).classify(), MoebiusClass::Hyperbolic);
        let th: f64 = std::f64::consts::PI / 3.0;
        let rot = map(th.cos(), th.sin(), -th.sin(), th.cos());
        assert!((rot.trace() - 1.0).abs() < 1e-15);
        assert_eq!(rot.classify(), MoebiusClass::Elliptic);
        assert_eq!(map(-1.0, 0.0, 0.0, -1.0).classify(), MoebiusClass::Identity);
    }

    #[test]
    fn near_parabolic_traces_classify_parabolic_within_tolerance() {
        let eps = 1e-12;
        let m = map(1.0 + eps, 1.0, 0.0, 1.0 / (1.0 + eps));
        assert_eq!(m.classify(), MoebiusClass::Parabolic);
    }

    #[test]
    fn psl_normalisation_flips_negative_trace() {
        let m = map(-2.0, -1.0, -1.0, -1.0);
        assert!(m.trace() > 0.0);
        assert_eq!(m.lift(), [-2.0, -1.0, -1.0, -1.0]);
        assert_eq!(m.entries(), [2.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn translation_length_of_trace_3_element() {
        let m = map(2.0, 1.0, 1.0, 1.0);
        let l = m.translation_length();
        assert!((l - 2.0 * 1.5_f64.acosh()).abs() < 1e-14);
        // Same number via the eigenvalue: ℓ = 2·log((3+√5)/2).
        let ev = (3.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((l - 2.0 * ev.ln()).abs() < 1e-14);
        assert!((l - 1.9248473002384139).abs() < 1e-12);
    }

    #[test]
    fn translation_length_vanishes_off_the_hyperbolic_class() {
        assert_eq!(map(1.0, 1.0, 0.0, 1.0).translation_length(), 0.0);
        let th: f64 = 0.4;
        assert_eq!(
            map(th.cos(), th.sin(), -th.sin(), th.cos()).translation_length(),
            0.0
        );
    }

    #[test]
    fn fixed_points_of_trace_3_element_are_golden_ratios() {
        let m = map(2.0, 1.0, 1.0, 1.0);
        match m.fixed_points() {
            FixedPoints::Hyperbolic {
                attracting: BoundaryPoint::Finite(p),
                repelling: BoundaryPoint::Finite(q),
            } => {
                let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
                assert!((p - golden).abs() < 1e-14, "attracting {p}");
                assert!((q - (1.0 - 5.0_f64.sqrt()) / 2.0).abs() < 1e-14, "repelling {q}");
            }
            other => panic!("unexpected fixed point data {other:?}"),
        }
    }

    #[test]
    fn parabolic_upper_triangular_fixes_infinity() {
        match map(1.0, 1.0, 0.0, 1.0).fixed_points() {
            FixedPoints::Parabolic(BoundaryPoint::Infinity) => {}
            other => panic!("unexpected fixed point data {other:?}"),
        }
    }

    #[test]
    fn attracting_fixed_point_attracts_orbits() {
        let m = map(2.0, 1.0, 1.0, 1.0);
        if let FixedPoints::Hyperbolic {
            attracting: BoundaryPoint::Finite(p),
            ..
        } = m.fixed_points()
        {
            let mut z = Complex64::new(0.3, 0.7);
            for _ in 0..60 {
                z = m.apply(z);
            }
            assert!((z - Complex64::new(p, 0.0)).norm() < 1e-6);
        } else {
            panic!("expected hyperbolic fixed points");
        }
    }

    #[test]
    fn boundary_orientation_of_reference_triple() {
        let zero = BoundaryPoint::Finite(0.0);
        let one = BoundaryPoint::Finite(1.0);
        let inf = BoundaryPoint::Infinity;
        assert_eq!(cyclic_compare(zero, one, inf), 1);
        assert_eq!(cyclic_compare(zero, inf, one), -1);
        assert_eq!(cyclic_compare(one, inf, zero), 1);
        assert_eq!(cyclic_compare(zero, zero, one), 0);
    }

    #[test]
    fn boundary_angles_are_monotone_in_the_real_coordinate() {
        let xs = [-1e6, -50.0, -1.0, -0.25, 0.0, 0.25, 1.0, 50.0, 1e6];
        let mut last = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let a = BoundaryPoint::Finite(x).angle();
            assert!(a > 0.0 && a < 2.0 * std::f64::consts::PI);
            if i > 0 {
                assert!(a > last, "angle not monotone at x = {x}");
            }
            last = a;
        }
        assert_eq!(BoundaryPoint::Infinity.angle(), 0.0);
    }

    #[test]
    fn composition_tracks_sl2_lifts() {
        let a = map(1.0, 2.0, 0.0, 1.0);
        let b = map(1.0, 0.0, 2.0, 1.0);
        let ab = a.compose(&b);
        // [[1,2],[0,1]]·[[1,0],[2,1]] = [[5,2],[2,1]]
        let l = ab.lift();
        assert!((l[0] - 5.0).abs() < 1e-14);
        assert!((l[1] - 2.0).abs() < 1e-14);
        assert!((l[2] - 2.0).abs() < 1e-14);
        assert!((l[3] - 1.0).abs() < 1e-14);

        // Lift with a sign: (−A)·B should have lift −AB.
        let neg_a = map(-1.0, -2.0, 0.0, -1.0);
        let prod = neg_a.compose(&b);
        let l2 = prod.lift();
        assert!((l2[0] + 5.0).abs() < 1e-14);
        assert_eq!(prod.entries(), ab.entries());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let m = map(2.0, 1.0, 1.0, 1.0);
        let e = m.compose(&m.inverse());
        assert_eq!(e.classify(), MoebiusClass::Identity);
    }

    #[test]
    fn geodesic_base_points_move_at_unit_speed() {
        let g = GeodesicVector::new(
            BoundaryPoint::Finite(0.0),
            BoundaryPoint::Infinity,
            0.0,
        )
        .unwrap();
        assert!((g.base_point() - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        let moved = g.flow(1.5);
        let d = dist_h2(g.base_point(), moved.base_point()).unwrap();
        assert!((d - 1.5).abs() < 1e-12);

        let h = GeodesicVector::new(
            BoundaryPoint::Finite(-2.0),
            BoundaryPoint::Finite(3.0),
            0.3,
        )
        .unwrap();
        let d2 = dist_h2(h.base_point(), h.flow(0.7).base_point()).unwrap();
        assert!((d2 - 0.7).abs() < 1e-12);
    }
}
