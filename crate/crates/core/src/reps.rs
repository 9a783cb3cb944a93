//! Representations of free groups into SL(d, ℝ).
//!
//! The central constructor is [`tau`], the irreducible representation of
//! SL(2, ℝ) on the (d−1)-st symmetric power of ℝ², written in the weight
//! basis `e_j ↔ e₁^{d−j} e₂^{j−1}`.  In this basis the upper unipotent
//! one-parameter subgroup maps to unipotent Pascal-type matrices and the
//! diagonal torus to diagonal weight matrices, which keeps hand checks
//! and the cusp-model construction exact.
//!
//! [`Representation`] bundles generator images with their inverses and
//! evaluates reduced words, with derived constructions (exterior powers,
//! contragredient, direct sums, conjugation).  [`build_cusp_rep`] turns a
//! weakly unipotent matrix into a full SL(2, ℝ)-model of its cusp: an
//! equivariant homomorphism Ψ whose value on the standard unipotent is
//! exactly the unipotent part of the input.

use thiserror::Error;

use crate::freegroup::Word;
use crate::hyperbolic::{BoundaryPoint, MoebiusMap};
use crate::matnum::{
    self, binomial, compound, is_weakly_unipotent, kron, real_jordan,
    BlockEig, RealJordanForm, ScaledMatrix, SqMatrix, MAX_DIM,
};

#[derive(Debug, Error)]
pub enum RepsError {
    #[error("dimension {0} is out of the supported range 1..={MAX_DIM}")]
    DimensionOutOfRange(usize),
    #[error("expected a {expected}×{expected} matrix, got {rows}×{cols}")]
    WrongShape {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("generator {index} has determinant {det:.6e}, expected 1")]
    NotUnimodular { index: usize, det: f64 },
    #[error("a representation needs at least one generator")]
    NoGenerators,
    #[error("generator images must share one dimension (saw {0} and {1})")]
    MixedDimensions(usize, usize),
    #[error("word uses generator {0} but the representation has rank {1}")]
    GeneratorOutOfRange(usize, usize),
    #[error("generator {0} is numerically singular")]
    SingularGenerator(usize),
    #[error(
        "cusp image is not weakly unipotent ({0}); the peripheral word may \
         not map to a parabolic-type element"
    )]
    NotWeaklyUnipotent(String),
    #[error(transparent)]
    MatNum(#[from] matnum::MatNumError),
}

fn check_2x2(m: &SqMatrix) -> Result<(), RepsError> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(RepsError::WrongShape {
            rows: m.nrows(),
            cols: m.ncols(),
            expected: 2,
        });
    }
    Ok(())
}

/// Irreducible representation SL(2, ℝ) → SL(d, ℝ) on Sym^{d−1}(ℝ²) in
/// the weight basis `e_j ↔ e₁^{d−j} e₂^{j−1}`.
///
/// Entry `(k, j)` (1-based) is the coefficient of `e₁^{d−k} e₂^{k−1}`
/// in `(a·e₁ + c·e₂)^{d−j} (b·e₁ + d·e₂)^{j−1}` for input
/// `[[a, b], [c, d]]`.  Consequences used throughout:
/// `[[1, t], [0, 1]]` maps to the Pascal-type matrix with entries
/// `C(j−1, k−1)·t^{j−k}`, `diag(e^s, e^{−s})` maps to
/// `diag(e^{(d+1−2j)s})`, and `−I ↦ (−1)^{d−1}·I`.
pub fn tau(d: usize, m: &SqMatrix) -> Result<SqMatrix, RepsError> {
    if d == 0 || d > MAX_DIM {
        return Err(RepsError::DimensionOutOfRange(d));
    }
    check_2x2(m)?;
    let (a, b, c, dd) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let mut out = SqMatrix::zeros(d, d);
    for k in 1..=d {
        for j in 1..=d {
            // q runs over the e₁-degree contributed by the second
            // binomial factor; the first factor must supply the rest.
            let q_lo = j.saturating_sub(k);
            let q_hi = (j - 1).min(d - k);
            let mut sum = 0.0;
            for q in q_lo..=q_hi {
                let p = d - k - q; // e₁-degree from the first factor
                if p > d - j {
                    continue;
                }
                sum += binomial(d - j, p)
                    * a.powi(p as i32)
                    * c.powi((d - j - p) as i32)
                    * binomial(j - 1, q)
                    * b.powi(q as i32)
                    * dd.powi((j - 1 - q) as i32);
            }
            out[(k - 1, j - 1)] = sum;
        }
    }
    Ok(out)
}

/// [`tau`] applied to the SL(2, ℝ) lift of a Möbius map.  The lift sign
/// matters for even `d`, where `τ_d(−g) = −τ_d(g)`.
pub fn tau_moebius(d: usize, m: &MoebiusMap) -> Result<SqMatrix, RepsError> {
    let l = m.lift();
    let lm = SqMatrix::from_row_slice(2, 2, &[l[0], l[1], l[2], l[3]]);
    tau(d, &lm)
}

/// Change of coordinates from the monomial weight basis to the
/// orthonormal one: the diagonal matrix with entries `1/√C(d−1, j−1)`
/// (the monomial `e₁^{d−j} e₂^{j−1}` has squared norm `1/C(d−1, j−1)`
/// in the invariant inner product on the symmetric power).
pub fn weight_normalizer(d: usize) -> SqMatrix {
    SqMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        (0..d).map(|j| 1.0 / binomial(d - 1, j).sqrt()),
    ))
}

/// [`tau`] conjugated into the orthonormal weight basis, where the
/// image of SO(2) consists of orthogonal matrices.
pub fn tau_orthonormal(d: usize, m: &SqMatrix) -> Result<SqMatrix, RepsError> {
    let s = weight_normalizer(d);
    let s_inv = SqMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        (0..d).map(|j| binomial(d - 1, j).sqrt()),
    ));
    Ok(&s * tau(d, m)? * &s_inv)
}

/// Full-flag matrix of the boundary point under the symmetric-power
/// curve: the leading `k` columns span the k-dimensional piece of the
/// flag at `x`.
///
/// The flag at ∞ is the standard flag (identity matrix); at a finite
/// `x` it is `τ_d` of `[[x, −1], [1, 0]]`, which sends ∞ to `x` on the
/// boundary.  Equivariance `flag(m·x) = τ_d(m)·flag(x)` holds as flags
/// (leading column spans), not as matrices.
pub fn veronese_flag(d: usize, x: &BoundaryPoint) -> Result<SqMatrix, RepsError> {
    let g = match x {
        BoundaryPoint::Infinity => SqMatrix::identity(2, 2),
        BoundaryPoint::Finite(v) => SqMatrix::from_row_slice(2, 2, &[*v, -1.0, 1.0, 0.0]),
    };
    tau(d, &g)
}

/// The boundary point on the symmetric-power curve itself: first column
/// of [`veronese_flag`], normalized.
pub fn veronese_point(d: usize, x: &BoundaryPoint) -> Result<nalgebra::DVector<f64>, RepsError> {
    let f = veronese_flag(d, x)?;
    let col = f.column(0).into_owned();
    Ok(col.normalize())
}

/// A representation of a free group of finite rank into SL(d, ℝ),
/// stored as generator images with precomputed inverses.
#[derive(Debug, Clone)]
pub struct Representation {
    dim: usize,
    generators: Vec<SqMatrix>,
    inverses: Vec<SqMatrix>,
}

/// |det − 1| beyond which a generator image is rejected.
pub const UNIMODULAR_TOL: f64 = 1e-6;

impl Representation {
    /// Builds a representation from generator images, checking shapes
    /// and unimodularity (|det − 1| ≤ [`UNIMODULAR_TOL`]).
    pub fn new(generators: Vec<SqMatrix>) -> Result<Self, RepsError> {
        if generators.is_empty() {
            return Err(RepsError::NoGenerators);
        }
        let dim = generators[0].nrows();
        if dim == 0 || dim > MAX_DIM {
            return Err(RepsError::DimensionOutOfRange(dim));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.nrows() != g.ncols() {
                return Err(RepsError::WrongShape {
                    rows: g.nrows(),
                    cols: g.ncols(),
                    expected: dim,
                });
            }
            if g.nrows() != dim {
                return Err(RepsError::MixedDimensions(dim, g.nrows()));
            }
            let det = g.determinant();
            if (det - 1.0).abs() > UNIMODULAR_TOL {
                return Err(RepsError::NotUnimodular { index: i, det });
            }
        }
        let mut inverses = Vec::with_capacity(generators.len());
        for (i, g) in generators.iter().enumerate() {
            inverses.push(
                g.clone()
                    .try_inverse()
                    .ok_or(RepsError::SingularGenerator(i))?,
            );
        }
        Ok(Representation {
            dim,
            generators,
            inverses,
        })
    }

    /// Internal constructor for derived representations whose images
    /// are unimodular by construction; inverses are supplied directly
    /// to avoid needless inversion error.
    fn from_parts(generators: Vec<SqMatrix>, inverses: Vec<SqMatrix>) -> Self {
        let dim = generators[0].nrows();
        Representation {
            dim,
            generators,
            inverses,
        }
    }

    /// Composition of `τ_d` with a Fuchsian assignment of the
    /// generators (as Möbius maps with tracked SL(2, ℝ) lifts).
    pub fn from_moebius(d: usize, gens: &[MoebiusMap]) -> Result<Self, RepsError> {
        if gens.is_empty() {
            return Err(RepsError::NoGenerators);
        }
        let mut images = Vec::with_capacity(gens.len());
        let mut inverses = Vec::with_capacity(gens.len());
        for m in gens {
            images.push(tau_moebius(d, m)?);
            inverses.push(tau_moebius(d, &m.inverse())?);
        }
        Ok(Self::from_parts(images, inverses))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[SqMatrix] {
        &self.generators
    }

    /// Image of a signed letter (1-based index, negative = inverse).
    pub fn letter(&self, l: i32) -> Result<&SqMatrix, RepsError> {
        let idx = l.unsigned_abs() as usize;
        if idx == 0 || idx > self.generators.len() {
            return Err(RepsError::GeneratorOutOfRange(idx, self.generators.len()));
        }
        Ok(if l > 0 {
            &self.generators[idx - 1]
        } else {
            &self.inverses[idx - 1]
        })
    }

    /// Image of a reduced word.
    pub fn evaluate(&self, w: &Word) -> Result<SqMatrix, RepsError> {
        let mut out = SqMatrix::identity(self.dim, self.dim);
        for &l in w.letters() {
            out *= self.letter(l)?;
        }
        Ok(out)
    }

    /// Image of a reduced word as a rescaled product, safe for words
    /// whose image norm overflows f64.
    pub fn evaluate_scaled(&self, w: &Word) -> Result<ScaledMatrix, RepsError> {
        let mut out = ScaledMatrix::of(SqMatrix::identity(self.dim, self.dim));
        for &l in w.letters() {
            let carried = out.log2_scale;
            out = ScaledMatrix::of(&out.matrix * self.letter(l)?);
            out.log2_scale += carried;
        }
        Ok(out)
    }

    /// The k-th exterior power, with inverses derived from inverses of
    /// the original images (the compound of the inverse is the inverse
    /// of the compound, and is much better conditioned than inverting).
    pub fn exterior_power(&self, k: usize) -> Result<Self, RepsError> {
        let gens = self
            .generators
            .iter()
            .map(|g| compound(g, k))
            .collect::<Result<Vec<_>, _>>()?;
        let invs = self
            .inverses
            .iter()
            .map(|g| compound(g, k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_parts(gens, invs))
    }

    /// Contragredient representation g ↦ (g⁻¹)ᵀ.
    pub fn contragredient(&self) -> Self {
        let gens: Vec<SqMatrix> = self.inverses.iter().map(|g| g.transpose()).collect();
        let invs: Vec<SqMatrix> = self.generators.iter().map(|g| g.transpose()).collect();
        Self::from_parts(gens, invs)
    }

    /// Blockwise direct sum with another representation of the same
    /// rank.
    pub fn direct_sum(&self, other: &Representation) -> Result<Self, RepsError> {
        if self.rank() != other.rank() {
            return Err(RepsError::MixedDimensions(self.rank(), other.rank()));
        }
        let d = self.dim + other.dim;
        if d > MAX_DIM {
            return Err(RepsError::DimensionOutOfRange(d));
        }
        let stack = |a: &SqMatrix, b: &SqMatrix| {
            let mut m = SqMatrix::zeros(d, d);
            m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
            m.view_mut(
                (a.nrows(), a.ncols()),
                (b.nrows(), b.ncols()),
            )
            .copy_from(b);
            m
        };
        let gens: Vec<SqMatrix> = self
            .generators
            .iter()
            .zip(&other.generators)
            .map(|(a, b)| stack(a, b))
            .collect();
        let invs: Vec<SqMatrix> = self
            .inverses
            .iter()
            .zip(&other.inverses)
            .map(|(a, b)| stack(a, b))
            .collect();
        Ok(Self::from_parts(gens, invs))
    }

    /// Conjugated representation g ↦ s·g·s⁻¹.
    pub fn conjugated(&self, s: &SqMatrix) -> Result<Self, RepsError> {
        if s.nrows() != self.dim || s.ncols() != self.dim {
            return Err(RepsError::WrongShape {
                rows: s.nrows(),
                cols: s.ncols(),
                expected: self.dim,
            });
        }
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or(RepsError::SingularGenerator(0))?;
        let gens: Vec<SqMatrix> = self.generators.iter().map(|g| s * g * &s_inv).collect();
        let invs: Vec<SqMatrix> = self.inverses.iter().map(|g| s * g * &s_inv).collect();
        Ok(Self::from_parts(gens, invs))
    }
}

/// SL(2, ℝ)-model of a cusp: a homomorphism Ψ into SL(d, ℝ) adapted to
/// a weakly unipotent matrix `g`.
///
/// Ψ is built from the real Jordan form of `g`: each real block of size
/// `s` contributes `τ_s`, each conjugate-pair block contributes
/// `τ_s ⊗ I₂`, all conjugated back by the adapted basis.  By
/// construction `Ψ([[1, 1], [0, 1]])` is exactly the unipotent part of
/// `g`, and the semisimple part of `g` commutes with the whole image
/// of Ψ.
#[derive(Debug, Clone)]
pub struct CuspRep {
    dim: usize,
    blocks: Vec<(usize, bool)>,
    basis: SqMatrix,
    basis_inv: SqMatrix,
    /// Jordan data of the generating weakly unipotent matrix.
    pub form: RealJordanForm,
    /// `‖Ψ(u₁) − g_u‖ / ‖g_u‖` certificate.
    pub unipotent_match: f64,
    /// Largest commutator norm of the semisimple part of `g` against
    /// Ψ on probe values, relative to `‖g‖`.
    pub semisimple_commutation: f64,
}

impl CuspRep {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Chain block sizes with their pair flags, in basis order.
    pub fn block_structure(&self) -> &[(usize, bool)] {
        &self.blocks
    }

    /// Evaluates Ψ on a 2×2 matrix.
    pub fn evaluate(&self, b: &SqMatrix) -> Result<SqMatrix, RepsError> {
        check_2x2(b)?;
        let mut j = SqMatrix::zeros(self.dim, self.dim);
        let mut off = 0;
        for &(s, pair) in &self.blocks {
            let t = tau(s, b)?;
            let block = if pair {
                kron(&t, &SqMatrix::identity(2, 2))
            } else {
                t
            };
            let r = block.nrows();
            j.view_mut((off, off), (r, r)).copy_from(&block);
            off += r;
        }
        Ok(&self.basis * j * &self.basis_inv)
    }

    /// Ψ on the diagonal flow `diag(e^{t/2}, e^{−t/2})`.
    pub fn evaluate_flow(&self, t: f64) -> Result<SqMatrix, RepsError> {
        let b = SqMatrix::from_row_slice(2, 2, &[(t / 2.0).exp(), 0.0, 0.0, (-t / 2.0).exp()]);
        self.evaluate(&b)
    }

    /// Ψ on the standard unipotent `[[1, t], [0, 1]]`.
    pub fn evaluate_unipotent(&self, t: f64) -> Result<SqMatrix, RepsError> {
        let b = SqMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]);
        self.evaluate(&b)
    }
}

/// Builds the cusp model for a weakly unipotent matrix.
///
/// `cluster_tol` is the eigenvalue clustering radius for the Jordan
/// analysis; eigenvalue moduli are snapped to 1 (they are within
/// `cluster_tol` of it by the weak unipotency check).
pub fn build_cusp_rep(g: &SqMatrix, cluster_tol: f64) -> Result<CuspRep, RepsError> {
    let report = is_weakly_unipotent(g, cluster_tol)?;
    if !report.is_weakly_unipotent() {
        return Err(RepsError::NotWeaklyUnipotent(format!(
            "verdict {:?}, moduli {:?}",
            report.verdict, report.moduli
        )));
    }
    let form = real_jordan(g, cluster_tol, true)?;
    let blocks: Vec<(usize, bool)> = form
        .blocks
        .iter()
        .map(|b| (b.size, matches!(b.eig, BlockEig::Pair { .. })))
        .collect();
    let mut rep = CuspRep {
        dim: form.dim,
        blocks,
        basis: form.basis.clone(),
        basis_inv: form.basis_inv.clone(),
        form,
        unipotent_match: 0.0,
        semisimple_commutation: 0.0,
    };
    let gu = rep.form.unipotent_part();
    let psi_u = rep.evaluate_unipotent(1.0)?;
    rep.unipotent_match = (&psi_u - &gu).norm() / gu.norm().max(1e-300);
    let gs = rep.form.semisimple_part();
    let gnorm = g.norm().max(1e-300);
    let mut worst = 0.0_f64;
    for probe in [
        SqMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.0, 1.0]),
        SqMatrix::from_row_slice(2, 2, &[1.4, 0.0, 0.0, 1.0 / 1.4]),
        SqMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]),
    ] {
        let p = rep.evaluate(&probe)?;
        worst = worst.max((&gs * &p - &p * &gs).norm() / (gnorm * p.norm().max(1e-300)));
    }
    rep.semisimple_commutation = worst;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matnum::principal_angle_max;
    use nalgebra::dmatrix;

    fn sl2(a: f64, b: f64, c: f64, d: f64) -> SqMatrix {
        let m = dmatrix![a, b; c, d];
        let det = m.determinant();
        assert!(det > 0.0, "test matrix must have positive determinant");
        m / det.sqrt()
    }

    #[test]
    fn tau_of_upper_unipotent_is_pascal_type() {
        let d = 4;
        let a = 0.7;
        let u = dmatrix![1.0, a; 0.0, 1.0];
        let t = tau(d, &u).unwrap();
        for k in 1..=d {
            for j in 1..=d {
                let expect = if j >= k {
                    binomial(j - 1, k - 1) * a.powi((j - k) as i32)
                } else {
                    0.0
                };
                assert!(
                    (t[(k - 1, j - 1)] - expect).abs() < 1e-14,
                    "entry ({k},{j})"
                );
            }
        }
    }

    #[test]
    fn tau_of_diagonal_has_weight_exponents() {
        let d = 5;
        let s = 0.3_f64;
        let g = dmatrix![s.exp(), 0.0; 0.0, (-s).exp()];
        let t = tau(d, &g).unwrap();
        for j in 1..=d {
            let expect = ((d as f64 + 1.0 - 2.0 * j as f64) * s).exp();
            assert!((t[(j - 1, j - 1)] - expect).abs() < 1e-12 * expect.abs());
        }
        // Off-diagonal entries vanish.
        assert!((t.clone() - SqMatrix::from_diagonal(&t.diagonal())).norm() < 1e-14);
    }

    #[test]
    fn tau_is_a_homomorphism() {
        let a = sl2(1.3, 0.4, -0.2, 0.9);
        let b = sl2(0.7, -1.1, 0.5, 0.4);
        for d in 1..=6 {
            let tab = tau(d, &(&a * &b)).unwrap();
            let ta = tau(d, &a).unwrap();
            let tb = tau(d, &b).unwrap();
            assert!(
                ((&ta * &tb) - &tab).norm() < 1e-12 * tab.norm().max(1.0),
                "d = {d}"
            );
            // Identity and inverse.
            let ti = tau(d, &SqMatrix::identity(2, 2)).unwrap();
            assert!((ti - SqMatrix::identity(d, d)).norm() < 1e-14);
            let tinv = tau(d, &a.clone().try_inverse().unwrap()).unwrap();
            assert!(
                ((&ta * &tinv) - SqMatrix::identity(d, d)).norm() < 1e-12,
                "d = {d}"
            );
        }
    }

    #[test]
    fn tau_determinant_is_one_and_dim_two_is_identity_map() {
        let a = sl2(2.0, 0.3, 0.1, 0.6);
        let t5 = tau(5, &a).unwrap();
        assert!((t5.determinant() - 1.0).abs() < 1e-10);
        let t2 = tau(2, &a).unwrap();
        assert!((t2 - &a).norm() < 1e-15);
        // τ₁ is trivial.
        let t1 = tau(1, &a).unwrap();
        assert_eq!(t1, SqMatrix::identity(1, 1));
    }

    #[test]
    fn tau_of_minus_identity_alternates_with_dimension() {
        let minus = dmatrix![-1.0, 0.0; 0.0, -1.0];
        for d in 2..=6 {
            let t = tau(d, &minus).unwrap();
            let sign = if d % 2 == 0 { -1.0 } else { 1.0 };
            assert!(
                (t - SqMatrix::identity(d, d) * sign).norm() < 1e-14,
                "d = {d}"
            );
        }
    }

    #[test]
    fn orthonormal_weight_basis_makes_rotations_orthogonal() {
        let th = 0.9_f64;
        let r = dmatrix![th.cos(), -th.sin(); th.sin(), th.cos()];
        for d in 2..=6 {
            let t = tau_orthonormal(d, &r).unwrap();
            let defect = (t.transpose() * &t - SqMatrix::identity(d, d)).norm();
            assert!(defect < 1e-12, "d = {d}, defect {defect}");
        }
        // Plain weight basis does not have this property at d = 3.
        let plain = tau(3, &r).unwrap();
        assert!((plain.transpose() * &plain - SqMatrix::identity(3, 3)).norm() > 1e-3);
    }

    #[test]
    fn boundary_curve_special_values() {
        // At ∞ the flag is standard; at 0 the curve point is e₃ (d = 3).
        let at_inf = veronese_flag(3, &BoundaryPoint::Infinity).unwrap();
        assert!((at_inf - SqMatrix::identity(3, 3)).norm() < 1e-14);
        let p0 = veronese_point(3, &BoundaryPoint::Finite(0.0)).unwrap();
        let e3 = nalgebra::dvector![0.0, 0.0, 1.0];
        assert!((&p0 - &e3).norm().min((&p0 + &e3).norm()) < 1e-14);
    }

    #[test]
    fn boundary_curve_is_equivariant() {
        let m = MoebiusMap::new(1.0, 2.0, 1.0, 3.0).unwrap();
        let d = 4;
        let lift = m.lift();
        let tm = tau(
            d,
            &SqMatrix::from_row_slice(2, 2, &[lift[0], lift[1], lift[2], lift[3]]),
        )
        .unwrap();
        for &x in &[0.0, 1.0, -2.5, 0.3] {
            let p = BoundaryPoint::Finite(x);
            let image = m.apply_boundary(p);
            let fx = veronese_flag(d, &p).unwrap();
            let fy = veronese_flag(d, &image).unwrap();
            // Compare leading k-subspaces of τ(m)·flag(x) and flag(m·x).
            let moved = &tm * &fx;
            for k in 1..d {
                let a = moved.columns(0, k).into_owned().qr().q();
                let b = fy.columns(0, k).into_owned().qr().q();
                let angle = principal_angle_max(&a, &b).unwrap();
                assert!(angle < 1e-9, "x = {x}, k = {k}, angle = {angle}");
            }
        }
    }

    #[test]
    fn representation_evaluates_words() {
        let a = tau(3, &sl2(1.0, 1.0, 0.0, 1.0)).unwrap();
        let b = tau(3, &sl2(1.0, 0.0, 1.0, 1.0)).unwrap();
        let rep = Representation::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(rep.dim(), 3);
        assert_eq!(rep.rank(), 2);

        let w = Word::new(vec![1, 2, -1]).unwrap();
        let expect = &a * &b * a.clone().try_inverse().unwrap();
        assert!((rep.evaluate(&w).unwrap() - expect).norm() < 1e-12);
        assert!(
            (rep.evaluate(&Word::identity()).unwrap() - SqMatrix::identity(3, 3)).norm()
                < 1e-15
        );
        // Out-of-range letters are rejected.
        let bad = Word::new(vec![3]).unwrap();
        assert!(matches!(
            rep.evaluate(&bad),
            Err(RepsError::GeneratorOutOfRange(3, 2))
        ));
    }

    #[test]
    fn scaled_evaluation_matches_plain_for_moderate_words() {
        let rep = Representation::new(vec![
            tau(4, &sl2(2.0, 0.0, 0.0, 0.5)).unwrap(),
            tau(4, &sl2(1.0, 1.0, 0.0, 1.0)).unwrap(),
        ])
        .unwrap();
        let w = Word::new(vec![1, 2, 1, -2, 1]).unwrap();
        let plain = rep.evaluate(&w).unwrap();
        let scaled = rep.evaluate_scaled(&w).unwrap();
        let recon = &scaled.matrix * scaled.log2_scale.exp2();
        assert!((recon - plain).norm() < 1e-9);
    }

    #[test]
    fn exterior_power_commutes_with_evaluation() {
        let rep = Representation::new(vec![
            tau(4, &sl2(1.5, 0.2, 0.1, 0.7)).unwrap(),
            tau(4, &sl2(0.8, -0.5, 0.3, 1.1)).unwrap(),
        ])
        .unwrap();
        let ext = rep.exterior_power(2).unwrap();
        let w = Word::new(vec![1, -2, 1, 2]).unwrap();
        let via_rep = ext.evaluate(&w).unwrap();
        let via_compound = compound(&rep.evaluate(&w).unwrap(), 2).unwrap();
        assert!(
            (via_rep.clone() - &via_compound).norm() < 1e-10 * via_compound.norm(),
        );
    }

    #[test]
    fn contragredient_and_sum_and_conjugation() {
        let rep = Representation::new(vec![
            tau(3, &sl2(1.2, 0.3, 0.0, 1.0 / 1.2)).unwrap(),
            tau(3, &sl2(1.0, 0.0, 0.4, 1.0)).unwrap(),
        ])
        .unwrap();
        let w = Word::new(vec![2, 1]).unwrap();

        let dual = rep.contragredient();
        let expect = rep
            .evaluate(&w)
            .unwrap()
            .try_inverse()
            .unwrap()
            .transpose();
        assert!((dual.evaluate(&w).unwrap() - expect).norm() < 1e-11);

        let sum = rep.direct_sum(&dual).unwrap();
        assert_eq!(sum.dim(), 6);
        let sw = sum.evaluate(&w).unwrap();
        assert!((sw.view((0, 0), (3, 3)).clone_owned() - rep.evaluate(&w).unwrap()).norm() < 1e-11);
        assert!((sw.view((3, 3), (3, 3)).clone_owned() - dual.evaluate(&w).unwrap()).norm() < 1e-11);
        assert!((sw.view((0, 3), (3, 3))).norm() < 1e-15);

        let s = dmatrix![1.0, 0.3, 0.0; 0.0, 1.0, -0.2; 0.1, 0.0, 1.0];
        let conj = rep.conjugated(&s).unwrap();
        let expect =
            &s * rep.evaluate(&w).unwrap() * s.clone().try_inverse().unwrap();
        assert!((conj.evaluate(&w).unwrap() - expect).norm() < 1e-11);
    }

    #[test]
    fn representation_rejects_non_unimodular_input() {
        let bad = dmatrix![2.0, 0.0; 0.0, 1.0];
        assert!(matches!(
            Representation::new(vec![bad]),
            Err(RepsError::NotUnimodular { index: 0, .. })
        ));
    }

    #[test]
    fn cusp_model_reproduces_unipotent_part() {
        // J₂(1) ⊕ I₂ conjugated: the image of a parabolic under a
        // reducible representation.
        let mut inner = SqMatrix::identity(4, 4);
        inner[(0, 1)] = 2.0;
        let mut t = SqMatrix::identity(4, 4);
        t[(0, 2)] = 0.4;
        t[(1, 3)] = -0.3;
        t[(2, 1)] = 0.2;
        let g = &t * &inner * t.clone().try_inverse().unwrap();
        let cusp = build_cusp_rep(&g, 1e-4).unwrap();
        assert!(cusp.unipotent_match < 1e-10);
        assert!(cusp.semisimple_commutation < 1e-10);
        // Here g is already unipotent, so Ψ(u₁) = g itself.
        let psi1 = cusp.evaluate_unipotent(1.0).unwrap();
        assert!((psi1 - &g).norm() < 1e-9);
        // Ψ is a homomorphism.
        let b1 = SqMatrix::from_row_slice(2, 2, &[1.1, 0.5, 0.2, (1.0 + 0.5 * 0.2) / 1.1]);
        let b2 = SqMatrix::from_row_slice(2, 2, &[0.9, -0.3, 0.4, (1.0 + 0.3 * 0.4) / 0.9]);
        let lhs = cusp.evaluate(&(&b1 * &b2)).unwrap();
        let rhs = cusp.evaluate(&b1).unwrap() * cusp.evaluate(&b2).unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
        // Block structure: one chain of length 2, two of length 1.
        let mut sizes: Vec<usize> = cusp.block_structure().iter().map(|&(s, _)| s).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 2]);
    }

    #[test]
    fn cusp_model_handles_rotation_pairs() {
        // P₂ ⊗ R(θ): weakly unipotent with a conjugate-pair cluster.
        let th = 1.3_f64;
        let g = kron(
            &dmatrix![1.0, 1.0; 0.0, 1.0],
            &dmatrix![th.cos(), th.sin(); -th.sin(), th.cos()],
        );
        let cusp = build_cusp_rep(&g, 1e-4).unwrap();
        assert_eq!(cusp.block_structure(), &[(2, true)]);
        assert!(cusp.unipotent_match < 1e-10);
        assert!(cusp.semisimple_commutation < 1e-10);
        // The flow direction: Ψ(diag(e^{t/2}, e^{-t/2})) has singular
        // values e^{±t/2} doubled (weights of τ₂ ⊗ I₂).
        let f = cusp.evaluate_flow(2.0).unwrap();
        let mut sv: Vec<f64> = f.svd(false, false).singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!((sv[0] - 1.0_f64.exp()).abs() < 1e-9);
        assert!((sv[1] - 1.0_f64.exp()).abs() < 1e-9);
        assert!((sv[2] - (-1.0_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn cusp_model_rejects_loxodromic_input() {
        let g = dmatrix![2.0, 0.0; 0.0, 0.5];
        assert!(matches!(
            build_cusp_rep(&g, 1e-4),
            Err(RepsError::NotWeaklyUnipotent(_))
        ));
    }
}
