//! Flags in ℝ^d, transversality margins, and total positivity.
//!
//! A full flag is stored as an orthonormal matrix whose leading k
//! columns span the k-dimensional piece.  Positivity of a tuple of
//! pairwise-transverse flags is decided by factoring each intermediate
//! flag through a unipotent transporter in a basis adapted to the two
//! pinning flags, and then scanning all structurally nonzero minors of
//! the consecutive transporter ratios.  Because the adapted basis is
//! only defined up to scaling each line, minors are examined jointly
//! over all diagonal sign gauges; a tuple is positive when one gauge
//! makes every scanned minor of every ratio strictly positive.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::matnum::{self, lex_subsets, principal_angle_max, SqMatrix, MAX_DIM};

/// Largest ambient dimension for which minor scans are attempted
/// (the scan enumerates all row/column subsets).
pub const MAX_TP_DIM: usize = 8;

/// Default relative threshold: a minor counts as positive when it
/// exceeds this multiple of the largest scanned minor magnitude.
pub const DEFAULT_POS_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PosFlagsError {
    #[error("dimension {0} is out of the supported range 1..={MAX_DIM}")]
    DimensionOutOfRange(usize),
    #[error("minor scans support dimension at most {MAX_TP_DIM}, got {0}")]
    DimensionTooLargeForMinors(usize),
    #[error("expected a matrix with {expected} rows, got {got}")]
    AmbientMismatch { expected: usize, got: usize },
    #[error("matrix does not have full column rank (column {0} degenerate)")]
    RankDeficient(usize),
    #[error("flags are not transverse ({0})")]
    NotTransverse(String),
    #[error("matrix is not triangular unipotent (defect {0:.3e})")]
    NotUnipotentTriangular(f64),
    #[error("a flag tuple needs at least 3 flags, got {0}")]
    TooFewFlags(usize),
    #[error("subspace dimensions {0} and {1} do not fill the ambient space {2}")]
    NotComplementary(usize, usize, usize),
    #[error("subspace dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    MatNum(#[from] matnum::MatNumError),
}

/// A complete flag in ℝ^d: orthonormal columns, leading k columns
/// spanning the k-dimensional piece.
#[derive(Debug, Clone)]
pub struct Flag {
    mat: SqMatrix,
}

/// Orthonormalizes the columns of a full-rank matrix, keeping leading
/// column spans, with a deterministic sign convention (positive R
/// diagonal in the QR factorization).
fn orthonormalize(m: &DMatrix<f64>) -> Result<DMatrix<f64>, PosFlagsError> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    let scale = m.norm().max(1e-300);
    for j in 0..m.ncols() {
        let rjj = r[(j, j)];
        if rjj.abs() < 1e-12 * scale {
            return Err(PosFlagsError::RankDeficient(j));
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

impl Flag {
    /// Builds a flag from any invertible matrix: the leading k columns
    /// of the input span the k-dimensional piece.
    pub fn new(m: &SqMatrix) -> Result<Self, PosFlagsError> {
        let d = m.nrows();
        if d == 0 || d > MAX_DIM {
            return Err(PosFlagsError::DimensionOutOfRange(d));
        }
        if m.ncols() != d {
            return Err(PosFlagsError::AmbientMismatch {
                expected: d,
                got: m.ncols(),
            });
        }
        Ok(Flag {
            mat: orthonormalize(m)?,
        })
    }

    /// The standard flag spanned by leading coordinate vectors.
    pub fn standard(d: usize) -> Self {
        Flag {
            mat: SqMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Orthonormal matrix whose leading columns span the flag pieces.
    pub fn matrix(&self) -> &SqMatrix {
        &self.mat
    }

    /// Orthonormal basis of the k-dimensional piece.
    pub fn subspace(&self, k: usize) -> DMatrix<f64> {
        self.mat.columns(0, k).into_owned()
    }

    /// The image flag under an invertible matrix.
    pub fn transformed(&self, g: &SqMatrix) -> Result<Self, PosFlagsError> {
        Flag::new(&(g * &self.mat))
    }

    /// Partial flag consisting of the single k-dimensional piece.
    pub fn partial(&self, k: usize) -> PartialFlag {
        PartialFlag {
            basis: self.subspace(k),
        }
    }
}

/// A single k-dimensional subspace of ℝ^d with an orthonormal basis.
#[derive(Debug, Clone)]
pub struct PartialFlag {
    basis: DMatrix<f64>,
}

impl PartialFlag {
    /// Builds a subspace from any full-column-rank spanning matrix.
    pub fn new(m: &DMatrix<f64>) -> Result<Self, PosFlagsError> {
        let d = m.nrows();
        if d == 0 || d > MAX_DIM {
            return Err(PosFlagsError::DimensionOutOfRange(d));
        }
        if m.ncols() == 0 || m.ncols() > d {
            return Err(PosFlagsError::AmbientMismatch {
                expected: d,
                got: m.ncols(),
            });
        }
        Ok(PartialFlag {
            basis: orthonormalize(m)?,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Largest principal angle to another subspace of the same
    /// dimension, in radians.
    pub fn angle_to(&self, other: &PartialFlag) -> Result<f64, PosFlagsError> {
        if self.dim() != other.dim() {
            return Err(PosFlagsError::DimensionMismatch(self.dim(), other.dim()));
        }
        if self.ambient_dim() != other.ambient_dim() {
            return Err(PosFlagsError::AmbientMismatch {
                expected: self.ambient_dim(),
                got: other.ambient_dim(),
            });
        }
        Ok(principal_angle_max(&self.basis, &other.basis)?)
    }

    /// Transversality margin against a complementary-dimension
    /// subspace: the absolute determinant of the stacked orthonormal
    /// bases, i.e. the product of the sines of the principal angles.
    /// It lies in [0, 1]: 0 when the subspaces intersect and 1 exactly
    /// when they are orthogonal complements.
    pub fn transverse_margin(&self, other: &PartialFlag) -> Result<f64, PosFlagsError> {
        let d = self.ambient_dim();
        if other.ambient_dim() != d {
            return Err(PosFlagsError::AmbientMismatch {
                expected: d,
                got: other.ambient_dim(),
            });
        }
        if self.dim() + other.dim() != d {
            return Err(PosFlagsError::NotComplementary(self.dim(), other.dim(), d));
        }
        let mut stacked = DMatrix::zeros(d, d);
        stacked
            .view_mut((0, 0), (d, self.dim()))
            .copy_from(&self.basis);
        stacked
            .view_mut((0, self.dim()), (d, other.dim()))
            .copy_from(&other.basis);
        Ok(stacked.determinant().abs().min(1.0))
    }

    /// The image subspace under an invertible matrix.
    pub fn transformed(&self, g: &SqMatrix) -> Result<Self, PosFlagsError> {
        PartialFlag::new(&(g * &self.basis))
    }
}

/// A pair of subspaces of complementary dimensions k and d−k, the
/// partial-flag data carried by a boundary point under a k-th limit
/// map: the k-plane together with the (d−k)-plane.
#[derive(Debug, Clone)]
pub struct PartialFlagPair {
    /// The k-dimensional piece.
    pub sub: PartialFlag,
    /// The (d−k)-dimensional piece.
    pub complement: PartialFlag,
}

impl PartialFlagPair {
    pub fn new(sub: PartialFlag, complement: PartialFlag) -> Result<Self, PosFlagsError> {
        let d = sub.ambient_dim();
        if complement.ambient_dim() != d {
            return Err(PosFlagsError::AmbientMismatch {
                expected: d,
                got: complement.ambient_dim(),
            });
        }
        if sub.dim() + complement.dim() != d {
            return Err(PosFlagsError::NotComplementary(
                sub.dim(),
                complement.dim(),
                d,
            ));
        }
        Ok(PartialFlagPair { sub, complement })
    }

    pub fn ambient_dim(&self) -> usize {
        self.sub.ambient_dim()
    }

    pub fn k(&self) -> usize {
        self.sub.dim()
    }
}

/// Transversality margin of two complete flags: the minimum over k of
/// the margin between the k-piece of one and the (d−k)-piece of the
/// other, checked in both directions.
pub fn flag_transversality(f: &Flag, g: &Flag) -> Result<f64, PosFlagsError> {
    let d = f.dim();
    if g.dim() != d {
        return Err(PosFlagsError::AmbientMismatch {
            expected: d,
            got: g.dim(),
        });
    }
    let mut margin = f64::INFINITY;
    for k in 1..d {
        margin = margin.min(f.partial(k).transverse_margin(&g.partial(d - k))?);
        margin = margin.min(g.partial(k).transverse_margin(&f.partial(d - k))?);
    }
    Ok(margin)
}

/// A scanned minor of a unipotent matrix: row set, column set (both
/// 0-based, ascending) and its determinant value.
#[derive(Debug, Clone)]
struct MinorRec {
    rows: Vec<usize>,
    cols: Vec<usize>,
    value: f64,
}

fn minor_det(m: &SqMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    let mut sub = SqMatrix::zeros(k, k);
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            sub[(a, b)] = m[(i, j)];
        }
    }
    sub.determinant()
}

/// Canonicalizes a triangular unipotent matrix to upper-triangular
/// form: checks the unit diagonal, determines the triangular side,
/// zeroes the negligible triangle exactly, and transposes lower
/// matrices (total positivity is transpose-invariant).
fn canonical_upper_unipotent(u: &SqMatrix) -> Result<SqMatrix, PosFlagsError> {
    let d = u.nrows();
    let scale = u.norm().max(1.0);
    let tol = 1e-9 * scale;
    let mut diag_defect = 0.0_f64;
    for i in 0..d {
        diag_defect = diag_defect.max((u[(i, i)] - 1.0).abs());
    }
    let mut upper_defect = 0.0_f64;
    let mut lower_defect = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            if i < j {
                upper_defect = upper_defect.max(u[(i, j)].abs());
            } else if i > j {
                lower_defect = lower_defect.max(u[(i, j)].abs());
            }
        }
    }
    if diag_defect > tol {
        return Err(PosFlagsError::NotUnipotentTriangular(diag_defect));
    }
    let defect = upper_defect.min(lower_defect);
    if defect > tol {
        return Err(PosFlagsError::NotUnipotentTriangular(defect));
    }
    // Prefer the side with actual content; ties (diagonal input) are
    // harmless either way.
    let mut out = if upper_defect >= lower_defect {
        u.clone()
    } else {
        u.transpose()
    };
    for i in 0..d {
        out[(i, i)] = 1.0;
        for j in 0..i {
            out[(i, j)] = 0.0;
        }
    }
    Ok(out)
}

/// Scans every structurally nonzero minor of an upper-triangular
/// unipotent matrix.  For row set I and column set J (ascending), the
/// minor vanishes identically unless `j_t ≥ i_t` for every position t;
/// those are skipped.  The full determinant (always 1) is skipped too.
fn scan_minors(u: &SqMatrix) -> Vec<MinorRec> {
    let d = u.nrows();
    let mut recs = Vec::new();
    for k in 1..d {
        let subsets = lex_subsets(d, k);
        for rows in &subsets {
            for cols in &subsets {
                if rows.iter().zip(cols.iter()).any(|(&i, &j)| j < i) {
                    continue;
                }
                recs.push(MinorRec {
                    rows: rows.clone(),
                    cols: cols.clone(),
                    value: minor_det(u, rows, cols),
                });
            }
        }
    }
    recs
}

/// All diagonal sign gauges `t ∈ {±1}^d` with `t₁ = +1` (a global sign
/// cancels in every minor, so one entry can be pinned).
fn sign_gauges(d: usize) -> Vec<Vec<f64>> {
    let n = 1usize << (d - 1);
    (0..n)
        .map(|mask| {
            let mut t = vec![1.0; d];
            for (i, ti) in t.iter_mut().enumerate().skip(1) {
                if mask & (1 << (i - 1)) != 0 {
                    *ti = -1.0;
                }
            }
            t
        })
        .collect()
}

fn gauge_sign(t: &[f64], rows: &[usize], cols: &[usize]) -> f64 {
    let mut s = 1.0;
    for &i in rows {
        s *= t[i];
    }
    for &j in cols {
        s *= t[j];
    }
    s
}

/// Location of the worst minor in a positivity scan.
#[derive(Debug, Clone)]
pub struct MinorLocation {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub scaled_value: f64,
}

/// Result of a total positivity scan.
#[derive(Debug, Clone)]
pub struct TotalPositivityReport {
    /// Whether some sign gauge makes every scanned minor exceed the
    /// positivity threshold.
    pub is_positive: bool,
    /// Diagonal gauge achieving the reported margin.
    pub gauge: Vec<f64>,
    /// Best achievable value of (smallest gauged minor) / (largest
    /// minor magnitude).  Positive exactly when minors can be made
    /// jointly positive; how far above the threshold it lands is the
    /// certification margin.
    pub margin: f64,
    /// Largest minor magnitude, the scale reference for `margin`.
    pub max_abs_minor: f64,
    /// Worst minor under the reported gauge.
    pub worst: Option<MinorLocation>,
}

/// Joint positivity search for one or more unipotent matrices that
/// live in the same adapted basis.  With `search_signs` the search
/// ranges over all diagonal sign gauges of that basis; without it only
/// the standard basis (trivial gauge) is tested.
fn joint_positivity(
    mats: &[SqMatrix],
    pos_tol: f64,
    search_signs: bool,
) -> Result<TotalPositivityReport, PosFlagsError> {
    let d = mats[0].nrows();
    if d > MAX_TP_DIM {
        return Err(PosFlagsError::DimensionTooLargeForMinors(d));
    }
    let scans = mats
        .iter()
        .map(scan_minors)
        .collect::<Vec<_>>();
    let max_abs = scans
        .iter()
        .flatten()
        .map(|r| r.value.abs())
        .fold(0.0_f64, f64::max)
        .max(1e-300);
    let gauges = if search_signs {
        sign_gauges(d)
    } else {
        vec![vec![1.0; d]]
    };
    let mut best_margin = f64::NEG_INFINITY;
    let mut best_gauge = vec![1.0; d];
    let mut best_worst: Option<MinorLocation> = None;
    for gauge in gauges {
        let mut worst_val = f64::INFINITY;
        let mut worst_loc: Option<MinorLocation> = None;
        for scan in &scans {
            for rec in scan {
                let v = rec.value * gauge_sign(&gauge, &rec.rows, &rec.cols) / max_abs;
                if v < worst_val {
                    worst_val = v;
                    worst_loc = Some(MinorLocation {
                        rows: rec.rows.clone(),
                        cols: rec.cols.clone(),
                        scaled_value: v,
                    });
                }
            }
        }
        if worst_val > best_margin {
            best_margin = worst_val;
            best_gauge = gauge;
            best_worst = worst_loc;
        }
    }
    Ok(TotalPositivityReport {
        is_positive: best_margin > pos_tol,
        gauge: best_gauge,
        margin: best_margin,
        max_abs_minor: max_abs,
        worst: best_worst,
    })
}

/// Tests whether a triangular unipotent matrix is totally positive in
/// the standard basis: every structurally nonzero minor must exceed
/// `pos_tol` times the largest minor magnitude.
///
/// Lower-triangular input is transposed first (total positivity is
/// transpose-invariant); the supported dimension is capped at
/// [`MAX_TP_DIM`] because the scan enumerates all minors.
pub fn is_totally_positive_unipotent(
    u: &SqMatrix,
    pos_tol: f64,
) -> Result<TotalPositivityReport, PosFlagsError> {
    totally_positive_report(u, pos_tol, false)
}

/// Like [`is_totally_positive_unipotent`], but searches the 2^{d−1}
/// diagonal sign changes of the basis for one that makes the matrix
/// totally positive, reporting the witness gauge.  A basis vector may
/// be rescaled by any nonzero amount without affecting minor signs, so
/// only the sign orbit matters.
pub fn is_totally_positive_unipotent_signed(
    u: &SqMatrix,
    pos_tol: f64,
) -> Result<TotalPositivityReport, PosFlagsError> {
    totally_positive_report(u, pos_tol, true)
}

fn totally_positive_report(
    u: &SqMatrix,
    pos_tol: f64,
    search_signs: bool,
) -> Result<TotalPositivityReport, PosFlagsError> {
    let d = matnum::check_square(u)?;
    if d > MAX_TP_DIM {
        return Err(PosFlagsError::DimensionTooLargeForMinors(d));
    }
    let canon = canonical_upper_unipotent(u)?;
    joint_positivity(std::slice::from_ref(&canon), pos_tol, search_signs)
}

/// Line spanned by the intersection `f₁^{(i)} ∩ f₂^{(d−i+1)}` for
/// i = 1..d, assembled into the adapted basis matrix for the pair.
fn adapted_basis(f1: &Flag, f2: &Flag) -> Result<SqMatrix, PosFlagsError> {
    let d = f1.dim();
    if f2.dim() != d {
        return Err(PosFlagsError::AmbientMismatch {
            expected: d,
            got: f2.dim(),
        });
    }
    let mut p = SqMatrix::zeros(d, d);
    for i in 1..=d {
        // Constrain to both subspaces via their orthogonal complements.
        // The d−1 constraint rows are padded with a zero row so the
        // SVD is square and returns the full right factor, whose last
        // row spans the kernel.
        let a_perp = f1.mat.columns(i, d - i);
        let b_perp = f2.mat.columns(d - i + 1, i - 1);
        let mut cons = DMatrix::zeros(d, d);
        cons.view_mut((0, 0), (d - i, d))
            .copy_from(&a_perp.transpose());
        cons.view_mut((d - i, 0), (i - 1, d))
            .copy_from(&b_perp.transpose());
        let svd = cons.svd(false, true);
        let vt = svd.v_t.expect("svd of constraints");
        let sv = &svd.singular_values;
        // Transversality means the d−1 true constraints are
        // independent: the second-smallest singular value (the
        // smallest one belongs to the padding) must not collapse.
        if d >= 2 {
            let smallest_true = sv[d - 2];
            let largest = sv[0];
            if smallest_true < 1e-10 * largest.max(1.0) {
                return Err(PosFlagsError::NotTransverse(format!(
                    "piece {i}: constraint rank deficient (σ ratio {:.3e})",
                    smallest_true / largest.max(1e-300)
                )));
            }
        }
        let mut b = vt.row(d - 1).transpose();
        // Deterministic ray: make the largest component positive.
        let mut amax = 0.0_f64;
        let mut lead = 0;
        for (r, &x) in b.iter().enumerate() {
            if x.abs() > amax {
                amax = x.abs();
                lead = r;
            }
        }
        if b[lead] < 0.0 {
            b.neg_mut();
        }
        p.set_column(i - 1, &b);
    }
    // The basis must be well conditioned for transporters to mean
    // anything; a nearly dependent basis signals poor transversality.
    let sv = p.clone().svd(false, false).singular_values;
    let (smin, smax) = (sv[sv.len() - 1], sv[0]);
    if smin < 1e-10 * smax {
        return Err(PosFlagsError::NotTransverse(format!(
            "adapted basis condition {:.3e}",
            smax / smin.max(1e-300)
        )));
    }
    Ok(p)
}

/// Unpivoted LU: returns the unit-lower-triangular factor of `m`,
/// failing when a leading principal minor degenerates (which signals a
/// non-transverse flag).
fn unit_lower_factor(m: &SqMatrix) -> Result<SqMatrix, PosFlagsError> {
    let d = m.nrows();
    let scale = m.norm().max(1e-300);
    let mut u = m.clone();
    let mut l = SqMatrix::identity(d, d);
    for k in 0..d {
        let pivot = u[(k, k)];
        if pivot.abs() < 1e-12 * scale {
            return Err(PosFlagsError::NotTransverse(format!(
                "degenerate pivot at step {k}"
            )));
        }
        for i in (k + 1)..d {
            let f = u[(i, k)] / pivot;
            l[(i, k)] = f;
            for j in k..d {
                u[(i, j)] -= f * u[(k, j)];
            }
        }
    }
    Ok(l)
}

/// Unipotent transporter of `target` in the basis adapted to the pair
/// (`reference`, `opposite`): the unique lower-triangular unipotent
/// matrix (in adapted coordinates) moving the reference flag to the
/// target while preserving the opposite flag.
pub fn unipotent_flag_transporter(
    reference: &Flag,
    opposite: &Flag,
    target: &Flag,
) -> Result<SqMatrix, PosFlagsError> {
    let p = adapted_basis(reference, opposite)?;
    transporter_in_basis(&p, target)
}

fn transporter_in_basis(p: &SqMatrix, target: &Flag) -> Result<SqMatrix, PosFlagsError> {
    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or_else(|| PosFlagsError::NotTransverse("adapted basis singular".into()))?;
    let coords = &p_inv * target.matrix();
    unit_lower_factor(&coords)
}

/// Result of a flag-tuple positivity test.
#[derive(Debug, Clone)]
pub struct PositiveTupleReport {
    /// Whether the tuple is positive: one sign gauge makes every
    /// scanned minor of every consecutive transporter ratio positive.
    pub is_positive: bool,
    /// Joint positivity margin (see [`TotalPositivityReport::margin`]).
    pub margin: f64,
    /// Gauge achieving the margin.
    pub gauge: Vec<f64>,
    /// Consecutive transporter ratios in the adapted basis, available
    /// for inspection.
    pub ratios: Vec<SqMatrix>,
}

/// Tests positivity of an ordered tuple of pairwise-transverse flags
/// `(F₁, …, F_n)`, n ≥ 3.
///
/// In the basis adapted to the pinning pair (F₁, F_n), every
/// intermediate flag is written as a lower unipotent transporter
/// applied to F₁; the tuple is positive when all consecutive ratios
/// `w_i⁻¹ w_{i+1}` (with w₀ = identity) are simultaneously totally
/// positive under a single sign gauge of the adapted basis.
pub fn is_positive_tuple(
    flags: &[Flag],
    pos_tol: f64,
) -> Result<PositiveTupleReport, PosFlagsError> {
    if flags.len() < 3 {
        return Err(PosFlagsError::TooFewFlags(flags.len()));
    }
    let d = flags[0].dim();
    for f in flags {
        if f.dim() != d {
            return Err(PosFlagsError::AmbientMismatch {
                expected: d,
                got: f.dim(),
            });
        }
    }
    if d > MAX_TP_DIM {
        return Err(PosFlagsError::DimensionTooLargeForMinors(d));
    }
    // Consecutive and extreme pairs must be transverse in every
    // complementary dimension; a repeated or near-repeated flag is a
    // degenerate configuration, not a negative verdict.
    for i in 0..flags.len() {
        let j = (i + 1) % flags.len();
        let margin = flag_transversality(&flags[i], &flags[j])?;
        if margin <= 1e-8 {
            return Err(PosFlagsError::NotTransverse(format!(
                "flags {i} and {j} are not transverse (margin {margin:.3e})"
            )));
        }
        if j == 0 {
            break;
        }
    }
    let first = &flags[0];
    let last = &flags[flags.len() - 1];
    let p = adapted_basis(first, last)?;
    let mut transporters = vec![SqMatrix::identity(d, d)];
    for f in &flags[1..flags.len() - 1] {
        transporters.push(transporter_in_basis(&p, f)?);
    }
    let mut ratios = Vec::with_capacity(transporters.len() - 1);
    for i in 0..transporters.len() - 1 {
        let inv = transporters[i]
            .clone()
            .try_inverse()
            .ok_or_else(|| PosFlagsError::NotTransverse("transporter singular".into()))?;
        let ratio = &inv * &transporters[i + 1];
        ratios.push(canonical_upper_unipotent(&ratio)?);
    }
    let report = joint_positivity(&ratios, pos_tol, true)?;
    Ok(PositiveTupleReport {
        is_positive: report.is_positive,
        margin: report.margin,
        gauge: report.gauge,
        ratios,
    })
}

/// Membership of `f` in the open set of flags lying in positive
/// position between `f1` and `f2` relative to `f3`: the quadruple
/// `(f1, f, f2, f3)` must be positive.  The triple `(f1, f2, f3)` is
/// required to be positive already; a non-positive triple is reported
/// as a degenerate configuration.
pub fn in_positive_position(
    f: &Flag,
    f1: &Flag,
    f2: &Flag,
    f3: &Flag,
    pos_tol: f64,
) -> Result<PositiveTupleReport, PosFlagsError> {
    let triple = is_positive_tuple(&[f1.clone(), f2.clone(), f3.clone()], pos_tol)?;
    if !triple.is_positive {
        return Err(PosFlagsError::NotTransverse(
            "reference triple is not positive".into(),
        ));
    }
    is_positive_tuple(&[f1.clone(), f.clone(), f2.clone(), f3.clone()], pos_tol)
}
