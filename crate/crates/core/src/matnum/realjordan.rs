//! Real Jordan normal form and multiplicative Jordan–Chevalley
//! decomposition for moderate-dimension real matrices.
//!
//! The algorithm proceeds in four stages:
//!
//! 1. cluster the complex eigenvalues ([`super::cluster_eigenvalues`]),
//!    so each cluster is either real or a conjugate pair;
//! 2. for each cluster, compute an orthonormal basis of its generalized
//!    eigenspace as the range of a polynomial filter (the product of the
//!    other clusters' linear/quadratic factors), with an explicit
//!    singular value gap check;
//! 3. restrict, refine the eigenvalue as the trace mean, split off the
//!    scalar (or complex scalar) part, take the nilpotent logarithm and
//!    extract Jordan chains from kernel ladders of its powers;
//! 4. rescale each chain so the block becomes exactly `λ·P_s` (real) or
//!    `P_s ⊗ r·R(θ)` (pair), where `P_s` is the unipotent upper Pascal
//!    matrix [`pascal_unipotent`] and `R(θ)` the rotation [`rotation2`].
//!
//! The Pascal normalization means every block is a polynomial in a
//! *fixed* nilpotent (the weighted superdiagonal `k ↦ k·e_k e_{k+1}ᵀ`),
//! which is the form expected by the representation-building code: the
//! block diagonal of a form produced here is literally a value of the
//! irreducible `SL(2,ℝ)` representation on each block.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use super::{
    binomial, check_square, cluster_eigenvalues, kron, EigenCluster,
    MatNumError, SqMatrix, MAX_DIM, RANK_CUTOFF,
};

/// Unipotent upper triangular Pascal matrix of size `s`: entry `(k, j)`
/// is `C(j, k)` (0-based), i.e. binomial coefficients along the rows.
///
/// `P_s = exp(N_s)` for the weighted superdiagonal `N_s` with entries
/// `N[k, k+1] = k + 1` (0-based), so a Jordan chain rescaled by
/// factorials turns `exp` of a single Jordan block into exactly `P_s`.
pub fn pascal_unipotent(s: usize) -> SqMatrix {
    let mut m = SqMatrix::identity(s, s);
    for k in 0..s {
        for j in (k + 1)..s {
            m[(k, j)] = binomial(j, k);
        }
    }
    m
}

/// Rotation through `theta` acting on (Re, Im) coordinate pairs:
/// `[[cos θ, sin θ], [−sin θ, cos θ]]`.
///
/// With this sign convention, multiplying a complex eigenvector
/// `v = v_re + i·v_im` by `e^{iθ}` acts on the realified pair
/// `(v_re, v_im)` as `rotation2(theta)` does on coordinates.
pub fn rotation2(theta: f64) -> SqMatrix {
    let (s, c) = theta.sin_cos();
    SqMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}

/// Spectral label of a real Jordan block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockEig {
    /// Real eigenvalue λ.
    Real(f64),
    /// Conjugate pair `r·e^{±iθ}` with `r = modulus` and `θ ∈ (0, π)`.
    Pair { modulus: f64, theta: f64 },
}

impl BlockEig {
    /// Modulus of the eigenvalue(s).
    pub fn modulus(&self) -> f64 {
        match *self {
            BlockEig::Real(l) => l.abs(),
            BlockEig::Pair { modulus, .. } => modulus,
        }
    }

    /// The eigenvalue as a complex number (upper branch for a pair).
    pub fn complex(&self) -> Complex64 {
        match *self {
            BlockEig::Real(l) => Complex64::new(l, 0.0),
            BlockEig::Pair { modulus, theta } => Complex64::from_polar(modulus, theta),
        }
    }
}

/// One real Jordan block: a chain of length `size` over a real
/// eigenvalue (real dimension `size`) or over a conjugate pair (real
/// dimension `2·size`).
#[derive(Debug, Clone)]
pub struct RealJordanBlock {
    /// Jordan chain length `s`.
    pub size: usize,
    pub eig: BlockEig,
}

impl RealJordanBlock {
    /// Number of real basis columns this block occupies.
    pub fn real_dimension(&self) -> usize {
        match self.eig {
            BlockEig::Real(_) => self.size,
            BlockEig::Pair { .. } => 2 * self.size,
        }
    }

    /// The block itself: `λ·P_s` or `P_s ⊗ (r·R(θ))`.
    pub fn full_matrix(&self) -> SqMatrix {
        match self.eig {
            BlockEig::Real(l) => pascal_unipotent(self.size) * l,
            BlockEig::Pair { modulus, theta } => {
                kron(&pascal_unipotent(self.size), &(rotation2(theta) * modulus))
            }
        }
    }

    /// Semisimple factor of the block: `λ·I` or `I ⊗ (r·R(θ))`.
    pub fn semisimple_matrix(&self) -> SqMatrix {
        match self.eig {
            BlockEig::Real(l) => SqMatrix::identity(self.size, self.size) * l,
            BlockEig::Pair { modulus, theta } => kron(
                &SqMatrix::identity(self.size, self.size),
                &(rotation2(theta) * modulus),
            ),
        }
    }

    /// Unipotent factor of the block: `P_s` or `P_s ⊗ I₂`.
    pub fn unipotent_matrix(&self) -> SqMatrix {
        match self.eig {
            BlockEig::Real(_) => pascal_unipotent(self.size),
            BlockEig::Pair { .. } => {
                kron(&pascal_unipotent(self.size), &SqMatrix::identity(2, 2))
            }
        }
    }
}

/// Real Jordan form `g ≈ basis · J · basis⁻¹` with `J` block diagonal.
///
/// Blocks appear in eigenvalue cluster order (centers sorted by
/// `(Re, Im)`), longest chains first within a cluster.  For a pair
/// block the basis columns interleave real and imaginary parts of the
/// complex chain: `Re w₁, Im w₁, Re w₂, Im w₂, …`.
#[derive(Debug, Clone)]
pub struct RealJordanForm {
    pub dim: usize,
    pub basis: SqMatrix,
    pub basis_inv: SqMatrix,
    pub blocks: Vec<RealJordanBlock>,
    /// Relative invariance defect `‖g·basis − basis·J‖ / (‖g‖·‖basis‖)`.
    pub residual: f64,
}

impl RealJordanForm {
    fn assemble(&self, pick: fn(&RealJordanBlock) -> SqMatrix) -> SqMatrix {
        let mut j = SqMatrix::zeros(self.dim, self.dim);
        let mut off = 0;
        for b in &self.blocks {
            let m = pick(b);
            let r = m.nrows();
            j.view_mut((off, off), (r, r)).copy_from(&m);
            off += r;
        }
        j
    }

    /// The block diagonal matrix `J`.
    pub fn block_diagonal(&self) -> SqMatrix {
        self.assemble(RealJordanBlock::full_matrix)
    }

    /// `basis · J · basis⁻¹`, the reconstruction of the input.
    pub fn reconstruct(&self) -> SqMatrix {
        &self.basis * self.block_diagonal() * &self.basis_inv
    }

    /// Semisimple part `basis · J_ss · basis⁻¹` (diagonalizable over ℂ,
    /// commutes with the input up to the form's residual).
    pub fn semisimple_part(&self) -> SqMatrix {
        &self.basis * self.assemble(RealJordanBlock::semisimple_matrix) * &self.basis_inv
    }

    /// Unipotent part `basis · J_u · basis⁻¹` (all eigenvalues 1).
    pub fn unipotent_part(&self) -> SqMatrix {
        &self.basis * self.assemble(RealJordanBlock::unipotent_matrix) * &self.basis_inv
    }
}

/// Multiplicative Jordan–Chevalley decomposition `g = s·u` with `s`
/// semisimple, `u` unipotent and `s·u = u·s`.
#[derive(Debug, Clone)]
pub struct JordanChevalley {
    pub semisimple: SqMatrix,
    /// `u = s⁻¹·g`.
    pub unipotent: SqMatrix,
    pub form: RealJordanForm,
    /// `‖s·u − u·s‖ / ‖g‖`.
    pub commutation_residual: f64,
    /// `‖s·u − g‖ / ‖g‖`.
    pub factorization_residual: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

fn complexify(m: &SqMatrix) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Orthonormal basis of the `rank`-dimensional range of `f`, from the
/// top left singular vectors, with a singular value gap check.
fn range_basis<T>(
    f: &DMatrix<T>,
    rank: usize,
    center: Complex64,
) -> Result<DMatrix<T>, MatNumError>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = f.nrows();
    if rank == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let svd = f.clone().svd(true, false);
    let sv = &svd.singular_values;
    if rank > sv.len() {
        return Err(MatNumError::InconsistentClusters(format!(
            "cluster at {center} needs a rank-{rank} filter range in dimension {n}"
        )));
    }
    let s_r = sv[rank - 1];
    let s_next = if rank < sv.len() { sv[rank] } else { 0.0 };
    // The ratio must be small: the filter separates the generalized
    // eigenspace from its complement only if its numerical rank is
    // unambiguous.
    let ratio = if s_r > 0.0 { s_next / s_r } else { f64::INFINITY };
    if ratio > 1e-4 {
        return Err(MatNumError::IllConditionedSubspace { center, gap: ratio });
    }
    let u = svd.u.expect("u requested");
    let q = u.columns(0, rank).into_owned();
    // One power-refinement step.  The SVD can return left vectors that
    // are noticeably off when singular values nearly coincide, but
    // f·(fᴴ·q) lies in the range of f to machine precision for any q,
    // and q is already close enough that the product keeps full rank.
    let y = f * (f.adjoint() * &q);
    let refined = y.qr().q();
    if refined.ncols() == rank {
        Ok(refined)
    } else {
        Ok(q)
    }
}

/// Orthonormal basis of the column span of `m` (rank detected by SVD).
fn orthonormal_cols<T>(m: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, false);
    let sv = &svd.singular_values;
    let top = sv.max().max(1e-300);
    let rank = sv.iter().filter(|&&s| s > RANK_CUTOFF * top).count();
    svd.u.expect("u requested").columns(0, rank).into_owned()
}

/// Logarithm of a unipotent matrix via the (finite) Mercator series in
/// `E = u − I`; all terms of order ≥ dim vanish for nilpotent `E`.
fn nilpotent_log<T>(u: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let r = u.nrows();
    let e = u - DMatrix::<T>::identity(r, r);
    let mut out = DMatrix::<T>::zeros(r, r);
    let mut term = e.clone();
    for j in 1..r {
        let coef = if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64;
        out += &term * T::from_real(coef);
        if j + 1 < r {
            term = &term * &e;
        }
    }
    out
}

/// Jordan chains of a (numerically) nilpotent matrix.
///
/// Returns chains as vectors `v₁, …, v_s` with `n·v_{l+1} = v_l` and
/// `n·v₁ ≈ 0`, ordered by decreasing length.  Chain tops are chosen
/// orthogonal to the lower kernel ladder plus the descent of longer
/// chains, which keeps the resulting basis well conditioned.
fn nilpotent_chains<T>(n: &DMatrix<T>) -> Result<Vec<Vec<DVector<T>>>, MatNumError>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let r = n.nrows();
    if r == 0 {
        return Ok(Vec::new());
    }
    let scale = n.norm().max(1.0);

    // Kernel ladder of powers: ranks[j] = rank(n^j), kernels[j] an
    // orthonormal basis of ker(n^j).
    let mut power = DMatrix::<T>::identity(r, r);
    let mut ranks: Vec<usize> = vec![r];
    let mut kernels: Vec<DMatrix<T>> = vec![DMatrix::zeros(r, 0)];
    let mut index = None;
    for j in 1..=r {
        power = &power * n;
        let svd = power.clone().svd(false, true);
        let sv = &svd.singular_values;
        // Absolute floor: a fully vanished power must read as rank 0
        // even though its own σ₁ is pure roundoff noise.
        let floor = 1e-12 * scale.powi(j as i32);
        let cutoff = (RANK_CUTOFF * sv.max()).max(floor);
        let vt = svd.v_t.expect("v_t requested");
        let mut rank = 0;
        let mut kern: Vec<DVector<T>> = Vec::new();
        for i in 0..sv.len() {
            if sv[i] > cutoff {
                rank += 1;
            } else {
                kern.push(vt.row(i).adjoint());
            }
        }
        ranks.push(rank);
        kernels.push(if kern.is_empty() {
            DMatrix::zeros(r, 0)
        } else {
            DMatrix::from_columns(&kern)
        });
        if rank == 0 {
            index = Some(j);
            break;
        }
    }
    let m = index.ok_or_else(|| {
        MatNumError::InconsistentClusters(format!(
            "restriction of dimension {r} is not nilpotent within tolerance \
             (rank of the {r}-th power is {})",
            ranks[r]
        ))
    })?;

    struct ChainBuild<T: nalgebra::Scalar> {
        top: DVector<T>,
        size: usize,
        cursor: DVector<T>,
    }
    let mut chains: Vec<ChainBuild<T>> = Vec::new();

    for s in (1..=m).rev() {
        let beta_s = ranks[s - 1] - ranks[s];
        let beta_up = if s < m { ranks[s] - ranks[s + 1] } else { 0 };
        if beta_up > beta_s {
            return Err(MatNumError::InconsistentClusters(format!(
                "kernel ladder is not monotone at step {s} ({beta_up} > {beta_s})"
            )));
        }
        let new_count = beta_s - beta_up;
        if new_count > 0 {
            // Span to avoid: ker(n^{s−1}) plus height-s vectors of the
            // longer chains already built.
            let mut avoid: Vec<DVector<T>> = Vec::new();
            for c in kernels[s - 1].column_iter() {
                avoid.push(c.into_owned());
            }
            for ch in &chains {
                let nn = ch.cursor.norm();
                if nn > 0.0 {
                    avoid.push(&ch.cursor * T::from_real(1.0 / nn));
                }
            }
            let ks = &kernels[s];
            let mut cand = ks.clone();
            if !avoid.is_empty() {
                let w = orthonormal_cols(&DMatrix::from_columns(&avoid));
                cand -= &w * (w.adjoint() * ks);
            }
            let svd = cand.svd(true, false);
            let sv = &svd.singular_values;
            if (sv.len() < new_count) || sv[new_count - 1] < 1e-3 {
                return Err(MatNumError::InconsistentClusters(format!(
                    "degenerate chain candidates at height {s}"
                )));
            }
            let u = svd.u.expect("u requested");
            for i in 0..new_count {
                let mut top: DVector<T> = u.column(i).into_owned();
                // Deterministic phase: make the largest component real
                // and positive.
                let mut idx = 0;
                let mut best = 0.0;
                for (k, v) in top.iter().enumerate() {
                    let mv = v.modulus();
                    if mv > best {
                        best = mv;
                        idx = k;
                    }
                }
                if best > 0.0 {
                    let phase = top[idx] * T::from_real(1.0 / best);
                    top *= phase.conjugate();
                }
                chains.push(ChainBuild {
                    top: top.clone(),
                    size: s,
                    cursor: top,
                });
            }
        }
        if s > 1 {
            for ch in &mut chains {
                ch.cursor = n * &ch.cursor;
            }
        }
    }

    let total: usize = chains.iter().map(|c| c.size).sum();
    if total != r {
        return Err(MatNumError::InconsistentClusters(format!(
            "chain lengths sum to {total}, expected {r}"
        )));
    }

    // Recompute every chain by descending from its top, so that
    // n·v_{l+1} = v_l holds exactly as computed.
    let mut out: Vec<Vec<DVector<T>>> = Vec::with_capacity(chains.len());
    for ch in &chains {
        let mut vecs = vec![DVector::<T>::zeros(r); ch.size];
        vecs[ch.size - 1] = ch.top.clone();
        for l in (0..ch.size - 1).rev() {
            vecs[l] = n * &vecs[l + 1];
        }
        out.push(vecs);
    }
    // Already produced in decreasing size order (tops found at height m
    // first); keep a stable sort for safety.
    out.sort_by_key(|c| std::cmp::Reverse(c.len()));
    Ok(out)
}

/// Computes the real Jordan normal form of `g`.
///
/// `cluster_tol` is the eigenvalue clustering radius (see
/// [`super::cluster_eigenvalues`]).  With `snap_unit_modulus`, refined
/// eigenvalues whose modulus lies within 0.1 of 1 are projected onto
/// the unit circle (real → ±1, pair → e^{±iθ}); use this when the
/// input is known to have unit-modulus spectrum, e.g. for images of
/// parabolic elements.
pub fn real_jordan(
    g: &SqMatrix,
    cluster_tol: f64,
    snap_unit_modulus: bool,
) -> Result<RealJordanForm, MatNumError> {
    let d = check_square(g)?;
    if d > MAX_DIM {
        return Err(MatNumError::DimensionTooLarge(d));
    }
    if d == 0 {
        return Ok(RealJordanForm {
            dim: 0,
            basis: SqMatrix::zeros(0, 0),
            basis_inv: SqMatrix::zeros(0, 0),
            blocks: Vec::new(),
            residual: 0.0,
        });
    }

    let ev = g.complex_eigenvalues();
    let clusters = cluster_eigenvalues(ev.as_slice(), cluster_tol)?;
    let total: usize = clusters.iter().map(EigenCluster::real_dimension).sum();
    if total != d {
        return Err(MatNumError::InconsistentClusters(format!(
            "cluster dimensions sum to {total}, expected {d}"
        )));
    }

    let mut blocks: Vec<RealJordanBlock> = Vec::new();
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(d);

    for (ci, c) in clusters.iter().enumerate() {
        // Polynomial filter: product of the other clusters' factors,
        // each to its multiplicity.  Its range is the generalized
        // eigenspace of this cluster.
        let mut filt = SqMatrix::identity(d, d);
        for (cj, c2) in clusters.iter().enumerate() {
            if cj == ci {
                continue;
            }
            let fac = c2.factor(g);
            for _ in 0..c2.multiplicity {
                filt = &filt * &fac;
                let n = filt.norm();
                if n > 0.0 {
                    filt /= n;
                }
            }
        }
        let rc = c.real_dimension();
        let q = range_basis(&filt, rc, c.center)?;
        let m_c = q.transpose() * g * &q;

        if !c.is_pair {
            let lam_raw = m_c.trace() / rc as f64;
            // The stored eigenvalue may be snapped onto the unit circle,
            // but the nilpotent split always divides by the raw value:
            // dividing by a snapped one would leave a semisimple
            // remainder that breaks nilpotency.
            let lam = if snap_unit_modulus && (lam_raw.abs() - 1.0).abs() <= 0.1 {
                lam_raw.signum()
            } else {
                lam_raw
            };
            if lam_raw.abs() < 1e-300 {
                return Err(MatNumError::NumericallySingular(lam_raw.abs()));
            }
            let n_log = nilpotent_log(&(&m_c / lam_raw));
            for chain in nilpotent_chains(&n_log)? {
                let s = chain.len();
                let mut cols: Vec<DVector<f64>> = (0..s)
                    .map(|l| &q * &chain[l] * factorial(l))
                    .collect();
                let peak = cols
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0_f64, f64::max)
                    .max(1e-300);
                for v in &mut cols {
                    *v /= peak;
                }
                columns.extend(cols);
                blocks.push(RealJordanBlock {
                    size: s,
                    eig: BlockEig::Real(lam),
                });
            }
        } else {
            let mult = c.multiplicity;
            let mz = complexify(&m_c);
            let conj_center = c.center.conj();
            // Range of (m − μ̄)^mult is the upper-branch generalized
            // eigenspace E₊ inside the complexified restriction.
            let shift =
                &mz - DMatrix::<Complex64>::identity(rc, rc) * conj_center;
            let mut fz = DMatrix::<Complex64>::identity(rc, rc);
            for _ in 0..mult {
                fz = &fz * &shift;
                let n = fz.norm();
                if n > 0.0 {
                    fz *= Complex64::new(1.0 / n, 0.0);
                }
            }
            let p = range_basis(&fz, mult, c.center)?;
            let m_plus = p.adjoint() * &mz * &p;
            let mu_raw = m_plus.trace() / Complex64::new(mult as f64, 0.0);
            // As in the real branch: snap only the stored eigenvalue.
            let mu = if snap_unit_modulus && (mu_raw.norm() - 1.0).abs() <= 0.1 {
                Complex64::from_polar(1.0, mu_raw.arg())
            } else {
                mu_raw
            };
            if mu_raw.norm() < 1e-300 {
                return Err(MatNumError::NumericallySingular(mu_raw.norm()));
            }
            let n_log = nilpotent_log(&(&m_plus * mu_raw.inv()));
            let qz = complexify(&q.transpose()).transpose();
            for chain in nilpotent_chains(&n_log)? {
                let s = chain.len();
                // Ambient complex chain, factorial-rescaled, then
                // realified as interleaved (Re, Im) columns.
                let ambient: Vec<DVector<Complex64>> = (0..s)
                    .map(|l| {
                        &qz * (&p * &chain[l])
                            * Complex64::new(factorial(l), 0.0)
                    })
                    .collect();
                let mut cols: Vec<DVector<f64>> = Vec::with_capacity(2 * s);
                for w in &ambient {
                    cols.push(w.map(|z| z.re));
                    cols.push(w.map(|z| z.im));
                }
                let peak = cols
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0_f64, f64::max)
                    .max(1e-300);
                for v in &mut cols {
                    *v /= peak;
                }
                columns.extend(cols);
                blocks.push(RealJordanBlock {
                    size: s,
                    eig: BlockEig::Pair {
                        modulus: mu.norm(),
                        theta: mu.arg(),
                    },
                });
            }
        }
    }

    if columns.len() != d {
        return Err(MatNumError::InconsistentClusters(format!(
            "assembled {} basis columns, expected {d}",
            columns.len()
        )));
    }
    let basis = SqMatrix::from_columns(&columns);
    let basis_inv = basis.clone().try_inverse().ok_or_else(|| {
        MatNumError::InconsistentClusters("adapted basis is singular".into())
    })?;

    let mut form = RealJordanForm {
        dim: d,
        basis,
        basis_inv,
        blocks,
        residual: 0.0,
    };
    let j = form.block_diagonal();
    let defect = g * &form.basis - &form.basis * &j;
    form.residual =
        defect.norm() / (g.norm().max(1e-300) * form.basis.norm().max(1e-300));
    Ok(form)
}

/// Multiplicative Jordan–Chevalley decomposition `g = s·u`.
///
/// `s` is the semisimple part read off the real Jordan form and
/// `u = s⁻¹·g`, so the factorization holds to solver accuracy; the
/// commutation residual measures decomposition quality.
pub fn jordan_chevalley(
    g: &SqMatrix,
    cluster_tol: f64,
) -> Result<JordanChevalley, MatNumError> {
    let form = real_jordan(g, cluster_tol, false)?;
    let semisimple = form.semisimple_part();
    let unipotent = semisimple
        .clone()
        .lu()
        .solve(g)
        .ok_or(MatNumError::NumericallySingular(0.0))?;
    let gnorm = g.norm().max(1e-300);
    let commutation_residual =
        (&semisimple * &unipotent - &unipotent * &semisimple).norm() / gnorm;
    let factorization_residual = (&semisimple * &unipotent - g).norm() / gnorm;
    Ok(JordanChevalley {
        semisimple,
        unipotent,
        form,
        commutation_residual,
        factorization_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    /// Deterministic mildly conditioned conjugator.
    fn conjugator(d: usize) -> (SqMatrix, SqMatrix) {
        let mut t = SqMatrix::identity(d, d);
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    t[(i, j)] = 0.1 * (((i * 7 + j * 3 + 2) % 5) as f64 - 2.0);
                }
            }
        }
        let tinv = t.clone().try_inverse().unwrap();
        (t, tinv)
    }

    fn block_diag(blocks: &[SqMatrix]) -> SqMatrix {
        let d: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut m = SqMatrix::zeros(d, d);
        let mut off = 0;
        for b in blocks {
            m.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
            off += b.nrows();
        }
        m
    }

    #[test]
    fn pascal_matrix_matches_exponential_of_weighted_shift() {
        let p = pascal_unipotent(4);
        let expected = dmatrix![
            1.0, 1.0, 1.0, 1.0;
            0.0, 1.0, 2.0, 3.0;
            0.0, 0.0, 1.0, 3.0;
            0.0, 0.0, 0.0, 1.0
        ];
        assert_eq!(p, expected);

        // exp of the weighted superdiagonal N[k, k+1] = k + 1.
        let mut n = SqMatrix::zeros(4, 4);
        for k in 0..3 {
            n[(k, k + 1)] = (k + 1) as f64;
        }
        let mut exp = SqMatrix::identity(4, 4);
        let mut term = SqMatrix::identity(4, 4);
        for j in 1..4 {
            term = &term * &n / j as f64;
            exp += &term;
        }
        assert!((exp - p).norm() < 1e-14);
    }

    #[test]
    fn rotation_matches_complex_eigenstructure() {
        // A real matrix acting as multiplication by r·e^{iθ} on a
        // complex eigenvector w has, in the basis (Re w, Im w), exactly
        // the matrix r·rotation2(θ): g·Re w = Re(μw), g·Im w = Im(μw).
        let th: f64 = 0.83;
        let r = 1.9;
        let g = rotation2(th) * r;
        // The eigenvector of rotation2(θ) for e^{iθ} is w = (1, i), so
        // Re w = e₁ and Im w = e₂ — exactly the interleaved pair basis
        // used when realifying complex chains.
        let w0 = Complex64::new(1.0, 0.0);
        let w1 = Complex64::new(0.0, 1.0);
        let mu = Complex64::from_polar(r, th);
        // g (as complex-linear action on ℂ² entrywise) applied to w.
        let gw0 = Complex64::new(g[(0, 0)], 0.0) * w0 + Complex64::new(g[(0, 1)], 0.0) * w1;
        let gw1 = Complex64::new(g[(1, 0)], 0.0) * w0 + Complex64::new(g[(1, 1)], 0.0) * w1;
        assert!((gw0 - mu * w0).norm() < 1e-14);
        assert!((gw1 - mu * w1).norm() < 1e-14);
    }

    #[test]
    fn nilpotent_chains_recover_staircase() {
        // Two chains: e1 ← e2 ← e3 and e4 ← e5.
        let mut n = SqMatrix::zeros(5, 5);
        n[(0, 1)] = 1.0;
        n[(1, 2)] = 1.0;
        n[(3, 4)] = 1.0;
        let chains = nilpotent_chains(&n).unwrap();
        assert_eq!(chains.len(), 2);
        assert_eq!(chains[0].len(), 3);
        assert_eq!(chains[1].len(), 2);
        for chain in &chains {
            for l in 1..chain.len() {
                assert!((&n * &chain[l] - &chain[l - 1]).norm() < 1e-12);
            }
            assert!((&n * &chain[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn plain_block_round_trip() {
        let g = pascal_unipotent(3) * 2.0;
        let form = real_jordan(&g, 1e-6, false).unwrap();
        assert_eq!(form.blocks.len(), 1);
        assert_eq!(form.blocks[0].size, 3);
        match form.blocks[0].eig {
            BlockEig::Real(l) => assert!((l - 2.0).abs() < 1e-12),
            _ => panic!("expected real block"),
        }
        assert!(form.residual < 1e-12);
        assert!((form.reconstruct() - &g).norm() < 1e-10);
    }

    #[test]
    fn conjugated_mixed_real_blocks() {
        let inner = block_diag(&[
            pascal_unipotent(2) * 3.0,
            SqMatrix::identity(1, 1) * 0.5,
        ]);
        let (t, tinv) = conjugator(3);
        let g = &t * inner * &tinv;
        let form = real_jordan(&g, 1e-6, false).unwrap();
        let mut sizes: Vec<(usize, f64)> = form
            .blocks
            .iter()
            .map(|b| match b.eig {
                BlockEig::Real(l) => (b.size, l),
                _ => panic!("expected real blocks"),
            })
            .collect();
        sizes.sort_by_key(|s| s.0);
        assert_eq!(sizes.len(), 2);
        assert_eq!(sizes[0].0, 1);
        assert!((sizes[0].1 - 0.5).abs() < 1e-10);
        assert_eq!(sizes[1].0, 2);
        assert!((sizes[1].1 - 3.0).abs() < 1e-10);
        assert!((form.reconstruct() - &g).norm() / g.norm() < 1e-9);
    }

    #[test]
    fn conjugate_pair_with_chain() {
        let inner = kron(&pascal_unipotent(2), &(rotation2(0.7) * 1.3));
        let (t, tinv) = conjugator(4);
        let g = &t * inner * &tinv;
        let form = real_jordan(&g, 1e-6, false).unwrap();
        assert_eq!(form.blocks.len(), 1);
        let b = &form.blocks[0];
        assert_eq!(b.size, 2);
        match b.eig {
            BlockEig::Pair { modulus, theta } => {
                assert!((modulus - 1.3).abs() < 1e-9);
                assert!((theta - 0.7).abs() < 1e-9);
            }
            _ => panic!("expected pair block"),
        }
        assert!((form.reconstruct() - &g).norm() / g.norm() < 1e-8);
    }

    #[test]
    fn mixed_real_and_pair_clusters() {
        let inner = block_diag(&[
            SqMatrix::identity(1, 1) * 2.0,
            rotation2(std::f64::consts::FRAC_PI_3),
        ]);
        let (t, tinv) = conjugator(3);
        let g = &t * inner * &tinv;
        let form = real_jordan(&g, 1e-6, false).unwrap();
        assert_eq!(form.blocks.len(), 2);
        let reals: Vec<_> = form
            .blocks
            .iter()
            .filter(|b| matches!(b.eig, BlockEig::Real(_)))
            .collect();
        let pairs: Vec<_> = form
            .blocks
            .iter()
            .filter(|b| matches!(b.eig, BlockEig::Pair { .. }))
            .collect();
        assert_eq!(reals.len(), 1);
        assert_eq!(pairs.len(), 1);
        if let BlockEig::Pair { modulus, theta } = pairs[0].eig {
            assert!((modulus - 1.0).abs() < 1e-10);
            assert!((theta - std::f64::consts::FRAC_PI_3).abs() < 1e-10);
        }
        assert!((form.reconstruct() - &g).norm() / g.norm() < 1e-9);
    }

    #[test]
    fn jordan_chevalley_commutes_and_factors() {
        // diag-conjugate of blockdiag(P₂, −P₃): semisimple part has
        // eigenvalues (1, 1, −1, −1, −1).
        let inner = block_diag(&[pascal_unipotent(2), pascal_unipotent(3) * -1.0]);
        let (t, tinv) = conjugator(5);
        let g = &t * inner * &tinv;
        let jc = jordan_chevalley(&g, 1e-4).unwrap();
        assert!(jc.commutation_residual < 1e-9);
        assert!(jc.factorization_residual < 1e-12);
        // Semisimple part squares to the identity here.
        let d5 = SqMatrix::identity(5, 5);
        assert!((&jc.semisimple * &jc.semisimple - &d5).norm() < 1e-9);
        // Unipotent part has all eigenvalues 1.
        for ev in jc.unipotent.complex_eigenvalues().iter() {
            assert!((ev - Complex64::new(1.0, 0.0)).norm() < 1e-4);
        }
        // Lower-left entry pattern: s and u reconstruct g.
        assert!((&jc.semisimple * &jc.unipotent - &g).norm() / g.norm() < 1e-12);
    }

    #[test]
    fn semisimple_input_has_identity_unipotent_part() {
        let (t, tinv) = conjugator(2);
        let g = &t * block_diag(&[
            SqMatrix::identity(1, 1) * 4.0,
            SqMatrix::identity(1, 1) * 0.25,
        ]) * &tinv;
        let jc = jordan_chevalley(&g, 1e-4).unwrap();
        assert!((jc.unipotent - SqMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((jc.semisimple - &g).norm() < 1e-12);
    }

    #[test]
    fn snap_unit_modulus_rounds_to_circle() {
        let g = pascal_unipotent(2) * 1.000001;
        let snapped = real_jordan(&g, 1e-4, true).unwrap();
        match snapped.blocks[0].eig {
            BlockEig::Real(l) => assert_eq!(l, 1.0),
            _ => panic!("expected real block"),
        }
        let free = real_jordan(&g, 1e-4, false).unwrap();
        match free.blocks[0].eig {
            BlockEig::Real(l) => assert!((l - 1.000001).abs() < 1e-9),
            _ => panic!("expected real block"),
        }
    }

    #[test]
    fn close_clusters_are_rejected() {
        let g = block_diag(&[
            SqMatrix::identity(1, 1),
            SqMatrix::identity(1, 1) * (1.0 + 5e-8),
        ]);
        assert!(matches!(
            real_jordan(&g, 1e-8, false),
            Err(MatNumError::UnresolvableClustering { .. })
        ));
    }

    #[test]
    fn block_matrices_multiply_to_full() {
        let b = RealJordanBlock {
            size: 3,
            eig: BlockEig::Pair {
                modulus: 1.2,
                theta: 0.4,
            },
        };
        let prod = b.semisimple_matrix() * b.unipotent_matrix();
        assert!((prod - b.full_matrix()).norm() < 1e-14);
        assert_eq!(b.real_dimension(), 6);
    }
}
