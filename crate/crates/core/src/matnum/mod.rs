//! Dense numerical analysis of square real matrices of moderate dimension.
//!
//! Everything here works on `nalgebra::DMatrix<f64>` with dimension at most
//! [`MAX_DIM`].  The module provides singular value and eigenvalue data,
//! attracting subspaces (both the plain top-k left singular space of a
//! single matrix and the dominant invariant flag of a proximal matrix),
//! Kronecker and exterior powers, Jordan–Chevalley decomposition over ℝ,
//! weak unipotency and proximality tests, and conjugacy invariants built
//! from eigenvalue clusters and rank sequences.
//!
//! Numerical conventions used throughout:
//! * rank decisions threshold singular values at `1e-8 · σ₁`;
//! * eigenvalues are clustered in ℂ by absolute distance, and cluster
//!   centers must be separated by 10× the clustering tolerance;
//! * matrix powers rescale by exact powers of two, so the rescaling
//!   itself introduces no rounding error.

pub mod realjordan;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub use realjordan::{
    jordan_chevalley, pascal_unipotent, real_jordan, rotation2, BlockEig,
    JordanChevalley, RealJordanBlock, RealJordanForm,
};

/// Exact binomial coefficient as `f64`.
///
/// Every intermediate product in the multiplicative evaluation is an
/// integer below 2⁵³ for n ≤ 34, so the result is exact throughout the
/// dimension range supported by this crate.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut out = 1.0_f64;
    for i in 0..k {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 16;

/// Relative singular value cutoff for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-8;

pub type SqMatrix = DMatrix<f64>;

#[derive(Debug, Error)]
pub enum MatNumError {
    #[error("matrix is {0}×{1}, not square")]
    NotSquare(usize, usize),
    #[error("dimension {0} exceeds the supported maximum {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("index k = {k} is out of range 1..{max}")]
    IndexOutOfRange { k: usize, max: usize },
    #[error("singular value gap σ_{k}/σ_{next} = {gap} does not exceed 1 + {tol}; subspace undefined", next = k + 1)]
    UndefinedSubspace { k: usize, gap: f64, tol: f64 },
    #[error("matrix is numerically singular (σ_min/σ_max = {0:.3e})")]
    NumericallySingular(f64),
    #[error("eigenvalue clusters at {a} and {b} are separated by {dist:.3e} < 10·tol = {required:.3e}")]
    UnresolvableClustering {
        a: Complex64,
        b: Complex64,
        dist: f64,
        required: f64,
    },
    #[error("invariant subspace for cluster at {center} is ill conditioned (singular value gap {gap:.3e})")]
    IllConditionedSubspace { center: Complex64, gap: f64 },
    #[error("eigenvalue cluster structure is inconsistent: {0}")]
    InconsistentClusters(String),
    #[error("dominant {k}-dimensional subspace did not converge (residual {residual:.3e}); the matrix may not be proximal at k = {k}")]
    SubspaceNotConverged { k: usize, residual: f64 },
    #[error("expected result magnitude 1e{0:.0} exceeds double precision range; reduce the power range")]
    ReduceRange(f64),
    #[error("subspace dimensions {0} and {1} do not match")]
    SubspaceDimensionMismatch(usize, usize),
}

pub(crate) fn check_square(g: &SqMatrix) -> Result<usize, MatNumError> {
    if g.nrows() != g.ncols() {
        return Err(MatNumError::NotSquare(g.nrows(), g.ncols()));
    }
    if g.nrows() > MAX_DIM {
        return Err(MatNumError::DimensionTooLarge(g.nrows()));
    }
    Ok(g.nrows())
}

/// Singular values (descending), eigenvalues (sorted by descending
/// modulus) and the left singular basis of a matrix.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Singular values σ₁ ≥ … ≥ σ_d.
    pub sigma: Vec<f64>,
    /// Eigenvalues sorted by descending modulus, ties by (re, im).
    pub eigenvalues: Vec<Complex64>,
    /// Left singular vectors, columns matching `sigma`.
    pub left_singular: SqMatrix,
}

impl SpectralData {
    /// Moduli of the eigenvalues, descending.
    pub fn lambda_moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.norm()).collect()
    }
}

/// Sorts eigenvalues by descending modulus, breaking ties by real part
/// then imaginary part, for deterministic reporting.
pub fn sort_eigenvalues(mut ev: Vec<Complex64>) -> Vec<Complex64> {
    ev.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then_with(|| a.re.total_cmp(&b.re))
            .then_with(|| a.im.total_cmp(&b.im))
    });
    ev
}

/// Computes the singular value decomposition and eigenvalues of `g`.
pub fn spectral(g: &SqMatrix) -> Result<SpectralData, MatNumError> {
    let d = check_square(g)?;
    let svd = g.clone().svd(true, false);
    let mut order: Vec<usize> = (0..d).collect();
    let sv = &svd.singular_values;
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let u_raw = svd.u.as_ref().expect("left singular vectors requested");
    let mut u = SqMatrix::zeros(d, d);
    let mut sigma = Vec::with_capacity(d);
    for (col, &i) in order.iter().enumerate() {
        sigma.push(sv[i]);
        u.set_column(col, &u_raw.column(i));
    }
    let eigenvalues = sort_eigenvalues(g.complex_eigenvalues().as_slice().to_vec());
    Ok(SpectralData {
        sigma,
        eigenvalues,
        left_singular: u,
    })
}

/// Top-k left singular subspace U_k(g), orthonormal d×k.  Requires the
/// relative gap σ_k/σ_{k+1} > 1 + gap_tol, otherwise the subspace is not
/// well defined and an error is returned.
pub fn uk_subspace(g: &SqMatrix, k: usize, gap_tol: f64) -> Result<SqMatrix, MatNumError> {
    let d = check_square(g)?;
    if k == 0 || k >= d {
        return Err(MatNumError::IndexOutOfRange { k, max: d });
    }
    let data = spectral(g)?;
    let gap = data.sigma[k - 1] / data.sigma[k];
    if gap.is_nan() || gap <= 1.0 + gap_tol {
        return Err(MatNumError::UndefinedSubspace {
            k,
            gap,
            tol: gap_tol,
        });
    }
    Ok(data.left_singular.columns(0, k).into_owned())
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &SqMatrix, b: &SqMatrix) -> SqMatrix {
    a.kronecker(b)
}

/// All k-element subsets of {0, …, d−1} in lexicographic order; the basis
/// ordering of the k-th exterior power.
pub fn lex_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k == 0 || k > d {
        return out;
    }
    loop {
        out.push(cur.clone());
        // Advance to the next subset.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + d - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// k-th compound (exterior power) matrix: entries are the k×k minors of
/// `g`, rows and columns indexed by lexicographically ordered subsets.
pub fn compound(g: &SqMatrix, k: usize) -> Result<SqMatrix, MatNumError> {
    let d = check_square(g)?;
    if k == 0 || k > d {
        return Err(MatNumError::IndexOutOfRange { k, max: d });
    }
    let subsets = lex_subsets(d, k);
    let n = subsets.len();
    let mut out = SqMatrix::zeros(n, n);
    let mut minor = SqMatrix::zeros(k, k);
    for (r, rows) in subsets.iter().enumerate() {
        for (c, cols) in subsets.iter().enumerate() {
            for (i, &ri) in rows.iter().enumerate() {
                for (j, &cj) in cols.iter().enumerate() {
                    minor[(i, j)] = g[(ri, cj)];
                }
            }
            out[(r, c)] = minor.clone().lu().determinant();
        }
    }
    Ok(out)
}

/// Proximality data: the consecutive eigenvalue modulus ratios.
#[derive(Debug, Clone)]
pub struct ProximalityReport {
    /// λ_k/λ_{k+1} for k = 1..d−1 (moduli, descending order).
    pub gaps: Vec<f64>,
    /// Whether the requested gap exceeds 1 + tol.
    pub pk_proximal: bool,
    /// Whether every gap exceeds 1 + tol.
    pub loxodromic: bool,
}

/// Tests whether λ_k(g)/λ_{k+1}(g) > 1 + tol (moduli of eigenvalues).
pub fn is_pk_proximal(g: &SqMatrix, k: usize, tol: f64) -> Result<ProximalityReport, MatNumError> {
    let d = check_square(g)?;
    if k == 0 || k >= d {
        return Err(MatNumError::IndexOutOfRange { k, max: d });
    }
    let moduli = spectral(g)?.lambda_moduli();
    let gaps: Vec<f64> = (0..d - 1).map(|i| moduli[i] / moduli[i + 1]).collect();
    Ok(ProximalityReport {
        pk_proximal: gaps[k - 1] > 1.0 + tol,
        loxodromic: gaps.iter().all(|&r| r > 1.0 + tol),
        gaps,
    })
}

/// Rank of a matrix with the relative cutoff `RANK_CUTOFF · σ₁`.
pub fn rank(g: &DMatrix<f64>) -> usize {
    rank_with_floor(g, 0.0)
}

/// Numerical rank with singular values thresholded at
/// `max(RANK_CUTOFF·σ₁, floor)`.  The absolute floor matters for
/// matrices that are products: once a product vanishes up to roundoff,
/// a purely relative threshold would read the noise as full rank.
fn rank_with_floor(g: &DMatrix<f64>, floor: f64) -> usize {
    let sv = g.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0_f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    let cutoff = (RANK_CUTOFF * top).max(floor);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Why a matrix failed (or passed) the weak unipotency test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeakUnipotencyVerdict {
    /// All eigenvalue moduli ≈ 1 and the unipotent part is nontrivial.
    WeaklyUnipotent,
    /// Some eigenvalue modulus is bounded away from 1.
    NotUnitModulus,
    /// Semisimple with unit moduli: elliptic or the identity.
    Semisimple,
}

#[derive(Debug, Clone)]
pub struct WeakUnipotencyReport {
    pub verdict: WeakUnipotencyVerdict,
    /// Eigenvalue moduli, descending.
    pub moduli: Vec<f64>,
    /// Relative norm of the minimal-polynomial-candidate product
    /// Π_c q_c(g); ≈ 0 exactly when g is semisimple.
    pub semisimple_residual: f64,
}

impl WeakUnipotencyReport {
    pub fn is_weakly_unipotent(&self) -> bool {
        self.verdict == WeakUnipotencyVerdict::WeaklyUnipotent
    }
}

/// Tests whether every eigenvalue modulus lies in [1−tol, 1+tol] and the
/// unipotent part is nontrivial.  Semisimplicity is decided by evaluating
/// the product of one linear/quadratic factor per eigenvalue cluster: the
/// product annihilates g exactly when g is semisimple.
pub fn is_weakly_unipotent(g: &SqMatrix, tol: f64) -> Result<WeakUnipotencyReport, MatNumError> {
    check_square(g)?;
    let spec = spectral(g)?;
    let moduli = spec.lambda_moduli();
    if moduli.iter().any(|&m| (m - 1.0).abs() > tol) {
        return Ok(WeakUnipotencyReport {
            verdict: WeakUnipotencyVerdict::NotUnitModulus,
            moduli,
            semisimple_residual: f64::NAN,
        });
    }
    let clusters = cluster_eigenvalues(&spec.eigenvalues, tol.max(1e-12))?;
    let semisimple_residual = semisimple_residual(g, &clusters);
    let verdict = if semisimple_residual <= RANK_CUTOFF {
        WeakUnipotencyVerdict::Semisimple
    } else {
        WeakUnipotencyVerdict::WeaklyUnipotent
    };
    Ok(WeakUnipotencyReport {
        verdict,
        moduli,
        semisimple_residual,
    })
}

/// An eigenvalue cluster: a real center or a conjugate pair center with
/// its complex multiplicity.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    /// Center with Im ≥ 0; a cluster with Im > 0 stands for the
    /// conjugate pair.
    pub center: Complex64,
    /// Number of eigenvalues at the center counted over ℂ (for a pair,
    /// the count on the upper branch alone).
    pub multiplicity: usize,
    pub is_pair: bool,
}

impl EigenCluster {
    /// Real dimension of the generalized eigenspace.
    pub fn real_dimension(&self) -> usize {
        if self.is_pair {
            2 * self.multiplicity
        } else {
            self.multiplicity
        }
    }

    /// The real polynomial factor vanishing on the cluster: (x − λ) or
    /// (x² − 2·Re μ·x + |μ|²), applied to a matrix.
    pub fn factor(&self, g: &SqMatrix) -> SqMatrix {
        let d = g.nrows();
        let id = SqMatrix::identity(d, d);
        if self.is_pair {
            g * g - g * (2.0 * self.center.re) + id * self.center.norm_sqr()
        } else {
            g - id * self.center.re
        }
    }
}

/// Clusters eigenvalues in ℂ with linking radius `tol`.  Conjugate pairs
/// are folded onto the closed upper half plane first, so a cluster is
/// either real (center on ℝ) or a conjugate pair.  Cluster centers must
/// be separated by more than 10·tol.
pub fn cluster_eigenvalues(
    eigenvalues: &[Complex64],
    tol: f64,
) -> Result<Vec<EigenCluster>, MatNumError> {
    // Fold onto Im ≥ 0 and sort for deterministic single-linkage.
    let mut folded: Vec<Complex64> = eigenvalues
        .iter()
        .map(|z| Complex64::new(z.re, z.im.abs()))
        .collect();
    folded.sort_by(|a, b| a.re.total_cmp(&b.re).then_with(|| a.im.total_cmp(&b.im)));

    // Single linkage, breadth first.
    let n = folded.len();
    let mut assigned = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if assigned[i] != usize::MAX {
            continue;
        }
        let gi = groups.len();
        let mut stack = vec![i];
        assigned[i] = gi;
        let mut members = vec![i];
        while let Some(j) = stack.pop() {
            for l in 0..n {
                if assigned[l] == usize::MAX && (folded[j] - folded[l]).norm() <= tol {
                    assigned[l] = gi;
                    stack.push(l);
                    members.push(l);
                }
            }
        }
        groups.push(members);
    }

    let mut clusters: Vec<EigenCluster> = Vec::new();
    for members in &groups {
        let mean: Complex64 =
            members.iter().map(|&i| folded[i]).sum::<Complex64>() / members.len() as f64;
        // A cluster is a conjugate pair when its center sits off the
        // real axis by more than the linking radius.
        let is_pair = mean.im > tol;
        let center = if is_pair {
            mean
        } else {
            Complex64::new(mean.re, 0.0)
        };
        // Folding maps both branches of a conjugate pair onto the same
        // upper half plane point, so a pair group holds 2m eigenvalues.
        let multiplicity = if is_pair {
            if members.len() % 2 != 0 {
                return Err(MatNumError::InconsistentClusters(format!(
                    "conjugate pair cluster at {center} holds an odd number \
                     of eigenvalues ({})",
                    members.len()
                )));
            }
            members.len() / 2
        } else {
            members.len()
        };
        clusters.push(EigenCluster {
            center,
            multiplicity,
            is_pair,
        });
    }

    // Separation check between distinct centers (and between a pair
    // center and its own conjugate, which merge when θ → 0 or π).
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let dist = (clusters[i].center - clusters[j].center).norm();
            if dist <= 10.0 * tol {
                return Err(MatNumError::UnresolvableClustering {
                    a: clusters[i].center,
                    b: clusters[j].center,
                    dist,
                    required: 10.0 * tol,
                });
            }
        }
    }
    clusters.sort_by(|a, b| {
        a.center
            .re
            .total_cmp(&b.center.re)
            .then_with(|| a.center.im.total_cmp(&b.center.im))
    });
    Ok(clusters)
}

/// Relative norm of Π_c q_c(g), where q_c is the linear or quadratic
/// factor of cluster c taken once.  The product vanishes exactly when g
/// is semisimple (its minimal polynomial is squarefree).
fn semisimple_residual(g: &SqMatrix, clusters: &[EigenCluster]) -> f64 {
    let d = g.nrows();
    let mut prod = SqMatrix::identity(d, d);
    let mut scale = 1.0_f64;
    for c in clusters {
        let f = c.factor(g);
        scale *= f.norm().max(1e-300);
        prod = &prod * &f;
    }
    if scale == 0.0 {
        return 0.0;
    }
    prod.norm() / scale
}

/// Conjugacy invariants: clustered eigenvalues plus, per cluster, the
/// rank sequence of powers of the cluster factor.  Two matrices with
/// matching invariants have the same real Jordan type within tolerance.
#[derive(Debug, Clone)]
pub struct ConjugacyInvariants {
    pub clusters: Vec<ClusterInvariant>,
}

#[derive(Debug, Clone)]
pub struct ClusterInvariant {
    pub center: Complex64,
    pub multiplicity: usize,
    pub is_pair: bool,
    /// rank(q_c(g)^m) for m = 1, 2, … until the value stabilises.
    pub rank_sequence: Vec<usize>,
}

/// Computes conjugacy invariants with eigenvalue clustering tolerance
/// `tol`.
pub fn conjugacy_invariants(g: &SqMatrix, tol: f64) -> Result<ConjugacyInvariants, MatNumError> {
    check_square(g)?;
    let spec = spectral(g)?;
    let clusters = cluster_eigenvalues(&spec.eigenvalues, tol)?;
    let mut out = Vec::new();
    for c in &clusters {
        let f = c.factor(g);
        let fnorm = f.norm().max(1e-300);
        let mut rank_sequence = Vec::new();
        let mut power = f.clone();
        // Noise floor for rank decisions, tracking the roundoff
        // accumulated by the repeated multiplications.
        let mut floor = 1e-12 * fnorm;
        loop {
            let r = rank_with_floor(&power, floor);
            if rank_sequence.last() == Some(&r) {
                break;
            }
            rank_sequence.push(r);
            if r == 0 || rank_sequence.len() >= g.nrows() {
                break;
            }
            let prev = power.norm();
            power = &power * &f;
            floor = (floor * fnorm).max(1e-12 * fnorm * prev);
            // Rescale to avoid overflow for large-norm factors; scaling
            // does not change the rank.
            let n = power.norm();
            if n > 1e100 {
                power /= n;
                floor /= n;
            }
        }
        out.push(ClusterInvariant {
            center: c.center,
            multiplicity: c.multiplicity,
            is_pair: c.is_pair,
            rank_sequence,
        });
    }
    Ok(ConjugacyInvariants { clusters: out })
}

impl ConjugacyInvariants {
    /// True when the cluster centers match within `tol` (greedy nearest
    /// matching) with equal multiplicities, pair flags and rank
    /// sequences.
    pub fn matches(&self, other: &ConjugacyInvariants, tol: f64) -> bool {
        if self.clusters.len() != other.clusters.len() {
            return false;
        }
        let mut used = vec![false; other.clusters.len()];
        for c in &self.clusters {
            let mut best: Option<(usize, f64)> = None;
            for (j, o) in other.clusters.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let dist = (c.center - o.center).norm();
                if dist <= tol && best.is_none_or(|(_, bd)| dist < bd) {
                    best = Some((j, dist));
                }
            }
            match best {
                Some((j, _)) => {
                    let o = &other.clusters[j];
                    if o.multiplicity != c.multiplicity
                        || o.is_pair != c.is_pair
                        || o.rank_sequence != c.rank_sequence
                    {
                        return false;
                    }
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }
}

/// A matrix power stored as `2^log2_scale · matrix`, with the scalar
/// factored out through exact powers of two so rescaling is lossless.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    pub matrix: SqMatrix,
    pub log2_scale: f64,
}

impl ScaledMatrix {
    pub fn of(matrix: SqMatrix) -> Self {
        let mut out = ScaledMatrix {
            matrix,
            log2_scale: 0.0,
        };
        out.renormalize();
        out
    }

    /// Pulls out an exact power of two so the max-norm lands in [1, 2).
    fn renormalize(&mut self) {
        let amax = self.matrix.amax();
        if amax == 0.0 || !amax.is_finite() {
            return;
        }
        let e = amax.log2().floor();
        if e != 0.0 {
            let s = (-e).exp2();
            self.matrix *= s; // s is a power of two: exact
            self.log2_scale += e;
        }
    }

    /// Natural log of the top singular value of the represented matrix.
    pub fn log_sigma1(&self) -> f64 {
        let sv = self.matrix.clone().svd(false, false).singular_values;
        let top = sv.iter().cloned().fold(0.0_f64, f64::max);
        self.log2_scale * std::f64::consts::LN_2 + top.ln()
    }

    /// Natural log of the spectral radius of the represented matrix.
    pub fn log_spectral_radius(&self) -> f64 {
        let top = self
            .matrix
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        self.log2_scale * std::f64::consts::LN_2 + top.ln()
    }
}

/// g^n by binary powering with exact power-of-two rescaling.
pub fn scaled_power(g: &SqMatrix, n: u64) -> Result<ScaledMatrix, MatNumError> {
    let d = check_square(g)?;
    let mut result = ScaledMatrix::of(SqMatrix::identity(d, d));
    if n == 0 {
        return Ok(result);
    }
    let mut base = ScaledMatrix::of(g.clone());
    let mut m = n;
    loop {
        if m & 1 == 1 {
            result = ScaledMatrix {
                matrix: &result.matrix * &base.matrix,
                log2_scale: result.log2_scale + base.log2_scale,
            };
            result.renormalize();
        }
        m >>= 1;
        if m == 0 {
            break;
        }
        base = ScaledMatrix {
            matrix: &base.matrix * &base.matrix,
            log2_scale: 2.0 * base.log2_scale,
        };
        base.renormalize();
    }
    Ok(result)
}

/// Largest principal angle between two subspaces of equal dimension,
/// given by orthonormal bases.
///
/// Uses the cosine formula for large angles and the sine formula for
/// small ones; a pure arccos of singular values cannot resolve angles
/// below the square root of machine precision.
pub fn principal_angle_max(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, MatNumError> {
    if a.ncols() != b.ncols() {
        return Err(MatNumError::SubspaceDimensionMismatch(a.ncols(), b.ncols()));
    }
    let m = a.transpose() * b;
    let sv = m.clone().svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let theta_cos = smin.clamp(-1.0, 1.0).acos();
    if theta_cos >= std::f64::consts::FRAC_PI_4 {
        return Ok(theta_cos);
    }
    let resid = b - a * m;
    let smax = resid
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    Ok(smax.clamp(0.0, 1.0).asin())
}

/// Orthonormal basis of the orthogonal complement of the column span.
pub fn orthonormal_complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let d = q.nrows();
    let k = q.ncols();
    let p = DMatrix::identity(d, d) - q * q.transpose();
    let svd = p.svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..d).collect();
    let sv = &svd.singular_values;
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let mut out = DMatrix::zeros(d, d - k);
    for (col, &i) in order.iter().take(d - k).enumerate() {
        out.set_column(col, &u.column(i));
    }
    out
}

/// Options for [`dominant_flag`].
#[derive(Debug, Clone)]
pub struct DominantFlagOptions {
    /// Stop pre-squaring when σ₁/σ_d exceeds this bound.
    pub condition_cap: f64,
    /// Maximum number of squarings (power 2^max reached).
    pub max_squarings: u32,
    /// Maximum orthogonal iteration steps after squaring.
    pub max_iterations: usize,
    /// Convergence threshold on the relative block-triangularity
    /// residual.
    pub residual_tol: f64,
}

impl Default for DominantFlagOptions {
    fn default() -> Self {
        DominantFlagOptions {
            condition_cap: 1e6,
            max_squarings: 14,
            max_iterations: 20_000,
            residual_tol: 1e-13,
        }
    }
}

/// Computes the dominant invariant subspaces of `g` for each requested
/// dimension k: the span of the generalized eigenvectors of the k
/// largest-modulus eigenvalues, i.e. the limit of U_k(gⁿ).
///
/// The matrix is first squared (with exact power-of-two rescaling) while
/// its condition number stays below `condition_cap`, which doubles the
/// eigenvalue gaps without losing the bottom of the spectrum to roundoff;
/// orthogonal iteration on a full orthonormal frame then separates the
/// remaining directions.  Requested dimensions at which the modulus gap
/// vanishes (e.g. across a complex conjugate pair) fail to converge and
/// are reported as errors.
pub fn dominant_flag(
    g: &SqMatrix,
    ks: &[usize],
    opts: &DominantFlagOptions,
) -> Result<Vec<SqMatrix>, MatNumError> {
    let d = check_square(g)?;
    for &k in ks {
        if k == 0 || k >= d {
            return Err(MatNumError::IndexOutOfRange { k, max: d });
        }
    }
    let cond = |m: &SqMatrix| -> f64 {
        let sv = m.clone().svd(false, false).singular_values;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for &s in sv.iter() {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    };

    let mut a = ScaledMatrix::of(g.clone());
    for _ in 0..opts.max_squarings {
        if cond(&a.matrix) > opts.condition_cap {
            break;
        }
        a = ScaledMatrix {
            matrix: &a.matrix * &a.matrix,
            log2_scale: 0.0, // scale is irrelevant for subspaces
        };
        a.renormalize();
    }
    let a = a.matrix;

    let run = |q0: SqMatrix| -> (SqMatrix, Vec<f64>) {
        let mut q = q0;
        let mut residuals = vec![f64::INFINITY; ks.len()];
        for iter in 0..opts.max_iterations {
            let z = &a * &q;
            q = z.qr().q();
            if iter % 8 == 7 || iter + 1 == opts.max_iterations {
                let t = q.transpose() * &a * &q;
                let tn = t.norm();
                let mut done = true;
                for (i, &k) in ks.iter().enumerate() {
                    let block = t.view((k, 0), (d - k, k));
                    residuals[i] = block.norm() / tn;
                    if residuals[i] > opts.residual_tol {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
        }
        (q, residuals)
    };

    let (q, residuals) = run(SqMatrix::identity(d, d));
    for (i, &k) in ks.iter().enumerate() {
        if residuals[i] > opts.residual_tol {
            return Err(MatNumError::SubspaceNotConverged {
                k,
                residual: residuals[i],
            });
        }
    }
    Ok(ks.iter().map(|&k| q.columns(0, k).into_owned()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(d: usize, rows: &[f64]) -> SqMatrix {
        SqMatrix::from_row_slice(d, d, rows)
    }

    #[test]
    fn spectral_sorts_singular_values_and_eigenvalues() {
        let g = mat(3, &[0.0, 2.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let s = spectral(&g).unwrap();
        assert_eq!(s.sigma, vec![5.0, 2.0000000000000004, 1.0]);
        // |eigenvalues| of [[0,2],[5,0]] are √10, √10, then 1.
        assert!((s.lambda_moduli()[0] - 10.0_f64.sqrt()).abs() < 1e-12);
        assert!((s.lambda_moduli()[2] - 1.0).abs() < 1e-12);
        // Left singular vector for σ₁ = 5 is e₂ (row 2 dominates).
        let u0 = s.left_singular.column(0);
        assert!(u0[1].abs() > 0.999);
    }

    #[test]
    fn uk_subspace_of_diagonal_matrix() {
        let g = mat(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0 / 3.0]);
        let u1 = uk_subspace(&g, 1, 0.5).unwrap();
        assert!((u1[(0, 0)].abs() - 1.0).abs() < 1e-14);
        let u2 = uk_subspace(&g, 2, 0.5).unwrap();
        assert_eq!(u2.ncols(), 2);
        // σ₂/σ₃ = 3 > 1.5 ✓ but requesting tol 5 fails.
        assert!(matches!(
            uk_subspace(&g, 2, 5.0),
            Err(MatNumError::UndefinedSubspace { k: 2, .. })
        ));
    }

    #[test]
    fn uk_subspace_rejects_closed_gaps() {
        let g = mat(2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            uk_subspace(&g, 1, 1e-9),
            Err(MatNumError::UndefinedSubspace { .. })
        ));
    }

    #[test]
    fn kron_matches_block_structure() {
        let a = mat(2, &[1.0, 2.0, 3.0, 4.0]);
        let b = mat(2, &[0.0, 1.0, 1.0, 0.0]);
        let k = kron(&a, &b);
        assert_eq!(k.nrows(), 4);
        assert_eq!(k[(0, 1)], 1.0);
        assert_eq!(k[(0, 3)], 2.0);
        assert_eq!(k[(2, 1)], 3.0);
        // Mixed product property on random-ish integer matrices.
        let c = mat(2, &[2.0, 0.0, 1.0, 1.0]);
        let d = mat(2, &[1.0, 1.0, 0.0, 2.0]);
        let lhs = kron(&(&a * &c), &(&b * &d));
        let rhs = kron(&a, &b) * kron(&c, &d);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn compound_of_diagonal_is_diagonal_of_products() {
        let g = mat(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0 / 3.0]);
        let c2 = compound(&g, 2).unwrap();
        // Basis {01, 02, 12}: products 3·1, 3·(1/3), 1·(1/3).
        assert!((c2[(0, 0)] - 3.0).abs() < 1e-14);
        assert!((c2[(1, 1)] - 1.0).abs() < 1e-14);
        assert!((c2[(2, 2)] - 1.0 / 3.0).abs() < 1e-14);
        assert!((c2.norm_squared() - (9.0 + 1.0 + 1.0 / 9.0)).abs() < 1e-12);
    }

    #[test]
    fn compound_is_multiplicative() {
        let a = mat(3, &[1.0, 2.0, 0.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0]);
        let b = mat(3, &[2.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let lhs = compound(&(&a * &b), 2).unwrap();
        let rhs = compound(&a, 2).unwrap() * compound(&b, 2).unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn compound_top_singular_value_is_product_of_top_singular_values() {
        let g = mat(3, &[2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.5, 0.0, 1.0]);
        let s = spectral(&g).unwrap();
        let c2 = compound(&g, 2).unwrap();
        let s2 = spectral(&c2).unwrap();
        assert!((s2.sigma[0] - s.sigma[0] * s.sigma[1]).abs() < 1e-10 * s2.sigma[0]);
    }

    #[test]
    fn proximality_of_diagonal_ladder() {
        let g = mat(3, &[4.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.125]);
        let p1 = is_pk_proximal(&g, 1, 1e-9).unwrap();
        assert!(p1.pk_proximal);
        assert!(p1.loxodromic);
        assert!((p1.gaps[0] - 2.0).abs() < 1e-12);
        assert!((p1.gaps[1] - 16.0).abs() < 1e-12);
        // A unipotent matrix has all gaps exactly 1.
        let u = mat(2, &[1.0, 1.0, 0.0, 1.0]);
        let pu = is_pk_proximal(&u, 1, 1e-9).unwrap();
        assert!(!pu.pk_proximal);
        assert!((pu.gaps[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_matrix_is_not_p1_proximal() {
        let th = 0.7_f64;
        let g = mat(2, &[th.cos(), th.sin(), -th.sin(), th.cos()]);
        assert!(!is_pk_proximal(&g, 1, 1e-9).unwrap().pk_proximal);
    }

    #[test]
    fn weak_unipotency_verdicts() {
        // Parabolic-type: single Jordan block at 1.
        let j = mat(2, &[1.0, 1.0, 0.0, 1.0]);
        let r = is_weakly_unipotent(&j, 1e-6).unwrap();
        assert!(r.is_weakly_unipotent());

        // Rotation: unit moduli but semisimple.
        let th = 0.7_f64;
        let rot = mat(2, &[th.cos(), th.sin(), -th.sin(), th.cos()]);
        let r = is_weakly_unipotent(&rot, 1e-6).unwrap();
        assert_eq!(r.verdict, WeakUnipotencyVerdict::Semisimple);

        // Identity: semisimple.
        let r = is_weakly_unipotent(&SqMatrix::identity(3, 3), 1e-6).unwrap();
        assert_eq!(r.verdict, WeakUnipotencyVerdict::Semisimple);

        // Hyperbolic-type: moduli off 1.
        let h = mat(2, &[2.0, 0.0, 0.0, 0.5]);
        let r = is_weakly_unipotent(&h, 1e-6).unwrap();
        assert_eq!(r.verdict, WeakUnipotencyVerdict::NotUnitModulus);

        // Mixed rotation ⊗ unipotent block: weakly unipotent but not
        // unipotent.
        let th = 1.1_f64;
        let m = kron(
            &mat(2, &[1.0, 1.0, 0.0, 1.0]),
            &mat(2, &[th.cos(), th.sin(), -th.sin(), th.cos()]),
        );
        let r = is_weakly_unipotent(&m, 1e-6).unwrap();
        assert!(r.is_weakly_unipotent());
    }

    #[test]
    fn eigen_clustering_separates_and_merges() {
        let ev = vec![
            Complex64::new(1.0, 1e-9),
            Complex64::new(1.0 + 5e-7, 0.0),
            Complex64::new(-1.0, 0.0),
        ];
        let clusters = cluster_eigenvalues(&ev, 1e-6).unwrap();
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].multiplicity, 1); // −1
        assert_eq!(clusters[1].multiplicity, 2); // 1 (merged)

        // Two clusters closer than 10·tol: unresolvable.
        let bad = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0 + 5e-6, 0.0)];
        assert!(matches!(
            cluster_eigenvalues(&bad, 1e-6),
            Err(MatNumError::UnresolvableClustering { .. })
        ));
    }

    #[test]
    fn conjugacy_invariants_distinguish_jordan_types() {
        // J₂(1) ⊕ I₂ vs J₂(1) ⊕ J₂(1): same eigenvalues, different rank
        // sequences.
        let a = mat(
            4,
            &[
                1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        let b = mat(
            4,
            &[
                1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        let ia = conjugacy_invariants(&a, 1e-6).unwrap();
        let ib = conjugacy_invariants(&b, 1e-6).unwrap();
        assert_eq!(ia.clusters[0].rank_sequence, vec![1, 0]);
        assert_eq!(ib.clusters[0].rank_sequence, vec![2, 0]);
        assert!(!ia.matches(&ib, 1e-6));
        assert!(ia.matches(&ia, 1e-6));

        // Conjugating preserves the invariants.
        let p = mat(
            4,
            &[
                1.0, 0.2, 0.0, 0.3, 0.0, 1.0, 0.5, 0.0, 0.1, 0.0, 1.0, 0.0, 0.0, 0.0, 0.2, 1.0,
            ],
        );
        let conj = &p * &b * p.clone().try_inverse().unwrap();
        let ic = conjugacy_invariants(&conj, 1e-6).unwrap();
        assert!(ib.matches(&ic, 1e-6));
    }

    #[test]
    fn scaled_power_matches_plain_power() {
        let g = mat(2, &[1.0, 1.0, 0.0, 1.0]);
        let p = scaled_power(&g, 100).unwrap();
        let expect = mat(2, &[1.0, 100.0, 0.0, 1.0]);
        let recon = &p.matrix * p.log2_scale.exp2();
        assert!((recon - expect).norm() < 1e-10);
    }

    #[test]
    fn scaled_power_survives_would_be_overflow() {
        let g = mat(2, &[3.0, 0.0, 0.0, 1.0 / 3.0]);
        let p = scaled_power(&g, 1 << 12).unwrap();
        // log σ₁ = 4096·log 3, far beyond f64 range unscaled.
        let expect = 4096.0 * 3.0_f64.ln();
        assert!((p.log_sigma1() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn principal_angles_and_complement() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!((principal_angle_max(&a, &b).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(principal_angle_max(&a, &a).unwrap() < 1e-8);
        let comp = orthonormal_complement(&a);
        assert_eq!(comp.ncols(), 2);
        assert!((comp.transpose() * &a).norm() < 1e-12);
        assert!((comp.transpose() * &comp - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn dominant_flag_of_conjugated_diagonal() {
        // g = P D P⁻¹ with known dominant subspaces spanned by columns
        // of P.
        let p = mat(3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0]);
        let dg = mat(3, &[5.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.1]);
        let g = &p * dg * p.clone().try_inverse().unwrap();
        let flags = dominant_flag(&g, &[1, 2], &DominantFlagOptions::default()).unwrap();
        // k=1: span of first column of P.
        let target1 = p.column(0).normalize();
        let got1 = &flags[0];
        let overlap = (got1.transpose() * target1)[(0, 0)].abs();
        assert!(overlap > 1.0 - 1e-10, "overlap {overlap}");
        // k=2: span of first two columns of P.
        let q2 = DMatrix::from_columns(&[p.column(0).into_owned(), p.column(1).into_owned()]);
        let q2 = q2.qr().q();
        let angle = principal_angle_max(&flags[1], &q2).unwrap();
        assert!(angle < 1e-9, "angle {angle}");
        // Invariance certificate: g·U_k stays in U_k.
        for f in &flags {
            let img = &g * f;
            let proj = f * (f.transpose() * &img);
            assert!((img.clone() - proj).norm() / img.norm() < 1e-9);
        }
    }

    #[test]
    fn dominant_flag_fails_across_complex_pairs() {
        // Rotation block ⊕ small scalar: moduli (1, 1, 0.5); k=1 falls
        // inside the pair and must fail, k=2 succeeds.
        let th = 0.9_f64;
        let g = mat(
            3,
            &[
                th.cos(),
                th.sin(),
                0.0,
                -th.sin(),
                th.cos(),
                0.0,
                0.0,
                0.0,
                0.5,
            ],
        );
        let opts = DominantFlagOptions {
            max_iterations: 400,
            ..DominantFlagOptions::default()
        };
        assert!(matches!(
            dominant_flag(&g, &[1], &opts),
            Err(MatNumError::SubspaceNotConverged { k: 1, .. })
        ));
        let f2 = dominant_flag(&g, &[2], &opts).unwrap();
        // The dominant 2-plane is the rotation plane e₁, e₂.
        assert!(f2[0].row(2).norm() < 1e-10);
    }

    #[test]
    fn dominant_flag_handles_tight_gaps_via_iteration() {
        // Well-separated from below but a tight top gap: λ = 1.02, 1.0,
        // 0.3 with a non-normal mixing part.
        let p = mat(3, &[1.0, 0.4, 0.0, 0.0, 1.0, 0.7, 0.2, 0.0, 1.0]);
        let dg = mat(3, &[1.02, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.3]);
        let g = &p * dg * p.clone().try_inverse().unwrap();
        let flags = dominant_flag(&g, &[1], &DominantFlagOptions::default()).unwrap();
        let target = p.column(0).normalize();
        let overlap = (flags[0].transpose() * target)[(0, 0)].abs();
        assert!(overlap > 1.0 - 1e-8, "overlap {overlap}");
    }
}
