//! Dense linear-algebra substrate shared by every solver: orthonormal bases,
//! truncated SVD, principal angles, subspace metrics and the matrix
//! exponential used to rotate subspaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_err, Error, Result};

/// Orthonormality tolerance enforced on every [`BasisMatrix`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Relative tolerance below which a QR diagonal entry counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Tall matrix with mutually orthonormal columns, representing an
/// `r`-dimensional subspace of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix(DMatrix<f64>);

impl BasisMatrix {
    /// Wraps `m` after checking `‖MᵀM − I‖_max ≤ 1e-10` and `1 ≤ r ≤ n`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (n, r) = m.shape();
        if r == 0 || r > n {
            return dim_err(format!("basis must satisfy 1 <= r <= n, got {n}x{r}"));
        }
        let dev = orthonormality_defect(&m);
        if dev > ORTHONORMAL_TOL {
            return Err(Error::Precondition(format!(
                "columns are not orthonormal (max |PᵀP - I| = {dev:e})"
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(orthonormality_defect(&m) <= 1e-8);
        Self(m)
    }

    /// Zero-dimensional subspace of `R^n` (`n x 0`), the "no prior
    /// knowledge" basis accepted by modified PCP and projectors.
    pub fn empty(n: usize) -> Self {
        Self(DMatrix::zeros(n, 0))
    }

    /// First `r` columns of the identity.
    pub fn identity_columns(n: usize, r: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, r))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn r(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `(I − PPᵀ) x`
    pub fn project_out(&self, x: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.0.tr_mul(x);
        x - &self.0 * coeffs
    }

    /// `(I − PPᵀ) X` for a block of columns.
    pub fn project_out_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let coeffs = self.0.tr_mul(x);
        x - &self.0 * coeffs
    }

    /// Leading `k` columns as a new basis.
    pub fn leading(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.r() {
            return dim_err(format!("cannot take {k} of {} columns", self.r()));
        }
        Ok(Self(self.0.columns(0, k).into_owned()))
    }

    /// Largest absolute deviation of `PᵀP` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        orthonormality_defect(&self.0)
    }
}

impl AsRef<DMatrix<f64>> for BasisMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let gram = m.tr_mul(m);
    let r = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..r {
        for j in 0..r {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Reduced SVD restricted to the leading `r` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: BasisMatrix,
    /// Non-negative, sorted descending.
    pub sigma: DVector<f64>,
    pub v: BasisMatrix,
}

impl SvdTriple {
    /// `U diag(σ) Vᵀ`
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.as_matrix().clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.as_matrix().transpose()
    }
}

/// Orthonormal basis for the column span of `m` (Householder QR with the
/// diagonal of R made positive, so already-orthonormal input maps to itself).
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<BasisMatrix> {
    let (n, r) = m.shape();
    if r == 0 || r > n {
        return Err(Error::RankDeficient {
            rank: r.min(n),
            expected: r,
        });
    }
    let scale = m
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(Error::RankDeficient { rank: 0, expected: r });
    }
    let qr = m.clone().qr();
    let rr = qr.r();
    let mut q = qr.q();
    let mut rank = 0;
    for i in 0..r {
        let d = rr[(i, i)];
        if d.abs() > RANK_TOL * scale {
            rank += 1;
        }
        if d < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    if rank < r {
        return Err(Error::RankDeficient { rank, expected: r });
    }
    Ok(BasisMatrix(q))
}

/// Thin SVD `(U, σ, V)` with `min(n, d)` triplets, sorted descending, with the
/// largest-magnitude entry of each left singular vector made positive.
pub(crate) fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let (n, d) = m.shape();
    if n == 0 || d == 0 {
        return dim_err("SVD of an empty matrix");
    }
    let svd = to_faer(m).thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let k = n.min(d);
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut u = DMatrix::from_fn(n, k, |i, j| fu[(i, j)]);
    let mut v = DMatrix::from_fn(d, k, |i, j| fv[(i, j)]);
    let sigma = DVector::from_fn(k, |j, _| fs[j]);
    sort_and_fix_signs(&mut u, &sigma, &mut v).map(|sigma| (u, sigma, v))
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn sort_and_fix_signs(
    u: &mut DMatrix<f64>,
    sigma: &DVector<f64>,
    v: &mut DMatrix<f64>,
) -> Result<DVector<f64>> {
    let k = sigma.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let u_sorted = DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    let v_sorted = DMatrix::from_fn(v.nrows(), k, |i, j| v[(i, order[j])]);
    let sigma_sorted = DVector::from_fn(k, |j, _| sigma[order[j]].max(0.0));
    *u = u_sorted;
    *v = v_sorted;
    for j in 0..k {
        let col = u.column(j);
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
    Ok(sigma_sorted)
}

/// Top-`r` singular triplets of `m`.
pub fn topr_svd(m: &DMatrix<f64>, r: usize) -> Result<SvdTriple> {
    let (n, d) = m.shape();
    if r == 0 || r > n.min(d) {
        return dim_err(format!("rank {r} not in 1..={}", n.min(d)));
    }
    let (u, sigma, v) = thin_svd(m)?;
    Ok(SvdTriple {
        u: BasisMatrix(u.columns(0, r).into_owned()),
        sigma: sigma.rows(0, r).into_owned(),
        v: BasisMatrix(v.columns(0, r).into_owned()),
    })
}

/// All singular values of `m`, descending.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    let mut s = match to_faer(m).singular_values() {
        Ok(s) => DVector::from_vec(s),
        Err(_) => m.singular_values(),
    };
    s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// `SE(P̂, P) = ‖(I − P̂P̂ᵀ)P‖₂`, the sine of the largest principal angle.
pub fn subspace_error(phat: &BasisMatrix, p: &BasisMatrix) -> Result<f64> {
    if phat.n() != p.n() {
        return dim_err(format!("ambient dimensions {} vs {}", phat.n(), p.n()));
    }
    let resid = phat.project_out_matrix(p.as_matrix());
    Ok(spectral_norm(&resid).min(1.0))
}

/// Principal-angle summary between two equal-dimension subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    /// `Σ sin²θ_i`
    pub eps: f64,
    /// `Π cos²θ_i`
    pub zeta: f64,
    /// Angles in radians, ascending.
    pub theta: Vec<f64>,
}

pub fn principal_angle_stats(phat: &BasisMatrix, p: &BasisMatrix) -> Result<PrincipalAngles> {
    if phat.n() != p.n() || phat.r() != p.r() {
        return dim_err(format!(
            "subspaces {}x{} and {}x{}",
            phat.n(),
            phat.r(),
            p.n(),
            p.r()
        ));
    }
    let r = p.r();
    // cosines from P̂ᵀP (descending), sines from the residual (ascending
    // after reversal); atan2 keeps small and near-orthogonal angles accurate.
    let cos: Vec<f64> = singular_values(&phat.as_matrix().tr_mul(p.as_matrix()))
        .iter()
        .map(|c| c.clamp(0.0, 1.0))
        .collect();
    let resid = phat.project_out_matrix(p.as_matrix());
    let mut sin: Vec<f64> = singular_values(&resid)
        .iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect();
    sin.reverse();
    let theta: Vec<f64> = (0..r).map(|i| sin[i].atan2(cos[i])).collect();
    let eps = theta.iter().map(|t| t.sin().powi(2)).sum();
    let zeta = theta.iter().map(|t| t.cos().powi(2)).product();
    Ok(PrincipalAngles { eps, zeta, theta })
}

/// Smallest `μ` with `max_i ‖P^{(i)}‖² ≤ μ r / n`.
pub fn incoherence(p: &BasisMatrix) -> f64 {
    let (n, r) = (p.n() as f64, p.r() as f64);
    let max_row = p
        .as_matrix()
        .row_iter()
        .map(|row| row.norm_squared())
        .fold(0.0f64, f64::max);
    n / r * max_row
}

/// Maximum absolute entry of `B + Bᵀ`.
pub fn skew_defect(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((b[(i, j)] + b[(j, i)]).abs());
        }
    }
    worst
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn taylor_apply(a: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut sum = x.clone();
    let mut term = x.clone();
    for k in 1..60 {
        term = (a * &term) / k as f64;
        sum += &term;
        if term.amax() <= 1e-17 * sum.amax().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    sum
}

/// Dense matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return dim_err("expm of a non-square matrix");
    }
    let nrm = norm1(a);
    let s = if nrm > 0.5 {
        (nrm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s);
    let mut e = taylor_apply(&scaled, &DMatrix::identity(a.nrows(), a.ncols()));
    for _ in 0..s {
        e = &e * &e;
    }
    Ok(e)
}

/// `exp(A) X` without forming `exp(A)`: `2^s` Taylor steps with `‖A‖₁/2^s ≤ 1`.
pub fn expm_action(a: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() || a.ncols() != x.nrows() {
        return dim_err("expm_action dimension mismatch");
    }
    let nrm = norm1(a);
    let steps = nrm.ceil().max(1.0) as usize;
    let scaled = a / steps as f64;
    let mut y = x.clone();
    for _ in 0..steps {
        y = taylor_apply(&scaled, &y);
    }
    Ok(y)
}

/// `orth(exp(δB) P)` for a skew-symmetric generator `B`.
pub fn rotate_subspace(p: &BasisMatrix, delta: f64, b: &DMatrix<f64>) -> Result<BasisMatrix> {
    if b.nrows() != p.n() || b.ncols() != p.n() {
        return dim_err(format!(
            "generator is {}x{}, basis has n = {}",
            b.nrows(),
            b.ncols(),
            p.n()
        ));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidConfig(format!("rotation magnitude {delta} < 0")));
    }
    let defect = skew_defect(b);
    if defect > 1e-12 * b.amax().max(1.0) {
        return Err(Error::InvalidRotation(defect));
    }
    if delta == 0.0 {
        return Ok(p.clone());
    }
    let rotated = expm_action(&(b * delta), p.as_matrix())?;
    orthonormalize(&rotated)
}

/// Frobenius norm of `a − b` relative to `‖b‖_F` (absolute when `b = 0`).
pub fn rel_frobenius_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn orthonormalize_identity_is_fixed_point() {
        let i = DMatrix::<f64>::identity(4, 2);
        let p = orthonormalize(&i).unwrap();
        assert_eq!(p.as_matrix(), &i);
    }

    #[test]
    fn orthonormalize_removes_column_scaling() {
        let m = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let p = orthonormalize(&m).unwrap();
        assert_abs_diff_eq!(p.as_matrix(), &DMatrix::identity(3, 2), epsilon = 1e-15);
    }

    #[test]
    fn orthonormalize_gaussian_gram() {
        let p = orthonormalize(&gaussian(50, 5, 1)).unwrap();
        assert!(p.orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn orthonormalize_rejects_rank_deficient() {
        let mut m = gaussian(10, 3, 2);
        let c0 = m.column(0).into_owned();
        m.set_column(2, &(c0 * 2.0));
        assert!(matches!(
            orthonormalize(&m),
            Err(Error::RankDeficient { rank: 2, expected: 3 })
        ));
    }

    #[test]
    fn topr_svd_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let s = topr_svd(&m, 2).unwrap();
        assert_abs_diff_eq!(s.sigma[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.sigma[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn topr_svd_rank_one_sign_rule() {
        let u = DVector::from_vec(vec![0.6, -0.8, 0.0]);
        let v = DVector::from_vec(vec![0.0, 1.0]);
        let m = &u * v.transpose();
        let s = topr_svd(&m, 1).unwrap();
        assert_abs_diff_eq!(s.sigma[0], 1.0, epsilon = 1e-14);
        // largest-magnitude entry (-0.8) must come out positive
        assert_abs_diff_eq!(s.u.as_matrix().column(0).into_owned(), -u, epsilon = 1e-14);
    }

    #[test]
    fn topr_svd_matches_full_decomposition() {
        let m = gaussian(30, 20, 3);
        let s = topr_svd(&m, 5).unwrap();
        let full = m.clone().svd(false, false).singular_values;
        let mut full: Vec<f64> = full.iter().copied().collect();
        full.sort_by(|a, b| b.total_cmp(a));
        for i in 0..5 {
            assert_abs_diff_eq!(s.sigma[i], full[i], epsilon = 1e-10);
        }
        assert!(s.u.orthonormality_defect() < 1e-12);
        assert!(s.v.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn topr_svd_wide_and_tall_routes_agree() {
        let m = gaussian(12, 80, 4);
        let wide = topr_svd(&m, 4).unwrap();
        let tall = topr_svd(&m.transpose(), 4).unwrap();
        assert_abs_diff_eq!(wide.sigma, tall.sigma, epsilon = 1e-10);
        let se = subspace_error(&wide.u, &tall.v).unwrap();
        assert!(se < 1e-10);
        let full = topr_svd(&m, 12).unwrap();
        assert_abs_diff_eq!(full.reconstruct(), m, epsilon = 1e-10);
    }

    #[test]
    fn topr_svd_rejects_large_rank() {
        assert!(matches!(topr_svd(&gaussian(3, 4, 0), 4), Err(Error::Dimension(_))));
    }

    #[test]
    fn topr_svd_is_deterministic() {
        let m = gaussian(40, 25, 5);
        assert_eq!(topr_svd(&m, 6).unwrap(), topr_svd(&m, 6).unwrap());
    }

    #[test]
    fn se_identical_and_orthogonal() {
        let e1 = BasisMatrix::identity_columns(2, 1).unwrap();
        let e2 = BasisMatrix::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        assert_eq!(subspace_error(&e1, &e1).unwrap(), 0.0);
        assert_abs_diff_eq!(subspace_error(&e1, &e2).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn se_planar_rotation() {
        let e1 = BasisMatrix::identity_columns(2, 1).unwrap();
        let p = BasisMatrix::new(DMatrix::from_column_slice(2, 1, &[0.1f64.cos(), 0.1f64.sin()]))
            .unwrap();
        assert_abs_diff_eq!(subspace_error(&e1, &p).unwrap(), 0.1f64.sin(), epsilon = 1e-15);
        assert!(matches!(
            subspace_error(&e1, &BasisMatrix::identity_columns(3, 1).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn principal_angles_identical_and_single() {
        let p = orthonormalize(&gaussian(10, 3, 6)).unwrap();
        let a = principal_angle_stats(&p, &p).unwrap();
        assert_abs_diff_eq!(a.eps, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.zeta, 1.0, epsilon = 1e-14);

        let th = 0.7f64;
        let e1 = BasisMatrix::identity_columns(2, 1).unwrap();
        let q = BasisMatrix::new(DMatrix::from_column_slice(2, 1, &[th.cos(), th.sin()])).unwrap();
        let a = principal_angle_stats(&e1, &q).unwrap();
        assert_abs_diff_eq!(a.eps, th.sin().powi(2), epsilon = 1e-14);
        assert_abs_diff_eq!(a.zeta, th.cos().powi(2), epsilon = 1e-14);
    }

    #[test]
    fn principal_angles_block_rotation() {
        // P = [e1, e3], P̂ = [rot(e1, e2, 0.1), rot(e3, e4, 0.2)]
        let (t1, t2) = (0.1f64, 0.2f64);
        let p = BasisMatrix::new(DMatrix::from_column_slice(
            4,
            2,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        ))
        .unwrap();
        let phat = BasisMatrix::new(DMatrix::from_column_slice(
            4,
            2,
            &[t1.cos(), t1.sin(), 0.0, 0.0, 0.0, 0.0, t2.cos(), t2.sin()],
        ))
        .unwrap();
        let a = principal_angle_stats(&phat, &p).unwrap();
        assert_abs_diff_eq!(a.eps, t1.sin().powi(2) + t2.sin().powi(2), epsilon = 1e-14);
        assert_abs_diff_eq!(a.theta[0], t1, epsilon = 1e-14);
        assert_abs_diff_eq!(a.theta[1], t2, epsilon = 1e-14);
    }

    #[test]
    fn incoherence_extremes() {
        let p = BasisMatrix::identity_columns(8, 2).unwrap();
        assert_abs_diff_eq!(incoherence(&p), 4.0, epsilon = 1e-15);
        let flat = BasisMatrix::new(DMatrix::from_element(4, 1, 0.5)).unwrap();
        assert_abs_diff_eq!(incoherence(&flat), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn incoherence_of_random_bases_is_logarithmic() {
        let n = 200;
        let bound = 3.0 * (n as f64).ln();
        let ok = (0..100)
            .filter(|&s| incoherence(&orthonormalize(&gaussian(n, 5, 1000 + s)).unwrap()) <= bound)
            .count();
        assert!(ok >= 95, "{ok}/100 within 3 log n");
    }

    #[test]
    fn rotation_planar() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e1 = BasisMatrix::identity_columns(2, 1).unwrap();
        let rot = rotate_subspace(&e1, 0.3, &b).unwrap();
        assert_abs_diff_eq!(rot.as_matrix()[(0, 0)], 0.3f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(rot.as_matrix()[(1, 0)], 0.3f64.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(subspace_error(&rot, &e1).unwrap(), 0.3f64.sin(), epsilon = 1e-14);
        let same = rotate_subspace(&e1, 0.0, &b).unwrap();
        assert_eq!(subspace_error(&same, &e1).unwrap(), 0.0);
    }

    #[test]
    fn rotation_small_delta_and_rejects_non_skew() {
        let n = 30;
        let bt = gaussian(n, n, 7);
        let b = &bt - bt.transpose();
        let p = orthonormalize(&gaussian(n, 4, 8)).unwrap();
        let rot = rotate_subspace(&p, 0.001, &b).unwrap();
        let se = subspace_error(&rot, &p).unwrap();
        assert!(se > 0.0 && se < 0.1, "{se}");
        assert!(matches!(
            rotate_subspace(&p, 0.1, &bt),
            Err(Error::InvalidRotation(_))
        ));
    }

    #[test]
    fn expm_action_matches_dense_expm() {
        let n = 12;
        let bt = gaussian(n, n, 9);
        let b = (&bt - bt.transpose()) * 0.4;
        let e = expm(&b).unwrap();
        // exp of a skew matrix is orthogonal
        assert!(orthonormality_defect(&e) < 1e-12);
        let x = gaussian(n, 3, 10);
        assert_abs_diff_eq!(expm_action(&b, &x).unwrap(), &e * &x, epsilon = 1e-11);
    }
}
