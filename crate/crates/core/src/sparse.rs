//! l1 / thresholding toolbox: constrained basis-pursuit denoising, hard and
//! support thresholding, and least squares on a known support.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_err, Error, LastIterate, Result};
use crate::linalg::BasisMatrix;

/// Orthogonal projector `I − BBᵀ` onto the complement of an orthonormal
/// block `B` (which may have zero columns, giving the identity). Applied
/// in `O(n k)` without forming the `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoProjector {
    basis: DMatrix<f64>,
}

impl OrthoProjector {
    pub fn complement_of(p: &BasisMatrix) -> Self {
        Self {
            basis: p.as_matrix().clone(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            basis: DMatrix::zeros(n, 0),
        }
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.basis.ncols() == 0 {
            return x.clone();
        }
        x - &self.basis * self.basis.tr_mul(x)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::identity(n, n) - &self.basis * self.basis.transpose()
    }
}

/// Sensing operator of an l1 problem.
#[derive(Debug, Clone, PartialEq)]
pub enum SensingOperator {
    Dense(DMatrix<f64>),
    Projector(OrthoProjector),
}

impl SensingOperator {
    fn shape(&self) -> (usize, usize) {
        match self {
            SensingOperator::Dense(a) => a.shape(),
            SensingOperator::Projector(p) => (p.n(), p.n()),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            SensingOperator::Dense(a) => a * x,
            SensingOperator::Projector(p) => p.apply(x),
        }
    }
}

/// `min ‖x‖₁  s.t.  ‖y − A x‖₂ ≤ ξ`
#[derive(Debug, Clone)]
pub struct L1Problem {
    pub a: SensingOperator,
    pub y: DVector<f64>,
    pub xi: f64,
    pub max_iters: usize,
    pub tol: f64,
}

pub const DEFAULT_L1_TOL: f64 = 1e-7;
pub const DEFAULT_L1_MAX_ITERS: usize = 2000;

impl L1Problem {
    pub fn new(a: SensingOperator, y: DVector<f64>, xi: f64) -> Self {
        Self {
            a,
            y,
            xi,
            max_iters: DEFAULT_L1_MAX_ITERS,
            tol: DEFAULT_L1_TOL,
        }
    }
}

fn soft_threshold_vec(v: &DVector<f64>, kappa: f64) -> DVector<f64> {
    v.map(|x| soft(x, kappa))
}

pub(crate) fn soft(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

/// Projection of `v` onto the ball of radius `radius` centred at `centre`.
fn project_ball(v: &DVector<f64>, centre: &DVector<f64>, radius: f64) -> DVector<f64> {
    let d = v - centre;
    let nrm = d.norm();
    if nrm <= radius {
        v.clone()
    } else {
        centre + d * (radius / nrm)
    }
}

/// Residual-balancing penalty update; returns the factor applied to `ρ`
/// (the scaled duals must be divided by it). Adapting every iteration makes
/// `ρ` oscillate, so changes are spaced out and stop after a while.
fn rebalance(rho: &mut f64, it: usize, primal: f64, dual: f64) -> f64 {
    const MU: f64 = 10.0;
    const TAU: f64 = 2.0;
    const EVERY: usize = 25;
    const UNTIL: usize = 500;
    if it == 0 || !it.is_multiple_of(EVERY) || it > UNTIL {
        return 1.0;
    }
    if primal > MU * dual {
        *rho *= TAU;
        TAU
    } else if dual > MU * primal {
        *rho /= TAU;
        1.0 / TAU
    } else {
        1.0
    }
}

/// How often (in iterations) a support-restricted polish is attempted.
const POLISH_EVERY: usize = 25;

/// Given the support and signs of an ADMM iterate, solves the problem
/// restricted to that sign pattern in closed form and returns the result only
/// if it is certified optimal: feasible, sign consistent, and with a dual
/// vector `ν` satisfying `(Aᵀν)_T = sign(x_T)`, `‖Aᵀν‖∞ ≤ 1`.
///
/// `nu_admm` is the solver's running dual estimate, used when the constraint
/// is active with zero slack (`ξ = 0` or the support fit is already on the
/// boundary).
fn polish(
    x: &DVector<f64>,
    pb: &L1Problem,
    col: impl Fn(usize) -> DVector<f64>,
    at: impl Fn(&DVector<f64>) -> DVector<f64>,
    nu_admm: &DVector<f64>,
) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    if support.is_empty() || support.len() > pb.y.len() {
        return None;
    }
    let k = support.len();
    let signs = DVector::from_iterator(k, support.iter().map(|&i| x[i].signum()));
    let mut a_t = DMatrix::zeros(pb.y.len(), k);
    for (j, &i) in support.iter().enumerate() {
        a_t.set_column(j, &col(i));
    }
    let chol = a_t.tr_mul(&a_t).cholesky()?;
    let x_ls = chol.solve(&a_t.tr_mul(&pb.y));
    let r0 = &pb.y - &a_t * &x_ls;
    let slack = pb.xi * pb.xi - r0.norm_squared();
    let feas_tol = pb.tol * (1.0 + pb.y.norm());
    if r0.norm() > pb.xi + feas_tol {
        return None;
    }
    let g_inv_s = chol.solve(&signs);
    let (x_t, nu) = if slack > 0.0 {
        let t = (slack / signs.dot(&g_inv_s)).sqrt();
        let x_t = &x_ls - &g_inv_s * t;
        let nu = (&pb.y - &a_t * &x_t) / t;
        (x_t, nu)
    } else {
        let gap = &signs - a_t.tr_mul(nu_admm);
        (x_ls, nu_admm + &a_t * chol.solve(&gap))
    };
    if x_t.iter().zip(signs.iter()).any(|(v, s)| v * s <= 0.0) {
        return None;
    }
    let cert = at(&nu);
    if cert.amax() > 1.0 + pb.tol {
        return None;
    }
    let mut out = DVector::zeros(x.len());
    for (j, &i) in support.iter().enumerate() {
        out[i] = x_t[j];
    }
    Some(out)
}

fn same_support(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    a.iter().zip(b.iter()).all(|(p, q)| (*p == 0.0) == (*q == 0.0) && p.signum() == q.signum())
}

/// Solves the constrained BPDN problem by ADMM with an adaptive penalty.
pub fn l1_bpdn(problem: &L1Problem) -> Result<DVector<f64>> {
    let (m, n) = problem.a.shape();
    if problem.y.len() != m {
        return dim_err(format!("y has length {}, operator has {m} rows", problem.y.len()));
    }
    if !(problem.xi >= 0.0) {
        return Err(Error::InvalidConfig(format!("noise bound {} < 0", problem.xi)));
    }
    if problem.y.norm() <= problem.xi {
        return Ok(DVector::zeros(n));
    }
    match &problem.a {
        SensingOperator::Projector(p) => bpdn_projector(p, problem),
        SensingOperator::Dense(a) => bpdn_dense(a, problem),
    }
}

/// Single splitting `x = w`, with the constraint set's projection in closed
/// form because `Ψ` is an orthogonal projector.
fn bpdn_projector(psi: &OrthoProjector, pb: &L1Problem) -> Result<DVector<f64>> {
    let n = psi.n();
    let y_in = psi.apply(&pb.y);
    let outside = (&pb.y - &y_in).norm_squared();
    let radius_sq = pb.xi * pb.xi - outside;
    if radius_sq < 0.0 {
        return Err(Error::InvalidConfig(
            "constraint set is empty: y has a component outside the range of the projector larger than xi"
                .into(),
        ));
    }
    let radius = radius_sq.sqrt();
    let project = |v: &DVector<f64>| -> DVector<f64> {
        let pv = psi.apply(v);
        let kept = v - &pv;
        kept + project_ball(&pv, &y_in, radius)
    };

    let scale = pb.y.amax().max(f64::MIN_POSITIVE);
    let mut rho = 10.0 / scale;
    let mut w = project(&DVector::zeros(n));
    let mut u = DVector::zeros(n);
    let mut x = DVector::zeros(n);
    let mut primal = f64::INFINITY;
    let mut last_check = DVector::zeros(n);
    let basis = &psi.basis;
    let col = |i: usize| {
        let mut c = -(basis * basis.row(i).transpose());
        c[i] += 1.0;
        c
    };
    for it in 0..pb.max_iters {
        x = soft_threshold_vec(&(&w - &u), 1.0 / rho);
        if it % POLISH_EVERY == POLISH_EVERY - 1 {
            if same_support(&x, &last_check) {
                if let Some(p) = polish(&x, pb, col, |v| psi.apply(v), &(&u * -rho)) {
                    return Ok(p);
                }
            }
            last_check = x.clone();
        }
        let w_prev = w;
        w = project(&(&x + &u));
        let r = &x - &w;
        u += &r;
        primal = r.norm();
        let dual = rho * (&w - &w_prev).norm();
        let eps_p = pb.tol * (1.0 + x.norm().max(w.norm()));
        let eps_d = pb.tol * (1.0 + rho * u.norm());
        if primal <= eps_p && dual <= eps_d {
            return Ok(polish(&x, pb, col, |v| psi.apply(v), &(&u * -rho)).unwrap_or(x));
        }
        let f = rebalance(&mut rho, it, primal / eps_p, dual / eps_d);
        if f != 1.0 {
            u /= f;
        }
    }
    Err(Error::IterationLimit {
        iterations: pb.max_iters,
        residual: primal,
        last: LastIterate::Vector(x),
    })
}

/// Two splittings `x = w`, `z = A w`; the `w`-update reuses one Cholesky
/// factor of `I + AᵀA`.
fn bpdn_dense(a: &DMatrix<f64>, pb: &L1Problem) -> Result<DVector<f64>> {
    let n = a.ncols();
    let gram = DMatrix::identity(n, n) + a.tr_mul(a);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Precondition("I + AᵀA is not positive definite".into()))?;
    let scale = pb.y.amax().max(f64::MIN_POSITIVE);
    let mut rho = 10.0 / scale;
    let mut w = DVector::zeros(n);
    let mut aw = DVector::zeros(a.nrows());
    let mut u1 = DVector::zeros(n);
    let mut u2 = DVector::zeros(a.nrows());
    let mut x = DVector::zeros(n);
    let mut primal = f64::INFINITY;
    let mut last_check = DVector::zeros(n);
    for it in 0..pb.max_iters {
        x = soft_threshold_vec(&(&w - &u1), 1.0 / rho);
        if it % POLISH_EVERY == POLISH_EVERY - 1 {
            if same_support(&x, &last_check) {
                let col = |i: usize| a.column(i).into_owned();
                if let Some(p) = polish(&x, pb, col, |v| a.tr_mul(v), &(&u2 * rho)) {
                    return Ok(p);
                }
            }
            last_check = x.clone();
        }
        let z = project_ball(&(&aw - &u2), &pb.y, pb.xi);
        let rhs = (&x + &u1) + a.tr_mul(&(&z + &u2));
        let w_prev = w;
        w = chol.solve(&rhs);
        aw = a * &w;
        let r1 = &x - &w;
        let r2 = &z - &aw;
        u1 += &r1;
        u2 += &r2;
        primal = (r1.norm_squared() + r2.norm_squared()).sqrt();
        let dw = &w - &w_prev;
        let dual = rho * (dw.norm_squared() + (a * &dw).norm_squared()).sqrt();
        let eps_p = pb.tol * (1.0 + x.norm().max(w.norm()).max(z.norm()));
        let eps_d = pb.tol * (1.0 + rho * (u1.norm_squared() + u2.norm_squared()).sqrt());
        if primal <= eps_p && dual <= eps_d {
            let col = |i: usize| a.column(i).into_owned();
            return Ok(polish(&x, pb, col, |v| a.tr_mul(v), &(&u2 * rho)).unwrap_or(x));
        }
        let f = rebalance(&mut rho, it, primal / eps_p, dual / eps_d);
        if f != 1.0 {
            u1 /= f;
            u2 /= f;
        }
    }
    Err(Error::IterationLimit {
        iterations: pb.max_iters,
        residual: primal,
        last: LastIterate::Vector(x),
    })
}

/// Keeps entries with `|m_ij| > beta`, zeroes the rest.
pub fn hard_threshold(m: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    m.map(|x| if x.abs() > beta { x } else { 0.0 })
}

/// `{i : |x_i| > omega}`
pub fn support_threshold(x: &DVector<f64>, omega: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > omega)
        .map(|(i, _)| i)
        .collect()
}

/// Conditioning limit for `Ψ_TᵀΨ_T`.
pub const MAX_SUPPORT_CONDITION: f64 = 1e12;

/// `I_T (Ψ_TᵀΨ_T)^{-1} Ψ_Tᵀ ỹ` for `Ψ = I − P̂P̂ᵀ`.
///
/// With `Q = P̂_T` (rows `T` of the basis), `Ψ_TᵀΨ_T = I − QQᵀ` is inverted
/// through the `k x k` system `I − QᵀQ`.
pub fn ls_on_support(psi: &OrthoProjector, y_tilde: &DVector<f64>, support: &[usize]) -> Result<DVector<f64>> {
    let n = psi.n();
    if y_tilde.len() != n {
        return dim_err(format!("y has length {}, projector has n = {n}", y_tilde.len()));
    }
    if support.iter().any(|&i| i >= n) {
        return dim_err("support index out of range");
    }
    let mut xhat = DVector::zeros(n);
    if support.is_empty() {
        return Ok(xhat);
    }
    let py = psi.apply(y_tilde);
    let rhs = DVector::from_iterator(support.len(), support.iter().map(|&i| py[i]));
    let k = psi.basis.ncols();
    let sol = if k == 0 {
        rhs
    } else {
        let q = DMatrix::from_fn(support.len(), k, |a, b| psi.basis[(support[a], b)]);
        let inner = DMatrix::identity(k, k) - q.tr_mul(&q);
        let eig = inner.clone().symmetric_eigen();
        let lmin = eig.eigenvalues.min();
        let condition = if lmin <= 0.0 { f64::INFINITY } else { 1.0 / lmin.min(1.0) };
        if condition > MAX_SUPPORT_CONDITION {
            return Err(Error::IllConditionedSupport { condition });
        }
        let chol = inner
            .cholesky()
            .ok_or(Error::IllConditionedSupport { condition })?;
        let qt_rhs = q.tr_mul(&rhs);
        &rhs + &q * chol.solve(&qt_rhs)
    };
    for (a, &i) in support.iter().enumerate() {
        xhat[i] = sol[a];
    }
    Ok(xhat)
}
