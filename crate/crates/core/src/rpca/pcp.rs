use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{l1_norm, residual, SlrDecomposition};
use crate::error::{dim_err, Error, LastIterate, Result};
use crate::linalg::{orthonormality_defect, thin_svd, BasisMatrix, ORTHONORMAL_TOL};
use crate::sparse::soft;

/// `1 / √max(n, d)`
pub fn default_lambda(n: usize, d: usize) -> f64 {
    1.0 / (n.max(d) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpConfig {
    pub lambda: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl PcpConfig {
    pub fn for_shape(n: usize, d: usize) -> Self {
        Self {
            lambda: default_lambda(n, d),
            tol: 1e-7,
            max_iters: 1000,
        }
    }
}

const RHO: f64 = 1.6;
const MU_GROWTH_CAP: f64 = 1e7;

/// Singular-value soft threshold `U shrink(Σ, τ) Vᵀ`.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    svt_with_norm(m, tau).0
}

/// SVT output together with its nuclear norm.
fn svt_with_norm(m: &DMatrix<f64>, tau: f64) -> (DMatrix<f64>, f64) {
    let (n, d) = m.shape();
    if n == 0 || d == 0 {
        return (m.clone(), 0.0);
    }
    let Ok((u, sigma, v)) = thin_svd(m) else {
        return (DMatrix::zeros(n, d), 0.0);
    };
    let keep = sigma.iter().take_while(|s| **s > tau).count();
    if keep == 0 {
        return (DMatrix::zeros(n, d), 0.0);
    }
    let mut us = u.columns(0, keep).into_owned();
    let mut nuc = 0.0;
    for j in 0..keep {
        let s = sigma[j] - tau;
        nuc += s;
        us.column_mut(j).scale_mut(s);
    }
    (us * v.columns(0, keep).transpose(), nuc)
}

fn shrink(m: &DMatrix<f64>, kappa: f64) -> DMatrix<f64> {
    m.map(|x| soft(x, kappa))
}

/// Principal component pursuit by the inexact augmented Lagrangian method.
pub fn pcp_admm(m: &DMatrix<f64>, lambda: f64, tol: f64, max_iters: usize) -> Result<SlrDecomposition> {
    solve(m, None, lambda, 0.0, tol, max_iters)
}

/// PCP with a known partial column space `G`: the component of `L̃` inside
/// `span(G)` is unpenalized, and `eps_noise > 0` relaxes the equality to
/// `‖M − L̃ − S̃‖_F ≤ eps_noise`.
pub fn modified_pcp(
    m: &DMatrix<f64>,
    g: &BasisMatrix,
    lambda: f64,
    eps_noise: f64,
    tol: f64,
    max_iters: usize,
) -> Result<SlrDecomposition> {
    if g.n() != m.nrows() {
        return dim_err(format!("G has {} rows, M has {}", g.n(), m.nrows()));
    }
    if g.r() > 0 && orthonormality_defect(g.as_matrix()) > ORTHONORMAL_TOL.max(1e-8) {
        return Err(Error::Precondition("G is not column-orthonormal".into()));
    }
    if !(eps_noise >= 0.0) {
        return Err(Error::InvalidConfig(format!("eps_noise = {eps_noise} must be non-negative")));
    }
    let g = if g.r() == 0 { None } else { Some(g.as_matrix()) };
    solve(m, g, lambda, eps_noise, tol, max_iters)
}

/// `(Â, L̂_new) = (GᵀL̂, (I − GGᵀ)L̂)`, so that `L̂ = GÂ + L̂_new`.
pub fn split_known(lhat: &DMatrix<f64>, g: &BasisMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = g.as_matrix().tr_mul(lhat);
    let lnew = lhat - g.as_matrix() * &a;
    (a, lnew)
}

fn solve(
    m: &DMatrix<f64>,
    g: Option<&DMatrix<f64>>,
    lambda: f64,
    eps_noise: f64,
    tol: f64,
    max_iters: usize,
) -> Result<SlrDecomposition> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("lambda = {lambda} must be positive")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tol = {tol} must be positive")));
    }
    let (n, d) = m.shape();
    let m_norm = m.norm();
    let zero = || DMatrix::zeros(n, d);
    if m_norm == 0.0 {
        return Ok(SlrDecomposition {
            lhat: zero(),
            shat: zero(),
            iterations_used: 0,
            final_residual: 0.0,
            trace: Vec::new(),
        });
    }
    let sigma1 = thin_svd(m)?.1[0];
    let inf = m.amax();
    let mut y = m / sigma1.max(inf / lambda);
    let mut mu = 1.25 / sigma1;
    let mu_max = mu * MU_GROWTH_CAP;

    let mut l = zero();
    let mut s = zero();
    let mut z = zero();
    let mut trace = Vec::new();
    let mut resid = f64::INFINITY;
    for it in 1..=max_iters {
        let x = m - &s - &z + &y / mu;
        let nuc;
        (l, nuc) = match g {
            None => svt_with_norm(&x, 1.0 / mu),
            Some(g) => {
                let inside = g * g.tr_mul(&x);
                let (out, nuc) = svt_with_norm(&(&x - &inside), 1.0 / mu);
                (inside + out, nuc)
            }
        };
        s = shrink(&(m - &l - &z + &y / mu), lambda / mu);
        if eps_noise > 0.0 {
            let target = m - &l - &s + &y / mu;
            let tn = target.norm();
            z = if tn <= eps_noise { target } else { target * (eps_noise / tn) };
        }
        let gap = m - &l - &s - &z;
        y += &gap * mu;
        mu = (mu * RHO).min(mu_max);
        trace.push(nuc + lambda * l1_norm(&s));
        resid = gap.norm() / m_norm;
        if resid <= tol {
            let final_residual = residual(m, &l, &s);
            return Ok(SlrDecomposition {
                lhat: l,
                shat: s,
                iterations_used: it,
                final_residual,
                trace,
            });
        }
    }
    let final_residual = residual(m, &l, &s);
    Err(Error::IterationLimit {
        iterations: max_iters,
        residual: resid,
        last: LastIterate::Decomposition(Box::new(SlrDecomposition {
            lhat: l,
            shat: s,
            iterations_used: max_iters,
            final_residual,
            trace,
        })),
    })
}
