use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{residual, SlrDecomposition};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{incoherence, thin_svd, BasisMatrix};
use crate::sparse::hard_threshold;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltProjConfig {
    pub r: usize,
    pub eps: f64,
    /// Threshold scale; `None` estimates `μ r / n` from the top-`r` left
    /// singular vectors of `M` with gross entries (beyond six robust standard
    /// deviations) zeroed.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Iterations per stage; `None` means `⌈10 ln(1/eps)⌉`.
    #[serde(default)]
    pub t_per_stage: Option<usize>,
}

impl AltProjConfig {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            eps: 1e-6,
            beta: None,
            t_per_stage: None,
        }
    }

    pub fn iterations_per_stage(&self) -> usize {
        self.t_per_stage
            .unwrap_or_else(|| (10.0 * (1.0 / self.eps).ln()).ceil().max(1.0) as usize)
    }

    fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidConfig("r must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps = {} must be positive", self.eps)));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return Err(Error::InvalidConfig(format!("beta = {b} must be positive")));
            }
        }
        if self.t_per_stage == Some(0) {
            return Err(Error::InvalidConfig("t_per_stage must be at least 1".into()));
        }
        Ok(())
    }
}

/// Zeroes entries above `6 · 1.4826 · median|m_ij|`. Large outliers would
/// otherwise dominate the leading singular vectors and inflate the
/// incoherence estimate.
fn clip_gross(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut mags: Vec<f64> = m.iter().map(|x| x.abs()).collect();
    let mid = mags.len() / 2;
    let (_, med, _) = mags.select_nth_unstable_by(mid, f64::total_cmp);
    let cut = 6.0 * 1.4826 * *med;
    if cut == 0.0 {
        return m.clone();
    }
    m.map(|x| if x.abs() > cut { 0.0 } else { x })
}

/// Staged alternating projections.
pub fn altproj(m: &DMatrix<f64>, config: &AltProjConfig) -> Result<SlrDecomposition> {
    altproj_observed(m, config, |_, _, _, _| {})
}

/// [`altproj`] that reports `(stage, iteration, L̂, Ŝ)` after every iteration.
pub fn altproj_observed(
    m: &DMatrix<f64>,
    config: &AltProjConfig,
    mut observer: impl FnMut(usize, usize, &DMatrix<f64>, &DMatrix<f64>),
) -> Result<SlrDecomposition> {
    config.validate()?;
    let (n, d) = m.shape();
    if config.r > n.min(d) {
        return dim_err(format!("rank {} exceeds min({n}, {d})", config.r));
    }
    let r = config.r;
    let sigma1 = crate::linalg::spectral_norm(m);
    if sigma1 == 0.0 {
        return Ok(SlrDecomposition {
            lhat: DMatrix::zeros(n, d),
            shat: DMatrix::zeros(n, d),
            iterations_used: 0,
            final_residual: 0.0,
            trace: Vec::new(),
        });
    }
    let beta = match config.beta {
        Some(b) => b,
        None => {
            let (u, _, _) = thin_svd(&clip_gross(m))?;
            let top = BasisMatrix::new_unchecked(u.columns(0, r).into_owned());
            incoherence(&top) * r as f64 / n as f64
        }
    };
    let t_max = config.iterations_per_stage();
    let m_norm = m.norm();
    // Thresholds that decay into rounding noise would start admitting
    // residual round-off as outliers.
    let floor = 1e3 * f64::EPSILON * sigma1;

    let mut lhat = DMatrix::zeros(n, d);
    let mut shat = hard_threshold(m, beta * sigma1);
    let mut trace = vec![beta * sigma1];
    let mut iterations = 0;
    for k in 1..=r {
        for t in 0..t_max {
            let (u, sigma, v) = thin_svd(&(m - &shat))?;
            let mut us = u.columns(0, k).into_owned();
            for j in 0..k {
                us.column_mut(j).scale_mut(sigma[j]);
            }
            let lnew = us * v.columns(0, k).transpose();
            let next = sigma.get(k).copied().unwrap_or(0.0);
            let decay = 0.5f64.powi(t as i32) * sigma[k - 1];
            let zeta = (beta * (next + decay)).max(floor);
            shat = hard_threshold(&(m - &lnew), zeta);
            let change = (&lnew - &lhat).norm();
            lhat = lnew;
            iterations += 1;
            trace.push(zeta);
            observer(k, t, &lhat, &shat);
            // While the threshold is still ramping down, an unchanged L̂ only
            // means no new entry has crossed it yet.
            let ramped = beta * decay <= (beta * next).max(floor);
            if ramped && change < config.eps / 10.0 * m_norm {
                break;
            }
        }
    }
    let final_residual = residual(m, &lhat, &shat);
    Ok(SlrDecomposition {
        lhat,
        shat,
        iterations_used: iterations,
        final_residual,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormalize, rel_frobenius_error};
    use crate::synth::{gen_bernoulli_support, gen_outliers, standard_normal_matrix, MagnitudeLaw};

    fn rank_r(n: usize, d: usize, r: usize, seed: u64) -> DMatrix<f64> {
        let u = orthonormalize(&standard_normal_matrix(n, r, seed, 1)).unwrap();
        let v = orthonormalize(&standard_normal_matrix(d, r, seed, 2)).unwrap();
        let scale = DMatrix::from_fn(r, r, |i, j| if i == j { (n as f64) * (1.0 + i as f64) } else { 0.0 });
        u.as_matrix() * scale * v.as_matrix().transpose()
    }

    #[test]
    fn rejects_rank_above_dimensions() {
        let m = DMatrix::from_element(3, 5, 1.0);
        assert!(matches!(altproj(&m, &AltProjConfig::new(4)), Err(Error::Dimension(_))));
    }

    #[test]
    fn outlier_free_input_gives_empty_sparse_part() {
        let l = rank_r(30, 40, 2, 5);
        let mut cfg = AltProjConfig::new(2);
        cfg.eps = 1e-8;
        let out = altproj(&l, &cfg).unwrap();
        assert_eq!(out.shat.iter().filter(|x| **x != 0.0).count(), 0);
        assert!((&out.lhat - &l).norm() <= cfg.eps * l.norm().max(1.0));
    }

    #[test]
    fn stage_rank_never_exceeds_stage_index() {
        let l = rank_r(30, 30, 3, 8);
        let support = gen_bernoulli_support(30, 30, 0.02, 8).unwrap();
        let s = gen_outliers(&support, MagnitudeLaw::Interval { min: 10.0, max: 20.0 }, 8).unwrap();
        let mut worst_excess = 0i64;
        altproj_observed(&(&l + &s), &AltProjConfig::new(3), |k, _, lhat, _| {
            let sv = crate::linalg::singular_values(lhat);
            let rank = sv.iter().filter(|x| **x > 1e-9 * sv.max().max(1.0)).count();
            worst_excess = worst_excess.max(rank as i64 - k as i64);
        })
        .unwrap();
        assert!(worst_excess <= 0);
    }

    #[test]
    fn recovers_rank_two_with_sparse_outliers() {
        let n = 60;
        let l = rank_r(n, n, 2, 21);
        let support = gen_bernoulli_support(n, n, 0.01, 21).unwrap();
        let s = gen_outliers(&support, MagnitudeLaw::Symmetric { a: 10.0 }, 21).unwrap();
        let out = altproj(&(&l + &s), &AltProjConfig::new(2)).unwrap();
        assert!(rel_frobenius_error(&out.lhat, &l) <= 1e-4);
        for (a, b) in out.shat.iter().zip(s.iter()) {
            assert!(*a == 0.0 || *b != 0.0);
        }
    }
}
