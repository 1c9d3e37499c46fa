//! Matrix completion by alternating least squares, and subspace tracking
//! with missing data by rank-one geodesic steps.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Axis, Error, Result};
use crate::linalg::{incoherence, orthonormalize, principal_angle_stats, topr_svd, BasisMatrix};
use crate::rng::{stream_rng, streams};
use crate::synth::ObservationMask;

/// `Y = P_Ω(L)`: observed values, zero off the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    y: DMatrix<f64>,
    mask: ObservationMask,
}

impl MaskedMatrix {
    /// Keeps the entries of `values` on `mask` and zeroes the rest.
    pub fn new(values: &DMatrix<f64>, mask: ObservationMask) -> Result<Self> {
        if values.shape() != (mask.nrows(), mask.ncols()) {
            return dim_err(format!(
                "values are {:?}, mask is {}x{}",
                values.shape(),
                mask.nrows(),
                mask.ncols()
            ));
        }
        let y = DMatrix::from_fn(values.nrows(), values.ncols(), |i, j| {
            if mask.is_observed(i, j) {
                values[(i, j)]
            } else {
                0.0
            }
        });
        Ok(Self { y, mask })
    }

    pub fn fully_observed(values: &DMatrix<f64>) -> Self {
        Self {
            y: values.clone(),
            mask: ObservationMask::full(values.nrows(), values.ncols()),
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn nrows(&self) -> usize {
        self.y.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.y.ncols()
    }

    pub fn p_hat(&self) -> f64 {
        self.mask.fraction()
    }

    /// `‖P_Ω(Y − UVᵀ)‖_F²`
    pub fn objective(&self, f: &FactorPair) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.ncols() {
            for i in self.mask.column_indices(j) {
                let d = self.y[(i, j)] - f.u.row(i).dot(&f.v.row(j));
                acc += d * d;
            }
        }
        acc
    }

    fn restrict(&self, mask: ObservationMask) -> Self {
        Self::new(&self.y, mask).expect("same shape")
    }
}

/// `L ≈ U Vᵀ` with `U: n x r`, `V: d x r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl FactorPair {
    pub fn new(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return dim_err(format!("U has rank {}, V has rank {}", u.ncols(), v.ncols()));
        }
        Ok(Self { u, v })
    }

    pub fn product(&self) -> DMatrix<f64> {
        &self.u * self.v.transpose()
    }
}

/// Clipped spectral initialization before the final orthonormalization:
/// the top-`r` left singular vectors of `Y / p̂` with entries above
/// `2 μ √(r/n)` in magnitude set to zero.
pub fn spectral_init_clipped_raw(y: &MaskedMatrix, r: usize, mu: f64) -> Result<DMatrix<f64>> {
    check_init(y, r)?;
    clipped_top(y, r, mu)
}

fn check_init(y: &MaskedMatrix, r: usize) -> Result<()> {
    let (n, d) = (y.nrows(), y.ncols());
    if r == 0 || r > n.min(d) {
        return dim_err(format!("rank {r} not in 1..={}", n.min(d)));
    }
    if y.mask.row_counts().contains(&0) || y.mask.column_counts().contains(&0) {
        return Err(Error::Precondition("a row or column has no observations".into()));
    }
    Ok(())
}

fn clipped_top(y: &MaskedMatrix, r: usize, mu: f64) -> Result<DMatrix<f64>> {
    let n = y.nrows();
    let p = y.p_hat();
    let top = topr_svd(&(y.values() / p), r)?;
    let bound = 2.0 * mu * (r as f64 / n as f64).sqrt();
    Ok(top.u.as_matrix().map(|x| if x.abs() > bound { 0.0 } else { x }))
}

/// [`spectral_init_clipped_raw`] followed by orthonormalization.
pub fn spectral_init_clipped(y: &MaskedMatrix, r: usize, mu: f64) -> Result<BasisMatrix> {
    orthonormalize(&spectral_init_clipped_raw(y, r, mu)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltMinMode {
    /// Every half-step uses all of `Ω`.
    AllSamples,
    /// `Ω` is split at random into `2T + 1` disjoint parts: part 0 for the
    /// initialization, parts `2j+1` / `2j+2` for the `V` / `U` half-steps of
    /// sweep `j`.
    Partitioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AltMinOptions {
    pub mode: AltMinMode,
    /// Sweeps `T`; `None` means `⌈10 ln(1/tol)⌉`.
    pub sweeps: Option<usize>,
    /// Stops once `‖ΔL̂‖_F ≤ tol ‖Y‖_F` between sweeps.
    pub tol: f64,
    /// Clipping incoherence; `None` uses the incoherence of the unclipped
    /// initial basis, which makes clipping a no-op.
    pub mu: Option<f64>,
    /// Seed for the random partition.
    pub seed: u64,
}

impl Default for AltMinOptions {
    fn default() -> Self {
        Self {
            mode: AltMinMode::AllSamples,
            sweeps: None,
            tol: 1e-12,
            mu: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AltMinResult {
    pub lhat: DMatrix<f64>,
    pub factors: FactorPair,
    pub sweeps_used: usize,
    /// `‖P_Ω(Y − UVᵀ)‖_F²` after every half-sweep.
    pub objective_trace: Vec<f64>,
}

/// Least squares for one row of a factor: `argmin_x Σ_{k∈idx} (vals_k − B_k·x)²`.
/// `None` when the normal equations are singular.
fn ls_rows(b: &DMatrix<f64>, idx: &[usize], vals: impl Fn(usize) -> f64) -> Option<DVector<f64>> {
    let r = b.ncols();
    if idx.len() < r {
        return None;
    }
    let sub = DMatrix::from_fn(idx.len(), r, |a, c| b[(idx[a], c)]);
    let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&k| vals(k)));
    let gram = sub.tr_mul(&sub);
    let scale = gram.diagonal().amax();
    if scale == 0.0 {
        return None;
    }
    // QR of the tall block is better conditioned than Cholesky of its Gram
    let qr = sub.qr();
    let rr = qr.r();
    if (0..r).any(|i| rr[(i, i)].abs() <= 1e-12 * scale.sqrt()) {
        return None;
    }
    let qtb = qr.q().tr_mul(&rhs);
    rr.solve_upper_triangular(&qtb)
}

enum Missing {
    Error,
    KeepPrevious,
}

/// Solves every column of `V` (`axis = Column`) or row of `U` (`axis = Row`).
fn half_step(
    y: &MaskedMatrix,
    mask: &ObservationMask,
    fixed: &DMatrix<f64>,
    previous: &DMatrix<f64>,
    axis: Axis,
    missing: Missing,
) -> Result<DMatrix<f64>> {
    let r = fixed.ncols();
    let count = match axis {
        Axis::Column => y.ncols(),
        Axis::Row => y.nrows(),
    };
    let rows: Vec<Result<DVector<f64>>> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let (obs, sol) = match axis {
                Axis::Column => {
                    let obs = mask.column_indices(idx);
                    let sol = ls_rows(fixed, &obs, |i| y.y[(i, idx)]);
                    (obs, sol)
                }
                Axis::Row => {
                    let obs = mask.row_indices(idx);
                    let sol = ls_rows(fixed, &obs, |j| y.y[(idx, j)]);
                    (obs, sol)
                }
            };
            match (sol, obs.len() >= r, &missing) {
                (Some(s), true, _) => Ok(s),
                (_, _, Missing::KeepPrevious) => Ok(previous.row(idx).transpose()),
                (_, _, Missing::Error) => Err(Error::UnderdeterminedRow {
                    axis,
                    index: idx,
                    observed: obs.len(),
                    rank: r,
                }),
            }
        })
        .collect();
    let mut out = DMatrix::zeros(count, r);
    for (idx, row) in rows.into_iter().enumerate() {
        out.set_row(idx, &row?.transpose());
    }
    Ok(out)
}

/// Splits `Ω` uniformly at random into `parts` disjoint masks.
pub fn partition_mask(mask: &ObservationMask, parts: usize, seed: u64) -> Vec<ObservationMask> {
    let (n, d) = (mask.nrows(), mask.ncols());
    let mut out = vec![ObservationMask::from_bits(n, d, vec![false; n * d]).expect("shape"); parts];
    let mut rng = stream_rng(seed, streams::PARTITION);
    for j in 0..d {
        for i in 0..n {
            if mask.is_observed(i, j) {
                out[rng.random_range(0..parts)].set(i, j, true);
            }
        }
    }
    out
}

/// Low-rank matrix completion by alternating minimization.
pub fn mc_altmin(y: &MaskedMatrix, r: usize, opts: &AltMinOptions) -> Result<AltMinResult> {
    check_init(y, r)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tol = {} must be positive", opts.tol)));
    }
    let sweeps = opts
        .sweeps
        .unwrap_or_else(|| (10.0 * (1.0 / opts.tol).ln()).ceil().max(1.0) as usize);
    let y_norm = y.values().norm();

    let (init_data, parts) = match opts.mode {
        AltMinMode::AllSamples => (y.clone(), None),
        AltMinMode::Partitioned => {
            let per_col = y.p_hat() * y.nrows() as f64 / (2 * sweeps + 1) as f64;
            if per_col < r as f64 {
                return Err(Error::InvalidConfig(format!(
                    "{} parts leave ~{per_col:.1} samples per column for rank {r}; lower `sweeps`",
                    2 * sweeps + 1
                )));
            }
            let parts = partition_mask(y.mask(), 2 * sweeps + 1, opts.seed);
            (y.restrict(parts[0].clone()), Some(parts))
        }
    };
    let mu = match opts.mu {
        Some(mu) => mu,
        None => incoherence(&topr_svd(&(init_data.values() / init_data.p_hat()), r)?.u),
    };
    // the initialization part may leave rows empty; that only zeroes them
    let mut u = orthonormalize(&clipped_top(&init_data, r, mu)?)?.into_inner();
    let mut v = init_data.values().tr_mul(&u) / init_data.p_hat();
    let mut lhat = &u * v.transpose();
    let mut trace = Vec::new();
    let mut used = 0;
    for sweep in 0..sweeps {
        match &parts {
            None => {
                v = half_step(y, y.mask(), &u, &v, Axis::Column, Missing::Error)?;
                trace.push(y.objective(&FactorPair { u: u.clone(), v: v.clone() }));
                u = half_step(y, y.mask(), &v, &u, Axis::Row, Missing::Error)?;
            }
            Some(parts) => {
                let (pv, pu) = (&parts[2 * sweep + 1], &parts[2 * sweep + 2]);
                v = half_step(y, pv, &u, &v, Axis::Column, Missing::KeepPrevious)?;
                trace.push(y.objective(&FactorPair { u: u.clone(), v: v.clone() }));
                u = half_step(y, pu, &v, &u, Axis::Row, Missing::KeepPrevious)?;
            }
        }
        trace.push(y.objective(&FactorPair { u: u.clone(), v: v.clone() }));
        used = sweep + 1;
        let next = &u * v.transpose();
        let change = (&next - &lhat).norm();
        lhat = next;
        if change <= opts.tol * y_norm {
            break;
        }
    }
    Ok(AltMinResult {
        lhat,
        factors: FactorPair { u, v },
        sweeps_used: used,
        objective_trace: trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrouseStep {
    /// `θ = arctan(‖r‖ / ‖w‖)`
    Greedy,
    /// `θ = η ‖r‖ ‖p‖`
    Fixed { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrouseInfo {
    pub skipped: bool,
    pub theta: f64,
    pub residual_norm: f64,
}

/// `P̂ w` with `w` the least-squares fit of `y` on the rows `omega`, or
/// `None` when the restricted system is underdetermined or singular.
pub fn fit_observed(phat: &BasisMatrix, y: &DVector<f64>, omega: &[usize]) -> Option<DVector<f64>> {
    ls_rows(phat.as_matrix(), omega, |i| y[i]).map(|w| phat.as_matrix() * w)
}

/// One rank-one geodesic step of `P̂` toward the residual of `y` observed on
/// `omega`. Steps with fewer than `r` observations or a singular restricted
/// system leave `P̂` unchanged.
pub fn grouse_step(
    phat: &BasisMatrix,
    y: &DVector<f64>,
    omega: &[usize],
    step: GrouseStep,
) -> Result<(BasisMatrix, GrouseInfo)> {
    let (n, r) = (phat.n(), phat.r());
    if y.len() != n {
        return dim_err(format!("y has length {}, basis has n = {n}", y.len()));
    }
    if omega.iter().any(|&i| i >= n) {
        return dim_err("observation index out of range");
    }
    let skip = GrouseInfo {
        skipped: true,
        theta: 0.0,
        residual_norm: 0.0,
    };
    if omega.len() < r {
        return Ok((phat.clone(), skip));
    }
    let u = phat.as_matrix();
    let Some(w) = ls_rows(u, omega, |i| y[i]) else {
        return Ok((phat.clone(), skip));
    };
    let p = u * &w;
    let mut resid = DVector::zeros(n);
    for &i in omega {
        resid[i] = y[i] - p[i];
    }
    let (rn, wn, pn) = (resid.norm(), w.norm(), p.norm());
    let unchanged = GrouseInfo {
        skipped: false,
        theta: 0.0,
        residual_norm: rn,
    };
    if rn <= 1e-14 * y.norm() || wn == 0.0 || pn == 0.0 {
        return Ok((phat.clone(), unchanged));
    }
    let theta = match step {
        GrouseStep::Greedy => (rn / wn).atan(),
        GrouseStep::Fixed { eta } => eta * rn * pn,
    };
    let dir = &p * ((theta.cos() - 1.0) / pn) + &resid * (theta.sin() / rn);
    let updated = u + dir * (w.transpose() / wn);
    Ok((
        orthonormalize(&updated)?,
        GrouseInfo {
            skipped: false,
            theta,
            residual_norm: rn,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct TrackResult {
    pub phat: BasisMatrix,
    /// `Σ sin²θ_i(P̂_t, P_t)` after each step, when ground truth is supplied.
    pub eps_trace: Vec<f64>,
    pub skipped: usize,
}

/// Runs [`grouse_step`] over a stream of partially observed vectors.
/// `truth(t)` supplies the true subspace at step `t` for the error trace.
pub fn track_missing<'a, I>(
    stream: I,
    p0: BasisMatrix,
    step: GrouseStep,
    truth: Option<&dyn Fn(usize) -> &'a BasisMatrix>,
) -> Result<TrackResult>
where
    I: IntoIterator<Item = (DVector<f64>, Vec<usize>)>,
{
    let mut phat = p0;
    let mut eps_trace = Vec::new();
    let mut skipped = 0;
    for (t, (y, omega)) in stream.into_iter().enumerate() {
        let (next, info) = grouse_step(&phat, &y, &omega, step)?;
        phat = next;
        if info.skipped {
            skipped += 1;
        }
        if let Some(truth) = truth {
            eps_trace.push(principal_angle_stats(&phat, truth(t))?.eps);
        }
    }
    Ok(TrackResult {
        phat,
        eps_trace,
        skipped,
    })
}
