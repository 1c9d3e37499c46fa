//! Online robust subspace tracking: projected compressive sensing per frame,
//! tumbling `α`-frame subspace updates, automatic change detection, and an
//! offline smoothing pass.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, LastIterate, Result};
use crate::linalg::{topr_svd, BasisMatrix};
use crate::rpca::{altproj, AltProjConfig};
use crate::sparse::{
    l1_bpdn, ls_on_support, support_threshold, L1Problem, OrthoProjector, SensingOperator,
    DEFAULT_L1_MAX_ITERS, DEFAULT_L1_TOL,
};

/// How the CS noise bound `ξ` is chosen per frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiMode {
    Fixed { xi: f64 },
    /// `ξ_t = ‖Ψ l̂_{t−1}‖`
    Video,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NorstParams {
    pub r: usize,
    /// Updates per detected change.
    pub k: usize,
    pub alpha: usize,
    pub omega_supp: f64,
    pub xi: XiMode,
    /// Detection threshold on `σ₁²/α`; `None` means `2 ε² λ⁺` with `λ⁺` from
    /// the initialization.
    #[serde(default)]
    pub omega_evals: Option<f64>,
    pub eps: f64,
    pub t_train: usize,
    /// Per-stage iteration cap of the initial AltProj; `None` means
    /// `max(⌈10 ln r⌉, 10)`.
    #[serde(default)]
    pub init_iters: Option<usize>,
    #[serde(default = "default_l1_tol")]
    pub l1_tol: f64,
    #[serde(default = "default_l1_max_iters")]
    pub l1_max_iters: usize,
}

fn default_l1_tol() -> f64 {
    DEFAULT_L1_TOL
}

fn default_l1_max_iters() -> usize {
    DEFAULT_L1_MAX_ITERS
}

impl NorstParams {
    /// `K = ⌈ln(1/ε)⌉`, `α = ⌈max(r ln n, 60)⌉`, `ω_supp = xmin/2`,
    /// `ξ = xmin/15`.
    pub fn new(n: usize, r: usize, xmin: f64, eps: f64, t_train: usize) -> Self {
        let k = (1.0 / eps).ln().ceil().max(1.0) as usize;
        let alpha = (r as f64 * (n as f64).ln()).max(60.0).ceil() as usize;
        Self {
            r,
            k,
            alpha,
            omega_supp: xmin / 2.0,
            xi: XiMode::Fixed { xi: xmin / 15.0 },
            omega_evals: None,
            eps,
            t_train,
            init_iters: None,
            l1_tol: DEFAULT_L1_TOL,
            l1_max_iters: DEFAULT_L1_MAX_ITERS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.r == 0 {
            return bad("r must be at least 1".into());
        }
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if self.alpha < self.r {
            return bad(format!("alpha = {} < r = {}", self.alpha, self.r));
        }
        if !(self.omega_supp > 0.0) {
            return bad(format!("omega_supp = {} must be positive", self.omega_supp));
        }
        if let XiMode::Fixed { xi } = self.xi {
            if !(xi >= 0.0) {
                return bad(format!("xi = {xi} must be non-negative"));
            }
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps = {} must be positive", self.eps));
        }
        if self.t_train < self.r {
            return bad(format!("t_train = {} < r = {}", self.t_train, self.r));
        }
        Ok(())
    }

    fn init_cap(&self) -> usize {
        self.init_iters
            .unwrap_or_else(|| ((10.0 * (self.r as f64).ln()).ceil() as usize).max(10))
    }
}

/// Initial subspace from AltProj on the training frames followed by a
/// top-`r` SVD of its low-rank output. Returns `(P̂₀, λ⁺)` with
/// `λ⁺ = σ₁(L̂)² / t_train`.
pub fn norst_init(y_init: &DMatrix<f64>, r: usize, iters_per_stage: usize) -> Result<(BasisMatrix, f64)> {
    let t_train = y_init.ncols();
    if t_train < r {
        return Err(Error::Precondition(format!("t_train = {t_train} < r = {r}")));
    }
    let mut cfg = AltProjConfig::new(r);
    cfg.t_per_stage = Some(iters_per_stage);
    let dec = altproj(y_init, &cfg)?;
    let svd = topr_svd(&dec.lhat, r)?;
    let lambda_plus = svd.sigma[0] * svd.sigma[0] / t_train as f64;
    Ok((svd.u, lambda_plus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Detect,
    Update,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackerEvent {
    /// Subspace change detected; `t_hat` is this frame.
    Detected { j: usize, t_hat: usize },
    /// `k`-th update of segment `j` completed at this frame.
    Updated { j: usize, k: usize },
}

/// Result of the projected-CS recovery of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecovery {
    pub xhat: DVector<f64>,
    pub lhat: DVector<f64>,
    pub support: Vec<usize>,
    /// `‖ỹ − Ψ x̂‖`
    pub residual: f64,
    pub cs_unconverged: bool,
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub t: usize,
    pub recovery: FrameRecovery,
    pub phase: Phase,
    /// Update counter after this frame.
    pub k: usize,
    pub event: Option<TrackerEvent>,
}

/// Projected CS, support thresholding and least squares on the support for
/// one frame `m` against the current estimate `P̂`.
pub fn recover_frame(
    phat: &BasisMatrix,
    m: &DVector<f64>,
    xi: f64,
    omega_supp: f64,
    l1_tol: f64,
    l1_max_iters: usize,
) -> Result<FrameRecovery> {
    let psi = OrthoProjector::complement_of(phat);
    let y_tilde = psi.apply(m);
    let mut problem = L1Problem::new(SensingOperator::Projector(psi.clone()), y_tilde.clone(), xi);
    problem.tol = l1_tol;
    problem.max_iters = l1_max_iters;
    let (x_cs, cs_unconverged) = match l1_bpdn(&problem) {
        Ok(x) => (x, false),
        Err(Error::IterationLimit {
            last: LastIterate::Vector(x),
            ..
        }) => (x, true),
        Err(e) => return Err(e),
    };
    let support = support_threshold(&x_cs, omega_supp);
    let (xhat, ill_conditioned) = match ls_on_support(&psi, &y_tilde, &support) {
        Ok(x) => (x, false),
        Err(Error::IllConditionedSupport { .. }) => {
            let mut x = DVector::zeros(m.len());
            for &i in &support {
                x[i] = x_cs[i];
            }
            (x, true)
        }
        Err(e) => return Err(e),
    };
    let residual = (&y_tilde - psi.apply(&xhat)).norm();
    let lhat = m - &xhat;
    Ok(FrameRecovery {
        xhat,
        lhat,
        support,
        residual,
        cs_unconverged,
        ill_conditioned,
    })
}

/// One subspace estimate produced by an update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    pub t: usize,
    pub j: usize,
    pub k: usize,
    pub basis: BasisMatrix,
}

/// Online tracker state machine.
#[derive(Debug, Clone)]
pub struct Norst {
    params: NorstParams,
    phat: BasisMatrix,
    phase: Phase,
    k: usize,
    j: usize,
    buffer: VecDeque<DVector<f64>>,
    t_next: usize,
    t_hat: Vec<usize>,
    lambda_plus: f64,
    omega_evals: f64,
    last_lhat: Option<DVector<f64>>,
    updates: Vec<UpdateRecord>,
}

impl Norst {
    /// Initializes from the first `t_train` columns of `y_init`.
    pub fn initialize(params: NorstParams, y_init: &DMatrix<f64>) -> Result<Self> {
        params.validate()?;
        if y_init.ncols() != params.t_train {
            return Err(Error::Dimension(format!(
                "init block has {} frames, t_train = {}",
                y_init.ncols(),
                params.t_train
            )));
        }
        let (p0, lambda_plus) = norst_init(y_init, params.r, params.init_cap())?;
        Ok(Self::from_basis(params, p0, lambda_plus))
    }

    /// Starts tracking from a known initial estimate; the first `K` windows
    /// refine it (segment 0 starts at `t_train`).
    pub fn from_basis(params: NorstParams, p0: BasisMatrix, lambda_plus: f64) -> Self {
        let omega_evals = params
            .omega_evals
            .unwrap_or(2.0 * params.eps * params.eps * lambda_plus);
        let t0 = params.t_train;
        Self {
            buffer: VecDeque::with_capacity(params.alpha),
            phat: p0.clone(),
            phase: Phase::Update,
            k: 0,
            j: 0,
            t_next: t0,
            t_hat: vec![t0],
            lambda_plus,
            omega_evals,
            last_lhat: None,
            updates: vec![UpdateRecord { t: t0, j: 0, k: 0, basis: p0 }],
            params,
        }
    }

    pub fn params(&self) -> &NorstParams {
        &self.params
    }

    pub fn phat(&self) -> &BasisMatrix {
        &self.phat
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Updates completed in the current segment.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Current segment index (0 is the initial subspace).
    pub fn j(&self) -> usize {
        self.j
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn buffer_capacity(&self) -> usize {
        self.params.alpha
    }

    /// Detected change times; entry 0 is `t_train`.
    pub fn change_estimates(&self) -> &[usize] {
        &self.t_hat
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    pub fn omega_evals(&self) -> f64 {
        self.omega_evals
    }

    /// Every subspace estimate, starting with `P̂₀` (`k = 0`).
    pub fn updates(&self) -> &[UpdateRecord] {
        &self.updates
    }

    /// Index of the next frame to be processed.
    pub fn next_t(&self) -> usize {
        self.t_next
    }

    fn current_xi(&self) -> f64 {
        match self.params.xi {
            XiMode::Fixed { xi } => xi,
            XiMode::Video => self
                .last_lhat
                .as_ref()
                .map(|l| self.phat.project_out(l).norm())
                .unwrap_or(0.0),
        }
    }

    /// Processes the next frame.
    pub fn process(&mut self, m: &DVector<f64>) -> Result<FrameOutput> {
        if m.len() != self.phat.n() {
            return Err(Error::Dimension(format!(
                "frame has length {}, expected {}",
                m.len(),
                self.phat.n()
            )));
        }
        let t = self.t_next;
        let recovery = recover_frame(
            &self.phat,
            m,
            self.current_xi(),
            self.params.omega_supp,
            self.params.l1_tol,
            self.params.l1_max_iters,
        )?;
        self.last_lhat = Some(recovery.lhat.clone());
        self.buffer.push_back(recovery.lhat.clone());
        self.t_next += 1;

        let mut event = None;
        if self.buffer.len() == self.params.alpha {
            event = match self.phase {
                Phase::Update => {
                    self.subspace_update()?;
                    Some(TrackerEvent::Updated { j: self.j, k: self.k })
                }
                Phase::Detect => {
                    if self.detect() {
                        Some(TrackerEvent::Detected { j: self.j, t_hat: t })
                    } else {
                        None
                    }
                }
            };
            if matches!(event, Some(TrackerEvent::Updated { .. })) && self.k == self.params.k {
                self.phase = Phase::Detect;
            }
            self.buffer.clear();
        }
        Ok(FrameOutput {
            t,
            recovery,
            phase: self.phase,
            k: self.k,
            event,
        })
    }

    fn buffer_matrix(&self) -> DMatrix<f64> {
        let cols: Vec<_> = self.buffer.iter().cloned().collect();
        DMatrix::from_columns(&cols)
    }

    /// `P̂ ← SVD_r[L̂_{t;α}]`, `k ← k + 1`.
    pub fn subspace_update(&mut self) -> Result<()> {
        if self.buffer.len() < self.params.alpha {
            return Err(Error::Precondition(format!(
                "buffer holds {} of {} frames",
                self.buffer.len(),
                self.params.alpha
            )));
        }
        if self.phase != Phase::Update {
            return Err(Error::Precondition("tracker is not in the update phase".into()));
        }
        self.phat = topr_svd(&self.buffer_matrix(), self.params.r)?.u;
        self.k += 1;
        self.updates.push(UpdateRecord {
            t: self.t_next - 1,
            j: self.j,
            k: self.k,
            basis: self.phat.clone(),
        });
        Ok(())
    }

    /// `σ₁(Ψ L̂_{t;α})² / α`
    pub fn detection_statistic(&self) -> f64 {
        if self.buffer.is_empty() {
            return 0.0;
        }
        let b = self.phat.project_out_matrix(&self.buffer_matrix());
        let s = crate::linalg::spectral_norm(&b);
        s * s / self.buffer.len() as f64
    }

    /// Checks a full detect-phase window; on detection records `t̂_j` and
    /// enters the update phase.
    pub fn detect(&mut self) -> bool {
        if self.phase != Phase::Detect || self.buffer.len() < self.params.alpha {
            return false;
        }
        if self.detection_statistic() > self.omega_evals {
            self.j += 1;
            self.k = 0;
            self.phase = Phase::Update;
            self.t_hat.push(self.t_next - 1);
            true
        } else {
            false
        }
    }
}

/// Output of a full pass over a data matrix.
#[derive(Debug, Clone)]
pub struct NorstRun {
    pub t_train: usize,
    /// Estimates for every column; the first `t_train` columns come from the
    /// initialization (`L̂ = M` projected on `P̂₀`, `X̂ = M − L̂`).
    pub lhat: DMatrix<f64>,
    pub xhat: DMatrix<f64>,
    pub supports: Vec<Vec<usize>>,
    pub residuals: Vec<f64>,
    pub events: Vec<(usize, TrackerEvent)>,
    pub change_estimates: Vec<usize>,
    pub updates: Vec<UpdateRecord>,
    pub flagged_frames: Vec<usize>,
    pub omega_evals: f64,
    pub lambda_plus: f64,
}

impl NorstRun {
    /// Estimate `P̂_(t)` in force when frame `t` was processed.
    pub fn basis_used_at(&self, t: usize) -> &BasisMatrix {
        let idx = self.updates.partition_point(|u| u.t < t);
        &self.updates[idx.saturating_sub(1)].basis
    }

    /// Estimate available after frame `t` was processed.
    pub fn basis_after(&self, t: usize) -> &BasisMatrix {
        let idx = self.updates.partition_point(|u| u.t <= t);
        &self.updates[idx.saturating_sub(1)].basis
    }
}

/// Initializes on the first `t_train` columns of `m` and tracks the rest.
pub fn norst_run(m: &DMatrix<f64>, params: &NorstParams) -> Result<NorstRun> {
    norst_run_observed(m, params, |_| {})
}

/// [`norst_run`] that hands every tracked frame's output to `observer`.
pub fn norst_run_observed(
    m: &DMatrix<f64>,
    params: &NorstParams,
    mut observer: impl FnMut(&FrameOutput),
) -> Result<NorstRun> {
    let (n, d) = m.shape();
    if params.t_train > d {
        return Err(Error::Dimension(format!("t_train = {} exceeds {d} frames", params.t_train)));
    }
    let init = m.columns(0, params.t_train).into_owned();
    let mut tracker = Norst::initialize(params.clone(), &init)?;
    let mut lhat = DMatrix::zeros(n, d);
    let mut xhat = DMatrix::zeros(n, d);
    let p0 = tracker.phat().as_matrix().clone();
    let init_l = &p0 * p0.tr_mul(&init);
    lhat.columns_mut(0, params.t_train).copy_from(&init_l);
    xhat.columns_mut(0, params.t_train).copy_from(&(&init - &init_l));
    let mut supports = vec![Vec::new(); d];
    let mut residuals = vec![0.0; d];
    let mut events = Vec::new();
    let mut flagged = Vec::new();
    for t in params.t_train..d {
        let out = tracker.process(&m.column(t).into_owned())?;
        observer(&out);
        let rec = out.recovery;
        if rec.cs_unconverged || rec.ill_conditioned {
            flagged.push(t);
        }
        lhat.set_column(t, &rec.lhat);
        xhat.set_column(t, &rec.xhat);
        supports[t] = rec.support;
        residuals[t] = rec.residual;
        if let Some(e) = out.event {
            events.push((t, e));
        }
    }
    Ok(NorstRun {
        t_train: params.t_train,
        lhat,
        xhat,
        supports,
        residuals,
        events,
        change_estimates: tracker.change_estimates().to_vec(),
        updates: tracker.updates().to_vec(),
        flagged_frames: flagged,
        omega_evals: tracker.omega_evals(),
        lambda_plus: tracker.lambda_plus(),
    })
}

/// Offline smoothing. Each frame `t ≥ t_train` is re-recovered with the
/// final estimate of its segment. Frames in `[t̂_j − 2α, t̂_j + Kα)`, where the
/// true change time is ambiguous, use whichever of the final estimates of
/// segments `j − 1` and `j` leaves the smaller projected residual.
pub fn norst_offline(m: &DMatrix<f64>, run: &NorstRun, params: &NorstParams) -> Result<NorstRun> {
    let d = m.ncols();
    let segments = run.change_estimates.len();
    // a change detected less than α frames before the end has no update
    // yet; the previous estimate is still the one in force there
    let mut finals: Vec<&BasisMatrix> = Vec::with_capacity(segments);
    for j in 0..segments {
        let last = run.updates.iter().rev().find(|u| u.j == j).map(|u| &u.basis);
        finals.push(match (last, finals.last().copied()) {
            (Some(b), _) | (None, Some(b)) => b,
            (None, None) => return Err(Error::Precondition("run has no initial estimate".into())),
        });
    }
    let xi = match params.xi {
        XiMode::Fixed { xi } => Some(xi),
        XiMode::Video => None,
    };
    let mut out = run.clone();
    out.flagged_frames.clear();
    let mut prev_lhat: Option<DVector<f64>> = None;
    for t in run.t_train..d {
        let j = run.change_estimates.partition_point(|&s| s <= t).saturating_sub(1);
        let mut candidates = vec![finals[j]];
        if j + 1 < segments && t + 2 * params.alpha >= run.change_estimates[j + 1] {
            candidates.push(finals[j + 1]);
        }
        if j >= 1 && t < run.change_estimates[j] + params.k * params.alpha {
            candidates.push(finals[j - 1]);
        }
        let mt = m.column(t).into_owned();
        let mut best: Option<FrameRecovery> = None;
        for p in candidates {
            let xi_t = xi.unwrap_or_else(|| prev_lhat.as_ref().map(|l| p.project_out(l).norm()).unwrap_or(0.0));
            let rec = recover_frame(p, &mt, xi_t, params.omega_supp, params.l1_tol, params.l1_max_iters)?;
            if best.as_ref().is_none_or(|b| rec.residual < b.residual) {
                best = Some(rec);
            }
        }
        let rec = best.expect("at least one candidate");
        if rec.cs_unconverged || rec.ill_conditioned {
            out.flagged_frames.push(t);
        }
        out.lhat.set_column(t, &rec.lhat);
        out.xhat.set_column(t, &rec.xhat);
        out.residuals[t] = rec.residual;
        prev_lhat = Some(rec.lhat.clone());
        out.supports[t] = rec.support;
    }
    Ok(out)
}
