//! Batch sparse + low-rank decomposition.

mod altproj;
mod pcp;

use nalgebra::DMatrix;
use serde::Serialize;

pub use altproj::{altproj, altproj_observed, AltProjConfig};
pub use pcp::{default_lambda, modified_pcp, pcp_admm, split_known, svt, PcpConfig};

/// `M ≈ L̂ + Ŝ`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlrDecomposition {
    #[serde(skip)]
    pub lhat: DMatrix<f64>,
    #[serde(skip)]
    pub shat: DMatrix<f64>,
    pub iterations_used: usize,
    /// `‖M − L̂ − Ŝ‖_F`
    pub final_residual: f64,
    /// Solver-specific per-iteration trace: the objective `‖L‖* + λ‖S‖₁` for
    /// the PCP family, the hard-threshold level for AltProj.
    pub trace: Vec<f64>,
}

pub(crate) fn residual(m: &DMatrix<f64>, l: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for ((a, b), c) in m.iter().zip(l.iter()).zip(s.iter()) {
        let d = a - b - c;
        acc += d * d;
    }
    acc.sqrt()
}

pub(crate) fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}
