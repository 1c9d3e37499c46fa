//! Synthetic data models: low-rank data on fixed or piecewise-rotating
//! subspaces, bounded or Gaussian coefficients, Bernoulli and moving-object
//! outlier supports, outlier magnitudes, missing-entry masks and dense noise.
//!
//! Frame indices are 0-based throughout: `change_times[j]` is the first
//! column generated from subspace `j + 1`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::io;
use crate::linalg::{orthonormalize, rotate_subspace, BasisMatrix};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoeffModel {
    /// `L = U Vᵀ` with i.i.d. `N(0, 1/tmax)` factor entries.
    #[serde(rename = "gaussian_1_over_d")]
    Gaussian1OverD,
    /// `(a_t)_i ~ unif[-q_i, q_i]` with condition number `f`.
    BoundedUnif { f: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutlierModel {
    None,
    Bernoulli {
        rho: f64,
    },
    /// Block of `s` rows pacing over `s / c0` rows with half-period `tau`.
    /// Either `c0` (with `1/c0` integral) or the row-density knob `b0`
    /// (rounded to the nearest `1/k`) must be given.
    MovingObject {
        s: usize,
        tau: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b0: Option<f64>,
    },
}

impl OutlierModel {
    /// Resolved `c0` for the moving-object model.
    pub fn moving_object_c0(c0: Option<f64>, b0: Option<f64>) -> Result<f64> {
        match (c0, b0) {
            (Some(c), _) => Ok(c),
            (None, Some(b)) => {
                if !(b > 0.0 && b <= 1.0) {
                    return Err(Error::InvalidConfig(format!("b0 = {b} not in (0, 1]")));
                }
                Ok(1.0 / (1.0 / b).round())
            }
            (None, None) => Err(Error::InvalidConfig(
                "moving object model needs c0 or b0".into(),
            )),
        }
    }
}

/// Outlier model active from frame `start` until the next segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSegment {
    pub start: usize,
    pub model: OutlierModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MagnitudeLaw {
    /// `unif[min, max]`
    Interval { min: f64, max: f64 },
    /// `unif[-a, a]`
    Symmetric { a: f64 },
}

impl MagnitudeLaw {
    fn bounds(&self) -> Result<(f64, f64)> {
        let (lo, hi) = match *self {
            MagnitudeLaw::Interval { min, max } => (min, max),
            MagnitudeLaw::Symmetric { a } => (-a, a),
        };
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "outlier magnitude range [{lo}, {hi}] is empty"
            )));
        }
        Ok((lo, hi))
    }

    /// Smallest outlier magnitude the law can produce.
    pub fn min_abs(&self) -> f64 {
        match *self {
            MagnitudeLaw::Interval { min, max } => {
                if min <= 0.0 && max >= 0.0 {
                    0.0
                } else {
                    min.abs().min(max.abs())
                }
            }
            MagnitudeLaw::Symmetric { .. } => 0.0,
        }
    }
}

fn default_magnitude() -> MagnitudeLaw {
    MagnitudeLaw::Interval {
        min: 10.0,
        max: 20.0,
    }
}

fn default_coeffs() -> CoeffModel {
    CoeffModel::Gaussian1OverD
}

/// Complete description of one synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub id: String,
    pub n: usize,
    pub tmax: usize,
    pub r: usize,
    #[serde(default)]
    pub change_times: Vec<usize>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default = "default_coeffs")]
    pub coeff_model: CoeffModel,
    #[serde(default)]
    pub outliers: Vec<OutlierSegment>,
    #[serde(default = "default_magnitude")]
    pub magnitude: MagnitudeLaw,
    #[serde(default)]
    pub noise_variance: f64,
    #[serde(default)]
    pub t_train: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn num_changes(&self) -> usize {
        self.change_times.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.n || self.r > self.tmax {
            return dim_err(format!(
                "rank {} must satisfy 1 <= r <= min(n={}, tmax={})",
                self.r, self.n, self.tmax
            ));
        }
        if self.deltas.len() != self.change_times.len() {
            return Err(Error::InvalidConfig(format!(
                "{} change times but {} rotation magnitudes",
                self.change_times.len(),
                self.deltas.len()
            )));
        }
        let mut prev = 0;
        for &t in &self.change_times {
            if t <= prev || t >= self.tmax {
                return Err(Error::InvalidConfig(format!(
                    "change times must be strictly increasing in (0, tmax): {:?}",
                    self.change_times
                )));
            }
            prev = t;
        }
        if self.deltas.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidConfig("rotation magnitudes must be >= 0".into()));
        }
        if self.t_train > self.tmax {
            return Err(Error::InvalidConfig("t_train exceeds tmax".into()));
        }
        if let CoeffModel::BoundedUnif { f } = self.coeff_model {
            if !(f >= 1.0) {
                return Err(Error::InvalidConfig(format!("condition number f = {f} < 1")));
            }
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::InvalidConfig("noise variance must be >= 0".into()));
        }
        self.magnitude.bounds()?;
        let mut last: Option<usize> = None;
        for seg in &self.outliers {
            if seg.start >= self.tmax || last.is_some_and(|l| seg.start <= l) {
                return Err(Error::InvalidConfig(
                    "outlier segments must start at strictly increasing frames < tmax".into(),
                ));
            }
            last = Some(seg.start);
            match seg.model {
                OutlierModel::Bernoulli { rho } if !(0.0..=1.0).contains(&rho) => {
                    return Err(Error::InvalidConfig(format!("rho = {rho} not in [0, 1]")))
                }
                OutlierModel::MovingObject { s, tau, c0, b0 } => {
                    let c0 = OutlierModel::moving_object_c0(c0, b0)?;
                    check_moving_object(self.n, s, tau, c0)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Subspace index in effect at frame `t`.
    pub fn segment_of(&self, t: usize) -> usize {
        self.change_times.iter().take_while(|&&c| c <= t).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Per-column outlier index sets `T_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutlierSupport {
    n: usize,
    columns: Vec<Vec<usize>>,
}

impl OutlierSupport {
    pub fn empty(n: usize, tmax: usize) -> Self {
        Self {
            n,
            columns: vec![Vec::new(); tmax],
        }
    }

    /// Builds from per-column index lists (sorted and deduplicated here).
    pub fn from_columns(n: usize, mut columns: Vec<Vec<usize>>) -> Result<Self> {
        for col in &mut columns {
            col.sort_unstable();
            col.dedup();
            if col.last().is_some_and(|&i| i >= n) {
                return dim_err(format!("support index out of range for n = {n}"));
            }
        }
        Ok(Self { n, columns })
    }

    /// From a column-major `n x tmax` boolean mask.
    pub fn from_mask(n: usize, tmax: usize, mask: &[bool]) -> Result<Self> {
        if mask.len() != n * tmax {
            return dim_err("mask size does not match n x tmax");
        }
        let columns = (0..tmax)
            .map(|t| (0..n).filter(|&i| mask[t * n + i]).collect())
            .collect();
        Ok(Self { n, columns })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tmax(&self) -> usize {
        self.columns.len()
    }

    /// `T_t`, sorted ascending.
    pub fn column(&self, t: usize) -> &[usize] {
        &self.columns[t]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    pub fn contains(&self, i: usize, t: usize) -> bool {
        self.columns[t].binary_search(&i).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Column-major boolean mask.
    pub fn to_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n * self.tmax()];
        for (t, col) in self.columns.iter().enumerate() {
            for &i in col {
                mask[t * self.n + i] = true;
            }
        }
        mask
    }

    /// `max_t |T_t| / n`
    pub fn outfrac_col(&self) -> f64 {
        let worst = self.columns.iter().map(Vec::len).max().unwrap_or(0);
        worst as f64 / self.n as f64
    }

    /// Maximum nonzero fraction of any row within any `alpha` consecutive
    /// columns (`alpha` is clamped to `tmax`).
    pub fn outfrac_row(&self, alpha: usize) -> f64 {
        let tmax = self.tmax();
        if tmax == 0 || alpha == 0 {
            return 0.0;
        }
        let alpha = alpha.min(tmax);
        let mut best = 0usize;
        let mut counts = vec![0usize; self.n];
        for t in 0..tmax {
            for &i in &self.columns[t] {
                counts[i] += 1;
            }
            if t >= alpha {
                for &i in &self.columns[t - alpha] {
                    counts[i] -= 1;
                }
            }
            if t + 1 >= alpha {
                best = best.max(counts.iter().copied().max().unwrap_or(0));
            }
        }
        best as f64 / alpha as f64
    }

    /// Appends `other`'s columns after this support's.
    pub fn concat(mut self, other: OutlierSupport) -> Result<Self> {
        if self.n != other.n {
            return dim_err("cannot concatenate supports with different n");
        }
        self.columns.extend(other.columns);
        Ok(self)
    }

    /// Restriction to columns `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            n: self.n,
            columns: self.columns[start..end].to_vec(),
        }
    }
}

/// Observed-entry set `Ω` of an `nrows x ncols` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    nrows: usize,
    ncols: usize,
    /// column-major
    bits: Vec<bool>,
}

impl ObservationMask {
    pub fn full(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            bits: vec![true; nrows * ncols],
        }
    }

    /// From a column-major boolean vector.
    pub fn from_bits(nrows: usize, ncols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != nrows * ncols {
            return dim_err("mask size mismatch");
        }
        Ok(Self { nrows, ncols, bits })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.nrows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[j * self.nrows + i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / (self.nrows * self.ncols) as f64
    }

    /// Observed row indices of column `j`.
    pub fn column_indices(&self, j: usize) -> Vec<usize> {
        (0..self.nrows).filter(|&i| self.is_observed(i, j)).collect()
    }

    /// Observed column indices of row `i`.
    pub fn row_indices(&self, i: usize) -> Vec<usize> {
        (0..self.ncols).filter(|&j| self.is_observed(i, j)).collect()
    }

    pub fn column_counts(&self) -> Vec<usize> {
        (0..self.ncols)
            .map(|j| self.bits[j * self.nrows..(j + 1) * self.nrows].iter().filter(|&&b| b).count())
            .collect()
    }

    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.nrows];
        for j in 0..self.ncols {
            for (i, c) in counts.iter_mut().enumerate() {
                if self.is_observed(i, j) {
                    *c += 1;
                }
            }
        }
        counts
    }

    /// Columns observing fewer than `q` entries.
    pub fn columns_below(&self, q: f64) -> Vec<usize> {
        self.column_counts()
            .into_iter()
            .enumerate()
            .filter(|(_, c)| (*c as f64) < q)
            .map(|(j, _)| j)
            .collect()
    }

    /// Row-major bits, as used by the `SLRB` file format.
    pub fn to_row_major(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.bits.len());
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.push(self.is_observed(i, j));
            }
        }
        out
    }

    pub fn from_row_major(nrows: usize, ncols: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() != nrows * ncols {
            return dim_err("mask size mismatch");
        }
        let mut m = Self::full(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m.set(i, j, bits[i * ncols + j]);
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        io::write_mask(&mut f, self.nrows, self.ncols, &self.to_row_major())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(fs::File::open(path)?);
        let (r, c, bits) = io::read_mask(&mut f)?;
        Self::from_row_major(r, c, &bits)
    }
}

/// Fully materialized scenario: `M = L + S + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub config: ScenarioConfig,
    pub l: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// `P_0, …, P_J`
    pub bases: Vec<BasisMatrix>,
    /// `a_t = P_(t)ᵀ l_t`, `r x tmax`.
    pub coeffs: DMatrix<f64>,
    pub support: OutlierSupport,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    config: ScenarioConfig,
    change_times: Vec<usize>,
    seed: u64,
    files: Vec<String>,
}

impl GroundTruth {
    pub fn basis_at(&self, t: usize) -> &BasisMatrix {
        &self.bases[self.config.segment_of(t)]
    }

    /// Writes `M/L/S/V/support` and a JSON manifest into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (name, mat) in [("M", &self.m), ("L", &self.l), ("S", &self.s), ("V", &self.noise)] {
            let file = format!("{name}.slrm");
            io::save_matrix(dir.join(&file), mat)?;
            files.push(file);
        }
        for (j, p) in self.bases.iter().enumerate() {
            let file = format!("P{j}.slrm");
            io::save_matrix(dir.join(&file), p.as_matrix())?;
            files.push(file);
        }
        let mut f = std::io::BufWriter::new(fs::File::create(dir.join("support.slrb"))?);
        let n = self.support.n();
        let t = self.support.tmax();
        let col_major = self.support.to_mask();
        let row_major: Vec<bool> = (0..n * t).map(|k| col_major[(k % t) * n + k / t]).collect();
        io::write_mask(&mut f, n, t, &row_major)?;
        files.push("support.slrb".into());
        let manifest = Manifest {
            config: self.config.clone(),
            change_times: self.config.change_times.clone(),
            seed: self.config.seed,
            files,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    /// Reloads a directory written by [`GroundTruth::save`].
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let config = manifest.config;
        let l = io::load_matrix(dir.join("L.slrm"))?;
        let s = io::load_matrix(dir.join("S.slrm"))?;
        let noise = io::load_matrix(dir.join("V.slrm"))?;
        let m = io::load_matrix(dir.join("M.slrm"))?;
        let bases = (0..=config.num_changes())
            .map(|j| BasisMatrix::new(io::load_matrix(dir.join(format!("P{j}.slrm")))?))
            .collect::<Result<Vec<_>>>()?;
        let mut f = std::io::BufReader::new(fs::File::open(dir.join("support.slrb"))?);
        let (n, t, row_major) = io::read_mask(&mut f)?;
        let col_major: Vec<bool> = (0..n * t).map(|k| row_major[(k % n) * t + k / n]).collect();
        let support = OutlierSupport::from_mask(n, t, &col_major)?;
        let coeffs = coefficients_in_bases(&config, &l, &bases);
        Ok(Self {
            config,
            l,
            s,
            noise,
            m,
            bases,
            coeffs,
            support,
        })
    }
}

fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize, d: usize, sd: f64) -> DMatrix<f64> {
    let normal = Normal::new(0.0, sd).expect("finite standard deviation");
    // filled column by column so the draw order is explicit
    let mut m = DMatrix::zeros(n, d);
    for j in 0..d {
        for i in 0..n {
            m[(i, j)] = normal.sample(rng);
        }
    }
    m
}

fn gaussian_factors(n: usize, tmax: usize, r: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let sd = (1.0 / tmax as f64).sqrt();
    let u = gaussian_matrix(&mut stream_rng(seed, streams::BASIS), n, r, sd);
    let v = gaussian_matrix(&mut stream_rng(seed, streams::FACTOR_V), tmax, r, sd);
    (u, v)
}

/// ORPCA-style fixed-subspace data `L = U Vᵀ`, with `P = orth(U)`.
pub fn gen_fixed_lowrank(
    n: usize,
    tmax: usize,
    r: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, BasisMatrix)> {
    if r == 0 || r > n.min(tmax) {
        return dim_err(format!("rank {r} exceeds min(n={n}, tmax={tmax})"));
    }
    let (u, v) = gaussian_factors(n, tmax, r, seed);
    let p = orthonormalize(&u)?;
    Ok((&u * v.transpose(), p))
}

/// Skew-symmetric generator `B_j = B̃_j − B̃_jᵀ` with standard-normal `B̃_j`.
pub fn gen_skew_generator(n: usize, seed: u64, j: usize) -> DMatrix<f64> {
    let bt = gaussian_matrix(&mut stream_rng(seed, streams::ROTATION + j as u64), n, n, 1.0);
    &bt - bt.transpose()
}

/// `P_0 = orth(Gaussian)`, `P_j = orth(exp(δ_j B_j) P_{j−1})` for each entry of `deltas`.
pub fn gen_piecewise_subspaces(
    n: usize,
    r: usize,
    deltas: &[f64],
    seed: u64,
) -> Result<Vec<BasisMatrix>> {
    if r == 0 || r > n {
        return dim_err(format!("rank {r} exceeds n = {n}"));
    }
    let g = gaussian_matrix(&mut stream_rng(seed, streams::BASIS), n, r, 1.0);
    let mut bases = vec![orthonormalize(&g)?];
    for (j, &delta) in deltas.iter().enumerate() {
        let b = gen_skew_generator(n, seed, j + 1);
        let next = rotate_subspace(bases.last().unwrap(), delta, &b)?;
        bases.push(next);
    }
    Ok(bases)
}

/// Half-widths `q_i = √f − √f (i−1)/(2r)` for `i < r`, and `q_r = 1`.
pub fn bounded_coeff_halfwidths(r: usize, f: f64) -> Vec<f64> {
    let sf = f.sqrt();
    (1..=r)
        .map(|i| {
            if i == r {
                1.0
            } else {
                sf - sf * (i - 1) as f64 / (2 * r) as f64
            }
        })
        .collect()
}

/// `r x tmax` coefficients with row `i` i.i.d. `unif[-q_i, q_i]`.
pub fn gen_bounded_coeffs(r: usize, tmax: usize, f: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(f >= 1.0) {
        return Err(Error::InvalidConfig(format!("condition number f = {f} < 1")));
    }
    let q = bounded_coeff_halfwidths(r, f);
    let mut rng = stream_rng(seed, streams::COEFFS);
    let mut a = DMatrix::zeros(r, tmax);
    for t in 0..tmax {
        for i in 0..r {
            a[(i, t)] = rng.random_range(-q[i]..=q[i]);
        }
    }
    Ok(a)
}

fn bernoulli_columns<R: Rng>(rng: &mut R, n: usize, tmax: usize, rho: f64) -> Vec<Vec<usize>> {
    (0..tmax)
        .map(|_| (0..n).filter(|_| rng.random::<f64>() < rho).collect())
        .collect()
}

/// Each entry is an outlier independently with probability `rho`.
pub fn gen_bernoulli_support(n: usize, tmax: usize, rho: f64, seed: u64) -> Result<OutlierSupport> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!("rho = {rho} not in [0, 1]")));
    }
    let mut rng = stream_rng(seed, streams::SUPPORT);
    Ok(OutlierSupport {
        n,
        columns: bernoulli_columns(&mut rng, n, tmax, rho),
    })
}

/// Exactly `count` outlier positions drawn uniformly without replacement
/// from the `n x tmax` grid.
pub fn gen_uniform_support(n: usize, tmax: usize, count: usize, seed: u64) -> Result<OutlierSupport> {
    if count > n * tmax {
        return Err(Error::InvalidConfig(format!("{count} outliers exceed {n}x{tmax} entries")));
    }
    let mut rng = stream_rng(seed, streams::SUPPORT);
    let mut columns = vec![Vec::new(); tmax];
    for k in rand::seq::index::sample(&mut rng, n * tmax, count) {
        columns[k / n].push(k % n);
    }
    OutlierSupport::from_columns(n, columns)
}

fn check_moving_object(n: usize, s: usize, tau: usize, c0: f64) -> Result<usize> {
    if !(c0 > 0.0 && c0 <= 1.0) {
        return Err(Error::InvalidConfig(format!("c0 = {c0} not in (0, 1]")));
    }
    let inv = 1.0 / c0;
    let blocks = inv.round();
    if (inv - blocks).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("1/c0 = {inv} is not an integer")));
    }
    let blocks = blocks as usize;
    if s == 0 || tau == 0 {
        return Err(Error::InvalidConfig("moving object needs s >= 1 and tau >= 1".into()));
    }
    if s * blocks > n {
        return Err(Error::InvalidConfig(format!(
            "object travel s/c0 = {} exceeds n = {n}",
            s * blocks
        )));
    }
    Ok(blocks)
}

/// Moving-object support: an `s`-row block steps down through `1/c0`
/// positions over `tau` frames, back up over the next `tau`, and repeats.
pub fn gen_moving_object_support(
    n: usize,
    tmax: usize,
    s: usize,
    tau: usize,
    c0: f64,
) -> Result<OutlierSupport> {
    let blocks = check_moving_object(n, s, tau, c0)?;
    let beta = (c0 * tau as f64 - 1e-9).ceil().max(1.0) as usize;
    let block_at = |phase: usize| -> usize {
        // the last block always occupies the final beta frames of the sweep
        if phase + beta >= tau {
            blocks - 1
        } else {
            (phase / beta).min(blocks - 1)
        }
    };
    let columns = (0..tmax)
        .map(|t| {
            let p = t % (2 * tau);
            let b = if p < tau {
                block_at(p)
            } else {
                blocks - 1 - block_at(p - tau)
            };
            (b * s..(b + 1) * s).collect()
        })
        .collect();
    Ok(OutlierSupport { n, columns })
}

/// Outlier matrix with i.i.d. magnitudes from `law` on `support`.
pub fn gen_outliers(support: &OutlierSupport, law: MagnitudeLaw, seed: u64) -> Result<DMatrix<f64>> {
    let (lo, hi) = law.bounds()?;
    let mut s = DMatrix::zeros(support.n(), support.tmax());
    let mut rng = stream_rng(seed, streams::MAGNITUDE);
    let dist = Uniform::new_inclusive(lo, hi).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    for (t, col) in support.columns().iter().enumerate() {
        for &i in col {
            s[(i, t)] = dist.sample(&mut rng);
        }
    }
    Ok(s)
}

/// Each entry observed independently with probability `p`.
pub fn gen_missing_mask(n: usize, tmax: usize, p: f64, seed: u64) -> Result<ObservationMask> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "observation probability {p} not in (0, 1]"
        )));
    }
    let mut rng = stream_rng(seed, streams::MASK);
    let bits = (0..n * tmax).map(|_| rng.random::<f64>() < p).collect();
    Ok(ObservationMask {
        nrows: n,
        ncols: tmax,
        bits,
    })
}

/// Per-observation bound `q ≥ (64/3) r log²n μ log(20r)` from the partial
/// GROUSE guarantee.
pub fn grouse_sample_bound(n: usize, r: usize, mu: f64) -> f64 {
    let ln_n = (n as f64).ln();
    64.0 / 3.0 * r as f64 * ln_n * ln_n * mu * (20.0 * r as f64).ln()
}

fn coefficients_in_bases(cfg: &ScenarioConfig, l: &DMatrix<f64>, bases: &[BasisMatrix]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(cfg.r, cfg.tmax);
    for t in 0..cfg.tmax {
        let p = &bases[cfg.segment_of(t)];
        a.set_column(t, &p.as_matrix().tr_mul(&l.column(t)));
    }
    a
}

fn assemble_support(cfg: &ScenarioConfig) -> Result<OutlierSupport> {
    let mut columns = vec![Vec::new(); cfg.tmax];
    for (k, seg) in cfg.outliers.iter().enumerate() {
        let end = cfg
            .outliers
            .get(k + 1)
            .map_or(cfg.tmax, |next| next.start);
        let len = end - seg.start;
        let part = match seg.model {
            OutlierModel::None => OutlierSupport::empty(cfg.n, len),
            OutlierModel::Bernoulli { rho } => {
                let mut rng = stream_rng(cfg.seed, streams::SUPPORT + streams::SEGMENT * k as u64);
                OutlierSupport {
                    n: cfg.n,
                    columns: bernoulli_columns(&mut rng, cfg.n, len, rho),
                }
            }
            OutlierModel::MovingObject { s, tau, c0, b0 } => {
                let c0 = OutlierModel::moving_object_c0(c0, b0)?;
                gen_moving_object_support(cfg.n, len, s, tau, c0)?
            }
        };
        for (off, col) in part.columns.into_iter().enumerate() {
            columns[seg.start + off] = col;
        }
    }
    Ok(OutlierSupport { n: cfg.n, columns })
}

/// Materializes `M = L + S + V` for `config`.
pub fn assemble_scenario(config: &ScenarioConfig) -> Result<GroundTruth> {
    config.validate()?;
    let cfg = config;
    let (n, tmax, r) = (cfg.n, cfg.tmax, cfg.r);
    let (l, bases) = match cfg.coeff_model {
        CoeffModel::BoundedUnif { f } => {
            let bases = gen_piecewise_subspaces(n, r, &cfg.deltas, cfg.seed)?;
            let a = gen_bounded_coeffs(r, tmax, f, cfg.seed)?;
            let mut l = DMatrix::zeros(n, tmax);
            for t in 0..tmax {
                let p = bases[cfg.segment_of(t)].as_matrix();
                l.set_column(t, &(p * a.column(t)));
            }
            (l, bases)
        }
        CoeffModel::Gaussian1OverD => {
            let (u0, v) = gaussian_factors(n, tmax, r, cfg.seed);
            let mut factors = vec![u0];
            for (j, &delta) in cfg.deltas.iter().enumerate() {
                let b = gen_skew_generator(n, cfg.seed, j + 1);
                let next = crate::linalg::expm_action(&(b * delta), factors.last().unwrap())?;
                factors.push(next);
            }
            let bases = factors
                .iter()
                .map(orthonormalize)
                .collect::<Result<Vec<_>>>()?;
            let mut l = DMatrix::zeros(n, tmax);
            for t in 0..tmax {
                let u = &factors[cfg.segment_of(t)];
                l.set_column(t, &(u * v.row(t).transpose()));
            }
            (l, bases)
        }
    };
    let support = assemble_support(cfg)?;
    let s = gen_outliers(&support, cfg.magnitude, cfg.seed)?;
    let noise = if cfg.noise_variance > 0.0 {
        gaussian_matrix(
            &mut stream_rng(cfg.seed, streams::NOISE),
            n,
            tmax,
            cfg.noise_variance.sqrt(),
        )
    } else {
        DMatrix::zeros(n, tmax)
    };
    let m = &l + &s + &noise;
    let coeffs = coefficients_in_bases(cfg, &l, &bases);
    Ok(GroundTruth {
        config: cfg.clone(),
        l,
        s,
        noise,
        m,
        bases,
        coeffs,
        support,
    })
}

/// Column `t` of `m` as an owned vector.
pub fn column(m: &DMatrix<f64>, t: usize) -> DVector<f64> {
    m.column(t).into_owned()
}

/// Standard-normal `n x r` matrix from `(seed, stream)`.
pub fn standard_normal_matrix(n: usize, r: usize, seed: u64, stream: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, stream);
    DMatrix::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng))
}
