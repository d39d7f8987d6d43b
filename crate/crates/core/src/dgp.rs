//! Simulated heteroscedastic spatial regression data.
//!
//! Sites are drawn without replacement from a square lattice. The
//! covariate is a 3×3 moving average of i.i.d. standard normal innovations
//! on the lattice padded by one ring, so every site sees a full stencil.
//! Responses follow `Y = μ(X) + σ(X)·V` with i.i.d. noise `V`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::SpatialDataset;
use crate::normal;

const STREAM_SITES: u64 = 1;
const STREAM_INNOVATIONS: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Independent generator for one component of a seeded draw.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub u0: f64,
    pub v0: f64,
    pub spacing: f64,
    pub side: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { u0: 0.3, v0: 0.6, spacing: 0.3, side: 750 }
    }
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidInput(format!("lattice spacing must be positive, got {}", self.spacing)));
        }
        if self.side < 3 {
            return Err(Error::InvalidInput(format!("lattice side must be at least 3, got {}", self.side)));
        }
        if !self.u0.is_finite() || !self.v0.is_finite() {
            return Err(Error::InvalidInput("lattice origin must be finite".into()));
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.side * self.side
    }

    pub fn site(&self, p: usize, q: usize) -> Site {
        Site { p, q, u: self.u0 + p as f64 * self.spacing, v: self.v0 + q as f64 * self.spacing }
    }
}

/// Lattice site with 0-based indices `(p, q)` and coordinates `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub p: usize,
    pub q: usize,
    pub u: f64,
    pub v: f64,
}

pub fn sample_locations(cfg: &LatticeConfig, n: usize, seed: u64) -> Result<Vec<Site>> {
    cfg.validate()?;
    let available = cfg.capacity();
    if n > available {
        return Err(Error::TooMany { requested: n, available });
    }
    let mut rng = stream_rng(seed, STREAM_SITES);
    Ok(index::sample(&mut rng, available, n).into_iter().map(|k| cfg.site(k / cfg.side, k % cfg.side)).collect())
}

/// Stencil `a_{ℓ,m}`, stored with `a[ℓ+1][m+1]`; `ℓ` shifts the `p` index and `m` the `q` index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaCoefficients {
    pub a: [[f64; 3]; 3],
}

impl Default for MaCoefficients {
    fn default() -> Self {
        MaCoefficients { a: [[0.2, 0.4, -0.8], [-0.6, -0.4, -0.2], [-0.2, 0.4, -0.6]] }
    }
}

impl MaCoefficients {
    pub fn validate(&self) -> Result<()> {
        let flat = self.a.iter().flatten();
        if flat.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("moving-average coefficients must be finite".into()));
        }
        if flat.clone().all(|v| *v == 0.0) {
            return Err(Error::InvalidInput("moving-average coefficients are all zero".into()));
        }
        Ok(())
    }

    /// `a_{ℓ,m}` for `ℓ, m ∈ {−1, 0, 1}`; zero outside the stencil.
    pub fn coef(&self, l: i64, m: i64) -> f64 {
        if l.abs() > 1 || m.abs() > 1 {
            0.0
        } else {
            self.a[(l + 1) as usize][(m + 1) as usize]
        }
    }

    /// `Var X = Σ a²`.
    pub fn marginal_variance(&self) -> f64 {
        self.a.iter().flatten().map(|v| v * v).sum()
    }

    /// `Cov(X(p, q), X(p + dp, q + dq)) = Σ a_{ℓ,m}·a_{ℓ−dp, m−dq}`.
    pub fn lag_covariance(&self, dp: i64, dq: i64) -> f64 {
        let mut s = 0.0;
        for l in -1..=1 {
            for m in -1..=1 {
                s += self.coef(l, m) * self.coef(l - dp, m - dq);
            }
        }
        s
    }
}

/// Innovations on the `(side + 2)²` padded lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationField {
    width: usize,
    values: Vec<f64>,
}

impl InnovationField {
    pub fn sample<R: Rng>(side: usize, rng: &mut R) -> Self {
        let width = side + 2;
        let values = (0..width * width).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        InnovationField { width, values }
    }

    pub fn constant(side: usize, value: f64) -> Self {
        let width = side + 2;
        InnovationField { width, values: vec![value; width * width] }
    }

    /// Field built from `f(i, j)` over padded indices `0..side + 2`.
    pub fn from_fn<F: Fn(usize, usize) -> f64>(side: usize, f: F) -> Self {
        let width = side + 2;
        let values = (0..width * width).map(|k| f(k / width, k % width)).collect();
        InnovationField { width, values }
    }

    pub fn side(&self) -> usize {
        self.width - 2
    }

    /// Innovation at lattice index `(p, q)` offset by `(l, m)`.
    #[inline]
    fn at(&self, p: usize, q: usize, l: i64, m: i64) -> f64 {
        let i = (p as i64 + 1 + l) as usize;
        let j = (q as i64 + 1 + m) as usize;
        self.values[i * self.width + j]
    }
}

pub fn spatial_ma_with_field(sites: &[Site], coef: &MaCoefficients, field: &InnovationField) -> Result<Vec<f64>> {
    let side = field.side();
    if let Some(s) = sites.iter().find(|s| s.p >= side || s.q >= side) {
        return Err(Error::InvalidInput(format!("site ({}, {}) outside lattice of side {side}", s.p, s.q)));
    }
    Ok(sites
        .iter()
        .map(|s| {
            let mut x = 0.0;
            for l in -1..=1 {
                for m in -1..=1 {
                    x += coef.coef(l, m) * field.at(s.p, s.q, l, m);
                }
            }
            x
        })
        .collect())
}

pub fn spatial_ma(sites: &[Site], coef: &MaCoefficients, side: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, STREAM_INNOVATIONS);
    let field = InnovationField::sample(side, &mut rng);
    spatial_ma_with_field(sites, coef, &field)
}

/// Polynomial `c₀ + c₁x + c₂x² + …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Polynomial { coefficients }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    #[default]
    StdNormal,
}

impl Noise {
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Noise::StdNormal => rng.sample(StandardNormal),
        }
    }

    /// `E[V⁴] − 1`.
    pub fn excess_fourth_moment(&self) -> f64 {
        match self {
            Noise::StdNormal => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub mu: Polynomial,
    pub sigma2: Polynomial,
    pub noise: Noise,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        RegressionSpec {
            mu: Polynomial::new(vec![0.1, 0.3]),
            sigma2: Polynomial::new(vec![0.2, 0.05, 0.3]),
            noise: Noise::StdNormal,
        }
    }
}

/// `y_j = μ(x_j) + √σ²(x_j)·v_j` with supplied noise.
pub fn gen_regression_with_noise(x: &[f64], spec: &RegressionSpec, noise: &[f64]) -> Result<Vec<f64>> {
    if x.len() != noise.len() {
        return Err(Error::InvalidInput("covariate and noise lengths differ".into()));
    }
    x.iter()
        .zip(noise)
        .map(|(&xj, &vj)| {
            let s2 = spec.sigma2.eval(xj);
            if s2 < 0.0 {
                return Err(Error::NegativeVariance { x: xj, value: s2 });
            }
            Ok(spec.mu.eval(xj) + s2.sqrt() * vj)
        })
        .collect()
}

pub fn gen_regression(x: &[f64], spec: &RegressionSpec, seed: u64) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, STREAM_NOISE);
    let noise: Vec<f64> = (0..x.len()).map(|_| spec.noise.draw(&mut rng)).collect();
    gen_regression_with_noise(x, spec, &noise)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeiMetrics {
    /// Largest nearest-neighbour distance.
    pub delta_n: f64,
    /// Smallest farthest-neighbour distance.
    #[serde(rename = "Delta_n")]
    pub big_delta_n: f64,
}

pub fn dei_metrics(locations: &[(f64, f64)]) -> Result<DeiMetrics> {
    let (near, far) = neighbour_extremes(locations.len(), |i, j| {
        (locations[i].0 - locations[j].0).hypot(locations[i].1 - locations[j].1)
    })?;
    Ok(DeiMetrics { delta_n: near, big_delta_n: far })
}

/// Same metrics for lattice sites, computed from integer index offsets so a
/// full lattice gives exactly `spacing`.
pub fn lattice_dei_metrics(sites: &[Site], spacing: f64) -> Result<DeiMetrics> {
    let (near, far) = neighbour_extremes(sites.len(), |i, j| {
        let dp = sites[i].p.abs_diff(sites[j].p);
        let dq = sites[i].q.abs_diff(sites[j].q);
        ((dp * dp + dq * dq) as f64).sqrt()
    })?;
    Ok(DeiMetrics { delta_n: spacing * near, big_delta_n: spacing * far })
}

// (max over i of nearest distance, min over i of farthest distance)
fn neighbour_extremes(n: usize, dist: impl Fn(usize, usize) -> f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 locations, got {n}")));
    }
    let mut nearest = vec![f64::INFINITY; n];
    let mut farthest = vec![0.0f64; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(i, j);
            if d == 0.0 {
                return Err(Error::DuplicateLocation { first: i, second: j });
            }
            nearest[i] = nearest[i].min(d);
            nearest[j] = nearest[j].min(d);
            farthest[i] = farthest[i].max(d);
            farthest[j] = farthest[j].max(d);
        }
    }
    Ok((nearest.into_iter().fold(0.0, f64::max), farthest.into_iter().fold(f64::INFINITY, f64::min)))
}

/// Full generating process: lattice, stencil and regression functions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DgpConfig {
    pub lattice: LatticeConfig,
    pub coefficients: MaCoefficients,
    pub regression: RegressionSpec,
}

#[derive(Debug, Clone)]
pub struct SimulatedSample {
    pub sites: Vec<Site>,
    pub dataset: SpatialDataset,
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.coefficients.validate()
    }

    pub fn simulate(&self, n: usize, seed: u64) -> Result<SimulatedSample> {
        self.validate()?;
        let sites = sample_locations(&self.lattice, n, seed)?;
        let x = spatial_ma(&sites, &self.coefficients, self.lattice.side, seed)?;
        let y = gen_regression(&x, &self.regression, seed)?;
        let dataset = SpatialDataset::new(sites.iter().map(|s| (s.u, s.v)).collect(), x, y)?;
        Ok(SimulatedSample { sites, dataset })
    }

    /// Marginal density of the covariate, `N(0, Σa²)`.
    pub fn covariate_density(&self, x: f64) -> f64 {
        let sd = self.coefficients.marginal_variance().sqrt();
        normal::pdf(x / sd) / sd
    }

    pub fn truths(&self, xs: &[f64]) -> Truths {
        Truths {
            mu: xs.iter().map(|&x| self.regression.mu.eval(x)).collect(),
            sigma2: xs.iter().map(|&x| self.regression.sigma2.eval(x)).collect(),
            density: xs.iter().map(|&x| self.covariate_density(x)).collect(),
            v4: self.regression.noise.excess_fourth_moment(),
        }
    }
}

/// Population curves on a design grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truths {
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub density: Vec<f64>,
    pub v4: f64,
}
