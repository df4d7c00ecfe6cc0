//! Synthetic compositions with planted marker blocks.
//!
//! Pivot coordinates are drawn from N(0, Σ), back-transformed into
//! compositions, and the response is an alternating-sign combination of the
//! marker coordinates plus Gaussian noise. Marker blocks occupy the leading
//! coordinates, and pivot coordinate j isolates part j, so the first
//! `sum(block_sizes)` parts are the markers.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::coda::{self, BalanceBasis, BalanceCoefficients, CompositionMatrix};
use crate::error::{Error, Result};

/// Within-block strengths of the same-sized-blocks case, cycled by block:
/// block 1 strongest, block 2 weakest.
pub const SAME_BLOCK_STRENGTHS: [f64; 4] = [1.0, 0.4, 0.8, 0.6];

pub const MARKER_DIAGONAL: f64 = 2.0;
pub const NOISE_DIAGONAL: f64 = 1.0;
pub const OFF_DIAGONAL: f64 = 0.5;
pub const BETA_RANGE: (f64, f64) = (0.1, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioCase {
    OneBlock,
    SameSizedBlocks,
    DifferentSizedBlocks,
}

impl ScenarioCase {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioCase::OneBlock => "one-block",
            ScenarioCase::SameSizedBlocks => "same-blocks",
            ScenarioCase::DifferentSizedBlocks => "different-blocks",
        }
    }

    pub fn default_blocks(self) -> Vec<usize> {
        match self {
            ScenarioCase::OneBlock => vec![20],
            ScenarioCase::SameSizedBlocks => vec![20; 4],
            ScenarioCase::DifferentSizedBlocks => vec![30, 10, 30, 10],
        }
    }
}

impl fmt::Display for ScenarioCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-block" => Ok(ScenarioCase::OneBlock),
            "same-blocks" | "same-sized-blocks" => Ok(ScenarioCase::SameSizedBlocks),
            "different-blocks" | "different-sized-blocks" => {
                Ok(ScenarioCase::DifferentSizedBlocks)
            }
            other => Err(Error::InvalidArgument(format!("unknown scenario case '{other}'"))),
        }
    }
}

/// Where the marker regression coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSpec {
    /// Fresh U(0.1, 1) draws from the dataset's own seed.
    PerRun,
    /// U(0.1, 1) draws from a fixed seed, shared by every run.
    FixedSeed(u64),
    /// Explicit values, one per marker coordinate.
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub case: ScenarioCase,
    pub n: usize,
    pub d: usize,
    pub block_sizes: Vec<usize>,
    pub seed: u64,
    pub noise_sd: f64,
    pub beta: BetaSpec,
    /// Shrink off-diagonals instead of failing when Σ is indefinite.
    pub allow_shrink: bool,
}

impl SimScenario {
    /// n = 250, D = 100 and the case's default blocks.
    pub fn new(case: ScenarioCase, seed: u64) -> Self {
        Self {
            case,
            n: 250,
            d: 100,
            block_sizes: case.default_blocks(),
            seed,
            noise_sd: 1.0,
            beta: BetaSpec::PerRun,
            allow_shrink: false,
        }
    }

    pub fn marker_count(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.d < 3 {
            return bad(format!("need at least 3 parts, got {}", self.d));
        }
        if self.n < 1 {
            return bad("need at least one sample".into());
        }
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return bad(format!("block sizes must be positive: {:?}", self.block_sizes));
        }
        if self.case == ScenarioCase::OneBlock && self.block_sizes.len() != 1 {
            return bad("the one-block case takes exactly one block".into());
        }
        if self.marker_count() >= self.d - 1 {
            return bad(format!(
                "marker blocks ({}) must leave room for noise coordinates among D-1 = {}",
                self.marker_count(),
                self.d - 1
            ));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return bad(format!("noise_sd must be nonnegative, got {}", self.noise_sd));
        }
        if let BetaSpec::Values(v) = &self.beta {
            if v.len() != self.marker_count() {
                return Err(Error::DimensionMismatch {
                    expected: self.marker_count(),
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// The scenario for simulation run `run`, with its own derived seed.
    pub fn for_run(&self, run: u64) -> SimScenario {
        SimScenario {
            seed: derive_seed(self.seed, run),
            ..self.clone()
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for task `index` of a parent seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Off-diagonal entries before any shrinking, as (block start, size, strength, tapered).
fn block_layout(s: &SimScenario) -> Vec<(usize, usize, f64, bool)> {
    let mut start = 0;
    s.block_sizes
        .iter()
        .enumerate()
        .map(|(m, &size)| {
            let (strength, tapered) = match s.case {
                ScenarioCase::OneBlock | ScenarioCase::DifferentSizedBlocks => (1.0, false),
                ScenarioCase::SameSizedBlocks => {
                    (SAME_BLOCK_STRENGTHS[m % SAME_BLOCK_STRENGTHS.len()], true)
                }
            };
            let out = (start, size, strength, tapered);
            start += size;
            out
        })
        .collect()
}

fn sigma_with_shrink(s: &SimScenario, shrink: f64) -> DMatrix<f64> {
    let p = s.d - 1;
    let mut sigma = DMatrix::from_diagonal_element(p, p, NOISE_DIAGONAL);
    for (start, size, strength, tapered) in block_layout(s) {
        for i in start..start + size {
            sigma[(i, i)] = MARKER_DIAGONAL;
            for j in start..start + size {
                if i == j {
                    continue;
                }
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let taper = if tapered {
                    1.0 - i.abs_diff(j) as f64 / size as f64
                } else {
                    1.0
                };
                sigma[(i, j)] = shrink * OFF_DIAGONAL * strength * sign * taper;
            }
        }
    }
    sigma
}

fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    Cholesky::new(m.clone()).is_some()
}

/// Covariance of the pivot coordinates; fails if it is not positive definite.
pub fn build_sigma(s: &SimScenario) -> Result<DMatrix<f64>> {
    s.validate()?;
    let sigma = sigma_with_shrink(s, 1.0);
    if is_positive_definite(&sigma) {
        Ok(sigma)
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// Σ together with the factor applied to its off-diagonals (1 when none).
/// Shrinking only happens when the scenario allows it.
pub fn build_sigma_relaxed(s: &SimScenario) -> Result<(DMatrix<f64>, f64)> {
    match build_sigma(s) {
        Ok(sigma) => Ok((sigma, 1.0)),
        Err(Error::NotPositiveDefinite) if s.allow_shrink => {
            Ok(shrink_until_definite(|f| sigma_with_shrink(s, f)))
        }
        Err(e) => Err(e),
    }
}

/// Largest off-diagonal factor in [0, 1] (to 2^-50) keeping `build` definite.
/// `build(0)` must be definite.
fn shrink_until_definite<F: Fn(f64) -> DMatrix<f64>>(build: F) -> (DMatrix<f64>, f64) {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if is_positive_definite(&build(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (build(lo), lo)
}

/// n draws from N(0, Σ) as rows, via z = L·e with Σ = L·Lᵀ.
pub fn mvn_sample<R: Rng + ?Sized>(sigma: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    let chol = Cholesky::new(sigma.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let mut out = DMatrix::zeros(n, p);
    let mut e = DVector::zeros(p);
    for i in 0..n {
        for v in e.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        out.set_row(i, &(&l * &e).transpose());
    }
    Ok(out)
}

/// Independent seeds for the four random ingredients of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSeeds {
    pub beta: u64,
    pub markers: u64,
    pub noise_coordinates: u64,
    pub epsilon: u64,
}

impl SubSeeds {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            beta: derive_seed(seed, 0),
            markers: derive_seed(seed, 1),
            noise_coordinates: derive_seed(seed, 2),
            epsilon: derive_seed(seed, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub x: CompositionMatrix,
    pub y: DVector<f64>,
    /// The sampled pivot coordinates, n×(D-1).
    pub pivot: DMatrix<f64>,
    pub beta: Vec<f64>,
    pub epsilon: DVector<f64>,
    pub marker_mask: Vec<bool>,
    /// Off-diagonal shrink factor applied to Σ (1 when untouched).
    pub shrink: f64,
}

impl SimDataset {
    /// y - ε: the noiseless part of the response.
    pub fn signal(&self) -> DVector<f64> {
        &self.y - &self.epsilon
    }
}

pub fn simulate_dataset(s: &SimScenario) -> Result<SimDataset> {
    simulate_with_seeds(s, SubSeeds::from_seed(s.seed))
}

fn draw_betas(count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dist = Uniform::new(BETA_RANGE.0, BETA_RANGE.1).expect("valid range");
    (0..count).map(|_| rng.sample(dist)).collect()
}

/// Like [`simulate_dataset`] with explicit sub-seeds.
pub fn simulate_with_seeds(s: &SimScenario, seeds: SubSeeds) -> Result<SimDataset> {
    s.validate()?;
    let (sigma, shrink) = build_sigma_relaxed(s)?;
    let m = s.marker_count();
    let p = s.d - 1;

    let beta = match &s.beta {
        BetaSpec::PerRun => draw_betas(m, &mut ChaCha8Rng::seed_from_u64(seeds.beta)),
        BetaSpec::FixedSeed(seed) => draw_betas(m, &mut ChaCha8Rng::seed_from_u64(*seed)),
        BetaSpec::Values(v) => v.clone(),
    };

    // Σ has no coupling between marker and noise coordinates, so the two
    // groups are sampled from separate streams
    let markers = mvn_sample(
        &sigma.view((0, 0), (m, m)).into_owned(),
        s.n,
        &mut ChaCha8Rng::seed_from_u64(seeds.markers),
    )?;
    let noise = mvn_sample(
        &sigma.view((m, m), (p - m, p - m)).into_owned(),
        s.n,
        &mut ChaCha8Rng::seed_from_u64(seeds.noise_coordinates),
    )?;
    let mut pivot = DMatrix::zeros(s.n, p);
    pivot.columns_mut(0, m).copy_from(&markers);
    pivot.columns_mut(m, p - m).copy_from(&noise);

    let mut eps_rng = ChaCha8Rng::seed_from_u64(seeds.epsilon);
    let epsilon = DVector::from_fn(s.n, |_, _| {
        s.noise_sd * eps_rng.sample::<f64, _>(StandardNormal)
    });

    let weights = signed_weights(s, &beta);
    let y = &markers * &weights + &epsilon;
    let x = coda::inverse_pivot(&pivot, 1.0)?;
    let marker_mask = (0..s.d).map(|j| j < m).collect();

    Ok(SimDataset {
        x,
        y,
        pivot,
        beta,
        epsilon,
        marker_mask,
        shrink,
    })
}

/// +β on odd pivot coordinates (1-based), -β on even ones, matching the
/// sign pattern of Σ within the marker blocks.
pub fn signed_weights(s: &SimScenario, beta: &[f64]) -> DVector<f64> {
    DVector::from_fn(s.marker_count(), |g, _| if g % 2 == 0 { beta[g] } else { -beta[g] })
}

/// Which parts a balance uses, and how that lines up with the markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStats {
    pub included: Vec<bool>,
    /// Fraction of marker parts inside the balance.
    pub marker_rate: f64,
    /// Fraction of non-marker parts inside the balance.
    pub noise_rate: f64,
}

pub fn marker_recovery(balance: &BalanceCoefficients, marker_mask: &[bool]) -> Result<RecoveryStats> {
    if balance.len() != marker_mask.len() {
        return Err(Error::DimensionMismatch {
            expected: marker_mask.len(),
            got: balance.len(),
        });
    }
    let included: Vec<bool> = balance.signs().as_slice().iter().map(|&s| s != 0).collect();
    let rate = |want: bool| {
        let total = marker_mask.iter().filter(|&&m| m == want).count();
        if total == 0 {
            return 0.0;
        }
        let hit = included
            .iter()
            .zip(marker_mask)
            .filter(|&(&inc, &m)| inc && m == want)
            .count();
        hit as f64 / total as f64
    };
    Ok(RecoveryStats {
        marker_rate: rate(true),
        noise_rate: rate(false),
        included,
    })
}

/// Recovery of the first balance of a basis.
pub fn first_balance_recovery(basis: &BalanceBasis, marker_mask: &[bool]) -> Result<RecoveryStats> {
    let first = basis.balances().first().ok_or(Error::EmptyInput)?;
    marker_recovery(first, marker_mask)
}

/// Inclusion counts accumulated over simulation runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCounts {
    pub counts: Vec<usize>,
    pub runs: usize,
    pub marker_rate_sum: f64,
    pub noise_rate_sum: f64,
}

impl RecoveryCounts {
    pub fn new(d: usize) -> Self {
        Self {
            counts: vec![0; d],
            runs: 0,
            marker_rate_sum: 0.0,
            noise_rate_sum: 0.0,
        }
    }

    pub fn add(&mut self, stats: &RecoveryStats) {
        for (c, &inc) in self.counts.iter_mut().zip(&stats.included) {
            *c += usize::from(inc);
        }
        self.runs += 1;
        self.marker_rate_sum += stats.marker_rate;
        self.noise_rate_sum += stats.noise_rate;
    }

    pub fn mean_marker_rate(&self) -> f64 {
        self.marker_rate_sum / self.runs.max(1) as f64
    }

    pub fn mean_noise_rate(&self) -> f64 {
        self.noise_rate_sum / self.runs.max(1) as f64
    }
}
