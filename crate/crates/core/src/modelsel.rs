//! Choosing how many balances (or PLS components) to keep.
//!
//! Regression on the first k balance coordinates is ordinary least squares
//! with an intercept. All model sizes share one QR factorisation, since the
//! designs are nested. Cross-validation reports the per-size error averaged
//! over repeats, and the one-standard-error rule picks the smallest size
//! whose mean error is within one run-level SD of the best.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coda::{self, BalanceBasis, CompositionMatrix};
use crate::error::{Error, Result};
use crate::latent::{self, LatentModel};
use crate::pb;

/// Relative size of a QR pivot below which a design column is dependent.
const COLLINEAR_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PlsPb,
    PcaPb,
    /// Ordinary SIMPLS components instead of balances.
    Pls,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::PlsPb, Method::PcaPb, Method::Pls];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::PlsPb => "pls-pb",
            Method::PcaPb => "pca-pb",
            Method::Pls => "pls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pls-pb" => Ok(Method::PlsPb),
            "pca-pb" => Ok(Method::PcaPb),
            "pls" | "pls-raw" => Ok(Method::Pls),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rmsep,
    /// Misclassification error of 0/1 labels thresholded at 0.5.
    Me,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rmsep => "rmsep",
            Metric::Me => "me",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmsep" => Ok(Metric::Rmsep),
            "me" => Ok(Metric::Me),
            other => Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

/// Classification threshold applied to de-centred predictions.
pub const CLASS_THRESHOLD: f64 = 0.5;

pub fn rmsep(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / y.len() as f64).sqrt())
}

fn check_binary(v: &[f64]) -> Result<()> {
    match v.iter().find(|&&x| x != 0.0 && x != 1.0) {
        Some(&bad) => Err(Error::NonBinary(bad)),
        None => Ok(()),
    }
}

/// Fraction of positions where the labels differ.
pub fn misclassification_error(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    check_binary(y)?;
    check_binary(yhat)?;
    let wrong = y.iter().zip(yhat).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / y.len() as f64)
}

/// Least squares of y on the first k columns of a design, for every k at once.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedOls {
    z_mean: DVector<f64>,
    y_mean: f64,
    /// `slopes[k-1]` holds the k slopes of the size-k model.
    slopes: Vec<DVector<f64>>,
}

impl NestedOls {
    /// Fits sizes 1..=max_k. Fails with [`Error::Collinear`] if the design
    /// cannot support max_k regressors plus an intercept.
    pub fn fit(z: &DMatrix<f64>, y: &DVector<f64>, max_k: usize) -> Result<Self> {
        let n = z.nrows();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if max_k == 0 || max_k > z.ncols() {
            return Err(Error::InvalidArgument(format!(
                "model size {max_k} outside 1..={}",
                z.ncols()
            )));
        }
        if n <= max_k {
            return Err(Error::Collinear { n, k: max_k });
        }
        let mut zc = z.columns(0, max_k).into_owned();
        let z_mean = coda::column_means(&zc);
        coda::subtract_column_means(&mut zc, &z_mean);
        let y_mean = y.mean();
        let yc = y.add_scalar(-y_mean);

        let qr = zc.qr();
        let r = qr.r();
        let qty = qr.q().tr_mul(&yc);
        let scale = (0..max_k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if let Some(bad) = (0..max_k).find(|&i| r[(i, i)].abs() <= COLLINEAR_TOLERANCE * scale) {
            return Err(Error::Collinear { n, k: bad + 1 });
        }
        let slopes = (1..=max_k)
            .map(|k| {
                let rk = r.view((0, 0), (k, k));
                rk.solve_upper_triangular(&qty.rows(0, k))
                    .expect("nonzero diagonal checked above")
            })
            .collect();
        Ok(Self {
            z_mean,
            y_mean,
            slopes,
        })
    }

    pub fn max_k(&self) -> usize {
        self.slopes.len()
    }

    pub fn slopes(&self, k: usize) -> &DVector<f64> {
        &self.slopes[k - 1]
    }

    pub fn intercept(&self, k: usize) -> f64 {
        self.y_mean - self.z_mean.rows(0, k).dot(self.slopes(k))
    }

    /// Predictions of the size-k model; `z` may have more than k columns.
    pub fn predict(&self, z: &DMatrix<f64>, k: usize) -> DVector<f64> {
        let b = self.slopes(k);
        (z.columns(0, k) * b).add_scalar(self.intercept(k))
    }
}

/// Linear model on the first k balance coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceRegression {
    pub basis: BalanceBasis,
    pub intercept: f64,
    pub slopes: DVector<f64>,
}

impl BalanceRegression {
    pub fn k(&self) -> usize {
        self.slopes.len()
    }

    pub fn predict(&self, x: &CompositionMatrix) -> Result<DVector<f64>> {
        let z = self.basis.coordinates(x)?;
        Ok((z * &self.slopes).add_scalar(self.intercept))
    }
}

/// OLS of y on the first k balance coordinates, with intercept.
pub fn fit_on_balances(
    x: &CompositionMatrix,
    y: &DVector<f64>,
    basis: &BalanceBasis,
    k: usize,
) -> Result<BalanceRegression> {
    if k == 0 || k > basis.len() {
        return Err(Error::InvalidArgument(format!(
            "model size {k} outside 1..={}",
            basis.len()
        )));
    }
    let truncated = basis.truncated(k);
    let z = truncated.coordinates(x)?;
    let ols = NestedOls::fit(&z, y, k)?;
    Ok(BalanceRegression {
        intercept: ols.intercept(k),
        slopes: ols.slopes(k).clone(),
        basis: truncated,
    })
}

/// Everything fitted on one training fold.
#[derive(Debug, Clone)]
pub enum FoldModel {
    Balances { basis: BalanceBasis, ols: NestedOls },
    Pls(LatentModel),
}

impl FoldModel {
    pub fn fit(
        method: Method,
        x: &CompositionMatrix,
        y: &DVector<f64>,
        max_k: usize,
    ) -> Result<Self> {
        match method {
            Method::PlsPb | Method::PcaPb => {
                let basis = if method == Method::PlsPb {
                    pb::pls_pb(x, y)?
                } else {
                    pb::pca_pb(x)?
                };
                let basis = basis.truncated(max_k);
                let z = basis.coordinates(x)?;
                let ols = NestedOls::fit(&z, y, max_k)?;
                Ok(FoldModel::Balances { basis, ols })
            }
            Method::Pls => Ok(FoldModel::Pls(latent::pls_fit_up_to(
                &coda::clr(x),
                y,
                max_k,
            )?)),
        }
    }

    /// Predictions of every model size 1..=max_k, one column per size.
    /// PLS sizes beyond the achievable rank reuse the largest model.
    pub fn predict_all(&self, x: &CompositionMatrix, max_k: usize) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(x.n_samples(), max_k);
        match self {
            FoldModel::Balances { basis, ols } => {
                let z = basis.coordinates(x)?;
                for k in 1..=max_k {
                    out.set_column(k - 1, &ols.predict(&z, k));
                }
            }
            FoldModel::Pls(model) => {
                let mut xc = coda::clr(x).into_values();
                coda::subtract_column_means(&mut xc, &model.x_mean);
                let projected = xc * &model.weights;
                let mut acc = DVector::from_element(x.n_samples(), model.y_mean);
                for k in 1..=max_k {
                    if k <= model.n_components() {
                        acc.axpy(model.latent_coefficients[k - 1], &projected.column(k - 1), 1.0);
                    }
                    out.set_column(k - 1, &acc);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub method: Method,
    pub max_k: usize,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub method: Method,
    pub metric: Metric,
    pub folds: usize,
    pub repeats: usize,
    /// 1..=K
    pub component_counts: Vec<usize>,
    pub mean_error: Vec<f64>,
    pub sd_error: Vec<f64>,
    /// One-standard-error choice, 1-based.
    pub selected_k: usize,
    /// Error per repeat (outer) and model size (inner).
    pub per_repeat: Vec<Vec<f64>>,
}

impl CvResult {
    /// Aggregates run-level error curves into means, SDs and the 1-SE choice.
    pub fn from_runs(
        method: Method,
        metric: Metric,
        folds: usize,
        per_repeat: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let repeats = per_repeat.len();
        let max_k = per_repeat.first().map_or(0, Vec::len);
        if repeats == 0 || max_k == 0 {
            return Err(Error::EmptyInput);
        }
        let mut mean_error = Vec::with_capacity(max_k);
        let mut sd_error = Vec::with_capacity(max_k);
        for k in 0..max_k {
            let vals: Vec<f64> = per_repeat.iter().map(|r| r[k]).collect();
            let mean = vals.iter().sum::<f64>() / repeats as f64;
            let sd = if repeats > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (repeats - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            mean_error.push(mean);
            sd_error.push(sd);
        }
        let selected_k = one_se_select(&mean_error, &sd_error)?;
        Ok(Self {
            method,
            metric,
            folds,
            repeats,
            component_counts: (1..=max_k).collect(),
            mean_error,
            sd_error,
            selected_k,
            per_repeat,
        })
    }
}

/// Seeded shuffle cut into contiguous slices; the first n mod folds slices
/// get one extra row.
pub fn fold_partition(n: usize, folds: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(perm[start..start + len].to_vec());
        start += len;
    }
    out
}

/// RNG for repeat `stream` of a cross-validation seeded with `seed`.
pub fn repeat_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_cv(n: usize, d: usize, folds: usize, max_k: usize) -> Result<()> {
    if folds < 2 || n < folds {
        return Err(Error::TooFewSamples { n, folds });
    }
    let smallest_train = n - n.div_ceil(folds);
    let cap = (d - 1).min(smallest_train.saturating_sub(1));
    if max_k == 0 || max_k > cap {
        return Err(Error::InvalidArgument(format!(
            "max_k must lie in 1..={cap} for n={n}, D={d}, {folds} folds"
        )));
    }
    Ok(())
}

/// Error curve over model sizes from one pass of k-fold cross-validation.
pub fn cv_error_curve(
    x: &CompositionMatrix,
    y: &DVector<f64>,
    method: Method,
    metric: Metric,
    max_k: usize,
    partition: &[Vec<usize>],
) -> Result<Vec<f64>> {
    let n = x.n_samples();
    let mut preds = DMatrix::zeros(n, max_k);
    for test in partition {
        let mut in_test = vec![false; n];
        for &i in test {
            in_test[i] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        let x_train = x.select_rows(&train);
        let y_train = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
        let model = FoldModel::fit(method, &x_train, &y_train, max_k)?;
        let p = model.predict_all(&x.select_rows(test), max_k)?;
        for (row, &i) in test.iter().enumerate() {
            preds.set_row(i, &p.row(row));
        }
    }
    (0..max_k)
        .map(|k| {
            let col = preds.column(k);
            match metric {
                Metric::Rmsep => rmsep(y.as_slice(), col.as_slice()),
                Metric::Me => {
                    let labels: Vec<f64> = latent::threshold_scores(col.as_slice(), CLASS_THRESHOLD)
                        .into_iter()
                        .map(f64::from)
                        .collect();
                    misclassification_error(y.as_slice(), &labels)
                }
            }
        })
        .collect()
}

/// Repeated k-fold cross-validation on a fixed dataset.
///
/// Repeat r shuffles with stream r of a ChaCha8 generator seeded by
/// `config.seed`, so results do not depend on thread scheduling.
pub fn cross_validate(
    x: &CompositionMatrix,
    y: &DVector<f64>,
    config: &CvConfig,
) -> Result<CvResult> {
    let n = x.n_samples();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    check_cv(n, x.n_parts(), config.folds, config.max_k)?;
    if config.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if config.metric == Metric::Me {
        check_binary(y.as_slice())?;
    }
    let per_repeat = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = repeat_rng(config.seed, r as u64);
            let partition = fold_partition(n, config.folds, &mut rng);
            cv_error_curve(x, y, config.method, config.metric, config.max_k, &partition)
        })
        .collect::<Result<Vec<_>>>()?;
    CvResult::from_runs(config.method, config.metric, config.folds, per_repeat)
}

/// Smallest k (1-based) whose mean error is within one SD of the minimum.
pub fn one_se_select(mean_error: &[f64], sd_error: &[f64]) -> Result<usize> {
    if mean_error.is_empty() {
        return Err(Error::EmptyInput);
    }
    if mean_error.len() != sd_error.len() {
        return Err(Error::DimensionMismatch {
            expected: mean_error.len(),
            got: sd_error.len(),
        });
    }
    let best = (0..mean_error.len()).fold(0, |b, i| {
        if mean_error[i] < mean_error[b] {
            i
        } else {
            b
        }
    });
    let bound = mean_error[best] + sd_error[best];
    let k = mean_error
        .iter()
        .position(|&m| m <= bound)
        .expect("the minimum itself is within bound");
    Ok(k + 1)
}
