//! Latent-variable engines on clr data: univariate SIMPLS for regression and
//! discriminant analysis, and SVD-based PCA for the unsupervised baseline.
//!
//! Both engines centre their inputs and remember the means, so a fitted model
//! predicts directly from new compositions.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::coda::{self, ClrMatrix, CompositionMatrix};
use crate::error::{Error, Result};

/// Relative size below which a singular value or deflated vector counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;
const AXIS_CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatentKind {
    Pls,
    Pca,
}

/// A fitted PLS or PCA decomposition of centred clr data.
///
/// For PLS, `scores = Xc · weights` have unit norm and are mutually
/// orthogonal, and `latent_coefficients` regress centred y on them. For PCA,
/// scores are the plain projections and `explained` holds the eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub kind: LatentKind,
    pub weights: DMatrix<f64>,
    pub scores: DMatrix<f64>,
    pub latent_coefficients: DVector<f64>,
    pub x_mean: DVector<f64>,
    pub y_mean: f64,
    /// PLS: cov(t_a, y). PCA: component variances.
    pub explained: DVector<f64>,
}

impl LatentModel {
    pub fn n_components(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_parts(&self) -> usize {
        self.weights.nrows()
    }

    /// Regression vector in clr space, `P·v`.
    pub fn clr_coefficients(&self) -> DVector<f64> {
        &self.weights * &self.latent_coefficients
    }

    /// In-sample fitted values `y_mean + T·v`.
    pub fn fitted(&self) -> DVector<f64> {
        (&self.scores * &self.latent_coefficients).add_scalar(self.y_mean)
    }

    /// Model restricted to its first `k` components.
    pub fn truncated(&self, k: usize) -> LatentModel {
        let k = k.min(self.n_components());
        LatentModel {
            kind: self.kind,
            weights: self.weights.columns(0, k).into_owned(),
            scores: self.scores.columns(0, k).into_owned(),
            latent_coefficients: self.latent_coefficients.rows(0, k).into_owned(),
            x_mean: self.x_mean.clone(),
            y_mean: self.y_mean,
            explained: self.explained.rows(0, k).into_owned(),
        }
    }
}

fn centered_inputs(xclr: &ClrMatrix) -> (DMatrix<f64>, DVector<f64>) {
    let mut xc = xclr.values().clone();
    let mean = coda::column_means(&xc);
    coda::subtract_column_means(&mut xc, &mean);
    (xc, mean)
}

fn center_response(y: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mean = y.mean();
    let yc = y.add_scalar(-mean);
    let scale = y.amax().max(1.0);
    if yc.amax() <= 1e-12 * scale {
        return Err(Error::ConstantResponse);
    }
    Ok((yc, mean))
}

fn check_k(k: usize, n: usize, d: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("number of components must be at least 1".into()));
    }
    let cap = (d.saturating_sub(1)).min(n.saturating_sub(1));
    if k > cap {
        return Err(Error::RankDeficient {
            requested: k,
            achievable: cap,
        });
    }
    Ok(())
}

fn remove_mean(v: &mut DVector<f64>) {
    let m = v.mean();
    v.add_scalar_mut(-m);
}

/// Flips a weight column so its entry of largest magnitude is positive.
fn sign_flip_needed(w: &DVector<f64>) -> bool {
    let idx = w.iamax();
    w[idx] < 0.0
}

/// SIMPLS for a single response on clr data. Inputs are centred internally.
///
/// Fails with [`Error::RankDeficient`] if fewer than `k` components exist.
pub fn pls_fit(xclr: &ClrMatrix, y: &DVector<f64>, k: usize) -> Result<LatentModel> {
    let model = simpls(xclr, y, k)?;
    if model.n_components() < k {
        return Err(Error::RankDeficient {
            requested: k,
            achievable: model.n_components(),
        });
    }
    Ok(model)
}

/// Like [`pls_fit`] but stops quietly at the achievable rank.
pub fn pls_fit_up_to(xclr: &ClrMatrix, y: &DVector<f64>, k: usize) -> Result<LatentModel> {
    simpls(xclr, y, k)
}

fn simpls(xclr: &ClrMatrix, y: &DVector<f64>, k: usize) -> Result<LatentModel> {
    let (xc, x_mean) = centered_inputs(xclr);
    let (n, d) = xc.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    check_k(k, n, d)?;
    let (yc, y_mean) = center_response(y)?;

    let xnorm = xc.norm();
    let mut cross = xc.tr_mul(&yc);
    let cross0 = cross.norm();

    let mut weights: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut scores: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut coefs = Vec::with_capacity(k);

    for _ in 0..k {
        if cross.norm() <= RANK_TOLERANCE * cross0 {
            break;
        }
        let mut r = cross.clone();
        remove_mean(&mut r);
        let mut t = &xc * &r;
        // keep scores orthogonal in floating point; r follows t so t = Xc·r
        for _ in 0..2 {
            for (tj, rj) in scores.iter().zip(&weights) {
                let c = tj.dot(&t);
                t.axpy(-c, tj, 1.0);
                r.axpy(-c, rj, 1.0);
            }
        }
        let tn = t.norm();
        if tn <= RANK_TOLERANCE * xnorm * r.norm() || tn == 0.0 {
            break;
        }
        t /= tn;
        r /= tn;
        if sign_flip_needed(&r) {
            t.neg_mut();
            r.neg_mut();
        }
        let mut v = xc.tr_mul(&t);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let vn = v.norm();
        if vn == 0.0 {
            break;
        }
        v /= vn;
        let c = v.dot(&cross);
        cross.axpy(-c, &v, 1.0);

        coefs.push(t.dot(&yc));
        weights.push(r);
        scores.push(t);
        basis.push(v);
    }

    if weights.is_empty() {
        return Err(Error::RankDeficient {
            requested: k,
            achievable: 0,
        });
    }
    let denom = (n - 1) as f64;
    let explained = DVector::from_iterator(coefs.len(), coefs.iter().map(|q| q / denom));
    Ok(LatentModel {
        kind: LatentKind::Pls,
        weights: DMatrix::from_columns(&weights),
        scores: DMatrix::from_columns(&scores),
        latent_coefficients: DVector::from_vec(coefs),
        x_mean,
        y_mean,
        explained,
    })
}

/// Principal components of the centred clr matrix, via SVD.
pub fn pca_fit(xclr: &ClrMatrix, k: usize) -> Result<LatentModel> {
    let (xc, x_mean) = centered_inputs(xclr);
    let (n, d) = xc.shape();
    check_k(k, n, d)?;
    let (values, vectors) = principal_axes(&xc);
    let achievable = values
        .iter()
        .take_while(|&&s| s > RANK_TOLERANCE * values[0])
        .count();
    if k > achievable {
        return Err(Error::RankDeficient {
            requested: k,
            achievable,
        });
    }
    let weights = DMatrix::from_columns(&vectors[..k]);
    let scores = &xc * &weights;
    let denom = (n - 1) as f64;
    let explained = DVector::from_iterator(k, values[..k].iter().map(|s| s * s / denom));
    Ok(LatentModel {
        kind: LatentKind::Pca,
        weights,
        scores,
        latent_coefficients: DVector::zeros(k),
        x_mean,
        y_mean: 0.0,
        explained,
    })
}

/// Singular values (descending) and matching right singular vectors, each
/// with its largest-magnitude entry positive.
///
/// The SVD is checked axis by axis (||Xc·v|| must equal its singular value);
/// if any axis fails, the symmetric eigendecomposition of Xc'Xc is used.
pub(crate) fn principal_axes(xc: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let svd = SVD::new(xc.clone(), false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .zip(v_t.row_iter())
        .map(|(&s, v)| (s, v.transpose()))
        .collect();

    let top = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let consistent = pairs
        .iter()
        .all(|(s, v)| ((xc * v).norm() - s).abs() <= AXIS_CHECK_TOLERANCE * top.max(f64::MIN_POSITIVE));
    if !consistent {
        let eig = xc.tr_mul(xc).symmetric_eigen();
        pairs = eig
            .eigenvectors
            .column_iter()
            .map(|v| {
                let v = v.into_owned();
                ((xc * &v).norm(), v)
            })
            .collect();
    }

    // stable: equal values keep decomposition order
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    pairs
        .into_iter()
        .map(|(s, mut v)| {
            if sign_flip_needed(&v) {
                v.neg_mut();
            }
            (s, v)
        })
        .unzip()
}

/// ŷ = y_mean + (clr(Xnew) - x_mean)·P·v
pub fn pls_predict(model: &LatentModel, x_new: &CompositionMatrix) -> Result<DVector<f64>> {
    if x_new.n_parts() != model.n_parts() {
        return Err(Error::DimensionMismatch {
            expected: model.n_parts(),
            got: x_new.n_parts(),
        });
    }
    let mut xc = coda::clr(x_new).into_values();
    coda::subtract_column_means(&mut xc, &model.x_mean);
    Ok((xc * model.clr_coefficients()).add_scalar(model.y_mean))
}

/// PLS-DA labels: 1 where the predicted score reaches `threshold`.
pub fn classify(model: &LatentModel, x_new: &CompositionMatrix, threshold: f64) -> Result<Vec<u8>> {
    let scores = pls_predict(model, x_new)?;
    Ok(threshold_scores(scores.as_slice(), threshold))
}

pub fn threshold_scores(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= threshold)).collect()
}
