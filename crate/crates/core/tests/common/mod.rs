#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use plspb::coda::CompositionMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Log-normal composition with heterogeneous part scales.
pub fn random_composition(rng: &mut ChaCha8Rng, n: usize, d: usize) -> CompositionMatrix {
    let scales: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..1.5)).collect();
    let logs = DMatrix::from_fn(n, d, |_, j| scales[j] * rng.sample::<f64, _>(StandardNormal));
    CompositionMatrix::with_default_names(logs.map(f64::exp)).unwrap()
}

pub fn random_response(rng: &mut ChaCha8Rng, x: &CompositionMatrix) -> DVector<f64> {
    let d = x.n_parts();
    let mut a = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    a.add_scalar_mut(-a.mean());
    let noise = DVector::from_fn(x.n_samples(), |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal));
    x.log_values() * a + noise
}

pub fn random_zero_sum(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let mut a = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    a.add_scalar_mut(-a.mean());
    a
}

/// Orthonormal zero-sum basis (Helmert contrasts), D x (D-1).
pub fn helmert(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d - 1, |i, j| {
        let k = (j + 1) as f64;
        let scale = 1.0 / (k * (k + 1.0)).sqrt();
        match i.cmp(&(j + 1)) {
            std::cmp::Ordering::Less => scale,
            std::cmp::Ordering::Equal => -k * scale,
            std::cmp::Ordering::Greater => 0.0,
        }
    })
}

/// Least-squares coefficients of a full-column-rank design via Householder QR.
pub fn lstsq(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let qr = a.clone().qr();
    let qty = qr.q().tr_mul(y);
    qr.r().solve_upper_triangular(&qty).expect("full column rank")
}

fn with_ones(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = DMatrix::from_element(m.nrows(), m.ncols() + 1, 1.0);
    a.columns_mut(1, m.ncols()).copy_from(m);
    a
}

/// Minimum-norm least squares of y on clr(X) with an intercept, predicted
/// at `x_new`. Equivalent to OLS on any orthonormal log-ratio coordinates.
pub fn pinv_clr_predict(
    x: &CompositionMatrix,
    y: &DVector<f64>,
    x_new: &CompositionMatrix,
) -> DVector<f64> {
    let h = helmert(x.n_parts());
    let coef = lstsq(&with_ones(&(x.log_values() * &h)), y);
    with_ones(&(x_new.log_values() * &h)) * coef
}

/// OLS with intercept, predicted at `z_new`.
pub fn ols_predict(z: &DMatrix<f64>, y: &DVector<f64>, z_new: &DMatrix<f64>) -> DVector<f64> {
    with_ones(z_new) * lstsq(&with_ones(z), y)
}

pub fn sample_cov(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let (ma, mb) = (a.mean(), b.mean());
    a.iter().zip(b.iter()).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0)
}

/// Numeric table with a header row and a label column first.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> Table {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    Table { header, rows }
}

pub fn num(s: &str) -> f64 {
    s.parse().unwrap()
}
