//! Compositional data types and log-ratio transforms.
//!
//! A composition carries only relative information, so every transform here
//! works on logarithms of ratios between parts. Zeros are rejected outright:
//! replacing them is a modelling choice left to the caller.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An n×D table of strictly positive parts, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionMatrix {
    values: DMatrix<f64>,
    part_names: Vec<String>,
}

impl CompositionMatrix {
    /// Validates positivity and shape. At least one sample and two parts are
    /// required; fitting routines impose their own, larger, minimum on n.
    pub fn new(values: DMatrix<f64>, part_names: Vec<String>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if values.ncols() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a composition needs at least 2 parts, got {}",
                values.ncols()
            )));
        }
        if part_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                got: part_names.len(),
            });
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                let v = values[(row, col)];
                if v == 0.0 {
                    return Err(Error::ZeroPart { row, col });
                }
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidEntry { row, col });
                }
            }
        }
        Ok(Self { values, part_names })
    }

    /// Same as [`CompositionMatrix::new`] with parts labelled `V1..VD`.
    pub fn with_default_names(values: DMatrix<f64>) -> Result<Self> {
        let names = default_part_names(values.ncols());
        Self::new(values, names)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_parts(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn part_names(&self) -> &[String] {
        &self.part_names
    }

    /// Elementwise natural logarithm.
    pub fn log_values(&self) -> DMatrix<f64> {
        self.values.map(f64::ln)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(rows),
            part_names: self.part_names.clone(),
        }
    }

    /// Subcomposition on the given parts (not re-closed; log-ratios don't care).
    pub fn select_parts(&self, parts: &[usize]) -> Self {
        Self {
            values: self.values.select_columns(parts),
            part_names: parts.iter().map(|&j| self.part_names[j].clone()).collect(),
        }
    }
}

pub fn default_part_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("V{j}")).collect()
}

/// Rescales every row of a nonnegative table to sum to `total`.
pub fn closure(raw: &DMatrix<f64>, total: f64) -> Result<CompositionMatrix> {
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidArgument(format!("closure total must be positive, got {total}")));
    }
    for col in 0..raw.ncols() {
        for row in 0..raw.nrows() {
            let v = raw[(row, col)];
            if v == 0.0 {
                return Err(Error::ZeroPart { row, col });
            }
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidEntry { row, col });
            }
        }
    }
    let mut closed = raw.clone();
    for mut row in closed.row_iter_mut() {
        let sum: f64 = row.iter().sum();
        row *= total / sum;
    }
    CompositionMatrix::with_default_names(closed)
}

/// Centred log-ratio coefficients. Before column-centring every row sums to
/// zero; after centring every column mean is zero as well.
#[derive(Debug, Clone, PartialEq)]
pub struct ClrMatrix {
    values: DMatrix<f64>,
    centered: bool,
}

impl ClrMatrix {
    /// Wraps a matrix already known to be in clr space.
    pub fn from_values(values: DMatrix<f64>, centered: bool) -> Self {
        Self { values, centered }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn column_means(&self) -> DVector<f64> {
        column_means(&self.values)
    }
}

/// clr(x)_j = ln(x_j / g(x)) with g the geometric mean, computed in log space.
pub fn clr(x: &CompositionMatrix) -> ClrMatrix {
    ClrMatrix {
        values: clr_of_logs(&x.log_values()),
        centered: false,
    }
}

pub(crate) fn clr_of_logs(logs: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = logs.clone();
    let d = out.ncols() as f64;
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / d;
        row.add_scalar_mut(-mean);
    }
    out
}

pub(crate) fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

pub(crate) fn subtract_column_means(m: &mut DMatrix<f64>, means: &DVector<f64>) {
    for (mut col, mean) in m.column_iter_mut().zip(means.iter()) {
        col.add_scalar_mut(-mean);
    }
}

/// Column-centres a clr matrix. Column means of clr data form a zero-sum
/// vector, so row sums stay zero.
pub fn center_columns(m: &ClrMatrix) -> ClrMatrix {
    let mut values = m.values.clone();
    let means = column_means(&values);
    subtract_column_means(&mut values, &means);
    ClrMatrix {
        values,
        centered: true,
    }
}

/// Codes in {-1, 0, +1}: numerator, excluded, denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = signs.iter().find(|s| !matches!(s, -1..=1)) {
            return Err(Error::InvalidArgument(format!("sign code {bad} not in {{-1,0,1}}")));
        }
        if !signs.contains(&1) || !signs.contains(&-1) {
            return Err(Error::DegenerateSplit);
        }
        Ok(Self(signs))
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn numerator_count(&self) -> usize {
        self.0.iter().filter(|&&s| s == 1).count()
    }

    pub fn denominator_count(&self) -> usize {
        self.0.iter().filter(|&&s| s == -1).count()
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&s| s != 0).count()
    }

    /// Embeds a sign vector over `parts` into a length-`d` vector.
    pub fn embed(&self, parts: &[usize], d: usize) -> SignVector {
        let mut full = vec![0i8; d];
        for (&p, &s) in parts.iter().zip(&self.0) {
            full[p] = s;
        }
        SignVector(full)
    }
}

/// Normalised logcontrast weights of a single balance.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceCoefficients {
    coeffs: DVector<f64>,
    signs: SignVector,
    numerator_count: usize,
    denominator_count: usize,
}

impl BalanceCoefficients {
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        Ok(signs_to_coefficients(&SignVector::new(signs.to_vec())?))
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn signs(&self) -> &SignVector {
        &self.signs
    }

    pub fn numerator_count(&self) -> usize {
        self.numerator_count
    }

    pub fn denominator_count(&self) -> usize {
        self.denominator_count
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn numerator(&self) -> Vec<usize> {
        indices_with(&self.signs, 1)
    }

    pub fn denominator(&self) -> Vec<usize> {
        indices_with(&self.signs, -1)
    }

    pub fn excluded(&self) -> Vec<usize> {
        indices_with(&self.signs, 0)
    }

    pub fn embed(&self, parts: &[usize], d: usize) -> BalanceCoefficients {
        signs_to_coefficients(&self.signs.embed(parts, d))
    }
}

fn indices_with(signs: &SignVector, code: i8) -> Vec<usize> {
    signs
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == code)
        .map(|(i, _)| i)
        .collect()
}

/// Numerator parts get sqrt(s/((r+s)r)), denominator parts -sqrt(r/((r+s)s)).
pub fn signs_to_coefficients(signs: &SignVector) -> BalanceCoefficients {
    let r = signs.numerator_count();
    let s = signs.denominator_count();
    let (rf, sf) = (r as f64, s as f64);
    let pos = (sf / ((rf + sf) * rf)).sqrt();
    let neg = -(rf / ((rf + sf) * sf)).sqrt();
    let coeffs = DVector::from_iterator(
        signs.len(),
        signs.as_slice().iter().map(|&c| match c {
            1 => pos,
            -1 => neg,
            _ => 0.0,
        }),
    );
    BalanceCoefficients {
        coeffs,
        signs: signs.clone(),
        numerator_count: r,
        denominator_count: s,
    }
}

/// ln(X)·b. Because b sums to zero this equals clr(X)·b.
pub fn balance_values(x: &CompositionMatrix, b: &BalanceCoefficients) -> Result<DVector<f64>> {
    if b.len() != x.n_parts() {
        return Err(Error::DimensionMismatch {
            expected: x.n_parts(),
            got: b.len(),
        });
    }
    Ok(x.log_values() * b.coeffs())
}

/// What the stored per-balance scores of a basis measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisCriterion {
    /// |cov(balance, y)|, supervised bases.
    AbsCovariance,
    /// var(balance), unsupervised bases.
    Variance,
}

impl BasisCriterion {
    pub fn label(self) -> &'static str {
        match self {
            BasisCriterion::AbsCovariance => "abs_cov",
            BasisCriterion::Variance => "variance",
        }
    }
}

/// An ordered set of orthonormal balances from one sequential binary partition.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceBasis {
    balances: Vec<BalanceCoefficients>,
    scores: Vec<f64>,
    criterion: BasisCriterion,
}

impl BalanceBasis {
    pub fn new(
        balances: Vec<BalanceCoefficients>,
        scores: Vec<f64>,
        criterion: BasisCriterion,
    ) -> Result<Self> {
        if balances.len() != scores.len() {
            return Err(Error::DimensionMismatch {
                expected: balances.len(),
                got: scores.len(),
            });
        }
        if let Some(first) = balances.first() {
            let d = first.len();
            if let Some(bad) = balances.iter().find(|b| b.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: bad.len(),
                });
            }
        }
        Ok(Self {
            balances,
            scores,
            criterion,
        })
    }

    pub fn n_parts(&self) -> usize {
        self.balances.first().map_or(0, |b| b.len())
    }

    pub fn len(&self) -> usize {
        self.balances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balances.is_empty()
    }

    pub fn balances(&self) -> &[BalanceCoefficients] {
        &self.balances
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn criterion(&self) -> BasisCriterion {
        self.criterion
    }

    /// D×K coefficient matrix, one balance per column.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let d = self.n_parts();
        DMatrix::from_fn(d, self.len(), |i, j| self.balances[j].coeffs()[i])
    }

    /// D×K sign matrix, one balance per column.
    pub fn sign_matrix(&self) -> Vec<Vec<i8>> {
        let d = self.n_parts();
        (0..d)
            .map(|i| self.balances.iter().map(|b| b.signs().as_slice()[i]).collect())
            .collect()
    }

    /// The first `k` balances.
    pub fn truncated(&self, k: usize) -> BalanceBasis {
        let k = k.min(self.len());
        BalanceBasis {
            balances: self.balances[..k].to_vec(),
            scores: self.scores[..k].to_vec(),
            criterion: self.criterion,
        }
    }

    /// n×K balance coordinates of a composition.
    pub fn coordinates(&self, x: &CompositionMatrix) -> Result<DMatrix<f64>> {
        if x.n_parts() != self.n_parts() {
            return Err(Error::DimensionMismatch {
                expected: self.n_parts(),
                got: x.n_parts(),
            });
        }
        Ok(x.log_values() * self.coefficient_matrix())
    }

    /// Largest |BᵀB - I| entry.
    pub fn orthonormality_error(&self) -> f64 {
        let b = self.coefficient_matrix();
        let gram = b.transpose() * &b;
        let k = gram.nrows();
        (gram - DMatrix::identity(k, k)).amax()
    }

    /// Any two balance supports are disjoint or nested, and a nested support
    /// lies entirely on one side of the larger balance.
    pub fn is_valid_partition(&self) -> bool {
        for (i, a) in self.balances.iter().enumerate() {
            for b in &self.balances[i + 1..] {
                if !supports_compatible(a.signs().as_slice(), b.signs().as_slice()) {
                    return false;
                }
            }
        }
        true
    }
}

fn supports_compatible(a: &[i8], b: &[i8]) -> bool {
    let size = |v: &[i8]| v.iter().filter(|&&s| s != 0).count();
    let (big, small) = if size(a) >= size(b) { (a, b) } else { (b, a) };
    let overlap: Vec<i8> = big
        .iter()
        .zip(small)
        .filter(|(_, &s)| s != 0)
        .map(|(&g, _)| g)
        .collect();
    if overlap.iter().all(|&g| g == 0) {
        return true;
    }
    // nested: the small support must sit inside one group of the big balance
    overlap.iter().all(|&g| g == 1) || overlap.iter().all(|&g| g == -1)
}

fn pivot_scale(d: usize, j: usize) -> f64 {
    // j is 0-based; (D-j')/(D-j'+1) with j' = j+1
    let rest = (d - j - 1) as f64;
    (rest / (rest + 1.0)).sqrt()
}

/// Pivot coordinates: z_j = sqrt((D-j)/(D-j+1)) ln(x_j / g(x_{j+1..D})).
pub fn pivot_coordinates(x: &CompositionMatrix) -> DMatrix<f64> {
    let (n, d) = (x.n_samples(), x.n_parts());
    let logs = x.log_values();
    let mut z = DMatrix::zeros(n, d - 1);
    for i in 0..n {
        let mut tail_sum = logs[(i, d - 1)];
        for j in (0..d - 1).rev() {
            let tail_mean = tail_sum / (d - j - 1) as f64;
            z[(i, j)] = pivot_scale(d, j) * (logs[(i, j)] - tail_mean);
            tail_sum += logs[(i, j)];
        }
    }
    z
}

/// Inverse of [`pivot_coordinates`], rows closed to `total`.
pub fn inverse_pivot(z: &DMatrix<f64>, total: f64) -> Result<CompositionMatrix> {
    let (n, d) = (z.nrows(), z.ncols() + 1);
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        // clr_j = a_j z_j - sum_{k<j} a_k z_k / (D-k') with a_k the pivot scale
        let mut carried = 0.0;
        let mut row = vec![0.0; d];
        for (j, slot) in row.iter_mut().enumerate() {
            let own = if j < d - 1 {
                pivot_scale(d, j) * z[(i, j)]
            } else {
                0.0
            };
            *slot = own - carried;
            if j < d - 1 {
                carried += pivot_scale(d, j) * z[(i, j)] / (d - j - 1) as f64;
            }
        }
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|c| (c - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for (j, e) in exps.into_iter().enumerate() {
            x[(i, j)] = total * e / sum;
        }
    }
    CompositionMatrix::with_default_names(x)
}
