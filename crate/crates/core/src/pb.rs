//! Principal balances.
//!
//! Both constructions walk a sequential binary partition top-down. At each
//! node the parts' centred clr subcomposition yields a loading vector (first
//! PLS weight against the response, or first principal axis), the loading is
//! turned into a nested family of candidate sign vectors, and the candidate
//! with the largest criterion (|cov| with y, or variance) becomes the node's
//! balance. The node then splits into its numerator, denominator and excluded
//! parts; when parts were excluded a connecting balance contrasts them with
//! the included ones. A node with m parts therefore contributes m-1
//! balances, and the root D-1. Balances are finally sorted by criterion.

use nalgebra::{DMatrix, DVector};

use crate::coda::{
    self, BalanceBasis, BalanceCoefficients, BasisCriterion, CompositionMatrix, SignVector,
};
use crate::error::{Error, Result};
use crate::latent;

/// Relative margin a candidate must beat the incumbent by to replace it.
const TIE_TOLERANCE: f64 = 1e-12;
/// Relative magnitude below which a node's data or loading counts as zero.
const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// One node of the partition tree.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionNode {
    /// Global part indices, ascending.
    pub parts: Vec<usize>,
    /// The balance chosen among this node's candidates; `None` for leaves.
    pub balance: Option<BalanceCoefficients>,
    /// Excluded parts versus included parts, when the chosen balance left
    /// some parts out.
    pub connecting: Option<BalanceCoefficients>,
    pub numerator: Option<Box<PartitionNode>>,
    pub denominator: Option<Box<PartitionNode>>,
    pub excluded: Option<Box<PartitionNode>>,
    /// True when the node's loading was degenerate and the index fallback used.
    pub fallback: bool,
}

impl PartitionNode {
    fn leaf(parts: Vec<usize>) -> Self {
        Self {
            parts,
            balance: None,
            connecting: None,
            numerator: None,
            denominator: None,
            excluded: None,
            fallback: false,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.balance.is_none()
    }

    /// Number of balances in this subtree.
    pub fn balance_count(&self) -> usize {
        let own = usize::from(self.balance.is_some()) + usize::from(self.connecting.is_some());
        own + [&self.numerator, &self.denominator, &self.excluded]
            .iter()
            .filter_map(|c| c.as_ref())
            .map(|c| c.balance_count())
            .sum::<usize>()
    }
}

/// A principal-balance basis together with the tree that produced it.
#[derive(Debug, Clone)]
pub struct PbFit {
    pub basis: BalanceBasis,
    pub tree: PartitionNode,
}

/// Nested candidate sign vectors from a loading vector.
///
/// The first candidate contrasts the largest and the smallest loading; each
/// following one adds the not-yet-used entry of largest magnitude with the
/// sign of its loading. Ties go to the lower index; a zero loading counts as
/// positive.
pub fn candidate_signs(p: &[f64]) -> Result<Vec<SignVector>> {
    let d = p.len();
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 loadings, got {d}"
        )));
    }
    if !p.iter().any(|&v| v > 0.0) || !p.iter().any(|&v| v < 0.0) {
        return Err(Error::OneSidedLoading);
    }
    let argmax = (0..d).fold(0, |best, i| if p[i] > p[best] { i } else { best });
    let argmin = (0..d).fold(0, |best, i| if p[i] < p[best] { i } else { best });

    let mut rest: Vec<usize> = (0..d).filter(|&i| i != argmax && i != argmin).collect();
    rest.sort_by(|&a, &b| {
        p[b].abs()
            .partial_cmp(&p[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut signs = vec![0i8; d];
    signs[argmax] = 1;
    signs[argmin] = -1;
    let mut out = Vec::with_capacity(d - 1);
    out.push(SignVector::new(signs.clone())?);
    for i in rest {
        signs[i] = if p[i] < 0.0 { -1 } else { 1 };
        out.push(SignVector::new(signs.clone())?);
    }
    Ok(out)
}

fn sample_cov(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len();
    let (ma, mb) = (a.mean(), b.mean());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n as f64 - 1.0)
}

fn beats(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_TOLERANCE * incumbent.abs().max(f64::MIN_POSITIVE)
}

/// The candidate whose balance has the largest |cov| with `y`.
///
/// Ties (within a relative 1e-12) go to the candidate with fewer nonzero
/// parts, then to the earlier one.
pub fn best_balance(
    x_sub: &CompositionMatrix,
    y: &DVector<f64>,
    candidates: &[SignVector],
) -> Result<(BalanceCoefficients, f64)> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y.len() != x_sub.n_samples() {
        return Err(Error::DimensionMismatch {
            expected: x_sub.n_samples(),
            got: y.len(),
        });
    }
    let mut best: Option<(BalanceCoefficients, f64)> = None;
    for s in candidates {
        let b = coda::signs_to_coefficients(s);
        let cov = sample_cov(&coda::balance_values(x_sub, &b)?, y).abs();
        let replace = match &best {
            None => true,
            Some((inc, inc_cov)) => {
                beats(cov, *inc_cov)
                    || (!beats(*inc_cov, cov)
                        && s.support_size() < inc.signs().support_size())
            }
        };
        if replace {
            best = Some((b, cov));
        }
    }
    Ok(best.expect("candidates nonempty"))
}

/// PLS principal balances of `x` with respect to `y`.
pub fn pls_pb(x: &CompositionMatrix, y: &DVector<f64>) -> Result<BalanceBasis> {
    Ok(pls_pb_tree(x, y)?.basis)
}

/// PCA principal balances of `x`.
pub fn pca_pb(x: &CompositionMatrix) -> Result<BalanceBasis> {
    Ok(pca_pb_tree(x)?.basis)
}

pub fn pls_pb_tree(x: &CompositionMatrix, y: &DVector<f64>) -> Result<PbFit> {
    check_samples(x)?;
    if y.len() != x.n_samples() {
        return Err(Error::DimensionMismatch {
            expected: x.n_samples(),
            got: y.len(),
        });
    }
    let mean = y.mean();
    let yc = y.add_scalar(-mean);
    if yc.amax() <= 1e-12 * y.amax().max(1.0) {
        return Err(Error::ConstantResponse);
    }
    Builder::new(x, Some(yc)).run()
}

pub fn pca_pb_tree(x: &CompositionMatrix) -> Result<PbFit> {
    check_samples(x)?;
    Builder::new(x, None).run()
}

fn check_samples(x: &CompositionMatrix) -> Result<()> {
    if x.n_samples() < 3 {
        return Err(Error::InvalidArgument(format!(
            "principal balances need at least 3 samples, got {}",
            x.n_samples()
        )));
    }
    Ok(())
}

struct Builder {
    logs: DMatrix<f64>,
    /// Centred response for PLS-PB, absent for PCA-PB.
    response: Option<DVector<f64>>,
    d: usize,
    log_scale: f64,
}

impl Builder {
    fn new(x: &CompositionMatrix, response: Option<DVector<f64>>) -> Self {
        let logs = x.log_values();
        let log_scale = logs.amax().max(1.0);
        Self {
            d: x.n_parts(),
            logs,
            response,
            log_scale,
        }
    }

    fn criterion(&self) -> BasisCriterion {
        if self.response.is_some() {
            BasisCriterion::AbsCovariance
        } else {
            BasisCriterion::Variance
        }
    }

    fn run(self) -> Result<PbFit> {
        let all: Vec<usize> = (0..self.d).collect();
        let root_xc = self.centred_clr(&all);
        if root_xc.amax() <= DEGENERACY_TOLERANCE * self.log_scale {
            return Err(Error::DegenerateSubcomposition { parts: all });
        }
        let mut balances = Vec::with_capacity(self.d - 1);
        let tree = self.node(all, &mut balances);
        debug_assert_eq!(balances.len(), self.d - 1);

        let mut scored: Vec<(BalanceCoefficients, f64)> = balances
            .into_iter()
            .map(|b| {
                let score = self.score_full(&b);
                (b, score)
            })
            .collect();
        // stable: exact ties keep generation order
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let (balances, scores) = scored.into_iter().unzip();
        Ok(PbFit {
            basis: BalanceBasis::new(balances, scores, self.criterion())?,
            tree,
        })
    }

    fn centred_clr(&self, parts: &[usize]) -> DMatrix<f64> {
        let mut xc = coda::clr_of_logs(&self.logs.select_columns(parts));
        let means = coda::column_means(&xc);
        coda::subtract_column_means(&mut xc, &means);
        xc
    }

    /// Criterion of a full-length balance evaluated on all parts.
    fn score_full(&self, b: &BalanceCoefficients) -> f64 {
        let values = &self.logs * b.coeffs();
        self.score_values(&values.add_scalar(-values.mean()))
    }

    /// Criterion for already-centred balance values.
    fn score_values(&self, centred: &DVector<f64>) -> f64 {
        let denom = centred.len() as f64 - 1.0;
        match &self.response {
            Some(yc) => (centred.dot(yc) / denom).abs(),
            None => centred.norm_squared() / denom,
        }
    }

    /// Loading vector for the node, two-sided and zero-sum; `None` if the
    /// node carries no usable signal.
    fn loading(&self, xc: &DMatrix<f64>) -> Option<DVector<f64>> {
        if xc.amax() <= DEGENERACY_TOLERANCE * self.log_scale {
            return None;
        }
        let p = match &self.response {
            Some(yc) => {
                let p = xc.tr_mul(yc);
                if p.norm() <= DEGENERACY_TOLERANCE * xc.norm() * yc.norm() {
                    return None;
                }
                p
            }
            None => {
                let (values, mut vectors) = latent::principal_axes(xc);
                if values.first().is_none_or(|&s| s <= 0.0) {
                    return None;
                }
                vectors.swap_remove(0)
            }
        };
        let centred = p.add_scalar(-p.mean());
        if centred.amax() <= DEGENERACY_TOLERANCE * p.amax() {
            return None;
        }
        Some(centred)
    }

    fn node(&self, parts: Vec<usize>, out: &mut Vec<BalanceCoefficients>) -> PartitionNode {
        let m = parts.len();
        if m < 2 {
            return PartitionNode::leaf(parts);
        }
        let xc = self.centred_clr(&parts);
        let (loading, fallback) = match self.loading(&xc) {
            Some(p) => (p, false),
            None => (index_loading(m), true),
        };
        let candidates = candidate_signs(loading.as_slice())
            .expect("centred nonzero loading has both signs");
        let mut local = self.select(&xc, &candidates);
        if self.response.is_none() {
            local = canonical_orientation(local);
        }
        let chosen = local.embed(&parts, self.d);

        let pick = |idx: Vec<usize>| -> Vec<usize> { idx.into_iter().map(|i| parts[i]).collect() };
        let numerator = pick(local.numerator());
        let denominator = pick(local.denominator());
        let excluded = pick(local.excluded());

        out.push(chosen.clone());
        let connecting = if excluded.is_empty() {
            None
        } else {
            let mut signs = vec![0i8; self.d];
            for &i in &excluded {
                signs[i] = 1;
            }
            for &i in numerator.iter().chain(&denominator) {
                signs[i] = -1;
            }
            let b = coda::signs_to_coefficients(
                &SignVector::new(signs).expect("both groups nonempty"),
            );
            out.push(b.clone());
            Some(b)
        };

        let excluded_node = (!excluded.is_empty()).then(|| Box::new(self.node(excluded, out)));
        let numerator_node = Box::new(self.node(numerator, out));
        let denominator_node = Box::new(self.node(denominator, out));

        PartitionNode {
            parts,
            balance: Some(chosen),
            connecting,
            numerator: Some(numerator_node),
            denominator: Some(denominator_node),
            excluded: excluded_node,
            fallback,
        }
    }

    /// Best candidate on the node's centred clr columns. Candidates are
    /// nested, so balance values are updated incrementally.
    fn select(&self, xc: &DMatrix<f64>, candidates: &[SignVector]) -> BalanceCoefficients {
        let n = xc.nrows();
        let mut num_sum = DVector::zeros(n);
        let mut den_sum = DVector::zeros(n);
        let mut prev = vec![0i8; xc.ncols()];
        let (mut r, mut s) = (0usize, 0usize);
        let mut best: Option<(usize, f64)> = None;

        for (idx, cand) in candidates.iter().enumerate() {
            for (j, (&now, was)) in cand.as_slice().iter().zip(prev.iter_mut()).enumerate() {
                if now != *was {
                    match now {
                        1 => {
                            num_sum += xc.column(j);
                            r += 1;
                        }
                        -1 => {
                            den_sum += xc.column(j);
                            s += 1;
                        }
                        _ => unreachable!("candidates only add parts"),
                    }
                    *was = now;
                }
            }
            let (rf, sf) = (r as f64, s as f64);
            let scale = (rf * sf / (rf + sf)).sqrt();
            let values = (&num_sum / rf - &den_sum / sf) * scale;
            let score = self.score_values(&values);
            // candidates grow by one part each, so the earlier one is also
            // the sparser one on ties
            if best.is_none_or(|(_, b)| beats(score, b)) {
                best = Some((idx, score));
            }
        }
        let (idx, _) = best.expect("at least one candidate");
        coda::signs_to_coefficients(&candidates[idx])
    }
}

/// Variance ignores a balance's sign, so PCA-PB orients every balance with
/// its lowest-indexed part in the numerator.
fn canonical_orientation(b: BalanceCoefficients) -> BalanceCoefficients {
    match b.signs().as_slice().iter().find(|&&s| s != 0) {
        Some(-1) => {
            let flipped: Vec<i8> = b.signs().as_slice().iter().map(|s| -s).collect();
            BalanceCoefficients::from_signs(&flipped).expect("negation keeps both groups")
        }
        _ => b,
    }
}

/// Deterministic stand-in loading for degenerate nodes: strictly decreasing
/// and zero-sum, so the first candidate contrasts the first and last part.
fn index_loading(m: usize) -> DVector<f64> {
    let mid = (m as f64 - 1.0) / 2.0;
    DVector::from_fn(m, |i, _| mid - i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_comp(n: usize, d: usize, seed: u64) -> CompositionMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, d, |_, _| rng.random_range(0.05..5.0));
        CompositionMatrix::with_default_names(m).unwrap()
    }

    fn signs(v: &[i8]) -> SignVector {
        SignVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn candidate_walkthrough() {
        let c = candidate_signs(&[0.9, 0.1, -0.2, -0.8]).unwrap();
        assert_eq!(
            c,
            vec![signs(&[1, 0, 0, -1]), signs(&[1, 0, -1, -1]), signs(&[1, 1, -1, -1])]
        );
        assert_eq!(candidate_signs(&[1.0, -1.0]).unwrap(), vec![signs(&[1, -1])]);
    }

    #[test]
    fn candidate_supports_grow_by_one() {
        let p = [0.3, -0.1, 0.05, -0.7, 0.2, 0.0, 0.25];
        let c = candidate_signs(&p).unwrap();
        assert_eq!(c.len(), p.len() - 1);
        for (j, s) in c.iter().enumerate() {
            assert_eq!(s.support_size(), j + 2);
        }
    }

    #[test]
    fn one_sided_loading_rejected() {
        assert!(matches!(candidate_signs(&[0.2, 0.5, 0.1]), Err(Error::OneSidedLoading)));
        assert!(matches!(candidate_signs(&[0.0, 0.0]), Err(Error::OneSidedLoading)));
        assert!(candidate_signs(&[1.0]).is_err());
    }

    #[test]
    fn best_balance_single_and_planted() {
        let x = random_comp(40, 5, 11);
        let y = DVector::from_fn(40, |i, _| (i as f64 * 0.37).cos());
        let only = [signs(&[1, -1, 0, 0, 0])];
        let (b, _) = best_balance(&x, &y, &only).unwrap();
        assert_eq!(b.signs(), &only[0]);

        let cands = candidate_signs(&[0.5, -0.4, 0.3, -0.2, 0.1]).unwrap();
        let planted = coda::signs_to_coefficients(&cands[2]);
        let y = coda::balance_values(&x, &planted).unwrap() * 3.0;
        let (b, cov) = best_balance(&x, &y, &cands).unwrap();
        assert_eq!(b.signs(), &cands[2]);
        for c in &cands {
            let v = coda::balance_values(&x, &coda::signs_to_coefficients(c)).unwrap();
            assert!(sample_cov(&v, &y).abs() <= cov + 1e-12);
        }
    }

    #[test]
    fn two_part_basis_is_forced() {
        let x = random_comp(10, 2, 12);
        let y = DVector::from_fn(10, |i, _| i as f64);
        for basis in [pls_pb(&x, &y).unwrap(), pca_pb(&x).unwrap()] {
            assert_eq!(basis.len(), 1);
            let c = basis.coefficient_matrix();
            let h = 0.5f64.sqrt();
            assert!((c[(0, 0)].abs() - h).abs() < 1e-12);
            assert!((c[(0, 0)] + c[(1, 0)]).abs() < 1e-12);
        }
    }

    #[test]
    fn bases_are_orthonormal_partitions() {
        for seed in 0..10 {
            let d = 3 + seed as usize * 3;
            let x = random_comp(20 + seed as usize, d, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let y = DVector::from_fn(x.n_samples(), |_, _| rng.random::<f64>());
            for fit in [pls_pb_tree(&x, &y).unwrap(), pca_pb_tree(&x).unwrap()] {
                assert_eq!(fit.basis.len(), d - 1);
                assert_eq!(fit.tree.balance_count(), d - 1);
                assert!(fit.basis.orthonormality_error() < 1e-10);
                assert!(fit.basis.is_valid_partition());
                for w in fit.basis.scores().windows(2) {
                    assert!(w[0] >= w[1]);
                }
            }
        }
    }

    #[test]
    fn pca_pb_preserves_total_variance() {
        let x = random_comp(30, 9, 21);
        let basis = pca_pb(&x).unwrap();
        let xc = coda::center_columns(&coda::clr(&x));
        let total: f64 = xc.values().iter().map(|v| v * v).sum::<f64>() / 29.0;
        let sum: f64 = basis.scores().iter().sum();
        assert!((sum - total).abs() < 1e-8);
    }

    #[test]
    fn errors_surface() {
        let x = random_comp(10, 4, 3);
        let y = DVector::from_element(10, 1.5);
        assert!(matches!(pls_pb(&x, &y), Err(Error::ConstantResponse)));
        let tiny = random_comp(2, 4, 3);
        assert!(pca_pb(&tiny).is_err());
        let flat = CompositionMatrix::with_default_names(DMatrix::from_fn(5, 3, |_, j| {
            1.0 + j as f64
        }))
        .unwrap();
        assert!(matches!(pca_pb(&flat), Err(Error::DegenerateSubcomposition { .. })));
    }

    #[test]
    fn degenerate_inner_node_uses_fallback() {
        // parts 1 and 2 are proportional in every row, so once the root
        // separates part 0 their node has no variation left
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DMatrix::from_fn(12, 3, |i, j| match j {
            0 => rng.random_range(0.1..3.0),
            _ => (1.0 + j as f64) * (1.0 + (i as f64 * 0.7).sin().abs()),
        });
        let x = CompositionMatrix::with_default_names(m).unwrap();
        let fit = pca_pb_tree(&x).unwrap();
        assert_eq!(fit.basis.len(), 2);
        assert!(fit.basis.orthonormality_error() < 1e-10);
        let root = &fit.tree;
        assert!(!root.fallback);
        let deg = [&root.numerator, &root.denominator]
            .into_iter()
            .flatten()
            .find(|c| c.parts == vec![1, 2])
            .expect("node of proportional parts");
        assert!(deg.fallback);
    }
}
