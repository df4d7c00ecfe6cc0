//! Monte Carlo studies over freshly simulated datasets: cross-validated
//! error curves and first-balance marker recovery.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modelsel::{self, CvResult, Method, Metric};
use crate::pb;
use crate::simgen::{self, RecoveryCounts, SimScenario};

/// One fresh dataset per run, one k-fold pass per dataset.
///
/// Every method sees the same datasets and the same fold partitions, so the
/// returned curves (one per method, in the given order) are paired.
pub fn simulation_cv(
    scenario: &SimScenario,
    methods: &[Method],
    metric: Metric,
    max_k: usize,
    folds: usize,
    runs: usize,
) -> Result<Vec<CvResult>> {
    scenario.validate()?;
    if runs == 0 || methods.is_empty() {
        return Err(Error::EmptyInput);
    }
    let per_run: Vec<Vec<Vec<f64>>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let s = scenario.for_run(run);
            let ds = simgen::simulate_dataset(&s)?;
            let mut rng = modelsel::repeat_rng(s.seed, 0);
            let partition = modelsel::fold_partition(ds.x.n_samples(), folds, &mut rng);
            methods
                .iter()
                .map(|&m| modelsel::cv_error_curve(&ds.x, &ds.y, m, metric, max_k, &partition))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    methods
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let curves = per_run.iter().map(|r| r[mi].clone()).collect();
            CvResult::from_runs(m, metric, folds, curves)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecovery {
    pub method: Method,
    pub counts: RecoveryCounts,
}

/// Inclusion counts of each part in the first balance, over `runs` datasets.
/// Only balance methods are accepted.
pub fn recovery_study(
    scenario: &SimScenario,
    methods: &[Method],
    runs: usize,
) -> Result<Vec<MethodRecovery>> {
    scenario.validate()?;
    if let Some(m) = methods.iter().find(|&&m| m == Method::Pls) {
        return Err(Error::InvalidArgument(format!(
            "marker recovery needs a balance method, got '{m}'"
        )));
    }
    let per_run: Vec<Vec<simgen::RecoveryStats>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let ds = simgen::simulate_dataset(&scenario.for_run(run))?;
            methods
                .iter()
                .map(|&m| {
                    let basis = match m {
                        Method::PlsPb => pb::pls_pb(&ds.x, &ds.y)?,
                        _ => pb::pca_pb(&ds.x)?,
                    };
                    simgen::first_balance_recovery(&basis, &ds.marker_mask)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let mut counts = RecoveryCounts::new(scenario.d);
            for r in &per_run {
                counts.add(&r[mi]);
            }
            MethodRecovery { method, counts }
        })
        .collect())
}
