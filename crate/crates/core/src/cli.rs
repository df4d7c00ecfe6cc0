//! Command-line surface: `simulate`, `fit`, `cv`, `recover` and `replay`.
//!
//! Every command writes tidy CSV plus a `manifest.json` recording the fully
//! resolved arguments. `replay` re-executes a manifest into a new directory
//! and reproduces the original outputs byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coda::{self, BalanceBasis, BalanceCoefficients, CompositionMatrix};
use crate::error::{Error, Result};
use crate::io::{self, fmt_f64};
use crate::latent::{self, LatentModel};
use crate::modelsel::{self, CvConfig, CvResult, Method, Metric, CLASS_THRESHOLD};
use crate::pb::{self, PartitionNode};
use crate::simgen::{self, BetaSpec, ScenarioCase, SimScenario, SubSeeds};
use crate::study;

pub const MANIFEST_FILE: &str = "manifest.json";
const ORTHONORMALITY_TOLERANCE: f64 = 1e-10;
const DEFAULT_MAX_K: usize = 20;

#[derive(Parser, Debug)]
#[command(name = "plspb", version, about = "Principal balances for compositional regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Simulate a compositional dataset with a planted marker structure.
    Simulate(SimulateArgs),
    /// Fit a balance basis or a PLS model and export it.
    Fit(FitArgs),
    /// Cross-validated error curves and one-SE component selection.
    Cv(CvArgs),
    /// Count how often each part enters the first balance over fresh datasets.
    Recover(RecoverArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Cv(_) => "cv",
            Command::Recover(_) => "recover",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioArgs {
    /// one-block, same-blocks or different-blocks
    #[arg(long)]
    pub case: Option<ScenarioCase>,
    #[arg(long, default_value_t = 250)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    /// Comma-separated marker block sizes; defaults depend on the case.
    #[arg(long, value_delimiter = ',')]
    #[serde(rename = "block_sizes")]
    pub blocks: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Draw the marker coefficients once from this seed instead of per dataset.
    #[arg(long)]
    pub beta_seed: Option<u64>,
    /// Shrink block correlations when the covariance is not positive definite.
    #[arg(long)]
    pub allow_shrink: bool,
}

impl ScenarioArgs {
    fn resolve(&mut self) {
        let case = *self.case.get_or_insert(ScenarioCase::OneBlock);
        self.blocks.get_or_insert_with(|| case.default_blocks());
    }

    fn scenario(&self, seed: u64) -> Result<SimScenario> {
        let case = self.case.unwrap_or(ScenarioCase::OneBlock);
        let s = SimScenario {
            case,
            n: self.n,
            d: self.d,
            block_sizes: self.blocks.clone().unwrap_or_else(|| case.default_blocks()),
            seed,
            noise_sd: self.noise_sd,
            beta: self.beta_seed.map_or(BetaSpec::PerRun, BetaSpec::FixedSeed),
            allow_shrink: self.allow_shrink,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DataArgs {
    /// CSV with a header of part names, one sample per row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Column of the data CSV holding the response.
    #[arg(long)]
    pub response_col: Option<String>,
    /// Separate one-column CSV holding the response.
    #[arg(long, conflicts_with = "response_col")]
    pub response_file: Option<PathBuf>,
    /// 0/1 response: classification by thresholding at 0.5.
    #[arg(long)]
    pub binary: bool,
}

impl DataArgs {
    fn resolve(&mut self) -> Result<()> {
        if let Some(p) = &self.data {
            self.data = Some(fs::canonicalize(p)?);
        }
        if let Some(p) = &self.response_file {
            self.response_file = Some(fs::canonicalize(p)?);
        }
        Ok(())
    }

    fn load(&self) -> Result<(CompositionMatrix, Option<DVector<f64>>)> {
        let path = self
            .data
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--data is required".into()))?;
        let (x, mut y) = io::read_composition_csv(path, self.response_col.as_deref())?;
        if let Some(p) = &self.response_file {
            y = Some(io::read_response_csv(p)?);
        }
        if let Some(y) = &y {
            if y.len() != x.n_samples() {
                return Err(Error::DimensionMismatch {
                    expected: x.n_samples(),
                    got: y.len(),
                });
            }
            if self.binary {
                if let Some(&v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
                    return Err(Error::NonBinary(v));
                }
            }
        } else if self.binary {
            return Err(Error::InvalidArgument("--binary needs a response".into()));
        }
        Ok((x, y))
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// pls-pb, pca-pb or pls
    #[arg(long, default_value = "pls-pb")]
    pub method: Method,
    /// Components used for the fitted values; the full basis is always exported.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Without --data, cross-validate over simulated datasets of this scenario.
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, conflicts_with = "all_methods")]
    pub method: Option<Method>,
    /// Compare pls-pb, pca-pb and pls on identical folds.
    #[arg(long)]
    pub all_methods: bool,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Repeated fold shuffles (data mode).
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Fresh simulated datasets (simulation mode).
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Largest model size; defaults to min(20, D-1, smallest training fold - 2).
    #[arg(long)]
    pub max_k: Option<usize>,
    /// rmsep or me; me is the default with --binary.
    #[arg(long)]
    pub metric: Option<Metric>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// pls-pb or pca-pb; both when omitted.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything needed to re-run a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// What a command wrote and what it wants to tell the user.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    pub messages: Vec<String>,
}

impl Outcome {
    fn new(out_dir: &Path) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            ..Self::default()
        }
    }

    fn file(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out_dir.join(name)
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

fn prepare_out(out: &mut PathBuf) -> Result<()> {
    fs::create_dir_all(&*out)?;
    *out = fs::canonicalize(&*out)?;
    Ok(())
}

/// Runs a command and writes its manifest.
pub fn execute(command: Command) -> Result<Outcome> {
    let started = now_ms();
    let (name, config, seed, mut outcome) = match command {
        Command::Replay(args) => return replay(&args),
        Command::Simulate(mut a) => {
            a.scenario.resolve();
            prepare_out(&mut a.out)?;
            let o = simulate(&a)?;
            ("simulate", serde_json::to_value(&a)?, Some(a.seed), o)
        }
        Command::Fit(mut a) => {
            a.data.resolve()?;
            prepare_out(&mut a.out)?;
            let o = fit(&mut a)?;
            ("fit", serde_json::to_value(&a)?, None, o)
        }
        Command::Cv(mut a) => {
            a.data.resolve()?;
            prepare_out(&mut a.out)?;
            let o = cv(&mut a)?;
            ("cv", serde_json::to_value(&a)?, Some(a.seed), o)
        }
        Command::Recover(mut a) => {
            a.scenario.resolve();
            prepare_out(&mut a.out)?;
            let o = recover(&a)?;
            ("recover", serde_json::to_value(&a)?, Some(a.seed), o)
        }
    };
    let manifest = RunManifest {
        command: name.to_string(),
        config,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs: outcome.outputs.clone(),
    };
    let path = outcome.out_dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    outcome.messages.push(format!("wrote {}", path.display()));
    Ok(outcome)
}

fn replay(args: &ReplayArgs) -> Result<Outcome> {
    let manifest = RunManifest::read(&args.manifest)?;
    let out = args.out.clone();
    let config = manifest.config;
    let command = match manifest.command.as_str() {
        "simulate" => Command::Simulate(SimulateArgs {
            out,
            ..serde_json::from_value(config)?
        }),
        "fit" => Command::Fit(FitArgs {
            out,
            ..serde_json::from_value(config)?
        }),
        "cv" => Command::Cv(CvArgs {
            out,
            ..serde_json::from_value(config)?
        }),
        "recover" => Command::Recover(RecoverArgs {
            out,
            ..serde_json::from_value(config)?
        }),
        other => {
            return Err(Error::InvalidArgument(format!(
                "manifest has unknown command '{other}'"
            )))
        }
    };
    execute(command)
}

fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    let mut o = Outcome::new(&a.out);
    let scenario = a.scenario.scenario(a.seed)?;
    let ds = simgen::simulate_dataset(&scenario)?;

    io::write_composition_csv(&o.file("X.csv"), &ds.x)?;
    io::write_vector_csv(&o.file("y.csv"), "y", &ds.y)?;

    #[derive(Serialize)]
    struct DatasetInfo<'a> {
        scenario: &'a SimScenario,
        sub_seeds: SubSeeds,
        beta: &'a [f64],
        marker_parts: Vec<&'a str>,
        shrink: f64,
    }
    let info = DatasetInfo {
        scenario: &scenario,
        sub_seeds: SubSeeds::from_seed(scenario.seed),
        beta: &ds.beta,
        marker_parts: ds
            .x
            .part_names()
            .iter()
            .zip(&ds.marker_mask)
            .filter(|(_, &m)| m)
            .map(|(n, _)| n.as_str())
            .collect(),
        shrink: ds.shrink,
    };
    fs::write(o.file("dataset.json"), serde_json::to_string_pretty(&info)? + "\n")?;
    if ds.shrink < 1.0 {
        o.messages
            .push(format!("block correlations shrunk by factor {}", fmt_f64(ds.shrink)));
    }
    o.messages.push(format!(
        "simulated {} samples x {} parts ({} markers)",
        scenario.n,
        scenario.d,
        scenario.marker_count()
    ));
    Ok(o)
}

fn check_basis(basis: &BalanceBasis) -> Result<()> {
    let d = basis.n_parts();
    if basis.len() != d - 1 {
        return Err(Error::SelfCheck(format!(
            "basis has {} balances, expected {}",
            basis.len(),
            d - 1
        )));
    }
    let err = basis.orthonormality_error();
    if !(err <= ORTHONORMALITY_TOLERANCE) {
        return Err(Error::SelfCheck(format!("basis orthonormality error {err:e}")));
    }
    let coeffs = basis.coefficient_matrix();
    for (k, col) in coeffs.column_iter().enumerate() {
        if col.sum().abs() > ORTHONORMALITY_TOLERANCE {
            return Err(Error::SelfCheck(format!("balance {} does not sum to zero", k + 1)));
        }
    }
    if !basis.is_valid_partition() {
        return Err(Error::SelfCheck("balances do not form a nested partition".into()));
    }
    Ok(())
}

fn check_latent(model: &LatentModel) -> Result<()> {
    for (k, col) in model.weights.column_iter().enumerate() {
        if col.sum().abs() > ORTHONORMALITY_TOLERANCE * col.norm().max(1.0) {
            return Err(Error::SelfCheck(format!("weight {} is not a logcontrast", k + 1)));
        }
    }
    let gram = model.scores.transpose() * &model.scores;
    let k = gram.nrows();
    let err = (gram - DMatrix::<f64>::identity(k, k)).amax();
    if !(err <= 1e-8) {
        return Err(Error::SelfCheck(format!("score orthonormality error {err:e}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct BalanceJson {
    numerator: Vec<String>,
    denominator: Vec<String>,
    coefficients: Vec<f64>,
}

#[derive(Serialize)]
struct TreeJson {
    parts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    balance: Option<BalanceJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    connecting: Option<BalanceJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numerator: Option<Box<TreeJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    denominator: Option<Box<TreeJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    excluded: Option<Box<TreeJson>>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    fallback: bool,
}

fn tree_json(node: &PartitionNode, names: &[String]) -> TreeJson {
    let named = |idx: Vec<usize>| idx.into_iter().map(|i| names[i].clone()).collect();
    let balance = |b: &BalanceCoefficients| BalanceJson {
        numerator: named(b.numerator()),
        denominator: named(b.denominator()),
        coefficients: b.coeffs().iter().copied().collect(),
    };
    let child = |c: &Option<Box<PartitionNode>>| c.as_ref().map(|c| Box::new(tree_json(c, names)));
    TreeJson {
        parts: named(node.parts.clone()),
        balance: node.balance.as_ref().map(balance),
        connecting: node.connecting.as_ref().map(balance),
        numerator: child(&node.numerator),
        denominator: child(&node.denominator),
        excluded: child(&node.excluded),
        fallback: node.fallback,
    }
}

fn write_fitted(
    path: &Path,
    y: &DVector<f64>,
    fitted: &DVector<f64>,
    binary: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(io::create(path)?);
    if binary {
        w.write_record(["sample", "observed", "fitted", "label"])?;
    } else {
        w.write_record(["sample", "observed", "fitted"])?;
    }
    for (i, (&obs, &fit)) in y.iter().zip(fitted.iter()).enumerate() {
        let mut row = vec![(i + 1).to_string(), fmt_f64(obs), fmt_f64(fit)];
        if binary {
            row.push(u8::from(fit > CLASS_THRESHOLD).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fit_summary(y: &DVector<f64>, fitted: &DVector<f64>, binary: bool, k: usize) -> Result<String> {
    Ok(if binary {
        let err = modelsel::misclassification_error(y.as_slice(), fitted.as_slice())?;
        format!("k = {k}, training misclassification error = {}", fmt_f64(err))
    } else {
        let err = modelsel::rmsep(y.as_slice(), fitted.as_slice())?;
        format!("k = {k}, training RMSE = {}", fmt_f64(err))
    })
}

fn fit(a: &mut FitArgs) -> Result<Outcome> {
    let mut o = Outcome::new(&a.out);
    let (x, y) = a.data.load()?;
    let names = x.part_names().to_vec();
    let (n, d) = (x.n_samples(), x.n_parts());

    match a.method {
        Method::PlsPb | Method::PcaPb => {
            let fitted = match a.method {
                Method::PlsPb => {
                    let y = y.as_ref().ok_or_else(|| {
                        Error::InvalidArgument("pls-pb needs a response".into())
                    })?;
                    pb::pls_pb_tree(&x, y)?
                }
                _ => pb::pca_pb_tree(&x)?,
            };
            check_basis(&fitted.basis)?;
            io::write_basis_coefficients(&o.file("coefficients.csv"), &fitted.basis, &names)?;
            io::write_basis_signs(&o.file("signs.csv"), &fitted.basis, &names)?;
            let tree = serde_json::to_string_pretty(&tree_json(&fitted.tree, &names))?;
            fs::write(o.file("tree.json"), tree + "\n")?;

            let z = fitted.basis.coordinates(&x)?;
            let mut w = csv::Writer::from_writer(io::create(&o.file("balances.csv"))?);
            w.write_record((1..=z.ncols()).map(|k| format!("PB{k}")))?;
            for row in z.row_iter() {
                w.write_record(row.iter().map(|&v| fmt_f64(v)))?;
            }
            w.flush()?;

            if let Some(y) = &y {
                let k = *a.k.get_or_insert((d - 1).min(n.saturating_sub(2)).max(1));
                let reg = modelsel::fit_on_balances(&x, y, &fitted.basis, k)?;
                let yhat = reg.predict(&x)?;
                write_fitted(&o.file("fitted.csv"), y, &yhat, a.data.binary)?;
                o.messages.push(fit_summary(y, &yhat, a.data.binary, k)?);
            }
            let crit = fitted.basis.scores().first().copied().unwrap_or(0.0);
            o.messages.push(format!(
                "{} balances, first {} = {}",
                fitted.basis.len(),
                fitted.basis.criterion().label(),
                fmt_f64(crit)
            ));
        }
        Method::Pls => {
            let y = y
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("pls needs a response".into()))?;
            let cap = (d - 1).min(n.saturating_sub(1));
            let k = *a.k.get_or_insert(cap);
            let model = latent::pls_fit(&coda::clr(&x), y, k)?;
            check_latent(&model)?;

            let mut w = csv::Writer::from_writer(io::create(&o.file("weights.csv"))?);
            let mut header = vec!["part".to_string()];
            header.extend((1..=k).map(|c| format!("C{c}")));
            w.write_record(&header)?;
            let mut cov = vec!["cov_y".to_string()];
            cov.extend(model.explained.iter().map(|&v| fmt_f64(v)));
            w.write_record(&cov)?;
            for (i, name) in names.iter().enumerate() {
                let mut row = vec![name.clone()];
                row.extend(model.weights.row(i).iter().map(|&v| fmt_f64(v)));
                w.write_record(&row)?;
            }
            w.flush()?;

            #[derive(Serialize)]
            struct ModelJson<'a> {
                parts: &'a [String],
                components: usize,
                x_mean: Vec<f64>,
                y_mean: f64,
                latent_coefficients: Vec<f64>,
                clr_coefficients: Vec<f64>,
            }
            let json = ModelJson {
                parts: &names,
                components: k,
                x_mean: model.x_mean.iter().copied().collect(),
                y_mean: model.y_mean,
                latent_coefficients: model.latent_coefficients.iter().copied().collect(),
                clr_coefficients: model.clr_coefficients().iter().copied().collect(),
            };
            fs::write(o.file("model.json"), serde_json::to_string_pretty(&json)? + "\n")?;

            let yhat = model.fitted();
            write_fitted(&o.file("fitted.csv"), y, &yhat, a.data.binary)?;
            o.messages.push(fit_summary(y, &yhat, a.data.binary, k)?);
        }
    }
    Ok(o)
}

fn methods_for(method: Option<Method>, all: bool) -> Vec<Method> {
    match (method, all) {
        (_, true) => Method::ALL.to_vec(),
        (Some(m), false) => vec![m],
        (None, false) => vec![Method::PlsPb],
    }
}

fn default_max_k(n: usize, d: usize, folds: usize) -> usize {
    let smallest_train = n - n.div_ceil(folds.max(1));
    DEFAULT_MAX_K
        .min(d - 1)
        .min(smallest_train.saturating_sub(2))
        .max(1)
}

fn cv(a: &mut CvArgs) -> Result<Outcome> {
    let mut o = Outcome::new(&a.out);
    let methods = methods_for(a.method, a.all_methods);
    let metric = *a
        .metric
        .get_or_insert(if a.data.binary { Metric::Me } else { Metric::Rmsep });

    let results: Vec<CvResult> = match (&a.data.data, a.scenario.case) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument("give either --data or --case, not both".into()))
        }
        (None, None) => {
            return Err(Error::InvalidArgument("give --data or a simulation --case".into()))
        }
        (Some(_), None) => {
            let (x, y) = a.data.load()?;
            let y = y.ok_or_else(|| Error::InvalidArgument("cv needs a response".into()))?;
            let max_k = *a
                .max_k
                .get_or_insert(default_max_k(x.n_samples(), x.n_parts(), a.folds));
            methods
                .iter()
                .map(|&method| {
                    let cfg = CvConfig {
                        method,
                        max_k,
                        folds: a.folds,
                        repeats: a.repeats,
                        seed: a.seed,
                        metric,
                    };
                    modelsel::cross_validate(&x, &y, &cfg)
                })
                .collect::<Result<_>>()?
        }
        (None, Some(_)) => {
            a.scenario.resolve();
            let scenario = a.scenario.scenario(a.seed)?;
            let max_k = *a
                .max_k
                .get_or_insert(default_max_k(scenario.n, scenario.d, a.folds));
            study::simulation_cv(&scenario, &methods, metric, max_k, a.folds, a.runs)?
        }
    };

    let mut w = csv::Writer::from_writer(io::create(&o.file("cv.csv"))?);
    w.write_record(["method", "k", "mean_error", "sd_error"])?;
    for r in &results {
        for (i, &k) in r.component_counts.iter().enumerate() {
            w.write_record([
                r.method.to_string(),
                k.to_string(),
                fmt_f64(r.mean_error[i]),
                fmt_f64(r.sd_error[i]),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(io::create(&o.file("cv_runs.csv"))?);
    w.write_record(["method", "run", "k", "error"])?;
    for r in &results {
        for (run, curve) in r.per_repeat.iter().enumerate() {
            for (i, &e) in curve.iter().enumerate() {
                w.write_record([
                    r.method.to_string(),
                    (run + 1).to_string(),
                    r.component_counts[i].to_string(),
                    fmt_f64(e),
                ])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(io::create(&o.file("selected.csv"))?);
    w.write_record(["method", "metric", "selected_k", "min_error_k", "min_mean_error"])?;
    for r in &results {
        let (imin, &emin) = r
            .mean_error
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .ok_or(Error::EmptyInput)?;
        w.write_record([
            r.method.to_string(),
            r.metric.to_string(),
            r.selected_k.to_string(),
            r.component_counts[imin].to_string(),
            fmt_f64(emin),
        ])?;
        o.messages
            .push(format!("{}: selected k = {}", r.method, r.selected_k));
    }
    w.flush()?;
    Ok(o)
}

fn recover(a: &RecoverArgs) -> Result<Outcome> {
    let mut o = Outcome::new(&a.out);
    let scenario = a.scenario.scenario(a.seed)?;
    let methods = match a.method {
        Some(m) => vec![m],
        None => vec![Method::PlsPb, Method::PcaPb],
    };
    let results = study::recovery_study(&scenario, &methods, a.runs)?;
    let names = coda::default_part_names(scenario.d);

    let mut w = csv::Writer::from_writer(io::create(&o.file("recovery.csv"))?);
    w.write_record(["part", "method", "inclusion_count", "runs"])?;
    for (j, name) in names.iter().enumerate() {
        for r in &results {
            w.write_record([
                name.clone(),
                r.method.to_string(),
                r.counts.counts[j].to_string(),
                r.counts.runs.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(io::create(&o.file("recovery_summary.csv"))?);
    w.write_record(["method", "runs", "mean_marker_rate", "mean_noise_rate"])?;
    for r in &results {
        w.write_record([
            r.method.to_string(),
            r.counts.runs.to_string(),
            fmt_f64(r.counts.mean_marker_rate()),
            fmt_f64(r.counts.mean_noise_rate()),
        ])?;
        o.messages.push(format!(
            "{}: marker rate {:.3}, noise rate {:.3}",
            r.method,
            r.counts.mean_marker_rate(),
            r.counts.mean_noise_rate()
        ));
    }
    w.flush()?;
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scenario_flags() {
        let cli = Cli::try_parse_from([
            "plspb", "simulate", "--case", "different-blocks", "--blocks", "5,5", "--out", "o",
        ])
        .unwrap();
        let Command::Simulate(a) = cli.command else { panic!() };
        assert_eq!(a.scenario.case, Some(ScenarioCase::DifferentSizedBlocks));
        assert_eq!(a.scenario.blocks, Some(vec![5, 5]));
        assert_eq!(a.seed, 1);
    }

    #[test]
    fn rejects_unknown_method_and_conflicts() {
        assert!(Cli::try_parse_from(["plspb", "fit", "--method", "lasso", "--out", "o"]).is_err());
        assert!(Cli::try_parse_from([
            "plspb", "cv", "--method", "pls", "--all-methods", "--out", "o"
        ])
        .is_err());
    }

    #[test]
    fn default_max_k_respects_every_cap() {
        assert_eq!(default_max_k(250, 100, 5), 20);
        assert_eq!(default_max_k(250, 6, 5), 5);
        assert_eq!(default_max_k(12, 30, 5), 7);
    }
}
