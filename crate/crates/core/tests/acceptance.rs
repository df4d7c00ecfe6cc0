//! Acceptance gate. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! fails if any criterion fails. Run with `--nocapture` to see the report.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use plspb::coda::{self, SignVector};
use plspb::modelsel::{self, Method, Metric};
use plspb::simgen::{self, ScenarioCase, SimScenario};
use plspb::{latent, pb, study};
use rand::Rng;
use sha2::{Digest, Sha256};

type Criterion = (&'static str, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_size(rng: &mut impl Rng, d: (usize, usize), n: (usize, usize)) -> (usize, usize) {
    (rng.random_range(n.0..=n.1), rng.random_range(d.0..=d.1))
}

fn orthonormality_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(1001);
    let (mut worst_orth, mut worst_sum) = (0.0f64, 0.0f64);
    let mut failures = 0;
    for _ in 0..200 {
        let (n, d) = random_size(&mut rng, (3, 60), (10, 300));
        let x = common::random_composition(&mut rng, n, d);
        let y = common::random_response(&mut rng, &x);
        for basis in [pb::pls_pb(&x, &y).unwrap(), pb::pca_pb(&x).unwrap()] {
            let b = basis.coefficient_matrix();
            let orth = (b.tr_mul(&b) - DMatrix::identity(d - 1, d - 1)).amax();
            let sum = b.row_sum().amax();
            worst_orth = worst_orth.max(orth);
            worst_sum = worst_sum.max(sum);
            if basis.len() != d - 1 || orth > 1e-10 || sum > 1e-12 || !basis.is_valid_partition() {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(120),
        format!("400 bases, {failures} invalid, max |B'B-I| {worst_orth:.1e}, max |col sum| {worst_sum:.1e}, {elapsed:.1?}"),
    )
}

fn basis_equivalence() -> Outcome {
    let mut rng = common::rng(1002);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.random_range(3..=30);
        let n = rng.random_range(d + 2..=200);
        let x = common::random_composition(&mut rng, n, d);
        let y = common::random_response(&mut rng, &x);
        let z_pls = pb::pls_pb(&x, &y).unwrap().coordinates(&x).unwrap();
        let z_pca = pb::pca_pb(&x).unwrap().coordinates(&x).unwrap();
        let f_pls = common::ols_predict(&z_pls, &y, &z_pls);
        let f_pca = common::ols_predict(&z_pca, &y, &z_pca);
        worst = worst.max((f_pls - f_pca).amax());
    }
    outcome(worst < 1e-8, format!("50 instances, max fitted-value gap {worst:.1e}"))
}

fn full_rank_pls() -> Outcome {
    let mut rng = common::rng(1003);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let d = rng.random_range(3..=10);
        let n = rng.random_range(d + 1..=80);
        let x = common::random_composition(&mut rng, n, d);
        let y = common::random_response(&mut rng, &x);
        let x_new = common::random_composition(&mut rng, 10, d);
        let model = latent::pls_fit(&coda::clr(&x), &y, d - 1).unwrap();
        let got = latent::pls_predict(&model, &x_new).unwrap();
        let want = common::pinv_clr_predict(&x, &y, &x_new);
        worst = worst.max((got - want).amax());
    }
    outcome(worst < 1e-6, format!("30 instances, max prediction gap {worst:.1e}"))
}

fn candidate_walkthrough() -> Outcome {
    let signs = |s: &[i8]| SignVector::new(s.to_vec()).unwrap();
    let got = pb::candidate_signs(&[0.9, 0.1, -0.2, -0.8]).unwrap();
    let want = vec![signs(&[1, 0, 0, -1]), signs(&[1, 0, -1, -1]), signs(&[1, 1, -1, -1])];
    let (a, b, c) = (1.0 / 2f64.sqrt(), (2.0f64 / 3.0).sqrt(), 1.0 / 6f64.sqrt());
    let closed = [
        DVector::from_vec(vec![a, 0.0, 0.0, -a]),
        DVector::from_vec(vec![b, 0.0, -c, -c]),
        DVector::from_vec(vec![0.5, 0.5, -0.5, -0.5]),
    ];
    let worst = want
        .iter()
        .zip(&closed)
        .map(|(s, v)| (coda::signs_to_coefficients(s).coeffs() - v).amax())
        .fold(0.0, f64::max);
    outcome(got == want && worst < 1e-12, format!("candidates match: {}, max coefficient gap {worst:.1e}", got == want))
}

fn one_block_recovery() -> Outcome {
    let start = Instant::now();
    let s = SimScenario::new(ScenarioCase::OneBlock, 1005);
    let res = study::recovery_study(&s, &[Method::PlsPb, Method::PcaPb], 100).unwrap();
    let (pls, pca) = (&res[0].counts, &res[1].counts);
    let (pm, pn) = (pls.mean_marker_rate(), pls.mean_noise_rate());
    let (cm, cn) = (pca.mean_marker_rate(), pca.mean_noise_rate());
    let comparable = cm >= 0.7 && cn <= 0.2 && (pm - cm).abs() <= 0.15;
    let elapsed = start.elapsed();
    outcome(
        pm >= 0.7 && pn <= 0.2 && comparable && elapsed < Duration::from_secs(900),
        format!("PLS-PB markers {pm:.3} noise {pn:.3}; PCA-PB markers {cm:.3} noise {cn:.3}; {elapsed:.1?}"),
    )
}

fn multi_block_ordering() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (case, seed) in [(ScenarioCase::SameSizedBlocks, 1006), (ScenarioCase::DifferentSizedBlocks, 1106)] {
        let s = SimScenario::new(case, seed);
        let res = study::simulation_cv(&s, &[Method::PlsPb, Method::PcaPb], Metric::Rmsep, 1, 5, 100).unwrap();
        let (pls, pca) = (res[0].mean_error[0], res[1].mean_error[0]);
        let ratio = pls / pca;
        pass &= pls < pca && ratio <= 0.8;
        parts.push(format!("{case}: {pls:.3} vs {pca:.3} (ratio {ratio:.3})"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1800);
    outcome(pass, format!("1-PB RMSEP {}; {elapsed:.1?}", parts.join(", ")))
}

fn one_se_rule() -> Outcome {
    let k = modelsel::one_se_select(&[5.0, 3.0, 2.9, 2.95], &[0.2; 4]).unwrap();
    outcome(k == 2, format!("selected k = {k}"))
}

fn run(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_plspb")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn output_hashes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            let digest = Sha256::digest(fs::read(&p).unwrap()).to_vec();
            (p.file_name().unwrap().to_string_lossy().into_owned(), digest)
        })
        .collect();
    files.sort();
    files
}

fn replay_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let sim = p("simulate");
    let (x, y) = (format!("{sim}/X.csv"), format!("{sim}/y.csv"));
    let small = ["--n", "60", "--d", "20", "--blocks", "6"];
    let commands: Vec<(String, Vec<String>)> = vec![
        ("simulate", [&["simulate", "--case", "one-block", "--seed", "5"][..], &small].concat()),
        ("fit-pls-pb", vec!["fit", "--data", &x, "--response-file", &y, "--method", "pls-pb"]),
        ("fit-pls", vec!["fit", "--data", &x, "--response-file", &y, "--method", "pls", "--k", "4"]),
        ("cv", vec!["cv", "--data", &x, "--response-file", &y, "--all-methods", "--repeats", "3", "--max-k", "5"]),
        ("recover", [&["recover", "--case", "one-block", "--runs", "4"][..], &small].concat()),
    ]
    .into_iter()
    .map(|(name, args)| (name.to_string(), args.into_iter().map(str::to_string).collect()))
    .collect();

    let mut identical = 0;
    let mut mismatched = Vec::new();
    for (name, args) in &commands {
        let first = p(name);
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--out", &first]);
        run(&a);
        let second = p(&format!("{name}-replay"));
        run(&["replay", "--manifest", &format!("{first}/manifest.json"), "--out", &second]);
        let (h1, h2) = (output_hashes(Path::new(&first)), output_hashes(Path::new(&second)));
        if !h1.is_empty() && h1 == h2 {
            identical += 1;
        } else {
            mismatched.push(name.clone());
        }
    }
    outcome(identical == commands.len(), format!("{identical}/{} commands replay byte-identically {mismatched:?}", commands.len()))
}

fn metric_formulas() -> Outcome {
    let mut rng = common::rng(1009);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=200);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let yhat: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut sse = 0.0;
        for i in 0..n {
            sse += (y[i] - yhat[i]).powi(2);
        }
        worst = worst.max((modelsel::rmsep(&y, &yhat).unwrap() - (sse / n as f64).sqrt()).abs());

        let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect();
        let b: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect();
        let mut wrong = 0;
        for i in 0..n {
            if a[i] != b[i] {
                wrong += 1;
            }
        }
        worst = worst.max((modelsel::misclassification_error(&a, &b).unwrap() - wrong as f64 / n as f64).abs());
    }
    outcome(worst < 1e-12, format!("1000 pairs per metric, max gap {worst:.1e}"))
}

fn generator_statistics() -> Outcome {
    let s = SimScenario { n: 50_000, ..SimScenario::new(ScenarioCase::OneBlock, 1010) };
    let sigma = simgen::build_sigma(&s).unwrap();
    let ds = simgen::simulate_dataset(&s).unwrap();
    let mut zc = ds.pivot.clone();
    for mut col in zc.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let cov = zc.tr_mul(&zc) / (s.n as f64 - 1.0);
    let cov_gap = (cov - &sigma).amax();
    let back = coda::pivot_coordinates(&ds.x);
    let round_trip = (back - &ds.pivot).amax();
    outcome(
        cov_gap < 0.1 && round_trip < 1e-9,
        format!("max |S - sigma| {cov_gap:.3}, pivot round trip {round_trip:.1e}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("AC1", "orthonormal full bases", orthonormality_suite),
        ("AC2", "full PLS-PB and PCA-PB fits coincide", basis_equivalence),
        ("AC3", "full-rank PLS equals least squares", full_rank_pls),
        ("AC4", "candidate walkthrough and closed-form coefficients", candidate_walkthrough),
        ("AC5", "one-block marker recovery", one_block_recovery),
        ("AC6", "multi-block 1-PB error ordering", multi_block_ordering),
        ("AC7", "one-standard-error rule", one_se_rule),
        ("AC8", "replay determinism", replay_determinism),
        ("AC9", "metric formulas", metric_formulas),
        ("AC10", "generator statistics", generator_statistics),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        let o = check();
        println!("[{}] {id} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
