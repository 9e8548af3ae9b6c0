//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Reproduction criteria (1-5) depend on data and fold randomization and are
//! reported without aborting; the remaining criteria are exact properties
//! and make the run exit nonzero when they fail. Set `ACCEPTANCE_STRICT=1`
//! to make every failure fatal.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use narx_cli::{
    cmd_compare, cmd_evaluate, cmd_fit, prepare, selection_config, CompareArgs, EvaluateArgs, ExperimentConfig,
    KnnMetric, Method,
};
use narx_core::dataset::{fit_normalization_matrix, make_folds, LabelColumn};
use narx_core::glm::{fit_logistic, FitOptions};
use narx_core::ofr::{select_terms, SelectionConfig, SelectionTrace};
use narx_core::regressors::{count_candidate_terms, enumerate_terms, CandidateDictionary, DictionaryConfig, Mode};
use narx_core::waveform::generate_waveform;

struct Report {
    results: Vec<(String, bool, bool)>,
}

impl Report {
    fn record(&mut self, id: &str, fatal: bool, pass: bool, detail: String) {
        println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((id.to_string(), pass, fatal));
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn config(dataset: PathBuf, out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_dataset(dataset);
    c.output_dir = out.to_path_buf();
    c
}

fn compare_args(config: ExperimentConfig, methods: Vec<Method>) -> CompareArgs {
    CompareArgs {
        config,
        methods,
        knn_k: 10,
        knn_metric: KnnMetric::Euclidean,
        knn_p: 3.0,
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn curve(trace: &SelectionTrace) -> String {
    trace
        .steps
        .iter()
        .map(|s| format!("{:.4}", s.cv_mean_accuracy))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut sink = std::io::sink();
    let mut report = Report { results: Vec::new() };
    let mut traces: Vec<(&str, SelectionTrace)> = Vec::new();

    // 1. Iris
    let iris_cfg = config(data("iris.csv"), &tmp.path().join("iris"));
    let t = Instant::now();
    let iris = cmd_fit(&iris_cfg, &mut sink).expect("iris fit");
    let elapsed = t.elapsed();
    let s = &iris.trace.steps;
    let first_ok = s[0].term.to_string() == "u3(k-1)" && within(s[0].score, 0.9533, 0.05);
    let second_ok = s[1].term.is_constant();
    let cv2_ok = within(s[1].cv_mean_accuracy, 0.9467, 0.05);
    report.record(
        "1 iris",
        false,
        first_ok && second_ok && cv2_ok && elapsed < Duration::from_secs(10),
        format!(
            "first {} score {:.4} (want u3(k-1), 0.9533±0.05); second {} (want Constant); cv@2 {:.4} (want 0.9467±0.05); {:.2?}",
            s[0].term, s[0].score, s[1].term, s[1].cv_mean_accuracy, elapsed
        ),
    );

    // sanity bound: a model scored on its own training rows
    let train_csv = tmp.path().join("iris_all.csv");
    std::fs::copy(data("iris.csv"), &train_csv).expect("copy");
    let m = cmd_evaluate(
        &EvaluateArgs {
            model: tmp.path().join("iris/model.json"),
            dataset: train_csv,
            label_column: LabelColumn::Last,
            output: None,
        },
        &mut sink,
    )
    .expect("evaluate");
    let last_cv = s.last().unwrap().cv_mean_accuracy;
    report.record(
        "1b iris evaluate",
        false,
        m.accuracy >= last_cv - 0.05,
        format!("accuracy on all rows {:.4} vs cv mean {:.4} - 0.05", m.accuracy, last_cv),
    );
    traces.push(("iris", iris.trace));

    // 2. Wine
    let wine_cfg = config(data("wine.csv"), &tmp.path().join("wine"));
    let t = Instant::now();
    let wine = cmd_fit(&wine_cfg, &mut sink).expect("wine fit");
    let elapsed = t.elapsed();
    let cv: Vec<f64> = wine.trace.steps.iter().map(|s| s.cv_mean_accuracy).collect();
    let monotone = (1..5).all(|i| cv[i] >= cv[..i].iter().copied().fold(f64::MIN, f64::max) - 0.02);
    report.record(
        "2 wine",
        false,
        within(cv[4], 0.9158, 0.06) && monotone && elapsed < Duration::from_secs(30),
        format!(
            "cv@5 {:.4} (want 0.9158±0.06); curve {} (non-decreasing to 5: {monotone}); {:.2?}",
            cv[4],
            curve(&wine.trace),
            elapsed
        ),
    );
    traces.push(("wine", wine.trace));

    let mut wine5 = wine_cfg.clone();
    wine5.model_terms = Some(5);
    wine5.output_dir = tmp.path().join("wine5");
    let w5 = cmd_compare(&compare_args(wine5, vec![Method::Narx]), &mut sink).expect("wine compare");
    let r = w5.reduction.unwrap();
    println!(
        "       wine reduction at 5 terms: {:.2}% ({} terms over {} distinct of {} features)",
        r.reduction_pct, r.n_terms_model, r.n_distinct_features, r.n_features_data
    );

    // 3. Glass
    let glass = cmd_fit(&config(data("glass.csv"), &tmp.path().join("glass")), &mut sink).expect("glass fit");
    let cv4 = glass.trace.steps[3].cv_mean_accuracy;
    report.record(
        "3 glass",
        false,
        within(cv4, 0.6445, 0.08),
        format!("cv@4 {cv4:.4} (want 0.6445±0.08); curve {}", curve(&glass.trace)),
    );
    traces.push(("glass", glass.trace));

    // 4. Wave
    let wave_csv = tmp.path().join("wave.csv");
    write_waveform(&wave_csv);
    let t = Instant::now();
    let wave = cmd_compare(
        &compare_args(config(wave_csv, &tmp.path().join("wave")), vec![Method::Narx]),
        &mut sink,
    )
    .expect("wave compare");
    let elapsed = t.elapsed();
    let row = &wave.rows[0];
    let r = wave.reduction.unwrap();
    report.record(
        "4 wave",
        false,
        within(row.cv_mean, 0.8148, 0.04) && format!("{:.2}", row.reduction_pct) == "75.00" && elapsed < Duration::from_secs(600),
        format!(
            "cv@10 {:.4} (want 0.8148±0.04); reduction {:.2}% ({} distinct features); {:.2?}",
            row.cv_mean, row.reduction_pct, r.n_distinct_features, elapsed
        ),
    );
    traces.push(("wave", wave.trace.unwrap()));

    // 5. KNN
    let mut iris_knn = compare_args(config(data("iris.csv"), &tmp.path().join("iris_knn")), vec![Method::Knn]);
    iris_knn.knn_metric = KnnMetric::Minkowski;
    iris_knn.knn_p = 3.0;
    let ik = cmd_compare(&iris_knn, &mut sink).expect("iris knn").rows[0].cv_mean;
    let wine_knn = compare_args(config(data("wine.csv"), &tmp.path().join("wine_knn")), vec![Method::Knn]);
    let wk = cmd_compare(&wine_knn, &mut sink).expect("wine knn").rows[0].cv_mean;
    report.record(
        "5 knn",
        false,
        within(ik, 0.9533, 0.04) && within(wk, 0.8652, 0.05),
        format!("iris {ik:.4} (want 0.9533±0.04); wine {wk:.4} (want 0.8652±0.05)"),
    );

    // 6. Candidate counts
    let mut mismatches = Vec::new();
    for n in 1..=8 {
        for l in 1..=3 {
            let cfg = DictionaryConfig {
                degree: l,
                input_lag: 1,
                mode: Mode::Temporal,
                ..DictionaryConfig::default()
            };
            let formula = count_candidate_terms(n, l).unwrap();
            let listed = enumerate_terms(n, &cfg).len() as u64;
            let brute = brute_force_count(n, l);
            if formula != listed || formula != brute {
                mismatches.push(format!("n={n} l={l}: {formula}/{listed}/{brute}"));
            }
        }
    }
    report.record(
        "6 counts",
        true,
        mismatches.is_empty(),
        format!("24 (n, l) pairs, mismatches: {mismatches:?}"),
    );

    // 7. Orthogonality
    let worst: Vec<String> = traces
        .iter()
        .map(|(name, t)| {
            let w = t.steps.iter().map(|s| s.basis_max_off_diagonal).fold(0.0, f64::max);
            format!("{name} {w:.1e}")
        })
        .collect();
    let ok = traces
        .iter()
        .all(|(_, t)| t.steps.iter().all(|s| s.basis_max_off_diagonal <= 1e-8));
    report.record("7 orthogonality", true, ok, format!("max off-diagonal per dataset: {}", worst.join(", ")));

    // 8. Multicollinearity
    let mut checked = 0;
    let mut broken = Vec::new();
    for name in ["iris.csv", "wine.csv", "glass.csv"] {
        let cfg = config(data(name), tmp.path());
        let prep = prepare(&cfg).expect("prepare");
        let sel = selection_config(&cfg);
        let n_classes = prep.data.n_classes();
        let (base, _) = select_terms(&prep.dictionary, &prep.labels, n_classes, &prep.folds, &sel).unwrap();
        for j in 0..prep.dictionary.len() {
            let dup = with_duplicate(&prep.dictionary, j);
            let (t, _) = select_terms(&dup, &prep.labels, n_classes, &prep.folds, &sel).unwrap();
            checked += 1;
            if t.terms() != base.terms() {
                broken.push(format!("{name} column {j}"));
            }
        }
    }
    report.record(
        "8 multicollinearity",
        true,
        broken.is_empty(),
        format!("{checked} duplicated columns over iris, wine, glass; changed sequences: {broken:?}"),
    );

    // 9. Planted feature
    let mut misses = Vec::new();
    for seed in 0..20 {
        let (term, score, planted) = planted_run(seed);
        if term != format!("u{}(k-1)", planted + 1) || score < 0.99 {
            misses.push(format!("seed {seed}: {term} {score:.3}"));
        }
    }
    report.record("9 planted", true, misses.is_empty(), format!("20 seeds, misses: {misses:?}"));

    // 10. Logistic oracle
    let mut worst_rel: f64 = 0.0;
    for seed in 0..5 {
        let (x, y) = logistic_problem(seed);
        let ridge = 1e-4;
        let fit = fit_logistic(&x, &y, &FitOptions { ridge, ..FitOptions::default() }).unwrap();
        let ours = objective(&x, &y, &fit.coefficients, ridge);
        let theirs = objective(&x, &y, &gradient_ascent(&x, &y, ridge), ridge);
        worst_rel = worst_rel.max((ours - theirs).abs() / theirs.abs());
    }
    report.record(
        "10 logistic oracle",
        true,
        worst_rel <= 1e-6,
        format!("worst relative log-likelihood gap {worst_rel:.2e} over 5 problems (want <= 1e-6)"),
    );

    // 11. Determinism
    let mut differing = Vec::new();
    for name in ["iris.csv", "wine.csv"] {
        let a = config(data(name), &tmp.path().join("det_a"));
        let b = config(data(name), &tmp.path().join("det_b"));
        cmd_fit(&a, &mut sink).unwrap();
        cmd_fit(&b, &mut sink).unwrap();
        for f in ["model.json", "trace.json", "curve.csv"] {
            if std::fs::read(a.output_dir.join(f)).unwrap() != std::fs::read(b.output_dir.join(f)).unwrap() {
                differing.push(format!("{name}/{f}"));
            }
        }
    }
    report.record(
        "11 determinism",
        true,
        differing.is_empty(),
        format!("iris and wine fit outputs, differing files: {differing:?}"),
    );

    let passed = report.results.iter().filter(|r| r.1).count();
    println!("{passed}/{} checks passed", report.results.len());
    let fatal = report.results.iter().any(|(_, pass, fatal)| !pass && (*fatal || strict));
    if fatal {
        std::process::exit(1);
    }
}

fn write_waveform(path: &Path) {
    let w = generate_waveform(5000, 42).expect("waveform");
    let mut s = w.feature_names.join(",") + ",class\n";
    for i in 0..w.n_samples() {
        for v in w.features.row(i).iter() {
            s.push_str(&format!("{v},"));
        }
        s.push_str(&format!("{}\n", w.labels[i]));
    }
    std::fs::write(path, s).expect("write waveform");
}

/// Sorted index tuples of length `l` over `{0, ..., n}`, where 0 stands for
/// the empty factor.
fn brute_force_count(n: usize, l: usize) -> u64 {
    let mut count = 0;
    let total = (n + 1).pow(l as u32);
    for code in 0..total {
        let mut digits = Vec::with_capacity(l);
        let mut c = code;
        for _ in 0..l {
            digits.push(c % (n + 1));
            c /= n + 1;
        }
        if digits.windows(2).all(|w| w[0] <= w[1]) {
            count += 1;
        }
    }
    count
}

fn with_duplicate(dict: &CandidateDictionary, j: usize) -> CandidateDictionary {
    let mut dup = dict.clone();
    let last = dup.matrix.ncols();
    dup.matrix = dup.matrix.insert_column(last, 0.0);
    let src = dict.matrix.column(j).clone_owned();
    dup.matrix.column_mut(last).copy_from(&src);
    dup.terms.push(dict.terms[j].clone());
    dup
}

fn planted_run(seed: u64) -> (String, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let n = 120;
    let planted = rng.random_range(0..11usize);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let x = DMatrix::from_fn(n, 11, |i, j| {
        if j == planted {
            (if labels[i] == 1 { 1.0 } else { -1.0 }) * rng.random_range(0.5..1.5)
        } else {
            rng.random_range(-1.0..1.0)
        }
    });
    let z = fit_normalization_matrix(&x).transform(&x).unwrap();
    let dict = CandidateDictionary::build(&z, None, &DictionaryConfig::default()).unwrap();
    let folds = make_folds(&labels, 5, seed, true).unwrap();
    let cfg = SelectionConfig {
        max_terms: 1,
        ..SelectionConfig::default()
    };
    let (trace, _) = select_terms(&dict, &labels, 2, &folds, &cfg).unwrap();
    (trace.steps[0].term.to_string(), trace.steps[0].score, planted)
}

fn logistic_problem(seed: u64) -> (DMatrix<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
    let n = 100;
    let p = 4;
    let truth: Vec<f64> = (0..p).map(|_| rng.random_range(-1.5..1.5)).collect();
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.random_range(-2.0..2.0) });
    let y = (0..n)
        .map(|i| {
            let eta: f64 = (0..p).map(|j| x[(i, j)] * truth[j]).sum();
            rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())
        })
        .collect();
    (x, y)
}

fn objective(x: &DMatrix<f64>, y: &[bool], beta: &[f64], ridge: f64) -> f64 {
    let mut ll = 0.0;
    for i in 0..x.nrows() {
        let eta: f64 = (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum();
        ll += if y[i] { eta } else { 0.0 } - (1.0 + eta.exp()).ln();
    }
    ll - 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>()
}

fn gradient_ascent(x: &DMatrix<f64>, y: &[bool], ridge: f64) -> Vec<f64> {
    let mut beta = vec![0.0; x.ncols()];
    let mut f = objective(x, y, &beta, ridge);
    let mut step = 1.0;
    for _ in 0..200_000 {
        let mut g: Vec<f64> = beta.iter().map(|b| -ridge * b).collect();
        for i in 0..x.nrows() {
            let eta: f64 = (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum();
            let r = f64::from(u8::from(y[i])) - 1.0 / (1.0 + (-eta).exp());
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += r * x[(i, j)];
            }
        }
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg.sqrt() < 1e-10 {
            break;
        }
        step *= 2.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&g).map(|(b, gi)| b + step * gi).collect();
            let fc = objective(x, y, &cand, ridge);
            if fc >= f + 0.5 * step * gg || step < 1e-16 {
                beta = cand;
                f = fc;
                break;
            }
            step *= 0.5;
        }
    }
    beta
}
