//! Acceptance gate: one test per criterion, each ending in a single
//! pass/fail line. Run with `cargo test --test acceptance`.

use ema_gnn::autodiff::Tape;
use ema_gnn::data::{generate_synthetic, split_sequential, SyntheticSpec};
use ema_gnn::experiments::{
    build_static_graph, percent_change, run_experiment_a, run_experiment_b, run_experiment_c,
    windows_for, write_boxplot_csv, write_grid_csv, write_transfer_csv, ExperimentPlan,
};
use ema_gnn::graphs::{dtw_distance, Metric};
use ema_gnn::models::{Family, Forecaster, ModelConfig};
use ema_gnn::training::{evaluate, mse, train, TrainConfig};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn verdict(n: usize, name: &str, pass: bool) {
    println!(
        "criterion {n} ({name}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed");
}

// ---- 1: gradient correctness against finite differences -------------------

fn model_loss(model: &Forecaster, window: &Array2<f64>, target: &Array2<f64>) -> f64 {
    let mut tape = Tape::new();
    let ids = model.bind(&mut tape);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = model
        .forward_bound(&mut tape, &ids, window, false, &mut rng)
        .unwrap();
    let t = tape.constant(target.clone());
    let d = tape.sub(out, t).unwrap();
    let sq = tape.mul(d, d).unwrap();
    let m = tape.mean(sq);
    tape.value(m)[(0, 0)]
}

fn model_grads(model: &mut Forecaster, window: &Array2<f64>, target: &Array2<f64>) -> Vec<f64> {
    let mut tape = Tape::new();
    let ids = model.bind(&mut tape);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = model
        .forward_bound(&mut tape, &ids, window, false, &mut rng)
        .unwrap();
    let t = tape.constant(target.clone());
    let d = tape.sub(out, t).unwrap();
    let sq = tape.mul(d, d).unwrap();
    let m = tape.mean(sq);
    tape.backward(m).unwrap();
    model.collect_grads(&tape, &ids);
    model
        .params()
        .iter()
        .flat_map(|p| p.grad.iter().cloned().collect::<Vec<_>>())
        .collect()
}

#[test]
fn criterion_1_gradients_match_finite_differences() {
    let start = Instant::now();
    let (v, l) = (4usize, 2usize);
    let graph = ema_gnn::graphs::build_random(v, 0.8, 3).unwrap();
    let mut worst: f64 = 0.0;
    for family in [
        Family::Lstm,
        Family::RgcnAtt,
        Family::StAttCheb,
        Family::GraphLearn,
    ] {
        let mut cfg = ModelConfig::new(family, v, l);
        cfg.hidden = 4;
        for draw in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + draw);
            let mut model = Forecaster::new(&cfg, Some(&graph), draw).unwrap();
            for p in model.params_mut() {
                p.value.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
            }
            let window = Array2::from_shape_fn((l, v), |_| rng.gen_range(-1.0..1.0));
            let target = Array2::from_shape_fn((v, 1), |_| rng.gen_range(-1.0..1.0));

            let analytic = model_grads(&mut model, &window, &target);
            // central differences over every parameter entry
            let h = 1e-5;
            let mut numeric = Vec::with_capacity(analytic.len());
            let n_tensors = model.params().len();
            for ti in 0..n_tensors {
                let shape = model.params()[ti].shape();
                for r in 0..shape.0 {
                    for c in 0..shape.1 {
                        let orig = model.params()[ti].value[(r, c)];
                        model.params_mut()[ti].value[(r, c)] = orig + h;
                        let up = model_loss(&model, &window, &target);
                        model.params_mut()[ti].value[(r, c)] = orig - h;
                        let down = model_loss(&model, &window, &target);
                        model.params_mut()[ti].value[(r, c)] = orig;
                        numeric.push((up - down) / (2.0 * h));
                    }
                }
            }
            let diff: f64 = analytic
                .iter()
                .zip(&numeric)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale = numeric
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
                .max(1e-8);
            worst = worst.max(diff / scale);
        }
    }
    let pass = worst < 1e-3 && start.elapsed().as_secs() < 60;
    println!("  worst relative gradient error {worst:.2e}, {:?}", start.elapsed());
    verdict(1, "autodiff vs central finite differences", pass);
}

// ---- 2: DTW against brute-force alignment enumeration ---------------------

fn brute_force_dtw(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
    let cost = (a[i] - b[j]).abs();
    if i == 0 && j == 0 {
        return cost;
    }
    let mut best = f64::INFINITY;
    if i > 0 {
        best = best.min(brute_force_dtw(a, b, i - 1, j));
    }
    if j > 0 {
        best = best.min(brute_force_dtw(a, b, i, j - 1));
    }
    if i > 0 && j > 0 {
        best = best.min(brute_force_dtw(a, b, i - 1, j - 1));
    }
    cost + best
}

#[test]
fn criterion_2_dtw_matches_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut pass = true;
    for _ in 0..200 {
        let (n, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let fast = dtw_distance(&a, &b);
        let exact = brute_force_dtw(&a, &b, n - 1, m - 1);
        if fast != exact {
            pass = false;
        }
    }
    pass = pass && start.elapsed().as_secs() < 60;
    verdict(2, "DTW vs exhaustive alignment enumeration", pass);
}

// ---- 3: batch MSE against an independent double loop ----------------------

#[test]
fn criterion_3_mse_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pass = true;
    for _ in 0..100 {
        let n = rng.gen_range(1..8);
        let v = rng.gen_range(1..6);
        let preds: Vec<Array1<f64>> = (0..n)
            .map(|_| Array1::from_shape_fn(v, |_| rng.gen_range(-5.0..5.0)))
            .collect();
        let targets: Vec<Array1<f64>> = (0..n)
            .map(|_| Array1::from_shape_fn(v, |_| rng.gen_range(-5.0..5.0)))
            .collect();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..v {
                let d = preds[i][j] - targets[i][j];
                acc += d * d;
            }
        }
        let expected = acc / (n * v) as f64;
        if (mse(&preds, &targets) - expected).abs() > 1e-12 {
            pass = false;
        }
    }
    verdict(3, "batch MSE vs double-loop sum", pass);
}

// ---- 4: exact edge counts after sparsification ----------------------------

#[test]
fn criterion_4_sparsity_law_exact_edge_counts() {
    let spec = SyntheticSpec {
        n_individuals: 1,
        seed: 4,
        ..SyntheticSpec::default()
    };
    let (cohort, _) = generate_synthetic(&spec).unwrap();
    let series = &cohort[0];
    let (train_seg, _) = split_sequential(series, 0.7).unwrap();
    let mut pass = true;
    for (gdt, expected) in [(0.2, 65usize), (0.4, 130), (1.0, 325)] {
        for metric in [Metric::Euc, Metric::Knn, Metric::Dtw, Metric::Corr, Metric::Rand] {
            let g = build_static_graph(metric, train_seg.view(), &series.variable_names, gdt, 9)
                .unwrap();
            if g.edge_count() != expected {
                println!("  {metric} at gdt {gdt}: {} edges, expected {expected}", g.edge_count());
                pass = false;
            }
        }
    }
    verdict(4, "sparsified graphs hit exact edge counts", pass);
}

// ---- 5: planted graph beats a random graph of equal density ---------------

#[test]
fn criterion_5_planted_graph_signal() {
    let start = Instant::now();
    let seq_len = 1;
    let mut wins = 0;
    for seed in 0..10u64 {
        let spec = SyntheticSpec {
            seed,
            ..SyntheticSpec::default()
        };
        let (cohort, planted) = generate_synthetic(&spec).unwrap();
        let mut planted_mses = Vec::new();
        let mut rand_mses = Vec::new();
        for (ii, (series, planted_graph)) in cohort.iter().zip(&planted).enumerate() {
            let (train_w, test_w) = windows_for(series, seq_len).unwrap();
            let (train_seg, _) = split_sequential(series, 0.7).unwrap();
            let rand_graph = build_static_graph(
                Metric::Rand,
                train_seg.view(),
                &series.variable_names,
                spec.density,
                1000 + ii as u64,
            )
            .unwrap();
            for (graph, sink) in [
                (planted_graph, &mut planted_mses),
                (&rand_graph, &mut rand_mses),
            ] {
                let mut cfg = ModelConfig::new(Family::RgcnAtt, series.n_vars(), seq_len);
                cfg.hidden = 16;
                let mut model = Forecaster::new(&cfg, Some(graph), 7 + ii as u64).unwrap();
                let tc = TrainConfig {
                    epochs: 40,
                    seed: seed * 100 + ii as u64,
                    ..TrainConfig::default()
                };
                train(&mut model, &train_w, &tc).unwrap();
                sink.push(evaluate(&model, &test_w).unwrap());
            }
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        if median(&mut planted_mses) < median(&mut rand_mses) {
            wins += 1;
        }
    }
    let elapsed = start.elapsed();
    println!("  planted graph wins {wins}/10 cohort seeds, {elapsed:?}");
    let pass = wins >= 7 && elapsed.as_secs() < 900;
    verdict(5, "planted adjacency beats random null", pass);
}

// ---- 6: training halves the loss at reference hyperparameters -------------

#[test]
fn criterion_6_training_efficacy_reference_hyperparameters() {
    let spec = SyntheticSpec {
        seed: 6,
        ..SyntheticSpec::default()
    };
    let (cohort, _) = generate_synthetic(&spec).unwrap();
    let series = &cohort[0];
    let seq_len = 5;
    let (train_w, _) = windows_for(series, seq_len).unwrap();
    let (train_seg, _) = split_sequential(series, 0.7).unwrap();
    let graph = build_static_graph(
        Metric::Corr,
        train_seg.view(),
        &series.variable_names,
        0.2,
        0,
    )
    .unwrap();
    let mut pass = true;
    for family in [
        Family::Lstm,
        Family::RgcnAtt,
        Family::StAttCheb,
        Family::GraphLearn,
    ] {
        // reference hyperparameters: hidden 32, dropout 0.3 are the
        // ModelConfig defaults; 300 epochs, lr 0.01 the TrainConfig defaults
        let cfg = ModelConfig::new(family, series.n_vars(), seq_len);
        assert_eq!(cfg.hidden, 32);
        assert_eq!(cfg.dropout, 0.3);
        // training MSE is compared in eval mode (dropout off) at both
        // ends, so the ratio measures the fit rather than dropout noise
        let mut probe = Forecaster::new(&cfg, Some(&graph), 11).unwrap();
        let one = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        train(&mut probe, &train_w, &one).unwrap();
        let epoch1 = evaluate(&probe, &train_w).unwrap();

        let mut model = Forecaster::new(&cfg, Some(&graph), 11).unwrap();
        let tc = TrainConfig::default();
        assert_eq!(tc.epochs, 300);
        assert_eq!(tc.lr, 0.01);
        train(&mut model, &train_w, &tc).unwrap();
        let final_mse = evaluate(&model, &train_w).unwrap();
        let ratio = final_mse / epoch1;
        println!("  {family}: epoch-1 {epoch1:.4} -> final {final_mse:.4} (x{ratio:.3})");
        if !(ratio < 0.5) {
            pass = false;
        }
    }
    verdict(6, "all families halve their training loss", pass);
}

// ---- 7: report tables have the published shapes ---------------------------

#[test]
fn criterion_7_report_shapes() {
    let spec = SyntheticSpec {
        n_individuals: 2,
        n_vars: 6,
        n_timepoints: 40,
        seed: 7,
        ..SyntheticSpec::default()
    };
    let (cohort, _) = generate_synthetic(&spec).unwrap();
    let plan = ExperimentPlan {
        epochs: 1,
        hidden: 4,
        ..ExperimentPlan::default()
    };
    let dir = tempfile::tempdir().unwrap();

    let a = run_experiment_a(&cohort, &plan).unwrap();
    write_grid_csv(&a, &dir.path().join("report_a.csv")).unwrap();
    let a_text = std::fs::read_to_string(dir.path().join("report_a.csv")).unwrap();
    let a_lines: Vec<&str> = a_text.lines().collect();
    let a_ok = a_lines.len() == 14
        && a_lines[0] == "model,seq_1,seq_2,seq_5"
        && a_lines.iter().skip(1).all(|l| l.split(',').count() == 4);

    let b = run_experiment_b(&cohort, &plan).unwrap();
    write_grid_csv(&b, &dir.path().join("report_b.csv")).unwrap();
    let b_text = std::fs::read_to_string(dir.path().join("report_b.csv")).unwrap();
    let b_lines: Vec<&str> = b_text.lines().collect();
    let b_ok = b_lines.len() == 16 && b_lines[0] == "model,gdt_0.2,gdt_0.4,gdt_1";

    let c = run_experiment_c(&cohort, &plan).unwrap();
    write_transfer_csv(&c, &dir.path().join("report_c.csv")).unwrap();
    write_boxplot_csv(&c, &dir.path().join("boxplot_c.csv")).unwrap();
    let c_text = std::fs::read_to_string(dir.path().join("report_c.csv")).unwrap();
    let c_header = c_text.lines().next().unwrap();
    let c_ok = c_header.contains("percent_change")
        && c_header.contains("graph_correlation")
        && c_header.contains("individual_id");

    println!("  report_a {} rows, report_b {} rows", a_lines.len() - 1, b_lines.len() - 1);
    verdict(7, "report tables match published layouts", a_ok && b_ok && c_ok);
}

// ---- 8: learned-graph transfer end to end ---------------------------------

#[test]
fn criterion_8_learned_graph_transfer_loop() {
    let arithmetic_ok = (percent_change(1.0, 0.797).unwrap() - (-20.3)).abs() < 1e-9
        && percent_change(2.0, 2.0).unwrap() == 0.0;

    let spec = SyntheticSpec {
        n_individuals: 2,
        n_vars: 6,
        n_timepoints: 40,
        seed: 8,
        ..SyntheticSpec::default()
    };
    let (cohort, _) = generate_synthetic(&spec).unwrap();
    let plan = ExperimentPlan {
        epochs: 2,
        hidden: 4,
        ..ExperimentPlan::default()
    };
    let report = run_experiment_c(&cohort, &plan).unwrap();
    let all_ok = report.records.iter().all(|r| r.outcome.is_ok());
    let learned_exported = report
        .graphs
        .iter()
        .filter(|(_, g)| g.metric == Metric::Learned)
        .count()
        == 10; // 5 metrics x 2 individuals
    let finite = report.records.iter().all(|r| {
        r.outcome
            .as_ref()
            .map(|o| o.mse_static.is_finite() && o.mse_learned.is_finite() && o.percent_change.is_finite())
            .unwrap_or(false)
    });
    verdict(
        8,
        "transfer study end to end with exact percent change",
        arithmetic_ok && all_ok && learned_exported && finite,
    );
}

// ---- 9: CLI runs are bitwise reproducible ---------------------------------

#[test]
fn criterion_9_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let run = |args: &[&str]| {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_ema-gnn"))
            .current_dir(dir)
            .args(args)
            .output()
            .expect("spawn ema-gnn");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&[
        "generate", "--out", "cohort.csv", "--n-individuals", "2", "--n-vars", "6",
        "--n-timepoints", "40", "--seed", "9",
    ]);
    let exp = [
        "experiment", "--which", "b", "--input", "cohort.csv", "--epochs", "1", "--hidden",
        "4", "--seed", "9", "--n-random-repeats", "2",
    ];
    let mut e1 = exp.to_vec();
    e1.extend(["--out-dir", "r1"]);
    let mut e2 = exp.to_vec();
    e2.extend(["--out-dir", "r2"]);
    run(&e1);
    run(&e2);
    let b1 = std::fs::read(dir.join("r1/report_b.csv")).unwrap();
    let b2 = std::fs::read(dir.join("r2/report_b.csv")).unwrap();
    // replay from the manifest reproduces the same bytes in place
    run(&["replay", "--manifest", "r1/run_manifest.json"]);
    let b1_again = std::fs::read(dir.join("r1/report_b.csv")).unwrap();
    verdict(9, "CLI reruns and replays are bitwise identical", b1 == b2 && b1 == b1_again);
}
