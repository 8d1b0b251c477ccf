use wlgrid_core::harness::{case_study_configs, run, sweep_snr, Algorithm, RunConfig};

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn mean_over_nodes(
    r: &wlgrid_core::RunResult,
    alg: Algorithm,
    f: impl Fn(&wlgrid_core::harness::Metrics) -> f64,
) -> f64 {
    let n = r.config.nodes;
    (0..n).map(|i| f(&r.aggregate(alg, i).unwrap().metrics)).sum::<f64>() / n as f64
}

#[test]
fn variance_falls_and_bias_shrinks_with_snr() {
    let base = RunConfig {
        trials: 24,
        algorithms: vec!["ACEKF".into(), "D-ACEKF".into()],
        ..case_study_configs(5).unwrap().remove(0).1
    };
    let levels = [20.0, 30.0, 40.0, 50.0];
    let runs = sweep_snr(&levels, &base).unwrap();
    for alg in [Algorithm::Acekf, Algorithm::Dacekf] {
        let var: Vec<f64> = runs.iter().map(|(_, r)| mean_over_nodes(r, alg, |m| m.variance)).collect();
        assert!(spearman(&levels, &var) < 0.0, "{alg} variance {var:?}");
    }
    let bias: Vec<f64> =
        runs.iter().map(|(_, r)| mean_over_nodes(r, Algorithm::Acekf, |m| m.bias.abs())).collect();
    assert!(bias[3] < bias[0], "ACEKF |bias| {bias:?}");
}

#[test]
fn frequency_step_is_tracked_by_every_kalman_variant() {
    let cfg = RunConfig {
        algorithms: Algorithm::KALMAN.iter().map(|a| a.name().to_string()).collect(),
        ..case_study_configs(3).unwrap().remove(0).1
    };
    let r = run(&cfg).unwrap();
    for alg in Algorithm::KALMAN {
        let est = r.estimates(0, alg).unwrap();
        for node in est {
            let tail = &node[node.len() - 100..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            assert!((mean - 51.0).abs() < 0.05, "{alg}: {mean}");
        }
    }
}

#[test]
fn unbalanced_study_separates_widely_linear_from_strict() {
    let cfg = RunConfig {
        trials: 16,
        snr_db: Some(40.0),
        algorithms: vec!["D-ACEKF".into(), "D-CEKF".into()],
        ..case_study_configs(5).unwrap().remove(0).1
    };
    let r = run(&cfg).unwrap();
    let bias = |alg| mean_over_nodes(&r, alg, |m| m.bias.abs());
    assert!(bias(Algorithm::Dacekf) * 10.0 < bias(Algorithm::Dcekf));
}

#[test]
fn spearman_reference_values() {
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 5.0, 9.0]), 1.0);
}
