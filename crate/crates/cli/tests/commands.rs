use std::fs;
use std::path::{Path, PathBuf};

use odebayes::io::{read_manifest, IoError, RunConfig};
use odebayes_cli::*;

fn config(dir: &Path, text: &str) -> RunConfig {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    RunConfig::from_toml(text, &p).unwrap()
}

fn simulate_toy(dir: &Path) -> PathBuf {
    let cfg = config(dir, "[model]\nkind = \"toy\"\n[output]\ndir = \"sim\"\n[sampler]\nseed = 11\n");
    cmd_simulate(&cfg).unwrap();
    dir.join("sim").join(DATA_FILE)
}

const SMALL_FIT: &str = r#"
[model]
kind = "toy"
[data]
path = "sim/data.csv"
[sampler]
n_chains = 2
n_warmup = 150
n_draws = 150
seed = 5
[output]
dir = "fit"
[predict]
count = 21
"#;

#[test]
fn toy_simulation_has_expected_shape_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate_toy(dir.path());
    let text = fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().count(), 1 + 156);
    assert_eq!(text.lines().next(), Some("group,time,channel,value"));
    let m = read_manifest(data.parent().unwrap()).unwrap();
    m.verify(data.parent().unwrap()).unwrap();
    assert_eq!(m.command, "simulate");
    assert_eq!(m.seed, 11);

    let first = fs::read(&data).unwrap();
    simulate_toy(dir.path());
    assert_eq!(fs::read(&data).unwrap(), first);
}

#[test]
fn empty_time_grid_is_a_config_error() {
    let text = "[model]\nkind = \"toy\"\n[simulate]\ntimes = { start = 0.0, stop = 48.0, count = 0 }\n";
    let err = RunConfig::from_toml(text, Path::new("run.toml")).unwrap_err();
    assert!(matches!(err, IoError::Config(_)), "{err}");
}

#[test]
fn malformed_dataset_row_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("sim")).unwrap();
    fs::write(dir.path().join("sim/data.csv"), "group,time,channel,value\nW1,0,0,1.2\nW1,0,1,0.7\nW1,4,0,1.x\n")
        .unwrap();
    let err = cmd_fit(&config(dir.path(), SMALL_FIT)).unwrap_err().to_string();
    assert!(err.contains("data.csv:4:"), "{err}");
}

#[test]
fn fit_predict_and_loo_on_toy_data() {
    let dir = tempfile::tempdir().unwrap();
    simulate_toy(dir.path());
    let cfg = config(dir.path(), SMALL_FIT);
    let fit = cmd_fit(&cfg).unwrap();
    assert!(fit.stdout.starts_with("Inference for model: toy."));
    let summary = fs::read_to_string(fit.dir.join(SUMMARY_CSV)).unwrap();
    assert_eq!(summary.lines().count(), 1 + 6);
    assert!(summary.starts_with("param,mean,se_mean,sd,q05,q50,q95,"));
    for name in ["p[1]", "p[2]", "p[3]", "y0[1]", "y0[2]", "sigma"] {
        assert!(fit.stdout.contains(name), "{name}");
    }
    let draws = fs::read_to_string(fit.dir.join(DRAWS_FILE)).unwrap();
    assert_eq!(draws.lines().count(), 1 + 300);
    read_manifest(&fit.dir).unwrap().verify(&fit.dir).unwrap();

    // same config, same bytes
    let first = fs::read(fit.dir.join(DRAWS_FILE)).unwrap();
    cmd_fit(&cfg).unwrap();
    assert_eq!(fs::read(fit.dir.join(DRAWS_FILE)).unwrap(), first);

    let pred = cmd_predict(&cfg).unwrap();
    let text = fs::read_to_string(pred.dir.join(PREDICT_FILE)).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "group,channel,time,mean_q2.5,mean_q25,mean_q50,mean_q75,mean_q97.5,pred_q2.5,pred_q25,pred_q50,pred_q75,pred_q97.5"
    );
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 6 * 2 * 21);
    assert_eq!(rows.iter().filter(|r| r[0] == "W1" && r[1] == "0").count(), 21);
    for r in &rows {
        let v: Vec<f64> = r[3..].iter().map(|s| s.parse().unwrap()).collect();
        let (mean, pred) = v.split_at(5);
        assert!(mean.windows(2).all(|w| w[0] <= w[1]) && pred.windows(2).all(|w| w[0] <= w[1]), "{r:?}");
        assert!(mean[4] - mean[0] <= pred[4] - pred[0], "{r:?}");
    }

    let loo = cmd_loo(&cfg, &[fit.dir.clone(), fit.dir.clone()]).unwrap();
    assert!(loo.stdout.contains("elpd_diff 0.0 se_diff 0.0"), "{}", loo.stdout);
    assert!(loo.stdout.contains("Pareto k diagnostic values"));
    assert!(loo.dir.join(LOO_FILE).exists());

    // tampering with an artifact is caught before scoring
    let ll = fit.dir.join("loglik.csv");
    let mut bytes = fs::read(&ll).unwrap();
    let last = bytes.len() - 2;
    bytes[last] = if bytes[last] == b'1' { b'2' } else { b'1' };
    fs::write(&ll, bytes).unwrap();
    assert!(cmd_loo(&cfg, std::slice::from_ref(&fit.dir)).is_err());
}

#[test]
fn draws_of_another_model_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    simulate_toy(dir.path());
    fs::create_dir_all(dir.path().join("fit")).unwrap();
    fs::write(
        dir.path().join("fit").join(DRAWS_FILE),
        "chain,draw,a,accept_stat,divergent,energy,tree_depth,n_leapfrog,step_size\n0,0,1,1,0,1,1,1,1\n",
    )
    .unwrap();
    assert!(cmd_predict(&config(dir.path(), SMALL_FIT)).is_err());
}

#[test]
fn no_pooling_prostate_summary_has_per_patient_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
holdout = "first_cycle"
[model]
kind = "prostate"
[data]
path = "sim/data.csv"
treatments = "sim/treatments.csv"
[pooling]
mode = "none"
[simulate]
n_groups = 2
times = { start = 0.0, stop = 28.0, count = 15 }
[sampler]
n_chains = 2
n_warmup = 30
n_draws = 30
max_tree_depth = 5
[output]
dir = "sim"
"#;
    let cfg = config(dir.path(), text);
    let sim = cmd_simulate(&cfg).unwrap();
    assert!(sim.files.contains(&TREATMENTS_FILE.to_string()));
    let mut cfg = cfg;
    cfg.output.dir = "fit".into();
    let fit = cmd_fit(&cfg).unwrap();
    for p in ["p[P1]", "p[P2]", "sigma_prop[P1]", "sigma_prop[P2]"] {
        assert!(fit.stdout.contains(p), "{p} missing from\n{}", fit.stdout);
    }
    assert!(fit.files.contains(&"loglik_holdout.csv".to_string()));
    let held = fs::read_to_string(fit.dir.join("loglik_holdout_obs.csv")).unwrap();
    // monthly pairs: held-out times 14..=28 step 2 for two patients
    assert_eq!(held.lines().count(), 1 + 2 * 8);
    assert!(held.lines().skip(1).all(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap() >= 14.0));
}
