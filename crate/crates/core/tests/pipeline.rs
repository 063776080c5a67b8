use std::fs;

use omo::config::ExperimentConfig;
use omo::equilibrium::VIPool;
use omo::experiment::{gen_to_dir, run_to_dir, Metadata, METADATA_FILE, POOL_FILE, TRACE_FILE};
use omo::regret::read_csv;
use omo::Error;

const CONFIG: &str = r#"
[run]
rounds = 120
seed = 4

[network]
family = "mln"
pool_size = 4

[domain]
kind = "box"
lower = 0.0
upper = 1.0

[learner]
algo = "omod"
eta = 0.01
"#;

#[test]
fn run_artifacts_read_back() {
    let cfg = ExperimentConfig::from_toml(CONFIG).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_dir(&cfg, dir.path()).unwrap();

    let rows = read_csv(&fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap()).unwrap();
    assert_eq!(rows.len(), 120);
    let mut cum = 0.0;
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.t, i + 1);
        cum += row.regret_n;
        assert!((row.cum_regret_n - cum).abs() <= 1e-12 * (1.0 + cum.abs()));
        assert!((row.avg_regret_n - row.cum_regret_n / row.t as f64).abs() <= 1e-12);
    }
    assert!((cum - out.trace.cum_regret_n()).abs() < 1e-9);

    let md = Metadata::parse(&fs::read_to_string(dir.path().join(METADATA_FILE)).unwrap()).unwrap();
    assert_eq!(md.get("status"), Some("ok"));
    assert_eq!(md.get("eta"), Some("0.01"));
    assert_eq!(md.get("algo"), Some("omod"));
    assert_eq!(md.get("pool_size"), Some("4"));
    for key in ["rng_scheme", "quad_nodes", "solver_tol", "u_t", "u_t_residual", "eps_q", "x_1"] {
        assert!(md.get(key).is_some(), "missing {key}");
    }
    assert!(md.get("u_t_residual").unwrap().parse::<f64>().unwrap() <= 1e-6);
}

#[test]
fn gen_pool_matches_run_pool() {
    let cfg = ExperimentConfig::from_toml(CONFIG).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let pool = gen_to_dir(&cfg, dir.path()).unwrap();
    let reloaded = VIPool::from_text(&fs::read_to_string(dir.path().join(POOL_FILE)).unwrap()).unwrap();
    assert_eq!(pool.to_text().unwrap(), reloaded.to_text().unwrap());
    let run_dir = tempfile::tempdir().unwrap();
    let out = run_to_dir(&cfg, run_dir.path()).unwrap();
    assert_eq!(out.pool.to_text().unwrap(), pool.to_text().unwrap());
}

#[test]
fn rejected_configs_leave_no_files() {
    for bad in [
        "[run]\nrounds = 0\n",
        "[run]\nrounds = 10\n[learner]\neta = -1.0\n",
        "[domain]\nkind = \"torus\"\n",
        "[network]\npool_size = 0\n",
        "[solver]\ntol = 0.0\n",
    ] {
        let err = ExperimentConfig::from_toml(bad).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{bad}: {err}");
    }
}

#[test]
fn single_network_pool_converges() {
    let text = CONFIG.replace("pool_size = 4", "pool_size = 1").replace("rounds = 120", "rounds = 3000");
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_dir(&cfg, dir.path()).unwrap();
    let rows: Vec<_> = out.trace.rows().collect();
    let last = rows.last().unwrap();
    // the only equilibrium is u_T, so the play approaches it
    let x_last = &out.trace.records().last().unwrap().x_t;
    assert!((x_last - out.trace.u_t()).norm() < 1e-3);
    assert!(last.avg_regret_n.abs() < rows[9].avg_regret_n.abs());
}
