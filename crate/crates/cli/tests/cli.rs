use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tailnorm::evt::{hill, weissman_quantile, OrderedSample};
use tailnorm::parallel::Execution;
use tailnorm::path_gen::{simulate_product, Multiplier, ProcessSpec, ProductSpec};
use tailnorm::{discrete_norm, NormOrder, RandomStream, TailModel};

fn tailnorm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailnorm"))
        .current_dir(dir)
        .env_remove("TAILNORM_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

const RAMP: &str = r#"
[simulate]
n = 1
m = 4
multiplier = { fixed = 1.0 }
driver = { kind = "deterministic_ramp" }
"#;

const PARETO_BM: &str = r#"
[simulate]
n = 300
m = 32
master_seed = 11
multiplier = { tail = { family = "pareto", gamma = 0.5 } }
driver = { kind = "brownian_motion" }
"#;

const DIRECT: &str = r#"
[experiment]
n = 1000
k_rule = { fixed = 40 }
replications = 20
master_seed = 5

[experiment.source.direct]
family = "pareto"
gamma = 1.0
"#;

#[test]
fn simulate_ramp() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ramp.toml"), RAMP).unwrap();
    let out = tailnorm(
        dir.path(),
        &["--config", "ramp.toml", "--out", "ramp.csv", "simulate"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("ramp.csv")).unwrap();
    assert_eq!(csv.lines().last().unwrap(), "0,0.25,0.5,0.75");
    let echo = json(&dir.path().join("ramp.config.json"));
    assert_eq!(echo["config"]["m"], 4);
    assert_eq!(echo["config"]["master_seed"], 0);
}

#[test]
fn simulate_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.toml"), PARETO_BM).unwrap();
    let a = tailnorm(
        dir.path(),
        &[
            "--config",
            "p.toml",
            "--out",
            "a.csv",
            "--workers",
            "1",
            "simulate",
        ],
    );
    let b = tailnorm(
        dir.path(),
        &[
            "--config",
            "p.toml",
            "--out",
            "b.csv",
            "--workers",
            "3",
            "simulate",
        ],
    );
    assert!(a.status.success() && b.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn simulate_rejects_empty_sample() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("z.toml"), RAMP.replace("n = 1", "n = 0")).unwrap();
    let out = tailnorm(
        dir.path(),
        &["--config", "z.toml", "--out", "z.csv", "simulate"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_then_estimate_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.toml"), PARETO_BM).unwrap();
    let out = tailnorm(
        dir.path(),
        &["--config", "p.toml", "--out", "p.csv", "simulate"],
    );
    assert!(out.status.success());

    let spec = ProductSpec {
        multiplier: Multiplier::Tail(TailModel::pareto(0.5).unwrap()),
        driver: ProcessSpec::brownian(),
    };
    let paths = simulate_product(
        &spec,
        32,
        300,
        &RandomStream::new(11),
        Execution::Sequential,
    )
    .unwrap();
    for (flag, order) in [("inf", NormOrder::Infinity), ("2", NormOrder::Finite(2.0))] {
        let norms: Vec<f64> = paths
            .rows()
            .map(|r| discrete_norm(r, order).unwrap())
            .collect();
        let sample = OrderedSample::new(norms).unwrap();
        let h = hill(&sample, 30).unwrap();
        let q = weissman_quantile(&sample, 30, 0.001, h.gamma_hat).unwrap();

        let out = tailnorm(
            dir.path(),
            &[
                "estimate",
                "--paths",
                "p.csv",
                "--norm-order",
                flag,
                "--k",
                "30",
                "--tail-prob",
                "0.001",
            ],
        );
        let v = stdout_json(&out);
        assert_eq!(v["gamma_hat"].as_f64().unwrap(), h.gamma_hat);
        assert_eq!(v["x_hat"].as_f64().unwrap(), q.x_hat);
        assert_eq!(v["d_n"].as_f64().unwrap(), q.d_n);
        assert!((q.d_n - 100.0).abs() < 1e-9);
        assert_eq!(v["config"]["k"], 30);
    }
}

#[test]
fn estimate_values_examples() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.csv"), "1\n2\n4\n8\n").unwrap();
    let v = stdout_json(&tailnorm(
        dir.path(),
        &[
            "estimate",
            "--values",
            "v.csv",
            "--k",
            "2",
            "--tail-prob",
            "0.5",
        ],
    ));
    assert!((v["gamma_hat"].as_f64().unwrap() - 1.03972).abs() < 1e-5);
    assert_eq!(v["x_hat"].as_f64().unwrap(), 2.0);
    assert_eq!(v["ci"].as_array().unwrap().len(), 2);

    let out = tailnorm(dir.path(), &["estimate", "--values", "v.csv", "--k", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k must be ≤ n−1"));

    std::fs::write(dir.path().join("bad.csv"), "1\n2\nfour\n8\n").unwrap();
    let out = tailnorm(dir.path(), &["estimate", "--values", "bad.csv", "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn estimate_reports_bad_path_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.csv"), "m,n\n2,3\n0,1\n0,2\n0,x\n").unwrap();
    let out = tailnorm(dir.path(), &["estimate", "--paths", "p.csv", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("line 5"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn check_rates_examples() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "check-rates",
        "--n",
        "1000",
        "--lambda",
        "0.5",
        "--gamma",
        "0.5",
        "--eta",
        "0.45",
        "--eps-prime",
        "0.05",
    ];
    let v = stdout_json(&tailnorm(
        dir.path(),
        &[&base[..], &["--m", "200"]].concat(),
    ));
    assert_eq!(v["required_m"], 100);
    assert_eq!(v["satisfied"], true);
    assert!(v["bound_value"].as_f64().unwrap() < 1.0);
    assert_eq!(v["config"]["n"], 1000);
    let v = stdout_json(&tailnorm(dir.path(), &[&base[..], &["--m", "50"]].concat()));
    assert_eq!(v["satisfied"], false);

    let out = tailnorm(
        dir.path(),
        &[
            "check-rates",
            "--n",
            "1000",
            "--lambda",
            "0.5",
            "--gamma",
            "0.5",
            "--eta",
            "0.05",
            "--eps-prime",
            "0.05",
            "--m",
            "10",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_rates_from_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("r.toml"),
        "[check_rates]\nn = 1000\nlambda_exp = 0.5\ngamma = 0.5\neta = 0.45\nm = 50\n",
    )
    .unwrap();
    let v = stdout_json(&tailnorm(
        dir.path(),
        &["--config", "r.toml", "check-rates"],
    ));
    assert_eq!(v["satisfied"], false);
    let v = stdout_json(&tailnorm(
        dir.path(),
        &["--config", "r.toml", "check-rates", "--m", "100"],
    ));
    assert_eq!(v["satisfied"], true);
}

#[test]
fn experiment_writes_summary_and_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.toml"), DIRECT).unwrap();
    let out = tailnorm(
        dir.path(),
        &["--config", "e.toml", "--out", "res/e.json", "experiment"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&dir.path().join("res/e.json"));
    assert_eq!(v["config"]["master_seed"], 5);
    assert_eq!(v["summary"]["replications"], 20);
    assert!(v["version"].is_string());
    let table = std::fs::read_to_string(dir.path().join("res/e.table.csv")).unwrap();
    assert_eq!(table.lines().count(), 21);
    assert!(table.starts_with("rep_index,gamma_hat,gamma_hat_oracle,x_hat,x_hat_oracle,c_n,std_gamma_err,std_quant_err,failed"));
}

#[test]
fn seed_flag_and_worker_env() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.toml"), DIRECT).unwrap();
    let a = stdout_json(&tailnorm(
        dir.path(),
        &["--config", "e.toml", "--seed", "99", "experiment"],
    ));
    assert_eq!(a["config"]["master_seed"], 99);
    let b = Command::new(env!("CARGO_BIN_EXE_tailnorm"))
        .current_dir(dir.path())
        .env("TAILNORM_WORKERS", "2")
        .args(["--config", "e.toml", "--seed", "99", "experiment"])
        .output()
        .unwrap();
    assert_eq!(stdout_json(&b), a);
    let bad = Command::new(env!("CARGO_BIN_EXE_tailnorm"))
        .current_dir(dir.path())
        .env("TAILNORM_WORKERS", "0")
        .args(["--config", "e.toml", "experiment"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let flag_wins = Command::new(env!("CARGO_BIN_EXE_tailnorm"))
        .current_dir(dir.path())
        .env("TAILNORM_WORKERS", "0")
        .args([
            "--config",
            "e.toml",
            "--workers",
            "1",
            "--seed",
            "99",
            "experiment",
        ])
        .output()
        .unwrap();
    assert_eq!(stdout_json(&flag_wins), a);
}

#[test]
fn single_replication_summary_equals_replication() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("e.toml"),
        DIRECT.replace("replications = 20", "replications = 1"),
    )
    .unwrap();
    let out = tailnorm(
        dir.path(),
        &["--config", "e.toml", "--out", "e.json", "experiment"],
    );
    assert!(out.status.success());
    let v = json(&dir.path().join("e.json"));
    let table = std::fs::read_to_string(dir.path().join("e.table.csv")).unwrap();
    let row: Vec<f64> = table
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    let g = v["summary"]["mean_gamma_hat"].as_f64().unwrap();
    assert!((g - row[1]).abs() <= 1e-11 * row[1].abs());
}

#[test]
fn failure_ceiling_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[experiment]
n = 20
m = 2
m_oracle = 256
norm_order = 1
k_rule = { fixed = 5 }
replications = 3
master_seed = 1
true_gamma = 1.0

[experiment.source.product]
multiplier = { fixed = 5e-324 }
driver = { kind = "deterministic_ramp" }
"#;
    std::fs::write(dir.path().join("f.toml"), text).unwrap();
    let out = tailnorm(dir.path(), &["--config", "f.toml", "experiment"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("e.toml"),
        DIRECT.replace("master_seed = 5", "master_seed = 5\nreplicatons = 4"),
    )
    .unwrap();
    let out = tailnorm(dir.path(), &["--config", "e.toml", "experiment"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicatons"));
}

#[test]
fn sweep_single_value_matches_experiment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.toml"), DIRECT).unwrap();
    let out = tailnorm(
        dir.path(),
        &[
            "--config", "e.toml", "--out", "s.json", "sweep", "--axis", "k", "--values", "25",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sweep = json(&dir.path().join("s.json"));
    let cell = &sweep["cells"][0]["report"];

    // The same cell as a plain experiment, with the cell's derived seed.
    let seed = cell["config"]["master_seed"].as_u64().unwrap();
    let cell_toml = DIRECT.replace("fixed = 40", "fixed = 25");
    std::fs::write(dir.path().join("c.toml"), cell_toml).unwrap();
    let seed = seed.to_string();
    let direct = stdout_json(&tailnorm(
        dir.path(),
        &["--config", "c.toml", "--seed", &seed, "experiment"],
    ));
    assert_eq!(cell, &direct);
    assert_eq!(
        std::fs::read(dir.path().join("s.k25.table.csv"))
            .unwrap()
            .len(),
        {
            let out = tailnorm(
                dir.path(),
                &[
                    "--config",
                    "c.toml",
                    "--seed",
                    &seed,
                    "--out",
                    "c.json",
                    "experiment",
                ],
            );
            assert!(out.status.success());
            std::fs::read(dir.path().join("c.table.csv")).unwrap().len()
        }
    );
}

#[test]
fn sweep_with_bad_cell_exits_3_and_keeps_good_cells() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{DIRECT}\n[sweep]\naxis = \"k\"\nvalues = [10, 5000]\n");
    std::fs::write(dir.path().join("e.toml"), text).unwrap();
    let out = tailnorm(
        dir.path(),
        &["--config", "e.toml", "--out", "s.json", "sweep"],
    );
    assert_eq!(out.status.code(), Some(3));
    let v = json(&dir.path().join("s.json"));
    assert!(v["cells"][0]["report"].is_object());
    assert!(v["cells"][1]["error"]
        .as_str()
        .unwrap()
        .contains("k must be"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            seen += 1;
            // The file is loaded and validated before any subcommand runs.
            let out = tailnorm(
                &dir,
                &[
                    "--config",
                    path.to_str().unwrap(),
                    "check-rates",
                    "--n",
                    "100",
                    "--lambda",
                    "0.5",
                    "--gamma",
                    "1",
                    "--eta",
                    "0.5",
                    "--m",
                    "10",
                ],
            );
            assert!(
                out.status.success(),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
    assert!(seen >= 5);
    let v = stdout_json(&tailnorm(
        &dir,
        &["--config", "check_rates.toml", "check-rates"],
    ));
    assert_eq!(v["required_m"], 100);
}
