use std::path::Path;
use std::process::{Command, Output};

fn hierpin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hierpin"))
        .args(args)
        .env_remove("HIERPIN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = hierpin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Column `name` of every data row.
fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let at = header
        .iter()
        .position(|h| *h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    lines
        .map(|l| l.split(',').nth(at).unwrap().to_owned())
        .collect()
}

fn floats(csv_text: &str, name: &str) -> Vec<f64> {
    column(csv_text, name)
        .iter()
        .map(|x| x.parse().unwrap())
        .collect()
}

#[test]
fn walkprob_lists_q() {
    let out = stdout(&["walkprob", "--s", "2", "--n", "3"]);
    assert_eq!(floats(&out, "q"), [0.0, 0.5, 0.625, 0.6953125]);
    assert_eq!(column(&out, "path_count"), ["1", "2", "8", "128"]);
    assert_eq!(column(&out, "log_p_km")[0], "");
    assert_eq!(floats(&out[..], "m"), [0.0, 1.0, 2.0, 3.0]);
}

#[test]
fn annealed_reports_pinned_free_energy() {
    let out = stdout(&[
        "annealed", "--b", "2", "--s", "2", "--h", "1", "--tol", "1e-12",
    ]);
    let f = floats(&out, "value");
    assert_eq!(f.len(), 1);
    assert!((f[0] - 0.385_607_630_287_023_43).abs() < 1e-15, "{}", f[0]);
    assert_eq!(column(&out, "phase"), ["localized"]);
    assert!(out.lines().all(|l| !l.ends_with('\r')));
}

#[test]
fn quenched_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let base = [
        "quenched", "--b", "2", "--s", "2", "--beta", "1", "--h", "1", "--law", "gaussian",
        "--pool", "100000", "--levels", "25", "--seed", "42",
    ];
    for (name, threads) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "4")] {
        let mut args = base.to_vec();
        let p = path(name);
        args.extend(["--threads", threads, "--out", &p]);
        assert!(hierpin(&args).status.success());
    }
    let a = std::fs::read(path("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(path("b.csv")).unwrap());
    assert_eq!(a, std::fs::read(path("c.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    let (mean, se) = (floats(&text, "mean")[0], floats(&text, "std_err")[0]);
    assert!(mean > 5.0 * se && se > 0.0, "{mean} {se}");
}

#[test]
fn grid_rows_sorted_by_h() {
    let hs = "0.9,0.1,0.5,0.3,0.7,0.2,0.8,0.4,0.6,1.0";
    let out = stdout(&["annealed", "--h", hs]);
    let got = floats(&out, "h");
    assert_eq!(got.len(), 10);
    assert!(got.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn json_matches_csv() {
    let args = [
        "quenched", "--beta", "0.5,0", "--h", "0.2", "--pool", "500", "--levels", "6", "--seed",
        "3",
    ];
    let csv_text = stdout(&args);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&json_args)).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for (i, mean) in floats(&csv_text, "mean").into_iter().enumerate() {
        assert_eq!(rows[i]["mean"].as_f64().unwrap(), mean);
        assert_eq!(rows[i]["law"], "gaussian");
        assert_eq!(rows[i]["seed"], 3);
    }
    assert_eq!(rows[0]["beta"].as_f64().unwrap(), 0.0);
}

#[test]
fn replay_from_record() {
    let first = stdout(&[
        "quenched", "--beta", "0.7", "--h", "0.3", "--law", "signs", "--pool", "2000", "--levels",
        "8", "--seed", "11",
    ]);
    let get = |k: &str| column(&first, k)[0].clone();
    let replay = stdout(&[
        "quenched",
        "--b",
        &get("b"),
        "--s",
        &get("s"),
        "--beta",
        &get("beta"),
        "--h",
        &get("h"),
        "--law",
        &get("law"),
        "--pool",
        &get("pool"),
        "--levels",
        &get("levels"),
        "--seed",
        &get("seed"),
    ]);
    assert_eq!(first, replay);
}

#[test]
fn usage_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out = out_path.to_str().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["annealed"],
        vec!["annealed", "--h", "1", "--b", "1", "--out", out],
        vec!["quenched", "--h", "1", "--pool", "1", "--out", out],
        vec!["quenched", "--h", "1", "--law", "cauchy", "--out", out],
        vec!["scan", "--h-lo", "1", "--h-hi", "0", "--out", out],
        vec![
            "certify", "--h", "0.5", "--b", "3", "--s", "2", "--out", out,
        ],
        vec![
            "certify", "--h", "0.5", "--k", "4", "--n", "4", "--out", out,
        ],
        vec!["oracle-check", "--levels", "9", "--out", out],
        vec!["walkprob", "--n", "3", "--k", "0", "--out", out],
        vec!["--threads", "0", "walkprob", "--n", "3", "--out", out],
    ] {
        let o = hierpin(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
        assert!(!out_path.exists(), "{args:?} wrote output");
    }
}

#[test]
fn domain_errors_exit_1() {
    let o = hierpin(&["annealed", "--h", "1e-6", "--max-levels", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no convergence"));
    // already above the threshold at h_lo, so the bracket is invalid
    let o = hierpin(&[
        "scan", "--beta", "0", "--levels", "4", "--pool", "10", "--h-lo", "0.5", "--h-hi", "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let file = tempfile::NamedTempFile::new().unwrap();
    let under_file = file.path().join("x.csv");
    let o = hierpin(&[
        "walkprob",
        "--n",
        "2",
        "--out",
        under_file.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 5\npool = 300\n[quenched]\nh = [0.4, 0.1]\nlevels = 5\nbeta = 0.5\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&["quenched", "--config", cfg, "--levels", "4"]);
    let explicit = stdout(&[
        "quenched", "--seed", "5", "--pool", "300", "--h", "0.1,0.4", "--levels", "4", "--beta",
        "0.5",
    ]);
    assert_eq!(from_file, explicit);
    assert_eq!(column(&from_file, "levels"), ["4", "4"]);

    std::fs::write(dir.path().join("bad.toml"), "no_such_flag = 1\n").unwrap();
    let bad = dir.path().join("bad.toml");
    let o = hierpin(&["walkprob", "--n", "2", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hierpin"))
        .args(["walkprob", "--n", "2", "--format", "json"])
        .env("HIERPIN_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(Path::new(dir.path()).join("walkprob.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn oracle_check_passes() {
    for (b, s) in [("2", "2"), ("3", "2"), ("2", "3")] {
        let out = stdout(&[
            "oracle-check",
            "--b",
            b,
            "--s",
            s,
            "--levels",
            "3",
            "--draws",
            "100",
        ]);
        assert!(column(&out, "pass").iter().all(|p| p == "true"));
        assert!(floats(&out, "max_rel_err").iter().all(|e| *e <= 1e-12));
    }
}

#[test]
fn certify_search_selects_one_row() {
    let out = stdout(&[
        "certify",
        "--beta",
        "1",
        "--h",
        "0.5",
        "--seed",
        "42",
        "--conservative",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = v.as_array().unwrap();
    let selected: Vec<_> = rows.iter().filter(|r| r["selected"] == true).collect();
    assert_eq!(selected.len(), 1);
    assert_eq!(selected[0]["certifies"], true);
    assert!(selected[0]["bound"].as_f64().unwrap() > 0.0);
    assert_eq!(selected[0]["conservative"], true);
}

#[test]
fn fit_singularity_slope() {
    let out = stdout(&["fit-singularity", "--s", "2"]);
    let slope = floats(&out, "slope")[0];
    assert!((slope / (2.0 * 2f64.ln()) - 1.0).abs() < 0.15, "{slope}");
}
