use std::path::Path;
use std::process::{Command, Output};

use homodyne_lhv_cli::run::manifest_path;

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homodyne-lhv"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn bell_test_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["--experiment", "bell-test", "--seed", "1", "--out", "b.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(!text.contains('\r'));
    let r = rows(&dir.path().join("b.csv"));
    assert_eq!(
        r[0][..8],
        ["setting_pair", "n_pp", "n_pm", "n_mp", "n_mm", "n_ab", "e_fair", "e_conventional"]
    );
    assert_eq!(r.len(), 6);
    assert_eq!(r[5][0], "summary");
    let s_fair: f64 = r[5][8].parse().unwrap();
    let sigma: f64 = r[5][10].parse().unwrap();
    assert!(s_fair <= 2.0 + 3.0 * sigma + 1e-12);

    let m: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(manifest_path(&dir.path().join("b.csv")))
            .unwrap()
            .trim(),
    )
    .unwrap();
    assert_eq!(m["seed"], 1);
    assert_eq!(m["experiment"], "bell-test");
    assert!(m["version"].as_str().unwrap().starts_with('v'));
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["config"]["source.phase_mode"], "two_class");
}

#[test]
fn manifest_replays_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.cfg");
    std::fs::write(
        &cfg,
        "experiment = histogram\nseed = 9\ntrials = 30000\narms.noise_sigma = 0.05\nsource.amplitude_sigma = 0.1\nhistogram.bins = 25\n",
    )
    .unwrap();
    let first = bin(&["--config", "h.cfg", "--out", "a.csv"], dir.path());
    assert!(first.status.success());
    let replay = bin(
        &["--config", "a.manifest.jsonl", "--out", "b.csv", "--workers", "3"],
        dir.path(),
    );
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(rows(&dir.path().join("a.csv"))[0], ["bin_lo", "bin_hi", "count", "density"]);
}

#[test]
fn histogram_tail_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &["--experiment", "histogram", "--out", "h.csv", "--set", "trials=400000", "--set", "histogram.bins=40"],
        dir.path(),
    );
    assert!(out.status.success());
    let m: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(dir.path().join("h.manifest.jsonl")).unwrap().trim()).unwrap();
    let f = m["summary"]["fraction_beyond_half_x_max"].as_f64().unwrap();
    assert!((f - 2.0 / 3.0).abs() < 0.005, "{f}");
}

#[test]
fn loophole_sweep_crosses_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &[
            "--experiment",
            "loophole-sweep",
            "--out",
            "s.csv",
            "--set",
            "source.phase_mode=uniform",
            "--set",
            "trials=200000",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&dir.path().join("s.csv"));
    assert_eq!(r[0][..4], ["threshold", "kept_fraction", "s_conventional", "s_fair"]);
    assert_eq!(r.len(), 21);
    let mut crossed = false;
    for row in &r[1..] {
        let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        let (conv, fair, sc, sf) = (v[2], v[3], v[4], v[5]);
        assert!(fair <= 2.0 + 3.0 * sf, "{row:?}");
        crossed |= conv > 2.0 + 5.0 * sc;
    }
    assert!(crossed);
    // The top threshold leaves no coincidences at π/4 separation.
    assert_eq!(r[20][2], "nan");
}

#[test]
fn other_experiments_write_headers() {
    let dir = tempfile::tempdir().unwrap();
    for (exp, header, extra) in [
        ("curve", "theta_b,n,p_pp,p_pm,p_mp,p_mm", vec!["--set", "trials=2000"]),
        ("scatter", "theta,x", vec!["--set", "trials=2000"]),
        ("singles", "theta,rate,stderr,n", vec!["--set", "trials=2000"]),
        ("tomography", "x,", vec!["--set", "arms.noise_sigma=0.5", "--set", "trials=20000"]),
    ] {
        let file = format!("{exp}.csv");
        let mut args = vec!["--experiment", exp, "--out", &file];
        args.extend(extra);
        let out = bin(&args, dir.path());
        assert!(out.status.success(), "{exp}: {}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(dir.path().join(&file)).unwrap();
        assert!(text.starts_with(header), "{exp}: {}", &text[..60.min(text.len())]);
    }
    let meta: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(dir.path().join("tomography.meta.jsonl")).unwrap().trim())
            .unwrap();
    assert_eq!(meta["n_x"], 64);
    assert!(meta["negativity_epsilon"].as_f64().unwrap() > 0.0);
    assert_eq!(meta["negative"], false);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], i32, &str); 5] = [
        (&["--experiment", "dance"], 2, "config"),
        (&["--experiment", "bell-test", "--set", "source.p_alpha_zero=2"], 2, "config"),
        (&["--experiment", "bell-test", "--workers", "0"], 2, "config"),
        (&["--experiment", "bell-test", "--out", "missing/dir/x.csv"], 3, "io"),
        (
            &["--experiment", "bell-test", "--set", "source.pd_threshold=1e9", "--out", "x.csv"],
            4,
            "estimator",
        ),
    ];
    for (args, code, kind) in cases {
        let out = bin(args, dir.path());
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        assert_eq!(stderr_json(&out)["error"], kind, "{args:?}");
    }
    let out = bin(&["--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x.csv").exists());
}
