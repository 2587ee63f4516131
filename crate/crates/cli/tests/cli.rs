use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bathent(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bathent"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

/// Everything except the first (tool-version) line.
fn body(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.split_once('\n').unwrap().1.to_string()
}

#[test]
fn asymptotic_sweep_writes_csv_manifest_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = bathent(
        &[
            "asymptotic-sweep",
            "--temperature",
            "0,0.3",
            "--distance",
            "0:0.2:0.05",
            "--jobs",
            "2",
            "--emit-plot-script",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    assert!(csv.starts_with("# tool = bathent "));
    assert!(csv.contains("# distance = 0:0.2:0.05\n"));
    assert!(csv.contains("\ngamma,omega_cut,T,r,E\n"));
    let rows = data_rows(&csv);
    // r = 0 has no stationary state and is skipped
    assert_eq!(rows.len(), 2 * 4);
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 5);
        for c in cells {
            let mantissa = c.split('e').next().unwrap().replace(['-', '.'], "");
            assert!(mantissa.len() >= 12, "{c}");
            c.parse::<f64>().unwrap();
        }
    }
    // entanglement at small r at T = 0 exceeds T = 0.3
    let e = |row: &str| row.split(',').nth(4).unwrap().parse::<f64>().unwrap();
    assert!(e(rows[0]) > e(rows[4]));
    let manifest = fs::read_to_string(dir.path().join("MANIFEST")).unwrap();
    assert!(manifest.contains("state = complete"));
    assert!(manifest.contains("file = fig1.csv rows=8"));
    assert!(manifest.contains("file = plot_fig1.py"));
    let script = fs::read_to_string(dir.path().join("plot_fig1.py")).unwrap();
    assert!(script.contains("fig1.csv") && script.contains("matplotlib"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["time-trace", "--distance", "0.1", "--t-max", "2", "--dt", "0.05"];
    let first = bathent(&[&args[..], &["--jobs", "1"]].concat(), a.path());
    let second = bathent(&[&args[..], &["--jobs", "3"]].concat(), b.path());
    assert!(first.status.success() && second.status.success());
    let (x, y) = (body(&a.path().join("fig2.csv")), body(&b.path().join("fig2.csv")));
    assert_eq!(x, y);
    assert_eq!(data_rows(&x).len(), 41);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small sweep\ngamma = 10\ndistance = 0.05,0.1\ntemperature = 0.1\n",
    )
    .unwrap();
    let out = bathent(
        &[
            "asymptotic-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--temperature",
            "0",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    assert!(csv.contains("# gamma = 10\n") && csv.contains("# temperature = 0\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1.00000000000000e1,"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["time-trace", "--dt", "0"],
        &["asymptotic-sweep", "--distance", "0.3:0.1:0.1"],
        &["asymptotic-sweep", "--gamma", "-1", "--distance", "0.1"],
        &["short-time-check", "--temperature", "0.1"],
        &["critical-distance", "--distance", "0.1"],
        &["no-such-command"],
    ];
    for args in cases {
        let out = bathent(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "colour = blue\n").unwrap();
    let out = bathent(&["time-trace", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("bathent: error kind=config code=2"), "{stderr}");
}

#[test]
fn numerical_failure_exits_with_three_and_flushes_a_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bathent(
        &["time-trace", "--distance", "0.1", "--t-max", "1", "--tol", "1e-14"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let manifest = fs::read_to_string(dir.path().join("MANIFEST")).unwrap();
    assert!(manifest.contains("state = partial"));
    assert!(manifest.contains("error = frequency integral truncated"));
    assert!(manifest.contains("file = fig2.csv rows=0"));
}

#[test]
fn oracle_comparison_passes_or_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bathent(&["oracle-compare", "--temperature", "0.2", "--t-max", "5"], dir.path());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let csv = fs::read_to_string(dir.path().join("deviation.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 11);
    for row in rows {
        let dc: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!(dc <= 1e-3);
    }
    let coarse = bathent(
        &[
            "oracle-compare",
            "--temperature",
            "0.2",
            "--t-max",
            "5",
            "--oracle-modes",
            "400",
        ],
        dir.path(),
    );
    assert_eq!(coarse.status.code(), Some(4));
}

#[test]
fn critical_distance_and_slope_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = bathent(&["critical-distance"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("critical.csv")).unwrap();
    let row = data_rows(&csv)[0].to_string();
    let d: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((d - 0.151).abs() < 0.01, "{d}");

    let out = bathent(&["slope-fit"], dir.path());
    assert!(out.status.success());
    let fit = fs::read_to_string(dir.path().join("slope_fit.csv")).unwrap();
    let row = data_rows(&fit)[0].to_string();
    assert!(row.ends_with(",ok"));
    let samples = fs::read_to_string(dir.path().join("slope_samples.csv")).unwrap();
    assert_eq!(data_rows(&samples).len(), 4);
}

#[test]
fn short_time_check_reports_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bathent(&["short-time-check", "--distance", "0,0.1"], dir.path());
    assert!(out.status.success());
    let slopes = fs::read_to_string(dir.path().join("short_time_slope.csv")).unwrap();
    assert_eq!(data_rows(&slopes).len(), 2);
    let curves = fs::read_to_string(dir.path().join("short_time.csv")).unwrap();
    assert_eq!(data_rows(&curves).len(), 2 * 25);
}
