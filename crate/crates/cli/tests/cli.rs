use std::path::Path;
use std::process::{Command, Output};

fn dicke3(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke3")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header and numeric rows of a CSV, metadata dropped.
fn parse(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().expect("header").split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn meta(text: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}: ");
    text.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn decoupled_single_atom_spectrum() {
    let o = dicke3(&["spectrum", "--cfg", "lambda", "--levels", "0,0,1", "--na", "1", "--nmax", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let (header, rows) = parse(&text);
    assert_eq!(header, ["index", "energy", "parity"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(column(&header, &rows, "energy"), [0.0, 0.0, 1.0]);
    assert!(meta(&text, "run-config").unwrap().contains("\"configuration\":\"lambda\""));
}

#[test]
fn rotated_spectrum_and_band_labels() {
    let base = ["spectrum", "--cfg", "lambda", "--na", "2", "--nmax", "6", "--mu13", "0.4", "--mu23", "0.7"];
    let run = |levels: &str, frame: &str| {
        let mut args = base.to_vec();
        args.extend(["--levels", levels, "--frame", frame]);
        let o = dicke3(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        parse(&stdout(&o))
    };
    let (h0, r0) = run("0,0,1", "unrotated");
    let (h1, r1) = run("0,0,1", "branch1");
    let (h2, _) = run("0,0.2,1", "branch1");
    for (a, b) in column(&h0, &r0, "energy").iter().zip(column(&h1, &r1, "energy")) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(!h0.contains(&"n_isolated".to_string()));
    assert!(h1.contains(&"n_isolated".to_string()));
    assert!(!h2.contains(&"n_isolated".to_string()));
    let bands = column(&h1, &r1, "n_isolated");
    assert_eq!(bands[0], 0.0);
    assert!(bands.iter().any(|&n| n == 2.0));
}

#[test]
fn exit_codes() {
    let bad = dicke3(&["spectrum", "--cfg", "xi", "--levels", "0,1,2", "--mu13", "0.3", "--nmax", "2"]);
    assert_eq!(bad.status.code(), Some(2));

    let xi = dicke3(&["store-retrieve", "--cfg", "xi", "--levels", "0,1,2", "--mu12", "0.3"]);
    assert_eq!(xi.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&xi.stderr).contains("Ξ configuration"));

    let stuck = dicke3(&["spectrum", "--cfg", "xi", "--levels", "0,1,2", "--mu12", "3", "--nmax-cap", "16"]);
    assert_eq!(stuck.status.code(), Some(3));

    let unordered = dicke3(&["spectrum", "--cfg", "v", "--levels", "1,0,2", "--nmax", "1"]);
    assert_eq!(unordered.status.code(), Some(2));
}

#[test]
fn memory_guard_override() {
    let args = ["spectrum", "--cfg", "xi", "--levels", "0,1,2", "--na", "2", "--nmax", "4"];
    let guarded = Command::new(env!("CARGO_BIN_EXE_dicke3")).args(args).env("DICKE3_MAX_DIM", "10").output().unwrap();
    assert_eq!(guarded.status.code(), Some(2));
    let lifted = Command::new(env!("CARGO_BIN_EXE_dicke3")).args(args).env("DICKE3_MAX_DIM", "100").output().unwrap();
    assert!(lifted.status.success());
    assert_eq!(parse(&stdout(&lifted)).1.len(), 30);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"configuration": "v", "levels": [0, 1, 1], "mu12": 0.3, "mu13": 0.2, "na": 1, "nmax": 4}"#)
        .unwrap();
    let o = dicke3(&["spectrum", "--config", cfg.to_str().unwrap(), "--mu13", "0.5"]);
    assert!(o.status.success());
    let echo = meta(&stdout(&o), "run-config").unwrap();
    assert!(echo.contains("\"mu13\":0.5"));
    assert!(echo.contains("\"mu12\":0.3"));

    std::fs::write(&cfg, r#"{"configuration": "v", "bogus": 1}"#).unwrap();
    let o = dicke3(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn off_detuning_population_maps() {
    let dir = tempfile::tempdir().unwrap();
    let o = dicke3(&[
        "populations", "--cfg", "v", "--levels", "0,0.8,1", "--na", "1", "--grid-points", "5", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = parse(&read(&dir.path().join("populations_unrotated.csv")));
    assert_eq!(rows.len(), 25);
    assert!((column(&h, &rows, "a11")[0] - 1.0).abs() < 1e-12);
    let along_mu13 = &column(&h, &rows, "a11")[..5];
    assert!(along_mu13.windows(2).all(|w| w[1] < w[0]));

    let (h1, r1) = parse(&read(&dir.path().join("populations_branch1.csv")));
    let (h2, r2) = parse(&read(&dir.path().join("populations_branch2.csv")));
    assert_eq!(r1.len(), 24);
    let worst = column(&h1, &r1, "a33").into_iter().chain(column(&h2, &r2, "a22")).fold(0.0, f64::max);
    assert!(worst <= 5e-4, "{worst}");
    assert!(worst > 0.0);
    let a11 = column(&h, &rows, "a11");
    for (x, y) in a11[1..].iter().zip(column(&h1, &r1, "a11")) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn phase_diagram_is_thread_count_independent() {
    let run = |threads: &str| {
        let o = dicke3(&[
            "phase-diagram", "--cfg", "xi", "--levels", "0,1,2", "--na", "1", "--rays", "4", "--dmu", "0.02",
            "--mu-max", "1.6", "--threads", threads,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        parse(&stdout(&o))
    };
    let (h, one) = run("1");
    let (_, two) = run("3");
    assert_eq!(one, two);
    assert_eq!(one.len(), 4);
    let s = column(&h, &one, "s");
    assert!((s[0] - 1.12).abs() < 0.05);
}

#[test]
fn separatrix_curves() {
    let o = dicke3(&["separatrix", "--cfg", "v", "--levels", "0,1,1", "--samples", "11"]);
    let (h, rows) = parse(&stdout(&o));
    assert_eq!(h, ["mu12", "mu13"]);
    for (a, b) in column(&h, &rows, "mu12").iter().zip(column(&h, &rows, "mu13")) {
        assert!((a.hypot(b) - 0.5).abs() < 1e-12);
    }

    let o = dicke3(&["separatrix", "--cfg", "lambda", "--levels", "0,0.5,1", "--samples", "41"]);
    let (h, rows) = parse(&stdout(&o));
    let mu13 = column(&h, &rows, "mu13");
    let mu23 = column(&h, &rows, "mu23");
    // flat below the threshold √0.5/2, shrinking above it
    let threshold = 0.5f64.sqrt() / 2.0;
    for (a, b) in mu13.iter().zip(&mu23) {
        if *b < threshold {
            assert!((a - 0.5).abs() < 1e-12);
        } else {
            assert!(*a <= 0.5);
        }
    }
}

#[test]
fn store_retrieve_report() {
    let o = dicke3(&["store-retrieve", "--cfg", "lambda", "--levels", "0,0,1", "--na", "2", "--mu13", "0.8", "--mu23", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let overlap: f64 = meta(&text, "overlap").unwrap().parse().unwrap();
    assert!((overlap - 1.0).abs() < 1e-10);
    assert_eq!(meta(&text, "approximate").unwrap(), "false");
    let (h, rows) = parse(&text);
    let iso = column(&h, &rows[1..], "isolated_population");
    assert!(iso.iter().all(|p| *p < 1e-10));

    let v = dicke3(&["store-retrieve", "--cfg", "v", "--levels", "0,0.8,1", "--mu12", "1", "--mu13", "1"]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stderr).contains("warning"));
}

#[test]
fn rotation_check_report() {
    let o = dicke3(&["rotate-check", "--na", "2", "--samples", "5", "--seed", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let (h, rows) = parse(&text);
    assert_eq!(rows.len(), 27);
    assert!(column(&h, &rows, "max_error").iter().all(|e| *e < 1e-12));
    assert!(meta(&text, "max_error").unwrap().parse::<f64>().unwrap() < 1e-12);
}

#[test]
fn evolution_outputs() {
    let o = dicke3(&[
        "evolve", "--cfg", "lambda", "--levels", "0,0,1", "--mu13", "0.6", "--mu23", "0.8", "--rabi", "--nu0", "1",
        "--nmax", "20", "--t-max", "10", "--dt", "0.5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = parse(&stdout(&o));
    assert_eq!(rows.len(), 21);
    assert!(column(&h, &rows, "stored_a11").iter().all(|p| *p < 1e-10));
    assert!(column(&h, &rows, "retrieved_a22").iter().all(|p| *p < 1e-10));

    let o = dicke3(&[
        "evolve", "--cfg", "xi", "--levels", "0,1,2", "--mu12", "0.3", "--nmax", "8", "--initial", "0,0,1,0",
        "--t-max", "5", "--dt", "1",
    ]);
    assert!(o.status.success());
    let (h, rows) = parse(&stdout(&o));
    assert!(column(&h, &rows, "norm").iter().all(|n| (n - 1.0).abs() < 1e-10));
    assert_eq!(column(&h, &rows, "a22")[0], 1.0);

    let o = dicke3(&["evolve", "--cfg", "xi", "--levels", "0,1,2", "--nmax", "2"]);
    assert_eq!(o.status.code(), Some(2));
}
