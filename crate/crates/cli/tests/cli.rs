use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_loopy-spectra"));
    c.env_remove("LOOPY_SPECTRA_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = path(dir, name);
    fs::write(&p, text).unwrap();
    p
}

const TRIANGLE: &str = r#"{"n": 3, "motifs": [{"kind":"triangle","nodes":[0,1,2]}]}"#;

#[test]
fn seed_is_required() {
    let o = run(&["generate", "--model", "regular-et", "--n", "12"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--seed"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["spectrum", "mp", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).to_lowercase().contains("usage"), "{}", stderr(&o));
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("spectrum"));
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (path(&dir, "a.json"), path(&dir, "b.json"), path(&dir, "c.json"));
    for (p, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = run(&[
            "generate",
            "--model",
            "poisson-et",
            "--n",
            "200",
            "--mean-edges",
            "2",
            "--mean-triangles",
            "2",
            "--seed",
            seed,
            "--out",
            s(p),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn generate_validates_model_parameters() {
    let o = run(&["generate", "--model", "regular-et", "--n", "7", "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains('6'), "{}", stderr(&o));
    let o = run(&["generate", "--model", "poisson-et", "--n", "50", "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--mean-edges"));
}

#[test]
fn config_model_from_degrees_of_another_network() {
    let dir = TempDir::new().unwrap();
    let net = path(&dir, "net.json");
    let deg = path(&dir, "deg.txt");
    let cm = path(&dir, "cm.json");
    let cm_deg = path(&dir, "cm_deg.txt");
    assert_eq!(
        code(&run(&[
            "generate",
            "--model",
            "poisson-et",
            "--n",
            "300",
            "--mean-edges",
            "2",
            "--mean-triangles",
            "1",
            "--seed",
            "3",
            "--out",
            s(&net)
        ])),
        0
    );
    assert_eq!(code(&run(&["degrees", "--net", s(&net), "--out", s(&deg)])), 0);
    let o = run(&["generate", "--model", "config-model", "--degrees-file", s(&deg), "--seed", "3", "--out", s(&cm)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&run(&["degrees", "--net", s(&cm), "--out", s(&cm_deg)])), 0);
    assert_eq!(fs::read_to_string(&deg).unwrap(), fs::read_to_string(&cm_deg).unwrap());
    assert!(fs::read_to_string(&cm).unwrap().lines().skip(1).all(|l| !l.contains("triangle")));
}

#[test]
fn spectrum_mp_csv_format_and_determinism() {
    let dir = TempDir::new().unwrap();
    let net = path(&dir, "net.json");
    assert_eq!(code(&run(&["generate", "--model", "regular-et", "--n", "600", "--seed", "2", "--out", s(&net)])), 0);
    let mut outputs = Vec::new();
    for (threads, warm) in [("1", true), ("2", true), ("2", false)] {
        let out = path(&dir, &format!("mp{threads}{warm}.csv"));
        let mut args = vec![
            "spectrum",
            "mp",
            "--net",
            s(&net),
            "--xmin",
            "-3",
            "--xmax",
            "3",
            "--dx",
            "0.5",
            "--eta",
            "0.05",
            "--out",
            s(&out),
        ];
        if !warm {
            args.push("--no-warm-start");
        }
        let o = bin().args(&args).env("LOOPY_SPECTRA_THREADS", threads).output().unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(fs::read_to_string(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let lines: Vec<&str> = outputs[0].lines().collect();
    assert_eq!(lines[0], "x,rho,converged,iterations");
    assert_eq!(lines.len(), 14);
    assert!(lines[1].starts_with("-3,"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 4);
    assert_eq!(fields[2], "1");
    let digits = fields[1].trim_start_matches("0.").trim_start_matches('0').replace('.', "");
    assert!(digits.len() <= 12, "{}", fields[1]);
    // cold starts agree to solver tolerance but not necessarily bit for bit
    for (a, b) in outputs[0].lines().zip(outputs[2].lines()).skip(1) {
        let ra: f64 = a.split(',').nth(1).unwrap().parse().unwrap();
        let rb: f64 = b.split(',').nth(1).unwrap().parse().unwrap();
        assert!((ra - rb).abs() < 1e-8);
    }
}

#[test]
fn spectrum_mp_reports_non_convergence() {
    let dir = TempDir::new().unwrap();
    let net = path(&dir, "net.json");
    assert_eq!(code(&run(&["generate", "--model", "regular-et", "--n", "60", "--seed", "2", "--out", s(&net)])), 0);
    let out = path(&dir, "mp.csv");
    let o = run(&[
        "spectrum",
        "mp",
        "--net",
        s(&net),
        "--xmin",
        "0",
        "--xmax",
        "1",
        "--dx",
        "0.5",
        "--eta",
        "0.01",
        "--max-iter",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("did not converge"));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")), "{csv}");
}

#[test]
fn spectrum_mp_rejects_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "tri.json", TRIANGLE);
    let o = run(&["spectrum", "mp", "--net", s(&net), "--xmin", "0", "--xmax", "1", "--dx", "0.5", "--eta", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("eta"));
    let bad = write(&dir, "bad.json", r#"{"n": 3, "motifs": [{"kind":"triangle","nodes":[0,1,1]}]}"#);
    let o = run(&["spectrum", "mp", "--net", s(&bad), "--xmin", "0", "--xmax", "1", "--dx", "0.5", "--eta", "0.1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("motifs[0]"), "{}", stderr(&o));
}

#[test]
fn exact_regular_with_peaks() {
    let dir = TempDir::new().unwrap();
    let (out, peaks) = (path(&dir, "ex.csv"), path(&dir, "peaks.json"));
    let o = run(&[
        "spectrum",
        "exact-regular",
        "--xmin",
        "-4",
        "--xmax",
        "4",
        "--dx",
        "0.5",
        "--out",
        s(&out),
        "--peaks-out",
        s(&peaks),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&peaks).unwrap()).unwrap();
    assert_eq!(v["locations"], serde_json::json!([-2.0, 0.0]));
    for w in v["weights"].as_array().unwrap() {
        assert!((w.as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-5);
    }
    assert_eq!(v["weight_uncertainty"].as_array().unwrap().len(), 2);
    let csv = fs::read_to_string(&out).unwrap();
    let at = |x: &str| {
        csv.lines()
            .find(|l| l.starts_with(&format!("{x},")))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse::<f64>()
            .unwrap()
    };
    assert_eq!(at("-4"), 0.0);
    assert!(at("-1") > 0.1 && at("2") > 0.1);
}

#[test]
fn diag_and_moments_on_a_triangle() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "tri.json", TRIANGLE);
    let (out, eigs) = (path(&dir, "h.csv"), path(&dir, "eigs.txt"));
    let o = run(&["spectrum", "diag", "--net", s(&net), "--out", s(&out), "--eigs-out", s(&eigs)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let values: Vec<f64> = fs::read_to_string(&eigs).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    for (g, w) in values.iter().zip([-1.0, -1.0, 2.0]) {
        assert!((g - w).abs() < 1e-10);
    }
    let mass: f64 = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() * 0.1)
        .sum();
    assert!((mass - 1.0).abs() < 1e-9);

    let smooth = path(&dir, "s.csv");
    let o = run(&[
        "spectrum",
        "diag",
        "--net",
        s(&net),
        "--eta",
        "0.1",
        "--xmin",
        "-2",
        "--xmax",
        "3",
        "--dx",
        "0.01",
        "--out",
        s(&smooth),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&smooth).unwrap().lines().count(), 502);

    let o = run(&["moments", "--net", s(&net), "--max-order", "3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "0,1\n1,0\n2,2\n3,2\n");
    assert_eq!(code(&run(&["moments", "--net", s(&net), "--max-order", "13"])), 2);
}

#[test]
fn compare_exit_codes() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "x,rho,converged,iterations\n0,1,1,0\n1,1,1,0\n2,1,1,0\n");
    let b = write(&dir, "b.csv", "x,rho,converged,iterations\n0,1.5,1,0\n1,1.5,1,0\n2,1.5,1,0\n");
    let far = write(&dir, "far.csv", "x,rho,converged,iterations\n5,1,1,0\n6,1,1,0\n");
    let junk = write(&dir, "junk.csv", "x,y\n1,2\n");

    let o = run(&["compare", s(&a), s(&a), "--threshold", "1e-12"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("value=0 "), "{}", stdout(&o));

    let o = run(&["compare", s(&a), s(&b)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("value=1 "), "{}", stdout(&o));
    assert_eq!(code(&run(&["compare", s(&a), s(&b), "--threshold", "0.5"])), 1);
    assert_eq!(code(&run(&["compare", s(&a), s(&b), "--metric", "linf", "--threshold", "0.6"])), 0);

    let o = run(&["compare", s(&a), s(&far)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("overlap"));
    assert_eq!(code(&run(&["compare", s(&a), s(&junk)])), 2);
}

#[test]
fn thread_variable_is_validated() {
    let o = bin().args(["moments", "--net", "missing.json"]).env("LOOPY_SPECTRA_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("LOOPY_SPECTRA_THREADS"));
}
