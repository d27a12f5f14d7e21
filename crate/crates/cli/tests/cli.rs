use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use std::f64::consts::TAU;

fn hais(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hais")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn field(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no `{key}` in {out}"))
        .trim()
        .parse()
        .unwrap()
}

const LAPLACE_2D: &str = r#"{"model_type":"poe","m":2,"l":2,"expert":"laplace","phi":[[1,0],[0,1]]}"#;
const ZERO_LINEAR: &str = r#"{"model_type":"linear_generative","m":2,"l":2,"prior":"gaussian","phi":[[0,0],[0,0]],"sigma_n":0.1}"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_on_its_own_proposal_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "g.json", r#"{"model_type":"gaussian","dim":3}"#);
    let o = hais(&["estimate", "--model", s(&model), "--n", "100", "--particles", "50", "--seed", "1", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((field(&stdout(&o), "log_z") - 1.5 * TAU.ln()).abs() < 1e-12);
    assert!(dir.path().join("estimate.csv").exists());
}

#[test]
fn estimate_identity_laplace_poe() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "poe.json", LAPLACE_2D);
    let weights = dir.path().join("w.csv");
    let o = hais(&[
        "estimate", "--model", s(&model), "--n", "10000", "--out", s(dir.path()), "--particles-out", s(&weights),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let (log_z, se) = (field(&out, "log_z"), field(&out, "std_err"));
    assert!((log_z - 4f64.ln()).abs() < 0.05 && se > 0.0, "{out}");
    assert!((field(&out, "analytic_log_z") - 1.3863).abs() < 1e-4);
    let lines: Vec<String> = std::fs::read_to_string(&weights).unwrap().lines().map(String::from).collect();
    assert_eq!(lines[0], "particle,log_weight");
    assert_eq!(lines.len(), 201);
}

#[test]
fn usage_errors_exit_with_two() {
    let o = hais(&["estimate", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--model"));

    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "poe.json", LAPLACE_2D);
    let o = hais(&["estimate", "--model", s(&model), "--estimator", "nuts", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("hais") && err.contains("ais-mh") && err.contains("ais-hmc-reset"), "{err}");

    let bad = write(dir.path(), "bad.json", r#"{"model_type":"poe","m":2,"l":2,"expert":"laplace","phi":[[1,0]]}"#);
    let o = hais(&["estimate", "--model", s(&bad), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("phi"), "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().count(), 1);

    let o = hais(&["sweep", "--model", s(&model), "--n-list", "10", "--estimators", "hais,bogus", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("valid names"));
}

#[test]
fn loglik_analysis_and_generative() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", r#"{"model_type":"gaussian","dim":2}"#);
    let zero = write(dir.path(), "zero.txt", "0 0\n");
    let o = hais(&["loglik", "--model", s(&g), "--data", s(&zero), "--n", "20", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("loglik.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,log_likelihood,std_err_logz,ess"));
    let ll: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((ll + TAU.ln()).abs() < 1e-12);
    assert!(lines.next().unwrap().starts_with("# mean_ll="));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("loglik.json")).unwrap()).unwrap();
    assert_eq!(json["points"], 1);

    let gen = write(dir.path(), "lin.json", ZERO_LINEAR);
    let o = hais(&["loglik", "--model", s(&gen), "--data", s(&zero), "--generative", "--n", "50", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("loglik.json")).unwrap()).unwrap();
    assert!((json["mean_ll"].as_f64().unwrap() - 2.7673).abs() < 1e-4);
    assert_eq!(json["mode"], "generative");

    let o = hais(&["loglik", "--model", s(&gen), "--data", s(&zero), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--generative"));
}

#[test]
fn loglik_dimension_mismatch_names_both() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", r#"{"model_type":"gaussian","dim":2}"#);
    let data = write(dir.path(), "d.txt", "1 2 3\n");
    let o = hais(&["loglik", "--model", s(&g), "--data", s(&data), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains('2') && err.contains('3'), "{err}");
}

#[test]
fn csv_numbers_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "poe.json", LAPLACE_2D);
    let o = hais(&["estimate", "--model", s(&model), "--n", "10", "--particles", "4", "--out", s(dir.path())]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("estimate.csv")).unwrap();
    let first = csv.lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    let mantissa = first.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17, "{first}");
}

#[test]
fn sweep_rows_svg_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "poe.json", LAPLACE_2D);
    let o = hais(&["sweep", "--model", s(&model), "--n-list", "10", "--estimators", "hais", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv.lines().next(), Some("n_distributions,estimator,repeat,log_z,std_err,ess,seconds"));

    let o = hais(&[
        "sweep", "--model", s(&model), "--n-list", "10,30", "--estimators", "hais,ais-mh,ais-hmc-reset", "--repeats", "2",
        "--svg", "--particles", "20", "--out", s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let keys: Vec<String> = csv.lines().skip(1).map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect();
    let mut expected = Vec::new();
    for n in [10, 30] {
        for e in ["hais", "ais-mh", "ais-hmc-reset"] {
            for r in 0..2 {
                expected.push(format!("{n},{e},{r}"));
            }
        }
    }
    assert_eq!(keys, expected);
    let svg = std::fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray") && svg.contains(r#"class="truth""#));
}

fn without_seconds(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn same_manifest_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "poe.json", LAPLACE_2D);
    let data = write(dir.path(), "d.txt", "0.5 -1\n2 0.25\n");
    let gen = write(dir.path(), "lin.json", ZERO_LINEAR);
    let runs: Vec<Vec<String>> = vec![
        vec!["estimate", "--model", s(&model), "--n", "50", "--particles", "16", "--seed", "3"],
        vec!["loglik", "--model", s(&model), "--data", s(&data), "--n", "50", "--seed", "4"],
        vec!["loglik", "--model", s(&gen), "--data", s(&data), "--generative", "--n", "50", "--threads", "3"],
        vec!["sweep", "--model", s(&model), "--n-list", "5,20", "--repeats", "2", "--particles", "8"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for (k, args) in runs.iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
        full.extend(["--out", s(&out)]);
        let read_all = || -> Vec<(String, String)> {
            let mut files: Vec<(String, String)> = std::fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "json"))
                .map(|p| {
                    let text = std::fs::read_to_string(&p).unwrap();
                    let name = p.file_name().unwrap().to_string_lossy().into_owned();
                    let text = if name == "sweep.csv" { without_seconds(&text) } else { text };
                    (name, text)
                })
                .collect();
            files.sort();
            files
        };
        assert!(hais(&full).status.success());
        let first = read_all();
        let manifest: serde_json::Value =
            serde_json::from_str(&first.iter().find(|f| f.0 == "manifest.json").unwrap().1).unwrap();
        let argv: Vec<String> = manifest["argv"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().into()).collect();
        assert_eq!(&argv[1..], &full.iter().map(|a| a.to_string()).collect::<Vec<_>>()[..]);
        let replay: Vec<&str> = argv[1..].iter().map(String::as_str).collect();
        assert!(hais(&replay).status.success());
        assert_eq!(first, read_all(), "run {k}");
    }
}

#[test]
fn manifest_records_config_and_digests() {
    use sha2::{Digest, Sha256};
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "poe.json", LAPLACE_2D);
    let o = hais(&["estimate", "--model", s(&model), "--n", "10", "--out", s(dir.path())]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "estimate");
    assert_eq!(m["config"]["n_particles"], 200);
    assert_eq!(m["config"]["epsilon"], 0.2);
    assert!((m["config"]["gamma"].as_f64().unwrap() - (1.0 - 2f64.powf(-0.2))).abs() < 1e-15);
    assert_eq!(m["config"]["estimator"], "hais");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    let digest = hex::encode(Sha256::digest(LAPLACE_2D.as_bytes()));
    assert_eq!(m["inputs"][0]["sha256"], digest.as_str());
}

fn pgm(dir: &Path, name: &str, w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> PathBuf {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push(f(x, y));
        }
    }
    let p = dir.join(name);
    std::fs::write(&p, bytes).unwrap();
    p
}

#[test]
fn preprocess_images_then_reuse_transform() {
    let dir = tempfile::tempdir().unwrap();
    let a = pgm(dir.path(), "a.pgm", 24, 24, |x, y| (1 + (x * 7 + y * 13) % 200) as u8);
    let b = pgm(dir.path(), "b.pgm", 24, 24, |x, y| (1 + (x * x + 3 * y) % 250) as u8);
    let train = dir.path().join("train");
    let o = hais(&[
        "preprocess", "--images", s(&a), s(&b), "--patch-edge", "4", "--n-patches", "2000", "--components", "6",
        "--out", s(&train),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.contains("components 6"), "{summary}");
    let white = hais_core::pipeline::io::read_matrix(&train.join("whitened.txt")).unwrap();
    assert_eq!((white.rows(), white.cols()), (2000, 6));
    for j in 0..6 {
        let v: f64 = white.iter_rows().map(|r| r[j] * r[j]).sum::<f64>() / 1999.0;
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    let test = dir.path().join("test");
    let tf = train.join("transform.json");
    let o = hais(&[
        "preprocess", "--images", s(&a), "--patch-edge", "4", "--n-patches", "100", "--seed", "9", "--apply-transform",
        s(&tf), "--binary", "--out", s(&test),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(test.join("whitened.bin").exists() && !test.join("transform.json").exists());

    let o = hais(&[
        "preprocess", "--images", s(&a), "--patch-edge", "3", "--n-patches", "100", "--apply-transform", s(&tf),
        "--out", s(&test),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn preprocess_constant_images_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let flat = pgm(dir.path(), "flat.pgm", 20, 20, |_, _| 50);
    let o = hais(&["preprocess", "--images", s(&flat), "--patch-edge", "4", "--n-patches", "100", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("variance"), "{}", stderr(&o));
}

#[test]
fn preprocess_matrix_input() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..50)
        .map(|i| {
            let t = i as f64 * 0.37;
            format!("{} {} {}\n", t.sin(), t.cos() + 0.5 * t.sin(), (2.0 * t).sin())
        })
        .collect();
    let m = write(dir.path(), "m.txt", &rows);
    let o = hais(&["preprocess", "--matrix", s(&m), "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("transform.json")).unwrap()).unwrap();
    assert_eq!(t["scales"].as_array().unwrap().len(), 3);
}
