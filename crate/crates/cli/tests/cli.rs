use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dyadic_cli::manifest::{sha256_hex, MANIFEST_NAME};
use dyadic_cli::RunManifest;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_dyadic");

struct Case {
    dir: TempDir,
}

impl Case {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("config.json"), config).unwrap();
        Self { dir }
    }

    fn config(&self) -> PathBuf {
        self.dir.path().join("config.json")
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, extra: &[&str]) -> Output {
        self.command(extra).output().unwrap()
    }

    fn command(&self, extra: &[&str]) -> Command {
        let mut cmd = Command::new(BIN);
        cmd.arg("--config").arg(self.config()).args(extra).env_remove("DYADIC_OUT_DIR");
        cmd
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME)).unwrap()).unwrap()
}

fn files_below(root: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out
}

fn assert_manifest_complete(dir: &Path) {
    let m = manifest(dir);
    let mut listed = BTreeSet::new();
    for f in &m.files {
        let bytes = fs::read(dir.join(&f.path)).unwrap();
        assert_eq!(f.sha256, sha256_hex(&bytes), "{}", f.path);
        assert_eq!(f.bytes, bytes.len() as u64);
        listed.insert(f.path.clone());
    }
    let mut on_disk = files_below(dir);
    on_disk.remove(MANIFEST_NAME);
    assert_eq!(listed, on_disk);
}

const ZERO_SIMULATE: &str =
    r#"{"command":"simulate","params":{"lambda":2,"beta":2.5},"data":{"kind":"explicit","values":[0,0,0,0]}}"#;

const RANDOM_VERIFY: &str = r#"{"command":"verify","params":{"lambda":2,"beta":2.5},"data":{"kind":"random","n_modes":6,"seed":3}}"#;

#[test]
fn zero_data_simulates_to_zero_and_passes() {
    let case = Case::new(ZERO_SIMULATE);
    let out = case.out("run");
    let o = case.run(&["--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut rows = csv.lines().skip(1);
    assert!(rows.next().is_some());
    for row in csv.lines().skip(1) {
        // the first column is time
        assert!(row.split(',').skip(1).all(|x| x.parse::<f64>().unwrap() == 0.0), "{row}");
    }
    let m = manifest(&out);
    assert!(m.passed && m.verdicts.iter().all(|v| v.passed));
    assert_manifest_complete(&out);
}

#[test]
fn manifest_lists_every_artifact() {
    let case = Case::new(
        r#"{"command":"verify","params":{"lambda":2,"beta":2.5},"data":{"kind":"random","n_modes":8,"seed":9,"nonnegative":false},"verify":{"convergence_modes":[4,8]}}"#,
    );
    let out = case.out("run");
    assert_eq!(code(&case.run(&["--out", out.to_str().unwrap()])), 0);
    assert!(manifest(&out).files.len() >= 3);
    assert_manifest_complete(&out);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&Command::new(BIN).output().unwrap()), 1);
    assert_eq!(code(&Command::new(BIN).args(["--config", "x", "--bogus"]).output().unwrap()), 1);
    let bad = Case::new(r#"{"command":"simulate","params":{"lambda":2,"beta":2.5}}"#);
    assert_eq!(code(&bad.run(&["--out", bad.out("o").to_str().unwrap()])), 1);
    let typo = Case::new(r#"{"command":"simulate","params":{"lambda":2,"beta":2.5},"dta":{}}"#);
    assert_eq!(code(&typo.run(&[])), 1);
    let lambda = Case::new(r#"{"command":"stationary","params":{"lambda":1,"beta":2.5}}"#);
    assert_eq!(code(&lambda.run(&["--out", lambda.out("o").to_str().unwrap()])), 1);
}

#[test]
fn help_documents_exit_codes() {
    let o = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for needle in ["Exit codes", "hypothesis", "numerical", "I/O", "DYADIC_OUT_DIR"] {
        assert!(text.contains(needle), "{needle}");
    }
}

#[test]
fn violated_hypothesis_exits_two() {
    let case = Case::new(
        r#"{"command":"verify","params":{"lambda":2,"beta":2.5},"data":{"kind":"explicit","values":[0.01,0.001]},"verify":{"eps3":0.17}}"#,
    );
    assert_eq!(code(&case.run(&["--out", case.out("o").to_str().unwrap()])), 2);
}

#[test]
fn step_limit_exits_three() {
    let case = Case::new(
        r#"{"command":"simulate","params":{"lambda":2,"beta":2.5},"data":{"kind":"explicit","values":[1,0.5,0.25]},"integrator":{"t_end":10,"max_steps":2}}"#,
    );
    assert_eq!(code(&case.run(&["--out", case.out("o").to_str().unwrap()])), 3);
}

#[test]
fn failed_check_exits_four() {
    let case = Case::new(
        r#"{"command":"selfsimilar","params":{"lambda":2,"beta":1},"selfsimilar":{"agreement_tolerance":1e-300}}"#,
    );
    let out = case.out("o");
    assert_eq!(code(&case.run(&["--out", out.to_str().unwrap()])), 4);
    assert!(!manifest(&out).passed);
}

#[test]
fn unwritable_output_exits_five() {
    let case = Case::new(ZERO_SIMULATE);
    let blocker = case.out("file");
    fs::write(&blocker, "").unwrap();
    let o = case.run(&["--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 5);
}

#[test]
fn output_directory_precedence() {
    let case = Case::new(ZERO_SIMULATE);
    let env_dir = case.out("from-env");
    let flag_dir = case.out("from-flag");
    let status = case.command(&[]).env("DYADIC_OUT_DIR", &env_dir).output().unwrap().status;
    assert!(status.success());
    assert!(env_dir.join(MANIFEST_NAME).exists());
    let status = case
        .command(&["--out", flag_dir.to_str().unwrap()])
        .env("DYADIC_OUT_DIR", case.out("unused"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(flag_dir.join(MANIFEST_NAME).exists());
    assert!(!case.out("unused").exists());
}

#[test]
fn seed_flag_replaces_config_seed() {
    let base = Case::new(RANDOM_VERIFY);
    let reseeded = Case::new(&RANDOM_VERIFY.replace("\"seed\":3", "\"seed\":4"));
    let (a, b, c) = (base.out("a"), base.out("b"), reseeded.out("c"));
    assert_eq!(code(&base.run(&["--out", a.to_str().unwrap()])), 0);
    assert_eq!(code(&base.run(&["--out", b.to_str().unwrap(), "--seed", "4"])), 0);
    assert_eq!(code(&reseeded.run(&["--out", c.to_str().unwrap()])), 0);
    let traj = |d: &Path| fs::read(d.join("trajectory.csv")).unwrap();
    assert_ne!(traj(&a), traj(&b));
    assert_eq!(traj(&b), traj(&c));
}

#[test]
fn json_format_replaces_csv() {
    let case = Case::new(ZERO_SIMULATE);
    let out = case.out("o");
    assert_eq!(code(&case.run(&["--out", out.to_str().unwrap(), "--format", "json"])), 0);
    let files = files_below(&out);
    assert!(files.contains("trajectory.json"));
    assert!(files.iter().all(|f| !f.ends_with(".csv")), "{files:?}");
    let _: serde_json::Value = serde_json::from_slice(&fs::read(out.join("trajectory.json")).unwrap()).unwrap();
}

#[test]
fn one_point_sweep_matches_a_direct_run() {
    let direct = Case::new(r#"{"command":"stationary","params":{"lambda":2,"beta":2.8},"stationary":{"target_len":25}}"#);
    let sweep = Case::new(
        r#"{"command":"sweep","params":{"lambda":2,"beta":2.5},"stationary":{"target_len":25},"sweep":{"command":"stationary","lambdas":[2],"betas":[2.8]}}"#,
    );
    let (d, s) = (direct.out("d"), sweep.out("s"));
    assert_eq!(code(&direct.run(&["--out", d.to_str().unwrap()])), 0);
    assert_eq!(code(&sweep.run(&["--out", s.to_str().unwrap(), "--workers", "2"])), 0);
    let point = s.join("point-000");
    for f in manifest(&d).files {
        assert_eq!(fs::read(d.join(&f.path)).unwrap(), fs::read(point.join(&f.path)).unwrap(), "{}", f.path);
    }
    let table = fs::read_to_string(s.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().contains(",subcritical,pass,"));
    assert_manifest_complete(&s);
}

#[test]
fn empty_grid_gives_empty_table() {
    let case = Case::new(
        r#"{"command":"sweep","params":{"lambda":2,"beta":2.5},"sweep":{"command":"stationary","lambdas":[],"betas":[2.5]}}"#,
    );
    let out = case.out("s");
    assert_eq!(code(&case.run(&["--out", out.to_str().unwrap()])), 0);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 1);
    assert!(table.starts_with("index,lambda,beta,u,regime"));
}

#[test]
fn sweep_records_failed_points_and_continues() {
    let case = Case::new(
        r#"{"command":"sweep","params":{"lambda":2,"beta":2.5},"stationary":{"target_len":20},"sweep":{"command":"stationary","lambdas":[2],"betas":[-1,2.5]}}"#,
    );
    let out = case.out("s");
    assert_eq!(code(&case.run(&["--out", out.to_str().unwrap()])), 4);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(",error,"), "{}", rows[0]);
    assert!(rows[1].contains(",pass,"), "{}", rows[1]);
}
