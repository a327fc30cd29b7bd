use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use birat::ratmap::{BirationalPair, MapFile};
use birat::zoo;

fn henon() -> BirationalPair {
    zoo::zoo("henon", &zoo::ZooParams::default()).unwrap().pair.unwrap()
}

fn birat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_birat"))
        .args(args)
        .env_remove("BIRAT_SEED")
        .output()
        .expect("run birat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn error_report(o: &Output) -> serde_json::Value {
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().last().expect("stderr report");
    serde_json::from_str(line).expect("JSON error report")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn help_exits_zero() {
    let o = birat(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("mc-degree"));
}

#[test]
fn cremona_degrees_alternate() {
    let dir = tempfile::tempdir().unwrap();
    let o = birat(&["--zoo", "cremona", "--out", &out_arg(dir.path()), "degrees", "--n", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("[2, 1, 2, 1, 2, 1]"));
    let saved: Vec<u32> = serde_json::from_str(&fs::read_to_string(dir.path().join("degrees.json")).unwrap()).unwrap();
    assert_eq!(saved, vec![2, 1, 2, 1, 2, 1]);
    let m = manifest(dir.path());
    assert_eq!(m["command"], "degrees");
    assert_eq!(m["params"]["n"], 6);
    assert_eq!(m["artifacts"][0]["file"], "degrees.json");
}

#[test]
fn henon_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let o = birat(&["--zoo", "henon", "--out", &out_arg(dir.path()), "stability", "--n", "4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("algebraically stable up to n = 4: [2, 4, 8, 16]"));
}

#[test]
fn verify_power_map_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = birat(&["--zoo", "power", "--d", "2", "--out", &out_arg(dir.path()), "verify"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(rows.len() >= 8);
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn map_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("henon.json");
    MapFile::from_pair(&henon()).write(&path).unwrap();
    let out = dir.path().join("run");
    let o = birat(&["--map", path.to_str().unwrap(), "--out", &out_arg(&out), "degrees", "--n", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("[2, 4, 8]"));
    assert_eq!(manifest(&out)["map"]["source"]["file"], path.to_str().unwrap());
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = birat(&["--zoo", "nosuchmap", "--out", &out_arg(dir.path()), "degrees"]);
    assert_eq!(code(&o), 1);
    assert_eq!(error_report(&o)["error"], "usage");
    assert_eq!(code(&birat(&["--out", &out_arg(dir.path()), "degrees"])), 1);
    assert_eq!(code(&birat(&["--zoo", "henon", "nosuchcommand"])), 1);
    assert_eq!(code(&birat(&["--zoo", "henon", "--box", "2,1", "--out", &out_arg(dir.path()), "degrees"])), 1);
}

#[test]
fn file_and_parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = birat(&["--map", missing.to_str().unwrap(), "--out", &out_arg(dir.path()), "degrees"]);
    assert_eq!(code(&o), 2);
    assert_eq!(error_report(&o)["error"], "io");

    let junk = dir.path().join("junk.json");
    fs::write(&junk, "{ not json").unwrap();
    let o = birat(&["--map", junk.to_str().unwrap(), "--out", &out_arg(dir.path()), "degrees"]);
    assert_eq!(code(&o), 2);
    assert_eq!(error_report(&o)["error"], "parse");

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{ "seed": 1, "resolution": 8 }"#).unwrap();
    let o = birat(&["--zoo", "henon", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path()), "degrees"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn wrong_inverse_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = MapFile::from_pair(&henon());
    // the Cremona involution does not invert the Henon map
    f.inverse = MapFile::from_pair(&zoo::cremona()).inverse;
    let path = dir.path().join("bad.json");
    f.write(&path).unwrap();
    let o = birat(&["--map", path.to_str().unwrap(), "--out", &out_arg(dir.path()), "degrees"]);
    assert_eq!(code(&o), 3);
    let r = error_report(&o);
    assert_eq!(r["error"], "invalid-map");
    assert_eq!(r["command"], "degrees");
    assert_eq!(r["exit_code"], 3);
}

#[test]
fn non_reduced_map_fails_verify_with_6() {
    let dir = tempfile::tempdir().unwrap();
    // z0 * (z0, z1, z2): the identity with a common factor left in
    let path = dir.path().join("factor.json");
    fs::write(
        &path,
        r#"{ "k": 2, "name": "padded identity",
             "forward": [[["1","1",[2,0,0]]], [["1","1",[1,1,0]]], [["1","1",[1,0,1]]]] }"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = birat(&["--map", path.to_str().unwrap(), "--out", &out_arg(&out), "verify"]);
    assert_eq!(code(&o), 6);
    assert_eq!(error_report(&o)["error"], "verification-failed");
    assert!(stdout(&o).contains("reduced form"));
    assert!(out.join("verify.json").exists());
}

#[test]
fn unstable_map_refuses_measure() {
    let dir = tempfile::tempdir().unwrap();
    let o = birat(&["--zoo", "cremona", "--res", "8", "--out", &out_arg(dir.path()), "measure"]);
    assert_eq!(code(&o), 1);
    assert!(error_report(&o)["message"].as_str().unwrap().contains("stable"));
}

#[test]
fn escaping_samples_are_statistically_insufficient() {
    // on a small box most measure samples leave the chart within a few steps
    let dir = tempfile::tempdir().unwrap();
    let o = birat(&[
        "--zoo", "henon", "--res", "24", "--box=-1.5,1.5", "--samples", "2000", "--out", &out_arg(dir.path()), "mixing",
    ]);
    assert_eq!(code(&o), 5, "{}", stdout(&o));
    assert_eq!(error_report(&o)["error"], "statistical-insufficiency");
}

#[test]
fn measure_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = birat(&["--zoo", "henon", "--res", "16", "--depth", "12", "--out", &out_arg(dir.path()), "measure"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["density.csv", "density_z1.pgm", "density_z2.pgm", "measure.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("measure.json")).unwrap()).unwrap();
    let mass = rep["summary"]["total_mass"].as_f64().unwrap();
    assert!(mass > 0.5 && mass < 1.5, "mass {mass}");
    let csv = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(csv.starts_with("re(z1),im(z1),re(z2),im(z2),mass\n"));
    assert!(fs::read(dir.path().join("density_z1.pgm")).unwrap().starts_with(b"P"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "--zoo".to_string(), "henon".into(), "--seed".into(), "11".into(), "--samples".into(), "2000".into(),
            "--out".into(), out.to_string(), "mc-degree".into(), "--nmax".into(), "2".into(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |out: &Path| {
        let v = args(out.to_str().unwrap());
        let o = birat(&v.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let (oa, ob) = (run(&a), run(&b));
    let strip = |s: String, p: &Path| s.replace(p.to_str().unwrap(), "OUT");
    assert_eq!(strip(stdout(&oa), &a), strip(stdout(&ob), &b));
    let mut files: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(files.len() >= 2);
    for f in files {
        let (x, y) = (fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap());
        if f == "manifest.json" {
            let norm = |bytes: Vec<u8>, p: &Path| strip(String::from_utf8(bytes).unwrap(), p);
            assert_eq!(norm(x, &a), norm(y, &b));
        } else {
            assert_eq!(x, y, "{f:?} differs");
        }
    }
    // same directory twice
    let o1 = fs::read(a.join("manifest.json")).unwrap();
    run(&a);
    assert_eq!(o1, fs::read(a.join("manifest.json")).unwrap());
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{ "seed": 5, "depth": 9 }"#).unwrap();
    let out = dir.path().join("run");
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_birat"));
        c.args(["--zoo", "cremona", "--out", out.to_str().unwrap()]).args(extra).args(["degrees", "--n", "2"]);
        match env {
            Some(s) => c.env("BIRAT_SEED", s),
            None => c.env_remove("BIRAT_SEED"),
        };
        let o = c.output().unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let m = manifest(&out);
        (m["config"]["seed"].as_u64().unwrap(), m["config"]["depth"].as_u64().unwrap())
    };
    assert_eq!(seed_of(&[], None).0, 0);
    assert_eq!(seed_of(&[], Some("3")), (3, 20));
    let c = cfg.to_str().unwrap();
    assert_eq!(seed_of(&["--config", c], Some("3")), (5, 9));
    assert_eq!(seed_of(&["--config", c, "--seed", "8", "--depth", "4"], Some("3")), (8, 4));

    let mut bad = Command::new(env!("CARGO_BIN_EXE_birat"));
    bad.args(["--zoo", "cremona", "--out", out.to_str().unwrap(), "degrees"]).env("BIRAT_SEED", "seven");
    assert_eq!(bad.output().unwrap().status.code(), Some(1));
}

#[test]
fn green_point_reports_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = birat(&["--zoo", "henon", "--out", &out_arg(dir.path()), "green", "--point", "1000,0,1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("manifest.json").exists());
}
