use acgeom::cli::{run, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["acgeom"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn help_and_version() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in ["nijenhuis", "lee-form", "nk-check", "certify", "germ", "symbols", "check-all"] {
        assert!(out.contains(sub), "{sub} missing from help");
    }
    assert_eq!(call(&["--version"]).0, EXIT_OK);
    let (code, _, err) = call(&[]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"));
}

#[test]
fn subcommand_exit_codes() {
    let small = ["--points", "8"];
    let cases: [(&[&str], i32); 8] = [
        (&["nijenhuis", "s6"], EXIT_OK),
        (&["lee-form", "r4_twisted", "--form", "F"], EXIT_OK),
        (&["nk-check", "s6"], EXIT_OK),
        (&["nk-check", "r6_product"], EXIT_CHECK_FAILED),
        (&["certify", "r4_flat"], EXIT_OK),
        (&["germ", "r4_twisted"], EXIT_OK),
        (&["symbols", "r4_flat"], EXIT_OK),
        (&["lee-form", "s6"], EXIT_USAGE),
    ];
    for (args, want) in cases {
        let mut a = args.to_vec();
        a.extend_from_slice(&small);
        let (code, out, err) = call(&a);
        assert_eq!(code, want, "{args:?}: {out}{err}");
    }
}

#[test]
fn tolerance_override_fails_check_but_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = out.to_str().unwrap();
    let (code, _, _) = call(&["nijenhuis", "r4_twisted", "--points", "4", "--tol", "nijenhuis_antilinearity=0", "--out", o]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["overall"], "FAIL");
    assert_eq!(report["tolerances"]["nijenhuis_antilinearity"], 0.0);
    assert_eq!(report["schema"], "acgeom-report/1");
    assert_eq!(call(&["nijenhuis", "r4_twisted", "--tol", "1e-40"]).0, EXIT_CHECK_FAILED);
    assert_eq!(call(&["nijenhuis", "r4_twisted", "--tol", "x=y"]).0, EXIT_USAGE);
}

#[test]
fn seeds_change_points_but_runs_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    for (name, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let p = path(name);
        assert_eq!(call(&["lee-form", "r4_remark1", "--points", "5", "--seed", seed, "--out", &p]).0, EXIT_OK);
    }
    let read = |n: &str| std::fs::read(path(n)).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    let timed = path("t");
    call(&["lee-form", "r4_remark1", "--points", "5", "--timing", "--out", &timed]);
    assert!(std::fs::read_to_string(&timed).unwrap().contains("wall_clock_seconds"));
    assert!(!String::from_utf8(read("a")).unwrap().contains("wall_clock_seconds"));
}

#[test]
fn scene_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("twisted.toml");
    let p = path.to_str().unwrap();
    assert_eq!(call(&["export-scene", "r4_twisted", "--out", p]).0, EXIT_OK);
    assert_eq!(call(&["germ", "--scene-file", p, "--points", "2"]).0, EXIT_OK);
    assert_eq!(call(&["germ", p, "--point", "0.1,0.2,0.3,0.4"]).0, EXIT_OK);
    assert_eq!(call(&["germ", "r4_twisted", "--scene-file", p]).0, EXIT_USAGE);
    assert_eq!(call(&["germ", "r4_twisted", "--point", "0.1,zero,0,0"]).0, EXIT_USAGE);
    let text = std::fs::read_to_string(&path).unwrap().replace("\"(1 + (x1^2))\"", "\"(1 + (x1^))\"");
    std::fs::write(&path, text).unwrap();
    let (code, _, err) = call(&["germ", "--scene-file", p]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("line") && err.contains("column"), "{err}");
}
