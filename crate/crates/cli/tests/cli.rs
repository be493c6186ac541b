use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_carnot-verif"))
}

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    bin().current_dir(dir).arg("--config").arg(&cfg).args(args).output().unwrap()
}

#[test]
fn malformed_toml_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["classify"], "[classify\np = 2");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("TOML"));
}

#[test]
fn unknown_key_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["classify"], "[classify]\np = 2\nchi = 0\nmu = 0\nbogus = 1\n");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_section_exits_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["ko"], "seed = 1\n").status.code(), Some(2));
}

#[test]
fn omega_grid_flips_at_half() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[classify]\np = 2.0\nchi = 0.5\nmu = 1.0\nomega = { start = 0.0, stop = 2.0, step = 0.1 }\n";
    let out = run(d.path(), &["classify", "--format", "csv"], cfg);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let hdr = rdr.headers().unwrap().clone();
    let (iw, ia) = (
        hdr.iter().position(|h| h == "omega").unwrap(),
        hdr.iter().position(|h| h == "applies").unwrap(),
    );
    let rows: Vec<(f64, bool)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[iw].parse().unwrap(), r[ia].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 21);
    for (w, applies) in rows {
        assert_eq!(applies, w > 0.5 + 1e-9, "omega = {w}");
    }
}

#[test]
fn single_point_all_theorems() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[classify]\ntheorem = \"all\"\np = 2.0\nchi = 0.0\nmu = 0.0\nomega = 1.0\nsigma = 1.0\nq = 3\n";
    let out = run(d.path(), &["classify"], cfg);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = |t: &str| v.as_array().unwrap().iter().find(|r| r["theorem"] == t).unwrap().clone();
    // ω = p − 1 − χ: the strict a-priori range is on its boundary
    assert_eq!(row("main")["applies"], false);
    assert_eq!(row("main")["boundary"], true);
    assert_eq!(row("main2")["applies"], true);
    assert_eq!(row("main2")["tag"], "SlowGrowth");
}

#[test]
fn row_cap_is_enforced() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[limits]\nmax_rows = 10\n[classify]\np = 2.0\nchi = 0.0\nmu = 0.0\nomega = { start = 0.0, stop = 1.0, step = 0.01 }\n";
    assert_eq!(run(d.path(), &["classify"], cfg).status.code(), Some(2));
}

#[test]
fn selfcheck_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let r1 = "[group]\nkind = \"euclidean\"\ndim = 1\n[selfcheck]\nn_triples = 200\n";
    assert_eq!(run(d.path(), &["selfcheck"], r1).status.code(), Some(0));
    let h1 = "[selfcheck]\nn_triples = 200\n";
    assert_eq!(run(d.path(), &["selfcheck"], h1).status.code(), Some(0));
    let engel = "[group]\nkind = \"custom\"\nname = \"engel\"\n[selfcheck]\nn_triples = 200\nvolume_samples = 20000\n";
    assert_eq!(run(d.path(), &["selfcheck"], engel).status.code(), Some(0));
    let broken = "[selfcheck]\nn_triples = 200\nfault = \"broken_dilation\"\n";
    let out = run(d.path(), &["selfcheck"], broken);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dilation_automorphism"));
    let unknown = "[group]\nkind = \"custom\"\nname = \"nope\"\n";
    assert_eq!(run(d.path(), &["selfcheck"], unknown).status.code(), Some(2));
}

#[test]
fn witness_out_of_range_names_constraint() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[witness]\nmode = \"counterexample\"\ncase = 1\nchi = 0.5\nmu = 3.0\nomega = 0.25\n";
    let out = run(d.path(), &["witness"], cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu < 2 - chi"));
}

#[test]
fn witness_writes_summary_and_margins() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[witness]\nmode = \"sharpness\"\nchi = 0.0\nmu = 0.0\nsamples = 500\n";
    let out = run(d.path(), &["witness", "--out", "w.json"], cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("w.json")).unwrap()).unwrap();
    let c = v[0]["c_star"].as_f64().unwrap();
    assert!((c - 4.0).abs() < 1e-6, "{c}");
    let margins = fs::read_to_string(d.path().join("w.margins.csv")).unwrap();
    assert!(margins.starts_with("point,r,lhs,rhs,margin"));
    assert_eq!(margins.lines().count(), 501);
}

#[test]
fn counterexample_case_2_defaults_omega() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[witness]\nmode = \"counterexample\"\ncase = 2\nchi = 0.25\nmu = 2.0\nsamples = 400\n";
    let out = run(d.path(), &["witness"], cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["omega"].as_f64(), Some(0.75));
}

#[test]
fn counterexample_case_3_defaults() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[witness]\nmode = \"counterexample\"\ncase = 3\n";
    let out = run(d.path(), &["witness", "--out", "c3.json"], cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("c3.json")).unwrap()).unwrap();
    assert_eq!(v[0]["sigma"].as_f64(), Some(2.0));
    assert_eq!(v[0]["omega"].as_f64(), Some(1.0));
    assert!(v[0]["gamma"].as_f64().unwrap() >= std::f64::consts::E);
    assert!(d.path().join("c3.margins.csv").exists());
}

#[test]
fn witness_grid_one_row_per_point() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[witness]\nchi = [0.0, 0.25, 0.5]\nmu = [-0.5, 0.0, 0.5, 1.0]\nsamples = 400\n";
    let out = run(d.path(), &["witness", "--format", "csv"], cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rdr.records().count(), 12);
}

#[test]
fn witness_grid_with_failure_exits_1() {
    let d = tempfile::tempdir().unwrap();
    // σ below σ* leaves an asymptotic gap
    let cfg = "[witness]\nchi = 0.0\nmu = 0.0\nsigma = [1.5, 2.0]\nsamples = 400\n";
    let out = run(d.path(), &["witness", "--format", "csv"], cfg);
    assert_eq!(out.status.code(), Some(1));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rdr.records().count(), 2);
}

#[test]
fn ko_rows_match_expectation() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[ko]\nfamily = \"power\"\np = 2.0\nomega = [0.5, 1.5]\n";
    let out = run(d.path(), &["ko"], cfg);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["verdict"], "fails");
    assert_eq!(v[1]["verdict"], "holds");
    assert_eq!(v[0]["agrees"], true);
    assert_eq!(v[1]["agrees"], true);
}

#[test]
fn bad_paste_mask_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[paste]\nnodes = 16\nmask = \"v > 2gamma\"\n";
    assert_eq!(run(d.path(), &["paste"], cfg).status.code(), Some(2));
}

const SWEEP: &str = "seed = 11
[limits]
checkpoint_every = 7
[sweep]
target = \"classify\"
mode = \"random\"
samples = 50
[classify]
p = [1.5, 3.0]
chi = [0.0, 1.0]
mu = [-1.0, 2.0]
omega = [0.0, 3.0]
";

#[test]
fn sweep_resume_reproduces_full_run() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["sweep", "--out", "full.csv"], SWEEP);
    assert_eq!(out.status.code(), Some(0));
    let full = fs::read(d.path().join("full.csv")).unwrap();
    let text = String::from_utf8(full.clone()).unwrap();
    assert_eq!(text.lines().count(), 51);

    // interrupted after 14 points, with a torn partial chunk on disk
    let offset: usize = text.lines().take(15).map(|l| l.len() + 1).sum();
    let mut torn = full[..offset].to_vec();
    torn.extend_from_slice(b"1.7,0.2,garbage");
    fs::write(d.path().join("part.csv"), &torn).unwrap();
    fs::write(
        d.path().join("part.csv.checkpoint"),
        format!("{{\"points_done\":14,\"byte_offset\":{offset},\"total\":50}}"),
    )
    .unwrap();
    let out = run(d.path(), &["sweep", "--resume", "--out", "part.csv"], SWEEP);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(d.path().join("part.csv")).unwrap(), full);
}

#[test]
fn sweep_json_lines() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["sweep", "--format", "json", "--out", "s.jsonl"], SWEEP);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(d.path().join("s.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 50);
    for l in text.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v["p"].as_f64().unwrap() >= 1.5);
    }
}

#[test]
fn seed_flag_overrides_config() {
    let d = tempfile::tempdir().unwrap();
    run(d.path(), &["sweep", "--out", "a.csv"], SWEEP);
    run(d.path(), &["sweep", "--seed", "12", "--out", "b.csv"], SWEEP);
    assert_ne!(
        fs::read(d.path().join("a.csv")).unwrap(),
        fs::read(d.path().join("b.csv")).unwrap()
    );
}
