//! CLI acceptance: byte-identical reports on re-run (criterion 11) and the
//! exit-code contract.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_chaincert")
}

struct Workdir {
    root: PathBuf,
}

impl Workdir {
    fn new(tag: &str) -> Self {
        let root = std::env::temp_dir().join(format!("chaincert_accept_{tag}_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&root);
        std::fs::create_dir_all(&root).unwrap();
        Workdir { root }
    }

    fn write(&self, name: &str, content: &str) -> PathBuf {
        let p = self.root.join(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.root);
    }
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("spawn chaincert")
}

fn files_of(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

/// Run a subcommand twice into separate directories and require every
/// emitted file to be byte-identical.
fn assert_reproducible(tag: &str, args: &[&str], wd: &Workdir) {
    let out_a = wd.dir(&format!("{tag}_a"));
    let out_b = wd.dir(&format!("{tag}_b"));
    for out in [&out_a, &out_b] {
        let mut full: Vec<&str> = args.to_vec();
        let out_s = out.to_str().unwrap().to_string();
        let leaked: &'static str = Box::leak(out_s.into_boxed_str());
        full.extend(["--out-dir", leaked]);
        let res = run(&full);
        assert!(
            res.status.success(),
            "{tag}: exit {:?}\nstderr: {}",
            res.status.code(),
            String::from_utf8_lossy(&res.stderr)
        );
    }
    let fa = files_of(&out_a);
    let fb = files_of(&out_b);
    assert_eq!(fa.len(), fb.len(), "{tag}: file sets differ");
    for (a, b) in fa.iter().zip(&fb) {
        assert_eq!(a.file_name(), b.file_name());
        let ba = std::fs::read(a).unwrap();
        let bb = std::fs::read(b).unwrap();
        assert_eq!(ba, bb, "{tag}: {} differs between reruns", a.display());
    }
}

#[test]
fn criterion_11_reports_are_byte_identical() {
    let wd = Workdir::new("repro");
    std::fs::write(wd.root.join("two.csv"), "0,1\n1,0\n").unwrap();

    let net_cfg = wd.write(
        "net.json",
        r#"{ "space": { "type": "csv", "d1": "two.csv" }, "psi": { "kind": "phi_p", "p": 2.0 } }"#,
    );
    assert_reproducible("net", &["net", "--config", net_cfg.to_str().unwrap()], &wd);

    let mod_cfg = wd.write(
        "mod.json",
        r#"{ "space": { "type": "random_two_dist", "points": 10, "dim": 3, "seed": 5, "p1": 2.0, "p2": 1.0 }, "psi": { "kind": "phi_p", "p": 1.0 } }"#,
    );
    assert_reproducible("modulus", &["modulus", "--config", mod_cfg.to_str().unwrap()], &wd);

    let prop_cfg = wd.write(
        "prop.json",
        r#"{ "model": { "type": "fbm", "h": 0.5, "grid_size": 16 }, "props": ["p1", "p2"], "paths": 100, "seed": 7, "m_levels": [0], "z_paths": 100, "profile": false }"#,
    );
    assert_reproducible(
        "prop_verify",
        &["prop-verify", "--config", prop_cfg.to_str().unwrap()],
        &wd,
    );

    let emp_cfg = wd.write(
        "emp.json",
        r#"{ "dim": 5, "class_size": 16, "class_seed": 2, "law": "gaussian_iso", "n": 32, "reps": 8, "seed": 3, "tail": { "d_value": 1.35, "trials": 2000 } }"#,
    );
    assert_reproducible("empirical", &["empirical", "--config", emp_cfg.to_str().unwrap()], &wd);

    assert_reproducible(
        "sensing_delta",
        &["sensing", "--n-rows", "16", "--m-cols", "10", "--sparsity", "2", "--matrices", "5"],
        &wd,
    );
    assert_reproducible(
        "sensing_tail",
        &[
            "sensing", "--n-rows", "64", "--m-cols", "12", "--sparsity", "2", "--matrices",
            "20", "--mode", "tail",
        ],
        &wd,
    );
    assert_reproducible(
        "sensing_order_stat",
        &[
            "sensing", "--n-rows", "8", "--m-cols", "32", "--sparsity", "2", "--trials",
            "2000", "--mode", "order_stat",
        ],
        &wd,
    );

    println!("criterion 11 PASS: byte-identical reports across reruns for all subcommands");
}

#[test]
fn exit_code_contract() {
    let wd = Workdir::new("exit");
    std::fs::write(wd.root.join("two.csv"), "0,1\n1,0\n").unwrap();

    // 0: success
    let ok_cfg = wd.write(
        "ok.json",
        r#"{ "space": { "type": "csv", "d1": "two.csv" }, "psi": { "kind": "phi_p", "p": 2.0 } }"#,
    );
    let out_dir = wd.dir("ok_out");
    let res = run(&["net", "--config", ok_cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));

    // 2: schema violation (unknown field), no partial report output
    let bad_cfg = wd.write(
        "bad.json",
        r#"{ "space": { "type": "csv", "d1": "two.csv" }, "psi": { "kind": "phi_p", "p": 2.0 }, "extra": 1 }"#,
    );
    let bad_out = wd.dir("bad_out");
    let res = run(&["net", "--config", bad_cfg.to_str().unwrap(), "--out-dir", bad_out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!bad_out.join("report.json").exists(), "no partial output on schema violation");

    // 2: domain violation inside the config values
    let dom_cfg = wd.write(
        "dom.json",
        r#"{ "space": { "type": "csv", "d1": "two.csv" }, "psi": { "kind": "phi_p", "p": -1.0 } }"#,
    );
    let res = run(&["net", "--config", dom_cfg.to_str().unwrap(), "--out-dir", wd.dir("dom_out").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));

    // 3: missing input file
    let miss_cfg = wd.write(
        "miss.json",
        r#"{ "space": { "type": "csv", "d1": "nope.csv" }, "psi": { "kind": "phi_p", "p": 2.0 } }"#,
    );
    let res = run(&["net", "--config", miss_cfg.to_str().unwrap(), "--out-dir", wd.dir("miss_out").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));

    // 3: malformed matrix data
    std::fs::write(wd.root.join("bad.csv"), "0,1\n1,zap\n").unwrap();
    let data_cfg = wd.write(
        "data.json",
        r#"{ "space": { "type": "csv", "d1": "bad.csv" }, "psi": { "kind": "phi_p", "p": 2.0 } }"#,
    );
    let res = run(&["net", "--config", data_cfg.to_str().unwrap(), "--out-dir", wd.dir("data_out").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));

    // 3: non-metric distance matrix
    std::fs::write(wd.root.join("nonmetric.csv"), "0,1,3\n1,0,1\n3,1,0\n").unwrap();
    let nm_cfg = wd.write(
        "nm.json",
        r#"{ "space": { "type": "csv", "d1": "nonmetric.csv" }, "psi": { "kind": "phi_p", "p": 2.0 } }"#,
    );
    let res = run(&["net", "--config", nm_cfg.to_str().unwrap(), "--out-dir", wd.dir("nm_out").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));

    println!("exit-code contract PASS: 0 ok, 2 config, 3 data");
}

#[test]
fn config_relative_paths_resolve_against_the_config_dir() {
    let wd = Workdir::new("relpath");
    let sub = wd.dir("cfgs");
    std::fs::create_dir_all(&sub).unwrap();
    std::fs::write(sub.join("m.csv"), "0,2\n2,0\n").unwrap();
    let cfg = sub.join("net.json");
    std::fs::write(
        &cfg,
        r#"{ "space": { "type": "csv", "d1": "m.csv" }, "psi": { "kind": "phi_p", "p": 2.0 } }"#,
    )
    .unwrap();
    let out = wd.dir("out");
    let res = run(&["net", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn empty_pair_table_emits_header_only() {
    let wd = Workdir::new("empty");
    std::fs::write(wd.root.join("one.csv"), "0\n").unwrap();
    let cfg = wd.write(
        "mod1.json",
        r#"{ "space": { "type": "csv", "d1": "one.csv" }, "psi": { "kind": "phi_p", "p": 2.0 } }"#,
    );
    let out = wd.dir("out");
    let res = run(&["modulus", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("modulus.csv")).unwrap();
    assert_eq!(csv, "s,t,dist,tau,tau_bar,k\n");
}
