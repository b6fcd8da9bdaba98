//! Acceptance criterion 10 (the scenario gallery is byte-reproducible) and
//! the documented exit-code mapping.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sfl_cli::config::Kind;
use sfl_cli::{run_scenario, RunOptions};

fn gallery_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn kind_of(config: &Path) -> Kind {
    let text = fs::read_to_string(config).unwrap();
    let value: toml::Value = toml::from_str(&text).unwrap();
    value["kind"].as_str().unwrap().parse().unwrap()
}

fn run_gallery(out_root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(gallery_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    entries.sort();
    assert!(entries.len() >= 9, "gallery went missing");
    let mut artifacts = BTreeMap::new();
    for config in entries {
        let stem = config.file_stem().unwrap().to_string_lossy().to_string();
        let out_dir = out_root.join(&stem);
        let opts = RunOptions {
            out_dir: out_dir.clone(),
            grid_n: None,
            quiet: true,
        };
        run_scenario(kind_of(&config), &config, &opts)
            .unwrap_or_else(|e| panic!("{stem}: {e}"));
        let mut files: Vec<PathBuf> = fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        for f in files {
            let rel = format!("{stem}/{}", f.file_name().unwrap().to_string_lossy());
            artifacts.insert(rel, fs::read(&f).unwrap());
        }
    }
    artifacts
}

#[test]
fn acceptance_10_gallery_is_byte_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let first = run_gallery(&root.path().join("run1"));
    let second = run_gallery(&root.path().join("run2"));
    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>(),
        "the two runs produced different artifact sets"
    );
    let mut compared = 0usize;
    for (name, bytes) in &first {
        assert_eq!(
            bytes, &second[name],
            "artifact {name} differs between consecutive runs"
        );
        compared += 1;
    }
    assert!(compared >= 20, "only {compared} artifacts compared");
    println!("acceptance 10 (determinism): PASS, {compared} artifacts byte-identical");
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn exit_codes_follow_the_documented_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: dir.path().join("out"),
        grid_n: None,
        quiet: true,
    };

    // 64: malformed config (missing gamma) with a field diagnostic
    let bad = write_config(
        dir.path(),
        "bad.toml",
        r#"
name = "bad"
kind = "solve-ivp"
[grid]
n = 64
[phi]
kind = "power"
c = 1.0
[data]
g = { kind = "constant", value = 0.0 }
"#,
    );
    let err = run_scenario(Kind::SolveIvp, &bad, &opts).unwrap_err();
    assert_eq!(err.exit_code(), 64);
    assert!(err.to_string().contains("gamma"), "{err}");

    // 64: kind mismatch between command line and file
    let err = run_scenario(Kind::TailFix, &bad, &opts).unwrap_err();
    assert_eq!(err.exit_code(), 64);

    // 64: grid size that is not a power of two
    let badgrid = write_config(
        dir.path(),
        "badgrid.toml",
        r#"
name = "badgrid"
kind = "solve-ivp"
[grid]
n = 100
[phi]
kind = "constant"
value = 1.0
[data]
g = { kind = "constant", value = 0.0 }
"#,
    );
    let err = run_scenario(Kind::SolveIvp, &badgrid, &opts).unwrap_err();
    assert_eq!(err.exit_code(), 64);

    // 3: expected a critical constant, found none (bounded-below datum)
    let nosol = write_config(
        dir.path(),
        "nosol.toml",
        r#"
name = "nosol"
kind = "find-cstar"
[grid]
n = 512
[phi]
kind = "power"
c = 1.0
gamma = 0.3333333333333333
[data]
g = { kind = "constant", value = 1.0 }
[params]
bracket = [-3.0, 3.0]
expect_solution = true
"#,
    );
    let err = run_scenario(Kind::FindCstar, &nosol, &opts).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    // the outcome was still recorded
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(opts.out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["no_solution"], serde_json::json!(true));

    // 2: verification failure (a seam profile checked against the wrong datum)
    let badpair = write_config(
        dir.path(),
        "badpair.toml",
        r#"
name = "badpair"
kind = "verify"
[grid]
n = 256
[seam]
gamma = 0.3333333333333333
left = { amplitude = 1.0, exponent = 1.0 }
right = { amplitude = 1.0, exponent = 1.0 }
[data]
g = { kind = "constant", value = 1.0 }
"#,
    );
    let err = run_scenario(Kind::Verify, &badpair, &opts).unwrap_err();
    assert_eq!(err.exit_code(), 2);

    // 0: a healthy run returns a summary path
    let ok = write_config(
        dir.path(),
        "ok.toml",
        r#"
name = "ok"
kind = "solve-ivp"
[grid]
n = 64
[phi]
kind = "constant"
value = 1.0
[data]
g = { kind = "constant", value = 0.0 }
"#,
    );
    let summary = run_scenario(Kind::SolveIvp, &ok, &opts).unwrap();
    assert!(summary.ends_with("summary.json"));
    println!("exit-code mapping: PASS");
}

#[test]
fn no_solution_is_legal_when_not_expected() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: dir.path().join("out"),
        grid_n: None,
        quiet: true,
    };
    let cfg = write_config(
        dir.path(),
        "nosol-ok.toml",
        r#"
name = "nosol-ok"
kind = "find-cstar"
[grid]
n = 512
[phi]
kind = "power"
c = 1.0
gamma = 0.3333333333333333
[data]
g = { kind = "constant", value = 1.0 }
[params]
bracket = [-3.0, 3.0]
"#,
    );
    let summary_path = run_scenario(Kind::FindCstar, &cfg, &opts).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(summary_path).unwrap()).unwrap();
    assert_eq!(summary["no_solution"], serde_json::json!(true));
    assert!(summary["c_star"].is_null());
}

