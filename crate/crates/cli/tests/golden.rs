//! Byte-exact outputs for the worked studies. `BLESS=1 cargo test` rewrites
//! the files under `tests/golden/`.

use std::path::{Path, PathBuf};
use std::process::Command;

const CASES: &[(&str, &[&str])] = &[
    ("identify_itt.txt", &["identify", "itt"]),
    (
        "identify_hypothetical_unobserved.txt",
        &["identify", "hypothetical_unobserved"],
    ),
    (
        "identify_hypothetical_adjusted.txt",
        &["identify", "hypothetical_adjusted"],
    ),
    ("identify_composite.txt", &["identify", "composite"]),
    (
        "identify_principal_stratum.txt",
        &["identify", "principal_stratum"],
    ),
    ("identify_chronic_pain.txt", &["identify", "chronic_pain"]),
    ("dag_itt.tex", &["render", "itt", "--dag"]),
    ("swig_simplest.tex", &["render", "simplest"]),
    ("swig_itt.tex", &["render", "itt"]),
    (
        "swig_hypothetical_unobserved.tex",
        &["render", "hypothetical_unobserved"],
    ),
    (
        "swig_hypothetical_adjusted.tex",
        &["render", "hypothetical_adjusted"],
    ),
    ("swig_composite.tex", &["render", "composite"]),
    (
        "swig_principal_stratum_a1.tex",
        &["render", "principal_stratum", "--world", "a=1"],
    ),
    (
        "swig_principal_stratum_a0.tex",
        &["render", "principal_stratum", "--world", "a=0"],
    ),
    ("swig_chronic_pain.tex", &["render", "chronic_pain"]),
    (
        "dag_itt.dot",
        &["render", "itt", "--dag", "--format", "dot"],
    ),
    (
        "swig_chronic_pain.dot",
        &["render", "chronic_pain", "--format", "dot"],
    ),
];

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/specs")
        .join(format!("{name}.swg"))
}

fn run(args: &[&str]) -> String {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_swigc"));
    cmd.arg(args[0]).arg(spec(args[1])).args(&args[2..]);
    let out = cmd.output().unwrap();
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn outputs_match_golden_files() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bless = std::env::var_os("BLESS").is_some();
    let mut stale = Vec::new();
    for (file, args) in CASES {
        let got = run(args);
        assert_eq!(got, run(args), "{file} differs between runs");
        let path = dir.join(file);
        if bless {
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path).unwrap_or_default();
        if got != want {
            stale.push(format!("{file}:\n--- want\n{want}--- got\n{got}"));
        }
    }
    assert!(stale.is_empty(), "golden mismatch\n{}", stale.join("\n"));
}
