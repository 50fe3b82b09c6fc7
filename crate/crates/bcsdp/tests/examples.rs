//! Runs every example binary and checks a line of its output.
use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> String {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_bcsdp"));
    let dir = bin.parent().unwrap().join("examples");
    let exe = dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
    if !exe.exists() {
        // `cargo test --test examples` alone does not build the examples
        let release = dir.parent().unwrap().ends_with("release");
        let mut build = Command::new(env!("CARGO"));
        build.args(["build", "--quiet", "-p", "bcsdp", "--examples"]);
        if release {
            build.arg("--release");
        }
        assert!(build.status().unwrap().success(), "building examples failed");
    }
    let out = Command::new(&exe).env("BCSDP_THREADS", "2").output().unwrap();
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn kneser_bounds() {
    assert!(example("kneser_bounds").contains("K(5,2)     2     5.000         5"));
}

#[test]
fn theta_variants() {
    assert!(example("theta_variants").contains("2.2361"));
}

#[test]
fn timetabling() {
    let out = example("timetabling");
    assert!(out.contains("three-period timetable valid: false"), "{out}");
    assert!(out.contains("four-period timetable valid: true"), "{out}");
}

#[test]
fn precolouring() {
    assert!(example("precolouring").contains("(certified 3)"));
}

#[test]
fn rounding() {
    assert!(example("rounding").contains("G(16, 0.5), m = 3"));
}

#[test]
fn exact_oracle() {
    let out = example("exact_oracle");
    assert!(out.contains("chromatic number 3"), "{out}");
    assert!(!out.contains("VIOLATED"), "{out}");
}

#[test]
fn formats() {
    assert!(example("formats").contains("bcsdp-v1"));
}

#[test]
fn solver_trace() {
    assert!(example("solver_trace").contains("warm start"));
}
