//! Compiles and runs a C program against the generated header and the static
//! library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "chaoskit.h"

int main(void) {
    ChaosField *f = NULL;
    if (chaoskit_field_new(CHAOS_KERNEL_KIND_WIENER, 0.0, 1.0, 32, 4, &f) != CHAOS_STATUS_OK) return 1;
    size_t n = 0;
    chaoskit_field_n_nodes(f, &n);
    double v[33];
    if (chaoskit_field_variance(f, v, n) != CHAOS_STATUS_OK) return 2;
    if (fabs(v[32] - 1.0) > 1e-12) return 3;
    ChaosField *bad = NULL;
    if (chaoskit_field_new(CHAOS_KERNEL_KIND_OU_STABLE, -1.0, 1.0, 32, 4, &bad) != CHAOS_STATUS_INVALID_ARGUMENT) return 4;
    char msg[128];
    if (chaoskit_last_error(msg, sizeof msg) < 2) return 5;
    chaoskit_field_free(f);
    printf("ok %s\n", chaoskit_version());
    return 0;
}
"#;

fn profile_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

fn has_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !has_cc() {
        eprintln!("no C compiler found; skipped");
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    for (lang, std) in [("c", "-std=c99"), ("c++", "-std=c++11")] {
        let status = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", std, "-x", lang])
            .arg(include.join("chaoskit.h"))
            .status()
            .unwrap();
        assert!(status.success(), "{lang}");
    }
}

/// Builds the static library for the profile the tests run under.
fn static_lib() -> PathBuf {
    let dir = profile_dir();
    let mut cmd = Command::new(std::env::var("CARGO").unwrap_or_else(|_| "cargo".into()));
    cmd.args(["build", "-p", "chaoskit-ffi", "--lib"]).current_dir(env!("CARGO_MANIFEST_DIR"));
    if dir.file_name().is_some_and(|p| p == "release") {
        cmd.arg("--release");
    }
    assert!(cmd.status().unwrap().success());
    dir.join("libchaoskit_ffi.a")
}

#[test]
fn c_program_links_and_runs() {
    if !has_cc() {
        eprintln!("no C compiler found; skipped");
        return;
    }
    let lib = static_lib();
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
