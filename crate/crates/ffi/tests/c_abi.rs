//! Compiles a small C program against the generated header and the static
//! library, built on demand. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "hjfront.h"

int main(void) {
    double hx[] = {-2, -1, 0, 1, 2}, hy[] = {2, 0.5, 0, 0.5, 2};
    double vx[] = {0, 1}, vy[] = {0, -1};
    HjPl *h = NULL, *v = NULL, *bad = NULL;
    HjTrace *tr = NULL;
    if (hj_pl_new(hx, hy, 5, -1.5, 1.5, &h) != HJ_STATUS_OK) return 1;
    if (hj_pl_new(vx, vy, 2, 2, 2, &v) != HJ_STATUS_OK) return 1;
    double dup[] = {0, 0};
    if (hj_pl_new(dup, dup, 2, 0, 0, &bad) != HJ_STATUS_INVALID_PL || bad) return 2;
    char msg[128];
    if (hj_last_error(msg, sizeof msg) == 0) return 3;
    if (hj_front_evolve(v, h, 2.0, &tr) != HJ_STATUS_OK) return 4;
    double t, x, a, b;
    if (hj_front_event(tr, 0, &t, &x) != HJ_STATUS_OK) return 5;
    if (fabs(t - 1.0) > 1e-12 || fabs(x - 0.5) > 1e-12) return 6;
    if (hj_front_eval(tr, 0.5, 0.25, &a) != HJ_STATUS_OK) return 7;
    if (hj_minmax(v, h, 0.5, 0.25, &b) != HJ_STATUS_OK) return 8;
    if (fabs(a - b) > 1e-9) return 9;
    if (hj_front_eval(tr, 3.0, 0.0, &a) != HJ_STATUS_TIME_OUT_OF_RANGE) return 10;
    printf("%s %.12f\n", hj_version(), b);
    hj_front_free(tr);
    hj_pl_free(v);
    hj_pl_free(h);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let profile_dir = tmp.parent().unwrap().join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let lib = profile_dir.join("libhjfront_ffi.a");
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "-p", "hjfront-ffi", "--lib"])
        .current_dir(&manifest)
        .status()
        .unwrap();
    assert!(built.success() && lib.exists(), "static library missing");
    let src = tmp.join("hjfront_abi.c");
    let exe = tmp.join("hjfront_abi");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")));
}
