//! Compiles and runs a small C program against the generated header and the
//! static library, exercising the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "integrable.h"

int main(void) {
    if (!integrable_eschenburg_admissible(-1, -1, -2, 0)) return 10;
    if (integrable_eschenburg_admissible(1, 1, 1, 0)) return 11;

    uint32_t rows = 0;
    if (integrable_table_verify(&rows) != IntegrableStatus_Ok) return 12;
    if (rows != 28) return 13;

    int64_t idx = 0;
    if (integrable_canonical_maslov_index(2, 64, 1, &idx) != IntegrableStatus_Ok) return 14;
    if (idx != 1) return 15;

    double constants[2] = {2.0, 5.0};
    double amplitudes[2] = {0.1, 0.0};
    size_t harmonics[2] = {1, 1};
    IntegrableMetrics *m = integrable_metrics_new(2, constants, amplitudes, harmonics);
    if (!m) return 16;
    IntegrableImageClass cls;
    double root = 2.0;
    if (integrable_metrics_classify(m, 1.0, &root, 1, &cls) != IntegrableStatus_Ok) return 17;
    if (cls != IntegrableImageClass_NontrivialMaslov) return 18;
    integrable_metrics_free(m);

    int32_t homeo = -1;
    if (integrable_wks14_homeomorphic(2, 4, &homeo) != IntegrableStatus_InvalidArgument)
        return 19;
    char buf[128];
    size_t len = integrable_last_error_message(buf, sizeof buf);
    if (len == 0) return 20;

    printf("ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    // The staticlib lands in the workspace target directory; `cargo test`
    // alone does not emit it, so build the library target first.
    let target_dir = manifest
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("target")
        .join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let staticlib = target_dir.join("libintegrable_ffi.a");
    if !staticlib.exists() {
        let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
        let mut build = Command::new(cargo);
        build.args(["build", "-p", "integrable-ffi"]);
        if !cfg!(debug_assertions) {
            build.arg("--release");
        }
        let out = build.output().expect("cargo build runs");
        assert!(
            out.status.success(),
            "building the staticlib failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert!(
        staticlib.exists(),
        "staticlib missing at {}",
        staticlib.display()
    );

    let work = std::env::temp_dir().join("integrable-ffi-c-test");
    std::fs::create_dir_all(&work).unwrap();
    let c_path = work.join("probe.c");
    let bin_path = work.join("probe");
    std::fs::write(&c_path, C_PROGRAM).unwrap();

    let compile = Command::new("cc")
        .arg(&c_path)
        .arg("-I")
        .arg(&include_dir)
        .arg(&staticlib)
        .arg("-lm")
        .arg("-lpthread")
        .arg("-ldl")
        .arg("-o")
        .arg(&bin_path)
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&bin_path).output().expect("probe runs");
    assert!(
        run.status.success(),
        "probe exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
