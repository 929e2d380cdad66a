use std::path::{Path, PathBuf};
use std::process::Command;

fn header_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/gravecho.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header_path()).unwrap();
    for needle in [
        "#ifndef GRAVECHO_H",
        "typedef struct GeScenario GeScenario;",
        "typedef struct GeResult GeResult;",
        "GE_STATUS_OK = 0",
        "GE_STATUS_CONFIG = 2",
        "GE_STATUS_NUMERICAL = 3",
        "GE_STATUS_NO_ECHO = 4",
        "GE_CONVENTION_LN2_LITERAL",
        "enum GeStatus ge_run(const struct GeScenario *scenario, struct GeResult **out);",
        "void ge_result_free(struct GeResult *result);",
        "size_t ge_result_len(const struct GeResult *result);",
        "const char *ge_last_error_message(void);",
        "double ge_redshift_gradient(void);",
    ] {
        assert!(h.contains(needle), "missing `{needle}`");
    }
}

/// Compile and run a small C program against the header and static library.
#[test]
fn c_program_links_and_runs() {
    let lib_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    assert!(
        lib_dir.join("libgravecho_ffi.a").exists(),
        "{}",
        lib_dir.display()
    );
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "gravecho.h"

int main(void) {
    GeScenario *s = NULL;
    GeResult *r = NULL;
    if (ge_scenario_from_preset("pair-none", &s) != GE_STATUS_OK) return 10;
    if (ge_run(s, &r) != GE_STATUS_OK) return 11;
    size_t n = ge_result_len(r);
    if (n != 20001) return 12;
    if (ge_scenario_from_preset("nope", &s) != GE_STATUS_CONFIG) return 13;
    if (ge_last_error_message() == NULL) return 14;
    double v = 0.0;
    if (ge_critical_speed(0.16, &v) != GE_STATUS_OK || v < 1.76 || v > 1.78) return 15;
    printf("%zu\n", n);
    ge_result_free(r);
    ge_scenario_free(s);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(header_path().parent().unwrap())
        .arg(lib_dir.join("libgravecho_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "20001");
}
