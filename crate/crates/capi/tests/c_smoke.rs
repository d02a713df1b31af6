//! Compiles and runs a small C program against the generated header and the
//! static library, exercising the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "neurocap.h"

int main(void) {
    double probs[2] = {0.5, 0.5};
    double h = 0.0;
    if (neurocap_entropy(probs, 2, &h) != NEUROCAP_OK) return 1;
    if (fabs(h - 1.0) > 1e-12) return 2;

    double c = 0.0;
    if (neurocap_bsc_capacity(0.1, &c) != NEUROCAP_OK) return 3;
    if (fabs(c - 0.531) > 1e-3) return 4;

    double bad[2] = {0.5, 0.6};
    if (neurocap_entropy(bad, 2, &h) != NEUROCAP_INVALID_ARGUMENT) return 5;
    if (neurocap_last_error_message() == NULL) return 6;

    NeurocapSolution *solution = NULL;
    NeurocapStatus status = neurocap_capacity_solve(
        NEUROCAP_RATE, 1.0, 0.003, 0.03, 0.1, 1e-3, &solution);
    if (status != NEUROCAP_OK) return 7;
    size_t n = 0;
    if (neurocap_solution_support_len(solution, &n) != NEUROCAP_OK) return 8;
    if (n < 2 || n > 8) return 9;
    double per_use = 0.0, bps = 0.0;
    if (neurocap_solution_capacity(solution, &per_use, &bps) != NEUROCAP_OK) return 10;
    if (per_use < 1.0 || per_use > 2.0) return 11;
    bool certified = false;
    if (neurocap_solution_certified(solution, &certified) != NEUROCAP_OK) return 12;
    if (!certified) return 13;
    double points[8], weights[8];
    size_t written = 0;
    if (neurocap_solution_support(solution, points, weights, 8, &written) != NEUROCAP_OK)
        return 14;
    if (written != n) return 15;
    double total = 0.0;
    for (size_t k = 0; k < written; k++) total += weights[k];
    if (fabs(total - 1.0) > 1e-9) return 16;
    char *json = neurocap_solution_to_json(solution);
    if (json == NULL) return 17;
    neurocap_string_free(json);
    neurocap_solution_free(solution);
    printf("capacity %.6f bits/window over %zu support points\n", per_use, n);
    return 0;
}
"#;

#[test]
fn c_program_runs_against_the_header_and_static_lib() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    let lib_dir = manifest.join("../../target/debug");
    let lib_path = lib_dir.join("libneurocap_capi.a");
    assert!(
        lib_path.exists(),
        "static library missing at {}; built by `cargo build -p neurocap-capi`",
        lib_path.display()
    );

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();

    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include_dir)
        .arg(&lib_path)
        .arg("-lm")
        .arg("-lpthread")
        .arg("-ldl")
        .arg("-o")
        .arg(&bin)
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&bin).output().expect("smoke binary runs");
    assert!(
        run.status.success(),
        "smoke binary exited with {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("support points"), "{stdout}");
}
