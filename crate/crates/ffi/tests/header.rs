//! Checks on the generated C header and, when a C compiler is available,
//! an end-to-end compile-link-run smoke test against the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn header_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/wpc_secrecy.h")
}

#[test]
fn header_exposes_the_api() {
    let text = std::fs::read_to_string(header_path()).expect("header generated at build time");
    for decl in [
        "typedef struct WpcContext WpcContext",
        "WpcRates",
        "WpcSimSummary",
        "wpc_context_new",
        "wpc_context_free",
        "wpc_compute_bounds",
        "wpc_simulate",
        "wpc_context_set_printed_formulas",
        "wpc_context_set_search",
    ] {
        assert!(text.contains(decl), "header missing `{decl}`");
    }
    assert!(text.contains("WPC_SECRECY_H"));
}

#[test]
fn c_smoke_test_links_and_runs() {
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .copied();
    let Some(cc) = cc else {
        eprintln!("no C compiler found; skipping link test");
        return;
    };

    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    // workspace target dir: ../../target relative to this crate
    let profile_dir = manifest
        .join("../../target")
        .join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let static_lib = profile_dir.join("libwpc_secrecy_ffi.a");
    if !static_lib.exists() {
        eprintln!("static library not built at {static_lib:?}; skipping link test");
        return;
    }

    let tmp = std::env::temp_dir().join(format!("wpc-ffi-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let c_src = tmp.join("smoke.c");
    std::fs::write(
        &c_src,
        r#"
#include <stdio.h>
#include <math.h>
#include "wpc_secrecy.h"

int main(void) {
    WpcContext *ctx = wpc_context_new("p_et_dbm = 0\nn_fading_points = 4\n");
    if (!ctx) return 1;
    WpcRates rates;
    if (wpc_compute_bounds(ctx, false, &rates) != WpcStatus_Ok) return 2;
    if (!(rates.c_s_lower_bits > 0.0)) return 3;
    if (!isnan(rates.c_s_upper_bits)) return 4;
    WpcSimSummary sim;
    if (wpc_simulate(ctx, 200, 4, 0.0, &sim) != WpcStatus_Ok) return 5;
    if (sim.n_slots != 200) return 6;
    wpc_context_free(ctx);
    printf("lower=%g bits/use fraction_active=%g\n", rates.c_s_lower_bits, sim.fraction_active);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.join("smoke");
    let status = Command::new(cc)
        .arg(&c_src)
        .arg("-I")
        .arg(&include_dir)
        .arg(static_lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile/link failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "smoke test exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("lower="), "{stdout}");
    std::fs::remove_dir_all(tmp).ok();
}
