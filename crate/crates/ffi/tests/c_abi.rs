use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bandit_cpdp_ffi::*;

const SMALL: &str = r#"
learning_sizes = [3]
policies = ["epsilon:0.1", "ucb"]
repetitions = 3
[synthetic]
learning_projects = 5
target_modules = 60
learning_modules = [40, 80]
"#;

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    bcpdp_string_free(s);
    out
}

unsafe fn last_error() -> String {
    take(bcpdp_last_error_message())
}

#[test]
fn run_through_handles() {
    unsafe {
        let text = CString::new(SMALL).unwrap();
        let mut config = ptr::null_mut();
        assert_eq!(bcpdp_config_from_toml(text.as_ptr(), &mut config), BcpdpStatus::Ok);
        assert_eq!(bcpdp_config_set_seed(config, 9), BcpdpStatus::Ok);
        let mut results = ptr::null_mut();
        assert_eq!(bcpdp_experiment_run(config, &mut results), BcpdpStatus::Ok);
        assert_eq!(bcpdp_results_len(results), 6);
        let table1 = take(bcpdp_results_table1_csv(results));
        assert!(table1.starts_with("n_projects,policy,criterion"));
        let manifest = take(bcpdp_results_manifest(results));
        assert!(manifest.contains("seed = 9"));

        let dir = std::env::temp_dir().join(format!("bcpdp_ffi_{}", std::process::id()));
        let c_dir = CString::new(dir.to_str().unwrap()).unwrap();
        assert_eq!(bcpdp_results_write(results, c_dir.as_ptr()), BcpdpStatus::Ok);
        assert_eq!(std::fs::read_to_string(dir.join("report_table1.csv")).unwrap(), table1);
        let table2 = take(bcpdp_results_table2_csv(results));
        assert_eq!(std::fs::read_to_string(dir.join("report_table2.csv")).unwrap(), table2);
        std::fs::remove_dir_all(&dir).unwrap();

        bcpdp_results_free(results);
        bcpdp_config_free(config);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let bad = CString::new("repetitions = 0").unwrap();
        let mut config = ptr::null_mut();
        assert_eq!(bcpdp_config_from_toml(bad.as_ptr(), &mut config), BcpdpStatus::Config);
        assert!(config.is_null());
        assert!(last_error().contains("repetitions"));

        assert_eq!(
            bcpdp_config_from_toml(ptr::null(), &mut config),
            BcpdpStatus::NullPointer
        );
        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(
            bcpdp_config_from_toml(invalid.as_ptr().cast(), &mut config),
            BcpdpStatus::InvalidUtf8
        );

        let mut results = ptr::null_mut();
        assert_eq!(
            bcpdp_experiment_run(ptr::null(), &mut results),
            BcpdpStatus::NullPointer
        );
        assert!(bcpdp_results_table1_csv(ptr::null()).is_null());
        assert_eq!(bcpdp_results_len(ptr::null()), 0);

        bcpdp_config_free(ptr::null_mut());
        bcpdp_results_free(ptr::null_mut());
        bcpdp_string_free(ptr::null_mut());
    }
}

#[test]
fn primitives() {
    assert!((bcpdp_arm_auc(8, 4, 6, 2) - 0.7).abs() < 1e-12);
    assert_eq!(bcpdp_arm_auc(0, 3, 7, 0), 0.5);
    unsafe {
        let a = [0.0; 6];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut p = f64::NAN;
        assert_eq!(bcpdp_wilcoxon(a.as_ptr(), b.as_ptr(), 6, &mut p), BcpdpStatus::Ok);
        assert!((p - 0.03125).abs() < 1e-12);
        assert_eq!(
            bcpdp_wilcoxon(a.as_ptr(), a.as_ptr(), 0, &mut p),
            BcpdpStatus::Statistics
        );

        let mut r = 0.0;
        assert_eq!(bcpdp_rdiff(8.0, 10.0, &mut r), BcpdpStatus::Ok);
        assert!((r - 0.25).abs() < 1e-12);
        assert_eq!(bcpdp_rdiff(0.0, 3.0, &mut r), BcpdpStatus::Undefined);
        assert!(last_error().contains("undefined"));
    }
    let version = unsafe { CStr::from_ptr(bcpdp_version()) }.to_str().unwrap();
    assert!(version.starts_with("bandit-cpdp "));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bandit_cpdp.h")).unwrap();
    for name in [
        "bcpdp_last_error_message",
        "bcpdp_string_free",
        "bcpdp_version",
        "bcpdp_config_from_toml",
        "bcpdp_config_set_seed",
        "bcpdp_config_free",
        "bcpdp_experiment_run",
        "bcpdp_results_len",
        "bcpdp_results_table1_csv",
        "bcpdp_results_table2_csv",
        "bcpdp_results_manifest",
        "bcpdp_results_write",
        "bcpdp_results_free",
        "bcpdp_arm_auc",
        "bcpdp_wilcoxon",
        "bcpdp_rdiff",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct BcpdpConfig BcpdpConfig;"));
    assert!(header.contains("BCPDP_STATUS_UNDEFINED = 8"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "bandit_cpdp.h"

int main(void) {
    BcpdpConfig *config = NULL;
    BcpdpResults *results = NULL;
    const char *toml = "learning_sizes = [2]\npolicies = [\"ucb\"]\nrepetitions = 2\n"
                       "[synthetic]\nlearning_projects = 3\ntarget_modules = 40\nlearning_modules = [30, 50]\n";
    if (bcpdp_config_from_toml(toml, &config) != BCPDP_STATUS_OK) return 1;
    if (bcpdp_experiment_run(config, &results) != BCPDP_STATUS_OK) return 2;
    if (bcpdp_results_len(results) != 2) return 3;
    char *csv = bcpdp_results_table2_csv(results);
    if (csv == NULL || strncmp(csv, "n_projects", 10) != 0) return 4;
    bcpdp_string_free(csv);
    bcpdp_results_free(results);
    bcpdp_config_free(config);
    double r;
    if (bcpdp_rdiff(0.0, 1.0, &r) != BCPDP_STATUS_UNDEFINED) return 5;
    char *msg = bcpdp_last_error_message();
    if (msg == NULL) return 6;
    bcpdp_string_free(msg);
    printf("ok %.2f\n", bcpdp_arm_auc(8, 4, 6, 2));
    return 0;
}
"#;

/// Compiles a C program against the generated header and static library.
/// Skipped when no C compiler or static library is available.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir: PathBuf = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libbandit_cpdp_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C link test: static library or cc not found");
        return;
    }
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_abi");
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = work.join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok 0.70");
}
