use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use talbot_cli::commands;
use talbot_cli::config::RunConfig;

fn talbot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_talbot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn print_defaults_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = talbot(tmp.path(), &["--print-defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[grating2]") && text.contains("c3_eVnm3 = 0.09"));
    assert_eq!(RunConfig::parse(&text).unwrap(), RunConfig::default());
}

#[test]
fn scan_is_byte_identical_for_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "scan.scans = 3\nscan.drift_nm_per_min = 2.0\n");
    let read = |d: &str, f: &str| fs::read(tmp.path().join(d).join(f)).unwrap();
    for d in ["a", "b", "c"] {
        let seed = if d == "c" { "8" } else { "7" };
        let out = talbot(
            tmp.path(),
            &["scan", "--config", &cfg, "--out", d, "--seed", seed],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for f in [
        "scan_000.csv",
        "scan_002.csv",
        "scan_summary.csv",
        "drift.csv",
    ] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert_ne!(read("a", "scan_000.csv"), read("c", "scan_000.csv"));
    let text = String::from_utf8(read("a", "scan_001.csv")).unwrap();
    assert!(text.starts_with("# schema=1\n# period_m="));
    assert!(text.contains("seed=8"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[grating2]\nc3_eV = 0.09\n");
    let out = talbot(tmp.path(), &["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grating2") && err.contains("c3_eV"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn empty_velocity_list_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sweep.v_list_mps = []\n");
    let out = talbot(tmp.path(), &["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep"));
}

#[test]
fn missing_subcommand_and_bad_flags_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(talbot(tmp.path(), &[]).status.code(), Some(2));
    assert_eq!(
        talbot(tmp.path(), &["sweep", "--threads", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(talbot(tmp.path(), &["frobnicate"]).status.code(), Some(2));
    let out = talbot(tmp.path(), &["scan", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_selected_columns_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[sweep]\nv_list_mps = [100.0, 115.0, 130.0]\ncolumns = [\"vis_quantum_vdw\", \"flux_rel\"]\n",
    );
    let out = talbot(
        tmp.path(),
        &["sweep", "--config", &cfg, "--svg", "--threads", "2"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(tmp.path().join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert_eq!(lines[2], "v_center_mps,vis_quantum_vdw,flux_rel");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].ends_with(",1"));
    assert!(tmp.path().join("out/sweep.svg").exists());
}

#[test]
fn oracle_disagreement_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[oracle]\nvelocities_mps = [115.0]\nsource_samples = 1024\ngrating_samples = 4096\n\
         screen_samples = 1024\ntolerance = 1e-9\nconvergence_tolerance = 1.0\n",
    );
    let out = talbot(tmp.path(), &["oracle-check", "--config", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(tmp.path().join("out/oracle.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn oracle_bad_sample_counts_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "oracle.grating_samples = 3000\n");
    let out = talbot(tmp.path(), &["oracle-check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gravity_zero_row_and_broad_band_dephasing() {
    let cfg = RunConfig::parse(
        "distribution.model = \"fixed\"\ndistribution.fwhm_fraction = 0.35\n\
         gravity.tilts_mrad = [-4.0, -2.0, 0.0, 1.0, 2.0, 4.0]\n",
    )
    .unwrap();
    let out = commands::gravity(&cfg).unwrap();
    let t = &out.tables[0].1;
    let alpha = t.column("alpha_rad").unwrap();
    let phase = t.column("phase_rad").unwrap();
    let vis = t.column("visibility").unwrap();
    let zero = alpha.iter().position(|a| *a == 0.0).unwrap();
    assert_eq!(phase[zero], 0.0);
    for i in 0..alpha.len() {
        for j in 0..alpha.len() {
            if alpha[i].abs() < alpha[j].abs() {
                assert!(vis[i] > vis[j], "{alpha:?} {vis:?}");
            }
        }
    }
}

#[test]
fn zero_visibility_scans_have_low_snr() {
    let mut cfg = RunConfig::default();
    cfg.scan.visibility = Some(0.0);
    let trials = 100;
    let mut low = 0;
    for seed in 0..trials {
        cfg.seed = seed;
        let out = commands::scan(&cfg).unwrap();
        let snr = out.tables.last().unwrap().1.column("snr").unwrap()[0];
        if snr < 3.0 {
            low += 1;
        }
    }
    assert!(low as f64 >= 0.95 * trials as f64, "{low}/{trials}");
}

#[test]
fn scan_summary_in_standard_regime() {
    let out = commands::scan(&RunConfig::default()).unwrap();
    let t = &out.tables.last().unwrap().1;
    let v = t.column("visibility").unwrap()[0];
    let snr = t.column("snr").unwrap()[0];
    assert!((0.3..=0.45).contains(&v), "{v}");
    assert!((35.0..=65.0).contains(&snr), "{snr}");
}

#[test]
fn scale_keeps_talbot_length() {
    let cfg = RunConfig::parse("scale.v_min_mps = 100.0\nscale.v_max_mps = 115.0\n").unwrap();
    let out = commands::scale(&cfg).unwrap();
    let s = &out
        .tables
        .iter()
        .find(|(n, _)| n == "scale_summary.csv")
        .unwrap()
        .1;
    let lt = s.column("talbot_length_m").unwrap();
    assert!((lt[0] / lt[1] - 1.0).abs() < 1e-12);
    let rel = s.column("rel_fwhm").unwrap()[1];
    assert!((0.005..=0.02).contains(&rel), "{rel}");
}
