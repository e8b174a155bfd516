//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use talbot_core::beamline::DistributionModel;
use talbot_core::classical::{classical_spectrum, classical_visibility_curve, RayBundleSpec};
use talbot_core::grating::{build_transmission, fourier_coeffs};
use talbot_core::physics::de_broglie_wavelength;
use talbot_core::quantum::{
    monochromatic_visibility, spectrum_at, talbot_coefficients, velocity_averaged, visibility_curve,
};
use talbot_core::scanlab::{extract_fringe, synthesize_scan, ScanPlan};
use talbot_core::{Interferometer, VisibilityCurve};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Result<Verdict, String>;

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x / target - 1.0).abs() <= rel
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn wavelength_endpoints() -> Result<Verdict, String> {
    let m = Interferometer::standard_c70().species.mass;
    let lo = de_broglie_wavelength(m, 80.0).map_err(e)? * 1e12;
    let hi = de_broglie_wavelength(m, 215.0).map_err(e)? * 1e12;
    Ok(verdict(
        within(lo, 5.9, 0.02) && within(hi, 2.2, 0.02),
        format!("lambda(80) = {lo:.3} pm, lambda(215) = {hi:.3} pm (target 5.9, 2.2 within 2%)"),
    ))
}

fn talbot_velocity() -> Result<Verdict, String> {
    let v = Interferometer::standard_c70()
        .talbot_velocity()
        .map_err(e)?;
    Ok(verdict(
        (106.0..=108.0).contains(&v),
        format!("v_T = {v:.2} m/s (target 106-108)"),
    ))
}

fn classical_binary() -> Result<Verdict, String> {
    let ifm = Interferometer::standard_c70();
    let c = classical_visibility_curve(
        &ifm,
        &RayBundleSpec::default(),
        &grid(80.0, 215.0, 5.0),
        &DistributionModel::SelectorGaussian,
        false,
    )
    .map_err(e)?;
    let v = c.visibilities();
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(verdict(
        lo >= 0.04 && hi <= 0.06 && hi - lo < 0.005,
        format!(
            "V in [{lo:.5}, {hi:.5}], spread {:.1e} (target 0.05 +- 0.01, spread < 0.005)",
            hi - lo
        ),
    ))
}

fn describe(points: &[talbot_core::quantum::CurvePoint]) -> String {
    points
        .iter()
        .map(|p| format!("{:.3}@{}", p.visibility, p.v_center))
        .collect::<Vec<_>>()
        .join(", ")
}

fn quantum_free() -> Result<Verdict, String> {
    let ifm = Interferometer::standard_c70();
    let c = visibility_curve(
        &ifm,
        &grid(80.0, 215.0, 1.0),
        &DistributionModel::SelectorGaussian,
        false,
    )
    .map_err(e)?;
    let maxima = c.prominent_maxima(0.01);
    let minima = c.local_minima();
    let ok_max = maxima.len() == 2 && maxima.iter().all(|p| (0.25..=0.32).contains(&p.visibility));
    let ok_min = minima.iter().any(|p| (p.v_center - 107.0).abs() <= 5.0);
    Ok(verdict(
        ok_max && ok_min,
        format!(
            "maxima [{}], minima [{}] (target two maxima in [0.25, 0.32], minimum at 107 +- 5)",
            describe(&maxima),
            describe(&minima)
        ),
    ))
}

fn asymmetry(c: &VisibilityCurve, about: f64) -> f64 {
    let at = |v: f64| {
        c.points
            .iter()
            .find(|p| (p.v_center - v).abs() < 1e-9)
            .map(|p| p.visibility)
    };
    (1..=27)
        .filter_map(|d| Some((at(about + d as f64)? - at(about - d as f64)?).abs()))
        .fold(0.0, f64::max)
}

fn quantum_vdw() -> Result<Verdict, String> {
    let ifm = Interferometer::standard_c70();
    let c = visibility_curve(
        &ifm,
        &grid(80.0, 215.0, 1.0),
        &DistributionModel::SelectorGaussian,
        true,
    )
    .map_err(e)?;
    let maxima = c.prominent_maxima(0.01);
    let peak = c.peak().ok_or("empty curve")?;
    let asym = asymmetry(&c, 107.0);
    Ok(verdict(
        maxima.len() == 1
            && (peak.v_center - 115.0).abs() <= 5.0
            && (0.35..=0.55).contains(&peak.visibility)
            && asym > 0.05,
        format!(
            "maxima [{}], max |V(107+d) - V(107-d)| = {asym:.3} (target single maximum at 115 +- 5 with V in [0.35, 0.55], asymmetric)",
            describe(&maxima)
        ),
    ))
}

fn classical_vdw() -> Result<Verdict, String> {
    let ifm = Interferometer::standard_c70();
    let rays = RayBundleSpec::default();
    let wide: Vec<f64> = (0..=48).map(|i| 80.0 * 1.07f64.powi(i)).collect();
    let c = classical_visibility_curve(&ifm, &rays, &wide, &DistributionModel::Delta, true)
        .map_err(e)?;
    let peak = c.peak().ok_or("empty curve")?;
    let band = grid(80.0, 215.0, 5.0);
    let mut low_max: f64 = 0.0;
    for model in [
        DistributionModel::Delta,
        DistributionModel::SelectorGaussian,
    ] {
        let c = classical_visibility_curve(&ifm, &rays, &band, &model, true).map_err(e)?;
        low_max = low_max.max(c.peak().ok_or("empty curve")?.visibility);
    }
    Ok(verdict(
        (0.14..=0.22).contains(&peak.visibility)
            && (400.0..=2000.0).contains(&peak.v_center)
            && low_max < 0.15,
        format!(
            "peak V = {:.4} at {:.0} m/s, max V in 80-215 m/s = {low_max:.4} (target 0.18 +- 0.04 in 400-2000 m/s, < 0.15 below 215)",
            peak.visibility, peak.v_center
        ),
    ))
}

fn gravity() -> Result<Verdict, String> {
    let ifm = Interferometer::standard_c70();
    let dist = DistributionModel::SelectorGaussian.at(115.0).map_err(e)?;
    let phase = |mrad: f64| -> Result<f64, String> {
        let mut t = ifm.clone();
        t.geometry.tilt_alpha = mrad * 1e-3;
        Ok(velocity_averaged(&t, &dist, true)
            .map_err(e)?
            .spectrum
            .fringe_phase())
    };
    let slope = ((phase(1.0)? - phase(-1.0)? + PI).rem_euclid(2.0 * PI) - PI) / 2.0;
    Ok(verdict(
        within(slope.abs(), 0.2, 0.15),
        format!("{slope:.4} rad/mrad at 115 m/s, selector band (target 0.2 within 15%)"),
    ))
}

fn oracle() -> Result<Verdict, String> {
    let dir = tempfile::tempdir().map_err(e)?;
    let out = Command::new(env!("CARGO_BIN_EXE_talbot"))
        .args(["oracle-check", "--out"])
        .arg(dir.path())
        .output()
        .map_err(e)?;
    let code = out.status.code();
    let csv = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap_or_default();
    let rows: Vec<(String, bool, f64)> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some((f[0].to_string(), f[1] == "true", f.get(5)?.parse().ok()?))
        })
        .collect();
    let diffs: Vec<String> = rows
        .iter()
        .map(|(v, vdw, d)| format!("{v}{}:{d:.4}", if *vdw { "+" } else { "-" }))
        .collect();
    let max = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(verdict(
        code == Some(0) && diffs.len() == 6 && max <= 0.01,
        format!(
            "oracle-check exit {code:?}, |diff| by v and vdW [{}], max {max:.4} (target <= 0.01, exit 0)",
            diffs.join(" ")
        ),
    ))
}

fn scalability() -> Result<Verdict, String> {
    let scaled = Interferometer::standard_c70().scaled(16.0, 4.0);
    let c = visibility_curve(
        &scaled,
        &grid(80.0, 215.0, 0.2),
        &DistributionModel::Delta,
        true,
    )
    .map_err(e)?;
    let w = c.peak_fwhm().ok_or("peak does not fall to half height")?;
    Ok(verdict(
        (0.005..=0.02).contains(&w.relative()),
        format!(
            "peak at {:.1} m/s, FWHM {:.3} m/s, dv/v = {:.4} (target 0.005-0.02)",
            w.center,
            w.fwhm,
            w.relative()
        ),
    ))
}

fn statistics() -> Result<Verdict, String> {
    let ifm = Interferometer::standard_c70();
    let plan = ScanPlan::default();
    let d = ifm.period();
    let dist = DistributionModel::SelectorGaussian
        .at(plan.v_center)
        .map_err(e)?;
    let v_true = velocity_averaged(&ifm, &dist, true).map_err(e)?.visibility;
    let phase_true = 0.7;
    let model = plan.model(v_true, phase_true, d);
    let trials = 200u64;
    let (mut cov_v, mut cov_p, mut cov_joint) = (0, 0, 0);
    let mut snrs = Vec::new();
    // 2-D chi-square quantile matching the 95.4 % of a 2σ interval.
    let joint_limit = -2.0 * (1.0 - 0.9545f64).ln();
    for seed in 0..trials {
        let scan = synthesize_scan(&model, plan.positions(d), plan.dwell, 0.0, seed).map_err(e)?;
        let fit = extract_fringe(&scan, d, None).map_err(e)?;
        let zv = (fit.visibility - v_true) / fit.sigma_visibility;
        let zp = ((fit.phase - phase_true + PI).rem_euclid(2.0 * PI) - PI) / fit.sigma_phase;
        cov_v += (zv.abs() <= 2.0) as u32;
        cov_p += (zp.abs() <= 2.0) as u32;
        cov_joint += (zv * zv + zp * zp <= joint_limit) as u32;
        snrs.push(fit.snr());
    }
    snrs.sort_by(f64::total_cmp);
    let median = snrs[snrs.len() / 2];
    let frac = |n: u32| n as f64 / trials as f64;
    Ok(verdict(
        frac(cov_v) >= 0.93 && frac(cov_p) >= 0.93 && frac(cov_joint) >= 0.93 && (35.0..=65.0).contains(&median),
        format!(
            "2-sigma coverage V {:.3}, phase {:.3}, joint {:.3}; median SNR {median:.1} at V = {v_true:.3}, {:.0} s (target >= 0.93, 50 +- 15)",
            frac(cov_v),
            frac(cov_p),
            frac(cov_joint),
            plan.points as f64 * plan.dwell
        ),
    ))
}

fn limits() -> Result<Verdict, String> {
    let ifm = Interferometer::standard_c70();
    let q = monochromatic_visibility(&ifm, 1e5, false).map_err(e)?;
    let c = classical_spectrum(&ifm, &RayBundleSpec::default(), 1e5, false)
        .map_err(e)?
        .visibility();
    let fast_ok = (q - c).abs() < 0.005;

    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        ..Config::default()
    });
    let b0 = runner.run(
        &(60.0f64..400.0, 0.0f64..6.0, 0.0f64..6.0, any::<bool>()),
        |(v, x1, x2, vdw)| {
            let t = build_transmission(&ifm.second_grating(vdw), v, 4096).unwrap();
            let b = fourier_coeffs(&t, 2047).unwrap();
            let a = talbot_coefficients(&b, x1, 2).unwrap().get(0);
            let c = talbot_coefficients(&b, x2, 2).unwrap().get(0);
            prop_assert!((a - c).norm() < 1e-14, "{} vs {}", a, c);
            Ok(())
        },
    );
    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        ..Config::default()
    });
    let nonneg = runner.run(
        &(50.0f64..2000.0, -5e-3f64..5e-3, any::<bool>()),
        |(v, tilt, vdw)| {
            let mut t = ifm.clone();
            t.geometry.tilt_alpha = tilt;
            let s = spectrum_at(&t, v, vdw).unwrap();
            let min = s.sample(512).into_iter().fold(f64::INFINITY, f64::min);
            prop_assert!(min >= -1e-9 * s.s0(), "min {} S0 {}", min, s.s0());
            Ok(())
        },
    );
    Ok(verdict(
        fast_ok && b0.is_ok() && nonneg.is_ok(),
        format!(
            "|V_q - V_cl| at 1e5 m/s = {:.1e}; B0 xi-independence {}; non-negativity {} (64 cases each)",
            (q - c).abs(),
            b0.map_or_else(|e| format!("FAILED: {e}"), |_| "held".into()),
            nonneg.map_or_else(|e| format!("FAILED: {e}"), |_| "held".into()),
        ),
    ))
}

fn main() {
    let checks: [(&str, Check); 11] = [
        ("wavelength endpoints", wavelength_endpoints),
        ("Talbot velocity", talbot_velocity),
        ("classical binary model", classical_binary),
        ("quantum model without vdW", quantum_free),
        ("quantum model with vdW", quantum_vdw),
        ("classical model with vdW", classical_vdw),
        ("gravity phase slope", gravity),
        ("oracle equivalence", oracle),
        ("scalability", scalability),
        ("statistics closure", statistics),
        ("limit consistency", limits),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let v = check().unwrap_or_else(|err| verdict(false, format!("error: {err}")));
        failed += (!v.pass) as usize;
        println!(
            "{} [{:>2}] {name}: {} ({:.1} s)",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
