//! Subcommand runners. Each returns an [`Outcome`] holding every output
//! file in memory; nothing touches the filesystem here.

use std::f64::consts::PI;

use talbot_core::beamline::DistributionModel;
use talbot_core::classical::classical_visibility_curve;
use talbot_core::physics::talbot_length;
use talbot_core::quantum::{oracle_check, velocity_averaged, visibility_curve};
use talbot_core::scanlab::{
    count_rate_model, drift_rate, extract_fringe, synthesize_scan, uniform_positions, FringeModel,
};
use talbot_core::{Interferometer, VisibilityCurve};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{line_plot, num, Series, Table};

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    /// Files already serialised, such as scan records.
    pub raw: Vec<(String, Vec<u8>)>,
    pub plots: Vec<(String, String)>,
    pub summary: Vec<String>,
    /// Set when the run completed but its check did not pass.
    pub failure: Option<CliError>,
}

fn curve_series(name: &str, c: &VisibilityCurve) -> Series {
    Series {
        name: name.to_string(),
        points: c
            .points
            .iter()
            .map(|p| (p.v_center, p.visibility))
            .collect(),
    }
}

fn distribution_name(m: &DistributionModel) -> String {
    match m {
        DistributionModel::Delta => "delta".into(),
        DistributionModel::SelectorGaussian => "selector".into(),
        DistributionModel::SelectorEffusive { most_probable } => {
            format!("effusive:{most_probable}")
        }
        DistributionModel::FixedGaussian { fwhm_fraction } => format!("fixed:{fwhm_fraction}"),
    }
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifm = cfg.interferometer()?;
    let rays = cfg.rays()?;
    let model = cfg.distribution()?;
    let centers = cfg.sweep.centers();
    let cols = &cfg.sweep.columns;
    let want = |c: &str| cols.iter().any(|x| x == c);

    let quantum = |vdw| visibility_curve(&ifm, &centers, &model, vdw);
    let classical = |vdw| classical_visibility_curve(&ifm, &rays, &centers, &model, vdw);
    let q_vdw = if want("vis_quantum_vdw") || want("flux_rel") {
        Some(quantum(true)?)
    } else {
        None
    };
    let q_free = want("vis_quantum_novdw")
        .then(|| quantum(false))
        .transpose()?;
    let c_vdw = want("vis_classical_vdw")
        .then(|| classical(true))
        .transpose()?;
    let c_free = want("vis_classical_novdw")
        .then(|| classical(false))
        .transpose()?;

    let flux_max = q_vdw
        .as_ref()
        .map(|c| c.points.iter().map(|p| p.flux).fold(0.0, f64::max))
        .unwrap_or(1.0);
    let column = |name: &str| -> Option<Vec<f64>> {
        let vis = |c: &Option<VisibilityCurve>| c.as_ref().map(|c| c.visibilities());
        match name {
            "vis_quantum_vdw" => vis(&q_vdw),
            "vis_quantum_novdw" => vis(&q_free),
            "vis_classical_vdw" => vis(&c_vdw),
            "vis_classical_novdw" => vis(&c_free),
            "flux_rel" => q_vdw
                .as_ref()
                .map(|c| c.points.iter().map(|p| p.flux / flux_max).collect()),
            _ => None,
        }
    };

    let mut header = vec!["v_center_mps"];
    header.extend(cols.iter().map(String::as_str));
    let mut table = Table::new(&header).meta("distribution", distribution_name(&model));
    let data: Vec<Vec<f64>> = cols.iter().map(|c| column(c).unwrap_or_default()).collect();
    for (i, v) in centers.iter().enumerate() {
        let mut row = vec![num(*v)];
        row.extend(data.iter().map(|d| num(d[i])));
        table.push(row);
    }

    let mut out = Outcome::default();
    for (name, curve) in [
        ("quantum vdW", &q_vdw),
        ("quantum no vdW", &q_free),
        ("classical vdW", &c_vdw),
        ("classical no vdW", &c_free),
    ] {
        if let Some(p) = curve.as_ref().and_then(VisibilityCurve::peak) {
            out.summary.push(format!(
                "{name}: peak V = {:.4} at {} m/s",
                p.visibility, p.v_center
            ));
        }
    }
    let series: Vec<Series> = [
        ("quantum vdW", &q_vdw),
        ("quantum no vdW", &q_free),
        ("classical vdW", &c_vdw),
        ("classical no vdW", &c_free),
    ]
    .into_iter()
    .filter_map(|(n, c)| c.as_ref().map(|c| curve_series(n, c)))
    .collect();
    out.plots.push((
        "sweep.svg".into(),
        line_plot(
            "Visibility vs center velocity",
            "v (m/s)",
            "visibility",
            &series,
        ),
    ));
    out.tables.push(("sweep.csv".into(), table));
    Ok(out)
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

pub fn gravity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifm = cfg.interferometer()?;
    let model = cfg.distribution()?;
    let v = cfg.gravity.v_center_mps;
    let dist = model.at(v)?;
    let tilts = &cfg.gravity.tilts_mrad;
    let at = |mrad: f64| {
        let mut tilted = ifm.clone();
        tilted.geometry.tilt_alpha = mrad * 1e-3;
        velocity_averaged(&tilted, &dist, true)
    };
    let reference = at(0.0)?.spectrum.fringe_phase();
    let runs = tilts
        .iter()
        .map(|&t| at(t))
        .collect::<Result<Vec<_>, _>>()?;

    // Unwrap outward from the tilt nearest zero.
    let raw: Vec<f64> = runs
        .iter()
        .map(|r| wrap(r.spectrum.fringe_phase() - reference))
        .collect();
    let start = (0..tilts.len())
        .min_by(|&a, &b| tilts[a].abs().total_cmp(&tilts[b].abs()))
        .unwrap_or(0);
    let mut phase = raw.clone();
    for i in start + 1..phase.len() {
        phase[i] = phase[i - 1] + wrap(raw[i] - raw[i - 1]);
    }
    for i in (0..start).rev() {
        phase[i] = phase[i + 1] + wrap(raw[i] - raw[i + 1]);
    }
    let n = tilts.len();
    let slope = |i: usize| -> f64 {
        if n < 2 {
            return f64::NAN;
        }
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        (phase[b] - phase[a]) / (tilts[b] - tilts[a])
    };

    let mut table = Table::new(&["alpha_rad", "phase_rad", "phase_per_mrad", "visibility"])
        .meta("v_center_mps", v)
        .meta("distribution", distribution_name(&model));
    for i in 0..n {
        table.push(vec![
            num(tilts[i] * 1e-3),
            num(phase[i]),
            num(slope(i)),
            num(runs[i].visibility),
        ]);
    }

    let mut out = Outcome::default();
    if n >= 2 {
        let tm = tilts.iter().sum::<f64>() / n as f64;
        let pm = phase.iter().sum::<f64>() / n as f64;
        let sxy: f64 = tilts
            .iter()
            .zip(&phase)
            .map(|(t, p)| (t - tm) * (p - pm))
            .sum();
        let sxx: f64 = tilts.iter().map(|t| (t - tm).powi(2)).sum();
        out.summary
            .push(format!("phase slope {:.4} rad/mrad at {v} m/s", sxy / sxx));
    }
    out.plots.push((
        "gravity.svg".into(),
        line_plot(
            "Fringe phase vs table inclination",
            "alpha (mrad)",
            "phase (rad)",
            &[Series {
                name: "phase".into(),
                points: tilts.iter().copied().zip(phase.iter().copied()).collect(),
            }],
        ),
    ));
    out.tables.push(("gravity.csv".into(), table));
    Ok(out)
}

pub fn scale(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let base = cfg.interferometer()?;
    let sc = &cfg.scale;
    let scaled = base.scaled(sc.mass_factor, sc.period_divisor);
    scaled.validate()?;
    let vs = sc.velocities();
    let curve = |ifm: &Interferometer| visibility_curve(ifm, &vs, &DistributionModel::Delta, true);
    let (cb, cs) = (curve(&base)?, curve(&scaled)?);

    let mut table = Table::new(&["v_mps", "vis_baseline", "vis_scaled"])
        .meta("mass_factor", sc.mass_factor)
        .meta("period_divisor", sc.period_divisor);
    for ((v, b), s) in vs.iter().zip(cb.visibilities()).zip(cs.visibilities()) {
        table.push(vec![num(*v), num(b), num(s)]);
    }

    let mut summary = Table::new(&[
        "case",
        "mass_amu",
        "period_nm",
        "peak_v_mps",
        "peak_visibility",
        "fwhm_mps",
        "rel_fwhm",
        "talbot_length_m",
    ]);
    let mut out = Outcome::default();
    let v_ref = cs.peak().map_or(vs[0], |p| p.v_center);
    for (name, ifm, c) in [("baseline", &base, &cb), ("scaled", &scaled, &cs)] {
        let lt = talbot_length(ifm.period(), ifm.wavelength(v_ref)?)?;
        let w = c.peak_fwhm();
        let field = |f: fn(&talbot_core::quantum::PeakWidth) -> f64| w.as_ref().map_or(f64::NAN, f);
        summary.push(vec![
            name.to_string(),
            num(ifm.species.mass_amu()),
            num(ifm.period() * 1e9),
            num(field(|w| w.center)),
            num(field(|w| w.peak)),
            num(field(|w| w.fwhm)),
            num(field(|w| w.relative())),
            num(lt),
        ]);
        out.summary.push(match w {
            Some(w) => format!(
                "{name}: peak at {:.1} m/s, FWHM {:.3} m/s, relative {:.4}, L_T({v_ref:.1} m/s) = {lt:.5} m",
                w.center,
                w.fwhm,
                w.relative()
            ),
            None => format!("{name}: tallest peak does not drop to half height inside the range"),
        });
    }
    out.plots.push((
        "scale.svg".into(),
        line_plot(
            "Visibility at fixed velocity",
            "v (m/s)",
            "visibility",
            &[curve_series("baseline", &cb), curve_series("scaled", &cs)],
        ),
    ));
    out.tables.push(("scale.csv".into(), table));
    out.tables.push(("scale_summary.csv".into(), summary));
    Ok(out)
}

pub fn scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifm = cfg.interferometer()?;
    let model = cfg.distribution()?;
    let sc = &cfg.scan;
    let d = ifm.period();
    let avg = velocity_averaged(&ifm, &model.at(sc.v_center_mps)?, true)?;
    let visibility = sc.visibility.unwrap_or(avg.visibility);
    let rate = sc
        .count_rate_hz
        .unwrap_or_else(|| count_rate_model(sc.v_center_mps));
    let positions = uniform_positions(0.0, d, sc.periods, sc.points);
    let drift = sc.drift_nm_per_min * 1e-9 / 60.0;
    let dark = sc.subtract_dark.then_some(sc.dark_rate_hz);

    let mut out = Outcome::default();
    let mut summary = Table::new(&[
        "scan",
        "t0_s",
        "seed",
        "visibility",
        "sigma_visibility",
        "phase_rad",
        "sigma_phase_rad",
        "mean_rate_hz",
        "snr",
    ])
    .meta("v_center_mps", sc.v_center_mps)
    .meta("model_visibility", visibility)
    .meta(
        "model_visibility_peak_to_peak",
        avg.spectrum.peak_to_peak_visibility(1024),
    )
    .meta("count_rate_hz", rate);
    let mut records = Vec::with_capacity(sc.scans);
    for i in 0..sc.scans {
        let t0 = i as f64 * sc.interval_s;
        let seed = cfg.seed.wrapping_add(i as u64);
        let fringe = FringeModel {
            mean_rate: rate,
            visibility,
            phase: sc.phase_rad + 2.0 * PI * drift * t0 / d,
            period: d,
            dark_rate: sc.dark_rate_hz,
        };
        let record = synthesize_scan(&fringe, positions.clone(), sc.dwell_s, t0, seed)?;
        let fit = extract_fringe(&record, d, dark)?;
        summary.push(vec![
            i.to_string(),
            num(t0),
            seed.to_string(),
            num(fit.visibility),
            num(fit.sigma_visibility),
            num(fit.phase),
            num(fit.sigma_phase),
            num(fit.mean_rate),
            num(fit.snr()),
        ]);
        out.summary.push(format!(
            "scan {i}: V = {:.4} ± {:.4}, phase = {:.4} ± {:.4} rad, SNR = {:.1}",
            fit.visibility,
            fit.sigma_visibility,
            fit.phase,
            fit.sigma_phase,
            fit.snr()
        ));
        let mut bytes = Vec::new();
        record.write_csv(&mut bytes)?;
        out.raw.push((format!("scan_{i:03}.csv"), bytes));
        records.push(record);
    }
    if records.len() >= 2 {
        let est = drift_rate(&records, d)?;
        let mut t = Table::new(&["drift_nm_per_min", "sigma_nm_per_min", "ambiguous"]);
        t.push(vec![
            num(est.nm_per_min()),
            num(est.sigma_nm_per_min()),
            est.ambiguous.to_string(),
        ]);
        out.summary.push(format!(
            "drift {:.3} ± {:.3} nm/min{}",
            est.nm_per_min(),
            est.sigma_nm_per_min(),
            if est.ambiguous {
                " (ambiguous unwrap)"
            } else {
                ""
            }
        ));
        out.tables.push(("drift.csv".into(), t));
    }
    let first = &records[0];
    out.plots.push((
        "scan.svg".into(),
        line_plot(
            "First scan",
            "shift (nm)",
            "counts",
            &[Series {
                name: "counts".into(),
                points: first
                    .positions
                    .iter()
                    .zip(&first.counts)
                    .map(|(x, c)| (x * 1e9, *c as f64))
                    .collect(),
            }],
        ),
    ));
    out.tables.push(("scan_summary.csv".into(), summary));
    Ok(out)
}

pub fn oracle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifm = cfg.interferometer()?;
    let o = &cfg.oracle;
    let report = oracle_check(
        &ifm,
        &o.velocities_mps,
        &[false, true],
        o.samples(),
        o.tolerance,
        o.convergence_tolerance,
    )?;
    let mut table = Table::new(&[
        "v_mps",
        "vdw",
        "vis_production",
        "vis_oracle",
        "vis_oracle_doubled",
        "difference",
        "doubling_change",
    ])
    .meta("tolerance", o.tolerance)
    .meta("grating_samples", o.grating_samples);
    let mut out = Outcome::default();
    for c in &report.cases {
        table.push(vec![
            num(c.velocity),
            c.vdw.to_string(),
            num(c.production),
            num(c.oracle),
            num(c.oracle_doubled),
            num(c.difference()),
            num(c.doubling_change()),
        ]);
        out.summary.push(format!(
            "v = {} m/s, vdW {}: production {:.4}, oracle {:.4}, |diff| {:.4}",
            c.velocity,
            if c.vdw { "on " } else { "off" },
            c.production,
            c.oracle,
            c.difference()
        ));
    }
    if !report.passed() {
        out.failure = Some(CliError::Oracle(format!(
            "max |diff| {:.4} exceeds {}",
            report.max_difference(),
            o.tolerance
        )));
    }
    out.tables.push(("oracle.csv".into(), table));
    Ok(out)
}
