//! Synthetic detector scans with Poisson counting noise, and the fringe
//! analysis applied to them: harmonic least squares, periodogram, drift and
//! signal-to-noise.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{domain, insufficient, Error, Result};

pub const SCHEMA: u32 = 1;

/// One scan of grating 3.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    /// Grating-3 shifts, m; strictly monotone.
    pub positions: Vec<f64>,
    pub counts: Vec<u64>,
    /// Dwell per point, s.
    pub dwell: f64,
    /// Scan start, s.
    pub timestamp: f64,
    pub seed: u64,
    /// Grating period the scan was taken with, m.
    pub period: f64,
}

impl ScanRecord {
    pub fn new(
        positions: Vec<f64>,
        counts: Vec<u64>,
        dwell: f64,
        timestamp: f64,
        seed: u64,
        period: f64,
    ) -> Result<Self> {
        let rec = Self {
            positions,
            counts,
            dwell,
            timestamp,
            seed,
            period,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.counts.len() {
            return domain(format!(
                "{} positions but {} counts",
                self.positions.len(),
                self.counts.len()
            ));
        }
        if !(self.dwell > 0.0) || !(self.period > 0.0) || !self.timestamp.is_finite() {
            return domain("dwell and period must be positive, timestamp finite");
        }
        let inc = self.positions.windows(2).all(|w| w[1] > w[0]);
        let dec = self.positions.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) || self.positions.iter().any(|x| !x.is_finite()) {
            return domain("positions must be finite and strictly monotone");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.dwell * self.len() as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        writeln!(out, "# schema={SCHEMA}").map_err(io)?;
        writeln!(
            out,
            "# period_m={:e} dwell_s={} seed={} t0_s={}",
            self.period, self.dwell, self.seed, self.timestamp
        )
        .map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["position_m", "counts"]).map_err(csv_err)?;
        for (x, c) in self.positions.iter().zip(&self.counts) {
            w.write_record([format!("{x:e}"), c.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |m: String| Error::Format(m);
        let mut lines = Vec::new();
        let mut meta: Vec<(String, String)> = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if let Some(rest) = line.strip_prefix('#') {
                for tok in rest.split_whitespace() {
                    let (k, v) = tok
                        .split_once('=')
                        .ok_or_else(|| bad(format!("malformed header token '{tok}'")))?;
                    meta.push((k.to_string(), v.to_string()));
                }
            } else {
                lines.push(line);
            }
        }
        let get = |key: &str| {
            meta.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| bad(format!("missing header field '{key}'")))
        };
        let schema: u32 = get("schema")?
            .parse()
            .map_err(|_| bad("schema is not an integer".into()))?;
        if schema != SCHEMA {
            return Err(bad(format!("unsupported schema {schema}")));
        }
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| bad(format!("header field '{key}' is not a number")))
        };
        let period = num("period_m")?;
        let dwell = num("dwell_s")?;
        let timestamp = num("t0_s")?;
        let seed: u64 = get("seed")?
            .parse()
            .map_err(|_| bad("seed is not an unsigned integer".into()))?;

        let body = lines.join("\n");
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != ["position_m", "counts"] {
            return Err(bad(format!("unexpected columns {header:?}")));
        }
        let mut positions = Vec::new();
        let mut counts = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row = i + 1;
            positions.push(
                rec[0]
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("row {row}: bad position '{}'", &rec[0])))?,
            );
            counts.push(
                rec[1]
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("row {row}: bad count '{}'", &rec[1])))?,
            );
        }
        Self::new(positions, counts, dwell, timestamp, seed, period)
    }
}

/// `n` equally spaced shifts covering `periods` periods from `start`.
pub fn uniform_positions(start: f64, period: f64, periods: f64, n: usize) -> Vec<f64> {
    let step = periods * period / n as f64;
    (0..n).map(|i| start + i as f64 * step).collect()
}

/// Parameters of a synthetic fringe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModel {
    /// Mean molecular count rate, 1/s.
    pub mean_rate: f64,
    pub visibility: f64,
    /// Phase φ in 1 + V cos(2πx/d + φ), rad.
    pub phase: f64,
    pub period: f64,
    pub dark_rate: f64,
}

impl FringeModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return domain(format!(
                "visibility must lie in [0, 1], got {}",
                self.visibility
            ));
        }
        if !(self.mean_rate >= 0.0) || !(self.dark_rate >= 0.0) {
            return domain("rates must be non-negative");
        }
        if !(self.period > 0.0) || !self.phase.is_finite() {
            return domain("period must be positive and phase finite");
        }
        Ok(())
    }

    /// Expected rate at shift `x`, 1/s.
    pub fn rate(&self, x: f64) -> f64 {
        self.dark_rate
            + self.mean_rate
                * (1.0 + self.visibility * (2.0 * PI * x / self.period + self.phase).cos())
    }
}

pub fn synthesize_scan(
    model: &FringeModel,
    positions: Vec<f64>,
    dwell: f64,
    timestamp: f64,
    seed: u64,
) -> Result<ScanRecord> {
    model.validate()?;
    if !(dwell > 0.0) {
        return domain(format!("dwell must be positive, got {dwell}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = positions
        .iter()
        .map(|&x| {
            let mu = model.rate(x) * dwell;
            if mu <= 0.0 {
                return Ok(0);
            }
            let p = Poisson::new(mu).map_err(|e| Error::Domain(e.to_string()))?;
            Ok(p.sample(&mut rng) as u64)
        })
        .collect::<Result<_>>()?;
    ScanRecord::new(positions, counts, dwell, timestamp, seed, model.period)
}

/// Result of the harmonic fit counts ≈ c + a cos θ + b sin θ, θ = 2πx/d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub visibility: f64,
    pub phase: f64,
    /// Molecular rate after optional dark subtraction, 1/s.
    pub mean_rate: f64,
    pub sigma_visibility: f64,
    pub sigma_phase: f64,
    /// First-harmonic amplitude √(a² + b²), counts per point.
    pub amplitude: f64,
    pub sigma_amplitude: f64,
}

impl FringeFit {
    pub fn snr(&self) -> f64 {
        self.amplitude / self.sigma_amplitude
    }
}

fn check_sampling(scan: &ScanRecord, d: f64) -> Result<()> {
    scan.validate()?;
    let n = scan.len();
    if n < 16 {
        return insufficient(format!(
            "{n} points cannot cover two periods at 8 per period"
        ));
    }
    let first = scan.positions[0];
    let last = scan.positions[n - 1];
    // span including the last point's share of the step
    let coverage = (last - first).abs() * n as f64 / (n - 1) as f64;
    if coverage < 2.0 * d * (1.0 - 1e-9) {
        return insufficient(format!("scan covers {:.3} periods, need 2", coverage / d));
    }
    if (n as f64) * d / coverage < 8.0 * (1.0 - 1e-9) {
        return insufficient(format!(
            "{:.2} points per period, need 8",
            n as f64 * d / coverage
        ));
    }
    Ok(())
}

/// Least-squares harmonic fit with Poisson-propagated uncertainties. With
/// `dark_rate`, its expected counts are removed from the mean before the
/// visibility is formed.
pub fn extract_fringe(scan: &ScanRecord, d: f64, dark_rate: Option<f64>) -> Result<FringeFit> {
    check_sampling(scan, d)?;
    let rows: Vec<Vector3<f64>> = scan
        .positions
        .iter()
        .map(|&x| {
            let t = 2.0 * PI * x / d;
            Vector3::new(1.0, t.cos(), t.sin())
        })
        .collect();
    let mut xtx = Matrix3::zeros();
    let mut xty = Vector3::zeros();
    for (r, &c) in rows.iter().zip(&scan.counts) {
        xtx += r * r.transpose();
        xty += r * c as f64;
    }
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::InsufficientData("singular harmonic design".into()))?;
    let beta = inv * xty;
    // Sandwich covariance with Poisson variance equal to the fitted mean.
    let mut meat = Matrix3::zeros();
    for r in &rows {
        let mu = r.dot(&beta).max(1.0);
        meat += r * r.transpose() * mu;
    }
    let cov = inv * meat * inv;

    let dark = dark_rate.unwrap_or(0.0) * scan.dwell;
    let (c, a, b) = (beta[0] - dark, beta[1], beta[2]);
    if !(c > 0.0) {
        return insufficient("no signal above the dark level");
    }
    let amp = a.hypot(b);
    let vis = amp / c;
    let phase = (-b).atan2(a);

    let grad_amp = Vector3::new(0.0, a / amp, b / amp);
    let grad_vis = Vector3::new(-amp / (c * c), a / (amp * c), b / (amp * c));
    let grad_phase = Vector3::new(0.0, b / (amp * amp), -a / (amp * amp));
    let var = |g: &Vector3<f64>| (g.transpose() * cov * g)[(0, 0)].max(0.0).sqrt();
    Ok(FringeFit {
        visibility: vis.min(1.0),
        phase,
        mean_rate: c / scan.dwell,
        sigma_visibility: var(&grad_vis),
        sigma_phase: var(&grad_phase),
        amplitude: amp,
        sigma_amplitude: var(&grad_amp),
    })
}

/// Fitted first-harmonic amplitude over its standard error.
pub fn snr_estimate(scan: &ScanRecord, d: f64) -> Result<f64> {
    Ok(extract_fringe(scan, d, None)?.snr())
}

/// Strongest non-zero frequency of a uniformly spaced scan, as a spatial
/// period (m) with its phase in the convention of [`FringeFit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodogramPeak {
    pub period: f64,
    pub phase: f64,
    pub power: f64,
}

pub fn periodogram_peak(scan: &ScanRecord) -> Result<PeriodogramPeak> {
    scan.validate()?;
    let n = scan.len();
    if n < 4 {
        return insufficient("periodogram needs at least 4 points");
    }
    let step = scan.positions[1] - scan.positions[0];
    if scan
        .positions
        .windows(2)
        .any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step.abs())
    {
        return domain("periodogram requires uniformly spaced positions");
    }
    let mean = scan.counts.iter().sum::<u64>() as f64 / n as f64;
    let mut buf: Vec<Complex64> = scan
        .counts
        .iter()
        .map(|&c| Complex64::new(c as f64 - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (k, z) = buf[1..=n / 2]
        .iter()
        .enumerate()
        .map(|(i, z)| (i + 1, *z))
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .expect("n >= 4");
    // Σ c_j e^{-2πi k j/n} with x_j = x_0 + j step: phase of the cosine at
    // x = 0 needs the offset of the first sample removed.
    let span = n as f64 * step;
    let phase = z.arg() - 2.0 * PI * k as f64 * scan.positions[0] / span;
    Ok(PeriodogramPeak {
        period: span.abs() / k as f64,
        phase: phase.rem_euclid(2.0 * PI),
        power: z.norm_sqr() / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    /// Phase slope × d / 2π, m/s.
    pub rate: f64,
    pub sigma_rate: f64,
    /// Set when a phase step between consecutive scans cannot be unwrapped
    /// unambiguously (drift near d/2 between scans).
    pub ambiguous: bool,
    pub unwrapped_phases: Vec<f64>,
}

impl DriftEstimate {
    pub fn nm_per_min(&self) -> f64 {
        self.rate * 1e9 * 60.0
    }

    pub fn sigma_nm_per_min(&self) -> f64 {
        self.sigma_rate * 1e9 * 60.0
    }
}

/// Weighted straight-line fit of unwrapped fringe phases against scan
/// timestamps. Scans are unwrapped in the order given.
pub fn drift_rate(scans: &[ScanRecord], d: f64) -> Result<DriftEstimate> {
    if scans.len() < 2 {
        return insufficient("drift needs at least two scans");
    }
    let fits = scans
        .iter()
        .map(|s| extract_fringe(s, d, None))
        .collect::<Result<Vec<_>>>()?;
    let mut phases = vec![fits[0].phase];
    let mut ambiguous = false;
    for w in fits.windows(2) {
        let step = (w[1].phase - w[0].phase + PI).rem_euclid(2.0 * PI) - PI;
        let sigma = w[0].sigma_phase.hypot(w[1].sigma_phase);
        if step.abs() + 2.0 * sigma > PI {
            ambiguous = true;
        }
        phases.push(phases.last().unwrap() + step);
    }
    let t: Vec<f64> = scans.iter().map(|s| s.timestamp).collect();
    let w: Vec<f64> = fits
        .iter()
        .map(|f| 1.0 / f.sigma_phase.max(1e-12).powi(2))
        .collect();
    let sw: f64 = w.iter().sum();
    let tm = t.iter().zip(&w).map(|(t, w)| t * w).sum::<f64>() / sw;
    let pm = phases.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>() / sw;
    let stt: f64 = t.iter().zip(&w).map(|(t, w)| w * (t - tm).powi(2)).sum();
    if !(stt > 0.0) {
        return insufficient("scan timestamps must not all coincide");
    }
    let stp: f64 = t
        .iter()
        .zip(&phases)
        .zip(&w)
        .map(|((t, p), w)| w * (t - tm) * (p - pm))
        .sum();
    let slope = stp / stt;
    let scale = d / (2.0 * PI);
    Ok(DriftEstimate {
        rate: slope * scale,
        sigma_rate: scale / stt.sqrt(),
        ambiguous,
        unwrapped_phases: phases,
    })
}

/// Detected molecular count rate, 1/s, interpolated linearly between 50/s at
/// 80 m/s and 450/s at 160 m/s, clamped outside.
pub fn count_rate_model(v_center: f64) -> f64 {
    let v = v_center.clamp(80.0, 160.0);
    50.0 + (v - 80.0) * (450.0 - 50.0) / (160.0 - 80.0)
}

/// Typical single scan: 115 m/s, 100 points at 1.5 s over two periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPlan {
    pub v_center: f64,
    pub points: usize,
    pub dwell: f64,
    pub periods: f64,
    pub dark_rate: f64,
}

impl Default for ScanPlan {
    fn default() -> Self {
        Self {
            v_center: 115.0,
            points: 100,
            dwell: 1.5,
            periods: 2.0,
            dark_rate: 0.2,
        }
    }
}

impl ScanPlan {
    pub fn model(&self, visibility: f64, phase: f64, period: f64) -> FringeModel {
        FringeModel {
            mean_rate: count_rate_model(self.v_center),
            visibility,
            phase,
            period,
            dark_rate: self.dark_rate,
        }
    }

    pub fn positions(&self, period: f64) -> Vec<f64> {
        uniform_positions(0.0, period, self.periods, self.points)
    }
}
