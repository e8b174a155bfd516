//! Brute-force Fresnel quadrature of the three-grating signal.
//!
//! For L1 = L2 = L a point source at x_s on grating 1 and a screen point x
//! couple through grating 2 only near the midpoint x_c = (x_s + x)/2. The
//! amplitude there is the Fresnel transform of t(x) over the effective
//! distance L/2,
//!
//! ```text
//! F(x_c) = (1/√(iλL/2)) ∫ t(y) exp(iπ (y - x_c)² / (λL/2)) dy,
//! ```
//!
//! which on a periodic grid is a circular correlation of t with a periodised
//! chirp. The chirp is truncated where its local frequency reaches the grid
//! Nyquist limit and rolled off with a cos² taper. Intensities are summed
//! over sources weighted by |t_1|², overlapped with the shifted window of
//! grating 3, and Fourier analysed in the shift.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{spectrum_at, FringeSpectrum};
use crate::error::{config, Error, Result};
use crate::grating::build_transmission_unchecked;
use crate::physics::Interferometer;

/// Fraction of the chirp half-width rolled off by the taper.
const TAPER: f64 = 0.25;
/// Exact phase recomputed every this many recurrence steps.
const RESYNC: usize = 1024;

/// Sample counts for one oracle evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleSamples {
    pub source: usize,
    pub grating: usize,
    pub screen: usize,
}

impl Default for OracleSamples {
    fn default() -> Self {
        Self {
            source: 16384,
            grating: 32768,
            screen: 16384,
        }
    }
}

impl OracleSamples {
    pub fn doubled(self) -> Self {
        Self {
            source: 2 * self.source,
            grating: 2 * self.grating,
            screen: 2 * self.screen,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.grating.is_power_of_two() || self.grating < 64 {
            return config(format!(
                "oracle grating samples must be a power of two >= 64, got {}",
                self.grating
            ));
        }
        if self.source != self.screen {
            return config("oracle source and screen sample counts must be equal");
        }
        if self.source == 0 || !self.grating.is_multiple_of(2 * self.source) {
            return config(format!(
                "grating samples ({}) must be a multiple of twice the source samples ({})",
                self.grating, self.source
            ));
        }
        Ok(())
    }
}

/// Chirp exp(iπ y² / (λ L_eff)) on the grid y = q Δ, |y| <= λ L_eff / (2Δ),
/// folded modulo `g` samples.
fn periodised_chirp(g: usize, delta: f64, lambda_leff: f64) -> Vec<Complex64> {
    let y_max = 0.5 * lambda_leff / delta;
    let q_max = (y_max / delta).floor() as usize;
    let edge = (1.0 - TAPER) * y_max;
    let alpha = PI * delta * delta / lambda_leff;
    let rot = Complex64::from_polar(1.0, 2.0 * alpha);
    let mut pos = vec![Complex64::new(0.0, 0.0); g];

    // The chirp is even in q: accumulate q > 0 once, then mirror.
    let mut q = 1;
    let mut idx = 1 % g;
    while q <= q_max {
        let qf = q as f64;
        let mut z = Complex64::from_polar(1.0, alpha * qf * qf);
        let mut step = Complex64::from_polar(1.0, alpha * (2.0 * qf + 1.0));
        let end = (q + RESYNC).min(q_max + 1);
        while q < end {
            let ay = q as f64 * delta;
            let w = if ay > edge {
                let c = (0.5 * PI * (ay - edge) / (y_max - edge)).cos();
                c * c
            } else {
                1.0
            };
            pos[idx] += z * w;
            z *= step;
            step *= rot;
            q += 1;
            idx += 1;
            if idx == g {
                idx = 0;
            }
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); g];
    out[0] = Complex64::new(1.0, 0.0);
    for r in 0..g {
        out[r] += pos[r];
        out[(g - r) % g] += pos[r];
    }
    out
}

/// Indices `lo..hi` of the contiguous open block of a centred window
/// sampled at `n` points of spacing `d/n` starting from -d/2.
fn open_block(n: usize, open: impl Fn(usize) -> bool) -> (usize, usize) {
    let lo = (0..n).find(|&i| open(i)).unwrap_or(n);
    let hi = (lo..n).find(|&i| !open(i)).unwrap_or(n);
    (lo, hi)
}

/// Detector spectrum by direct Fresnel quadrature at a single velocity.
pub fn fresnel_oracle(
    ifm: &Interferometer,
    v: f64,
    vdw: bool,
    samples: OracleSamples,
) -> Result<FringeSpectrum> {
    ifm.validate()?;
    samples.validate()?;
    let d = ifm.period();
    let g = samples.grating;
    let delta = d / g as f64;
    let lambda = ifm.wavelength(v)?;
    let l = ifm.geometry.l1;
    let lambda_leff = lambda * 0.5 * l;

    let t = build_transmission_unchecked(&ifm.second_grating(vdw), v, g)?;
    let chirp = periodised_chirp(g, delta, lambda_leff);
    let norm = delta / Complex64::new(0.0, lambda_leff).sqrt();

    // F_j = norm Σ_r t_r K[(r - j) mod g]; the open samples of t form one
    // contiguous block, so each output is a dot product with a slice of the
    // twice-repeated kernel.
    let (lo, hi) = open_block(g, |i| t.samples[i].norm_sqr() > 0.0);
    let kernel2: Vec<Complex64> = chirp.iter().chain(chirp.iter()).copied().collect();
    let t_open = &t.samples[lo..hi];
    let m = 2 * samples.source;
    let stride = g / m;
    let field_intensity: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|jj| {
            let start = lo + g - jj * stride;
            let f: Complex64 = t_open
                .iter()
                .zip(&kernel2[start..start + t_open.len()])
                .map(|(a, k)| a * k)
                .sum();
            (f * norm).norm_sqr()
        })
        .collect();

    // Sources and screen points on every other subgrid point, so that
    // (x_s + x)/2 lies on the field subgrid at index i_s + i_x, and the
    // other branch (x_s + x + d)/2 at i_s + i_x + m/2.
    let p = samples.source;
    let pos = |i: usize| -0.5 * d + (2 * i * stride) as f64 * delta;
    let (s_lo, s_hi) = open_block(p, |i| ifm.gratings[0].is_open(pos(i)));
    let (w_lo, w_hi) = open_block(p, |i| ifm.gratings[2].is_open(pos(i)));
    let field3: Vec<f64> = (0..3 * m).map(|i| field_intensity[i % m]).collect();
    let screen: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|ix| {
            (s_lo..s_hi)
                .map(|is| 0.5 * (field3[is + ix] + field3[is + ix + m / 2]))
                .sum::<f64>()
                / p as f64
        })
        .collect();

    // signal(s_j) = mean_x I(x) T3(x - s_j), T3 open on w_lo..w_hi.
    let screen2: Vec<f64> = screen.iter().chain(screen.iter()).copied().collect();
    let signal: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|js| screen2[w_lo + js..w_hi + js].iter().sum::<f64>() / p as f64)
        .collect();

    let k_max = ifm.numerics.k_max;
    let harmonics = (0..=k_max)
        .map(|k| {
            signal
                .iter()
                .enumerate()
                .map(|(j, &s)| {
                    s * Complex64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / p as f64)
                })
                .sum::<Complex64>()
                / p as f64
        })
        .collect();
    Ok(FringeSpectrum {
        harmonics,
        period: d,
    })
}

/// One velocity of an oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub velocity: f64,
    pub vdw: bool,
    pub production: f64,
    pub oracle: f64,
    pub oracle_doubled: f64,
    /// Complex first harmonic over S_0, production and oracle.
    pub production_ratio: Complex64,
    pub oracle_ratio: Complex64,
}

impl OracleCase {
    pub fn difference(&self) -> f64 {
        (self.production - self.oracle).abs()
    }

    pub fn doubling_change(&self) -> f64 {
        (self.oracle - self.oracle_doubled).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub cases: Vec<OracleCase>,
    pub tolerance: f64,
    pub convergence_tolerance: f64,
}

impl OracleReport {
    pub fn max_difference(&self) -> f64 {
        self.cases
            .iter()
            .map(OracleCase::difference)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.difference() <= self.tolerance)
    }
}

/// Compares production and oracle visibilities. Fails with
/// [`Error::OracleFailure`] if doubling every oracle sample count moves a
/// visibility by more than `convergence_tolerance`.
pub fn oracle_check(
    ifm: &Interferometer,
    velocities: &[f64],
    vdw_modes: &[bool],
    samples: OracleSamples,
    tolerance: f64,
    convergence_tolerance: f64,
) -> Result<OracleReport> {
    let mut cases = Vec::new();
    for &vdw in vdw_modes {
        for &v in velocities {
            let prod = spectrum_at(ifm, v, vdw)?;
            let orc = fresnel_oracle(ifm, v, vdw, samples)?;
            let fine = fresnel_oracle(ifm, v, vdw, samples.doubled())?;
            let case = OracleCase {
                velocity: v,
                vdw,
                production: prod.visibility(),
                oracle: orc.visibility(),
                oracle_doubled: fine.visibility(),
                production_ratio: prod.harmonics[1] / prod.s0(),
                oracle_ratio: orc.harmonics[1] / orc.s0(),
            };
            if case.doubling_change() > convergence_tolerance {
                return Err(Error::OracleFailure(format!(
                    "oracle not converged at v = {v} m/s (vdW {}): V = {:.4} -> {:.4} on doubling",
                    if vdw { "on" } else { "off" },
                    case.oracle,
                    case.oracle_doubled
                )));
            }
            cases.push(case);
        }
    }
    Ok(OracleReport {
        cases,
        tolerance,
        convergence_tolerance,
    })
}
