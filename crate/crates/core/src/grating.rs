//! Complex transmission of a free-standing grating: binary absorption times
//! the velocity-dependent van der Waals phase, and its Fourier series.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{config, domain, Result};
use crate::physics::constants::HBAR;

/// Geometry and material constants of one grating.
#[derive(Debug, Clone, PartialEq)]
pub struct GratingSpec {
    /// Period d, m.
    pub period: f64,
    /// Slit width over period.
    pub open_fraction: f64,
    /// Wall thickness along the beam, m.
    pub thickness: f64,
    /// Molecule-surface C3, J m^3. Zero gives a purely absorptive grating.
    pub c3: f64,
    /// Molecules closer than this to a wall are removed from the beam, m.
    pub edge_cutoff: f64,
}

impl GratingSpec {
    pub fn new(
        period: f64,
        open_fraction: f64,
        thickness: f64,
        c3: f64,
        edge_cutoff: f64,
    ) -> Result<Self> {
        let spec = Self {
            period,
            open_fraction,
            thickness,
            c3,
            edge_cutoff,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Gold grating with d = 991.25 nm, f = 0.48, b = 500 nm, 1 nm cutoff.
    pub fn standard_gold(c3: f64) -> Self {
        Self {
            period: 991.25e-9,
            open_fraction: 0.48,
            thickness: 500e-9,
            c3,
            edge_cutoff: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) {
            return domain(format!("period must be positive, got {}", self.period));
        }
        if !(self.open_fraction > 0.0 && self.open_fraction < 1.0) {
            return domain(format!(
                "open fraction must lie in (0, 1), got {}",
                self.open_fraction
            ));
        }
        if !(self.thickness > 0.0) {
            return domain(format!(
                "thickness must be positive, got {}",
                self.thickness
            ));
        }
        if !(self.c3 >= 0.0) {
            return domain(format!("C3 must be non-negative, got {}", self.c3));
        }
        if !(self.edge_cutoff >= 0.0 && self.edge_cutoff < self.half_width()) {
            return domain(format!(
                "edge cutoff must lie in [0, f d / 2), got {}",
                self.edge_cutoff
            ));
        }
        Ok(())
    }

    /// The same grating without the van der Waals interaction.
    pub fn binary(&self) -> Self {
        Self {
            c3: 0.0,
            ..self.clone()
        }
    }

    /// Half the slit width, f d / 2.
    pub fn half_width(&self) -> f64 {
        0.5 * self.open_fraction * self.period
    }

    /// Half width of the region molecules may traverse, f d / 2 - delta.
    pub fn open_half_width(&self) -> f64 {
        self.half_width() - self.edge_cutoff
    }

    /// Transmitted fraction of a uniform beam, f - 2 delta / d.
    pub fn effective_open_fraction(&self) -> f64 {
        self.open_fraction - 2.0 * self.edge_cutoff / self.period
    }

    /// Whether `x` (taken modulo the period, slit centred at 0) lies in the
    /// open region.
    pub fn is_open(&self, x: f64) -> bool {
        wrap_centered(x, self.period).abs() < self.open_half_width()
    }

    pub(crate) fn check_open(&self, x: f64, v: f64) -> Result<()> {
        if !(v > 0.0) {
            return domain(format!("velocity must be positive, got {v}"));
        }
        if !(x.abs() < self.open_half_width()) {
            return domain(format!(
                "x = {x:e} m is outside the open region |x| < {:e} m",
                self.open_half_width()
            ));
        }
        Ok(())
    }
}

/// Map `x` into [-d/2, d/2).
pub fn wrap_centered(x: f64, d: f64) -> f64 {
    x - d * (x / d + 0.5).floor()
}

/// Time integral of the wall potential along a straight path through the
/// slit at transverse position `x`, J s. Negative for an attractive
/// potential.
pub fn vdw_time_integral(spec: &GratingSpec, x: f64, v: f64) -> Result<f64> {
    spec.check_open(x, v)?;
    let a = spec.half_width();
    Ok(-(spec.thickness / v) * spec.c3 * ((a - x).powi(-3) + (a + x).powi(-3)))
}

/// Eikonal phase imprinted by the wall potential, rad.
pub fn vdw_phase(spec: &GratingSpec, x: f64, v: f64) -> Result<f64> {
    Ok(-vdw_time_integral(spec, x, v)? / HBAR)
}

/// One period of the complex transmission sampled at x_i = -d/2 + i d / N.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTransmission {
    pub samples: Vec<Complex64>,
    pub velocity: f64,
    pub period: f64,
}

impl SampledTransmission {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn position(&self, i: usize) -> f64 {
        -0.5 * self.period + i as f64 * self.period / self.samples.len() as f64
    }

    /// Mean of |t|² over the period.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|t| t.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

pub fn build_transmission(spec: &GratingSpec, v: f64, n: usize) -> Result<SampledTransmission> {
    spec.validate()?;
    if n < 4096 || !n.is_power_of_two() {
        return config(format!(
            "sample count must be a power of two >= 4096, got {n}"
        ));
    }
    build_transmission_unchecked(spec, v, n)
}

/// Like [`build_transmission`] but without the minimum-size check, for the
/// Fresnel oracle and small diagnostic grids.
pub(crate) fn build_transmission_unchecked(
    spec: &GratingSpec,
    v: f64,
    n: usize,
) -> Result<SampledTransmission> {
    if !(v > 0.0) {
        return domain(format!("velocity must be positive, got {v}"));
    }
    if !n.is_power_of_two() {
        return config(format!("sample count must be a power of two, got {n}"));
    }
    let d = spec.period;
    let a = spec.half_width();
    let open = spec.open_half_width();
    // phase = strength * [(a - x)^-3 + (a + x)^-3]
    let strength = spec.thickness * spec.c3 / (v * HBAR);
    let samples = (0..n)
        .map(|i| {
            let x = -0.5 * d + i as f64 * d / n as f64;
            if x.abs() >= open {
                Complex64::new(0.0, 0.0)
            } else if spec.c3 == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, strength * ((a - x).powi(-3) + (a + x).powi(-3)))
            }
        })
        .collect();
    Ok(SampledTransmission {
        samples,
        velocity: v,
        period: d,
    })
}

/// Fourier coefficients b_n for n in [-n_max, n_max].
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    coeffs: Vec<Complex64>,
    n_max: usize,
}

impl FourierSpectrum {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return config("coefficient array must have odd length 2 n_max + 1");
        }
        let n_max = coeffs.len() / 2;
        Ok(Self { coeffs, n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// b_n, zero outside the stored range.
    pub fn get(&self, n: i64) -> Complex64 {
        let idx = n + self.n_max as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Coefficients ordered from -n_max to n_max.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Σ |b_n|².
    pub fn power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// b_n = (1/N) Σ_i t_i exp(-2πi n x_i / d).
pub fn fourier_coeffs(t: &SampledTransmission, n_max: usize) -> Result<FourierSpectrum> {
    let n = t.len();
    if n < 4 || n_max + 1 > n / 2 {
        return config(format!("n_max = {n_max} exceeds N/2 - 1 for N = {n}"));
    }
    let mut buf = t.samples.clone();
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let scale = 1.0 / n as f64;
    // x_0 = -d/2 contributes a factor exp(iπn) = (-1)^n.
    let coeffs = (-(n_max as i64)..=n_max as i64)
        .map(|k| {
            let c = buf[k.rem_euclid(n as i64) as usize] * scale;
            if k % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect();
    Ok(FourierSpectrum { coeffs, n_max })
}

/// Fourier coefficients of |t(x)|² in closed form, sin(π n f') / (π n) with
/// f' the effective open fraction.
pub fn intensity_coeffs(spec: &GratingSpec, n_max: usize) -> FourierSpectrum {
    let f = spec.effective_open_fraction();
    let coeffs = (-(n_max as i64)..=n_max as i64)
        .map(|n| Complex64::new(window_coeff(f, n), 0.0))
        .collect();
    FourierSpectrum { coeffs, n_max }
}

/// n-th Fourier coefficient of a centred top-hat of duty cycle `f`.
pub fn window_coeff(f: f64, n: i64) -> f64 {
    if n == 0 {
        f
    } else {
        let pn = PI * n as f64;
        (pn * f).sin() / pn
    }
}
