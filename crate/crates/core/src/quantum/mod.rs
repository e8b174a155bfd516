//! Near-field quantum model of the three-grating interferometer.
//!
//! Gratings 1 and 3 enter through the Fourier coefficients of their
//! intensity transmission (A_k, C_k); grating 2 through its complex
//! amplitude coefficients b_n. Propagating the field of grating 2 over the
//! effective distance L1 L2 / (L1 + L2) and averaging incoherently over the
//! source slits of grating 1 leaves only harmonics commensurate with the
//! period, so the detector signal has components
//!
//! ```text
//! S_k = A_{-k} B_{2k}(ξ) C_k exp(i k φ_g),
//! B_m(ξ) = Σ_n b_n b*_{n-m} exp(-iπ m (2n - m) ξ / 2),   ξ = L1 λ / d².
//! ```
//!
//! The [`oracle`] submodule evaluates the same signal by direct Fresnel
//! quadrature.

pub mod oracle;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::beamline::{discretize, DistributionModel, VelocityDistribution};
use crate::error::{config, domain, Result};
use crate::grating::{build_transmission, fourier_coeffs, intensity_coeffs, FourierSpectrum};
use crate::physics::{Geometry, Interferometer};

pub use oracle::{fresnel_oracle, oracle_check, OracleReport, OracleSamples};

/// Near-field propagation coefficients B_m(ξ), m in [-m_max, m_max].
#[derive(Debug, Clone, PartialEq)]
pub struct TalbotCoefficients {
    coeffs: Vec<Complex64>,
    m_max: usize,
    pub xi: f64,
}

impl TalbotCoefficients {
    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn get(&self, m: i64) -> Complex64 {
        let idx = m + self.m_max as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// max_m |B_{-m} - conj(B_m)| relative to max_m |B_m|.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let m = self.m_max as i64;
        (0..=m)
            .map(|k| (self.get(-k) - self.get(k).conj()).norm())
            .fold(0.0, f64::max)
            / scale.max(f64::MIN_POSITIVE)
    }
}

pub fn talbot_coefficients(
    b: &FourierSpectrum,
    xi: f64,
    m_max: usize,
) -> Result<TalbotCoefficients> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return domain(format!("Talbot parameter must be non-negative, got {xi}"));
    }
    let n_max = b.n_max() as i64;
    let mm = m_max as i64;
    let mut pos = vec![Complex64::new(0.0, 0.0); m_max + 1];
    let mut neg = vec![Complex64::new(0.0, 0.0); m_max + 1];
    // exp(-iπ m (2n - m) ξ/2) = exp(-iπ ξ n)^m · exp(iπ m² ξ / 2)
    for n in -n_max..=n_max {
        let bn = b.get(n);
        if bn.norm_sqr() == 0.0 {
            continue;
        }
        let z = Complex64::from_polar(1.0, -PI * xi * n as f64);
        let zc = z.conj();
        pos[0] += bn * bn.conj();
        let mut zp = Complex64::new(1.0, 0.0);
        let mut zn = Complex64::new(1.0, 0.0);
        for m in 1..=mm {
            zp *= z;
            zn *= zc;
            pos[m as usize] += bn * b.get(n - m).conj() * zp;
            neg[m as usize] += bn * b.get(n + m).conj() * zn;
        }
    }
    let mut coeffs = Vec::with_capacity(2 * m_max + 1);
    for m in (1..=mm).rev() {
        coeffs.push(neg[m as usize] * Complex64::from_polar(1.0, 0.5 * PI * (m * m) as f64 * xi));
    }
    coeffs.push(Complex64::new(pos[0].re, 0.0));
    for m in 1..=mm {
        coeffs.push(pos[m as usize] * Complex64::from_polar(1.0, 0.5 * PI * (m * m) as f64 * xi));
    }
    Ok(TalbotCoefficients { coeffs, m_max, xi })
}

/// Fringe phase from a common tilt α of the setup: 2π L1² g α / (d v²).
pub fn gravity_phase(geom: &Geometry, d: f64, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return domain(format!("velocity must be positive, got {v}"));
    }
    Ok(2.0 * PI * geom.l1 * geom.l1 * geom.g * geom.tilt_alpha / (d * v * v))
}

/// Fourier components S_k, k in [0, k_max], of the detector signal as a
/// function of the grating-3 shift x: S(x) = S_0 + 2 Σ Re(S_k e^{2πikx/d}).
#[derive(Debug, Clone, PartialEq)]
pub struct FringeSpectrum {
    pub harmonics: Vec<Complex64>,
    pub period: f64,
}

impl FringeSpectrum {
    pub fn k_max(&self) -> usize {
        self.harmonics.len() - 1
    }

    pub fn s0(&self) -> f64 {
        self.harmonics[0].re
    }

    /// First-harmonic visibility 2|S_1| / S_0.
    pub fn visibility(&self) -> f64 {
        match self.harmonics.get(1) {
            Some(s1) if self.s0() > 0.0 => 2.0 * s1.norm() / self.s0(),
            _ => 0.0,
        }
    }

    /// Phase of S_1, rad.
    pub fn fringe_phase(&self) -> f64 {
        self.harmonics.get(1).map_or(0.0, |s| s.arg())
    }

    pub fn signal(&self, x: f64) -> f64 {
        let theta = 2.0 * PI * x / self.period;
        self.s0()
            + 2.0
                * self.harmonics[1..]
                    .iter()
                    .enumerate()
                    .map(|(k, s)| (s * Complex64::from_polar(1.0, (k + 1) as f64 * theta)).re)
                    .sum::<f64>()
    }

    /// Signal on `n` equally spaced shifts over one period.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| self.signal(i as f64 * self.period / n as f64))
            .collect()
    }

    /// (max - min) / (max + min) over `n` samples per period.
    pub fn peak_to_peak_visibility(&self, n: usize) -> f64 {
        let s = self.sample(n);
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / (max + min)
    }

    pub(crate) fn scaled_add(&mut self, other: &FringeSpectrum, w: f64) {
        for (a, b) in self.harmonics.iter_mut().zip(&other.harmonics) {
            *a += b * w;
        }
    }

    pub(crate) fn zeros(k_max: usize, period: f64) -> Self {
        Self {
            harmonics: vec![Complex64::new(0.0, 0.0); k_max + 1],
            period,
        }
    }
}

/// S_k = A_{-k} B_{2k} C_k e^{ik φ_g}.
pub fn fringe_spectrum(
    a1: &FourierSpectrum,
    b: &TalbotCoefficients,
    c3: &FourierSpectrum,
    grav_phase: f64,
    period: f64,
) -> Result<FringeSpectrum> {
    let k_max = a1.n_max();
    if c3.n_max() != k_max || b.m_max() < 2 * k_max {
        return config(format!(
            "inconsistent spectra: A has {} harmonics, C has {}, B reaches m = {}",
            a1.n_max(),
            c3.n_max(),
            b.m_max()
        ));
    }
    let harmonics = (0..=k_max as i64)
        .map(|k| {
            a1.get(-k)
                * b.get(2 * k)
                * c3.get(k)
                * Complex64::from_polar(1.0, k as f64 * grav_phase)
        })
        .collect();
    Ok(FringeSpectrum { harmonics, period })
}

/// Detector spectrum for a single velocity; includes the gravity phase of
/// the configured tilt.
pub fn spectrum_at(ifm: &Interferometer, v: f64, vdw: bool) -> Result<FringeSpectrum> {
    let num = &ifm.numerics;
    let t = build_transmission(&ifm.second_grating(vdw), v, num.samples)?;
    let b = fourier_coeffs(&t, num.effective_n_max())?;
    let xi = ifm.talbot_parameter(v)?;
    let talbot = talbot_coefficients(&b, xi, num.m_max())?;
    let a1 = intensity_coeffs(&ifm.gratings[0], num.k_max);
    let c3 = intensity_coeffs(&ifm.gratings[2], num.k_max);
    let phi = gravity_phase(&ifm.geometry, ifm.period(), v)?;
    fringe_spectrum(&a1, &talbot, &c3, phi, ifm.period())
}

pub fn monochromatic_visibility(ifm: &Interferometer, v: f64, vdw: bool) -> Result<f64> {
    Ok(spectrum_at(ifm, v, vdw)?.visibility())
}

/// Incoherently averaged spectrum over a velocity distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedFringe {
    pub spectrum: FringeSpectrum,
    pub visibility: f64,
    /// Beam flux of the distribution times the mean transmitted fraction.
    pub flux: f64,
}

/// Weighted incoherent sum of per-velocity spectra.
pub fn average_spectra<F>(
    dist: &VelocityDistribution,
    nodes: usize,
    k_max: usize,
    period: f64,
    per_velocity: F,
) -> Result<AveragedFringe>
where
    F: Fn(f64) -> Result<FringeSpectrum> + Sync,
{
    let grid = discretize(dist, nodes)?;
    if grid.velocities.is_empty() {
        return domain("empty velocity distribution");
    }
    let spectra: Vec<FringeSpectrum> = grid
        .velocities
        .par_iter()
        .map(|&v| per_velocity(v))
        .collect::<Result<_>>()?;
    let mut avg = FringeSpectrum::zeros(k_max, period);
    for (s, w) in spectra.iter().zip(&grid.weights) {
        avg.scaled_add(s, *w);
    }
    let visibility = avg.visibility();
    let flux = grid.beam_flux * avg.s0();
    Ok(AveragedFringe {
        spectrum: avg,
        visibility,
        flux,
    })
}

pub fn velocity_averaged(
    ifm: &Interferometer,
    dist: &VelocityDistribution,
    vdw: bool,
) -> Result<AveragedFringe> {
    average_spectra(
        dist,
        ifm.numerics.velocity_nodes,
        ifm.numerics.k_max,
        ifm.period(),
        |v| spectrum_at(ifm, v, vdw),
    )
}

/// (visibility, flux) for a velocity distribution.
pub fn velocity_averaged_visibility(
    ifm: &Interferometer,
    dist: &VelocityDistribution,
    vdw: bool,
) -> Result<(f64, f64)> {
    let avg = velocity_averaged(ifm, dist, vdw)?;
    Ok((avg.visibility, avg.flux))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub v_center: f64,
    pub visibility: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityCurve {
    pub points: Vec<CurvePoint>,
}

impl VisibilityCurve {
    pub fn peak(&self) -> Option<CurvePoint> {
        self.points
            .iter()
            .copied()
            .max_by(|a, b| a.visibility.total_cmp(&b.visibility))
    }

    /// Interior points strictly above both neighbours.
    pub fn local_maxima(&self) -> Vec<CurvePoint> {
        self.points
            .windows(3)
            .filter(|w| w[1].visibility > w[0].visibility && w[1].visibility > w[2].visibility)
            .map(|w| w[1])
            .collect()
    }

    /// Interior points strictly below both neighbours.
    pub fn local_minima(&self) -> Vec<CurvePoint> {
        self.points
            .windows(3)
            .filter(|w| w[1].visibility < w[0].visibility && w[1].visibility < w[2].visibility)
            .map(|w| w[1])
            .collect()
    }

    pub fn visibilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.visibility).collect()
    }

    /// Local maxima rising at least `min_prominence` above the higher of the
    /// lowest points separating them from taller neighbours (or the curve
    /// ends).
    pub fn prominent_maxima(&self, min_prominence: f64) -> Vec<CurvePoint> {
        let v = self.visibilities();
        let n = v.len();
        let mut out = Vec::new();
        for i in 1..n.saturating_sub(1) {
            if !(v[i] > v[i - 1] && v[i] >= v[i + 1]) {
                continue;
            }
            let mut left = v[i];
            for j in (0..i).rev() {
                if v[j] > v[i] {
                    break;
                }
                left = left.min(v[j]);
            }
            let mut right = v[i];
            for &vj in &v[i + 1..] {
                if vj > v[i] {
                    break;
                }
                right = right.min(vj);
            }
            if v[i] - left.max(right) >= min_prominence {
                out.push(self.points[i]);
            }
        }
        out
    }

    /// Full width at half maximum of the tallest peak, by linear
    /// interpolation between samples. `None` if the curve does not fall
    /// below half the peak on both sides.
    pub fn peak_fwhm(&self) -> Option<PeakWidth> {
        let v = self.visibilities();
        let (ip, &vmax) = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
        let half = 0.5 * vmax;
        let x = |i: usize| self.points[i].v_center;
        let cross = |i: usize, j: usize| x(i) + (half - v[i]) * (x(j) - x(i)) / (v[j] - v[i]);
        let lo = (0..ip)
            .rev()
            .find(|&i| v[i] < half)
            .map(|i| cross(i, i + 1))?;
        let hi = (ip + 1..v.len())
            .find(|&i| v[i] < half)
            .map(|i| cross(i - 1, i))?;
        Some(PeakWidth {
            center: x(ip),
            peak: vmax,
            fwhm: hi - lo,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakWidth {
    pub center: f64,
    pub peak: f64,
    pub fwhm: f64,
}

impl PeakWidth {
    pub fn relative(&self) -> f64 {
        self.fwhm / self.center
    }
}

pub(crate) fn check_centers(centers: &[f64]) -> Result<()> {
    if centers.is_empty() {
        return domain("no center velocities given");
    }
    if let Some(v) = centers.iter().find(|v| !(**v > 0.0)) {
        return domain(format!("center velocities must be positive, got {v}"));
    }
    Ok(())
}

pub fn visibility_curve(
    ifm: &Interferometer,
    centers: &[f64],
    model: &DistributionModel,
    vdw: bool,
) -> Result<VisibilityCurve> {
    check_centers(centers)?;
    let points = centers
        .par_iter()
        .map(|&c| {
            let (visibility, flux) = velocity_averaged_visibility(ifm, &model.at(c)?, vdw)?;
            Ok(CurvePoint {
                v_center: c,
                visibility,
                flux,
            })
        })
        .collect::<Result<_>>()?;
    Ok(VisibilityCurve { points })
}
