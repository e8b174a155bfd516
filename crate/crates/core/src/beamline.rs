//! Velocity distributions and the gravitational velocity selector
//! (oven orifice, height limiter, detection laser).

use crate::error::{config, domain, Error, Result};
use crate::physics::constants::G_STANDARD;

/// FWHM = 2 sqrt(2 ln 2) σ.
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Most probable velocity of the effusive source, m/s.
pub const EFFUSIVE_MOST_PROBABLE: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionKind {
    Delta,
    Gaussian,
    /// Gaussian selector band times the v³ exp(-v²/α²) flux of an effusive
    /// source peaking at `most_probable`.
    EffusiveWeightedGaussian {
        most_probable: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityDistribution {
    pub kind: DistributionKind,
    /// m/s
    pub center: f64,
    /// FWHM of the band over its center.
    pub fwhm_fraction: f64,
}

impl VelocityDistribution {
    pub fn new(kind: DistributionKind, center: f64, fwhm_fraction: f64) -> Result<Self> {
        if !(center > 0.0) || !center.is_finite() {
            return domain(format!("center velocity must be positive, got {center}"));
        }
        if !(0.0..1.0).contains(&fwhm_fraction) {
            return domain(format!(
                "fwhm fraction must lie in [0, 1), got {fwhm_fraction}"
            ));
        }
        if let DistributionKind::EffusiveWeightedGaussian { most_probable } = kind {
            if !(most_probable > 0.0) {
                return domain("effusive most probable velocity must be positive");
            }
        }
        Ok(Self {
            kind,
            center,
            fwhm_fraction,
        })
    }

    pub fn delta(center: f64) -> Result<Self> {
        Self::new(DistributionKind::Delta, center, 0.0)
    }

    pub fn gaussian(center: f64, fwhm_fraction: f64) -> Result<Self> {
        Self::new(DistributionKind::Gaussian, center, fwhm_fraction)
    }

    pub fn sigma(&self) -> f64 {
        self.fwhm_fraction * self.center / FWHM_PER_SIGMA
    }
}

/// Maps a center velocity onto a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionModel {
    Delta,
    /// Gaussian with width from [`selector_fwhm_model`].
    SelectorGaussian,
    /// As `SelectorGaussian`, weighted by the effusive source flux.
    SelectorEffusive {
        most_probable: f64,
    },
    /// Gaussian with a fixed relative width.
    FixedGaussian {
        fwhm_fraction: f64,
    },
}

impl DistributionModel {
    pub fn at(&self, center: f64) -> Result<VelocityDistribution> {
        match *self {
            DistributionModel::Delta => VelocityDistribution::delta(center),
            DistributionModel::SelectorGaussian => {
                VelocityDistribution::gaussian(center, selector_fwhm_model(center))
            }
            DistributionModel::SelectorEffusive { most_probable } => VelocityDistribution::new(
                DistributionKind::EffusiveWeightedGaussian { most_probable },
                center,
                selector_fwhm_model(center),
            ),
            DistributionModel::FixedGaussian { fwhm_fraction } => {
                VelocityDistribution::gaussian(center, fwhm_fraction)
            }
        }
    }
}

/// Relative FWHM of the selected band: linear from 8 % at 80 m/s to 35 % at
/// 215 m/s, with the center clamped to [60, 260] m/s.
pub fn selector_fwhm_model(v0: f64) -> f64 {
    let v = v0.clamp(60.0, 260.0);
    0.08 + (v - 80.0) * (0.35 - 0.08) / (215.0 - 80.0)
}

/// Discretised distribution. `weights` sum to one; `beam_flux` is the
/// unnormalised ∫ band(v) source(v) dv (m/s), 1 for a delta distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub velocities: Vec<f64>,
    pub weights: Vec<f64>,
    pub beam_flux: f64,
}

impl VelocityGrid {
    pub fn mean(&self) -> f64 {
        self.velocities
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum()
    }
}

/// Effusive flux density normalised to 1 at its maximum.
fn effusive_density(v: f64, most_probable: f64) -> f64 {
    // v³ exp(-v²/α²) peaks at v = α sqrt(3/2)
    let alpha2 = most_probable * most_probable * 2.0 / 3.0;
    let r = v / most_probable;
    r.powi(3) * (-(v * v - most_probable * most_probable) / alpha2).exp()
}

/// Equally spaced grid over ±3σ; nodes at non-positive velocity are dropped.
pub fn discretize(dist: &VelocityDistribution, n: usize) -> Result<VelocityGrid> {
    if n < 3 || n.is_multiple_of(2) {
        return config(format!("node count must be odd and >= 3, got {n}"));
    }
    let sigma = dist.sigma();
    if matches!(dist.kind, DistributionKind::Delta) || sigma == 0.0 {
        return Ok(VelocityGrid {
            velocities: vec![dist.center],
            weights: vec![1.0],
            beam_flux: 1.0,
        });
    }
    let lo = dist.center - 3.0 * sigma;
    let step = 6.0 * sigma / (n - 1) as f64;
    let mut velocities = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    for i in 0..n {
        let v = lo + i as f64 * step;
        if v <= 0.0 {
            continue;
        }
        let z = (v - dist.center) / sigma;
        let mut w = (-0.5 * z * z).exp();
        if let DistributionKind::EffusiveWeightedGaussian { most_probable } = dist.kind {
            w *= effusive_density(v, most_probable);
        }
        velocities.push(v);
        raw.push(w);
    }
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return domain("distribution has no weight at positive velocity");
    }
    let weights = raw.iter().map(|w| w / total).collect();
    Ok(VelocityGrid {
        velocities,
        weights,
        beam_flux: total * step,
    })
}

/// Vertical-plane selector geometry. Heights are full window heights; the
/// limiter and detector windows are centred on y = 0, the oven window on
/// `oven_offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorGeometry {
    pub oven_height: f64,
    pub oven_offset: f64,
    pub limiter_height: f64,
    pub limiter_z: f64,
    pub detector_z: f64,
    pub detector_height: f64,
    pub g: f64,
}

impl SelectorGeometry {
    /// 200 µm orifice, 150 µm limiter at 1.38 m, 8 µm waist laser at 2.38 m.
    pub fn standard() -> Self {
        Self {
            oven_height: 200e-6,
            oven_offset: 0.0,
            limiter_height: 150e-6,
            limiter_z: 1.38,
            detector_z: 2.38,
            detector_height: 16e-6,
            g: G_STANDARD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.limiter_z > 0.0 && self.limiter_z < self.detector_z) {
            return domain("require 0 < limiter_z < detector_z");
        }
        if !(self.oven_height > 0.0 && self.limiter_height > 0.0 && self.detector_height > 0.0) {
            return domain("window heights must be positive");
        }
        if !(self.g >= 0.0) {
            return domain("g must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityBand {
    Selected {
        v_min: f64,
        v_center: f64,
        v_max: f64,
    },
    /// Transmission does not depend on velocity (no gravity).
    NoSelection,
}

/// Resolution of the brute-force band scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandScan {
    pub v_step: f64,
    pub v_limit: f64,
    pub height_samples: usize,
}

impl Default for BandScan {
    fn default() -> Self {
        Self {
            v_step: 0.5,
            v_limit: 3000.0,
            height_samples: 41,
        }
    }
}

/// Transmitted fraction of (start, arrival) height pairs for each scanned
/// velocity.
pub fn selector_transmission(
    sel: &SelectorGeometry,
    oven_offset: f64,
    scan: &BandScan,
) -> Result<Vec<(f64, f64)>> {
    sel.validate()?;
    let oven = (
        oven_offset - 0.5 * sel.oven_height,
        oven_offset + 0.5 * sel.oven_height,
    );
    let det = (-0.5 * sel.detector_height, 0.5 * sel.detector_height);
    if oven.0 < det.1 && det.0 < oven.1 {
        return config("oven window overlaps the detector window");
    }
    let n = scan.height_samples.max(2);
    let frac = sel.limiter_z / sel.detector_z;
    // Height at the limiter = chord + sag, sag = g z (D - z) / (2 v²).
    let mut chord: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        let y0 = oven.0 + (oven.1 - oven.0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let yd = det.0 + (det.1 - det.0) * j as f64 / (n - 1) as f64;
            chord.push(y0 * (1.0 - frac) + yd * frac);
        }
    }
    chord.sort_by(|a, b| a.total_cmp(b));
    let total = chord.len() as f64;
    let half = 0.5 * sel.limiter_height;
    let sag_coeff = 0.5 * sel.g * sel.limiter_z * (sel.detector_z - sel.limiter_z);
    let steps = (scan.v_limit / scan.v_step).floor() as usize;
    let out = (1..=steps)
        .map(|i| {
            let v = i as f64 * scan.v_step;
            let sag = sag_coeff / (v * v);
            // count chords with -half <= chord + sag <= half
            let lo = chord.partition_point(|c| c + sag < -half);
            let hi = chord.partition_point(|c| c + sag <= half);
            (v, (hi - lo) as f64 / total)
        })
        .collect();
    Ok(out)
}

/// Velocity band transmitted from an oven at `oven_offset` to the detector.
pub fn velocity_band_from_geometry(
    sel: &SelectorGeometry,
    oven_offset: f64,
) -> Result<VelocityBand> {
    velocity_band_with(sel, oven_offset, &BandScan::default())
}

pub fn velocity_band_with(
    sel: &SelectorGeometry,
    oven_offset: f64,
    scan: &BandScan,
) -> Result<VelocityBand> {
    let table = selector_transmission(sel, oven_offset, scan)?;
    let passing: Vec<&(f64, f64)> = table.iter().filter(|(_, t)| *t > 0.0).collect();
    if passing.is_empty() {
        return Err(Error::EmptyBand);
    }
    if sel.g == 0.0 {
        return Ok(VelocityBand::NoSelection);
    }
    let norm: f64 = passing.iter().map(|(_, t)| t).sum();
    let v_center = passing.iter().map(|(v, t)| v * t).sum::<f64>() / norm;
    Ok(VelocityBand::Selected {
        v_min: passing[0].0,
        v_center,
        v_max: passing[passing.len() - 1].0,
    })
}

/// Oven offset whose transmitted band is centred on `target` m/s, found by
/// bisection between `lo` and `hi` (the band center falls as the oven is
/// lowered).
pub fn offset_for_center(
    sel: &SelectorGeometry,
    target: f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let center = |off: f64| match velocity_band_from_geometry(sel, off)? {
        VelocityBand::Selected { v_center, .. } => Ok(v_center),
        VelocityBand::NoSelection => config("selector has no velocity dependence"),
    };
    // lo is the lower (more negative) offset and gives the slower band
    let (c_lo, c_hi) = (center(lo)?, center(hi)?);
    if !(c_lo <= target && target <= c_hi) {
        return domain(format!(
            "target {target} m/s outside [{c_lo:.1}, {c_hi:.1}] for the given offsets"
        ));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if center(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
