//! Classical point-particle model: straight rays through the three gratings
//! with an optional van der Waals impulse at grating 2.
//!
//! A ray leaving x0 in grating 1 and crossing grating 2 at x1 reaches the
//! third plane at
//!
//! ```text
//! x2 = x1 + (x1 - x0) L2/L1 + Δv_x(x1) L2 / v.
//! ```
//!
//! The x0 and x1 integrals of the harmonic e^{-2πik x2/d} factorise, so the
//! tensor-product quadrature costs only the sum of the node counts.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::beamline::DistributionModel;
use crate::beamline::VelocityDistribution;
use crate::error::{config, domain, Result};
use crate::grating::wrap_centered;
use crate::grating::GratingSpec;
use crate::physics::Interferometer;
use crate::quantum::{
    average_spectra, check_centers, gravity_phase, AveragedFringe, CurvePoint, FringeSpectrum,
    VisibilityCurve,
};

/// Minimum node count per axis.
pub const MIN_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    GaussLegendre,
    Midpoint,
}

/// Quadrature over the open windows of gratings 1 (x0) and 2 (x1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RayBundleSpec {
    pub x0_nodes: usize,
    pub x0_rule: QuadratureRule,
    pub x1_nodes: usize,
    pub x1_rule: QuadratureRule,
}

impl Default for RayBundleSpec {
    fn default() -> Self {
        // The kick diverges toward the walls; a fine uniform grid resolves it
        // better than Gauss nodes clustered at the edges.
        Self {
            x0_nodes: 256,
            x0_rule: QuadratureRule::GaussLegendre,
            x1_nodes: 1 << 18,
            x1_rule: QuadratureRule::Midpoint,
        }
    }
}

impl RayBundleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.x0_nodes < MIN_NODES || self.x1_nodes < MIN_NODES {
            return config(format!(
                "ray bundle needs at least {MIN_NODES} nodes per axis, got {} x {}",
                self.x0_nodes, self.x1_nodes
            ));
        }
        Ok(())
    }

    pub fn doubled(self) -> Self {
        Self {
            x0_nodes: 2 * self.x0_nodes,
            x1_nodes: 2 * self.x1_nodes,
            ..self
        }
    }
}

/// Nodes and weights of `rule` on [-w, w]; the weights sum to 2w.
pub fn quadrature(rule: QuadratureRule, n: usize, w: f64) -> Result<Vec<(f64, f64)>> {
    let Some(nz) = NonZeroUsize::new(n) else {
        return config("quadrature needs at least one node");
    };
    Ok(match rule {
        QuadratureRule::GaussLegendre => GaussLegendre::new(nz)
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, wt)| (x * w, wt * w))
            .collect(),
        QuadratureRule::Midpoint => {
            let h = 2.0 * w / n as f64;
            (0..n).map(|i| (-w + (i as f64 + 0.5) * h, h)).collect()
        }
    })
}

/// Transverse velocity change from the wall potential of grating 2, m/s.
/// Positive x is pushed further toward the nearer wall at +a.
pub fn vdw_kick(spec: &GratingSpec, x: f64, v: f64, mass: f64) -> Result<f64> {
    spec.check_open(x, v)?;
    if !(mass > 0.0) {
        return domain(format!("mass must be positive, got {mass}"));
    }
    Ok(kick_unchecked(spec, x, v, mass))
}

fn kick_unchecked(spec: &GratingSpec, x: f64, v: f64, mass: f64) -> f64 {
    let a = spec.half_width();
    spec.thickness * spec.c3 / (mass * v) * 3.0 * ((a - x).powi(-4) - (a + x).powi(-4))
}

/// Thin-lens focal length of one slit from the kick linearised at x = 0.
/// Negative: the slit acts as a diverging lens.
pub fn classical_focal_length(spec: &GratingSpec, v: f64, mass: f64) -> Result<f64> {
    if !(spec.c3 > 0.0) {
        return domain("focal length undefined without a wall interaction");
    }
    if !(v > 0.0) || !(mass > 0.0) {
        return domain("velocity and mass must be positive");
    }
    let a = spec.half_width();
    let slope = 24.0 * spec.thickness * spec.c3 / (mass * v * a.powi(5));
    Ok(-v / slope)
}

/// Velocity at which |f_v| equals `distance`.
pub fn focal_matching_velocity(spec: &GratingSpec, mass: f64, distance: f64) -> Result<f64> {
    let f1 = classical_focal_length(spec, 1.0, mass)?;
    Ok((distance / f1.abs()).sqrt())
}

/// Visibility reduction from a relative grating rotation `delta_theta`
/// averaged over an illuminated height `beam_height`: |sinc(π Δθ H / d)|.
pub fn tilt_visibility_factor(delta_theta: f64, beam_height: f64, d: f64) -> Result<f64> {
    if !(beam_height > 0.0) || !(d > 0.0) {
        return domain("beam height and period must be positive");
    }
    let u = PI * delta_theta * beam_height / d;
    Ok(if u == 0.0 { 1.0 } else { (u.sin() / u).abs() })
}

struct Setup {
    r: f64,
    drift: f64,
    d: f64,
    k_max: usize,
    w0: f64,
    c3_coeffs: Vec<f64>,
    phase: f64,
}

fn setup(ifm: &Interferometer, v: f64) -> Result<Setup> {
    ifm.validate()?;
    if !(v > 0.0) {
        return domain(format!("velocity must be positive, got {v}"));
    }
    let g3 = &ifm.gratings[2];
    let k_max = ifm.numerics.k_max;
    Ok(Setup {
        r: ifm.geometry.l2 / ifm.geometry.l1,
        drift: ifm.geometry.l2 / v,
        d: ifm.period(),
        k_max,
        w0: ifm.gratings[0].open_half_width(),
        c3_coeffs: (0..=k_max as i64)
            .map(|k| crate::grating::window_coeff(g3.effective_open_fraction(), k))
            .collect(),
        phase: gravity_phase(&ifm.geometry, ifm.period(), v)?,
    })
}

/// Σ_i w_i exp(-i k θ_i) for k = 0..=k_max.
fn harmonic_sums(points: impl Iterator<Item = (f64, f64)>, k_max: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); k_max + 1];
    for (theta, w) in points {
        let step = Complex64::from_polar(1.0, -theta);
        let mut z = Complex64::new(w, 0.0);
        for a in acc.iter_mut() {
            *a += z;
            z *= step;
        }
    }
    acc
}

fn assemble(s: &Setup, x0_sums: &[Complex64], x1_sums: &[Complex64]) -> FringeSpectrum {
    let norm = 1.0 / (s.d * s.d);
    let harmonics = (0..=s.k_max)
        .map(|k| {
            x0_sums[k]
                * x1_sums[k]
                * s.c3_coeffs[k]
                * norm
                * Complex64::from_polar(1.0, k as f64 * s.phase)
        })
        .collect();
    FringeSpectrum {
        harmonics,
        period: s.d,
    }
}

/// Harmonics of the classical shadow signal at one velocity, normalised like
/// the quantum spectrum (S_0 is the product of the three open fractions).
pub fn classical_spectrum(
    ifm: &Interferometer,
    rays: &RayBundleSpec,
    v: f64,
    vdw: bool,
) -> Result<FringeSpectrum> {
    rays.validate()?;
    let s = setup(ifm, v)?;
    let g2 = ifm.second_grating(vdw);
    let mass = ifm.species.mass;
    let x0 = quadrature(rays.x0_rule, rays.x0_nodes, s.w0)?;
    let x1 = quadrature(rays.x1_rule, rays.x1_nodes, g2.open_half_width())?;
    let scale = 2.0 * PI / s.d;

    let x0_sums = harmonic_sums(x0.iter().map(|&(x, w)| (-scale * s.r * x, w)), s.k_max);
    let x1_sums = harmonic_sums(
        x1.iter().map(|&(x, w)| {
            let kick = if g2.c3 > 0.0 {
                kick_unchecked(&g2, x, v, mass)
            } else {
                0.0
            };
            (scale * ((1.0 + s.r) * x + kick * s.drift), w)
        }),
        s.k_max,
    );
    Ok(assemble(&s, &x0_sums, &x1_sums))
}

/// Same spectrum estimated from `samples` uniformly random rays.
pub fn classical_spectrum_monte_carlo(
    ifm: &Interferometer,
    v: f64,
    vdw: bool,
    samples: usize,
    seed: u64,
) -> Result<FringeSpectrum> {
    if samples == 0 {
        return config("Monte Carlo needs at least one sample");
    }
    let s = setup(ifm, v)?;
    let g2 = ifm.second_grating(vdw);
    let w1 = g2.open_half_width();
    let mass = ifm.species.mass;
    let scale = 2.0 * PI / s.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Each ray carries weight (2 w0)(2 w1)/samples; split it between the
    // two factor sums as one joint sum over rays.
    let weight = 4.0 * s.w0 * w1 / samples as f64;
    let joint = harmonic_sums(
        (0..samples).map(|_| {
            let x0 = rng.random_range(-s.w0..s.w0);
            let x1 = rng.random_range(-w1..w1);
            let kick = if g2.c3 > 0.0 {
                kick_unchecked(&g2, x1, v, mass)
            } else {
                0.0
            };
            let x2 = x1 + (x1 - x0) * s.r + kick * s.drift;
            (scale * x2, weight)
        }),
        s.k_max,
    );
    let ones = vec![Complex64::new(1.0, 0.0); s.k_max + 1];
    Ok(assemble(&s, &ones, &joint))
}

/// Shadow signal at grating-3 shifts `shifts`, per period of grating 1 and 2.
/// The x0 integral of the binary window of grating 3 is done in closed form.
pub fn classical_signal(
    ifm: &Interferometer,
    rays: &RayBundleSpec,
    v: f64,
    vdw: bool,
    shifts: &[f64],
) -> Result<Vec<f64>> {
    rays.validate()?;
    let s = setup(ifm, v)?;
    let g2 = ifm.second_grating(vdw);
    let mass = ifm.species.mass;
    let w3 = ifm.gratings[2].open_half_width();
    let d = s.d;
    let x1 = quadrature(rays.x1_rule, rays.x1_nodes, g2.open_half_width())?;
    let centers: Vec<(f64, f64)> = x1
        .iter()
        .map(|&(x, w)| {
            let kick = if g2.c3 > 0.0 {
                kick_unchecked(&g2, x, v, mass)
            } else {
                0.0
            };
            ((1.0 + s.r) * x + kick * s.drift, w)
        })
        .collect();
    // ∫_0^u of the grating-3 window, up to a constant.
    let cumulative = |u: f64| {
        let periods = ((u + 0.5 * d) / d).floor();
        periods * 2.0 * w3 + wrap_centered(u, d).clamp(-w3, w3)
    };
    let half = s.r * s.w0;
    Ok(shifts
        .par_iter()
        .map(|&shift| {
            centers
                .iter()
                .map(|&(c, w)| w * (cumulative(c + half - shift) - cumulative(c - half - shift)))
                .sum::<f64>()
                / (s.r * d * d)
        })
        .collect())
}

pub fn classical_visibility(
    ifm: &Interferometer,
    rays: &RayBundleSpec,
    v: f64,
    vdw: bool,
) -> Result<f64> {
    Ok(classical_spectrum(ifm, rays, v, vdw)?.visibility())
}

pub fn classical_velocity_averaged(
    ifm: &Interferometer,
    rays: &RayBundleSpec,
    dist: &VelocityDistribution,
    vdw: bool,
) -> Result<AveragedFringe> {
    average_spectra(
        dist,
        ifm.numerics.velocity_nodes,
        ifm.numerics.k_max,
        ifm.period(),
        |v| classical_spectrum(ifm, rays, v, vdw),
    )
}

pub fn classical_visibility_curve(
    ifm: &Interferometer,
    rays: &RayBundleSpec,
    centers: &[f64],
    model: &DistributionModel,
    vdw: bool,
) -> Result<VisibilityCurve> {
    check_centers(centers)?;
    let points = centers
        .iter()
        .map(|&c| {
            let avg = classical_velocity_averaged(ifm, rays, &model.at(c)?, vdw)?;
            Ok(CurvePoint {
                v_center: c,
                visibility: avg.visibility,
                flux: avg.flux,
            })
        })
        .collect::<Result<_>>()?;
    Ok(VisibilityCurve { points })
}
