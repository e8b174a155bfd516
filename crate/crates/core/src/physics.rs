//! Physical constants, particle species, interferometer geometry and the
//! elementary wavelength / Talbot relations.

use crate::error::{config, domain, Result};
use crate::grating::GratingSpec;

/// CODATA 2018 values.
pub mod constants {
    /// Planck constant, J s (exact).
    pub const H: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = H / (2.0 * std::f64::consts::PI);
    /// Atomic mass constant, kg.
    pub const AMU: f64 = 1.660_539_066_60e-27;
    /// Electron volt, J (exact).
    pub const EV: f64 = 1.602_176_634e-19;
    /// Standard acceleration of gravity, m/s^2.
    pub const G_STANDARD: f64 = 9.806_65;

    /// Average atomic weight of carbon (natural isotope mix).
    pub const CARBON_ATOMIC_WEIGHT: f64 = 12.011;
    /// Static polarizability of C70 in Å^3 (4πε0 convention).
    pub const C70_POLARIZABILITY: f64 = 97.0;
    /// Estimated C70-gold C3 in eV nm^3 for the polarizability above.
    pub const C70_GOLD_C3_EV_NM3: f64 = 0.09;

    /// 1 eV nm^3 expressed in J m^3.
    pub const EV_NM3: f64 = EV * 1e-27;
}

use constants::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    pub h: f64,
    pub hbar: f64,
    pub amu: f64,
    pub ev: f64,
}

impl PhysConstants {
    pub const CODATA_2018: PhysConstants = PhysConstants {
        h: H,
        hbar: HBAR,
        amu: AMU,
        ev: EV,
    };
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// A molecular species: mass, static polarizability and its C3 coefficient
/// against gold.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Å^3 (numerical value in the 4πε0 convention)
    pub dc_polarizability: f64,
    /// J m^3
    pub c3_gold: f64,
}

impl Species {
    pub fn new(
        name: impl Into<String>,
        mass: f64,
        dc_polarizability: f64,
        c3_gold: f64,
    ) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return domain(format!("species mass must be positive, got {mass}"));
        }
        if !(dc_polarizability >= 0.0) {
            return domain(format!(
                "polarizability must be non-negative, got {dc_polarizability}"
            ));
        }
        if !(c3_gold >= 0.0) {
            return domain(format!("C3 must be non-negative, got {c3_gold}"));
        }
        Ok(Self {
            name: name.into(),
            mass,
            dc_polarizability,
            c3_gold,
        })
    }

    /// C70 with mass 70 × 12.011 u = 840.77 u.
    pub fn c70() -> Self {
        Self {
            name: "C70".to_string(),
            mass: 70.0 * CARBON_ATOMIC_WEIGHT * AMU,
            dc_polarizability: C70_POLARIZABILITY,
            c3_gold: C70_GOLD_C3_EV_NM3 * EV_NM3,
        }
    }

    pub fn mass_amu(&self) -> f64 {
        self.mass / AMU
    }

    /// The same species with its mass multiplied by `factor`.
    pub fn scaled_mass(&self, factor: f64) -> Self {
        Self {
            name: format!("{}x{}", self.name, factor),
            mass: self.mass * factor,
            ..self.clone()
        }
    }
}

/// Longitudinal geometry of the interferometer and the tilt of the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Grating 1 to grating 2 distance, m.
    pub l1: f64,
    /// Grating 2 to grating 3 distance, m.
    pub l2: f64,
    /// Common inclination of the table, rad.
    pub tilt_alpha: f64,
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
}

impl Geometry {
    pub fn new(l1: f64, l2: f64, tilt_alpha: f64, g: f64) -> Result<Self> {
        let geom = Self {
            l1,
            l2,
            tilt_alpha,
            g,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn standard() -> Self {
        Self {
            l1: 0.22,
            l2: 0.22,
            tilt_alpha: 0.0,
            g: G_STANDARD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l1 > 0.0) || !(self.l2 > 0.0) {
            return domain(format!(
                "grating distances must be positive (l1={}, l2={})",
                self.l1, self.l2
            ));
        }
        if !self.tilt_alpha.is_finite() || !self.g.is_finite() {
            return domain("tilt and g must be finite");
        }
        Ok(())
    }

    /// The propagation formulas assume equal grating separations.
    pub fn require_symmetric(&self) -> Result<()> {
        if (self.l1 - self.l2).abs() > 1e-12 * self.l1.max(self.l2) {
            return config(format!(
                "asymmetric geometry (l1={}, l2={}) is not supported",
                self.l1, self.l2
            ));
        }
        Ok(())
    }

    pub fn with_tilt(mut self, alpha: f64) -> Self {
        self.tilt_alpha = alpha;
        self
    }
}

/// λ = h / (m v).
pub fn de_broglie_wavelength(mass: f64, v: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return domain(format!("mass must be positive, got {mass}"));
    }
    if !(v > 0.0) {
        return domain(format!("velocity must be positive, got {v}"));
    }
    Ok(H / (mass * v))
}

/// L_T = d² / λ.
pub fn talbot_length(d: f64, lambda: f64) -> Result<f64> {
    if !(d > 0.0) || !(lambda > 0.0) {
        return domain(format!(
            "period and wavelength must be positive (d={d}, lambda={lambda})"
        ));
    }
    Ok(d * d / lambda)
}

/// Velocity at which the Talbot length equals `distance`.
pub fn talbot_velocity(mass: f64, d: f64, distance: f64) -> Result<f64> {
    if !(mass > 0.0) || !(d > 0.0) || !(distance > 0.0) {
        return domain("mass, period and distance must be positive");
    }
    Ok(H * distance / (mass * d * d))
}

/// Linear polarizability scaling of C3, anchored at the C70 estimate.
/// Input in Å^3, output in J m^3.
pub fn c3_from_polarizability(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return domain(format!("polarizability must be non-negative, got {alpha}"));
    }
    Ok(alpha * (C70_GOLD_C3_EV_NM3 * EV_NM3 / C70_POLARIZABILITY))
}

/// Discretisation parameters shared by the quantum and classical models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    /// Samples per grating period for the complex transmission.
    pub samples: usize,
    /// Highest diffraction order kept; `None` keeps every order the sampling
    /// resolves (N/2 - 1).
    pub n_max: Option<usize>,
    /// Harmonics of the detector signal.
    pub k_max: usize,
    /// Nodes of the velocity-averaging grid (odd).
    pub velocity_nodes: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            samples: 1 << 14,
            n_max: None,
            k_max: 8,
            velocity_nodes: 65,
        }
    }
}

impl Numerics {
    pub fn effective_n_max(&self) -> usize {
        let cap = self.samples / 2 - 1;
        self.n_max.map_or(cap, |n| n.min(cap))
    }

    /// Talbot coefficient orders needed for `k_max` signal harmonics.
    pub fn m_max(&self) -> usize {
        2 * self.k_max
    }
}

/// Complete parameter set of a three-grating interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferometer {
    pub species: Species,
    pub gratings: [GratingSpec; 3],
    pub geometry: Geometry,
    pub numerics: Numerics,
}

impl Interferometer {
    /// C70 with three identical gold gratings, L1 = L2 = 0.22 m.
    pub fn standard_c70() -> Self {
        let species = Species::c70();
        let grating = GratingSpec::standard_gold(species.c3_gold);
        Self {
            species,
            gratings: [grating.clone(), grating.clone(), grating],
            geometry: Geometry::standard(),
            numerics: Numerics::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.geometry.require_symmetric()?;
        for g in &self.gratings {
            g.validate()?;
        }
        let d = self.period();
        if self
            .gratings
            .iter()
            .any(|g| (g.period - d).abs() > 1e-12 * d)
        {
            return config("all three gratings must share the same period");
        }
        let n = self.numerics.samples;
        if n < 4096 || !n.is_power_of_two() {
            return config(format!(
                "samples per period must be a power of two >= 4096, got {n}"
            ));
        }
        if self.numerics.k_max == 0 {
            return config("k_max must be at least 1");
        }
        if self.numerics.velocity_nodes < 3 || self.numerics.velocity_nodes.is_multiple_of(2) {
            return config("velocity_nodes must be odd and >= 3");
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.gratings[1].period
    }

    pub fn wavelength(&self, v: f64) -> Result<f64> {
        de_broglie_wavelength(self.species.mass, v)
    }

    /// ξ = L1 / L_T.
    pub fn talbot_parameter(&self, v: f64) -> Result<f64> {
        let lt = talbot_length(self.period(), self.wavelength(v)?)?;
        Ok(self.geometry.l1 / lt)
    }

    pub fn talbot_velocity(&self) -> Result<f64> {
        talbot_velocity(self.species.mass, self.period(), self.geometry.l1)
    }

    /// The second grating as used by a model with or without the van der
    /// Waals interaction.
    pub fn second_grating(&self, vdw: bool) -> GratingSpec {
        if vdw {
            self.gratings[1].clone()
        } else {
            self.gratings[1].binary()
        }
    }

    /// Mass × `mass_factor`, every grating period / `period_divisor`;
    /// distances, thickness, C3 and cutoff unchanged.
    pub fn scaled(&self, mass_factor: f64, period_divisor: f64) -> Self {
        let mut out = self.clone();
        out.species = self.species.scaled_mass(mass_factor);
        for g in &mut out.gratings {
            g.period /= period_divisor;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn m_c70() -> f64 {
        Species::c70().mass
    }

    #[test]
    fn c70_mass_is_average_isotope_weight() {
        assert_relative_eq!(Species::c70().mass_amu(), 840.77, max_relative = 1e-12);
    }

    #[test]
    fn wavelength_examples() {
        let l80 = de_broglie_wavelength(m_c70(), 80.0).unwrap();
        let l215 = de_broglie_wavelength(m_c70(), 215.0).unwrap();
        let l200 = de_broglie_wavelength(m_c70(), 200.0).unwrap();
        assert!((l80 * 1e12 - 5.93).abs() < 0.005, "{l80}");
        assert!((l215 * 1e12 - 2.21).abs() < 0.005, "{l215}");
        assert!((l200 * 1e12 - 2.37).abs() < 0.005, "{l200}");
    }

    #[test]
    fn wavelength_rejects_non_positive() {
        assert!(de_broglie_wavelength(0.0, 100.0).is_err());
        assert!(de_broglie_wavelength(m_c70(), -1.0).is_err());
        assert!(de_broglie_wavelength(m_c70(), 0.0).is_err());
    }

    #[test]
    fn talbot_length_examples() {
        let d = 991.25e-9;
        let lam = de_broglie_wavelength(m_c70(), 106.3).unwrap();
        let lt = talbot_length(d, lam).unwrap();
        assert!((lt - 0.220).abs() < 0.0005, "{lt}");
        let lt2 = talbot_length(d, 2.0 * lam).unwrap();
        assert_relative_eq!(lt2, lt / 2.0, max_relative = 1e-14);
        let lt3 = talbot_length(d / 4.0, lam / 16.0).unwrap();
        assert_relative_eq!(lt3, lt, max_relative = 1e-14);
        assert!(talbot_length(0.0, lam).is_err());
        assert!(talbot_length(d, 0.0).is_err());
    }

    #[test]
    fn talbot_velocity_matches_setup() {
        let v = Interferometer::standard_c70().talbot_velocity().unwrap();
        assert!((v - 106.3).abs() < 0.05, "{v}");
    }

    #[test]
    fn c3_scaling() {
        let c3 = c3_from_polarizability(97.0).unwrap();
        assert_relative_eq!(c3, 0.09 * 1.602_176_634e-19 * 1e-27, max_relative = 1e-12);
        assert!((c3 - 1.442e-47).abs() < 0.001e-47);
        assert_eq!(c3_from_polarizability(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            c3_from_polarizability(48.5).unwrap() / EV_NM3,
            0.045,
            max_relative = 1e-12
        );
        assert!(c3_from_polarizability(-1.0).is_err());
    }

    #[test]
    fn hbar_consistent() {
        let c = PhysConstants::default();
        assert_relative_eq!(c.hbar * 2.0 * PI, c.h, max_relative = 1e-15);
    }

    #[test]
    fn species_validation() {
        assert!(Species::new("x", -1.0, 0.0, 0.0).is_err());
        assert!(Species::new("x", 1.0, -1.0, 0.0).is_err());
        assert!(Species::new("x", 1.0, 0.0, -1.0).is_err());
        assert!(Species::new("x", 1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn asymmetric_geometry_rejected() {
        let mut ifm = Interferometer::standard_c70();
        ifm.geometry.l2 = 0.25;
        assert!(ifm.validate().is_err());
        assert!(Geometry::new(0.0, 0.2, 0.0, 9.8).is_err());
    }

    #[test]
    fn numerics_validation() {
        let mut ifm = Interferometer::standard_c70();
        ifm.validate().unwrap();
        ifm.numerics.samples = 5000;
        assert!(ifm.validate().is_err());
        ifm.numerics.samples = 2048;
        assert!(ifm.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn wavelength_times_momentum_is_h(m in 1e-27f64..1e-22, v in 1.0f64..1e5) {
                let lam = de_broglie_wavelength(m, v).unwrap();
                prop_assert!((lam * m * v / H - 1.0).abs() < 1e-14);
            }

            #[test]
            fn wavelength_strictly_decreasing(m in 1e-27f64..1e-22, v in 1.0f64..1e5, k in 1.001f64..10.0) {
                let lam = de_broglie_wavelength(m, v).unwrap();
                prop_assert!(de_broglie_wavelength(m * k, v).unwrap() < lam);
                prop_assert!(de_broglie_wavelength(m, v * k).unwrap() < lam);
            }

            #[test]
            fn talbot_length_times_lambda_is_d2(d in 1e-8f64..1e-5, lam in 1e-14f64..1e-9) {
                let lt = talbot_length(d, lam).unwrap();
                prop_assert!((lt * lam / (d * d) - 1.0).abs() < 1e-14);
            }
        }
    }
}
