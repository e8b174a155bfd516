//! Run configuration: TOML with dotted sections and unit-suffixed keys.
//! Every field has a default reproducing the C70 setup, so an empty file is
//! a valid configuration.

use serde::{Deserialize, Serialize};
use talbot_core::beamline::{DistributionModel, EFFUSIVE_MOST_PROBABLE};
use talbot_core::classical::{QuadratureRule, RayBundleSpec};
use talbot_core::physics::c3_from_polarizability;
use talbot_core::physics::constants::{AMU, EV_NM3, G_STANDARD};
use talbot_core::quantum::OracleSamples;
use talbot_core::scanlab::ScanPlan;
use talbot_core::{Geometry, GratingSpec, Interferometer, Numerics, Species};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub species: SpeciesConfig,
    pub grating1: GratingConfig,
    pub grating2: GratingConfig,
    pub grating3: GratingConfig,
    pub geometry: GeometryConfig,
    pub numerics: NumericsConfig,
    pub distribution: DistributionConfig,
    pub sweep: SweepConfig,
    pub scan: ScanConfig,
    pub gravity: GravityConfig,
    pub scale: ScaleConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            species: SpeciesConfig::default(),
            grating1: GratingConfig::default(),
            grating2: GratingConfig::default(),
            grating3: GratingConfig::default(),
            geometry: GeometryConfig::default(),
            numerics: NumericsConfig::default(),
            distribution: DistributionConfig::default(),
            sweep: SweepConfig::default(),
            scan: ScanConfig::default(),
            gravity: GravityConfig::default(),
            scale: ScaleConfig::default(),
            oracle: OracleConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesConfig {
    pub name: String,
    pub mass_amu: f64,
    #[serde(rename = "polarizability_A3")]
    pub polarizability_a3: f64,
}

impl Default for SpeciesConfig {
    fn default() -> Self {
        let c70 = Species::c70();
        Self {
            name: c70.name.clone(),
            mass_amu: c70.mass_amu(),
            polarizability_a3: c70.dc_polarizability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GratingConfig {
    pub period_nm: f64,
    pub open_fraction: f64,
    pub thickness_nm: f64,
    /// Omitted: scaled from the species polarizability.
    #[serde(rename = "c3_eVnm3", skip_serializing_if = "Option::is_none")]
    pub c3_ev_nm3: Option<f64>,
    pub edge_cutoff_nm: f64,
}

impl Default for GratingConfig {
    fn default() -> Self {
        let g = GratingSpec::standard_gold(0.0);
        Self {
            period_nm: g.period * 1e9,
            open_fraction: g.open_fraction,
            thickness_nm: g.thickness * 1e9,
            c3_ev_nm3: Some(talbot_core::physics::constants::C70_GOLD_C3_EV_NM3),
            edge_cutoff_nm: g.edge_cutoff * 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub l1_m: f64,
    pub l2_m: f64,
    pub tilt_mrad: f64,
    pub g_mps2: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            l1_m: 0.22,
            l2_m: 0.22,
            tilt_mrad: 0.0,
            g_mps2: G_STANDARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub samples: usize,
    /// Omitted: every resolved diffraction order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    pub k_max: usize,
    pub velocity_nodes: usize,
    pub classical_x0_nodes: usize,
    pub classical_x1_nodes: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let n = Numerics::default();
        let r = RayBundleSpec::default();
        Self {
            samples: n.samples,
            n_max: n.n_max,
            k_max: n.k_max,
            velocity_nodes: n.velocity_nodes,
            classical_x0_nodes: r.x0_nodes,
            classical_x1_nodes: r.x1_nodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKindConfig {
    Delta,
    Selector,
    Effusive,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionConfig {
    pub model: DistributionKindConfig,
    /// Relative FWHM for the `fixed` model.
    pub fwhm_fraction: f64,
    /// Most probable source velocity for the `effusive` model.
    pub most_probable_mps: f64,
}

impl Default for DistributionConfig {
    fn default() -> Self {
        Self {
            model: DistributionKindConfig::Selector,
            fwhm_fraction: 0.2,
            most_probable_mps: EFFUSIVE_MOST_PROBABLE,
        }
    }
}

pub const SWEEP_COLUMNS: [&str; 5] = [
    "vis_quantum_vdw",
    "vis_quantum_novdw",
    "vis_classical_vdw",
    "vis_classical_novdw",
    "flux_rel",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub points: usize,
    /// Explicit centers; overrides the range when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_list_mps: Option<Vec<f64>>,
    pub columns: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            v_min_mps: 80.0,
            v_max_mps: 215.0,
            points: 28,
            v_list_mps: None,
            columns: SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SweepConfig {
    pub fn centers(&self) -> Vec<f64> {
        if let Some(list) = &self.v_list_mps {
            return list.clone();
        }
        match self.points {
            0 => Vec::new(),
            1 => vec![self.v_min_mps],
            n => (0..n)
                .map(|i| {
                    self.v_min_mps + (self.v_max_mps - self.v_min_mps) * i as f64 / (n - 1) as f64
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub v_center_mps: f64,
    pub points: usize,
    pub dwell_s: f64,
    pub periods: f64,
    pub dark_rate_hz: f64,
    pub phase_rad: f64,
    pub scans: usize,
    pub interval_s: f64,
    pub drift_nm_per_min: f64,
    /// Omitted: the velocity-averaged quantum visibility at the center.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    /// Omitted: interpolated from the rate model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_rate_hz: Option<f64>,
    pub subtract_dark: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let p = ScanPlan::default();
        Self {
            v_center_mps: p.v_center,
            points: p.points,
            dwell_s: p.dwell,
            periods: p.periods,
            dark_rate_hz: p.dark_rate,
            phase_rad: 0.0,
            scans: 1,
            interval_s: 180.0,
            drift_nm_per_min: 0.0,
            visibility: None,
            count_rate_hz: None,
            subtract_dark: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravityConfig {
    pub v_center_mps: f64,
    pub tilts_mrad: Vec<f64>,
}

impl Default for GravityConfig {
    fn default() -> Self {
        Self {
            v_center_mps: 115.0,
            tilts_mrad: vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleConfig {
    pub mass_factor: f64,
    pub period_divisor: f64,
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub step_mps: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            mass_factor: 16.0,
            period_divisor: 4.0,
            v_min_mps: 80.0,
            v_max_mps: 215.0,
            step_mps: 0.2,
        }
    }
}

impl ScaleConfig {
    pub fn velocities(&self) -> Vec<f64> {
        let n = ((self.v_max_mps - self.v_min_mps) / self.step_mps + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| self.v_min_mps + i as f64 * self.step_mps)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub velocities_mps: Vec<f64>,
    pub source_samples: usize,
    pub grating_samples: usize,
    pub screen_samples: usize,
    pub tolerance: f64,
    pub convergence_tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let s = OracleSamples::default();
        Self {
            velocities_mps: vec![90.0, 115.0, 160.0],
            source_samples: s.source,
            grating_samples: s.grating,
            screen_samples: s.screen,
            tolerance: 0.01,
            convergence_tolerance: 0.005,
        }
    }
}

impl OracleConfig {
    pub fn samples(&self) -> OracleSamples {
        OracleSamples {
            source: self.source_samples,
            grating: self.grating_samples,
            screen: self.screen_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".to_string(),
            svg: false,
        }
    }
}

fn err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn positive(path: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(err(path, format!("must be positive, got {x}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| CliError::Config(e.to_string().trim().to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.inner().to_string().trim()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn defaults_toml() -> String {
        toml::to_string_pretty(&RunConfig::default()).expect("defaults serialise")
    }

    fn species(&self) -> Result<Species, CliError> {
        let s = &self.species;
        positive("species.mass_amu", s.mass_amu)?;
        let c3 = c3_from_polarizability(s.polarizability_a3)
            .map_err(|e| err("species.polarizability_A3", e))?;
        Species::new(s.name.clone(), s.mass_amu * AMU, s.polarizability_a3, c3)
            .map_err(|e| err("species", e))
    }

    fn grating(&self, idx: usize, species: &Species) -> Result<GratingSpec, CliError> {
        let (name, g) = match idx {
            0 => ("grating1", &self.grating1),
            1 => ("grating2", &self.grating2),
            _ => ("grating3", &self.grating3),
        };
        positive(&format!("{name}.period_nm"), g.period_nm)?;
        positive(&format!("{name}.thickness_nm"), g.thickness_nm)?;
        if !(g.open_fraction > 0.0 && g.open_fraction < 1.0) {
            return Err(err(
                &format!("{name}.open_fraction"),
                format!("must lie in (0, 1), got {}", g.open_fraction),
            ));
        }
        let c3 = match g.c3_ev_nm3 {
            Some(c) if c >= 0.0 && c.is_finite() => c * EV_NM3,
            Some(c) => {
                return Err(err(
                    &format!("{name}.c3_eVnm3"),
                    format!("must be >= 0, got {c}"),
                ))
            }
            None => species.c3_gold,
        };
        GratingSpec::new(
            g.period_nm * 1e-9,
            g.open_fraction,
            g.thickness_nm * 1e-9,
            c3,
            g.edge_cutoff_nm * 1e-9,
        )
        .map_err(|e| err(&format!("{name}.edge_cutoff_nm"), e))
    }

    pub fn interferometer(&self) -> Result<Interferometer, CliError> {
        let species = self.species()?;
        let gratings = [
            self.grating(0, &species)?,
            self.grating(1, &species)?,
            self.grating(2, &species)?,
        ];
        let g = &self.geometry;
        positive("geometry.l1_m", g.l1_m)?;
        positive("geometry.l2_m", g.l2_m)?;
        if !g.tilt_mrad.is_finite() {
            return Err(err("geometry.tilt_mrad", "must be finite"));
        }
        let geometry = Geometry::new(g.l1_m, g.l2_m, g.tilt_mrad * 1e-3, g.g_mps2)
            .map_err(|e| err("geometry", e))?;
        let n = &self.numerics;
        let numerics = Numerics {
            samples: n.samples,
            n_max: n.n_max,
            k_max: n.k_max,
            velocity_nodes: n.velocity_nodes,
        };
        let ifm = Interferometer {
            species,
            gratings,
            geometry,
            numerics,
        };
        ifm.validate().map_err(|e| err("numerics/geometry", e))?;
        if let Some(nm) = n.n_max {
            if nm + 1 > n.samples / 2 {
                return Err(err(
                    "numerics.n_max",
                    format!("must be < samples/2, got {nm}"),
                ));
            }
        }
        Ok(ifm)
    }

    pub fn rays(&self) -> Result<RayBundleSpec, CliError> {
        let r = RayBundleSpec {
            x0_nodes: self.numerics.classical_x0_nodes,
            x0_rule: QuadratureRule::GaussLegendre,
            x1_nodes: self.numerics.classical_x1_nodes,
            x1_rule: QuadratureRule::Midpoint,
        };
        r.validate()
            .map_err(|e| err("numerics.classical_x*_nodes", e))?;
        Ok(r)
    }

    pub fn distribution(&self) -> Result<DistributionModel, CliError> {
        let d = &self.distribution;
        Ok(match d.model {
            DistributionKindConfig::Delta => DistributionModel::Delta,
            DistributionKindConfig::Selector => DistributionModel::SelectorGaussian,
            DistributionKindConfig::Effusive => {
                positive("distribution.most_probable_mps", d.most_probable_mps)?;
                DistributionModel::SelectorEffusive {
                    most_probable: d.most_probable_mps,
                }
            }
            DistributionKindConfig::Fixed => {
                positive("distribution.fwhm_fraction", d.fwhm_fraction)?;
                if d.fwhm_fraction >= 1.0 {
                    return Err(err("distribution.fwhm_fraction", "must be below 1"));
                }
                DistributionModel::FixedGaussian {
                    fwhm_fraction: d.fwhm_fraction,
                }
            }
        })
    }

    /// Checks every section so that a run never starts on a bad config.
    pub fn validate(&self) -> Result<(), CliError> {
        self.interferometer()?;
        self.rays()?;
        self.distribution()?;

        let s = &self.sweep;
        let centers = s.centers();
        if centers.is_empty() {
            return Err(err("sweep", "velocity list is empty"));
        }
        if let Some(v) = centers.iter().find(|v| !(**v > 0.0)) {
            return Err(err(
                "sweep.v_list_mps",
                format!("velocities must be positive, got {v}"),
            ));
        }
        if s.v_list_mps.is_none() {
            positive("sweep.v_min_mps", s.v_min_mps)?;
            if s.v_max_mps < s.v_min_mps {
                return Err(err("sweep.v_max_mps", "must not be below sweep.v_min_mps"));
            }
        }
        if s.columns.is_empty() {
            return Err(err("sweep.columns", "select at least one column"));
        }
        for c in &s.columns {
            if !SWEEP_COLUMNS.contains(&c.as_str()) {
                return Err(err(
                    "sweep.columns",
                    format!("unknown column '{c}', expected one of {SWEEP_COLUMNS:?}"),
                ));
            }
        }

        let sc = &self.scan;
        positive("scan.v_center_mps", sc.v_center_mps)?;
        positive("scan.dwell_s", sc.dwell_s)?;
        positive("scan.periods", sc.periods)?;
        if sc.points < 16 {
            return Err(err(
                "scan.points",
                format!("need at least 16, got {}", sc.points),
            ));
        }
        if sc.scans == 0 {
            return Err(err("scan.scans", "need at least one scan"));
        }
        if !(sc.dark_rate_hz >= 0.0) {
            return Err(err("scan.dark_rate_hz", "must be non-negative"));
        }
        if let Some(v) = sc.visibility {
            if !(0.0..=1.0).contains(&v) {
                return Err(err(
                    "scan.visibility",
                    format!("must lie in [0, 1], got {v}"),
                ));
            }
        }
        if let Some(r) = sc.count_rate_hz {
            if !(r >= 0.0) {
                return Err(err("scan.count_rate_hz", "must be non-negative"));
            }
        }
        if sc.scans > 1 {
            positive("scan.interval_s", sc.interval_s)?;
        }

        positive("gravity.v_center_mps", self.gravity.v_center_mps)?;
        let tilts = &self.gravity.tilts_mrad;
        if tilts.is_empty() {
            return Err(err("gravity.tilts_mrad", "list is empty"));
        }
        if !tilts.iter().all(|t| t.is_finite()) || tilts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(err(
                "gravity.tilts_mrad",
                "must be finite and strictly increasing",
            ));
        }

        let sl = &self.scale;
        positive("scale.mass_factor", sl.mass_factor)?;
        positive("scale.period_divisor", sl.period_divisor)?;
        positive("scale.v_min_mps", sl.v_min_mps)?;
        positive("scale.step_mps", sl.step_mps)?;
        if sl.v_max_mps <= sl.v_min_mps {
            return Err(err("scale.v_max_mps", "must exceed scale.v_min_mps"));
        }

        let o = &self.oracle;
        if o.velocities_mps.is_empty() {
            return Err(err("oracle.velocities_mps", "list is empty"));
        }
        positive("oracle.tolerance", o.tolerance)?;
        positive("oracle.convergence_tolerance", o.convergence_tolerance)?;
        if let Some(v) = o.velocities_mps.iter().find(|v| !(**v > 0.0)) {
            return Err(err(
                "oracle.velocities_mps",
                format!("must be positive, got {v}"),
            ));
        }
        if self.output.dir.is_empty() {
            return Err(err("output.dir", "must not be empty"));
        }
        Ok(())
    }
}
