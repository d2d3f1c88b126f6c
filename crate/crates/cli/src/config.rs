//! JSON run configuration. Science parameters live here; I/O and execution
//! concerns are command-line flags.

use std::path::{Path, PathBuf};

use cavity_gates::coupling::{CouplingMode, GenericProfileParams};
use cavity_gates::fieldgrid::SynthSpec;
use cavity_gates::gates::GateLabel;
use cavity_gates::ode::EvolveOptions;
use cavity_gates::sweep::LogicalInput;
use serde::Deserialize;

/// Raised for any schema or value problem in a config file (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Generic,
    Field2d,
    Field3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    Analytic,
    Ode,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericSection {
    pub omega0_rad_s: f64,
    pub lattice_const_m: f64,
    pub path_half_length_m: f64,
    pub defect_radius_m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    #[serde(default)]
    pub y_m: f64,
    #[serde(default)]
    pub z_m: f64,
    /// Path length along +x, centred on x = 0. Omitted: the full grid width.
    pub length_m: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub grid_file: Option<PathBuf>,
    pub synthesize: Option<SynthSpec>,
    pub wavelength_m: f64,
    pub dipole_moment_c_m: f64,
    /// Use this g₀ instead of the one implied by the grid's mode volume.
    pub g0_rad_s: Option<f64>,
    #[serde(default)]
    pub path: Option<PathSection>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub coupling_mode: CouplingMode,
}

fn default_samples() -> usize {
    601
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsSection {
    /// Omitted: calibrate for `gate` first.
    pub velocity_m_s: Option<f64>,
    pub p: f64,
    #[serde(default)]
    pub zeta_a_rad: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub v_min_m_s: f64,
    pub v_max_m_s: f64,
    pub n_v: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { v_min_m_s: 150.0, v_max_m_s: 650.0, n_v: 251, p_min: 0.0, p_max: 1.0, n_p: 201 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub v_min_m_s: f64,
    pub v_max_m_s: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self { v_min_m_s: 150.0, v_max_m_s: 650.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub output_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub description: String,
    pub scenario: Scenario,
    pub generic: Option<GenericSection>,
    pub field: Option<FieldSection>,
    pub atoms: AtomsSection,
    /// Resonant transition / cavity angular frequency (rad/s). For field
    /// scenarios it defaults to the one implied by `field.wavelength_m`.
    pub omega_rad_s: Option<f64>,
    #[serde(default = "default_initial")]
    pub initial: LogicalInput,
    pub gate: Option<GateLabel>,
    pub engine: Option<EngineChoice>,
    #[serde(default = "default_q")]
    pub q_factor: f64,
    pub sweep: Option<SweepSection>,
    pub calibration: Option<BoundsSection>,
    pub ode: Option<OdeSection>,
}

fn default_initial() -> LogicalInput {
    LogicalInput::AExcited
}

fn default_q() -> f64 {
    1e8
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(v) = self.atoms.velocity_m_s {
            positive("atoms.velocity_m_s", v)?;
        }
        if !self.atoms.p.is_finite() {
            return Err(ConfigError("atoms.p must be finite".into()));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.atoms.zeta_a_rad) {
            return Err(ConfigError(format!("atoms.zeta_a_rad must lie in [0, π/2], got {}", self.atoms.zeta_a_rad)));
        }
        positive("q_factor", self.q_factor)?;
        if let Some(w) = self.omega_rad_s {
            positive("omega_rad_s", w)?;
        }
        match self.scenario {
            Scenario::Generic => {
                let g = self.generic.as_ref().ok_or_else(|| ConfigError("scenario `generic` needs a `generic` section".into()))?;
                positive("generic.omega0_rad_s", g.omega0_rad_s)?;
                positive("generic.lattice_const_m", g.lattice_const_m)?;
                positive("generic.path_half_length_m", g.path_half_length_m)?;
                positive("generic.defect_radius_m", g.defect_radius_m)?;
                if self.omega_rad_s.is_none() {
                    return Err(ConfigError("scenario `generic` needs `omega_rad_s`".into()));
                }
            }
            Scenario::Field2d | Scenario::Field3d => {
                let f = self.field.as_ref().ok_or_else(|| ConfigError("field scenarios need a `field` section".into()))?;
                if f.grid_file.is_some() == f.synthesize.is_some() {
                    return Err(ConfigError("field needs exactly one of `grid_file` or `synthesize`".into()));
                }
                positive("field.wavelength_m", f.wavelength_m)?;
                positive("field.dipole_moment_c_m", f.dipole_moment_c_m)?;
                if let Some(g) = f.g0_rad_s {
                    positive("field.g0_rad_s", g)?;
                }
                if let Some(l) = f.path.as_ref().and_then(|p| p.length_m) {
                    positive("field.path.length_m", l)?;
                }
                if f.n_samples < 2 {
                    return Err(ConfigError("field.n_samples must be >= 2".into()));
                }
            }
        }
        if let Some(s) = &self.sweep {
            positive("sweep.v_min_m_s", s.v_min_m_s)?;
            if !(s.v_max_m_s > s.v_min_m_s && s.p_max > s.p_min && s.n_v >= 2 && s.n_p >= 2) {
                return Err(ConfigError("sweep ranges must be ascending with at least two points each".into()));
            }
        }
        if let Some(b) = &self.calibration {
            positive("calibration.v_min_m_s", b.v_min_m_s)?;
            if b.v_max_m_s.partial_cmp(&b.v_min_m_s) != Some(std::cmp::Ordering::Greater) {
                return Err(ConfigError("calibration.v_max_m_s must exceed v_min_m_s".into()));
            }
        }
        if let Some(o) = &self.ode {
            for (name, v) in [("ode.rel_tol", o.rel_tol), ("ode.abs_tol", o.abs_tol)] {
                if let Some(v) = v {
                    positive(name, v)?;
                }
            }
            if o.output_points.is_some_and(|n| n < 2) {
                return Err(ConfigError("ode.output_points must be >= 2".into()));
            }
        }
        Ok(())
    }

    pub fn generic_family(&self) -> Option<GenericProfileParams> {
        self.generic.as_ref().map(|g| GenericProfileParams {
            omega0: g.omega0_rad_s,
            path_half_length: g.path_half_length_m,
            defect_radius: g.defect_radius_m,
            lattice_const: g.lattice_const_m,
            // placeholder until a velocity is chosen
            velocity: 1.0,
            zeta: self.atoms.zeta_a_rad,
        })
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        let mut o = EvolveOptions::default();
        if let Some(s) = &self.ode {
            o.rel_tol = s.rel_tol.unwrap_or(o.rel_tol);
            o.abs_tol = s.abs_tol.unwrap_or(o.abs_tol);
            o.output_points = s.output_points.unwrap_or(o.output_points);
        }
        o
    }

    pub fn bounds(&self) -> (f64, f64) {
        let b = self.calibration.clone().unwrap_or_default();
        (b.v_min_m_s, b.v_max_m_s)
    }
}
