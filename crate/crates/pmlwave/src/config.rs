//! Scenario files: TOML schema, validation and derived-quantity echo.
//!
//! All quantities are SI. A file has top-level `mode`, `t_end` (or
//! `traversals`) and `cfl_safety`, plus `[material]`, `[grid]`, `[pml]`,
//! `[source]`, `[reflection]` and `[output]` sections.

use std::fmt;
use std::path::{Path, PathBuf};

use pmlwave_core::materials::{isotropic_stiffness, Material, StiffnessTensor, ViscosityTensor};
use pmlwave_core::scenario::{Derived, PmlParams, Scenario, ScenarioParams, Spacing, DEFAULT_DIRECTION_SAMPLES};
use pmlwave_core::solver::Mode;
use pmlwave_core::source::{SourceKind, SourceSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shell sources narrower than this many cells are accepted with a warning.
pub const SHELL_RESOLUTION_CELLS: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("check `{check}` failed: {detail}")]
    Invalid { check: &'static str, detail: String },
}

impl ConfigError {
    /// Name of the failed validation check, if any.
    pub fn check(&self) -> Option<&'static str> {
        match self {
            Self::Invalid { check, .. } => Some(check),
            _ => None,
        }
    }
}

fn invalid(check: &'static str, detail: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { check, detail: detail.to_string() }
}

fn checked<T>(check: &'static str, r: pmlwave_core::Result<T>) -> Result<T, ConfigError> {
    r.map_err(|e| invalid(check, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    Elastic,
    Viscoelastic,
}

impl From<ModeConfig> for Mode {
    fn from(m: ModeConfig) -> Self {
        match m {
            ModeConfig::Elastic => Mode::Elastic,
            ModeConfig::Viscoelastic => Mode::Viscoelastic,
        }
    }
}

/// One value for all axes or one per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAxis {
    Uniform(f64),
    Axes([f64; 3]),
}

impl PerAxis {
    pub fn axes(self) -> [f64; 3] {
        match self {
            Self::Uniform(x) => [x; 3],
            Self::Axes(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotropicConfig {
    /// Lamé λ (Pa).
    pub lambda: f64,
    /// Shear modulus μ (Pa).
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    /// kg/m³
    pub density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isotropic: Option<IsotropicConfig>,
    /// 21 upper-triangle Voigt entries, row by row (Pa).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voigt: Option<Vec<f64>>,
    /// 21 upper-triangle Voigt viscosity entries, row by row (Pa s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity_voigt: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `h = c_min / (N f₀)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes_per_wavelength: Option<f64>,
    /// Explicit `h` (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Physical half width `x₀` (m), snapped to a whole number of cells.
    pub half_width: f64,
    #[serde(default = "default_direction_samples")]
    pub direction_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlConfig {
    #[serde(default = "default_pml_cells")]
    pub cells: usize,
    #[serde(default = "default_pml_order")]
    pub order: u32,
    /// Normal-incidence amplitude reflection used to design `β₀`.
    #[serde(default = "default_reflection")]
    pub reflection_target: PerAxis,
    /// Explicit `β₀` (1/s); overrides the design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<PerAxis>,
}

impl Default for PmlConfig {
    fn default() -> Self {
        Self {
            cells: default_pml_cells(),
            order: default_pml_order(),
            reflection_target: default_reflection(),
            beta0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKindConfig {
    BodyForcePoint,
    DirichletShell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub kind: SourceKindConfig,
    /// Hz
    pub f0: f64,
    /// s
    pub t0: f64,
    /// m
    #[serde(default)]
    pub center: [f64; 3],
    /// m; 0 gives a single-node body force.
    #[serde(default)]
    pub radius: f64,
    /// Force direction; body forces only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
    /// N for body forces, m for the shell.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionConfig {
    /// Probe cube half width as a fraction of `x₀`.
    #[serde(default = "default_probe_fraction")]
    pub probe_fraction: f64,
    /// Reference margin; the causal minimum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_cells: Option<usize>,
}

impl Default for ReflectionConfig {
    fn default() -> Self {
        Self { probe_fraction: default_probe_fraction(), margin_cells: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Steps between energy samples; 0 disables.
    #[serde(default = "default_energy_every")]
    pub energy_every: u64,
    /// Steps between snapshots; 0 disables.
    #[serde(default)]
    pub snapshot_every: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, energy_every: default_energy_every(), snapshot_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub mode: ModeConfig,
    /// s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// `t_end = traversals · 2x₀ / c_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traversals: Option<f64>,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    pub material: MaterialConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub pml: PmlConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub reflection: ReflectionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_direction_samples() -> usize {
    DEFAULT_DIRECTION_SAMPLES
}
fn default_pml_cells() -> usize {
    4
}
fn default_pml_order() -> u32 {
    2
}
fn default_reflection() -> PerAxis {
    PerAxis::Uniform(1e-3)
}
fn default_probe_fraction() -> f64 {
    0.5
}
fn default_energy_every() -> u64 {
    8
}
fn default_cfl_safety() -> f64 {
    0.5
}

/// A validated config with the scenario it resolves to.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: SimulationConfig,
    pub scenario: Scenario,
    pub derived: Derived,
    /// Accepted but questionable settings.
    pub warnings: Vec<String>,
}

impl ResolvedConfig {
    pub fn steps(&self) -> u64 {
        self.scenario.steps()
    }
}

impl fmt::Display for ResolvedConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.derived;
        let s = &self.scenario;
        writeln!(f, "mode            = {:?}", self.config.mode)?;
        writeln!(f, "c_min           = {:.6e} m/s", d.c_min)?;
        writeln!(f, "c_max           = {:.6e} m/s", d.c_max)?;
        writeln!(f, "spacing         = {:.6e} m", d.spacing)?;
        writeln!(f, "half_width      = {:.6e} m ({} cells)", s.grid.physical_half_width(), s.grid.half_cells())?;
        writeln!(f, "pml_thickness   = {:.6e} m ({} cells)", s.grid.pml_thickness(), s.grid.pml_cells())?;
        writeln!(f, "dims            = {} x {} x {}", d.dims[0], d.dims[1], d.dims[2])?;
        writeln!(f, "cfl_dt          = {:.6e} s", d.cfl_dt)?;
        if d.viscous_dt.is_finite() {
            writeln!(f, "viscous_dt      = {:.6e} s", d.viscous_dt)?;
        }
        writeln!(f, "dt              = {:.6e} s", d.dt)?;
        writeln!(f, "t_end           = {:.6e} s", s.t_end)?;
        writeln!(f, "steps           = {}", s.steps())?;
        writeln!(f, "beta0           = [{:.6e}, {:.6e}, {:.6e}] 1/s", d.beta0[0], d.beta0[1], d.beta0[2])?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

fn upper_triangle(check: &'static str, entries: &[f64]) -> Result<[f64; 21], ConfigError> {
    entries.try_into().map_err(|_| invalid(check, format!("expected 21 upper-triangle entries, got {}", entries.len())))
}

impl SimulationConfig {
    pub fn to_toml_string(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    fn material(&self) -> Result<Material, ConfigError> {
        let m = &self.material;
        let (check, stiffness) = match (&m.isotropic, &m.voigt) {
            (Some(iso), None) => ("material.isotropic", isotropic_stiffness(iso.lambda, iso.mu)),
            (None, Some(v)) => {
                ("material.voigt", StiffnessTensor::from_upper_triangle(&upper_triangle("material.voigt", v)?))
            }
            _ => return Err(invalid("material.stiffness", "give exactly one of `isotropic` or `voigt`")),
        };
        let stiffness = checked(check, stiffness)?;
        checked(check, stiffness.check_positive_definite())?;
        let viscosity = m
            .viscosity_voigt
            .as_deref()
            .map(|v| {
                let entries = upper_triangle("material.viscosity_voigt", v)?;
                checked("material.viscosity_voigt", ViscosityTensor::from_upper_triangle(&entries))
            })
            .transpose()?;
        if !(m.density.is_finite() && m.density > 0.0) {
            return Err(invalid("material.density", format!("density must be positive (got {})", m.density)));
        }
        checked("material", Material::new(m.density, stiffness, viscosity))
    }

    fn source(&self) -> Result<Option<SourceSpec>, ConfigError> {
        let Some(s) = &self.source else { return Ok(None) };
        let kind = match (s.kind, s.direction) {
            (SourceKindConfig::BodyForcePoint, Some(direction)) => {
                if direction.iter().all(|&d| d == 0.0) {
                    return Err(invalid("source.direction", "direction must be non-zero"));
                }
                SourceKind::BodyForcePoint { direction }
            }
            (SourceKindConfig::BodyForcePoint, None) => {
                return Err(invalid("source.direction", "body_force_point needs a direction"))
            }
            (SourceKindConfig::DirichletShell, None) => SourceKind::DirichletShell,
            (SourceKindConfig::DirichletShell, Some(_)) => {
                return Err(invalid("source.direction", "dirichlet_shell is radial and takes no direction"))
            }
        };
        Ok(Some(SourceSpec { kind, f0: s.f0, t0: s.t0, center: s.center, radius: s.radius, amplitude: s.amplitude }))
    }

    /// Check every invariant and compute the derived quantities.
    pub fn resolve(self) -> Result<ResolvedConfig, ConfigError> {
        let material = self.material()?;
        let mode: Mode = self.mode.into();
        if mode == Mode::Viscoelastic && material.viscosity().is_none() {
            return Err(invalid("mode.viscosity", "viscoelastic mode requires material.viscosity_voigt"));
        }
        let source = self.source()?;
        let spacing = match (self.grid.nodes_per_wavelength, self.grid.spacing) {
            (Some(n), None) => {
                if !(n.is_finite() && n > 0.0) {
                    return Err(invalid("grid.nodes_per_wavelength", format!("must be positive (got {n})")));
                }
                if source.is_none() {
                    return Err(invalid("grid.nodes_per_wavelength", "needs a source to supply f0"));
                }
                Spacing::NodesPerWavelength(n)
            }
            (None, Some(h)) => {
                if !(h.is_finite() && h > 0.0) {
                    return Err(invalid("grid.spacing", format!("must be positive (got {h})")));
                }
                Spacing::Explicit(h)
            }
            _ => return Err(invalid("grid.spacing", "give exactly one of `nodes_per_wavelength` or `spacing`")),
        };
        if !(self.grid.half_width.is_finite() && self.grid.half_width > 0.0) {
            return Err(invalid("grid.half_width", format!("must be positive (got {})", self.grid.half_width)));
        }
        let t_end = match (self.t_end, self.traversals) {
            (Some(t), None) if t.is_finite() && t >= 0.0 => Some(t),
            (Some(t), None) => return Err(invalid("t_end", format!("must be non-negative (got {t})"))),
            (None, Some(n)) if n.is_finite() && n >= 0.0 => None,
            (None, Some(n)) => return Err(invalid("traversals", format!("must be non-negative (got {n})"))),
            _ => return Err(invalid("t_end", "give exactly one of `t_end` or `traversals`")),
        };
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(invalid("cfl_safety", format!("must lie in (0, 1) (got {})", self.cfl_safety)));
        }
        let reflection = self.pml.reflection_target.axes();
        if let Some(r) = reflection.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(invalid("pml.reflection_target", format!("must lie in (0, 1] (got {r})")));
        }
        if self.pml.cells == 0 {
            return Err(invalid("pml.cells", "need at least one PML cell"));
        }
        if !(self.reflection.probe_fraction > 0.0 && self.reflection.probe_fraction <= 1.0) {
            return Err(invalid(
                "reflection.probe_fraction",
                format!("must lie in (0, 1] (got {})", self.reflection.probe_fraction),
            ));
        }
        let params = ScenarioParams {
            material,
            mode,
            spacing,
            physical_half_width: self.grid.half_width,
            pml: PmlParams {
                cells: self.pml.cells,
                order: self.pml.order,
                reflection,
                beta0: self.pml.beta0.map(PerAxis::axes),
            },
            source,
            t_end: t_end.unwrap_or(0.0),
            cfl_safety: self.cfl_safety,
            direction_samples: self.grid.direction_samples,
        };
        let (mut scenario, derived) = Scenario::resolve(&params).map_err(|e| {
            use pmlwave_core::Error as E;
            let check = match &e {
                E::TooFewSamples(_) => "grid.direction_samples",
                E::InvalidGrid(_) | E::NotPositive { what: "spacing", .. } => "grid",
                E::InvalidProfile(_) | E::GeometryMismatch(_) | E::ReflectionOutOfRange(_) => "pml",
                E::InvalidSource(_) | E::SourceInPml(_) => "source.geometry",
                E::NonFinite { .. } => "finite",
                E::TimeStepTooLarge { .. } => "time_step",
                E::MissingViscosity => "mode.viscosity",
                _ => "scenario",
            };
            invalid(check, e)
        })?;
        if t_end.is_none() {
            let n = self.traversals.unwrap_or(0.0);
            scenario.t_end = n * 2.0 * scenario.grid.physical_half_width() / derived.c_min;
        }
        let mut warnings = Vec::new();
        if let Some(s) = &source {
            let cells = s.radius / derived.spacing;
            if s.kind == SourceKind::DirichletShell && cells < SHELL_RESOLUTION_CELLS {
                warnings.push(format!(
                    "shell radius spans {cells:.2} cells; at least {SHELL_RESOLUTION_CELLS} recommended"
                ));
            }
        }
        Ok(ResolvedConfig { config: self, scenario, derived, warnings })
    }
}

pub fn parse_and_validate(text: &str) -> Result<ResolvedConfig, ConfigError> {
    let config: SimulationConfig = toml::from_str(text)?;
    config.resolve()
}

pub fn load_and_validate(path: &Path) -> Result<ResolvedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_and_validate(&text)
}
