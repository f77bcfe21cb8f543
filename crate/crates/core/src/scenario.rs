//! A fully resolved experiment: medium, grid, PML, source and time
//! stepping, plus the run loop that drives it.

use crate::diagnostics::{total_energy, EnergyTrace};
use crate::error::{Error, Result};
use crate::grid::{mesh_size, FieldState, GridSpec, MaterialField};
use crate::materials::{speed_bounds, Material};
use crate::pml::{build_coefficient_fields, PmlProfile};
use crate::solver::{cfl_limit, viscous_limit, Mode, Simulation, TimeStepper};
use crate::source::SourceSpec;

/// Default number of Fibonacci directions for the speed bounds.
pub const DEFAULT_DIRECTION_SAMPLES: usize = 4096;

/// How the grid spacing is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    Explicit(f64),
    /// `h = c_min / (N f₀)` with `f₀` from the source.
    NodesPerWavelength(f64),
}

/// PML design inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlParams {
    pub cells: usize,
    pub order: u32,
    pub reflection: [f64; 3],
    /// Overrides the reflection-based design when set.
    pub beta0: Option<[f64; 3]>,
}

impl Default for PmlParams {
    fn default() -> Self {
        Self { cells: 4, order: 2, reflection: [1e-3; 3], beta0: None }
    }
}

/// Unresolved scenario inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub material: Material,
    pub mode: Mode,
    pub spacing: Spacing,
    pub physical_half_width: f64,
    pub pml: PmlParams,
    pub source: Option<SourceSpec>,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub direction_samples: usize,
}

/// Quantities derived during resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    pub c_min: f64,
    pub c_max: f64,
    pub spacing: f64,
    pub dt: f64,
    pub cfl_dt: f64,
    pub viscous_dt: f64,
    pub beta0: [f64; 3],
    pub dims: [usize; 3],
}

/// Validated, ready-to-run scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub material: Material,
    pub mode: Mode,
    pub grid: GridSpec,
    pub profile: PmlProfile,
    pub source: Option<SourceSpec>,
    pub t_end: f64,
    pub dt: f64,
    pub cfl_safety: f64,
    pub c_max: f64,
}

impl Scenario {
    /// Resolve derived quantities and check every invariant.
    pub fn resolve(params: &ScenarioParams) -> Result<(Self, Derived)> {
        let material = &params.material;
        if params.mode == Mode::Viscoelastic && material.viscosity().is_none() {
            return Err(Error::MissingViscosity);
        }
        if !(params.t_end.is_finite() && params.t_end >= 0.0) {
            return Err(Error::NotPositive { what: "t_end", value: params.t_end });
        }
        let (c_min, c_max) = speed_bounds(material, params.direction_samples)?;
        let spacing = match params.spacing {
            Spacing::Explicit(h) => h,
            Spacing::NodesPerWavelength(n) => {
                let f0 = params
                    .source
                    .map(|s| s.f0)
                    .ok_or(Error::InvalidGrid("nodes-per-wavelength sizing needs a source frequency"))?;
                mesh_size(c_min, n, f0)?
            }
        };
        let grid = GridSpec::new(spacing, params.physical_half_width, params.pml.cells)?;
        let x0 = grid.physical_half_width();
        let d = grid.pml_thickness();
        let profile = match params.pml.beta0 {
            Some(b) => PmlProfile::new(b, params.pml.order, d, x0)?,
            None => PmlProfile::designed(params.pml.reflection, params.pml.order, d, x0, c_max)?,
        };
        if let Some(src) = &params.source {
            src.validate(&grid)?;
        }
        if !(params.cfl_safety > 0.0 && params.cfl_safety < 1.0) {
            return Err(Error::NotPositive { what: "CFL safety in (0,1)", value: params.cfl_safety });
        }
        let cfl_dt = params.cfl_safety * cfl_limit(spacing, c_max);
        let viscous_dt = match (params.mode, material.viscosity()) {
            (Mode::Viscoelastic, Some(eta)) => {
                params.cfl_safety * viscous_limit(spacing, material.density(), eta.max_eigenvalue())
            }
            _ => f64::INFINITY,
        };
        let dt = cfl_dt.min(viscous_dt);
        // stepper construction re-checks the CFL bound
        TimeStepper::new(dt, params.cfl_safety, spacing, c_max)?;
        let scenario = Self {
            material: material.clone(),
            mode: params.mode,
            grid,
            profile: profile.clone(),
            source: params.source,
            t_end: params.t_end,
            dt,
            cfl_safety: params.cfl_safety,
            c_max,
        };
        let derived =
            Derived { c_min, c_max, spacing, dt, cfl_dt, viscous_dt, beta0: profile.beta0(), dims: grid.dims() };
        Ok((scenario, derived))
    }

    /// Build a fresh simulation at `t = 0`.
    pub fn simulation(&self) -> Result<Simulation> {
        self.simulation_with_state(FieldState::zeros(&self.grid))
    }

    pub fn simulation_with_state(&self, state: FieldState) -> Result<Simulation> {
        let coeffs = build_coefficient_fields(&self.grid, &self.profile)?;
        let source = self.source.map(|s| s.compile(&self.grid)).transpose()?;
        let stepper = TimeStepper::new(self.dt, self.cfl_safety, self.grid.spacing(), self.c_max)?;
        Simulation::with_state(
            self.grid,
            MaterialField::uniform(self.material.clone()),
            coeffs,
            source,
            stepper,
            self.mode,
            state,
        )
    }

    /// Same scenario on a physical domain `extra` cells wider per side,
    /// with an identical PML collar, spacing and time step.
    pub fn enlarged(&self, extra: usize) -> Result<Self> {
        let grid = self.grid.enlarged(extra);
        let profile = PmlProfile::new(
            self.profile.beta0(),
            self.profile.order(),
            grid.pml_thickness(),
            grid.physical_half_width(),
        )?;
        Ok(Self { grid, profile, ..self.clone() })
    }

    /// Same scenario with a different PML thickness, keeping `β₀` design
    /// inputs consistent by re-deriving from the given reflection target.
    pub fn with_pml_cells(&self, cells: usize, reflection: [f64; 3]) -> Result<Self> {
        let grid = self.grid.with_pml_cells(cells)?;
        let profile = PmlProfile::designed(
            reflection,
            self.profile.order(),
            grid.pml_thickness(),
            grid.physical_half_width(),
            self.c_max,
        )?;
        Ok(Self { grid, profile, ..self.clone() })
    }

    pub fn steps(&self) -> u64 {
        if self.t_end <= 0.0 {
            0
        } else {
            libm::ceil(self.t_end / self.dt - 1e-9) as u64
        }
    }
}

/// Output cadence for [`run`]. Zero disables an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub energy_every: u64,
    pub snapshot_every: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { energy_every: 8, snapshot_every: 0 }
    }
}

/// Receives outputs as the run progresses.
pub trait RunObserver {
    fn energy(&mut self, _t: f64, _kinetic: f64, _potential: f64) {}
    fn snapshot(&mut self, _step: u64, _t: f64, _grid: &GridSpec, _state: &FieldState) {}
}

impl RunObserver for () {}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub steps: u64,
    pub final_time: f64,
    pub peak_energy: f64,
    pub final_energy: f64,
    pub trace: EnergyTrace,
    /// Set when the run aborted on a non-finite field.
    pub instability: Option<Error>,
}

impl RunReport {
    pub fn stable(&self) -> bool {
        self.instability.is_none()
    }
}

/// Step from `t = 0` to `t_end`, emitting energy and snapshots at the
/// configured cadence. An instability stops the run; everything emitted up
/// to that point is kept and the error is recorded in the report.
pub fn run(scenario: &Scenario, options: RunOptions, observer: &mut dyn RunObserver) -> Result<RunReport> {
    let mut sim = scenario.simulation()?;
    let total = scenario.steps();
    let mut trace = EnergyTrace::default();
    let record = |sim: &Simulation, trace: &mut EnergyTrace, obs: &mut dyn RunObserver| {
        let (k, p) = total_energy(sim.state(), sim.media(), sim.grid());
        obs.energy(sim.time(), k, p);
        trace.push(sim.time(), k, p);
    };
    if total > 0 && options.energy_every > 0 {
        record(&sim, &mut trace, observer);
    }
    if total > 0 && options.snapshot_every > 0 {
        observer.snapshot(0, 0.0, sim.grid(), sim.state());
    }
    let mut instability = None;
    for n in 1..=total {
        if let Err(e) = sim.step() {
            instability = Some(e);
            break;
        }
        let last = n == total;
        if options.energy_every > 0 && (n % options.energy_every == 0 || last) {
            record(&sim, &mut trace, observer);
        }
        if options.snapshot_every > 0 && n % options.snapshot_every == 0 {
            observer.snapshot(n, sim.time(), sim.grid(), sim.state());
        }
    }
    if instability.is_none() {
        if let Err(e) = sim.check_finite() {
            instability = Some(e);
        }
    }
    let peak_energy = trace.total.iter().copied().fold(0.0, f64::max);
    let final_energy = trace.total.last().copied().unwrap_or(0.0);
    Ok(RunReport {
        steps: sim.stepper().step_index(),
        final_time: sim.time(),
        peak_energy,
        final_energy,
        trace,
        instability,
    })
}
