//! Explicit time integration of the second-order PML system.
//!
//! The state `(u, v, U, w)` is advanced by a kick–drift–kick splitting:
//!
//! 1. half kick `v += dt/2 · (∇·σ + F)/ρ` with `σ = C∇u + η∇v + w`;
//! 2. local drift of `(u, v, U)` under `u' = v`, `v' = −a v − b u − c U`,
//!    `U' = u`, solved pointwise with the trapezoidal (Cayley) rule so that
//!    arbitrarily large damping stays bounded;
//! 3. auxiliary update `w_ij ← e^{−β_j dt} w_ij + φ(β_j) G_ij`, with `G`
//!    evaluated on the time-centred `u`, `U`;
//! 4. half kick with the stress of the new state.
//!
//! Where all `β` vanish the drift is the plain `u += dt·v` and the scheme is
//! velocity Verlet for the undamped wave equation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fd::Stencil;
use crate::grid::{FieldState, GridSpec, MaterialField};
use crate::math::{exp, expm1, sqrt};
use crate::pml::PmlCoefficientFields;
use crate::source::{apply_dirichlet_shell, CompiledSource};

/// Interval (in steps) between non-finite checks.
pub const INSTABILITY_CHECK_INTERVAL: u64 = 16;

/// Default CFL safety factor.
pub const DEFAULT_CFL_SAFETY: f64 = 0.5;

/// `h / (c_max √3)`, the explicit 3D bound before the safety factor.
pub fn cfl_limit(spacing: f64, c_max: f64) -> f64 {
    spacing / (c_max * sqrt(3.0))
}

/// `h² ρ / (6 η_max)`, the explicit bound from the Kelvin–Voigt term.
pub fn viscous_limit(spacing: f64, density: f64, eta_max: f64) -> f64 {
    if eta_max > 0.0 {
        spacing * spacing * density / (6.0 * eta_max)
    } else {
        f64::INFINITY
    }
}

/// Time-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepper {
    dt: f64,
    cfl_safety: f64,
    step_index: u64,
}

impl TimeStepper {
    /// Checks `dt ≤ cfl_safety · h / (c_max √3)`.
    pub fn new(dt: f64, cfl_safety: f64, spacing: f64, c_max: f64) -> Result<Self> {
        if !(cfl_safety > 0.0 && cfl_safety < 1.0) {
            return Err(Error::NotPositive { what: "CFL safety in (0,1)", value: cfl_safety });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::NotPositive { what: "time step", value: dt });
        }
        let limit = cfl_safety * cfl_limit(spacing, c_max);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::TimeStepTooLarge { dt, limit, bound: "CFL" });
        }
        Ok(Self { dt, cfl_safety, step_index: 0 })
    }

    /// Largest step allowed by the CFL bound.
    pub fn from_cfl(cfl_safety: f64, spacing: f64, c_max: f64) -> Result<Self> {
        Self::new(cfl_safety * cfl_limit(spacing, c_max), cfl_safety, spacing, c_max)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cfl_safety(&self) -> f64 {
        self.cfl_safety
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    /// Number of steps needed to reach `t_end`.
    pub fn steps_to(&self, t_end: f64) -> u64 {
        if t_end <= 0.0 {
            return 0;
        }
        libm::ceil(t_end / self.dt - 1e-9) as u64
    }
}

/// Iterate flat indices of all nodes that are not on the outer boundary.
fn for_each_interior(grid: &GridSpec, mut f: impl FnMut([usize; 3], usize)) {
    let n = grid.dims();
    for z in 1..n[2] - 1 {
        for y in 1..n[1] - 1 {
            let row = grid.index([0, y, z]);
            for x in 1..n[0] - 1 {
                f([x, y, z], row + x);
            }
        }
    }
}

/// Evaluate the stress divergence on every interior node into `out`.
pub(crate) fn stress_divergence(
    grid: &GridSpec,
    media: &MaterialField,
    u: &[Vec<f64>; 3],
    velocity: Option<&[Vec<f64>; 3]>,
    aux: Option<&[Vec<f64>; 9]>,
    out: &mut [Vec<f64>; 3],
) {
    let st = Stencil::new(grid);
    let c = grid.center();
    let m = grid.half_cells();
    let [o0, o1, o2] = out;
    for_each_interior(grid, |node, idx| {
        // w vanishes unless a neighbour lies in the PML
        let near_pml = node.iter().any(|&i| i.abs_diff(c) >= m);
        let d = st.divergence(u, velocity, aux.filter(|_| near_pml), media, idx);
        o0[idx] = d[0];
        o1[idx] = d[1];
        o2[idx] = d[2];
    });
}

fn half_kick(grid: &GridSpec, media: &MaterialField, v: &mut [Vec<f64>; 3], force: &[Vec<f64>; 3], half_dt: f64) {
    for_each_interior(grid, |_, idx| {
        let rho = media.density_at(idx);
        for k in 0..3 {
            v[k][idx] += half_dt * force[k][idx] / rho;
        }
    });
}

fn body_force_kick(media: &MaterialField, v: &mut [Vec<f64>; 3], src: Option<&CompiledSource>, t: f64, half_dt: f64) {
    if let Some(CompiledSource::BodyForce { weights, direction, spec }) = src {
        let s = spec.amplitude * spec.waveform(t);
        for &(idx, w) in weights {
            let rho = media.density_at(idx);
            for k in 0..3 {
                v[k][idx] += half_dt * (s * w * direction[k]) / rho;
            }
        }
    }
}

/// Whether the Kelvin–Voigt terms are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Elastic,
    Viscoelastic,
}

/// A grid, medium, PML and source together with the evolving state.
pub struct Simulation {
    grid: GridSpec,
    media: MaterialField,
    coeffs: PmlCoefficientFields,
    source: Option<CompiledSource>,
    stepper: TimeStepper,
    viscous: bool,
    state: FieldState,
    force: [Vec<f64>; 3],
    force_current: bool,
    prev_u: [Vec<f64>; 3],
    prev_history: [Vec<f64>; 3],
    damped: Vec<usize>,
    /// Per-axis `(e^{−β dt}, (1 − e^{−β dt})/β)` along each grid line.
    relaxation: [Vec<(f64, f64)>; 3],
}

impl core::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Simulation")
            .field("grid", &self.grid)
            .field("stepper", &self.stepper)
            .field("viscous", &self.viscous)
            .finish_non_exhaustive()
    }
}

impl Simulation {
    /// Starts from the zero state (with the source applied at `t = 0`).
    pub fn new(
        grid: GridSpec,
        media: MaterialField,
        coeffs: PmlCoefficientFields,
        source: Option<CompiledSource>,
        stepper: TimeStepper,
        mode: Mode,
    ) -> Result<Self> {
        let state = FieldState::zeros(&grid);
        Self::with_state(grid, media, coeffs, source, stepper, mode, state)
    }

    /// Starts from a given state. `U` and `w` are expected to be zero.
    pub fn with_state(
        grid: GridSpec,
        media: MaterialField,
        coeffs: PmlCoefficientFields,
        source: Option<CompiledSource>,
        stepper: TimeStepper,
        mode: Mode,
        state: FieldState,
    ) -> Result<Self> {
        if state.node_count() != grid.node_count() || coeffs.axis_beta(0).len() != grid.dims()[0] {
            return Err(Error::ShapeMismatch);
        }
        let viscous = match mode {
            Mode::Elastic => false,
            Mode::Viscoelastic => {
                if !media.is_viscous() && media.materials().all(|m| m.viscosity().is_none()) {
                    return Err(Error::MissingViscosity);
                }
                for m in media.materials() {
                    let eta = m.viscosity().map_or(0.0, |v| v.max_eigenvalue());
                    let limit = viscous_limit(grid.spacing(), m.density(), eta);
                    if stepper.dt > limit * (1.0 + 1e-12) {
                        return Err(Error::TimeStepTooLarge { dt: stepper.dt, limit, bound: "viscous" });
                    }
                }
                true
            }
        };
        let n = grid.node_count();
        let mut damped = Vec::new();
        for_each_interior(&grid, |node, idx| {
            if coeffs.at(node).is_damped() {
                damped.push(idx);
            }
        });
        let pml_active = !damped.is_empty();
        let scratch = || -> [Vec<f64>; 3] {
            if pml_active {
                core::array::from_fn(|_| vec![0.0; n])
            } else {
                Default::default()
            }
        };
        let dt = stepper.dt;
        let relaxation = core::array::from_fn(|axis| {
            coeffs
                .axis_beta(axis)
                .iter()
                .map(|&beta| if beta > 0.0 { (exp(-beta * dt), -expm1(-beta * dt) / beta) } else { (1.0, dt) })
                .collect()
        });
        let mut sim = Self {
            grid,
            media,
            coeffs,
            source,
            stepper,
            viscous,
            state,
            force: core::array::from_fn(|_| vec![0.0; n]),
            force_current: false,
            prev_u: scratch(),
            prev_history: scratch(),
            damped,
            relaxation,
        };
        if let Some(src) = &sim.source {
            apply_dirichlet_shell(&mut sim.state, src, 0.0);
        }
        Ok(sim)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn media(&self) -> &MaterialField {
        &self.media
    }

    pub fn coefficients(&self) -> &PmlCoefficientFields {
        &self.coeffs
    }

    pub fn stepper(&self) -> &TimeStepper {
        &self.stepper
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.stepper.time()
    }

    pub fn pml_active(&self) -> bool {
        !self.damped.is_empty()
    }

    fn refresh_force(&mut self) {
        let v = self.viscous.then_some(&self.state.v);
        let aux = self.pml_active().then_some(&self.state.aux);
        stress_divergence(&self.grid, &self.media, &self.state.u, v, aux, &mut self.force);
        self.force_current = true;
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.stepper.dt;
        let half_dt = 0.5 * dt;
        let t0 = self.stepper.time();
        let t1 = (self.stepper.step_index + 1) as f64 * dt;

        // the cached divergence used the mid-step velocity in viscous mode
        if !self.force_current || self.viscous {
            self.refresh_force();
        }
        half_kick(&self.grid, &self.media, &mut self.state.v, &self.force, half_dt);
        body_force_kick(&self.media, &mut self.state.v, self.source.as_ref(), t0, half_dt);

        if self.pml_active() {
            for k in 0..3 {
                self.prev_u[k].copy_from_slice(&self.state.u[k]);
                self.prev_history[k].copy_from_slice(&self.state.history[k]);
            }
        }
        self.drift(dt);
        if self.pml_active() {
            self.update_aux();
        }
        if let Some(src) = &self.source {
            apply_dirichlet_shell(&mut self.state, src, t1);
        }

        self.refresh_force();
        half_kick(&self.grid, &self.media, &mut self.state.v, &self.force, half_dt);
        body_force_kick(&self.media, &mut self.state.v, self.source.as_ref(), t1, half_dt);
        if let Some(src) = &self.source {
            apply_dirichlet_shell(&mut self.state, src, t1);
        }

        self.stepper.step_index += 1;
        if self.stepper.step_index.is_multiple_of(INSTABILITY_CHECK_INTERVAL) {
            self.check_finite()?;
        }
        Ok(())
    }

    /// Fail with the offending step and node if any field is non-finite.
    pub fn check_finite(&self) -> Result<()> {
        if let Some((field, idx)) = self.state.first_non_finite() {
            return Err(Error::Unstable { step: self.stepper.step_index, field, node: self.grid.node_of(idx) });
        }
        Ok(())
    }

    fn drift(&mut self, dt: f64) {
        let h = 0.5 * dt;
        let coeffs = &self.coeffs;
        let FieldState { u, v, history, .. } = &mut self.state;
        for_each_interior(&self.grid, |node, idx| {
            let [b1, b2, b3] = coeffs.betas(node);
            if b1 == 0.0 && b2 == 0.0 && b3 == 0.0 {
                for k in 0..3 {
                    let u0 = u[k][idx];
                    u[k][idx] += dt * v[k][idx];
                    history[k][idx] += h * (u0 + u[k][idx]);
                }
                return;
            }
            let a = b1 + b2 + b3;
            let b = b1 * b2 + b2 * b3 + b3 * b1;
            let c = b1 * b2 * b3;
            let denom = (1.0 + h * b1) * (1.0 + h * b2) * (1.0 + h * b3);
            for k in 0..3 {
                let (u0, v0, w0) = (u[k][idx], v[k][idx], history[k][idx]);
                let p = u0 + h * v0;
                let q = w0 + h * u0;
                let rhs = v0 - h * (b * u0 + a * v0 + c * w0) - h * b * p - h * c * (q + h * p);
                let v1 = rhs / denom;
                let u1 = p + h * v1;
                v[k][idx] = v1;
                u[k][idx] = u1;
                history[k][idx] = q + h * u1;
            }
        });
    }

    fn update_aux(&mut self) {
        let st = Stencil::new(&self.grid);
        let FieldState { u, v, history, aux } = &mut self.state;
        let (pu, ph) = (&self.prev_u, &self.prev_history);
        for &idx in &self.damped {
            let node = self.grid.node_of(idx);
            let pc = self.coeffs.at(node);
            let gu = st.gradient(|k, i| 0.5 * (pu[k][i] + u[k][i]), idx);
            let gh = st.gradient(|k, i| 0.5 * (ph[k][i] + history[k][i]), idx);
            let gv = self.viscous.then(|| st.gradient(|k, i| v[k][i], idx));
            let g = Stencil::aux_source(&self.media, idx, &pc, &gu, &gh, gv.as_ref());
            for j in 0..3 {
                let (decay, gain) = self.relaxation[j][node[j]];
                for i in 0..3 {
                    let w = &mut aux[3 * i + j][idx];
                    *w = decay * *w + gain * g[i][j];
                }
            }
        }
    }

    /// Run `n` steps.
    pub fn advance(&mut self, n: u64) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }
}

/// Velocity-Verlet integrator for the undamped elastic wave equation with
/// no PML machinery at all. Used as the reference the PML stepper must
/// reduce to when every `β` is zero.
pub struct ElasticReferenceStepper {
    grid: GridSpec,
    media: MaterialField,
    source: Option<CompiledSource>,
    dt: f64,
    step_index: u64,
    pub u: [Vec<f64>; 3],
    pub v: [Vec<f64>; 3],
    force: [Vec<f64>; 3],
}

impl ElasticReferenceStepper {
    pub fn new(grid: GridSpec, media: MaterialField, source: Option<CompiledSource>, dt: f64) -> Self {
        let n = grid.node_count();
        let zeros = || -> [Vec<f64>; 3] { core::array::from_fn(|_| vec![0.0; n]) };
        let mut s = Self { grid, media, source, dt, step_index: 0, u: zeros(), v: zeros(), force: zeros() };
        stress_divergence(&s.grid, &s.media, &s.u, None, None, &mut s.force);
        s
    }

    pub fn step(&mut self) {
        let dt = self.dt;
        let half_dt = 0.5 * dt;
        let t0 = self.step_index as f64 * dt;
        let t1 = (self.step_index + 1) as f64 * dt;
        half_kick(&self.grid, &self.media, &mut self.v, &self.force, half_dt);
        body_force_kick(&self.media, &mut self.v, self.source.as_ref(), t0, half_dt);
        let (u, v) = (&mut self.u, &self.v);
        for_each_interior(&self.grid, |_, idx| {
            for k in 0..3 {
                u[k][idx] += dt * v[k][idx];
            }
        });
        stress_divergence(&self.grid, &self.media, &self.u, None, None, &mut self.force);
        half_kick(&self.grid, &self.media, &mut self.v, &self.force, half_dt);
        body_force_kick(&self.media, &mut self.v, self.source.as_ref(), t1, half_dt);
        self.step_index += 1;
    }
}
