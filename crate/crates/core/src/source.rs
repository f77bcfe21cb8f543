//! Excitation: the Gaussian-derivative waveform, the prescribed-displacement
//! sphere, and body-force loads.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{FieldState, GridSpec};
use crate::math::{abs, atan2, cos, exp, sin, sqrt};

const PI: f64 = core::f64::consts::PI;
const E: f64 = core::f64::consts::E;

/// `u₀(t) = −√(2e) π f₀ (t − t₀) exp(−π² f₀² (t − t₀)²)`, peak magnitude 1.
pub fn source_waveform(t: f64, f0: f64, t0: f64) -> f64 {
    let tau = t - t0;
    let a = PI * f0;
    -sqrt(2.0 * E) * a * tau * exp(-a * a * tau * tau)
}

/// `du₀/dt`.
pub fn source_waveform_derivative(t: f64, f0: f64, t0: f64) -> f64 {
    let tau = t - t0;
    let a = PI * f0;
    let a2t2 = a * a * tau * tau;
    -sqrt(2.0 * E) * a * (1.0 - 2.0 * a2t2) * exp(-a2t2)
}

/// `∫₀ᵗ u₀(τ) dτ`.
pub fn source_waveform_integral(t: f64, f0: f64, t0: f64) -> f64 {
    let a = PI * f0;
    let k = sqrt(2.0 * E) / (2.0 * a);
    k * (exp(-a * a * (t - t0) * (t - t0)) - exp(-a * a * t0 * t0))
}

/// `(n̂ + t̂_φ)/√2` for a point at `rel` from the sphere centre. The azimuth
/// is taken as 0 on the polar axis (and at the centre itself).
pub fn shell_direction(rel: [f64; 3]) -> [f64; 3] {
    let r = sqrt(rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]);
    let phi = if r > 0.0 { libm::acos((rel[2] / r).clamp(-1.0, 1.0)) } else { 0.0 };
    let theta = atan2(rel[1], rel[0]);
    let (sp, cp) = (sin(phi), cos(phi));
    let (st, ct) = (sin(theta), cos(theta));
    let normal = [sp * ct, sp * st, cp];
    let tangent = [cp * ct, cp * st, -sp];
    let s = core::f64::consts::FRAC_1_SQRT_2;
    [(normal[0] + tangent[0]) * s, (normal[1] + tangent[1]) * s, (normal[2] + tangent[2]) * s]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    /// Load `F_i` added to the momentum equation along `direction`.
    BodyForcePoint { direction: [f64; 3] },
    /// Displacement prescribed on a staircase ball.
    DirichletShell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Dominant frequency (Hz).
    pub f0: f64,
    /// Delay (s).
    pub t0: f64,
    /// Centre (m).
    pub center: [f64; 3],
    /// Ball radius (m). For body forces 0 means a single-node delta.
    pub radius: f64,
    /// Force (N) for body forces, displacement (m) for the shell.
    pub amplitude: f64,
}

impl SourceSpec {
    pub fn waveform(&self, t: f64) -> f64 {
        source_waveform(t, self.f0, self.t0)
    }

    /// Check the source against the grid: parameters in range, geometry
    /// inside the physical domain.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return Err(Error::InvalidSource("f0 must be positive"));
        }
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            return Err(Error::InvalidSource("t0 must be non-negative"));
        }
        if !self.amplitude.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { what: "source parameter" });
        }
        if !(self.radius.is_finite() && self.radius >= 0.0) {
            return Err(Error::InvalidSource("radius must be non-negative"));
        }
        let x0 = grid.physical_half_width();
        let reach = self.center.iter().map(|c| abs(*c)).fold(0.0, f64::max);
        match self.kind {
            SourceKind::DirichletShell => {
                if self.radius < grid.spacing() {
                    return Err(Error::InvalidSource("shell radius must be at least one grid spacing"));
                }
                if reach + self.radius >= x0 {
                    return Err(Error::SourceInPml("shell intersects the PML region"));
                }
            }
            SourceKind::BodyForcePoint { direction } => {
                if direction.iter().any(|d| !d.is_finite()) {
                    return Err(Error::NonFinite { what: "source direction" });
                }
                if reach + self.radius >= x0 {
                    return Err(Error::SourceInPml("body force centre lies in the PML region"));
                }
            }
        }
        Ok(())
    }

    /// Resolve the source onto grid nodes.
    pub fn compile(&self, grid: &GridSpec) -> Result<CompiledSource> {
        self.validate(grid)?;
        let h = grid.spacing();
        match self.kind {
            SourceKind::DirichletShell => {
                let nodes =
                    ball_nodes(grid, self.center, self.radius).map(|(idx, rel)| (idx, shell_direction(rel))).collect();
                Ok(CompiledSource::Shell { nodes, spec: *self })
            }
            SourceKind::BodyForcePoint { direction } => {
                let cell = h * h * h;
                let weights: Vec<(usize, f64)> = if self.radius > 0.0 {
                    let raw: Vec<(usize, f64)> = ball_nodes(grid, self.center, self.radius)
                        .map(|(idx, rel)| {
                            let r = sqrt(rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]);
                            (idx, 0.5 * (1.0 + cos(PI * r / self.radius)))
                        })
                        .collect();
                    let total: f64 = raw.iter().map(|(_, w)| w).sum();
                    raw.into_iter().map(|(i, w)| (i, w / (total * cell))).collect()
                } else {
                    let node = grid
                        .nearest_node(self.center)
                        .ok_or(Error::SourceInPml("body force centre lies off the grid"))?;
                    alloc::vec![(grid.index(node), 1.0 / cell)]
                };
                Ok(CompiledSource::BodyForce { weights, direction, spec: *self })
            }
        }
    }
}

fn ball_nodes(grid: &GridSpec, center: [f64; 3], radius: f64) -> impl Iterator<Item = (usize, [f64; 3])> + '_ {
    let h = grid.spacing();
    let c = grid.center() as isize;
    let span = libm::ceil(radius / h) as isize + 1;
    let lo: [isize; 3] = core::array::from_fn(|a| libm::round(center[a] / h) as isize + c - span);
    let n = grid.dims();
    let r2 = radius * radius * (1.0 + 1e-12);
    (0..(2 * span + 1).pow(3)).filter_map(move |q| {
        let w = 2 * span + 1;
        let node = [lo[0] + q % w, lo[1] + (q / w) % w, lo[2] + q / (w * w)];
        if (0..3).any(|a| node[a] < 0 || node[a] as usize >= n[a]) {
            return None;
        }
        let node = [node[0] as usize, node[1] as usize, node[2] as usize];
        let p = grid.position(node);
        let rel = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
        (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2] <= r2).then(|| (grid.index(node), rel))
    })
}

/// A source resolved onto a specific grid.
#[derive(Debug, Clone)]
pub enum CompiledSource {
    BodyForce { weights: Vec<(usize, f64)>, direction: [f64; 3], spec: SourceSpec },
    Shell { nodes: Vec<(usize, [f64; 3])>, spec: SourceSpec },
}

impl CompiledSource {
    pub fn spec(&self) -> &SourceSpec {
        match self {
            Self::BodyForce { spec, .. } | Self::Shell { spec, .. } => spec,
        }
    }

    /// Same geometry with the amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::BodyForce { spec, .. } | Self::Shell { spec, .. } => spec.amplitude *= factor,
        }
        out
    }

    /// Flat indices of nodes whose displacement is prescribed.
    pub fn masked_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        let nodes: &[(usize, [f64; 3])] = match self {
            Self::Shell { nodes, .. } => nodes,
            Self::BodyForce { .. } => &[],
        };
        nodes.iter().map(|(i, _)| *i)
    }
}

/// Overwrite `u`, `v` and `U` on the ball with the prescribed motion at
/// time `t`. Does nothing for body-force sources.
pub fn apply_dirichlet_shell(state: &mut FieldState, src: &CompiledSource, t: f64) {
    if let CompiledSource::Shell { nodes, spec } = src {
        let a = spec.amplitude;
        let disp = a * source_waveform(t, spec.f0, spec.t0);
        let vel = a * source_waveform_derivative(t, spec.f0, spec.t0);
        let hist = a * source_waveform_integral(t, spec.f0, spec.t0);
        for &(idx, d) in nodes {
            for k in 0..3 {
                state.u[k][idx] = d[k] * disp;
                state.v[k][idx] = d[k] * vel;
                state.history[k][idx] = d[k] * hist;
            }
        }
    }
}

/// Add the body-force density `amplitude·u₀(t)·direction·weight` (N/m³) to
/// a force accumulator. Does nothing for shell sources.
pub fn apply_body_force(rhs: &mut [Vec<f64>; 3], src: &CompiledSource, t: f64) {
    if let CompiledSource::BodyForce { weights, direction, spec } = src {
        let s = spec.amplitude * source_waveform(t, spec.f0, spec.t0);
        for &(idx, w) in weights {
            for k in 0..3 {
                rhs[k][idx] += s * w * direction[k];
            }
        }
    }
}
