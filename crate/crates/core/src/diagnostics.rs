//! Energy in the physical domain, decay summaries, and PML reflection
//! measurement against an enlarged reference domain.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fd::Stencil;
use crate::grid::{FieldState, GridSpec, MaterialField};
use crate::math::{pairwise_sum, sqrt};
use crate::scenario::Scenario;

/// Default fraction of the physical half width probed for reflections.
pub const DEFAULT_PROBE_FRACTION: f64 = 0.5;

/// Kinetic and potential energy (J) in the physical cube.
pub fn total_energy(state: &FieldState, media: &MaterialField, grid: &GridSpec) -> (f64, f64) {
    energy_in_box(state, media, grid, grid.half_cells())
}

/// Kinetic and potential energy (J) in the closed box of `half_cells`
/// cells around the origin.
///
/// Each node carries `h³` times a factor ½ for every axis on which it lies
/// on the box surface. Strains use central differences; `half_cells` is
/// clamped to the grid, and on the fixed outer layer (where `u = 0`) the
/// missing neighbour is the odd reflection of the inner one.
pub fn energy_in_box(state: &FieldState, media: &MaterialField, grid: &GridSpec, half_cells: usize) -> (f64, f64) {
    let half_cells = half_cells.min(grid.center());
    let st = Stencil::new(grid);
    let last = grid.dims()[0] - 1;
    let h = grid.spacing();
    let cell = h * h * h;
    let c = grid.center();
    let (lo, hi) = (c - half_cells, c + half_cells);
    let side = hi - lo + 1;
    let mut kinetic = Vec::with_capacity(side * side * side);
    let mut potential = Vec::with_capacity(side * side * side);
    for z in lo..=hi {
        for y in lo..=hi {
            for x in lo..=hi {
                let node = [x, y, z];
                let weight = node.iter().fold(cell, |w, &i| if i == lo || i == hi { 0.5 * w } else { w });
                let idx = grid.index(node);
                let m = media.medium(idx);
                let v2 = state.v[0][idx] * state.v[0][idx]
                    + state.v[1][idx] * state.v[1][idx]
                    + state.v[2][idx] * state.v[2][idx];
                kinetic.push(0.5 * weight * m.density * v2);
                // g[i][j] = ∂_j u_i
                let g = if grid.is_boundary(node) {
                    wall_gradient(state, &st, node, idx, last, h)
                } else {
                    st.gradient(|k, n| state.u[k][n], idx)
                };
                let mut w = 0.0;
                for t in &media.stiffness_terms {
                    let (i, j, k, l) = (t[0] as usize, t[1] as usize, t[2] as usize, t[3] as usize);
                    w += m.stiffness[i][j][k][l] * g[i][j] * g[k][l];
                }
                potential.push(0.5 * weight * w);
            }
        }
    }
    (pairwise_sum(&kinetic), pairwise_sum(&potential))
}

/// Central-difference gradient on the outer layer, closing the stencil
/// with `u(−h) = −u(h)` across the wall.
fn wall_gradient(state: &FieldState, st: &Stencil, node: [usize; 3], idx: usize, last: usize, h: f64) -> [[f64; 3]; 3] {
    let mut g = [[0.0; 3]; 3];
    for (k, row) in g.iter_mut().enumerate() {
        let u = &state.u[k];
        for (l, gl) in row.iter_mut().enumerate() {
            let s = st.stride[l];
            let (plus, minus) = if node[l] == 0 {
                (u[idx + s], -u[idx + s])
            } else if node[l] == last {
                (-u[idx - s], u[idx - s])
            } else {
                (u[idx + s], u[idx - s])
            };
            *gl = (plus - minus) / (2.0 * h);
        }
    }
    g
}

/// Sampled energy history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    pub total: Vec<f64>,
}

impl EnergyTrace {
    pub fn push(&mut self, t: f64, kinetic: f64, potential: f64) {
        self.times.push(t);
        self.kinetic.push(kinetic);
        self.potential.push(potential);
        self.total.push(kinetic + potential);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySummary {
    pub peak: f64,
    pub peak_time: f64,
    pub final_energy: f64,
    /// `final / peak`; 0 for an all-zero trace.
    pub ratio: f64,
    /// First sample after the peak at or below 1% of it, if any.
    pub time_to_one_percent: Option<f64>,
}

pub fn energy_decay_summary(trace: &EnergyTrace) -> Result<DecaySummary> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let (peak_at, peak) =
        trace
            .total
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, e)| if e > best.1 { (i, e) } else { best });
    let final_energy = *trace.total.last().unwrap();
    let ratio = if peak > 0.0 { final_energy / peak } else { 0.0 };
    let time_to_one_percent = if peak > 0.0 {
        trace.total[peak_at..].iter().position(|&e| e <= 0.01 * peak).map(|i| trace.times[peak_at + i])
    } else {
        None
    };
    Ok(DecaySummary { peak, peak_time: trace.times[peak_at], final_energy, ratio, time_to_one_percent })
}

/// Outcome of a reflection measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionReport {
    /// `max |u_test − u_ref| / max |u_ref|` over probe nodes and all steps.
    pub max_relative_error: f64,
    pub max_abs_difference: f64,
    pub reference_peak: f64,
    /// Probe cube half width in cells (centred on the origin).
    pub probe_half_cells: usize,
    pub reference_margin_cells: usize,
    pub steps: u64,
}

/// Running comparison of two displacement fields over a probe cube.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProbeComparison {
    max_diff: f64,
    max_ref: f64,
}

impl ProbeComparison {
    /// Compare `test` on `test_grid` against `reference` on `ref_grid`, both
    /// sampled on the probe cube around their respective centres.
    pub fn accumulate(
        &mut self,
        test: &FieldState,
        test_grid: &GridSpec,
        reference: &FieldState,
        ref_grid: &GridSpec,
        probe_half_cells: usize,
    ) {
        let (ct, cr) = (test_grid.center(), ref_grid.center());
        let p = probe_half_cells;
        for dz in 0..=2 * p {
            for dy in 0..=2 * p {
                for dx in 0..=2 * p {
                    let it = test_grid.index([ct - p + dx, ct - p + dy, ct - p + dz]);
                    let ir = ref_grid.index([cr - p + dx, cr - p + dy, cr - p + dz]);
                    let mut d2 = 0.0;
                    let mut r2 = 0.0;
                    for k in 0..3 {
                        let d = test.u[k][it] - reference.u[k][ir];
                        d2 += d * d;
                        r2 += reference.u[k][ir] * reference.u[k][ir];
                    }
                    self.max_diff = self.max_diff.max(sqrt(d2));
                    self.max_ref = self.max_ref.max(sqrt(r2));
                }
            }
        }
    }

    pub fn max_abs_difference(&self) -> f64 {
        self.max_diff
    }

    pub fn reference_peak(&self) -> f64 {
        self.max_ref
    }

    /// Relative error; 0 when the reference never moved.
    pub fn relative_error(&self) -> f64 {
        if self.max_ref > 0.0 {
            self.max_diff / self.max_ref
        } else {
            0.0
        }
    }
}

/// Probe cube half width for a given fraction of the physical half width.
pub fn probe_half_cells(grid: &GridSpec, probe_fraction: f64) -> usize {
    libm::floor(probe_fraction * grid.half_cells() as f64) as usize
}

/// Smallest number of cells that must be added to the physical half width
/// so that nothing reflected by the enlarged domain's outer layer can reach
/// the probe cube before `t_end`.
pub fn required_margin_cells(scenario: &Scenario, probe_fraction: f64) -> usize {
    let grid = &scenario.grid;
    let h = grid.spacing();
    let travel = scenario.c_max * scenario.t_end / h;
    let source_reach = scenario
        .source
        .map(|s| {
            let c = s.center.iter().map(|x| x.abs()).fold(0.0, f64::max);
            (c + s.radius) / h
        })
        .unwrap_or(0.0);
    let probe = probe_half_cells(grid, probe_fraction) as f64;
    // out from the source to the reference PML, back to the probe
    let needed = 0.5 * (travel + source_reach + probe) + 1.0;
    let margin = libm::ceil(needed - grid.half_cells() as f64);
    if margin > 0.0 {
        margin as usize
    } else {
        0
    }
}

/// Run the scenario and a copy on a domain enlarged by `margin_cells`,
/// comparing displacements in the inner probe cube at every step.
pub fn measure_reflection(scenario: &Scenario, margin_cells: usize, probe_fraction: f64) -> Result<ReflectionReport> {
    let required = required_margin_cells(scenario, probe_fraction);
    if margin_cells < required {
        return Err(Error::CausalityViolated { margin_cells, required_cells: required });
    }
    let probe = probe_half_cells(&scenario.grid, probe_fraction);
    let reference = scenario.enlarged(margin_cells)?;
    let mut test_sim = scenario.simulation()?;
    let mut ref_sim = reference.simulation()?;
    let steps = test_sim.stepper().steps_to(scenario.t_end);
    let mut cmp = ProbeComparison::default();
    cmp.accumulate(test_sim.state(), &scenario.grid, ref_sim.state(), &reference.grid, probe);
    for _ in 0..steps {
        test_sim.step()?;
        ref_sim.step()?;
        cmp.accumulate(test_sim.state(), &scenario.grid, ref_sim.state(), &reference.grid, probe);
    }
    Ok(ReflectionReport {
        max_relative_error: cmp.relative_error(),
        max_abs_difference: cmp.max_abs_difference(),
        reference_peak: cmp.reference_peak(),
        probe_half_cells: probe,
        reference_margin_cells: margin_cells,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{isotropic_stiffness, Material};

    fn media() -> MaterialField {
        MaterialField::uniform(Material::elastic(1000.0, isotropic_stiffness(2e9, 1e9).unwrap()).unwrap())
    }

    #[test]
    fn zero_and_rigid_states_have_no_energy() {
        let grid = GridSpec::from_cells(1e-3, 3, 2).unwrap();
        let mut s = FieldState::zeros(&grid);
        assert_eq!(total_energy(&s, &media(), &grid), (0.0, 0.0));
        for k in 0..3 {
            s.u[k].iter_mut().for_each(|x| *x = 0.25 * (k + 1) as f64);
        }
        assert_eq!(total_energy(&s, &media(), &grid), (0.0, 0.0));
    }

    #[test]
    fn energy_is_quadratic() {
        let grid = GridSpec::from_cells(1e-3, 3, 2).unwrap();
        let mut s = FieldState::zeros(&grid);
        for i in 0..s.node_count() {
            let p = grid.position(grid.node_of(i));
            s.u[0][i] = 1e-6 * p[1] * p[1] * 1e3;
            s.v[2][i] = 1e-3 * p[0];
        }
        let (k1, p1) = total_energy(&s, &media(), &grid);
        s.scale(3.0);
        let (k2, p2) = total_energy(&s, &media(), &grid);
        assert!((k2 - 9.0 * k1).abs() <= 1e-12 * k2);
        assert!((p2 - 9.0 * p1).abs() <= 1e-12 * p2);
        assert!(k1 > 0.0 && p1 > 0.0);
    }

    #[test]
    fn summary_of_constant_trace() {
        let mut tr = EnergyTrace::default();
        for i in 0..10 {
            tr.push(i as f64, 1.0, 1.0);
        }
        let s = energy_decay_summary(&tr).unwrap();
        assert_eq!(s.ratio, 1.0);
        assert_eq!(s.time_to_one_percent, None);
        assert_eq!(energy_decay_summary(&EnergyTrace::default()), Err(Error::EmptyTrace));
    }

    #[test]
    fn summary_of_exponential_decay() {
        let dt = 0.01;
        let mut tr = EnergyTrace::default();
        for i in 0..1000 {
            let t = i as f64 * dt;
            tr.push(t, libm::exp(-t), 0.0);
        }
        let s = energy_decay_summary(&tr).unwrap();
        assert_eq!(s.peak, 1.0);
        let t1 = s.time_to_one_percent.unwrap();
        assert!((t1 - 100f64.ln()).abs() <= dt);
    }

    #[test]
    fn comparison_against_itself_is_zero() {
        let grid = GridSpec::from_cells(1e-3, 4, 2).unwrap();
        let mut s = FieldState::zeros(&grid);
        for i in 0..s.node_count() {
            s.u[1][i] = (i % 7) as f64;
        }
        let mut cmp = ProbeComparison::default();
        cmp.accumulate(&s, &grid, &s, &grid, 2);
        assert_eq!(cmp.relative_error(), 0.0);
        assert!(cmp.reference_peak() > 0.0);
    }
}
