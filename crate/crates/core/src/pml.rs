//! Damping profile design and the derived PML coefficient fields.
//!
//! The damping `β_j` depends only on `x_j`, so the coefficient fields are
//! stored as three one-dimensional profiles and every pointwise quantity
//! (`a`, `b`, `c`, the `C̃`/`C̆` factors) is formed from them on demand by
//! [`PmlCoefficientFields::at`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::math::{abs, log, powu};

/// Polynomial damping profile per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlProfile {
    beta0: [f64; 3],
    order: u32,
    thickness: f64,
    half_width: f64,
    alpha: [f64; 3],
}

impl PmlProfile {
    pub fn new(beta0: [f64; 3], order: u32, thickness: f64, half_width: f64) -> Result<Self> {
        if beta0.iter().any(|b| !b.is_finite()) || !thickness.is_finite() || !half_width.is_finite() {
            return Err(Error::NonFinite { what: "PML profile parameter" });
        }
        if beta0.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidProfile("beta0 must be non-negative"));
        }
        if order < 1 {
            return Err(Error::InvalidProfile("order must be at least 1"));
        }
        if thickness <= 0.0 {
            return Err(Error::InvalidProfile("thickness must be positive"));
        }
        if half_width <= 0.0 {
            return Err(Error::InvalidProfile("half width must be positive"));
        }
        Ok(Self { beta0, order, thickness, half_width, alpha: [1.0; 3] })
    }

    /// Profile whose per-axis `β₀` is designed from a target normal-incidence
    /// amplitude reflection.
    pub fn designed(reflection: [f64; 3], order: u32, thickness: f64, half_width: f64, c_max: f64) -> Result<Self> {
        let mut beta0 = [0.0; 3];
        for (b, &r) in beta0.iter_mut().zip(reflection.iter()) {
            *b = beta0_from_reflection(r, order, thickness, c_max)?;
        }
        Self::new(beta0, order, thickness, half_width)
    }

    pub fn beta0(&self) -> [f64; 3] {
        self.beta0
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Coordinate scaling; always 1 here.
    pub fn alpha(&self) -> [f64; 3] {
        self.alpha
    }

    /// Same geometry with every `β₀ⱼ` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let b = self.beta0;
        Self::new([b[0] * factor, b[1] * factor, b[2] * factor], self.order, self.thickness, self.half_width)
    }

    /// Zero damping with the same geometry.
    pub fn undamped(&self) -> Self {
        Self { beta0: [0.0; 3], ..self.clone() }
    }
}

/// Damping `β_j(x)` (1/s) on axis `axis` (one-based).
pub fn beta_profile(axis: usize, x: f64, p: &PmlProfile) -> Result<f64> {
    if !(1..=3).contains(&axis) {
        return Err(Error::AxisOutOfRange(axis));
    }
    let limit = p.half_width + p.thickness;
    let ax = abs(x);
    // allow round-off when the outer edge is given as x₀ + d
    if !(ax <= limit * (1.0 + 4.0 * f64::EPSILON)) {
        return Err(Error::OutsideDomain { x, limit });
    }
    if ax < p.half_width {
        return Ok(0.0);
    }
    Ok(p.beta0[axis - 1] * powu((ax - p.half_width) / p.thickness, p.order))
}

/// `β₀ = c_max (n + 1) ln(1/R) / (2d)`.
pub fn beta0_from_reflection(reflection: f64, order: u32, thickness: f64, c_max: f64) -> Result<f64> {
    if !(reflection > 0.0 && reflection <= 1.0) {
        return Err(Error::ReflectionOutOfRange(reflection));
    }
    if order < 1 {
        return Err(Error::InvalidProfile("order must be at least 1"));
    }
    if !(thickness > 0.0) {
        return Err(Error::NotPositive { what: "PML thickness", value: thickness });
    }
    if !(c_max > 0.0) {
        return Err(Error::NotPositive { what: "c_max", value: c_max });
    }
    Ok(c_max * (order as f64 + 1.0) * log(1.0 / reflection) / (2.0 * thickness))
}

/// Every PML coefficient at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients {
    pub beta: [f64; 3],
    /// `β₁ + β₂ + β₃`
    pub a: f64,
    /// `β₁β₂ + β₂β₃ + β₃β₁`
    pub b: f64,
    /// `β₁β₂β₃`
    pub c: f64,
    /// `a − β_j − β_l`, multiplies `C_ijkl` (and `η_ijkl`).
    pub ctilde: [[f64; 3]; 3],
    /// `∏_{m≠l} β_m`, the finite form of `c/β_l`.
    pub cbreve: [f64; 3],
}

impl PointCoefficients {
    pub fn from_betas(beta: [f64; 3]) -> Self {
        let [b1, b2, b3] = beta;
        let a = b1 + b2 + b3;
        let mut ctilde = [[0.0; 3]; 3];
        for (j, row) in ctilde.iter_mut().enumerate() {
            for (l, f) in row.iter_mut().enumerate() {
                *f = a - (beta[j] + beta[l]);
            }
        }
        Self { beta, a, b: b1 * b2 + b2 * b3 + b3 * b1, c: b1 * b2 * b3, ctilde, cbreve: [b2 * b3, b1 * b3, b1 * b2] }
    }

    pub fn is_damped(&self) -> bool {
        self.a > 0.0
    }
}

/// Coefficient fields on a grid, stored as separable per-axis profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlCoefficientFields {
    axis_beta: [Vec<f64>; 3],
}

impl PmlCoefficientFields {
    /// All-zero fields (no absorption anywhere).
    pub fn zero(grid: &GridSpec) -> Self {
        let n = grid.dims();
        Self { axis_beta: [vec![0.0; n[0]], vec![0.0; n[1]], vec![0.0; n[2]]] }
    }

    /// `β_j` at grid index `i` along axis `j` (zero-based).
    pub fn axis_beta(&self, axis: usize) -> &[f64] {
        &self.axis_beta[axis]
    }

    #[inline]
    pub fn betas(&self, node: [usize; 3]) -> [f64; 3] {
        [self.axis_beta[0][node[0]], self.axis_beta[1][node[1]], self.axis_beta[2][node[2]]]
    }

    #[inline]
    pub fn at(&self, node: [usize; 3]) -> PointCoefficients {
        PointCoefficients::from_betas(self.betas(node))
    }

    /// True when no node carries damping.
    pub fn is_zero(&self) -> bool {
        self.axis_beta.iter().flatten().all(|&b| b == 0.0)
    }
}

/// Evaluate the damping profile on every grid node.
///
/// Nodes are classified by integer offset from the centre so the interface
/// `|x| = x₀` and the outer edge are hit exactly.
pub fn build_coefficient_fields(grid: &GridSpec, p: &PmlProfile) -> Result<PmlCoefficientFields> {
    let h = grid.spacing();
    let tol = 1e-9 * h;
    if abs(p.half_width - grid.physical_half_width()) > tol {
        return Err(Error::GeometryMismatch("physical half width differs from the grid"));
    }
    if abs(p.thickness - grid.pml_thickness()) > tol {
        return Err(Error::GeometryMismatch("PML thickness differs from the grid collar"));
    }
    let m = grid.half_cells();
    let cells = grid.pml_cells() as f64;
    let dims = grid.dims();
    let mut axis_beta: [Vec<f64>; 3] = Default::default();
    for axis in 0..3 {
        axis_beta[axis] = (0..dims[axis])
            .map(|i| {
                let off = grid.offset(i).unsigned_abs();
                if off <= m {
                    0.0
                } else {
                    p.beta0[axis] * powu((off - m) as f64 / cells, p.order)
                }
            })
            .collect();
    }
    Ok(PmlCoefficientFields { axis_beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> PmlProfile {
        PmlProfile::new([10.0, 20.0, 30.0], 2, 0.004, 0.01).unwrap()
    }

    #[test]
    fn beta_profile_examples() {
        let p = profile();
        assert_eq!(beta_profile(1, 0.0, &p).unwrap(), 0.0);
        assert!((beta_profile(1, 0.014, &p).unwrap() - 10.0).abs() < 1e-12);
        assert!((beta_profile(2, -0.012, &p).unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(beta_profile(1, 0.02, &p), Err(Error::OutsideDomain { .. })));
        assert!(matches!(beta_profile(4, 0.0, &p), Err(Error::AxisOutOfRange(4))));
    }

    #[test]
    fn beta_profile_is_monotone() {
        let p = profile();
        let mut last = 0.0;
        for i in 0..=140 {
            let b = beta_profile(3, i as f64 * 1e-4, &p).unwrap();
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn beta0_design_examples() {
        assert_eq!(beta0_from_reflection(1.0, 2, 2e-3, 3000.0).unwrap(), 0.0);
        let b = beta0_from_reflection(1e-3, 2, 2e-3, 3000.0).unwrap();
        let expected = 9000.0 * 1000f64.ln() / 0.004;
        assert!((b - expected).abs() / expected < 1e-14);
        assert!((b - 1.5542e7).abs() / 1.5542e7 < 1e-4);
        let b2 = beta0_from_reflection(1e-3, 2, 4e-3, 3000.0).unwrap();
        assert!((b2 - b / 2.0).abs() / b < 1e-14);
        assert!(beta0_from_reflection(0.0, 2, 2e-3, 3000.0).is_err());
        assert!(beta0_from_reflection(1.5, 2, 2e-3, 3000.0).is_err());
    }

    #[test]
    fn elementary_symmetric_coefficients() {
        let pc = PointCoefficients::from_betas([1.0, 2.0, 3.0]);
        assert_eq!((pc.a, pc.b, pc.c), (6.0, 11.0, 6.0));
        assert_eq!(pc.cbreve, [6.0, 3.0, 2.0]);
    }

    #[test]
    fn face_region_factors() {
        let b1 = 7.0;
        let pc = PointCoefficients::from_betas([b1, 0.0, 0.0]);
        assert_eq!(pc.ctilde[0][0], -b1);
        assert_eq!(pc.ctilde[1][0], 0.0);
        assert_eq!(pc.ctilde[1][1], b1);
        assert_eq!(pc.cbreve, [0.0; 3]);
    }

    #[test]
    fn zero_damping_fields() {
        let pc = PointCoefficients::from_betas([0.0; 3]);
        assert_eq!((pc.a, pc.b, pc.c), (0.0, 0.0, 0.0));
        assert!(pc.ctilde.iter().flatten().all(|&x| x == 0.0));
        assert!(!pc.is_damped());
    }

    #[test]
    fn profile_validation() {
        assert!(PmlProfile::new([-1.0, 0.0, 0.0], 2, 1.0, 1.0).is_err());
        assert!(PmlProfile::new([1.0; 3], 0, 1.0, 1.0).is_err());
        assert!(PmlProfile::new([1.0; 3], 2, 0.0, 1.0).is_err());
        assert!(PmlProfile::new([1.0; 3], 2, 1.0, 0.0).is_err());
        assert_eq!(profile().alpha(), [1.0; 3]);
    }
}
