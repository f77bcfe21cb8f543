//! Elasticity and viscosity tensors, media, and Christoffel wave-speed analysis.
//!
//! Tensors are stored as symmetric 6×6 Voigt matrices with the pair map
//! 11→1, 22→2, 33→3, 23→4, 13→5, 12→6. Entries are raw stiffnesses (no
//! factor-of-two strain scaling), so `C_ijkl` is read straight out of the
//! matrix by [`voigt_pair`].

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, sqrt, symmetric_eigenvalues};

/// Smallest-to-largest eigenvalue ratio below which a stiffness matrix is
/// treated as singular.
pub const DEFINITENESS_TOLERANCE: f64 = 1e-9;

/// Full fourth-order tensor, zero-based indices `[i][j][k][l]`.
pub type FullTensor = [[[[f64; 3]; 3]; 3]; 3];

const VOIGT: [[usize; 3]; 3] = [[0, 5, 4], [5, 1, 3], [4, 3, 2]];
const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Voigt index (zero-based) of the symmetric index pair `(i, j)` (zero-based).
#[inline]
pub fn voigt_pair(i: usize, j: usize) -> usize {
    VOIGT[i][j]
}

fn expand(voigt: &[[f64; 6]; 6]) -> FullTensor {
    let mut full = [[[[0.0; 3]; 3]; 3]; 3];
    for (i, fi) in full.iter_mut().enumerate() {
        for (j, fij) in fi.iter_mut().enumerate() {
            for (k, fijk) in fij.iter_mut().enumerate() {
                for (l, c) in fijk.iter_mut().enumerate() {
                    *c = voigt[VOIGT[i][j]][VOIGT[k][l]];
                }
            }
        }
    }
    full
}

/// Collapse a full tensor back to its Voigt matrix.
pub fn full_to_voigt(full: &FullTensor) -> [[f64; 6]; 6] {
    let mut voigt = [[0.0; 6]; 6];
    for (p, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        for (q, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
            voigt[p][q] = full[i][j][k][l];
        }
    }
    voigt
}

fn check_symmetric(voigt: &[[f64; 6]; 6]) -> Result<()> {
    for p in 0..6 {
        for q in 0..6 {
            if !voigt[p][q].is_finite() {
                return Err(Error::NonFinite { what: "voigt entry" });
            }
            if voigt[p][q] != voigt[q][p] {
                return Err(Error::NotSymmetric { row: p + 1, col: q + 1 });
            }
        }
    }
    Ok(())
}

fn upper_triangle_to_voigt(entries: &[f64; 21]) -> [[f64; 6]; 6] {
    let mut voigt = [[0.0; 6]; 6];
    let mut n = 0;
    for p in 0..6 {
        for q in p..6 {
            voigt[p][q] = entries[n];
            voigt[q][p] = entries[n];
            n += 1;
        }
    }
    voigt
}

fn component_checked(full: &FullTensor, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
    let ok = |x: usize| (1..=3).contains(&x);
    if !(ok(i) && ok(j) && ok(k) && ok(l)) {
        return Err(Error::IndexOutOfRange { i, j, k, l });
    }
    Ok(full[i - 1][j - 1][k - 1][l - 1])
}

/// Elasticity tensor `C_ijkl` (Pa).
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessTensor {
    voigt: [[f64; 6]; 6],
    full: FullTensor,
}

impl StiffnessTensor {
    /// Accepts any finite symmetric Voigt matrix. Definiteness is checked
    /// separately by [`StiffnessTensor::check_positive_definite`] so that
    /// degenerate tensors (e.g. the zero tensor) can still be built.
    pub fn from_voigt(voigt: [[f64; 6]; 6]) -> Result<Self> {
        check_symmetric(&voigt)?;
        Ok(Self { voigt, full: expand(&voigt) })
    }

    /// Build from the 21 upper-triangle entries, row-major
    /// (`c11, c12, …, c16, c22, …, c66`).
    pub fn from_upper_triangle(entries: &[f64; 21]) -> Result<Self> {
        Self::from_voigt(upper_triangle_to_voigt(entries))
    }

    /// Orthorhombic tensor from its nine independent constants.
    #[allow(clippy::too_many_arguments)]
    pub fn orthorhombic(
        c11: f64,
        c22: f64,
        c33: f64,
        c44: f64,
        c55: f64,
        c66: f64,
        c12: f64,
        c13: f64,
        c23: f64,
    ) -> Result<Self> {
        let mut v = [[0.0; 6]; 6];
        v[0][0] = c11;
        v[1][1] = c22;
        v[2][2] = c33;
        v[3][3] = c44;
        v[4][4] = c55;
        v[5][5] = c66;
        v[0][1] = c12;
        v[1][0] = c12;
        v[0][2] = c13;
        v[2][0] = c13;
        v[1][2] = c23;
        v[2][1] = c23;
        Self::from_voigt(v)
    }

    pub fn voigt(&self) -> &[[f64; 6]; 6] {
        &self.voigt
    }

    /// The 21 upper-triangle entries, row-major.
    pub fn upper_triangle(&self) -> [f64; 21] {
        upper_triangle(&self.voigt)
    }

    /// Zero-based full tensor.
    pub fn full(&self) -> &FullTensor {
        &self.full
    }

    /// `C_ijkl` with one-based indices, as written in index notation.
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
        component_checked(&self.full, i, j, k, l)
    }

    /// Ascending eigenvalues of the Voigt matrix.
    pub fn voigt_eigenvalues(&self) -> [f64; 6] {
        symmetric_eigenvalues(&self.voigt)
    }

    pub fn check_positive_definite(&self) -> Result<()> {
        let eig = self.voigt_eigenvalues();
        let max = eig[5];
        let ratio = if max > 0.0 { eig[0] / max } else { 0.0 };
        if max > 0.0 && eig[0] > DEFINITENESS_TOLERANCE * max {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite { what: "stiffness tensor", ratio })
        }
    }
}

/// Kelvin–Voigt viscosity tensor `η_ijkl` (Pa·s).
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityTensor {
    voigt: [[f64; 6]; 6],
    full: FullTensor,
}

impl ViscosityTensor {
    /// Symmetric, positive semi-definite Voigt matrix; zero is allowed.
    pub fn from_voigt(voigt: [[f64; 6]; 6]) -> Result<Self> {
        check_symmetric(&voigt)?;
        let eig = symmetric_eigenvalues(&voigt);
        let scale = abs(eig[0]).max(abs(eig[5]));
        if eig[0] < -DEFINITENESS_TOLERANCE * scale {
            return Err(Error::NotPositiveSemiDefinite { what: "viscosity tensor", min_eigenvalue: eig[0] });
        }
        Ok(Self { voigt, full: expand(&voigt) })
    }

    pub fn from_upper_triangle(entries: &[f64; 21]) -> Result<Self> {
        Self::from_voigt(upper_triangle_to_voigt(entries))
    }

    /// `eta` times the 6×6 identity.
    pub fn scaled_identity(eta: f64) -> Result<Self> {
        let mut v = [[0.0; 6]; 6];
        for (p, row) in v.iter_mut().enumerate() {
            row[p] = eta;
        }
        Self::from_voigt(v)
    }

    pub fn voigt(&self) -> &[[f64; 6]; 6] {
        &self.voigt
    }

    pub fn upper_triangle(&self) -> [f64; 21] {
        upper_triangle(&self.voigt)
    }

    pub fn full(&self) -> &FullTensor {
        &self.full
    }

    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
        component_checked(&self.full, i, j, k, l)
    }

    /// Largest eigenvalue of the Voigt matrix.
    pub fn max_eigenvalue(&self) -> f64 {
        symmetric_eigenvalues(&self.voigt)[5]
    }

    /// A copy with every entry multiplied by `factor` (`factor >= 0`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut v = self.voigt;
        for row in v.iter_mut() {
            for x in row.iter_mut() {
                *x *= factor;
            }
        }
        Self::from_voigt(v)
    }
}

fn upper_triangle(voigt: &[[f64; 6]; 6]) -> [f64; 21] {
    let mut out = [0.0; 21];
    let mut n = 0;
    for p in 0..6 {
        for q in p..6 {
            out[n] = voigt[p][q];
            n += 1;
        }
    }
    out
}

/// Isotropic tensor `C_ijkl = λ δ_ij δ_kl + μ (δ_ik δ_jl + δ_il δ_jk)`.
pub fn isotropic_stiffness(lambda: f64, mu: f64) -> Result<StiffnessTensor> {
    if !lambda.is_finite() || !mu.is_finite() {
        return Err(Error::NonFinite { what: "Lamé parameter" });
    }
    let mut v = [[0.0; 6]; 6];
    for p in 0..3 {
        for q in 0..3 {
            v[p][q] = if p == q { lambda + 2.0 * mu } else { lambda };
        }
        v[p + 3][p + 3] = mu;
    }
    StiffnessTensor::from_voigt(v)
}

/// `C_ijkl` with one-based indices.
pub fn voigt_expand(t: &StiffnessTensor, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
    t.component(i, j, k, l)
}

/// Density plus stiffness, with optional Kelvin–Voigt viscosity.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    density: f64,
    stiffness: StiffnessTensor,
    viscosity: Option<ViscosityTensor>,
}

impl Material {
    pub fn new(density: f64, stiffness: StiffnessTensor, viscosity: Option<ViscosityTensor>) -> Result<Self> {
        if !density.is_finite() {
            return Err(Error::NonFinite { what: "density" });
        }
        if density <= 0.0 {
            return Err(Error::NotPositive { what: "density", value: density });
        }
        stiffness.check_positive_definite()?;
        Ok(Self { density, stiffness, viscosity })
    }

    pub fn elastic(density: f64, stiffness: StiffnessTensor) -> Result<Self> {
        Self::new(density, stiffness, None)
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn stiffness(&self) -> &StiffnessTensor {
        &self.stiffness
    }

    pub fn viscosity(&self) -> Option<&ViscosityTensor> {
        self.viscosity.as_ref()
    }

    /// Same medium with the viscosity replaced (or removed).
    pub fn with_viscosity(&self, viscosity: Option<ViscosityTensor>) -> Self {
        Self { viscosity, ..self.clone() }
    }
}

/// Unit propagation direction of a plane-wave probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveProbe {
    direction: [f64; 3],
}

impl PlaneWaveProbe {
    /// Requires `‖n‖ = 1` within 1e-12.
    pub fn new(direction: [f64; 3]) -> Result<Self> {
        let norm = norm3(&direction);
        if !norm.is_finite() || abs(norm - 1.0) > 1e-12 {
            return Err(Error::NotUnitDirection { norm });
        }
        Ok(Self { direction })
    }

    /// Normalizes any non-zero vector.
    pub fn along(vector: [f64; 3]) -> Result<Self> {
        let norm = norm3(&vector);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotUnitDirection { norm });
        }
        Ok(Self { direction: [vector[0] / norm, vector[1] / norm, vector[2] / norm] })
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
}

/// `Γ_ik = Σ_jl C_ijkl n_j n_l`.
pub fn christoffel_matrix(full: &FullTensor, n: &[f64; 3]) -> [[f64; 3]; 3] {
    let mut gamma = [[0.0; 3]; 3];
    for (i, row) in gamma.iter_mut().enumerate() {
        for (k, g) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..3 {
                for l in 0..3 {
                    acc += full[i][j][k][l] * n[j] * n[l];
                }
            }
            *g = acc;
        }
    }
    gamma
}

/// Phase speeds (m/s, ascending) of the three plane-wave modes along the
/// probe direction.
pub fn christoffel_speeds(m: &Material, probe: &PlaneWaveProbe) -> Result<[f64; 3]> {
    let n = probe.direction();
    let gamma = christoffel_matrix(m.stiffness().full(), &n);
    let eig = symmetric_eigenvalues(&gamma);
    if !(eig[2] > 0.0 && eig[0] > DEFINITENESS_TOLERANCE * eig[2]) {
        return Err(Error::ChristoffelNotPositive { direction: n });
    }
    let rho = m.density();
    Ok([sqrt(eig[0] / rho), sqrt(eig[1] / rho), sqrt(eig[2] / rho)])
}

/// Quasi-uniform Fibonacci-sphere directions.
pub fn fibonacci_sphere(samples: usize) -> impl Iterator<Item = [f64; 3]> {
    // golden angle π(3 − √5)
    let golden = core::f64::consts::PI * (3.0 - sqrt(5.0));
    (0..samples).map(move |i| {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / samples as f64;
        let r = sqrt((1.0 - z * z).max(0.0));
        let phi = golden * i as f64;
        [r * crate::math::cos(phi), r * crate::math::sin(phi), z]
    })
}

/// `(c_min, c_max)` over a Fibonacci sampling of directions.
pub fn speed_bounds(m: &Material, samples: usize) -> Result<(f64, f64)> {
    if samples < 26 {
        return Err(Error::TooFewSamples(samples));
    }
    let mut c_min = f64::INFINITY;
    let mut c_max = 0.0_f64;
    for dir in fibonacci_sphere(samples) {
        let speeds = christoffel_speeds(m, &PlaneWaveProbe::along(dir)?)?;
        c_min = c_min.min(speeds[0]);
        c_max = c_max.max(speeds[2]);
    }
    Ok((c_min, c_max))
}

/// Olivine single-crystal constants at 25 °C in Pa
/// (c11, c22, c33, c44, c55, c66, c12, c13, c23).
pub const OLIVINE_CONSTANTS: [f64; 9] =
    [2.58e11, 1.66e11, 2.07e11, 0.45e11, 0.56e11, 0.58e11, 0.87e11, 0.95e11, 0.92e11];

/// Olivine density is not part of the measured constants; this is a
/// typical value for the mineral.
pub const OLIVINE_DENSITY: f64 = 3300.0;

pub fn olivine_stiffness() -> StiffnessTensor {
    let c = OLIVINE_CONSTANTS;
    StiffnessTensor::orthorhombic(c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8])
        .expect("olivine constants are finite and symmetric")
}

/// Sparse list of `(i, j, k, l)` (zero-based) where any of the given tensors
/// is non-zero.
pub(crate) fn nonzero_pattern<'a>(tensors: impl Iterator<Item = &'a FullTensor>) -> Vec<[u8; 4]> {
    let mut mask = [[[[false; 3]; 3]; 3]; 3];
    for t in tensors {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        if t[i][j][k][l] != 0.0 {
                            mask[i][j][k][l] = true;
                        }
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    if mask[i][j][k][l] {
                        out.push([i as u8, j as u8, k as u8, l as u8]);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kron(a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn isotropic_zero_case() {
        let t = isotropic_stiffness(0.0, 0.0).unwrap();
        assert!(t.voigt().iter().flatten().all(|&x| x == 0.0));
        assert!(t.check_positive_definite().is_err());
    }

    #[test]
    fn isotropic_direct_substitution() {
        let t = isotropic_stiffness(2e9, 1e9).unwrap();
        assert_eq!(t.voigt()[0][0], 4e9);
        assert_eq!(t.voigt()[0][1], 2e9);
        assert_eq!(t.voigt()[3][3], 1e9);
        assert_eq!(voigt_expand(&t, 1, 1, 1, 1).unwrap(), 4e9);
        assert_eq!(voigt_expand(&t, 1, 2, 1, 2).unwrap(), 1e9);
    }

    #[test]
    fn isotropic_expansion_matches_kronecker_form() {
        let (lambda, mu) = (2e9, 1e9);
        let t = isotropic_stiffness(lambda, mu).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let expected =
                            lambda * kron(i, j) * kron(k, l) + mu * (kron(i, k) * kron(j, l) + kron(i, l) * kron(j, k));
                        assert_eq!(t.full()[i][j][k][l], expected, "{i}{j}{k}{l}");
                    }
                }
            }
        }
    }

    #[test]
    fn isotropic_rejects_non_finite() {
        assert!(isotropic_stiffness(f64::NAN, 1.0).is_err());
        assert!(isotropic_stiffness(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn olivine_c1111() {
        let t = olivine_stiffness();
        assert_eq!(voigt_expand(&t, 1, 1, 1, 1).unwrap(), 2.58e11);
        assert_eq!(voigt_expand(&t, 2, 3, 3, 2).unwrap(), 0.45e11);
        assert!(t.check_positive_definite().is_ok());
    }

    #[test]
    fn index_out_of_range() {
        let t = olivine_stiffness();
        assert!(matches!(t.component(0, 1, 1, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(t.component(1, 1, 1, 4).is_err());
    }

    #[test]
    fn asymmetric_voigt_rejected() {
        let mut v = *olivine_stiffness().voigt();
        v[0][1] += 1.0;
        assert!(matches!(StiffnessTensor::from_voigt(v), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn one_negative_eigenvalue_rejected() {
        let mut v = [[0.0; 6]; 6];
        for (p, row) in v.iter_mut().enumerate() {
            row[p] = 1e9;
        }
        v[4][4] = -1e7;
        let t = StiffnessTensor::from_voigt(v).unwrap();
        assert!(matches!(t.check_positive_definite(), Err(Error::NotPositiveDefinite { .. })));
        assert!(Material::elastic(1000.0, t).is_err());
    }

    #[test]
    fn viscosity_allows_zero_rejects_negative() {
        assert!(ViscosityTensor::scaled_identity(0.0).is_ok());
        assert!(ViscosityTensor::scaled_identity(-1.0).is_err());
    }

    #[test]
    fn density_must_be_positive() {
        let t = isotropic_stiffness(2e9, 1e9).unwrap();
        assert!(matches!(Material::elastic(-1.0, t.clone()), Err(Error::NotPositive { what: "density", .. })));
        assert!(Material::elastic(0.0, t).is_err());
    }

    #[test]
    fn probe_requires_unit_direction() {
        assert!(PlaneWaveProbe::new([1.0, 0.0, 0.0]).is_ok());
        assert!(PlaneWaveProbe::new([1.0, 1.0, 0.0]).is_err());
        assert!(PlaneWaveProbe::along([0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn isotropic_speeds_closed_form() {
        let m = Material::elastic(1000.0, isotropic_stiffness(2e9, 1e9).unwrap()).unwrap();
        for dir in fibonacci_sphere(50) {
            let s = christoffel_speeds(&m, &PlaneWaveProbe::along(dir).unwrap()).unwrap();
            assert!((s[0] - 1000.0).abs() < 1e-9);
            assert!((s[1] - 1000.0).abs() < 1e-9);
            assert!((s[2] - 2000.0).abs() < 1e-9);
        }
        let (lo, hi) = speed_bounds(&m, 26).unwrap();
        assert!((lo - 1000.0).abs() < 1e-9 && (hi - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn olivine_fast_axis_speed() {
        let m = Material::elastic(OLIVINE_DENSITY, olivine_stiffness()).unwrap();
        let s = christoffel_speeds(&m, &PlaneWaveProbe::new([1.0, 0.0, 0.0]).unwrap()).unwrap();
        let expected = (2.58e11_f64 / 3300.0).sqrt();
        assert!((s[2] - expected).abs() / expected < 1e-13);
        assert!((expected - 8842.05).abs() < 0.01);
        let r = christoffel_speeds(&m, &PlaneWaveProbe::new([-1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(s, r);
    }

    #[test]
    fn too_few_samples() {
        let m = Material::elastic(OLIVINE_DENSITY, olivine_stiffness()).unwrap();
        assert_eq!(speed_bounds(&m, 25), Err(Error::TooFewSamples(25)));
    }

    #[test]
    fn fibonacci_points_are_unit() {
        for p in fibonacci_sphere(100) {
            assert!((norm3(&p) - 1.0).abs() < 1e-14);
        }
    }
}
