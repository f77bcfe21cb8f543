//! Uniform cubic grid, field storage, and the per-node material map.
//!
//! Nodes are numbered x-fastest: `index = ix + nx·(iy + ny·iz)`. The origin
//! is the centre node; the physical cube spans `half_cells` cells on each
//! side of it and the PML collar adds `pml_cells` more.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::materials::{nonzero_pattern, FullTensor, Material};
use crate::math::abs;

/// Grid geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    spacing: f64,
    half_cells: usize,
    pml_cells: usize,
}

impl GridSpec {
    /// `physical_half_width` is rounded to a whole number of cells.
    pub fn new(spacing: f64, physical_half_width: f64, pml_cells: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid("spacing must be positive and finite"));
        }
        if !(physical_half_width.is_finite() && physical_half_width > 0.0) {
            return Err(Error::InvalidGrid("physical half width must be positive and finite"));
        }
        let half_cells = libm::round(physical_half_width / spacing) as usize;
        Self::from_cells(spacing, half_cells, pml_cells)
    }

    pub fn from_cells(spacing: f64, half_cells: usize, pml_cells: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid("spacing must be positive and finite"));
        }
        if half_cells < 1 {
            return Err(Error::InvalidGrid("physical domain must span at least one cell"));
        }
        if pml_cells < 1 {
            return Err(Error::InvalidGrid("PML must be at least one cell thick"));
        }
        Ok(Self { spacing, half_cells, pml_cells })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half_cells(&self) -> usize {
        self.half_cells
    }

    pub fn pml_cells(&self) -> usize {
        self.pml_cells
    }

    /// Effective `x₀` after rounding to the grid.
    pub fn physical_half_width(&self) -> f64 {
        self.half_cells as f64 * self.spacing
    }

    pub fn pml_thickness(&self) -> f64 {
        self.pml_cells as f64 * self.spacing
    }

    /// Index of the origin along each axis.
    pub fn center(&self) -> usize {
        self.half_cells + self.pml_cells
    }

    pub fn dims(&self) -> [usize; 3] {
        let n = 2 * self.center() + 1;
        [n, n, n]
    }

    pub fn node_count(&self) -> usize {
        let d = self.dims();
        d[0] * d[1] * d[2]
    }

    /// Flat strides for +1 along x, y, z.
    pub fn strides(&self) -> [usize; 3] {
        let d = self.dims();
        [1, d[0], d[0] * d[1]]
    }

    #[inline]
    pub fn index(&self, node: [usize; 3]) -> usize {
        let d = self.dims();
        node[0] + d[0] * (node[1] + d[1] * node[2])
    }

    pub fn node_of(&self, index: usize) -> [usize; 3] {
        let d = self.dims();
        [index % d[0], (index / d[0]) % d[1], index / (d[0] * d[1])]
    }

    /// Signed cell offset from the centre.
    #[inline]
    pub fn offset(&self, i: usize) -> isize {
        i as isize - self.center() as isize
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.offset(i) as f64 * self.spacing
    }

    pub fn position(&self, node: [usize; 3]) -> [f64; 3] {
        [self.coord(node[0]), self.coord(node[1]), self.coord(node[2])]
    }

    /// Nearest node to a point, if it lies on the grid.
    pub fn nearest_node(&self, x: [f64; 3]) -> Option<[usize; 3]> {
        let mut node = [0; 3];
        let n = self.dims();
        for a in 0..3 {
            let i = libm::round(x[a] / self.spacing) as isize + self.center() as isize;
            if i < 0 || i as usize >= n[a] {
                return None;
            }
            node[a] = i as usize;
        }
        Some(node)
    }

    /// Closed physical cube `|x_j| ≤ x₀`.
    pub fn is_physical(&self, node: [usize; 3]) -> bool {
        node.iter().all(|&i| self.offset(i).unsigned_abs() <= self.half_cells)
    }

    /// Outermost node layer (held at zero displacement).
    pub fn is_boundary(&self, node: [usize; 3]) -> bool {
        let n = self.dims();
        (0..3).any(|a| node[a] == 0 || node[a] + 1 == n[a])
    }

    /// Same spacing and collar with `extra` cells added to the physical half width.
    pub fn enlarged(&self, extra: usize) -> Self {
        Self { half_cells: self.half_cells + extra, ..*self }
    }

    /// Same physical extent with a different collar.
    pub fn with_pml_cells(&self, pml_cells: usize) -> Result<Self> {
        Self::from_cells(self.spacing, self.half_cells, pml_cells)
    }
}

/// `h₀ = c_min / (N f₀)`.
pub fn mesh_size(c_min: f64, nodes_per_wavelength: f64, f0: f64) -> Result<f64> {
    for (what, value) in [("c_min", c_min), ("nodes per wavelength", nodes_per_wavelength), ("f0", f0)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NotPositive { what, value });
        }
    }
    Ok(c_min / (nodes_per_wavelength * f0))
}

/// Displacement, velocity, displacement history and the nine auxiliary
/// fields, one value per node per component.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: [Vec<f64>; 3],
    pub v: [Vec<f64>; 3],
    /// `U_i = ∫₀ᵗ u_i dτ`
    pub history: [Vec<f64>; 3],
    /// `w_ij` stored at `3·i + j`.
    pub aux: [Vec<f64>; 9],
}

pub const COMPONENT_NAMES: [&str; 18] = [
    "u1", "u2", "u3", "v1", "v2", "v3", "U1", "U2", "U3", "w11", "w12", "w13", "w21", "w22", "w23", "w31", "w32", "w33",
];

impl FieldState {
    pub fn zeros(grid: &GridSpec) -> Self {
        let n = grid.node_count();
        Self {
            u: core::array::from_fn(|_| vec![0.0; n]),
            v: core::array::from_fn(|_| vec![0.0; n]),
            history: core::array::from_fn(|_| vec![0.0; n]),
            aux: core::array::from_fn(|_| vec![0.0; n]),
        }
    }

    pub fn node_count(&self) -> usize {
        self.u[0].len()
    }

    /// All 18 components in the order of [`COMPONENT_NAMES`].
    pub fn components(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.u.iter().chain(self.v.iter()).chain(self.history.iter()).chain(self.aux.iter())
    }

    pub fn components_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.u.iter_mut().chain(self.v.iter_mut()).chain(self.history.iter_mut()).chain(self.aux.iter_mut())
    }

    /// Multiply every component by `alpha`.
    pub fn scale(&mut self, alpha: f64) {
        for c in self.components_mut() {
            for x in c.iter_mut() {
                *x *= alpha;
            }
        }
    }

    /// First non-finite entry as `(component name, flat index)`.
    pub fn first_non_finite(&self) -> Option<(&'static str, usize)> {
        for (name, c) in COMPONENT_NAMES.iter().zip(self.components()) {
            if let Some(i) = c.iter().position(|x| !x.is_finite()) {
                return Some((name, i));
            }
        }
        None
    }

    /// `max_node ‖u‖₂`.
    pub fn max_displacement(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.node_count() {
            let s = self.u[0][i] * self.u[0][i] + self.u[1][i] * self.u[1][i] + self.u[2][i] * self.u[2][i];
            m = m.max(s);
        }
        libm::sqrt(m)
    }

    /// Largest absolute difference of any displacement component.
    pub fn max_displacement_difference(&self, other: &Self) -> f64 {
        let mut m = 0.0_f64;
        for k in 0..3 {
            for (a, b) in self.u[k].iter().zip(other.u[k].iter()) {
                m = m.max(abs(a - b));
            }
        }
        m
    }
}

pub(crate) struct Medium {
    pub(crate) material: Material,
    pub(crate) density: f64,
    pub(crate) stiffness: FullTensor,
    pub(crate) viscosity: FullTensor,
}

impl Medium {
    fn new(material: Material) -> Self {
        let stiffness = *material.stiffness().full();
        let viscosity = material.viscosity().map(|v| *v.full()).unwrap_or([[[[0.0; 3]; 3]; 3]; 3]);
        Self { density: material.density(), stiffness, viscosity, material }
    }
}

/// Material assignment over the grid: a small table of media plus an
/// optional per-node index into it.
pub struct MaterialField {
    media: Vec<Medium>,
    index: Option<Vec<u16>>,
    pub(crate) stiffness_terms: Vec<[u8; 4]>,
    pub(crate) viscosity_terms: Vec<[u8; 4]>,
    /// Folded kernels `(stiffness, viscosity)` when the medium is uniform.
    pub(crate) uniform_kernels: Option<(PairKernel, PairKernel)>,
}

/// Index pairs `(j, l)`, `j ≤ l`, of the second derivatives `∂_j ∂_l`.
pub(crate) const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// A homogeneous tensor folded onto second derivatives:
/// `Σ_jl T_ijkl ∂_j ∂_l f_k = Σ_p k[i][k][p] D_p f_k` over [`PAIRS`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PairKernel {
    pub(crate) k: [[[f64; 6]; 3]; 3],
}

impl PairKernel {
    fn fold(t: &FullTensor) -> Self {
        let mut k = [[[0.0; 6]; 3]; 3];
        for (i, ti) in t.iter().enumerate() {
            for (j, tij) in ti.iter().enumerate() {
                for (kk, tijk) in tij.iter().enumerate() {
                    for (l, &c) in tijk.iter().enumerate() {
                        let p = PAIRS.iter().position(|&q| q == (j.min(l), j.max(l))).unwrap_or(0);
                        k[i][kk][p] += c;
                    }
                }
            }
        }
        Self { k }
    }
}

impl core::fmt::Debug for MaterialField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MaterialField")
            .field("materials", &self.media.len())
            .field("heterogeneous", &self.index.is_some())
            .finish()
    }
}

impl MaterialField {
    pub fn uniform(material: Material) -> Self {
        Self::build(vec![Medium::new(material)], None)
    }

    /// `index[node]` selects from `materials`; the index must cover every node.
    pub fn piecewise(grid: &GridSpec, materials: Vec<Material>, index: Vec<u16>) -> Result<Self> {
        if index.len() != grid.node_count() {
            return Err(Error::ShapeMismatch);
        }
        if materials.is_empty() || index.iter().any(|&i| i as usize >= materials.len()) {
            return Err(Error::ShapeMismatch);
        }
        Ok(Self::build(materials.into_iter().map(Medium::new).collect(), Some(index)))
    }

    fn build(media: Vec<Medium>, index: Option<Vec<u16>>) -> Self {
        let stiffness_terms = nonzero_pattern(media.iter().map(|m| &m.stiffness));
        let viscosity_terms = nonzero_pattern(media.iter().map(|m| &m.viscosity));
        let uniform_kernels = match (&index, media.as_slice()) {
            (None, [m]) => Some((PairKernel::fold(&m.stiffness), PairKernel::fold(&m.viscosity))),
            _ => None,
        };
        Self { media, index, stiffness_terms, viscosity_terms, uniform_kernels }
    }

    #[inline]
    pub(crate) fn medium(&self, idx: usize) -> &Medium {
        match &self.index {
            None => &self.media[0],
            Some(ix) => &self.media[ix[idx] as usize],
        }
    }

    pub fn material_at(&self, idx: usize) -> &Material {
        &self.medium(idx).material
    }

    #[inline]
    pub fn density_at(&self, idx: usize) -> f64 {
        self.medium(idx).density
    }

    pub fn materials(&self) -> impl Iterator<Item = &Material> {
        self.media.iter().map(|m| &m.material)
    }

    pub fn is_viscous(&self) -> bool {
        !self.viscosity_terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_follow_rounding_rule() {
        let g = GridSpec::new(1e-4, 1.0e-3, 4).unwrap();
        assert_eq!(g.half_cells(), 10);
        assert_eq!(g.dims(), [29, 29, 29]);
        assert_eq!(g.center(), 14);
        assert_eq!(g.coord(14), 0.0);
        assert!((g.pml_thickness() - 4e-4).abs() < 1e-18);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(GridSpec::new(0.0, 1.0, 4).is_err());
        assert!(GridSpec::new(1.0, 1.0, 0).is_err());
        assert!(GridSpec::new(1.0, 0.2, 4).is_err());
    }

    #[test]
    fn mesh_size_examples() {
        assert!((mesh_size(2000.0, 10.0, 1e6).unwrap() - 2.0e-4).abs() < 1e-18);
        assert!((mesh_size(1000.0, 10.0, 1e6).unwrap() - 1.0e-4).abs() < 1e-18);
        assert!(mesh_size(0.0, 10.0, 1e6).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::from_cells(1.0, 3, 2).unwrap();
        for idx in [0, 17, 200, g.node_count() - 1] {
            assert_eq!(g.index(g.node_of(idx)), idx);
        }
        assert!(g.is_boundary([0, 5, 5]));
        assert!(!g.is_boundary([1, 5, 5]));
        assert!(g.is_physical([g.center() + 3, g.center(), g.center() - 3]));
        assert!(!g.is_physical([g.center() + 4, g.center(), g.center()]));
    }

    #[test]
    fn zero_state_is_quiet() {
        let g = GridSpec::from_cells(1.0, 2, 1).unwrap();
        let s = FieldState::zeros(&g);
        assert_eq!(s.components().count(), 18);
        assert_eq!(s.max_displacement(), 0.0);
        assert!(s.first_non_finite().is_none());
    }
}
