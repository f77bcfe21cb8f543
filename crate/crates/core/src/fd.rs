//! Second-order spatial operators for the PML system.
//!
//! The divergence of the stress uses flux form: pure second derivatives
//! `∂_j(C ∂_j u)` take the compact three-point stencil with the stiffness
//! averaged onto the half node, mixed terms `∂_j(C ∂_l u)` nest two central
//! differences, and the auxiliary stresses `w_ij` are differenced centrally.

use crate::error::{Error, Result};
use crate::grid::{FieldState, GridSpec, MaterialField, PairKernel, PAIRS};
use crate::pml::{PmlCoefficientFields, PointCoefficients};

/// Precomputed strides and spacing factors for one grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub(crate) stride: [usize; 3],
    inv_h2: f64,
    inv_4h2: f64,
    inv_2h: f64,
}

impl Stencil {
    pub(crate) fn new(grid: &GridSpec) -> Self {
        let h = grid.spacing();
        Self { stride: grid.strides(), inv_h2: 1.0 / (h * h), inv_4h2: 1.0 / (4.0 * h * h), inv_2h: 1.0 / (2.0 * h) }
    }

    /// `∂_j (T_ijkl ∂_l f_k)` summed over the given non-zero terms, where `T`
    /// is either the stiffness or the viscosity of each medium.
    #[inline(always)]
    fn tensor_divergence<const VISCOUS: bool>(
        &self,
        f: &[alloc::vec::Vec<f64>; 3],
        media: &MaterialField,
        terms: &[[u8; 4]],
        idx: usize,
        out: &mut [f64; 3],
    ) {
        let tensor = |at: usize, i: usize, j: usize, k: usize, l: usize| {
            let m = media.medium(at);
            if VISCOUS {
                m.viscosity[i][j][k][l]
            } else {
                m.stiffness[i][j][k][l]
            }
        };
        for t in terms {
            let (i, j, k, l) = (t[0] as usize, t[1] as usize, t[2] as usize, t[3] as usize);
            let fk = &f[k];
            let sj = self.stride[j];
            if j == l {
                let c0 = tensor(idx, i, j, k, l);
                let cp = 0.5 * (c0 + tensor(idx + sj, i, j, k, l));
                let cm = 0.5 * (c0 + tensor(idx - sj, i, j, k, l));
                out[i] += (cp * (fk[idx + sj] - fk[idx]) - cm * (fk[idx] - fk[idx - sj])) * self.inv_h2;
            } else {
                let sl = self.stride[l];
                let p = idx + sj;
                let m = idx - sj;
                out[i] += (tensor(p, i, j, k, l) * (fk[p + sl] - fk[p - sl])
                    - tensor(m, i, j, k, l) * (fk[m + sl] - fk[m - sl]))
                    * self.inv_4h2;
            }
        }
    }

    /// `Σ_jl T_ijkl ∂_j ∂_l f_k` for a homogeneous tensor.
    #[inline(always)]
    fn kernel_divergence(&self, f: &[alloc::vec::Vec<f64>; 3], kern: &PairKernel, idx: usize, out: &mut [f64; 3]) {
        for (k, fk) in f.iter().enumerate() {
            let f0 = fk[idx];
            let mut d = [0.0; 6];
            for (dp, &(j, l)) in d.iter_mut().zip(PAIRS.iter()) {
                let sj = self.stride[j];
                *dp = if j == l {
                    (fk[idx + sj] - 2.0 * f0 + fk[idx - sj]) * self.inv_h2
                } else {
                    let sl = self.stride[l];
                    (fk[idx + sj + sl] - fk[idx + sj - sl] - fk[idx - sj + sl] + fk[idx - sj - sl]) * self.inv_4h2
                };
            }
            for (o, row) in out.iter_mut().zip(kern.k.iter()) {
                let c = &row[k];
                *o += c[0] * d[0] + c[1] * d[1] + c[2] * d[2] + c[3] * d[3] + c[4] * d[4] + c[5] * d[5];
            }
        }
    }

    /// Divergence of the total flux `C∇u + η∇v + w` at an interior node.
    #[inline]
    pub(crate) fn divergence(
        &self,
        u: &[alloc::vec::Vec<f64>; 3],
        velocity: Option<&[alloc::vec::Vec<f64>; 3]>,
        aux: Option<&[alloc::vec::Vec<f64>; 9]>,
        media: &MaterialField,
        idx: usize,
    ) -> [f64; 3] {
        let mut out = [0.0; 3];
        match &media.uniform_kernels {
            Some((stiff, visc)) => {
                self.kernel_divergence(u, stiff, idx, &mut out);
                if let Some(v) = velocity {
                    self.kernel_divergence(v, visc, idx, &mut out);
                }
            }
            None => {
                self.tensor_divergence::<false>(u, media, &media.stiffness_terms, idx, &mut out);
                if let Some(v) = velocity {
                    self.tensor_divergence::<true>(v, media, &media.viscosity_terms, idx, &mut out);
                }
            }
        }
        if let Some(w) = aux {
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..3 {
                    let s = self.stride[j];
                    let wij = &w[3 * i + j];
                    acc += wij[idx + s] - wij[idx - s];
                }
                *o += acc * self.inv_2h;
            }
        }
        out
    }

    /// Central-difference gradient `g[k][l] = ∂_l f_k` of a field given by a
    /// reader `f(k, idx)`.
    #[inline(always)]
    pub(crate) fn gradient(&self, f: impl Fn(usize, usize) -> f64, idx: usize) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for (k, row) in g.iter_mut().enumerate() {
            for (l, gl) in row.iter_mut().enumerate() {
                let s = self.stride[l];
                *gl = (f(k, idx + s) - f(k, idx - s)) * self.inv_2h;
            }
        }
        g
    }

    /// Right-hand side of the auxiliary equations, without the `−β_j w_ij`
    /// relaxation, from precomputed gradients of `u`, `U` and (viscous) `v`.
    #[inline]
    pub(crate) fn aux_source(
        media: &MaterialField,
        idx: usize,
        pc: &PointCoefficients,
        grad_u: &[[f64; 3]; 3],
        grad_history: &[[f64; 3]; 3],
        grad_v: Option<&[[f64; 3]; 3]>,
    ) -> [[f64; 3]; 3] {
        let m = media.medium(idx);
        let mut g = [[0.0; 3]; 3];
        for t in &media.stiffness_terms {
            let (i, j, k, l) = (t[0] as usize, t[1] as usize, t[2] as usize, t[3] as usize);
            let c = m.stiffness[i][j][k][l];
            g[i][j] += c * (pc.ctilde[j][l] * grad_u[k][l] + pc.cbreve[l] * grad_history[k][l]);
        }
        if let Some(gv) = grad_v {
            for t in &media.viscosity_terms {
                let (i, j, k, l) = (t[0] as usize, t[1] as usize, t[2] as usize, t[3] as usize);
                let eta = m.viscosity[i][j][k][l];
                g[i][j] += eta * (pc.ctilde[j][l] * gv[k][l] + pc.cbreve[l] * grad_u[k][l]);
            }
        }
        g
    }
}

fn require_halo(grid: &GridSpec, node: [usize; 3]) -> Result<()> {
    let n = grid.dims();
    if (0..3).any(|a| node[a] == 0 || node[a] + 1 >= n[a]) {
        return Err(Error::NoHalo { node });
    }
    Ok(())
}

fn require_shape(grid: &GridSpec, state: &FieldState) -> Result<()> {
    if state.node_count() != grid.node_count() {
        return Err(Error::ShapeMismatch);
    }
    Ok(())
}

/// `∂_j (Σ_kl C_ijkl ∂_l u_k + η_ijkl ∂_l v_k + w_ij)` at an interior node (N/m³).
///
/// The viscous term is included whenever the medium carries a viscosity.
/// The coefficient fields do not enter this operator directly; the PML acts
/// through `w`.
pub fn elastic_flux_divergence(
    grid: &GridSpec,
    state: &FieldState,
    media: &MaterialField,
    node: [usize; 3],
) -> Result<[f64; 3]> {
    require_shape(grid, state)?;
    require_halo(grid, node)?;
    let st = Stencil::new(grid);
    let v = media.is_viscous().then_some(&state.v);
    Ok(st.divergence(&state.u, v, Some(&state.aux), media, grid.index(node)))
}

/// `Σ_kl (C̃_ijkl ∂_l u_k + C̆_ijkl ∂_l U_k)` plus, for viscous media,
/// `η̃_ijkl ∂_l v_k + η̆_ijkl ∂_l u_k` (Pa/s). Zero wherever all `β` vanish.
pub fn history_gradient_term(
    grid: &GridSpec,
    state: &FieldState,
    media: &MaterialField,
    coeffs: &PmlCoefficientFields,
    node: [usize; 3],
) -> Result<[[f64; 3]; 3]> {
    require_shape(grid, state)?;
    let pc = coeffs.at(node);
    if !pc.is_damped() {
        return Ok([[0.0; 3]; 3]);
    }
    require_halo(grid, node)?;
    let st = Stencil::new(grid);
    let idx = grid.index(node);
    let gu = st.gradient(|k, i| state.u[k][i], idx);
    let gh = st.gradient(|k, i| state.history[k][i], idx);
    let gv = media.is_viscous().then(|| st.gradient(|k, i| state.v[k][i], idx));
    Ok(Stencil::aux_source(media, idx, &pc, &gu, &gh, gv.as_ref()))
}
