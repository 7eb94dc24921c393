//! Global residual, tangent, lumped mass and energies.
//!
//! Cell contributions are computed in parallel and scattered in leaf
//! order, so results do not depend on the number of threads.

use rayon::prelude::*;

use super::dofs::DofMap;
use super::element::{local_energies, local_system, CellState, Coefficients, LocalSystem};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::mesh::QuadMesh;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct System<T> {
    pub residual: Vec<T>,
    /// Displacement rows of the pressure/thermal load alone.
    pub load_u: Vec<T>,
    pub matrix: Option<CsrMatrix<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies<T> {
    pub mechanical: T,
    pub fracture: T,
}

fn cell_states<T: Real>(mesh: &QuadMesh<T>, dofs: &DofMap<T>, x: &[T], phi_tilde: &[T]) -> Result<Vec<CellState<T>>> {
    let u = dofs.u_nodal(mesh, x);
    let phi = dofs.phi_nodal(mesh, x);
    (0..mesh.n_leaves())
        .map(|l| {
            let h = mesh.leaf_size(l);
            if !(h > T::zero()) || !h.is_finite() {
                return Err(Error::DegenerateCell { cell: l, det: (h * h).to_f64_lossy() });
            }
            let vs = mesh.leaf_vertices(l);
            Ok(CellState {
                h,
                u: vs.map(|v| [u[2 * v], u[2 * v + 1]]),
                phi: vs.map(|v| phi[v]),
                phi_tilde: vs.map(|v| phi_tilde[v]),
            })
        })
        .collect()
}

/// Residual and (optionally) tangent at the unknown vector `x`, with the
/// displacement rows evaluated at the extrapolated nodal phase field
/// `phi_tilde`.
pub fn assemble<T: Real>(
    mesh: &QuadMesh<T>,
    dofs: &DofMap<T>,
    coeffs: &Coefficients<T>,
    x: &[T],
    phi_tilde: &[T],
    with_matrix: bool,
) -> Result<System<T>> {
    assert_eq!(x.len(), dofs.n_dofs());
    assert_eq!(phi_tilde.len(), mesh.n_vertices());
    let states = cell_states(mesh, dofs, x, phi_tilde)?;
    let locals: Vec<LocalSystem<T>> = states.par_iter().map(|st| local_system(st, coeffs, with_matrix)).collect();

    let n = dofs.n_dofs();
    let mut residual = vec![T::zero(); n];
    let mut load_u = vec![T::zero(); dofs.n_u()];
    let mut matrix = with_matrix.then(|| dofs.empty_matrix());
    for (l, ls) in locals.iter().enumerate() {
        let el = dofs.element(l);
        for a in 0..12 {
            for &(g, w) in &el[a] {
                residual[g] += w * ls.residual[a];
                if a < 8 {
                    load_u[g] += w * ls.load[a];
                }
            }
        }
        if let (Some(m), Some(lm)) = (matrix.as_mut(), ls.matrix.as_ref()) {
            for a in 0..12 {
                let cols = if a < 8 { 0..8 } else { 0..12 };
                for b in cols {
                    let v = lm[a][b];
                    if v == T::zero() {
                        continue;
                    }
                    for &(ga, wa) in &el[a] {
                        for &(gb, wb) in &el[b] {
                            m.add(ga, gb, wa * wb * v);
                        }
                    }
                }
            }
        }
    }
    Ok(System { residual, load_u, matrix })
}

/// Row sums of the phase-field mass matrix, indexed by phase unknown
/// (offset by `n_u` removed).
pub fn lumped_mass<T: Real>(mesh: &QuadMesh<T>, dofs: &DofMap<T>) -> Vec<T> {
    let mut b = vec![T::zero(); dofs.n_phi()];
    let quarter = T::lit(0.25);
    for l in 0..mesh.n_leaves() {
        let h = mesh.leaf_size(l);
        let el = dofs.element(l);
        for a in 8..12 {
            for &(g, w) in &el[a] {
                b[g - dofs.n_u()] += w * quarter * h * h;
            }
        }
    }
    b
}

pub fn energies<T: Real>(mesh: &QuadMesh<T>, dofs: &DofMap<T>, coeffs: &Coefficients<T>, x: &[T]) -> Result<Energies<T>> {
    let phi = dofs.phi_nodal(mesh, x);
    let states = cell_states(mesh, dofs, x, &phi)?;
    let parts: Vec<(T, T)> = states.par_iter().map(|st| local_energies(st, coeffs)).collect();
    let mut e = Energies { mechanical: T::zero(), fracture: T::zero() };
    for (m, f) in parts {
        e.mechanical += m;
        e.fracture += f;
    }
    Ok(e)
}
