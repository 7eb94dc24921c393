//! Numbering of the displacement and phase-field unknowns.
//!
//! Hanging vertices carry no unknowns; their values follow from their
//! parents. Displacements vanish on the whole boundary, so boundary
//! vertices carry only a phase-field unknown. Displacement unknowns come
//! first, interleaved `(ux, uy)` per vertex, followed by the phase field.

use crate::fem::sparse::CsrMatrix;
use crate::mesh::QuadMesh;
use crate::scalar::Real;

/// Weighted list of global unknowns that make up one local unknown.
pub type Expansion<T> = Vec<(usize, T)>;

#[derive(Debug, Clone)]
pub struct DofMap<T> {
    n_vertices: usize,
    n_u: usize,
    n_phi: usize,
    u_dof: Vec<Option<usize>>,
    phi_dof: Vec<Option<usize>>,
    /// Per leaf: 8 displacement expansions (corner-major, x then y) and 4
    /// phase-field expansions.
    elements: Vec<[Expansion<T>; 12]>,
    pattern: CsrMatrix<T>,
}

impl<T: Real> DofMap<T> {
    pub fn new(mesh: &QuadMesh<T>) -> Self {
        let nv = mesh.n_vertices();
        let mut u_dof = vec![None; nv];
        let mut phi_dof = vec![None; nv];
        let mut n_u = 0;
        for v in 0..nv {
            if !mesh.is_hanging(v) && !mesh.is_boundary_vertex(v) {
                u_dof[v] = Some(n_u);
                n_u += 2;
            }
        }
        let mut n_phi = 0;
        for v in 0..nv {
            if !mesh.is_hanging(v) {
                phi_dof[v] = Some(n_u + n_phi);
                n_phi += 1;
            }
        }
        let mut expansions: Vec<Vec<(usize, T)>> = Vec::with_capacity(nv);
        for v in 0..nv {
            expansions.push(mesh.vertex_expansion(v));
        }
        let elements = (0..mesh.n_leaves())
            .map(|l| {
                let corners = mesh.leaf_vertices(l);
                std::array::from_fn(|a| {
                    if a < 8 {
                        let (c, comp) = (a / 2, a % 2);
                        expansions[corners[c]]
                            .iter()
                            .filter_map(|&(r, w)| u_dof[r].map(|d| (d + comp, w)))
                            .collect()
                    } else {
                        expansions[corners[a - 8]].iter().map(|&(r, w)| (phi_dof[r].expect("regular vertex"), w)).collect()
                    }
                })
            })
            .collect::<Vec<[Expansion<T>; 12]>>();
        let n = n_u + n_phi;
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for el in &elements {
            for a in 0..12 {
                for &(ga, _) in &el[a] {
                    // displacement rows do not couple to the phase field
                    let cols = if a < 8 { 0..8 } else { 0..12 };
                    for b in cols {
                        rows[ga].extend(el[b].iter().map(|e| e.0));
                    }
                }
            }
        }
        let pattern = CsrMatrix::from_pattern(n, rows);
        Self { n_vertices: nv, n_u, n_phi, u_dof, phi_dof, elements, pattern }
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_dofs(&self) -> usize {
        self.n_u + self.n_phi
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn phi_range(&self) -> std::ops::Range<usize> {
        self.n_u..self.n_u + self.n_phi
    }

    pub fn element(&self, leaf: usize) -> &[Expansion<T>; 12] {
        &self.elements[leaf]
    }

    /// Zero matrix with the sparsity of the coupled tangent.
    pub fn empty_matrix(&self) -> CsrMatrix<T> {
        self.pattern.clone()
    }

    pub fn u_dof(&self, v: usize) -> Option<usize> {
        self.u_dof[v]
    }

    pub fn phi_dof(&self, v: usize) -> Option<usize> {
        self.phi_dof[v]
    }

    /// Build the unknown vector from nodal fields (hanging values are
    /// dropped, boundary displacements ignored).
    pub fn gather(&self, u_nodal: &[T], phi_nodal: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n_dofs()];
        for v in 0..self.n_vertices {
            if let Some(d) = self.u_dof[v] {
                x[d] = u_nodal[2 * v];
                x[d + 1] = u_nodal[2 * v + 1];
            }
            if let Some(d) = self.phi_dof[v] {
                x[d] = phi_nodal[v];
            }
        }
        x
    }

    /// Nodal phase field of every vertex, hanging ones included.
    pub fn phi_nodal(&self, mesh: &QuadMesh<T>, x: &[T]) -> Vec<T> {
        let mut phi: Vec<T> = self.phi_dof.iter().map(|d| d.map_or(T::zero(), |d| x[d])).collect();
        mesh.apply_hanging(&mut phi);
        phi
    }

    /// Interleaved nodal displacement of every vertex.
    pub fn u_nodal(&self, mesh: &QuadMesh<T>, x: &[T]) -> Vec<T> {
        let mut u = vec![T::zero(); 2 * self.n_vertices];
        for (v, d) in self.u_dof.iter().enumerate() {
            if let Some(d) = *d {
                u[2 * v] = x[d];
                u[2 * v + 1] = x[d + 1];
            }
        }
        mesh.apply_hanging_vector(&mut u, 2);
        u
    }
}
