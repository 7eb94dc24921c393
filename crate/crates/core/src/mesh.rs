//! Quadtree mesh of the square `(0, 2a)^2` with 1-irregular refinement and
//! hanging vertices. Also seeds the initial crack and carries nodal fields
//! over to a refined mesh.
//!
//! Positions are tracked on an integer lattice with `2^LATTICE_BITS`
//! points per side, so vertex identity never depends on floating point.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::params::Geometry;
use crate::scalar::Real;

pub const LATTICE_BITS: u32 = 20;

/// Corner order of every cell: lower-left, lower-right, upper-right, upper-left.
pub const CORNERS: [(u32, u32); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

type Key = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
struct Cell {
    level: u32,
    ix: u32,
    iy: u32,
    children: Option<[usize; 4]>,
}

impl Cell {
    fn span(&self) -> u32 {
        1 << (LATTICE_BITS - self.level)
    }

    fn origin(&self) -> Key {
        (self.ix * self.span(), self.iy * self.span())
    }

    fn corner_key(&self, c: usize) -> Key {
        let (x0, y0) = self.origin();
        let s = self.span();
        (x0 + CORNERS[c].0 * s, y0 + CORNERS[c].1 * s)
    }
}

#[derive(Debug, Clone)]
pub struct QuadMesh<T> {
    size: T,
    cells: Vec<Cell>,
    leaves: Vec<usize>,
    leaf_of: HashMap<usize, usize>,
    leaf_vertices: Vec<[usize; 4]>,
    vertices: Vec<[T; 2]>,
    keys: Vec<Key>,
    index: HashMap<Key, usize>,
    hanging: Vec<Option<[usize; 2]>>,
}

/// Sparse linear map from nodal values on an old mesh to nodal values on a
/// refined mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTransfer<T> {
    rows: Vec<Vec<(usize, T)>>,
    old_len: usize,
}

impl<T: Real> FieldTransfer<T> {
    pub fn identity(n: usize) -> Self {
        Self { rows: (0..n).map(|i| vec![(i, T::one())]).collect(), old_len: n }
    }

    pub fn new_len(&self) -> usize {
        self.rows.len()
    }

    pub fn old_len(&self) -> usize {
        self.old_len
    }

    pub fn is_identity(&self) -> bool {
        self.rows.len() == self.old_len
            && self.rows.iter().enumerate().all(|(i, r)| r.len() == 1 && r[0].0 == i && r[0].1 == T::one())
    }

    pub fn apply(&self, old: &[T]) -> Vec<T> {
        assert_eq!(old.len(), self.old_len, "field length does not match the source mesh");
        self.rows.iter().map(|r| r.iter().map(|&(j, w)| w * old[j]).sum()).collect()
    }

    /// Transfer an interleaved vector field with `comps` components per vertex.
    pub fn apply_vector(&self, old: &[T], comps: usize) -> Vec<T> {
        assert_eq!(old.len(), self.old_len * comps);
        let mut out = vec![T::zero(); self.rows.len() * comps];
        for (i, r) in self.rows.iter().enumerate() {
            for c in 0..comps {
                out[i * comps + c] = r.iter().map(|&(j, w)| w * old[j * comps + c]).sum();
            }
        }
        out
    }
}

/// Local coordinates of a point inside a leaf, both in `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct Location<T> {
    pub leaf: usize,
    pub xi: T,
    pub eta: T,
}

impl<T: Real> QuadMesh<T> {
    /// `(2^level)^2` congruent square cells covering `(0, size)^2`.
    pub fn generate_uniform(size: T, level: u32) -> Self {
        assert!(level <= LATTICE_BITS, "refinement level above lattice resolution");
        let mut mesh = Self {
            size,
            cells: vec![Cell { level: 0, ix: 0, iy: 0, children: None }],
            leaves: vec![],
            leaf_of: HashMap::new(),
            leaf_vertices: vec![],
            vertices: vec![],
            keys: vec![],
            index: HashMap::new(),
            hanging: vec![],
        };
        for _ in 0..level {
            let all: Vec<usize> = mesh.collect_leaves();
            for c in all {
                mesh.split(c);
            }
        }
        mesh.rebuild();
        mesh
    }

    pub fn domain_size(&self) -> T {
        self.size
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, v: usize) -> [T; 2] {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn leaf_vertices(&self, leaf: usize) -> [usize; 4] {
        self.leaf_vertices[leaf]
    }

    pub fn leaf_level(&self, leaf: usize) -> u32 {
        self.cells[self.leaves[leaf]].level
    }

    pub fn leaf_size(&self, leaf: usize) -> T {
        self.level_size(self.leaf_level(leaf))
    }

    pub fn level_size(&self, level: u32) -> T {
        self.size / T::lit(f64::from(1u32 << level))
    }

    /// Lower-left corner and side length of a leaf.
    pub fn leaf_box(&self, leaf: usize) -> ([T; 2], T) {
        let v = self.leaf_vertices[leaf][0];
        (self.vertices[v], self.leaf_size(leaf))
    }

    pub fn max_leaf_level(&self) -> u32 {
        (0..self.leaves.len()).map(|l| self.leaf_level(l)).max().unwrap_or(0)
    }

    pub fn h_min(&self) -> T {
        self.level_size(self.max_leaf_level())
    }

    pub fn h_max(&self) -> T {
        let lmin = (0..self.leaves.len()).map(|l| self.leaf_level(l)).min().unwrap_or(0);
        self.level_size(lmin)
    }

    /// Parents of a hanging vertex (the endpoints of the coarse edge it
    /// bisects), or `None` for regular vertices.
    pub fn hanging_parents(&self, v: usize) -> Option<[usize; 2]> {
        self.hanging[v]
    }

    pub fn is_hanging(&self, v: usize) -> bool {
        self.hanging[v].is_some()
    }

    pub fn n_hanging(&self) -> usize {
        self.hanging.iter().filter(|h| h.is_some()).count()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        let (x, y) = self.keys[v];
        let max = 1u32 << LATTICE_BITS;
        x == 0 || y == 0 || x == max || y == max
    }

    /// Expansion of a vertex value in terms of regular vertices, resolving
    /// chains of hanging vertices recursively.
    pub fn vertex_expansion(&self, v: usize) -> Vec<(usize, T)> {
        let mut out: Vec<(usize, T)> = Vec::with_capacity(2);
        self.expand_into(v, T::one(), &mut out);
        out
    }

    fn expand_into(&self, v: usize, w: T, out: &mut Vec<(usize, T)>) {
        match self.hanging[v] {
            None => {
                if let Some(e) = out.iter_mut().find(|e| e.0 == v) {
                    e.1 += w;
                } else {
                    out.push((v, w));
                }
            }
            Some([a, b]) => {
                let half = w * T::lit(0.5);
                self.expand_into(a, half, out);
                self.expand_into(b, half, out);
            }
        }
    }

    /// Overwrite hanging-vertex values of a scalar field with the averages
    /// of their regular parents.
    pub fn apply_hanging(&self, field: &mut [T]) {
        for v in 0..self.vertices.len() {
            if self.hanging[v].is_some() {
                field[v] = self.vertex_expansion(v).iter().map(|&(r, w)| w * field[r]).sum();
            }
        }
    }

    pub fn apply_hanging_vector(&self, field: &mut [T], comps: usize) {
        for v in 0..self.vertices.len() {
            if self.hanging[v].is_some() {
                let exp = self.vertex_expansion(v);
                for c in 0..comps {
                    field[v * comps + c] = exp.iter().map(|&(r, w)| w * field[r * comps + c]).sum();
                }
            }
        }
    }

    fn collect_leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(c) = stack.pop() {
            match self.cells[c].children {
                None => out.push(c),
                Some(ch) => stack.extend(ch.iter().rev()),
            }
        }
        out
    }

    fn split(&mut self, c: usize) {
        debug_assert!(self.cells[c].children.is_none());
        let Cell { level, ix, iy, .. } = self.cells[c];
        assert!(level < LATTICE_BITS, "cannot refine beyond lattice resolution");
        let base = self.cells.len();
        for (dx, dy) in CORNERS {
            self.cells.push(Cell { level: level + 1, ix: 2 * ix + dx, iy: 2 * iy + dy, children: None });
        }
        self.cells[c].children = Some([base, base + 1, base + 2, base + 3]);
    }

    /// Leaf cell (tree index) containing a lattice point, using half-open
    /// cells; points on the far domain boundary map to the last cell.
    fn find_cell(&self, key: Key) -> usize {
        let max = (1u32 << LATTICE_BITS) - 1;
        let (x, y) = (key.0.min(max), key.1.min(max));
        let mut c = 0usize;
        while let Some(ch) = self.cells[c].children {
            let child_level = self.cells[c].level + 1;
            let shift = LATTICE_BITS - child_level;
            let bx = (x >> shift) & 1;
            let by = (y >> shift) & 1;
            c = ch[match (bx, by) {
                (0, 0) => 0,
                (1, 0) => 1,
                (1, 1) => 2,
                _ => 3,
            }];
        }
        c
    }

    fn edge_neighbor_levels(&self, c: usize) -> [Option<usize>; 4] {
        let cell = &self.cells[c];
        let (x0, y0) = cell.origin();
        let s = cell.span();
        let max = 1u32 << LATTICE_BITS;
        let mid = s / 2;
        let probe = |dx: i64, dy: i64| -> Option<usize> {
            let (px, py) = (i64::from(x0) + dx, i64::from(y0) + dy);
            if px < 0 || py < 0 || px >= i64::from(max) || py >= i64::from(max) {
                None
            } else {
                Some(self.find_cell((px as u32, py as u32)))
            }
        };
        let (s, mid) = (i64::from(s), i64::from(mid.max(1)));
        [probe(-1, mid), probe(s, mid), probe(mid, -1), probe(mid, s)]
    }

    fn rebuild(&mut self) {
        self.leaves = self.collect_leaves();
        self.leaf_of = self.leaves.iter().enumerate().map(|(l, &c)| (c, l)).collect();
        let mut keyset = BTreeSet::new();
        for &c in &self.leaves {
            for k in 0..4 {
                let (x, y) = self.cells[c].corner_key(k);
                keyset.insert((y, x));
            }
        }
        self.keys = keyset.into_iter().map(|(y, x)| (x, y)).collect();
        self.index = self.keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let scale = self.size / T::lit(f64::from(1u32 << LATTICE_BITS));
        self.vertices = self.keys.iter().map(|&(x, y)| [T::lit(f64::from(x)) * scale, T::lit(f64::from(y)) * scale]).collect();
        self.leaf_vertices = self
            .leaves
            .iter()
            .map(|&c| {
                let cell = &self.cells[c];
                [0, 1, 2, 3].map(|k| self.index[&cell.corner_key(k)])
            })
            .collect();
        self.hanging = vec![None; self.keys.len()];
        for &c in &self.leaves {
            let cell = &self.cells[c];
            if cell.span() < 2 {
                continue;
            }
            for e in 0..4 {
                let a = cell.corner_key(e);
                let b = cell.corner_key((e + 1) % 4);
                let m = ((a.0 + b.0) / 2, (a.1 + b.1) / 2);
                if let Some(&v) = self.index.get(&m) {
                    self.hanging[v] = Some([self.index[&a], self.index[&b]]);
                }
            }
        }
    }

    /// Every leaf below `max_level` with at least one corner value below
    /// `tol`.
    pub fn flag_cells(&self, phi: &[T], tol: T, max_level: u32) -> Vec<usize> {
        assert_eq!(phi.len(), self.vertices.len());
        (0..self.leaves.len())
            .filter(|&l| self.leaf_level(l) < max_level && self.leaf_vertices[l].iter().any(|&v| phi[v] < tol))
            .collect()
    }

    /// Split the flagged leaves (indices into the leaf list), add the
    /// closure needed to keep edge neighbours within one level, and build
    /// the nodal transfer.
    pub fn refine(&self, flags: &[usize]) -> (QuadMesh<T>, FieldTransfer<T>) {
        if flags.is_empty() {
            return (self.clone(), FieldTransfer::identity(self.vertices.len()));
        }
        let mut new = self.clone();
        let mut pending: BTreeSet<usize> = flags.iter().map(|&l| self.leaves[l]).collect();
        loop {
            for &c in &pending {
                new.split(c);
            }
            pending.clear();
            for c in new.collect_leaves() {
                let level = new.cells[c].level;
                for n in new.edge_neighbor_levels(c).into_iter().flatten() {
                    if new.cells[n].level + 1 < level {
                        pending.insert(n);
                    }
                }
            }
            if pending.is_empty() {
                break;
            }
        }
        new.rebuild();
        let rows = new
            .keys
            .iter()
            .zip(&new.vertices)
            .map(|(k, p)| match self.index.get(k) {
                Some(&old) => vec![(old, T::one())],
                None => {
                    let loc = self.locate(*p);
                    let w = bilinear_weights(loc.xi, loc.eta);
                    let vs = self.leaf_vertices[loc.leaf];
                    (0..4).filter(|&i| w[i] != T::zero()).map(|i| (vs[i], w[i])).collect()
                }
            })
            .collect();
        (new, FieldTransfer { rows, old_len: self.vertices.len() })
    }

    /// Leaf and local coordinates of a physical point (clamped to the domain).
    pub fn locate(&self, p: [T; 2]) -> Location<T> {
        let lattice = T::lit(f64::from(1u32 << LATTICE_BITS));
        let to_key = |x: T| -> u32 {
            let s = (x / self.size * lattice).floor();
            s.max(T::zero()).min(lattice - T::one()).to_u32().unwrap_or(0)
        };
        let leaf = self.leaf_of[&self.find_cell((to_key(p[0]), to_key(p[1])))];
        let (origin, h) = self.leaf_box(leaf);
        let clamp = |t: T| t.max(T::zero()).min(T::one());
        Location { leaf, xi: clamp((p[0] - origin[0]) / h), eta: clamp((p[1] - origin[1]) / h) }
    }

    /// Bilinear interpolation of a nodal scalar field.
    pub fn interpolate(&self, field: &[T], p: [T; 2]) -> T {
        let loc = self.locate(p);
        self.interpolate_in(field, &loc)
    }

    pub fn interpolate_in(&self, field: &[T], loc: &Location<T>) -> T {
        let w = bilinear_weights(loc.xi, loc.eta);
        let vs = self.leaf_vertices[loc.leaf];
        (0..4).map(|i| w[i] * field[vs[i]]).sum()
    }

    /// Gradient of the bilinear interpolant inside the given leaf.
    pub fn gradient_in(&self, field: &[T], loc: &Location<T>) -> [T; 2] {
        let h = self.leaf_size(loc.leaf);
        let vs = self.leaf_vertices[loc.leaf];
        let f: [T; 4] = vs.map(|v| field[v]);
        let one = T::one();
        let dxi = (one - loc.eta) * (f[1] - f[0]) + loc.eta * (f[2] - f[3]);
        let deta = (one - loc.xi) * (f[3] - f[0]) + loc.xi * (f[2] - f[1]);
        [dxi / h, deta / h]
    }

    /// Check that every pair of edge-adjacent leaves differs by at most one
    /// level.
    pub fn is_one_irregular(&self) -> bool {
        self.leaves.iter().all(|&c| {
            let level = self.cells[c].level;
            self.edge_neighbor_levels(c)
                .into_iter()
                .flatten()
                .all(|n| self.cells[n].level + 1 >= level && level + 1 >= self.cells[n].level)
        })
    }

    /// Initial phase field: zero at every vertex within the local cell size
    /// of the crack segment `y = a, |x - a| <= l0`, one elsewhere. The
    /// seed is thus one cell layer thick on each side of the crack line.
    pub fn seed_crack(&self, geometry: &Geometry) -> Result<Vec<T>> {
        let size = self.size.to_f64_lossy();
        let (xa, xb, yc) = (geometry.a - geometry.l0, geometry.a + geometry.l0, geometry.a);
        if xa <= 0.0 || xb >= size || yc <= 0.0 || yc >= size {
            return Err(Error::Geometry(format!(
                "crack segment [{xa}, {xb}] x {{{yc}}} does not lie inside the domain (0, {size})^2"
            )));
        }
        let mut h_local = vec![f64::INFINITY; self.vertices.len()];
        for l in 0..self.leaves.len() {
            let h = self.leaf_size(l).to_f64_lossy();
            for &v in &self.leaf_vertices[l] {
                h_local[v] = h_local[v].min(h);
            }
        }
        let mut phi: Vec<T> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(v, p)| {
                let (x, y) = (p[0].to_f64_lossy(), p[1].to_f64_lossy());
                let dx = if x < xa { xa - x } else if x > xb { x - xb } else { 0.0 };
                let d = (dx * dx + (y - yc) * (y - yc)).sqrt();
                if d <= h_local[v] {
                    T::zero()
                } else {
                    T::one()
                }
            })
            .collect();
        self.apply_hanging(&mut phi);
        Ok(phi)
    }
}

/// Q1 shape function values at local coordinates `(xi, eta) in [0,1]^2`,
/// in corner order.
pub fn bilinear_weights<T: Real>(xi: T, eta: T) -> [T; 4] {
    let one = T::one();
    [(one - xi) * (one - eta), xi * (one - eta), xi * eta, (one - xi) * eta]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom() -> Geometry {
        Geometry { a: 100.0, l0: 10.0 }
    }

    #[test]
    fn uniform_meshes() {
        let m = QuadMesh::<f64>::generate_uniform(200.0, 0);
        assert_eq!(m.n_leaves(), 1);
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.h_min(), 200.0);

        let m = QuadMesh::<f64>::generate_uniform(200.0, 5);
        assert_eq!(m.n_leaves(), 1024);
        assert_eq!(m.h_min(), 6.25);
        assert_eq!(m.n_vertices(), 33 * 33);
        assert_eq!(m.n_hanging(), 0);

        let m = QuadMesh::<f64>::generate_uniform(100.0, 2);
        assert_eq!(m.n_leaves(), 16);
        assert_eq!(m.h_min(), 25.0);
        assert!(m.is_one_irregular());
    }

    #[test]
    fn flagging_rules() {
        let m = QuadMesh::<f64>::generate_uniform(200.0, 2);
        let ones = vec![1.0; m.n_vertices()];
        assert!(m.flag_cells(&ones, 0.9, 5).is_empty());

        let mut phi = ones.clone();
        let centre = m.vertices().iter().position(|p| p == &[100.0, 100.0]).unwrap();
        phi[centre] = 0.5;
        let flags = m.flag_cells(&phi, 0.9, 5);
        assert_eq!(flags.len(), 4);
        for l in &flags {
            assert!(m.leaf_vertices(*l).contains(&centre));
        }
        assert!(m.flag_cells(&phi, 0.9, 2).is_empty());
    }

    #[test]
    fn refine_single_cell_with_closure() {
        let m = QuadMesh::<f64>::generate_uniform(200.0, 2);
        let (m1, _) = m.refine(&[0]);
        assert_eq!(m1.n_leaves(), 16 - 1 + 4);
        assert!(m1.is_one_irregular());
        // refine a child of the corner cell twice: closure must kick in
        let corner = (0..m1.n_leaves()).find(|&l| m1.leaf_box(l).0 == [25.0, 25.0]).unwrap();
        let (m2, _) = m1.refine(&[corner]);
        let (m3, _) = {
            let deep = (0..m2.n_leaves()).find(|&l| m2.leaf_box(l).0 == [37.5, 37.5]).unwrap();
            m2.refine(&[deep])
        };
        assert!(m3.is_one_irregular());
        assert!(m3.n_hanging() > 0);
        for v in 0..m3.n_vertices() {
            if let Some([a, b]) = m3.hanging_parents(v) {
                let (p, pa, pb) = (m3.vertex(v), m3.vertex(a), m3.vertex(b));
                assert_eq!(p, [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
            }
        }
        let area: f64 = (0..m3.n_leaves()).map(|l| m3.leaf_size(l).powi(2)).sum();
        assert_eq!(area, 200.0 * 200.0);
    }

    #[test]
    fn refine_nothing_and_everything() {
        let m = QuadMesh::<f64>::generate_uniform(200.0, 2);
        let (same, t) = m.refine(&[]);
        assert_eq!(same.n_leaves(), m.n_leaves());
        assert!(t.is_identity());
        let all: Vec<usize> = (0..m.n_leaves()).collect();
        let (fine, _) = m.refine(&all);
        assert_eq!(fine.n_leaves(), 64);
        assert_eq!(fine.n_hanging(), 0);
        assert_eq!(fine.h_min(), 25.0);
    }

    #[test]
    fn transfer_reproduces_bilinear() {
        let f = |p: [f64; 2]| 0.3 + 1.7 * p[0] - 0.25 * p[1] + 0.01 * p[0] * p[1];
        let mut m = QuadMesh::<f64>::generate_uniform(200.0, 3);
        for round in 0..3 {
            let flags: Vec<usize> = (0..m.n_leaves())
                .filter(|&l| {
                    let (o, h) = m.leaf_box(l);
                    (o[0] - 90.0).abs() < 30.0 + h && (o[1] - 100.0).abs() < 20.0 + h * (round as f64)
                })
                .collect();
            let old: Vec<f64> = m.vertices().iter().map(|&p| f(p)).collect();
            let (m2, t) = m.refine(&flags);
            let new = t.apply(&old);
            for (v, p) in m2.vertices().iter().enumerate() {
                assert_relative_eq!(new[v], f(*p), max_relative = 1e-13);
            }
            m = m2;
        }
    }

    #[test]
    fn seeding() {
        let m = QuadMesh::<f64>::generate_uniform(200.0, 5);
        let phi = m.seed_crack(&geom()).unwrap();
        let at = |x: f64, y: f64| {
            let v = m.vertices().iter().position(|p| p == &[x, y]).unwrap();
            phi[v]
        };
        assert_eq!(at(100.0, 100.0), 0.0);
        assert_eq!(at(100.0, 200.0), 1.0);
        assert_eq!(at(125.0, 100.0), 1.0);
        assert_eq!(at(112.5, 100.0), 0.0);
        assert_eq!(at(100.0, 100.0 - 6.25), 0.0);
        assert_eq!(at(118.75, 100.0), 1.0);
        assert_eq!(at(100.0, 106.25), 0.0);
        assert_eq!(at(100.0, 112.5), 1.0);
        assert!(m.seed_crack(&Geometry { a: 100.0, l0: 150.0 }).is_err());
    }

    #[test]
    fn locate_and_gradient() {
        let m = QuadMesh::<f64>::generate_uniform(200.0, 3);
        let f: Vec<f64> = m.vertices().iter().map(|p| 2.0 * p[0] + 3.0 * p[1]).collect();
        for p in [[0.0, 0.0], [13.0, 77.7], [200.0, 200.0], [100.0, 100.0], [199.9, 0.1]] {
            assert_relative_eq!(m.interpolate(&f, p), 2.0 * p[0] + 3.0 * p[1], max_relative = 1e-13, epsilon = 1e-12);
            let loc = m.locate(p);
            let g = m.gradient_in(&f, &loc);
            assert_relative_eq!(g[0], 2.0, max_relative = 1e-13);
            assert_relative_eq!(g[1], 3.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn generic_over_f32() {
        let m = QuadMesh::<f32>::generate_uniform(200.0, 4);
        assert_eq!(m.h_min(), 12.5f32);
        let phi = m.seed_crack(&geom()).unwrap();
        assert!(phi.iter().any(|&x| x == 0.0));
    }
}
