//! Bilinear square element with a 2x2 Gauss rule. Computes the local
//! residual/tangent of the coupled displacement/phase-field energy.

use crate::physics::{degradation, split_energy, split_stress, Elasticity, SplitMode, Strain2};
use crate::scalar::Real;

/// Local unknowns: 8 displacement components then 4 phase-field values.
pub const N_LOCAL: usize = 12;

pub type LocalMatrix<T> = [[T; N_LOCAL]; N_LOCAL];

/// Material and model constants entering the element kernel.
#[derive(Debug, Clone, Copy)]
pub struct Coefficients<T> {
    pub elastic: Elasticity<T>,
    pub split: SplitMode,
    pub kappa: T,
    pub gc: T,
    pub eps: T,
    /// `(1 - alpha_B)(p - p0) - (3 alpha_Theta K + C_Theta)(Theta - Theta0)`.
    /// Pressure and temperature are uniform, so their gradients vanish.
    pub drive: T,
}

/// Nodal values on one cell, corner order as in the mesh.
#[derive(Debug, Clone, Copy)]
pub struct CellState<T> {
    pub h: T,
    pub u: [[T; 2]; 4],
    pub phi: [T; 4],
    pub phi_tilde: [T; 4],
}

/// Shape values and physical gradients at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct ShapeEval<T> {
    pub n: [T; 4],
    pub grad: [[T; 2]; 4],
}

pub fn gauss_points<T: Real>() -> [(T, T); 4] {
    let a = T::lit(0.5 - 0.5 / 3f64.sqrt());
    let b = T::lit(0.5 + 0.5 / 3f64.sqrt());
    [(a, a), (b, a), (b, b), (a, b)]
}

pub fn shape<T: Real>(xi: T, eta: T, h: T) -> ShapeEval<T> {
    let one = T::one();
    let n = [(one - xi) * (one - eta), xi * (one - eta), xi * eta, (one - xi) * eta];
    let grad = [
        [-(one - eta) / h, -(one - xi) / h],
        [(one - eta) / h, -xi / h],
        [eta / h, xi / h],
        [-eta / h, (one - xi) / h],
    ];
    ShapeEval { n, grad }
}

/// Engineering strain (Voigt) of the test function `N_c e_comp`.
#[inline]
fn b_vector<T: Real>(g: [T; 2], comp: usize) -> [T; 3] {
    let z = T::zero();
    if comp == 0 {
        [g[0], z, g[1]]
    } else {
        [z, g[1], g[0]]
    }
}

/// Pointwise fields at a quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct PointFields<T> {
    pub u: [T; 2],
    pub strain: Strain2<T>,
    pub phi: T,
    pub grad_phi: [T; 2],
    pub phi_tilde: T,
}

pub fn point_fields<T: Real>(s: &ShapeEval<T>, st: &CellState<T>) -> PointFields<T> {
    // Differences from the first corner keep constant fields exact, so an
    // intact region has exactly zero phase-field residual.
    let z = T::zero();
    let mut u = st.u[0];
    let mut gu = [[z; 2]; 2];
    let (mut phi, mut phi_tilde) = (st.phi[0], st.phi_tilde[0]);
    let mut grad_phi = [z; 2];
    for i in 1..4 {
        let dphi = st.phi[i] - st.phi[0];
        for a in 0..2 {
            let du = st.u[i][a] - st.u[0][a];
            u[a] += s.n[i] * du;
            for b in 0..2 {
                gu[a][b] += du * s.grad[i][b];
            }
            grad_phi[a] += dphi * s.grad[i][a];
        }
        phi += s.n[i] * dphi;
        phi_tilde += s.n[i] * (st.phi_tilde[i] - st.phi_tilde[0]);
    }
    PointFields { u, strain: Strain2::from_gradient(gu), phi, grad_phi, phi_tilde }
}

/// Local residual with its displacement load part; the tangent on request.
#[derive(Debug, Clone)]
pub struct LocalSystem<T> {
    pub residual: [T; N_LOCAL],
    pub load: [T; 8],
    pub matrix: Option<Box<LocalMatrix<T>>>,
}

pub fn local_system<T: Real>(st: &CellState<T>, c: &Coefficients<T>, with_matrix: bool) -> LocalSystem<T> {
    let z = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    let mut res = [z; N_LOCAL];
    let mut load = [z; 8];
    let mut mat = if with_matrix { Some(Box::new([[z; N_LOCAL]; N_LOCAL])) } else { None };
    let wq = st.h * st.h / T::lit(4.0);
    let omk = one - c.kappa;

    for (xi, eta) in gauss_points::<T>() {
        let s = shape(xi, eta, st.h);
        let f = point_fields(&s, st);
        let phi_p = f.phi.max(z);
        let phit_p = f.phi_tilde.max(z);
        let g_t = degradation(phit_p, c.kappa);
        let stresses = split_stress(&f.strain, &c.elastic, c.split);
        let psi_plus = split_energy(&f.strain, &c.elastic, c.split).psi_plus;
        let sig = stresses.sigma_plus.scale(g_t).add(&stresses.sigma_minus);
        let sig_v = [sig.xx, sig.yy, sig.xy];
        let sp = stresses.sigma_plus;
        let sp_v = [sp.xx, sp.yy, sp.xy];
        let div_u = f.strain.trace();
        let drive_u = c.drive * phit_p * phit_p;

        let mut b = [[z; 3]; 8];
        let mut div = [z; 8];
        for a in 0..8 {
            let (i, comp) = (a / 2, a % 2);
            b[a] = b_vector(s.grad[i], comp);
            div[a] = s.grad[i][comp];
            let l = wq * drive_u * div[a];
            load[a] += l;
            res[a] += wq * (sig_v[0] * b[a][0] + sig_v[1] * b[a][1] + sig_v[2] * b[a][2]) + l;
        }
        let phi_src = two * omk * phi_p * psi_plus + two * c.drive * phi_p * div_u;
        for i in 0..4 {
            let gdot = f.grad_phi[0] * s.grad[i][0] + f.grad_phi[1] * s.grad[i][1];
            res[8 + i] += wq * (phi_src * s.n[i] + c.gc * ((f.phi - one) * s.n[i] / c.eps + c.eps * gdot));
        }

        if let Some(m) = mat.as_mut() {
            let mut ct = [[z; 3]; 3];
            for (r, row) in ct.iter_mut().enumerate() {
                for (q, v) in row.iter_mut().enumerate() {
                    *v = g_t * stresses.tangent_plus[r][q] + stresses.tangent_minus[r][q];
                }
            }
            for bb in 0..8 {
                let cb = [
                    ct[0][0] * b[bb][0] + ct[0][1] * b[bb][1] + ct[0][2] * b[bb][2],
                    ct[1][0] * b[bb][0] + ct[1][1] * b[bb][1] + ct[1][2] * b[bb][2],
                    ct[2][0] * b[bb][0] + ct[2][1] * b[bb][1] + ct[2][2] * b[bb][2],
                ];
                for a in 0..8 {
                    m[a][bb] += wq * (b[a][0] * cb[0] + b[a][1] * cb[1] + b[a][2] * cb[2]);
                }
                let sp_b = sp_v[0] * b[bb][0] + sp_v[1] * b[bb][1] + sp_v[2] * b[bb][2];
                let coupling = two * omk * phi_p * sp_b + two * c.drive * phi_p * div[bb];
                for i in 0..4 {
                    m[8 + i][bb] += wq * coupling * s.n[i];
                }
            }
            let react = if f.phi > z { two * omk * psi_plus + two * c.drive * div_u } else { z };
            for i in 0..4 {
                for j in 0..4 {
                    let gg = s.grad[i][0] * s.grad[j][0] + s.grad[i][1] * s.grad[j][1];
                    let nn = s.n[i] * s.n[j];
                    m[8 + i][8 + j] += wq * (react * nn + c.gc * (nn / c.eps + c.eps * gg));
                }
            }
        }
    }
    LocalSystem { residual: res, load, matrix: mat }
}

/// Mechanical and fracture energy of one cell.
pub fn local_energies<T: Real>(st: &CellState<T>, c: &Coefficients<T>) -> (T, T) {
    let z = T::zero();
    let wq = st.h * st.h / T::lit(4.0);
    let (mut mech, mut frac) = (z, z);
    for (xi, eta) in gauss_points::<T>() {
        let s = shape(xi, eta, st.h);
        let f = point_fields(&s, st);
        let e = split_energy(&f.strain, &c.elastic, c.split);
        mech += wq * (degradation(f.phi.max(z), c.kappa) * e.psi_plus + e.psi_minus);
        frac += wq * c.gc * crate::physics::crack_density(f.phi, f.grad_phi, c.eps);
    }
    (mech, frac)
}
