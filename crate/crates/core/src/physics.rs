//! Constitutive layer: strain measures, the volumetric/deviatoric energy
//! split, degraded stresses and tangents, the degradation function and the
//! pointwise crack driving force.
//!
//! Voigt convention used throughout: strain `[e_xx, e_yy, 2 e_xy]`, stress
//! `[s_xx, s_yy, s_xy]`, tangents map the former onto the latter.

use crate::scalar::Real;

/// Spatial dimension of the model.
pub const DIM: usize = 2;

/// Symmetric 2x2 strain tensor (tensor shear component, not engineering).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Strain2<T> {
    pub xx: T,
    pub yy: T,
    pub xy: T,
}

impl<T: Real> Strain2<T> {
    pub fn new(xx: T, yy: T, xy: T) -> Self {
        Self { xx, yy, xy }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn isotropic(a: T) -> Self {
        Self::new(a, a, T::zero())
    }

    /// Symmetric part of a displacement gradient `[[du_x/dx, du_x/dy], [du_y/dx, du_y/dy]]`.
    pub fn from_gradient(grad: [[T; 2]; 2]) -> Self {
        let half = T::lit(0.5);
        Self::new(grad[0][0], grad[1][1], half * (grad[0][1] + grad[1][0]))
    }

    pub fn trace(&self) -> T {
        self.xx + self.yy
    }

    /// Full contraction `a : b`.
    pub fn ddot(&self, other: &Self) -> T {
        self.xx * other.xx + self.yy * other.yy + T::lit(2.0) * self.xy * other.xy
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.xx * s, self.yy * s, self.xy * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }

    pub fn voigt(&self) -> [T; 3] {
        [self.xx, self.yy, T::lit(2.0) * self.xy]
    }
}

/// Symmetric 2x2 stress tensor.
pub type Stress2<T> = Strain2<T>;

/// 3x3 Voigt tangent.
pub type Tangent<T> = [[T; 3]; 3];

/// Elastic constants of the isotropic skeleton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elasticity<T> {
    pub mu: T,
    pub lambda: T,
    /// Bulk modulus `(2/d) mu + lambda`.
    pub bulk: T,
}

impl<T: Real> Elasticity<T> {
    pub fn from_lame(mu: T, lambda: T) -> Self {
        let bulk = T::lit(2.0) / T::lit(DIM as f64) * mu + lambda;
        Self { mu, lambda, bulk }
    }

    /// Undegraded stress `2 mu e + lambda tr(e) I`.
    pub fn stress(&self, e: &Strain2<T>) -> Stress2<T> {
        let lt = self.lambda * e.trace();
        let two_mu = T::lit(2.0) * self.mu;
        Stress2::new(two_mu * e.xx + lt, two_mu * e.yy + lt, two_mu * e.xy)
    }

    /// `lambda/2 tr(e)^2 + mu e:e`.
    pub fn energy(&self, e: &Strain2<T>) -> T {
        let tr = e.trace();
        T::lit(0.5) * self.lambda * tr * tr + self.mu * e.ddot(e)
    }

    pub fn tangent(&self) -> Tangent<T> {
        let (l, m) = (self.lambda, self.mu);
        let z = T::zero();
        let d = l + T::lit(2.0) * m;
        [[d, l, z], [l, d, z], [z, z, m]]
    }
}

/// How the strain energy is split into a degraded and an undegraded part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    /// The whole energy is degraded.
    None,
    /// Tension and shear are degraded, volumetric compression is not.
    #[default]
    VolDev,
}

impl SplitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitMode::None => "none",
            SplitMode::VolDev => "voldev",
        }
    }
}

impl std::str::FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SplitMode::None),
            "voldev" => Ok(SplitMode::VolDev),
            other => Err(format!("expected `none` or `voldev`, got `{other}`")),
        }
    }
}

/// Volumetric and deviatoric parts, `e_vol = tr(e)/d I`.
pub fn split_strain<T: Real>(e: &Strain2<T>) -> (Strain2<T>, Strain2<T>) {
    let vol = Strain2::isotropic(e.trace() / T::lit(DIM as f64));
    let dev = Strain2::new(e.xx - vol.xx, e.yy - vol.yy, e.xy);
    (vol, dev)
}

/// One for strictly positive arguments, zero otherwise.
#[inline]
pub fn heaviside_plus<T: Real>(tr: T) -> T {
    if tr > T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEnergies<T> {
    pub psi_plus: T,
    pub psi_minus: T,
    pub psi_total: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStresses<T> {
    pub sigma_plus: Stress2<T>,
    pub sigma_minus: Stress2<T>,
    pub tangent_plus: Tangent<T>,
    pub tangent_minus: Tangent<T>,
}

pub fn split_energy<T: Real>(e: &Strain2<T>, mat: &Elasticity<T>, mode: SplitMode) -> SplitEnergies<T> {
    match mode {
        SplitMode::None => {
            let psi = mat.energy(e);
            SplitEnergies { psi_plus: psi, psi_minus: T::zero(), psi_total: psi }
        }
        SplitMode::VolDev => {
            let tr = e.trace();
            let (_, dev) = split_strain(e);
            let psi_vol = T::lit(0.5) * mat.bulk * tr * tr;
            let psi_dev = mat.mu * dev.ddot(&dev);
            let h = heaviside_plus(tr);
            let psi_plus = h * psi_vol + psi_dev;
            let psi_minus = (T::one() - h) * psi_vol;
            SplitEnergies { psi_plus, psi_minus, psi_total: psi_plus + psi_minus }
        }
    }
}

pub fn split_stress<T: Real>(e: &Strain2<T>, mat: &Elasticity<T>, mode: SplitMode) -> SplitStresses<T> {
    let z = T::zero();
    let zero_t = [[z; 3]; 3];
    match mode {
        SplitMode::None => SplitStresses {
            sigma_plus: mat.stress(e),
            sigma_minus: Stress2::zero(),
            tangent_plus: mat.tangent(),
            tangent_minus: zero_t,
        },
        SplitMode::VolDev => {
            let tr = e.trace();
            let h = heaviside_plus(tr);
            let (_, dev) = split_strain(e);
            let two_mu = T::lit(2.0) * mat.mu;
            let k = mat.bulk;
            let kp = k * h;
            let km = k * (T::one() - h);
            let sigma_plus = Stress2::new(kp * tr, kp * tr, z).add(&dev.scale(two_mu));
            let sigma_minus = Stress2::isotropic(km * tr);
            let m = mat.mu;
            let tangent_plus = [[kp + m, kp - m, z], [kp - m, kp + m, z], [z, z, m]];
            let tangent_minus = [[km, km, z], [km, km, z], [z, z, z]];
            SplitStresses { sigma_plus, sigma_minus, tangent_plus, tangent_minus }
        }
    }
}

/// Quadratic degradation `(1 - kappa) phi^2 + kappa`.
#[inline]
pub fn degradation<T: Real>(phi: T, kappa: T) -> T {
    (T::one() - kappa) * phi * phi + kappa
}

/// Inputs of the pointwise crack driving force.
#[derive(Debug, Clone, Copy)]
pub struct DrivingForceInput<T> {
    pub strain: Strain2<T>,
    pub phi: T,
    pub p: T,
    pub p0: T,
    pub theta: T,
    pub theta0: T,
    pub c_theta: T,
    pub div_u: T,
    pub u: [T; 2],
    pub grad_p: [T; 2],
    pub grad_theta: [T; 2],
    pub alpha_biot: T,
    pub alpha_theta: T,
    pub kappa: T,
}

/// Energetic force conjugate to the phase field, evaluated with `phi_+`.
/// Only the degradable energy part enters the strain term.
pub fn driving_force<T: Real>(inp: &DrivingForceInput<T>, mat: &Elasticity<T>, mode: SplitMode) -> T {
    let two = T::lit(2.0);
    let phi_p = inp.phi.max(T::zero());
    let psi = split_energy(&inp.strain, mat, mode).psi_plus;
    let u_dot_gp = inp.u[0] * inp.grad_p[0] + inp.u[1] * inp.grad_p[1];
    let u_dot_gt = inp.u[0] * inp.grad_theta[0] + inp.u[1] * inp.grad_theta[1];
    let thermal_coeff = T::lit(3.0) * inp.alpha_theta * mat.bulk + inp.c_theta;
    two * (T::one() - inp.kappa) * phi_p * psi
        - two * (inp.alpha_biot - T::one()) * (inp.p - inp.p0) * phi_p * inp.div_u
        + two * phi_p * u_dot_gp
        - two * thermal_coeff * (inp.theta - inp.theta0) * phi_p * inp.div_u
        + two * inp.c_theta * phi_p * u_dot_gt
}

/// Regularized crack surface density `(1-phi)^2/(2 eps) + eps/2 |grad phi|^2`.
pub fn crack_density<T: Real>(phi: T, grad_phi: [T; 2], eps: T) -> T {
    let half = T::lit(0.5);
    let g2 = grad_phi[0] * grad_phi[0] + grad_phi[1] * grad_phi[1];
    (T::one() - phi).powi(2) * half / eps + half * eps * g2
}

/// Apply a Voigt tangent to a strain.
pub fn apply_tangent<T: Real>(c: &Tangent<T>, e: &Strain2<T>) -> Stress2<T> {
    let v = e.voigt();
    let row = |i: usize| c[i][0] * v[0] + c[i][1] * v[1] + c[i][2] * v[2];
    Stress2::new(row(0), row(1), row(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rock() -> Elasticity<f64> {
        // E = 1.5e10, nu = 0.15
        Elasticity::from_lame(6.521_739_130_434_783e9, 2.795_031_055_900_621e9)
    }

    #[test]
    fn strain_split_cases() {
        let (v, d) = split_strain(&Strain2::isotropic(0.3));
        assert_eq!(v, Strain2::isotropic(0.3));
        assert_eq!(d, Strain2::zero());

        let shear = Strain2::new(0.0, 0.0, 0.2);
        let (v, d) = split_strain(&shear);
        assert_eq!(v, Strain2::zero());
        assert_eq!(d, shear);

        let (v, d) = split_strain(&Strain2::new(2.0, 0.0, 0.0));
        assert_eq!(v, Strain2::isotropic(1.0));
        assert_eq!(d, Strain2::new(1.0, -1.0, 0.0));
        assert_eq!(d.trace(), 0.0);
    }

    #[test]
    fn heaviside_branches() {
        assert_eq!(heaviside_plus(1e-6), 1.0);
        assert_eq!(heaviside_plus(-1e-6), 0.0);
        assert_eq!(heaviside_plus(0.0), 0.0);
    }

    #[test]
    fn split_energy_examples() {
        let m = rock();
        let e = split_energy(&Strain2::isotropic(1e-3), &m, SplitMode::VolDev);
        assert_relative_eq!(e.psi_plus, 1.863_354e4, max_relative = 1e-6);
        assert_eq!(e.psi_minus, 0.0);

        let e = split_energy(&Strain2::new(0.0, 0.0, 5e-4), &m, SplitMode::VolDev);
        assert_relative_eq!(e.psi_plus, 3.260_87e3, max_relative = 1e-5);
        assert_eq!(e.psi_minus, 0.0);

        let e = split_energy(&Strain2::isotropic(-1e-3), &m, SplitMode::VolDev);
        assert_eq!(e.psi_plus, 0.0);
        assert_relative_eq!(e.psi_minus, 1.863_354e4, max_relative = 1e-6);
    }

    #[test]
    fn split_stress_examples() {
        let m = rock();
        let a = 2e-4;
        let s = split_stress(&Strain2::isotropic(a), &m, SplitMode::VolDev);
        assert_relative_eq!(s.sigma_plus.xx, 2.0 * m.bulk * a, max_relative = 1e-14);
        assert_relative_eq!(s.sigma_plus.yy, 2.0 * m.bulk * a, max_relative = 1e-14);
        assert_eq!(s.sigma_minus, Stress2::zero());

        let s = split_stress(&Strain2::isotropic(-a), &m, SplitMode::VolDev);
        assert_eq!(s.sigma_plus, Stress2::zero());
        assert_relative_eq!(s.sigma_minus.xx, -2.0 * m.bulk * a, max_relative = 1e-14);

        let s = split_stress(&Strain2::zero(), &m, SplitMode::VolDev);
        assert_eq!(s.sigma_plus, Stress2::zero());
        assert_eq!(s.sigma_minus, Stress2::zero());
    }

    #[test]
    fn no_split_is_degenerate_split() {
        let m = rock();
        let e = Strain2::new(-3e-4, 1e-4, 2e-4);
        let en = split_energy(&e, &m, SplitMode::None);
        assert_eq!(en.psi_minus, 0.0);
        assert_eq!(en.psi_plus, m.energy(&e));
        let s = split_stress(&e, &m, SplitMode::None);
        assert_eq!(s.sigma_plus, m.stress(&e));
        assert_eq!(s.sigma_minus, Stress2::zero());
    }

    #[test]
    fn degradation_values() {
        assert_eq!(degradation(1.0, 1e-10), 1.0);
        assert_eq!(degradation(0.0, 1e-10), 1e-10);
        assert_eq!(degradation(0.5, 0.0), 0.25);
    }

    #[test]
    fn driving_force_cases() {
        let m = rock();
        let base = DrivingForceInput {
            strain: Strain2::new(1e-4, 2e-4, 5e-5),
            phi: 0.0,
            p: 2.0,
            p0: 1.0,
            theta: 70.0,
            theta0: 100.0,
            c_theta: 5e4,
            div_u: 3e-4,
            u: [1e-3, 2e-3],
            grad_p: [0.0; 2],
            grad_theta: [0.0; 2],
            alpha_biot: 0.0,
            alpha_theta: 0.0,
            kappa: 1e-10,
        };
        assert_eq!(driving_force(&base, &m, SplitMode::VolDev), 0.0);

        let quiet = DrivingForceInput { phi: 0.7, p: 1.0, theta: 100.0, ..base };
        let psi = split_energy(&quiet.strain, &m, SplitMode::VolDev).psi_plus;
        let bf = driving_force(&quiet, &m, SplitMode::VolDev);
        assert_relative_eq!(bf, 2.0 * (1.0 - 1e-10) * 0.7 * psi, max_relative = 1e-14);
        assert!(bf >= 0.0);

        let pressed = DrivingForceInput {
            strain: Strain2::zero(),
            phi: 0.5,
            p: 3.0,
            p0: 1.0,
            theta: 100.0,
            div_u: 1e-3,
            ..base
        };
        let bf = driving_force(&pressed, &m, SplitMode::VolDev);
        assert_relative_eq!(bf, 2.0 * 2.0 * 0.5 * 1e-3, max_relative = 1e-14);
    }

    #[test]
    fn crack_density_values() {
        assert_eq!(crack_density(1.0, [0.0, 0.0], 0.3), 0.0);
        assert_eq!(crack_density(0.0, [0.0, 0.0], 2.0), 0.25);
        let eps = 0.4;
        let g = 1.0 / (2.0 * eps);
        assert_relative_eq!(
            crack_density(0.5, [0.0, g], eps),
            1.0 / (8.0 * eps) + 1.0 / (8.0 * eps),
            max_relative = 1e-14
        );
    }
}
