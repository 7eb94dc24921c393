//! Hagoort decline constant and the fracture thermal back-stress coefficient.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How the decline constant evolves in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaThetaMode {
    /// No thermal back-stress (`C_theta = 0`).
    #[default]
    Off,
    /// Fixed decline constant, independent of time.
    Constant,
    /// Closed-form Hagoort evolution in time.
    Hagoort,
}

impl LambdaThetaMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LambdaThetaMode::Off => "off",
            LambdaThetaMode::Constant => "constant",
            LambdaThetaMode::Hagoort => "hagoort",
        }
    }
}

impl std::str::FromStr for LambdaThetaMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "off" => Ok(Self::Off),
            "constant" => Ok(Self::Constant),
            "hagoort" => Ok(Self::Hagoort),
            other => Err(format!("expected off|constant|hagoort, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalCoupling<T> {
    pub lambda_theta: T,
    pub c_theta: T,
    pub a_theta: T,
}

/// `asinh(gamma_t / (l0/2) * sqrt(pi kappa t))`.
pub fn lambda_theta<T: Real>(t: T, kappa_theta: T, l0: T, gamma_t: T) -> Result<T> {
    if t < T::zero() || t.is_nan() {
        return Err(Error::ParameterDomain(format!("time must be non-negative, got {t}")));
    }
    if kappa_theta <= T::zero() || l0 <= T::zero() {
        return Err(Error::ParameterDomain("kappa_theta and l0 must be positive".into()));
    }
    let arg = gamma_t / (T::lit(0.5) * l0) * (T::PI() * kappa_theta * t).sqrt();
    Ok(arg.asinh())
}

/// `A_theta = E beta / (1 - nu)`.
pub fn a_theta<T: Real>(youngs: T, beta: T, nu: T) -> Result<T> {
    if nu == T::one() {
        return Err(Error::ParameterDomain("poisson ratio of one makes A_theta singular".into()));
    }
    Ok(youngs * beta / (T::one() - nu))
}

/// `C_theta = A_theta lambda / (2 lambda + 1)`.
pub fn c_theta<T: Real>(lambda: T, youngs: T, beta: T, nu: T) -> Result<T> {
    if lambda < T::zero() {
        return Err(Error::ParameterDomain(format!("decline constant must be non-negative, got {lambda}")));
    }
    let a = a_theta(youngs, beta, nu)?;
    Ok(a * lambda / (T::lit(2.0) * lambda + T::one()))
}

/// Thermal inputs needed to evaluate the coupling at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalModel<T> {
    pub mode: LambdaThetaMode,
    pub lambda_const: T,
    pub kappa_theta: T,
    pub l0: T,
    pub gamma_t: T,
    pub youngs: T,
    pub beta: T,
    pub nu: T,
}

impl<T: Real> ThermalModel<T> {
    pub fn coupling_at(&self, t: T) -> Result<ThermalCoupling<T>> {
        let a = a_theta(self.youngs, self.beta, self.nu)?;
        let lambda = match self.mode {
            LambdaThetaMode::Off => {
                return Ok(ThermalCoupling { lambda_theta: T::zero(), c_theta: T::zero(), a_theta: a })
            }
            LambdaThetaMode::Constant => self.lambda_const,
            LambdaThetaMode::Hagoort => lambda_theta(t, self.kappa_theta, self.l0, self.gamma_t)?,
        };
        let c = c_theta(lambda, self.youngs, self.beta, self.nu)?;
        Ok(ThermalCoupling { lambda_theta: lambda, c_theta: c, a_theta: a })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_2_PI;

    const DAY: f64 = 86_400.0;

    #[test]
    fn caption_decline_constants() {
        let l = lambda_theta(100.0 * DAY, 1e-6, 10.0, FRAC_2_PI).unwrap();
        assert_relative_eq!(l, 0.6225, max_relative = 5e-3);
        let l = lambda_theta(240.0 * 60.0, 1e-6, 10.0, FRAC_2_PI).unwrap();
        assert_relative_eq!(l, 0.0271, max_relative = 5e-3);
        assert_eq!(lambda_theta(0.0, 1e-6, 10.0, FRAC_2_PI).unwrap(), 0.0);
        assert!(lambda_theta(-1.0, 1e-6, 10.0, FRAC_2_PI).is_err());
    }

    #[test]
    fn caption_back_stress() {
        assert_relative_eq!(c_theta(0.6225, 1.5e10, 1e-5, 0.15).unwrap(), 48_933.0, max_relative = 1e-3);
        assert_relative_eq!(c_theta(0.0271, 1.5e10, 1e-5, 0.15).unwrap(), 4_534.0, max_relative = 1e-3);
        assert_eq!(c_theta(0.0, 1.5e10, 1e-5, 0.15).unwrap(), 0.0);
        assert!(c_theta(0.1, 1.5e10, 1e-5, 1.0).is_err());
    }

    #[test]
    fn modes() {
        let base = ThermalModel {
            mode: LambdaThetaMode::Off,
            lambda_const: 1e-4,
            kappa_theta: 1e-6,
            l0: 10.0,
            gamma_t: FRAC_2_PI,
            youngs: 1.5e10,
            beta: 1e-5,
            nu: 0.15,
        };
        assert_eq!(base.coupling_at(1e7).unwrap().c_theta, 0.0);
        let constant = ThermalModel { mode: LambdaThetaMode::Constant, ..base };
        assert_eq!(constant.coupling_at(0.0).unwrap(), constant.coupling_at(1e9).unwrap());
        assert_eq!(constant.coupling_at(5.0).unwrap().lambda_theta, 1e-4);
    }

    #[test]
    fn single_precision_agrees() {
        let l32 = lambda_theta(100.0f32 * 86_400.0, 1e-6, 10.0, std::f32::consts::FRAC_2_PI).unwrap();
        assert!((l32 as f64 - 0.6225).abs() < 5e-3);
    }

    proptest::proptest! {
        #[test]
        fn monotone_and_bounded(t1 in 0.0f64..1e9, dt in 0.0f64..1e9) {
            let l1 = lambda_theta(t1, 1e-6, 10.0, FRAC_2_PI).unwrap();
            let l2 = lambda_theta(t1 + dt, 1e-6, 10.0, FRAC_2_PI).unwrap();
            proptest::prop_assert!(l2 >= l1);
            let c1 = c_theta(l1, 1.5e10, 1e-5, 0.15).unwrap();
            let c2 = c_theta(l2, 1.5e10, 1e-5, 0.15).unwrap();
            proptest::prop_assert!(c2 >= c1);
            let a = a_theta(1.5e10, 1e-5, 0.15).unwrap();
            proptest::prop_assert!(c2 < a / 2.0);
        }
    }
}
