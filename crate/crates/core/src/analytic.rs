//! Closed-form crack opening of a pressurized, cooled crack in an infinite
//! plane (2D line crack) or space (penny-shaped crack), used as the
//! verification oracle for the simulator.

use crate::error::Result;
use crate::scalar::Real;
use crate::thermal::ThermalModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticCase<T> {
    pub l0: T,
    pub youngs: T,
    pub nu: T,
    pub p: T,
    pub p0: T,
    pub theta: T,
    pub theta0: T,
    pub c_theta: T,
    /// 2 or 3.
    pub dim: u8,
}

/// Aperture at distance `x` from the crack center. Returns `(w, inside)`;
/// points beyond the tip yield zero with `inside == false`.
pub fn cod<T: Real>(x: T, case: &AnalyticCase<T>) -> (T, bool) {
    let rho = x.abs() / case.l0;
    if rho > T::one() {
        return (T::zero(), false);
    }
    let drive = case.p - case.p0 - case.c_theta * (case.theta - case.theta0);
    let prefactor = if case.dim == 3 {
        T::lit(4.0) * (T::one() - case.nu * case.nu) * case.l0 / (T::PI() * case.youngs)
    } else {
        T::lit(2.0) * (T::one() - case.nu * case.nu) * case.l0 / case.youngs
    };
    (prefactor * (T::one() - rho * rho).sqrt() * drive, true)
}

pub fn cod_analytic_2d<T: Real>(x: T, case: &AnalyticCase<T>) -> (T, bool) {
    cod(x, &AnalyticCase { dim: 2, ..*case })
}

pub fn cod_analytic_3d<T: Real>(x: T, case: &AnalyticCase<T>) -> (T, bool) {
    cod(x, &AnalyticCase { dim: 3, ..*case })
}

/// Maximum aperture (crack center) at each time, with `C_theta` evaluated
/// from the thermal model at that time.
pub fn max_width_series<T: Real>(
    times: &[T],
    case: &AnalyticCase<T>,
    thermal: &ThermalModel<T>,
) -> Result<Vec<(T, T)>> {
    times
        .iter()
        .map(|&t| {
            let c = thermal.coupling_at(t)?.c_theta;
            let (w, _) = cod(T::zero(), &AnalyticCase { c_theta: c, ..*case });
            Ok((t, w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::{c_theta, lambda_theta, LambdaThetaMode};
    use approx::assert_relative_eq;

    fn case_a() -> AnalyticCase<f64> {
        AnalyticCase { l0: 10.0, youngs: 1.5e10, nu: 0.15, p: 1.0, p0: 0.0, theta: 0.0, theta0: 0.0, c_theta: 0.0, dim: 2 }
    }

    fn thermal(mode: LambdaThetaMode) -> ThermalModel<f64> {
        ThermalModel {
            mode,
            lambda_const: 1e-4,
            kappa_theta: 1e-6,
            l0: 10.0,
            gamma_t: std::f64::consts::FRAC_2_PI,
            youngs: 1.5e10,
            beta: 1e-5,
            nu: 0.15,
        }
    }

    #[test]
    fn sneddon_values() {
        let c = case_a();
        assert_eq!(cod_analytic_2d(10.0, &c).0, 0.0);
        assert_relative_eq!(cod_analytic_2d(0.0, &c).0, 1.303_333e-9, max_relative = 1e-6);
        // (2/pi) * 1.303333e-9
        assert_relative_eq!(cod_analytic_3d(0.0, &c).0, 8.297_28e-10, max_relative = 1e-5);
        assert_eq!(cod_analytic_3d(-10.0, &c).0, 0.0);
        let (w, inside) = cod_analytic_2d(10.5, &c);
        assert_eq!(w, 0.0);
        assert!(!inside);
    }

    #[test]
    fn case_c_final_width() {
        // Composition recomputed by hand: lambda(365 d) = 1.0497, C = 5.977e4.
        let t = 365.0 * 86_400.0;
        let lam = lambda_theta(t, 1e-6, 10.0, std::f64::consts::FRAC_2_PI).unwrap();
        let c = c_theta(lam, 1.5e10, 1e-5, 0.15).unwrap();
        assert_relative_eq!(c, 5.99e4, max_relative = 5e-3);
        let case = AnalyticCase { p: 15_834e3, p0: 12_130e3, theta: 70.0, theta0: 100.0, c_theta: c, ..case_a() };
        assert_relative_eq!(cod_analytic_2d(0.0, &case).0, 7.17e-3, max_relative = 2e-3);
    }

    #[test]
    fn series_behaviour() {
        let times: Vec<f64> = (0..=10).map(|d| d as f64 * 86_400.0).collect();
        let off = max_width_series(&times, &case_a(), &thermal(LambdaThetaMode::Off)).unwrap();
        assert!(off.windows(2).all(|w| w[0].1 == w[1].1));

        let cooled = AnalyticCase { theta: 70.0, theta0: 100.0, ..case_a() };
        let hag = max_width_series(&times, &cooled, &thermal(LambdaThetaMode::Hagoort)).unwrap();
        assert!(hag.windows(2).all(|w| w[1].1 > w[0].1));
        assert_eq!(hag[0].1, cod_analytic_2d(0.0, &case_a()).0);
    }

    proptest::proptest! {
        #[test]
        fn elliptic_profile_and_ratio(x in -10.0f64..10.0, c in 0.0f64..1e5, dtheta in -50.0f64..0.0) {
            let case = AnalyticCase { c_theta: c, theta: 100.0 + dtheta, theta0: 100.0, ..case_a() };
            let rho: f64 = x / 10.0;
            let w2 = cod_analytic_2d(x, &case).0;
            let w0 = cod_analytic_2d(0.0, &case).0;
            proptest::prop_assert!((w2 / w0 - (1.0 - rho * rho).sqrt()).abs() < 1e-12);
            let w3 = cod_analytic_3d(x, &case).0;
            if w2 != 0.0 {
                proptest::prop_assert!((w3 / w2 - 2.0 / std::f64::consts::PI).abs() < 1e-14);
            }
            let warmer = AnalyticCase { theta: case.theta + 1.0, ..case };
            if c > 0.0 && rho.abs() < 1.0 {
                proptest::prop_assert!(cod_analytic_2d(x, &warmer).0 < w2);
            }
        }
    }
}
