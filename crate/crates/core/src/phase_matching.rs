//! Degenerate non-collinear type-I phase matching.
//!
//! The signal and idler leave at external angles `+theta0` and `-theta0` in
//! the horizontal plane at the degenerate frequency `omega0`, so their
//! transverse wave vectors are `(+-theta0 omega0 / c, 0)` and the pump-side
//! sum vector is `(0, 0, 2 omega0)`. Phase matching requires
//! `kz_e(0, 0, 2 omega0) = 2 kz_o(theta0 omega0 / c, 0, omega0)`.

use alloc::format;
use num_traits::Float;

use crate::dispersion::{kz_extraordinary, kz_ordinary};
use crate::sellmeier::SellmeierSet;
use crate::units::{omega_from_wavelength, C};
use crate::{Error, Result};

const BRACKET_SAMPLES: usize = 64;

/// `delta_-(s0, i0)` for optic-axis angle `alpha`, rad/m.
pub fn degenerate_mismatch(
    set: &SellmeierSet,
    alpha: f64,
    lambda0: f64,
    theta0: f64,
) -> Result<f64> {
    let w0 = omega_from_wavelength(lambda0);
    let pump = kz_extraordinary(set, 0.0, 0.0, 2.0 * w0, alpha)?;
    let daughter = kz_ordinary(set, theta0 * w0 / C, 0.0, w0)?;
    Ok(pump - 2.0 * daughter)
}

/// Residual tolerance on `|delta_-|`, rad/m.
pub fn tolerance(lambda0: f64) -> f64 {
    1e-12 * omega_from_wavelength(lambda0) / C
}

/// Optic-axis angle that phase-matches emission at `theta0`.
///
/// Brackets a sign change on a uniform grid over `[0, pi/2]`, bisects it,
/// then polishes with safeguarded secant steps.
pub fn solve_alpha(set: &SellmeierSet, lambda0: f64, theta0: f64) -> Result<f64> {
    let f = |a: f64| degenerate_mismatch(set, a, lambda0, theta0);
    let tol = tolerance(lambda0);
    let half_pi = core::f64::consts::FRAC_PI_2;

    let mut lo = 0.0;
    let mut f_lo = f(lo)?;
    let mut bracket = None;
    for k in 1..=BRACKET_SAMPLES {
        let a = half_pi * k as f64 / BRACKET_SAMPLES as f64;
        let fa = f(a)?;
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_lo.signum() != fa.signum() {
            bracket = Some((lo, f_lo, a, fa));
            break;
        }
        lo = a;
        f_lo = fa;
    }
    let Some((mut a, mut fa, mut b, mut fb)) = bracket else {
        return Err(Error::NotPhaseMatchable(format!(
            "no sign change of the mismatch over alpha in [0, pi/2] for lambda0 = {lambda0:e} m, theta0 = {theta0:e} rad"
        )));
    };

    // bisect down to a narrow bracket
    while b - a > 1e-7 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() < tol {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    // secant (regula falsi guarded by bisection)
    for _ in 0..200 {
        let mut x = b - fb * (b - a) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx.abs() < tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if b - a <= f64::EPSILON * b {
            break;
        }
    }
    let best = if fa.abs() < fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    if best.1.abs() < tol {
        Ok(best.0)
    } else {
        Err(Error::NotPhaseMatchable(format!(
            "residual {:e} rad/m above tolerance {tol:e}",
            best.1
        )))
    }
}

/// External emission angle phase-matched by a given optic-axis angle.
pub fn solve_theta0(set: &SellmeierSet, lambda0: f64, alpha: f64) -> Result<f64> {
    let w0 = omega_from_wavelength(lambda0);
    let half_pump = 0.5 * kz_extraordinary(set, 0.0, 0.0, 2.0 * w0, alpha)?;
    let k_o = kz_ordinary(set, 0.0, 0.0, w0)?;
    let transverse_sq = (k_o - half_pump) * (k_o + half_pump);
    if transverse_sq < 0.0 {
        return Err(Error::NotPhaseMatchable(format!(
            "pump wave vector exceeds twice the ordinary one at alpha = {alpha} rad"
        )));
    }
    Ok(Float::sqrt(transverse_sq) * C / w0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::deg_to_rad;
    use approx::assert_relative_eq;

    /// Plain bisection on the mismatch, used as an independent oracle.
    fn bisect_alpha(theta0: f64) -> f64 {
        let set = SellmeierSet::bbo();
        let (mut a, mut b) = (0.3, 0.7);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if degenerate_mismatch(&set, m, 780e-9, theta0).unwrap() > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn bbo_cut_for_1p4_degrees() {
        let set = SellmeierSet::bbo();
        let theta0 = deg_to_rad(1.4);
        let alpha = solve_alpha(&set, 780e-9, theta0).unwrap();
        assert_relative_eq!(alpha, bisect_alpha(theta0), max_relative = 1e-12);
        // frozen from the bisection oracle: 30.0323996 degrees
        assert_relative_eq!(alpha, 0.524_164_254_665_7, max_relative = 1e-11);
        assert!(
            degenerate_mismatch(&set, alpha, 780e-9, theta0)
                .unwrap()
                .abs()
                < tolerance(780e-9)
        );
    }

    #[test]
    fn round_trip_alpha_theta() {
        let set = SellmeierSet::bbo();
        for deg in [0.5, 1.4, 3.0, 6.0] {
            let theta0 = deg_to_rad(deg);
            let alpha = solve_alpha(&set, 780e-9, theta0).unwrap();
            let back = solve_theta0(&set, 780e-9, alpha).unwrap();
            assert!((back - theta0).abs() < 1e-9, "{deg}: {back} vs {theta0}");
        }
    }

    #[test]
    fn unmatched_crystal_is_reported() {
        // n_e = n_o: the pump can never be slower than the daughters demand
        let set = SellmeierSet::constant("iso", 1.6, 1.6);
        assert!(matches!(
            solve_alpha(&set, 780e-9, deg_to_rad(1.4)),
            Err(Error::NotPhaseMatchable(_))
        ));
        // a weakly birefringent crystal cannot reach 1.4 degrees
        let weak = SellmeierSet::constant("weak", 1.6, 1.59999);
        assert!(solve_alpha(&weak, 780e-9, deg_to_rad(1.4)).is_err());
    }
}
