//! Scalars of the linearized mismatch derived from the dispersion relations.

use alloc::string::String;
use alloc::vec::Vec;

use crate::diff;
use crate::dispersion::{Crystal, CrystalCut};
use crate::phase_matching::solve_theta0;
use crate::sellmeier::SellmeierSet;
use crate::units::{omega_from_wavelength, C};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConstants {
    /// Degenerate vacuum wavelength, m.
    pub lambda0: f64,
    /// Degenerate angular frequency, rad/s.
    pub omega0: f64,
    /// External emission half-angle, rad.
    pub theta0: f64,
    /// Internal emission angle `theta0 / n_o(omega0)`, rad.
    pub theta0_int: f64,
    /// Pump walk-off angle at `2 omega0`, rad.
    pub gamma: f64,
    /// `beta_e(2 omega0) - beta_o(omega0)`, s/m.
    pub dbeta_minus_z: f64,
    /// `beta_e(2 omega0) + beta_o(omega0)`, s/m.
    pub dbeta_plus_z: f64,
    /// Ordinary index at the degenerate frequency.
    pub n_o_deg: f64,
    pub alpha: f64,
    pub axis_plane_angle: f64,
}

impl OpticalConstants {
    /// Transverse signal wave vector at the expansion point, rad/m.
    pub fn k_transverse(&self) -> f64 {
        self.theta0 * self.omega0 / C
    }

    pub fn cut(&self) -> CrystalCut {
        CrystalCut {
            alpha: self.alpha,
            axis_plane_angle: self.axis_plane_angle,
        }
    }
}

/// Derives the constants for a cut, taking the emission angle from the
/// phase-matching condition at `lambda0`.
pub fn derive_constants(
    set: &SellmeierSet,
    cut: &CrystalCut,
    lambda0: f64,
) -> Result<OpticalConstants> {
    let theta0 = solve_theta0(set, lambda0, cut.alpha)?;
    let crystal = Crystal::new(set.clone(), *cut);
    let w0 = omega_from_wavelength(lambda0);
    let n_o_deg = crystal.n_o(w0)?;
    let beta_e = crystal.beta_e(2.0 * w0)?;
    let beta_o = crystal.beta_o(w0)?;
    Ok(OpticalConstants {
        lambda0,
        omega0: w0,
        theta0,
        theta0_int: theta0 / n_o_deg,
        gamma: crystal.walkoff(2.0 * w0)?,
        dbeta_minus_z: beta_e - beta_o,
        dbeta_plus_z: beta_e + beta_o,
        n_o_deg,
        alpha: cut.alpha,
        axis_plane_angle: cut.axis_plane_angle,
    })
}

/// One analytic derivative compared against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheck {
    pub name: String,
    pub analytic: f64,
    /// Central difference at relative step 1e-6.
    pub finite_difference: f64,
    /// Richardson sequence starting at a coarse relative step.
    pub richardson: diff::Derivative,
}

impl DerivativeCheck {
    pub fn relative_error(&self) -> f64 {
        ((self.analytic - self.finite_difference) / self.analytic).abs()
    }
}

/// Cross-checks `gamma`, `beta_e(2 omega0)` and `beta_o(omega0)` against
/// finite differences of the dispersion relations.
pub fn verify_constants(
    crystal: &Crystal,
    constants: &OpticalConstants,
) -> Result<Vec<DerivativeCheck>> {
    let w0 = constants.omega0;
    let k_scale = 2.0 * w0 / C;
    let alpha = crystal.cut.alpha;
    let set = &crystal.sellmeier;
    let kz_e_x = |kx: f64| crate::dispersion::kz_extraordinary(set, kx, 0.0, 2.0 * w0, alpha);
    let kz_e_w = |w: f64| crystal.kz_e(0.0, 0.0, w);
    let kz_o_w = |w: f64| crystal.kz_o(0.0, 0.0, w);

    let mut checks = Vec::with_capacity(3);
    let mut push = |name: &str,
                    analytic: f64,
                    f: &dyn Fn(f64) -> Result<f64>,
                    x: f64,
                    scale: f64|
     -> Result<()> {
        let h = 1e-6 * scale;
        let fd = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let noise = 1e-12 * analytic.abs();
        let richardson = diff::first(f, x, 1e-2 * scale, noise)?;
        checks.push(DerivativeCheck {
            name: String::from(name),
            analytic,
            finite_difference: fd,
            richardson,
        });
        Ok(())
    };
    push("gamma", constants.gamma, &kz_e_x, 0.0, k_scale)?;
    push(
        "beta_e(2w0)",
        crystal.beta_e(2.0 * w0)?,
        &kz_e_w,
        2.0 * w0,
        2.0 * w0,
    )?;
    push("beta_o(w0)", crystal.beta_o(w0)?, &kz_o_w, w0, w0)?;

    for check in &checks {
        if check.relative_error() > 1e-6 || !check.richardson.converged(1.9) {
            return Err(Error::Derivative {
                what: check.name.clone(),
                observed_order: check.richardson.observed_order,
                difference: check.analytic - check.finite_difference,
            });
        }
    }
    Ok(checks)
}
