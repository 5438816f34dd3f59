//! Closed-form Gaussian model of fiber-coupled pairs.
//!
//! The sinc phase-matching factor is replaced by `exp(-x^2/4)` and the
//! mismatch `delta_+-` is linearized around the degenerate phase-matched
//! pair. Every integral is then Gaussian, which gives the joint spectral
//! amplitude, its spectrum matrix and the total coupling probability in
//! closed form. Probabilities are in relative units.

use core::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use core::ops::Add;

use alloc::format;
use num_traits::Float;

use crate::dispersion::Crystal;
use crate::units::{sigma_omega, WidthConvention, C};
use crate::{Error, OpticalConstants, Result};

/// Plane-wave mode `(kx, ky, omega)` in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVector {
    pub kx: f64,
    pub ky: f64,
    pub omega: f64,
}

impl ModeVector {
    pub fn new(kx: f64, ky: f64, omega: f64) -> Self {
        Self { kx, ky, omega }
    }
}

impl Add for ModeVector {
    type Output = ModeVector;

    fn add(self, rhs: Self) -> Self {
        ModeVector {
            kx: self.kx + rhs.kx,
            ky: self.ky + rhs.ky,
            omega: self.omega + rhs.omega,
        }
    }
}

/// The degenerate signal/idler pair `(s0, i0)` the model is expanded around.
pub fn expansion_point(constants: &OpticalConstants) -> (ModeVector, ModeVector) {
    let k = constants.k_transverse();
    (
        ModeVector::new(k, 0.0, constants.omega0),
        ModeVector::new(-k, 0.0, constants.omega0),
    )
}

/// Phase mismatch `(delta_-, delta_+)` in rad/m.
pub fn delta_pm(crystal: &Crystal, s: &ModeVector, i: &ModeVector) -> Result<(f64, f64)> {
    if !(s.omega > 0.0 && i.omega > 0.0) {
        return Err(Error::invalid("omega", "mode frequencies must be positive"));
    }
    let p = *s + *i;
    let pump = crystal.kz_e(p.kx, p.ky, p.omega)?;
    let ks = crystal.kz_o(s.kx, s.ky, s.omega)?;
    let ki = crystal.kz_o(i.kx, i.ky, i.omega)?;
    Ok((pump - ks - ki, pump + ks + ki))
}

/// Indices into the six expansion variables.
pub mod var {
    pub const KSX: usize = 0;
    pub const KSY: usize = 1;
    pub const KIX: usize = 2;
    pub const KIY: usize = 3;
    pub const WS: usize = 4;
    pub const WI: usize = 5;
}

/// First derivatives of `delta_-` and `delta_+` with respect to
/// `(k_sx, k_sy, k_ix, k_iy, omega_s, omega_i)` at the expansion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientTable {
    pub minus: [f64; 6],
    pub plus: [f64; 6],
}

/// First-order mismatch table built from the four constants
/// `gamma`, `theta0_int`, `dbeta_-`, `dbeta_+`.
pub fn delta_gradient(constants: &OpticalConstants) -> GradientTable {
    let (sin_p, cos_p) = Float::sin_cos(constants.axis_plane_angle);
    let gx = constants.gamma * cos_p;
    let gy = constants.gamma * sin_p;
    let t = constants.theta0_int;
    GradientTable {
        minus: [
            gx + t,
            gy,
            gx - t,
            gy,
            constants.dbeta_minus_z,
            constants.dbeta_minus_z,
        ],
        plus: [
            gx - t,
            gy,
            gx + t,
            gy,
            constants.dbeta_plus_z,
            constants.dbeta_plus_z,
        ],
    }
}

/// Geometry and spectra of a fiber-coupled source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupParams {
    /// Crystal length `L`, m.
    pub length: f64,
    /// Fiber-mode waist `w` at the output face, m.
    pub fiber_waist: f64,
    /// Pump waist `w_P`, m.
    pub pump_waist: f64,
    /// Transverse offset `h` of the coupled modes at the output face, m.
    pub offset: f64,
    /// `sigma_P` of the pump amplitude spectrum, rad/s.
    pub pump_sigma: f64,
    /// `sigma_F` of the filter amplitude transmission, rad/s.
    pub filter_sigma: f64,
    /// Fiber angles `(theta_s, theta_i)`; `None` means `(+theta0, -theta0)`.
    pub fiber_angles: Option<(f64, f64)>,
}

impl SetupParams {
    pub fn new(
        length: f64,
        fiber_waist: f64,
        pump_waist: f64,
        pump_sigma: f64,
        filter_sigma: f64,
    ) -> Self {
        Self {
            length,
            fiber_waist,
            pump_waist,
            offset: 0.0,
            pump_sigma,
            filter_sigma,
            fiber_angles: None,
        }
    }

    /// The reference configuration: 1 mm crystal, 100 um waists, 5 nm pump and
    /// 17 nm filter widths (intensity FWHM), offset at its optimum.
    pub fn reference(constants: &OpticalConstants) -> Self {
        let widths = SpectralWidths::reference();
        let mut setup = Self::new(1e-3, 100e-6, 100e-6, 0.0, 0.0);
        widths.apply(&mut setup, constants.lambda0);
        setup.with_optimal_offset(constants)
    }

    pub fn with_optimal_offset(mut self, constants: &OpticalConstants) -> Self {
        self.offset = optimal_h(&self, constants);
        self
    }

    pub fn fiber_angles_or_default(&self, constants: &OpticalConstants) -> (f64, f64) {
        self.fiber_angles
            .unwrap_or((constants.theta0, -constants.theta0))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("fiber_waist", self.fiber_waist),
            ("pump_waist", self.pump_waist),
            ("pump_sigma", self.pump_sigma),
            ("filter_sigma", self.filter_sigma),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        if !self.offset.is_finite() {
            return Err(Error::invalid("offset", "not finite"));
        }
        Ok(())
    }
}

/// Spectral widths quoted in wavelength, with their convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralWidths {
    /// Pump width at the pump carrier `lambda0 / 2`, m.
    pub pump: f64,
    /// Filter width at `lambda0`, m.
    pub filter: f64,
    pub convention: WidthConvention,
}

impl SpectralWidths {
    pub fn reference() -> Self {
        Self {
            pump: 5e-9,
            filter: 17e-9,
            convention: WidthConvention::FwhmIntensity,
        }
    }

    pub fn pump_sigma(&self, lambda0: f64) -> f64 {
        sigma_omega(self.pump, lambda0 / 2.0, self.convention)
    }

    pub fn filter_sigma(&self, lambda0: f64) -> f64 {
        sigma_omega(self.filter, lambda0, self.convention)
    }

    pub fn apply(&self, setup: &mut SetupParams, lambda0: f64) {
        setup.pump_sigma = self.pump_sigma(lambda0);
        setup.filter_sigma = self.filter_sigma(lambda0);
    }
}

/// Dimensionless walk-off `Gamma`, transverse shift `Theta` and effective
/// length `Lcal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub gamma: f64,
    pub theta: f64,
    pub length: f64,
}

pub fn effective_params(setup: &SetupParams, constants: &OpticalConstants) -> EffectiveParams {
    let l = setup.length;
    let w = setup.fiber_waist;
    let gamma =
        l * constants.gamma / Float::sqrt(w * w + 2.0 * setup.pump_waist * setup.pump_waist);
    let theta = l * constants.theta0_int / w;
    let length = l / Float::sqrt(1.0 + 0.5 * theta * theta + 0.5 * gamma * gamma);
    EffectiveParams {
        gamma,
        theta,
        length,
    }
}

/// Symmetric 2x2 quadratic form over `(omega_s - omega0, omega_i - omega0)`, s^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumMatrix {
    pub ss: f64,
    pub ii: f64,
    pub si: f64,
}

impl SpectrumMatrix {
    pub fn det(&self) -> f64 {
        self.ss * self.ii - self.si * self.si
    }

    pub fn trace(&self) -> f64 {
        self.ss + self.ii
    }

    pub fn is_positive_definite(&self) -> bool {
        self.ss > 0.0 && self.det() > 0.0
    }

    /// `w^T Omega w`.
    pub fn quadratic_form(&self, ds: f64, di: f64) -> f64 {
        self.ss * ds * ds + self.ii * di * di + 2.0 * self.si * ds * di
    }

    /// Standard deviations of `|psi|^2 ~ exp(-w^T Omega w)` along the sum
    /// `(ds + di)/sqrt2` and difference `(ds - di)/sqrt2` directions, both
    /// with the other coordinate held at zero.
    pub fn sum_difference_widths(&self) -> (f64, f64) {
        let sum = self.ss + self.ii + 2.0 * self.si;
        let diff = self.ss + self.ii - 2.0 * self.si;
        (1.0 / Float::sqrt(sum), 1.0 / Float::sqrt(diff))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumForm {
    /// All terms, including the walk-off cross terms that break the
    /// signal/idler symmetry.
    #[default]
    Full,
    /// Leading order in `theta0`; symmetric in signal and idler.
    SmallAngle,
}

fn check_analytic_geometry(setup: &SetupParams, constants: &OpticalConstants) -> Result<()> {
    setup.validate()?;
    if let Some((ts, ti)) = setup.fiber_angles {
        if ts != constants.theta0 || ti != -constants.theta0 {
            return Err(Error::Unsupported(
                "the closed-form model assumes fibers at +-theta0",
            ));
        }
    }
    if constants.gamma != 0.0 && (constants.axis_plane_angle.abs() - FRAC_PI_4).abs() > 1e-9 {
        return Err(Error::Unsupported(
            "the closed-form model assumes the optic-axis plane at +-45 degrees",
        ));
    }
    Ok(())
}

/// `w^2 w_P^2 theta0^2 / (2 c^2 (w^2 + 2 w_P^2))`, the geometric
/// anti-correlation term.
fn geometric_term(setup: &SetupParams, constants: &OpticalConstants) -> f64 {
    let w2 = setup.fiber_waist * setup.fiber_waist;
    let p2 = setup.pump_waist * setup.pump_waist;
    w2 * p2 * constants.theta0 * constants.theta0 / (2.0 * C * C * (w2 + 2.0 * p2))
}

pub fn spectrum_matrix(
    setup: &SetupParams,
    constants: &OpticalConstants,
    form: SpectrumForm,
) -> Result<SpectrumMatrix> {
    check_analytic_geometry(setup, constants)?;
    let eff = effective_params(setup, constants);
    let geo = geometric_term(setup, constants);
    let inv_p = 1.0 / (setup.pump_sigma * setup.pump_sigma);
    let inv_f = 1.0 / (setup.filter_sigma * setup.filter_sigma);
    let l2 = eff.length * eff.length / 8.0;

    let (b, x) = match form {
        SpectrumForm::SmallAngle => (constants.dbeta_minus_z, 0.0),
        SpectrumForm::Full => {
            let angle = constants.theta0 * constants.theta0_int / C;
            let x = if constants.theta0 == 0.0 {
                0.0
            } else if eff.theta == 0.0 {
                return Err(Error::Degenerate(
                    "Theta = 0 with theta0 != 0 leaves Gamma/Theta undefined",
                ));
            } else {
                let w = setup.fiber_waist;
                let root = Float::sqrt(w * w + 2.0 * setup.pump_waist * setup.pump_waist);
                angle / SQRT_2 * (w * eff.gamma / eff.theta) / root
            };
            (constants.dbeta_minus_z + angle, x)
        }
    };
    Ok(SpectrumMatrix {
        ss: l2 * (b + x) * (b + x) + geo + inv_p + inv_f,
        ii: l2 * (b - x) * (b - x) + geo + inv_p + inv_f,
        si: l2 * (b * b - x * x) - geo + inv_p,
    })
}

/// Offset `h*` that maximizes the coupled amplitude.
pub fn optimal_h(setup: &SetupParams, constants: &OpticalConstants) -> f64 {
    let g2 = {
        let e = effective_params(setup, constants);
        e.gamma * e.gamma
    };
    0.5 * setup.length * constants.theta0_int * (1.0 + g2) / (1.0 + 0.5 * g2)
}

/// Curvature `kappa` of the offset factor `exp(-kappa (h - h*)^2)` in `|psi|`.
fn offset_curvature(setup: &SetupParams, eff: &EffectiveParams) -> f64 {
    let g2 = eff.gamma * eff.gamma;
    let w2 = setup.fiber_waist * setup.fiber_waist;
    2.0 * (2.0 + g2) / w2 / (2.0 + eff.theta * eff.theta + g2)
}

fn overlap_prefactor(setup: &SetupParams, eff: &EffectiveParams) -> f64 {
    let w2 = setup.fiber_waist * setup.fiber_waist;
    let p2 = setup.pump_waist * setup.pump_waist;
    8.0 * PI * setup.pump_waist * eff.length / (w2 + 2.0 * p2)
}

/// `|psi(omega_s, omega_i)|`, the modulus of the fiber-coupled joint
/// spectral amplitude, at the setup's offset.
pub fn jsa_analytic(
    omega_s: f64,
    omega_i: f64,
    setup: &SetupParams,
    constants: &OpticalConstants,
    form: SpectrumForm,
) -> Result<f64> {
    let omega = spectrum_matrix(setup, constants, form)?;
    let eff = effective_params(setup, constants);
    let g2 = eff.gamma * eff.gamma;
    let ds = omega_s - constants.omega0;
    let di = omega_i - constants.omega0;
    let shift = setup.offset - optimal_h(setup, constants);
    let exponent = -g2 / (2.0 + g2)
        - 0.5 * omega.quadratic_form(ds, di)
        - offset_curvature(setup, &eff) * shift * shift;
    Ok(overlap_prefactor(setup, &eff) * Float::exp(exponent))
}

/// Total pair-coupling probability at the optimal offset.
pub fn total_probability(
    setup: &SetupParams,
    constants: &OpticalConstants,
    form: SpectrumForm,
) -> Result<f64> {
    let omega = spectrum_matrix(setup, constants, form)?;
    let det = omega.det();
    if !(det > 0.0) {
        return Err(Error::Degenerate(
            "spectrum matrix is not positive definite",
        ));
    }
    let eff = effective_params(setup, constants);
    let g2 = eff.gamma * eff.gamma;
    let pre = overlap_prefactor(setup, &eff);
    Ok(pre * pre * PI / Float::sqrt(det) * Float::exp(-2.0 * g2 / (2.0 + g2)))
}

/// Total probability at the setup's own offset; equals
/// [`total_probability`] when the offset is optimal.
pub fn total_probability_at_offset(
    setup: &SetupParams,
    constants: &OpticalConstants,
    form: SpectrumForm,
) -> Result<f64> {
    let peak = total_probability(setup, constants, form)?;
    let eff = effective_params(setup, constants);
    let shift = setup.offset - optimal_h(setup, constants);
    Ok(peak * Float::exp(-2.0 * offset_curvature(setup, &eff) * shift * shift))
}

/// Spectral separability of the coupled pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separability {
    /// `|Omega_si| / Omega_ss` of the small-angle spectrum matrix.
    pub ratio: f64,
    /// Signed residual of the separability condition, s^2; zero exactly
    /// when `Omega_si` vanishes.
    pub residual: f64,
}

pub fn separability(setup: &SetupParams, constants: &OpticalConstants) -> Result<Separability> {
    let omega = spectrum_matrix(setup, constants, SpectrumForm::SmallAngle)?;
    let eff = effective_params(setup, constants);
    let crystal = eff.length * eff.length * constants.dbeta_minus_z * constants.dbeta_minus_z / 8.0;
    let residual =
        geometric_term(setup, constants) - crystal - 1.0 / (setup.pump_sigma * setup.pump_sigma);
    Ok(Separability {
        ratio: omega.si.abs() / omega.ss,
        residual,
    })
}

/// Pump sigma that satisfies the separability condition exactly, if any.
pub fn separable_pump_sigma(setup: &SetupParams, constants: &OpticalConstants) -> Option<f64> {
    let eff = effective_params(setup, constants);
    let crystal = eff.length * eff.length * constants.dbeta_minus_z * constants.dbeta_minus_z / 8.0;
    let excess = geometric_term(setup, constants) - crystal;
    (excess > 0.0).then(|| 1.0 / Float::sqrt(excess))
}

/// Rayleigh range `k0 w^2 / 2` with the in-medium wave number
/// `k0 = 2 pi n / lambda`.
pub fn rayleigh_range(waist: f64, lambda: f64, index: f64) -> f64 {
    PI * index / lambda * waist * waist
}

/// Long-Rayleigh-range validity of the closed-form probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighDiagnostic {
    pub pump_range: f64,
    pub fiber_range: f64,
    pub length: f64,
}

impl RayleighDiagnostic {
    /// Margin required between each Rayleigh range and the crystal length.
    pub const MARGIN: f64 = 10.0;

    pub fn is_valid(&self) -> bool {
        self.pump_range >= Self::MARGIN * self.length
            && self.fiber_range >= Self::MARGIN * self.length
    }
}

pub fn rayleigh_diagnostic(
    setup: &SetupParams,
    crystal: &Crystal,
    constants: &OpticalConstants,
) -> Result<RayleighDiagnostic> {
    let w0 = constants.omega0;
    let pump_index = crystal.n_o(2.0 * w0)?;
    Ok(RayleighDiagnostic {
        pump_range: rayleigh_range(setup.pump_waist, constants.lambda0 / 2.0, pump_index),
        fiber_range: rayleigh_range(setup.fiber_waist, constants.lambda0, constants.n_o_deg),
        length: setup.length,
    })
}
