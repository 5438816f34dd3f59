//! Longitudinal wave-vector components of ordinary and extraordinary plane
//! waves in a uniaxial crystal.
//!
//! Crystal frame: `Z` is the crystal normal, the optic axis lies in the `XZ`
//! plane at angle `alpha` to `Z`. Lab frame: `x` horizontal, `y` vertical;
//! the crystal `XZ` plane is rotated about `Z` by `axis_plane_angle` from
//! the horizontal.

use num_traits::Float;

use crate::sellmeier::{Polarization, SellmeierSet};
use crate::units::C;
use crate::{Error, Result};

/// `kz` of an ordinary wave with transverse wave vector `(kx, ky)`.
pub fn kz_ordinary(set: &SellmeierSet, kx: f64, ky: f64, omega: f64) -> Result<f64> {
    let n_o = set.index_at_omega(Polarization::Ordinary, omega)?;
    let k = omega * n_o / C;
    let arg = k * k - kx * kx - ky * ky;
    if arg < 0.0 {
        return Err(Error::Evanescent("ordinary wave beyond grazing incidence"));
    }
    Ok(Float::sqrt(arg))
}

/// `kz` of an extraordinary wave, crystal-frame transverse components
/// `(k_big_x, k_big_y)`, optic axis at `alpha` to the normal in the `XZ` plane.
pub fn kz_extraordinary(
    set: &SellmeierSet,
    k_big_x: f64,
    k_big_y: f64,
    omega: f64,
    alpha: f64,
) -> Result<f64> {
    let n_o = set.index_at_omega(Polarization::Ordinary, omega)?;
    let n_e = set.index_at_omega(Polarization::Extraordinary, omega)?;
    let ratio = n_e * n_e / (n_o * n_o);
    let (sin_a, cos_a) = Float::sin_cos(alpha);
    let denom = sin_a * sin_a + ratio * cos_a * cos_a;
    let ke = omega * n_e / C;
    let arg = (ke * ke - k_big_y * k_big_y) * denom - k_big_x * k_big_x * ratio;
    if arg < 0.0 {
        return Err(Error::Evanescent(
            "extraordinary wave beyond grazing incidence",
        ));
    }
    let walk = k_big_x * sin_a * cos_a * (1.0 - ratio);
    Ok((walk + Float::sqrt(arg)) / denom)
}

/// Orientation of the optic axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalCut {
    /// Angle between optic axis and crystal normal, radians.
    pub alpha: f64,
    /// Rotation of the plane containing the optic axis from the horizontal.
    pub axis_plane_angle: f64,
}

impl CrystalCut {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_axis_plane(alpha, core::f64::consts::FRAC_PI_4)
    }

    pub fn with_axis_plane(alpha: f64, axis_plane_angle: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= core::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("alpha", "must lie in (0, pi/2]"));
        }
        if !axis_plane_angle.is_finite() {
            return Err(Error::invalid("axis_plane_angle", "not finite"));
        }
        Ok(Self {
            alpha,
            axis_plane_angle,
        })
    }

    /// The same cut reflected in the horizontal plane.
    pub fn mirrored(self) -> Self {
        Self {
            axis_plane_angle: -self.axis_plane_angle,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crystal {
    pub sellmeier: SellmeierSet,
    pub cut: CrystalCut,
}

impl Crystal {
    pub fn new(sellmeier: SellmeierSet, cut: CrystalCut) -> Self {
        Self { sellmeier, cut }
    }

    pub fn n_o(&self, omega: f64) -> Result<f64> {
        self.sellmeier.index_at_omega(Polarization::Ordinary, omega)
    }

    pub fn kz_o(&self, kx: f64, ky: f64, omega: f64) -> Result<f64> {
        kz_ordinary(&self.sellmeier, kx, ky, omega)
    }

    /// Extraordinary `kz` for lab-frame transverse components.
    pub fn kz_e(&self, kx: f64, ky: f64, omega: f64) -> Result<f64> {
        let (s, c) = Float::sin_cos(self.cut.axis_plane_angle);
        let k_big_x = c * kx + s * ky;
        let k_big_y = -s * kx + c * ky;
        kz_extraordinary(&self.sellmeier, k_big_x, k_big_y, omega, self.cut.alpha)
    }

    /// Walk-off angle `d kz_e / d k_X` at normal incidence (crystal frame).
    pub fn walkoff(&self, omega: f64) -> Result<f64> {
        let n_o = self
            .sellmeier
            .index_at_omega(Polarization::Ordinary, omega)?;
        let n_e = self
            .sellmeier
            .index_at_omega(Polarization::Extraordinary, omega)?;
        let ratio = n_e * n_e / (n_o * n_o);
        let (sin_a, cos_a) = Float::sin_cos(self.cut.alpha);
        Ok(sin_a * cos_a * (1.0 - ratio) / (sin_a * sin_a + ratio * cos_a * cos_a))
    }

    /// Effective extraordinary index for propagation along the normal.
    pub fn n_e_normal(&self, omega: f64) -> Result<f64> {
        let n_o = self
            .sellmeier
            .index_at_omega(Polarization::Ordinary, omega)?;
        let n_e = self
            .sellmeier
            .index_at_omega(Polarization::Extraordinary, omega)?;
        let (sin_a, cos_a) = Float::sin_cos(self.cut.alpha);
        Ok(1.0 / Float::sqrt(sin_a * sin_a / (n_e * n_e) + cos_a * cos_a / (n_o * n_o)))
    }

    /// Inverse group velocity `d kz_o / d omega` at normal incidence, s/m.
    pub fn beta_o(&self, omega: f64) -> Result<f64> {
        let n = self
            .sellmeier
            .index_at_omega(Polarization::Ordinary, omega)?;
        let dn = self.sellmeier.dn_domega(Polarization::Ordinary, omega)?;
        Ok((n + omega * dn) / C)
    }

    /// Inverse group velocity `d kz_e / d omega` at normal incidence, s/m.
    pub fn beta_e(&self, omega: f64) -> Result<f64> {
        let set = &self.sellmeier;
        let n_o = set.index_at_omega(Polarization::Ordinary, omega)?;
        let n_e = set.index_at_omega(Polarization::Extraordinary, omega)?;
        let dn_o = set.dn_domega(Polarization::Ordinary, omega)?;
        let dn_e = set.dn_domega(Polarization::Extraordinary, omega)?;
        let (sin_a, cos_a) = Float::sin_cos(self.cut.alpha);
        let n = self.n_e_normal(omega)?;
        // n^-2 = sin^2/n_e^2 + cos^2/n_o^2
        let dn = n
            * n
            * n
            * (sin_a * sin_a * dn_e / (n_e * n_e * n_e) + cos_a * cos_a * dn_o / (n_o * n_o * n_o));
        Ok((n + omega * dn) / C)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::omega_from_wavelength;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    use proptest::prelude::*;

    fn bbo() -> SellmeierSet {
        SellmeierSet::bbo()
    }

    #[test]
    fn ordinary_normal_grazing_and_diagonal() {
        let w = omega_from_wavelength(780e-9);
        let k = w * bbo().index(Polarization::Ordinary, 780e-9).unwrap() / C;
        assert_relative_eq!(
            kz_ordinary(&bbo(), 0.0, 0.0, w).unwrap(),
            k,
            max_relative = 1e-15
        );
        assert_eq!(kz_ordinary(&bbo(), k, 0.0, w).unwrap(), 0.0);
        assert_relative_eq!(
            kz_ordinary(&bbo(), k / 2.0, k / 2.0, w).unwrap(),
            k * 0.5f64.sqrt(),
            max_relative = 1e-14
        );
        assert!(matches!(
            kz_ordinary(&bbo(), 1.01 * k, 0.0, w),
            Err(Error::Evanescent(_))
        ));
    }

    #[test]
    fn extraordinary_limits_of_axis_angle() {
        let w = omega_from_wavelength(390e-9);
        let n_o = bbo().index(Polarization::Ordinary, 390e-9).unwrap();
        let n_e = bbo().index(Polarization::Extraordinary, 390e-9).unwrap();
        assert_relative_eq!(
            kz_extraordinary(&bbo(), 0.0, 0.0, w, 0.0).unwrap(),
            w * n_o / C,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            kz_extraordinary(&bbo(), 0.0, 0.0, w, FRAC_PI_2).unwrap(),
            w * n_e / C,
            max_relative = 1e-14
        );
        let big = 2.0 * w * n_o / C;
        assert!(kz_extraordinary(&bbo(), big, 0.0, w, 0.5).is_err());
    }

    #[test]
    fn analytic_normal_incidence_derivatives() {
        let w = omega_from_wavelength(390e-9);
        let crystal = Crystal::new(bbo(), CrystalCut::new(0.52).unwrap());
        let hk = 1e-6 * w / C;
        let fd_walk = (kz_extraordinary(&bbo(), hk, 0.0, w, 0.52).unwrap()
            - kz_extraordinary(&bbo(), -hk, 0.0, w, 0.52).unwrap())
            / (2.0 * hk);
        assert_relative_eq!(crystal.walkoff(w).unwrap(), fd_walk, max_relative = 1e-7);
        let hw = 1e-6 * w;
        let fd_beta = (crystal.kz_e(0.0, 0.0, w + hw).unwrap()
            - crystal.kz_e(0.0, 0.0, w - hw).unwrap())
            / (2.0 * hw);
        assert_relative_eq!(crystal.beta_e(w).unwrap(), fd_beta, max_relative = 1e-7);
        let fd_beta_o = (crystal.kz_o(0.0, 0.0, w + hw).unwrap()
            - crystal.kz_o(0.0, 0.0, w - hw).unwrap())
            / (2.0 * hw);
        assert_relative_eq!(crystal.beta_o(w).unwrap(), fd_beta_o, max_relative = 1e-7);
    }

    #[test]
    fn lab_rotation_splits_walkoff_between_axes() {
        let w = omega_from_wavelength(390e-9);
        let crystal = Crystal::new(bbo(), CrystalCut::with_axis_plane(0.52, FRAC_PI_4).unwrap());
        let hk = 1e-6 * w / C;
        let dx =
            (crystal.kz_e(hk, 0.0, w).unwrap() - crystal.kz_e(-hk, 0.0, w).unwrap()) / (2.0 * hk);
        let dy =
            (crystal.kz_e(0.0, hk, w).unwrap() - crystal.kz_e(0.0, -hk, w).unwrap()) / (2.0 * hk);
        let gamma = crystal.walkoff(w).unwrap();
        assert_relative_eq!(dx, gamma / 2f64.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(dy, gamma / 2f64.sqrt(), max_relative = 1e-6);
        let mirrored = Crystal::new(bbo(), crystal.cut.mirrored());
        let dy_m =
            (mirrored.kz_e(0.0, hk, w).unwrap() - mirrored.kz_e(0.0, -hk, w).unwrap()) / (2.0 * hk);
        assert_relative_eq!(dy_m, -dy, max_relative = 1e-6);
    }

    proptest! {
        #[test]
        fn zero_axis_angle_is_uniaxial_ellipsoid(fx in -0.6f64..0.6, fy in -0.6f64..0.6, lam in 0.3e-6f64..1.0e-6) {
            let w = omega_from_wavelength(lam);
            let k = w * bbo().index(Polarization::Ordinary, lam).unwrap() / C;
            let (kx, ky) = (fx * k, fy * k);
            let e = kz_extraordinary(&bbo(), kx, ky, w, 0.0).unwrap();
            let o = kz_ordinary(&bbo(), 0.0, 0.0, w).unwrap();
            // optic axis along the normal: the extraordinary surface is an
            // ellipsoid of revolution that touches the ordinary sphere on axis
            let n_o = bbo().index(Polarization::Ordinary, lam).unwrap();
            let n_e = bbo().index(Polarization::Extraordinary, lam).unwrap();
            let ke = w * n_e / C;
            let want = n_o / n_e * (ke * ke - kx * kx - ky * ky).sqrt();
            prop_assert!((e - want).abs() <= 1e-12 * want);
            if kx == 0.0 && ky == 0.0 {
                prop_assert!((e - o).abs() <= 1e-12 * o);
            }
        }

        #[test]
        fn parity_of_transverse_components(fx in -0.5f64..0.5, fy in -0.5f64..0.5, alpha in 0.05f64..1.5) {
            let w = omega_from_wavelength(400e-9);
            let k = w * 1.5 / C;
            let (kx, ky) = (fx * k, fy * k);
            let o = kz_ordinary(&bbo(), kx, ky, w).unwrap();
            prop_assert_eq!(o, kz_ordinary(&bbo(), -kx, ky, w).unwrap());
            prop_assert_eq!(o, kz_ordinary(&bbo(), kx, -ky, w).unwrap());
            let e = kz_extraordinary(&bbo(), kx, ky, w, alpha).unwrap();
            prop_assert_eq!(e, kz_extraordinary(&bbo(), kx, -ky, w, alpha).unwrap());
        }
    }
}
