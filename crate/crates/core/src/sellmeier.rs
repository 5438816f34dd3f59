//! Sellmeier dispersion of a uniaxial crystal,
//! `n^2(lambda) = A + B / (lambda^2 - C) - D lambda^2` with lambda in micrometres.

use alloc::format;
use alloc::string::String;
use num_traits::Float;

use crate::units::wavelength_from_omega;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    Ordinary,
    Extraordinary,
}

/// One polarization's coefficients. `b` and `c` are in um^2, `d` in um^-2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellmeierCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SellmeierCoefficients {
    /// Dispersion-free medium with index `n`.
    pub fn constant(n: f64) -> Self {
        Self {
            a: n * n,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        }
    }

    fn n_squared(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        let resonance = if self.b == 0.0 {
            0.0
        } else {
            self.b / (l2 - self.c)
        };
        self.a + resonance - self.d * l2
    }

    /// d(n^2)/d(lambda) in um^-1.
    fn dn_squared_dlambda(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        let resonance = if self.b == 0.0 {
            0.0
        } else {
            -2.0 * self.b * lambda_um / ((l2 - self.c) * (l2 - self.c))
        };
        resonance - 2.0 * self.d * lambda_um
    }
}

/// Ordinary and extraordinary Sellmeier sets plus the wavelength window in
/// which they were fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierSet {
    pub name: String,
    pub ordinary: SellmeierCoefficients,
    pub extraordinary: SellmeierCoefficients,
    pub min_um: f64,
    pub max_um: f64,
}

impl SellmeierSet {
    /// beta-barium borate, the widely used handbook fit (Eimerl et al. 1987).
    pub fn bbo() -> Self {
        Self {
            name: String::from("BBO"),
            ordinary: SellmeierCoefficients {
                a: 2.7359,
                b: 0.01878,
                c: 0.01822,
                d: 0.01354,
            },
            extraordinary: SellmeierCoefficients {
                a: 2.3753,
                b: 0.01224,
                c: 0.01667,
                d: 0.01516,
            },
            min_um: 0.2,
            max_um: 1.1,
        }
    }

    /// Dispersion-free crystal with fixed indices, valid at every wavelength.
    pub fn constant(name: &str, n_o: f64, n_e: f64) -> Self {
        Self {
            name: String::from(name),
            ordinary: SellmeierCoefficients::constant(n_o),
            extraordinary: SellmeierCoefficients::constant(n_e),
            min_um: 0.0,
            max_um: f64::INFINITY,
        }
    }

    pub fn coefficients(&self, pol: Polarization) -> &SellmeierCoefficients {
        match pol {
            Polarization::Ordinary => &self.ordinary,
            Polarization::Extraordinary => &self.extraordinary,
        }
    }

    fn window_um(&self, lambda: f64) -> Result<f64> {
        let um = lambda * 1e6;
        if !(um >= self.min_um && um <= self.max_um) {
            return Err(Error::WavelengthOutOfRange {
                lambda_um: um,
                min_um: self.min_um,
                max_um: self.max_um,
            });
        }
        Ok(um)
    }

    /// Refractive index at vacuum wavelength `lambda` (metres).
    pub fn index(&self, pol: Polarization, lambda: f64) -> Result<f64> {
        let um = self.window_um(lambda)?;
        Ok(Float::sqrt(self.coefficients(pol).n_squared(um)))
    }

    pub fn index_at_omega(&self, pol: Polarization, omega: f64) -> Result<f64> {
        self.index(pol, wavelength_from_omega(omega))
    }

    /// dn/d(omega) in s/rad, from the analytic derivative of the Sellmeier form.
    pub fn dn_domega(&self, pol: Polarization, omega: f64) -> Result<f64> {
        let um = self.window_um(wavelength_from_omega(omega))?;
        let coeffs = self.coefficients(pol);
        let n = Float::sqrt(coeffs.n_squared(um));
        let dn_dlambda = coeffs.dn_squared_dlambda(um) / (2.0 * n);
        // lambda = 2 pi c / omega, so d(lambda)/d(omega) = -lambda / omega
        Ok(-dn_dlambda * um / omega)
    }

    /// Checks `n^2 > 1` for both polarizations and `n_e < n_o` on `samples`
    /// wavelengths spread over the validity window.
    pub fn validate(&self, samples: usize) -> Result<()> {
        if !(self.min_um >= 0.0 && self.max_um > self.min_um) {
            return Err(Error::invalid(
                "validity",
                format!("empty window [{}, {}] um", self.min_um, self.max_um),
            ));
        }
        let samples = samples.max(2);
        let lo = self.min_um.max(0.1);
        let hi = if self.max_um.is_finite() {
            self.max_um
        } else {
            lo * 10.0
        };
        for k in 0..samples {
            let um = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
            let no2 = self.ordinary.n_squared(um);
            let ne2 = self.extraordinary.n_squared(um);
            if !(no2 > 1.0 && ne2 > 1.0) {
                return Err(Error::invalid("sellmeier", format!("n^2 <= 1 at {um} um")));
            }
            if !(ne2 < no2) {
                return Err(Error::invalid(
                    "sellmeier",
                    format!("n_e >= n_o at {um} um; crystal must be negative uniaxial"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::omega_from_wavelength;
    use approx::assert_relative_eq;

    // Hand evaluation of the BBO polynomial at 0.78 um:
    //   n_o^2 = 2.7359 + 0.01878/(0.6084 - 0.01822) - 0.01354*0.6084 = 2.759417...
    //   n_e^2 = 2.3753 + 0.01224/(0.6084 - 0.01667) - 0.01516*0.6084 = 2.386634...
    #[test]
    fn bbo_indices_at_780nm() {
        let bbo = SellmeierSet::bbo();
        let n_o = bbo.index(Polarization::Ordinary, 780e-9).unwrap();
        let n_e = bbo.index(Polarization::Extraordinary, 780e-9).unwrap();
        let no2 = 2.7359 + 0.01878 / (0.6084 - 0.01822) - 0.01354 * 0.6084;
        let ne2 = 2.3753 + 0.01224 / (0.6084 - 0.01667) - 0.01516 * 0.6084;
        assert_relative_eq!(n_o, no2.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(n_e, ne2.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(n_o, 1.661_169_185_975_28, max_relative = 1e-12);
        assert_relative_eq!(n_e, 1.544_914_808_577_77, max_relative = 1e-12);
    }

    #[test]
    fn out_of_window_is_rejected() {
        let err = SellmeierSet::bbo()
            .index(Polarization::Ordinary, 1.5e-6)
            .unwrap_err();
        assert!(
            matches!(err, Error::WavelengthOutOfRange { min_um, max_um, .. } if min_um == 0.2 && max_um == 1.1)
        );
        assert!(SellmeierSet::bbo()
            .index(Polarization::Ordinary, 150e-9)
            .is_err());
    }

    #[test]
    fn constant_set_is_flat() {
        let set = SellmeierSet::constant("flat", 1.7, 1.6);
        for lambda in [300e-9, 780e-9, 5e-6] {
            assert_relative_eq!(
                set.index(Polarization::Ordinary, lambda).unwrap(),
                1.7,
                max_relative = 1e-15
            );
            assert_eq!(
                set.dn_domega(Polarization::Extraordinary, omega_from_wavelength(lambda))
                    .unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn analytic_frequency_derivative_matches_differences() {
        let bbo = SellmeierSet::bbo();
        for lambda in [390e-9, 780e-9] {
            let w = omega_from_wavelength(lambda);
            for pol in [Polarization::Ordinary, Polarization::Extraordinary] {
                let h = 1e-6 * w;
                let fd = (bbo.index_at_omega(pol, w + h).unwrap()
                    - bbo.index_at_omega(pol, w - h).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(bbo.dn_domega(pol, w).unwrap(), fd, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn bbo_is_negative_uniaxial() {
        SellmeierSet::bbo().validate(500).unwrap();
        assert!(SellmeierSet::constant("positive", 1.5, 1.6)
            .validate(10)
            .is_err());
    }
}
