//! Physical constants, unit conversions and spectral-width conventions.

use core::f64::consts::PI;
use num_traits::Float;

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

pub fn omega_from_wavelength(lambda: f64) -> f64 {
    2.0 * PI * C / lambda
}

pub fn wavelength_from_omega(omega: f64) -> f64 {
    2.0 * PI * C / omega
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}

/// How a quoted spectral width (in wavelength) maps onto the `sigma` of an
/// amplitude spectrum `exp(-(w - w0)^2 / (2 sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthConvention {
    /// Full width at half maximum of the intensity spectrum `|A|^2`.
    #[default]
    FwhmIntensity,
    /// Full width at half maximum of the amplitude `|A|`.
    FwhmAmplitude,
    /// The quoted width is `sigma` itself.
    Sigma,
}

impl WidthConvention {
    pub const ALL: [WidthConvention; 3] = [
        WidthConvention::FwhmIntensity,
        WidthConvention::FwhmAmplitude,
        WidthConvention::Sigma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WidthConvention::FwhmIntensity => "fwhm-intensity",
            WidthConvention::FwhmAmplitude => "fwhm-amplitude",
            WidthConvention::Sigma => "sigma",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Ratio between the quoted width and `sigma`.
    fn width_per_sigma(self) -> f64 {
        match self {
            // |A|^2 = exp(-x^2/sigma^2) is at half maximum for x = sigma sqrt(ln 2)
            WidthConvention::FwhmIntensity => 2.0 * Float::sqrt(core::f64::consts::LN_2),
            WidthConvention::FwhmAmplitude => 2.0 * Float::sqrt(2.0 * core::f64::consts::LN_2),
            WidthConvention::Sigma => 1.0,
        }
    }
}

/// Converts a spectral width quoted in wavelength at `carrier` into the
/// angular-frequency `sigma` of the amplitude spectrum.
pub fn sigma_omega(width: f64, carrier: f64, convention: WidthConvention) -> f64 {
    2.0 * PI * C / (carrier * carrier) * width / convention.width_per_sigma()
}

/// Inverse of [`sigma_omega`].
pub fn width_from_sigma(sigma: f64, carrier: f64, convention: WidthConvention) -> f64 {
    sigma * convention.width_per_sigma() * carrier * carrier / (2.0 * PI * C)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigma_convention_matches_linear_conversion() {
        let s = sigma_omega(5e-9, 390e-9, WidthConvention::Sigma);
        assert_relative_eq!(
            s,
            2.0 * PI * C * 5e-9 / (390e-9f64).powi(2),
            max_relative = 1e-15
        );
    }

    #[test]
    fn fwhm_intensity_is_half_maximum_of_intensity() {
        let sigma = sigma_omega(1e-9, 780e-9, WidthConvention::FwhmIntensity);
        let fwhm = 2.0 * PI * C / (780e-9f64).powi(2) * 1e-9;
        let half = (-(fwhm / 2.0).powi(2) / (sigma * sigma)).exp();
        assert_relative_eq!(half, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn width_round_trip() {
        for conv in WidthConvention::ALL {
            let s = sigma_omega(17e-9, 780e-9, conv);
            assert_relative_eq!(
                width_from_sigma(s, 780e-9, conv),
                17e-9,
                max_relative = 1e-14
            );
            assert_eq!(WidthConvention::from_name(conv.name()), Some(conv));
        }
    }
}
