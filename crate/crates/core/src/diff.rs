//! Central finite differences with Richardson extrapolation and an observed
//! convergence-order estimate from three successive step halvings.

use num_traits::Float;

use crate::Result;

/// A derivative estimate at steps `h`, `h/2`, `h/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    /// Richardson-extrapolated value from the two finest steps.
    pub value: f64,
    /// Raw central-difference estimates at `h`, `h/2`, `h/4`.
    pub raw: [f64; 3],
    /// `log2(|D(h) - D(h/2)| / |D(h/2) - D(h/4)|)`; infinite when the
    /// differences are already below `noise`.
    pub observed_order: f64,
}

impl Derivative {
    fn from_raw(raw: [f64; 3], noise: f64) -> Self {
        let d1 = (raw[0] - raw[1]).abs();
        let d2 = (raw[1] - raw[2]).abs();
        let observed_order = if d1 <= noise && d2 <= noise {
            f64::INFINITY
        } else if d2 <= noise {
            // second difference hit the floor: at least as good as the first
            f64::INFINITY
        } else {
            Float::log2(d1 / d2)
        };
        Self {
            value: (4.0 * raw[2] - raw[1]) / 3.0,
            raw,
            observed_order,
        }
    }

    /// Absolute change between the two finest raw estimates.
    pub fn difference(&self) -> f64 {
        (self.raw[1] - self.raw[2]).abs()
    }

    pub fn converged(&self, min_order: f64) -> bool {
        self.observed_order >= min_order
    }
}

/// `f'(x)` by central differences.
pub fn first<F>(mut f: F, x: f64, h: f64, noise: f64) -> Result<Derivative>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut raw = [0.0; 3];
    for (k, slot) in raw.iter_mut().enumerate() {
        let step = h / (1 << k) as f64;
        *slot = (f(x + step)? - f(x - step)?) / (2.0 * step);
    }
    Ok(Derivative::from_raw(raw, noise))
}

/// `f''(x)` by the three-point central stencil.
pub fn second<F>(mut f: F, x: f64, h: f64, noise: f64) -> Result<Derivative>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(x)?;
    let mut raw = [0.0; 3];
    for (k, slot) in raw.iter_mut().enumerate() {
        let step = h / (1 << k) as f64;
        *slot = (f(x + step)? - 2.0 * f0 + f(x - step)?) / (step * step);
    }
    Ok(Derivative::from_raw(raw, noise))
}

/// Mixed partial `d^2 f / dx dy` by the four-point stencil. Symmetric in its
/// arguments by construction.
pub fn mixed<F>(mut f: F, x: f64, y: f64, hx: f64, hy: f64, noise: f64) -> Result<Derivative>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut raw = [0.0; 3];
    for (k, slot) in raw.iter_mut().enumerate() {
        let scale = (1 << k) as f64;
        let (sx, sy) = (hx / scale, hy / scale);
        *slot = (f(x + sx, y + sy)? - f(x + sx, y - sy)? - f(x - sx, y + sy)? + f(x - sx, y - sy)?)
            / (4.0 * sx * sy);
    }
    Ok(Derivative::from_raw(raw, noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_first_derivative_is_second_order() {
        let d = first(|x| Ok(x.exp()), 0.3, 1e-2, 1e-14).unwrap();
        assert_relative_eq!(d.value, 0.3f64.exp(), max_relative = 1e-9);
        assert!(
            (d.observed_order - 2.0).abs() < 0.05,
            "{}",
            d.observed_order
        );
    }

    #[test]
    fn sin_second_and_mixed() {
        let d = second(|x| Ok(x.sin()), 0.7, 1e-2, 1e-14).unwrap();
        assert_relative_eq!(d.value, -(0.7f64.sin()), max_relative = 1e-8);
        assert!(d.converged(1.9));
        let m = mixed(|x, y| Ok((x * y).sin()), 0.4, 0.9, 1e-2, 1e-2, 1e-14).unwrap();
        let exact = (0.36f64).cos() - 0.36 * (0.36f64).sin();
        assert_relative_eq!(m.value, exact, max_relative = 1e-8);
        assert!(m.converged(1.9));
    }

    #[test]
    fn polynomial_of_degree_two_is_exact() {
        let d = first(|x| Ok(3.0 * x * x + x), 1.0, 0.1, 1e-12).unwrap();
        assert!(d.observed_order.is_infinite());
        assert_relative_eq!(d.value, 7.0, max_relative = 1e-12);
    }
}
