//! Maximization of the coupling probability over crystal length and waists.
//!
//! Derivative-free throughout: Nelder-Mead in log coordinates with box
//! bounds and fixed multi-starts for `(L, w)`, golden-section search for
//! the pump waist and the mode offset.

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use crate::model::{optimal_h, total_probability_at_offset, SetupParams, SpectrumForm};
use crate::numeric::{NumericOracle, PointMap};
use crate::{Error, OpticalConstants, Result};

/// Anything that maps a setup to a coupling probability.
pub trait Objective {
    fn constants(&self) -> &OpticalConstants;

    /// Spectral widths and fiber angles used for every evaluated setup.
    fn template(&self) -> &SetupParams;

    fn evaluate(&self, setup: &SetupParams) -> Result<f64>;

    /// Setup at `(L, w, w_P)` with the offset at its closed-form optimum.
    fn setup_at(&self, length: f64, fiber_waist: f64, pump_waist: f64) -> SetupParams {
        let mut s = *self.template();
        s.length = length;
        s.fiber_waist = fiber_waist;
        s.pump_waist = pump_waist;
        s.offset = optimal_h(&s, self.constants());
        s
    }

    fn probability_at(&self, length: f64, fiber_waist: f64, pump_waist: f64) -> Result<f64> {
        self.evaluate(&self.setup_at(length, fiber_waist, pump_waist))
    }
}

/// Closed-form probability.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticObjective {
    pub constants: OpticalConstants,
    pub template: SetupParams,
    pub form: SpectrumForm,
}

impl AnalyticObjective {
    pub fn new(constants: OpticalConstants, template: SetupParams) -> Self {
        Self {
            constants,
            template,
            form: SpectrumForm::Full,
        }
    }
}

impl Objective for AnalyticObjective {
    fn constants(&self) -> &OpticalConstants {
        &self.constants
    }

    fn template(&self) -> &SetupParams {
        &self.template
    }

    fn evaluate(&self, setup: &SetupParams) -> Result<f64> {
        total_probability_at_offset(setup, &self.constants, self.form)
    }
}

/// Quadrature probability from the numeric oracle, without the refinement
/// check (the optimizer only compares values at one quadrature).
#[derive(Debug, Clone)]
pub struct NumericObjective<M> {
    pub oracle: NumericOracle,
    pub template: SetupParams,
    pub map: M,
}

impl<M: PointMap> Objective for NumericObjective<M> {
    fn constants(&self) -> &OpticalConstants {
        &self.oracle.constants
    }

    fn template(&self) -> &SetupParams {
        &self.template
    }

    fn evaluate(&self, setup: &SetupParams) -> Result<f64> {
        self.oracle.probability(setup, &self.map)
    }
}

/// Box bounds, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub length: (f64, f64),
    pub fiber_waist: (f64, f64),
    pub pump_waist: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            length: (0.05e-3, 20e-3),
            fiber_waist: (5e-6, 500e-6),
            pump_waist: (5e-6, 300e-6),
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("length", self.length),
            ("fiber_waist", self.fiber_waist),
            ("pump_waist", self.pump_waist),
        ] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::invalid(name, format!("bad bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationResult {
    pub length: f64,
    pub fiber_waist: f64,
    pub pump_waist: f64,
    pub offset: f64,
    pub p_max: f64,
    pub evaluations: usize,
    /// Simplex (or bracket) below tolerance and the argmax off the bounds.
    pub converged: bool,
    pub on_boundary: bool,
}

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Stop when every vertex lies within this distance of the best one in
    /// every log coordinate (relative parameter tolerance).
    pub tolerance: f64,
    pub max_evaluations: usize,
    /// Initial simplex edge in log coordinates.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_evaluations: 400,
            initial_step: 0.3,
        }
    }
}

/// Outcome of a minimization in `N` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization of `f` on the box `[lo, hi]`; trial points
/// are projected onto the box.
pub fn nelder_mead<const N: usize, F>(
    mut f: F,
    start: [f64; N],
    lo: [f64; N],
    hi: [f64; N],
    settings: &NelderMead,
) -> Result<Minimum<N>>
where
    F: FnMut(&[f64; N]) -> Result<f64>,
{
    let clamp = |x: [f64; N]| -> [f64; N] { core::array::from_fn(|k| x[k].clamp(lo[k], hi[k])) };
    let mut evaluations = 0;
    let mut eval = |x: &[f64; N], evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        let v = f(x)?;
        // treat NaN as worse than anything
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };

    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    let x0 = clamp(start);
    simplex.push((x0, eval(&x0, &mut evaluations)?));
    for k in 0..N {
        let mut x = x0;
        // step inward if the start sits on the upper bound
        x[k] = if x0[k] + settings.initial_step <= hi[k] {
            x0[k] + settings.initial_step
        } else {
            x0[k] - settings.initial_step
        };
        let x = clamp(x);
        simplex.push((x, eval(&x, &mut evaluations)?));
    }

    let mut converged = false;
    while evaluations < settings.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0;
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| (0..N).map(|k| (x[k] - best[k]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size < settings.tolerance {
            converged = true;
            break;
        }
        let centroid: [f64; N] = core::array::from_fn(|k| {
            simplex[..N].iter().map(|(x, _)| x[k]).sum::<f64>() / N as f64
        });
        let worst = simplex[N];
        let along = |t: f64| -> [f64; N] {
            clamp(core::array::from_fn(|k| {
                centroid[k] + t * (worst.0[k] - centroid[k])
            }))
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evaluations)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evaluations)?;
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(-0.5);
                (x, eval(&x, &mut evaluations)?)
            } else {
                let x = along(0.5);
                (x, eval(&x, &mut evaluations)?)
            };
            if fc < worst.1.min(fr) {
                simplex[N] = (xc, fc);
            } else {
                let x_best = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let x = clamp(core::array::from_fn(|k| {
                        x_best[k] + 0.5 * (vertex.0[k] - x_best[k])
                    }));
                    *vertex = (x, eval(&x, &mut evaluations)?);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(Minimum {
        x: simplex[0].0,
        value: simplex[0].1,
        evaluations,
        converged,
    })
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]` down to a
/// bracket narrower than `tol`. Returns `(x, f(x), evaluations)`.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r = 0.5 * (Float::sqrt(5.0) - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut n = 2;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
        n += 1;
    }
    Ok(if fc >= fd { (c, fc, n) } else { (d, fd, n) })
}

/// Fixed multi-start positions as fractions of each log-bound range.
const STARTS: [[f64; 2]; 4] = [[0.3, 0.3], [0.7, 0.3], [0.3, 0.7], [0.6, 0.6]];

/// Maximizes `p(L, w)` at fixed pump waist, offset at its optimum.
pub fn optimize_lw<O: Objective + ?Sized>(
    pump_waist: f64,
    objective: &O,
    bounds: &Bounds,
    settings: &NelderMead,
) -> Result<OptimizationResult> {
    optimize_lw_from(pump_waist, objective, bounds, settings, &STARTS)
}

/// [`optimize_lw`] from explicit start fractions.
pub fn optimize_lw_from<O: Objective + ?Sized>(
    pump_waist: f64,
    objective: &O,
    bounds: &Bounds,
    settings: &NelderMead,
    starts: &[[f64; 2]],
) -> Result<OptimizationResult> {
    bounds.validate()?;
    let lo = [Float::ln(bounds.length.0), Float::ln(bounds.fiber_waist.0)];
    let hi = [Float::ln(bounds.length.1), Float::ln(bounds.fiber_waist.1)];
    let cost = |x: &[f64; 2]| -> Result<f64> {
        let p = objective.probability_at(Float::exp(x[0]), Float::exp(x[1]), pump_waist)?;
        if !(p > 0.0) {
            return Err(Error::Objective(format!(
                "non-positive probability {p} at L = {:e}, w = {:e}",
                x[0].exp(),
                x[1].exp()
            )));
        }
        Ok(-Float::ln(p))
    };
    let mut best: Option<Minimum<2>> = None;
    let mut evaluations = 0;
    let mut all_converged = true;
    for s in starts {
        let start = [
            lo[0] + s[0] * (hi[0] - lo[0]),
            lo[1] + s[1] * (hi[1] - lo[1]),
        ];
        let m = nelder_mead(cost, start, lo, hi, settings)?;
        evaluations += m.evaluations;
        all_converged &= m.converged;
        // strict comparison keeps the earliest start on ties
        if best.is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.ok_or_else(|| Error::invalid("starts", "no start points"))?;
    let on_boundary = (0..2)
        .any(|k| best.x[k] - lo[k] < settings.tolerance || hi[k] - best.x[k] < settings.tolerance);
    let (length, fiber_waist) = (Float::exp(best.x[0]), Float::exp(best.x[1]));
    let setup = objective.setup_at(length, fiber_waist, pump_waist);
    Ok(OptimizationResult {
        length,
        fiber_waist,
        pump_waist,
        offset: setup.offset,
        p_max: Float::exp(-best.value),
        evaluations,
        converged: best.converged && !on_boundary && all_converged,
        on_boundary,
    })
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub residual_rms: f64,
    pub points: usize,
}

impl LinearFit {
    pub const MIN_POINTS: usize = 8;

    pub fn fit(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid("fit", "x and y lengths differ"));
        }
        let n = x.len();
        if n < Self::MIN_POINTS {
            return Err(Error::invalid(
                "fit",
                format!("needs at least {} points, got {n}", Self::MIN_POINTS),
            ));
        }
        let nf = n as f64;
        let mx = x.iter().sum::<f64>() / nf;
        let my = y.iter().sum::<f64>() / nf;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        if !(sxx > 0.0) {
            return Err(Error::Degenerate("all fit abscissae coincide"));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        Ok(Self {
            intercept,
            slope,
            residual_rms: Float::sqrt(ss / nf),
            points: n,
        })
    }
}

/// Optimum-geometry lines over a pump-waist grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumLines {
    /// `w_opt` against `w_P`.
    pub fiber_waist: LinearFit,
    /// `L_opt` against `w_P`.
    pub length: LinearFit,
    pub optima: Vec<OptimizationResult>,
    /// Grid points left out because the inner optimization did not converge.
    pub excluded: Vec<OptimizationResult>,
}

pub fn fit_optimum_lines<O: Objective + ?Sized>(
    pump_waists: &[f64],
    objective: &O,
    bounds: &Bounds,
    settings: &NelderMead,
) -> Result<OptimumLines> {
    let mut optima = Vec::new();
    let mut excluded = Vec::new();
    for &wp in pump_waists {
        let r = optimize_lw(wp, objective, bounds, settings)?;
        if r.converged {
            optima.push(r);
        } else {
            excluded.push(r);
        }
    }
    let x: Vec<f64> = optima.iter().map(|r| r.pump_waist).collect();
    let w: Vec<f64> = optima.iter().map(|r| r.fiber_waist).collect();
    let l: Vec<f64> = optima.iter().map(|r| r.length).collect();
    Ok(OptimumLines {
        fiber_waist: LinearFit::fit(&x, &w)?,
        length: LinearFit::fit(&x, &l)?,
        optima,
        excluded,
    })
}

/// `n` pump waists evenly spaced on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return alloc::vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// How `(L, w)` follow the pump waist in [`find_global_wp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Re-optimize `(L, w)` at every trial pump waist.
    Optimized,
    /// Take `(L, w)` from fitted optimum lines.
    Lines {
        fiber_waist: LinearFit,
        length: LinearFit,
    },
}

impl Geometry {
    pub fn from_lines(lines: &OptimumLines) -> Self {
        Geometry::Lines {
            fiber_waist: lines.fiber_waist,
            length: lines.length,
        }
    }
}

/// Settings for [`find_global_wp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalSearch {
    /// Log-spaced pump waists scanned before bracketing.
    pub coarse_points: usize,
    /// Final bracket width in `ln w_P`.
    pub tolerance: f64,
    pub inner: NelderMead,
    pub geometry: Geometry,
}

impl Default for GlobalSearch {
    fn default() -> Self {
        Self {
            coarse_points: 7,
            tolerance: 1e-2,
            inner: NelderMead::default(),
            geometry: Geometry::Optimized,
        }
    }
}

fn at_pump_waist<O: Objective + ?Sized>(
    pump_waist: f64,
    objective: &O,
    bounds: &Bounds,
    search: &GlobalSearch,
) -> Result<OptimizationResult> {
    match search.geometry {
        Geometry::Optimized => optimize_lw(pump_waist, objective, bounds, &search.inner),
        Geometry::Lines {
            fiber_waist,
            length,
        } => {
            let w = fiber_waist.intercept + fiber_waist.slope * pump_waist;
            let l = length.intercept + length.slope * pump_waist;
            if !(w > 0.0 && l > 0.0) {
                return Err(Error::invalid(
                    "pump_waist",
                    format!("optimum lines give w = {w:e}, L = {l:e} at w_P = {pump_waist:e}"),
                ));
            }
            let setup = objective.setup_at(l, w, pump_waist);
            Ok(OptimizationResult {
                length: l,
                fiber_waist: w,
                pump_waist,
                offset: setup.offset,
                p_max: objective.evaluate(&setup)?,
                evaluations: 1,
                converged: true,
                on_boundary: false,
            })
        }
    }
}

/// Maximizes `p(w_P)` with `(L, w)` either re-optimized or read off the
/// optimum lines at every trial pump waist: a log-spaced scan brackets
/// the best waist, golden section refines it.
pub fn find_global_wp<O: Objective + ?Sized>(
    objective: &O,
    bounds: &Bounds,
    search: &GlobalSearch,
) -> Result<OptimizationResult> {
    bounds.validate()?;
    let (lo, hi) = (
        Float::ln(bounds.pump_waist.0),
        Float::ln(bounds.pump_waist.1),
    );
    let n = search.coarse_points.max(3);
    let mut evaluations = 0;
    let inner = |x: f64, evaluations: &mut usize| -> Result<OptimizationResult> {
        let r = at_pump_waist(Float::exp(x), objective, bounds, search)?;
        *evaluations += r.evaluations;
        Ok(r)
    };
    let grid: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let mut coarse = Vec::with_capacity(n);
    for &x in &grid {
        coarse.push(inner(x, &mut evaluations)?);
    }
    let k = coarse
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.p_max.total_cmp(&b.1.p_max))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(n - 1)];

    let mut best = coarse[k];
    let mut track = |x: f64| -> Result<f64> {
        let r = inner(x, &mut evaluations)?;
        if r.p_max > best.p_max {
            best = r;
        }
        Ok(r.p_max)
    };
    golden_section(&mut track, a, b, search.tolerance)?;
    let x = Float::ln(best.pump_waist);
    let on_boundary = best.on_boundary || x - lo < search.tolerance || hi - x < search.tolerance;
    Ok(OptimizationResult {
        evaluations,
        on_boundary,
        converged: best.converged && !on_boundary,
        ..best
    })
}

/// Offset `h` maximizing `p` at fixed geometry, by golden section on
/// `[lo, hi]` to absolute tolerance `tol` (metres).
pub fn optimize_offset<O: Objective + ?Sized>(
    setup: &SetupParams,
    objective: &O,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<OptimizationResult> {
    let eval = |h: f64| -> Result<f64> {
        let mut s = *setup;
        s.offset = h;
        objective.evaluate(&s)
    };
    let (h, p, evaluations) = golden_section(eval, lo, hi, tol)?;
    let on_boundary = h - lo < tol || hi - h < tol;
    Ok(OptimizationResult {
        length: setup.length,
        fiber_waist: setup.fiber_waist,
        pump_waist: setup.pump_waist,
        offset: h,
        p_max: p,
        evaluations,
        converged: !on_boundary,
        on_boundary,
    })
}

/// Central-difference gradient of `ln p` in `(ln L, ln w)` at an optimum.
pub fn stationarity<O: Objective + ?Sized>(
    result: &OptimizationResult,
    objective: &O,
    step: f64,
) -> Result<[f64; 2]> {
    let f = |dl: f64, dw: f64| -> Result<f64> {
        let p = objective.probability_at(
            result.length * Float::exp(dl),
            result.fiber_waist * Float::exp(dw),
            result.pump_waist,
        )?;
        Ok(Float::ln(p))
    };
    Ok([
        (f(step, 0.0)? - f(-step, 0.0)?) / (2.0 * step),
        (f(0.0, step)? - f(0.0, -step)?) / (2.0 * step),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let f = |x: &[f64; 2]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let s = NelderMead {
            tolerance: 1e-8,
            max_evaluations: 5000,
            initial_step: 0.5,
        };
        let m = nelder_mead(f, [-1.2, 1.0], [-5.0, -5.0], [5.0, 5.0], &s).unwrap();
        assert!(m.converged);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            m.x
        );
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let f = |x: &[f64; 1]| Ok(x[0]);
        let m = nelder_mead(f, [0.5], [0.0], [1.0], &NelderMead::default()).unwrap();
        assert!(m.x[0] >= 0.0 && m.x[0] < 1e-3);
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, fx, _) = golden_section(|x| Ok(-(x - 0.3) * (x - 0.3)), -1.0, 2.0, 1e-9).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx <= 0.0);
    }

    #[test]
    fn collinear_fit_has_zero_residual() {
        let x: Vec<f64> = (0..10).map(|k| k as f64 * 1e-5).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0e-6 + 0.25 * v).collect();
        let f = LinearFit::fit(&x, &y).unwrap();
        assert_relative_eq!(f.slope, 0.25, max_relative = 1e-12);
        assert_relative_eq!(f.intercept, 3.0e-6, max_relative = 1e-9);
        assert!(f.residual_rms < 1e-18);
        assert!(LinearFit::fit(&x[..5], &y[..5]).is_err());
    }
}
