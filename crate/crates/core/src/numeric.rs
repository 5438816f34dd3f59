//! Numerical evaluation of the fiber-coupled amplitude keeping the exact
//! `sinc` phase-matching factor and the second-order (diffraction and
//! dispersion) terms of the mismatch.
//!
//! Transverse integrals: with `sinc(L d-/2) exp(i L d+/2)` written as
//! `1/2 int_{-1}^{1} exp(i L/2 (t d- + d+)) dt`, a quadratic mismatch makes
//! every depth slice `t` a complex Gaussian in the four transverse wave
//! vector components, which is integrated in closed form; the slices are
//! summed with Gauss-Legendre weights. A brute-force tensor rule over the
//! whitened transverse coordinates is kept as an independent check and is
//! the only scheme that can evaluate the full dispersion relations.
//!
//! Frequency integrals run over `u = (ds + di)/sqrt2` and
//! `v = (ds - di)/sqrt2`. Amplitudes are summed coherently over transverse
//! momenta and squared before the frequency sum.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use crate::diff;
use crate::gaussian::{cholesky, gaussian_integral, Cx};
use crate::model::{
    delta_gradient, delta_pm, expansion_point, spectrum_matrix, GradientTable, ModeVector,
    SetupParams, SpectrumForm,
};
use crate::quadrature::{self, GaussLegendre};
use crate::units::C;
use crate::{Crystal, Error, OpticalConstants, Result};

type Mat6 = [[f64; 6]; 6];
/// Quadrature nodes as `(abscissa, weight)`.
type Nodes = Vec<(f64, f64)>;

/// Second-order Taylor expansion of `delta_-` and `delta_+` in
/// `(k_sx, k_sy, k_ix, k_iy, omega_s, omega_i)` around the degenerate
/// phase-matched pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOrder2 {
    /// `delta_-` at the expansion point (zero up to the phase-matching tolerance).
    pub value_minus: f64,
    pub gradient: GradientTable,
    pub hessian_minus: Mat6,
    pub hessian_plus: Mat6,
    /// Smallest observed convergence order over the differenced entries;
    /// infinite for expansions that were not differenced.
    pub min_order: f64,
}

impl ExpansionOrder2 {
    /// Linear expansion with the given gradient and no curvature.
    pub fn first_order(gradient: GradientTable) -> Self {
        Self {
            value_minus: 0.0,
            gradient,
            hessian_minus: [[0.0; 6]; 6],
            hessian_plus: [[0.0; 6]; 6],
            min_order: f64::INFINITY,
        }
    }

    /// The closed-form model's linearization.
    pub fn from_constants(constants: &OpticalConstants) -> Self {
        Self::first_order(delta_gradient(constants))
    }

    pub fn without_curvature(&self) -> Self {
        Self {
            hessian_minus: [[0.0; 6]; 6],
            hessian_plus: [[0.0; 6]; 6],
            ..*self
        }
    }

    /// Reflection `k_y -> -k_y` of every mode, i.e. the optic-axis plane at
    /// the opposite angle.
    pub fn mirrored(&self) -> Self {
        let odd = |a: usize| a == 1 || a == 3;
        let mut out = *self;
        for a in 0..6 {
            if odd(a) {
                out.gradient.minus[a] = -out.gradient.minus[a];
                out.gradient.plus[a] = -out.gradient.plus[a];
            }
            for b in 0..6 {
                if odd(a) != odd(b) {
                    out.hessian_minus[a][b] = -out.hessian_minus[a][b];
                    out.hessian_plus[a][b] = -out.hessian_plus[a][b];
                }
            }
        }
        out
    }

    /// `(delta_-, delta_+ - delta_+(s0, i0))` at deviation `x`.
    pub fn delta(&self, x: &[f64; 6]) -> (f64, f64) {
        let mut dm = self.value_minus;
        let mut dp = 0.0;
        for a in 0..6 {
            dm += self.gradient.minus[a] * x[a];
            dp += self.gradient.plus[a] * x[a];
            for b in 0..6 {
                dm += 0.5 * self.hessian_minus[a][b] * x[a] * x[b];
                dp += 0.5 * self.hessian_plus[a][b] * x[a] * x[b];
            }
        }
        (dm, dp)
    }

    /// Largest `|H[a][b] - H[b][a]|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for h in [&self.hessian_minus, &self.hessian_plus] {
            let scale = h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for a in 0..6 {
                for b in 0..a {
                    if scale > 0.0 {
                        worst = worst.max((h[a][b] - h[b][a]).abs() / scale);
                    }
                }
            }
        }
        worst
    }
}

/// Finite-difference steps for [`expand_delta_order2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Largest step, relative to `omega0 / c` for wave vectors and to
    /// `omega0` for frequencies. Two halvings follow.
    pub relative_step: f64,
    /// Minimum observed order accepted for every entry.
    pub min_order: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            relative_step: 1e-2,
            min_order: 1.95,
        }
    }
}

/// Gradient and Hessian of `delta_+-` by central differences of the
/// dispersion relations, each entry Richardson-extrapolated and checked for
/// second-order convergence.
pub fn expand_delta_order2(
    crystal: &Crystal,
    constants: &OpticalConstants,
    step: &StepControl,
) -> Result<ExpansionOrder2> {
    let (s0, i0) = expansion_point(constants);
    let k = constants.omega0 / C;
    let scale = [k, k, k, k, constants.omega0, constants.omega0];
    let h: [f64; 6] = core::array::from_fn(|a| step.relative_step * scale[a]);

    let eval = |x: &[f64; 6]| -> Result<(f64, f64)> {
        let s = ModeVector::new(s0.kx + x[0], s0.ky + x[1], s0.omega + x[4]);
        let i = ModeVector::new(i0.kx + x[2], i0.ky + x[3], i0.omega + x[5]);
        delta_pm(crystal, &s, &i)
    };
    let (value_minus, value_plus) = eval(&[0.0; 6])?;
    let magnitude = value_plus.abs();
    let floor = 64.0 * f64::EPSILON * magnitude;

    let component = |sign: usize, x: &[f64; 6]| -> Result<f64> {
        let d = eval(x)?;
        Ok(if sign == 0 { d.0 } else { d.1 })
    };
    let names = ["k_sx", "k_sy", "k_ix", "k_iy", "omega_s", "omega_i"];
    let label = ["delta-", "delta+"];
    let mut min_order = f64::INFINITY;
    let mut check =
        |d: diff::Derivative, what: &dyn Fn() -> alloc::string::String| -> Result<f64> {
            if !d.converged(step.min_order) {
                return Err(Error::Derivative {
                    what: what(),
                    observed_order: d.observed_order,
                    difference: d.difference(),
                });
            }
            min_order = min_order.min(d.observed_order);
            Ok(d.value)
        };

    let mut grad = [[0.0; 6]; 2];
    let mut hess = [[[0.0; 6]; 6]; 2];
    for sign in 0..2 {
        for a in 0..6 {
            let along = |t: f64| {
                let mut x = [0.0; 6];
                x[a] = t;
                component(sign, &x)
            };
            let d = diff::first(along, 0.0, h[a], floor / h[a])?;
            grad[sign][a] = check(d, &|| format!("d {}/d {}", label[sign], names[a]))?;
            let d2 = diff::second(along, 0.0, h[a], 4.0 * floor / (h[a] * h[a]))?;
            hess[sign][a][a] = check(d2, &|| format!("d2 {}/d {}^2", label[sign], names[a]))?;
            for b in 0..a {
                let plane = |ta: f64, tb: f64| {
                    let mut x = [0.0; 6];
                    x[a] = ta;
                    x[b] = tb;
                    component(sign, &x)
                };
                let d = diff::mixed(plane, 0.0, 0.0, h[a], h[b], floor / (h[a] * h[b]))?;
                let v = check(d, &|| {
                    format!("d2 {}/d {} d {}", label[sign], names[a], names[b])
                })?;
                hess[sign][a][b] = v;
                hess[sign][b][a] = v;
            }
        }
    }
    Ok(ExpansionOrder2 {
        value_minus,
        gradient: GradientTable {
            minus: grad[0],
            plus: grad[1],
        },
        hessian_minus: hess[0],
        hessian_plus: hess[1],
        min_order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchingFactor {
    /// `sinc(L delta_- / 2)`.
    #[default]
    Sinc,
    /// `exp(-(L delta_-)^2 / 16)`, the closed-form model's substitute.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransverseScheme {
    /// Closed-form Gaussian per depth slice, Gauss-Legendre over depth.
    #[default]
    Slices,
    /// Tensor Gauss-Legendre over whitened transverse coordinates.
    Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyScheme {
    /// Composite Gauss-Legendre along `u`, plain along `v`.
    #[default]
    TensorGauss,
    /// Nested adaptive Gauss-Kronrod.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Tensor-scheme nodes per transverse axis.
    pub transverse_points: usize,
    /// Tensor-scheme half-width in whitened units (multiples of the mode
    /// envelope width).
    pub transverse_span: f64,
    /// Minimum frequency nodes per axis.
    pub frequency_points: usize,
    /// Half-width in multiples of the marginal standard deviation.
    pub frequency_span: f64,
    /// Gauss-Legendre nodes per panel along the sum frequency.
    pub panel_points: usize,
    /// Minimum depth slices.
    pub depth_points: usize,
    pub transverse: TransverseScheme,
    pub scheme: FrequencyScheme,
    /// Accepted relative change under refinement.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            transverse_points: 32,
            transverse_span: 5.0,
            frequency_points: 48,
            frequency_span: 4.0,
            panel_points: 16,
            depth_points: 32,
            transverse: TransverseScheme::Slices,
            scheme: FrequencyScheme::TensorGauss,
            tolerance: 5e-3,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("transverse_points", self.transverse_points),
            ("frequency_points", self.frequency_points),
            ("panel_points", self.panel_points),
            ("depth_points", self.depth_points),
        ];
        for (name, n) in counts {
            if n < 8 {
                return Err(Error::invalid(
                    name,
                    format!("needs at least 8 points, got {n}"),
                ));
            }
        }
        for (name, s) in [
            ("transverse_span", self.transverse_span),
            ("frequency_span", self.frequency_span),
        ] {
            if !(s >= 3.0 && s.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("needs a span of at least 3, got {s}"),
                ));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }

    /// Every point count doubled.
    pub fn refined(&self) -> Self {
        Self {
            transverse_points: 2 * self.transverse_points,
            frequency_points: 2 * self.frequency_points,
            panel_points: 2 * self.panel_points,
            depth_points: 2 * self.depth_points,
            ..*self
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let s = |n: usize| ((n as f64 * factor).round() as usize).max(8);
        Self {
            transverse_points: s(self.transverse_points),
            frequency_points: s(self.frequency_points),
            panel_points: s(self.panel_points),
            depth_points: s(self.depth_points),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumericOptions {
    pub factor: MatchingFactor,
    /// Keep the second-order mismatch terms (diffraction and group-velocity
    /// dispersion). Without them the beams are effectively collimated.
    pub quadratic_phases: bool,
    /// Evaluate the exact dispersion relations at every transverse node
    /// instead of the expansion. Tensor scheme only; slow.
    pub full_dispersion: bool,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            factor: MatchingFactor::Sinc,
            quadratic_phases: true,
            full_dispersion: false,
        }
    }
}

impl NumericOptions {
    /// Gaussian matching factor, no curvature: the closed-form model's
    /// approximations, evaluated by quadrature.
    pub fn reduced() -> Self {
        Self {
            factor: MatchingFactor::Gaussian,
            quadratic_phases: false,
            full_dispersion: false,
        }
    }
}

/// Order-preserving map over indices; lets callers supply a parallel
/// implementation without the oracle depending on a thread pool.
pub trait PointMap: Sync {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl PointMap for Serial {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Quadrature of a probability with its refinement check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub refined: f64,
    pub relative_change: f64,
}

/// Gaussian part of the integrand from the pump, the fiber modes and the
/// spectral filters: `exp(-q^T M q / 2 + b^T q + c)` over
/// `q = (k_sx, k_sy, k_ix, k_iy) - (k_s0, k_i0)`.
#[derive(Debug, Clone, Copy)]
struct Envelope {
    m: [[Cx; 4]; 4],
    b: [Cx; 4],
    c: Cx,
}

fn zero() -> Cx {
    Cx::new(0.0, 0.0)
}

fn envelope(ds: f64, di: f64, setup: &SetupParams, constants: &OpticalConstants) -> Envelope {
    let mut m = [[zero(); 4]; 4];
    let mut b = [zero(); 4];
    let mut c = zero();
    let p2 = 0.5 * setup.pump_waist * setup.pump_waist;
    for (x, y) in [(0, 2), (1, 3)] {
        m[x][x] += p2;
        m[y][y] += p2;
        m[x][y] += p2;
        m[y][x] += p2;
    }
    let w2 = setup.fiber_waist * setup.fiber_waist;
    let (theta_s, theta_i) = setup.fiber_angles_or_default(constants);
    let k0 = constants.k_transverse();
    let a_s = (constants.omega0 + ds) * theta_s / C - k0;
    let a_i = (constants.omega0 + di) * theta_i / C + k0;
    for (idx, a, h) in [(0, a_s, setup.offset), (2, a_i, -setup.offset)] {
        m[idx][idx] += 0.5 * w2;
        m[idx + 1][idx + 1] += 0.5 * w2;
        b[idx] += Cx::new(0.5 * w2 * a, h);
        c += Cx::new(-0.25 * w2 * a * a, -h * a);
    }
    let sp2 = setup.pump_sigma * setup.pump_sigma;
    let sf2 = setup.filter_sigma * setup.filter_sigma;
    c += -(ds + di) * (ds + di) / (2.0 * sp2) - (ds * ds + di * di) / (2.0 * sf2);
    Envelope { m, b, c }
}

/// The numeric oracle: constants, expansion, quadrature and options bundled.
#[derive(Debug, Clone)]
pub struct NumericOracle {
    pub constants: OpticalConstants,
    pub expansion: ExpansionOrder2,
    pub quadrature: QuadratureSpec,
    pub options: NumericOptions,
    /// Needed only for full-dispersion evaluation.
    pub crystal: Option<Crystal>,
}

impl NumericOracle {
    pub fn new(
        constants: OpticalConstants,
        expansion: ExpansionOrder2,
        quadrature: QuadratureSpec,
    ) -> Self {
        Self {
            constants,
            expansion,
            quadrature,
            options: NumericOptions::default(),
            crystal: None,
        }
    }

    pub fn with_options(mut self, options: NumericOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureSpec) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn with_crystal(mut self, crystal: Crystal) -> Self {
        self.crystal = Some(crystal);
        self
    }

    fn check(&self, setup: &SetupParams) -> Result<()> {
        setup.validate()?;
        self.quadrature.validate()?;
        if self.options.full_dispersion {
            if self.quadrature.transverse != TransverseScheme::Tensor {
                return Err(Error::Unsupported(
                    "full-dispersion evaluation needs the tensor transverse scheme",
                ));
            }
            if self.crystal.is_none() {
                return Err(Error::invalid(
                    "crystal",
                    "full-dispersion evaluation needs the crystal",
                ));
            }
        }
        if self.options.factor == MatchingFactor::Gaussian
            && self.options.quadratic_phases
            && self.quadrature.transverse == TransverseScheme::Slices
        {
            return Err(Error::Unsupported(
                "Gaussian matching factor with curvature needs the tensor transverse scheme",
            ));
        }
        Ok(())
    }

    fn hessians(&self) -> (Mat6, Mat6) {
        if self.options.quadratic_phases {
            (self.expansion.hessian_minus, self.expansion.hessian_plus)
        } else {
            ([[0.0; 6]; 6], [[0.0; 6]; 6])
        }
    }

    /// Complex coupled amplitude at absolute frequencies.
    pub fn amplitude(&self, omega_s: f64, omega_i: f64, setup: &SetupParams) -> Result<Cx> {
        self.check(setup)?;
        let ds = omega_s - self.constants.omega0;
        let di = omega_i - self.constants.omega0;
        let depth = GaussLegendre::new(self.depth_points(ds, di, setup));
        let transverse = GaussLegendre::new(self.quadrature.transverse_points);
        self.amplitude_with(ds, di, setup, &depth, &transverse)
    }

    pub fn jsa(&self, omega_s: f64, omega_i: f64, setup: &SetupParams) -> Result<f64> {
        Ok(self.amplitude(omega_s, omega_i, setup)?.norm())
    }

    /// `|psi|` at the current and at the refined quadrature.
    pub fn jsa_verified(&self, omega_s: f64, omega_i: f64, setup: &SetupParams) -> Result<f64> {
        let coarse = self.jsa(omega_s, omega_i, setup)?;
        let refined = self
            .clone()
            .with_quadrature(self.quadrature.refined())
            .jsa(omega_s, omega_i, setup)?;
        verify(coarse, refined, self.quadrature.tolerance).map(|e| e.value)
    }

    /// Depth slices: the minimum plus enough to resolve the `t` phase
    /// `L/2 t delta_-` across the frequency detuning and the transverse
    /// envelope.
    fn depth_points(&self, ds: f64, di: f64, setup: &SetupParams) -> usize {
        let g = &self.expansion.gradient.minus;
        let spectral = (g[4] * ds + g[5] * di + self.expansion.value_minus).abs();
        let inv_w = 2.0 / setup.fiber_waist.min(setup.pump_waist);
        let transverse = (g[0].abs() + g[1].abs() + g[2].abs() + g[3].abs()) * inv_w;
        let x = 0.5 * setup.length * (spectral + transverse);
        self.quadrature.depth_points + Float::ceil(0.75 * x) as usize
    }

    fn amplitude_with(
        &self,
        ds: f64,
        di: f64,
        setup: &SetupParams,
        depth: &GaussLegendre,
        transverse: &GaussLegendre,
    ) -> Result<Cx> {
        let env = envelope(ds, di, setup, &self.constants);
        let w2 = setup.fiber_waist * setup.fiber_waist;
        let norm = setup.pump_waist * w2 / (2.0 * PI) * setup.length;
        match self.quadrature.transverse {
            TransverseScheme::Tensor => Ok(self.tensor(&env, ds, di, setup, transverse)? * norm),
            TransverseScheme::Slices => match self.options.factor {
                MatchingFactor::Gaussian => Ok(self.gaussian_factor(&env, ds, di, setup)? * norm),
                MatchingFactor::Sinc => Ok(self.slices(&env, ds, di, setup, depth)? * (0.5 * norm)),
            },
        }
    }

    fn slices(
        &self,
        env: &Envelope,
        ds: f64,
        di: f64,
        setup: &SetupParams,
        depth: &GaussLegendre,
    ) -> Result<Cx> {
        let half = 0.5 * setup.length;
        let dw = [ds, di];
        let g = &self.expansion.gradient;
        let (hm, hp) = self.hessians();
        let mut sum = zero();
        for (t, wt) in depth.nodes.iter().zip(depth.weights.iter()) {
            let mut m = env.m;
            let mut b = env.b;
            let mut c = env.c + Cx::new(0.0, half * t * self.expansion.value_minus);
            for a in 0..4 {
                let mut lin = t * g.minus[a] + g.plus[a];
                for (k, d) in dw.iter().enumerate() {
                    lin += (t * hm[a][4 + k] + hp[a][4 + k]) * d;
                }
                b[a] += Cx::new(0.0, half * lin);
                for bb in 0..4 {
                    m[a][bb] -= Cx::new(0.0, half * (t * hm[a][bb] + hp[a][bb]));
                }
            }
            let mut phase = 0.0;
            for k in 0..2 {
                phase += (t * g.minus[4 + k] + g.plus[4 + k]) * dw[k];
                for l in 0..2 {
                    phase += 0.5 * dw[k] * (t * hm[4 + k][4 + l] + hp[4 + k][4 + l]) * dw[l];
                }
            }
            c += Cx::new(0.0, half * phase);
            sum += gaussian_integral(&m, &b, c)? * *wt;
        }
        Ok(sum)
    }

    fn gaussian_factor(&self, env: &Envelope, ds: f64, di: f64, setup: &SetupParams) -> Result<Cx> {
        let l = setup.length;
        let g = &self.expansion.gradient;
        let s = g.minus[4] * ds + g.minus[5] * di + self.expansion.value_minus;
        let sp = g.plus[4] * ds + g.plus[5] * di;
        let q = l * l / 8.0;
        let mut m = env.m;
        let mut b = env.b;
        for a in 0..4 {
            for bb in 0..4 {
                m[a][bb] += q * g.minus[a] * g.minus[bb];
            }
            b[a] += Cx::new(-q * s * g.minus[a], 0.5 * l * g.plus[a]);
        }
        let c = env.c + Cx::new(-0.5 * q * s * s, 0.5 * l * sp);
        gaussian_integral(&m, &b, c)
    }

    fn tensor(
        &self,
        env: &Envelope,
        ds: f64,
        di: f64,
        setup: &SetupParams,
        rule: &GaussLegendre,
    ) -> Result<Cx> {
        let a: [[f64; 4]; 4] = core::array::from_fn(|i| core::array::from_fn(|j| env.m[i][j].re));
        let chol = cholesky(&a)?;
        // centre: A q_c = Re b
        let re_b: [Cx; 4] = core::array::from_fn(|i| Cx::new(env.b[i].re, 0.0));
        let cm: [[Cx; 4]; 4] =
            core::array::from_fn(|i| core::array::from_fn(|j| Cx::new(a[i][j], 0.0)));
        let centre = crate::gaussian::Ldlt::new(&cm)?.solve(&re_b);
        let qc: [f64; 4] = core::array::from_fn(|i| centre[i].re);
        // q = q_c + L^-T z: solve L^T y = z by back substitution
        let back = |z: &[f64; 4]| -> [f64; 4] {
            let mut y = [0.0; 4];
            for i in (0..4).rev() {
                let mut s = z[i];
                for k in i + 1..4 {
                    s -= chol[k][i] * y[k];
                }
                y[i] = s / chol[i][i];
            }
            y
        };
        let jac = 1.0 / (chol[0][0] * chol[1][1] * chol[2][2] * chol[3][3]);
        let span = self.quadrature.transverse_span;
        let nodes: Vec<(f64, f64)> = rule.mapped(-span, span).collect();
        let exact = if self.options.full_dispersion {
            self.crystal.as_ref()
        } else {
            None
        };
        let base_plus = match exact {
            Some(crystal) => {
                let (s0, i0) = expansion_point(&self.constants);
                Some((crystal, s0, i0, delta_pm(crystal, &s0, &i0)?.1))
            }
            None => None,
        };
        let expansion = if self.options.quadratic_phases {
            self.expansion
        } else {
            self.expansion.without_curvature()
        };
        let half = 0.5 * setup.length;

        let mut sum = zero();
        for &(z0, w0) in &nodes {
            for &(z1, w1) in &nodes {
                for &(z2, w2) in &nodes {
                    for &(z3, w3) in &nodes {
                        let z = [z0, z1, z2, z3];
                        let weight = w0
                            * w1
                            * w2
                            * w3
                            * Float::exp(-0.5 * (z0 * z0 + z1 * z1 + z2 * z2 + z3 * z3));
                        if weight < 1e-300 {
                            continue;
                        }
                        let y = back(&z);
                        let q: [f64; 4] = core::array::from_fn(|i| qc[i] + y[i]);
                        // envelope exponent minus its real quadratic part, which the weight carries
                        let mut lin = env.c;
                        for i in 0..4 {
                            lin += Cx::new(0.0, env.b[i].im * q[i]);
                            lin += env.b[i].re * qc[i] * 0.5;
                        }
                        let x = [q[0], q[1], q[2], q[3], ds, di];
                        let (dm, dp) = match base_plus {
                            Some((crystal, s0, i0, p0)) => {
                                let s = ModeVector::new(s0.kx + q[0], s0.ky + q[1], s0.omega + ds);
                                let i = ModeVector::new(i0.kx + q[2], i0.ky + q[3], i0.omega + di);
                                let (m, p) = delta_pm(crystal, &s, &i)?;
                                (m, p - p0)
                            }
                            None => expansion.delta(&x),
                        };
                        let factor = match self.options.factor {
                            MatchingFactor::Sinc => sinc(half * dm),
                            MatchingFactor::Gaussian => {
                                Float::exp(-0.25 * (half * dm) * (half * dm))
                            }
                        };
                        let phase = Cx::new(0.0, half * dp);
                        sum += (lin + phase).exp() * (weight * factor);
                    }
                }
            }
        }
        Ok(sum * jac)
    }

    /// Sum-frequency half-width: the pump and filter envelope alone.
    fn sum_width(&self, setup: &SetupParams) -> f64 {
        let sp2 = setup.pump_sigma * setup.pump_sigma;
        let sf2 = setup.filter_sigma * setup.filter_sigma;
        1.0 / Float::sqrt(2.0 * (2.0 / sp2 + 1.0 / sf2))
    }

    /// Difference-frequency standard deviation of the closed-form `|psi|^2`.
    fn difference_width(&self, setup: &SetupParams) -> Result<f64> {
        let omega = spectrum_matrix(setup, &self.constants, SpectrumForm::Full)
            .or_else(|_| spectrum_matrix(setup, &self.constants, SpectrumForm::SmallAngle))?;
        Ok(omega.sum_difference_widths().1)
    }

    /// Total coupling probability at the current quadrature, no refinement.
    pub fn probability<M: PointMap>(&self, setup: &SetupParams, map: &M) -> Result<f64> {
        self.check(setup)?;
        match self.quadrature.scheme {
            FrequencyScheme::TensorGauss => self.probability_tensor(setup, map),
            FrequencyScheme::Adaptive => self.probability_adaptive(setup),
        }
    }

    /// Probability with the refinement check.
    pub fn probability_verified<M: PointMap>(
        &self,
        setup: &SetupParams,
        map: &M,
    ) -> Result<ProbabilityEstimate> {
        let coarse = self.probability(setup, map)?;
        let refined = self
            .clone()
            .with_quadrature(self.quadrature.refined())
            .probability(setup, map)?;
        verify(coarse, refined, self.quadrature.tolerance)
    }

    fn frequency_nodes(&self, setup: &SetupParams) -> Result<(Nodes, Nodes)> {
        let q = &self.quadrature;
        let span_u = q.frequency_span * self.sum_width(setup);
        let span_v = q.frequency_span * self.difference_width(setup)?;
        let g = &self.expansion.gradient.minus;
        let slope = (g[4] + g[5]).abs() * FRAC_1_SQRT_2 * setup.length;
        let lobes = if slope > 0.0 {
            Float::ceil(2.0 * span_u * slope / (2.0 * PI)) as usize
        } else {
            1
        };
        let panels = q.frequency_points.div_ceil(q.panel_points).max(lobes);
        let u = quadrature::composite(&GaussLegendre::new(q.panel_points), -span_u, span_u, panels);
        let v: Vec<(f64, f64)> = GaussLegendre::new(q.frequency_points)
            .mapped(-span_v, span_v)
            .collect();
        Ok((u, v))
    }

    fn probability_tensor<M: PointMap>(&self, setup: &SetupParams, map: &M) -> Result<f64> {
        let (u, v) = self.frequency_nodes(setup)?;
        let transverse = GaussLegendre::new(self.quadrature.transverse_points);
        let rows = map.map(u.len(), |iu| -> Result<f64> {
            let (uu, wu) = u[iu];
            let mut row = 0.0;
            for &(vv, wv) in &v {
                let ds = FRAC_1_SQRT_2 * (uu + vv);
                let di = FRAC_1_SQRT_2 * (uu - vv);
                let depth = GaussLegendre::new(self.depth_points(ds, di, setup));
                row += wv
                    * self
                        .amplitude_with(ds, di, setup, &depth, &transverse)?
                        .norm_sqr();
            }
            Ok(wu * row)
        });
        let mut total = 0.0;
        for r in rows {
            total += r?;
        }
        Ok(total)
    }

    fn probability_adaptive(&self, setup: &SetupParams) -> Result<f64> {
        let q = &self.quadrature;
        let span_u = q.frequency_span * self.sum_width(setup);
        let span_v = q.frequency_span * self.difference_width(setup)?;
        let transverse = GaussLegendre::new(q.transverse_points);
        let tol = 0.1 * q.tolerance;
        let inner = |uu: f64| -> Result<f64> {
            let f = |vv: f64| -> Result<f64> {
                let ds = FRAC_1_SQRT_2 * (uu + vv);
                let di = FRAC_1_SQRT_2 * (uu - vv);
                let depth = GaussLegendre::new(self.depth_points(ds, di, setup));
                Ok(self
                    .amplitude_with(ds, di, setup, &depth, &transverse)?
                    .norm_sqr())
            };
            quadrature::adaptive(f, -span_v, span_v, tol, 0.0, 200)
        };
        quadrature::adaptive(inner, -span_u, span_u, tol, 0.0, 400)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        Float::sin(x) / x
    }
}

fn verify(coarse: f64, refined: f64, tolerance: f64) -> Result<ProbabilityEstimate> {
    let relative_change = ((refined - coarse) / refined).abs();
    if !(relative_change <= tolerance) {
        return Err(Error::Quadrature {
            coarse,
            refined,
            relative: relative_change,
        });
    }
    Ok(ProbabilityEstimate {
        value: coarse,
        refined,
        relative_change,
    })
}

/// `|psi(omega_s, omega_i)|` with the exact matching factor and curvature,
/// verified by refinement.
pub fn jsa_numeric(
    omega_s: f64,
    omega_i: f64,
    setup: &SetupParams,
    constants: &OpticalConstants,
    expansion: &ExpansionOrder2,
    quadrature: &QuadratureSpec,
) -> Result<f64> {
    NumericOracle::new(*constants, *expansion, *quadrature).jsa_verified(omega_s, omega_i, setup)
}

/// Total coupling probability, verified by refinement.
pub fn probability_numeric(
    setup: &SetupParams,
    constants: &OpticalConstants,
    expansion: &ExpansionOrder2,
    quadrature: &QuadratureSpec,
) -> Result<ProbabilityEstimate> {
    NumericOracle::new(*constants, *expansion, *quadrature).probability_verified(setup, &Serial)
}
