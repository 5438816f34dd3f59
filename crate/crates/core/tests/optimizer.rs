use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spdc_core::model::{SpectralWidths, SpectrumForm};
use spdc_core::numeric::{expand_delta_order2, NumericOracle, Serial, StepControl};
use spdc_core::optimize::{
    fit_optimum_lines, linear_grid, optimize_lw, optimize_lw_from, stationarity, AnalyticObjective,
    Bounds, NelderMead, NumericObjective, Objective,
};
use spdc_core::phase_matching::solve_alpha;
use spdc_core::units::deg_to_rad;
use spdc_core::{
    derive_constants, Crystal, CrystalCut, OpticalConstants, QuadratureSpec, SellmeierSet,
    SetupParams,
};

fn bbo() -> (Crystal, OpticalConstants) {
    let set = SellmeierSet::bbo();
    let alpha = solve_alpha(&set, 780e-9, deg_to_rad(1.4)).unwrap();
    let cut = CrystalCut::new(alpha).unwrap();
    let k = derive_constants(&set, &cut, 780e-9).unwrap();
    (Crystal::new(set, cut), k)
}

fn template(k: &OpticalConstants) -> SetupParams {
    let mut s = SetupParams::new(1e-3, 100e-6, 100e-6, 0.0, 0.0);
    SpectralWidths::reference().apply(&mut s, k.lambda0);
    s
}

fn analytic() -> AnalyticObjective {
    let (_, k) = bbo();
    AnalyticObjective::new(k, template(&k))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn analytic_optimum_at_100um_pump() {
    let o = analytic();
    let r = optimize_lw(100e-6, &o, &Bounds::default(), &NelderMead::default()).unwrap();
    assert!(r.converged && !r.on_boundary, "{r:?}");
    assert!(close(r.length, 1.65e-3, 0.2), "{r:?}");
    assert!(close(r.fiber_waist, 34e-6, 0.2), "{r:?}");
    let g = stationarity(&r, &o, 1e-3).unwrap();
    assert!(g[0].abs() < 1e-2 && g[1].abs() < 1e-2, "{g:?}");
}

#[test]
fn no_random_probe_beats_the_optimum() {
    let o = analytic();
    let bounds = Bounds::default();
    let r = optimize_lw(100e-6, &o, &bounds, &NelderMead::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let log_uniform = |u: f64, (lo, hi): (f64, f64)| (lo.ln() + u * (hi.ln() - lo.ln())).exp();
    for _ in 0..500 {
        let l = log_uniform(rng.random::<f64>(), bounds.length);
        let w = log_uniform(rng.random::<f64>(), bounds.fiber_waist);
        let p = o.probability_at(l, w, 100e-6).unwrap();
        assert!(
            p <= r.p_max * (1.0 + 1e-6),
            "p({l:e}, {w:e}) = {p:e} > {:e}",
            r.p_max
        );
    }
}

#[test]
fn result_does_not_depend_on_the_starts() {
    let o = analytic();
    let bounds = Bounds::default();
    let settings = NelderMead::default();
    let base = optimize_lw(60e-6, &o, &bounds, &settings).unwrap();
    for starts in [[[0.1, 0.1]], [[0.9, 0.2]], [[0.5, 0.9]], [[0.2, 0.8]]] {
        let r = optimize_lw_from(60e-6, &o, &bounds, &settings, &starts).unwrap();
        assert!(close(r.length, base.length, 5e-3), "{r:?} vs {base:?}");
        assert!(
            close(r.fiber_waist, base.fiber_waist, 5e-3),
            "{r:?} vs {base:?}"
        );
        assert!(close(r.p_max, base.p_max, 1e-6));
    }
}

#[test]
fn optimization_is_deterministic() {
    let o = analytic();
    let a = optimize_lw(40e-6, &o, &Bounds::default(), &NelderMead::default()).unwrap();
    let b = optimize_lw(40e-6, &o, &Bounds::default(), &NelderMead::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn optimum_lines_are_linear() {
    let o = analytic();
    let grid = linear_grid(10e-6, 300e-6, 30);
    let lines = fit_optimum_lines(&grid, &o, &Bounds::default(), &NelderMead::default()).unwrap();
    assert_eq!(lines.optima.len() + lines.excluded.len(), 30);
    assert!(lines.excluded.len() <= 2, "{:?}", lines.excluded);
    assert!(
        close(lines.fiber_waist.slope, 0.308, 0.3),
        "{:?}",
        lines.fiber_waist
    );
    assert!(close(lines.length.slope, 14.8, 0.3), "{:?}", lines.length);
    assert!(
        close(lines.length.intercept, 167e-6, 0.3),
        "{:?}",
        lines.length
    );
    // optimal length grows with the pump waist at every grid point
    assert!(lines.optima.windows(2).all(|p| p[1].length > p[0].length));
}

#[test]
fn infeasible_bounds_are_rejected() {
    let o = analytic();
    let bad = Bounds {
        length: (1e-3, 1e-4),
        ..Bounds::default()
    };
    assert!(optimize_lw(100e-6, &o, &bad, &NelderMead::default()).is_err());
}

#[test]
fn numeric_and_analytic_optima_agree_for_wide_pumps() {
    let (crystal, k) = bbo();
    let a = analytic();
    let e = expand_delta_order2(&crystal, &k, &StepControl::default()).unwrap();
    let coarse = QuadratureSpec {
        frequency_points: 16,
        panel_points: 8,
        depth_points: 16,
        ..Default::default()
    };
    let n = NumericObjective {
        oracle: NumericOracle::new(k, e, coarse),
        template: template(&k),
        map: Serial,
    };
    let settings = NelderMead {
        tolerance: 1e-2,
        ..Default::default()
    };
    let bounds = Bounds::default();
    let ra = optimize_lw(80e-6, &a, &bounds, &settings).unwrap();
    let rn = optimize_lw_from(80e-6, &n, &bounds, &settings, &[[0.5, 0.5]]).unwrap();
    assert!(close(rn.length, ra.length, 0.25), "{rn:?} vs {ra:?}");
    assert!(
        close(rn.fiber_waist, ra.fiber_waist, 0.25),
        "{rn:?} vs {ra:?}"
    );
    assert_eq!(a.form, SpectrumForm::Full);
}
