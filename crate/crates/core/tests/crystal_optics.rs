use approx::assert_relative_eq;
use proptest::prelude::*;

use spdc_core::constants::verify_constants;
use spdc_core::dispersion::kz_extraordinary;
use spdc_core::model::{delta_pm, expansion_point};
use spdc_core::phase_matching::{solve_alpha, solve_theta0, tolerance};
use spdc_core::units::{deg_to_rad, omega_from_wavelength, C};
use spdc_core::{derive_constants, Crystal, CrystalCut, Polarization, SellmeierSet};

const LAMBDA0: f64 = 780e-9;

fn bbo_cut() -> (Crystal, spdc_core::OpticalConstants) {
    let set = SellmeierSet::bbo();
    let alpha = solve_alpha(&set, LAMBDA0, deg_to_rad(1.4)).unwrap();
    let cut = CrystalCut::new(alpha).unwrap();
    let k = derive_constants(&set, &cut, LAMBDA0).unwrap();
    (Crystal::new(set, cut), k)
}

// Eimerl fit typed out again, lambda in um
fn eimerl(lambda_um: f64, ordinary: bool) -> f64 {
    let l2 = lambda_um * lambda_um;
    let n2 = if ordinary {
        2.7359 + 0.01878 / (l2 - 0.01822) - 0.01354 * l2
    } else {
        2.3753 + 0.01224 / (l2 - 0.01667) - 0.01516 * l2
    };
    n2.sqrt()
}

#[test]
fn bbo_indices_at_780_and_390() {
    let set = SellmeierSet::bbo();
    for um in [0.39, 0.78] {
        assert_relative_eq!(
            set.index(Polarization::Ordinary, um * 1e-6).unwrap(),
            eimerl(um, true),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            set.index(Polarization::Extraordinary, um * 1e-6).unwrap(),
            eimerl(um, false),
            max_relative = 1e-14
        );
    }
    assert_relative_eq!(
        set.index(Polarization::Ordinary, 780e-9).unwrap(),
        1.661_169_185_975,
        max_relative = 1e-12
    );
    assert_relative_eq!(
        set.index(Polarization::Extraordinary, 780e-9).unwrap(),
        1.544_914_808_578,
        max_relative = 1e-12
    );
    assert!(set.index(Polarization::Ordinary, 1.5e-6).is_err());
}

#[test]
fn phase_matching_golden_and_round_trip() {
    let set = SellmeierSet::bbo();
    let theta0 = deg_to_rad(1.4);
    let alpha = solve_alpha(&set, LAMBDA0, theta0).unwrap();
    // 30.0323996 degrees
    assert_relative_eq!(alpha, 0.524_164_254_665_745, max_relative = 1e-11);
    assert!((solve_theta0(&set, LAMBDA0, alpha).unwrap() - theta0).abs() < 1e-9);

    let (crystal, k) = bbo_cut();
    let (s0, i0) = expansion_point(&k);
    let (dm, _) = delta_pm(&crystal, &s0, &i0).unwrap();
    assert!(dm.abs() < tolerance(LAMBDA0), "{dm}");
    assert_relative_eq!(
        tolerance(LAMBDA0),
        1e-12 * k.omega0 / C,
        max_relative = 1e-15
    );
}

#[test]
fn derived_constants_golden() {
    let (crystal, k) = bbo_cut();
    assert_relative_eq!(k.omega0, 2.414_937_906_806_222e15, max_relative = 1e-15);
    assert_relative_eq!(k.theta0, 0.024_434_609_527_941_3, max_relative = 1e-14);
    assert_relative_eq!(k.theta0_int, 0.014_709_284_120_025_18, max_relative = 1e-12);
    assert_relative_eq!(k.gamma, 0.069_351_018_802_042, max_relative = 1e-10);
    assert_relative_eq!(
        k.dbeta_minus_z,
        2.063_725_482_121_318e-10,
        max_relative = 1e-9
    );
    assert_relative_eq!(
        k.dbeta_plus_z,
        1.145_332_141_084_792e-8,
        max_relative = 1e-10
    );
    assert_relative_eq!(k.n_o_deg, eimerl(0.78, true), max_relative = 1e-14);

    // walk-off straight from a difference quotient of the crystal-frame relation
    let w = 2.0 * k.omega0;
    let h = 1e-5 * w / C;
    let fd = (kz_extraordinary(&crystal.sellmeier, h, 0.0, w, k.alpha).unwrap()
        - kz_extraordinary(&crystal.sellmeier, -h, 0.0, w, k.alpha).unwrap())
        / (2.0 * h);
    assert_relative_eq!(k.gamma, fd, max_relative = 1e-8);

    for check in verify_constants(&crystal, &k).unwrap() {
        assert!(check.relative_error() < 1e-6, "{check:?}");
        assert!(check.richardson.observed_order > 1.9, "{check:?}");
    }
}

#[test]
fn inverse_group_velocities_from_frequency_differences() {
    let (crystal, k) = bbo_cut();
    let fd = |f: &dyn Fn(f64) -> f64, w: f64| {
        let h = 1e-5 * w;
        (f(w + h) - f(w - h)) / (2.0 * h)
    };
    let beta_e = fd(&|w| crystal.kz_e(0.0, 0.0, w).unwrap(), 2.0 * k.omega0);
    let beta_o = fd(&|w| crystal.kz_o(0.0, 0.0, w).unwrap(), k.omega0);
    assert_relative_eq!(k.dbeta_minus_z, beta_e - beta_o, max_relative = 1e-6);
    assert_relative_eq!(k.dbeta_plus_z, beta_e + beta_o, max_relative = 1e-8);
}

#[test]
fn not_phase_matchable_outside_the_cone() {
    let set = SellmeierSet::bbo();
    assert!(solve_alpha(&set, LAMBDA0, deg_to_rad(40.0)).is_err());
    assert!(CrystalCut::new(0.0).is_err());
    assert!(CrystalCut::new(2.0).is_err());
}

proptest! {
    #[test]
    fn negative_uniaxial_inside_window(um in 0.2f64..1.1) {
        let set = SellmeierSet::bbo();
        let no = set.index(Polarization::Ordinary, um * 1e-6).unwrap();
        let ne = set.index(Polarization::Extraordinary, um * 1e-6).unwrap();
        prop_assert!(ne < no && ne > 1.0);
    }

    #[test]
    fn theta_alpha_round_trip(deg in 0.3f64..4.0) {
        let set = SellmeierSet::bbo();
        let theta0 = deg_to_rad(deg);
        let alpha = solve_alpha(&set, LAMBDA0, theta0).unwrap();
        prop_assert!((solve_theta0(&set, LAMBDA0, alpha).unwrap() - theta0).abs() < 1e-9);
    }

    #[test]
    fn mirrored_axis_plane_reflects_ky(fx in -0.05f64..0.05, fy in -0.05f64..0.05) {
        let (crystal, k) = bbo_cut();
        let mirror = Crystal::new(crystal.sellmeier.clone(), crystal.cut.mirrored());
        let w = 2.0 * k.omega0;
        let scale = w / C;
        let a = crystal.kz_e(fx * scale, fy * scale, w).unwrap();
        let b = mirror.kz_e(fx * scale, -fy * scale, w).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-14);
    }

    #[test]
    fn ordinary_relation_is_isotropic(fx in -0.1f64..0.1, fy in -0.1f64..0.1) {
        let (crystal, k) = bbo_cut();
        let s = k.omega0 / C;
        let a = crystal.kz_o(fx * s, fy * s, k.omega0).unwrap();
        let r = (fx * fx + fy * fy).sqrt();
        let b = crystal.kz_o(r * s, 0.0, k.omega0).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-14);
    }

    #[test]
    fn degenerate_mismatch_vanishes_on_any_cut(deg in 0.5f64..3.0) {
        let set = SellmeierSet::bbo();
        let alpha = solve_alpha(&set, LAMBDA0, deg_to_rad(deg)).unwrap();
        let cut = CrystalCut::new(alpha).unwrap();
        let k = derive_constants(&set, &cut, LAMBDA0).unwrap();
        let (s0, i0) = expansion_point(&k);
        let (dm, _) = delta_pm(&Crystal::new(set, cut), &s0, &i0).unwrap();
        prop_assert!(dm.abs() < tolerance(LAMBDA0));
        prop_assert_eq!(k.omega0, omega_from_wavelength(LAMBDA0));
    }
}
