use inclab::content::{dyadic_content, multiscale_cover};
use inclab::incidence::{incidences, incidences_with, inequality_sweep, sweep_fixture, Method};
use inclab::measures::{generate_cantor_measure, riesz_energy_direct, Window};
use inclab::scenarios::{build_furstenberg, furstenberg_content};
use inclab::spectral::{gaussian_grid, riesz_energy_fourier, slice_identity_residual};
use inclab::{AtomMeasure, Error};

#[test]
fn measure_json_roundtrip_preserves_energy() {
    let m = generate_cantor_measure(1.2, 6, 3, Window::unit()).unwrap();
    let back = AtomMeasure::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(m, back);
    assert_eq!(
        riesz_energy_direct(&m, 1.0).unwrap(),
        riesz_energy_direct(&back, 1.0).unwrap()
    );
}

#[test]
fn generated_measure_energy_agrees_with_fourier() {
    let m = generate_cantor_measure(1.5, 6, 11, Window::unit()).unwrap();
    let d = riesz_energy_direct(&m, 1.0).unwrap();
    let f = riesz_energy_fourier(&m, 1.0).unwrap();
    assert!((0.25..=4.0).contains(&(f / d)), "{f} {d}");
}

#[test]
fn sweep_fixture_methods_agree_and_ratio_stays_bounded() {
    let (mu, nu) = sweep_fixture(1.5, 5).unwrap();
    let d = 1.0 / 64.0;
    let a = incidences_with(&mu, &nu, d, Method::Brute).unwrap();
    let b = incidences(&mu, &nu, d).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    let tab = inequality_sweep(&mu, &nu, 1.5, &[1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]).unwrap();
    assert_eq!(tab.rows.len(), 3);
    assert!(tab.slope_ok(0.1));
}

#[test]
fn furstenberg_configuration_has_positive_content_and_exact_cover() {
    let c = build_furstenberg(0.8, 1.4, 1.0 / 32.0, 2).unwrap();
    assert!(furstenberg_content(&c, 0.7).unwrap() > 0.0);
    let u = c.union();
    let m = multiscale_cover(&u, 1.7).unwrap();
    assert!((m.scale_sum() - m.value).abs() <= 1e-12 * m.value);
    assert_eq!(
        m.value.to_bits(),
        dyadic_content(&u, 1.7).unwrap().value.to_bits()
    );
}

#[test]
fn slice_residual_is_small_on_moderate_grid() {
    assert!(slice_identity_residual(&gaussian_grid(256).unwrap()).unwrap() <= 1e-3);
}

#[test]
fn empty_inputs_are_errors() {
    let e = AtomMeasure::from_atoms(inclab::Root::Plane, 4, vec![(0, 0, 0.0)]).unwrap_err();
    assert!(matches!(e, Error::EmptyMeasure));
    assert_eq!(e.to_string(), "empty measure");
}
