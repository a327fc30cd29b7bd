//! Green functions, indeterminacy, the discrete wedge and Monte-Carlo masses
//! through the public API, each against a closed form or exact check.

use birat::currents::{ddc_wedge, fs_potential, sample_measure, ChartBox, GridPotential};
use birat::dynamics::{mc_mass_pullback, projective_differential};
use birat::green::{Direction, GreenEvaluator};
use birat::indeterminacy::{candidate_check, numeric_scan, ScanOptions};
use birat::projalg::{parse_rational, BigRational, Lift};
use birat::ratmap::{BirationalPair, RationalMap};
use birat::zoo::{self, ZooParams};
use birat::Complex64;

fn henon() -> BirationalPair {
    zoo::zoo("henon", &ZooParams::default()).unwrap().pair.unwrap()
}

fn exact(p: &[&str]) -> Vec<BigRational> {
    p.iter().map(|s| parse_rational(s).unwrap()).collect()
}

#[test]
fn green_of_power_map_is_log_max() {
    let g = GreenEvaluator::new(zoo::power(2).unwrap(), 30, Direction::Forward).unwrap();
    let z = Lift::from_real(&[2.0, 1.0, 1.0]).unwrap();
    assert!((g.eval(&z).unwrap().value - 2f64.ln()).abs() <= 1e-9);
    assert!(g.invariance_residual(&z).unwrap() <= 1e-8);
    let lambda = Complex64::new(-3.0, 0.5);
    let gl = g.eval(&z.scale(lambda).unwrap()).unwrap().value;
    assert!((gl - g.eval(&z).unwrap().value - lambda.norm().ln()).abs() <= 1e-12);
}

#[test]
fn henon_green_far_out() {
    // near infinity on the z0 axis the orbit escapes at once, so G ≈ log|z0|
    let g = GreenEvaluator::for_pair(&henon(), 25, Direction::Forward).unwrap();
    let v = g.eval(&Lift::from_real(&[1e3, 0.0, 1.0]).unwrap()).unwrap();
    assert!((v.value - 1e3f64.ln()).abs() < 0.01, "{}", v.value);
    assert!(!v.escaped_to_indeterminacy);
}

#[test]
fn indeterminacy_points() {
    let h = henon().forward;
    assert!(candidate_check(&h, &exact(&["0", "1", "0"])).unwrap());
    assert!(!candidate_check(&h, &exact(&["1", "0", "0"])).unwrap());
    let c = zoo::cremona().forward;
    for p in [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]] {
        assert!(candidate_check(&c, &exact(&p)).unwrap());
    }
    let clusters = numeric_scan(&c, 2000, &ScanOptions::default()).unwrap();
    assert_eq!(clusters.len(), 3);
    assert!(numeric_scan(&RationalMap::identity(2), 500, &ScanOptions::default()).unwrap().is_empty());
    let hs = numeric_scan(&h, 2000, &ScanOptions::default()).unwrap();
    assert_eq!(hs.len(), 1);
    let p = hs[0].point.coords();
    assert!(p[0].norm() < 1e-6 && p[2].norm() < 1e-6);
}

#[test]
fn pluriharmonic_potential_has_no_mass() {
    let b = ChartBox::cube(-1.0, 1.0);
    let u = GridPotential::from_fn(b, 12, |z| z[0].re + 2.0 * z[1].im).unwrap();
    let v = GridPotential::from_fn(b, 12, fs_potential).unwrap();
    let d = ddc_wedge(&u, &v).unwrap();
    assert!(d.total_mass.abs() < 1e-10);
}

/// FS mass of the chart box `[-r, r]^4`: `∫_0^∞ e^{-t} erf(r √t)^4 dt`.
fn fs_box_mass(r: f64) -> f64 {
    let f = |s: f64| 2.0 * s * (-s * s).exp() * statrs::function::erf::erf(r * s).powi(4);
    let n = 20_000;
    let h = 12.0 / n as f64;
    let mut acc = f(0.0) + f(12.0);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn fs_wedge_matches_closed_form() {
    let (r, res) = (2.0, 24);
    let b = ChartBox::cube(-r, r);
    let fs = GridPotential::from_fn(b, res, fs_potential).unwrap();
    let d = ddc_wedge(&fs, &fs).unwrap();
    // two cells are dropped at each face
    let inner = r - 2.0 * 2.0 * r / res as f64;
    let exact = fs_box_mass(inner);
    assert!((d.total_mass - exact).abs() / exact < 0.05, "{} vs {exact}", d.total_mass);
    let s = sample_measure(&d, 500, 3).unwrap();
    assert!(s.iter().all(|z| z.iter().all(|c| c.re.abs() <= r && c.im.abs() <= r)));
}

#[test]
fn masses_and_differentials() {
    let id = RationalMap::identity(2);
    for p in 1..=2 {
        let m = mc_mass_pullback(&id, 2, p, 200, 0).unwrap();
        assert_eq!(m.value, 1.0);
    }
    let m = mc_mass_pullback(&henon().forward, 1, 1, 100_000, 0).unwrap();
    assert!((m.value - 2.0).abs() <= 0.2, "{}", m.value);
    let one = Lift::from_real(&[1.0, 1.0, 1.0]).unwrap();
    let dp = projective_differential(&zoo::power(2).unwrap(), &one).unwrap();
    assert!(dp.singular_values.iter().all(|s| (s - 2.0).abs() < 1e-12));
}
