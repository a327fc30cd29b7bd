use num::complex::Complex64;
use num::BigRational;
use proptest::prelude::*;

use super::*;
use crate::projalg::Lift;
use crate::zoo::{self, ZooParams};

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn poly(k: usize, d: u32, terms: &[(i64, &[u32])]) -> HomoPoly {
    HomoPoly::from_terms(k, d, terms.iter().map(|(c, e)| (e.to_vec(), q(*c)))).unwrap()
}

fn henon() -> BirationalPair {
    zoo::zoo("henon", &ZooParams::default()).unwrap().pair.unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn cremona_square_raw_components() {
    let s = zoo::cremona().forward;
    let s2 = compose(&s, &s).unwrap();
    assert_eq!(s2.degree(), 4);
    let expected = [
        poly(2, 4, &[(1, &[2, 1, 1])]),
        poly(2, 4, &[(1, &[1, 2, 1])]),
        poly(2, 4, &[(1, &[1, 1, 2])]),
    ];
    assert_eq!(s2.components(), &expected);
    assert!(!s2.is_reduced());
    let stripped = strip_content(&s2).unwrap();
    assert!(stripped.is_identity());
    assert_eq!(stripped.degree(), 1);
}

#[test]
fn linear_compose_is_linear() {
    let m = vec![vec![q(1), q(2), q(0)], vec![q(0), q(1), q(0)], vec![q(3), q(0), q(1)]];
    let a = zoo::linear(&m).unwrap();
    assert_eq!(compose(&a.forward, &a.forward).unwrap().degree(), 1);
}

#[test]
fn henon_raw_square_has_degree_four() {
    let f = henon().forward;
    assert_eq!(compose(&f, &f).unwrap().degree(), 4);
}

#[test]
fn strip_examples() {
    let f = henon().forward;
    assert_eq!(strip_content(&f).unwrap(), f);
    let z0 = HomoPoly::var(2, 0);
    let comps = (0..3).map(|i| z0.mul(&HomoPoly::var(2, i)).unwrap()).collect();
    let m = RationalMap::new("z0*id", comps).unwrap();
    assert!(strip_content(&m).unwrap().is_identity());
}

#[test]
fn strip_non_monomial_factor() {
    // (z0 + z1) * (z0^2, z1^2, z2^2)
    let l = poly(2, 1, &[(1, &[1, 0, 0]), (1, &[0, 1, 0])]);
    let comps = (0..3).map(|i| l.mul(&HomoPoly::var(2, i).pow(2)).unwrap()).collect();
    let m = RationalMap::new("", comps).unwrap();
    let s = strip_content(&m).unwrap();
    assert!(s.same_map(&zoo::power(2).unwrap()));
}

#[test]
fn iterate_examples() {
    let p = zoo::power(2).unwrap();
    let p3 = iterate(&p, 3).unwrap();
    let expected = zoo::power(8).unwrap();
    assert!(p3.same_map(&expected));
    assert!(iterate(&zoo::cremona().forward, 2).unwrap().is_identity());
    assert_eq!(iterate(&henon().forward, 3).unwrap().degree(), 8);
}

#[test]
fn degree_sequences() {
    assert_eq!(degree_sequence(&henon().forward, 5).unwrap().0, vec![2, 4, 8, 16, 32]);
    assert_eq!(degree_sequence(&zoo::cremona().forward, 6).unwrap().0, vec![2, 1, 2, 1, 2, 1]);
    assert_eq!(degree_sequence(&RationalMap::identity(2), 3).unwrap().0, vec![1, 1, 1]);
    assert_eq!(degree_sequence(&zoo::power(2).unwrap(), 5).unwrap().0, vec![2, 4, 8, 16, 32]);
}

#[test]
fn stability_examples() {
    assert!(is_algebraically_stable(&henon().forward, 5).unwrap().stable);
    let r = is_algebraically_stable(&zoo::cremona().forward, 2).unwrap();
    assert!(!r.stable);
    assert_eq!(r.first_failure, Some((2, 4, 1)));
    assert!(is_algebraically_stable(&zoo::power(3).unwrap(), 5).unwrap().stable);
}

#[test]
fn term_budget_is_a_resource_error() {
    let it = Iterates::with_budget(henon().forward, 10);
    match it.get(4) {
        Err(Error::Resource { .. }) => {}
        other => panic!("expected a resource error, got {other:?}"),
    }
}

#[test]
fn dense_products_hit_the_work_limit() {
    let g = iterate(&henon().forward, 6).unwrap();
    let widest = g.components().iter().map(|c| c.len()).max().unwrap();
    // every operand fits the budget, but squaring the widest component is too much work
    let budget = widest * widest / crate::projalg::WORK_PER_TERM - 1;
    assert!(widest <= budget);
    match compose_with_budget(&henon().forward, &g, budget) {
        Err(Error::Resource { what, .. }) => assert!(what.contains("work limit"), "{what}"),
        other => panic!("expected a resource error, got {other:?}"),
    }
    assert!(compose_with_budget(&henon().forward, &g, 10 * budget).is_ok());
}

#[test]
fn birationality() {
    assert!(henon().verified);
    assert!(verify_birational(&zoo::cremona()).unwrap());
    let p = BirationalPair::new(henon().forward, RationalMap::identity(2)).unwrap();
    assert!(!p.verified);
}

#[test]
fn henon_degree_pairing() {
    let p = henon();
    assert_eq!(p.forward.degree(), p.inverse.degree());
}

#[test]
fn eval_examples() {
    let id = RationalMap::identity(2);
    let z = Lift::from_real(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(id.eval(&z, DEFAULT_EPS_IND).unwrap().coords(), z.coords());
    let f = henon().forward;
    let i_plus = Lift::from_real(&[0.0, 1.0, 0.0]).unwrap();
    assert!(matches!(f.eval(&i_plus, DEFAULT_EPS_IND), Err(Error::IndeterminacyProximity { .. })));
    let p = zoo::power(2).unwrap();
    let one = Lift::from_real(&[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(p.eval(&one, DEFAULT_EPS_IND).unwrap().coords(), one.coords());
}

#[test]
fn differential_examples() {
    let id = RationalMap::identity(2);
    let z = Lift::from_real(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(id.differential(&z).unwrap(), DMatrix::identity(3, 3));
    let p = zoo::power(2).unwrap();
    let one = Lift::from_real(&[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(p.differential(&one).unwrap(), DMatrix::from_diagonal_element(3, 3, c(2.0, 0.0)));
}

#[test]
fn henon_differential_matches_finite_differences() {
    let f = henon().forward;
    let z = vec![c(0.3, -0.7), c(1.1, 0.4), c(-0.5, 0.9)];
    let jac = f.differential(&Lift::new(z.clone()).unwrap()).unwrap();
    let h = 1e-6;
    for j in 0..3 {
        let (mut zp, mut zm) = (z.clone(), z.clone());
        zp[j] += h;
        zm[j] -= h;
        let fp = f.compiled().eval(&zp);
        let fm = f.compiled().eval(&zm);
        for i in 0..3 {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            assert!((fd - jac[(i, j)]).norm() <= 1e-6 * jac[(i, j)].norm().max(1.0));
        }
    }
}

#[test]
fn map_file_round_trip() {
    let p = henon();
    let file = MapFile::from_pair(&p);
    let back = MapFile::from_json(&file.to_json().unwrap()).unwrap();
    assert_eq!(back.forward().unwrap(), p.forward);
    assert_eq!(back.inverse().unwrap().unwrap(), p.inverse);
    assert_eq!(back, file);
}

#[test]
fn invalid_maps_rejected() {
    assert!(RationalMap::new("", vec![HomoPoly::var(2, 0)]).is_err());
    assert!(RationalMap::new("", vec![HomoPoly::zero(2, 1); 3]).is_err());
    let mixed = vec![HomoPoly::var(2, 0), HomoPoly::var(2, 1), HomoPoly::var(2, 2).pow(2)];
    assert!(RationalMap::new("", mixed).is_err());
}

fn small_lift() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 0.1))
        .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projective_equivariance(z in small_lift(), lr in 0.1f64..5.0, li in -5.0f64..5.0) {
        let f = henon().forward;
        let lambda = c(lr, li);
        let w = f.compiled().eval(&z);
        let zs: Vec<Complex64> = z.iter().map(|x| x * lambda).collect();
        let ws = f.compiled().eval(&zs);
        let scale = lambda.powu(f.degree());
        let wmax = w.iter().map(|x| x.norm()).fold(0.0, f64::max) * scale.norm();
        for (a, b) in ws.iter().zip(&w) {
            prop_assert!((a - b * scale).norm() <= 1e-10 * wmax.max(1e-300));
        }
    }

    #[test]
    fn iterate_splits(m in 1u32..3, n in 1u32..3) {
        let it = Iterates::new(henon().forward);
        let lhs = it.get(m + n).unwrap();
        let rhs = strip_content(&compose(&it.get(m).unwrap(), &it.get(n).unwrap()).unwrap()).unwrap();
        prop_assert!(lhs.same_map(&rhs));
    }

    #[test]
    fn stripped_degree_is_submultiplicative(a in -3i64..4, b in 1i64..4) {
        let params = ZooParams::default().with_a(&format!("{b}/{}", a.abs() + 1)).unwrap();
        let f = zoo::zoo("henon", &params).unwrap().map;
        let g = zoo::cremona().forward;
        let fg = strip_content(&compose(&f, &g).unwrap()).unwrap();
        prop_assert!(fg.degree() <= f.degree() * g.degree());
    }
}
