//! Built-in families of maps.
//!
//! * `henon(d, a, p)`: homogenization of `(z, w) -> (p(z) + a w, z)` on `P^2`
//!   in the chart `z_2 = 1`, with its exact inverse;
//! * `cremona`: the standard quadratic involution `[z1 z2 : z0 z2 : z0 z1]`;
//! * `power(d)`: `[z0^d : z1^d : z2^d]`;
//! * `shiftlike3(d, a, p)`: homogenization of `(x, y, z) -> (y, z, p(z) + a x)`
//!   on `P^3`, with inverse;
//! * `linear(M)`: an invertible linear map of `P^k`.
//!
//! Polynomial coefficients `p` are listed leading coefficient first.

use num::{BigRational, One, Zero};
use crate::error::{Error, Result};
use crate::indeterminacy::RegionsConfig;
use crate::projalg::{parse_rational, HomoPoly, Monomial};
use crate::ratmap::{BirationalPair, RationalMap};

#[derive(Clone, Debug)]
pub struct ZooEntry {
    pub name: String,
    pub params: serde_json::Value,
    pub map: RationalMap,
    pub pair: Option<BirationalPair>,
    pub provenance: String,
}

/// Parameters accepted by [`zoo`]. Unused fields are ignored per family.
#[derive(Clone, Debug)]
pub struct ZooParams {
    pub d: u32,
    pub a: BigRational,
    /// Coefficients of `p`, leading first; defaults to `z^d`.
    pub p: Option<Vec<BigRational>>,
    pub matrix: Option<Vec<Vec<BigRational>>>,
}

impl Default for ZooParams {
    fn default() -> Self {
        ZooParams { d: 2, a: BigRational::new(3.into(), 10.into()), p: None, matrix: None }
    }
}

impl ZooParams {
    pub fn with_d(mut self, d: u32) -> Self {
        self.d = d;
        self
    }

    pub fn with_a(mut self, a: &str) -> Result<Self> {
        self.a = parse_rational(a)?;
        Ok(self)
    }

    pub fn with_p(mut self, coeffs: &[&str]) -> Result<Self> {
        self.p = Some(coeffs.iter().map(|c| parse_rational(c)).collect::<Result<_>>()?);
        Ok(self)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let strs = |v: &[BigRational]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
        serde_json::json!({
            "d": self.d,
            "a": self.a.to_string(),
            "p": self.p.as_deref().map(strs),
            "matrix": self.matrix.as_ref().map(|m| m.iter().map(|r| strs(r)).collect::<Vec<_>>()),
        })
    }

    fn p_coeffs(&self) -> Result<Vec<BigRational>> {
        let p = match &self.p {
            Some(p) => p.clone(),
            None => {
                let mut v = vec![BigRational::zero(); self.d as usize + 1];
                v[0] = BigRational::one();
                v
            }
        };
        if p.len() != self.d as usize + 1 {
            return Err(Error::Usage(format!(
                "p needs {} coefficients for degree {}, got {}",
                self.d + 1,
                self.d,
                p.len()
            )));
        }
        if p[0].is_zero() {
            return Err(Error::Usage("leading coefficient of p must be nonzero".into()));
        }
        Ok(p)
    }
}

fn mono(k: usize, e: &[(usize, u32)], c: BigRational) -> HomoPoly {
    let mut m = Monomial::one(k + 1);
    for &(i, p) in e {
        m.0[i] += p;
    }
    HomoPoly::monomial(k, m, c)
}

/// `sum_j c_j x^(d-j) t^j` in the variables `x = z_xi`, `t = z_ti`.
fn homogenized(k: usize, coeffs: &[BigRational], xi: usize, ti: usize) -> HomoPoly {
    let d = coeffs.len() as u32 - 1;
    let mut acc = HomoPoly::zero(k, d);
    for (j, c) in coeffs.iter().enumerate() {
        let j = j as u32;
        acc = acc.add(&mono(k, &[(xi, d - j), (ti, j)], c.clone())).expect("same degree");
    }
    acc
}

fn one() -> BigRational {
    BigRational::one()
}

fn henon(params: &ZooParams) -> Result<BirationalPair> {
    let d = params.d;
    if d < 2 {
        return Err(Error::Usage("henon needs d >= 2".into()));
    }
    if params.a.is_zero() {
        return Err(Error::Usage("henon needs a != 0".into()));
    }
    let p = params.p_coeffs()?;
    let a = params.a.clone();
    let k = 2;
    let f = RationalMap::new(
        "henon",
        vec![
            homogenized(k, &p, 0, 2).add(&mono(k, &[(1, 1), (2, d - 1)], a.clone()))?,
            mono(k, &[(0, 1), (2, d - 1)], one()),
            mono(k, &[(2, d)], one()),
        ],
    )?;
    let inv_a = a.recip();
    let g = RationalMap::new(
        "henon^-1",
        vec![
            mono(k, &[(1, 1), (2, d - 1)], one()),
            mono(k, &[(0, 1), (2, d - 1)], inv_a.clone()).sub(&homogenized(k, &p, 1, 2).scale(&inv_a))?,
            mono(k, &[(2, d)], one()),
        ],
    )?;
    BirationalPair::new(f, g)
}

fn shiftlike3(params: &ZooParams) -> Result<BirationalPair> {
    let d = params.d;
    if d < 2 {
        return Err(Error::Usage("shiftlike3 needs d >= 2".into()));
    }
    if params.a.is_zero() {
        return Err(Error::Usage("shiftlike3 needs a != 0".into()));
    }
    let p = params.p_coeffs()?;
    let a = params.a.clone();
    let k = 3;
    let f = RationalMap::new(
        "shiftlike3",
        vec![
            mono(k, &[(1, 1), (3, d - 1)], one()),
            mono(k, &[(2, 1), (3, d - 1)], one()),
            homogenized(k, &p, 2, 3).add(&mono(k, &[(0, 1), (3, d - 1)], a.clone()))?,
            mono(k, &[(3, d)], one()),
        ],
    )?;
    let inv_a = a.recip();
    let g = RationalMap::new(
        "shiftlike3^-1",
        vec![
            mono(k, &[(2, 1), (3, d - 1)], inv_a.clone()).sub(&homogenized(k, &p, 1, 3).scale(&inv_a))?,
            mono(k, &[(0, 1), (3, d - 1)], one()),
            mono(k, &[(1, 1), (3, d - 1)], one()),
            mono(k, &[(3, d)], one()),
        ],
    )?;
    BirationalPair::new(f, g)
}

pub fn cremona() -> BirationalPair {
    let k = 2;
    let s = RationalMap::new(
        "cremona",
        vec![
            mono(k, &[(1, 1), (2, 1)], one()),
            mono(k, &[(0, 1), (2, 1)], one()),
            mono(k, &[(0, 1), (1, 1)], one()),
        ],
    )
    .expect("valid");
    BirationalPair::new(s.clone(), s).expect("cremona composes")
}

pub fn power(d: u32) -> Result<RationalMap> {
    if d < 1 {
        return Err(Error::Usage("power needs d >= 1".into()));
    }
    RationalMap::new("power", (0..3).map(|i| mono(2, &[(i, d)], one())).collect())
}

/// Exact inverse of a square rational matrix by Gauss–Jordan elimination.
fn invert(m: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(pivot_row) {
                    *x -= &f * p;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn linear_map(name: &str, m: &[Vec<BigRational>]) -> Result<RationalMap> {
    let k = m.len() - 1;
    let comps = m
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, c)| HomoPoly::var(k, j).scale(c))
                .try_fold(HomoPoly::zero(k, 1), |acc, t| acc.add(&t))
        })
        .collect::<Result<Vec<_>>>()?;
    RationalMap::new(name, comps)
}

pub fn linear(m: &[Vec<BigRational>]) -> Result<BirationalPair> {
    let n = m.len();
    if n < 2 || m.iter().any(|r| r.len() != n) {
        return Err(Error::Usage("linear needs a square matrix of size >= 2".into()));
    }
    let inv = invert(m).ok_or_else(|| Error::Usage("linear matrix is singular".into()))?;
    BirationalPair::new(linear_map("linear", m)?, linear_map("linear^-1", &inv)?)
}

pub const NAMES: [&str; 5] = ["henon", "cremona", "power", "shiftlike3", "linear"];

/// Build a zoo entry. Every returned pair has passed `verify_birational`.
pub fn zoo(name: &str, params: &ZooParams) -> Result<ZooEntry> {
    let (map, pair, provenance) = match name {
        "henon" => {
            let p = henon(params)?;
            (p.forward.clone(), Some(p), "Hénon-type automorphism of C^2, homogenized on P^2")
        }
        "cremona" => {
            let p = cremona();
            (p.forward.clone(), Some(p), "standard quadratic Cremona involution")
        }
        "power" => (power(params.d)?, None, "coordinatewise power map, closed-form Green function"),
        "shiftlike3" => {
            let p = shiftlike3(params)?;
            (p.forward.clone(), Some(p), "shift-like polynomial automorphism of C^3, homogenized on P^3")
        }
        "linear" => {
            let m = match &params.matrix {
                Some(m) => m.clone(),
                None => (0..3).map(|i| (0..3).map(|j| if i == j { one() } else { BigRational::zero() }).collect()).collect(),
            };
            let p = linear(&m)?;
            (p.forward.clone(), Some(p), "invertible linear map")
        }
        other => {
            return Err(Error::Usage(format!("unknown zoo entry {other:?}; known: {}", NAMES.join(", "))))
        }
    };
    if let Some(p) = &pair {
        if !p.verified {
            return Err(Error::InvalidMap(format!("zoo entry {name} failed birationality verification")));
        }
    }
    Ok(ZooEntry {
        name: name.to_string(),
        params: params.to_json(),
        map,
        pair,
        provenance: provenance.to_string(),
    })
}

/// Region configuration bundled with a zoo entry, when one exists.
///
/// For `henon` (d = 2, |a| <= 0.3, `p = z^2`), `V^+` is the weighted cone
/// `max(|z0|, 3|z2|) < 0.3 |z1|` around `I^+ = [0:1:0]`, `V^-` the mirror cone
/// `max(|z1|, 3|z2|) < 0.3 |z0|` around `I^- = [1:0:0]`, and `U^±` are the
/// complements of the cones widened by 0.35 rad.
pub fn bundled_regions(name: &str) -> Option<RegionsConfig> {
    match name {
        "henon" => Some(RegionsConfig::henon_default()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_verify() {
        for name in NAMES {
            let e = zoo(name, &ZooParams::default()).unwrap();
            if let Some(p) = e.pair {
                assert!(p.verified, "{name}");
            }
        }
    }

    #[test]
    fn henon_degrees() {
        let e = zoo("henon", &ZooParams::default()).unwrap();
        let p = e.pair.unwrap();
        assert_eq!(p.forward.degree(), 2);
        assert_eq!(p.inverse.degree(), 2);
    }

    #[test]
    fn henon_with_explicit_p() {
        let params = ZooParams::default().with_p(&["1", "0", "-1/2"]).unwrap();
        assert!(zoo("henon", &params).unwrap().pair.unwrap().verified);
        let params = ZooParams::default().with_d(3).with_a("-0.2").unwrap();
        assert!(zoo("henon", &params).unwrap().pair.unwrap().verified);
    }

    #[test]
    fn linear_identity_is_degree_one() {
        let e = zoo("linear", &ZooParams::default()).unwrap();
        assert_eq!(e.map.degree(), 1);
        assert!(e.map.is_identity());
    }

    #[test]
    fn linear_inverse_exact() {
        let q = |n: i64| BigRational::from_integer(n.into());
        let m = vec![vec![q(1), q(2), q(0)], vec![q(0), q(1), q(3)], vec![q(1), q(0), q(1)]];
        assert!(linear(&m).unwrap().verified);
        let sing = vec![vec![q(1), q(2)], vec![q(2), q(4)]];
        assert!(linear(&sing).is_err());
    }

    #[test]
    fn bad_params() {
        assert!(zoo("henon", &ZooParams::default().with_a("0").unwrap()).is_err());
        assert!(zoo("henon", &ZooParams::default().with_p(&["1", "0"]).unwrap()).is_err());
        assert!(zoo("nope", &ZooParams::default()).is_err());
    }
}
