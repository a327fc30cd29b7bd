use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::complex::Complex64;
use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::gcd;
use super::lift::Lift;
use super::monomial::Monomial;
use super::sparse::Sparse;
use crate::error::{Error, Result};

/// A homogeneous polynomial in `ambient + 1` variables over the rationals.
///
/// The degree is stored explicitly so that the zero polynomial still knows
/// which graded piece it belongs to.
#[derive(Clone, PartialEq, Eq)]
pub struct HomoPoly {
    ambient: usize,
    degree: u32,
    body: Sparse,
}

/// One serialized term: `[numerator, denominator, [e_0, ..., e_k]]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson(pub String, pub String, pub Vec<u32>);

/// Coefficient multiplications allowed per product, per unit of term budget.
/// Dense iterates stay under the term budget long after a single product
/// has become hours of work.
pub const WORK_PER_TERM: usize = 100;

fn check_work(a: usize, b: usize, budget: usize, var: usize) -> Result<()> {
    let work = a.saturating_mul(b);
    if work > budget.saturating_mul(WORK_PER_TERM) {
        return Err(Error::Resource {
            what: format!("product of {a} by {b} terms exceeds the work limit {}", budget.saturating_mul(WORK_PER_TERM)),
            partial: format!("while expanding powers of variable {var}"),
        });
    }
    Ok(())
}

impl HomoPoly {
    pub fn zero(ambient: usize, degree: u32) -> Self {
        HomoPoly { ambient, degree, body: Sparse::zero(ambient + 1) }
    }

    pub fn constant(ambient: usize, c: BigRational) -> Self {
        HomoPoly { ambient, degree: 0, body: Sparse::constant(ambient + 1, c) }
    }

    /// The coordinate function `z_i`.
    pub fn var(ambient: usize, i: usize) -> Self {
        assert!(i <= ambient);
        Self::monomial(ambient, Monomial::var(ambient + 1, i, 1), BigRational::one())
    }

    pub fn monomial(ambient: usize, m: Monomial, c: BigRational) -> Self {
        assert_eq!(m.nvars(), ambient + 1);
        let degree = m.degree();
        HomoPoly { ambient, degree, body: Sparse::term(m, c) }
    }

    /// Build from terms; every exponent vector must have length `ambient+1`
    /// and sum to `degree`.
    pub fn from_terms<I>(ambient: usize, degree: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, BigRational)>,
    {
        let mut body = Sparse::zero(ambient + 1);
        for (e, c) in terms {
            if e.len() != ambient + 1 {
                return Err(Error::Usage(format!(
                    "exponent vector {e:?} has length {}, expected {}",
                    e.len(),
                    ambient + 1
                )));
            }
            let m = Monomial(e);
            if m.degree() != degree {
                return Err(Error::Usage(format!("term {m} is not of degree {degree}")));
            }
            body.add_term(m, c);
        }
        Ok(HomoPoly { ambient, degree, body })
    }

    pub(crate) fn from_sparse(ambient: usize, degree: u32, body: Sparse) -> Self {
        debug_assert!(body.terms().keys().all(|m| m.degree() == degree));
        HomoPoly { ambient, degree, body }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn nvars(&self) -> usize {
        self.ambient + 1
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.body.is_zero()
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, BigRational> {
        self.body.terms()
    }

    pub fn as_sparse(&self) -> &Sparse {
        &self.body
    }

    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.body.leading()
    }

    fn check_ambient(&self, other: &HomoPoly) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::Usage(format!(
                "ambient mismatch: {} vs {}",
                self.ambient, other.ambient
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &HomoPoly) -> Result<HomoPoly> {
        self.check_ambient(other)?;
        if self.degree != other.degree {
            return Err(Error::Usage(format!(
                "cannot add degree {} and degree {}",
                self.degree, other.degree
            )));
        }
        Ok(HomoPoly::from_sparse(self.ambient, self.degree, self.body.add(&other.body)))
    }

    pub fn sub(&self, other: &HomoPoly) -> Result<HomoPoly> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> HomoPoly {
        HomoPoly::from_sparse(self.ambient, self.degree, self.body.neg())
    }

    pub fn scale(&self, k: &BigRational) -> HomoPoly {
        HomoPoly::from_sparse(self.ambient, self.degree, self.body.scale(k))
    }

    pub fn mul(&self, other: &HomoPoly) -> Result<HomoPoly> {
        self.check_ambient(other)?;
        Ok(HomoPoly::from_sparse(
            self.ambient,
            self.degree + other.degree,
            self.body.mul(&other.body),
        ))
    }

    pub fn pow(&self, e: u32) -> HomoPoly {
        HomoPoly::from_sparse(self.ambient, self.degree * e, self.body.pow(e))
    }

    /// Scale so the grlex-leading coefficient is 1.
    pub fn monic(&self) -> HomoPoly {
        HomoPoly::from_sparse(self.ambient, self.degree, self.body.monic())
    }

    /// Monic gcd over the rationals.
    pub fn gcd(&self, other: &HomoPoly) -> Result<HomoPoly> {
        self.check_ambient(other)?;
        if self.is_zero() && other.is_zero() {
            return Err(Error::Usage("gcd of two zero polynomials".into()));
        }
        let g = gcd::gcd(&self.body, &other.body);
        let degree = g.total_degree().unwrap_or(0);
        Ok(HomoPoly::from_sparse(self.ambient, degree, g))
    }

    /// Exact quotient, `None` if `d` does not divide `self`.
    pub fn exact_div(&self, d: &HomoPoly) -> Option<HomoPoly> {
        if d.is_zero() || d.ambient != self.ambient || d.degree > self.degree {
            return None;
        }
        let q = self.body.exact_div(&d.body)?;
        Some(HomoPoly::from_sparse(self.ambient, self.degree - d.degree, q))
    }

    /// Formal partial derivative in `z_i`.
    pub fn partial(&self, i: usize) -> Result<HomoPoly> {
        if i > self.ambient {
            return Err(Error::Usage(format!(
                "variable index {i} out of range 0..={}",
                self.ambient
            )));
        }
        Ok(HomoPoly::from_sparse(
            self.ambient,
            self.degree.saturating_sub(1),
            self.body.partial(i),
        ))
    }

    /// Floating-point evaluation, summing terms in grlex order with
    /// compensated summation.
    pub fn eval(&self, z: &Lift) -> Result<Complex64> {
        self.eval_slice(z.coords())
    }

    pub fn eval_slice(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.nvars() {
            return Err(Error::Usage(format!(
                "point has {} coordinates, polynomial expects {}",
                z.len(),
                self.nvars()
            )));
        }
        let mut acc = CompensatedSum::default();
        for (m, c) in self.body.terms().iter().rev() {
            let mut t = Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
            for (zi, &e) in z.iter().zip(&m.0) {
                if e > 0 {
                    t *= zi.powu(e);
                }
            }
            acc.add(t);
        }
        Ok(acc.value())
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, z: &[BigRational]) -> Result<BigRational> {
        if z.len() != self.nvars() {
            return Err(Error::Usage(format!(
                "point has {} coordinates, polynomial expects {}",
                z.len(),
                self.nvars()
            )));
        }
        Ok(self.body.eval_exact(z))
    }

    /// Substitute `subs[j]` for `z_j`. All substitutes must share one degree
    /// `e`; the result has degree `deg(self) * e`. `powers` caches `subs[j]^n`.
    pub(crate) fn substitute(&self, powers: &mut [Vec<HomoPoly>], sub_degree: u32, budget: usize) -> Result<HomoPoly> {
        let ambient_out = powers[0][0].ambient;
        let mut out = Sparse::zero(ambient_out + 1);
        for (m, c) in self.body.terms() {
            let mut t = Sparse::constant(ambient_out + 1, c.clone());
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[j];
                while cache.len() <= e as usize {
                    check_work(cache.last().unwrap().len(), cache[1].len(), budget, j)?;
                    let next = cache.last().unwrap().body.mul(&cache[1].body);
                    let deg = cache.last().unwrap().degree + cache[1].degree;
                    if next.len() > budget {
                        return Err(Error::Resource {
                            what: format!("power cache term count {} exceeds budget {budget}", next.len()),
                            partial: format!("variable {j}, exponent {}", cache.len()),
                        });
                    }
                    cache.push(HomoPoly::from_sparse(ambient_out, deg, next));
                }
                check_work(t.len(), cache[e as usize].len(), budget, j)?;
                t = t.mul(&cache[e as usize].body);
                if t.len() > budget {
                    return Err(Error::Resource {
                        what: format!("intermediate term count {} exceeds budget {budget}", t.len()),
                        partial: format!("while expanding monomial {m}"),
                    });
                }
            }
            out = out.add(&t);
            if out.len() > budget {
                return Err(Error::Resource {
                    what: format!("composition term count {} exceeds budget {budget}", out.len()),
                    partial: format!("after monomial {m}"),
                });
            }
        }
        Ok(HomoPoly::from_sparse(ambient_out, self.degree * sub_degree, out))
    }

    pub fn to_json_terms(&self) -> Vec<TermJson> {
        self.body
            .terms()
            .iter()
            .rev()
            .map(|(m, c)| TermJson(c.numer().to_string(), c.denom().to_string(), m.0.clone()))
            .collect()
    }

    /// Parse serialized terms. `degree` is required when the term list is
    /// empty and checked otherwise.
    pub fn from_json_terms(ambient: usize, terms: &[TermJson], degree: Option<u32>) -> Result<Self> {
        let degree = match (terms.first(), degree) {
            (Some(t), _) => t.2.iter().sum(),
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::Parse("cannot infer the degree of an empty polynomial".into()))
            }
        };
        let mut parsed = Vec::with_capacity(terms.len());
        for TermJson(n, d, e) in terms {
            let n = BigInt::from_str(n).map_err(|e| Error::Parse(format!("numerator {n:?}: {e}")))?;
            let d = BigInt::from_str(d).map_err(|e| Error::Parse(format!("denominator {d:?}: {e}")))?;
            if d.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            parsed.push((e.clone(), BigRational::new(n, d)));
        }
        Self::from_terms(ambient, degree, parsed).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Parse an exact rational from `"3"`, `"-3/10"` or a decimal like `"0.3"`
/// or `"1e-3"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if shift >= 0 {
        BigRational::from_integer(n * num::pow(ten, shift as usize))
    } else {
        BigRational::new(n, num::pow(ten, (-shift) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Neumaier summation on real and imaginary parts separately.
#[derive(Default)]
struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let (s, c) = *acc;
    let t = s + x;
    let c = if s.abs() >= x.abs() { c + ((s - t) + x) } else { c + ((x - t) + s) };
    *acc = (t, c);
}

impl CompensatedSum {
    fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

impl fmt::Debug for HomoPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [deg {}]", self.body, self.degree)
    }
}

impl fmt::Display for HomoPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn z(k: usize, i: usize) -> HomoPoly {
        HomoPoly::var(k, i)
    }

    fn c(x: &[f64]) -> Lift {
        Lift::new(x.iter().map(|&r| Complex64::new(r, 0.0)).collect()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p = z(2, 0).pow(2).add(&z(2, 1).pow(2)).unwrap();
        assert_eq!(p.eval(&c(&[1.0, 2.0, 0.0])).unwrap(), Complex64::new(5.0, 0.0));
        assert_eq!(HomoPoly::zero(2, 3).eval(&c(&[1.0, 2.0, 3.0])).unwrap(), Complex64::new(0.0, 0.0));
        let p = z(2, 0).mul(&z(2, 1)).unwrap();
        assert_eq!(p.eval(&c(&[3.0, 4.0, 5.0])).unwrap(), Complex64::new(12.0, 0.0));
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = z(2, 0);
        assert!(matches!(p.eval_slice(&[Complex64::new(1.0, 0.0); 2]), Err(Error::Usage(_))));
    }

    #[test]
    fn mul_examples() {
        let a = z(2, 0).sub(&z(2, 1)).unwrap();
        let b = z(2, 0).add(&z(2, 1)).unwrap();
        let want = z(2, 0).pow(2).sub(&z(2, 1).pow(2)).unwrap();
        assert_eq!(a.mul(&b).unwrap(), want);
        let zero = a.mul(&HomoPoly::zero(2, 3)).unwrap();
        assert!(zero.is_zero());
        assert_eq!(zero.degree(), 4);
        let xyz = z(2, 0).mul(&z(2, 1)).unwrap().mul(&z(2, 2)).unwrap();
        assert_eq!(xyz.terms().len(), 1);
        assert_eq!(xyz.leading().unwrap().0 .0, vec![1, 1, 1]);
        assert!(z(2, 0).mul(&z(3, 0)).is_err());
    }

    #[test]
    fn gcd_examples() {
        let g = z(2, 0).mul(&z(2, 1)).unwrap().gcd(&z(2, 0).mul(&z(2, 2)).unwrap()).unwrap();
        assert_eq!(g, z(2, 0));
        let a = z(2, 0).pow(2).sub(&z(2, 1).pow(2)).unwrap();
        let b = z(2, 0).sub(&z(2, 1)).unwrap();
        assert_eq!(a.gcd(&b).unwrap(), b);
        assert!(HomoPoly::zero(2, 1).gcd(&HomoPoly::zero(2, 1)).is_err());
    }

    #[test]
    fn gcd_is_monic() {
        let a = z(2, 0).scale(&q(6)).mul(&z(2, 1)).unwrap();
        let b = z(2, 0).scale(&q(-4)).mul(&z(2, 2)).unwrap();
        let g = a.gcd(&b).unwrap();
        assert_eq!(g, z(2, 0));
        assert_eq!(*g.leading().unwrap().1, q(1));
    }

    #[test]
    fn partial_examples() {
        assert_eq!(z(2, 0).pow(2).partial(0).unwrap(), z(2, 0).scale(&q(2)));
        let p = z(2, 1).mul(&z(2, 2)).unwrap().partial(0).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.degree(), 1);
        let p = z(2, 0).pow(2).mul(&z(2, 1)).unwrap().partial(1).unwrap();
        assert_eq!(p, z(2, 0).pow(2));
        assert!(z(2, 0).partial(3).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("0.3").unwrap(), BigRational::new(3.into(), 10.into()));
        assert_eq!(parse_rational("-3/10").unwrap(), BigRational::new((-3).into(), 10.into()));
        assert_eq!(parse_rational("2").unwrap(), q(2));
        assert_eq!(parse_rational("1.5e2").unwrap(), q(150));
        assert_eq!(parse_rational("1e-3").unwrap(), BigRational::new(1.into(), 1000.into()));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn json_terms_preserve_zero_degree() {
        let p = HomoPoly::zero(2, 4);
        let back = HomoPoly::from_json_terms(2, &p.to_json_terms(), Some(4)).unwrap();
        assert_eq!(back, p);
        assert!(HomoPoly::from_json_terms(2, &[], None).is_err());
        let bad = vec![TermJson("1".into(), "0".into(), vec![1, 0, 0])];
        assert!(HomoPoly::from_json_terms(2, &bad, None).is_err());
        let inhomog = vec![
            TermJson("1".into(), "1".into(), vec![1, 0, 0]),
            TermJson("1".into(), "1".into(), vec![1, 1, 0]),
        ];
        assert!(HomoPoly::from_json_terms(2, &inhomog, None).is_err());
    }
}
