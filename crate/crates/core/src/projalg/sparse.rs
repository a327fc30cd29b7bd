use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::monomial::Monomial;

/// A sparse multivariate polynomial over the rationals, not necessarily
/// homogeneous. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq)]
pub struct Sparse {
    nvars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Sparse {
    pub fn zero(nvars: usize) -> Self {
        Sparse { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::term(Monomial::one(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn term(m: Monomial, c: BigRational) -> Self {
        let mut s = Sparse::zero(m.nvars());
        if !c.is_zero() {
            s.terms.insert(m, c);
        }
        s
    }

    pub fn from_terms<I>(nvars: usize, it: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, BigRational)>,
    {
        let mut s = Sparse::zero(nvars);
        for (m, c) in it {
            assert_eq!(m.nvars(), nvars, "monomial arity mismatch");
            s.add_term(m, c);
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, BigRational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// Total degree; `None` for zero.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.keys().map(Monomial::degree);
        match it.next() {
            None => true,
            Some(d) => it.all(|e| e == d),
        }
    }

    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Sparse) -> Sparse {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Sparse) -> Sparse {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Sparse {
        Sparse {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Sparse {
        if k.is_zero() {
            return Sparse::zero(self.nvars);
        }
        Sparse {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Monomial, k: &BigRational) -> Sparse {
        if k.is_zero() {
            return Sparse::zero(self.nvars);
        }
        Sparse {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(a, c)| (a.mul(m), c * k)).collect(),
        }
    }

    /// Integer numerators over a common denominator.
    fn integer_form(&self) -> (Vec<(&Monomial, BigInt)>, BigInt) {
        let den = self.terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let nums = self.terms.iter().map(|(m, c)| (m, c.numer() * (&den / c.denom()))).collect();
        (nums, den)
    }

    pub fn mul(&self, other: &Sparse) -> Sparse {
        if self.is_zero() || other.is_zero() {
            return Sparse::zero(self.nvars);
        }
        // products of rationals renormalize on every step; accumulate
        // integers and divide once per output term instead
        let (a, da) = self.integer_form();
        let (b, db) = other.integer_form();
        let mut acc: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (ma, ca) in &a {
            for (mb, cb) in &b {
                let prod = ca * cb;
                match acc.entry(ma.mul(mb)) {
                    Entry::Vacant(v) => {
                        v.insert(prod);
                    }
                    Entry::Occupied(mut o) => *o.get_mut() += prod,
                }
            }
        }
        let den = da * db;
        Sparse {
            nvars: self.nvars,
            terms: acc
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(m, c)| (m, BigRational::new(c, den.clone())))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Sparse {
        let mut acc = Sparse::one(self.nvars);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Divide by the leading coefficient (grlex). Zero stays zero.
    pub fn monic(&self) -> Sparse {
        match self.leading() {
            None => self.clone(),
            Some((_, lc)) => {
                let inv = lc.recip();
                self.scale(&inv)
            }
        }
    }

    pub fn degree_in(&self, v: usize) -> Option<u32> {
        self.terms.keys().map(|m| m.0[v]).max()
    }

    /// Coefficient of `x_v^e`, as a polynomial with `x_v` absent.
    pub fn coeff_in(&self, v: usize, e: u32) -> Sparse {
        let mut out = Sparse::zero(self.nvars);
        for (m, c) in &self.terms {
            if m.0[v] == e {
                let mut k = m.clone();
                k.0[v] = 0;
                out.terms.insert(k, c.clone());
            }
        }
        out
    }

    /// All nonzero coefficients with respect to `x_v`, highest power first.
    pub fn coefficients_in(&self, v: usize) -> Vec<(u32, Sparse)> {
        let mut by_power: BTreeMap<u32, Sparse> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.0[v];
            let mut k = m.clone();
            k.0[v] = 0;
            by_power
                .entry(e)
                .or_insert_with(|| Sparse::zero(self.nvars))
                .terms
                .insert(k, c.clone());
        }
        by_power.into_iter().rev().collect()
    }

    pub fn lc_in(&self, v: usize) -> Sparse {
        match self.degree_in(v) {
            None => Sparse::zero(self.nvars),
            Some(e) => self.coeff_in(v, e),
        }
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn exact_div(&self, d: &Sparse) -> Option<Sparse> {
        let (lm, lc) = d.leading()?;
        let mut rem = self.clone();
        let mut q = Sparse::zero(self.nvars);
        while let Some((rm, rc)) = rem.leading() {
            let m = rm.div(lm)?;
            let c = rc / lc;
            rem = rem.sub(&d.mul_term(&m, &c));
            q.add_term(m, c);
        }
        Some(q)
    }

    /// Componentwise minimum exponent over all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        match it.next() {
            None => Monomial::one(self.nvars),
            Some(first) => it.fold(first.clone(), |acc, m| acc.meet(m)),
        }
    }

    pub fn div_monomial(&self, m: &Monomial) -> Option<Sparse> {
        let mut out = Sparse::zero(self.nvars);
        for (k, c) in &self.terms {
            out.terms.insert(k.div(m)?, c.clone());
        }
        Some(out)
    }

    /// Formal partial derivative in `x_i`.
    pub fn partial(&self, i: usize) -> Sparse {
        let mut out = Sparse::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut k = m.clone();
            k.0[i] = e - 1;
            out.terms.insert(k, c * BigRational::from_integer(e.into()));
        }
        out
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(&m.0) {
                if e > 0 {
                    t *= num::pow(xi.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }
}

impl fmt::Debug for Sparse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Sparse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}
