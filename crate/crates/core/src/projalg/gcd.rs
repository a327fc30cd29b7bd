//! Multivariate gcd over the rationals.
//!
//! The exact path is recursive: pick the highest variable present, split off
//! the content (the gcd of the coefficients, computed recursively) and run a
//! subresultant remainder sequence on the primitive parts. A cheap modular
//! certificate of coprimality short-circuits the common case where the
//! components of a composed map share no factor.

use num::{BigInt, BigRational, Integer, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::monomial::Monomial;
use super::sparse::Sparse;

/// Monic gcd (leading coefficient 1 under grlex). Returns zero only when
/// both inputs are zero.
pub fn gcd(a: &Sparse, b: &Sparse) -> Sparse {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mg = ma.meet(&mb);
    let a1 = a.div_monomial(&ma).expect("monomial content divides");
    let b1 = b.div_monomial(&mb).expect("monomial content divides");
    let g = gcd_rec(&a1, &b1);
    g.mul_term(&mg, &BigRational::one()).monic()
}

/// gcd of a list of polynomials; zero for an empty or all-zero list.
pub fn gcd_many(polys: &[Sparse]) -> Sparse {
    let nvars = polys.first().map(Sparse::nvars).unwrap_or(0);
    let mut acc = Sparse::zero(nvars);
    for p in polys {
        acc = gcd(&acc, p);
        if acc.is_constant() && !acc.is_zero() {
            break;
        }
    }
    acc
}

fn highest_var(a: &Sparse, b: &Sparse) -> Option<usize> {
    (0..a.nvars())
        .rev()
        .find(|&v| a.degree_in(v).unwrap_or(0) > 0 || b.degree_in(v).unwrap_or(0) > 0)
}

fn gcd_rec(a: &Sparse, b: &Sparse) -> Sparse {
    let n = a.nvars();
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Sparse::one(n);
    }
    let v = match highest_var(a, b) {
        Some(v) => v,
        None => return Sparse::one(n),
    };
    let da = a.degree_in(v).unwrap_or(0);
    let db = b.degree_in(v).unwrap_or(0);
    if da == 0 {
        return gcd_rec(a, &content_in(b, v));
    }
    if db == 0 {
        return gcd_rec(&content_in(a, v), b);
    }
    let ca = content_in(a, v);
    let cb = content_in(b, v);
    let c = gcd_rec(&ca, &cb);
    let pa = a.exact_div(&ca).expect("content divides");
    let pb = b.exact_div(&cb).expect("content divides");
    let g = prs_gcd(pa, pb, v);
    c.mul(&g).monic()
}

/// gcd of the coefficients of `p` viewed as a polynomial in `x_v`.
fn content_in(p: &Sparse, v: usize) -> Sparse {
    let mut acc = Sparse::zero(p.nvars());
    for (_, c) in p.coefficients_in(v) {
        acc = gcd_rec(&acc, &c);
        if acc.is_constant() {
            return Sparse::one(p.nvars());
        }
    }
    acc
}

fn primitive_in(p: &Sparse, v: usize) -> Sparse {
    let c = content_in(p, v);
    p.exact_div(&c).expect("content divides")
}

fn xpow(nvars: usize, v: usize, e: u32) -> Monomial {
    Monomial::var(nvars, v, e)
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) * a mod b` in `x_v`.
fn prem(a: &Sparse, b: &Sparse, v: usize) -> Sparse {
    let n = a.nvars();
    let m = b.degree_in(v).unwrap_or(0);
    let lcb = b.lc_in(v);
    let mut r = a.clone();
    let mut e = a.degree_in(v).unwrap_or(0) + 1 - m;
    while let Some(dr) = r.degree_in(v) {
        if dr < m || r.is_zero() {
            break;
        }
        let lcr = r.lc_in(v);
        let t = lcr.mul(b).mul_term(&xpow(n, v, dr - m), &BigRational::one());
        r = lcb.mul(&r).sub(&t);
        e -= 1;
    }
    r.mul(&lcb.pow(e))
}

/// Subresultant PRS on polynomials primitive in `x_v` of positive degree.
/// Returns the primitive gcd.
fn prs_gcd(a: Sparse, b: Sparse, v: usize) -> Sparse {
    let n = a.nvars();
    let deg = |p: &Sparse| p.degree_in(v).unwrap_or(0);
    let (mut a, mut b) = if deg(&a) >= deg(&b) { (a, b) } else { (b, a) };
    let mut g = Sparse::one(n);
    let mut h = Sparse::one(n);
    let last = loop {
        let delta = deg(&a) - deg(&b);
        let r = prem(&a, &b, v);
        if r.is_zero() {
            break b;
        }
        if deg(&r) == 0 {
            return Sparse::one(n);
        }
        let divisor = g.mul(&h.pow(delta));
        a = b;
        b = r.exact_div(&divisor).expect("subresultant quotient is exact");
        g = a.lc_in(v);
        if delta > 0 {
            h = g
                .pow(delta)
                .exact_div(&h.pow(delta - 1))
                .expect("subresultant scaling is exact");
        }
    };
    primitive_in(&last, v).monic()
}

// ---------------------------------------------------------------------------
// Modular coprimality certificate

const PRIMES: [u64; 3] = [2_305_843_009_213_693_951, 18_446_744_073_709_551_557, 4_294_967_291];

fn mulm(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn addm(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

fn subm(a: u64, b: u64, p: u64) -> u64 {
    if a >= b { a - b } else { p - (b - a) }
}

fn powm(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a, p);
        }
        a = mulm(a, a, p);
        e >>= 1;
    }
    r
}

fn invm(a: u64, p: u64) -> u64 {
    powm(a, p - 2, p)
}

fn reduce(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    r.to_u64().expect("residue fits")
}

/// Integer coefficients with content 1, same monomials.
fn primitive_integer(p: &Sparse) -> Vec<(&Monomial, BigInt)> {
    let lcm = p
        .terms()
        .values()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<(&Monomial, BigInt)> = p
        .terms()
        .iter()
        .map(|(m, c)| (m, (c * BigRational::from_integer(lcm.clone())).to_integer()))
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, (_, c)| acc.gcd(c));
    ints.into_iter().map(|(m, c)| (m, &c / &g)).collect()
}

fn upoly_trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn upoly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = addm(out[i + j], mulm(x, y, p), p);
        }
    }
    upoly_trim(out)
}

fn upoly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let inv = invm(b[db], p);
    while r.len() > db {
        let dr = r.len() - 1;
        let q = mulm(r[dr], inv, p);
        if q != 0 {
            for (j, &bj) in b.iter().enumerate() {
                let idx = dr - db + j;
                r[idx] = subm(r[idx], mulm(q, bj, p), p);
            }
        }
        r.pop();
        r = upoly_trim(r);
    }
    r
}

fn upoly_gcd(a: Vec<u64>, b: Vec<u64>, p: u64) -> Vec<u64> {
    let (mut a, mut b) = (upoly_trim(a), upoly_trim(b));
    while !b.is_empty() {
        let r = upoly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Sufficient test that nonzero homogeneous polynomials have constant gcd.
///
/// Restricts the primitive integer forms to a random line `s*A + B` modulo a
/// large prime. If some restriction keeps full degree and the univariate
/// gcd is constant, no nonconstant common factor exists over the rationals.
/// `false` means "not certified", not "common factor present".
pub fn certify_coprime(polys: &[Sparse]) -> bool {
    let polys: Vec<&Sparse> = polys.iter().filter(|p| !p.is_zero()).collect();
    if polys.is_empty() {
        return false;
    }
    if polys.iter().any(|p| p.is_constant()) {
        return true;
    }
    let n = polys[0].nvars();
    let ints: Vec<_> = polys.iter().map(|p| primitive_integer(p)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    for &p in &PRIMES {
        let a: Vec<u64> = (0..n).map(|_| rng.gen_range(1..p)).collect();
        let b: Vec<u64> = (0..n).map(|_| rng.gen_range(1..p)).collect();
        let maxdeg = polys.iter().filter_map(|q| q.total_degree()).max().unwrap_or(0) as usize;
        // powers[j][e] = (a_j s + b_j)^e
        let powers: Vec<Vec<Vec<u64>>> = (0..n)
            .map(|j| {
                let lin = vec![b[j], a[j]];
                let mut pw = vec![vec![1u64]];
                for e in 1..=maxdeg {
                    let next = upoly_mul(&pw[e - 1], &lin, p);
                    pw.push(next);
                }
                pw
            })
            .collect();
        let mut full_degree = false;
        let mut g: Vec<u64> = Vec::new();
        for (poly, terms) in polys.iter().zip(&ints) {
            let mut q: Vec<u64> = Vec::new();
            for (m, c) in terms {
                let mut t = vec![reduce(c, p)];
                for (j, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        t = upoly_mul(&t, &powers[j][e as usize], p);
                    }
                }
                if q.len() < t.len() {
                    q.resize(t.len(), 0);
                }
                for (i, x) in t.into_iter().enumerate() {
                    q[i] = addm(q[i], x, p);
                }
            }
            let q = upoly_trim(q);
            let d = poly.total_degree().unwrap_or(0) as usize;
            if !q.is_empty() && q.len() == d + 1 {
                full_degree = true;
            }
            g = upoly_gcd(g, q, p);
        }
        if full_degree && g.len() == 1 {
            return true;
        }
    }
    false
}
