use num::complex::Complex64;

use crate::error::{Error, Result};

/// A nonzero vector of `C^{k+1}` representing a point of `P^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lift(Vec<Complex64>);

impl Lift {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Usage("empty lift".into()));
        }
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Degenerate("lift has a non-finite coordinate".into()));
        }
        if coords.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(Error::Degenerate("lift is the zero vector".into()));
        }
        Ok(Lift(coords))
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<Complex64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn max_modulus(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, lambda: Complex64) -> Result<Lift> {
        Lift::new(self.0.iter().map(|c| c * lambda).collect())
    }

    pub fn normalized(&self) -> ProjPoint {
        ProjPoint::from_lift(self)
    }
}

pub(crate) fn norm(z: &[Complex64]) -> f64 {
    // scaled to avoid overflow for large lifts
    let m = z.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * z.iter().map(|c| (c / m).norm_sqr()).sum::<f64>().sqrt()
}

/// Unit-norm representative whose first nonzero coordinate is real positive.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint(Lift);

impl ProjPoint {
    pub fn from_lift(z: &Lift) -> Self {
        let n = z.norm();
        let first = z.0.iter().find(|c| c.norm_sqr() > 0.0).copied().unwrap_or(Complex64::new(1.0, 0.0));
        let phase = first.conj() / first.norm();
        ProjPoint(Lift(z.0.iter().map(|c| c * phase / n).collect()))
    }

    pub fn lift(&self) -> &Lift {
        &self.0
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0 .0
    }
}

/// Fubini–Study distance (angle in `[0, pi/2]`) between the lines spanned
/// by `a` and `b`.
pub fn fs_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let c = ip.norm() / (norm(a) * norm(b));
    c.clamp(0.0, 1.0).acos()
}
