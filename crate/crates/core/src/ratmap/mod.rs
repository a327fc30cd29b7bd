//! Rational self-maps of `P^k`: composition, content stripping, iteration,
//! degree sequences, birationality and pointwise evaluation.

mod eval;
mod file;
mod iterate;

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::{BigRational, One};

pub use eval::{CompiledMap, CompiledPoly};
pub use file::MapFile;
pub use iterate::{DegreeSequence, Iterates, StabilityReport};

use crate::error::{Error, Result};
use crate::projalg::{certify_coprime, gcd_many, HomoPoly, Lift, Monomial, Sparse};

/// Default cap on the number of terms of any intermediate polynomial.
pub const DEFAULT_TERM_BUDGET: usize = 2_000_000;

/// Default relative threshold below which an image is treated as hitting
/// the indeterminacy set.
pub const DEFAULT_EPS_IND: f64 = 1e-12;

/// Largest degree [`strip_content`] runs a gcd on; the modular coprimality
/// certificate needs memory quadratic in the degree.
pub const MAX_GCD_DEGREE: u32 = 4096;

/// `f = [P_0 : ... : P_k]` with homogeneous components of a common degree.
///
/// Maps produced by [`compose`] may carry a common factor; every other
/// constructor in this module returns reduced maps.
pub struct RationalMap {
    ambient: usize,
    degree: u32,
    components: Vec<HomoPoly>,
    name: String,
    compiled: OnceLock<CompiledMap>,
}

impl Clone for RationalMap {
    fn clone(&self) -> Self {
        RationalMap {
            ambient: self.ambient,
            degree: self.degree,
            components: self.components.clone(),
            name: self.name.clone(),
            compiled: OnceLock::new(),
        }
    }
}

impl PartialEq for RationalMap {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.degree == other.degree && self.components == other.components
    }
}

impl fmt::Debug for RationalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [", self.name)?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, " : ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "] (deg {})", self.degree)
    }
}

impl RationalMap {
    pub fn new(name: impl Into<String>, components: Vec<HomoPoly>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidMap("no components".into()))?;
        let ambient = first.ambient();
        let degree = first.degree();
        if components.len() != ambient + 1 {
            return Err(Error::InvalidMap(format!(
                "{} components for P^{ambient}, expected {}",
                components.len(),
                ambient + 1
            )));
        }
        if ambient < 1 {
            return Err(Error::InvalidMap("ambient dimension must be at least 1".into()));
        }
        for c in &components {
            if c.ambient() != ambient || c.degree() != degree {
                return Err(Error::InvalidMap("components differ in ambient or degree".into()));
            }
        }
        if components.iter().all(HomoPoly::is_zero) {
            return Err(Error::InvalidMap("all components are zero".into()));
        }
        if degree < 1 {
            return Err(Error::InvalidMap("degree must be at least 1".into()));
        }
        Ok(RationalMap { ambient, degree, components, name: name.into(), compiled: OnceLock::new() })
    }

    pub fn identity(ambient: usize) -> Self {
        Self::new("identity", (0..=ambient).map(|i| HomoPoly::var(ambient, i)).collect())
            .expect("identity is valid")
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn components(&self) -> &[HomoPoly] {
        &self.components
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn term_count(&self) -> usize {
        self.components.iter().map(HomoPoly::len).sum()
    }

    pub fn compiled(&self) -> &CompiledMap {
        self.compiled.get_or_init(|| CompiledMap::new(&self.components, self.degree))
    }

    /// True when the components have no nonconstant common factor.
    pub fn is_reduced(&self) -> bool {
        let parts: Vec<Sparse> = self.components.iter().map(|c| c.as_sparse().clone()).collect();
        certify_coprime(&parts) || gcd_many(&parts).is_constant()
    }

    /// The map scaled so the first nonzero component is grlex-monic.
    pub fn normalized(&self) -> RationalMap {
        let lc = self
            .components
            .iter()
            .find_map(|c| c.leading().map(|(_, lc)| lc.clone()))
            .expect("valid map has a nonzero component");
        let inv = lc.recip();
        let mut out = self.clone();
        out.components = self.components.iter().map(|c| c.scale(&inv)).collect();
        out
    }

    /// Equality of the underlying projective maps: same components up to one
    /// global nonzero scalar.
    pub fn same_map(&self, other: &RationalMap) -> bool {
        if self.ambient != other.ambient || self.degree != other.degree {
            return false;
        }
        self.normalized().components == other.normalized().components
    }

    /// True when this is `[c z_0 : ... : c z_k]`.
    pub fn is_identity(&self) -> bool {
        self.same_map(&RationalMap::identity(self.ambient))
    }

    /// Componentwise float evaluation; errors when the image is negligible
    /// relative to `|z|_inf^d`.
    pub fn eval(&self, z: &Lift, eps_ind: f64) -> Result<Lift> {
        if z.dim() != self.ambient + 1 {
            return Err(Error::Usage(format!(
                "lift has {} coordinates, map expects {}",
                z.dim(),
                self.ambient + 1
            )));
        }
        let w = self.compiled().eval(z.coords());
        let wmax = w.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let ratio = wmax / z.max_modulus().powi(self.degree as i32);
        if !(ratio >= eps_ind) || !wmax.is_finite() {
            return Err(Error::IndeterminacyProximity { ratio });
        }
        Lift::new(w)
    }

    /// Matrix of `dP_i/dz_j` at `z`.
    pub fn differential(&self, z: &Lift) -> Result<DMatrix<Complex64>> {
        let n = self.ambient + 1;
        if z.dim() != n {
            return Err(Error::Usage(format!("lift has {} coordinates, map expects {n}", z.dim())));
        }
        let jac = self.compiled().jacobian(z.coords());
        Ok(DMatrix::from_fn(n, n, |i, j| jac[i][j]))
    }
}

fn substitution_powers(g: &RationalMap) -> Vec<Vec<HomoPoly>> {
    g.components
        .iter()
        .map(|c| vec![HomoPoly::constant(g.ambient, BigRational::one()), c.clone()])
        .collect()
}

/// Raw composition `f ∘ g`: components `P_i(Q_0, ..., Q_k)`, not reduced.
pub fn compose(f: &RationalMap, g: &RationalMap) -> Result<RationalMap> {
    compose_with_budget(f, g, DEFAULT_TERM_BUDGET)
}

pub fn compose_with_budget(f: &RationalMap, g: &RationalMap, budget: usize) -> Result<RationalMap> {
    if f.ambient != g.ambient {
        return Err(Error::Usage(format!("ambient mismatch: {} vs {}", f.ambient, g.ambient)));
    }
    let mut powers = substitution_powers(g);
    let comps = f
        .components
        .iter()
        .map(|p| p.substitute(&mut powers, g.degree, budget))
        .collect::<Result<Vec<_>>>()?;
    if comps.iter().all(HomoPoly::is_zero) {
        return Err(Error::InvalidMap(format!(
            "{} ∘ {} is identically zero (g maps into the indeterminacy set of f)",
            f.name, g.name
        )));
    }
    RationalMap::new(format!("{}∘{}", f.name, g.name), comps)
}

/// Divide the components by their gcd.
pub fn strip_content(f: &RationalMap) -> Result<RationalMap> {
    if f.components.iter().all(HomoPoly::is_zero) {
        return Err(Error::InvalidMap("all components are zero".into()));
    }
    let sparse: Vec<Sparse> = f.components.iter().map(|c| c.as_sparse().clone()).collect();
    // monomial part first: cheap and catches coordinate-hyperplane factors
    let mono = sparse
        .iter()
        .filter(|p| !p.is_zero())
        .map(Sparse::monomial_content)
        .reduce(|a, b| a.meet(&b))
        .unwrap_or_else(|| Monomial::one(f.ambient + 1));
    let mut parts: Vec<Sparse> = sparse
        .iter()
        .map(|p| p.div_monomial(&mono).expect("monomial content divides"))
        .collect();
    let mut removed = mono.degree();
    // a single-term component only has monomial divisors, and the common
    // monomial factor is already gone
    let coprime = parts.iter().any(|p| p.len() == 1) || {
        if f.degree > MAX_GCD_DEGREE {
            return Err(Error::Resource {
                what: format!("gcd of degree-{} components exceeds the limit {MAX_GCD_DEGREE}", f.degree),
                partial: format!("{} before content removal", f.name),
            });
        }
        certify_coprime(&parts)
    };
    if !coprime {
        let g = gcd_many(&parts);
        if !g.is_constant() {
            removed += g.total_degree().unwrap_or(0);
            parts = parts
                .iter()
                .map(|p| if p.is_zero() { p.clone() } else { p.exact_div(&g).expect("gcd divides") })
                .collect();
        }
    }
    if removed == 0 {
        return Ok(f.clone());
    }
    let degree = f.degree - removed;
    let comps = parts
        .into_iter()
        .map(|p| HomoPoly::from_sparse(f.ambient, degree, p))
        .collect();
    RationalMap::new(f.name.clone(), comps)
}

/// Reduced `f^n`, stripping after every composition step.
pub fn iterate(f: &RationalMap, n: u32) -> Result<RationalMap> {
    Iterates::new(f.clone()).get(n)
}

/// Degrees of the reduced iterates `f^1, ..., f^N`.
pub fn degree_sequence(f: &RationalMap, n: u32) -> Result<DegreeSequence> {
    Iterates::new(f.clone()).degree_sequence(n)
}

pub fn is_algebraically_stable(f: &RationalMap, n: u32) -> Result<StabilityReport> {
    Iterates::new(f.clone()).stability(n)
}

/// A map together with a candidate inverse.
#[derive(Clone, Debug)]
pub struct BirationalPair {
    pub forward: RationalMap,
    pub inverse: RationalMap,
    pub verified: bool,
}

impl BirationalPair {
    /// Pair the maps and run [`verify_birational`].
    pub fn new(forward: RationalMap, inverse: RationalMap) -> Result<Self> {
        let mut pair = BirationalPair { forward, inverse, verified: false };
        pair.verified = verify_birational(&pair)?;
        Ok(pair)
    }

    pub fn ambient(&self) -> usize {
        self.forward.ambient
    }
}

/// True when both reduced composites are the identity up to a scalar.
pub fn verify_birational(pair: &BirationalPair) -> Result<bool> {
    if pair.forward.ambient != pair.inverse.ambient {
        return Ok(false);
    }
    for (a, b) in [(&pair.forward, &pair.inverse), (&pair.inverse, &pair.forward)] {
        let c = match compose(a, b) {
            Ok(c) => c,
            Err(Error::InvalidMap(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        if !strip_content(&c)?.is_identity() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests;
