use std::fmt;
use std::str::FromStr;

use num::complex::Complex64;
use num::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projalg::{fs_distance, HomoPoly, TermJson};
use crate::sampling::fs_uniform;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "V+")]
    VPlus,
    #[serde(rename = "V-")]
    VMinus,
    #[serde(rename = "U+")]
    UPlus,
    #[serde(rename = "U-")]
    UMinus,
    #[serde(rename = "V")]
    V,
    #[serde(rename = "U")]
    U,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::VPlus => "V+",
            Role::VMinus => "V-",
            Role::UPlus => "U+",
            Role::UMinus => "U-",
            Role::V => "V",
            Role::U => "U",
        };
        f.write_str(s)
    }
}

/// A basic open set of `P^k`, described by an angular function
/// `theta: P^k -> [0, pi/2]` and a radius; the set is `{theta < radius}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Fubini–Study ball.
    Ball { center: Vec<Complex64>, radius: f64 },
    /// Cone around the subspace `L = {l_1 = ... = l_m = 0}`:
    /// `theta = atan(max_i |l_i(z)| / |proj_L z|)`.
    Cone { forms: Vec<Vec<Complex64>>, radius: f64, basis_perp: Vec<Vec<Complex64>> },
}

fn gram_schmidt(rows: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut q: Vec<Vec<Complex64>> = Vec::new();
    for r in rows {
        let mut v: Vec<Complex64> = r.iter().map(|c| c.conj()).collect();
        for b in &q {
            let ip: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= ip * bi;
            }
        }
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-12 {
            q.push(v.into_iter().map(|c| c / n).collect());
        }
    }
    q
}

impl Shape {
    pub fn ball(center: Vec<Complex64>, radius: f64) -> Result<Shape> {
        check_radius(radius)?;
        Ok(Shape::Ball { center, radius })
    }

    pub fn cone(forms: Vec<Vec<Complex64>>, radius: f64) -> Result<Shape> {
        check_radius(radius)?;
        if forms.is_empty() {
            return Err(Error::Usage("cone needs at least one linear form".into()));
        }
        let basis_perp = gram_schmidt(&forms);
        Ok(Shape::Cone { forms, radius, basis_perp })
    }

    pub fn radius(&self) -> f64 {
        match self {
            Shape::Ball { radius, .. } | Shape::Cone { radius, .. } => *radius,
        }
    }

    /// Angular coordinate of `z` for this shape.
    pub fn theta(&self, z: &[Complex64]) -> f64 {
        match self {
            Shape::Ball { center, .. } => fs_distance(center, z),
            Shape::Cone { forms, basis_perp, .. } => {
                let num = forms
                    .iter()
                    .map(|l| l.iter().zip(z).map(|(a, b)| a * b).sum::<Complex64>().norm())
                    .fold(0.0, f64::max);
                let mut p: Vec<Complex64> = z.to_vec();
                for b in basis_perp {
                    let ip: Complex64 = b.iter().zip(z).map(|(x, y)| x.conj() * y).sum();
                    for (pi, bi) in p.iter_mut().zip(b) {
                        *pi -= ip * bi;
                    }
                }
                let den = p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                num.atan2(den)
            }
        }
    }

    /// A point biased towards the shape: a point of its core (the centre, or
    /// a random point of the reference subspace) plus a random perturbation
    /// of angular size up to about twice the radius.
    pub fn sample_near<R: Rng>(&self, rng: &mut R, dim: usize) -> Vec<Complex64> {
        let base: Vec<Complex64> = match self {
            Shape::Ball { center, .. } => {
                let n = center.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                center.iter().map(|c| c / n).collect()
            }
            Shape::Cone { basis_perp, .. } => {
                let mut g = fs_uniform(rng, dim);
                for b in basis_perp {
                    let ip: Complex64 = b.iter().zip(&g).map(|(x, y)| x.conj() * y).sum();
                    for (gi, bi) in g.iter_mut().zip(b) {
                        *gi -= ip * bi;
                    }
                }
                let n = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                g.iter().map(|c| c / n).collect()
            }
        };
        let eps = 2.0 * self.radius().tan() * rng.gen::<f64>();
        let g = fs_uniform(rng, dim);
        base.iter().zip(&g).map(|(b, x)| b + eps * x).collect()
    }

    /// Same shape with the radius widened by `delta`.
    pub fn enlarged(&self, delta: f64) -> Result<Shape> {
        match self {
            Shape::Ball { center, radius } => Shape::ball(center.clone(), radius + delta),
            Shape::Cone { forms, radius, .. } => Shape::cone(forms.clone(), radius + delta),
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Usage(format!("radius {r} outside (0, pi/2)")));
    }
    Ok(())
}

/// A union of shapes, or the complement of such a union.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSpec {
    pub role: Role,
    pub shapes: Vec<Shape>,
    pub complement: bool,
}

impl RegionSpec {
    pub fn new(role: Role, shapes: Vec<Shape>, complement: bool) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::Usage(format!("region {role} has no shapes")));
        }
        Ok(RegionSpec { role, shapes, complement })
    }

    /// Angular gap from `z` to the region: zero inside, positive outside.
    /// For balls this is the exact FS distance to the closure.
    pub fn gap(&self, z: &[Complex64]) -> f64 {
        if self.complement {
            // outside the union means theta >= radius for every shape
            self.shapes.iter().map(|s| (s.radius() - s.theta(z)).max(0.0)).fold(0.0, f64::max)
        } else {
            self.shapes.iter().map(|s| (s.theta(z) - s.radius()).max(0.0)).fold(f64::INFINITY, f64::min)
        }
    }

    pub fn contains(&self, z: &[Complex64]) -> bool {
        if self.complement {
            self.shapes.iter().all(|s| s.theta(z) >= s.radius())
        } else {
            self.shapes.iter().any(|s| s.theta(z) < s.radius())
        }
    }

    /// In the closure, up to `margin`.
    pub fn near(&self, z: &[Complex64], margin: f64) -> bool {
        self.gap(z) <= margin
    }

    /// A point of the region, by rejection from [`Shape::sample_near`] (or
    /// from FS-uniform points for complements). `None` after `max_tries`.
    pub fn sample_inside<R: Rng>(&self, rng: &mut R, dim: usize, max_tries: usize) -> Option<Vec<Complex64>> {
        for t in 0..max_tries {
            let z = if self.complement {
                fs_uniform(rng, dim)
            } else {
                self.shapes[t % self.shapes.len()].sample_near(rng, dim)
            };
            if self.contains(&z) {
                let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                return Some(z.into_iter().map(|c| c / n).collect());
            }
        }
        None
    }

    /// The complement of the union with every radius widened by `delta`.
    pub fn complement_of_enlarged(&self, role: Role, delta: f64) -> Result<RegionSpec> {
        if self.complement {
            return Err(Error::Usage("cannot enlarge a complement region".into()));
        }
        let shapes = self.shapes.iter().map(|s| s.enlarged(delta)).collect::<Result<_>>()?;
        RegionSpec::new(role, shapes, true)
    }
}

/// `"1.5"`, `"-2i"`, `"1-0.5i"`, `"3e-2+1e-1i"`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("not a complex number: {s:?}"));
    if let Some(body) = t.strip_suffix('i') {
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        Ok(Complex64::new(
            f64::from_str(re).map_err(|_| bad())?,
            f64::from_str(im).map_err(|_| bad())?,
        ))
    } else {
        Ok(Complex64::new(f64::from_str(&t).map_err(|_| bad())?, 0.0))
    }
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallJson {
    pub center: Vec<String>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeJson {
    /// Degree-one polynomials in the projalg term format.
    pub forms: Vec<Vec<TermJson>>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionJson {
    pub role: Role,
    #[serde(default)]
    pub balls: Vec<BallJson>,
    #[serde(default)]
    pub cones: Vec<ConeJson>,
    #[serde(default)]
    pub complement: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub forms: Vec<Vec<TermJson>>,
    /// `"+"` (Θ⁺, or Θ under the one-sided definition) or `"-"` (Θ⁻).
    #[serde(default = "plus")]
    pub role: String,
}

fn plus() -> String {
    "+".into()
}

/// Region and witness configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionsConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_s")]
    pub s: usize,
    pub regions: Vec<RegionJson>,
    #[serde(default)]
    pub witnesses: Vec<WitnessJson>,
}

fn default_k() -> usize {
    2
}

fn default_s() -> usize {
    1
}

/// Coefficient vector of a linear form given in term format.
pub fn linear_form(k: usize, terms: &[TermJson]) -> Result<Vec<Complex64>> {
    let p = HomoPoly::from_json_terms(k, terms, Some(1))?;
    if p.degree() != 1 {
        return Err(Error::Parse("witness and cone forms must be linear".into()));
    }
    let mut v = vec![Complex64::new(0.0, 0.0); k + 1];
    for (m, c) in p.terms() {
        let i = m.0.iter().position(|&e| e == 1).expect("linear monomial");
        v[i] = Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
    }
    Ok(v)
}

impl RegionsConfig {
    pub fn region(&self, role: Role) -> Result<Option<RegionSpec>> {
        let Some(r) = self.regions.iter().find(|r| r.role == role) else {
            return Ok(None);
        };
        let mut shapes = Vec::new();
        for b in &r.balls {
            if b.center.len() != self.k + 1 {
                return Err(Error::Parse(format!("ball center needs {} coordinates", self.k + 1)));
            }
            let c = b.center.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?;
            shapes.push(Shape::ball(c, b.radius)?);
        }
        for c in &r.cones {
            let forms = c.forms.iter().map(|f| linear_form(self.k, f)).collect::<Result<Vec<_>>>()?;
            shapes.push(Shape::cone(forms, c.radius)?);
        }
        RegionSpec::new(role, shapes, r.complement).map(Some)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Regions for the quadratic Hénon family (see `zoo::bundled_regions`).
    pub fn henon_default() -> Self {
        let t = |n: &str, e: [u32; 3]| TermJson(n.into(), "1".into(), e.to_vec());
        let tan_r: f64 = 0.3;
        let r = tan_r.atan();
        let widen = 0.35;
        let cone_plus = vec![vec![t("1", [1, 0, 0])], vec![t("3", [0, 0, 1])]];
        let cone_minus = vec![vec![t("1", [0, 1, 0])], vec![t("3", [0, 0, 1])]];
        let region = |role, forms: &Vec<Vec<TermJson>>, radius, complement| RegionJson {
            role,
            balls: vec![],
            cones: vec![ConeJson { forms: forms.clone(), radius }],
            complement,
        };
        RegionsConfig {
            k: 2,
            s: 1,
            regions: vec![
                region(Role::V, &cone_plus, r, false),
                region(Role::U, &cone_plus, r + widen, true),
                region(Role::VPlus, &cone_plus, r, false),
                region(Role::UPlus, &cone_plus, r + widen, true),
                region(Role::VMinus, &cone_minus, r, false),
                region(Role::UMinus, &cone_minus, r + widen, true),
            ],
            witnesses: vec![
                // the line {z1 = 0} through I^- stays away from V^+
                WitnessJson { forms: vec![vec![t("1", [0, 1, 0])]], role: "+".into() },
                // the line {z0 = 0} through I^+ stays away from V^-
                WitnessJson { forms: vec![vec![t("1", [1, 0, 0])]], role: "-".into() },
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_strings() {
        assert_eq!(parse_complex("1.5").unwrap(), c(1.5, 0.0));
        assert_eq!(parse_complex("-2i").unwrap(), c(0.0, -2.0));
        assert_eq!(parse_complex("1-0.5i").unwrap(), c(1.0, -0.5));
        assert_eq!(parse_complex("3e-2+1e-1i").unwrap(), c(0.03, 0.1));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert!(parse_complex("x").is_err());
        for z in [c(1.0, 2.0), c(-0.5, -3.25), c(2.0, 0.0)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }

    #[test]
    fn cone_matches_max_ratio() {
        // cone about [0:1:0] with forms z0, z2: theta = atan(max(|z0|,|z2|)/|z1|)
        let s = Shape::cone(vec![vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]], 0.2)
            .unwrap();
        let z = [c(0.1, 0.0), c(1.0, 0.0), c(0.0, 0.2)];
        assert!((s.theta(&z) - 0.2f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn ball_gap_is_fs_distance() {
        let e0 = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let r = RegionSpec::new(Role::V, vec![Shape::ball(e0, 0.3).unwrap()], false).unwrap();
        let z = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        assert!((r.gap(&z) - (std::f64::consts::FRAC_PI_2 - 0.3)).abs() < 1e-12);
        assert!(!r.contains(&z));
        let w = [c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0)];
        assert!(r.contains(&w));
        assert_eq!(r.gap(&w), 0.0);
    }

    #[test]
    fn radius_bounds() {
        assert!(Shape::ball(vec![c(1.0, 0.0), c(0.0, 0.0)], 0.0).is_err());
        assert!(Shape::ball(vec![c(1.0, 0.0), c(0.0, 0.0)], 1.6).is_err());
    }

    #[test]
    fn config_round_trip_and_lookup() {
        let cfg = RegionsConfig::henon_default();
        let back = RegionsConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let u = cfg.region(Role::U).unwrap().unwrap();
        assert!(u.complement);
        // I^- = [1:0:0] lies in U, I^+ = [0:1:0] lies in V
        let v = cfg.region(Role::V).unwrap().unwrap();
        assert!(u.contains(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        assert!(v.contains(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]));
        assert!(cfg.region(Role::UMinus).unwrap().is_some());
    }
}
