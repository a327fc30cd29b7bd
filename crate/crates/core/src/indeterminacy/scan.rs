use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use num::{BigInt, BigRational, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::region::format_complex;
use crate::error::{Error, Result};
use crate::projalg::{fs_distance, Lift, ProjPoint};
use crate::ratmap::RationalMap;
use crate::sampling::{fs_uniform_points, stream};

/// Tunables for [`numeric_scan`].
#[derive(Clone, Debug)]
pub struct ScanOptions {
    /// Residual below which a refined point counts as indeterminate.
    pub tol: f64,
    /// Clusters closer than this (FS) are merged.
    pub merge_radius: f64,
    /// Maximum number of seeds handed to the local refinement.
    pub max_candidates: usize,
    /// Levenberg–Marquardt iterations per seed.
    pub refine_iters: usize,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { tol: 1e-8, merge_radius: 1e-3, max_candidates: 64, refine_iters: 5000, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Cluster {
    #[serde(serialize_with = "ser_point")]
    pub point: ProjPoint,
    pub residual: f64,
    pub members: usize,
}

fn ser_point<S: serde::Serializer>(p: &ProjPoint, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(p.coords().len()))?;
    for c in p.coords() {
        seq.serialize_element(&format_complex(*c))?;
    }
    seq.end()
}

/// `true` iff every component vanishes exactly at the rational point `p`.
pub fn candidate_check(f: &RationalMap, p: &[BigRational]) -> Result<bool> {
    if p.len() != f.ambient() + 1 {
        return Err(Error::Usage(format!("point needs {} coordinates", f.ambient() + 1)));
    }
    if p.iter().all(Zero::is_zero) {
        return Err(Error::Usage("the zero vector is not a projective point".into()));
    }
    for c in f.components() {
        if !c.eval_exact(p)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `max_i |P_i(z)| / |z|_inf^d`.
pub fn residual(f: &RationalMap, z: &[Complex64]) -> f64 {
    let w = f.compiled().eval(z);
    let zmax = z.iter().map(|c| c.norm()).fold(0.0, f64::max);
    w.iter().map(|c| c.norm()).fold(0.0, f64::max) / zmax.powi(f.degree() as i32)
}

fn chart_normalize(z: &mut [Complex64]) -> usize {
    let (ci, cmax) = z
        .iter()
        .enumerate()
        .map(|(i, c)| (i, *c))
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("nonempty");
    for c in z.iter_mut() {
        *c /= cmax;
    }
    ci
}

/// Levenberg–Marquardt on `sum |P_i|^2` in the affine chart of the largest
/// coordinate, re-choosing the chart when another coordinate overtakes it.
fn refine(f: &RationalMap, start: &[Complex64], iters: usize) -> (Vec<Complex64>, f64) {
    let n = start.len();
    let compiled = f.compiled();
    let mut z = start.to_vec();
    let mut chart = chart_normalize(&mut z);
    let cost = |z: &[Complex64]| compiled.eval(z).iter().map(|c| c.norm_sqr()).sum::<f64>();
    let mut c0 = cost(&z);
    let mut lambda = 1e-3;
    for _ in 0..iters {
        // near a zero of high multiplicity the residual is tiny long before
        // the point is accurate, so the stop is on step size instead
        if c0 == 0.0 {
            break;
        }
        let w = compiled.eval(&z);
        let jac = compiled.jacobian(&z);
        let free: Vec<usize> = (0..n).filter(|&j| j != chart).collect();
        let j = DMatrix::from_fn(n, n - 1, |r, c| jac[r][free[c]]);
        let rvec = DVector::from_iterator(n, w.iter().copied());
        let jh = j.adjoint();
        let jtj = &jh * &j;
        let g = &jh * &rvec;
        // Marquardt scaling: the damping must shrink with JᴴJ, which is tiny
        // at degenerate zeros
        let dmax = (0..n - 1).map(|d| jtj[(d, d)].re).fold(0.0, f64::max);
        if !(dmax > 0.0) {
            break;
        }
        let mut improved = false;
        let mut step_norm = 0.0;
        while lambda < 1e10 {
            let mut a = jtj.clone();
            for d in 0..n - 1 {
                a[(d, d)] += Complex64::new(lambda * jtj[(d, d)].re.max(1e-9 * dmax), 0.0);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = z.clone();
            for (c, &fj) in free.iter().enumerate() {
                trial[fj] += step[c];
            }
            let c1 = cost(&trial);
            if c1.is_finite() && c1 < c0 {
                step_norm = step.norm();
                z = trial;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved || step_norm < 1e-15 {
            break;
        }
        let new_chart = chart_normalize(&mut z);
        chart = new_chart;
        c0 = cost(&z);
    }
    let r = residual(f, &z);
    (z, r)
}

/// Locate approximate common zeros of the components by FS-uniform sampling
/// and local refinement. Returns clusters merged at `merge_radius`.
pub fn numeric_scan(f: &RationalMap, samples: usize, opts: &ScanOptions) -> Result<Vec<Cluster>> {
    if samples == 0 {
        return Err(Error::Usage("samples must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Usage("tol must be positive".into()));
    }
    let dim = f.ambient() + 1;
    let pts = fs_uniform_points(opts.seed, stream::SCAN, samples, dim);
    let mut scored: Vec<(f64, usize)> = pts.par_iter().enumerate().map(|(i, z)| (residual(f, z), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // well-separated low-residual seeds
    let pool = scored.len().min((samples / 50).max(256));
    let mut seeds: Vec<usize> = Vec::new();
    for &(_, i) in &scored[..pool] {
        if seeds.len() >= opts.max_candidates {
            break;
        }
        if seeds.iter().all(|&j| fs_distance(&pts[i], &pts[j]) > 0.05) {
            seeds.push(i);
        }
    }

    let refined: Vec<(Vec<Complex64>, f64)> = seeds
        .par_iter()
        .map(|&i| refine(f, &pts[i], opts.refine_iters))
        .collect();

    let mut clusters: Vec<Cluster> = Vec::new();
    for (z, r) in refined {
        if !(r < opts.tol) {
            continue;
        }
        let p = Lift::new(z)?.normalized();
        match clusters.iter_mut().find(|c| fs_distance(c.point.coords(), p.coords()) < opts.merge_radius) {
            Some(c) => {
                c.members += 1;
                if r < c.residual {
                    c.point = p;
                    c.residual = r;
                }
            }
            None => clusters.push(Cluster { point: p, residual: r, members: 1 }),
        }
    }
    Ok(merge_valleys(f, clusters, opts.tol))
}

/// True when the residual stays below `tol` along the chord between the
/// phase-aligned lifts of `a` and `b`.
fn same_valley(f: &RationalMap, a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    if ip.norm() == 0.0 {
        return false;
    }
    let phase = ip / ip.norm();
    (1..8).all(|i| {
        let t = i as f64 / 8.0;
        let z: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x * (1.0 - t) + y * phase * t).collect();
        residual(f, &z) < tol
    })
}

/// Merge clusters joined, possibly through other clusters, by low-residual
/// chords. Near a zero of high multiplicity refinement stalls well before
/// the merge radius, leaving a scatter of points along a curved valley that
/// all belong to one indeterminacy point.
fn merge_valleys(f: &RationalMap, clusters: Vec<Cluster>, tol: f64) -> Vec<Cluster> {
    let n = clusters.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
            if ri != rj && same_valley(f, clusters[i].point.coords(), clusters[j].point.coords(), tol) {
                parent[rj] = ri;
            }
        }
    }
    let mut out: Vec<(usize, Cluster)> = Vec::new();
    for (i, c) in clusters.into_iter().enumerate() {
        let r = root(&mut parent, i);
        match out.iter_mut().find(|(k, _)| *k == r) {
            Some((_, o)) => {
                o.members += c.members;
                if c.residual < o.residual {
                    o.point = c.point;
                    o.residual = c.residual;
                }
            }
            None => out.push((r, c)),
        }
    }
    out.into_iter().map(|(_, c)| c).collect()
}

/// A rational point with small denominators within `tol` of `p`, found by
/// rounding the chart coordinates of the largest entry.
pub fn rational_guess(p: &ProjPoint, max_den: i64, tol: f64) -> Option<Vec<BigRational>> {
    let mut z = p.coords().to_vec();
    chart_normalize(&mut z);
    let mut out = Vec::with_capacity(z.len());
    for c in &z {
        if c.im.abs() > tol {
            return None;
        }
        let mut best: Option<(f64, BigRational)> = None;
        for den in 1..=max_den {
            let num = (c.re * den as f64).round();
            let err = (c.re - num / den as f64).abs();
            if err <= tol && best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, BigRational::new(BigInt::from(num as i64), BigInt::from(den))));
                break;
            }
        }
        out.push(best?.1);
    }
    Some(out)
}
