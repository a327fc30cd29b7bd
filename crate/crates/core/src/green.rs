//! Green functions of algebraically stable maps, evaluated on lifts by
//! renormalized iteration, with invariance, convergence and continuity
//! diagnostics.

use std::io::Write;

use num::complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indeterminacy::RegionSpec;
use crate::output;
use crate::projalg::{fs_distance, Lift};
use crate::ratmap::{BirationalPair, RationalMap, DEFAULT_EPS_IND};
use crate::sampling::{fs_uniform, index_rng, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

/// Truncated Green function `G_N` of one map.
#[derive(Clone, Debug)]
pub struct GreenEvaluator {
    map: RationalMap,
    depth: u32,
    direction: Direction,
    eps_ind: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: f64,
    /// Empirical bound from the last increments; meaningless when
    /// `escaped_to_indeterminacy` is set.
    pub error_bound: f64,
    pub depth_used: u32,
    pub escaped_to_indeterminacy: bool,
}

impl GreenValue {
    pub fn bound_label(&self) -> &'static str {
        if self.escaped_to_indeterminacy {
            "unreliable"
        } else {
            "empirical"
        }
    }
}

/// Reusable buffers for the inner loop.
#[derive(Default)]
pub struct Scratch {
    z: Vec<Complex64>,
    w: Vec<Complex64>,
    pw: Vec<Complex64>,
}

fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl GreenEvaluator {
    /// Evaluator for `map` at depth `depth`. Depth 0 gives the baseline
    /// `G_0 = log |z|`, the potential of the Fubini–Study form.
    pub fn new(map: RationalMap, depth: u32, direction: Direction) -> Result<Self> {
        if map.degree() < 2 {
            return Err(Error::Usage(format!("Green functions need degree >= 2, got {}", map.degree())));
        }
        Ok(GreenEvaluator { map, depth, direction, eps_ind: DEFAULT_EPS_IND })
    }

    pub fn for_pair(pair: &BirationalPair, depth: u32, direction: Direction) -> Result<Self> {
        let map = match direction {
            Direction::Forward => pair.forward.clone(),
            Direction::Inverse => pair.inverse.clone(),
        };
        Self::new(map, depth, direction)
    }

    pub fn with_eps_ind(mut self, eps: f64) -> Self {
        self.eps_ind = eps;
        self
    }

    pub fn with_depth(&self, depth: u32) -> Self {
        GreenEvaluator { depth, ..self.clone() }
    }

    pub fn map(&self) -> &RationalMap {
        &self.map
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn degree(&self) -> u32 {
        self.map.degree()
    }

    pub fn eval(&self, z: &Lift) -> Result<GreenValue> {
        if z.dim() != self.map.ambient() + 1 {
            return Err(Error::Usage(format!("lift has {} coordinates, map expects {}", z.dim(), self.map.ambient() + 1)));
        }
        Ok(self.eval_raw(z.coords(), &mut Scratch::default()))
    }

    /// `G_N(z)` without validation; `z` must be a nonzero finite vector of
    /// the right length.
    pub fn eval_raw(&self, z: &[Complex64], s: &mut Scratch) -> GreenValue {
        let d = self.degree() as f64;
        let dinv = 1.0 / d;
        let n0 = norm(z);
        let mut value = n0.ln();
        s.z.clear();
        s.z.extend(z.iter().map(|c| c / n0));
        s.w.resize(z.len(), Complex64::new(0.0, 0.0));
        let compiled = self.map.compiled();
        let mut weight = 1.0;
        let mut last = [0.0f64; 3];
        let eps2 = self.eps_ind * self.eps_ind;
        for j in 0..self.depth {
            compiled.eval_scratch(&s.z, &mut s.w, &mut s.pw);
            weight *= dinv;
            // compare squared sup norms to avoid `hypot`
            let zmax2 = s.z.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
            let wmax2 = s.w.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
            if !(wmax2 >= eps2 * zmax2.powi(self.degree() as i32)) || !wmax2.is_finite() {
                let c = last.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
                return GreenValue {
                    value,
                    error_bound: weight * d * c * d / (d - 1.0),
                    depth_used: j,
                    escaped_to_indeterminacy: true,
                };
            }
            let nw = norm(&s.w);
            let inc = nw.ln();
            value += weight * inc;
            last = [last[1], last[2], inc];
            // fixed direction: the projective point no longer moves, so the
            // remaining increments all equal `inc`
            let r = 1.0 / nw;
            let ip: Complex64 = s.z.iter().zip(&s.w).map(|(a, b)| a.conj() * b).sum::<Complex64>() * r;
            let mut moved = 0.0;
            for (a, b) in s.z.iter_mut().zip(&s.w) {
                let nb = b * r;
                moved += (nb - ip * *a).norm_sqr();
                *a = nb;
            }
            if moved < 1e-28 && j + 1 < self.depth {
                let tail = inc * (weight - dinv.powi(self.depth as i32)) / (d - 1.0);
                value += tail;
                last = [inc; 3];
                break;
            }
        }
        let c = last.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
        GreenValue {
            value,
            error_bound: dinv.powi(self.depth as i32) * c * d / (d - 1.0),
            depth_used: self.depth,
            escaped_to_indeterminacy: false,
        }
    }

    /// `|G_N(F(z)) - d G_N(z)|`.
    pub fn invariance_residual(&self, z: &Lift) -> Result<f64> {
        let w = self.map.eval(z, self.eps_ind)?;
        let gz = self.eval(z)?;
        let gw = self.eval(&w)?;
        if gz.escaped_to_indeterminacy || gw.escaped_to_indeterminacy {
            return Err(Error::IndeterminacyProximity { ratio: 0.0 });
        }
        Ok((gw.value - self.degree() as f64 * gz.value).abs())
    }

    /// `c_n(z) = d^{-n} log(|l(w_n)| / |w_n|) + G_N(z)` with `w_n` the
    /// renormalized `n`-th iterate of `z` and `l` scaled to unit norm.
    pub fn hyperplane_pullback_potential(&self, ell: &[Complex64], z: &Lift, n: u32) -> Result<f64> {
        let k1 = self.map.ambient() + 1;
        if ell.len() != k1 || z.dim() != k1 {
            return Err(Error::Usage(format!("linear form and lift need {k1} coordinates")));
        }
        let nl = norm(ell);
        if nl == 0.0 {
            return Err(Error::Usage("linear form is zero".into()));
        }
        let g = self.eval(z)?;
        if g.escaped_to_indeterminacy {
            return Err(Error::IndeterminacyProximity { ratio: 0.0 });
        }
        let mut w = z.clone();
        for _ in 0..n {
            let next = self.map.eval(&w, self.eps_ind)?;
            let nn = next.norm();
            w = Lift::new(next.coords().iter().map(|c| c / nn).collect())?;
        }
        let lw: Complex64 = ell.iter().zip(w.coords()).map(|(a, b)| a * b).sum::<Complex64>() / nl;
        let ratio = lw.norm() / w.norm();
        if !(ratio > 1e-300) {
            return Err(Error::Degenerate("orbit landed on the pulled-back hyperplane".into()));
        }
        Ok(ratio.ln() / (self.degree() as f64).powi(n as i32) + g.value)
    }

    /// Number of steps for the orbit of `z` to enter `region`, if it does so
    /// within `max_steps` without approaching indeterminacy.
    pub fn steps_to_enter(&self, z: &Lift, region: &RegionSpec, max_steps: u32) -> Option<u32> {
        let mut w = z.clone();
        for n in 0..=max_steps {
            if region.contains(w.coords()) {
                return Some(n);
            }
            let next = self.map.eval(&w, self.eps_ind).ok()?;
            let nn = next.norm();
            w = Lift::new(next.coords().iter().map(|c| c / nn).collect()).ok()?;
        }
        None
    }

    /// `count` FS-uniform unit lifts whose orbits enter `region` within
    /// `max_steps`; returns the points and the largest step count used.
    pub fn basin_points(&self, region: &RegionSpec, count: usize, max_steps: u32, seed: u64) -> Result<(Vec<Lift>, u32)> {
        let dim = self.map.ambient() + 1;
        let mut out = Vec::with_capacity(count);
        let mut used = 0;
        let limit = count * 1000;
        for i in 0..limit {
            if out.len() == count {
                break;
            }
            let z = Lift::new(fs_uniform(&mut index_rng(seed, stream::BASIN, i as u64), dim))?;
            if let Some(n) = self.steps_to_enter(&z, region, max_steps) {
                used = used.max(n);
                out.push(z);
            }
        }
        if out.len() < count {
            return Err(Error::Insufficient(format!("only {} of {count} basin points found", out.len())));
        }
        Ok((out, used))
    }
}

/// The lift `(z_1, ..., z_k)` with a 1 inserted at position `chart`.
pub fn chart_lift(chart: usize, w: &[Complex64]) -> Vec<Complex64> {
    let mut z = Vec::with_capacity(w.len() + 1);
    z.extend_from_slice(&w[..chart]);
    z.push(Complex64::new(1.0, 0.0));
    z.extend_from_slice(&w[chart..]);
    z
}

/// A planar real slice of the affine chart `C^k`: two real axes are swept
/// over a rectangle, the other real coordinates are held at `base`.
///
/// Real axis `2i` is `Re z_{i+1}` and `2i+1` is `Im z_{i+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub chart: usize,
    pub axes: (usize, usize),
    pub lo: (f64, f64),
    pub hi: (f64, f64),
    pub base: Vec<f64>,
}

impl Slice {
    /// The real slice `(Re z1, Re z2)` of `C^2` over `[lo, hi]^2`.
    pub fn real_square(k: usize, lo: f64, hi: f64) -> Slice {
        Slice { chart: k, axes: (0, 2.min(2 * k - 1)), lo: (lo, lo), hi: (hi, hi), base: vec![0.0; 2 * k] }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.chart > k || self.base.len() != 2 * k || self.axes.0 >= 2 * k || self.axes.1 >= 2 * k || self.axes.0 == self.axes.1 {
            return Err(Error::Usage("slice does not fit the chart".into()));
        }
        if !(self.lo.0 < self.hi.0 && self.lo.1 < self.hi.1) {
            return Err(Error::Usage("slice box is empty".into()));
        }
        Ok(())
    }

    /// Chart coordinates of cell `(i, j)` (centre of the cell).
    pub fn point(&self, res: usize, i: usize, j: usize) -> Vec<Complex64> {
        let mut x = self.base.clone();
        x[self.axes.0] = self.lo.0 + (i as f64 + 0.5) * (self.hi.0 - self.lo.0) / res as f64;
        x[self.axes.1] = self.lo.1 + (j as f64 + 0.5) * (self.hi.1 - self.lo.1) / res as f64;
        x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
    }
}

/// Which function of the chart lift `ẑ` a grid records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    /// `G_N(ẑ) - log|ẑ|`, the potential relative to the Fubini–Study form.
    #[default]
    Relative,
    /// `G_N(ẑ)`, the local potential of the current in the chart.
    Chart,
}

/// Potential values over a slice, row-major with the first slice axis
/// varying slowest.
#[derive(Clone, Debug)]
pub struct PotentialSlice {
    pub slice: Slice,
    pub kind: PotentialKind,
    pub res: usize,
    pub values: Vec<f64>,
    pub bounds: Vec<f64>,
    pub nan_count: usize,
}

pub fn potential_grid(e: &GreenEvaluator, slice: &Slice, res: usize, kind: PotentialKind) -> Result<PotentialSlice> {
    let k = e.map.ambient();
    slice.validate(k)?;
    if res == 0 {
        return Err(Error::Usage("resolution must be positive".into()));
    }
    let cells: Vec<(f64, f64)> = (0..res * res)
        .into_par_iter()
        .map_init(Scratch::default, |s, idx| {
            let z = chart_lift(slice.chart, &slice.point(res, idx / res, idx % res));
            let g = e.eval_raw(&z, s);
            if g.escaped_to_indeterminacy {
                (f64::NAN, f64::NAN)
            } else {
                match kind {
                    PotentialKind::Relative => (g.value - norm(&z).ln(), g.error_bound),
                    PotentialKind::Chart => (g.value, g.error_bound),
                }
            }
        })
        .collect();
    let nan_count = cells.iter().filter(|c| c.0.is_nan()).count();
    let (values, bounds) = cells.into_iter().unzip();
    Ok(PotentialSlice { slice: slice.clone(), kind, res, values, bounds, nan_count })
}

impl PotentialSlice {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let k = self.slice.base.len() / 2;
        let mut header: Vec<String> = (1..=k).flat_map(|i| [format!("re(z{i})"), format!("im(z{i})")]).collect();
        header.push("value".into());
        header.push("error_bound".into());
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.res {
            for j in 0..self.res {
                let p = self.slice.point(self.res, i, j);
                let idx = i * self.res + j;
                let mut row: Vec<String> = p.iter().flat_map(|c| [output::fmt_f64(c.re), output::fmt_f64(c.im)]).collect();
                row.push(output::fmt_f64(self.values[idx]));
                row.push(output::fmt_f64(self.bounds[idx]));
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    pub fn write_pgm<W: Write>(&self, out: W) -> Result<()> {
        output::write_pgm(out, self.res, self.res, &self.values)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResult {
    pub alpha: f64,
    pub intercept: f64,
    pub fit_residual: f64,
    pub pairs_used: usize,
    pub pairs_rejected: usize,
    pub seed: u64,
    /// `(FS distance, |G(x) - G(y)|)` per used pair.
    pub scatter: Vec<(f64, f64)>,
}

impl ProbeResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "distance,difference")?;
        for (a, b) in &self.scatter {
            writeln!(out, "{},{}", output::fmt_f64(*a), output::fmt_f64(*b))?;
        }
        Ok(())
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, rms residual)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Empirical Hölder exponent of `G` on `region`, evaluated on the standard
/// chart lift (coordinate `chart` set to 1).
pub fn continuity_probe(e: &GreenEvaluator, region: &RegionSpec, chart: usize, pairs: usize, seed: u64) -> Result<ProbeResult> {
    let dim = e.map.ambient() + 1;
    if chart >= dim {
        return Err(Error::Usage(format!("chart index {chart} out of range")));
    }
    if pairs < 2 {
        return Err(Error::Usage("need at least two pairs".into()));
    }
    let results: Vec<Option<(f64, f64)>> = (0..pairs)
        .into_par_iter()
        .map_init(Scratch::default, |s, i| {
            let mut rng = index_rng(seed, stream::PROBE, i as u64);
            let x = region.sample_inside(&mut rng, dim, 10_000)?;
            let t = (1e-6f64.ln() + rand::Rng::gen::<f64>(&mut rng) * (1e-1f64.ln() - 1e-6f64.ln())).exp();
            // unit direction orthogonal to x
            let mut u = fs_uniform(&mut rng, dim);
            let ip: Complex64 = x.iter().zip(&u).map(|(a, b)| a.conj() * b).sum();
            for (ui, xi) in u.iter_mut().zip(&x) {
                *ui -= ip * xi;
            }
            let nu = norm(&u);
            let y: Vec<Complex64> = x.iter().zip(&u).map(|(a, b)| a * t.cos() + b * (t.sin() / nu)).collect();
            if x[chart].norm() < 1e-9 || y[chart].norm() < 1e-9 {
                return None;
            }
            let xc: Vec<Complex64> = x.iter().map(|c| c / x[chart]).collect();
            let yc: Vec<Complex64> = y.iter().map(|c| c / y[chart]).collect();
            let gx = e.eval_raw(&xc, s);
            let gy = e.eval_raw(&yc, s);
            if gx.escaped_to_indeterminacy || gy.escaped_to_indeterminacy {
                return None;
            }
            let diff = (gx.value - gy.value).abs();
            let dist = fs_distance(&x, &y);
            (diff > 0.0 && diff.is_finite() && dist > 0.0).then_some((dist, diff))
        })
        .collect();
    let scatter: Vec<(f64, f64)> = results.iter().flatten().copied().collect();
    let used = scatter.len();
    if used < (pairs / 2).max(10) {
        return Err(Error::Insufficient(format!("only {used} of {pairs} probe pairs were usable")));
    }
    let lx: Vec<f64> = scatter.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = scatter.iter().map(|p| p.1.ln()).collect();
    let (intercept, alpha, fit_residual) = fit_line(&lx, &ly);
    Ok(ProbeResult { alpha, intercept, fit_residual, pairs_used: used, pairs_rejected: pairs - used, seed, scatter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indeterminacy::{Role, Shape};
    use crate::zoo::{self, ZooParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn power() -> GreenEvaluator {
        GreenEvaluator::new(zoo::power(2).unwrap(), 30, Direction::Forward).unwrap()
    }

    fn henon(depth: u32) -> GreenEvaluator {
        let pair = zoo::zoo("henon", &ZooParams::default()).unwrap().pair.unwrap();
        GreenEvaluator::for_pair(&pair, depth, Direction::Forward).unwrap()
    }

    #[test]
    fn power_map_closed_form() {
        let g = power().eval(&Lift::from_real(&[2.0, 1.0, 1.0]).unwrap()).unwrap();
        assert!((g.value - 2f64.ln()).abs() < 1e-9, "{g:?}");
        assert!(!g.escaped_to_indeterminacy);
    }

    #[test]
    fn homogeneity() {
        let e = henon(25);
        let z = Lift::new(vec![c(0.3, 0.1), c(-0.4, 0.2), c(1.0, 0.0)]).unwrap();
        let g = e.eval(&z).unwrap().value;
        for lambda in [c(2.0, 0.0), c(0.0, 1.0), c(1e6, 0.0)] {
            let gl = e.eval(&z.scale(lambda).unwrap()).unwrap().value;
            assert!((gl - g - lambda.norm().ln()).abs() < 1e-12 * (1.0 + lambda.norm().ln().abs()));
        }
    }

    #[test]
    fn henon_far_point() {
        let g = henon(25).eval(&Lift::from_real(&[1e3, 0.0, 1.0]).unwrap()).unwrap();
        assert!((g.value - 1e3f64.ln()).abs() < 0.01, "{g:?}");
    }

    #[test]
    fn early_exit_matches_full_iteration() {
        let e = henon(40);
        let z = Lift::from_real(&[5.0, 2.0, 1.0]).unwrap();
        let fast = e.eval(&z).unwrap().value;
        // direct sum without the fixed-point shortcut
        let d = 2.0f64;
        let mut w: Vec<Complex64> = z.coords().iter().map(|x| x / z.norm()).collect();
        let mut slow = z.norm().ln();
        for j in 0..40 {
            let fw = e.map().compiled().eval(&w);
            let n = norm(&fw);
            slow += n.ln() / d.powi(j + 1);
            w = fw.iter().map(|x| x / n).collect();
        }
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn escape_is_flagged() {
        let g = henon(10).eval(&Lift::from_real(&[0.0, 1.0, 0.0]).unwrap()).unwrap();
        assert!(g.escaped_to_indeterminacy);
        assert_eq!(g.bound_label(), "unreliable");
    }

    #[test]
    fn invariance_power_map() {
        let r = power().invariance_residual(&Lift::from_real(&[2.0, 1.0, 1.0]).unwrap()).unwrap();
        assert!(r < 1e-8);
    }

    #[test]
    fn truncation_is_cauchy() {
        let e = henon(1);
        let z = Lift::new(vec![c(0.5, 0.2), c(-0.3, 0.9), c(1.0, 0.0)]).unwrap();
        let vals: Vec<GreenValue> = (5..12).map(|n| e.with_depth(n).eval(&z).unwrap()).collect();
        for w in vals.windows(2) {
            assert!((w[1].value - w[0].value).abs() <= w[0].error_bound + 1e-15);
        }
    }

    #[test]
    fn pullback_n0_below_green() {
        let e = henon(25);
        let z = Lift::new(vec![c(0.5, 0.2), c(-0.3, 0.9), c(1.0, 0.0)]).unwrap();
        let ell = [c(1.0, 0.0), c(2.0, -1.0), c(0.5, 0.0)];
        let c0 = e.hyperplane_pullback_potential(&ell, &z, 0).unwrap();
        assert!(c0 <= e.eval(&z).unwrap().value);
    }

    #[test]
    fn power_pullback_ratio() {
        let e = power();
        let z = Lift::from_real(&[2.0, 1.0, 1.0]).unwrap();
        let g = e.eval(&z).unwrap().value;
        // with l = z0 the error vanishes super-exponentially here; a form
        // with |l(e0)| < |l| shows the generic d^-n rate
        let ell = [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let errs: Vec<f64> = (1..6).map(|n| (e.hyperplane_pullback_potential(&ell, &z, n).unwrap() - g).abs()).collect();
        for w in errs.windows(2) {
            let r = w[1] / w[0];
            assert!((0.25..=1.0).contains(&r), "{r}");
        }
    }

    #[test]
    fn grid_examples() {
        let power = power();
        let slice = Slice { chart: 2, axes: (0, 2), lo: (-0.5, -0.5), hi: (0.5, 0.5), base: vec![0.0; 4] };
        let g = potential_grid(&power, &slice, 16, PotentialKind::Chart).unwrap();
        assert!(g.values.iter().all(|v| v.abs() < 1e-9));
        let base = power.with_depth(0);
        let g = potential_grid(&base, &slice, 16, PotentialKind::Relative).unwrap();
        assert!(g.values.iter().all(|v| v.abs() < 1e-12));
        let g = potential_grid(&henon(20), &Slice::real_square(2, -3.0, 3.0), 64, PotentialKind::Relative).unwrap();
        assert_eq!(g.nan_count, 0);
        assert!(g.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn probe_smooth_baseline() {
        let e = power().with_depth(0);
        let ball = RegionSpec::new(Role::U, vec![Shape::ball(vec![c(1.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)], 0.2).unwrap()], false).unwrap();
        let p = continuity_probe(&e, &ball, 2, 400, 5).unwrap();
        assert!((p.alpha - 1.0).abs() < 0.1, "{}", p.alpha);
    }

    #[test]
    fn probe_power_map() {
        let ball = RegionSpec::new(Role::U, vec![Shape::ball(vec![c(2.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)], 0.1).unwrap()], false).unwrap();
        let p = continuity_probe(&power(), &ball, 2, 400, 5).unwrap();
        assert!((p.alpha - 1.0).abs() < 0.15, "{}", p.alpha);
    }
}
