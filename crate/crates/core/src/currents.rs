//! Discrete equilibrium measure `dd^c u ∧ dd^c v` for `k = 2` on a box of an
//! affine chart of `P^2`.
//!
//! Real axes of the chart `C^2` are numbered `0 = Re z1`, `1 = Im z1`,
//! `2 = Re z2`, `3 = Im z2`. Grid nodes sit at cell centres. The wedge is
//! evaluated with second-order central differences, so the two outermost
//! rings of cells carry no mass.

use std::borrow::Cow;
use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex};

use num::complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{chart_lift, GreenEvaluator, Scratch};
use crate::indeterminacy::RegionSpec;
use crate::output;
use crate::sampling::{index_rng, stream};

/// Cells dropped at each face of the box.
pub const RING: usize = 2;

/// Default number of binomial smoothing passes for Green potentials.
pub const DEFAULT_SMOOTHING: usize = 2;

/// Largest clipped negative mass, relative to the total, of a valid run.
pub const MAX_CLIP_FRACTION: f64 = 0.02;

/// Normalization of the discrete wedge: with `dd^c = (i/π) ∂∂̄` the form
/// `dd^c u ∧ dd^c v` has density `(4/π²)(u_{11̄} v_{22̄} + u_{22̄} v_{11̄} -
/// 2 Re(u_{12̄} conj v_{12̄}))` against Lebesgue measure, which gives total
/// mass 1 for the Fubini–Study potential `½ log(1 + |z|²)`.
const WEDGE_CONSTANT: f64 = 4.0 / (PI * PI);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl ChartBox {
    /// `[lo, hi]` on every real axis.
    pub fn cube(lo: f64, hi: f64) -> Self {
        ChartBox { lo: [lo; 4], hi: [hi; 4] }
    }

    fn validate(&self) -> Result<()> {
        if (0..4).all(|a| self.lo[a] < self.hi[a] && self.lo[a].is_finite() && self.hi[a].is_finite()) {
            Ok(())
        } else {
            Err(Error::Usage("chart box must have lo < hi on every axis".into()))
        }
    }

    pub fn steps(&self, res: usize) -> [f64; 4] {
        std::array::from_fn(|a| (self.hi[a] - self.lo[a]) / res as f64)
    }

    /// Real coordinate of node `i` on axis `a`.
    #[inline]
    pub fn coord(&self, res: usize, a: usize, i: usize) -> f64 {
        self.lo[a] + (i as f64 + 0.5) * (self.hi[a] - self.lo[a]) / res as f64
    }

    pub fn node(&self, res: usize, idx: [usize; 4]) -> [Complex64; 2] {
        [
            Complex64::new(self.coord(res, 0, idx[0]), self.coord(res, 1, idx[1])),
            Complex64::new(self.coord(res, 2, idx[2]), self.coord(res, 3, idx[3])),
        ]
    }
}

fn check_res(res: usize) -> Result<()> {
    if res < 2 * RING + 1 {
        return Err(Error::Usage(format!("resolution must be at least {}", 2 * RING + 1)));
    }
    Ok(())
}

/// Potential values on the nodes of a box of `C^2`, NaN where unavailable.
/// Index `((i0 * res + i1) * res + i2) * res + i3`.
#[derive(Clone, Debug)]
pub struct GridPotential {
    pub bbox: ChartBox,
    pub res: usize,
    pub values: Vec<f64>,
}

/// Values of a potential one plane (fixed `Re z1` index) at a time.
pub trait PlaneSource: Sync {
    fn plane(&self, i: usize) -> Cow<'_, [f64]>;
}

impl PlaneSource for GridPotential {
    fn plane(&self, i: usize) -> Cow<'_, [f64]> {
        let n = self.res * self.res * self.res;
        Cow::Borrowed(&self.values[i * n..(i + 1) * n])
    }
}

/// Binomial weights `C(2p, m) / 4^p`, `m = 0..=2p`.
fn binomial_weights(passes: usize) -> Vec<f64> {
    let n = 2 * passes;
    let mut w = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![0.0; w.len() + 1];
        for (i, x) in w.iter().enumerate() {
            next[i] += 0.5 * x;
            next[i + 1] += 0.5 * x;
        }
        w = next;
    }
    w
}

/// A function of the chart point sampled on the grid nodes, optionally
/// averaged with binomial weights `(1, 2, 1) / 4` applied `passes` times
/// along every real axis.
///
/// The average is a convolution with a positive measure, so it keeps
/// plurisubharmonic functions plurisubharmonic; it is evaluated on a lattice
/// extended by `passes` nodes beyond the box so every node gets the full
/// kernel. Planes are produced in any order but cached for sequential use.
pub struct SampledPotential<F> {
    bbox: ChartBox,
    res: usize,
    passes: usize,
    conj_symmetric: bool,
    f: F,
    cache: Mutex<VecDeque<(isize, Arc<Vec<f64>>)>>,
}

impl<F> SampledPotential<F>
where
    F: Fn(&mut Scratch, [Complex64; 2]) -> f64 + Sync,
{
    pub fn new(bbox: ChartBox, res: usize, passes: usize, f: F) -> Self {
        SampledPotential { bbox, res, passes, conj_symmetric: false, f, cache: Mutex::new(VecDeque::new()) }
    }

    /// Declare `f(conj z) = f(z)`. When the box is symmetric in both
    /// imaginary axes only half of each plane is evaluated.
    pub fn conj_symmetric(mut self, yes: bool) -> Self {
        let sym = |a: usize| (self.bbox.lo[a] + self.bbox.hi[a]).abs() <= 1e-12 * (self.bbox.hi[a] - self.bbox.lo[a]);
        self.conj_symmetric = yes && sym(1) && sym(3);
        self
    }

    fn ext(&self) -> usize {
        self.res + 2 * self.passes
    }

    /// Raw values on the extended plane `i` (may be negative).
    fn raw_plane(&self, i: isize) -> Arc<Vec<f64>> {
        {
            let cache = self.cache.lock().expect("cache lock");
            if let Some((_, p)) = cache.iter().find(|(j, _)| *j == i) {
                return p.clone();
            }
        }
        let e = self.ext();
        let off = self.passes as f64;
        let h = self.bbox.steps(self.res);
        let coord = |a: usize, n: usize| self.bbox.lo[a] + (n as f64 - off + 0.5) * h[a];
        let x0 = self.bbox.lo[0] + (i as f64 + 0.5) * h[0];
        // with the symmetry, rows j < e/2 are computed and the rest mirrored
        let rows = if self.conj_symmetric { e.div_ceil(2) } else { e };
        let mut v: Vec<f64> = (0..rows * e * e)
            .into_par_iter()
            .with_min_len(256)
            .map_init(Scratch::default, |s, idx| {
                let (j, k, l) = (idx / (e * e), (idx / e) % e, idx % e);
                let z = [Complex64::new(x0, coord(1, j)), Complex64::new(coord(2, k), coord(3, l))];
                (self.f)(s, z)
            })
            .collect();
        if rows < e {
            v.resize(e * e * e, 0.0);
            for j in rows..e {
                for k in 0..e {
                    for l in 0..e {
                        v[(j * e + k) * e + l] = v[((e - 1 - j) * e + k) * e + e - 1 - l];
                    }
                }
            }
        }
        let p = Arc::new(v);
        let mut cache = self.cache.lock().expect("cache lock");
        cache.push_back((i, p.clone()));
        while cache.len() > 2 * self.passes + 3 {
            cache.pop_front();
        }
        p
    }
}

impl<F> PlaneSource for SampledPotential<F>
where
    F: Fn(&mut Scratch, [Complex64; 2]) -> f64 + Sync,
{
    fn plane(&self, i: usize) -> Cow<'_, [f64]> {
        let (r, e, p) = (self.res, self.ext(), self.passes);
        let w = binomial_weights(p);
        // along axis 0
        let mut acc = vec![0.0; e * e * e];
        for (m, wm) in w.iter().enumerate() {
            let raw = self.raw_plane(i as isize + m as isize - p as isize);
            acc.par_iter_mut().zip(raw.par_iter()).for_each(|(a, x)| *a += wm * x);
        }
        if p == 0 {
            return Cow::Owned(acc);
        }
        // axes 3, 2, 1 in turn, cropping each to the box
        let conv = |src: &[f64], outer: usize, len_in: usize, inner: usize| -> Vec<f64> {
            let mut out = vec![0.0; outer * r * inner];
            out.par_chunks_mut(r * inner).enumerate().for_each(|(o, chunk)| {
                for t in 0..r {
                    for q in 0..inner {
                        let mut sum = 0.0;
                        for (m, wm) in w.iter().enumerate() {
                            sum += wm * src[(o * len_in + t + m) * inner + q];
                        }
                        chunk[t * inner + q] = sum;
                    }
                }
            });
            out
        };
        let a3 = conv(&acc, e * e, e, 1);
        let a2 = conv(&a3, e, e, r);
        let a1 = conv(&a2, 1, e, r * r);
        Cow::Owned(a1)
    }
}

/// `½ log(1 + |z1|² + |z2|²)`.
pub fn fs_potential(z: [Complex64; 2]) -> f64 {
    0.5 * (1.0 + z[0].norm_sqr() + z[1].norm_sqr()).ln()
}

/// The chart potential `G_N(ẑ)` of a Green evaluator on `P^2`, NaN where
/// the orbit approaches indeterminacy.
pub fn green_source(
    e: &GreenEvaluator,
    chart: usize,
    bbox: ChartBox,
    res: usize,
    passes: usize,
) -> Result<SampledPotential<impl Fn(&mut Scratch, [Complex64; 2]) -> f64 + Sync + '_>> {
    if e.map().ambient() != 2 {
        return Err(Error::Usage("the measure is only implemented on P^2".into()));
    }
    if chart > 2 {
        return Err(Error::Usage(format!("chart index {chart} out of range")));
    }
    // maps have rational coefficients, so G(conj z) = G(z)
    Ok(SampledPotential::new(bbox, res, passes, move |s: &mut Scratch, w: [Complex64; 2]| {
        let g = e.eval_raw(&chart_lift(chart, &w), s);
        if g.escaped_to_indeterminacy {
            f64::NAN
        } else {
            g.value
        }
    })
    .conj_symmetric(true))
}

impl GridPotential {
    pub fn from_source<S: PlaneSource>(bbox: ChartBox, res: usize, src: &S) -> Result<Self> {
        bbox.validate()?;
        check_res(res)?;
        let mut values = Vec::with_capacity(res.pow(4));
        for i in 0..res {
            values.extend_from_slice(&src.plane(i));
        }
        Ok(GridPotential { bbox, res, values })
    }

    pub fn from_fn<F>(bbox: ChartBox, res: usize, f: F) -> Result<Self>
    where
        F: Fn([Complex64; 2]) -> f64 + Sync,
    {
        let src = SampledPotential::new(bbox, res, 0, |_: &mut Scratch, z: [Complex64; 2]| f(z));
        Self::from_source(bbox, res, &src)
    }

    pub fn from_green(e: &GreenEvaluator, chart: usize, bbox: ChartBox, res: usize, passes: usize) -> Result<Self> {
        Self::from_source(bbox, res, &green_source(e, chart, bbox, res, passes)?)
    }

    pub fn step(&self) -> [f64; 4] {
        self.bbox.steps(self.res)
    }

    pub fn nan_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }
}

#[derive(Clone, Debug)]
pub struct DensityGrid {
    pub bbox: ChartBox,
    pub res: usize,
    /// Clipped masses of the interior cells (`res - 2*RING` per axis), when
    /// kept. Same index order as [`GridPotential`].
    pub cell_masses: Option<Vec<f64>>,
    pub total_mass: f64,
    pub negative_clip: f64,
    /// Interior cells whose stencil touched a NaN.
    pub excluded_cells: usize,
    /// Mass summed over `z2`, indexed `[i0 * res + i1]`.
    pub marginal_z1: Vec<f64>,
    /// Mass summed over `z1`, indexed `[i2 * res + i3]`.
    pub marginal_z2: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensitySummary {
    pub res: usize,
    pub total_mass: f64,
    pub negative_clip: f64,
    pub clip_fraction: f64,
    pub excluded_cells: usize,
    pub quality_ok: bool,
}

struct Hess {
    a: f64,
    b: f64,
    c: Complex64,
}

#[inline]
fn hessian(w: [&[f64]; 3], r: usize, j: usize, k: usize, l: usize, h: &[f64; 4]) -> Option<Hess> {
    let at = |di: usize, dj: isize, dk: isize, dl: isize| -> f64 {
        let jj = (j as isize + dj) as usize;
        let kk = (k as isize + dk) as usize;
        let ll = (l as isize + dl) as usize;
        w[di][(jj * r + kk) * r + ll]
    };
    let c0 = at(1, 0, 0, 0);
    let d2 = |p: f64, m: f64, hh: f64| (p - 2.0 * c0 + m) / (hh * hh);
    let u00 = d2(at(2, 0, 0, 0), at(0, 0, 0, 0), h[0]);
    let u11 = d2(at(1, 1, 0, 0), at(1, -1, 0, 0), h[1]);
    let u22 = d2(at(1, 0, 1, 0), at(1, 0, -1, 0), h[2]);
    let u33 = d2(at(1, 0, 0, 1), at(1, 0, 0, -1), h[3]);
    let u02 = (at(2, 0, 1, 0) - at(2, 0, -1, 0) - at(0, 0, 1, 0) + at(0, 0, -1, 0)) / (4.0 * h[0] * h[2]);
    let u03 = (at(2, 0, 0, 1) - at(2, 0, 0, -1) - at(0, 0, 0, 1) + at(0, 0, 0, -1)) / (4.0 * h[0] * h[3]);
    let u12 = (at(1, 1, 1, 0) - at(1, 1, -1, 0) - at(1, -1, 1, 0) + at(1, -1, -1, 0)) / (4.0 * h[1] * h[2]);
    let u13 = (at(1, 1, 0, 1) - at(1, 1, 0, -1) - at(1, -1, 0, 1) + at(1, -1, 0, -1)) / (4.0 * h[1] * h[3]);
    let hs = Hess {
        a: 0.25 * (u00 + u11),
        b: 0.25 * (u22 + u33),
        c: Complex64::new(0.25 * (u02 + u13), 0.25 * (u03 - u12)),
    };
    (hs.a.is_finite() && hs.b.is_finite() && hs.c.re.is_finite() && hs.c.im.is_finite()).then_some(hs)
}

#[derive(Clone)]
struct RowAcc {
    mass: f64,
    clip: f64,
    excluded: usize,
    marg2: Vec<f64>,
}

/// Mixed wedge of two potentials supplied plane by plane. Only three planes
/// of each are held at a time; cell masses are kept when `keep_cells`.
pub fn ddc_wedge_streaming<U: PlaneSource, V: PlaneSource>(
    bbox: ChartBox,
    res: usize,
    u: &U,
    v: &V,
    keep_cells: bool,
) -> Result<DensityGrid> {
    bbox.validate()?;
    check_res(res)?;
    let r = res;
    let m = r - 2 * RING;
    let h = bbox.steps(r);
    let cell = h.iter().product::<f64>();
    let mut win_u: Vec<Cow<[f64]>> = vec![u.plane(RING - 1), u.plane(RING)];
    let mut win_v: Vec<Cow<[f64]>> = vec![v.plane(RING - 1), v.plane(RING)];
    let mut cells = keep_cells.then(|| Vec::with_capacity(m.pow(4)));
    let mut total = 0.0;
    let mut clip = 0.0;
    let mut excluded = 0;
    let mut marginal_z1 = vec![0.0; r * r];
    let mut marginal_z2 = vec![0.0; r * r];
    for i in RING..r - RING {
        win_u.push(u.plane(i + 1));
        win_v.push(v.plane(i + 1));
        let wu = [&*win_u[0], &*win_u[1], &*win_u[2]];
        let wv = [&*win_v[0], &*win_v[1], &*win_v[2]];
        let rows: Vec<(RowAcc, Vec<f64>)> = (RING..r - RING)
            .into_par_iter()
            .map(|j| {
                let mut acc = RowAcc { mass: 0.0, clip: 0.0, excluded: 0, marg2: vec![0.0; r * r] };
                let mut row_cells = Vec::with_capacity(if keep_cells { m * m } else { 0 });
                for k in RING..r - RING {
                    for l in RING..r - RING {
                        let mass = match (hessian(wu, r, j, k, l, &h), hessian(wv, r, j, k, l, &h)) {
                            (Some(a), Some(b)) => {
                                let dens = WEDGE_CONSTANT
                                    * (a.a * b.b + a.b * b.a - 2.0 * (a.c.re * b.c.re + a.c.im * b.c.im));
                                let mass = dens * cell;
                                if mass < 0.0 {
                                    acc.clip -= mass;
                                    0.0
                                } else {
                                    mass
                                }
                            }
                            _ => {
                                acc.excluded += 1;
                                0.0
                            }
                        };
                        acc.mass += mass;
                        acc.marg2[k * r + l] += mass;
                        if keep_cells {
                            row_cells.push(mass);
                        }
                    }
                }
                (acc, row_cells)
            })
            .collect();
        for (jj, (acc, row_cells)) in rows.into_iter().enumerate() {
            total += acc.mass;
            clip += acc.clip;
            excluded += acc.excluded;
            marginal_z1[i * r + RING + jj] = acc.mass;
            for (a, b) in marginal_z2.iter_mut().zip(&acc.marg2) {
                *a += b;
            }
            if let Some(c) = cells.as_mut() {
                c.extend_from_slice(&row_cells);
            }
        }
        win_u.remove(0);
        win_v.remove(0);
    }
    Ok(DensityGrid {
        bbox,
        res,
        cell_masses: cells,
        total_mass: total,
        negative_clip: clip,
        excluded_cells: excluded,
        marginal_z1,
        marginal_z2,
    })
}

/// Mixed wedge `dd^c u ∧ dd^c v` of two stored potentials on the same grid.
pub fn ddc_wedge(u: &GridPotential, v: &GridPotential) -> Result<DensityGrid> {
    if u.bbox != v.bbox || u.res != v.res {
        return Err(Error::Usage("potentials live on different grids".into()));
    }
    ddc_wedge_streaming(u.bbox, u.res, u, v, true)
}

pub fn total_mass(d: &DensityGrid) -> f64 {
    d.total_mass
}

impl DensityGrid {
    /// Side length of the interior block.
    pub fn interior(&self) -> usize {
        self.res - 2 * RING
    }

    pub fn clip_fraction(&self) -> f64 {
        if self.total_mass > 0.0 {
            self.negative_clip / self.total_mass
        } else if self.negative_clip > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// False when clipped negativity exceeds [`MAX_CLIP_FRACTION`].
    pub fn quality_ok(&self) -> bool {
        self.clip_fraction() <= MAX_CLIP_FRACTION
    }

    pub fn summary(&self) -> DensitySummary {
        DensitySummary {
            res: self.res,
            total_mass: self.total_mass,
            negative_clip: self.negative_clip,
            clip_fraction: self.clip_fraction(),
            excluded_cells: self.excluded_cells,
            quality_ok: self.quality_ok(),
        }
    }

    fn cells(&self) -> Result<&[f64]> {
        self.cell_masses
            .as_deref()
            .ok_or_else(|| Error::Usage("density grid was built without cell masses".into()))
    }

    /// Node index of interior cell number `c`.
    pub fn cell_index(&self, c: usize) -> [usize; 4] {
        let m = self.interior();
        [c / (m * m * m) + RING, (c / (m * m)) % m + RING, (c / m) % m + RING, c % m + RING]
    }

    pub fn cell_center(&self, c: usize) -> [Complex64; 2] {
        self.bbox.node(self.res, self.cell_index(c))
    }

    /// CSV with one row per cell of positive mass.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let cells = self.cells()?;
        writeln!(out, "re(z1),im(z1),re(z2),im(z2),mass")?;
        for (c, &mass) in cells.iter().enumerate() {
            if mass > 0.0 {
                let z = self.cell_center(c);
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    output::fmt_f64(z[0].re),
                    output::fmt_f64(z[0].im),
                    output::fmt_f64(z[1].re),
                    output::fmt_f64(z[1].im),
                    output::fmt_f64(mass)
                )?;
            }
        }
        Ok(())
    }

    /// Heatmap of the `z1` marginal (rows `Re z1`, columns `Im z1`).
    pub fn write_pgm_z1<W: Write>(&self, out: W) -> Result<()> {
        output::write_pgm(out, self.res, self.res, &self.marginal_z1)
    }

    pub fn write_pgm_z2<W: Write>(&self, out: W) -> Result<()> {
        output::write_pgm(out, self.res, self.res, &self.marginal_z2)
    }
}

/// `n` points drawn from the density: a cell chosen with probability
/// proportional to its mass, then a uniform point of that cell.
pub fn sample_measure(d: &DensityGrid, n: usize, seed: u64) -> Result<Vec<[Complex64; 2]>> {
    let cells = d.cells()?;
    let mut cdf = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for &m in cells {
        acc += m;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::Degenerate("density has no mass".into()));
    }
    let h = d.bbox.steps(d.res);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = index_rng(seed, stream::MEASURE, i as u64);
            let t = rng.gen::<f64>() * acc;
            let c = cdf.partition_point(|&x| x <= t).min(cells.len() - 1);
            // skip zero-mass cells that share a cumulative value
            let c = (c..cells.len()).find(|&c| cells[c] > 0.0).unwrap_or(c);
            let idx = d.cell_index(c);
            let x: [f64; 4] = std::array::from_fn(|a| d.bbox.coord(d.res, a, idx[a]) + (rng.gen::<f64>() - 0.5) * h[a]);
            [Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3])]
        })
        .collect())
}

/// Fraction of the mass whose cell centres lie in `region` (chart lift with
/// coordinate `chart` set to 1).
pub fn support_check(d: &DensityGrid, region: &RegionSpec, chart: usize) -> Result<f64> {
    let cells = d.cells()?;
    if chart > 2 {
        return Err(Error::Usage(format!("chart index {chart} out of range")));
    }
    if !(d.total_mass > 0.0) {
        return Err(Error::Degenerate("density has no mass".into()));
    }
    let inside: f64 = cells
        .par_iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(c, &m)| if region.contains(&chart_lift(chart, &d.cell_center(c))) { m } else { 0.0 })
        .sum();
    Ok(inside / d.total_mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indeterminacy::{Role, Shape};

    fn small_box() -> ChartBox {
        ChartBox::cube(-2.0, 2.0)
    }

    #[test]
    fn pluriharmonic_gives_zero() {
        let u = GridPotential::from_fn(small_box(), 12, |z| z[0].re).unwrap();
        let v = GridPotential::from_fn(small_box(), 12, fs_potential).unwrap();
        let d = ddc_wedge(&u, &v).unwrap();
        assert!(d.total_mass.abs() < 1e-10 && d.negative_clip < 1e-10);
        assert!(d.cell_masses.as_ref().unwrap().iter().all(|m| m.abs() < 1e-10));
    }

    #[test]
    fn symmetric_and_linear() {
        let u = GridPotential::from_fn(small_box(), 12, fs_potential).unwrap();
        let v = GridPotential::from_fn(small_box(), 12, |z| (z[0].norm_sqr() + 2.0 * z[1].norm_sqr() + 1.0).ln()).unwrap();
        let a = ddc_wedge(&u, &v).unwrap();
        let b = ddc_wedge(&v, &u).unwrap();
        for (x, y) in a.cell_masses.unwrap().iter().zip(b.cell_masses.unwrap().iter()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
        let v2 = GridPotential::from_fn(small_box(), 12, |z| 2.0 * fs_potential(z)).unwrap();
        let one = ddc_wedge(&u, &u).unwrap().total_mass;
        let two = ddc_wedge(&u, &v2).unwrap().total_mass;
        assert!((two - 2.0 * one).abs() < 1e-12 * one);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let u = GridPotential::from_fn(small_box(), 8, fs_potential).unwrap();
        let v = GridPotential::from_fn(small_box(), 9, fs_potential).unwrap();
        assert!(matches!(ddc_wedge(&u, &v), Err(Error::Usage(_))));
    }

    #[test]
    fn streaming_matches_stored() {
        let u = GridPotential::from_fn(small_box(), 10, fs_potential).unwrap();
        let a = ddc_wedge(&u, &u).unwrap();
        let src = SampledPotential::new(small_box(), 10, 0, |_: &mut Scratch, z| fs_potential(z));
        let b = ddc_wedge_streaming(small_box(), 10, &src, &src, false).unwrap();
        assert_eq!(a.total_mass, b.total_mass);
        assert!(b.cell_masses.is_none());
        assert!((a.marginal_z1.iter().sum::<f64>() - a.total_mass).abs() < 1e-12);
        assert!((a.marginal_z2.iter().sum::<f64>() - a.total_mass).abs() < 1e-12);
    }

    #[test]
    fn smoothing_keeps_affine_functions_and_weights_sum_to_one() {
        for p in 0..4 {
            assert!((binomial_weights(p).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        let f = |_: &mut Scratch, z: [Complex64; 2]| 1.0 + 2.0 * z[0].re - z[0].im + 0.5 * z[1].re + 3.0 * z[1].im;
        let raw = GridPotential::from_source(small_box(), 8, &SampledPotential::new(small_box(), 8, 0, f)).unwrap();
        let sm = GridPotential::from_source(small_box(), 8, &SampledPotential::new(small_box(), 8, 2, f)).unwrap();
        for (a, b) in raw.values.iter().zip(&sm.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugation_mirror_matches_direct_evaluation() {
        let f = |_: &mut Scratch, z: [Complex64; 2]| (z[0] * z[0] + z[1] * z[1].conj() * 3.0).norm() + z[0].im.powi(2);
        let bbox = small_box();
        let a = GridPotential::from_source(bbox, 7, &SampledPotential::new(bbox, 7, 1, f)).unwrap();
        let b = GridPotential::from_source(bbox, 7, &SampledPotential::new(bbox, 7, 1, f).conj_symmetric(true)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn smoothing_a_quadratic_shifts_by_a_constant() {
        // |z|^2 averaged with variance s^2 per axis gains 4 s^2
        let f = |_: &mut Scratch, z: [Complex64; 2]| z[0].norm_sqr() + z[1].norm_sqr();
        let bbox = small_box();
        let raw = GridPotential::from_source(bbox, 8, &SampledPotential::new(bbox, 8, 0, f)).unwrap();
        let sm = GridPotential::from_source(bbox, 8, &SampledPotential::new(bbox, 8, 1, f)).unwrap();
        let h = bbox.steps(8)[0];
        for (a, b) in raw.values.iter().zip(&sm.values) {
            assert!((b - a - 4.0 * 0.5 * h * h).abs() < 1e-12);
        }
    }

    #[test]
    fn nan_cells_are_excluded() {
        let u = GridPotential::from_fn(small_box(), 10, |z| if z[0].re > 1.0 { f64::NAN } else { fs_potential(z) }).unwrap();
        let d = ddc_wedge(&u, &u).unwrap();
        assert!(d.excluded_cells > 0);
        assert!(d.total_mass.is_finite());
    }

    fn single_cell() -> DensityGrid {
        let res = 8;
        let m = res - 2 * RING;
        let mut cells = vec![0.0; m.pow(4)];
        cells[37] = 2.5;
        DensityGrid {
            bbox: small_box(),
            res,
            cell_masses: Some(cells),
            total_mass: 2.5,
            negative_clip: 0.0,
            excluded_cells: 0,
            marginal_z1: vec![0.0; res * res],
            marginal_z2: vec![0.0; res * res],
        }
    }

    #[test]
    fn single_cell_sampling() {
        let d = single_cell();
        let c = d.cell_center(37);
        let h = d.bbox.steps(d.res);
        let pts = sample_measure(&d, 500, 1).unwrap();
        for p in &pts {
            assert!((p[0].re - c[0].re).abs() <= h[0] / 2.0);
            assert!((p[0].im - c[0].im).abs() <= h[1] / 2.0);
            assert!((p[1].re - c[1].re).abs() <= h[2] / 2.0);
            assert!((p[1].im - c[1].im).abs() <= h[3] / 2.0);
        }
        assert_eq!(pts, sample_measure(&d, 500, 1).unwrap());
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let mut d = single_cell();
        let n_cells = d.interior().pow(4);
        d.cell_masses = Some(vec![1.0; n_cells]);
        d.total_mass = n_cells as f64;
        let n = 200_000;
        let pts = sample_measure(&d, n, 9).unwrap();
        let h = d.bbox.steps(d.res);
        let mut counts = vec![0usize; n_cells];
        let m = d.interior();
        for p in pts {
            let x = [p[0].re, p[0].im, p[1].re, p[1].im];
            let idx: Vec<usize> = (0..4).map(|a| ((x[a] - d.bbox.lo[a]) / h[a]) as usize - RING).collect();
            counts[((idx[0] * m + idx[1]) * m + idx[2]) * m + idx[3]] += 1;
        }
        let p = 1.0 / n_cells as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        let expected = n as f64 * p;
        let bad = counts.iter().filter(|&&c| (c as f64 - expected).abs() > 3.0 * sd).count();
        // about 0.27% of cells may fall outside 3 sigma
        assert!(bad <= n_cells / 50 + 1, "{bad} of {n_cells}");
    }

    #[test]
    fn support_fractions() {
        let d = single_cell();
        let far = Shape::ball(vec![1.0.into(), 0.0.into(), 0.0.into()], 0.01).unwrap();
        let all = RegionSpec::new(Role::U, vec![far.clone()], true).unwrap();
        let none = RegionSpec::new(Role::U, vec![far], false).unwrap();
        assert_eq!(support_check(&d, &all, 2).unwrap(), 1.0);
        assert_eq!(support_check(&d, &none, 2).unwrap(), 0.0);
    }

    #[test]
    fn zero_density_has_zero_mass() {
        let mut d = single_cell();
        d.cell_masses = Some(vec![0.0; d.interior().pow(4)]);
        d.total_mass = 0.0;
        assert_eq!(total_mass(&d), 0.0);
        assert!(sample_measure(&d, 1, 0).is_err());
    }
}
