use num::complex::Complex64;
use num::ToPrimitive;

use crate::projalg::HomoPoly;

/// A homogeneous polynomial flattened for fast floating-point evaluation.
///
/// Terms are kept in descending grlex order. Each term is a coefficient and a
/// list of indices into a flat power table `pw[j * (d + 1) + e] = z_j^e`.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    coeffs: Vec<Complex64>,
    offsets: Vec<u32>,
    factors: Vec<u32>,
}

impl CompiledPoly {
    /// `stride` is the row length of the power table the caller will use.
    pub fn new(p: &HomoPoly, stride: usize) -> Self {
        let mut coeffs = Vec::with_capacity(p.len());
        let mut offsets = vec![0u32];
        let mut factors = Vec::new();
        for (m, c) in p.terms().iter().rev() {
            coeffs.push(Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0));
            for (j, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    factors.push((j * stride + e as usize) as u32);
                }
            }
            offsets.push(factors.len() as u32);
        }
        CompiledPoly { coeffs, offsets, factors }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Compensated sum of the terms against a flat power table.
    #[inline]
    pub fn eval_flat(&self, pw: &[Complex64]) -> Complex64 {
        let (mut sr, mut cr, mut si, mut ci) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (t, c) in self.coeffs.iter().enumerate() {
            let mut v = *c;
            for &f in &self.factors[self.offsets[t] as usize..self.offsets[t + 1] as usize] {
                v *= pw[f as usize];
            }
            let u = sr + v.re;
            cr += if sr.abs() >= v.re.abs() { (sr - u) + v.re } else { (v.re - u) + sr };
            sr = u;
            let u = si + v.im;
            ci += if si.abs() >= v.im.abs() { (si - u) + v.im } else { (v.im - u) + si };
            si = u;
        }
        Complex64::new(sr + cr, si + ci)
    }
}

/// Float evaluator for a whole map and its Jacobian.
#[derive(Clone, Debug)]
pub struct CompiledMap {
    degree: u32,
    components: Vec<CompiledPoly>,
    partials: Vec<Vec<CompiledPoly>>,
}

impl CompiledMap {
    pub fn new(components: &[HomoPoly], degree: u32) -> Self {
        let n = components.len();
        let stride = degree as usize + 1;
        CompiledMap {
            degree,
            components: components.iter().map(|p| CompiledPoly::new(p, stride)).collect(),
            partials: components
                .iter()
                .map(|p| (0..n).map(|j| CompiledPoly::new(&p.partial(j).expect("index in range"), stride)).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Fill `buf` with the flat power table of `z`.
    pub fn power_table_into(&self, z: &[Complex64], buf: &mut Vec<Complex64>) {
        let stride = self.degree as usize + 1;
        buf.clear();
        buf.reserve(stride * z.len());
        for &zj in z {
            let mut p = Complex64::new(1.0, 0.0);
            buf.push(p);
            for _ in 1..stride {
                p *= zj;
                buf.push(p);
            }
        }
    }

    /// `F(z)` written into `out`, reusing `scratch` for the power table.
    #[inline]
    pub fn eval_scratch(&self, z: &[Complex64], out: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.power_table_into(z, scratch);
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval_flat(scratch);
        }
    }

    pub fn eval_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        let mut scratch = Vec::new();
        self.eval_scratch(z, out, &mut scratch);
    }

    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.eval_into(z, &mut out);
        out
    }

    /// `F(z)` and the directional derivative `DF(z) t`.
    pub fn eval_directional(
        &self,
        z: &[Complex64],
        t: &[Complex64],
        value: &mut [Complex64],
        deriv: &mut [Complex64],
        scratch: &mut Vec<Complex64>,
    ) {
        self.power_table_into(z, scratch);
        for (i, (v, d)) in value.iter_mut().zip(deriv.iter_mut()).enumerate() {
            *v = self.components[i].eval_flat(scratch);
            *d = self.partials[i].iter().zip(t).map(|(p, tj)| p.eval_flat(scratch) * tj).sum();
        }
    }

    /// Row-major Jacobian `dF_i/dz_j`.
    pub fn jacobian(&self, z: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut pw = Vec::new();
        self.power_table_into(z, &mut pw);
        self.partials.iter().map(|row| row.iter().map(|p| p.eval_flat(&pw)).collect()).collect()
    }
}
