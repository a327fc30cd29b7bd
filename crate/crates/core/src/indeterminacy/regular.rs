use num::complex::Complex64;
use num::{BigRational, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::region::{format_complex, RegionSpec, RegionsConfig, Role, WitnessJson};
use super::scan::{candidate_check, numeric_scan, rational_guess, Cluster, ScanOptions};
use crate::error::{Error, Result};
use crate::projalg::{HomoPoly, Lift};
use crate::ratmap::{BirationalPair, Iterates, RationalMap, DEFAULT_EPS_IND};
use crate::sampling::{fs_uniform, fs_uniform_points, index_rng, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Definition {
    /// Two regions `V`, `U` and one witness family.
    #[serde(rename = "one-sided")]
    OneSided,
    /// Regions `V±`, `U±` and witnesses for both `f` and `f⁻¹`.
    #[serde(rename = "two-sided")]
    TwoSided,
}

#[derive(Clone, Debug)]
pub struct RegularityOptions {
    pub samples: usize,
    pub seed: u64,
    /// Closures closer than this count as intersecting.
    pub margin: f64,
    pub scan_samples: usize,
    pub eps_ind: f64,
    pub max_examples: usize,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            samples: 10_000,
            seed: 0,
            margin: 1e-3,
            scan_samples: 20_000,
            eps_ind: DEFAULT_EPS_IND,
            max_examples: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub points: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionResult {
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl ConditionResult {
    fn from_checks(checks: Vec<Check>) -> Self {
        ConditionResult { pass: checks.iter().all(|c| c.pass), checks }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub definition: Definition,
    pub condition1: ConditionResult,
    pub condition2: ConditionResult,
    pub condition3: ConditionResult,
    pub sample_count: usize,
    pub skipped_indeterminacy: usize,
    pub seed: u64,
    pub verdict: bool,
    /// `"sampled-pass"` or `"sampled-fail"`.
    pub label: String,
}

fn point_strings(z: &[Complex64]) -> Vec<String> {
    z.iter().map(|c| format_complex(*c)).collect()
}

/// A linear subspace cut out by exact linear forms.
#[derive(Clone, Debug)]
pub struct WitnessSubspace {
    pub forms: Vec<Vec<BigRational>>,
    pub plus: bool,
}

impl WitnessSubspace {
    pub fn from_json(k: usize, w: &WitnessJson) -> Result<Self> {
        let plus = match w.role.as_str() {
            "+" => true,
            "-" => false,
            r => return Err(Error::Parse(format!("witness role must be \"+\" or \"-\", got {r:?}"))),
        };
        let mut forms = Vec::new();
        for f in &w.forms {
            let p = HomoPoly::from_json_terms(k, f, Some(1))?;
            if p.degree() != 1 {
                return Err(Error::Parse("witness forms must be linear".into()));
            }
            let mut v = vec![BigRational::zero(); k + 1];
            for (m, c) in p.terms() {
                let i = m.0.iter().position(|&e| e == 1).expect("linear monomial");
                v[i] = c.clone();
            }
            forms.push(v);
        }
        Ok(WitnessSubspace { forms, plus })
    }

    pub fn rank(&self) -> usize {
        exact_rank(self.forms.clone())
    }

    /// Projective dimension, assuming independent forms.
    pub fn dimension(&self, k: usize) -> isize {
        k as isize - self.forms.len() as isize
    }

    /// Orthonormal float basis of the subspace in `C^{k+1}`.
    fn basis(&self, k: usize) -> Vec<Vec<Complex64>> {
        let rows: Vec<Vec<f64>> = self
            .forms
            .iter()
            .map(|f| f.iter().map(|c| num::ToPrimitive::to_f64(c).unwrap_or(0.0)).collect())
            .collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut perp: Vec<Vec<f64>> = Vec::new();
        for r in rows {
            if let Some(v) = orthonormalize(r, &perp) {
                perp.push(v);
            }
        }
        for i in 0..=k {
            let mut e = vec![0.0; k + 1];
            e[i] = 1.0;
            let all: Vec<Vec<f64>> = perp.iter().chain(basis.iter()).cloned().collect();
            if let Some(v) = orthonormalize(e, &all) {
                basis.push(v);
            }
        }
        basis.into_iter().map(|v| v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()).collect()
    }
}

fn orthonormalize(mut v: Vec<f64>, against: &[Vec<f64>]) -> Option<Vec<f64>> {
    for b in against {
        let ip: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi -= ip * bi;
        }
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-9).then(|| v.into_iter().map(|x| x / n).collect())
}

fn exact_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && !row[c].is_zero() {
                let factor = &row[c] / &pivot[c];
                for (x, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                    *x -= &factor * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn region_samples(spec: &RegionSpec, seed: u64, n: usize, dim: usize, salt: u64) -> Vec<Vec<Complex64>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = index_rng(seed ^ salt, stream::REGULARITY, i as u64);
            let s = &spec.shapes[i % spec.shapes.len()];
            s.sample_near(&mut rng, dim)
        })
        .collect()
}

struct Sampler {
    uniform: Vec<Vec<Complex64>>,
    focused: Vec<Vec<Complex64>>,
}

impl Sampler {
    fn all(&self) -> impl Iterator<Item = &Vec<Complex64>> {
        self.uniform.iter().chain(self.focused.iter())
    }
}

fn need(cfg: &RegionsConfig, role: Role) -> Result<RegionSpec> {
    cfg.region(role)?.ok_or_else(|| Error::Usage(format!("regions config lacks role {role}")))
}

fn disjoint_check(a: &RegionSpec, b: &RegionSpec, pts: &Sampler, opts: &RegularityOptions) -> Check {
    let mut best = f64::INFINITY;
    let mut bad = Vec::new();
    for z in pts.all() {
        let g = a.gap(z) + b.gap(z);
        best = best.min(g);
        if g < opts.margin && bad.len() < opts.max_examples {
            bad.push(point_strings(z));
        }
    }
    Check {
        name: format!("closure({}) and closure({}) disjoint", a.role, b.role),
        pass: best >= opts.margin,
        detail: format!("sampled minimum separation {best:.6}"),
        points: bad,
    }
}

fn subset_check(inner: &RegionSpec, outer: &RegionSpec, pts: &Sampler, opts: &RegularityOptions) -> Check {
    let mut tested = 0usize;
    let mut bad = Vec::new();
    for z in pts.all() {
        if inner.near(z, 0.0) {
            tested += 1;
            if !outer.contains(z) && bad.len() < opts.max_examples {
                bad.push(point_strings(z));
            }
        }
    }
    Check {
        name: format!("closure({}) inside {}", inner.role, outer.role),
        pass: bad.is_empty(),
        detail: format!("{tested} sampled points of the closure tested"),
        points: bad,
    }
}

fn indeterminacy_check(map: &RationalMap, label: &str, region: &RegionSpec, opts: &RegularityOptions) -> Result<Check> {
    let scan = ScanOptions { seed: opts.seed, ..ScanOptions::default() };
    let clusters = numeric_scan(map, opts.scan_samples, &scan)?;
    Ok(containment_check(map, label, region, &clusters))
}

fn containment_check(map: &RationalMap, label: &str, region: &RegionSpec, clusters: &[Cluster]) -> Check {
    let mut bad = Vec::new();
    let mut confirmed = 0;
    for c in clusters {
        if let Some(q) = rational_guess(&c.point, 16, 1e-6) {
            if candidate_check(map, &q).unwrap_or(false) {
                confirmed += 1;
            }
        }
        if !region.contains(c.point.coords()) {
            bad.push(point_strings(c.point.coords()));
        }
    }
    Check {
        name: format!("{label} inside {}", region.role),
        pass: bad.is_empty(),
        detail: format!("{} clusters found, {confirmed} confirmed exactly", clusters.len()),
        points: bad,
    }
}

fn witness_check(
    w: &WitnessSubspace,
    expected_dim: usize,
    avoid: &RegionSpec,
    k: usize,
    opts: &RegularityOptions,
    index: usize,
) -> Check {
    let rank = w.rank();
    let dim = w.dimension(k);
    let name = format!("witness {} {} avoids closure({})", index, if w.plus { "+" } else { "-" }, avoid.role);
    if rank != w.forms.len() || dim != expected_dim as isize {
        return Check {
            name,
            pass: false,
            detail: format!("dimension {dim} (rank {rank} of {} forms), expected {expected_dim}", w.forms.len()),
            points: vec![],
        };
    }
    let basis = w.basis(k);
    let n = (opts.samples / 10).max(100);
    let mut best = f64::INFINITY;
    let mut bad = Vec::new();
    for i in 0..n {
        let mut rng = index_rng(opts.seed ^ index as u64, stream::WITNESS, i as u64);
        let coeffs = fs_uniform(&mut rng, basis.len());
        let mut z = vec![Complex64::zero(); k + 1];
        for (c, b) in coeffs.iter().zip(&basis) {
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += c * bi;
            }
        }
        let g = avoid.gap(&z);
        best = best.min(g);
        if g <= opts.margin && bad.len() < opts.max_examples {
            bad.push(point_strings(&z));
        }
    }
    Check {
        name,
        pass: best > opts.margin,
        detail: format!("dimension {dim}; {n} points sampled, minimum gap {best:.6}"),
        points: bad,
    }
}

fn mapping_check(
    map: &RationalMap,
    label: &str,
    v: &RegionSpec,
    u: &RegionSpec,
    pts: &Sampler,
    opts: &RegularityOptions,
) -> (Check, usize, usize) {
    let outcomes: Vec<Option<Option<bool>>> = pts
        .all()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|z| {
            if v.contains(z) {
                return None;
            }
            let lift = Lift::new(z.to_vec()).ok()?;
            match map.eval(&lift, opts.eps_ind) {
                Ok(w) => Some(Some(u.contains(w.coords()))),
                Err(_) => Some(None),
            }
        })
        .collect();
    let mut tested = 0;
    let mut skipped = 0;
    let mut bad = Vec::new();
    for (z, o) in pts.all().zip(&outcomes) {
        match o {
            None => {}
            Some(None) => skipped += 1,
            Some(Some(ok)) => {
                tested += 1;
                if !ok && bad.len() < opts.max_examples {
                    bad.push(point_strings(z));
                }
            }
        }
    }
    let failures = outcomes.iter().filter(|o| matches!(o, Some(Some(false)))).count();
    (
        Check {
            name: format!("{label} maps complement of {} into {}", v.role, u.role),
            pass: failures == 0,
            detail: format!("{tested} points mapped, {failures} failures, {skipped} skipped near indeterminacy"),
            points: bad,
        },
        tested + skipped,
        skipped,
    )
}

/// Check the regularity conditions by sampling. The definition is chosen
/// from the roles present: `V`/`U` selects the one-sided one, `V±`/`U±` the
/// two-sided one.
pub fn check_regular(pair: &BirationalPair, cfg: &RegionsConfig, opts: &RegularityOptions) -> Result<RegularityReport> {
    let k = pair.ambient();
    if cfg.k != k {
        return Err(Error::Usage(format!("regions are for k = {}, map has k = {k}", cfg.k)));
    }
    if cfg.s < 1 || cfg.s >= k {
        return Err(Error::Usage(format!("s = {} must satisfy 1 <= s <= k-1", cfg.s)));
    }
    let definition = if cfg.region(Role::V)?.is_some() || cfg.region(Role::U)?.is_some() {
        Definition::OneSided
    } else {
        Definition::TwoSided
    };
    let witnesses = cfg.witnesses.iter().map(|w| WitnessSubspace::from_json(k, w)).collect::<Result<Vec<_>>>()?;
    let dim = k + 1;
    let uniform = fs_uniform_points(opts.seed, stream::REGULARITY, opts.samples, dim);
    let focus_n = opts.samples / 4;

    let (c1, c2, c3, count, skipped) = match definition {
        Definition::OneSided => {
            let v = need(cfg, Role::V)?;
            let u = need(cfg, Role::U)?;
            let pts = Sampler { uniform, focused: region_samples(&v, opts.seed, focus_n, dim, 0x11) };
            let c1 = vec![
                disjoint_check(&v, &u, &pts, opts),
                indeterminacy_check(&pair.forward, "I+", &v, opts)?,
                indeterminacy_check(&pair.inverse, "I-", &u, opts)?,
            ];
            let mut c2 = Vec::new();
            for (i, w) in witnesses.iter().enumerate().filter(|(_, w)| w.plus) {
                c2.push(witness_check(w, cfg.s, &v, k, opts, i));
            }
            if c2.is_empty() {
                c2.push(missing_witness("+"));
            }
            let (c, n, s) = mapping_check(&pair.forward, "f", &v, &u, &pts, opts);
            (c1, c2, vec![c], n, s)
        }
        Definition::TwoSided => {
            let vp = need(cfg, Role::VPlus)?;
            let up = need(cfg, Role::UPlus)?;
            let vm = need(cfg, Role::VMinus)?;
            let um = need(cfg, Role::UMinus)?;
            let mut focused = region_samples(&vp, opts.seed, focus_n / 2, dim, 0x21);
            focused.extend(region_samples(&vm, opts.seed, focus_n / 2, dim, 0x22));
            let pts = Sampler { uniform, focused };
            let c1 = vec![
                disjoint_check(&vp, &up, &pts, opts),
                disjoint_check(&vm, &um, &pts, opts),
                subset_check(&vp, &um, &pts, opts),
                subset_check(&vm, &up, &pts, opts),
                indeterminacy_check(&pair.forward, "I+", &vp, opts)?,
                indeterminacy_check(&pair.inverse, "I-", &vm, opts)?,
            ];
            let mut c2 = Vec::new();
            for (i, w) in witnesses.iter().enumerate() {
                let (expected, avoid) = if w.plus { (cfg.s, &vp) } else { (k - cfg.s, &vm) };
                c2.push(witness_check(w, expected, avoid, k, opts, i));
            }
            for (sign, present) in [("+", witnesses.iter().any(|w| w.plus)), ("-", witnesses.iter().any(|w| !w.plus))] {
                if !present {
                    c2.push(missing_witness(sign));
                }
            }
            let (a, n1, s1) = mapping_check(&pair.forward, "f", &vp, &up, &pts, opts);
            let (b, n2, s2) = mapping_check(&pair.inverse, "f^-1", &vm, &um, &pts, opts);
            (c1, c2, vec![a, b], n1 + n2, s1 + s2)
        }
    };
    let condition1 = ConditionResult::from_checks(c1);
    let condition2 = ConditionResult::from_checks(c2);
    let condition3 = ConditionResult::from_checks(c3);
    let verdict = condition1.pass && condition2.pass && condition3.pass;
    Ok(RegularityReport {
        definition,
        condition1,
        condition2,
        condition3,
        sample_count: count,
        skipped_indeterminacy: skipped,
        seed: opts.seed,
        verdict,
        label: if verdict { "sampled-pass" } else { "sampled-fail" }.into(),
    })
}

fn missing_witness(sign: &str) -> Check {
    Check {
        name: format!("witness {sign}"),
        pass: false,
        detail: "no witness subspace given".into(),
        points: vec![],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainmentReport {
    pub n: u32,
    pub degree: u32,
    pub clusters: Vec<Cluster>,
    pub inside: bool,
    pub detail: String,
}

/// Scan the reduced iterate `f^n` for indeterminacy points and check that all
/// of them lie in `v`.
pub fn iterated_indeterminacy_containment(
    iterates: &Iterates,
    n: u32,
    v: &RegionSpec,
    samples: usize,
    seed: u64,
) -> Result<ContainmentReport> {
    let fnth = iterates.get(n)?;
    let scan = ScanOptions { seed, ..ScanOptions::default() };
    let clusters = numeric_scan(&fnth, samples, &scan)?;
    let check = containment_check(&fnth, &format!("I_{n}"), v, &clusters);
    Ok(ContainmentReport { n, degree: fnth.degree(), clusters, inside: check.pass, detail: check.detail })
}

impl RegionsConfig {
    /// The same configuration with the roles `a` and `b` exchanged.
    pub fn with_roles_swapped(&self, a: Role, b: Role) -> RegionsConfig {
        let mut out = self.clone();
        for r in &mut out.regions {
            if r.role == a {
                r.role = b;
            } else if r.role == b {
                r.role = a;
            }
        }
        out
    }

    /// Keep only the listed roles.
    pub fn restricted(&self, roles: &[Role]) -> RegionsConfig {
        let mut out = self.clone();
        out.regions.retain(|r| roles.contains(&r.role));
        out
    }
}
