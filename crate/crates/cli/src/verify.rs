//! `birat verify`: invariant suite for one map.

use rand::Rng;
use serde::Serialize;

use birat::dynamics::{mc_mass_pullback_with, MassOptions};
use birat::green::{Direction, GreenEvaluator};
use birat::indeterminacy::RegularityOptions;
use birat::projalg::{HomoPoly, Lift};
use birat::ratmap::{compose, strip_content, Iterates, RationalMap};
use birat::sampling::index_rng;
use birat::{Complex64, Error, Result};

use crate::config::{Loaded, RunConfig};
use crate::run::Run;

#[derive(Serialize)]
struct Row {
    check: String,
    pass: bool,
    detail: String,
}

struct Table(Vec<Row>);

impl Table {
    fn push(&mut self, check: &str, pass: bool, detail: impl Into<String>) {
        self.0.push(Row { check: check.to_string(), pass, detail: detail.into() });
    }

    /// Record an error from the check itself as a failed row.
    fn push_result(&mut self, check: &str, r: Result<(bool, String)>) {
        match r {
            Ok((pass, detail)) => self.push(check, pass, detail),
            Err(e) => self.push(check, false, format!("error: {e}")),
        }
    }
}

const POINTS: usize = 20;

fn random_lifts(dim: usize, seed: u64, salt: u64) -> Vec<Lift> {
    (0..POINTS)
        .map(|i| {
            let mut rng = index_rng(seed, salt, i as u64);
            let z = (0..dim).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            Lift::new(z).expect("random lift")
        })
        .collect()
}

/// Returns the number of failed rows.
pub fn run(run: &mut Run, cfg: &RunConfig, l: &Loaded) -> Result<usize> {
    let f = &l.map;
    let d = f.degree();
    let dim = f.ambient() + 1;
    let it = Iterates::new(f.clone());
    let lifts = random_lifts(dim, cfg.seed, 0);
    let mut t = Table(Vec::new());

    t.push("reduced form", f.is_reduced(), format!("degree {d}, {} terms", f.term_count()));

    t.push_result(
        "deg f^n <= d^n (n <= 4)",
        it.degree_sequence(4).map(|s| {
            let ok = s.0.iter().enumerate().all(|(i, &k)| k as u64 <= (d as u64).pow(i as u32 + 1));
            (ok, format!("{:?}", s.0))
        }),
    );

    t.push_result(
        "f^3 = strip(f ∘ f^2)",
        (|| {
            let direct = strip_content(&compose(f, &it.get(2)?)?)?;
            Ok((direct.same_map(&it.get(3)?), format!("degree {}", direct.degree())))
        })(),
    );

    t.push_result("projective equivariance", equivariance(f, &lifts));
    t.push_result("Euler identity (exact)", euler(f));
    t.push_result("differential vs finite differences", differential(f, &lifts));

    if let Some(pair) = &l.pair {
        t.push("inverse verified", pair.verified, "both reduced composites are the identity");
        if f.ambient() == 2 {
            let dinv = pair.inverse.degree();
            t.push("d = deg f^-1 on P^2", d == dinv, format!("d = {d}, deg f^-1 = {dinv}"));
        }
    }

    let stable = it.stability(4).map(|s| s.stable).unwrap_or(false);
    if stable && d >= 2 {
        let g = GreenEvaluator::new(f.clone(), cfg.depth, Direction::Forward)?.with_eps_ind(cfg.eps_ind);
        t.push_result("Green homogeneity", homogeneity(&g, &lifts));
        t.push_result("Green functional equation", functional_equation(&g, &lifts));
    } else {
        t.push("Green checks", true, "skipped: map not algebraically stable with d >= 2");
    }

    t.push_result(
        "MC mass at n = 0 is 1",
        mc_mass_pullback_with(&it, 0, 1, 1000, cfg.seed, &MassOptions::default())
            .map(|m| (m.value == 1.0, format!("{}", m.value))),
    );
    t.push_result(
        "MC mass of f^*ω is deg f",
        mc_mass_pullback_with(&it, 1, 1, 64, cfg.seed, &MassOptions::lines()).map(|m| {
            let rel = (m.value - d as f64).abs() / d as f64;
            (rel <= 0.1, format!("{:.4} ± {:.4}, relative error {rel:.2e}", m.value, m.standard_error))
        }),
    );

    if let (Some(pair), Some(regions)) = (&l.pair, &l.regions) {
        let opts = RegularityOptions { samples: cfg.samples_or(10_000), seed: cfg.seed, eps_ind: cfg.eps_ind, ..Default::default() };
        t.push_result("regularity conditions", check_regular(pair, regions, &opts));
    }

    let width = t.0.iter().map(|r| r.check.chars().count()).max().unwrap_or(0);
    for r in &t.0 {
        let pad = width - r.check.chars().count();
        println!("{}{}  {}  {}", r.check, " ".repeat(pad), if r.pass { "PASS" } else { "FAIL" }, r.detail);
    }
    let failed = t.0.iter().filter(|r| !r.pass).count();
    println!("{} of {} checks passed", t.0.len() - failed, t.0.len());
    run.json("verify.json", "invariant table", &t.0)?;
    Ok(failed)
}

fn check_regular(
    pair: &birat::ratmap::BirationalPair,
    regions: &birat::indeterminacy::RegionsConfig,
    opts: &RegularityOptions,
) -> Result<(bool, String)> {
    let rep = birat::indeterminacy::check_regular(pair, regions, opts)?;
    Ok((rep.verdict, format!("{} ({} samples)", rep.label, rep.sample_count)))
}

/// `F(λz) = λ^d F(z)`.
fn equivariance(f: &RationalMap, lifts: &[Lift]) -> Result<(bool, String)> {
    let lambda = Complex64::new(0.7, -1.3);
    let ld = lambda.powu(f.degree());
    let mut worst: f64 = 0.0;
    for z in lifts {
        let a = f.compiled().eval(z.scale(lambda)?.coords());
        let b = f.compiled().eval(z.coords());
        let scale = b.iter().map(|c| (c * ld).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let err = a.iter().zip(&b).map(|(x, y)| (x - y * ld).norm()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
    }
    Ok((worst <= 1e-10, format!("worst relative error {worst:.1e}")))
}

/// `Σ z_j ∂P/∂z_j = d P` for every component, in exact arithmetic.
fn euler(f: &RationalMap) -> Result<(bool, String)> {
    let k = f.ambient();
    let d = birat::projalg::parse_rational(&f.degree().to_string())?;
    for p in f.components() {
        let mut sum = HomoPoly::zero(k, p.degree());
        for j in 0..=k {
            let dj = p.partial(j)?;
            if !dj.is_zero() {
                sum = sum.add(&HomoPoly::var(k, j).mul(&dj)?)?;
            }
        }
        if sum.sub(&p.scale(&d))?.len() != 0 {
            return Ok((false, "Σ z_j ∂P/∂z_j differs from d P".into()));
        }
    }
    Ok((true, format!("{} components", k + 1)))
}

fn differential(f: &RationalMap, lifts: &[Lift]) -> Result<(bool, String)> {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for z in lifts {
        let jac = f.differential(z)?;
        let scale = jac.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for j in 0..z.dim() {
            let mut zp = z.coords().to_vec();
            let mut zm = zp.clone();
            zp[j] += h;
            zm[j] -= h;
            let (fp, fm) = (f.compiled().eval(&zp), f.compiled().eval(&zm));
            for i in 0..z.dim() {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                worst = worst.max((fd - jac[(i, j)]).norm() / scale);
            }
        }
    }
    Ok((worst <= 1e-6, format!("worst relative error {worst:.1e}")))
}

/// `G(λz) = G(z) + log|λ|`.
fn homogeneity(g: &GreenEvaluator, lifts: &[Lift]) -> Result<(bool, String)> {
    let lambda = Complex64::new(3.0, 4.0);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for z in lifts {
        let (a, b) = match (g.eval(z), g.eval(&z.scale(lambda)?)) {
            (Ok(a), Ok(b)) if !a.escaped_to_indeterminacy && !b.escaped_to_indeterminacy => (a, b),
            (Err(Error::IndeterminacyProximity { .. }), _) | (_, Err(Error::IndeterminacyProximity { .. })) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
            _ => continue,
        };
        used += 1;
        worst = worst.max((b.value - a.value - lambda.norm().ln()).abs());
    }
    Ok((used > 0 && worst <= 1e-12, format!("worst error {worst:.1e} over {used} points")))
}

/// `|G(F z) - d G(z)|` within the truncation bounds.
fn functional_equation(g: &GreenEvaluator, lifts: &[Lift]) -> Result<(bool, String)> {
    let d = g.degree() as f64;
    let mut worst_excess: f64 = 0.0;
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for z in lifts {
        let Ok(fz) = g.map().eval(z, 1e-12) else { continue };
        let (Ok(a), Ok(b)) = (g.eval(z), g.eval(&fz)) else { continue };
        if a.escaped_to_indeterminacy || b.escaped_to_indeterminacy {
            continue;
        }
        used += 1;
        let r = (b.value - d * a.value).abs();
        let tol = (10.0 * (a.error_bound + b.error_bound)).max(1e-10);
        worst = worst.max(r);
        worst_excess = worst_excess.max(r / tol);
    }
    Ok((used > 0 && worst_excess <= 1.0, format!("worst residual {worst:.1e} over {used} points")))
}
