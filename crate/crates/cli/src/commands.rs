use std::io::Write;

use serde::Serialize;

use birat::currents::{ddc_wedge_streaming, green_source, sample_measure, support_check, DensityGrid, RING};
use birat::dynamics::{
    dynamical_degree_estimate_with, invariance_test, mc_mass_pullback_with, mixing_correlations, MassOptions,
    Observable, Sampling,
};
use birat::green::{potential_grid, Direction, GreenEvaluator, PotentialKind, Slice};
use birat::indeterminacy::{
    candidate_check, check_regular, iterated_indeterminacy_containment, numeric_scan, parse_complex, rational_guess,
    format_complex, RegionSpec, RegularityOptions, Role, ScanOptions,
};
use birat::output::fmt_f64;
use birat::projalg::{fs_distance, BigRational, Lift, ProjPoint};
use num_traits::ToPrimitive;
use birat::ratmap::{BirationalPair, Iterates, RationalMap};
use birat::{Complex64, Error, Result};

use crate::config::{load, Loaded, RunConfig};
use crate::run::Run;
use crate::{verify, Cli, Command, Failure};

pub fn dispatch(cli: &Cli) -> std::result::Result<(), Failure> {
    let name = cli.command.name();
    let cfg = RunConfig::resolve(&cli.common, name)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Usage(format!("cannot set thread count: {e}")))?;
    }
    let loaded = load(&cli.common)?;
    let mut run = Run::new(name, &cfg, &loaded)?;
    match &cli.command {
        Command::Degrees { n } => degrees(&mut run, &loaded, *n)?,
        Command::Stability { n } => stability(&mut run, &loaded, *n)?,
        Command::Indeterminacy { n, inverse } => indeterminacy(&mut run, &cfg, &loaded, *n, *inverse)?,
        Command::CheckRegular { two_sided } => regular(&mut run, &cfg, &loaded, *two_sided)?,
        Command::Green { point, inverse } => green(&mut run, &cfg, &loaded, point, *inverse)?,
        Command::GreenGrid { inverse, kind } => green_grid(&mut run, &cfg, &loaded, *inverse, kind)?,
        Command::PullbackConverge { points, nmin, nmax, form, basin_role, max_steps } => {
            let opts = PullbackArgs { points: *points, nmin: *nmin, nmax: *nmax, form: form.as_deref(), basin_role, max_steps: *max_steps };
            pullback(&mut run, &cfg, &loaded, &opts)?
        }
        Command::Measure { smoothing, csv_min_mass } => measure(&mut run, &cfg, &loaded, *smoothing, *csv_min_mass)?,
        Command::Invariance { observable, smoothing } => invariance(&mut run, &cfg, &loaded, observable, *smoothing)?,
        Command::Mixing { phi, psi, nmax, smoothing } => mixing(&mut run, &cfg, &loaded, phi, psi, *nmax, *smoothing)?,
        Command::McDegree { p, nmax, n, sampling, inverse } => {
            mc_degree(&mut run, &cfg, &loaded, *p, *nmax, *n, sampling, *inverse)?
        }
        Command::Verify => {
            let failed = verify::run(&mut run, &cfg, &loaded)?;
            run.finish()?;
            return if failed == 0 { Ok(()) } else { Err(Failure::Checks(failed)) };
        }
    }
    run.finish()?;
    Ok(())
}

fn degrees(run: &mut Run, l: &Loaded, n: u32) -> Result<()> {
    let seq = Iterates::new(l.map.clone()).degree_sequence(n)?;
    println!("{:?}", seq.0);
    run.param("n", n);
    run.json("degrees.json", "degrees of the reduced iterates f^1..f^n", &seq.0)
}

fn stability(run: &mut Run, l: &Loaded, n: u32) -> Result<()> {
    let rep = Iterates::new(l.map.clone()).stability(n)?;
    match rep.first_failure {
        None => println!("algebraically stable up to n = {n}: {:?}", rep.degrees),
        Some((k, want, got)) => println!("not stable: deg f^{k} = {got}, d^{k} = {want}; degrees {:?}", rep.degrees),
    }
    run.param("n", n);
    run.json("stability.json", "algebraic stability report", &rep)
}

#[derive(Serialize)]
struct ScanRow {
    point: Vec<String>,
    residual: f64,
    members: usize,
    /// Small-denominator rational point near the cluster, if any.
    rational: Option<Vec<String>>,
    /// Exact check at `rational`.
    confirmed: Option<bool>,
    /// FS distance from the cluster to `rational`.
    distance: Option<f64>,
}

/// Snap tolerances, tightest first. Near points of high multiplicity the
/// numeric cluster is only accurate to roughly residual^(1/m); the exact
/// check keeps a coarse snap honest.
const SNAP_TOLS: [f64; 5] = [1e-8, 1e-6, 1e-4, 1e-2, 5e-2];

fn snap(f: &birat::ratmap::RationalMap, p: &ProjPoint) -> Result<(Option<Vec<BigRational>>, Option<bool>)> {
    let mut first = None;
    for tol in SNAP_TOLS {
        if let Some(g) = rational_guess(p, 16, tol) {
            if candidate_check(f, &g)? {
                return Ok((Some(g), Some(true)));
            }
            first.get_or_insert(g);
        }
    }
    Ok(match first {
        Some(g) => (Some(g), Some(false)),
        None => (None, None),
    })
}

fn indeterminacy(run: &mut Run, cfg: &RunConfig, l: &Loaded, n: u32, inverse: bool) -> Result<()> {
    let base = if inverse { l.pair()?.inverse.clone() } else { l.map.clone() };
    let it = Iterates::new(base);
    let fnth = it.get(n)?;
    let samples = cfg.samples_or(20_000);
    let clusters = numeric_scan(&fnth, samples, &ScanOptions { seed: cfg.seed, ..ScanOptions::default() })?;
    let mut rows = Vec::new();
    for c in &clusters {
        let (guess, confirmed) = snap(&fnth, &c.point)?;
        let distance = guess.as_ref().map(|g| {
            let q: Vec<Complex64> = g.iter().map(|x| Complex64::new(x.to_f64().unwrap_or(f64::NAN), 0.0)).collect();
            fs_distance(c.point.coords(), &q)
        });
        rows.push(ScanRow {
            point: c.point.coords().iter().map(|z| format_complex(*z)).collect(),
            residual: c.residual,
            members: c.members,
            rational: guess.map(|g| g.iter().map(|q| q.to_string()).collect()),
            confirmed,
            distance,
        });
    }
    for r in &rows {
        let exact = match (&r.rational, r.confirmed) {
            (Some(q), Some(true)) => format!("exact at [{}], FS distance {:.1e}", q.join(":"), r.distance.unwrap_or(0.0)),
            (Some(_), Some(false)) => "rational guess is not a common zero".into(),
            _ => "no small rational point".into(),
        };
        println!("[{}]  residual {:.1e}  {}", r.point.join(" : "), r.residual, exact);
    }
    if rows.is_empty() {
        println!("no indeterminacy points found");
    }
    let role = if inverse { Role::VMinus } else { Role::VPlus };
    let containment = match l.regions.as_ref().map(|r| r.region(role)).transpose()?.flatten() {
        Some(v) => {
            let rep = iterated_indeterminacy_containment(&it, n, &v, samples, cfg.seed)?;
            println!("containment in {role}: {}", if rep.inside { "pass" } else { "fail" });
            Some(serde_json::json!({ "role": role.to_string(), "inside": rep.inside, "detail": rep.detail }))
        }
        None => None,
    };
    run.param("n", n);
    run.param("inverse", inverse);
    run.param("samples", samples);
    run.json(
        "indeterminacy.json",
        "indeterminacy clusters of the reduced iterate",
        &serde_json::json!({ "degree": fnth.degree(), "clusters": rows, "containment": containment }),
    )
}

fn regular(run: &mut Run, cfg: &RunConfig, l: &Loaded, two_sided: bool) -> Result<()> {
    let pair = l.pair()?;
    let mut regions = l.regions()?.clone();
    if two_sided {
        regions = regions.restricted(&[Role::VPlus, Role::VMinus, Role::UPlus, Role::UMinus]);
    }
    let opts = RegularityOptions { samples: cfg.samples_or(10_000), seed: cfg.seed, eps_ind: cfg.eps_ind, ..Default::default() };
    let rep = check_regular(pair, &regions, &opts)?;
    for (i, c) in [&rep.condition1, &rep.condition2, &rep.condition3].iter().enumerate() {
        println!("condition {}: {}", i + 1, if c.pass { "pass" } else { "fail" });
        for ch in &c.checks {
            println!("  {:<5} {}: {}", if ch.pass { "ok" } else { "FAIL" }, ch.name, ch.detail);
        }
    }
    println!("verdict: {} ({} samples, {} skipped near indeterminacy)", rep.label, rep.sample_count, rep.skipped_indeterminacy);
    run.param("samples", opts.samples);
    run.param("two_sided", two_sided);
    run.json("regions.json", "region configuration used", &regions)?;
    run.json("regularity.json", "per-condition regularity report", &rep)
}

/// Iterates checked before trusting a Green function.
const STABILITY_DEPTH: u32 = 3;

fn unstable(map: &RationalMap) -> Result<Option<String>> {
    let rep = Iterates::new(map.clone()).stability(STABILITY_DEPTH)?;
    Ok((!rep.stable).then(|| format!("{} is not algebraically stable (degrees {:?})", map.name(), rep.degrees)))
}

fn evaluator(cfg: &RunConfig, l: &Loaded, inverse: bool) -> Result<GreenEvaluator> {
    let map = if inverse { &l.pair()?.inverse } else { &l.map };
    if let Some(msg) = unstable(map)? {
        eprintln!("warning: {msg}; the Green function is not defined and the value below has no limit in the depth");
    }
    let e = if inverse {
        GreenEvaluator::for_pair(l.pair()?, cfg.depth, Direction::Inverse)?
    } else {
        GreenEvaluator::new(l.map.clone(), cfg.depth, Direction::Forward)?
    };
    Ok(e.with_eps_ind(cfg.eps_ind))
}

fn parse_vector(s: &str, dim: usize) -> Result<Vec<Complex64>> {
    let v = s.split(',').map(|t| parse_complex(t.trim())).collect::<Result<Vec<_>>>()?;
    if v.len() != dim {
        return Err(Error::Usage(format!("expected {dim} coordinates, got {}", v.len())));
    }
    Ok(v)
}

fn green(run: &mut Run, cfg: &RunConfig, l: &Loaded, point: &str, inverse: bool) -> Result<()> {
    let e = evaluator(cfg, l, inverse)?;
    let z = Lift::new(parse_vector(point, l.map.ambient() + 1)?)?;
    let g = e.eval(&z)?;
    let residual = if g.escaped_to_indeterminacy { None } else { e.invariance_residual(&z).ok() };
    println!(
        "G = {} (error bound {:.2e}, {}, depth {}){}{}",
        fmt_f64(g.value),
        g.error_bound,
        g.bound_label(),
        g.depth_used,
        if g.escaped_to_indeterminacy { "; the orbit came within eps-ind of indeterminacy, value is a partial sum" } else { "" },
        residual.map(|r| format!("; |G(F z) - d G(z)| = {r:.2e}")).unwrap_or_default()
    );
    run.param("point", point);
    run.param("inverse", inverse);
    run.json(
        "green.json",
        "Green function value at the point",
        &serde_json::json!({
            "value": g.value,
            "error_bound": g.error_bound,
            "bound": g.bound_label(),
            "depth_used": g.depth_used,
            "escaped_to_indeterminacy": g.escaped_to_indeterminacy,
            "invariance_residual": residual,
        }),
    )
}

fn green_grid(run: &mut Run, cfg: &RunConfig, l: &Loaded, inverse: bool, kind: &str) -> Result<()> {
    let kind = match kind {
        "relative" => PotentialKind::Relative,
        "chart" => PotentialKind::Chart,
        other => return Err(Error::Usage(format!("unknown potential kind {other:?}"))),
    };
    let e = evaluator(cfg, l, inverse)?;
    let slice = Slice::real_square(l.map.ambient(), cfg.bbox[0], cfg.bbox[1]);
    let grid = potential_grid(&e, &slice, cfg.res, kind)?;
    let finite: Vec<f64> = grid.values.iter().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("{}x{} grid, values in [{lo:.4}, {hi:.4}], {} NaN cells", cfg.res, cfg.res, grid.nan_count);
    run.param("inverse", inverse);
    run.param("kind", kind);
    run.param("slice", &slice);
    grid.write_csv(run.create("potential.csv", "potential per cell with error bounds")?)?;
    grid.write_pgm(run.create("potential.pgm", "potential heatmap, rows Re z1, columns Re z2; NaN = 65535")?)?;
    run.json(
        "potential.json",
        "grid summary",
        &serde_json::json!({ "res": cfg.res, "min": lo, "max": hi, "nan_count": grid.nan_count }),
    )
}

struct PullbackArgs<'a> {
    points: usize,
    nmin: u32,
    nmax: u32,
    form: Option<&'a str>,
    basin_role: &'a str,
    max_steps: u32,
}

fn pullback(run: &mut Run, cfg: &RunConfig, l: &Loaded, a: &PullbackArgs) -> Result<()> {
    if a.nmin >= a.nmax {
        return Err(Error::Usage("need nmin < nmax".into()));
    }
    let role: Role = serde_json::from_value(serde_json::Value::String(a.basin_role.to_string()))
        .map_err(|_| Error::Usage(format!("unknown region role {:?}", a.basin_role)))?;
    let basin = l
        .regions()?
        .region(role)?
        .ok_or_else(|| Error::Usage(format!("region configuration has no {role} region")))?;
    let e = evaluator(cfg, l, false)?;
    let dim = l.map.ambient() + 1;
    let ell = match a.form {
        Some(s) => parse_vector(s, dim)?,
        None => default_form(dim),
    };
    let (points, steps) = e.basin_points(&basin, a.points, a.max_steps, cfg.seed)?;
    let ns: Vec<u32> = (a.nmin..=a.nmax).collect();
    let mut errors = Vec::with_capacity(points.len());
    for z in &points {
        let g = e.eval(z)?.value;
        let row = ns.iter().map(|&n| Ok((e.hyperplane_pullback_potential(&ell, z, n)? - g).abs())).collect::<Result<Vec<f64>>>()?;
        errors.push(row);
    }
    let mut ratios: Vec<Vec<f64>> = vec![Vec::new(); ns.len() - 1];
    for row in &errors {
        for (i, w) in row.windows(2).enumerate() {
            if w[0] > 0.0 {
                ratios[i].push(w[1] / w[0]);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let median = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.get(s.len() / 2).copied().unwrap_or(f64::NAN)
    };
    let all: Vec<f64> = ratios.iter().flatten().copied().collect();
    let d = l.map.degree() as f64;
    println!("{} basin points (entry within {steps} steps), d = {d}", points.len());
    for (i, r) in ratios.iter().enumerate() {
        println!("  n {} -> {}: mean ratio {:.4}, median {:.4}", ns[i], ns[i + 1], mean(r), median(r));
    }
    println!("mean ratio {:.4} (expected about 1/d = {:.4}), median {:.4}", mean(&all), 1.0 / d, median(&all));
    run.param("points", a.points);
    run.param("n", &ns);
    run.param("form", ell.iter().map(|c| format_complex(*c)).collect::<Vec<_>>());
    run.param("basin_role", role.to_string());
    run.param("max_steps", a.max_steps);
    let mut w = run.create("pullback.csv", "|c_n - G| per basin point and n")?;
    writeln!(w, "point,{}", ns.iter().map(|n| format!("n{n}")).collect::<Vec<_>>().join(","))?;
    for (i, row) in errors.iter().enumerate() {
        writeln!(w, "{i},{}", row.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","))?;
    }
    drop(w);
    run.json(
        "pullback.json",
        "error ratios of the hyperplane pullback potentials",
        &serde_json::json!({
            "basin_steps_used": steps,
            "mean_ratio": mean(&all),
            "median_ratio": median(&all),
            "per_step": ratios.iter().enumerate().map(|(i, r)| serde_json::json!({
                "from": ns[i], "to": ns[i + 1], "mean": mean(r), "median": median(r)
            })).collect::<Vec<_>>(),
        }),
    )
}

/// A fixed linear form with no special structure.
fn default_form(dim: usize) -> Vec<Complex64> {
    (0..dim).map(|i| Complex64::new(0.6 - 0.37 * i as f64, 0.1 + 0.23 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 })).collect()
}

fn build_measure(cfg: &RunConfig, pair: &BirationalPair, smoothing: usize) -> Result<DensityGrid> {
    if pair.ambient() != 2 {
        return Err(Error::Usage("the measure is only implemented on P^2".into()));
    }
    for map in [&pair.forward, &pair.inverse] {
        if let Some(msg) = unstable(map)? {
            return Err(Error::Usage(format!("{msg}; the equilibrium measure needs stable Green functions")));
        }
    }
    if cfg.res < 2 * RING + 1 {
        return Err(Error::Usage(format!("res must be at least {}", 2 * RING + 1)));
    }
    let bbox = cfg.chart_box();
    let gp = GreenEvaluator::for_pair(pair, cfg.depth, Direction::Forward)?.with_eps_ind(cfg.eps_ind);
    let gm = GreenEvaluator::for_pair(pair, cfg.depth, Direction::Inverse)?.with_eps_ind(cfg.eps_ind);
    let u = green_source(&gp, 2, bbox, cfg.res, smoothing)?;
    let v = green_source(&gm, 2, bbox, cfg.res, smoothing)?;
    ddc_wedge_streaming(bbox, cfg.res, &u, &v, true)
}

fn measure(run: &mut Run, cfg: &RunConfig, l: &Loaded, smoothing: Option<usize>, csv_min: f64) -> Result<()> {
    let smoothing = smoothing.unwrap_or(cfg.smoothing);
    let d = build_measure(cfg, l.pair()?, smoothing)?;
    let support = match &l.regions {
        Some(r) => match (r.region(Role::UPlus)?, r.region(Role::UMinus)?) {
            (Some(up), Some(um)) if up.complement && um.complement => {
                // both are complements, so the intersection is the complement of the union
                let both = RegionSpec::new(Role::U, [up.shapes, um.shapes].concat(), true)?;
                Some(support_check(&d, &both, 2)?)
            }
            _ => None,
        },
        None => None,
    };
    let s = d.summary();
    println!(
        "total mass {:.4}, clipped negativity {:.2}% ({}), {} excluded cells",
        s.total_mass,
        100.0 * s.clip_fraction,
        if s.quality_ok { "ok" } else { "QUALITY FAILURE: above 2%" },
        s.excluded_cells
    );
    if let Some(f) = support {
        println!("mass fraction in U+ ∩ U-: {f:.4}");
    }
    run.param("smoothing", smoothing);
    run.param("chart", 2);
    run.param("csv_min_mass", csv_min);
    write_density_csv(&d, csv_min, run.create("density.csv", "cell centres and masses (cells above csv_min_mass)")?)?;
    d.write_pgm_z1(run.create("density_z1.pgm", "z1 marginal, rows Re z1, columns Im z1")?)?;
    d.write_pgm_z2(run.create("density_z2.pgm", "z2 marginal, rows Re z2, columns Im z2")?)?;
    run.json(
        "measure.json",
        "mass report",
        &serde_json::json!({ "summary": s, "support_fraction_u_plus_u_minus": support }),
    )
}

fn write_density_csv<W: Write>(d: &DensityGrid, min_mass: f64, mut out: W) -> Result<()> {
    let cells = d.cell_masses.as_deref().expect("cells kept");
    writeln!(out, "re(z1),im(z1),re(z2),im(z2),mass")?;
    for (c, &m) in cells.iter().enumerate() {
        if m > min_mass {
            let z = d.cell_center(c);
            writeln!(out, "{},{},{},{},{}", fmt_f64(z[0].re), fmt_f64(z[0].im), fmt_f64(z[1].re), fmt_f64(z[1].im), fmt_f64(m))?;
        }
    }
    Ok(())
}

fn mu_samples(run: &mut Run, cfg: &RunConfig, pair: &BirationalPair, smoothing: Option<usize>) -> Result<Vec<[Complex64; 2]>> {
    let smoothing = smoothing.unwrap_or(cfg.smoothing);
    let d = build_measure(cfg, pair, smoothing)?;
    let n = cfg.samples_or(10_000);
    println!("measure: mass {:.4}, clip {:.2}%; {n} samples", d.total_mass, 100.0 * d.clip_fraction());
    run.param("smoothing", smoothing);
    run.param("samples", n);
    run.param("measure_mass", d.total_mass);
    sample_measure(&d, n, cfg.seed)
}

fn invariance(run: &mut Run, cfg: &RunConfig, l: &Loaded, observable: &str, smoothing: Option<usize>) -> Result<()> {
    let pair = l.pair()?;
    let obs: Vec<Observable> = if observable == "all" { Observable::BUILT_IN.to_vec() } else { vec![Observable::parse(observable)?] };
    let samples = mu_samples(run, cfg, pair, smoothing)?;
    let bbox = cfg.chart_box();
    let reports = obs.iter().map(|&o| invariance_test(&samples, pair, o, 2, &bbox, cfg.seed)).collect::<Result<Vec<_>>>()?;
    for r in &reports {
        let rel = if r.range > 0.0 { r.discrepancy / r.range } else { 0.0 };
        println!(
            "{:<18} discrepancy {:.3e} ({:.2}% of range), {} dropped",
            r.observable.label(),
            r.discrepancy,
            100.0 * rel,
            r.samples_dropped
        );
    }
    run.param("observables", obs.iter().map(|o| o.label()).collect::<Vec<_>>());
    run.json("invariance.json", "invariance discrepancies", &reports)
}

fn mixing(run: &mut Run, cfg: &RunConfig, l: &Loaded, phi: &str, psi: &str, nmax: usize, smoothing: Option<usize>) -> Result<()> {
    let pair = l.pair()?;
    let (phi, psi) = (Observable::parse(phi)?, Observable::parse(psi)?);
    let samples = mu_samples(run, cfg, pair, smoothing)?;
    let c = mixing_correlations(&samples, pair, phi, psi, nmax, 2, &cfg.chart_box())?;
    for (n, v) in c.values.iter().enumerate() {
        println!("C_{n} = {v:+.5e}");
    }
    println!("{} samples used, {} dropped", c.sample_count, c.samples_dropped);
    run.param("phi", phi.label());
    run.param("psi", psi.label());
    run.param("nmax", nmax);
    let mut w = run.create("correlations.csv", "C_n per lag")?;
    writeln!(w, "n,c")?;
    for (n, v) in c.values.iter().enumerate() {
        writeln!(w, "{n},{}", fmt_f64(*v))?;
    }
    drop(w);
    run.json("correlations.json", "correlation series", &c)
}

#[allow(clippy::too_many_arguments)]
fn mc_degree(
    run: &mut Run,
    cfg: &RunConfig,
    l: &Loaded,
    p: usize,
    nmax: u32,
    n: Option<u32>,
    sampling: &str,
    inverse: bool,
) -> Result<()> {
    let sampling = Sampling::parse(sampling)?;
    let opts = MassOptions { sampling, ..MassOptions::default() };
    let map = if inverse { l.pair()?.inverse.clone() } else { l.map.clone() };
    let samples = cfg.samples_or(match sampling {
        Sampling::Uniform => 100_000,
        Sampling::Lines => 64,
    });
    run.param("p", p);
    run.param("sampling", sampling);
    run.param("samples", samples);
    run.param("inverse", inverse);
    if let Some(n) = n {
        let m = mc_mass_pullback_with(&Iterates::new(map), n, p, samples, cfg.seed, &opts)?;
        println!("mass of f^{n}*(ω^{p}) = {:.5} ± {:.5}{}", m.value, m.standard_error, reliability(m.reliable, &m.warning));
        run.param("n", n);
        return run.json("mass.json", "pullback mass estimate", &m);
    }
    let est = dynamical_degree_estimate_with(&map, p, nmax, samples, cfg.seed, &opts)?;
    let mut w = run.create("masses.csv", "per-n pullback masses")?;
    writeln!(w, "n,mass,standard_error,samples_used,samples_rejected,reliable")?;
    for (i, m) in est.masses.iter().enumerate() {
        println!("  n = {}: {:.5} ± {:.5}{}", i + 1, m.value, m.standard_error, reliability(m.reliable, &m.warning));
        writeln!(w, "{},{},{},{},{},{}", i + 1, fmt_f64(m.value), fmt_f64(m.standard_error), m.samples_used, m.samples_rejected, m.reliable)?;
    }
    drop(w);
    println!(
        "d_{p} ≈ {:.5} ± {:.5} ({}){}",
        est.value,
        est.standard_error,
        est.label,
        if est.reliable { "" } else { "; unreliable, see the per-n warnings" }
    );
    run.param("nmax", nmax);
    run.json("degree.json", "dynamical degree estimate", &est)
}

fn reliability(reliable: bool, warning: &Option<String>) -> String {
    match (reliable, warning) {
        (true, _) => String::new(),
        (false, Some(w)) => format!("  [unreliable: {w}]"),
        (false, None) => "  [unreliable]".into(),
    }
}
