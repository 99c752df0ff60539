//! One function per experiment kind. Each returns its tables and acceptance
//! predicates; Monte-Carlo samples go through the context's cache.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use rayon::prelude::*;

use displace_core::assumptions::{
    check_bottom_decay, check_strict_convexity, constant_field_minimizer, exhaustive_interval_scan, growth_constant,
    minimize_over_k_with, DescentOptions, MinimizerCertificate,
};
use displace_core::floquet::{band_bottom, band_table};
use displace_core::geometry::SupportSet;
use displace_core::potentials::DisplacementField;
use displace_core::randomfields::sample_field;
use displace_core::reduced::{
    band_comparison_ratio, reduced_minimizer_scan, symbol_defect, Sandwich, SandwichReport, Sign,
};
use displace_core::spectral_stats::{
    e_lambda_estimate, holder_check, lifshitz_fit, lifshitz_fit_points, log_grid, sample_ground, tail_window,
    wegner_audit, wegner_sample_hits, wegner_sample_index, wegner_window, IdsCurve, IdsFamily, IdsSandwich,
    SandwichSetup, WegnerRecord,
};

use crate::cache::SampleCache;
use crate::config::{Config, FamilyKind, Setup};
use crate::output::{fmt, fmt_list, Outcome, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Band,
    Minimize,
    ConstantField,
    Ids,
    Lifshitz,
    Wegner,
    Reduce,
    Sandwich,
    VerifyAll,
}

impl Kind {
    pub const EXPERIMENTS: [Kind; 8] = [
        Kind::Band,
        Kind::Minimize,
        Kind::ConstantField,
        Kind::Reduce,
        Kind::Ids,
        Kind::Sandwich,
        Kind::Lifshitz,
        Kind::Wegner,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Band => "band",
            Kind::Minimize => "minimize",
            Kind::ConstantField => "theorem1",
            Kind::Ids => "ids",
            Kind::Lifshitz => "lifshitz",
            Kind::Wegner => "wegner",
            Kind::Reduce => "reduce",
            Kind::Sandwich => "sandwich",
            Kind::VerifyAll => "verify-all",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::EXPERIMENTS
            .into_iter()
            .chain([Kind::VerifyAll])
            .find(|k| k.as_str() == s)
            .ok_or_else(|| anyhow!("unknown experiment `{s}`"))
    }
}

/// Raised when the sample budget of an interrupted run is used up.
#[derive(Debug)]
pub struct Stopped;

impl fmt::Display for Stopped {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("stopped after the requested number of samples")
    }
}

impl std::error::Error for Stopped {}

pub struct Context<'a> {
    pub cfg: &'a Config,
    pub setup: &'a Setup,
    pub cache: SampleCache,
    pub pool: &'a rayon::ThreadPool,
    /// Samples still allowed before stopping.
    pub budget: Option<usize>,
}

/// Sample indices of the fields used to calibrate `C₀`, disjoint from the
/// Monte-Carlo indices.
const CALIBRATION_BASE: u64 = 1 << 48;
const AUDIT_SEED: u64 = 0xa0d1;

impl Context<'_> {
    /// Payloads for indices `0..count` under `tag`, computing the missing
    /// ones in parallel and appending them in index order.
    pub fn samples<F>(&mut self, tag: &str, count: usize, compute: F) -> Result<Vec<String>>
    where
        F: Fn(u64) -> displace_core::Result<String> + Sync,
    {
        let missing: Vec<u64> = (0..count as u64).filter(|&i| self.cache.get(tag, i).is_none()).collect();
        let allowed = self.budget.map_or(missing.len(), |b| b.min(missing.len()));
        let batch = &missing[..allowed];
        let fresh: Vec<displace_core::Result<String>> =
            self.pool.install(|| batch.par_iter().map(|&i| compute(i)).collect());
        for (&i, r) in batch.iter().zip(fresh) {
            self.cache.append(tag, i, &r?)?;
        }
        if let Some(b) = self.budget.as_mut() {
            *b -= allowed;
        }
        if allowed < missing.len() {
            return Err(Stopped.into());
        }
        Ok((0..count as u64).map(|i| self.cache.get(tag, i).expect("cached").to_string()).collect())
    }

    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    fn descent(&self) -> DescentOptions {
        DescentOptions { seed: self.seed(), ..DescentOptions::default() }
    }

    fn minimizer(&self, lambda: f64, restarts: usize) -> Result<MinimizerCertificate> {
        let s = self.setup;
        Ok(minimize_over_k_with(&s.p, &s.q, lambda, &s.k, self.cfg.model.m, restarts, &self.descent())?)
    }
}

fn parse_counts(s: &str) -> Result<Vec<usize>> {
    s.split_whitespace().map(|t| t.parse().map_err(|e| anyhow!("corrupt cache record `{s}`: {e}"))).collect()
}

fn join_counts(c: &[usize]) -> String {
    c.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn run(kind: Kind, ctx: &mut Context) -> Result<Outcome> {
    match kind {
        Kind::Band => band(ctx),
        Kind::Minimize => minimize(ctx),
        Kind::ConstantField => constant_field(ctx),
        Kind::Ids => ids(ctx),
        Kind::Lifshitz => lifshitz(ctx),
        Kind::Wegner => wegner(ctx),
        Kind::Reduce => reduce(ctx),
        Kind::Sandwich => sandwich(ctx),
        Kind::VerifyAll => bail!("verify-all is a sequence of runs, not a single experiment"),
    }
}

fn band(ctx: &mut Context) -> Result<Outcome> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let zeta = cfg.band.zeta.clone().unwrap_or_else(|| vec![0.0; md.dim]);
    let rows = band_table(&s.p, &s.q, md.lambda, &zeta, md.m, cfg.band.samples, cfg.band.levels)?;
    let bottom = band_bottom(&s.p, &s.q, md.lambda, &zeta, md.m)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..cfg.band.levels).map(|l| format!("E{l}")));
    let mut t = Table::new(&header);
    for r in &rows {
        let mut row = vec![fmt(r.theta[0])];
        row.extend(r.energies.iter().map(|&e| fmt(e)));
        t.push(row);
    }
    let mut out = Outcome::default();
    out.table("band.csv", t);
    let lowest = rows.iter().map(|r| r.energies[0]).fold(f64::INFINITY, f64::min);
    out.check(
        "band bottom at θ = 0",
        lowest >= bottom.energy - 1e-9,
        format!("E(λ,ζ) = {}, lowest sampled E₀(θ) = {}", fmt(bottom.energy), fmt(lowest)),
    );
    out.check(
        "levels ordered",
        rows.iter().all(|r| r.energies.windows(2).all(|w| w[0] <= w[1] + 1e-12)),
        format!("{} θ samples, {} levels", rows.len(), cfg.band.levels),
    );
    out.note(format!("v(λ,ζ) = [{}]", fmt_list(&bottom.v(&s.q))));
    Ok(out)
}

fn minimize(ctx: &mut Context) -> Result<Outcome> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let mc = &cfg.minimize;
    let cert = ctx.minimizer(md.lambda, mc.restarts)?;
    let d = md.dim;
    let mut header: Vec<String> = vec!["restart".into()];
    header.extend((0..d).map(|j| format!("start{j}")));
    header.extend((0..d).map(|j| format!("end{j}")));
    header.extend(["energy", "iterations", "stagnated"].map(String::from));
    let mut t = Table::new(&header);
    for (i, e) in cert.endpoints.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(e.start.iter().chain(&e.point).map(|&x| fmt(x)));
        row.extend([fmt(e.value), e.iterations.to_string(), e.stagnated.to_string()]);
        t.push(row);
    }
    let mut out = Outcome::default();
    out.table("minimize.csv", t);
    let v = band_bottom(&s.p, &s.q, md.lambda, &cert.zeta, md.m)?.v(&s.q);
    let growth = growth_constant(&v, &s.k, &cert.zeta, mc.growth_samples, ctx.seed());
    let decay = check_bottom_decay(&s.p, &s.q, &mc.lambdas, &s.k, md.m, mc.restarts)?;
    let mut t = Table::new(&["lambda", "energy", "ratio"]);
    for r in &decay.rows {
        t.push(vec![fmt(r.lambda), fmt(r.energy), fmt(r.ratio)]);
    }
    out.table("bottom_decay.csv", t);
    out.check(
        "unique minimizer",
        cert.unique || cert.flat,
        format!(
            "ζ(λ) = [{}], E = {}, cluster diameter {}",
            fmt_list(&cert.zeta),
            fmt(cert.energy),
            fmt(cert.cluster_diameter)
        ),
    );
    out.check(
        "quadratic growth",
        cert.flat || growth.positive,
        format!("α₀ = {} over {} samples", fmt(growth.alpha0), growth.samples),
    );
    out.check(
        "bottom decays linearly",
        decay.pass,
        format!("E₀ = {}, log-log slope {}", fmt(decay.e0), decay.slope.map_or("-".into(), fmt)),
    );
    if let Ok(r) = check_strict_convexity(&s.k) {
        out.note(format!("min principal curvature of ∂K = {}", fmt(r.min_curvature)));
    }
    out.note(format!("v(λ,ζ(λ)) = [{}]", fmt_list(&v)));
    Ok(out)
}

fn interval_of(k: &SupportSet) -> Option<(f64, f64)> {
    match k {
        SupportSet::Polytope { vertices } if vertices.len() == 2 && vertices[0].len() == 1 => {
            Some((vertices[0][0].min(vertices[1][0]), vertices[0][0].max(vertices[1][0])))
        }
        SupportSet::Ball { center, radius } if center.len() == 1 => Some((center[0] - radius, center[0] + radius)),
        _ => None,
    }
}

fn constant_field(ctx: &mut Context) -> Result<Outcome> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let tc = &cfg.constant_field;
    let mut out = Outcome::default();
    let mut t = Table::new(&["n", "restart", "energy", "site_deviation", "iterations"]);
    let mut e_lambda = f64::NAN;
    for &n in &tc.ns {
        let r = constant_field_minimizer(&s.p, &s.q, md.lambda, &s.k, n, md.m, tc.restarts)?;
        for (i, (e, dev)) in r.endpoints.iter().zip(&r.site_deviation).enumerate() {
            t.push(vec![n.to_string(), i.to_string(), fmt(e.value), fmt(*dev), e.iterations.to_string()]);
        }
        let worst = r.site_deviation.iter().cloned().fold(0.0, f64::max);
        let best = r.endpoints.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
        out.check(
            &format!("n = {n}: restarts end at the constant field"),
            r.all_constant,
            format!("max site deviation {} (tolerance 1e-3)", fmt(worst)),
        );
        out.check(
            &format!("n = {n}: minimal energy equals E(λ,ζ(λ))"),
            r.value_matches,
            format!("{} vs {}", fmt(best), fmt(r.e_lambda)),
        );
        e_lambda = r.e_lambda;
    }
    out.table("constant_field.csv", t);
    if tc.scan_points > 0 {
        match interval_of(&s.k) {
            Some((lo, hi)) => {
                let scan = exhaustive_interval_scan(&s.p, &s.q, md.lambda, lo, hi, 1, md.m, tc.scan_points)?;
                if e_lambda.is_nan() {
                    e_lambda = ctx.minimizer(md.lambda, tc.restarts)?.energy;
                }
                out.check(
                    "exhaustive n = 1 scan finds nothing lower",
                    scan.min_energy >= e_lambda - 1e-8,
                    format!("{} fields, lowest {} at [{}]", scan.fields, fmt(scan.min_energy), fmt_list(&scan.argmin)),
                );
            }
            None => out.note("exhaustive scan skipped: K is not an interval".into()),
        }
    }
    Ok(out)
}

/// The reduced-model parameters at `ζ(λ)` and the calibrated `C₀`.
struct Reduced {
    cert: MinimizerCertificate,
    v: Vec<f64>,
    alpha0: f64,
    c0: Option<f64>,
    runs: Vec<(usize, SandwichReport)>,
}

impl Reduced {
    fn alpha(&self, c0: f64) -> f64 {
        self.alpha0 / (2.0 * c0)
    }
}

fn calibrate(ctx: &Context, n: usize, fixed: Option<f64>) -> Result<Reduced> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let rc = &cfg.reduce;
    let cert = ctx.minimizer(md.lambda, rc.restarts)?;
    let sw = Sandwich::new(&s.p, &s.q, md.lambda, &cert.zeta, n, md.m)?;
    let v = sw.v().to_vec();
    let alpha0 = growth_constant(&v, &s.k, &cert.zeta, rc.growth_samples, ctx.seed()).alpha0;
    if !(alpha0 > 0.0) {
        bail!("no quadratic growth at ζ(λ) = [{}]: α₀ = {alpha0}", fmt_list(&cert.zeta));
    }
    let fields: Vec<DisplacementField> = (0..rc.fields)
        .map(|f| sample_field(&s.dist, n, ctx.seed(), CALIBRATION_BASE + f as u64))
        .collect::<displace_core::Result<_>>()?;
    let results: Vec<displace_core::Result<Vec<SandwichReport>>> = ctx.pool.install(|| {
        fields
            .par_iter()
            .map(|w| match fixed {
                Some(c0) => sw.check(w, c0, alpha0 / (2.0 * c0), rc.trials, ctx.seed()).map(|r| vec![r]),
                None => sw.calibrate(w, alpha0, rc.c0_max, rc.trials, ctx.seed()),
            })
            .collect()
    });
    let mut runs = Vec::new();
    let mut c0 = Some(0.0f64);
    for (f, r) in results.into_iter().enumerate() {
        let r = r?;
        let last = r.last().expect("at least one attempt");
        c0 = match (c0, last.pass) {
            (Some(c), true) => Some(c.max(last.c0)),
            _ => None,
        };
        runs.extend(r.into_iter().map(|x| (f, x)));
    }
    Ok(Reduced { cert, v, alpha0, c0, runs })
}

fn sandwich_table(runs: &[(usize, SandwichReport)]) -> Table {
    let mut t = Table::new(&["field", "c0", "alpha", "lower_form", "upper_form", "lower_eig", "upper_eig", "pass"]);
    for (f, r) in runs {
        t.push(vec![
            f.to_string(),
            fmt(r.c0),
            fmt(r.alpha),
            fmt(r.lower_form),
            fmt(r.upper_form),
            fmt(r.lower_eig),
            fmt(r.upper_eig),
            r.pass.to_string(),
        ]);
    }
    t
}

fn theta_grid(dim: usize, points: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..points)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (i + 1) as f64 / points as f64)
        .collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|t| axis.iter().map(move |&a| [t.clone(), vec![a]].concat())).collect();
    }
    out.retain(|t| t.iter().any(|&x| x.abs() > 1e-12));
    out
}

fn reduce(ctx: &mut Context) -> Result<Outcome> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let rc = &cfg.reduce;
    let mut out = Outcome::default();

    let mut t = Table::new(&["dim", "side", "defect"]);
    let mut worst = 0.0f64;
    for dim in 1..=md.dim.min(2) {
        for n in 1..=4 {
            let e = symbol_defect(dim, n);
            worst = worst.max(e);
            t.push(vec![dim.to_string(), (2 * n + 1).to_string(), fmt(e)]);
        }
    }
    out.table("symbol.csv", t);
    out.check("kinetic symbol is ϖ", worst <= 1e-12, format!("max defect {}", fmt(worst)));

    let thetas = theta_grid(md.dim, rc.theta_points);
    let mut t = Table::new(&["lambda", "min_ratio", "max_ratio", "spread"]);
    let mut comparison = Ok(0.0f64);
    for &lambda in &rc.lambdas {
        let cert = ctx.minimizer(lambda, rc.restarts)?;
        match band_comparison_ratio(&s.p, &s.q, lambda, &cert.zeta, md.m, &thetas) {
            Ok(r) => {
                t.push(vec![fmt(lambda), fmt(r.min_ratio), fmt(r.max_ratio), fmt(r.spread())]);
                comparison = comparison.map(|w: f64| w.max(r.spread()));
            }
            Err(e) => comparison = Err(format!("λ = {lambda}: {e}")),
        }
    }
    out.table("band_comparison.csv", t);
    match comparison {
        Ok(spread) => out.check(
            "band comparison ratios positive and bounded",
            spread <= rc.max_spread,
            format!("largest max/min ratio {} (limit {})", fmt(spread), fmt(rc.max_spread)),
        ),
        Err(e) => out.check("band comparison ratios positive and bounded", false, e),
    }

    let red = calibrate(ctx, rc.n, None)?;
    out.table("sandwich_operator.csv", sandwich_table(&red.runs));
    out.check(
        "operator sandwich",
        red.c0.is_some(),
        match red.c0 {
            Some(c) => format!("C₀ = {} holds on all {} fields (α₀ = {})", fmt(c), rc.fields, fmt(red.alpha0)),
            None => format!("no C₀ ≤ {} works on every field", fmt(rc.c0_max)),
        },
    );

    if let (Some((lo, hi)), Some(c0), 1) = (interval_of(&s.k), red.c0, md.dim) {
        let scan = reduced_minimizer_scan(red.v[0], md.lambda, red.cert.zeta[0], lo, hi, c0, red.alpha0, 11)?;
        out.check(
            "reduced ground vanishes only at ζ(λ)",
            scan.zero_only_at_constant && scan.min_nonconstant > 0.0 && scan.worst_margin >= -1e-12,
            format!(
                "{} fields, smallest non-constant ground {}, margin over λα₀min|ω-ζ|²/6 {}",
                scan.fields,
                fmt(scan.min_nonconstant),
                fmt(scan.worst_margin)
            ),
        );
    }
    Ok(out)
}

fn ids(ctx: &mut Context) -> Result<Outcome> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let ic = &cfg.ids;
    let mut out = Outcome::default();
    let grid = ic.energies.energies();
    let (energies, bottom, red) = match ic.family {
        FamilyKind::Continuum => {
            let cert = ctx.minimizer(md.lambda, cfg.minimize.restarts)?;
            let shift = if ic.relative { cert.energy } else { 0.0 };
            (grid.iter().map(|e| e + shift).collect::<Vec<_>>(), Some(cert.energy), None)
        }
        _ => {
            let red = calibrate(ctx, cfg.reduce.n, cfg.sandwich.c0)?;
            (grid.clone(), None, Some(red))
        }
    };
    let family = family_of(s, md.m, ic.family, red.as_ref())?;
    let (dist, seed, n) = (&s.dist, ctx.seed(), ic.n);
    let continuum = ic.family == FamilyKind::Continuum;
    let payloads = ctx.samples("ids", ic.samples, |i| {
        let omega = sample_field(dist, n, seed, i)?;
        let counts = family.sample_counts(md.lambda, &omega, &energies)?;
        let ground = if continuum { fmt(sample_ground(&s.p, &s.q, md.lambda, &omega, md.m)?) } else { "-".into() };
        Ok(format!("{ground} {}", join_counts(&counts)))
    })?;
    let mut grounds = Vec::new();
    let mut counts = Vec::new();
    for p in &payloads {
        let (g, c) = p.split_once(' ').ok_or_else(|| anyhow!("corrupt cache record `{p}`"))?;
        if continuum {
            grounds.push(g.parse::<f64>()?);
        }
        counts.push(parse_counts(c)?);
    }
    let curve = IdsCurve::from_counts(
        family.label(),
        md.lambda,
        md.dim,
        n,
        seed,
        energies.clone(),
        counts,
        family.modes_per_cell(md.dim),
    )?;
    let mut t = Table::new(&["E", "E_offset", "N", "stderr"]);
    for (i, &e) in energies.iter().enumerate() {
        t.push(vec![fmt(e), fmt(grid[i]), fmt(curve.value(i)), fmt(curve.stderr(i))]);
    }
    out.table("ids.csv", t);
    out.check("IDS monotone", curve.is_monotone(), format!("{} samples, {} energies", curve.samples(), energies.len()));
    if let Some(e) = bottom {
        if grounds.len() >= 2 {
            let est = e_lambda_estimate(&grounds, Some(e))?;
            let mut t = Table::new(&["min_ground", "spread", "samples", "estimate", "certificate"]);
            t.push(vec![fmt(est.min_ground), fmt(est.spread), est.samples.to_string(), fmt(est.estimate), fmt(e)]);
            out.table("e_lambda.csv", t);
        }
    }
    if let Ok(h) = holder_check(&curve, (energies[0], energies[energies.len() - 1]), 0.8) {
        out.note(format!("Hölder quotient (β = 0.8): worst {}, end points {}", fmt(h.constant), fmt(h.global)));
    }
    Ok(out)
}

fn family_of<'a>(s: &'a Setup, m: usize, kind: FamilyKind, red: Option<&'a Reduced>) -> Result<IdsFamily<'a>> {
    Ok(match kind {
        FamilyKind::Continuum => IdsFamily::Continuum { p: &s.p, q: &s.q, m },
        FamilyKind::ReducedPlus | FamilyKind::ReducedMinus => {
            let red = red.ok_or_else(|| anyhow!("reduced family without calibration"))?;
            let c0 = red.c0.ok_or_else(|| anyhow!("C₀ calibration failed; set [sandwich] c0 to force a value"))?;
            IdsFamily::Reduced {
                sign: if kind == FamilyKind::ReducedPlus { Sign::Plus } else { Sign::Minus },
                v: &red.v,
                zeta: &red.cert.zeta,
                c0,
                alpha: red.alpha(c0),
            }
        }
    })
}

fn sandwich(ctx: &mut Context) -> Result<Outcome> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let sc = &cfg.sandwich;
    let mut out = Outcome::default();
    let red = calibrate(ctx, sc.n, sc.c0)?;
    out.table("sandwich_operator.csv", sandwich_table(&red.runs));
    let Some(c0) = red.c0 else {
        out.check("operator sandwich calibration", false, format!("no C₀ ≤ {} found", fmt(cfg.reduce.c0_max)));
        return Ok(out);
    };
    let setup = SandwichSetup {
        p: &s.p,
        q: &s.q,
        lambda: md.lambda,
        zeta: &red.cert.zeta,
        v: &red.v,
        e_lambda: red.cert.energy,
        c0,
        alpha: red.alpha(c0),
        m: md.m,
    };
    let top = 1.0 / (c0 * c0);
    let energies: Vec<f64> = (1..=sc.points).map(|i| top * i as f64 / sc.points as f64).collect();
    setup.check_grid(&energies)?;
    let (dist, seed, n) = (&s.dist, ctx.seed(), sc.n);
    let payloads = ctx.samples("sandwich", sc.samples, |i| {
        let omega = sample_field(dist, n, seed, i)?;
        let [a, b, c] = setup.sample_counts(&omega, &energies)?;
        Ok(format!("{}|{}|{}", join_counts(&a), join_counts(&b), join_counts(&c)))
    })?;
    let per_sample = payloads
        .iter()
        .map(|p| {
            let parts: Vec<&str> = p.split('|').collect();
            if parts.len() != 3 {
                bail!("corrupt cache record `{p}`");
            }
            Ok([parse_counts(parts[0])?, parse_counts(parts[1])?, parse_counts(parts[2])?])
        })
        .collect::<Result<Vec<_>>>()?;
    let r = IdsSandwich::from_counts(&setup, md.dim, n, seed, &energies, per_sample)?;
    let mut t = Table::new(&["E", "N_plus", "se_plus", "N", "se", "N_minus", "se_minus"]);
    for (i, &e) in energies.iter().enumerate() {
        t.push(vec![
            fmt(e),
            fmt(r.plus.value(i)),
            fmt(r.plus.stderr(i)),
            fmt(r.middle.value(i)),
            fmt(r.middle.stderr(i)),
            fmt(r.minus.value(i)),
            fmt(r.minus.stderr(i)),
        ]);
    }
    out.table("sandwich.csv", t);
    out.check(
        "IDS chain within 3σ",
        r.pass,
        format!(
            "C₀ = {}, worst excess {} σ, {} per-sample violations",
            fmt(c0),
            fmt(r.worst_sigma),
            r.sample_violations
        ),
    );
    Ok(out)
}

fn lifshitz(ctx: &mut Context) -> Result<Outcome> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let lc = &cfg.lifshitz;
    let mut out = Outcome::default();

    let e0 = 0.5;
    let syn_e: Vec<f64> = log_grid(1e-3, 1e-1, 40).into_iter().map(|x| e0 + x).collect();
    let mut worst = 0.0f64;
    for d in 1..=3 {
        let syn_n: Vec<f64> = syn_e.iter().map(|x| (-(x - e0).powf(-(d as f64) / 2.0)).exp()).collect();
        let fit = lifshitz_fit_points(&syn_e, &syn_n, e0, 0.0, (e0, e0 + 1.0))?;
        worst = worst.max((fit.slope + d as f64 / 2.0).abs());
    }
    out.check("fitter recovers -d/2 on synthetic tails", worst <= 0.02, format!("largest error {}", fmt(worst)));

    let red = match lc.family {
        FamilyKind::Continuum => None,
        _ => Some(calibrate(ctx, cfg.reduce.n, cfg.sandwich.c0)?),
    };
    let bottom = match lc.family {
        FamilyKind::Continuum => ctx.minimizer(md.lambda, cfg.minimize.restarts)?.energy,
        _ => 0.0,
    };
    let family = family_of(s, md.m, lc.family, red.as_ref())?;
    let (dist, seed, n) = (&s.dist, ctx.seed(), lc.n);
    let coarse: Vec<f64> = lc.coarse.energies().iter().map(|e| bottom + e).collect();
    let curve = |ctx: &mut Context, tag: &str, energies: &[f64]| -> Result<IdsCurve> {
        let payloads = ctx.samples(tag, lc.samples, |i| {
            let omega = sample_field(dist, n, seed, i)?;
            Ok(join_counts(&family.sample_counts(md.lambda, &omega, energies)?))
        })?;
        let counts = payloads.iter().map(|p| parse_counts(p)).collect::<Result<Vec<_>>>()?;
        Ok(IdsCurve::from_counts(
            family.label(),
            md.lambda,
            md.dim,
            n,
            seed,
            energies.to_vec(),
            counts,
            family.modes_per_cell(md.dim),
        )?)
    };
    let coarse_curve = curve(ctx, "lifshitz-coarse", &coarse)?;
    let mut t = Table::new(&["stage", "E_minus_bottom", "N", "stderr"]);
    for (i, &e) in coarse.iter().enumerate() {
        t.push(vec!["coarse".into(), fmt(e - bottom), fmt(coarse_curve.value(i)), fmt(coarse_curve.stderr(i))]);
    }
    let Some((_, (lo, hi))) = tail_window(&coarse_curve, lc.min_counts, lc.n_max) else {
        out.table("lifshitz_ids.csv", t);
        out.check("tail resolved", false, "no coarse energy has a resolved tail".into());
        return Ok(out);
    };
    let fine: Vec<f64> = log_grid((lo - bottom).max(f64::MIN_POSITIVE), hi - bottom, lc.refine_points)
        .iter()
        .map(|e| bottom + e)
        .collect();
    let fine_curve = curve(ctx, "lifshitz-fine", &fine)?;
    for (i, &e) in fine.iter().enumerate() {
        t.push(vec!["fine".into(), fmt(e - bottom), fmt(fine_curve.value(i)), fmt(fine_curve.stderr(i))]);
    }
    out.table("lifshitz_ids.csv", t);
    let Some((window, _)) = tail_window(&fine_curve, lc.min_counts, lc.n_max) else {
        out.check("tail resolved", false, "refined grid lost the tail".into());
        return Ok(out);
    };
    match lifshitz_fit(&fine_curve, bottom, window) {
        Ok(fit) => {
            let mut t = Table::new(&[
                "slope",
                "intercept",
                "residual",
                "half_window_slope",
                "power_exponent",
                "power_residual",
                "points",
                "no_lifshitz",
                "window_lo",
                "window_hi",
            ]);
            t.push(vec![
                fmt(fit.slope),
                fmt(fit.intercept),
                fmt(fit.residual),
                fmt(fit.half_window_slope),
                fmt(fit.power_exponent),
                fmt(fit.power_residual),
                fit.points.to_string(),
                fit.no_lifshitz.to_string(),
                fmt(window.0 - bottom),
                fmt(window.1 - bottom),
            ]);
            out.table("lifshitz.csv", t);
            out.check(
                "double-log slope in band",
                fit.slope >= lc.slope_min && fit.slope <= lc.slope_max,
                format!(
                    "slope {} (half window {}) over {} points, band [{}, {}]",
                    fmt(fit.slope),
                    fmt(fit.half_window_slope),
                    fit.points,
                    fmt(lc.slope_min),
                    fmt(lc.slope_max)
                ),
            );
        }
        Err(e) => out.check("tail resolved", false, e.to_string()),
    }
    Ok(out)
}

fn wegner(ctx: &mut Context) -> Result<Outcome> {
    let (cfg, s) = (ctx.cfg, ctx.setup);
    let md = &cfg.model;
    let wc = &cfg.wegner;
    let mut out = Outcome::default();
    let window = wegner_window(&s.p, &s.q, md.lambda, &s.k, md.m, wc.restarts)?;
    let e = wc.energy.unwrap_or(window.mid());
    let eps = window.eps_list(wc.eps_start, wc.eps_decades, wc.eps_points);
    out.note(format!("window [{}, {}], E = {}", fmt(window.e_lambda), fmt(window.e0), fmt(e)));
    let (dist, seed) = (&s.dist, ctx.seed());
    let mut hits = Vec::with_capacity(wc.ns.len());
    for &n in &wc.ns {
        let payloads = ctx.samples(&format!("wegner-n{n}"), wc.samples, |i| {
            let omega = sample_field(dist, n, seed, wegner_sample_index(n, i as usize))?;
            let h = wegner_sample_hits(&s.p, &s.q, md.lambda, &omega, md.m, e, &eps)?;
            Ok(h.iter().map(|&b| if b { '1' } else { '0' }).collect())
        })?;
        let mut row = vec![0usize; eps.len()];
        for p in &payloads {
            if p.len() != eps.len() {
                bail!("corrupt cache record `{p}`");
            }
            for (r, c) in row.iter_mut().zip(p.chars()) {
                *r += (c == '1') as usize;
            }
        }
        hits.push(row);
    }
    let rec = WegnerRecord::from_hits(e, md.lambda, md.dim, eps.clone(), wc.ns.clone(), hits, wc.samples)?;
    let mut t = Table::new(&["eps", "n", "p", "stderr", "hits"]);
    for (j, &n) in rec.ns.iter().enumerate() {
        for (i, &x) in rec.eps.iter().enumerate() {
            t.push(vec![
                fmt(x),
                n.to_string(),
                fmt(rec.probability(j, i)),
                fmt(rec.stderr(j, i)),
                rec.hits[j][i].to_string(),
            ]);
        }
    }
    out.table("wegner.csv", t);
    let mut t = Table::new(&["quantity", "value", "halfwidth", "points"]);
    for (name, est) in [("nu", rec.nu), ("d", rec.d)] {
        match est {
            Some(x) => t.push(vec![name.into(), fmt(x.value), fmt(x.halfwidth), x.points.to_string()]),
            None => t.push(vec![name.into(), "NaN".into(), "NaN".into(), "0".into()]),
        }
    }
    out.table("wegner_fit.csv", t);
    let audit = wegner_audit(&s.p, &s.q, md.lambda, dist, e, &eps, wc.audit_n, md.m, wc.audit, seed ^ AUDIT_SEED)?;
    let nu = rec.nu.map_or(f64::NAN, |x| x.value);
    let d = rec.d.map_or(f64::NAN, |x| x.value);
    out.check("ε exponent", nu >= wc.nu_min, format!("ν̂ = {} (minimum {})", fmt(nu), fmt(wc.nu_min)));
    out.check(
        "volume exponent",
        d >= wc.d_min && d <= wc.d_max,
        format!("d̂ = {} (band [{}, {}])", fmt(d), fmt(wc.d_min), fmt(wc.d_max)),
    );
    out.check(
        "hit detector audit",
        audit.agree == audit.instances,
        format!("{}/{} agree", audit.agree, audit.instances),
    );
    out.check("probabilities monotone in ε", rec.is_monotone(), "3σ binomial slack".into());
    if rec.atomic {
        out.note("all probabilities are 0 or 1: the spectrum is atomic in this window".into());
    }
    if !rec.zero_rows.is_empty() {
        out.note(format!("{} volume(s) without any hit", rec.zero_rows.len()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_grid_excludes_origin() {
        let g = theta_grid(1, 4);
        assert_eq!(g.len(), 3);
        assert!(g.iter().all(|t| t[0].abs() > 0.0));
        assert_eq!(theta_grid(2, 4).len(), 15);
    }

    #[test]
    fn kinds_round_trip() {
        for k in Kind::EXPERIMENTS.into_iter().chain([Kind::VerifyAll]) {
            assert_eq!(k.as_str().parse::<Kind>().unwrap(), k);
        }
        assert!("nope".parse::<Kind>().is_err());
    }
}
