//! Numerical certificates for the minimizer hypotheses: uniqueness and
//! quadratic growth of `ζ ↦ E(λ,ζ)` at its minimum over `K`, the curvature
//! and vertex criteria that produce them, the linear decay of the band
//! bottom, and the finite-volume minimizer over whole fields.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::discretize::{assemble_periodic, GridSpec};
use crate::eigensolve::smallest_eigenpairs;
use crate::floquet::band_bottom;
use crate::geometry::SupportSet;
use crate::potentials::{for_each_image, DisplacementField, PeriodicPotential, SingleSitePotential, MAX_DIM};
use crate::sparse::Entry;
use crate::vecmath::{dist, dot, norm};
use crate::{Error, Result};

/// Endpoints closer than this count as the same minimizer.
pub const TOL_UNIQUE: f64 = 1e-4;
/// Endpoint energies within this of the best count as minimal.
pub const TOL_ENERGY: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct DescentOptions {
    pub max_iter: usize,
    /// Stop once a projected step moves less than this.
    pub step_tol: f64,
    pub seed: u64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { max_iter: 400, step_tol: 1e-11, seed: 17 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Descent {
    pub start: Vec<f64>,
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Line search gave up before the step tolerance was met.
    pub stagnated: bool,
}

/// Projected gradient with Armijo backtracking and Barzilai–Borwein trial steps.
pub fn projected_descent<F, P>(mut f: F, project: P, start: Vec<f64>, opts: &DescentOptions) -> Result<Descent>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = project(&start);
    let (mut fx, mut g) = f(&x)?;
    let mut t = 1.0 / norm(&g).max(1e-8);
    let mut iterations = 0;
    let mut stagnated = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let y = project(&trial);
            let s2: f64 = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if s2.sqrt() <= opts.step_tol {
                break None;
            }
            let (fy, gy) = f(&y)?;
            if fy <= fx - 1e-4 * s2 / t {
                break Some((y, fy, gy));
            }
            t *= 0.5;
            if t < 1e-14 {
                stagnated = true;
                break None;
            }
        };
        let Some((y, fy, gy)) = accepted else { break };
        let s: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = gy.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &dg);
        t = if sy > 0.0 { (dot(&s, &s) / sy).min(1e8) } else { (2.0 * t).min(1e8) };
        x = y;
        fx = fy;
        g = gy;
    }
    Ok(Descent { start, point: x, value: fx, iterations, stagnated })
}

#[derive(Clone, Debug)]
pub struct MinimizerCertificate {
    pub lambda: f64,
    /// `ζ(λ)`: the lowest endpoint.
    pub zeta: Vec<f64>,
    /// `E(λ, ζ(λ))`.
    pub energy: f64,
    pub cluster_diameter: f64,
    pub endpoints: Vec<Descent>,
    /// `ζ ↦ E(λ,ζ)` is constant (no coupling or no single-site term).
    pub flat: bool,
    /// Uniqueness, certified empirically by multi-start clustering.
    pub unique: bool,
    pub alpha0: Option<f64>,
}

impl MinimizerCertificate {
    pub fn quadratic_growth(&self) -> Option<bool> {
        self.alpha0.map(|a| a > 0.0)
    }
}

/// `E(λ,ζ)` and `∇_ζ E = λ v(λ,ζ)`.
pub fn band_energy_and_gradient(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    m: usize,
) -> Result<(f64, Vec<f64>)> {
    let b = band_bottom(p, q, lambda, zeta, m)?;
    let g = b.v(q).into_iter().map(|v| lambda * v).collect();
    Ok((b.energy, g))
}

pub fn minimize_over_k(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    k: &SupportSet,
    m: usize,
    restarts: usize,
) -> Result<MinimizerCertificate> {
    minimize_over_k_with(p, q, lambda, k, m, restarts, &DescentOptions::default())
}

pub fn minimize_over_k_with(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    k: &SupportSet,
    m: usize,
    restarts: usize,
    opts: &DescentOptions,
) -> Result<MinimizerCertificate> {
    if restarts < 8 {
        return Err(Error::InvalidParameter(format!("{restarts} restarts; at least 8 required")));
    }
    k.validate()?;
    if k.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: k.dim() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..restarts).map(|_| k.sample(&mut rng)).collect();
    let flat = lambda == 0.0 || q.is_zero();
    let endpoints = if flat {
        starts
            .into_iter()
            .map(|s| {
                let e = band_bottom(p, q, lambda, &s, m)?.energy;
                Ok(Descent { point: s.clone(), start: s, value: e, iterations: 0, stagnated: false })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        starts
            .into_iter()
            .map(|s| projected_descent(|z| band_energy_and_gradient(p, q, lambda, z, m), |z| k.project(z), s, opts))
            .collect::<Result<Vec<_>>>()?
    };
    let best = endpoints.iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("at least 8 restarts");
    let mut diameter = 0.0f64;
    for a in &endpoints {
        for b in &endpoints {
            diameter = diameter.max(dist(&a.point, &b.point));
        }
    }
    let same_energy = endpoints.iter().all(|e| e.value - best.value <= TOL_ENERGY);
    Ok(MinimizerCertificate {
        lambda,
        zeta: best.point.clone(),
        energy: best.value,
        cluster_diameter: diameter,
        unique: !flat && diameter <= TOL_UNIQUE && same_energy,
        flat,
        alpha0: None,
        endpoints,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    /// `min v(λ,ζλ)·(ζ-ζλ) / |ζ-ζλ|²` over the samples.
    pub alpha0: f64,
    pub argmin: Vec<f64>,
    pub samples: usize,
    pub positive: bool,
}

/// Sampled estimate of the quadratic-growth constant at `ζλ`: half the
/// samples uniform in `K`, half on `∂K`, plus every polytope vertex.
pub fn check_growth(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    k: &SupportSet,
    zeta_lambda: &[f64],
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<GrowthReport> {
    let v = band_bottom(p, q, lambda, zeta_lambda, m)?.v(q);
    Ok(growth_constant(&v, k, zeta_lambda, samples, seed))
}

pub fn growth_constant(v: &[f64], k: &SupportSet, zeta_lambda: &[f64], samples: usize, seed: u64) -> GrowthReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(samples + 8);
    for i in 0..samples {
        pts.push(if i % 2 == 0 { k.sample(&mut rng) } else { k.sample_boundary(&mut rng) });
    }
    if let SupportSet::Polytope { vertices } = k {
        pts.extend(vertices.iter().cloned());
    }
    let mut best = f64::INFINITY;
    let mut argmin = zeta_lambda.to_vec();
    let mut used = 0;
    for z in pts {
        let diff: Vec<f64> = z.iter().zip(zeta_lambda).map(|(a, b)| a - b).collect();
        let r2 = dot(&diff, &diff);
        if r2.sqrt() < 1e-9 {
            continue;
        }
        used += 1;
        let ratio = dot(v, &diff) / r2;
        if ratio < best {
            best = ratio;
            argmin = z;
        }
    }
    GrowthReport { alpha0: best, argmin, samples: used, positive: best > 0.0 }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityReport {
    pub min_curvature: f64,
    pub pass: bool,
}

pub fn check_strict_convexity(k: &SupportSet) -> Result<ConvexityReport> {
    k.validate()?;
    let c = k.min_principal_curvature();
    Ok(ConvexityReport { min_curvature: c.min_curvature, pass: c.positive })
}

/// `min_{ζ∈K} v·(ζ-ζ₀) - ε|ζ-ζ₀|`, the worst case of `v'·(ζ-ζ₀)` over
/// `|v' - v| ≤ ε`. The expression is concave in `ζ`, so for polytopes the
/// vertices are exact; smooth sets are sampled, densely near `ζ₀`.
pub fn supporting_margin(k: &SupportSet, v: &[f64], eps: f64, zeta0: &[f64], samples: usize, seed: u64) -> f64 {
    let f = |z: &[f64]| {
        let diff: Vec<f64> = z.iter().zip(zeta0).map(|(a, b)| a - b).collect();
        dot(v, &diff) - eps * norm(&diff)
    };
    if let SupportSet::Polytope { vertices } = k {
        return vertices.iter().map(|z| f(z)).fold(f64::INFINITY, f64::min);
    }
    let d = k.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f(zeta0);
    for i in 0..samples {
        let z = if i % 2 == 0 { k.sample(&mut rng) } else { k.sample_boundary(&mut rng) };
        worst = worst.min(f(&z));
    }
    for j in 0..d {
        for sign in [-1.0, 1.0] {
            let mut t = 1.0;
            while t > 1e-8 {
                let mut z = zeta0.to_vec();
                z[j] += sign * t;
                worst = worst.min(f(&k.project(&z)));
                t *= 0.5;
            }
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportingReport {
    /// The first candidate whose margin is non-negative.
    pub zeta0: Option<Vec<f64>>,
    pub margins: Vec<(Vec<f64>, f64)>,
}

impl SupportingReport {
    pub fn pass(&self) -> bool {
        self.zeta0.is_some()
    }
}

/// Candidates are the polytope vertices, or the boundary minimizer of `v·ζ`
/// for smooth sets.
pub fn check_supporting_point(
    k: &SupportSet,
    v: &[f64],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<SupportingReport> {
    k.validate()?;
    if norm(v) == 0.0 {
        return Err(Error::InvalidParameter("v(q) = 0".into()));
    }
    let candidates = match k {
        SupportSet::Polytope { vertices } => vertices.clone(),
        _ => vec![k.argmin_linear(v)],
    };
    let margins: Vec<(Vec<f64>, f64)> = candidates
        .into_iter()
        .map(|c| {
            let mgn = supporting_margin(k, v, eps, &c, samples, seed);
            (c, mgn)
        })
        .collect();
    let zeta0 = margins.iter().find(|(_, m)| *m >= -1e-14).map(|(c, _)| c.clone());
    Ok(SupportingReport { zeta0, margins })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub lambda: f64,
    pub energy: f64,
    /// `(E₀ - E(λ,ζ(λ))) / λ`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayTable {
    pub e0: f64,
    pub rows: Vec<DecayRow>,
    /// Log-log slope of the ratio against `λ`.
    pub slope: Option<f64>,
    pub pass: bool,
}

/// Bottom-of-spectrum decay. A ratio bounded away from zero has log-log
/// slope near 0; one vanishing like `λ` (symmetric bumps) has slope near 1.
/// The flag requires every ratio positive and a slope at most `1/2`.
pub fn check_bottom_decay(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambdas: &[f64],
    k: &SupportSet,
    m: usize,
    restarts: usize,
) -> Result<DecayTable> {
    let d = p.dim();
    let e0 = band_bottom(p, q, 0.0, &vec![0.0; d], m)?.energy;
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let cert = minimize_over_k(p, q, lambda, k, m, restarts)?;
            Ok(DecayRow { lambda, energy: cert.energy, ratio: (e0 - cert.energy) / lambda })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(decay_summary(e0, rows))
}

pub fn decay_summary(e0: f64, rows: Vec<DecayRow>) -> DecayTable {
    let positive = rows.iter().all(|r| r.ratio > 1e-9);
    let slope = if positive && rows.len() >= 2 {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda.ln(), r.ratio.ln())).collect();
        Some(ls_slope(&pts))
    } else {
        None
    };
    let pass = positive && !rows.is_empty() && slope.is_none_or(|s| s <= 0.5);
    DecayTable { e0, rows, slope, pass }
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Ground energy of `H^P_{λ,ω,n}` and its gradient in every `ω_γ`:
/// `∂E/∂ω_γ = -λ Σ_x ∇q(x - γ - λω_γ) ψ(x)²` with `Σ ψ² = 1`.
pub fn field_energy_and_gradient(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    omega: &DisplacementField,
    m: usize,
) -> Result<(f64, Vec<f64>)> {
    let d = omega.dim();
    let grid = GridSpec::new(d, omega.n(), m)?;
    let op = assemble_periodic(p, q, lambda, omega, grid)?;
    let res = smallest_eigenpairs(&op.matrix, 1, 1e-12)?;
    let mut psi = res.vector(0).expect("eigenvectors requested");
    f64::fix_phase(&mut psi);
    let mut grad = vec![0.0; omega.entries().len()];
    if !q.is_zero() {
        let r2 = q.support_radius() * q.support_radius();
        let mut g = [0.0; MAX_DIM];
        for (i, &w) in psi.iter().enumerate() {
            let x = grid.point(i);
            for_each_image(&x[..d], lambda, grid.site_shape(), omega, |site, y| {
                if y.iter().map(|t| t * t).sum::<f64>() < r2 {
                    q.gradient(y, &mut g[..d]);
                    for j in 0..d {
                        grad[site * d + j] -= lambda * g[j] * w * w;
                    }
                }
            });
        }
    }
    Ok((res.ground(), grad))
}

#[derive(Clone, Debug)]
pub struct ConstantFieldReport {
    pub lambda: f64,
    pub zeta_lambda: Vec<f64>,
    pub e_lambda: f64,
    pub endpoints: Vec<Descent>,
    /// Per restart: `max_γ |ω_γ - ζ(λ)|` at the endpoint.
    pub site_deviation: Vec<f64>,
    pub all_constant: bool,
    pub value_matches: bool,
    /// The objective does not depend on `ω`.
    pub degenerate: bool,
}

/// Minimizes the finite-volume ground energy over whole fields `ω ∈ K^{Λ}`
/// and compares the result with the constant field `ζ(λ)`.
pub fn constant_field_minimizer(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    k: &SupportSet,
    n: usize,
    m: usize,
    restarts: usize,
) -> Result<ConstantFieldReport> {
    let d = p.dim();
    let sites = (2 * n + 1).pow(d as u32);
    if sites * d > 200 {
        return Err(Error::InvalidParameter(format!("{} variables; at most 200", sites * d)));
    }
    let opts = DescentOptions::default();
    let cert = minimize_over_k_with(p, q, lambda, k, m, restarts.max(8), &opts)?;
    let degenerate = cert.flat;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x7431);
    let project = |w: &[f64]| -> Vec<f64> { w.chunks(d).flat_map(|z| k.project(z)).collect() };
    let mut endpoints = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let start: Vec<f64> = (0..sites).flat_map(|_| k.sample(&mut rng)).collect();
        let e = if degenerate {
            let w = DisplacementField::new(n, d, start.clone())?;
            let e = field_energy_and_gradient(p, q, lambda, &w, m)?.0;
            Descent { point: start.clone(), start, value: e, iterations: 0, stagnated: false }
        } else {
            projected_descent(
                |w| field_energy_and_gradient(p, q, lambda, &DisplacementField::new(n, d, w.to_vec())?, m),
                project,
                start,
                &opts,
            )?
        };
        endpoints.push(e);
    }
    let site_deviation: Vec<f64> =
        endpoints.iter().map(|e| e.point.chunks(d).map(|z| dist(z, &cert.zeta)).fold(0.0, f64::max)).collect();
    let best = endpoints.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    Ok(ConstantFieldReport {
        lambda,
        zeta_lambda: cert.zeta.clone(),
        e_lambda: cert.energy,
        all_constant: !degenerate && site_deviation.iter().all(|&s| s <= 1e-3),
        value_matches: (best - cert.energy).abs() <= 1e-8,
        degenerate,
        endpoints,
        site_deviation,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridScan {
    pub fields: usize,
    pub min_energy: f64,
    pub argmin: Vec<f64>,
}

/// Ground energy of every field on the torus whose entries lie on the
/// `points`-point lattice of `[lo, hi]`, in one dimension.
#[allow(clippy::too_many_arguments)]
pub fn exhaustive_interval_scan(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    lo: f64,
    hi: f64,
    n: usize,
    m: usize,
    points: usize,
) -> Result<GridScan> {
    if p.dim() != 1 {
        return Err(Error::UnsupportedVariant("exhaustive scans are one-dimensional"));
    }
    let sites = 2 * n + 1;
    let fields = (points as u64).checked_pow(sites as u32).filter(|&f| f <= 1_000_000);
    let fields =
        fields.ok_or_else(|| Error::InvalidParameter(format!("{points}^{sites} fields exceed 10^6")))? as usize;
    if points < 2 {
        return Err(Error::InvalidParameter("need at least two grid points".into()));
    }
    let grid = GridSpec::new(1, n, m)?;
    let value = |i: usize| lo + (hi - lo) * i as f64 / (points - 1) as f64;
    let mut best = GridScan { fields, min_energy: f64::INFINITY, argmin: Vec::new() };
    let mut digits = vec![0usize; sites];
    for _ in 0..fields {
        let w: Vec<f64> = digits.iter().map(|&i| value(i)).collect();
        let field = DisplacementField::new(n, 1, w.clone())?;
        let a = assemble_periodic(p, q, lambda, &field, grid)?.matrix;
        let e = smallest_eigenpairs(&a, 1, 1e-12)?.eigenvalues[0];
        if e < best.min_energy {
            best.min_energy = e;
            best.argmin = w;
        }
        for dgt in digits.iter_mut() {
            *dgt += 1;
            if *dgt < points {
                break;
            }
            *dgt = 0;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::v_vector;
    use crate::potentials::builtin_single_site;

    fn asym1() -> (PeriodicPotential, SingleSitePotential) {
        (PeriodicPotential::cosine(1, &[1.0]).unwrap(), builtin_single_site("asym-bump", 1).unwrap())
    }

    #[test]
    fn exhaustive_scan_finds_the_constant_endpoint() {
        let (p, q) = asym1();
        let scan = exhaustive_interval_scan(&p, &q, 0.1, -1.0, 1.0, 1, 16, 3).unwrap();
        assert_eq!(scan.fields, 27);
        let cert = minimize_over_k(&p, &q, 0.1, &SupportSet::interval(-1.0, 1.0), 16, 8).unwrap();
        assert!(scan.argmin.iter().all(|&w| w == cert.zeta[0]), "{scan:?}");
        assert!((scan.min_energy - cert.energy).abs() < 1e-9);
    }

    #[test]
    fn descent_on_a_quadratic() {
        let k = SupportSet::unit_ball(2);
        let f = |x: &[f64]| Ok(((x[0] - 2.0).powi(2) + x[1] * x[1], vec![2.0 * (x[0] - 2.0), 2.0 * x[1]]));
        let r = projected_descent(f, |x| k.project(x), vec![0.0, 0.5], &DescentOptions::default()).unwrap();
        assert!(dist(&r.point, &[1.0, 0.0]) < 1e-8);
    }

    #[test]
    fn interval_minimizer_at_endpoint() {
        let (p, q) = asym1();
        let v = v_vector(&p, &q, 0.0, &[0.0], 64).unwrap()[0];
        let k = SupportSet::interval(-1.0, 1.0);
        let cert = minimize_over_k(&p, &q, 0.05, &k, 64, 8).unwrap();
        let want = if v > 0.0 { -1.0 } else { 1.0 };
        assert!((cert.zeta[0] - want).abs() < 1e-12, "{:?}", cert.zeta);
        assert!(cert.unique);
        // 1-d scan oracle.
        let scan = (0..=40)
            .map(|i| -1.0 + i as f64 / 20.0)
            .map(|z| band_bottom(&p, &q, 0.05, &[z], 64).unwrap().energy)
            .fold(f64::INFINITY, f64::min);
        assert!(cert.energy <= scan + 1e-14);
        let g = check_growth(&p, &q, 0.05, &k, &cert.zeta, 64, 200, 1).unwrap();
        let vl = v_vector(&p, &q, 0.05, &cert.zeta, 64).unwrap()[0];
        assert!((g.alpha0 - vl.abs() / 2.0).abs() < 1e-12);
        assert!(g.positive);
    }

    #[test]
    fn flat_objective() {
        let p = PeriodicPotential::cosine(1, &[1.0]).unwrap();
        let q = SingleSitePotential::zero(1);
        let cert = minimize_over_k(&p, &q, 0.1, &SupportSet::interval(-1.0, 1.0), 16, 8).unwrap();
        assert!(cert.flat && !cert.unique);
    }

    #[test]
    fn supporting_point_examples() {
        let k = SupportSet::interval(0.0, 1.0);
        assert!((supporting_margin(&k, &[1.0], 0.5, &[0.0], 100, 1)).abs() < 1e-15);
        let r = check_supporting_point(&k, &[1.0], 0.5, 100, 1).unwrap();
        assert_eq!(r.zeta0, Some(vec![0.0]));
        let point = SupportSet::point(&[0.3, 0.2]);
        assert!(check_supporting_point(&point, &[1.0, -2.0], 10.0, 10, 1).unwrap().pass());
        let ball = SupportSet::unit_ball(2);
        assert!(supporting_margin(&ball, &[1.0, 0.0], 0.1, &[0.0, 0.0], 400, 2) < 0.0);
        assert!(!check_supporting_point(&ball, &[1.0, 0.0], 0.1, 400, 2).unwrap().pass());
        let sq = SupportSet::cuboid(&[-1.0, -1.0], &[1.0, 1.0]);
        assert_eq!(check_supporting_point(&sq, &[1.0, 0.5], 0.2, 0, 0).unwrap().zeta0, Some(vec![-1.0, -1.0]));
    }

    #[test]
    fn curvature_reports() {
        assert_eq!(check_strict_convexity(&SupportSet::unit_ball(2)).unwrap().min_curvature, 1.0);
        assert!(!check_strict_convexity(&SupportSet::interval(-1.0, 1.0)).unwrap().pass);
    }

    #[test]
    fn decay_flags() {
        let rows = |f: fn(f64) -> f64| {
            [0.2, 0.1, 0.05].iter().map(|&l| DecayRow { lambda: l, energy: 0.0, ratio: f(l) }).collect::<Vec<_>>()
        };
        assert!(decay_summary(0.0, rows(|l| 0.3 + l)).pass);
        assert!(!decay_summary(0.0, rows(|l| 2.0 * l)).pass);
        assert!(!decay_summary(0.0, rows(|_| 0.0)).pass);
    }

    #[test]
    fn field_gradient_matches_differences() {
        let (p, q) = asym1();
        let w = DisplacementField::new(1, 1, vec![0.3, -0.6, 0.1]).unwrap();
        let (_, g) = field_energy_and_gradient(&p, &q, 0.2, &w, 16).unwrap();
        for s in 0..3 {
            let h = 1e-4;
            let mut a = w.clone();
            a.site_mut(s)[0] += h;
            let mut b = w.clone();
            b.site_mut(s)[0] -= h;
            let fd = (field_energy_and_gradient(&p, &q, 0.2, &a, 16).unwrap().0
                - field_energy_and_gradient(&p, &q, 0.2, &b, 16).unwrap().0)
                / (2.0 * h);
            assert!((fd - g[s]).abs() <= 1e-5 * g[s].abs().max(1e-3), "{fd} vs {}", g[s]);
        }
    }

    #[test]
    fn constant_field_small_torus() {
        let (p, q) = asym1();
        let r = constant_field_minimizer(&p, &q, 0.1, &SupportSet::interval(-1.0, 1.0), 1, 32, 8).unwrap();
        assert!(r.all_constant, "{:?}", r.site_deviation);
        assert!(r.value_matches);
    }
}
