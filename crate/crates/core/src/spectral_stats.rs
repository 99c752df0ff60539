//! Monte-Carlo spectral statistics: integrated density of states by inertia
//! counting, the IDS sandwich between the reduced models, Lifshitz-tail
//! exponent fits and Wegner-probability scaling.
//!
//! Per-sample work is exposed separately ([`IdsFamily::sample_counts`],
//! [`wegner_sample_hits`]) so callers can distribute samples and aggregate
//! with [`IdsCurve::from_counts`] and [`WegnerRecord::from_hits`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::assumptions::check_bottom_decay;
use crate::discretize::{assemble_periodic, GridSpec};
use crate::eigensolve::{dense_spectrum, smallest_eigenpairs, InertiaCounter};
use crate::geometry::SupportSet;
use crate::potentials::{DisplacementField, PeriodicPotential, SingleSitePotential};
use crate::randomfields::{sample_field, DisplacementDistribution};
use crate::reduced::{build_reduced, Sign};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

const RETRY_SHIFT: f64 = 1e-10;

/// Eigenvalue counts `#{μ ≤ E}` at each energy, retrying a failed
/// factorization once at `E + 1e-10`.
pub fn sample_counts(a: &CsrMatrix<f64>, energies: &[f64]) -> Result<Vec<usize>> {
    let counter = InertiaCounter::new(a);
    energies.iter().map(|&e| counter.count_below(e).or_else(|_| counter.count_below(e + RETRY_SHIFT))).collect()
}

/// The operator whose IDS is sampled.
#[derive(Clone, Copy, Debug)]
pub enum IdsFamily<'a> {
    /// `H^P_{λ,ω,n}` on the grid with `m` points per unit length.
    Continuum {
        p: &'a PeriodicPotential,
        q: &'a SingleSitePotential,
        m: usize,
    },
    Reduced {
        sign: Sign,
        v: &'a [f64],
        zeta: &'a [f64],
        c0: f64,
        alpha: f64,
    },
}

impl IdsFamily<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            IdsFamily::Continuum { .. } => "continuum",
            IdsFamily::Reduced { sign: Sign::Plus, .. } => "reduced-plus",
            IdsFamily::Reduced { sign: Sign::Minus, .. } => "reduced-minus",
        }
    }

    pub fn modes_per_cell(&self, dim: usize) -> usize {
        match self {
            IdsFamily::Continuum { m, .. } => m.pow(dim as u32),
            IdsFamily::Reduced { .. } => 1,
        }
    }

    pub fn operator(&self, lambda: f64, omega: &DisplacementField) -> Result<CsrMatrix<f64>> {
        match *self {
            IdsFamily::Continuum { p, q, m } => {
                let grid = GridSpec::new(omega.dim(), omega.n(), m)?;
                Ok(assemble_periodic(p, q, lambda, omega, grid)?.matrix)
            }
            IdsFamily::Reduced { sign, v, zeta, c0, alpha } => {
                Ok(build_reduced(sign, v, lambda, zeta, omega, c0, alpha)?.matrix)
            }
        }
    }

    pub fn sample_counts(&self, lambda: f64, omega: &DisplacementField, energies: &[f64]) -> Result<Vec<usize>> {
        sample_counts(&self.operator(lambda, omega)?, energies)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdsCurve {
    pub family: String,
    pub lambda: f64,
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    pub energies: Vec<f64>,
    /// `counts[s][i]` for sample `s` at `energies[i]`.
    pub counts: Vec<Vec<usize>>,
    pub modes: usize,
}

impl IdsCurve {
    pub fn from_counts(
        family: &str,
        lambda: f64,
        dim: usize,
        n: usize,
        seed: u64,
        energies: Vec<f64>,
        counts: Vec<Vec<usize>>,
        modes: usize,
    ) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InsufficientData("an IDS curve needs at least one sample".into()));
        }
        if energies.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("energy grid must be strictly ascending".into()));
        }
        if counts.iter().any(|c| c.len() != energies.len()) {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                found: counts.iter().map(Vec::len).find(|&l| l != energies.len()).unwrap_or(0),
            });
        }
        Ok(IdsCurve { family: family.into(), lambda, dim, n, seed, energies, counts, modes })
    }

    pub fn samples(&self) -> usize {
        self.counts.len()
    }

    /// `(2n+1)^d`, the number of unit cells.
    pub fn volume(&self) -> f64 {
        ((2 * self.n + 1) as f64).powi(self.dim as i32)
    }

    pub fn value(&self, i: usize) -> f64 {
        let s: usize = self.counts.iter().map(|c| c[i]).sum();
        s as f64 / (self.samples() as f64 * self.volume())
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.energies.len()).map(|i| self.value(i)).collect()
    }

    /// Standard error of the sample mean.
    pub fn stderr(&self, i: usize) -> f64 {
        let k = self.samples();
        if k < 2 {
            return 0.0;
        }
        let mean = self.value(i);
        let var = self
            .counts
            .iter()
            .map(|c| {
                let x = c[i] as f64 / self.volume() - mean;
                x * x
            })
            .sum::<f64>()
            / (k - 1) as f64;
        (var / k as f64).sqrt()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        (0..self.energies.len()).map(|i| self.stderr(i)).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.counts.iter().all(|c| c.windows(2).all(|w| w[0] <= w[1]))
    }

    /// `N` at the largest grid energy not above `e`, zero below the grid.
    pub fn value_at_or_below(&self, e: f64) -> f64 {
        match self.energies.iter().rposition(|&x| x <= e) {
            Some(i) => self.value(i),
            None => 0.0,
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ids_curve(
    family: &IdsFamily,
    lambda: f64,
    dist: &DisplacementDistribution,
    n: usize,
    samples: usize,
    energies: &[f64],
    seed: u64,
) -> Result<IdsCurve> {
    if samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let mut counts = Vec::with_capacity(samples);
    for s in 0..samples {
        let omega = sample_field(dist, n, seed, s as u64)?;
        counts.push(family.sample_counts(lambda, &omega, energies)?);
    }
    IdsCurve::from_counts(
        family.label(),
        lambda,
        dist.dim(),
        n,
        seed,
        energies.to_vec(),
        counts,
        family.modes_per_cell(dist.dim()),
    )
}

/// Parameters shared by the three curves of the IDS sandwich.
#[derive(Clone, Copy, Debug)]
pub struct SandwichSetup<'a> {
    pub p: &'a PeriodicPotential,
    pub q: &'a SingleSitePotential,
    pub lambda: f64,
    pub zeta: &'a [f64],
    pub v: &'a [f64],
    /// The band bottom `E(λ,ζ(λ))`.
    pub e_lambda: f64,
    pub c0: f64,
    pub alpha: f64,
    pub m: usize,
}

impl SandwichSetup<'_> {
    pub fn check_grid(&self, energies: &[f64]) -> Result<()> {
        let top = 1.0 / (self.c0 * self.c0);
        match energies.iter().find(|&&e| !(0.0..=top).contains(&e)) {
            Some(e) => Err(Error::InvalidParameter(format!("sandwich energy {e} outside [0, 1/C₀²] = [0, {top}]"))),
            None => Ok(()),
        }
    }

    /// Counts of `h⁺` at `E/C₀`, of `H` at `E_λ + E` and of `h⁻` at `C₀E`
    /// for one field.
    pub fn sample_counts(&self, omega: &DisplacementField, energies: &[f64]) -> Result<[Vec<usize>; 3]> {
        let plus = IdsFamily::Reduced { sign: Sign::Plus, v: self.v, zeta: self.zeta, c0: self.c0, alpha: self.alpha };
        let minus =
            IdsFamily::Reduced { sign: Sign::Minus, v: self.v, zeta: self.zeta, c0: self.c0, alpha: self.alpha };
        let cont = IdsFamily::Continuum { p: self.p, q: self.q, m: self.m };
        let e_plus: Vec<f64> = energies.iter().map(|e| e / self.c0).collect();
        let e_mid: Vec<f64> = energies.iter().map(|e| self.e_lambda + e).collect();
        let e_minus: Vec<f64> = energies.iter().map(|e| e * self.c0).collect();
        Ok([
            plus.sample_counts(self.lambda, omega, &e_plus)?,
            cont.sample_counts(self.lambda, omega, &e_mid)?,
            minus.sample_counts(self.lambda, omega, &e_minus)?,
        ])
    }
}

#[derive(Clone, Debug)]
pub struct IdsSandwich {
    pub energies: Vec<f64>,
    pub plus: IdsCurve,
    pub middle: IdsCurve,
    pub minus: IdsCurve,
    /// `(sample, energy index)` pairs where the per-sample chain fails.
    pub sample_violations: usize,
    /// Largest `N⁺ - N` and `N - N⁻` measured in units of the combined
    /// standard error (zero error counts as infinitely many σ when positive).
    pub worst_sigma: f64,
    pub pass: bool,
}

impl IdsSandwich {
    pub fn from_counts(
        setup: &SandwichSetup,
        dim: usize,
        n: usize,
        seed: u64,
        energies: &[f64],
        per_sample: Vec<[Vec<usize>; 3]>,
    ) -> Result<Self> {
        let mut cols: [Vec<Vec<usize>>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut sample_violations = 0;
        for s in per_sample {
            for i in 0..energies.len() {
                if s[0][i] > s[1][i] || s[1][i] > s[2][i] {
                    sample_violations += 1;
                }
            }
            for (c, v) in cols.iter_mut().zip(s) {
                c.push(v);
            }
        }
        let [a, b, c] = cols;
        let plus = IdsCurve::from_counts("reduced-plus", setup.lambda, dim, n, seed, energies.to_vec(), a, 1)?;
        let middle = IdsCurve::from_counts(
            "continuum",
            setup.lambda,
            dim,
            n,
            seed,
            energies.to_vec(),
            b,
            setup.m.pow(dim as u32),
        )?;
        let minus = IdsCurve::from_counts("reduced-minus", setup.lambda, dim, n, seed, energies.to_vec(), c, 1)?;
        let mut worst = f64::NEG_INFINITY;
        let mut pass = true;
        for i in 0..energies.len() {
            for (lo, hi) in [(&plus, &middle), (&middle, &minus)] {
                let excess = lo.value(i) - hi.value(i);
                let sigma = (lo.stderr(i).powi(2) + hi.stderr(i).powi(2)).sqrt();
                let z = if sigma > 0.0 {
                    excess / sigma
                } else if excess > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                worst = worst.max(z);
                pass &= z <= 3.0;
            }
        }
        Ok(IdsSandwich {
            energies: energies.to_vec(),
            plus,
            middle,
            minus,
            sample_violations,
            worst_sigma: worst,
            pass,
        })
    }
}

/// `N⁺(E/C₀) ≤ N(E_λ + E) ≤ N⁻(C₀E)` checked pointwise within 3σ; the same
/// field feeds all three curves.
pub fn ids_sandwich_check(
    setup: &SandwichSetup,
    dist: &DisplacementDistribution,
    n: usize,
    samples: usize,
    energies: &[f64],
    seed: u64,
) -> Result<IdsSandwich> {
    setup.check_grid(energies)?;
    let mut per_sample = Vec::with_capacity(samples);
    for s in 0..samples {
        let omega = sample_field(dist, n, seed, s as u64)?;
        per_sample.push(setup.sample_counts(&omega, energies)?);
    }
    IdsSandwich::from_counts(setup, dist.dim(), n, seed, energies, per_sample)
}

/// Least-squares line through `(x, y)`: `(slope, intercept, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, (rss / k).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LifshitzFit {
    /// Slope of `log|log(N - N_b)|` against `log(E - E_b)`.
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// The same slope over the half of the points nearest the bottom.
    pub half_window_slope: f64,
    /// Slope and residual of the competing power law `log(N - N_b)` against
    /// `log(E - E_b)`.
    pub power_exponent: f64,
    pub power_residual: f64,
    pub points: usize,
    /// The power law fits at least as well as the double-log law.
    pub no_lifshitz: bool,
}

pub fn lifshitz_fit_points(
    energies: &[f64],
    values: &[f64],
    e_bottom: f64,
    n_bottom: f64,
    window: (f64, f64),
) -> Result<LifshitzFit> {
    let (lo, hi) = window;
    let inside: Vec<(f64, f64)> = energies
        .iter()
        .zip(values)
        .filter(|(e, _)| **e > e_bottom && **e >= lo && **e <= hi)
        .map(|(&e, &v)| (e, v))
        .collect();
    if inside.is_empty() {
        return Err(Error::InsufficientData(format!("no grid energies in the window [{lo}, {hi}]")));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut yp = Vec::new();
    for (e, v) in inside {
        let dn = v - n_bottom;
        if dn <= 0.0 {
            continue;
        }
        let outer = dn.ln().abs().ln();
        if outer.is_finite() {
            x.push((e - e_bottom).ln());
            y.push(outer);
            yp.push(dn.ln());
        }
    }
    if x.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "only {} window points with N above N(E_bottom); need 6",
            x.len()
        )));
    }
    let (slope, intercept, residual) = linear_fit(&x, &y);
    let half = (x.len() / 2).max(3);
    let half_window_slope = linear_fit(&x[..half], &y[..half]).0;
    let (power_exponent, _, power_residual) = linear_fit(&x, &yp);
    Ok(LifshitzFit {
        slope,
        intercept,
        residual,
        half_window_slope,
        power_exponent,
        power_residual,
        points: x.len(),
        no_lifshitz: power_residual <= residual,
    })
}

pub fn lifshitz_fit(ids: &IdsCurve, e_bottom: f64, window: (f64, f64)) -> Result<LifshitzFit> {
    lifshitz_fit_points(&ids.energies, &ids.values(), e_bottom, ids.value_at_or_below(e_bottom), window)
}

/// `points` energies log-spaced from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).collect(),
    }
}

/// Grid energies where the tail is resolved: at least `min_counts`
/// eigenvalues over all samples and `N ≤ n_max`. Returns the first and last
/// such energy together with their outer grid neighbours, the bracket for a
/// refined grid.
pub fn tail_window(ids: &IdsCurve, min_counts: usize, n_max: f64) -> Option<((f64, f64), (f64, f64))> {
    let floor = min_counts as f64 / (ids.samples() as f64 * ids.volume());
    let vals = ids.values();
    let inside: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] >= floor && vals[i] <= n_max).collect();
    let (&a, &b) = (inside.first()?, inside.last()?);
    let e = &ids.energies;
    Some(((e[a], e[b]), (e[a.saturating_sub(1)], e[(b + 1).min(e.len() - 1)])))
}

/// The window `[E_λ, E_λ + λ/C]` below the unperturbed band bottom `E₀`;
/// the decay constant makes its width `E₀ - E_λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WegnerWindow {
    pub e0: f64,
    pub e_lambda: f64,
}

impl WegnerWindow {
    pub fn width(&self) -> f64 {
        self.e0 - self.e_lambda
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.e0 + self.e_lambda)
    }

    /// `points` log-spaced `ε` from `start·width` over `decades` decades.
    pub fn eps_list(&self, start: f64, decades: f64, points: usize) -> Vec<f64> {
        let lo = start * self.width();
        log_grid(lo, lo * 10f64.powf(decades), points)
    }
}

pub fn wegner_window(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    k: &SupportSet,
    m: usize,
    restarts: usize,
) -> Result<WegnerWindow> {
    let table = check_bottom_decay(p, q, &[lambda], k, m, restarts)?;
    let w = WegnerWindow { e0: table.e0, e_lambda: table.rows[0].energy };
    if !(w.width() > 0.0) {
        return Err(Error::InvalidParameter(format!("empty window: E₀ - E_λ = {}", w.width())));
    }
    Ok(w)
}

/// A spectral hit within `ε` of `E`: `#{μ ≤ E+ε} > #{μ ≤ E-ε}`.
pub fn wegner_hit(counter: &InertiaCounter, e: f64, eps: f64) -> Result<bool> {
    let above = counter.count_below(e + eps).or_else(|_| counter.count_below(e + eps + RETRY_SHIFT))?;
    let below = counter.count_below(e - eps).or_else(|_| counter.count_below(e - eps + RETRY_SHIFT))?;
    Ok(above > below)
}

#[allow(clippy::too_many_arguments)]
pub fn wegner_sample_hits(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    omega: &DisplacementField,
    m: usize,
    e: f64,
    eps: &[f64],
) -> Result<Vec<bool>> {
    let grid = GridSpec::new(omega.dim(), omega.n(), m)?;
    let a = assemble_periodic(p, q, lambda, omega, grid)?.matrix;
    let counter = InertiaCounter::new(&a);
    eps.iter().map(|&x| wegner_hit(&counter, e, x)).collect()
}

/// Sample index for sample `s` of the torus with parameter `n`, so that
/// different volumes draw independent fields.
pub fn wegner_sample_index(n: usize, s: usize) -> u64 {
    ((n as u64) << 32) | s as u64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeEstimate {
    pub value: f64,
    /// Two standard errors, `NaN` without residual degrees of freedom.
    pub halfwidth: f64,
    pub points: usize,
}

/// Common slope of several groups of points with group-specific intercepts.
pub fn fixed_effects_slope(groups: &[Vec<(f64, f64)>]) -> Option<SlopeEstimate> {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut centred = Vec::new();
    let mut used_groups = 0;
    for g in groups.iter().filter(|g| g.len() >= 2) {
        used_groups += 1;
        let k = g.len() as f64;
        let mx = g.iter().map(|p| p.0).sum::<f64>() / k;
        let my = g.iter().map(|p| p.1).sum::<f64>() / k;
        for &(x, y) in g {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
            centred.push((x - mx, y - my));
        }
    }
    if sxx <= 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let dof = centred.len() as i64 - used_groups - 1;
    let halfwidth = if dof > 0 {
        let rss: f64 = centred.iter().map(|(x, y)| (y - b * x).powi(2)).sum();
        2.0 * (rss / dof as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(SlopeEstimate { value: b, halfwidth, points: centred.len() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WegnerRecord {
    pub energy: f64,
    pub lambda: f64,
    pub dim: usize,
    pub eps: Vec<f64>,
    pub ns: Vec<usize>,
    /// `hits[j][i]` for `ns[j]` and `eps[i]`.
    pub hits: Vec<Vec<usize>>,
    pub samples: usize,
    /// Slope of `log p̂` in `log ε`, one intercept per `n`.
    pub nu: Option<SlopeEstimate>,
    /// Slope of `log p̂` in `log(2n+1)`, one intercept per `ε`.
    pub d: Option<SlopeEstimate>,
    /// Indices `j` whose whole row has no hits.
    pub zero_rows: Vec<usize>,
    /// Every empirical probability is 0 or 1.
    pub atomic: bool,
}

impl WegnerRecord {
    pub fn from_hits(
        energy: f64,
        lambda: f64,
        dim: usize,
        eps: Vec<f64>,
        ns: Vec<usize>,
        hits: Vec<Vec<usize>>,
        samples: usize,
    ) -> Result<Self> {
        if samples == 0 || hits.len() != ns.len() || hits.iter().any(|r| r.len() != eps.len()) {
            return Err(Error::InvalidParameter("hit table does not match the ε and n lists".into()));
        }
        let prob = |j: usize, i: usize| hits[j][i] as f64 / samples as f64;
        let by_n: Vec<Vec<(f64, f64)>> = (0..ns.len())
            .map(|j| (0..eps.len()).filter(|&i| hits[j][i] > 0).map(|i| (eps[i].ln(), prob(j, i).ln())).collect())
            .collect();
        let by_eps: Vec<Vec<(f64, f64)>> = (0..eps.len())
            .map(|i| {
                (0..ns.len())
                    .filter(|&j| hits[j][i] > 0)
                    .map(|j| (((2 * ns[j] + 1) as f64).ln(), prob(j, i).ln()))
                    .collect()
            })
            .collect();
        let zero_rows = (0..ns.len()).filter(|&j| hits[j].iter().all(|&h| h == 0)).collect();
        let atomic = hits.iter().flatten().all(|&h| h == 0 || h == samples);
        Ok(WegnerRecord {
            energy,
            lambda,
            dim,
            nu: fixed_effects_slope(&by_n),
            d: fixed_effects_slope(&by_eps),
            eps,
            ns,
            hits,
            samples,
            zero_rows,
            atomic,
        })
    }

    pub fn probability(&self, j: usize, i: usize) -> f64 {
        self.hits[j][i] as f64 / self.samples as f64
    }

    pub fn stderr(&self, j: usize, i: usize) -> f64 {
        let p = self.probability(j, i);
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }

    /// Nondecreasing in `ε` for every `n` up to 3σ of binomial noise.
    pub fn is_monotone(&self) -> bool {
        (0..self.ns.len()).all(|j| {
            (1..self.eps.len()).all(|i| {
                let drop = self.probability(j, i - 1) - self.probability(j, i);
                let s = (self.stderr(j, i - 1).powi(2) + self.stderr(j, i).powi(2)).sqrt();
                drop <= 3.0 * s
            })
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn wegner_scan(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    dist: &DisplacementDistribution,
    e: f64,
    eps: &[f64],
    ns: &[usize],
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<WegnerRecord> {
    if eps.iter().any(|&x| !(x > 0.0)) || eps.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("ε-list must be positive and ascending".into()));
    }
    let mut hits = vec![vec![0usize; eps.len()]; ns.len()];
    for (j, &n) in ns.iter().enumerate() {
        for s in 0..samples {
            let omega = sample_field(dist, n, seed, wegner_sample_index(n, s))?;
            for (h, hit) in hits[j].iter_mut().zip(wegner_sample_hits(p, q, lambda, &omega, m, e, eps)?) {
                *h += hit as usize;
            }
        }
    }
    WegnerRecord::from_hits(e, lambda, dist.dim(), eps.to_vec(), ns.to_vec(), hits, samples)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WegnerAudit {
    pub instances: usize,
    pub agree: usize,
}

/// Hit detector against `min |μ - E| ≤ ε` from the dense spectrum.
#[allow(clippy::too_many_arguments)]
pub fn wegner_audit(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    dist: &DisplacementDistribution,
    e: f64,
    eps: &[f64],
    n: usize,
    m: usize,
    instances: usize,
    seed: u64,
) -> Result<WegnerAudit> {
    let grid = GridSpec::new(dist.dim(), n, m)?;
    let mut agree = 0;
    for s in 0..instances {
        let omega = sample_field(dist, n, seed, s as u64)?;
        let a = assemble_periodic(p, q, lambda, &omega, grid)?.matrix;
        let counter = InertiaCounter::new(&a);
        let spec = dense_spectrum(&a);
        let x = eps[s % eps.len()];
        let dense = spec.iter().any(|mu| (mu - e).abs() <= x);
        agree += (wegner_hit(&counter, e, x)? == dense) as usize;
    }
    Ok(WegnerAudit { instances, agree })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderReport {
    pub exponent: f64,
    /// `max (|ΔN| - 3σ)₊ / |ΔE|^β` over pairs of grid points in the window.
    pub constant: f64,
    /// The same quotient for the window end points.
    pub global: f64,
    pub pass: bool,
}

/// Empirical `|N(E₁) - N(E₂)| ≤ C|E₁ - E₂|^β` over the window: the worst
/// pairwise quotient may exceed the end-point quotient by at most a factor 10.
pub fn holder_check(ids: &IdsCurve, window: (f64, f64), exponent: f64) -> Result<HolderReport> {
    let idx: Vec<usize> =
        (0..ids.energies.len()).filter(|&i| ids.energies[i] >= window.0 && ids.energies[i] <= window.1).collect();
    if idx.len() < 2 {
        return Err(Error::InsufficientData("Hölder check needs two energies in the window".into()));
    }
    let vals = ids.values();
    let errs = ids.stderrs();
    let mut constant = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let dn = (vals[j] - vals[i]).abs() - 3.0 * (errs[i].powi(2) + errs[j].powi(2)).sqrt();
            constant = constant.max(dn.max(0.0) / (ids.energies[j] - ids.energies[i]).powf(exponent));
        }
    }
    let (f, l) = (idx[0], idx[idx.len() - 1]);
    let global = (vals[l] - vals[f]).abs() / (ids.energies[l] - ids.energies[f]).powf(exponent);
    Ok(HolderReport { exponent, constant, global, pass: constant <= 10.0 * global.max(f64::MIN_POSITIVE) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ELambdaEstimate {
    pub min_ground: f64,
    pub spread: f64,
    pub samples: usize,
    /// `min - 3·spread/√samples`.
    pub estimate: f64,
    /// `E(λ,ζ(λ))` from the minimizer certificate, when known.
    pub certificate: Option<f64>,
}

pub fn e_lambda_estimate(grounds: &[f64], certificate: Option<f64>) -> Result<ELambdaEstimate> {
    if grounds.len() < 2 {
        return Err(Error::InsufficientData("E_λ estimate needs at least two samples".into()));
    }
    let k = grounds.len() as f64;
    let mean = grounds.iter().sum::<f64>() / k;
    let spread = (grounds.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let min_ground = grounds.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ELambdaEstimate {
        min_ground,
        spread,
        samples: grounds.len(),
        estimate: min_ground - 3.0 * spread / k.sqrt(),
        certificate,
    })
}

pub fn sample_ground(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    omega: &DisplacementField,
    m: usize,
) -> Result<f64> {
    let grid = GridSpec::new(omega.dim(), omega.n(), m)?;
    let a = assemble_periodic(p, q, lambda, omega, grid)?.matrix;
    Ok(smallest_eigenpairs(&a, 1, 1e-10)?.eigenvalues[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::builtin_single_site;

    fn ring_dist() -> DisplacementDistribution {
        DisplacementDistribution::uniform_ball(1, 1.0)
    }

    #[test]
    fn deterministic_ids_has_no_variance() {
        let p = PeriodicPotential::cosine(1, &[1.0]).unwrap();
        let q = SingleSitePotential::zero(1);
        let fam = IdsFamily::Continuum { p: &p, q: &q, m: 8 };
        let e: Vec<f64> = (0..10).map(|i| -1.0 + 5.0 * i as f64).collect();
        let c = ids_curve(&fam, 0.1, &ring_dist(), 1, 5, &e, 3).unwrap();
        assert!(c.is_monotone());
        assert!(c.stderrs().iter().all(|&s| s == 0.0));
        let omega = DisplacementField::zeros(1, 1);
        let spec = dense_spectrum(&fam.operator(0.1, &omega).unwrap());
        for (i, &x) in e.iter().enumerate() {
            let want = spec.iter().filter(|&&mu| mu <= x).count() as f64 / 3.0;
            assert_eq!(c.value(i), want);
        }
    }

    #[test]
    fn reduced_constant_field_jumps_at_ring_levels() {
        let omega = DisplacementField::constant(2, &[0.3]);
        let fam = IdsFamily::Reduced { sign: Sign::Minus, v: &[0.5], zeta: &[0.3], c0: 2.0, alpha: 0.1 };
        let c = 0.5;
        let levels: Vec<f64> =
            (0..5).map(|k| c * (1.0 - (2.0 * core::f64::consts::PI * k as f64 / 5.0).cos())).collect();
        for &lv in &levels {
            let below = fam.sample_counts(0.2, &omega, &[lv - 1e-9]).unwrap()[0];
            let at = fam.sample_counts(0.2, &omega, &[lv + 1e-9]).unwrap()[0];
            let mult = levels.iter().filter(|&&x| (x - lv).abs() < 1e-12).count();
            assert_eq!(at - below, mult);
        }
    }

    #[test]
    fn sandwich_rejects_energies_above_range() {
        let p = PeriodicPotential::zero(1);
        let q = SingleSitePotential::zero(1);
        let s = SandwichSetup {
            p: &p,
            q: &q,
            lambda: 0.1,
            zeta: &[0.0],
            v: &[0.0],
            e_lambda: 0.0,
            c0: 2.0,
            alpha: 1.0,
            m: 8,
        };
        assert!(s.check_grid(&[0.0, 0.25]).is_ok());
        assert!(s.check_grid(&[0.3]).is_err());
    }

    #[test]
    fn tail_window_brackets_resolved_points() {
        let energies: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let counts = vec![vec![0, 0, 1, 5, 50, 90]];
        let c = IdsCurve::from_counts("test", 0.0, 1, 49, 0, energies, counts, 1).unwrap();
        let (win, bracket) = tail_window(&c, 2, 0.6).unwrap();
        assert_eq!(win, (3.0, 4.0));
        assert_eq!(bracket, (2.0, 5.0));
        assert!(tail_window(&c, 1000, 0.5).is_none());
    }

    #[test]
    fn synthetic_lifshitz_curves() {
        for d in [1usize, 2, 3] {
            let e0 = 0.7;
            let e: Vec<f64> = (0..40).map(|i| e0 + 10f64.powf(-3.0 + 2.0 * i as f64 / 39.0)).collect();
            let n: Vec<f64> = e.iter().map(|x| (-(x - e0).powf(-(d as f64) / 2.0)).exp()).collect();
            let fit = lifshitz_fit_points(&e, &n, e0, 0.0, (e0, e0 + 1.0)).unwrap();
            assert!((fit.slope + d as f64 / 2.0).abs() < 0.02, "{fit:?}");
            assert!(!fit.no_lifshitz);
        }
    }

    #[test]
    fn van_hove_is_flagged() {
        let e: Vec<f64> = (1..30).map(|i| i as f64 * 0.01).collect();
        let n: Vec<f64> = e.iter().map(|x| x.sqrt()).collect();
        let fit = lifshitz_fit_points(&e, &n, 0.0, 0.0, (0.0, 1.0)).unwrap();
        assert!(fit.no_lifshitz, "{fit:?}");
        assert!((fit.power_exponent - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lifshitz_errors() {
        let e = [1.0, 2.0, 3.0];
        assert!(lifshitz_fit_points(&e, &[0.1, 0.2, 0.3], 0.0, 0.0, (5.0, 6.0)).is_err());
        assert!(lifshitz_fit_points(&e, &[0.0, 0.0, 0.0], 0.0, 0.0, (0.0, 6.0)).is_err());
    }

    #[test]
    fn huge_window_always_hits() {
        let p = PeriodicPotential::cosine(1, &[1.0]).unwrap();
        let q = builtin_single_site("asym-bump", 1).unwrap();
        let rec = wegner_scan(&p, &q, 0.1, &ring_dist(), 1.0, &[1e5], &[1], 8, 6, 2).unwrap();
        assert_eq!(rec.hits, vec![vec![6]]);
        assert!(rec.atomic);
    }

    #[test]
    fn deterministic_operator_is_atomic() {
        let p = PeriodicPotential::cosine(1, &[1.0]).unwrap();
        let q = SingleSitePotential::zero(1);
        let eps: Vec<f64> = (0..6).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect();
        let rec = wegner_scan(&p, &q, 0.1, &ring_dist(), 0.4, &eps, &[1, 2], 8, 4, 9).unwrap();
        assert!(rec.atomic);
        assert!(rec.is_monotone());
    }

    #[test]
    fn hit_detector_matches_dense() {
        let p = PeriodicPotential::cosine(1, &[1.0]).unwrap();
        let q = builtin_single_site("asym-bump", 1).unwrap();
        let eps = [0.003, 0.01, 0.03, 0.1];
        let audit = wegner_audit(&p, &q, 0.1, &ring_dist(), 0.3, &eps, 1, 8, 20, 4).unwrap();
        assert_eq!(audit.agree, audit.instances);
    }

    #[test]
    fn fixed_effects_recovers_common_slope() {
        let groups: Vec<Vec<(f64, f64)>> =
            (0..3).map(|g| (0..5).map(|i| (i as f64, 0.9 * i as f64 + g as f64 * 3.0)).collect()).collect();
        let s = fixed_effects_slope(&groups).unwrap();
        assert!((s.value - 0.9).abs() < 1e-12);
        assert!(s.halfwidth < 1e-6);
        assert!(fixed_effects_slope(&[vec![(0.0, 1.0)]]).is_none());
    }

    #[test]
    fn e_lambda_estimate_sits_below_minimum() {
        let est = e_lambda_estimate(&[1.0, 1.2, 1.1, 1.3], Some(0.9)).unwrap();
        assert_eq!(est.min_ground, 1.0);
        assert!(est.estimate < 1.0);
        assert!(e_lambda_estimate(&[1.0], None).is_err());
    }

    #[test]
    fn linear_ids_is_holder() {
        let energies: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let counts = vec![(0..11).map(|i| i * 3).collect::<Vec<usize>>()];
        let c = IdsCurve::from_counts("test", 0.0, 1, 1, 0, energies, counts, 100).unwrap();
        let h = holder_check(&c, (0.0, 1.0), 0.8).unwrap();
        assert!(h.pass, "{h:?}");
    }
}
