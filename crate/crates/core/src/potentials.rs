//! The periodic background `p`, the compactly supported single-site
//! potential `q`, displacement fields, and the displaced total potential.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::SupportSet;
use crate::torus::TorusShape;
use crate::{Error, Result};

/// Largest spatial dimension supported by the fixed-size scratch buffers.
pub const MAX_DIM: usize = 3;

/// Family name plus numeric parameters; the unit of potential configuration.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Descriptor {
    pub family: String,
    pub params: BTreeMap<String, Vec<f64>>,
}

impl Descriptor {
    pub fn new(family: &str) -> Self {
        Descriptor { family: family.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, values: &[f64]) -> Self {
        self.params.insert(key.to_string(), values.to_vec());
        self
    }

    fn scalar(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) if v.len() == 1 => Ok(v[0]),
            Some(v) => Err(Error::InvalidParameter(format!("`{key}` expects one value, got {}", v.len()))),
        }
    }

    /// Writes `key = value` lines, lists as `[a, b]`, keys sorted.
    pub fn write_block<W: fmt::Write>(&self, out: &mut W) -> fmt::Result {
        writeln!(out, "family = \"{}\"", self.family)?;
        for (k, v) in &self.params {
            write!(out, "{k} = [")?;
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    write!(out, ", ")?;
                }
                write!(out, "{x:?}")?;
            }
            writeln!(out, "]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum PeriodicFamily {
    Zero,
    /// `Σ_j c_j cos(2π x_j)`
    Cosine(Vec<f64>),
}

/// A real, bounded, `Z^d`-periodic potential.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicPotential {
    dim: usize,
    family: PeriodicFamily,
    descriptor: Descriptor,
}

impl PeriodicPotential {
    pub fn zero(dim: usize) -> Self {
        PeriodicPotential { dim, family: PeriodicFamily::Zero, descriptor: Descriptor::new("zero") }
    }

    /// `Σ_j c_j cos(2π x_j)`; a single coefficient is broadcast to every axis.
    pub fn cosine(dim: usize, coeffs: &[f64]) -> Result<Self> {
        let c = broadcast(dim, coeffs, "coeffs")?;
        Ok(PeriodicPotential {
            dim,
            family: PeriodicFamily::Cosine(c),
            descriptor: Descriptor::new("cosine").with("coeffs", coeffs),
        })
    }

    pub fn from_descriptor(dim: usize, desc: &Descriptor) -> Result<Self> {
        check_dim(dim)?;
        match desc.family.as_str() {
            "zero" => Ok(Self::zero(dim)),
            "cosine" => {
                let coeffs = desc.params.get("coeffs").cloned().unwrap_or(vec![1.0]);
                Self::cosine(dim, &coeffs)
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn is_constant(&self) -> bool {
        match &self.family {
            PeriodicFamily::Zero => true,
            PeriodicFamily::Cosine(c) => c.iter().all(|&x| x == 0.0),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.family {
            PeriodicFamily::Zero => 0.0,
            PeriodicFamily::Cosine(c) => c.iter().zip(x).map(|(c, x)| c * (2.0 * PI * x).cos()).sum(),
        }
    }
}

/// One smooth bump `w · exp(1 / (|y|² - 1))`, `y = (x - center) / radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub weight: f64,
}

impl Bump {
    fn scaled(&self, x: &[f64], y: &mut [f64; MAX_DIM]) -> f64 {
        let mut s = 0.0;
        for (j, (xj, cj)) in x.iter().zip(&self.center).enumerate() {
            y[j] = (xj - cj) / self.radius;
            s += y[j] * y[j];
        }
        s
    }
}

// exp(1/(s-1)) underflows long before the derivative factors overflow.
const BUMP_CUTOFF: f64 = -700.0;

/// A `C^∞` single-site potential supported in a ball of radius `r_q < 1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleSitePotential {
    dim: usize,
    amplitude: f64,
    bumps: Vec<Bump>,
    support_radius: f64,
    descriptor: Descriptor,
}

impl SingleSitePotential {
    pub fn zero(dim: usize) -> Self {
        SingleSitePotential {
            dim,
            amplitude: 0.0,
            bumps: Vec::new(),
            support_radius: 0.0,
            descriptor: Descriptor::new("zero"),
        }
    }

    pub fn from_bumps(dim: usize, amplitude: f64, bumps: Vec<Bump>) -> Result<Self> {
        check_dim(dim)?;
        let mut support_radius: f64 = 0.0;
        for b in &bumps {
            if b.center.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.center.len() });
            }
            if !(b.radius > 0.0) {
                return Err(Error::InvalidParameter("bump radius must be positive".into()));
            }
            let c: f64 = b.center.iter().map(|c| c * c).sum::<f64>().sqrt();
            support_radius = support_radius.max(c + b.radius);
        }
        if support_radius >= 0.5 {
            return Err(Error::InvalidParameter(format!("support radius {support_radius} must be below 1/2")));
        }
        Ok(SingleSitePotential { dim, amplitude, bumps, support_radius, descriptor: Descriptor::new("custom") })
    }

    /// Reflection-symmetric bump `ε exp(1/(|x/r|² - 1))`.
    pub fn symmetric_bump(dim: usize, eps: f64, radius: f64) -> Result<Self> {
        let mut q = Self::from_bumps(dim, eps, vec![Bump { center: vec![0.0; dim], radius, weight: 1.0 }])?;
        q.descriptor = Descriptor::new("sym-bump").with("eps", &[eps]).with("radius", &[radius]);
        Ok(q)
    }

    /// Symmetric bump plus a second bump of relative weight `scale` and radius
    /// `radius2` centred at `shift·e₁`, breaking the reflection `x₁ ↦ -x₁`.
    pub fn asymmetric_bump(dim: usize, eps: f64, radius: f64, shift: f64, scale: f64, radius2: f64) -> Result<Self> {
        let mut q = Self::from_bumps(
            dim,
            eps,
            vec![
                Bump { center: vec![0.0; dim], radius, weight: 1.0 },
                Bump {
                    center: {
                        let mut c = vec![0.0; dim];
                        c[0] = shift;
                        c
                    },
                    radius: radius2,
                    weight: scale,
                },
            ],
        )?;
        q.descriptor = Descriptor::new("asym-bump")
            .with("eps", &[eps])
            .with("radius", &[radius])
            .with("shift", &[shift])
            .with("scale", &[scale])
            .with("radius2", &[radius2]);
        Ok(q)
    }

    pub fn from_descriptor(dim: usize, desc: &Descriptor) -> Result<Self> {
        check_dim(dim)?;
        match desc.family.as_str() {
            "zero" => Ok(Self::zero(dim)),
            "sym-bump" => Self::symmetric_bump(dim, desc.scalar("eps", 1.0)?, desc.scalar("radius", 0.3)?),
            "asym-bump" => Self::asymmetric_bump(
                dim,
                desc.scalar("eps", 1.0)?,
                desc.scalar("radius", 0.2)?,
                desc.scalar("shift", 0.2)?,
                desc.scalar("scale", 2.0)?,
                desc.scalar("radius2", 0.25)?,
            ),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0 || self.bumps.iter().all(|b| b.weight == 0.0)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut y = [0.0; MAX_DIM];
        let mut acc = 0.0;
        for b in &self.bumps {
            let s = b.scaled(x, &mut y);
            if s < 1.0 {
                let g = 1.0 / (s - 1.0);
                if g > BUMP_CUTOFF {
                    acc += b.weight * g.exp();
                }
            }
        }
        self.amplitude * acc
    }

    /// Writes `∇q(x)` into `out[..dim]`.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out[..self.dim].iter_mut().for_each(|o| *o = 0.0);
        let mut y = [0.0; MAX_DIM];
        for b in &self.bumps {
            let s = b.scaled(x, &mut y);
            if s >= 1.0 {
                continue;
            }
            let g = 1.0 / (s - 1.0);
            if g <= BUMP_CUTOFF {
                continue;
            }
            // d/ds exp(1/(s-1)) = -exp(..)/(s-1)^2 ; ds/dx_j = 2 y_j / r
            let dbds = -g.exp() * g * g;
            for j in 0..self.dim {
                out[j] += self.amplitude * b.weight * dbds * 2.0 * y[j] / b.radius;
            }
        }
    }

    /// Writes the row-major `d × d` Hessian into `out[..dim*dim]`.
    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out[..d * d].iter_mut().for_each(|o| *o = 0.0);
        let mut y = [0.0; MAX_DIM];
        for b in &self.bumps {
            let s = b.scaled(x, &mut y);
            if s >= 1.0 {
                continue;
            }
            let g = 1.0 / (s - 1.0);
            if g <= BUMP_CUTOFF {
                continue;
            }
            let e = g.exp();
            let dbds = -e * g * g;
            let d2bds2 = e * (g.powi(4) + 2.0 * g.powi(3));
            let w = self.amplitude * b.weight;
            let r2 = b.radius * b.radius;
            for i in 0..d {
                for j in 0..d {
                    let mut h = d2bds2 * 4.0 * y[i] * y[j] / r2;
                    if i == j {
                        h += dbds * 2.0 / r2;
                    }
                    out[i * d + j] += w * h;
                }
            }
        }
    }
}

/// Named (p, q) pairs shipped with the crate.
pub fn builtin_families(dim: usize) -> Result<Vec<(&'static str, PeriodicPotential, SingleSitePotential)>> {
    check_dim(dim)?;
    Ok(vec![
        ("free", PeriodicPotential::zero(dim), SingleSitePotential::zero(dim)),
        ("cosine-sym", PeriodicPotential::cosine(dim, &[1.0])?, SingleSitePotential::symmetric_bump(dim, 1.0, 0.3)?),
        (
            "cosine-asym",
            PeriodicPotential::cosine(dim, &[1.0])?,
            SingleSitePotential::from_descriptor(dim, &Descriptor::new("asym-bump"))?,
        ),
    ])
}

/// Looks up a single family by name with default parameters.
pub fn builtin_periodic(name: &str, dim: usize) -> Result<PeriodicPotential> {
    PeriodicPotential::from_descriptor(dim, &Descriptor::new(name))
}

pub fn builtin_single_site(name: &str, dim: usize) -> Result<SingleSitePotential> {
    SingleSitePotential::from_descriptor(dim, &Descriptor::new(name))
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidParameter(format!("dimension {dim} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

fn broadcast(dim: usize, v: &[f64], what: &str) -> Result<Vec<f64>> {
    check_dim(dim)?;
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        l if l == dim => Ok(v.to_vec()),
        l => Err(Error::InvalidParameter(format!("`{what}` has {l} entries for dimension {dim}"))),
    }
}

/// A configuration `ω ∈ K^{(2n+1)^d}` on the discrete torus.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    n: usize,
    dim: usize,
    entries: Vec<f64>,
    support: Option<SupportSet>,
}

impl DisplacementField {
    /// `entries` holds `(2n+1)^d` consecutive `d`-vectors in torus order.
    pub fn new(n: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        let sites = TorusShape::sites(dim, n).len();
        if entries.len() != sites * dim {
            return Err(Error::DimensionMismatch { expected: sites * dim, found: entries.len() });
        }
        Ok(DisplacementField { n, dim, entries, support: None })
    }

    pub fn constant(n: usize, zeta: &[f64]) -> Self {
        let dim = zeta.len();
        let sites = TorusShape::sites(dim, n).len();
        let mut entries = Vec::with_capacity(sites * dim);
        for _ in 0..sites {
            entries.extend_from_slice(zeta);
        }
        DisplacementField { n, dim, entries, support: None }
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self::constant(n, &vec![0.0; dim])
    }

    /// Tags the field with its support set, checking membership of every entry.
    pub fn with_support(mut self, support: SupportSet) -> Result<Self> {
        if support.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: support.dim() });
        }
        for (i, w) in self.entries.chunks(self.dim).enumerate() {
            if !support.contains(w, 1e-9) {
                return Err(Error::InvalidParameter(format!("site {i} lies outside the support set")));
            }
        }
        self.support = Some(support);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> TorusShape {
        TorusShape::sites(self.dim, self.n)
    }

    pub fn num_sites(&self) -> usize {
        self.entries.len() / self.dim
    }

    pub fn site(&self, idx: usize) -> &[f64] {
        &self.entries[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn site_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.entries[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn support(&self) -> Option<&SupportSet> {
        self.support.as_ref()
    }

    pub fn max_norm(&self) -> f64 {
        self.entries.chunks(self.dim).map(|w| w.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }
}

/// Per-site displacement source for the image sums below.
pub(crate) trait SiteDisplacements {
    fn displacement(&self, site: usize) -> &[f64];
}

impl SiteDisplacements for DisplacementField {
    fn displacement(&self, site: usize) -> &[f64] {
        self.site(site)
    }
}

/// Every site shifted by the same `ζ`.
pub(crate) struct Uniform<'a>(pub &'a [f64]);

impl SiteDisplacements for Uniform<'_> {
    fn displacement(&self, _site: usize) -> &[f64] {
        self.0
    }
}

/// Visits every lattice image `g ∈ Z^d` (unwrapped) whose displaced bump can
/// reach `x`, i.e. the `3^d` points around `round(x)`, with the torus site it
/// represents and the local coordinate `y = x - g - λ ω_site`.
pub(crate) fn for_each_image<D: SiteDisplacements + ?Sized, F: FnMut(usize, &[f64])>(
    x: &[f64],
    lambda: f64,
    sites: TorusShape,
    disp: &D,
    mut f: F,
) {
    let d = sites.dim;
    let mut base = [0i64; MAX_DIM];
    for j in 0..d {
        base[j] = x[j].round() as i64;
    }
    let combos = 3usize.pow(d as u32);
    let mut g = [0i64; MAX_DIM];
    let mut y = [0.0; MAX_DIM];
    for c in 0..combos {
        let mut rem = c;
        for j in 0..d {
            g[j] = base[j] + (rem % 3) as i64 - 1;
            rem /= 3;
        }
        let site = sites.index_wrapped(&g[..d]);
        let w = disp.displacement(site);
        for j in 0..d {
            y[j] = x[j] - g[j] as f64 - lambda * w[j];
        }
        f(site, &y[..d]);
    }
}

pub(crate) fn check_reach(q: &SingleSitePotential, lambda: f64, max_disp: f64) -> Result<()> {
    let reach = lambda * max_disp + q.support_radius();
    if reach >= 1.0 {
        return Err(Error::DisplacementTooLarge { reach });
    }
    Ok(())
}

/// `p(x) + Σ_images q(x - γ - λ ω_γ)` at a point of the torus `Λ_n`.
pub fn eval_total_potential(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    omega: &DisplacementField,
    x: &[f64],
) -> Result<f64> {
    let d = p.dim();
    for found in [q.dim(), omega.dim(), x.len()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParameter("λ must be non-negative".into()));
    }
    check_reach(q, lambda, omega.max_norm())?;
    Ok(p.eval(x) + displaced_sum(q, lambda, omega.shape(), omega, x))
}

pub(crate) fn displaced_sum<D: SiteDisplacements + ?Sized>(
    q: &SingleSitePotential,
    lambda: f64,
    sites: TorusShape,
    disp: &D,
    x: &[f64],
) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let r2 = q.support_radius() * q.support_radius();
    let mut acc = 0.0;
    for_each_image(x, lambda, sites, disp, |_, y| {
        if y.iter().map(|v| v * v).sum::<f64>() < r2 {
            acc += q.value(y);
        }
    });
    acc
}
