//! Displacement distributions on `K`, their polar structure and
//! reproducible sampling of whole fields.
//!
//! Every site draws from its own ChaCha20 stream: the key comes from the
//! master seed, the stream id is the sample index and the site picks a
//! disjoint block of the keystream. A field therefore depends only on
//! `(seed, sample, site)`, never on evaluation order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::geometry::{unit_ball_point, unit_direction, unit_f64, SupportSet};
use crate::potentials::DisplacementField;
use crate::torus::TorusShape;
use crate::vecmath::norm;
use crate::{Error, Result};

/// Keystream words reserved per site.
const SITE_BLOCK: u128 = 1 << 16;

/// Law of `r = |ω₀|` given the direction, for isotropic polar variants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialFamily {
    /// Density `(k+1) r^k / R^{k+1}` on `[0, R]`.
    Power { k: u32, radius: f64 },
    /// Density `6 r (R - r) / R³` on `[0, R]`.
    Parabolic { radius: f64 },
}

impl RadialFamily {
    pub fn radius(&self) -> f64 {
        match *self {
            RadialFamily::Power { radius, .. } | RadialFamily::Parabolic { radius } => radius,
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        let big = self.radius();
        if !(0.0..=big).contains(&r) {
            return 0.0;
        }
        match *self {
            RadialFamily::Power { k, .. } => (k + 1) as f64 * r.powi(k as i32) / big.powi(k as i32 + 1),
            RadialFamily::Parabolic { .. } => 6.0 * r * (big - r) / big.powi(3),
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        let t = (r / self.radius()).clamp(0.0, 1.0);
        match *self {
            RadialFamily::Power { k, .. } => t.powi(k as i32 + 1),
            RadialFamily::Parabolic { .. } => t * t * (3.0 - 2.0 * t),
        }
    }

    /// `sup |h'|` on the radial interval.
    pub fn derivative_bound(&self) -> f64 {
        let big = self.radius();
        match *self {
            RadialFamily::Power { k, .. } => (k * (k + 1)) as f64 / (big * big),
            RadialFamily::Parabolic { .. } => 6.0 / (big * big),
        }
    }

    fn sample(&self, u: f64) -> f64 {
        let big = self.radius();
        match *self {
            RadialFamily::Power { k, .. } => big * u.powf(1.0 / (k + 1) as f64),
            RadialFamily::Parabolic { .. } => {
                // Bisection on the smoothstep CDF; 60 halvings reach machine precision.
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if mid * mid * (3.0 - 2.0 * mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                big * 0.5 * (lo + hi)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DisplacementDistribution {
    UniformBall {
        center: Vec<f64>,
        radius: f64,
    },
    UniformSphere {
        center: Vec<f64>,
        radius: f64,
    },
    /// Uniform direction on `S^{d-1}` and an independent radius.
    Polar {
        dim: usize,
        radial: RadialFamily,
    },
    ProductBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl DisplacementDistribution {
    pub fn uniform_ball(dim: usize, radius: f64) -> Self {
        DisplacementDistribution::UniformBall { center: vec![0.0; dim], radius }
    }

    pub fn uniform_sphere(dim: usize, radius: f64) -> Self {
        DisplacementDistribution::UniformSphere { center: vec![0.0; dim], radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            DisplacementDistribution::UniformBall { center, .. }
            | DisplacementDistribution::UniformSphere { center, .. } => center.len(),
            DisplacementDistribution::Polar { dim, .. } => *dim,
            DisplacementDistribution::ProductBox { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DisplacementDistribution::UniformBall { center, radius }
            | DisplacementDistribution::UniformSphere { center, radius } => !center.is_empty() && *radius > 0.0,
            DisplacementDistribution::Polar { dim, radial } => *dim > 0 && radial.radius() > 0.0,
            DisplacementDistribution::ProductBox { lo, hi } => {
                !lo.is_empty() && lo.len() == hi.len() && lo.iter().zip(hi).all(|(a, b)| a < b)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("malformed distribution {self:?}")))
        }
    }

    pub fn support(&self) -> SupportSet {
        match self {
            DisplacementDistribution::UniformBall { center, radius } => SupportSet::ball(center, *radius),
            DisplacementDistribution::UniformSphere { center, radius } => SupportSet::sphere(center, *radius),
            DisplacementDistribution::Polar { dim, radial } => SupportSet::ball(&vec![0.0; *dim], radial.radius()),
            DisplacementDistribution::ProductBox { lo, hi } => SupportSet::cuboid(lo, hi),
        }
    }

    pub fn sample_site<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        match self {
            DisplacementDistribution::UniformBall { center, radius } => {
                let u = unit_ball_point(rng, d);
                center.iter().zip(u).map(|(c, x)| c + radius * x).collect()
            }
            DisplacementDistribution::UniformSphere { center, radius } => {
                let u = unit_direction(rng, d);
                center.iter().zip(u).map(|(c, x)| c + radius * x).collect()
            }
            DisplacementDistribution::Polar { radial, .. } => {
                let u = unit_direction(rng, d);
                let r = radial.sample(unit_f64(rng));
                u.into_iter().map(|x| r * x).collect()
            }
            DisplacementDistribution::ProductBox { lo, hi } => {
                lo.iter().zip(hi).map(|(a, b)| a + (b - a) * unit_f64(rng)).collect()
            }
        }
    }
}

/// The generator feeding site `site` of sample `sample`.
pub fn site_stream(master_seed: u64, sample: u64, site: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(sample);
    rng.set_word_pos(site as u128 * SITE_BLOCK);
    rng
}

pub fn sample_field(
    dist: &DisplacementDistribution,
    n: usize,
    master_seed: u64,
    sample_index: u64,
) -> Result<DisplacementField> {
    dist.validate()?;
    let d = dist.dim();
    let sites = TorusShape::sites(d, n).len();
    let mut entries = Vec::with_capacity(sites * d);
    for s in 0..sites {
        let mut rng = site_stream(master_seed, sample_index, s);
        entries.extend(dist.sample_site(&mut rng));
    }
    DisplacementField::new(n, d, entries)?.with_support(dist.support())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polar {
    pub r: f64,
    pub sigma: Vec<f64>,
    /// `ω₀ = 0`: `σ` is the arbitrary choice `e₁`.
    pub degenerate: bool,
}

pub fn polar_decompose(omega: &[f64]) -> Polar {
    let r = norm(omega);
    if r == 0.0 {
        let mut sigma = vec![0.0; omega.len()];
        if let Some(s) = sigma.first_mut() {
            *s = 1.0;
        }
        return Polar { r, sigma, degenerate: true };
    }
    Polar { r, sigma: omega.iter().map(|x| x / r).collect(), degenerate: false }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialBound {
    /// `ess-sup_σ ‖h'_σ‖_∞`.
    Finite(f64),
    /// The radial law has an atom; no density exists.
    Atomic,
}

impl RadialBound {
    pub fn compliant(&self) -> bool {
        matches!(self, RadialBound::Finite(_))
    }
}

/// Closed-form bound on the derivative of the conditional radial density.
/// The uniform ball in `d` dimensions has `h(r) = d r^{d-1} / R^d`, hence
/// `d(d-1)/R²`; a centred box has the same law along each direction with
/// `R` replaced by the exit distance, so its shortest half-width binds.
pub fn radial_density_bound(dist: &DisplacementDistribution) -> Result<RadialBound> {
    dist.validate()?;
    let d = dist.dim() as f64;
    match dist {
        DisplacementDistribution::UniformBall { center, radius } => {
            if norm(center) != 0.0 {
                return Err(Error::UnsupportedVariant("off-centre ball has no isotropic polar form"));
            }
            Ok(RadialBound::Finite(d * (d - 1.0) / (radius * radius)))
        }
        DisplacementDistribution::UniformSphere { .. } => Ok(RadialBound::Atomic),
        DisplacementDistribution::Polar { radial, .. } => Ok(RadialBound::Finite(radial.derivative_bound())),
        DisplacementDistribution::ProductBox { lo, hi } => {
            let mut rho = f64::INFINITY;
            for (a, b) in lo.iter().zip(hi) {
                if !(*a < 0.0 && *b > 0.0) {
                    return Err(Error::UnsupportedVariant("box must contain the origin in its interior"));
                }
                rho = rho.min(-a).min(*b);
            }
            Ok(RadialBound::Finite(d * (d - 1.0) / (rho * rho)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_radius_exact() {
        let dist = DisplacementDistribution::uniform_sphere(2, 0.7);
        let w = sample_field(&dist, 3, 5, 0).unwrap();
        for s in 0..w.num_sites() {
            assert!((norm(w.site(s)) - 0.7).abs() < 1e-15);
            assert_eq!(polar_decompose(w.site(s)).r, norm(w.site(s)));
        }
    }

    #[test]
    fn deterministic_and_order_free() {
        let dist = DisplacementDistribution::uniform_ball(2, 1.0);
        let a = sample_field(&dist, 2, 99, 7).unwrap();
        let b = sample_field(&dist, 2, 99, 7).unwrap();
        assert_eq!(a.entries(), b.entries());
        let mut rng = site_stream(99, 7, 13);
        assert_eq!(dist.sample_site(&mut rng), a.site(13).to_vec());
        assert_ne!(a.entries(), sample_field(&dist, 2, 99, 8).unwrap().entries());
    }

    #[test]
    fn ball_mean_within_clt() {
        let dist = DisplacementDistribution::uniform_ball(1, 1.0);
        let n = 100_000;
        let mut sum = 0.0;
        for i in 0..n {
            sum += dist.sample_site(&mut site_stream(3, i, 0))[0];
        }
        let sigma = 1.0 / (3.0 * n as f64).sqrt();
        assert!((sum / n as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn polar_examples() {
        let p = polar_decompose(&[1.2, 1.6]);
        assert!((p.r - 2.0).abs() < 1e-15);
        assert!((p.sigma[0] - 0.6).abs() < 1e-15 && (p.sigma[1] - 0.8).abs() < 1e-15);
        let back: Vec<f64> = p.sigma.iter().map(|s| s * p.r).collect();
        assert!((back[0] - 1.2).abs() < 1e-15 && (back[1] - 1.6).abs() < 1e-15);
        assert!(polar_decompose(&[0.0, 0.0]).degenerate);
    }

    #[test]
    fn density_bounds() {
        let b = |d: DisplacementDistribution| radial_density_bound(&d).unwrap();
        assert_eq!(b(DisplacementDistribution::uniform_ball(1, 1.0)), RadialBound::Finite(0.0));
        assert_eq!(b(DisplacementDistribution::uniform_ball(2, 1.0)), RadialBound::Finite(2.0));
        assert!(!b(DisplacementDistribution::uniform_sphere(2, 1.0)).compliant());
        let par = RadialFamily::Parabolic { radius: 0.5 };
        assert_eq!(par.derivative_bound(), 24.0);
        assert!((par.cdf(0.5) - 1.0).abs() < 1e-15);
        // Inverse-CDF sampling round trip.
        assert!((par.cdf(par.sample(0.3)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn polar_samples_stay_in_support() {
        let dist = DisplacementDistribution::Polar { dim: 2, radial: RadialFamily::Parabolic { radius: 0.8 } };
        let k = dist.support();
        for i in 0..2000 {
            assert!(k.contains(&dist.sample_site(&mut site_stream(1, i, 0)), 1e-12));
        }
    }
}
