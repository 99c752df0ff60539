//! Support sets `K ⊂ R^d` of the displacement variables.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::vecmath::{dist, dot, norm};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum SupportSet {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Sphere {
        center: Vec<f64>,
        radius: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        axes: Vec<f64>,
    },
    EllipsoidBoundary {
        center: Vec<f64>,
        axes: Vec<f64>,
    },
    /// Convex hull of the listed vertices.
    Polytope {
        vertices: Vec<Vec<f64>>,
    },
}

/// Outcome of the analytic curvature test on `∂K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureReport {
    pub min_curvature: f64,
    pub positive: bool,
}

impl SupportSet {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        SupportSet::Ball { center: center.to_vec(), radius }
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::ball(&vec![0.0; dim], 1.0)
    }

    pub fn sphere(center: &[f64], radius: f64) -> Self {
        SupportSet::Sphere { center: center.to_vec(), radius }
    }

    /// `[lo, hi]` in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Self {
        SupportSet::Polytope { vertices: vec![vec![lo], vec![hi]] }
    }

    /// Axis-aligned box as the polytope of its `2^d` corners.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Self {
        let d = lo.len();
        let vertices = (0..1usize << d)
            .map(|mask| (0..d).map(|j| if mask >> j & 1 == 1 { hi[j] } else { lo[j] }).collect())
            .collect();
        SupportSet::Polytope { vertices }
    }

    pub fn point(p: &[f64]) -> Self {
        SupportSet::Polytope { vertices: vec![p.to_vec()] }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        match self {
            SupportSet::Ball { center, radius } | SupportSet::Sphere { center, radius } => {
                if center.is_empty() {
                    return bad("empty center");
                }
                if !(*radius > 0.0) {
                    return bad("radius must be positive");
                }
            }
            SupportSet::Ellipsoid { center, axes } | SupportSet::EllipsoidBoundary { center, axes } => {
                if center.is_empty() || center.len() != axes.len() {
                    return bad("ellipsoid center/axes length mismatch");
                }
                if axes.iter().any(|&a| !(a > 0.0)) {
                    return bad("semi-axes must be positive");
                }
            }
            SupportSet::Polytope { vertices } => {
                if vertices.is_empty() || vertices[0].is_empty() {
                    return bad("polytope needs at least one vertex");
                }
                if vertices.iter().any(|v| v.len() != vertices[0].len()) {
                    return bad("polytope vertices of mixed dimension");
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            SupportSet::Ball { center, .. }
            | SupportSet::Sphere { center, .. }
            | SupportSet::Ellipsoid { center, .. }
            | SupportSet::EllipsoidBoundary { center, .. } => center.len(),
            SupportSet::Polytope { vertices } => vertices[0].len(),
        }
    }

    /// Sets that are the boundary of a convex body (projection is radial).
    pub fn is_boundary_set(&self) -> bool {
        matches!(self, SupportSet::Sphere { .. } | SupportSet::EllipsoidBoundary { .. })
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            SupportSet::Ball { center, radius } => dist(x, center) <= radius + tol,
            SupportSet::Sphere { center, radius } => (dist(x, center) - radius).abs() <= tol,
            SupportSet::Ellipsoid { center, axes } => ellipsoid_gauge(x, center, axes) <= 1.0 + tol,
            SupportSet::EllipsoidBoundary { center, axes } => (ellipsoid_gauge(x, center, axes) - 1.0).abs() <= tol,
            SupportSet::Polytope { .. } => dist(&self.project(x), x) <= tol,
        }
    }

    /// Euclidean projection for convex bodies, radial normalization for the
    /// boundary variants.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SupportSet::Ball { center, radius } => {
                let r = dist(x, center);
                if r <= *radius {
                    x.to_vec()
                } else {
                    radial(x, center, radius / r)
                }
            }
            SupportSet::Sphere { center, radius } => {
                let r = dist(x, center);
                if r == 0.0 {
                    let mut y = center.clone();
                    y[0] += radius;
                    y
                } else {
                    radial(x, center, radius / r)
                }
            }
            SupportSet::Ellipsoid { center, axes } => project_ellipsoid(x, center, axes),
            SupportSet::EllipsoidBoundary { center, axes } => {
                let g = ellipsoid_gauge(x, center, axes);
                if g == 0.0 {
                    let mut y = center.clone();
                    y[0] += axes[0];
                    y
                } else {
                    radial(x, center, 1.0 / g)
                }
            }
            SupportSet::Polytope { vertices } => {
                let pts: Vec<Vec<f64>> =
                    vertices.iter().map(|v| v.iter().zip(x).map(|(a, b)| a - b).collect()).collect();
                let w = min_norm_point(&pts);
                let mut y = vec![0.0; x.len()];
                for (wi, v) in w.iter().zip(vertices) {
                    for (yj, vj) in y.iter_mut().zip(v) {
                        *yj += wi * vj;
                    }
                }
                y
            }
        }
    }

    /// A minimizer of `ζ ↦ v·ζ` over `K`.
    pub fn argmin_linear(&self, v: &[f64]) -> Vec<f64> {
        let nv = norm(v);
        match self {
            SupportSet::Ball { center, radius } | SupportSet::Sphere { center, radius } => {
                if nv == 0.0 {
                    return center.clone();
                }
                center.iter().zip(v).map(|(c, vj)| c - radius * vj / nv).collect()
            }
            SupportSet::Ellipsoid { center, axes } | SupportSet::EllipsoidBoundary { center, axes } => {
                let av: f64 = axes.iter().zip(v).map(|(a, vj)| (a * vj) * (a * vj)).sum::<f64>().sqrt();
                if av == 0.0 {
                    return center.clone();
                }
                center.iter().zip(axes).zip(v).map(|((c, a), vj)| c - a * a * vj / av).collect()
            }
            SupportSet::Polytope { vertices } => {
                let mut best = &vertices[0];
                let mut best_val = dot(best, v);
                for vert in &vertices[1..] {
                    let val = dot(vert, v);
                    if val < best_val {
                        best = vert;
                        best_val = val;
                    }
                }
                best.clone()
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            SupportSet::Ball { radius, .. } | SupportSet::Sphere { radius, .. } => 2.0 * radius,
            SupportSet::Ellipsoid { axes, .. } | SupportSet::EllipsoidBoundary { axes, .. } => {
                2.0 * axes.iter().cloned().fold(0.0, f64::max)
            }
            SupportSet::Polytope { vertices } => {
                let mut d: f64 = 0.0;
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        d = d.max(dist(a, b));
                    }
                }
                d
            }
        }
    }

    /// Analytic lower bound on the principal curvatures of `∂K`: `1/R` for
    /// balls and spheres, `a_min / a_max²` for ellipsoids, zero for polytopes.
    pub fn min_principal_curvature(&self) -> CurvatureReport {
        let k = match self {
            SupportSet::Ball { radius, .. } | SupportSet::Sphere { radius, .. } => 1.0 / radius,
            SupportSet::Ellipsoid { axes, .. } | SupportSet::EllipsoidBoundary { axes, .. } => {
                let amin = axes.iter().cloned().fold(f64::INFINITY, f64::min);
                let amax = axes.iter().cloned().fold(0.0, f64::max);
                amin / (amax * amax)
            }
            SupportSet::Polytope { .. } => 0.0,
        };
        CurvatureReport { min_curvature: k, positive: k > 0.0 }
    }

    /// A point drawn uniformly from `K` (surface-scaled for boundary sets).
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        match self {
            SupportSet::Ball { center, radius } => {
                let u = unit_ball_point(rng, d);
                center.iter().zip(&u).map(|(c, x)| c + radius * x).collect()
            }
            SupportSet::Sphere { center, radius } => {
                let u = unit_direction(rng, d);
                center.iter().zip(&u).map(|(c, x)| c + radius * x).collect()
            }
            SupportSet::Ellipsoid { center, axes } => {
                let u = unit_ball_point(rng, d);
                (0..d).map(|j| center[j] + axes[j] * u[j]).collect()
            }
            SupportSet::EllipsoidBoundary { center, axes } => {
                let u = unit_direction(rng, d);
                (0..d).map(|j| center[j] + axes[j] * u[j]).collect()
            }
            SupportSet::Polytope { vertices } => sample_polytope(rng, vertices),
        }
    }

    /// A point on `∂K` (vertices and edge points for polytopes).
    pub fn sample_boundary<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        match self {
            SupportSet::Ball { center, radius } | SupportSet::Sphere { center, radius } => {
                let u = unit_direction(rng, d);
                center.iter().zip(&u).map(|(c, x)| c + radius * x).collect()
            }
            SupportSet::Ellipsoid { center, axes } | SupportSet::EllipsoidBoundary { center, axes } => {
                let u = unit_direction(rng, d);
                (0..d).map(|j| center[j] + axes[j] * u[j]).collect()
            }
            SupportSet::Polytope { vertices } => {
                let nv = vertices.len();
                let i = (rng.next_u64() % nv as u64) as usize;
                let k = (rng.next_u64() % nv as u64) as usize;
                if rng.next_u32() & 1 == 0 || i == k {
                    return vertices[i].clone();
                }
                let t = unit_f64(rng);
                vertices[i].iter().zip(&vertices[k]).map(|(a, b)| a + t * (b - a)).collect()
            }
        }
    }
}

fn radial(x: &[f64], center: &[f64], scale: f64) -> Vec<f64> {
    x.iter().zip(center).map(|(xi, c)| c + scale * (xi - c)).collect()
}

fn ellipsoid_gauge(x: &[f64], center: &[f64], axes: &[f64]) -> f64 {
    x.iter().zip(center).zip(axes).map(|((xi, c), a)| ((xi - c) / a) * ((xi - c) / a)).sum::<f64>().sqrt()
}

fn project_ellipsoid(x: &[f64], center: &[f64], axes: &[f64]) -> Vec<f64> {
    if ellipsoid_gauge(x, center, axes) <= 1.0 {
        return x.to_vec();
    }
    let y: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    // Lagrange condition ζ_j = a_j² y_j / (a_j² + t), t > 0 solves Σ (a_j y_j/(a_j²+t))² = 1.
    let f = |t: f64| -> f64 { y.iter().zip(axes).map(|(yj, a)| (a * yj / (a * a + t)).powi(2)).sum::<f64>() - 1.0 };
    let amax = axes.iter().cloned().fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, amax * norm(&y) + 1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let mut z: Vec<f64> = y.iter().zip(axes).zip(center).map(|((yj, a), c)| c + a * a * yj / (a * a + t)).collect();
    // Land exactly on the surface so projection is idempotent to rounding.
    let g = ellipsoid_gauge(&z, center, axes);
    if g > 1.0 {
        z = radial(&z, center, 1.0 / g);
    }
    z
}

/// Wolfe's minimum-norm-point algorithm: convex weights `w` minimizing
/// `|Σ w_i p_i|`.
pub(crate) fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-13 * scale;
    let combine = |set: &[usize], w: &[f64]| -> Vec<f64> {
        let d = points[0].len();
        let mut x = vec![0.0; d];
        for (&i, &wi) in set.iter().zip(w) {
            for j in 0..d {
                x[j] += wi * points[i][j];
            }
        }
        x
    };
    let start = (0..n).min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b]))).unwrap();
    let mut set = vec![start];
    let mut w = vec![1.0];
    let mut x = points[start].clone();
    for _major in 0..(50 * n + 50) {
        let xx = dot(&x, &x);
        let (j, xp) = (0..n).map(|j| (j, dot(&x, &points[j]))).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        if xp >= xx - tol || set.contains(&j) {
            break;
        }
        set.push(j);
        w.push(0.0);
        loop {
            let alpha = affine_minimizer(points, &set);
            if alpha.iter().all(|&a| a > 1e-14) {
                w = alpha;
                x = combine(&set, &w);
                break;
            }
            let mut theta: f64 = 1.0;
            for (wi, ai) in w.iter().zip(&alpha) {
                if *ai <= 1e-14 && wi - ai > 0.0 {
                    theta = theta.min(wi / (wi - ai));
                }
            }
            for (wi, ai) in w.iter_mut().zip(&alpha) {
                *wi = theta * ai + (1.0 - theta) * *wi;
            }
            let mut k = 0;
            while k < set.len() {
                if w[k] <= 1e-14 {
                    set.remove(k);
                    w.remove(k);
                } else {
                    k += 1;
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= s);
            x = combine(&set, &w);
            if set.len() == 1 {
                break;
            }
        }
    }
    let mut full = vec![0.0; n];
    for (&i, &wi) in set.iter().zip(&w) {
        full[i] = wi;
    }
    full
}

/// Affine weights (summing to one) of the point of `aff(points[set])` nearest the origin.
fn affine_minimizer(points: &[Vec<f64>], set: &[usize]) -> Vec<f64> {
    let k = set.len();
    let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut b = DVector::<f64>::zeros(k + 1);
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a[(r, c)] = dot(&points[i], &points[j]);
        }
        a[(r, k)] = 1.0;
        a[(k, r)] = 1.0;
    }
    b[k] = 1.0;
    match a.clone().lu().solve(&b) {
        Some(sol) => sol.iter().take(k).cloned().collect(),
        None => {
            // Affinely dependent set: fall back to least squares via SVD.
            let svd = a.svd(true, true);
            svd.solve(&b, 1e-12)
                .map(|s| s.iter().take(k).cloned().collect())
                .unwrap_or_else(|_| vec![1.0 / k as f64; k])
        }
    }
}

pub(crate) fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn unit_direction<R: RngCore + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&g);
        if n > 1e-300 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Normalized Gaussian direction times `U^{1/d}`.
pub(crate) fn unit_ball_point<R: RngCore + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let dir = unit_direction(rng, d);
    let r = unit_f64(rng).powf(1.0 / d as f64);
    dir.into_iter().map(|x| r * x).collect()
}

fn sample_polytope<R: RngCore + ?Sized>(rng: &mut R, vertices: &[Vec<f64>]) -> Vec<f64> {
    let d = vertices[0].len();
    if vertices.len() == 1 {
        return vertices[0].clone();
    }
    let mut lo = vertices[0].clone();
    let mut hi = vertices[0].clone();
    for v in vertices {
        for j in 0..d {
            lo[j] = lo[j].min(v[j]);
            hi[j] = hi[j].max(v[j]);
        }
    }
    let probe = SupportSet::Polytope { vertices: vertices.to_vec() };
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..d).map(|j| lo[j] + unit_f64(rng) * (hi[j] - lo[j])).collect();
        if probe.contains(&x, 1e-12) {
            return x;
        }
    }
    // Degenerate (lower-dimensional) hull: random convex combination.
    let mut w: Vec<f64> = (0..vertices.len()).map(|_| -unit_f64(rng).max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    let mut y = vec![0.0; d];
    for (wi, v) in w.iter().zip(vertices) {
        for j in 0..d {
            y[j] += wi * v[j];
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn sets() -> Vec<SupportSet> {
        vec![
            SupportSet::unit_ball(2),
            SupportSet::sphere(&[0.5, -0.2], 1.5),
            SupportSet::Ellipsoid { center: vec![0.0, 1.0], axes: vec![2.0, 0.5] },
            SupportSet::EllipsoidBoundary { center: vec![0.0, 0.0], axes: vec![1.0, 3.0] },
            SupportSet::cuboid(&[-1.0, -0.5], &[1.0, 2.0]),
            SupportSet::Polytope { vertices: vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]] },
        ]
    }

    #[test]
    fn projection_idempotent_and_members_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in sets() {
            for _ in 0..200 {
                let x: Vec<f64> = (0..2).map(|_| 6.0 * unit_f64(&mut rng) - 3.0).collect();
                let p = k.project(&x);
                let pp = k.project(&p);
                assert!(dist(&p, &pp) < 1e-10, "{k:?} {x:?}");
                assert!(k.contains(&p, 1e-9), "{k:?} {p:?}");
                let s = k.sample(&mut rng);
                assert!(k.contains(&s, 1e-9));
                assert!(dist(&k.project(&s), &s) < 1e-10);
            }
        }
    }

    #[test]
    fn polytope_projection_matches_clamp_for_boxes() {
        let k = SupportSet::cuboid(&[-1.0, -0.5], &[1.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..2).map(|_| 8.0 * unit_f64(&mut rng) - 4.0).collect();
            let want = [x[0].clamp(-1.0, 1.0), x[1].clamp(-0.5, 2.0)];
            assert!(dist(&k.project(&x), &want) < 1e-12);
        }
    }

    #[test]
    fn ellipsoid_projection_is_nearest_point() {
        let axes = [2.0, 0.5];
        let k = SupportSet::Ellipsoid { center: vec![0.0, 0.0], axes: axes.to_vec() };
        let x = [3.0, 1.0];
        let p = k.project(&x);
        let best = (0..200_000)
            .map(|i| {
                let t = i as f64 * core::f64::consts::TAU / 200_000.0;
                let z = [axes[0] * t.cos(), axes[1] * t.sin()];
                dist(&z, &x)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((dist(&p, &x) - best).abs() < 1e-8);
    }

    #[test]
    fn curvature_reports() {
        let ball = SupportSet::unit_ball(3).min_principal_curvature();
        assert_eq!(ball.min_curvature, 1.0);
        assert!(ball.positive);
        assert!(!SupportSet::cuboid(&[0.0, 0.0], &[1.0, 1.0]).min_principal_curvature().positive);
    }

    #[test]
    fn ellipse_minimum_curvature_matches_parametric_oracle() {
        let (a, b) = (2.0f64, 1.0f64);
        // κ(t) = ab / (a² sin² t + b² cos² t)^{3/2}
        let kmin = (0..100_000)
            .map(|i| {
                let t = i as f64 * core::f64::consts::TAU / 100_000.0;
                a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5)
            })
            .fold(f64::INFINITY, f64::min);
        let k = SupportSet::Ellipsoid { center: vec![0.0, 0.0], axes: vec![a, b] }.min_principal_curvature();
        assert!((k.min_curvature - kmin).abs() < 1e-9);
        assert!((k.min_curvature - 0.25).abs() < 1e-15);
    }

    #[test]
    fn linear_argmin() {
        let k = SupportSet::unit_ball(2);
        let z = k.argmin_linear(&[3.0, 4.0]);
        assert!(dist(&z, &[-0.6, -0.8]) < 1e-15);
        let i = SupportSet::interval(-1.0, 1.0);
        assert_eq!(i.argmin_linear(&[0.3]), vec![-1.0]);
    }
}
