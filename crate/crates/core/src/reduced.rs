//! The reduced lattice models `h±` bracketing `H_{λ,ω} - E(λ,ζ)` near the
//! bottom of the spectrum, and the numerical checks of that bracketing.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::discretize::{assemble_constant, assemble_periodic, GridSpec};
use crate::eigensolve::dense_spectrum;
use crate::floquet::{band_bottom, build_projectors, fiber_levels, ProjectorPack};
use crate::geometry::unit_f64;
use crate::potentials::{DisplacementField, PeriodicPotential, SingleSitePotential};
use crate::sparse::CsrMatrix;
use crate::torus::TorusShape;
use crate::vecmath::dot;
use crate::{Complex64, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `ϖ(θ) = Σ_j (1 - cos θ_j)`.
pub fn varpi(theta: &[f64]) -> f64 {
    theta.iter().map(|t| 1.0 - t.cos()).sum()
}

/// Half the graph Laplacian of the periodic lattice `Z^d / (2n+1) Z^d`;
/// its Fourier symbol is exactly `ϖ`.
pub fn half_laplacian(dim: usize, n: usize) -> CsrMatrix<f64> {
    let shape = TorusShape::sites(dim, n);
    let mut t = Vec::with_capacity(shape.len() * (2 * dim + 1));
    for i in 0..shape.len() {
        t.push((i, i, dim as f64));
        for axis in 0..dim {
            for step in [-1, 1] {
                t.push((i, shape.neighbor(i, axis, step).0, -0.5));
            }
        }
    }
    CsrMatrix::from_triplets(shape.len(), t)
}

/// `max |F* K F - diag ϖ(θ_k)|` for the unitary lattice Fourier transform `F`.
pub fn symbol_defect(dim: usize, n: usize) -> f64 {
    let shape = TorusShape::sites(dim, n);
    let l = shape.len();
    let side = (2 * n + 1) as f64;
    let thetas: Vec<Vec<f64>> = (0..l)
        .map(|k| shape.coords_vec(k).iter().map(|&c| 2.0 * core::f64::consts::PI * c as f64 / side).collect())
        .collect();
    let f = DMatrix::from_fn(l, l, |x, k| {
        let a: f64 = shape.coords_vec(x).iter().zip(&thetas[k]).map(|(c, t)| *c as f64 * t).sum();
        Complex64::new(a.cos(), a.sin()) / (l as f64).sqrt()
    });
    let kin = half_laplacian(dim, n).to_dense().map(|x| Complex64::new(x, 0.0));
    let conj = f.adjoint() * kin * &f;
    let mut worst = 0.0f64;
    for i in 0..l {
        for j in 0..l {
            let want = if i == j { varpi(&thetas[i]) } else { 0.0 };
            worst = worst.max((conj[(i, j)] - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}

#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub sign: Sign,
    pub c0: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub zeta: Vec<f64>,
    pub v: Vec<f64>,
    pub n: usize,
    /// `C₀` for `h⁺`, `1/C₀` for `h⁻`.
    pub kinetic_scale: f64,
    /// `λ[v·(ω_γ-ζ) ± C₀α|ω_γ-ζ|²]` per site.
    pub potential: Vec<f64>,
    pub matrix: CsrMatrix<f64>,
}

impl ReducedModel {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn ground(&self) -> f64 {
        dense_spectrum(&self.matrix)[0]
    }
}

#[allow(clippy::too_many_arguments)]
pub fn build_reduced(
    sign: Sign,
    v: &[f64],
    lambda: f64,
    zeta: &[f64],
    omega: &DisplacementField,
    c0: f64,
    alpha: f64,
) -> Result<ReducedModel> {
    let d = omega.dim();
    for found in [v.len(), zeta.len()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    if !(c0 >= 1.0 && alpha > 0.0 && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("need C₀ ≥ 1, α > 0, λ ≥ 0; got {c0}, {alpha}, {lambda}")));
    }
    let s = match sign {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
    };
    let kinetic_scale = match sign {
        Sign::Plus => c0,
        Sign::Minus => 1.0 / c0,
    };
    let potential: Vec<f64> = (0..omega.num_sites())
        .map(|g| {
            let diff: Vec<f64> = omega.site(g).iter().zip(zeta).map(|(a, b)| a - b).collect();
            lambda * (dot(v, &diff) + s * c0 * alpha * dot(&diff, &diff))
        })
        .collect();
    let kin = half_laplacian(d, omega.n());
    let mut t: Vec<(usize, usize, f64)> = kin.iter().map(|(i, j, x)| (i, j, kinetic_scale * x)).collect();
    t.extend(potential.iter().enumerate().map(|(i, &x)| (i, i, x)));
    Ok(ReducedModel {
        sign,
        c0,
        alpha,
        lambda,
        zeta: zeta.to_vec(),
        v: v.to_vec(),
        n: omega.n(),
        kinetic_scale,
        potential,
        matrix: CsrMatrix::from_triplets(omega.num_sites(), t),
    })
}

/// `(ground of h⁻ = 0) ⇔ (ω ≡ ζ(λ))`, both within `1e-10`; the model must be
/// built at `ζ = ζ(λ)`.
pub fn reduced_ground_zero_iff_constant(model: &ReducedModel, omega: &DisplacementField) -> bool {
    let zero = model.ground().abs() <= 1e-10;
    let constant =
        (0..omega.num_sites()).all(|g| omega.site(g).iter().zip(&model.zeta).all(|(a, b)| (a - b).abs() <= 1e-10));
    zero == constant
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedScan {
    pub fields: usize,
    /// The ground of `h⁻` vanishes exactly on the constant field `ζ(λ)`.
    pub zero_only_at_constant: bool,
    /// Smallest ground over the non-constant fields.
    pub min_nonconstant: f64,
    /// Smallest `ground - λα₀ min_γ|ω_γ-ζ|²/6` over the non-constant fields.
    pub worst_margin: f64,
}

/// Every field of the 3-site ring with entries on the `points`-point grid of
/// `[lo, hi]`, for `h⁻` built at `ζ = ζ(λ)` with `C₀α = α₀/2`.
#[allow(clippy::too_many_arguments)]
pub fn reduced_minimizer_scan(
    v: f64,
    lambda: f64,
    zeta: f64,
    lo: f64,
    hi: f64,
    c0: f64,
    alpha0: f64,
    points: usize,
) -> Result<ReducedScan> {
    if points < 2 || !(lo < hi) {
        return Err(Error::InvalidParameter("need points ≥ 2 and lo < hi".into()));
    }
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let alpha = alpha0 / (2.0 * c0);
    let mut out = ReducedScan {
        fields: points.pow(3),
        zero_only_at_constant: true,
        min_nonconstant: f64::INFINITY,
        worst_margin: f64::INFINITY,
    };
    for i in 0..out.fields {
        let w = [grid[i % points], grid[i / points % points], grid[i / (points * points)]];
        let omega = DisplacementField::new(1, 1, w.to_vec())?;
        let ground = build_reduced(Sign::Minus, &[v], lambda, &[zeta], &omega, c0, alpha)?.ground();
        let constant = w.iter().all(|&x| (x - zeta).abs() <= 1e-12);
        out.zero_only_at_constant &= (ground.abs() <= 1e-10) == constant;
        if !constant {
            let nearest = w.iter().map(|x| (x - zeta).abs()).fold(f64::INFINITY, f64::min);
            out.min_nonconstant = out.min_nonconstant.min(ground);
            out.worst_margin = out.worst_margin.min(ground - lambda * alpha0 * nearest * nearest / 6.0);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandComparison {
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl BandComparison {
    /// The constant `C` with `ϖ/C ≤ E₀(θ) - E ≤ C ϖ` on the grid.
    pub fn constant(&self) -> f64 {
        self.max_ratio.max(1.0 / self.min_ratio)
    }

    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

/// Extremes of `(E₀(λ,ζ,θ) - E(λ,ζ)) / ϖ(θ)` over `θ ≠ 0`.
pub fn band_comparison_ratio(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    m: usize,
    thetas: &[Vec<f64>],
) -> Result<BandComparison> {
    let e = band_bottom(p, q, lambda, zeta, m)?.energy;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, theta) in thetas.iter().enumerate() {
        let w = varpi(theta);
        if w == 0.0 {
            return Err(Error::InvalidParameter("θ = 0 is a removable singularity; exclude it".into()));
        }
        let e0 = fiber_levels(p, q, lambda, zeta, theta, m, 1)?[0];
        let ratio = (e0 - e) / w;
        if !(ratio > 0.0) {
            return Err(Error::NegativeRatio { index: i, ratio });
        }
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(BandComparison { min_ratio: lo, max_ratio: hi })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandwichReport {
    pub c0: f64,
    pub alpha: f64,
    /// Smallest `⟨(middle - lower)u, u⟩` over the random unit vectors.
    pub lower_form: f64,
    pub upper_form: f64,
    pub lower_eig: f64,
    pub upper_eig: f64,
    pub pass: bool,
}

pub const TOL_PSD: f64 = 1e-8;

fn hermitian_min_eig(a: &DMatrix<Complex64>) -> f64 {
    let sym = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

fn min_form(a: &DMatrix<Complex64>, vectors: &[nalgebra::DVector<Complex64>]) -> f64 {
    vectors.iter().map(|u| (u.adjoint() * a * u)[(0, 0)].re).fold(f64::INFINITY, f64::min)
}

/// The three forms of the operator sandwich, evaluated densely:
/// `(1/C₀)(W h⁻ W* + Π₊) ≤ H_ω - E ≤ C₀(W h⁺ W* + Π₊(H_ζ̄ - E)Π₊)`.
pub struct Sandwich<'a> {
    pub p: &'a PeriodicPotential,
    pub q: &'a SingleSitePotential,
    pub lambda: f64,
    pub zeta: &'a [f64],
    pub m: usize,
    pack: ProjectorPack,
    energy: f64,
    v: Vec<f64>,
    pi_plus: DMatrix<Complex64>,
    upper_tail: DMatrix<Complex64>,
}

impl<'a> Sandwich<'a> {
    pub fn new(
        p: &'a PeriodicPotential,
        q: &'a SingleSitePotential,
        lambda: f64,
        zeta: &'a [f64],
        n: usize,
        m: usize,
    ) -> Result<Self> {
        let grid = GridSpec::new(zeta.len(), n, m)?;
        if grid.len() > 4000 {
            return Err(Error::InvalidParameter(format!("{} grid points exceed the dense limit 4000", grid.len())));
        }
        let pack = build_projectors(p, q, lambda, zeta, n, m)?;
        let bottom = band_bottom(p, q, lambda, zeta, m)?;
        let h_bar = assemble_constant(p, q, lambda, zeta, grid)?.matrix.to_dense();
        let shifted =
            (h_bar - DMatrix::identity(grid.len(), grid.len()) * bottom.energy).map(|x| Complex64::new(x, 0.0));
        let pi_plus = pack.pi_plus();
        let upper_tail = &pi_plus * shifted * &pi_plus;
        Ok(Sandwich { p, q, lambda, zeta, m, energy: bottom.energy, v: bottom.v(q), pack, pi_plus, upper_tail })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn check(
        &self,
        omega: &DisplacementField,
        c0: f64,
        alpha: f64,
        trials: usize,
        seed: u64,
    ) -> Result<SandwichReport> {
        if omega.n() != self.pack.grid.n || omega.dim() != self.pack.grid.dim {
            return Err(Error::InvalidParameter("projector pack does not match the field's torus".into()));
        }
        let grid = self.pack.grid;
        let nn = grid.len();
        let h = assemble_periodic(self.p, self.q, self.lambda, omega, grid)?.matrix.to_dense();
        let middle = (h - DMatrix::identity(nn, nn) * self.energy).map(|x| Complex64::new(x, 0.0));
        let minus = build_reduced(Sign::Minus, &self.v, self.lambda, self.zeta, omega, c0, alpha)?;
        let plus = build_reduced(Sign::Plus, &self.v, self.lambda, self.zeta, omega, c0, alpha)?;
        let lower = (self.pack.lift(&minus.matrix.to_dense()) + &self.pi_plus) * Complex64::new(1.0 / c0, 0.0);
        let upper = (self.pack.lift(&plus.matrix.to_dense()) + &self.upper_tail) * Complex64::new(c0, 0.0);
        let d_low = &middle - lower;
        let d_up = upper - &middle;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors: Vec<nalgebra::DVector<Complex64>> = (0..trials)
            .map(|_| {
                let u = nalgebra::DVector::from_fn(nn, |_, _| {
                    Complex64::new(unit_f64(&mut rng) - 0.5, unit_f64(&mut rng) - 0.5)
                });
                let norm = u.norm();
                u / Complex64::new(norm, 0.0)
            })
            .collect();
        let lower_form = min_form(&d_low, &vectors);
        let upper_form = min_form(&d_up, &vectors);
        let lower_eig = hermitian_min_eig(&d_low);
        let upper_eig = hermitian_min_eig(&d_up);
        let pass = [lower_form, upper_form, lower_eig, upper_eig].iter().all(|&x| x >= -TOL_PSD);
        Ok(SandwichReport { c0, alpha, lower_form, upper_form, lower_eig, upper_eig, pass })
    }

    /// Doubles `C₀` through `2, 4, …, c0_max` with `C₀α = α₀/2` and stops at the
    /// first pass.
    pub fn calibrate(
        &self,
        omega: &DisplacementField,
        alpha0: f64,
        c0_max: f64,
        trials: usize,
        seed: u64,
    ) -> Result<Vec<SandwichReport>> {
        if !(alpha0 > 0.0) {
            return Err(Error::InvalidParameter(format!("α₀ = {alpha0} must be positive")));
        }
        let mut out = Vec::new();
        let mut c0 = 2.0;
        while c0 <= c0_max {
            let r = self.check(omega, c0, alpha0 / (2.0 * c0), trials, seed)?;
            let done = r.pass;
            out.push(r);
            if done {
                break;
            }
            c0 *= 2.0;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assumptions::{growth_constant, minimize_over_k};
    use crate::geometry::SupportSet;
    use crate::potentials::builtin_single_site;
    use alloc::vec;

    #[test]
    fn symbol_identity() {
        for n in 1..=4 {
            assert!(symbol_defect(1, n) < 1e-12);
        }
        assert!(symbol_defect(2, 1) < 1e-12);
        assert!(symbol_defect(2, 2) < 1e-12);
    }

    #[test]
    fn three_site_ring() {
        let w = DisplacementField::new(1, 1, vec![0.3, -0.2, 0.9]).unwrap();
        for c0 in [1.0, 3.0] {
            let h = build_reduced(Sign::Plus, &[0.4], 0.0, &[0.0], &w, c0, 1.0).unwrap();
            let e = dense_spectrum(&h.matrix);
            let mut want: Vec<f64> =
                (0..3).map(|k| c0 * (1.0 - (2.0 * core::f64::consts::PI * k as f64 / 3.0).cos())).collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in e.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_field_has_zero_potential() {
        let w = DisplacementField::constant(2, &[0.4]);
        let h = build_reduced(Sign::Minus, &[0.4], 0.1, &[0.4], &w, 2.0, 1.0).unwrap();
        assert!(h.potential.iter().all(|&x| x == 0.0));
        assert!(h.ground().abs() < 1e-12);
        assert!(reduced_ground_zero_iff_constant(&h, &w));
    }

    #[test]
    fn perturbed_site_lifts_the_ground() {
        let w = DisplacementField::new(1, 1, vec![-1.0, -0.9, -1.0]).unwrap();
        let h = build_reduced(Sign::Minus, &[0.5], 0.1, &[-1.0], &w, 2.0, 0.1).unwrap();
        assert!(h.ground() > 0.0);
        assert!(reduced_ground_zero_iff_constant(&h, &w));
    }

    #[test]
    fn plus_dominates_minus() {
        let w = DisplacementField::new(2, 1, vec![0.1, -0.5, 0.7, 1.0, -1.0]).unwrap();
        let a = build_reduced(Sign::Plus, &[0.3], 0.2, &[0.0], &w, 3.0, 0.5).unwrap();
        let b = build_reduced(Sign::Minus, &[0.3], 0.2, &[0.0], &w, 3.0, 0.5).unwrap();
        let diff = CsrMatrix::from_dense(&(a.matrix.to_dense() - b.matrix.to_dense()));
        assert!(dense_spectrum(&diff)[0] >= -1e-12);
    }

    #[test]
    fn scan_zero_only_at_constant() {
        let s = reduced_minimizer_scan(0.4, 0.1, -1.0, -1.0, 1.0, 4.0, 0.2, 7).unwrap();
        assert_eq!(s.fields, 343);
        assert!(s.zero_only_at_constant);
        assert!(s.min_nonconstant > 0.0);
        assert!(s.worst_margin >= 0.0, "{s:?}");
    }

    #[test]
    fn free_ratio_tends_to_two() {
        let p = PeriodicPotential::zero(1);
        let q = SingleSitePotential::zero(1);
        let r = band_comparison_ratio(&p, &q, 0.0, &[0.0], 256, &[vec![0.01]]).unwrap();
        assert!((r.min_ratio - 2.0).abs() < 1e-3, "{r:?}");
        assert!(band_comparison_ratio(&p, &q, 0.0, &[0.0], 16, &[vec![0.0]]).is_err());
    }

    #[test]
    fn sandwich_on_constant_field_and_random_field() {
        let p = PeriodicPotential::cosine(1, &[1.0]).unwrap();
        let q = builtin_single_site("asym-bump", 1).unwrap();
        let k = SupportSet::interval(-1.0, 1.0);
        let lambda = 0.05;
        let cert = minimize_over_k(&p, &q, lambda, &k, 32, 8).unwrap();
        let s = Sandwich::new(&p, &q, lambda, &cert.zeta, 1, 32).unwrap();
        let alpha0 = growth_constant(s.v(), &k, &cert.zeta, 200, 3).alpha0;
        assert!(alpha0 > 0.0);
        let w = DisplacementField::new(1, 1, vec![0.3, -0.7, 0.9]).unwrap();
        let runs = s.calibrate(&w, alpha0, 128.0, 20, 1).unwrap();
        assert!(runs.last().unwrap().pass, "{runs:?}");
    }
}
