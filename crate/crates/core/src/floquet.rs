//! Bottom of the spectrum of the shifted periodic operator `H_ζ̄`: the band
//! bottom `E(λ,ζ)`, its ground state `φ₀`, the Feynman–Hellmann vector
//! `v(λ,ζ)` and the finite-volume bottom-band projectors.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::DMatrix;

use crate::discretize::{assemble_fiber, torus_momenta, GridSpec};
use crate::eigensolve::{dense_spectrum, smallest_eigenpairs};
use crate::potentials::{for_each_image, PeriodicPotential, SingleSitePotential, Uniform, MAX_DIM};
use crate::sparse::Entry;
use crate::torus::TorusShape;
use crate::{Complex64, Error, Result};

const SOLVE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct BandBottom {
    pub lambda: f64,
    pub zeta: Vec<f64>,
    /// `E(λ,ζ)`.
    pub energy: f64,
    /// Ground state on the cell grid, normalized so that `Σ φ² h^d = 1`.
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub m: usize,
}

impl BandBottom {
    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    pub fn cell(&self) -> GridSpec {
        GridSpec { dim: self.dim(), n: 0, m: self.m }
    }

    /// Trapezoid rule for `-∫ ∇q(x - λζ) φ₀(x)² dx` over the cell, summing
    /// every neighbouring copy of `q` that reaches into it.
    pub fn v(&self, q: &SingleSitePotential) -> Vec<f64> {
        let d = self.dim();
        let mut v = vec![0.0; d];
        if q.is_zero() {
            return v;
        }
        let cell = self.cell();
        let w = cell.weight();
        let r2 = q.support_radius() * q.support_radius();
        let mut g = [0.0; MAX_DIM];
        for (i, &phi) in self.phi.iter().enumerate() {
            let x = cell.point(i);
            for_each_image(&x[..d], self.lambda, cell.site_shape(), &Uniform(&self.zeta), |_, y| {
                if y.iter().map(|t| t * t).sum::<f64>() < r2 {
                    q.gradient(y, &mut g[..d]);
                    for j in 0..d {
                        v[j] -= g[j] * phi * phi * w;
                    }
                }
            });
        }
        v
    }
}

/// Smallest eigenpair of the `θ = 0` fiber.
pub fn band_bottom(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    m: usize,
) -> Result<BandBottom> {
    let theta = vec![0.0; zeta.len()];
    let fiber = assemble_fiber(p, q, lambda, zeta, &theta, m)?;
    let real = fiber.matrix.to_real().expect("θ = 0 fiber is real");
    let res = smallest_eigenpairs(&real, 1, SOLVE_TOL)?;
    let mut u = res.vector(0).expect("dense and Lanczos solves return vectors");
    f64::fix_phase(&mut u);
    let (lo, hi) = u.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x.abs())));
    if !(lo > 0.0) {
        return Err(Error::NotSignDefinite { ratio: lo / hi });
    }
    let scale = 1.0 / GridSpec { dim: zeta.len(), n: 0, m }.weight().sqrt();
    u.iter_mut().for_each(|x| *x *= scale);
    Ok(BandBottom { lambda, zeta: zeta.to_vec(), energy: res.ground(), phi: u, theta, m })
}

pub fn v_vector(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    m: usize,
) -> Result<Vec<f64>> {
    Ok(band_bottom(p, q, lambda, zeta, m)?.v(q))
}

/// `max_j |∂_j E (central difference, step δ) - λ v_j|`.
pub fn feynman_hellmann_residual(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    m: usize,
    delta: f64,
) -> Result<f64> {
    let v = v_vector(p, q, lambda, zeta, m)?;
    let mut worst = 0.0f64;
    let mut z = zeta.to_vec();
    for j in 0..zeta.len() {
        z[j] = zeta[j] + delta;
        let up = band_bottom(p, q, lambda, &z, m)?.energy;
        z[j] = zeta[j] - delta;
        let down = band_bottom(p, q, lambda, &z, m)?.energy;
        z[j] = zeta[j];
        worst = worst.max(((up - down) / (2.0 * delta) - lambda * v[j]).abs());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientLimitRow {
    pub lambda: f64,
    /// `sup_ζ |v(λ,ζ) - v(q)|` over the supplied grid.
    pub sup_diff: f64,
}

pub fn gradient_limit_check(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    zetas: &[Vec<f64>],
    lambdas: &[f64],
    m: usize,
) -> Result<Vec<GradientLimitRow>> {
    let d = p.dim();
    let v0 = v_vector(p, q, 0.0, &vec![0.0; d], m)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let mut sup = 0.0f64;
            for z in zetas {
                let v = v_vector(p, q, lambda, z, m)?;
                let diff = v.iter().zip(&v0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                sup = sup.max(diff);
            }
            Ok(GradientLimitRow { lambda, sup_diff: sup })
        })
        .collect()
}

/// Lowest `levels` fiber eigenvalues at `θ`.
pub fn fiber_levels(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    theta: &[f64],
    m: usize,
    levels: usize,
) -> Result<Vec<f64>> {
    let fiber = assemble_fiber(p, q, lambda, zeta, theta, m)?;
    let mut e = smallest_eigenpairs(&fiber.matrix, levels.min(fiber.dim()), SOLVE_TOL)?.eigenvalues;
    e.truncate(levels);
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandRow {
    pub theta: Vec<f64>,
    pub energies: Vec<f64>,
}

/// Band data along `θ = t·(1,…,1)`, `t` uniform on `[-π, π]`.
pub fn band_table(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    m: usize,
    samples: usize,
    levels: usize,
) -> Result<Vec<BandRow>> {
    let d = zeta.len();
    (0..samples)
        .map(|s| {
            let t = -core::f64::consts::PI + 2.0 * core::f64::consts::PI * s as f64 / (samples.max(2) - 1) as f64;
            let theta = vec![t; d];
            let energies = fiber_levels(p, q, lambda, zeta, &theta, m, levels)?;
            Ok(BandRow { theta, energies })
        })
        .collect()
}

/// The discrete quasi-momenta of `Λ_n`, in the site ordering of the torus.
pub fn discrete_thetas(dim: usize, n: usize) -> Vec<Vec<f64>> {
    let ks = torus_momenta(n);
    let shape = TorusShape::sites(dim, n);
    (0..shape.len()).map(|idx| shape.coords_vec(idx).into_iter().map(|c| ks[c]).collect()).collect()
}

/// Bottom-band projectors on `Λ_n` for the constant field `ζ̄`.
#[derive(Clone, Debug)]
pub struct ProjectorPack {
    pub grid: GridSpec,
    pub thetas: Vec<Vec<f64>>,
    /// `E₀(λ,ζ,θ_k)`.
    pub fiber_energies: Vec<f64>,
    /// `E₁ - E₀` per fiber.
    pub fiber_gaps: Vec<f64>,
    /// Columns: unit ground Floquet vectors extended to the torus grid.
    pub psi: DMatrix<Complex64>,
}

impl ProjectorPack {
    pub fn rank(&self) -> usize {
        self.psi.ncols()
    }

    pub fn pi0(&self) -> DMatrix<Complex64> {
        &self.psi * self.psi.adjoint()
    }

    pub fn pi_plus(&self) -> DMatrix<Complex64> {
        DMatrix::identity(self.psi.nrows(), self.psi.nrows()) - self.pi0()
    }

    /// `P c = Σ_k c_k ψ_k`.
    pub fn apply_p(&self, c: &[Complex64]) -> Vec<Complex64> {
        (&self.psi * nalgebra::DVector::from_column_slice(c)).iter().cloned().collect()
    }

    pub fn apply_p_adjoint(&self, u: &[Complex64]) -> Vec<Complex64> {
        (self.psi.adjoint() * nalgebra::DVector::from_column_slice(u)).iter().cloned().collect()
    }

    /// Site basis of the bottom band: column `γ` is the discrete Fourier
    /// synthesis `Σ_k e^{-iγ·θ_k} ψ_k / √M`, concentrated on cell `γ`.
    pub fn wannier(&self) -> DMatrix<Complex64> {
        let sites = self.grid.site_shape();
        let mm = self.rank();
        let norm = 1.0 / (mm as f64).sqrt();
        let f = DMatrix::from_fn(mm, mm, |k, s| {
            let gamma = sites.centered(s);
            let phase: f64 = gamma.iter().zip(&self.thetas[k]).map(|(g, t)| *g as f64 * t).sum();
            Complex64::new(phase.cos(), -phase.sin()) * norm
        });
        &self.psi * f
    }

    /// `W h W*` for an operator `h` on the sites of the torus.
    pub fn lift(&self, h: &DMatrix<f64>) -> DMatrix<Complex64> {
        let w = self.wannier();
        &w * h.map(|x| Complex64::new(x, 0.0)) * w.adjoint()
    }
}

pub fn build_projectors(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    n: usize,
    m: usize,
) -> Result<ProjectorPack> {
    let d = zeta.len();
    let grid = GridSpec::new(d, n, m)?;
    let thetas = discrete_thetas(d, n);
    let mm = thetas.len();
    let cell = grid.cell_shape();
    let sites = grid.site_shape();
    let mut psi = DMatrix::zeros(grid.len(), mm);
    let mut energies = Vec::with_capacity(mm);
    let mut gaps = Vec::with_capacity(mm);
    // Per grid point: owning cell and position in the cell.
    let split: Vec<(usize, usize)> = (0..grid.len()).map(|i| grid.split(i)).collect();
    let norm = 1.0 / (mm as f64).sqrt();
    for (k, theta) in thetas.iter().enumerate() {
        let fiber = assemble_fiber(p, q, lambda, zeta, theta, m)?;
        let res = smallest_eigenpairs(&fiber.matrix, 2.min(cell.len()), SOLVE_TOL)?;
        let gap = if res.eigenvalues.len() > 1 { res.eigenvalues[1] - res.eigenvalues[0] } else { f64::INFINITY };
        if gap < 1e-10 {
            return Err(Error::DegenerateFiber { index: k, gap });
        }
        let mut u = res.vector(0).expect("eigenvectors requested");
        Complex64::fix_phase(&mut u);
        let phases: Vec<Complex64> = (0..sites.len())
            .map(|s| {
                let a: f64 = sites.centered(s).iter().zip(theta).map(|(g, t)| *g as f64 * t).sum();
                Complex64::new(a.cos(), a.sin()) * norm
            })
            .collect();
        for (i, &(s, l)) in split.iter().enumerate() {
            psi[(i, k)] = phases[s] * u[l];
        }
        energies.push(res.eigenvalues[0]);
        gaps.push(gap);
    }
    Ok(ProjectorPack { grid, thetas, fiber_energies: energies, fiber_gaps: gaps, psi })
}

/// Smallest eigenvalue of `H - E` restricted to `ran Π₊`.
pub fn upper_gap(h: &DMatrix<f64>, pack: &ProjectorPack, e: f64) -> f64 {
    let pi_plus = pack.pi_plus();
    let hc = h.map(|x| Complex64::new(x, 0.0));
    let shifted = &hc - DMatrix::identity(h.nrows(), h.ncols()) * Complex64::new(e, 0.0);
    // Push ran Π₀ far up so the restriction's spectrum is isolated at the bottom.
    let big = shifted.iter().map(|z| z.norm()).fold(0.0, f64::max) * h.nrows() as f64 + 1.0;
    let restricted = &pi_plus * shifted * &pi_plus + pack.pi0() * Complex64::new(big, 0.0);
    let sym = (&restricted + restricted.adjoint()) * Complex64::new(0.5, 0.0);
    dense_spectrum(&crate::sparse::CsrMatrix::from_dense(&sym))[0]
}
