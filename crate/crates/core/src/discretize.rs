//! Second-order finite-difference assembly: the periodic restriction to the
//! torus `Λ_n = [-n-1/2, n+1/2]^d` and the θ-quasi-periodic Floquet fibers on
//! one unit cell.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::potentials::{
    check_reach, displaced_sum, DisplacementField, PeriodicPotential, SingleSitePotential, Uniform, MAX_DIM,
};
use crate::sparse::{Boundary, CsrMatrix, LatticeOperator, Layout};
use crate::torus::TorusShape;
use crate::{Complex64, Error, Result};

/// Grid on `Λ_n` with spacing `h = 1/m`; grid point `k` along an axis sits at
/// `-n - 1/2 + (k+1) h`, so cell `γ` owns the points of `(γ - 1/2, γ + 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub m: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidParameter(format!("m = {m} points per cell; at least 4 required")));
        }
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!("dimension {dim}")));
        }
        Ok(GridSpec { dim, n, m })
    }

    pub fn cells_per_side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn side(&self) -> usize {
        self.cells_per_side() * self.m
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// `N = ((2n+1) m)^d`.
    pub fn len(&self) -> usize {
        self.shape().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> TorusShape {
        TorusShape::new(self.dim, self.side())
    }

    pub fn cell_shape(&self) -> TorusShape {
        TorusShape::new(self.dim, self.m)
    }

    pub fn site_shape(&self) -> TorusShape {
        TorusShape::sites(self.dim, self.n)
    }

    /// Volume element `h^d`.
    pub fn weight(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let mut c = [0usize; MAX_DIM];
        self.shape().coords(idx, &mut c[..self.dim]);
        let h = self.spacing();
        let origin = -(self.n as f64) - 0.5;
        let mut x = [0.0; MAX_DIM];
        for j in 0..self.dim {
            x[j] = origin + (c[j] + 1) as f64 * h;
        }
        x
    }

    /// Torus site owning grid point `idx` and the point's index inside the cell grid.
    pub fn split(&self, idx: usize) -> (usize, usize) {
        let mut c = [0usize; MAX_DIM];
        self.shape().coords(idx, &mut c[..self.dim]);
        let mut cell = [0usize; MAX_DIM];
        let mut local = [0usize; MAX_DIM];
        for j in 0..self.dim {
            cell[j] = c[j] / self.m;
            local[j] = c[j] % self.m;
        }
        (self.site_shape().index(&cell[..self.dim]), self.cell_shape().index(&local[..self.dim]))
    }
}

fn check_dims(p: &PeriodicPotential, q: &SingleSitePotential, dim: usize) -> Result<()> {
    for found in [p.dim(), q.dim()] {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    Ok(())
}

/// `H^P_{λ,ω,n}`: the `2d+1`-point Laplacian with wrap-around links plus the
/// displaced potential sampled at the grid nodes.
pub fn assemble_periodic(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    omega: &DisplacementField,
    grid: GridSpec,
) -> Result<LatticeOperator<f64>> {
    check_dims(p, q, grid.dim)?;
    if omega.dim() != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, found: omega.dim() });
    }
    if omega.n() != grid.n {
        return Err(Error::InvalidParameter(format!("field has n = {} but grid has n = {}", omega.n(), grid.n)));
    }
    check_reach(q, lambda, omega.max_norm())?;
    let shape = grid.shape();
    let sites = grid.site_shape();
    let h2 = grid.spacing() * grid.spacing();
    let mut t = Vec::with_capacity(shape.len() * (2 * grid.dim + 1));
    for i in 0..shape.len() {
        let x = grid.point(i);
        let x = &x[..grid.dim];
        let v = p.eval(x) + displaced_sum(q, lambda, sites, omega, x);
        t.push((i, i, 2.0 * grid.dim as f64 / h2 + v));
        for axis in 0..grid.dim {
            for step in [-1, 1] {
                let (k, _) = shape.neighbor(i, axis, step);
                t.push((i, k, -1.0 / h2));
            }
        }
    }
    Ok(LatticeOperator {
        matrix: CsrMatrix::from_triplets(shape.len(), t),
        layout: Layout::Grid { dim: grid.dim, n: grid.n, m: grid.m },
        boundary: Boundary::Periodic,
        shift: 0.0,
    })
}

/// Periodic operator of the constant field `ζ̄`.
pub fn assemble_constant(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    grid: GridSpec,
) -> Result<LatticeOperator<f64>> {
    if zeta.len() != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, found: zeta.len() });
    }
    assemble_periodic(p, q, lambda, &DisplacementField::constant(grid.n, zeta), grid)
}

/// Fiber `H_{λ,ζ̄}(θ)` on one cell: links crossing the cell boundary along
/// axis `j` pick up `e^{±iθ_j}`, so eigenvectors satisfy `u(x + e_j) = e^{iθ_j} u(x)`.
pub fn assemble_fiber(
    p: &PeriodicPotential,
    q: &SingleSitePotential,
    lambda: f64,
    zeta: &[f64],
    theta: &[f64],
    m: usize,
) -> Result<LatticeOperator<Complex64>> {
    let dim = p.dim();
    check_dims(p, q, dim)?;
    for found in [zeta.len(), theta.len()] {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    if theta.iter().any(|t| !(t.abs() <= PI + 1e-12)) {
        return Err(Error::InvalidParameter(format!("quasi-momentum {theta:?} outside the Brillouin zone")));
    }
    let grid = GridSpec::new(dim, 0, m)?;
    let zeta_norm = zeta.iter().map(|z| z * z).sum::<f64>().sqrt();
    check_reach(q, lambda, zeta_norm)?;
    let shape = grid.cell_shape();
    let sites = grid.site_shape();
    let h2 = grid.spacing() * grid.spacing();
    let phases: Vec<Complex64> = theta.iter().map(|&t| Complex64::new(t.cos(), t.sin())).collect();
    let mut t = Vec::with_capacity(shape.len() * (2 * dim + 1));
    for i in 0..shape.len() {
        let x = grid.point(i);
        let x = &x[..dim];
        let v = p.eval(x) + displaced_sum(q, lambda, sites, &Uniform(zeta), x);
        t.push((i, i, Complex64::new(2.0 * dim as f64 / h2 + v, 0.0)));
        for axis in 0..dim {
            for step in [-1, 1] {
                let (k, wrap) = shape.neighbor(i, axis, step);
                let phase = match wrap {
                    0 => Complex64::new(1.0, 0.0),
                    1 => phases[axis],
                    _ => phases[axis].conj(),
                };
                t.push((i, k, phase * (-1.0 / h2)));
            }
        }
    }
    Ok(LatticeOperator {
        matrix: CsrMatrix::from_triplets(shape.len(), t),
        layout: Layout::Cell { dim, m },
        boundary: Boundary::QuasiPeriodic { theta: theta.to_vec() },
        shift: 0.0,
    })
}

/// The discrete quasi-momenta `2πk/(2n+1)` folded into `(-π, π]`, per axis.
pub fn torus_momenta(n: usize) -> Vec<f64> {
    let l = 2 * n + 1;
    (0..l)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / l as f64;
            if t > PI {
                t - 2.0 * PI
            } else {
                t
            }
        })
        .collect()
}
