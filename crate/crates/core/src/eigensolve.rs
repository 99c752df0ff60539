//! Extremal eigenpairs, dense spectra and eigenvalue counting by inertia.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::sparse::{CsrMatrix, Entry};
use crate::{Error, Result};

/// Problems at most this large are diagonalized densely.
pub const DENSE_THRESHOLD: usize = 2000;

/// Below this size inertia is taken from a dense Bunch–Kaufman factorization.
const DENSE_INERTIA: usize = 400;

/// Largest problem for which the dense inertia fallback is attempted.
const DENSE_FALLBACK: usize = 2500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct EigenResult<T> {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: Option<DMatrix<T>>,
    pub residuals: Vec<f64>,
    /// Lanczos steps taken (0 for dense solves).
    pub iterations: usize,
    pub method: Method,
}

impl<T: Entry> EigenResult<T> {
    pub fn vector(&self, i: usize) -> Option<Vec<T>> {
        self.eigenvectors.as_ref().map(|v| v.column(i).iter().cloned().collect())
    }

    pub fn ground(&self) -> f64 {
        self.eigenvalues[0]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub dense_threshold: usize,
    pub basis_size: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { dense_threshold: DENSE_THRESHOLD, basis_size: 120, max_restarts: 400, seed: 0x5eed }
    }
}

pub fn smallest_eigenpairs<T: Entry>(a: &CsrMatrix<T>, k: usize, tol: f64) -> Result<EigenResult<T>> {
    smallest_eigenpairs_with(a, k, tol, &SolverOptions::default())
}

/// The `k` smallest eigenpairs. The ground vector is phase-fixed with
/// [`Entry::fix_phase`], which for real operators is the positive-sum sign.
pub fn smallest_eigenpairs_with<T: Entry>(
    a: &CsrMatrix<T>,
    k: usize,
    tol: f64,
    opts: &SolverOptions,
) -> Result<EigenResult<T>> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a {n} x {n} operator")));
    }
    let mut res = if n <= opts.dense_threshold { dense_eigenpairs(a, k) } else { lanczos(a, k, tol, opts)? };
    if let Some(v) = res.eigenvectors.as_mut() {
        let mut col: Vec<T> = v.column(0).iter().cloned().collect();
        T::fix_phase(&mut col);
        for (dst, src) in v.column_mut(0).iter_mut().zip(col) {
            *dst = src;
        }
    }
    res.residuals = residuals(a, &res);
    Ok(res)
}

fn residuals<T: Entry>(a: &CsrMatrix<T>, res: &EigenResult<T>) -> Vec<f64> {
    let Some(v) = res.eigenvectors.as_ref() else {
        return vec![0.0; res.eigenvalues.len()];
    };
    let n = a.dim();
    let mut y = vec![T::zero(); n];
    res.eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let x: Vec<T> = v.column(i).iter().cloned().collect();
            a.matvec(&x, &mut y);
            y.iter().zip(&x).map(|(yi, xi)| (*yi - *xi * T::from_real(lam)).modulus_squared()).sum::<f64>().sqrt()
        })
        .collect()
}

fn dense_eigenpairs<T: Entry>(a: &CsrMatrix<T>, k: usize) -> EigenResult<T> {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..a.dim()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order.truncate(k);
    let vecs = DMatrix::from_fn(a.dim(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    EigenResult {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: Some(vecs),
        residuals: Vec::new(),
        iterations: 0,
        method: Method::Dense,
    }
}

/// Every eigenvalue, ascending.
pub fn dense_spectrum<T: Entry>(a: &CsrMatrix<T>) -> Vec<f64> {
    let mut e: Vec<f64> = a.to_dense().symmetric_eigenvalues().iter().cloned().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn inner<T: Entry>(u: &[T], w: &[T]) -> T {
    u.iter().zip(w).fold(T::zero(), |s, (a, b)| s + a.conjugate() * *b)
}

fn norm<T: Entry>(u: &[T]) -> f64 {
    u.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

fn axpy<T: Entry>(alpha: T, x: &[T], y: &mut [T]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi -= alpha * *xi);
}

fn orthogonalize<T: Entry>(w: &mut [T], against: &[Vec<T>]) {
    for _ in 0..2 {
        for u in against {
            let c = inner(u, w);
            axpy(c, u, w);
        }
    }
}

struct Run<T> {
    basis: Vec<Vec<T>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    tail: f64,
}

fn lanczos_run<T: Entry>(a: &CsrMatrix<T>, locked: &[Vec<T>], v0: Vec<T>, steps: usize, breakdown: f64) -> Run<T> {
    let n = a.dim();
    let mut basis = vec![v0];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![T::zero(); n];
    loop {
        let j = basis.len() - 1;
        a.matvec(&basis[j], &mut w);
        let aj = inner(&basis[j], &w).real();
        axpy(T::from_real(aj), &basis[j], &mut w);
        if j > 0 {
            axpy(T::from_real(beta[j - 1]), &basis[j - 1], &mut w);
        }
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        alpha.push(aj);
        let b = norm(&w);
        if basis.len() == steps || b <= breakdown {
            return Run { basis, alpha, beta, tail: b };
        }
        beta.push(b);
        let inv = T::from_real(1.0 / b);
        basis.push(w.iter().map(|x| *x * inv).collect());
    }
}

fn random_unit<T: Entry>(rng: &mut ChaCha8Rng, n: usize, locked: &[Vec<T>]) -> Option<Vec<T>> {
    for _ in 0..8 {
        let mut v: Vec<T> =
            (0..n).map(|_| T::from_real((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)).collect();
        orthogonalize(&mut v, locked);
        let nv = norm(&v);
        if nv > 1e-8 {
            let inv = T::from_real(1.0 / nv);
            v.iter_mut().for_each(|x| *x *= inv);
            return Some(v);
        }
    }
    None
}

/// Lanczos with full reorthogonalization, explicit restarts and locking.
/// Each run works on the complement of the locked vectors, so its smallest
/// converged Ritz value bounds every unlocked eigenvalue from below; the
/// iteration stops once that bound reaches the `k`-th locked value, which
/// also recovers degenerate eigenvalues a single Krylov space would miss.
fn lanczos<T: Entry>(a: &CsrMatrix<T>, k: usize, tol: f64, opts: &SolverOptions) -> Result<EigenResult<T>> {
    let n = a.dim();
    let anorm = a.gershgorin_radius().max(f64::MIN_POSITIVE);
    let thresh = tol * anorm;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<T>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut start: Option<Vec<T>> = None;
    let mut restarts = 0;
    let mut iterations = 0;
    while locked.len() < n {
        let v0 = match start.take() {
            Some(v) => v,
            None => match random_unit(&mut rng, n, &locked) {
                Some(v) => v,
                None => break,
            },
        };
        let steps = opts.basis_size.max(k + 2).min(n - locked.len());
        let run = lanczos_run(a, &locked, v0, steps, 1e-13 * anorm);
        iterations += run.alpha.len();
        let m = run.alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                run.alpha[i]
            } else if i + 1 == j {
                run.beta[i]
            } else if j + 1 == i {
                run.beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let ritz = |c: usize| -> Vec<T> {
            let mut y = vec![T::zero(); n];
            for (j, b) in run.basis.iter().enumerate() {
                let s = T::from_real(eig.eigenvectors[(j, c)]);
                y.iter_mut().zip(b).for_each(|(yi, bi)| *yi += s * *bi);
            }
            y
        };
        let bound = {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            (sorted.len() >= k).then(|| sorted[k - 1])
        };
        let est0 = (run.tail * eig.eigenvectors[(m - 1, order[0])]).abs();
        if est0 > thresh {
            restarts += 1;
            if restarts > opts.max_restarts {
                return Err(Error::NotConverged { iterations, residual: est0 });
            }
            start = Some(ritz(order[0]));
            continue;
        }
        let floor = eig.eigenvalues[order[0]];
        if let Some(b) = bound {
            if floor >= b - thresh {
                break;
            }
        }
        for &c in order.iter().take(k) {
            let est = (run.tail * eig.eigenvectors[(m - 1, c)]).abs();
            if est <= thresh {
                let mut y = ritz(c);
                orthogonalize(&mut y, &locked);
                let ny = norm(&y);
                if ny < 0.5 {
                    continue;
                }
                let inv = T::from_real(1.0 / ny);
                y.iter_mut().for_each(|x| *x *= inv);
                locked.push(y);
                values.push(eig.eigenvalues[c]);
            }
        }
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    order.truncate(k);
    if order.len() < k {
        return Err(Error::NotConverged { iterations, residual: f64::INFINITY });
    }
    let vecs = DMatrix::from_fn(n, k, |r, c| locked[order[c]][r]);
    Ok(EigenResult {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors: Some(vecs),
        residuals: Vec::new(),
        iterations,
        method: Method::Lanczos,
    })
}

/// Sylvester inertia of a symmetric matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    fn push(&mut self, d: f64, tiny: f64) {
        if d.abs() <= tiny {
            self.zero += 1;
        } else if d < 0.0 {
            self.negative += 1;
        } else {
            self.positive += 1;
        }
    }
}

/// Number of eigenvalues `≤ e` of a real symmetric matrix.
pub fn count_below(a: &CsrMatrix<f64>, e: f64) -> Result<usize> {
    InertiaCounter::new(a).count_below(e)
}

/// Reusable inertia counter: the bandwidth-reducing ordering and envelope
/// profile are computed once and shared by every shift.
pub struct InertiaCounter<'a> {
    a: &'a CsrMatrix<f64>,
    envelope: Option<Envelope>,
    scale: f64,
}

impl<'a> InertiaCounter<'a> {
    pub fn new(a: &'a CsrMatrix<f64>) -> Self {
        let envelope = (a.dim() > DENSE_INERTIA).then(|| Envelope::new(a));
        InertiaCounter { a, envelope, scale: a.max_abs().max(1.0) }
    }

    /// Inertia of `A - shift·I`.
    pub fn inertia(&self, shift: f64) -> Result<Inertia> {
        match &self.envelope {
            Some(env) => env.inertia(self.a, shift, self.scale),
            None => {
                let mut d = self.a.to_dense();
                for i in 0..d.nrows() {
                    d[(i, i)] -= shift;
                }
                Ok(bunch_kaufman_inertia(d, 1e-14 * self.scale))
            }
        }
    }

    pub fn count_below(&self, e: f64) -> Result<usize> {
        let base = 1e-12 * e.abs().max(1.0);
        let mut last = Error::FactorizationBreakdown { index: 0, pivot: 0.0 };
        for attempt in 0..4 {
            let shift = if attempt == 0 { e } else { e + base * 100f64.powi(attempt - 1) };
            match self.inertia(shift) {
                Ok(i) if i.zero == 0 => return Ok(i.negative),
                Ok(i) => last = Error::FactorizationBreakdown { index: i.negative, pivot: 0.0 },
                Err(err) => last = err,
            }
        }
        if self.a.dim() <= DENSE_FALLBACK {
            let mut d = self.a.to_dense();
            for i in 0..d.nrows() {
                d[(i, i)] -= e + base;
            }
            let i = bunch_kaufman_inertia(d, 0.0);
            return Ok(i.negative + i.zero);
        }
        Err(last)
    }
}

/// Symmetric Bunch–Kaufman elimination on a dense copy, keeping only the
/// signs of the 1×1 and 2×2 pivots.
fn bunch_kaufman_inertia(mut a: DMatrix<f64>, tiny: f64) -> Inertia {
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let n = a.nrows();
    let mut out = Inertia::default();
    let mut k = 0;
    let swap = |a: &mut DMatrix<f64>, p: usize, q: usize| {
        if p != q {
            a.swap_rows(p, q);
            a.swap_columns(p, q);
        }
    };
    while k < n {
        let (r, lam) =
            (k + 1..n).map(|i| (i, a[(i, k)].abs())).fold((k, 0.0), |best, c| if c.1 > best.1 { c } else { best });
        let akk = a[(k, k)].abs();
        if akk.max(lam) == 0.0 {
            out.zero += 1;
            k += 1;
            continue;
        }
        let two = if akk >= alpha * lam {
            false
        } else {
            let sigma = (k..n).filter(|&j| j != r).map(|j| a[(j, r)].abs()).fold(0.0, f64::max);
            if akk * sigma >= alpha * lam * lam {
                false
            } else if a[(r, r)].abs() >= alpha * sigma {
                swap(&mut a, k, r);
                false
            } else {
                swap(&mut a, k + 1, r);
                true
            }
        };
        if !two {
            let d = a[(k, k)];
            out.push(d, tiny);
            if d == 0.0 {
                k += 1;
                continue;
            }
            for j in k + 1..n {
                let f = a[(j, k)] / d;
                if f == 0.0 {
                    continue;
                }
                for i in j..n {
                    let v = a[(i, j)] - f * a[(i, k)];
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            k += 1;
        } else {
            let (d11, d21, d22) = (a[(k, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
            let det = d11 * d22 - d21 * d21;
            if det.abs() <= tiny * tiny || det == 0.0 {
                out.zero += 1;
                out.push(d11 + d22, 0.0);
            } else if det < 0.0 {
                out.negative += 1;
                out.positive += 1;
            } else if d11 + d22 < 0.0 {
                out.negative += 2;
            } else {
                out.positive += 2;
            }
            if det != 0.0 {
                for j in k + 2..n {
                    let (cj1, cj2) = (a[(j, k)], a[(j, k + 1)]);
                    let w1 = (d22 * cj1 - d21 * cj2) / det;
                    let w2 = (d11 * cj2 - d21 * cj1) / det;
                    for i in j..n {
                        let v = a[(i, j)] - (a[(i, k)] * w1 + a[(i, k + 1)] * w2);
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
            }
            k += 2;
        }
    }
    out
}

/// Profile (skyline) `LDLᵀ` without pivoting, in reverse Cuthill–McKee order.
struct Envelope {
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
}

impl Envelope {
    fn new(a: &CsrMatrix<f64>) -> Self {
        let perm = reverse_cuthill_mckee(a);
        let n = a.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        let mut offset = vec![0; n + 1];
        for i in 0..n {
            first[i] = a.row(perm[i]).map(|(j, _)| inv[j]).fold(i, usize::min);
            offset[i + 1] = offset[i] + (i - first[i]);
        }
        Envelope { perm, inv, first, offset }
    }

    fn inertia(&self, a: &CsrMatrix<f64>, shift: f64, scale: f64) -> Result<Inertia> {
        let n = a.dim();
        let tiny = 1e-13 * scale;
        let mut l = vec![0.0; self.offset[n]];
        let mut d = vec![0.0; n];
        let mut out = Inertia::default();
        for i in 0..n {
            let fi = self.first[i];
            let lo = self.offset[i];
            let mut diag = -shift;
            for (j, v) in a.row(self.perm[i]) {
                let jn = self.inv[j];
                if jn < i {
                    l[lo + jn - fi] = v;
                } else if jn == i {
                    diag += v;
                }
            }
            // Row i of L·D, then scaled into L.
            for j in fi..i {
                let fj = self.first[j];
                let ks = fi.max(fj);
                if ks < j {
                    let (head, row_i) = l.split_at_mut(lo);
                    let lj = &head[self.offset[j] + ks - fj..self.offset[j] + j - fj];
                    let wi = &row_i[ks - fi..j - fi];
                    let s: f64 = wi.iter().zip(lj).map(|(x, y)| x * y).sum();
                    row_i[j - fi] -= s;
                }
            }
            let mut acc = 0.0;
            for j in fi..i {
                let w = l[lo + j - fi];
                let lij = w / d[j];
                if !(lij.abs() < 1e10) {
                    return Err(Error::FactorizationBreakdown { index: i, pivot: d[j] });
                }
                acc += w * lij;
                l[lo + j - fi] = lij;
            }
            let di = diag - acc;
            if di.abs() <= tiny {
                return Err(Error::FactorizationBreakdown { index: i, pivot: di });
            }
            d[i] = di;
            out.push(di, 0.0);
        }
        Ok(out)
    }
}

fn reverse_cuthill_mckee(a: &CsrMatrix<f64>) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |root: usize, mark: &mut [bool]| -> Vec<usize> {
        let mut out = vec![root];
        let mut queue = VecDeque::from([root]);
        let mut local = vec![root];
        mark[root] = true;
        while let Some(v) = queue.pop_front() {
            let mut nb: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !mark[j]).collect();
            nb.sort_by_key(|&j| degree[j]);
            for j in nb {
                if !mark[j] {
                    mark[j] = true;
                    local.push(j);
                    out.push(j);
                    queue.push_back(j);
                }
            }
        }
        for v in local {
            mark[v] = false;
        }
        out
    };
    for s in 0..n {
        if seen[s] {
            continue;
        }
        // Pseudo-peripheral root: hop to the last node reached until it stops moving.
        let mut root = s;
        for _ in 0..4 {
            let reach = bfs_levels(root, &mut seen);
            let far = *reach.last().unwrap();
            if far == root {
                break;
            }
            root = far;
        }
        let comp = bfs_levels(root, &mut seen);
        for &v in &comp {
            seen[v] = true;
        }
        order.extend(comp);
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    fn ring(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push((i, (i + n - 1) % n, -1.0));
        }
        CsrMatrix::from_triplets(n, t)
    }

    fn random_symmetric(n: usize, seed: u64) -> CsrMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let v = u();
                t.push((i, j, v));
                if i != j {
                    t.push((j, i, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    fn torus2(side: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for y in 0..side {
            for x in 0..side {
                let i = x + side * y;
                t.push((i, i, 4.0 + 0.01 * ((x * 7 + y * 3) % 5) as f64));
                for (dx, dy) in [(1, 0), (side - 1, 0), (0, 1), (0, side - 1)] {
                    t.push((i, (x + dx) % side + side * ((y + dy) % side), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(side * side, t)
    }

    fn lanczos_only() -> SolverOptions {
        SolverOptions { dense_threshold: 0, ..SolverOptions::default() }
    }

    #[test]
    fn ring_ground_is_constant() {
        let r = smallest_eigenpairs(&ring(8), 1, 1e-12).unwrap();
        assert!(r.ground().abs() < 1e-12);
        let v = r.vector(0).unwrap();
        for x in &v {
            assert!((x - 1.0 / 8f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_matches_dense_real() {
        let a = random_symmetric(50, 3);
        let want = dense_spectrum(&a);
        let r = smallest_eigenpairs_with(&a, 5, 1e-12, &lanczos_only()).unwrap();
        assert_eq!(r.method, Method::Lanczos);
        for (x, y) in r.eigenvalues.iter().zip(&want) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        let v = r.eigenvectors.unwrap();
        let g = v.transpose() * &v;
        assert!((g - DMatrix::identity(5, 5)).amax() < 1e-10);
        assert!(r.residuals.iter().all(|&x| x < 1e-9));
    }

    #[test]
    fn lanczos_matches_dense_hermitian() {
        let re = random_symmetric(40, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut t = Vec::new();
        for i in 0..40 {
            for j in 0..i {
                let s = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                t.push((i, j, Complex64::new(re.get(i, j), s)));
                t.push((j, i, Complex64::new(re.get(i, j), -s)));
            }
            t.push((i, i, Complex64::new(re.get(i, i), 0.0)));
        }
        let a = CsrMatrix::from_triplets(40, t);
        let want = dense_spectrum(&a);
        let r = smallest_eigenpairs_with(&a, 4, 1e-12, &lanczos_only()).unwrap();
        for (x, y) in r.eigenvalues.iter().zip(&want) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_recovers_multiplicity() {
        let mut t = Vec::new();
        let side = 12;
        for y in 0..side {
            for x in 0..side {
                let i = x + side * y;
                t.push((i, i, 4.0));
                for (dx, dy) in [(1, 0), (side - 1, 0), (0, 1), (0, side - 1)] {
                    t.push((i, (x + dx) % side + side * ((y + dy) % side), -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(side * side, t);
        let want = dense_spectrum(&a);
        let r = smallest_eigenpairs_with(&a, 9, 1e-12, &lanczos_only()).unwrap();
        for (x, y) in r.eigenvalues.iter().zip(&want) {
            assert!((x - y).abs() < 1e-10, "{:?} vs {:?}", r.eigenvalues, &want[..9]);
        }
    }

    #[test]
    fn identity_triple() {
        let a = CsrMatrix::<f64>::identity(10);
        for opts in [SolverOptions::default(), lanczos_only()] {
            let r = smallest_eigenpairs_with(&a, 3, 1e-12, &opts).unwrap();
            assert_eq!(r.eigenvalues.len(), 3);
            assert!(r.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        }
        assert!(smallest_eigenpairs(&a, 11, 1e-12).is_err());
    }

    #[test]
    fn count_extremes_and_median() {
        let a = random_symmetric(30, 11);
        let e = dense_spectrum(&a);
        assert_eq!(count_below(&a, e[0] - 1.0).unwrap(), 0);
        assert_eq!(count_below(&a, e[29] + 1.0).unwrap(), 30);
        assert_eq!(count_below(&a, 0.5 * (e[14] + e[15])).unwrap(), 15);
    }

    #[test]
    fn bunch_kaufman_needs_two_by_two() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 2.0, 0.0]);
        let i = bunch_kaufman_inertia(a, 1e-14);
        assert_eq!(i, Inertia { negative: 1, zero: 1, positive: 1 });
    }

    #[test]
    fn envelope_agrees_with_dense() {
        let a = torus2(24);
        let e = dense_spectrum(&a);
        let counter = InertiaCounter::new(&a);
        assert!(counter.envelope.is_some());
        for k in [0usize, 1, 5, 100, 287, 500, 575] {
            let mid = if k + 1 < e.len() { 0.5 * (e[k] + e[k + 1]) } else { e[k] + 1.0 };
            assert_eq!(counter.count_below(mid).unwrap(), k + 1);
        }
        assert_eq!(count_below(&ring(600), 0.0).unwrap(), 1);
        assert_eq!(count_below(&ring(8), 0.0).unwrap(), 1);
    }
}
