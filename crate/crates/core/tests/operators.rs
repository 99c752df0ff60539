use std::f64::consts::PI;

use proptest::prelude::*;

use displace_core::discretize::{assemble_constant, assemble_fiber, assemble_periodic, GridSpec};
use displace_core::eigensolve::{count_below, dense_spectrum};
use displace_core::floquet::{band_bottom, discrete_thetas};
use displace_core::geometry::SupportSet;
use displace_core::potentials::{DisplacementField, PeriodicPotential, SingleSitePotential};
use displace_core::sparse::CsrMatrix;

fn asym(dim: usize) -> SingleSitePotential {
    SingleSitePotential::asymmetric_bump(dim, 1.0, 0.2, 0.2, 2.0, 0.25).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn periodic_potential_is_periodic(x in -3.0..3.0f64, y in -3.0..3.0f64, c in prop::collection::vec(-5.0..5.0f64, 2)) {
        let p = PeriodicPotential::cosine(2, &c).unwrap();
        let v = p.eval(&[x, y]);
        prop_assert!((p.eval(&[x + 1.0, y]) - v).abs() < 1e-9);
        prop_assert!((p.eval(&[x, y - 1.0]) - v).abs() < 1e-9);
    }

    #[test]
    fn single_site_vanishes_off_support(r in 0.0..1.0f64, phi in 0.0..(2.0 * PI)) {
        let q = asym(2);
        let rho = q.support_radius() * (1.0 + r);
        let x = [rho * phi.cos(), rho * phi.sin()];
        prop_assert_eq!(q.value(&x), 0.0);
        let mut g = [1.0; 2];
        q.gradient(&x, &mut g);
        prop_assert_eq!(g, [0.0, 0.0]);
    }

    #[test]
    fn floquet_completeness(zeta in -1.0..1.0f64, lambda in 0.0..0.2f64, n in 0usize..3) {
        let p = PeriodicPotential::cosine(1, &[1.5]).unwrap();
        let q = asym(1);
        let h = assemble_constant(&p, &q, lambda, &[zeta], GridSpec::new(1, n, 8).unwrap()).unwrap();
        let mut union: Vec<f64> = discrete_thetas(1, n)
            .iter()
            .flat_map(|t| dense_spectrum(&assemble_fiber(&p, &q, lambda, &[zeta], t, 8).unwrap().matrix))
            .collect();
        union.sort_by(f64::total_cmp);
        prop_assert!(max_diff(&dense_spectrum(&h.matrix), &union) < 1e-9);
    }

    #[test]
    fn fiber_spectrum_is_even_in_theta(t in -PI..PI, z in -1.0..1.0f64) {
        let p = PeriodicPotential::cosine(1, &[-2.0]).unwrap();
        let q = asym(1);
        let a = dense_spectrum(&assemble_fiber(&p, &q, 0.1, &[z], &[t], 8).unwrap().matrix);
        let b = dense_spectrum(&assemble_fiber(&p, &q, 0.1, &[z], &[-t], 8).unwrap().matrix);
        prop_assert!(max_diff(&a, &b) < 1e-9);
        let bottom = band_bottom(&p, &q, 0.1, &[z], 8).unwrap().energy;
        prop_assert!(a[0] >= bottom - 1e-9);
    }

    #[test]
    fn projection_is_idempotent(x in prop::collection::vec(-4.0..4.0f64, 2), which in 0usize..4) {
        let k = match which {
            0 => SupportSet::ball(&[0.3, -0.2], 1.1),
            1 => SupportSet::sphere(&[0.0, 0.0], 0.7),
            2 => SupportSet::cuboid(&[-1.0, -0.5], &[0.5, 2.0]),
            _ => SupportSet::Ellipsoid { center: vec![0.0, 0.0], axes: vec![2.0, 0.5] },
        };
        let once = k.project(&x);
        let twice = k.project(&once);
        prop_assert!(k.contains(&once, 1e-9));
        prop_assert!(max_diff(&once, &twice) < 1e-9);
        if k.contains(&x, 0.0) && !k.is_boundary_set() {
            prop_assert!(max_diff(&once, &x) < 1e-12);
        }
    }

    #[test]
    fn count_below_is_monotone_and_exact(
        diag in prop::collection::vec(-3.0..3.0f64, 12..40),
        off in -1.0..1.0f64,
        energies in prop::collection::vec(-5.0..5.0f64, 4),
    ) {
        let n = diag.len();
        let mut t: Vec<(usize, usize, f64)> = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        for i in 0..n {
            let j = (i + 1) % n;
            t.push((i, j, off));
            t.push((j, i, off));
            let k = (i * 7 + 3) % n;
            if k != i && k != j && (k + 1) % n != i {
                t.push((i, k, 0.3 * off));
                t.push((k, i, 0.3 * off));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let spec = dense_spectrum(&a);
        let mut es = energies.clone();
        es.sort_by(f64::total_cmp);
        let mut last = 0;
        for e in es {
            let c = count_below(&a, e).unwrap();
            prop_assert!(c >= last);
            last = c;
            if spec.iter().all(|x| (x - e).abs() > 1e-9) {
                prop_assert_eq!(c, spec.iter().filter(|&&x| x <= e).count());
            }
        }
    }
}

#[test]
fn single_site_gradient_is_second_order_accurate() {
    let q = asym(2);
    let x = [0.05, -0.07];
    let mut g = [0.0; 2];
    q.gradient(&x, &mut g);
    let err = |h: f64| {
        let dx = (q.value(&[x[0] + h, x[1]]) - q.value(&[x[0] - h, x[1]])) / (2.0 * h);
        (dx - g[0]).abs()
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!((3.5..4.5).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn smooth_band_bottom_converges_at_second_order() {
    let p = PeriodicPotential::cosine(1, &[4.0]).unwrap();
    let q = SingleSitePotential::zero(1);
    let e: Vec<f64> = [16, 32, 64, 128].iter().map(|&m| band_bottom(&p, &q, 0.0, &[0.0], m).unwrap().energy).collect();
    let r1 = (e[0] - e[1]) / (e[1] - e[2]);
    let r2 = (e[1] - e[2]) / (e[2] - e[3]);
    assert!((3.5..4.5).contains(&r1) && (3.5..4.5).contains(&r2), "successive ratios {r1}, {r2}");
}

#[test]
fn periodic_operator_commutes_with_cell_translations() {
    let p = PeriodicPotential::cosine(1, &[1.0]).unwrap();
    let q = asym(1);
    let grid = GridSpec::new(1, 2, 8).unwrap();
    let omega: Vec<f64> = (0..5).map(|i| 0.9 * ((i as f64) * 1.3).sin()).collect();
    let rolled: Vec<f64> = (0..5).map(|i| omega[(i + 4) % 5]).collect();
    let a = assemble_periodic(&p, &q, 0.1, &DisplacementField::new(2, 1, omega).unwrap(), grid).unwrap();
    let b = assemble_periodic(&p, &q, 0.1, &DisplacementField::new(2, 1, rolled).unwrap(), grid).unwrap();
    assert!(max_diff(&dense_spectrum(&a.matrix), &dense_spectrum(&b.matrix)) < 1e-9);
}
