use std::f64::consts::PI;

use gelfand::green::{DomainSpec, Point};
use gelfand::hamiltonian::{find_critical_point, Ansatz, Configuration};
use gelfand::spectral::{
    assemble_h, circulant_report, concentration_set, eigen_h, mu_expansion, predict, predict_mu,
    predict_peak_height, HMatrix,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rustfft::FftPlanner;

fn polygon(m: usize) -> (DomainSpec<f64>, Configuration<f64>) {
    let d = DomainSpec::annulus(0.5).unwrap();
    let rep = find_critical_point(&d, &Configuration::polygonal(m, 0.7), Ansatz::Polygonal).unwrap();
    (d, rep.config)
}

/// Spectrum of a circulant matrix as the FFT of its first row.
fn fft_symbol(h: &HMatrix<f64>) -> Vec<f64> {
    let m = h.dim();
    let mut row: Vec<Complex64> = h.entries.row(0).iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    let mut v: Vec<f64> = row.iter().map(|z| z.re).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn annulus_triangle_has_one_double_pair() {
    let (d, c) = polygon(3);
    let h = assemble_h(&d, &c).unwrap();
    let rep = circulant_report(&h, 3).unwrap();
    let ev = &rep.eigenvalues;
    assert!((ev[1] - ev[2]).abs() <= 1e-9);
    assert!(ev[1] - ev[0] > 1e-6);
    let c1 = eigen_h(&h).vector(0);
    for x in &c1 {
        assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-10);
    }
    assert!(rep.symbol_mismatch <= 1e-10);
    for (a, b) in fft_symbol(&h).iter().zip(ev) {
        assert!((a - b).abs() <= 1e-10);
    }
    assert_eq!(rep.alternating_index, None);
    assert!(rep.simple_beyond_first.is_empty());
}

#[test]
fn annulus_square_has_one_alternating_simple_eigenvalue() {
    let (d, c) = polygon(4);
    let h = assemble_h(&d, &c).unwrap();
    let rep = circulant_report(&h, 4).unwrap();
    assert_eq!(rep.simple_beyond_first.len(), 1);
    let k = rep.alternating_index.unwrap();
    assert_eq!(rep.simple_beyond_first, vec![k]);
    let v = eigen_h(&h).vector(k - 1);
    for x in &v {
        assert!((x.abs() - 0.5).abs() < 1e-10);
    }
    assert!(v[0] * v[1] < 0.0 && v[1] * v[2] < 0.0);
    let doubles = rep.groups.iter().filter(|g| g.multiplicity == 2).count();
    assert_eq!(doubles, 1);
    for (a, b) in fft_symbol(&h).iter().zip(&rep.eigenvalues) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn polygon_entries_are_circulant_and_d_uniform() {
    for m in 2..=6 {
        let (d, c) = polygon(m);
        let h = assemble_h(&d, &c).unwrap();
        let rep = circulant_report(&h, m).unwrap();
        assert!(rep.symbol_mismatch <= 1e-10);
        let pred = predict(&d, &c).unwrap();
        for dj in &pred.d {
            assert!((dj - pred.d[0]).abs() <= 1e-12);
        }
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    assert!(h.entries[(i, j)] < 0.0);
                }
            }
        }
    }
}

#[test]
fn odd_polygons_pair_every_eigenvalue_beyond_the_first() {
    for m in [3, 5, 7] {
        let (d, c) = polygon(m);
        let rep = circulant_report(&assemble_h(&d, &c).unwrap(), m).unwrap();
        assert!(rep.groups.iter().skip(1).all(|g| g.multiplicity == 2), "m={m}");
    }
}

#[test]
fn degenerate_eigenvalues_suppress_concentration_sets() {
    let (d, c) = polygon(3);
    let pred = predict(&d, &c).unwrap();
    assert_eq!(concentration_set(&pred, 1, 1e-3).unwrap().indices, Some(vec![0, 1, 2]));
    assert_eq!(concentration_set(&pred, 2, 1e-3).unwrap().indices, None);
}

#[test]
fn peak_height_and_scaling_identity() {
    let (d, c) = polygon(3);
    let pred = predict(&d, &c).unwrap();
    for &lambda in &[1e-2, 1e-4, 1e-7] {
        let ph = predict_peak_height(&pred, 2, lambda).unwrap();
        let delta = pred.d[1] * lambda.sqrt();
        assert!((lambda * ph.exp() * delta * delta - 1.0).abs() < 1e-12);
    }
}

fn disk_point() -> impl Strategy<Value = Point<f64>> {
    (0.05f64..0.95, 0.0f64..2.0 * PI).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

fn separated(points: &[Point<f64>]) -> bool {
    points.iter().enumerate().all(|(j, p)| {
        points[j + 1..].iter().all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) > 1e-2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn perron_and_two_support(points in prop::collection::vec(disk_point(), 2..=8)) {
        prop_assume!(separated(&points));
        let d = DomainSpec::unit_disk();
        let c = Configuration::new(points);
        let h = assemble_h(&d, &c).unwrap();
        let e = eigen_h(&h);
        let m = c.len();
        let c1 = e.vector(0);
        prop_assert!(c1.iter().all(|&x| x > 1e-6), "{:?}", c1);
        for k in 0..m {
            if !e.is_degenerate(k) {
                let big = e.vector(k).iter().filter(|x| x.abs() > 1e-9).count();
                prop_assert!(big >= 2);
            }
            let a = h.entries.matvec(&e.vector(k));
            for i in 0..m {
                prop_assert!((a[i] - e.values[k] * e.vector(k)[i]).abs() <= 1e-10);
            }
            for j in 0..k {
                let dot: f64 = e.vector(k).iter().zip(e.vector(j)).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn mu_expansion_identity(lk in -2.0f64..2.0, e in 1.0f64..30.0) {
        let lambda = (-e).exp();
        let l = lambda.ln();
        let mu = mu_expansion(lk, lambda).unwrap();
        let back = (mu + 0.5 / l) * l * l;
        let want = 2.0 * PI * lk - (3.0 * 2f64.ln() - 1.0) / 2.0;
        prop_assert!((back - want).abs() <= 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn ordering_follows_lambda(lj in -1.0f64..1.0, gap in 1e-3f64..1.0) {
        let lambda = 1e-8;
        prop_assert!(mu_expansion(lj, lambda).unwrap() < mu_expansion(lj + gap, lambda).unwrap());
    }
}

#[test]
fn leading_term_dominates_as_lambda_vanishes() {
    let pred = predict(&DomainSpec::unit_disk(), &Configuration::new(vec![[0.0, 0.0]])).unwrap();
    let ratio = |lambda: f64| predict_mu(&pred, 1, lambda).unwrap() * (-2.0 * lambda.ln());
    let errs: Vec<f64> = [1e-4, 1e-16, 1e-64, 1e-256].iter().map(|&l| (ratio(l) - 1.0).abs()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(errs[3] < 2e-3);
}
