use std::f64::consts::PI;

use gelfand::green::{green, green_jet, regular_part, robin, DomainSpec, Point};
use num_complex::Complex64;
use proptest::prelude::*;
use rustfft::FftPlanner;

/// Regular part `K(·, y)` at the grid node `(r_probe, 0)` from a five-point
/// polar finite-difference Dirichlet solve of `ΔK = 0`, `K = (1/2π) log|x − y|`
/// on both circles. The angular direction is diagonalized by a DFT, so each
/// Fourier mode is a tridiagonal radial system.
fn fd_regular_part(a: f64, y: Point<f64>, nr: usize, nt: usize, probe: usize) -> f64 {
    let h = (1.0 - a) / nr as f64;
    let dt = 2.0 * PI / nt as f64;
    let boundary = |r: f64| -> Vec<Complex64> {
        let mut g: Vec<Complex64> = (0..nt)
            .map(|j| {
                let t = j as f64 * dt;
                let d = (r * t.cos() - y[0]).hypot(r * t.sin() - y[1]);
                Complex64::new(d.ln() / (2.0 * PI), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(nt).process(&mut g);
        g
    };
    let inner = boundary(a);
    let outer = boundary(1.0);
    let mut value = Complex64::new(0.0, 0.0);
    for k in 0..nt {
        let sym = (2.0 - 2.0 * (2.0 * PI * k as f64 / nt as f64).cos()) / (dt * dt);
        let n = nr - 1;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let r = a + (i + 1) as f64 * h;
            let rm = r - 0.5 * h;
            let rp = r + 0.5 * h;
            lower[i] = rm / (r * h * h);
            upper[i] = rp / (r * h * h);
            diag[i] = -(rm + rp) / (r * h * h) - sym / (r * r);
        }
        rhs[0] -= lower[0] * inner[k];
        rhs[n - 1] -= upper[n - 1] * outer[k];
        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            let prev = rhs[i - 1];
            rhs[i] -= prev * w;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        x[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (rhs[i] - x[i + 1] * upper[i]) / diag[i];
        }
        value += x[probe - 1];
    }
    value.re / nt as f64
}

fn annulus() -> DomainSpec<f64> {
    DomainSpec::annulus(0.5).unwrap()
}

#[test]
fn annulus_green_matches_fd_laplace_solve() {
    let x = [0.75, 0.0];
    let t = 2.0 * PI / 3.0;
    let y = [0.75 * t.cos(), 0.75 * t.sin()];
    let coarse = fd_regular_part(0.5, y, 80, 480, 40);
    let fine = fd_regular_part(0.5, y, 160, 960, 80);
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let free = -(x[0] - y[0]).hypot(x[1] - y[1]).ln() / (2.0 * PI);
    let g = green(&annulus(), x, y, false).unwrap().value;
    assert!((g - (free + extrapolated)).abs() < 1e-4, "{g} vs {}", free + extrapolated);
    assert!((g - (free + fine)).abs() < 1e-4);
}

#[test]
fn annulus_regular_part_on_diagonal_matches_fd_oracle() {
    let x = [0.7, 0.0];
    let coarse = fd_regular_part(0.5, x, 100, 512, 40);
    let fine = fd_regular_part(0.5, x, 200, 1024, 80);
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let k = regular_part(&annulus(), x, x, false).unwrap().value;
    assert!((k - extrapolated).abs() < 1e-4, "{k} vs {extrapolated}");
    let r = robin(&annulus(), x).unwrap().value;
    assert_eq!(r, k);
}

fn central<F: Fn(Point<f64>) -> f64>(f: F, x: Point<f64>, h: f64) -> [f64; 2] {
    [
        (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h),
        (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h),
    ]
}

fn close(a: [f64; 2], b: [f64; 2], rel: f64) -> bool {
    let scale = a[0].hypot(a[1]).max(b[0].hypot(b[1])).max(1e-3);
    (a[0] - b[0]).hypot(a[1] - b[1]) <= rel * scale
}

#[test]
fn green_gradient_matches_central_differences() {
    let cases: [(DomainSpec<f64>, Point<f64>, Point<f64>); 3] = [
        (DomainSpec::unit_disk(), [0.3, -0.4], [-0.2, 0.5]),
        (annulus(), [0.62, 0.31], [-0.4, 0.55]),
        (DomainSpec::annulus(0.3).unwrap(), [0.0, 0.9], [0.35, -0.1]),
    ];
    for (d, x, y) in cases {
        let an = green(&d, x, y, true).unwrap();
        let fd = central(|p| green(&d, p, y, false).unwrap().value, x, 1e-5);
        assert!(close(an.grad_x, fd, 1e-6), "{:?} vs {fd:?}", an.grad_x);
        let hess = an.hess_x.unwrap();
        for a in 0..2 {
            let fd = central(|p| green(&d, p, y, false).unwrap().grad_x[a], x, 1e-5);
            assert!(close(hess[a], fd, 1e-6));
        }
        assert!((hess[0][1] - hess[1][0]).abs() < 1e-12);
    }
}

#[test]
fn mixed_and_second_argument_derivatives_match_differences() {
    let d = annulus();
    let x = [0.62, 0.31];
    let y = [-0.4, 0.55];
    let jet = green_jet(&d, x, y).unwrap();
    let fd = central(|q| green(&d, x, q, false).unwrap().value, y, 1e-5);
    assert!(close(jet.grad_y, fd, 1e-6));
    for a in 0..2 {
        let fd = central(|q| green(&d, x, q, false).unwrap().grad_x[a], y, 1e-5);
        assert!(close(jet.hess_xy[a], fd, 1e-6));
        let fd = central(|q| green_jet(&d, x, q).unwrap().grad_y[a], y, 1e-5);
        assert!(close(jet.hess_yy[a], fd, 1e-6));
    }
}

#[test]
fn robin_derivatives_match_central_differences() {
    for d in [DomainSpec::unit_disk(), annulus(), DomainSpec::disk(1.7).unwrap()] {
        let x = if d.is_disk() { [0.35, -0.2] } else { [0.5, 0.45] };
        let an = robin(&d, x).unwrap();
        let fd = central(|p| robin(&d, p).unwrap().value, x, 1e-5);
        assert!(close(an.grad, fd, 1e-6), "{:?} vs {fd:?}", an.grad);
        for a in 0..2 {
            let fd = central(|p| robin(&d, p).unwrap().grad[a], x, 1e-5);
            assert!(close(an.hess[a], fd, 1e-6), "{:?} vs {fd:?}", an.hess[a]);
        }
    }
}

#[test]
fn disk_robin_closed_form_along_radius() {
    let d = DomainSpec::unit_disk();
    for i in 0..10 {
        let r = 0.095 * i as f64;
        let got = robin(&d, [r * 0.6, r * 0.8]).unwrap();
        let want = (1.0 - r * r).ln() / (2.0 * PI);
        assert!((got.value - want).abs() < 1e-14);
    }
}

#[test]
fn green_decays_at_the_boundary() {
    for d in [DomainSpec::unit_disk(), annulus()] {
        let y = if d.is_disk() { [0.1, 0.2] } else { [0.0, -0.75] };
        let (inner, outer) = d.radii();
        // radial width for the annulus, diameter for the disk
        let scale = if d.is_disk() { d.diameter() } else { outer - inner };
        for k in 0..16 {
            let t = k as f64 * PI / 8.0 + 0.1;
            let sides: Vec<f64> = if d.is_disk() { vec![-1.0] } else { vec![-1.0, 1.0] };
            for side in sides {
                let at = |eps: f64| {
                    let r = if side < 0.0 { outer - eps } else { inner + eps };
                    green(&d, [r * t.cos(), r * t.sin()], y, false).unwrap().value
                };
                let g = at(1e-3 * scale);
                assert!(g > 0.0 && g <= 1e-3, "G = {g}");
                let slope1 = at(1e-3 * scale) / (1e-3 * scale);
                let slope2 = at(1e-4 * scale) / (1e-4 * scale);
                assert!((slope1 - slope2).abs() < 2e-3 * slope2.abs(), "{slope1} {slope2}");
            }
        }
    }
}

#[test]
fn regular_part_is_discretely_harmonic() {
    let d = annulus();
    let y = [0.55, -0.3];
    let x = [-0.2, 0.7];
    let lap = |h: f64| {
        let k = |p: Point<f64>| regular_part(&d, p, y, false).unwrap().value;
        (k([x[0] + h, x[1]]) + k([x[0] - h, x[1]]) + k([x[0], x[1] + h]) + k([x[0], x[1] - h])
            - 4.0 * k(x))
            / (h * h)
    };
    let l: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&h| lap(h).abs()).collect();
    assert!(l[1] < l[0] / 3.0 && l[2] < l[1] / 3.0, "{l:?}");
    assert!(l[2] < 1e-3);
}

fn annulus_point() -> impl Strategy<Value = Point<f64>> {
    (0.52f64..0.98, 0.0f64..2.0 * PI).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

fn disk_point() -> impl Strategy<Value = Point<f64>> {
    (0.0f64..0.98, 0.0f64..2.0 * PI).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

proptest! {
    #[test]
    fn annulus_green_is_symmetric(x in annulus_point(), y in annulus_point()) {
        prop_assume!((x[0] - y[0]).hypot(x[1] - y[1]) > 1e-3);
        let d = annulus();
        let gxy = green(&d, x, y, false).unwrap().value;
        let gyx = green(&d, y, x, false).unwrap().value;
        prop_assert!((gxy - gyx).abs() <= 1e-12);
        let kxy = regular_part(&d, x, y, false).unwrap().value;
        let kyx = regular_part(&d, y, x, false).unwrap().value;
        prop_assert!((kxy - kyx).abs() <= 1e-12);
    }

    #[test]
    fn disk_green_is_symmetric_and_positive(x in disk_point(), y in disk_point()) {
        prop_assume!((x[0] - y[0]).hypot(x[1] - y[1]) > 1e-3);
        let d = DomainSpec::unit_disk();
        let gxy = green(&d, x, y, false).unwrap().value;
        let gyx = green(&d, y, x, false).unwrap().value;
        prop_assert!((gxy - gyx).abs() <= 1e-12);
        prop_assert!(gxy > 0.0);
    }

    #[test]
    fn annulus_robin_is_rotation_invariant(x in annulus_point(), t in 0.0f64..2.0 * PI) {
        let d = annulus();
        let rot = [x[0] * t.cos() - x[1] * t.sin(), x[0] * t.sin() + x[1] * t.cos()];
        let r1 = robin(&d, x).unwrap().value;
        let r2 = robin(&d, rot).unwrap().value;
        prop_assert!((r1 - r2).abs() <= 1e-12);
    }

    #[test]
    fn truncation_doubling_respects_tail_bound(
        x in annulus_point(), y in annulus_point(), n in 8usize..24,
    ) {
        prop_assume!((x[0] - y[0]).hypot(x[1] - y[1]) > 1e-3);
        let d = DomainSpec::annulus_with_truncation(0.5, n).unwrap();
        let d2 = DomainSpec::annulus_with_truncation(0.5, 2 * n).unwrap();
        let diff = (green(&d, x, y, false).unwrap().value - green(&d2, x, y, false).unwrap().value).abs();
        prop_assert!(diff <= d.series_tail_bound(x, y) + 1e-15);
    }
}
