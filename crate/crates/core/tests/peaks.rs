use std::f64::consts::PI;

use gelfand::eigen::weighted_spectrum;
use gelfand::green::{green, DomainSpec};
use gelfand::pde::*;
use gelfand::peaks::*;
use gelfand::Error;
use proptest::prelude::*;

const SWEEP: [f64; 3] = [1e-3, 1e-4, 1e-5];

fn sweep_grid() -> Discretization<f64> {
    let eps = DiskSolution::<f64>::from_lambda(1.0, 1e-5, DiskBranch::Upper).unwrap().eps2.sqrt();
    Discretization::new(DomainSpec::unit_disk(), GridSpec::radial(2048, 0.3 * eps)).unwrap()
}

fn upper_state(disc: &Discretization<f64>, lambda: f64) -> Vec<f64> {
    let exact = DiskSolution::from_lambda(1.0, lambda, DiskBranch::Upper).unwrap();
    let guess: Vec<f64> = (0..disc.len()).map(|k| exact.u(disc.r[k])).collect();
    newton_solve(disc, lambda, &guess).unwrap()
}

/// Midpoint rule in `r = √8 tan φ`, where `e^U r dr = 8 sin φ cos φ dφ`.
fn bubble_integral(f: impl Fn(f64) -> f64) -> f64 {
    let n = 200_000;
    let h = 0.5 * PI / n as f64;
    (0..n)
        .map(|i| {
            let phi = (i as f64 + 0.5) * h;
            f(8f64.sqrt() * phi.tan()) * 8.0 * phi.sin() * phi.cos() * h
        })
        .sum()
}

#[test]
fn bubble_constants_match_closed_forms() {
    let start = std::time::Instant::now();
    let c = bubble_constants().unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!((c.mass / (8.0 * PI) - 1.0).abs() < 1e-8);
    assert!((c.moment / (-16.0 * PI) - 1.0).abs() < 1e-6);
    assert!((c.log_moment / (-6.0 * 2f64.ln()) - 1.0).abs() < 1e-6);

    let mass = 2.0 * PI * bubble_integral(|_| 1.0);
    let moment = 2.0 * PI * bubble_integral(bubble);
    let log_moment = -bubble_integral(f64::ln);
    assert!((c.mass - mass).abs() < 1e-8 * mass);
    assert!((c.moment - moment).abs() < 1e-7 * moment.abs());
    assert!((c.log_moment - log_moment).abs() < 1e-7 * log_moment.abs());
}

#[test]
fn disk_peak_is_at_the_centre() {
    let disc = sweep_grid();
    let lambda = 1e-4;
    let u = upper_state(&disc, lambda);
    let peaks = locate_peaks(&disc, &u, lambda, 1).unwrap();
    assert_eq!(peaks.len(), 1);
    assert_eq!(peaks.peaks[0].x, [0.0, 0.0]);
    let height = peaks.peaks[0].height;
    assert_eq!(height, u[0]);
    let exact = DiskSolution::from_lambda(1.0, lambda, DiskBranch::Upper).unwrap();
    let closed = -2.0 * lambda.ln() + 6.0 * 2f64.ln() - 2.0 * exact.eps2.ln_1p();
    assert!((height - closed).abs() < 1e-4, "{height} vs {closed}");
    assert!((height - 22.5796).abs() < 1e-3);
    let d = peaks.delta[0];
    assert!((lambda * height.exp() * d * d - 1.0).abs() < 1e-14);
    assert_eq!(peaks.ball_radius, 1.0);

    let err = locate_peaks(&disc, &u, lambda, 2).unwrap_err();
    assert_eq!(err, Error::WrongPeakCount { expected: 2, found: 1 });
}

#[test]
fn scaling_parameter_tends_to_one_eighth() {
    let disc = sweep_grid();
    let errors: Vec<f64> = SWEEP
        .iter()
        .map(|&lambda| {
            let u = upper_state(&disc, lambda);
            let peaks = locate_peaks(&disc, &u, lambda, 1).unwrap();
            (peaks.delta[0] / lambda.sqrt() / 0.125 - 1.0).abs()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn local_mass_on_the_disk() {
    let disc = sweep_grid();
    let mut scaled = Vec::new();
    for &lambda in &SWEEP {
        let u = upper_state(&disc, lambda);
        let peaks = locate_peaks(&disc, &u, lambda, 1).unwrap().with_ball_radius(0.5);
        let sigma = local_mass(&disc, &u, lambda, &peaks)[0];
        let exact = DiskSolution::from_lambda(1.0, lambda, DiskBranch::Upper).unwrap();
        assert!((sigma / exact.mass_in_ball(0.5) - 1.0).abs() < 1e-5);
        let total = Solver::new(disc.clone()).mass(&u, lambda);
        assert!(sigma <= total);
        scaled.push(((sigma - 8.0 * PI) / lambda.sqrt()).abs());
    }
    assert!(scaled.windows(2).all(|w| w[1] < w[0]), "{scaled:?}");
}

#[test]
fn far_field_matches_green_function() {
    let disc = sweep_grid();
    let domain = DomainSpec::unit_disk();
    let probes = [0.5, 0.7, 0.9];
    let mut u_err = Vec::new();
    let mut v_err = Vec::new();
    for &lambda in &SWEEP {
        let u = upper_state(&disc, lambda);
        let peaks = locate_peaks(&disc, &u, lambda, 1).unwrap();
        let pair = &weighted_spectrum(&disc, &u, lambda, 1).unwrap()[0];
        let c = extract_c(&disc, pair, &peaks).raw[0];
        let (mut eu, mut ev) = (0.0f64, 0.0f64);
        for &r in &probes {
            let g = 8.0 * PI * green(&domain, [r, 0.0], [0.0, 0.0], false).unwrap().value;
            eu = eu.max((disc.interpolate(&u, r, 0.0) - g).abs());
            ev = ev.max((pair.value_at(&disc, [0.0, r]) / pair.mu - c * g).abs());
        }
        u_err.push(eu);
        v_err.push(ev);
    }
    assert!(u_err.windows(2).all(|w| w[1] < w[0]), "{u_err:?}");
    assert!(v_err.windows(2).all(|w| w[1] < w[0]), "{v_err:?}");
}

#[test]
fn rescaled_profile_on_the_disk() {
    let disc = sweep_grid();
    let mut second = Vec::new();
    let mut first = Vec::new();
    for &lambda in &SWEEP {
        let u = upper_state(&disc, lambda);
        let peaks = locate_peaks(&disc, &u, lambda, 1).unwrap();
        let pair = &weighted_spectrum(&disc, &u, lambda, 1).unwrap()[0];
        let c = extract_c(&disc, pair, &peaks);
        assert_eq!(c.raw[0], 1.0);
        assert_eq!(c.normalized, vec![1.0]);
        let e = rescaled_profile_error(&disc, pair, &peaks, 0, c.raw[0], 10.0).unwrap();
        second.push(e.second_order);
        first.push(e.first_order);
        let at_centre = rescaled_profile_error(&disc, pair, &peaks, 0, c.raw[0], 1e-9).unwrap();
        assert!(at_centre.second_order < 1e-6);
    }
    assert!(second.windows(2).all(|w| w[1] < w[0]), "{second:?}");
    assert!(first[2] > second[2]);
}

#[test]
fn oversized_window_is_rejected() {
    let disc = sweep_grid();
    let lambda = 1e-3;
    let u = upper_state(&disc, lambda);
    let peaks = locate_peaks(&disc, &u, lambda, 1).unwrap();
    let pair = &weighted_spectrum(&disc, &u, lambda, 1).unwrap()[0];
    let err = rescaled_profile_error(&disc, pair, &peaks, 0, 1.0, 1e3).unwrap_err();
    assert!(matches!(err, Error::WindowExceedsGrid(_)));
}

#[test]
fn annulus_peaks_sit_on_the_polygon() {
    let m = 3;
    let r0 = 0.741790938331325;
    let d = 0.012779511946679542;
    let lambda: f64 = 1e-3;
    let domain = DomainSpec::annulus(0.5).unwrap();
    let disc = Discretization::new(domain, GridSpec::sector(m, 96, 48, r0, d * lambda.sqrt())).unwrap();
    let points: Vec<_> = (0..m)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / m as f64;
            [r0 * t.cos(), r0 * t.sin()]
        })
        .collect();
    let seed = ansatz_seed(&disc, &points, &vec![d; m], lambda).unwrap();
    let u = newton_solve(&disc, lambda, &seed).unwrap();

    let peaks = locate_peaks(&disc, &u, lambda, m).unwrap();
    assert_eq!(peaks.len(), m);
    for (j, p) in peaks.peaks.iter().enumerate() {
        let r = p.x[0].hypot(p.x[1]);
        let delta = peaks.delta[j];
        assert!((r - r0).abs() < 10.0 * delta, "peak {j}: r={r}, δ={delta}");
        let angle = p.x[1].atan2(p.x[0]);
        let target = 2.0 * PI * j as f64 / m as f64;
        let miss = (angle - target + PI).rem_euclid(2.0 * PI) - PI;
        assert!(miss.abs() < 1e-9, "peak {j}: θ={angle}");
        assert!((lambda * p.height.exp() * delta * delta - 1.0).abs() < 1e-14);
    }
    let sep = 2.0 * r0 * (PI / m as f64).sin();
    assert!(peaks.ball_radius <= 0.5 * sep && peaks.ball_radius > 0.2);

    let sigma = local_mass(&disc, &u, lambda, &peaks);
    let total = Solver::new(disc.clone()).mass(&u, lambda);
    assert!(sigma.iter().sum::<f64>() <= total);
    for s in &sigma {
        assert!((s / (8.0 * PI) - 1.0).abs() < 0.02, "σ = {s}");
    }

    let pairs = weighted_spectrum(&disc, &u, lambda, 1).unwrap();
    let c = extract_c(&disc, &pairs[0], &peaks);
    assert!(c.normalized.iter().all(|&x| x >= 0.1));
    assert!(matches!(locate_peaks(&disc, &u, lambda, 4), Err(Error::WrongPeakCount { expected: 4, found: 3 })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bubble_is_radially_decreasing(a in 0.0f64..100.0, b in 0.0f64..100.0) {
        prop_assume!(a < b);
        prop_assert!(bubble(b) < bubble(a));
        prop_assert!(bubble(a) <= 0.0);
    }

    #[test]
    fn constant_density_gives_ball_area(level in -2.0f64..2.0, radius in 0.01f64..1.0, n in 64usize..400) {
        let disc = Discretization::new(DomainSpec::unit_disk(), GridSpec::radial(n, 0.3)).unwrap();
        prop_assume!(radius <= 0.5 * (disc.r[n - 1] + disc.r[n]));
        let u = vec![level; disc.len()];
        let peaks = locate_peaks(&disc, &u, 1.0, 1).unwrap().with_ball_radius(radius);
        let sigma = local_mass(&disc, &u, 1.0, &peaks)[0];
        let exact = level.exp() * PI * radius * radius;
        prop_assert!((sigma - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn alignment_is_a_cosine(a in prop::collection::vec(-1.0f64..1.0, 3), s in -3.0f64..3.0) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3) && s.abs() > 1e-3);
        let b: Vec<f64> = a.iter().map(|x| s * x).collect();
        prop_assert!((alignment(&a, &b) - 1.0).abs() < 1e-12);
    }
}
