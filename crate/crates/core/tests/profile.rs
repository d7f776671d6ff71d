//! Self-similar profile invariants and the PDE cross-check.

use vhj_core::evolution::{evolve_to, BoundaryCondition, StepperConfig};
use vhj_core::params::critical_exponent;
use vhj_core::profile::{profile_to_field, shoot_vss, ProfileSolution, ScanSettings};
use vhj_core::{ProblemParams, RadialGrid};

fn shoot(dim: usize, q: f64) -> Option<ProfileSolution> {
    let params = ProblemParams::new(dim, q).unwrap();
    // f0* grows fast as q ↓ 1 (about 8e5 at N = 1, q = 1.1), so the lowest q needs a wider scan.
    let settings = ScanSettings {
        f0_max: if q < 1.15 { 1e7 } else { 1e3 },
        ..ScanSettings::default()
    };
    shoot_vss(&params, &settings).unwrap().profile().cloned()
}

#[test]
fn existence_matches_the_critical_exponent() {
    for dim in 1..=3 {
        let q_star = critical_exponent(dim);
        for q in [1.1, 1.2, 1.3, q_star - 0.02, q_star + 0.02, 1.6] {
            let params = ProblemParams::new(dim, q).unwrap();
            let found = shoot(dim, q);
            assert_eq!(found.is_some(), q < q_star, "N={dim} q={q}");
            if let Some(p) = found {
                let max_f = p.samples.iter().map(|s| s.f).fold(0.0, f64::max);
                assert_eq!(max_f, p.f0_star, "profile peaks on the axis");
                assert!(p.ode_residual() <= 1e-6, "N={dim} q={q}: residual {:e}", p.ode_residual());
                let ratio = p.gamma_ratio(&params.exponents());
                assert!(ratio <= 1.0 + 1e-6, "N={dim} q={q}: f/Γ = {ratio}");
                assert!(p.samples.iter().all(|s| s.f >= 0.0));
            }
        }
    }
}

#[test]
fn rescaled_fields_coincide() {
    let p = shoot(1, 1.3).unwrap();
    let a = p.ode.a;
    let grid = RadialGrid::new(8.0, 1600).unwrap();
    let early = profile_to_field(&p, 0.25, &grid).unwrap();
    let late = profile_to_field(&p, 1.0, &grid).unwrap();
    // Linear interpolation errs by h²/8 · max|u''| ≈ max|Δ²u| / 8; near the axis the
    // profile is quadratic and the bound is attained, so allow a factor of two.
    let curvature = early.values().windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).fold(0.0, f64::max);
    let tol = 4f64.powf(-0.5 * a) * curvature / 4.0;
    for (r, u) in grid.nodes().zip(late.values()).filter(|(r, _)| *r <= 4.0) {
        let expected = 4f64.powf(-0.5 * a) * early.interpolate(r / 2.0);
        assert!((u - expected).abs() <= tol, "r={r}: {u} vs {expected}");
    }
}

#[test]
fn mass_blows_up_as_time_decreases() {
    let p = shoot(1, 1.3).unwrap();
    let grid = RadialGrid::new(20.0, 8000).unwrap();
    let masses: Vec<f64> = [1.0, 0.25, 0.0625]
        .iter()
        .map(|&t| profile_to_field(&p, t, &grid).unwrap().mass(1))
        .collect();
    // (N - a)/2 < 0, so each factor of four in t multiplies the mass by 4^{(a-N)/2}.
    let factor = 4f64.powf(0.5 * (p.ode.a - 1.0));
    for w in masses.windows(2) {
        assert!(w[1] > w[0]);
        assert!((w[1] / w[0] / factor - 1.0).abs() < 1e-2, "{} vs {factor}", w[1] / w[0]);
    }
}

#[test]
fn pde_preserves_the_self_similar_profile() {
    // Seeded with the profile at t = 1/4, the scheme should carry it to t = 1.
    let p = shoot(1, 1.3).unwrap();
    let params = ProblemParams::new(1, 1.3).unwrap();
    let grid = RadialGrid::new(10.0, 4000).unwrap();
    let start = profile_to_field(&p, 0.25, &grid).unwrap();
    let cfg = StepperConfig::until(0.75);
    let end = evolve_to(&start, &params, &BoundaryCondition::DirichletZero, &cfg).unwrap();
    let exact = profile_to_field(&p, 1.0, &grid).unwrap();
    let window = grid.nodes().take_while(|r| *r <= 3.0).count();
    let err = end.values()[..window]
        .iter()
        .zip(&exact.values()[..window])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let rel = err / exact.values()[..window].iter().copied().fold(0.0, f64::max);
    assert!(rel < 5e-3, "relative error {rel}");
}

#[test]
fn f0_is_stable_under_tolerance_tightening() {
    let params = ProblemParams::new(1, 1.3).unwrap();
    let at = |tol: f64| {
        let mut s = ScanSettings::default();
        s.shot.tol = tol;
        s.bisect_tol = tol;
        shoot_vss(&params, &s).unwrap().profile().unwrap().f0_star
    };
    let (loose, tight) = (at(1e-8), at(1e-11));
    assert!(((loose - tight) / tight).abs() < 5e-5, "{loose} vs {tight}");
}
