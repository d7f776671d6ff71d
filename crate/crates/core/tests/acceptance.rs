//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line (written straight to stderr so it survives output
//! capture) and then asserts the same outcome.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vhj_core::evolution::{
    dt_limit, evolve, make_initial_data, BoundaryCondition, InitialDataSpec, StepEvent, Stepper, StepperConfig,
};
use vhj_core::exact::gamma_barrier;
use vhj_core::experiments::{
    exp_cole_hopf, exp_dichotomy_scan, exp_dirichlet_vss, exp_removability, exp_subsolution_transform,
    exp_universal_bounds, exp_vss_convergence, ColeHopfSpec, DichotomySpec, DirichletVssSpec, RemovabilitySpec,
    SubsolutionSpec, UniversalBoundsSpec, VssConvergenceSpec,
};
use vhj_core::profile::{shoot_vss, ScanSettings};
use vhj_core::{Field, ProblemParams, RadialGrid};

fn record(id: u32, title: &str, ok: bool, detail: &str, started: Instant, limit: Option<Duration>) {
    let elapsed = started.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = ok && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs()));
    let line = format!(
        "{} criterion {id:>2} {title}: {detail} [{:.1}s{budget}]\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} ({title}) failed: {detail}");
    assert!(in_time, "criterion {id} ({title}) exceeded its time limit: {elapsed:?}");
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

#[test]
fn criterion_01_cole_hopf_convergence() {
    let start = Instant::now();
    let report = exp_cole_hopf(&ColeHopfSpec::default()).unwrap();
    let errors = report.table("errors").unwrap().column("error").unwrap();
    let orders = report.table("orders").unwrap().column("order").unwrap();
    let finest = *errors.last().unwrap();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = finest <= 1e-3 && min_order >= 0.8;
    record(
        1,
        "Cole-Hopf q=2",
        ok,
        &format!("error(n=800) = {finest:.3e} (≤ 1e-3), min order = {min_order:.3} (≥ 0.8)"),
        start,
        secs(30),
    );
}

#[test]
fn criterion_02_comparison_principle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bc = BoundaryCondition::DirichletZero;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let dim = rng.gen_range(1..=3);
        let q = rng.gen_range(1.1..3.0);
        let cells = rng.gen_range(20..80);
        let grid = RadialGrid::new(rng.gen_range(0.5..5.0), cells).unwrap();
        let params = ProblemParams::new(dim, q).unwrap();
        let amp = rng.gen_range(0.1..10.0);
        let mut u0: Vec<f64> = (0..=cells).map(|_| amp * rng.gen::<f64>()).collect();
        u0[cells] = 0.0;
        let v0: Vec<f64> = u0.iter().map(|x| x + amp * rng.gen::<f64>()).collect();
        let mut u = Field::from_values(grid, u0).unwrap();
        let mut v = Field::from_values(grid, v0).unwrap();
        let (mut su, mut sv) = (Stepper::new(grid, params).unwrap(), Stepper::new(grid, params).unwrap());
        let mut t = 0.0;
        for _ in 0..100 {
            let dt = dt_limit(&u, q, 0.5, 0.0).min(dt_limit(&v, q, 0.5, 0.0));
            t += dt;
            su.step(&mut u, t, dt, &bc).unwrap();
            sv.step(&mut v, t, dt, &bc).unwrap();
            for (a, b) in u.values().iter().zip(v.values()) {
                worst = worst.max(a - b);
            }
        }
    }
    record(
        2,
        "comparison principle",
        worst <= 1e-12,
        &format!("max(u - v) over 100 pairs x 100 steps = {worst:.2e} (≤ 1e-12)"),
        start,
        secs(10),
    );
}

#[test]
fn criterion_03_gamma_domination() {
    let start = Instant::now();
    let eta = 0.2;
    let grid = RadialGrid::new(5.0, 500).unwrap();
    let h = grid.h();
    let mut worst = 0.0f64;
    for q in [1.3, 1.6] {
        let params = ProblemParams::new(1, q).unwrap();
        let bundle = params.exponents();
        for cap in [1.0, 1e3, 1e6] {
            let f0 = make_initial_data(&InitialDataSpec::Plateau { cap, eta }, &grid, 1).unwrap();
            let mut check = |f: &Field| {
                for (r, u) in grid.nodes().zip(f.values()) {
                    if r > eta + 2.0 * h {
                        worst = worst.max(u / gamma_barrier(r - eta, &bundle).unwrap());
                    }
                }
            };
            check(&f0);
            let mut obs = |e: &StepEvent<'_>| check(e.new);
            evolve(&f0, &params, &BoundaryCondition::DirichletZero, &StepperConfig::until(1.0), &mut [&mut obs])
                .unwrap();
        }
    }
    record(
        3,
        "Γ domination",
        worst <= 1.0 + 1e-6,
        &format!("max u / Γ(r - 0.2) for r > 0.2 + 2h = {worst:.6} (≤ 1 + 1e-6)"),
        start,
        secs(10),
    );
}

#[test]
fn criterion_04_mass_balance() {
    let start = Instant::now();
    let params = ProblemParams::new(1, 1.3).unwrap();
    let grid = RadialGrid::new(10.0, 800).unwrap();
    let f0 = make_initial_data(&InitialDataSpec::MollifiedDirac { k: 10.0, epsilon: 0.1 }, &grid, 1).unwrap();
    let tr = evolve(&f0, &params, &BoundaryCondition::DirichletZero, &StepperConfig::until(1.0), &mut []).unwrap();
    let residual = tr.mass_balance_residual();
    record(
        4,
        "mass balance",
        residual <= 1e-8,
        &format!("|mass(0) - mass(1) - dissipation - outflux| / mass(0) = {residual:.2e} (≤ 1e-8)"),
        start,
        None,
    );
}

#[test]
fn criterion_05_profile_shooting() {
    let start = Instant::now();
    let shoot = |dim: usize, q: f64, tol: f64| {
        let mut s = ScanSettings::default();
        s.shot.tol = tol;
        s.bisect_tol = tol;
        shoot_vss(&ProblemParams::new(dim, q).unwrap(), &s).unwrap()
    };
    let f0s: Vec<f64> = [1e-8, 1e-10, 1e-11]
        .iter()
        .map(|&tol| shoot(1, 1.3, tol).profile().map_or(f64::NAN, |p| p.f0_star))
        .collect();
    let reference = f0s[2];
    let stable = f0s.iter().all(|f| ((f - reference) / reference).abs() < 5e-5);
    let none_16 = !shoot(1, 1.6, 1e-10).exists();
    let none_43 = !shoot(2, 4.0 / 3.0, 1e-10).exists();
    record(
        5,
        "profile shooting",
        stable && none_16 && none_43,
        &format!(
            "f0*(N=1,q=1.3) = {:.8} / {:.8} / {:.8} at tol 1e-8/1e-10/1e-11; \
             no profile at (1,1.6): {none_16}, at (2,4/3): {none_43}",
            f0s[0], f0s[1], f0s[2]
        ),
        start,
        secs(60),
    );
}

#[test]
fn criterion_06_vss_convergence() {
    let start = Instant::now();
    let report = exp_vss_convergence(&VssConvergenceSpec::default()).unwrap();
    let collapse = report.table("collapse").unwrap();
    let errors: Vec<(f64, f64)> = collapse
        .rows
        .iter()
        .filter(|r| r[1] == 1000.0)
        .map(|r| (r[0], r[2]))
        .collect();
    let ok = errors.len() == 3 && errors.iter().all(|(_, e)| *e <= 0.05);
    let detail = errors
        .iter()
        .map(|(t, e)| format!("t={t}: {e:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    record(
        6,
        "VSS convergence k=1000",
        ok,
        &format!("relative error vs profile on η ≤ 3: {detail} (≤ 0.05)"),
        start,
        secs(300),
    );
}

#[test]
fn criterion_07_removability() {
    let start = Instant::now();
    let report = exp_removability(&RemovabilitySpec::default()).unwrap();
    let m = report.table("window").unwrap().column("window_sup").unwrap();
    let decreasing = m.windows(2).all(|w| w[1] < w[0]);
    let ratio = m.last().unwrap() / m[0];
    let detail = m.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" > ");
    record(
        7,
        "removability q=1.6",
        decreasing && ratio <= 0.5,
        &format!("window sups {detail}, final/initial = {ratio:.3} (≤ 0.5)"),
        start,
        secs(300),
    );
}

#[test]
fn criterion_08_dichotomy() {
    let start = Instant::now();
    let report = exp_dichotomy_scan(&DichotomySpec::default()).unwrap();
    let scan = report.table("scan").unwrap();
    let q = scan.column("q").unwrap();
    let exists = scan.column("exists").unwrap();
    let flips: Vec<(f64, f64)> = (1..exists.len())
        .filter(|&i| exists[i] != exists[i - 1])
        .map(|i| (q[i - 1], q[i]))
        .collect();
    let ok = flips == [(1.49, 1.51)];
    record(
        8,
        "dichotomy scan",
        ok,
        &format!("existence flips at {flips:?} (want exactly one, between 1.49 and 1.51)"),
        start,
        secs(600),
    );
}

#[test]
fn criterion_09_dirichlet_sandwich() {
    let start = Instant::now();
    let report = exp_dirichlet_vss(&DirichletVssSpec::default()).unwrap();
    let sandwich = report.table("sandwich").unwrap();
    let ok = match sandwich.rows.last() {
        Some(last) => {
            let ordered = sandwich.rows.iter().all(|r| r[2] <= 0.0);
            let gap = last[1];
            let line = format!(
                "gap at t=0.25 = {:.2}% of upper sup (≤ 5%), max(lower - upper) = {:.2e} (≤ 0)",
                100.0 * gap,
                sandwich.rows.iter().map(|r| r[2]).fold(f64::NEG_INFINITY, f64::max)
            );
            (ordered && gap <= 0.05, line)
        }
        None => (false, "no admissible lower approximant".to_string()),
    };
    record(9, "Dirichlet sandwich", ok.0, &ok.1, start, secs(300));
}

#[test]
fn criterion_10_universal_constants() {
    let start = Instant::now();
    let report = exp_universal_bounds(&UniversalBoundsSpec::default()).unwrap();
    let bounds = report.table("bounds").unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in bounds.rows.chunks(2) {
        let (c0, c1) = (pair[0][2], pair[1][2]);
        let ratio = c0.max(c1) / c0.min(c1);
        ok &= c0.is_finite() && c1.is_finite() && ratio <= 2.0;
        parts.push(format!("{c0:.4}/{c1:.4} (x{ratio:.3})"));
    }
    ok &= !bounds.is_empty();
    record(
        10,
        "C_hat stability",
        ok,
        &format!("C_hat coarse/fine per run: {} (finite, within 2x)", parts.join(", ")),
        start,
        None,
    );
}

#[test]
fn criterion_11_exponent_transfer() {
    let start = Instant::now();
    let report = exp_subsolution_transform(&SubsolutionSpec::default()).unwrap();
    let t = report.table("residual").unwrap();
    let positive: f64 = t.column("positive").unwrap().iter().sum();
    let violations: f64 = t.column("violations").unwrap().iter().sum();
    let fraction = if positive > 0.0 { violations / positive } else { 0.0 };
    record(
        11,
        "exponent transfer",
        fraction <= 1e-3,
        &format!("{violations} violations over {positive} positive-w node-steps = {:.4}% (≤ 0.1%)", 100.0 * fraction),
        start,
        None,
    );
}
