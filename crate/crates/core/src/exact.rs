//! Closed-form barriers, stationary solutions and the exact `q = 2` solution.
//!
//! Every function here is pure and cheap; the evolution and experiment layers
//! use them as comparison functions and oracles.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{ExponentBundle, ProblemParams};

/// Radial supersolution `Γ(s) = γ_q s^{-a}`, defined for `q < 2`.
pub fn gamma_barrier(s: f64, bundle: &ExponentBundle) -> Result<f64> {
    let gamma = bundle.gamma_q.ok_or(Error::UndefinedBarrier {
        what: "Γ",
        q: q_from_a(bundle.a),
        requirement: "q < 2",
    })?;
    if !(s > 0.0) {
        return Err(Error::Domain { r: s, limit: f64::INFINITY });
    }
    Ok(gamma * s.powf(-bundle.a))
}

/// Stationary singular solution `Γ_N(s) = γ_{N,q} s^{-a}`.
pub fn gamma_stationary(s: f64, params: &ProblemParams, bundle: &ExponentBundle) -> Result<f64> {
    let gamma = bundle.gamma_nq.ok_or(Error::UndefinedBarrier {
        what: "Γ_N",
        q: params.q(),
        requirement: "q < 2 and (N = 1 or q < N/(N-1))",
    })?;
    if !(s > 0.0) {
        return Err(Error::Domain { r: s, limit: f64::INFINITY });
    }
    Ok(gamma * s.powf(-bundle.a))
}

fn q_from_a(a: f64) -> f64 {
    // a = (2 - q)/(q - 1)  <=>  q = (a + 2)/(a + 1)
    (a + 2.0) / (a + 1.0)
}

/// Torsion function of the ball `B_s`: `-Δα = 1` inside, `α = 0` on the sphere.
pub fn torsion_alpha(r: f64, s: f64, dim: usize) -> Result<f64> {
    if !(0.0..s).contains(&r) {
        return Err(Error::Domain { r, limit: s });
    }
    Ok((s * s - r * r) / (2.0 * dim as f64))
}

/// Exponential barrier `λ exp(c t + 1/α_s(r))`, infinite on the sphere `|x| = s`.
pub fn barrier_w(r: f64, t: f64, lambda: f64, s: f64, rate: f64, dim: usize) -> Result<f64> {
    if t < 0.0 {
        return Err(invalid("t", "time must be nonnegative"));
    }
    let alpha = torsion_alpha(r, s, dim)?;
    Ok(lambda * (rate * t + 1.0 / alpha).exp())
}

/// A rate `c` making [`barrier_w`] a supersolution in `B_s × [0, ∞)`.
///
/// With `x = 1/α_s` the residual of `w = λ e^{ct + x}` is
/// `w (c - G)` where
///
/// ```text
/// G(r) = x² + (r/N)² (2x³ + x⁴) - λ^{q-1} e^{(q-1)(ct + x)} (r/N)^q x^{2q},
/// ```
///
/// so any `c ≥ sup G` works. The bound used here splits the ball:
///
/// * `r ≤ s/2`: drop the absorption and take `x` at `r = s/2`, which gives
///   `c₁ = x₁² + (s/2N)² (2x₁³ + x₁⁴)` with `x₁ = 8N/(3s²)`;
/// * `r ≥ s/2`: bound `r` by `s` in the polynomial part and by `s/2` in the
///   absorption, leaving a function `g(x)` of one variable. For
///   `x ≥ max(x₁, 2a)` the exponential term grows faster than the quartic,
///   so once `g < 0` there it stays negative. `c₂` is the maximum of `g` on a
///   geometric grid (ratio 1.0005) up to that point, inflated by 1%.
///
/// The returned rate is `max(c₁, c₂)`.
pub fn barrier_w_rate(lambda: f64, s: f64, dim: usize, q: f64) -> f64 {
    let n = dim as f64;
    let x1 = 8.0 * n / (3.0 * s * s);
    let c1 = x1 * x1 + (s / (2.0 * n)).powi(2) * (2.0 * x1.powi(3) + x1.powi(4));

    let poly = |x: f64| x * x + (s / n).powi(2) * (2.0 * x.powi(3) + x.powi(4));
    let absorb = |x: f64| {
        lambda.powf(q - 1.0) * ((q - 1.0) * x).exp() * (s / (2.0 * n)).powf(q) * x.powf(2.0 * q)
    };
    let a = (2.0 - q) / (q - 1.0);
    let x_mono = x1.max(2.0 * a);
    let mut c2 = f64::NEG_INFINITY;
    let mut x = x1;
    loop {
        let g = poly(x) - absorb(x);
        c2 = c2.max(g);
        if x >= x_mono && g < 0.0 {
            break;
        }
        x *= 1.0005;
    }
    c1.max(1.01 * c2)
}

/// Time factor `J(t) = C (arctan t)^{-1/(q-1)}` with `C^{q-1} = k^{-q}(Kπ/2 + A/(q-1))`.
///
/// `k`, `K`, `A` are the geometry constants of the distance-like family
/// `b_z`; see [`BallGeometry`] for balls.
pub fn barrier_j(t: f64, q: f64, k: f64, big_k: f64, big_a: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain { r: t, limit: f64::INFINITY });
    }
    let c = barrier_j_constant(q, k, big_k, big_a);
    Ok(c * t.atan().powf(-1.0 / (q - 1.0)))
}

pub fn barrier_j_constant(q: f64, k: f64, big_k: f64, big_a: f64) -> f64 {
    (k.powf(-q) * (big_k * FRAC_PI_2 + big_a / (q - 1.0))).powf(1.0 / (q - 1.0))
}

/// Geometry constants `k, K, A` for a ball of radius `R`.
///
/// For a boundary point `z`, `b_z(x) = R - x·z/R` is the distance to the
/// tangent plane at `z`. Then `inf_z b_z = d(x, ∂B_R)`, `|∇b_z| = 1`,
/// `Δb_z = 0` and `b_z ≤ 2R`, so `k = 1`, `K = 1`, `A = 2R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    pub k: f64,
    pub big_k: f64,
    pub big_a: f64,
}

impl BallGeometry {
    pub fn for_ball(radius: f64) -> Self {
        Self {
            k: 1.0,
            big_k: 1.0,
            big_a: 2.0 * radius,
        }
    }

    pub fn j(&self, t: f64, q: f64) -> Result<f64> {
        barrier_j(t, q, self.k, self.big_k, self.big_a)
    }
}

/// `z = 1 - e^{-u}`.
pub fn cole_hopf(u: f64) -> f64 {
    -(-u).exp_m1()
}

/// `u = -ln(1 - z)`, defined for `z < 1`.
pub fn inverse_cole_hopf(z: f64) -> Result<f64> {
    if !(z < 1.0) {
        return Err(invalid("z", format!("inverse transform needs z < 1, got {z}")));
    }
    Ok(-(-z).ln_1p())
}

/// Gaussian data `z0(x) = peak · exp(-|x|²/variance4)` for the `q = 2` oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianInitialData {
    pub z0_peak: f64,
    pub variance4: f64,
}

impl GaussianInitialData {
    pub fn new(z0_peak: f64, variance4: f64) -> Result<Self> {
        if !(z0_peak > 0.0 && z0_peak < 1.0) {
            return Err(invalid("z0_peak", "must lie in (0, 1)"));
        }
        if !(variance4 > 0.0 && variance4.is_finite()) {
            return Err(invalid("variance4", "must be positive"));
        }
        Ok(Self { z0_peak, variance4 })
    }

    /// Heat-evolved `z(r, t)`.
    pub fn z(&self, r: f64, t: f64, dim: usize) -> f64 {
        let spread = self.variance4 + 4.0 * t;
        self.z0_peak * (self.variance4 / spread).powf(dim as f64 / 2.0) * (-r * r / spread).exp()
    }
}

/// Exact solution of `u_t - Δu + |∇u|² = 0` from Gaussian Cole–Hopf data.
pub fn exact_q2_solution(data: &GaussianInitialData, r: f64, t: f64, dim: usize) -> f64 {
    -(-data.z(r, t, dim)).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(dim: usize, q: f64) -> (ProblemParams, ExponentBundle) {
        let p = ProblemParams::new(dim, q).unwrap();
        (p, p.exponents())
    }

    #[test]
    fn gamma_values() {
        let (_, b) = bundle(3, 1.5);
        assert!((gamma_barrier(2.0, &b).unwrap() - 2.0).abs() < 1e-12);
        assert!((gamma_barrier(1.0, &b).unwrap() - 4.0).abs() < 1e-12);
        let (_, b) = bundle(1, 1.2);
        assert!((gamma_barrier(1.0, &b).unwrap() - 781.25).abs() < 1e-9);
        let (_, b) = bundle(1, 2.0);
        assert!(matches!(gamma_barrier(1.0, &b), Err(Error::UndefinedBarrier { .. })));
    }

    #[test]
    fn gamma_decreases_and_blows_up() {
        let (_, b) = bundle(2, 1.3);
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let g = gamma_barrier(i as f64 * 0.05, &b).unwrap();
            assert!(g < prev);
            prev = g;
        }
        assert!(gamma_barrier(1e-8, &b).unwrap() > 1e15);
    }

    #[test]
    fn stationary_validity() {
        let (p, b) = bundle(1, 1.5);
        assert!((gamma_stationary(1.0, &p, &b).unwrap() - 4.0).abs() < 1e-12);
        let (p, b) = bundle(2, 1.5);
        assert!((gamma_stationary(1.0, &p, &b).unwrap() - 1.0).abs() < 1e-12);
        let (p, b) = bundle(3, 1.6);
        assert!(gamma_stationary(1.0, &p, &b).is_err());
    }

    #[test]
    fn torsion() {
        assert_eq!(torsion_alpha(0.0, 1.0, 2).unwrap(), 0.25);
        assert_eq!(torsion_alpha(0.5, 1.0, 1).unwrap(), 0.375);
        assert!(torsion_alpha(1.0 - 1e-12, 1.0, 1).unwrap() < 1e-11);
        assert!(torsion_alpha(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn exponential_barrier_values() {
        let w = barrier_w(0.0, 0.0, 1.0, 1.0, 1.0, 1).unwrap();
        assert!((w - 2f64.exp()).abs() < 1e-12);
        let w0 = barrier_w(0.3, 0.0, 1.0, 1.0, 0.7, 2).unwrap();
        let w1 = barrier_w(0.3, 1.0, 1.0, 1.0, 0.7, 2).unwrap();
        assert!((w1 / w0 - 0.7f64.exp()).abs() < 1e-12);
        let w = barrier_w(0.9, 0.0, 1.0, 1.0, 0.0, 1).unwrap();
        assert!((w.ln() - 1.0 / 0.095).abs() < 1e-9);
        assert!(barrier_w(1.0, 0.0, 1.0, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn j_barrier_values() {
        let j = barrier_j(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((barrier_j_constant(2.0, 1.0, 1.0, 1.0) - (FRAC_PI_2 + 1.0)).abs() < 1e-12);
        assert!((j - (FRAC_PI_2 + 1.0) / (std::f64::consts::PI / 4.0)).abs() < 1e-12);
        let c = barrier_j_constant(1.5, 1.0, 1.0, 1.0);
        assert!((c - (FRAC_PI_2 + 2.0).powi(2)).abs() < 1e-10);
        let j = barrier_j(1.0, 1.5, 1.0, 1.0, 1.0).unwrap();
        assert!((j - c * (std::f64::consts::PI / 4.0).powi(-2)).abs() < 1e-9);
        let far = barrier_j(1e12, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((far - (FRAC_PI_2 + 1.0) / FRAC_PI_2).abs() < 1e-9);
        assert!(barrier_j(0.0, 2.0, 1.0, 1.0, 1.0).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let v = barrier_j(i as f64 * 0.1, 1.3, 1.0, 1.0, 2.0).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn cole_hopf_values() {
        assert_eq!(cole_hopf(0.0), 0.0);
        assert!((cole_hopf(2f64.ln()) - 0.5).abs() < 1e-15);
        assert!(inverse_cole_hopf(1.0).is_err());
        assert!(inverse_cole_hopf(1.5).is_err());
    }

    #[test]
    fn exact_solution_values() {
        let d = GaussianInitialData::new(0.5, 1.0).unwrap();
        assert_eq!(exact_q2_solution(&d, 0.0, 0.0, 1), -(0.5f64).ln());
        for &r in &[0.0f64, 0.3, 1.7] {
            let z0: f64 = 0.5 * (-r * r).exp();
            assert_eq!(exact_q2_solution(&d, r, 0.0, 2), -(-z0).ln_1p());
        }
        let u = exact_q2_solution(&d, 0.0, 0.25, 1);
        assert!((u - 0.436_27).abs() < 1e-5, "{u}");
        assert!(exact_q2_solution(&d, 0.0, 1e9, 3) < 1e-12);
        assert!(GaussianInitialData::new(1.0, 1.0).is_err());
    }
}
