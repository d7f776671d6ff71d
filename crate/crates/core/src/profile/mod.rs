//! Self-similar profiles `Y(x, t) = t^{-a/2} f(|x| / √t)`.
//!
//! Substituting the ansatz into the equation gives the radial profile ODE
//!
//! ```text
//! f'' + ((N-1)/η + η/2) f' + (a/2) f - |f'|^q = 0,   f(0) = f0,  f'(0) = 0,
//! ```
//!
//! where the time powers balance because `q(a + 1) = a + 2`. Linear tails
//! are either slow (`f ~ C η^{-a}`) or fast (`f ~ η^{a-N} e^{-η²/4}`). The
//! very singular profile is the fast one; it is found by shooting on `f0`
//! between a shot that crosses zero and one that settles on a slow tail.

mod dopri;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exact::gamma_barrier;
use crate::grid::{Field, RadialGrid};
use crate::par;
use crate::params::{ExponentBundle, ProblemParams};

use dopri::{integrate, Control, Outcome, Tolerances};

/// Below this multiple of `f0`, `η^a f` counts as having no slow component.
pub const FAST_TAIL_THRESHOLD: f64 = 1e-6;
/// Largest `|d ln(η^a f) / d ln η|` accepted as a slow plateau.
pub const PLATEAU_SLOPE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileOde {
    pub dim: usize,
    pub q: f64,
    pub a: f64,
}

impl ProfileOde {
    pub fn new(params: &ProblemParams) -> Result<Self> {
        let q = params.q();
        if q >= 2.0 {
            return Err(invalid("q", "self-similar profiles need q < 2"));
        }
        let a = params.exponents().a;
        assert!(
            (q * (a + 1.0) - (a + 2.0)).abs() <= 1e-12 * (a + 2.0),
            "similarity exponents out of balance"
        );
        Ok(Self {
            dim: params.dim(),
            q,
            a,
        })
    }

    /// `f''` from the ODE.
    #[inline]
    pub fn second_derivative(&self, eta: f64, f: f64, fp: f64) -> f64 {
        let n = self.dim as f64;
        -((n - 1.0) / eta + 0.5 * eta) * fp - 0.5 * self.a * f + fp.abs().powf(self.q)
    }

    #[inline]
    pub fn residual(&self, eta: f64, f: f64, fp: f64, fpp: f64) -> f64 {
        fpp - self.second_derivative(eta, f, fp)
    }

    /// Regular expansion at the axis: `f = f0 - a f0 η²/(4N) + …` with the
    /// leading absorption correction `(a f0/2N)^q η^{q+1}/(N+q)` in `f'`.
    pub fn seed(&self, f0: f64, eta0: f64) -> (f64, f64) {
        let n = self.dim as f64;
        let q = self.q;
        let slope = self.a * f0 / (2.0 * n);
        let absorb = slope.powf(q) / (n + q);
        let f = f0 - 0.5 * slope * eta0 * eta0 + absorb * eta0.powf(q + 2.0) / (q + 2.0);
        let fp = -slope * eta0 + absorb * eta0.powf(q + 1.0);
        (f, fp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    HitsZero,
    SlowDecay,
    FastDecay,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub eta: f64,
    pub f: f64,
    pub fp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotSettings {
    pub eta_max: f64,
    /// Relative tolerance of the integrator.
    pub tol: f64,
    pub sample_spacing: f64,
    pub eta0: f64,
    /// How many times the horizon may double while waiting for a slow plateau.
    pub max_doublings: u32,
}

impl Default for ShotSettings {
    fn default() -> Self {
        Self {
            eta_max: 20.0,
            tol: 1e-10,
            sample_spacing: 0.005,
            eta0: 1e-3,
            max_doublings: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    pub f0: f64,
    pub classification: TailClass,
    /// Uniform samples on `[0, min(η_max, η_end)]`.
    pub samples: Vec<ProfileSample>,
    /// Where integration ended (zero crossing, `η_max`, or an extended horizon).
    pub eta_end: f64,
    /// `η^a f` at `η_end`.
    pub slow_tail: f64,
    /// `η^{N-a} e^{η²/4} f` at `min(η_end, η_max)`.
    pub fast_tail: f64,
}

fn tolerances(scale: f64, settings: &ShotSettings) -> Tolerances {
    Tolerances {
        rtol: settings.tol,
        atol: settings.tol * scale * 1e-3,
        h_max: 0.25,
    }
}

/// Integrates one shot from the axis to `η_max` and classifies the tail.
pub fn integrate_profile(ode: &ProfileOde, f0: f64, settings: &ShotSettings) -> Result<ShotResult> {
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(invalid("f0", "initial height must be positive"));
    }
    if settings.eta_max < 20.0 {
        return Err(invalid("eta_max", "tail classification needs eta_max ≥ 20"));
    }
    let rhs = |eta: f64, y: &[f64; 2]| [y[1], ode.second_derivative(eta, y[0], y[1])];
    let (f_seed, fp_seed) = ode.seed(f0, settings.eta0);
    let spacing = settings.sample_spacing;
    let mut samples = vec![ProfileSample {
        eta: 0.0,
        f: f0,
        fp: 0.0,
    }];
    let mut next_k = 1usize;
    let mut crossing = None;
    let outcome = integrate(
        rhs,
        settings.eta0,
        [f_seed, fp_seed],
        settings.eta_max,
        tolerances(f0, settings),
        |step| {
            if step.y_new[0] < 0.0 {
                let (mut lo, mut hi) = (step.x_old, step.x_new);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if step.dense(mid)[0] < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                crossing = Some(lo);
            }
            let limit = crossing.unwrap_or(step.x_new);
            loop {
                let eta = next_k as f64 * spacing;
                if eta > limit + 1e-12 * spacing {
                    break;
                }
                let eta = eta.min(step.x_new);
                let y = step.dense(eta);
                samples.push(ProfileSample {
                    eta,
                    f: y[0],
                    fp: y[1],
                });
                next_k += 1;
            }
            if crossing.is_some() {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    );

    let a = ode.a;
    let n = ode.dim as f64;
    let fast_tail_at = |eta: f64, f: f64| {
        if f > 0.0 {
            (f.ln() + 0.25 * eta * eta + (n - a) * eta.ln()).exp()
        } else {
            0.0
        }
    };

    match outcome {
        Outcome::StepUnderflow { x } => {
            return Ok(ShotResult {
                f0,
                classification: TailClass::Inconclusive,
                samples,
                eta_end: x,
                slow_tail: f64::NAN,
                fast_tail: f64::NAN,
            })
        }
        Outcome::Stopped { .. } => {
            let eta_end = crossing.unwrap_or(settings.eta_max);
            let last = samples.last().copied().unwrap();
            return Ok(ShotResult {
                f0,
                classification: TailClass::HitsZero,
                samples,
                eta_end,
                slow_tail: 0.0,
                fast_tail: fast_tail_at(last.eta, last.f),
            });
        }
        Outcome::Reached { .. } => {}
    }

    let last = *samples.last().unwrap();
    let fast_tail = fast_tail_at(last.eta, last.f);
    let mut classification = classify_tail(&samples, a);
    let mut eta_end = last.eta;
    let mut state = [last.f, last.fp];
    let mut slow_tail = eta_end.powf(a) * state[0];

    // A positive shot whose slow plateau is still forming: push the horizon out.
    let mut doublings = 0;
    while classification == TailClass::Inconclusive && doublings < settings.max_doublings {
        let target = 2.0 * eta_end;
        let mut hit = false;
        let out = integrate(rhs, eta_end, state, target, tolerances(state[0].abs(), settings), |step| {
            if step.y_new[0] < 0.0 {
                hit = true;
                Control::Stop
            } else {
                Control::Continue
            }
        });
        match out {
            Outcome::Reached { x, y } => {
                eta_end = x;
                state = y;
            }
            Outcome::Stopped { x, y } => {
                eta_end = x;
                state = y;
            }
            Outcome::StepUnderflow { x } => {
                eta_end = x;
                break;
            }
        }
        if hit {
            classification = TailClass::HitsZero;
            slow_tail = 0.0;
            break;
        }
        slow_tail = eta_end.powf(a) * state[0];
        let slope = a + eta_end * state[1] / state[0];
        if slow_tail >= FAST_TAIL_THRESHOLD * f0 && slope.abs() < PLATEAU_SLOPE_TOL {
            classification = TailClass::SlowDecay;
        }
        doublings += 1;
    }

    Ok(ShotResult {
        f0,
        classification,
        samples,
        eta_end,
        slow_tail,
        fast_tail,
    })
}

/// Classifies a sampled profile tail.
///
/// * `HitsZero`: some sample is negative.
/// * `FastDecay`: `η^a f` is nonincreasing over the second half of the range
///   and ends below `1e-6·f(0)`.
/// * `SlowDecay`: `η^a f` ends above that threshold and its logarithmic slope
///   `a + η f'/f` stays below `1e-3` in magnitude over the last tenth.
/// * otherwise `Inconclusive`.
pub fn classify_tail(samples: &[ProfileSample], a: f64) -> TailClass {
    if samples.iter().any(|s| s.f < 0.0) {
        return TailClass::HitsZero;
    }
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return TailClass::Inconclusive;
    };
    let f0 = first.f;
    let eta_end = last.eta;
    let v = |s: &ProfileSample| s.eta.powf(a) * s.f;
    let window: Vec<&ProfileSample> = samples.iter().filter(|s| s.eta >= 0.5 * eta_end).collect();
    let v_end = v(last);
    if v_end < FAST_TAIL_THRESHOLD * f0 {
        let monotone = window.windows(2).all(|w| v(w[1]) <= v(w[0]) * (1.0 + 1e-12));
        return if monotone {
            TailClass::FastDecay
        } else {
            TailClass::Inconclusive
        };
    }
    let flat = samples
        .iter()
        .filter(|s| s.eta >= 0.9 * eta_end && s.f > 0.0)
        .all(|s| (a + s.eta * s.fp / s.f).abs() < PLATEAU_SLOPE_TOL);
    if flat {
        TailClass::SlowDecay
    } else {
        TailClass::Inconclusive
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub f0_min: f64,
    pub f0_max: f64,
    pub points_per_decade: usize,
    /// Bisection stops once `hi/lo - 1` drops below this.
    pub bisect_tol: f64,
    pub shot: ShotSettings,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            f0_min: 1e-3,
            f0_max: 1e3,
            points_per_decade: 8,
            bisect_tol: 1e-10,
            shot: ShotSettings::default(),
        }
    }
}

impl ScanSettings {
    pub fn scan_points(&self) -> Vec<f64> {
        let decades = (self.f0_max / self.f0_min).log10();
        let count = (decades * self.points_per_decade as f64).ceil().max(1.0) as usize;
        (0..=count)
            .map(|i| self.f0_min * 10f64.powf(decades * i as f64 / count as f64))
            .collect()
    }
}

/// Which side of the transition produces shots that cross zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    ZeroBelow,
    ZeroAbove,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub lo: f64,
    pub hi: f64,
    pub orientation: Orientation,
}

/// Fast-decay profile with dense uniform samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSolution {
    pub ode: ProfileOde,
    pub f0_star: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    pub orientation: Orientation,
    pub transitions: Vec<Transition>,
    pub slow_tail: f64,
    pub fast_tail: f64,
    pub samples: Vec<ProfileSample>,
}

impl ProfileSolution {
    pub fn eta_max(&self) -> f64 {
        self.samples.last().map(|s| s.eta).unwrap_or(0.0)
    }

    /// Cubic Hermite interpolation of `f`; zero beyond the sampled range.
    pub fn value(&self, eta: f64) -> f64 {
        let eta = eta.abs();
        let n = self.samples.len();
        if n < 2 || eta > self.eta_max() {
            return 0.0;
        }
        let dx = self.samples[1].eta - self.samples[0].eta;
        let i = ((eta / dx).floor() as usize).min(n - 2);
        let (s0, s1) = (&self.samples[i], &self.samples[i + 1]);
        let h = s1.eta - s0.eta;
        let t = (eta - s0.eta) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * s0.f
            + (t3 - 2.0 * t2 + t) * h * s0.fp
            + (-2.0 * t3 + 3.0 * t2) * s1.f
            + (t3 - t2) * h * s1.fp
    }

    /// `max |residual| / max f` over samples with `η ≥ 0.1`, with `f''`
    /// from fourth-order centered differences of the sampled `f'`.
    ///
    /// Near the axis `f'` carries an `η^{q+1}` term from the absorption, too
    /// rough for the stencil, so those samples are skipped.
    pub fn ode_residual(&self) -> f64 {
        let s = &self.samples;
        let scale = s.iter().fold(0.0f64, |m, x| m.max(x.f.abs()));
        let mut worst = 0.0f64;
        for i in 2..s.len().saturating_sub(2) {
            if s[i - 2].eta < 0.1 {
                continue;
            }
            let h = s[i + 1].eta - s[i].eta;
            let fpp = (s[i - 2].fp - 8.0 * s[i - 1].fp + 8.0 * s[i + 1].fp - s[i + 2].fp) / (12.0 * h);
            worst = worst.max(self.ode.residual(s[i].eta, s[i].f, s[i].fp, fpp).abs());
        }
        worst / scale
    }

    /// Largest `f(η) / Γ(η)` for sampled `η ≥ 0.5`.
    pub fn gamma_ratio(&self, bundle: &ExponentBundle) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.eta >= 0.5)
            .map(|s| s.f / gamma_barrier(s.eta, bundle).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["eta", "f", "fprime"])?;
        for s in &self.samples {
            w.serialize((s.eta, s.f, s.fp))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "f0_star": self.f0_star,
            "N": self.ode.dim,
            "q": self.ode.q,
            "a": self.ode.a,
            "classification": TailClass::FastDecay,
            "bracket": [self.bracket.0, self.bracket.1],
            "orientation": self.orientation,
            "transitions": self.transitions,
            "slow_tail": self.slow_tail,
            "fast_tail": self.fast_tail,
            "eta_max": self.eta_max(),
            "ode_residual": self.ode_residual(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ShootOutcome {
    Profile(ProfileSolution),
    /// No zero-crossing/slow transition with a fast-decay window in the scan.
    NoFastDecayProfile { scan: Vec<(f64, TailClass)> },
}

impl ShootOutcome {
    pub fn profile(&self) -> Option<&ProfileSolution> {
        match self {
            Self::Profile(p) => Some(p),
            Self::NoFastDecayProfile { .. } => None,
        }
    }

    pub fn exists(&self) -> bool {
        self.profile().is_some()
    }
}

/// Scans `f0` on a log grid, bisects every zero-crossing/positive transition,
/// and returns the first fast-decay profile that respects the `Γ` bound.
pub fn shoot_vss(params: &ProblemParams, settings: &ScanSettings) -> Result<ShootOutcome> {
    let ode = ProfileOde::new(params)?;
    let bundle = params.exponents();
    let points = settings.scan_points();
    let shots = par::try_map(&points, |&f0| integrate_profile(&ode, f0, &settings.shot))?;
    let scan: Vec<(f64, TailClass)> = shots.iter().map(|s| (s.f0, s.classification)).collect();
    let hits: Vec<bool> = scan.iter().map(|(_, c)| *c == TailClass::HitsZero).collect();

    let transitions: Vec<Transition> = hits
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(i, w)| Transition {
            lo: points[i],
            hi: points[i + 1],
            orientation: if w[0] { Orientation::ZeroBelow } else { Orientation::ZeroAbove },
        })
        .collect();
    if transitions.is_empty() {
        return Ok(ShootOutcome::NoFastDecayProfile { scan });
    }

    let candidates = par::try_map(&transitions, |tr| bisect(&ode, tr, settings))?;
    let mut found: Vec<ProfileSolution> = candidates
        .into_iter()
        .flatten()
        .map(|(shot, bracket, orientation)| ProfileSolution {
            ode,
            f0_star: shot.f0,
            bracket,
            orientation,
            transitions: transitions.clone(),
            slow_tail: shot.slow_tail,
            fast_tail: shot.fast_tail,
            samples: shot.samples,
        })
        .collect();
    if found.is_empty() {
        return Ok(ShootOutcome::NoFastDecayProfile { scan });
    }
    let pick = found
        .iter()
        .position(|p| p.gamma_ratio(&bundle) <= 1.0 + 1e-6)
        .unwrap_or(0);
    Ok(ShootOutcome::Profile(found.swap_remove(pick)))
}

/// Converged shot with its final bracket and orientation.
type Bisected = (ShotResult, (f64, f64), Orientation);

fn bisect(ode: &ProfileOde, tr: &Transition, settings: &ScanSettings) -> Result<Option<Bisected>> {
    let (mut lo, mut hi) = (tr.lo, tr.hi);
    let zero_below = tr.orientation == Orientation::ZeroBelow;
    let shot_settings = ShotSettings {
        max_doublings: 0,
        ..settings.shot.clone()
    };
    let mut best: Option<ShotResult> = None;
    for _ in 0..200 {
        let converged = hi / lo - 1.0 < settings.bisect_tol;
        if converged && best.is_some() {
            break;
        }
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
        let mid = (lo * hi).sqrt();
        let shot = integrate_profile(ode, mid, &shot_settings)?;
        let zero = shot.classification == TailClass::HitsZero;
        if zero == zero_below {
            lo = mid;
        } else {
            hi = mid;
        }
        if shot.classification == TailClass::FastDecay {
            best = Some(shot);
        }
    }
    Ok(best.map(|s| (s, (lo, hi), tr.orientation)))
}

/// Samples `t^{-a/2} f(r t^{-1/2})` on the grid.
pub fn profile_to_field(profile: &ProfileSolution, t: f64, grid: &RadialGrid) -> Result<Field> {
    if !(t > 0.0) {
        return Err(invalid("t", "profile fields need t > 0"));
    }
    let a = profile.ode.a;
    let amp = t.powf(-0.5 * a);
    let scale = t.sqrt();
    Ok(Field::from_fn(*grid, |r| amp * profile.value(r / scale)))
}
