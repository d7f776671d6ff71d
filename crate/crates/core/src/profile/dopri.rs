//! Dormand–Prince 5(4) with the continuous extension of Hairer & Wanner,
//! specialised to two-component states.

pub(crate) type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy(y: &State, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += c * k[0];
        out[1] += c * k[1];
    }
    out
}

/// Accepted step with dense output on `[x_old, x_new]`.
pub(crate) struct StepView {
    pub x_old: f64,
    pub x_new: f64,
    pub y_new: State,
    cont: [State; 5],
}

impl StepView {
    pub fn dense(&self, x: f64) -> State {
        let h = self.x_new - self.x_old;
        let th = (x - self.x_old) / h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.cont;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Outcome {
    Reached { x: f64, y: State },
    Stopped { x: f64, y: State },
    StepUnderflow { x: f64 },
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

pub(crate) fn integrate<F, S>(
    rhs: F,
    x0: f64,
    y0: State,
    x_end: f64,
    tol: Tolerances,
    mut on_step: S,
) -> Outcome
where
    F: Fn(f64, &State) -> State,
    S: FnMut(&StepView) -> Control,
{
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, &y);
    let mut h = (1e-3 * (x_end - x0)).min(tol.h_max);
    let mut last_reject = false;
    while x < x_end {
        if h < 1e-14 * x.abs().max(1.0) {
            return Outcome::StepUnderflow { x };
        }
        let last = x + h >= x_end;
        if last {
            h = x_end - x;
        }
        let k2 = rhs(x + C2 * h, &axpy(&y, &[(h * A21, &k1)]));
        let k3 = rhs(x + C3 * h, &axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]));
        let k4 = rhs(
            x + C4 * h,
            &axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]),
        );
        let k5 = rhs(
            x + C5 * h,
            &axpy(&y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]),
        );
        let k6 = rhs(
            x + h,
            &axpy(
                &y,
                &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            &[(h * A71, &k1), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)],
        );
        let x_new = if last { x_end } else { x + h };
        let k7 = rhs(x_new, &y_new);

        let mut err = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / 2.0).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            last_reject = true;
            continue;
        }
        if err <= 1.0 {
            let mut cont = [[0.0; 2]; 5];
            for i in 0..2 {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                cont[0][i] = y[i];
                cont[1][i] = dy;
                cont[2][i] = bspl;
                cont[3][i] = dy - h * k7[i] - bspl;
                cont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let view = StepView {
                x_old: x,
                x_new,
                y_new,
                cont,
            };
            let control = on_step(&view);
            x = x_new;
            y = y_new;
            k1 = k7;
            if control == Control::Stop {
                return Outcome::Stopped { x, y };
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            if last_reject {
                fac = fac.min(1.0);
            }
            h = (h * fac.clamp(0.2, 5.0)).min(tol.h_max);
            last_reject = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_reject = true;
        }
    }
    Outcome::Reached { x, y }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_and_dense_output() {
        let tol = Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: 0.5,
        };
        let mut worst: f64 = 0.0;
        let out = integrate(
            |_, y| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            10.0,
            tol,
            |s| {
                for j in 1..10 {
                    let x = s.x_old + (s.x_new - s.x_old) * j as f64 / 10.0;
                    let d = s.dense(x);
                    worst = worst.max((d[0] - x.sin()).abs()).max((d[1] - x.cos()).abs());
                }
                Control::Continue
            },
        );
        match out {
            Outcome::Reached { x, y } => {
                assert_eq!(x, 10.0);
                assert!((y[0] - 10f64.sin()).abs() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
        assert!(worst < 1e-7, "dense output error {worst}");
    }

    #[test]
    fn stops_on_request() {
        let tol = Tolerances {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: 0.1,
        };
        let out = integrate(
            |_, y| [y[1], 0.0],
            0.0,
            [1.0, -1.0],
            5.0,
            tol,
            |s| if s.y_new[0] < 0.0 { Control::Stop } else { Control::Continue },
        );
        match out {
            Outcome::Stopped { x, .. } => assert!(x > 1.0 && x <= 1.1 + 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
