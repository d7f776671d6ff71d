//! Problem parameters and the exponents derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Space dimension and absorption exponent of `u_t - Δu + |∇u|^q = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    dim: usize,
    q: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, q: f64) -> Result<Self> {
        if dim < 1 {
            return Err(invalid("dim", "dimension must be at least 1"));
        }
        if !(q.is_finite() && q > 1.0) {
            return Err(invalid("q", format!("requires q > 1, got {q}")));
        }
        Ok(Self { dim, q })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Critical exponent `(N + 2) / (N + 1)`.
    pub fn q_star(&self) -> f64 {
        critical_exponent(self.dim)
    }

    pub fn exponents(&self) -> ExponentBundle {
        derive_exponents(self)
    }
}

pub fn critical_exponent(dim: usize) -> f64 {
    (dim as f64 + 2.0) / (dim as f64 + 1.0)
}

/// Constants attached to a problem instance.
///
/// `gamma_q` exists only for `q < 2`; `gamma_nq` only when the stationary
/// singular solution exists (`N = 1`, or `1 < q < N/(N-1)`), and also requires
/// `q < 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentBundle {
    /// Self-similar decay exponent `(2 - q) / (q - 1)`.
    pub a: f64,
    pub q_star: f64,
    pub gamma_q: Option<f64>,
    pub gamma_nq: Option<f64>,
}

pub fn derive_exponents(params: &ProblemParams) -> ExponentBundle {
    let q = params.q;
    let n = params.dim as f64;
    let a = (2.0 - q) / (q - 1.0);
    let gamma_q = (q < 2.0).then(|| (q - 1.0).powf(-a) / (2.0 - q));
    let stationary_ok = q < 2.0 && (params.dim == 1 || q < n / (n - 1.0));
    // (aγ)^{q-1} = a + 2 - N balances -Γ'' - (N-1)Γ'/s against |Γ'|^q.
    let gamma_nq = stationary_ok.then(|| (a + 2.0 - n).powf(1.0 / (q - 1.0)) / a);
    ExponentBundle {
        a,
        q_star: critical_exponent(params.dim),
        gamma_q,
        gamma_nq,
    }
}
