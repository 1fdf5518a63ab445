//! Convolution-quadrature weights for the discrete half-order time
//! derivatives that enter the nonlocal boundary maps, plus the weighted
//! history sum they are used in.
//!
//! The weights are the Taylor coefficients of the generating function of the
//! underlying one-step method raised to the power `nu`:
//! `(1 - x)^nu` for backward Euler and `((1 - x)/(1 + x))^nu` for the
//! trapezoidal rule.  Only `nu = +1/2` (half derivative) and `nu = -1/2`
//! (half integral) appear in the maps.

use crate::{C64, Error, Result};

/// The two one-step time integrators the solver supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OneStepMethod {
    /// Backward Euler; first order, dissipative.
    Bdf1,
    /// Trapezoidal rule; second order, norm preserving.
    Trapezoidal,
}

impl OneStepMethod {
    /// One-step rate `rho` entering all boundary-map constants:
    /// `1/dt` for backward Euler, `2/dt` for the trapezoidal rule.
    pub fn rate(&self, dt: f64) -> f64 {
        match self {
            OneStepMethod::Bdf1 => 1.0 / dt,
            OneStepMethod::Trapezoidal => 2.0 / dt,
        }
    }
}

/// Precomputed weight table `omega_0 .. omega_count` for one method and one
/// power `nu`.
#[derive(Debug, Clone)]
pub struct CqTable {
    method: OneStepMethod,
    nu: f64,
    weights: Vec<f64>,
}

/// Compute the first `count + 1` weights (indices `0..=count`).
///
/// Backward Euler uses the binomial recurrence
/// `omega_k = (k - 1 - nu)/k * omega_{k-1}`; the trapezoidal rule uses
/// `(k+1) omega_{k+1} = (k-1) omega_{k-1} - 2 nu omega_k` seeded with
/// `omega_0 = 1`, `omega_1 = -2 nu`.
pub fn cq_weights(method: OneStepMethod, nu: f64, count: usize) -> Result<CqTable> {
    if nu != 0.5 && nu != -0.5 {
        return Err(Error::Contract(format!(
            "only nu = +1/2 or -1/2 are supported, got {nu}"
        )));
    }
    let mut w = Vec::with_capacity(count + 1);
    w.push(1.0);
    match method {
        OneStepMethod::Bdf1 => {
            for k in 1..=count {
                let kf = k as f64;
                let prev = w[k - 1];
                w.push((kf - 1.0 - nu) / kf * prev);
            }
        }
        OneStepMethod::Trapezoidal => {
            if count >= 1 {
                w.push(-2.0 * nu);
            }
            for k in 1..count {
                let kf = k as f64;
                let next = ((kf - 1.0) * w[k - 1] - 2.0 * nu * w[k]) / (kf + 1.0);
                w.push(next);
            }
        }
    }
    Ok(CqTable { method, nu, weights: w })
}

impl CqTable {
    pub fn method(&self) -> OneStepMethod {
        self.method
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Weighted history sum `sum_{k=1..=J+1} omega_k * slices[J+1-k]`, where
/// `slices[0..=J]` are equally shaped arrays ordered oldest first.
///
/// This is the pure memory part of a discrete half-order derivative: the
/// `k = 0` term (the newest, yet unsolved level) is carried separately by the
/// Robin coefficient of the boundary map.
pub fn history_sum(table: &CqTable, slices: &[Vec<C64>]) -> Result<Vec<C64>> {
    let Some(first) = slices.first() else {
        return Err(Error::Contract("history sum needs at least one slice".into()));
    };
    let width = first.len();
    if slices.iter().any(|s| s.len() != width) {
        return Err(Error::Contract("history slices must share one shape".into()));
    }
    let j1 = slices.len(); // J + 1
    if table.len() <= j1 {
        return Err(Error::Contract(format!(
            "weight table holds {} entries, need {}",
            table.len(),
            j1 + 1
        )));
    }
    let mut acc = vec![C64::new(0.0, 0.0); width];
    for k in 1..=j1 {
        let w = table.weight(k);
        let slice = &slices[j1 - k];
        for (a, s) in acc.iter_mut().zip(slice) {
            *a += s * w;
        }
    }
    Ok(acc)
}
