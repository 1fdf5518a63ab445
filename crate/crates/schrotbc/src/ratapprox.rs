//! Diagonal rational approximation of the square root in partial-fraction
//! form, plus the Robin-map constants derived from it.
//!
//! The order-`M` approximant
//!
//! ```text
//! R_M(z) = b_0 - sum_{k=1..M} b_k / (z + eta_k^2)
//! b_0 = 2M + 1,   eta_k = tan(k pi / (2M+1)),
//! b_k = 2 eta_k^2 (1 + eta_k^2) / (2M + 1)
//! ```
//!
//! is exact at `z = 1` and approximates `sqrt(z)` in a neighbourhood of the
//! positive real axis that widens with `M`.  The boundary maps never evaluate
//! it directly at large arguments; they use the scaled constants in
//! [`NpRobinConstants`], whose memory recursions reproduce the approximant
//! exactly in the time-stepped setting.

use crate::{C64, Error, Result};

/// Partial-fraction data of the order-`M` square-root approximant.
#[derive(Debug, Clone)]
pub struct PadeTable {
    order: usize,
    b0: f64,
    /// `b[k-1]` holds `b_k` for `k = 1..=M`.
    b: Vec<f64>,
    /// `eta_sq[k-1]` holds `eta_k^2`; all poles sit at `z = -eta_k^2 < 0`.
    eta_sq: Vec<f64>,
}

impl PadeTable {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::Contract("approximation order must be >= 1".into()));
        }
        let n = 2 * order + 1;
        let nf = n as f64;
        let mut b = Vec::with_capacity(order);
        let mut eta_sq = Vec::with_capacity(order);
        for k in 1..=order {
            let theta = k as f64 * std::f64::consts::PI / nf;
            let eta = theta.tan();
            let e2 = eta * eta;
            eta_sq.push(e2);
            b.push(2.0 * e2 * (1.0 + e2) / nf);
        }
        Ok(Self { order, b0: nf, b, eta_sq })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn eta_sq(&self) -> &[f64] {
        &self.eta_sq
    }
}

/// Evaluate the approximant at a complex argument.
///
/// Fails if `z` sits on (or numerically at) one of the real negative poles.
pub fn pade_sqrt_eval(table: &PadeTable, z: C64) -> Result<C64> {
    let mut acc = C64::new(table.b0, 0.0);
    for (bk, e2) in table.b.iter().zip(&table.eta_sq) {
        let den = z + e2;
        if den.norm() <= 1e-12 * (1.0 + e2) {
            return Err(Error::Pole(format!(
                "square-root approximant evaluated at pole z = -{e2:.6e}"
            )));
        }
        acc -= C64::new(*bk, 0.0) / den;
    }
    Ok(acc)
}

/// Constants of the memory-based Robin map obtained by scaling the
/// approximant with the one-step rate `rho`.
///
/// With `b0_bar = b_0 / sqrt(rho)`, `b_bar_k = b_k / sqrt(rho)` and
/// `eta_bar_sq_k = eta_k^2 / rho`, the per-memory weights are
/// `gamma_k = -b_bar_k / (1 + eta_bar_sq_k)` and the instantaneous Robin
/// factor is `robin_factor = b0_bar + (1/rho) sum_k gamma_k`, which equals
/// `R_M(rho) / sqrt(rho)` identically.
#[derive(Debug, Clone)]
pub struct NpRobinConstants {
    pub rho: f64,
    pub b0_bar: f64,
    pub b_bar: Vec<f64>,
    pub eta_bar_sq: Vec<f64>,
    pub gamma: Vec<f64>,
    pub robin_factor: f64,
}

impl NpRobinConstants {
    pub fn new(table: &PadeTable, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Contract(format!(
                "one-step rate must be positive, got {rho}"
            )));
        }
        let sq = rho.sqrt();
        let b0_bar = table.b0 / sq;
        let b_bar: Vec<f64> = table.b.iter().map(|bk| bk / sq).collect();
        let eta_bar_sq: Vec<f64> = table.eta_sq.iter().map(|e2| e2 / rho).collect();
        let gamma: Vec<f64> = b_bar
            .iter()
            .zip(&eta_bar_sq)
            .map(|(bb, eb)| -bb / (1.0 + eb))
            .collect();
        let robin_factor = b0_bar + gamma.iter().sum::<f64>() / rho;
        Ok(Self { rho, b0_bar, b_bar, eta_bar_sq, gamma, robin_factor })
    }

    pub fn order(&self) -> usize {
        self.b_bar.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent closed form: `R_M(z)/sqrt(z) = (1 + r^n)/(1 - r^n)` with
    /// `r = (1 - sqrt(z))/(1 + sqrt(z))` and `n = 2M + 1`.
    fn closed_form_ratio(order: usize, z: f64) -> f64 {
        let s = z.sqrt();
        let r = (1.0 - s) / (1.0 + s);
        let rn = r.powi(2 * order as i32 + 1);
        (1.0 + rn) / (1.0 - rn)
    }

    #[test]
    fn table_order_one() {
        let t = PadeTable::new(1).unwrap();
        assert_eq!(t.b0(), 3.0);
        assert!((t.eta_sq()[0] - 3.0).abs() < 1e-12); // tan(pi/3)^2
        assert!((t.b()[0] - 8.0).abs() < 1e-12); // 2*3*4/3
    }

    #[test]
    fn table_order_two() {
        let t = PadeTable::new(2).unwrap();
        assert_eq!(t.b0(), 5.0);
        let t1 = (std::f64::consts::PI / 5.0).tan();
        let t2 = (2.0 * std::f64::consts::PI / 5.0).tan();
        assert!((t.eta_sq()[0] - t1 * t1).abs() < 1e-12);
        assert!((t.eta_sq()[1] - t2 * t2).abs() < 1e-12);
    }

    #[test]
    fn table_order_zero_rejected() {
        assert!(PadeTable::new(0).is_err());
    }

    #[test]
    fn eval_fixed_points() {
        let t = PadeTable::new(1).unwrap();
        let one = pade_sqrt_eval(&t, C64::new(1.0, 0.0)).unwrap();
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-14);
        let zero = pade_sqrt_eval(&t, C64::new(0.0, 0.0)).unwrap();
        assert!((zero - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eval_exact_at_one_for_all_orders() {
        for m in [1usize, 2, 3, 10, 37, 60] {
            let t = PadeTable::new(m).unwrap();
            let v = pade_sqrt_eval(&t, C64::new(1.0, 0.0)).unwrap();
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-11, "M={m}: {v}");
        }
    }

    #[test]
    fn eval_matches_closed_form() {
        for m in [1usize, 2, 5, 20, 50] {
            let t = PadeTable::new(m).unwrap();
            for i in 0..40 {
                let z = 1e-2 * 10f64.powf(6.0 * i as f64 / 39.0);
                let v = pade_sqrt_eval(&t, C64::new(z, 0.0)).unwrap();
                let expect = closed_form_ratio(m, z) * z.sqrt();
                assert!(
                    (v.re - expect).abs() < 1e-10 * expect.abs().max(1.0),
                    "M={m} z={z}: {v} vs {expect}"
                );
                assert!(v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eval_near_target_midrange() {
        // Around z = 100 the order-50 approximant is within 1e-8 of sqrt(z)
        // in relative terms.
        let t = PadeTable::new(50).unwrap();
        let v = pade_sqrt_eval(&t, C64::new(100.0, 0.0)).unwrap();
        assert!((v.re / 10.0 - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn quality_window_tightens_with_order() {
        // Relative deviation from sqrt(z) over z in [1e-2, 1e2], 200
        // log-sampled points: the window where the stated tolerances hold is
        // set by |(sqrt(z)-1)/(sqrt(z)+1)|^(2M+1), which at these endpoints
        // gives ~5e-4 for M = 20 and ~3e-9 for M = 50.
        for (m, tol) in [(20usize, 1e-3), (50, 1e-8)] {
            let t = PadeTable::new(m).unwrap();
            let mut max_dev: f64 = 0.0;
            for i in 0..200 {
                let z = 1e-2 * 10f64.powf(4.0 * i as f64 / 199.0);
                let v = pade_sqrt_eval(&t, C64::new(z, 0.0)).unwrap();
                max_dev = max_dev.max((v.re / z.sqrt() - 1.0).abs());
            }
            assert!(max_dev <= tol, "M={m}: max deviation {max_dev:.3e}");
        }
    }

    #[test]
    fn eval_at_pole_rejected() {
        let t = PadeTable::new(1).unwrap();
        assert!(pade_sqrt_eval(&t, C64::new(-3.0, 0.0)).is_err());
    }

    #[test]
    fn robin_constants_order_one_unit_rate() {
        let t = PadeTable::new(1).unwrap();
        let c = NpRobinConstants::new(&t, 1.0).unwrap();
        assert!((c.b0_bar - 3.0).abs() < 1e-14);
        assert!((c.b_bar[0] - 8.0).abs() < 1e-14);
        assert!((c.eta_bar_sq[0] - 3.0).abs() < 1e-14);
        assert!((c.gamma[0] + 2.0).abs() < 1e-14);
        assert!((c.robin_factor - 1.0).abs() < 1e-14);
    }

    #[test]
    fn robin_factor_identity() {
        // robin_factor == R_M(rho) / sqrt(rho), for any order and rate.
        for m in [1usize, 2, 5, 20, 50] {
            let t = PadeTable::new(m).unwrap();
            for rho in [0.5, 1.0, 51.2, 102.4, 1000.0] {
                let c = NpRobinConstants::new(&t, rho).unwrap();
                let direct = pade_sqrt_eval(&t, C64::new(rho, 0.0)).unwrap().re / rho.sqrt();
                assert!(
                    (c.robin_factor - direct).abs() < 1e-12 * direct.abs().max(1.0),
                    "M={m} rho={rho}: {} vs {direct}",
                    c.robin_factor
                );
            }
        }
    }

    #[test]
    fn robin_factor_deviation_at_large_rate() {
        // At rho = 1000 the order-50 approximant carries a relative error of
        // 2 r^n / (1 + r^n) with r = (sqrt(rho)-1)/(sqrt(rho)+1) and
        // n = 101, i.e. about 3.35e-3; the Robin factor inherits it exactly.
        let t = PadeTable::new(50).unwrap();
        let c = NpRobinConstants::new(&t, 1000.0).unwrap();
        let dev = (c.robin_factor - 1.0).abs();
        assert!(dev > 3.2e-3 && dev < 3.5e-3, "deviation {dev:.4e}");
        let oracle = (closed_form_ratio(50, 1000.0) - 1.0).abs();
        assert!((dev - oracle).abs() < 1e-12, "{dev} vs {oracle}");
    }

    #[test]
    fn robin_factor_improves_with_order() {
        let rho = 51.2;
        let mut prev = f64::INFINITY;
        for m in [1usize, 2, 5, 10, 20, 50] {
            let t = PadeTable::new(m).unwrap();
            let c = NpRobinConstants::new(&t, rho).unwrap();
            let dev = (c.robin_factor - 1.0).abs();
            assert!(dev <= prev + 1e-15, "M={m}: {dev} vs {prev}");
            prev = dev;
        }
        assert!(prev < 1e-11);
    }

    #[test]
    fn robin_constants_bad_rate_rejected() {
        let t = PadeTable::new(1).unwrap();
        assert!(NpRobinConstants::new(&t, 0.0).is_err());
        assert!(NpRobinConstants::new(&t, -2.0).is_err());
        assert!(NpRobinConstants::new(&t, f64::NAN).is_err());
    }
}
