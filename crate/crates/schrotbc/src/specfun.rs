//! Legendre and Hermite polynomial evaluation, Legendre-Gauss-Lobatto grids,
//! and the discrete Legendre / Fourier transforms the solver is built on.
//!
//! Everything here works on the reference interval `[-1, 1]` (Legendre side)
//! or `[-pi, pi)` (Fourier side); the physical-domain Jacobians live in
//! [`crate::evolve`].

use crate::{C64, Error, Result};

/// Tolerance for the Newton iteration locating interior Lobatto nodes.
const LGL_NEWTON_TOL: f64 = 1e-14;
/// Iteration cap for the same Newton loop; it normally converges in < 10.
const LGL_NEWTON_MAX_ITER: usize = 100;

/// Evaluate the Legendre polynomial `L_n` and its derivative at `y`.
///
/// Uses the three-term (Bonnet) recurrence together with the joint
/// derivative recurrence `L'_{k+1} = (k+1) L_k + y L'_k`, which is stable on
/// the whole interval including the endpoints.
pub fn legendre_eval(n: usize, y: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    // (L_{k-1}, L_k) and (L'_{k-1}, L'_k), starting from k = 1.
    let (mut pm, mut p) = (1.0, y);
    let (mut dpm, mut dp) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let pn = ((2.0 * kf + 1.0) * y * p - kf * pm) / (kf + 1.0);
        let dpn = (kf + 1.0) * p + y * dp;
        pm = p;
        p = pn;
        dpm = dp;
        dp = dpn;
    }
    let _ = (pm, dpm);
    (p, dp)
}

/// Evaluate the physicists' Hermite polynomial `H_n` at `x` via
/// `H_{n+1} = 2x H_n - 2n H_{n-1}`.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut hm, mut h) = (1.0, 2.0 * x);
    for k in 1..n {
        let hn = 2.0 * x * h - 2.0 * (k as f64) * hm;
        hm = h;
        h = hn;
    }
    h
}

/// Legendre-Gauss-Lobatto grid of a given polynomial order.
///
/// An order-`N` grid has `N + 1` nodes: the endpoints `±1` plus the `N - 1`
/// roots of `L_N'`, with weights `w_j = 2 / (N (N+1) L_N(x_j)^2)`.  The
/// associated quadrature is exact for polynomials of degree `<= 2N - 1`.
#[derive(Debug, Clone)]
pub struct LglGrid {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LglGrid {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::Contract("LGL grid order must be >= 1".into()));
        }
        let n = order;
        let nf = n as f64;
        let mut nodes = vec![0.0; n + 1];
        nodes[0] = -1.0;
        nodes[n] = 1.0;
        // Interior nodes: Newton on f = L_N', seeded with Chebyshev-Lobatto
        // points.  f' = L_N'' is taken from the Legendre ODE
        // (1 - x^2) L_N'' = 2 x L_N' - N (N+1) L_N.
        for j in 1..n {
            let mut x = -(std::f64::consts::PI * j as f64 / nf).cos();
            let mut converged = false;
            for _ in 0..LGL_NEWTON_MAX_ITER {
                let (p, dp) = legendre_eval(n, x);
                let resid = (1.0 - x * x) * dp;
                let slope = 2.0 * x * dp - nf * (nf + 1.0) * p;
                let dx = resid / slope;
                x -= dx;
                if resid.abs() <= LGL_NEWTON_TOL || dx.abs() <= 4.0 * f64::EPSILON {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::RootFinding(format!(
                    "Lobatto node {j} of order {n} did not converge"
                )));
            }
            nodes[j] = x;
        }
        // The node set is symmetric about the origin; enforce that exactly so
        // downstream quadrature sums are symmetric to the last bit.
        for j in 1..=(n - 1) / 2 {
            let m = 0.5 * (nodes[j] - nodes[n - j]);
            nodes[j] = m;
            nodes[n - j] = -m;
        }
        if n % 2 == 0 {
            nodes[n / 2] = 0.0;
        }
        let weights = nodes
            .iter()
            .map(|&x| {
                let (p, _) = legendre_eval(n, x);
                2.0 / (nf * (nf + 1.0) * p * p)
            })
            .collect();
        Ok(Self { order, nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Nodes in ascending order, `nodes()[0] == -1`, `nodes()[order] == +1`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights; they sum to 2.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Discrete Legendre transform on an order-`N` Lobatto grid.
///
/// Analysis projects point values onto `L_0 .. L_N` with the discrete norms
/// of the grid (`gamma_hat_p = 2/(2p+1)` for `p < N` and `2/N` for `p = N`),
/// synthesis sums the series back at the nodes.  The two maps are exact
/// inverses of each other in exact arithmetic.
#[derive(Debug, Clone)]
pub struct LegendreTransform {
    grid: LglGrid,
    /// `values[p][j] = L_p(x_j)`.
    values: Vec<Vec<f64>>,
    gamma_hat: Vec<f64>,
}

impl LegendreTransform {
    pub fn new(order: usize) -> Result<Self> {
        let grid = LglGrid::new(order)?;
        Ok(Self::from_grid(grid))
    }

    pub fn from_grid(grid: LglGrid) -> Self {
        let n = grid.order();
        let values: Vec<Vec<f64>> = (0..=n)
            .map(|p| grid.nodes().iter().map(|&x| legendre_eval(p, x).0).collect())
            .collect();
        let gamma_hat: Vec<f64> = (0..=n)
            .map(|p| {
                if p < n {
                    2.0 / (2.0 * p as f64 + 1.0)
                } else {
                    2.0 / n as f64
                }
            })
            .collect();
        Self { grid, values, gamma_hat }
    }

    pub fn grid(&self) -> &LglGrid {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.grid.order()
    }

    /// Discrete norm of `L_p` on this grid.
    pub fn gamma_hat(&self, p: usize) -> f64 {
        self.gamma_hat[p]
    }

    /// Point values at the nodes -> Legendre coefficients.
    pub fn analysis(&self, data: &[C64]) -> Result<Vec<C64>> {
        let n = self.order();
        if data.len() != n + 1 {
            return Err(Error::Contract(format!(
                "Legendre analysis expects {} samples, got {}",
                n + 1,
                data.len()
            )));
        }
        let w = self.grid.weights();
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        for (p, out) in coeffs.iter_mut().enumerate() {
            let lp = &self.values[p];
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..=n {
                acc += data[j] * (w[j] * lp[j]);
            }
            *out = acc / self.gamma_hat[p];
        }
        Ok(coeffs)
    }

    /// Legendre coefficients -> point values at the nodes.
    pub fn synthesis(&self, coeffs: &[C64]) -> Result<Vec<C64>> {
        let n = self.order();
        if coeffs.len() != n + 1 {
            return Err(Error::Contract(format!(
                "Legendre synthesis expects {} coefficients, got {}",
                n + 1,
                coeffs.len()
            )));
        }
        let mut data = vec![C64::new(0.0, 0.0); n + 1];
        for (p, &c) in coeffs.iter().enumerate() {
            let lp = &self.values[p];
            for j in 0..=n {
                data[j] += c * lp[j];
            }
        }
        Ok(data)
    }
}

/// Discrete Fourier transform on the equispaced periodic grid
/// `y_j = -pi + 2 pi j / N` with the signed mode set `{-N/2, ..., N/2 - 1}`.
///
/// Coefficients are stored in standard DFT index order: slot `k` holds mode
/// `k` for `k < N/2` and mode `k - N` otherwise.  `N` must be even; a
/// radix-2 FFT is used when `N` is a power of two, a direct summation
/// otherwise.
#[derive(Debug, Clone)]
pub struct FourierTransform {
    n: usize,
}

impl FourierTransform {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Contract(format!(
                "Fourier size must be even and >= 2, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid nodes `y_j = -pi + 2 pi j / N`.
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.n)
            .map(|j| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / n)
            .collect()
    }

    /// Signed mode number stored at coefficient slot `k`.
    pub fn mode(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Coefficient slot holding signed mode `m`.
    pub fn index_of(&self, m: i64) -> usize {
        let half = (self.n / 2) as i64;
        debug_assert!(m >= -half && m < half);
        m.rem_euclid(self.n as i64) as usize
    }

    /// Point values at the nodes -> mode coefficients,
    /// `f~_q = (1/N) sum_j f(y_j) exp(-i q y_j)`.
    pub fn analysis(&self, data: &[C64]) -> Result<Vec<C64>> {
        if data.len() != self.n {
            return Err(Error::Contract(format!(
                "Fourier analysis expects {} samples, got {}",
                self.n,
                data.len()
            )));
        }
        // With y_j = -pi + 2 pi j / N the kernel splits into (-1)^k times the
        // standard DFT kernel (k and the signed mode share parity: N is even).
        let mut out = dft(data, -1.0);
        let scale = 1.0 / self.n as f64;
        for (k, v) in out.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { scale } else { -scale };
            *v *= sign;
        }
        Ok(out)
    }

    /// Mode coefficients -> point values at the nodes,
    /// `f(y_j) = sum_q f~_q exp(i q y_j)`.
    pub fn synthesis(&self, coeffs: &[C64]) -> Result<Vec<C64>> {
        if coeffs.len() != self.n {
            return Err(Error::Contract(format!(
                "Fourier synthesis expects {} coefficients, got {}",
                self.n,
                coeffs.len()
            )));
        }
        let twisted: Vec<C64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c } else { -c })
            .collect();
        Ok(dft(&twisted, 1.0))
    }
}

/// Unnormalized DFT `out_k = sum_j data_j exp(sign * 2 pi i j k / N)`;
/// radix-2 in place when the length is a power of two, direct otherwise.
fn dft(data: &[C64], sign: f64) -> Vec<C64> {
    let n = data.len();
    if n.is_power_of_two() {
        let mut buf = data.to_vec();
        fft_radix2(&mut buf, sign);
        buf
    } else {
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &d) in data.iter().enumerate() {
                let ang = sign * 2.0 * std::f64::consts::PI * (j * k % n) as f64 / n as f64;
                acc += d * C64::new(ang.cos(), ang.sin());
            }
            *o = acc;
        }
        out
    }
}

fn fft_radix2(buf: &mut [C64], sign: f64) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * std::f64::consts::PI / len as f64;
        let wlen = C64::new(ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut w = C64::new(1.0, 0.0);
            for i in 0..len / 2 {
                let u = buf[start + i];
                let v = buf[start + i + len / 2] * w;
                buf[start + i] = u + v;
                buf[start + i + len / 2] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng, rngs::StdRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn legendre_low_orders() {
        assert_eq!(legendre_eval(0, 0.3), (1.0, 0.0));
        assert_eq!(legendre_eval(1, -0.7), (-0.7, 1.0));
        let (p, dp) = legendre_eval(2, 0.5);
        assert!((p - (-0.125)).abs() < 1e-15);
        assert!((dp - 1.5).abs() < 1e-15);
    }

    #[test]
    fn legendre_endpoint_values() {
        for n in 0..20 {
            let (p1, dp1) = legendre_eval(n, 1.0);
            let (pm1, dpm1) = legendre_eval(n, -1.0);
            let nf = n as f64;
            let sgn = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((p1 - 1.0).abs() < 1e-13);
            assert!((dp1 - nf * (nf + 1.0) / 2.0).abs() < 1e-11);
            assert!((pm1 - sgn).abs() < 1e-13);
            assert!((dpm1 + sgn * nf * (nf + 1.0) / 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn legendre_ode_residual() {
        // (1 - y^2) L'' - 2 y L' + n (n+1) L = 0, with L'' from a finite
        // difference of the recurrence derivative.
        for n in [3usize, 7, 12] {
            for &y in &[-0.9, -0.3, 0.2, 0.8] {
                let h = 1e-6;
                let (_, dp_p) = legendre_eval(n, y + h);
                let (_, dp_m) = legendre_eval(n, y - h);
                let (p, dp) = legendre_eval(n, y);
                let ddp = (dp_p - dp_m) / (2.0 * h);
                let resid = (1.0 - y * y) * ddp - 2.0 * y * dp
                    + (n * (n + 1)) as f64 * p;
                assert!(resid.abs() < 1e-4, "n={n} y={y} resid={resid}");
            }
        }
    }

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite_eval(0, 1.7), 1.0);
        assert_eq!(hermite_eval(1, 0.5), 1.0);
        assert_eq!(hermite_eval(2, 1.0), 2.0); // 4 x^2 - 2 at x = 1
        assert_eq!(hermite_eval(3, 2.0), 40.0); // 8 x^3 - 12 x at x = 2
    }

    #[test]
    fn hermite_derivative_identity() {
        // H'_{n+1} = 2 (n+1) H_n, checked by central differences.
        let h = 1e-6;
        for n in 0..6 {
            for &x in &[-1.3, 0.4, 2.1] {
                let d = (hermite_eval(n + 1, x + h) - hermite_eval(n + 1, x - h)) / (2.0 * h);
                let expect = 2.0 * (n as f64 + 1.0) * hermite_eval(n, x);
                assert!(
                    (d - expect).abs() < 1e-4 * (1.0 + expect.abs()),
                    "n={n} x={x}: {d} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn lgl_small_grids() {
        let g1 = LglGrid::new(1).unwrap();
        assert_eq!(g1.nodes(), &[-1.0, 1.0]);
        assert_eq!(g1.weights(), &[1.0, 1.0]);

        let g2 = LglGrid::new(2).unwrap();
        assert_eq!(g2.nodes(), &[-1.0, 0.0, 1.0]);
        assert!((g2.weights()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g2.weights()[1] - 4.0 / 3.0).abs() < 1e-15);
        assert!((g2.weights()[2] - 1.0 / 3.0).abs() < 1e-15);

        let g4 = LglGrid::new(4).unwrap();
        let r = (3.0f64 / 7.0).sqrt();
        assert!((g4.nodes()[1] + r).abs() < 1e-14);
        assert!((g4.nodes()[2]).abs() < 1e-15);
        assert!((g4.nodes()[3] - r).abs() < 1e-14);
    }

    #[test]
    fn lgl_order_zero_rejected() {
        assert!(LglGrid::new(0).is_err());
    }

    #[test]
    fn lgl_quadrature_exactness() {
        // Exact for monomials up to degree 2N - 1: integral of y^k over
        // [-1, 1] is 2/(k+1) for even k, 0 for odd k.
        for n in [2usize, 3, 5, 8, 16] {
            let g = LglGrid::new(n).unwrap();
            assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for k in 0..=(2 * n - 1) {
                let q: f64 = g
                    .nodes()
                    .iter()
                    .zip(g.weights())
                    .map(|(&x, &w)| w * x.powi(k as i32))
                    .sum();
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                assert!(
                    (q - exact).abs() < 1e-12,
                    "n={n} k={k}: quad={q} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn lgl_discrete_orthogonality() {
        // (L_p, L_q) under the grid quadrature is gamma_p delta_pq as long as
        // p + q <= 2N - 1; the (N, N) entry is 2/N instead of 2/(2N+1).
        let n = 10;
        let g = LglGrid::new(n).unwrap();
        for p in 0..=n {
            for q in 0..=n {
                if p + q > 2 * n - 1 && p != q {
                    continue;
                }
                let s: f64 = g
                    .nodes()
                    .iter()
                    .zip(g.weights())
                    .map(|(&x, &w)| w * legendre_eval(p, x).0 * legendre_eval(q, x).0)
                    .sum();
                let exact = if p != q {
                    0.0
                } else if p < n {
                    2.0 / (2.0 * p as f64 + 1.0)
                } else {
                    2.0 / n as f64
                };
                assert!((s - exact).abs() < 1e-12, "p={p} q={q}: {s} vs {exact}");
            }
        }
    }

    #[test]
    fn legendre_transform_picks_out_basis_vectors() {
        let t = LegendreTransform::new(8).unwrap();
        let samples: Vec<C64> = t
            .grid()
            .nodes()
            .iter()
            .map(|&x| c(legendre_eval(3, x).0, 0.0))
            .collect();
        let coeffs = t.analysis(&samples).unwrap();
        for (p, &cf) in coeffs.iter().enumerate() {
            let expect = if p == 3 { 1.0 } else { 0.0 };
            assert!((cf - c(expect, 0.0)).norm() < 1e-13, "p={p}: {cf}");
        }

        let ones = t.synthesis(&{
            let mut e0 = vec![c(0.0, 0.0); 9];
            e0[0] = c(1.0, 0.0);
            e0
        })
        .unwrap();
        for v in ones {
            assert!((v - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn legendre_transform_highest_mode_normalization() {
        // The degree-N column exercises the corrected discrete norm 2/N.
        let n = 12;
        let t = LegendreTransform::new(n).unwrap();
        let samples: Vec<C64> = t
            .grid()
            .nodes()
            .iter()
            .map(|&x| c(legendre_eval(n, x).0, 0.0))
            .collect();
        let coeffs = t.analysis(&samples).unwrap();
        assert!((coeffs[n] - c(1.0, 0.0)).norm() < 1e-12);
        for p in 0..n {
            assert!(coeffs[p].norm() < 1e-12, "p={p}: {}", coeffs[p]);
        }
    }

    #[test]
    fn legendre_transform_round_trip() {
        let t = LegendreTransform::new(16).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let data: Vec<C64> = (0..17)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let back = t.synthesis(&t.analysis(&data).unwrap()).unwrap();
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn legendre_transform_length_mismatch() {
        let t = LegendreTransform::new(4).unwrap();
        assert!(t.analysis(&vec![c(0.0, 0.0); 4]).is_err());
        assert!(t.synthesis(&vec![c(0.0, 0.0); 6]).is_err());
    }

    #[test]
    fn fourier_constant_and_pure_mode() {
        let f = FourierTransform::new(8).unwrap();
        let ones = vec![c(1.0, 0.0); 8];
        let coeffs = f.analysis(&ones).unwrap();
        for k in 0..8 {
            let expect = if f.mode(k) == 0 { 1.0 } else { 0.0 };
            assert!((coeffs[k] - c(expect, 0.0)).norm() < 1e-14);
        }

        let wave: Vec<C64> = f
            .nodes()
            .iter()
            .map(|&y| C64::new(0.0, 2.0 * y).exp())
            .collect();
        let coeffs = f.analysis(&wave).unwrap();
        for k in 0..8 {
            let expect = if f.mode(k) == 2 { 1.0 } else { 0.0 };
            assert!(
                (coeffs[k] - c(expect, 0.0)).norm() < 1e-13,
                "mode {}: {}",
                f.mode(k),
                coeffs[k]
            );
        }
    }

    #[test]
    fn fourier_round_trip_pow2_and_direct() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in [8usize, 12] {
            let f = FourierTransform::new(n).unwrap();
            let data: Vec<C64> = (0..n)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let back = f.synthesis(&f.analysis(&data).unwrap()).unwrap();
            for (a, b) in data.iter().zip(&back) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_odd_size_rejected() {
        assert!(FourierTransform::new(7).is_err());
        assert!(FourierTransform::new(0).is_err());
    }

    #[test]
    fn fourier_mode_indexing() {
        let f = FourierTransform::new(8).unwrap();
        let modes: Vec<i64> = (0..8).map(|k| f.mode(k)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for k in 0..8 {
            assert_eq!(f.index_of(f.mode(k)), k);
        }
    }

    proptest! {
        #[test]
        fn fourier_parseval(seed in 0u64..1000) {
            let n = 16usize;
            let f = FourierTransform::new(n).unwrap();
            let mut rng = StdRng::seed_from_u64(seed);
            let data: Vec<C64> = (0..n)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let coeffs = f.analysis(&data).unwrap();
            let grid_energy: f64 =
                data.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            let mode_energy: f64 = coeffs.iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((grid_energy - mode_energy).abs() < 1e-12);
        }

        #[test]
        fn legendre_round_trip_random_orders(order in 2usize..24, seed in 0u64..200) {
            let t = LegendreTransform::new(order).unwrap();
            let mut rng = StdRng::seed_from_u64(seed);
            let data: Vec<C64> = (0..=order)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let back = t.synthesis(&t.analysis(&data).unwrap()).unwrap();
            for (a, b) in data.iter().zip(&back) {
                prop_assert!((a - b).norm() < 1e-11);
            }
        }
    }
}
