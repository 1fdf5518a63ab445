//! Boundary-adapted Legendre basis, boundary lifting, and the banded
//! per-mode linear algebra of the spectral solver.
//!
//! For a complex Robin coefficient `kappa` the basis functions
//! `phi_p = L_p + b_p L_{p+2}` satisfy homogeneous Robin conditions on both
//! walls, which renders the one-dimensional stiffness matrix diagonal and the
//! mass matrix pentadiagonal.  Inhomogeneous wall data enters through a
//! degree-one lifting polynomial.  Each transverse mode then leads to one
//! small banded complex system solved by LU with partial pivoting.

use crate::{C64, Error, Result};

/// Tolerance used to detect poles in the basis and lifting coefficients.
const POLE_TOL: f64 = 1e-12;

/// Legendre norm `gamma_k = ||L_k||^2 = 2/(2k+1)` on `[-1, 1]`.
pub fn norm_gamma(k: usize) -> f64 {
    2.0 / (2.0 * k as f64 + 1.0)
}

/// Value and first derivative of a Legendre series at the left wall
/// (`y = -1`) and the right wall (`y = +1`), from `L_p(±1) = (±1)^p` and
/// `L_p'(±1) = (±1)^{p+1} p(p+1)/2`.
pub fn wall_trace(coeffs: &[C64]) -> (C64, C64) {
    let mut left = C64::new(0.0, 0.0);
    let mut right = C64::new(0.0, 0.0);
    for (p, c) in coeffs.iter().enumerate() {
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        left += c * sign;
        right += c;
    }
    (left, right)
}

/// First derivative of a Legendre series at the two walls, `(left, right)`.
pub fn wall_derivative(coeffs: &[C64]) -> (C64, C64) {
    let mut left = C64::new(0.0, 0.0);
    let mut right = C64::new(0.0, 0.0);
    for (p, c) in coeffs.iter().enumerate() {
        let slope = 0.5 * (p * (p + 1)) as f64;
        let sign = if p % 2 == 0 { -1.0 } else { 1.0 };
        left += c * (sign * slope);
        right += c * slope;
    }
    (left, right)
}

/// Robin-adapted polynomial basis of order `N` for a wall coefficient
/// `kappa`: functions `phi_p = L_p + b_p L_{p+2}` for `p = 0..=N-2`.
#[derive(Debug, Clone)]
pub struct BoundaryBasis {
    kappa: C64,
    order: usize,
    b: Vec<C64>,
}

/// Build the basis; fails when `kappa` sits on a pole of some `b_p`.
pub fn build_basis(kappa: C64, order: usize) -> Result<BoundaryBasis> {
    if order < 2 {
        return Err(Error::Contract(format!(
            "basis order must be at least 2, got {order}"
        )));
    }
    let mut b = Vec::with_capacity(order - 1);
    for p in 0..=order - 2 {
        let num = kappa + 0.5 * (p * (p + 1)) as f64;
        let den = kappa + 0.5 * ((p + 2) * (p + 3)) as f64;
        if den.norm() <= POLE_TOL * (1.0 + kappa.norm()) {
            return Err(Error::Pole(format!(
                "basis coefficient b_{p} has a pole at kappa = {kappa}"
            )));
        }
        b.push(-num / den);
    }
    Ok(BoundaryBasis { kappa, order, b })
}

impl BoundaryBasis {
    pub fn kappa(&self) -> C64 {
        self.kappa
    }

    /// Polynomial order `N`; Legendre coefficient arrays have `N + 1` entries.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions, `N - 1`.
    pub fn interior_len(&self) -> usize {
        self.order - 1
    }

    pub fn b(&self) -> &[C64] {
        &self.b
    }

    /// Convert boundary-adapted coefficients to Legendre coefficients
    /// (the two-diagonal conversion matrix applied to `w_hat`).
    pub fn to_legendre(&self, w_hat: &[C64]) -> Result<Vec<C64>> {
        if w_hat.len() != self.interior_len() {
            return Err(Error::Contract(format!(
                "expected {} basis coefficients, got {}",
                self.interior_len(),
                w_hat.len()
            )));
        }
        let mut u = vec![C64::new(0.0, 0.0); self.order + 1];
        for (p, w) in w_hat.iter().enumerate() {
            u[p] += w;
            u[p + 2] += self.b[p] * w;
        }
        Ok(u)
    }

    /// Inner products of a field (given by Legendre coefficients) with every
    /// basis function: `g_p = gamma_p f_p + b_p gamma_{p+2} f_{p+2}`.
    pub fn quadrature_rhs(&self, f_tilde: &[C64]) -> Result<Vec<C64>> {
        if f_tilde.len() != self.order + 1 {
            return Err(Error::Contract(format!(
                "expected {} Legendre coefficients, got {}",
                self.order + 1,
                f_tilde.len()
            )));
        }
        let g = (0..self.interior_len())
            .map(|p| f_tilde[p] * norm_gamma(p) + self.b[p] * f_tilde[p + 2] * norm_gamma(p + 2))
            .collect();
        Ok(g)
    }

    /// Banded stiffness and mass operators for this basis.
    pub fn operators(&self) -> BandedOperator {
        let n = self.interior_len();
        let mut s_diag = Vec::with_capacity(n);
        let mut m_diag = Vec::with_capacity(n);
        let mut m_upper = Vec::with_capacity(n.saturating_sub(2));
        for k in 0..n {
            let bk = self.b[k];
            s_diag.push(bk * (-2.0 * (2.0 * k as f64 + 3.0)));
            m_diag.push(norm_gamma(k) + bk * bk * norm_gamma(k + 2));
            if k + 2 < n {
                // Row k, column k+2; the mass matrix is symmetric, so the
                // same value sits at row k+2, column k.
                m_upper.push(bk * norm_gamma(k + 2));
            }
        }
        BandedOperator { s_diag, m_diag, m_upper }
    }
}

/// Stiffness (diagonal) and mass (pentadiagonal, even offsets) matrices of a
/// boundary-adapted basis.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    s_diag: Vec<C64>,
    m_diag: Vec<C64>,
    /// Entries at `(k, k+2)`; by symmetry also at `(k+2, k)`.
    m_upper: Vec<C64>,
}

impl BandedOperator {
    pub fn len(&self) -> usize {
        self.s_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_diag.is_empty()
    }

    pub fn stiffness_diag(&self) -> &[C64] {
        &self.s_diag
    }

    pub fn mass_diag(&self) -> &[C64] {
        &self.m_diag
    }

    pub fn mass_upper(&self) -> &[C64] {
        &self.m_upper
    }

    /// Assemble the per-mode system matrix `alpha1^{-2} S_1 + d M_1` in
    /// banded storage.
    pub fn system_matrix(&self, alpha1: C64, d: C64) -> BandedMatrix {
        let n = self.len();
        let a1inv2 = 1.0 / (alpha1 * alpha1);
        let mut m = BandedMatrix::zero(n, 2, 2);
        for k in 0..n {
            m.set(k, k, a1inv2 * self.s_diag[k] + d * self.m_diag[k]);
        }
        for (k, &v) in self.m_upper.iter().enumerate() {
            m.set(k, k + 2, d * v);
            m.set(k + 2, k, d * v);
        }
        m
    }

    /// Apply `alpha1^{-2} S_1 + d M_1` to a vector (used for residual checks).
    pub fn apply_system(&self, alpha1: C64, d: C64, x: &[C64]) -> Result<Vec<C64>> {
        let n = self.len();
        if x.len() != n {
            return Err(Error::Contract(format!(
                "operator of size {n} applied to vector of length {}",
                x.len()
            )));
        }
        let a1inv2 = 1.0 / (alpha1 * alpha1);
        let mut y = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            y[k] = (a1inv2 * self.s_diag[k] + d * self.m_diag[k]) * x[k];
        }
        for (k, &v) in self.m_upper.iter().enumerate() {
            y[k] += d * v * x[k + 2];
            y[k + 2] += d * v * x[k];
        }
        Ok(y)
    }
}

/// Complex band matrix in LAPACK-style storage with room for pivoting
/// fill-in: entry `(i, j)` lives at band row `kl + ku + i - j` of column `j`.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<C64>,
}

impl BandedMatrix {
    pub fn zero(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ldab,
            data: vec![C64::new(0.0, 0.0); ldab * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i);
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        // The widened band (fill-in rows included) is stored; anything
        // outside it is structurally zero.
        if i + self.ku + self.kl >= j && j + self.kl >= i {
            self.data[self.idx(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

/// LU factorization of a band matrix with partial pivoting.
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn factor(mut m: BandedMatrix) -> Result<Self> {
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let last_row = (j + kl).min(n.saturating_sub(1));
            let mut piv = j;
            let mut best = m.get(j, j).norm();
            for i in j + 1..=last_row {
                let mag = m.get(i, j).norm();
                if mag > best {
                    best = mag;
                    piv = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(format!(
                    "banded LU found a zero pivot in column {j}"
                )));
            }
            ipiv[j] = piv;
            let last_col = (j + ku + kl).min(n - 1);
            if piv != j {
                for c in j..=last_col {
                    let a = m.get(j, c);
                    let b = m.get(piv, c);
                    m.set(j, c, b);
                    m.set(piv, c, a);
                }
            }
            let pivot = m.get(j, j);
            for i in j + 1..=last_row {
                let mult = m.get(i, j) / pivot;
                m.set(i, j, mult);
                for c in j + 1..=last_col {
                    let v = m.get(i, c) - mult * m.get(j, c);
                    m.set(i, c, v);
                }
            }
        }
        Ok(BandedLu { m, ipiv })
    }

    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let (n, kl, ku) = (self.m.n, self.m.kl, self.m.ku);
        if rhs.len() != n {
            return Err(Error::Contract(format!(
                "system of size {n} solved with rhs of length {}",
                rhs.len()
            )));
        }
        let mut x = rhs.to_vec();
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(p, j);
            }
            let last_row = (j + kl).min(n - 1);
            let xj = x[j];
            for i in j + 1..=last_row {
                x[i] -= self.m.get(i, j) * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.m.get(j, j);
            let xj = x[j];
            let first = j.saturating_sub(ku + kl);
            for i in first..j {
                x[i] -= self.m.get(i, j) * xj;
            }
        }
        Ok(x)
    }
}

/// Degree-one lifting polynomials that carry the inhomogeneous wall data:
/// `chi_l = -L_0/(2 kappa) + L_1/(2(kappa+1))` and
/// `chi_r = +L_0/(2 kappa) + L_1/(2(kappa+1))`.
#[derive(Debug, Clone)]
pub struct LiftingPair {
    kappa: C64,
    /// Legendre coefficients `[c_0, c_1]` of `chi_l`.
    left: [C64; 2],
    /// Legendre coefficients `[c_0, c_1]` of `chi_r`.
    right: [C64; 2],
}

/// Build the lifting pair; `kappa = 0` and `kappa = -1` are poles.
pub fn build_lifting(kappa: C64) -> Result<LiftingPair> {
    let shifted = kappa + 1.0;
    if kappa.norm() <= POLE_TOL || shifted.norm() <= POLE_TOL {
        return Err(Error::Pole(format!(
            "lifting is singular at kappa = {kappa}"
        )));
    }
    let c0 = 0.5 / kappa;
    let c1 = 0.5 / shifted;
    Ok(LiftingPair {
        kappa,
        left: [-c0, c1],
        right: [c0, c1],
    })
}

impl LiftingPair {
    pub fn kappa(&self) -> C64 {
        self.kappa
    }

    pub fn left_coeffs(&self) -> [C64; 2] {
        self.left
    }

    pub fn right_coeffs(&self) -> [C64; 2] {
        self.right
    }

    /// Legendre coefficients `[c_0, c_1]` of the combination
    /// `chi_l b_l - chi_r b_r` that appears in the lifted field.
    fn combination(&self, b_left: C64, b_right: C64) -> [C64; 2] {
        [
            self.left[0] * b_left - self.right[0] * b_right,
            self.left[1] * b_left - self.right[1] * b_right,
        ]
    }
}

/// Assemble the per-mode Galerkin right-hand side.
///
/// The previous level enters through its Legendre coefficients `u_tilde`;
/// the wall history terms `b_left`/`b_right` (already emitted for the new
/// level) enter through the lifting, scaled by `alpha1` and the mode factor
/// `d = 1 + s_m`.  Returns the inner products with every basis function.
pub fn assemble_rhs(
    u_tilde: &[C64],
    b_left: C64,
    b_right: C64,
    d: C64,
    alpha1: C64,
    basis: &BoundaryBasis,
    lifting: &LiftingPair,
) -> Result<Vec<C64>> {
    if u_tilde.len() != basis.order() + 1 {
        return Err(Error::Contract(format!(
            "expected {} Legendre coefficients, got {}",
            basis.order() + 1,
            u_tilde.len()
        )));
    }
    let lift = lifting.combination(b_left, b_right);
    let mut f = u_tilde.to_vec();
    // f = u - alpha1 d (chi_l b_l - chi_r b_r)
    f[0] -= alpha1 * d * lift[0];
    f[1] -= alpha1 * d * lift[1];
    basis.quadrature_rhs(&f)
}

/// Solve one mode: factor `alpha1^{-2} S_1 + d M_1` and apply it to `rhs`.
///
/// The time-stepping loop factors each mode once and reuses the
/// factorization; this convenience entry point does both steps at once.
pub fn solve_mode(ops: &BandedOperator, alpha1: C64, d: C64, rhs: &[C64]) -> Result<Vec<C64>> {
    let lu = BandedLu::factor(ops.system_matrix(alpha1, d))?;
    lu.solve(rhs)
}

/// Recover the Legendre coefficients of the full field from the
/// boundary-adapted solution and the wall history terms:
/// `u = B w + alpha1 (chi_l b_l - chi_r b_r)`.
pub fn reconstruct_mode(
    w_hat: &[C64],
    b_left: C64,
    b_right: C64,
    alpha1: C64,
    basis: &BoundaryBasis,
    lifting: &LiftingPair,
) -> Result<Vec<C64>> {
    let mut u = basis.to_legendre(w_hat)?;
    let lift = lifting.combination(b_left, b_right);
    u[0] += alpha1 * lift[0];
    u[1] += alpha1 * lift[1];
    Ok(u)
}
