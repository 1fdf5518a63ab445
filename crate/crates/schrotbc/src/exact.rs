//! Closed-form reference solutions of the free Schrödinger equation.
//!
//! Two families of traveling wave packets are provided: superpositions of
//! chirped Gaussian envelopes and of Hermite-Gaussian envelopes.  Each term
//! moves along the first coordinate with its own signed speed, carries a
//! matching plane-wave factor, and multiplies a transverse plane wave whose
//! wavenumber is commensurate with the strip period, so the full field is
//! periodic across the strip while radiating freely through the open walls.
//! The module also ships the parameter presets used by the batch driver and
//! a quadrature routine for the fraction of energy still inside a rectangle.

use std::f64::consts::PI;

use crate::specfun::{hermite_eval, LglGrid};
use crate::{Error, Result, C64};

/// Envelope family of a wave-packet profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileFamily {
    /// Gaussian envelopes with a complex (chirped) width.
    ChirpedGaussian,
    /// Hermite-Gaussian envelopes of integer order.
    HermiteGaussian,
}

/// Preset variant selecting how many terms a profile superposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileVariant {
    /// Two counter-propagating packets.
    TypeI,
    /// Four packets with two distinct transverse wavenumbers.
    TypeII,
}

/// Envelope shape of a single wave-packet term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermShape {
    /// Chirped Gaussian with the given imaginary part of the width.
    Chirp(f64),
    /// Hermite-Gaussian of the given order.
    HermiteOrder(usize),
}

/// One traveling term of a wave-packet superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTerm {
    /// Real part of the envelope width parameter; must be positive.
    pub width: f64,
    /// Envelope shape, consistent with the owning profile family.
    pub shape: TermShape,
    /// Propagation direction along the first axis, `+1.0` or `-1.0`.
    pub direction: f64,
    /// Integer transverse wavenumber; the physical transverse frequency is
    /// `pi * wavenumber / half_width` per transverse axis.
    pub wavenumber: i64,
}

/// Validated description of an exact wave-packet solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    family: ProfileFamily,
    dim: usize,
    amplitude: f64,
    speed: f64,
    terms: Vec<ProfileTerm>,
}

impl ProfileSpec {
    /// Builds a profile after validating dimension, amplitudes and terms.
    pub fn new(
        family: ProfileFamily,
        dim: usize,
        amplitude: f64,
        speed: f64,
        terms: Vec<ProfileTerm>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Contract(format!(
                "profile dimension must be 2 or 3, got {dim}"
            )));
        }
        if !amplitude.is_finite() || !speed.is_finite() {
            return Err(Error::Contract(
                "profile amplitude and speed must be finite".into(),
            ));
        }
        if terms.is_empty() {
            return Err(Error::Contract("profile needs at least one term".into()));
        }
        for (j, term) in terms.iter().enumerate() {
            if !(term.width > 0.0) || !term.width.is_finite() {
                return Err(Error::Contract(format!(
                    "term {j}: width must be positive and finite, got {}",
                    term.width
                )));
            }
            if term.direction.abs() != 1.0 {
                return Err(Error::Contract(format!(
                    "term {j}: direction must be +1 or -1, got {}",
                    term.direction
                )));
            }
            match (family, term.shape) {
                (ProfileFamily::ChirpedGaussian, TermShape::Chirp(b)) => {
                    if !b.is_finite() {
                        return Err(Error::Contract(format!(
                            "term {j}: chirp must be finite, got {b}"
                        )));
                    }
                }
                (ProfileFamily::HermiteGaussian, TermShape::HermiteOrder(_)) => {}
                _ => {
                    return Err(Error::Contract(format!(
                        "term {j}: shape does not match the profile family"
                    )));
                }
            }
        }
        Ok(Self {
            family,
            dim,
            amplitude,
            speed,
            terms,
        })
    }

    /// Envelope family of this profile.
    pub fn family(&self) -> ProfileFamily {
        self.family
    }

    /// Spatial dimension, `2` or `3`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Overall amplitude multiplying the superposition.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Base speed; each term travels at `direction * speed`.
    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// The individual wave-packet terms.
    pub fn terms(&self) -> &[ProfileTerm] {
        &self.terms
    }

    /// Binds the profile to transverse half-widths, resolving the integer
    /// wavenumbers into physical transverse frequencies.
    pub fn evaluator(&self, half_widths: &[f64]) -> Result<ProfileEvaluator> {
        if half_widths.len() != self.dim - 1 {
            return Err(Error::Contract(format!(
                "expected {} transverse half-widths, got {}",
                self.dim - 1,
                half_widths.len()
            )));
        }
        for &d in half_widths {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Contract(format!(
                    "transverse half-widths must be positive and finite, got {d}"
                )));
            }
        }
        let zeta = self
            .terms
            .iter()
            .map(|term| {
                half_widths
                    .iter()
                    .map(|&d| PI * term.wavenumber as f64 / d)
                    .collect()
            })
            .collect();
        Ok(ProfileEvaluator {
            dim: self.dim,
            amplitude: self.amplitude,
            speed: self.speed,
            terms: self.terms.clone(),
            zeta,
        })
    }
}

/// A profile bound to concrete strip geometry, ready for point evaluation.
#[derive(Debug, Clone)]
pub struct ProfileEvaluator {
    dim: usize,
    amplitude: f64,
    speed: f64,
    terms: Vec<ProfileTerm>,
    zeta: Vec<Vec<f64>>,
}

impl ProfileEvaluator {
    /// Spatial dimension of evaluation points.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates the exact solution at the point `x` and time `t`.
    ///
    /// `x` must have exactly `dim` entries: the open coordinate first, then
    /// the transverse coordinate(s).
    pub fn eval(&self, x: &[f64], t: f64) -> C64 {
        assert_eq!(x.len(), self.dim, "evaluation point has wrong dimension");
        let mut total = C64::new(0.0, 0.0);
        for (term, zeta) in self.terms.iter().zip(&self.zeta) {
            let c = term.direction * self.speed;
            let moving = x[0] - c * t;
            let envelope = match term.shape {
                TermShape::Chirp(b) => chirped_gaussian(moving, t, term.width, b),
                TermShape::HermiteOrder(m) => hermite_gaussian(moving, t, term.width, m),
            };
            let mut phase = 0.5 * c * x[0] - 0.25 * c * c * t;
            for (&coord, &z) in x[1..].iter().zip(zeta) {
                phase += z * coord - z * z * t;
            }
            total += envelope * C64::new(0.0, phase).exp();
        }
        total * self.amplitude
    }
}

/// Chirped Gaussian envelope: a solution of `i u_t + u_xx = 0` that starts
/// as `exp(-(a + i b) x^2)` at `t = 0` and spreads while staying Gaussian.
pub fn chirped_gaussian(x: f64, t: f64, width: f64, chirp: f64) -> C64 {
    let p = C64::new(width, chirp);
    let q = C64::new(1.0, 0.0) + C64::new(0.0, 4.0 * t) * p;
    (-p * (x * x) / q).exp() / q.sqrt()
}

/// Hermite-Gaussian envelope of the given order: a solution of
/// `i u_t + u_xx = 0` that starts as a normalized Hermite function and keeps
/// unit norm while spreading and accumulating a mode-dependent phase.
pub fn hermite_gaussian(x: f64, t: f64, width: f64, order: usize) -> C64 {
    let a = width;
    let s = 4.0 * a * t;
    let spread = (1.0 + s * s).sqrt();
    let denom = C64::new(1.0, s);
    let mu = C64::new(a, 0.0) / denom;
    let theta = s.atan();
    let poly = hermite_eval(order, (2.0 * a).sqrt() * x / spread);
    // log of the squared norm 2^m m! sqrt(pi) / sqrt(2a), accumulated as
    // sum of log(2k) to stay finite for large orders
    let mut log_norm_sq = 0.5 * PI.ln() - 0.5 * (2.0 * a).ln();
    for k in 1..=order {
        log_norm_sq += (2.0 * k as f64).ln();
    }
    let inv_norm = (-0.5 * log_norm_sq).exp();
    let prefactor = (C64::new(1.0, 0.0) / denom).sqrt();
    let envelope = (-mu * (x * x) - C64::new(0.0, order as f64 * theta)).exp();
    prefactor * envelope * (inv_norm * poly)
}

/// Returns one of the preset profiles used by the batch driver.
///
/// Type I superposes two counter-propagating packets; Type II superposes
/// four with a second pair of transverse wavenumbers.  The Hermite family
/// replaces the chirp by envelope orders.  `speed` sets the base speed of
/// every term and `dim` selects the strip (2) or duct (3) geometry, where
/// the duct reuses the same wavenumber on both transverse axes.
pub fn profile_preset(
    family: ProfileFamily,
    variant: ProfileVariant,
    speed: f64,
    dim: usize,
) -> Result<ProfileSpec> {
    let widths: &[f64] = match variant {
        ProfileVariant::TypeI => &[1.0 / 2.5, 1.0 / 2.3],
        ProfileVariant::TypeII => &[1.0 / 2.5, 1.0 / 2.3, 1.0 / 2.2, 1.0 / 2.4],
    };
    let directions: &[f64] = match variant {
        ProfileVariant::TypeI => &[1.0, -1.0],
        ProfileVariant::TypeII => &[1.0, -1.0, 1.0, -1.0],
    };
    let wavenumbers: &[i64] = match variant {
        ProfileVariant::TypeI => &[2, -2],
        ProfileVariant::TypeII => &[2, -2, 4, -4],
    };
    let hermite_orders: &[usize] = match variant {
        ProfileVariant::TypeI => &[1, 2],
        ProfileVariant::TypeII => &[1, 2, 1, 2],
    };
    let terms = widths
        .iter()
        .enumerate()
        .map(|(j, &width)| ProfileTerm {
            width,
            shape: match family {
                ProfileFamily::ChirpedGaussian => TermShape::Chirp(0.5),
                ProfileFamily::HermiteGaussian => TermShape::HermiteOrder(hermite_orders[j]),
            },
            direction: directions[j],
            wavenumber: wavenumbers[j],
        })
        .collect();
    ProfileSpec::new(family, dim, 2.0, speed, terms)
}

/// Squared `L^2` norm of the profile over the rectangle
/// `[x_l, x_r] x [-d, d)` (times `[-d3, d3)` in three dimensions) at time
/// `t`, using Legendre-Gauss-Lobatto quadrature along the open axis and
/// equal-weight quadrature along each periodic axis.
pub fn profile_l2_norm_sq(
    field: &ProfileEvaluator,
    x_span: (f64, f64),
    half_widths: &[f64],
    n_axial: usize,
    n_perp: &[usize],
    t: f64,
) -> Result<f64> {
    let dim = field.dim();
    if half_widths.len() != dim - 1 || n_perp.len() != dim - 1 {
        return Err(Error::Contract(format!(
            "expected {} transverse half-widths and grid sizes, got {} and {}",
            dim - 1,
            half_widths.len(),
            n_perp.len()
        )));
    }
    let (x_l, x_r) = x_span;
    if !(x_l < x_r) || !x_l.is_finite() || !x_r.is_finite() {
        return Err(Error::Contract(format!(
            "open axis must satisfy x_l < x_r, got [{x_l}, {x_r}]"
        )));
    }
    if n_axial < 2 {
        return Err(Error::Contract(format!(
            "axial quadrature order must be at least 2, got {n_axial}"
        )));
    }
    for (&d, &n) in half_widths.iter().zip(n_perp) {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Contract(format!(
                "transverse half-widths must be positive and finite, got {d}"
            )));
        }
        if n == 0 {
            return Err(Error::Contract(
                "transverse grids need at least one point".into(),
            ));
        }
    }
    let grid = LglGrid::new(n_axial)?;
    let jac = 0.5 * (x_r - x_l);
    let center = 0.5 * (x_l + x_r);
    let axes: Vec<(Vec<f64>, f64)> = half_widths
        .iter()
        .zip(n_perp)
        .map(|(&d, &n)| {
            let nodes = (0..n)
                .map(|j| -d + 2.0 * d * j as f64 / n as f64)
                .collect();
            (nodes, 2.0 * d / n as f64)
        })
        .collect();
    let mut total = 0.0;
    let mut point = vec![0.0; dim];
    for (&y, &w) in grid.nodes().iter().zip(grid.weights()) {
        point[0] = center + jac * y;
        let w_axial = w * jac;
        match dim {
            2 => {
                for &x2 in &axes[0].0 {
                    point[1] = x2;
                    total += w_axial * axes[0].1 * field.eval(&point, t).norm_sqr();
                }
            }
            _ => {
                for &x2 in &axes[0].0 {
                    point[1] = x2;
                    for &x3 in &axes[1].0 {
                        point[2] = x3;
                        total +=
                            w_axial * axes[0].1 * axes[1].1 * field.eval(&point, t).norm_sqr();
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Fraction of the initial energy still inside the rectangle at time `t`:
/// the squared norm at `t` divided by the squared norm at the start.
pub fn energy_content(
    field: &ProfileEvaluator,
    x_span: (f64, f64),
    half_widths: &[f64],
    n_axial: usize,
    n_perp: &[usize],
    t: f64,
) -> Result<f64> {
    let now = profile_l2_norm_sq(field, x_span, half_widths, n_axial, n_perp, t)?;
    let start = profile_l2_norm_sq(field, x_span, half_widths, n_axial, n_perp, 0.0)?;
    if start <= 0.0 {
        return Err(Error::Contract(
            "initial field vanishes on the quadrature grid".into(),
        ));
    }
    Ok(now / start)
}
