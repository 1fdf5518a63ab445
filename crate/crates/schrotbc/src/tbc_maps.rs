//! Discrete boundary maps for the two open walls of the strip.
//!
//! Each map turns the nonlocal transparent boundary operator into a per-step
//! Robin condition `∂u ± α₁ϖ u = ∓α₁ B̃` at the right/left wall, where `ϖ` is
//! a fixed per-mode Robin factor and `B̃` is a history term assembled from
//! wall traces of earlier time levels.  Four realizations are provided, all
//! driven through the same two-phase protocol: `emit` consumes the current
//! wall traces and returns the history for the upcoming solve, and `commit`
//! hands the freshly computed traces back to the map.  For the trapezoidal
//! method the solve produces a staggered field and `commit` receives both the
//! full-step and the staggered traces.

use std::fmt;

use crate::convquad::{cq_weights, history_sum, CqTable, OneStepMethod};
use crate::ratapprox::{NpRobinConstants, PadeTable};
use crate::{Error, Result, C64};

/// Which discrete realization of the boundary operator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFamily {
    /// Exact discrete half-order kernel built from convolution-quadrature
    /// weights; auxiliary boundary slices are propagated across the strip,
    /// one per past time level.
    Quadrature,
    /// Rational approximation of the half-order kernel of the given order,
    /// sharing a single Robin factor across all transverse modes; the
    /// transverse shift acts only through the auxiliary propagation.
    SharedPade(usize),
    /// Rational approximation of the given order applied separately to every
    /// transverse mode, folding the transverse shift into the pole
    /// recursions and the Robin factor.
    PerModePade(usize),
    /// Leading-order expansion of the kernel in the transverse shift; the
    /// history combines two quadrature sums of stored wall traces.
    HighFrequency,
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapFamily::Quadrature => write!(f, "CQ"),
            MapFamily::SharedPade(order) => write!(f, "NP{order}"),
            MapFamily::PerModePade(order) => write!(f, "CP{order}"),
            MapFamily::HighFrequency => write!(f, "HF"),
        }
    }
}

/// Per-mode values attached to the two open walls.
#[derive(Debug, Clone, PartialEq)]
pub struct WallPair {
    /// Values at the left wall, one entry per transverse mode.
    pub left: Vec<C64>,
    /// Values at the right wall, one entry per transverse mode.
    pub right: Vec<C64>,
}

impl WallPair {
    /// A pair of zero vectors for `n_modes` transverse modes.
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            left: vec![C64::new(0.0, 0.0); n_modes],
            right: vec![C64::new(0.0, 0.0); n_modes],
        }
    }

    fn check(&self, n_modes: usize, what: &str) -> Result<()> {
        if self.left.len() != n_modes || self.right.len() != n_modes {
            return Err(Error::Contract(format!(
                "{what}: expected {n_modes} modes per wall, got {} and {}",
                self.left.len(),
                self.right.len()
            )));
        }
        Ok(())
    }
}

fn wall_in(pair: &WallPair, idx: usize) -> &[C64] {
    if idx == 0 {
        &pair.left
    } else {
        &pair.right
    }
}

fn wall_out(pair: &mut WallPair, idx: usize) -> &mut [C64] {
    if idx == 0 {
        &mut pair.left
    } else {
        &mut pair.right
    }
}

#[derive(Debug, Clone)]
struct SliceWall {
    /// One trace vector per seeded time level, all propagated to the
    /// current level.
    slices: Vec<Vec<C64>>,
    /// Weighted sum emitted at the previous step (staggered method only).
    prev_sum: Vec<C64>,
}

#[derive(Debug, Clone)]
struct PoleWall {
    /// Auxiliary state per pole (outer) and transverse mode (inner).
    poles: Vec<Vec<C64>>,
    /// Wall traces stashed at emit time for the staggered update.
    stashed_u: Vec<C64>,
}

#[derive(Debug, Clone)]
struct TraceWall {
    /// Raw wall traces of past levels, oldest first.
    history: Vec<Vec<C64>>,
}

#[derive(Debug, Clone)]
enum MapState {
    Quadrature {
        table: CqTable,
        walls: [SliceWall; 2],
    },
    SharedPade {
        constants: NpRobinConstants,
        walls: [PoleWall; 2],
    },
    PerModePade {
        constants: NpRobinConstants,
        /// Pole-times-mode coupling weights `-b̄_k / (1 + s_m + η̄_k²)`.
        coupling: Vec<Vec<C64>>,
        walls: [PoleWall; 2],
    },
    HighFrequency {
        table_sqrt: CqTable,
        table_inv_sqrt: CqTable,
        walls: [TraceWall; 2],
    },
}

/// A boundary map bound to one run: one-step method, step size, transverse
/// shifts, and the auxiliary state of both walls.
#[derive(Debug, Clone)]
pub struct BoundaryMap {
    family: MapFamily,
    method: OneStepMethod,
    rho: f64,
    shifts: Vec<C64>,
    /// One-step transverse propagation multiplier per mode.
    propagators: Vec<C64>,
    /// `s / (1 + s)` per mode, shared by several staggered formulas.
    shift_ratio: Vec<C64>,
    robin: Vec<C64>,
    state: MapState,
    max_steps: usize,
    step: usize,
    expect_commit: bool,
}

impl BoundaryMap {
    /// Builds a boundary map for `shifts.len()` transverse modes.
    ///
    /// `shifts` holds the per-mode transverse shift `s_m` entering the
    /// one-step propagation across the strip, `dt` the step size, and
    /// `max_steps` the number of `emit`/`commit` cycles the map must
    /// support (its weight tables are sized accordingly).
    pub fn new(
        family: MapFamily,
        method: OneStepMethod,
        dt: f64,
        shifts: Vec<C64>,
        max_steps: usize,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Contract(format!(
                "step size must be positive and finite, got {dt}"
            )));
        }
        if shifts.is_empty() {
            return Err(Error::Contract("need at least one transverse mode".into()));
        }
        if max_steps == 0 {
            return Err(Error::Contract("max_steps must be at least 1".into()));
        }
        let one = C64::new(1.0, 0.0);
        for (m, s) in shifts.iter().enumerate() {
            if !s.re.is_finite() || !s.im.is_finite() {
                return Err(Error::Contract(format!("shift of mode {m} is not finite")));
            }
            if (one + s).norm() < 1e-12 {
                return Err(Error::Pole(format!(
                    "transverse shift of mode {m} makes the one-step propagation singular"
                )));
            }
        }
        let n = shifts.len();
        let rho = method.rate(dt);
        let propagators: Vec<C64> = shifts
            .iter()
            .map(|&s| match method {
                OneStepMethod::Bdf1 => one / (one + s),
                OneStepMethod::Trapezoidal => (one - s) / (one + s),
            })
            .collect();
        let shift_ratio: Vec<C64> = shifts.iter().map(|&s| s / (one + s)).collect();
        let (robin, state) = match family {
            MapFamily::Quadrature => {
                let table = cq_weights(method, 0.5, max_steps)?;
                let wall = SliceWall {
                    slices: Vec::new(),
                    prev_sum: vec![C64::new(0.0, 0.0); n],
                };
                (
                    vec![one; n],
                    MapState::Quadrature {
                        table,
                        walls: [wall.clone(), wall],
                    },
                )
            }
            MapFamily::SharedPade(order) => {
                let constants = NpRobinConstants::new(&PadeTable::new(order)?, rho)?;
                let robin = vec![C64::new(constants.robin_factor, 0.0); n];
                let wall = PoleWall {
                    poles: vec![vec![C64::new(0.0, 0.0); n]; order],
                    stashed_u: vec![C64::new(0.0, 0.0); n],
                };
                (
                    robin,
                    MapState::SharedPade {
                        constants,
                        walls: [wall.clone(), wall],
                    },
                )
            }
            MapFamily::PerModePade(order) => {
                let constants = NpRobinConstants::new(&PadeTable::new(order)?, rho)?;
                let coupling: Vec<Vec<C64>> = (0..order)
                    .map(|k| {
                        shifts
                            .iter()
                            .map(|&s| {
                                C64::from(-constants.b_bar[k])
                                    / (one + s + constants.eta_bar_sq[k])
                            })
                            .collect()
                    })
                    .collect();
                let robin = (0..n)
                    .map(|m| {
                        let pole_sum: C64 = coupling.iter().map(|row| row[m]).sum();
                        pole_sum / rho + constants.b0_bar
                    })
                    .collect();
                let wall = PoleWall {
                    poles: vec![vec![C64::new(0.0, 0.0); n]; order],
                    stashed_u: vec![C64::new(0.0, 0.0); n],
                };
                (
                    robin,
                    MapState::PerModePade {
                        constants,
                        coupling,
                        walls: [wall.clone(), wall],
                    },
                )
            }
            MapFamily::HighFrequency => {
                let table_sqrt = cq_weights(method, 0.5, max_steps)?;
                let table_inv_sqrt = cq_weights(method, -0.5, max_steps)?;
                let robin = shifts.iter().map(|&s| one + 0.5 * s).collect();
                // the staggered field starts from zero, which seeds the
                // trace history; the full field history is seeded at emit
                let history = match method {
                    OneStepMethod::Bdf1 => Vec::new(),
                    OneStepMethod::Trapezoidal => vec![vec![C64::new(0.0, 0.0); n]],
                };
                let wall = TraceWall { history };
                (
                    robin,
                    MapState::HighFrequency {
                        table_sqrt,
                        table_inv_sqrt,
                        walls: [wall.clone(), wall],
                    },
                )
            }
        };
        Ok(Self {
            family,
            method,
            rho,
            shifts,
            propagators,
            shift_ratio,
            robin,
            state,
            max_steps,
            step: 0,
            expect_commit: false,
        })
    }

    /// The map realization.
    pub fn family(&self) -> MapFamily {
        self.family
    }

    /// The one-step method the map is discretized with.
    pub fn method(&self) -> OneStepMethod {
        self.method
    }

    /// Number of transverse modes.
    pub fn n_modes(&self) -> usize {
        self.shifts.len()
    }

    /// Number of `emit`/`commit` cycles the map supports.
    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    /// Number of completed `emit` calls.
    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Whether the solve behind this map produces a staggered field.
    pub fn staggered(&self) -> bool {
        self.method == OneStepMethod::Trapezoidal
    }

    /// Per-mode Robin factors `ϖ_m`; constant over the whole run.
    pub fn robin_factors(&self) -> &[C64] {
        &self.robin
    }

    /// Consumes the current wall traces and returns the boundary history for
    /// the upcoming solve, advancing the internal clock by one step.
    pub fn emit(&mut self, traces: &WallPair) -> Result<WallPair> {
        if self.expect_commit {
            return Err(Error::Contract(
                "emit called twice without an intervening commit".into(),
            ));
        }
        if self.step >= self.max_steps {
            return Err(Error::Contract(format!(
                "boundary map exhausted after {} steps; rebuild with a larger max_steps",
                self.max_steps
            )));
        }
        let n = self.shifts.len();
        traces.check(n, "emit traces")?;
        let staggered = self.method == OneStepMethod::Trapezoidal;
        let mut out = WallPair::zeros(n);
        match &mut self.state {
            MapState::Quadrature { table, walls } => {
                for idx in 0..2 {
                    let tr = wall_in(traces, idx);
                    let wall = &mut walls[idx];
                    wall.slices.push(tr.to_vec());
                    for slice in &mut wall.slices {
                        for (value, p) in slice.iter_mut().zip(&self.propagators) {
                            *value *= *p;
                        }
                    }
                    let sum = history_sum(table, &wall.slices)?;
                    let dst = wall_out(&mut out, idx);
                    if staggered {
                        for m in 0..n {
                            dst[m] = 0.5 * (sum[m] + wall.prev_sum[m]);
                        }
                        wall.prev_sum = sum;
                    } else {
                        dst.copy_from_slice(&sum);
                    }
                }
            }
            MapState::SharedPade { constants, walls } => {
                for idx in 0..2 {
                    let tr = wall_in(traces, idx);
                    let wall = &mut walls[idx];
                    let dst = wall_out(&mut out, idx);
                    match self.method {
                        OneStepMethod::Bdf1 => {
                            for m in 0..n {
                                let mut acc = C64::new(0.0, 0.0);
                                for (gamma, pole) in constants.gamma.iter().zip(&wall.poles) {
                                    acc += *gamma * pole[m];
                                }
                                dst[m] = self.propagators[m] * acc;
                            }
                        }
                        OneStepMethod::Trapezoidal => {
                            let gamma_sum: f64 = constants.gamma.iter().sum();
                            for m in 0..n {
                                let mut acc = C64::new(0.0, 0.0);
                                for (k, pole) in wall.poles.iter().enumerate() {
                                    let eta = constants.eta_bar_sq[k];
                                    let decay = (1.0 - eta) / (1.0 + eta);
                                    acc += -0.5
                                        * constants.b_bar[k]
                                        * (decay * self.propagators[m] + 1.0)
                                        * pole[m];
                                }
                                acc += (gamma_sum / constants.rho)
                                    * (-self.shift_ratio[m])
                                    * tr[m];
                                dst[m] = acc;
                            }
                            wall.stashed_u.clone_from(&tr.to_vec());
                        }
                    }
                }
            }
            MapState::PerModePade {
                coupling, walls, ..
            } => {
                for idx in 0..2 {
                    let wall = &mut walls[idx];
                    let dst = wall_out(&mut out, idx);
                    for m in 0..n {
                        let mut acc = C64::new(0.0, 0.0);
                        for (row, pole) in coupling.iter().zip(&wall.poles) {
                            acc += row[m] * pole[m];
                        }
                        dst[m] = acc;
                    }
                }
            }
            MapState::HighFrequency {
                table_sqrt,
                table_inv_sqrt,
                walls,
            } => {
                for idx in 0..2 {
                    let tr = wall_in(traces, idx);
                    let wall = &mut walls[idx];
                    if !staggered {
                        wall.history.push(tr.to_vec());
                    }
                    let sum_sqrt = history_sum(table_sqrt, &wall.history)?;
                    let sum_inv = history_sum(table_inv_sqrt, &wall.history)?;
                    let dst = wall_out(&mut out, idx);
                    for m in 0..n {
                        dst[m] = sum_sqrt[m] + 0.5 * self.shifts[m] * sum_inv[m];
                    }
                }
            }
        }
        self.step += 1;
        self.expect_commit = true;
        Ok(out)
    }

    /// Completes the step with the freshly computed wall traces: `u_new` at
    /// the full level, and for the staggered method also `v_new` at the half
    /// level.
    pub fn commit(&mut self, u_new: &WallPair, v_new: Option<&WallPair>) -> Result<()> {
        if !self.expect_commit {
            return Err(Error::Contract("commit without a preceding emit".into()));
        }
        let n = self.shifts.len();
        u_new.check(n, "commit traces")?;
        match (self.method, v_new) {
            (OneStepMethod::Bdf1, Some(_)) => {
                return Err(Error::Contract(
                    "staggered traces passed to a one-level method".into(),
                ));
            }
            (OneStepMethod::Trapezoidal, None) => {
                return Err(Error::Contract(
                    "staggered method requires the half-level traces".into(),
                ));
            }
            _ => {}
        }
        if let Some(v) = v_new {
            v.check(n, "commit staggered traces")?;
        }
        let one = C64::new(1.0, 0.0);
        match &mut self.state {
            // the next emit seeds a fresh slice from the traces it receives
            MapState::Quadrature { .. } => {}
            MapState::SharedPade { constants, walls } => {
                for idx in 0..2 {
                    let un = wall_in(u_new, idx);
                    let wall = &mut walls[idx];
                    match self.method {
                        OneStepMethod::Bdf1 => {
                            for (k, pole) in wall.poles.iter_mut().enumerate() {
                                let scale = 1.0 / (1.0 + constants.eta_bar_sq[k]);
                                for m in 0..n {
                                    pole[m] = scale
                                        * (pole[m] * self.propagators[m] + un[m] / self.rho);
                                }
                            }
                        }
                        OneStepMethod::Trapezoidal => {
                            let vn = wall_in(v_new.expect("validated above"), idx);
                            for (k, pole) in wall.poles.iter_mut().enumerate() {
                                let eta = constants.eta_bar_sq[k];
                                let decay = (1.0 - eta) / (1.0 + eta);
                                let scale = (2.0 / self.rho) / (1.0 + eta);
                                for m in 0..n {
                                    let drive =
                                        vn[m] - self.shift_ratio[m] * wall.stashed_u[m];
                                    pole[m] =
                                        decay * self.propagators[m] * pole[m] + scale * drive;
                                }
                            }
                        }
                    }
                }
            }
            MapState::PerModePade {
                constants, walls, ..
            } => {
                for idx in 0..2 {
                    let un = wall_in(u_new, idx);
                    let wall = &mut walls[idx];
                    match self.method {
                        OneStepMethod::Bdf1 => {
                            for (k, pole) in wall.poles.iter_mut().enumerate() {
                                let eta = constants.eta_bar_sq[k];
                                for m in 0..n {
                                    let denom = one + self.shifts[m] + eta;
                                    pole[m] = (pole[m] + un[m] / self.rho) / denom;
                                }
                            }
                        }
                        OneStepMethod::Trapezoidal => {
                            let vn = wall_in(v_new.expect("validated above"), idx);
                            for (k, pole) in wall.poles.iter_mut().enumerate() {
                                let eta = constants.eta_bar_sq[k];
                                for m in 0..n {
                                    let denom = one + self.shifts[m] + eta;
                                    let keep = (one - self.shifts[m] - eta) / denom;
                                    pole[m] =
                                        keep * pole[m] + (2.0 / self.rho) * vn[m] / denom;
                                }
                            }
                        }
                    }
                }
            }
            MapState::HighFrequency { walls, .. } => {
                if let Some(v) = v_new {
                    for idx in 0..2 {
                        walls[idx].history.push(wall_in(v, idx).to_vec());
                    }
                }
            }
        }
        self.expect_commit = false;
        Ok(())
    }
}
