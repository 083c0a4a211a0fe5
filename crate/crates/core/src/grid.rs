//! Square momentum-space sampling window.
//!
//! All spatial modes are represented by their angular spectrum sampled on an
//! `n x n` grid of transverse wave vectors `q = (q_x, q_y)` with
//! `q_i = (i - n/2) * dq`. The window must be wide enough that the broadest
//! spectrum in play (the Gaussian of the smallest position-space waist) has
//! decayed to negligible power at the edge.

use crate::{Error, Result};

/// Width factor used by [`MomentumGrid::auto`]: `q_max = AUTO_WINDOW_FACTOR / w_min`.
///
/// At this radius a Gaussian envelope of waist `w_min` carries
/// `exp(-6.5^2/2) = 6.8e-10` of its peak power, under the `1e-8` construction
/// check.
pub const AUTO_WINDOW_FACTOR: f64 = 6.5;

const EDGE_POWER_LIMIT: f64 = 1e-8;

/// Square transverse-momentum window, `n` samples per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    n: usize,
    q_max: f64,
}

impl MomentumGrid {
    /// Build a grid and check it against the smallest waist it must resolve.
    ///
    /// Requires `n >= 32` and a power of two, `q_max > 0`, and that a Gaussian
    /// envelope of waist `w_min` decays below `1e-8` of its peak power at
    /// `|q| = q_max`.
    pub fn new(n: usize, q_max: f64, w_min: f64) -> Result<Self> {
        if n < 32 || !n.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "grid size {n} must be a power of two >= 32"
            )));
        }
        if !(q_max > 0.0) || !(w_min > 0.0) {
            return Err(Error::InvalidConfig(
                "q_max and w_min must be positive".into(),
            ));
        }
        let grid = MomentumGrid { n, q_max };
        if !grid.supports_waist(w_min) {
            return Err(Error::GridTooCoarse(format!(
                "Gaussian of waist {w_min:.3e} m retains more than {EDGE_POWER_LIMIT:.0e} \
                 of its peak power at q_max = {q_max:.3e} rad/m"
            )));
        }
        Ok(grid)
    }

    /// Grid with the window auto-set to `6.5 / w_min`.
    pub fn auto(n: usize, w_min: f64) -> Result<Self> {
        if !(w_min > 0.0) {
            return Err(Error::InvalidConfig("w_min must be positive".into()));
        }
        Self::new(n, AUTO_WINDOW_FACTOR / w_min, w_min)
    }

    /// `exp(-w^2 q_max^2 / 2) <= 1e-8`: the envelope's *power* has decayed
    /// below the construction limit at the window edge.
    pub fn supports_waist(&self, waist: f64) -> bool {
        (-waist * waist * self.q_max * self.q_max / 2.0).exp() <= EDGE_POWER_LIMIT
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    /// Sample spacing `dq = 2 q_max / n`.
    pub fn dq(&self) -> f64 {
        2.0 * self.q_max / self.n as f64
    }

    /// Coordinate of sample `i` along either axis: `(i - n/2) dq`.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.dq()
    }

    /// Index of the `q = 0` sample on either axis.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }
}
