use crate::error::{Error, Result};

/// Uniform time grid. Square-pulse discontinuities (t = 0 and t = T) must land
/// exactly on nodes; [`TimeGrid::for_pulse`] guarantees this by snapping the
/// step to an integer divisor of T.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need n >= 2, got {n}")));
        }
        if !(t_end > t_start) {
            return Err(Error::InvalidGrid(format!(
                "need t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        Ok(Self { t_start, dt: (t_end - t_start) / (n - 1) as f64, n })
    }

    /// Default grid for a pulse of duration `T`: spans [-2T, T + 12/g²] with
    /// `n` samples, with dt snapped so that t = 0 and t = T are grid nodes.
    /// For g² = 0 the trailing margin falls back to 12 T.
    pub fn for_pulse(g2: f64, t_pulse: f64, n: usize) -> Result<Self> {
        let margin = if g2 > 0.0 { 12.0 / g2 } else { 12.0 * t_pulse };
        Self::for_pulse_with(t_pulse, 2.0 * t_pulse, margin, n)
    }

    /// Grid [-lead, T + margin] with dt = T/q for integer q, so pulse
    /// discontinuities sit on nodes.
    pub fn for_pulse_with(t_pulse: f64, lead: f64, margin: f64, n: usize) -> Result<Self> {
        if t_pulse <= 0.0 {
            return Err(Error::InvalidGrid(format!("pulse duration must be > 0, got {t_pulse}")));
        }
        let span = lead + t_pulse + margin;
        let q = ((n - 1) as f64 * t_pulse / span).floor() as usize;
        if q < 8 {
            return Err(Error::InvalidGrid(format!(
                "grid too short: only {q} samples per pulse duration (need >= 8); \
                 increase n or shrink the span"
            )));
        }
        let dt = t_pulse / q as f64;
        // shift t_start down to the nearest multiple of dt so 0 stays on a node
        let lead_steps = (lead / dt).ceil() as i64;
        Ok(Self { t_start: -(lead_steps as f64) * dt, dt, n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        self.t_start + self.dt * k as f64
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.n - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.t(k)).collect()
    }

    /// Index of the node nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        let k = ((t - self.t_start) / self.dt).round() as i64;
        k.clamp(0, self.n as i64 - 1) as usize
    }

    /// Composite-trapezoid weights (dt/2 at the ends, dt inside).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dt; self.n];
        w[0] = 0.5 * self.dt;
        w[self.n - 1] = 0.5 * self.dt;
        w
    }
}

/// Trapezoid quadrature of real samples on the grid.
pub fn trapezoid(grid: &TimeGrid, values: &[f64]) -> f64 {
    let w = grid.trapezoid_weights();
    values.iter().zip(w.iter()).map(|(v, w)| v * w).sum()
}
