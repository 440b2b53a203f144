use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use num_complex::Complex64 as C64;

/// Pulse shapes. The Gaussian is f(t) ∝ exp(-4 (t-t_c)²/T²), centered at the
/// grid midpoint, so its intensity full width between the 1/e² points is T.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    Square,
    Gaussian,
    Custom,
}

/// Normalized slowly-varying envelope f(t) on a time grid, ∫|f|² dt = 1.
///
/// Square pulses are sampled with the half-value convention at the t = 0 and
/// t = T discontinuities (nodes must sit on them; see [`TimeGrid::for_pulse`]),
/// which keeps the whole stack second-order accurate.
#[derive(Debug, Clone)]
pub struct PulseEnvelope {
    grid: TimeGrid,
    values: Vec<C64>,
    shape: PulseShape,
    duration: f64,
}

impl PulseEnvelope {
    /// Build a normalized pulse of the given shape and duration on `grid`.
    pub fn new(shape: PulseShape, duration: f64, grid: TimeGrid) -> Result<Self> {
        if duration <= 0.0 {
            return Err(Error::PulseSupport(format!("duration must be > 0, got {duration}")));
        }
        let n = grid.n();
        let mut values = vec![C64::new(0.0, 0.0); n];
        match shape {
            PulseShape::Square => {
                if grid.t_start() > 0.0 || grid.t_end() < duration {
                    return Err(Error::PulseSupport(format!(
                        "square pulse support [0, {duration}] not inside grid \
                         [{:.3}, {:.3}]",
                        grid.t_start(),
                        grid.t_end()
                    )));
                }
                let i0 = grid.index_of(0.0);
                let i1 = grid.index_of(duration);
                if grid.t(i0).abs() > 1e-9 * grid.dt() || (grid.t(i1) - duration).abs() > 1e-9 * grid.dt() {
                    return Err(Error::InvalidGrid(
                        "square-pulse discontinuities must sit on grid nodes; \
                         build the grid with TimeGrid::for_pulse"
                            .into(),
                    ));
                }
                let amp = 1.0 / duration.sqrt();
                for k in i0..=i1 {
                    values[k] = C64::new(amp, 0.0);
                }
                // the amplitude average at a node-aligned jump keeps every
                // f-linear integral second order; the small trapezoid deficit
                // of |f|² is absorbed by the numeric normalization below
                values[i0] = C64::new(0.5 * amp, 0.0);
                values[i1] = C64::new(0.5 * amp, 0.0);
            }
            PulseShape::Gaussian => {
                let center = 0.5 * (grid.t_start() + grid.t_end());
                // require the +-2T window (|f| < 1.2e-7 of peak outside)
                if center - 2.0 * duration < grid.t_start() || center + 2.0 * duration > grid.t_end() {
                    return Err(Error::PulseSupport(format!(
                        "gaussian support [{:.3}, {:.3}] not inside grid",
                        center - 2.0 * duration,
                        center + 2.0 * duration
                    )));
                }
                for (k, v) in values.iter_mut().enumerate() {
                    let u = grid.t(k) - center;
                    *v = C64::new((-4.0 * u * u / (duration * duration)).exp(), 0.0);
                }
            }
            PulseShape::Custom => {
                return Err(Error::PulseSupport(
                    "use PulseEnvelope::from_samples for custom shapes".into(),
                ))
            }
        }
        Self::from_samples_shaped(grid, values, shape, duration)
    }

    /// Wrap caller-provided samples, normalizing ∫|f|² dt to 1.
    pub fn from_samples(grid: TimeGrid, values: Vec<C64>) -> Result<Self> {
        let duration = grid.t_end() - grid.t_start();
        Self::from_samples_shaped(grid, values, PulseShape::Custom, duration)
    }

    fn from_samples_shaped(
        grid: TimeGrid,
        mut values: Vec<C64>,
        shape: PulseShape,
        duration: f64,
    ) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "sample count {} does not match grid size {}",
                values.len(),
                grid.n()
            )));
        }
        let w = grid.trapezoid_weights();
        let norm2: f64 = values.iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum();
        if norm2 <= 0.0 {
            return Err(Error::PulseSupport("pulse has zero norm".into()));
        }
        let scale = 1.0 / norm2.sqrt();
        for v in &mut values {
            *v *= scale;
        }
        Ok(Self { grid, values, shape, duration })
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn shape(&self) -> PulseShape {
        self.shape
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// ∫|f|² dt by composite trapezoid (1 up to rounding, by construction).
    pub fn norm2(&self) -> f64 {
        let w = self.grid.trapezoid_weights();
        self.values.iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum()
    }

    /// Grid nodes where |f| jumps (square-pulse edges); empty for smooth shapes.
    pub fn discontinuity_nodes(&self) -> Vec<usize> {
        match self.shape {
            PulseShape::Square => {
                vec![self.grid.index_of(0.0), self.grid.index_of(self.duration)]
            }
            _ => Vec::new(),
        }
    }

    /// One-sided sample arrays (value just left / just right of each node).
    /// They differ from the stored values only at discontinuity nodes and make
    /// time integrals of f over jump-adjacent cells exact to second order.
    pub fn one_sided_values(&self) -> (Vec<C64>, Vec<C64>) {
        let mut left = self.values.clone();
        let mut right = self.values.clone();
        if self.shape == PulseShape::Square {
            let zero = C64::new(0.0, 0.0);
            let i0 = self.grid.index_of(0.0);
            let i1 = self.grid.index_of(self.duration);
            // stored jump samples are the two-sided average, so the plateau
            // (after normalization) is exactly twice the edge sample
            left[i0] = zero;
            right[i0] = 2.0 * self.values[i0];
            left[i1] = 2.0 * self.values[i1];
            right[i1] = zero;
        }
        (left, right)
    }
}

/// Build a normalized pulse; thin convenience wrapper used by the CLI.
pub fn make_pulse(shape: PulseShape, duration: f64, grid: TimeGrid) -> Result<PulseEnvelope> {
    PulseEnvelope::new(shape, duration, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_normalized_and_flat() {
        let grid = TimeGrid::for_pulse(1.0, 2.0, 2048).unwrap();
        let p = make_pulse(PulseShape::Square, 2.0, grid.clone()).unwrap();
        assert!((p.norm2() - 1.0).abs() < 1e-10);
        // plateau value is 1/sqrt(T) up to the O(dt) sampled-envelope
        // normalization of the edge convention
        let expect = 1.0 / 2.0_f64.sqrt();
        for t in [0.1, 1.0, 1.9] {
            let v = p.values()[grid.index_of(t)].re;
            assert!((v - expect).abs() < 2e-3 * expect, "plateau {v}");
        }
        assert!((p.values()[grid.index_of(-0.5)].norm()) < 1e-15);
        assert!((p.values()[grid.index_of(3.0)].norm()) < 1e-15);
        // one-sided arrays carry the true jump values
        let (left, right) = p.one_sided_values();
        let i0 = grid.index_of(0.0);
        assert!(left[i0].norm() < 1e-15);
        assert!((right[i0].re - 2.0 * p.values()[i0].re).abs() < 1e-15);
    }

    #[test]
    fn gaussian_normalized_peak_centered() {
        let grid = TimeGrid::for_pulse(1.0, 1.0, 2048).unwrap();
        let p = make_pulse(PulseShape::Gaussian, 1.0, grid.clone()).unwrap();
        assert!((p.norm2() - 1.0).abs() < 1e-10);
        let peak = p
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        let center = 0.5 * (grid.t_start() + grid.t_end());
        assert!((grid.t(peak) - center).abs() <= grid.dt());
    }

    #[test]
    fn rejects_short_grid() {
        let grid = TimeGrid::new(0.0, 1.0, 256).unwrap();
        let err = make_pulse(PulseShape::Square, 2.0, grid).unwrap_err();
        assert!(matches!(err, Error::PulseSupport(_)));
    }
}
