//! Fourier transforms between the time-domain envelope and the shifted-frequency
//! spectrum, in the unitary convention f̃(ω) = (2π)^{-1/2} ∫ f(t) e^{iωt} dt.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::pulse::PulseEnvelope;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

/// Complex amplitude over a uniform shifted-frequency grid centered at ω = 0.
#[derive(Debug, Clone)]
pub struct SpectralAmplitude {
    omega_start: f64,
    d_omega: f64,
    values: Vec<C64>,
    // time-grid origin, kept so the transform inverts exactly
    t_start: f64,
    dt: f64,
}

impl SpectralAmplitude {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn omega(&self, j: usize) -> f64 {
        self.omega_start + self.d_omega * j as f64
    }

    pub fn d_omega(&self) -> f64 {
        self.d_omega
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.omega(j)).collect()
    }

    /// ∫|f̃|² dω (discrete Parseval makes this equal the time-domain norm).
    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.d_omega
    }
}

/// Forward transform of the pulse envelope onto ω_j = (j - ⌊n/2⌋)·2π/(n·dt).
///
/// `pad` zero-pads the time signal to pad·n samples, refining dω by the same
/// factor (the pulse is time-limited, so padding just interpolates the
/// continuum spectrum). pad = 1 gives the exactly invertible transform.
pub fn to_spectrum(pulse: &PulseEnvelope, pad: usize) -> SpectralAmplitude {
    let grid = pulse.grid();
    dft_forward(grid.t_start(), grid.dt(), pulse.values(), pad.max(1))
}

fn shift_phases(n: usize) -> Vec<C64> {
    let half = (n / 2) as f64;
    (0..n)
        .map(|k| C64::from_polar(1.0, -half * std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}

fn dft_forward(t_start: f64, dt: f64, values: &[C64], pad: usize) -> SpectralAmplitude {
    let n = values.len() * pad;
    let shift = shift_phases(n);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (k, v) in values.iter().enumerate() {
        buf[k] = v * shift[k];
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    let d_omega = std::f64::consts::TAU / (n as f64 * dt);
    let omega_start = -((n / 2) as f64) * d_omega;
    let scale = dt / std::f64::consts::TAU.sqrt();
    for (j, v) in buf.iter_mut().enumerate() {
        let omega = omega_start + d_omega * j as f64;
        *v *= scale * C64::from_polar(1.0, omega * t_start);
    }
    SpectralAmplitude { omega_start, d_omega, values: buf, t_start, dt }
}

/// Inverse transform back onto the original time grid; exact (to rounding) for
/// pad = 1 spectra from [`to_spectrum`]. Rejects padded spectra.
pub fn from_spectrum(spec: &SpectralAmplitude) -> Result<(TimeGrid, Vec<C64>)> {
    let n = spec.n();
    let consistent = (spec.d_omega * spec.dt * n as f64 - std::f64::consts::TAU).abs() < 1e-9;
    if !consistent {
        return Err(Error::InvalidGrid("spectrum grid is not the unpadded transform of a time grid".into()));
    }
    let mut buf: Vec<C64> = spec
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| v * C64::from_polar(1.0, -spec.omega(j) * spec.t_start))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let shift = shift_phases(n);
    let scale = spec.d_omega / std::f64::consts::TAU.sqrt();
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= scale * shift[k].conj();
    }
    let grid = TimeGrid::new(spec.t_start, spec.t_start + spec.dt * (n - 1) as f64, n)
        .map_err(|e| Error::InvalidGrid(format!("cannot rebuild time grid: {e}")))?;
    Ok((grid, buf))
}
