//! Sweep backends for the CLI: spectrum tables, square-pulse transmission
//! maps, two-photon channel sweeps and the canned optimization objectives.

use crate::error::Result;
use crate::grid::TimeGrid;
use crate::linear::{square_pulse_transmission, traveling_transfer};
use crate::optimize::{maximize, Axis, OptimizeResult};
use crate::params::SystemParams;
use crate::pulse::{make_pulse, PulseShape};
use crate::twophoton::{channel_probabilities, ChannelReport, ChannelTag, Geometry, PartFilter};
use rayon::prelude::*;
use serde::Serialize;

/// One row of a spectrum table.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub transmission: f64,
    pub arg_t: f64,
    pub arg_r: f64,
}

/// (ω, T, arg t, arg r) over a frequency window.
pub fn spectrum_table(
    p: &SystemParams,
    omega_lo: f64,
    omega_hi: f64,
    n: usize,
    markov: bool,
) -> Vec<SpectrumRow> {
    let (t, r) = traveling_transfer(p, markov);
    (0..n)
        .map(|j| {
            let omega = if n == 1 {
                omega_lo
            } else {
                omega_lo + (omega_hi - omega_lo) * j as f64 / (n - 1) as f64
            };
            let tv = t.eval(omega);
            let rv = r.eval(omega);
            SpectrumRow {
                omega,
                transmission: tv.norm_sqr(),
                arg_t: tv.arg(),
                arg_r: rv.arg(),
            }
        })
        .collect()
}

/// One point of a square-pulse transmission map.
#[derive(Debug, Clone, Serialize)]
pub struct MapPoint {
    pub phi: f64,
    pub g2_t: f64,
    pub transmission: f64,
}

/// Square-pulse transmission over a (φ, g²T) grid at fixed δT and ΔT (the
/// four panels of the transmission-landscape figure are (0,0), (10,0),
/// (0,10), (10,10)). Points evaluate in parallel; output order is row-major
/// in (g²T, φ).
pub fn transmission_map(
    delta_t: f64,
    exchange_t: f64,
    phis: &[f64],
    g2_ts: &[f64],
) -> Vec<MapPoint> {
    let mut jobs = Vec::with_capacity(phis.len() * g2_ts.len());
    for &g2_t in g2_ts {
        for &phi in phis {
            jobs.push((phi, g2_t));
        }
    }
    jobs.par_iter()
        .map(|&(phi, g2_t)| {
            // work in units of the pulse duration: T = 1, g2 = g2_t
            let p = SystemParams::markov(g2_t, delta_t, exchange_t, 0.0, phi);
            MapPoint { phi, g2_t, transmission: square_pulse_transmission(&p, 1.0, true) }
        })
        .collect()
}

/// Uniformly spaced samples, inclusive of both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Log-spaced samples, inclusive of both ends.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo);
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Channel probabilities for a square pulse of duration `g2_t`/g² at the
/// given geometry, on the default grid.
pub fn two_photon_report(
    p: &SystemParams,
    g2_t: f64,
    n: usize,
    geometry: Geometry,
) -> Result<ChannelReport> {
    let dur = if p.g2 > 0.0 { g2_t / p.g2 } else { g2_t };
    let grid = TimeGrid::for_pulse(p.g2, dur, n)?;
    let pulse = make_pulse(PulseShape::Square, dur, grid)?;
    channel_probabilities(p, &pulse, geometry)
}

/// Canned optimization objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    /// photon-sorter figure of merit: P_dd of the standing-wave input
    SorterPdd,
    /// negative total nonlinear norm of the copropagating channels
    Linearity,
    /// negative same-direction probability of counterpropagating photons
    CounterpropPassThrough,
}

impl Objective {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sorter" => Some(Self::SorterPdd),
            "linearity" => Some(Self::Linearity),
            "counterprop-leakage" => Some(Self::CounterpropPassThrough),
            _ => None,
        }
    }
}

/// Search axes by name: any of g2T, phi, delta, Delta, beta (rates in units
/// of g²; the pulse is square with g² = 1 internally).
pub fn optimize_objective(
    objective: Objective,
    axes: &[Axis],
    n: usize,
    max_evals: usize,
) -> OptimizeResult {
    let f = |x: &[f64]| -> f64 {
        let mut g2_t = 1.0;
        let mut phi = 1.5 * std::f64::consts::PI;
        let (mut delta, mut exchange, mut beta) = (0.0, 1.0, 0.0);
        for (axis, &v) in axes.iter().zip(x) {
            match axis.name.as_str() {
                "g2T" => g2_t = v,
                "phi" => phi = v,
                "delta" => delta = v,
                "Delta" => exchange = v,
                "beta" => beta = v,
                other => panic!("unknown axis {other}"),
            }
        }
        let p = SystemParams::markov(1.0, delta, exchange, beta, phi);
        let eval = |geometry: Geometry| two_photon_report(&p, g2_t, n, geometry);
        match objective {
            Objective::SorterPdd => eval(Geometry::Standing)
                .ok()
                .and_then(|r| r.probability(ChannelTag::Dd))
                .unwrap_or(f64::NEG_INFINITY),
            Objective::Linearity => {
                let dur = g2_t;
                let grid = match TimeGrid::for_pulse(1.0, dur, n) {
                    Ok(g) => g,
                    Err(_) => return f64::NEG_INFINITY,
                };
                let pulse = match make_pulse(PulseShape::Square, dur, grid) {
                    Ok(p) => p,
                    Err(_) => return f64::NEG_INFINITY,
                };
                match crate::twophoton::scattering_channels(&p, &pulse, Geometry::Copropagating) {
                    Ok(chans) => -chans
                        .iter()
                        .map(|c| c.filtered(PartFilter::NonlinearOnly).norm2())
                        .sum::<f64>(),
                    Err(_) => f64::NEG_INFINITY,
                }
            }
            Objective::CounterpropPassThrough => eval(Geometry::Counterpropagating)
                .ok()
                .map(|r| {
                    -(r.probability(ChannelTag::Aa).unwrap_or(0.0)
                        + r.probability(ChannelTag::Bb).unwrap_or(0.0))
                })
                .unwrap_or(f64::NEG_INFINITY),
        }
    };
    maximize(axes, &f, 1e-4, max_evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spectrum_rows_reproduce_ridge() {
        // ridge config: delta/g2 = 0.4, phi = -atan(0.4): T(0) = 1
        let p = SystemParams::markov(1.0, 0.4, 0.0, 0.0, -0.4_f64.atan());
        let rows = spectrum_table(&p, 0.0, 0.0, 1, true);
        assert!((rows[0].transmission - 1.0).abs() < 1e-12);
        // g2 = 0: T = 1 everywhere
        let p0 = SystemParams::markov(0.0, 0.0, 0.0, 0.0, 0.0);
        for row in spectrum_table(&p0, -3.0, 3.0, 7, true) {
            assert!((row.transmission - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn map_anchor_points() {
        // panel (c): deltaT = 0, DeltaT = 10; anchor at g2T = 10 (Delta = g2),
        // phi = 3pi/2: the flat window transmits fully
        let pts = transmission_map(0.0, 10.0, &[1.5 * PI], &[10.0]);
        assert!((pts[0].transmission - 1.0).abs() < 1e-6);
        // panel (a) at very short pulses: nearly transparent
        let pts = transmission_map(0.0, 0.0, &[0.4], &[1e-3]);
        assert!(pts[0].transmission > 0.99);
    }

    #[test]
    fn sorter_objective_zero_without_coupling() {
        // g2 = 0 <=> all rates zero: P_dd must vanish. Emulated by Delta = 0
        // axis pinned... the g2 = 0 limit itself is exercised through the
        // twophoton tests; here check the objective plumbing end to end.
        let axes = vec![Axis { name: "g2T".into(), lo: 0.8, hi: 1.2, scan_points: 3 }];
        let r = optimize_objective(Objective::SorterPdd, &axes, 256, 40);
        assert!(r.value > 0.2 && r.value < 0.5);
    }
}
