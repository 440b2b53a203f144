//! Excitation kernels: the single-excitation convolution G±(t) of the input
//! envelope against e^{-Γ± t} and the double-excitation kernel ℰ±(t), both by
//! the exact exponential recurrence for piecewise-linear integrands.

use crate::error::{Error, Result};
use crate::params::{DecayRates, SystemParams};
use crate::pulse::PulseEnvelope;
use num_complex::Complex64 as C64;

/// Internal refinement factor for the recurrences. Linear interpolation of a
/// piecewise-linear envelope is exact, so refining only reduces the product
/// interpolation error of f·G in the ℰ pass.
const REFINE: usize = 4;

/// Step weights of the exact recurrence
/// G_{k+1} = e^{-Γ dt} G_k + w_prev f_k + w_next f_{k+1}.
#[derive(Clone, Copy)]
struct StepWeights {
    decay: C64,
    w_prev: C64,
    w_next: C64,
}

fn step_weights(rate: C64, dt: f64) -> StepWeights {
    let x = rate * dt;
    let (i0, i1) = if x.norm() < 1e-4 {
        // series for small |Γ dt| avoids cancellation (and covers Γ = 0)
        let i0 = dt * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0);
        let i1 = dt * dt * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0);
        (i0, i1)
    } else {
        let e = (-x).exp();
        ((1.0 - e) / rate, (1.0 - (1.0 + x) * e) / (rate * rate))
    };
    StepWeights { decay: (-x).exp(), w_prev: i1 / dt, w_next: i0 - i1 / dt }
}

/// Cell-based recurrence: the source on cell k is the linear segment from
/// `start[k]` to `end[k+1]`, which represents discontinuous envelopes exactly
/// when jump nodes carry one-sided samples.
fn recurrence_cells(start: &[C64], end: &[C64], dt: f64, rate: C64) -> Vec<C64> {
    let w = step_weights(rate, dt);
    let mut out = vec![C64::new(0.0, 0.0); start.len()];
    for k in 1..start.len() {
        out[k] = w.decay * out[k - 1] + w.w_prev * start[k - 1] + w.w_next * end[k];
    }
    out
}

/// Refine one-sided sample arrays: each coarse cell becomes `refine` fine
/// cells interpolating its own segment. Jump information is preserved (the
/// fine start/end arrays remain one-sided at coarse nodes).
fn upsample_sided(start: &[C64], end: &[C64], refine: usize) -> (Vec<C64>, Vec<C64>) {
    if refine <= 1 {
        return (start.to_vec(), end.to_vec());
    }
    let n = start.len();
    let m = (n - 1) * refine + 1;
    let mut fs = vec![C64::new(0.0, 0.0); m];
    let mut fe = vec![C64::new(0.0, 0.0); m];
    for k in 0..n - 1 {
        let (a, b) = (start[k], end[k + 1]);
        for r in 0..refine {
            let u0 = r as f64 / refine as f64;
            let u1 = (r + 1) as f64 / refine as f64;
            fs[k * refine + r] = a * (1.0 - u0) + b * u0;
            fe[k * refine + r + 1] = a * (1.0 - u1) + b * u1;
        }
    }
    (fs, fe)
}

fn downsample(values: Vec<C64>, refine: usize) -> Vec<C64> {
    if refine <= 1 {
        return values;
    }
    values.into_iter().step_by(refine).collect()
}

/// G±(t) and ℰ±(t) on the pulse grid, plus the rates they were built with.
#[derive(Debug, Clone)]
pub struct ExcitationKernels {
    pub g_plus: Vec<C64>,
    pub g_minus: Vec<C64>,
    pub e_plus: Vec<C64>,
    pub e_minus: Vec<C64>,
    pub rates: DecayRates,
}

/// Build the kernels
///   G±(t) = ∫_{-∞}^t e^{-Γ±(t-t′)} f(t′) dt′,
///   ℰ±(t) = ∫_{-∞}^t e^{-(2g²-i(2δ-β))(t-t′)} f(t′) G±(t′) dt′
/// by two chained one-pass recurrences. Rejects grids with dt·|Γ| > 0.5.
pub fn excitation_kernels(p: &SystemParams, pulse: &PulseEnvelope) -> Result<ExcitationKernels> {
    let rates = p.rates();
    let dt = pulse.grid().dt();
    let max_rate = rates
        .gamma_plus
        .norm()
        .max(rates.gamma_minus.norm())
        .max(rates.gamma_ee.norm());
    if dt * max_rate > 0.5 {
        return Err(Error::KernelResolution(dt * max_rate));
    }
    let (left, right) = pulse.one_sided_values();
    let (fs, fe) = upsample_sided(&right, &left, REFINE);
    let dtf = dt / REFINE as f64;
    let g_plus_f = recurrence_cells(&fs, &fe, dtf, rates.gamma_plus);
    let g_minus_f = recurrence_cells(&fs, &fe, dtf, rates.gamma_minus);
    // G is continuous, so the f·G product keeps f's one-sidedness
    let ps: Vec<C64> = fs.iter().zip(&g_plus_f).map(|(f, g)| f * g).collect();
    let pe: Vec<C64> = fe.iter().zip(&g_plus_f).map(|(f, g)| f * g).collect();
    let ms: Vec<C64> = fs.iter().zip(&g_minus_f).map(|(f, g)| f * g).collect();
    let me: Vec<C64> = fe.iter().zip(&g_minus_f).map(|(f, g)| f * g).collect();
    let e_plus_f = recurrence_cells(&ps, &pe, dtf, rates.gamma_ee);
    let e_minus_f = recurrence_cells(&ms, &me, dtf, rates.gamma_ee);
    Ok(ExcitationKernels {
        g_plus: downsample(g_plus_f, REFINE),
        g_minus: downsample(g_minus_f, REFINE),
        e_plus: downsample(e_plus_f, REFINE),
        e_minus: downsample(e_minus_f, REFINE),
        rates,
    })
}

/// Long-pulse (adiabatic) approximation of ℰ±:
/// ℰ± ≈ f²(t) / [(2g²-i(2δ-β)) Γ±]. Rejects two-photon resonance points where
/// a denominator factor vanishes.
pub fn adiabatic_e(p: &SystemParams, pulse: &PulseEnvelope) -> Result<(Vec<C64>, Vec<C64>)> {
    let rates = p.rates();
    let eps = 1e-12 * p.g2.max(1e-300);
    for (name, fac) in [
        ("2g2 - i(2*delta - beta)", rates.gamma_ee),
        ("Gamma_plus", rates.gamma_plus),
        ("Gamma_minus", rates.gamma_minus),
    ] {
        if fac.norm() < eps {
            return Err(Error::ResonanceSingularity(format!("{name} vanishes")));
        }
    }
    let dp = rates.gamma_ee * rates.gamma_plus;
    let dm = rates.gamma_ee * rates.gamma_minus;
    let plus = pulse.values().iter().map(|f| f * f / dp).collect();
    let minus = pulse.values().iter().map(|f| f * f / dm).collect();
    Ok((plus, minus))
}
