use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Physical configuration of the two-atom system.
///
/// All rates are in the same inverse-time unit; `g2` is the single-atom decay
/// rate g² (the coupling g only ever appears squared). `phi` is the optical
/// separation phase k_F·a and `delay` the propagation time a/c (zero in the
/// strict Markov limit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// coupling rate g²
    pub g2: f64,
    /// carrier-atom detuning δ = ω_F - ω_A
    pub delta: f64,
    /// exchange (Förster) interaction Δ
    pub exchange: f64,
    /// doubly-excited-state shift β
    pub beta: f64,
    /// separation phase φ = k_F a (radians)
    pub phi: f64,
    /// propagation delay a/c (0 = Markov limit)
    pub delay: f64,
}

impl SystemParams {
    pub fn new(g2: f64, delta: f64, exchange: f64, beta: f64, phi: f64, delay: f64) -> Self {
        assert!(g2 >= 0.0, "g2 must be non-negative");
        assert!(delay >= 0.0, "delay must be non-negative");
        Self { g2, delta, exchange, beta, phi, delay }
    }

    /// Markov-limit parameters (delay = 0).
    pub fn markov(g2: f64, delta: f64, exchange: f64, beta: f64, phi: f64) -> Self {
        Self::new(g2, delta, exchange, beta, phi, 0.0)
    }

    /// Effective detuning δ₊ = δ - Δ for the bright state.
    #[inline]
    pub fn delta_plus(&self) -> f64 {
        self.delta - self.exchange
    }

    /// Effective detuning δ₋ = δ + Δ for the dark state.
    #[inline]
    pub fn delta_minus(&self) -> f64 {
        self.delta + self.exchange
    }

    /// δ₊′ = δ + Δ - β (excitation |+⟩ → |ee⟩).
    #[inline]
    pub fn delta_plus_prime(&self) -> f64 {
        self.delta + self.exchange - self.beta
    }

    /// δ₋′ = δ - Δ - β (excitation |−⟩ → |ee⟩).
    #[inline]
    pub fn delta_minus_prime(&self) -> f64 {
        self.delta - self.exchange - self.beta
    }

    /// Separation phase at shifted frequency ω: φ(ω) = φ + ω·delay.
    #[inline]
    pub fn phi_at(&self, omega: f64, markov: bool) -> f64 {
        if markov {
            self.phi
        } else {
            self.phi + omega * self.delay
        }
    }

    pub fn rates(&self) -> DecayRates {
        DecayRates::from_params(self)
    }
}

/// Collective complex decay rates of the bright/dark manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    /// Γ₊ = g²(1 + e^{iφ}) - i δ₊
    pub gamma_plus: C64,
    /// Γ₋ = g²(1 - e^{iφ}) - i δ₋
    pub gamma_minus: C64,
    /// Γ_c = Re Γ₊ = g²(1 + cos φ)
    pub gamma_c: f64,
    /// Γ_s = Re Γ₋ = g²(1 - cos φ)
    pub gamma_s: f64,
    /// 2g² - i(2δ - β), the doubly-excited-state kernel rate
    pub gamma_ee: C64,
}

impl DecayRates {
    pub fn from_params(p: &SystemParams) -> Self {
        let e_phi = C64::from_polar(1.0, p.phi);
        let gamma_plus = p.g2 * (1.0 + e_phi) - C64::i() * p.delta_plus();
        let gamma_minus = p.g2 * (1.0 - e_phi) - C64::i() * p.delta_minus();
        let gamma_ee = C64::new(2.0 * p.g2, -(2.0 * p.delta - p.beta));
        Self {
            gamma_plus,
            gamma_minus,
            gamma_c: p.g2 * (1.0 + p.phi.cos()),
            gamma_s: p.g2 * (1.0 - p.phi.cos()),
            gamma_ee,
        }
    }
}
