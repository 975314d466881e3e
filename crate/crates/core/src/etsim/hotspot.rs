//! Phenomenological hotspot model for a superconducting nanowire.
//!
//! The normal-domain size is tracked as a fraction `f ∈ [0, 1]` of the fully
//! switched wire, so the wire resistance is `f * r_normal`. Above the
//! switching current the hotspot grows toward the fully normal state at a rate
//! `heating * (i / i_sw)^2 / (g * tau)`; at or below it the hotspot heals toward
//! zero at `g / tau`. The substrate coupling `g` scales heat removal, so it
//! both speeds up healing and slows down Joule-driven growth.
//!
//! Over one step the branch current is frozen and the linear relaxation is
//! integrated exactly, which keeps `f` inside `[0, 1]` for any step size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_R_NORMAL: f64 = 1e3;
pub const DEFAULT_TAU_THERMAL: f64 = 100e-12;
pub const DEFAULT_G_THERMAL: f64 = 1.0;
/// Joule-heating coefficient of the growth law. Calibrated so that a 15 ps,
/// 3 x I_sw programming pulse on the unit cell with 100x thermal coupling
/// moves about one flux quantum into a 10 nH loop.
pub const DEFAULT_HEATING: f64 = 0.27;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NanowireElement {
    /// Switching current (A).
    pub i_sw: f64,
    /// Resistance of the fully switched wire (Ω).
    pub r_normal: f64,
    /// Hotspot relaxation time (s).
    pub tau_thermal: f64,
    /// Substrate thermal-conductivity multiplier.
    pub g_thermal: f64,
    /// Dimensionless growth-rate coefficient.
    pub heating: f64,
    /// Current hotspot fraction in [0, 1].
    pub hotspot_fraction: f64,
}

impl NanowireElement {
    pub fn new(i_sw: f64) -> Self {
        Self {
            i_sw,
            r_normal: DEFAULT_R_NORMAL,
            tau_thermal: DEFAULT_TAU_THERMAL,
            g_thermal: DEFAULT_G_THERMAL,
            heating: DEFAULT_HEATING,
            hotspot_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64); 5] = [
            ("i_sw", self.i_sw),
            ("r_normal", self.r_normal),
            ("tau_thermal", self.tau_thermal),
            ("g_thermal", self.g_thermal),
            ("heating", self.heating),
        ];
        for (name, v) in checks {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.hotspot_fraction) {
            return Err(Error::param("hotspot_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn resistance(&self) -> f64 {
        self.hotspot_fraction * self.r_normal
    }

    pub fn is_switching(&self, current: f64) -> bool {
        current.abs() > self.i_sw
    }

    pub fn growth_rate(&self, current: f64) -> f64 {
        let ratio = current / self.i_sw;
        self.heating * ratio * ratio / (self.g_thermal * self.tau_thermal)
    }

    pub fn cooling_rate(&self) -> f64 {
        self.g_thermal / self.tau_thermal
    }
}

/// Advances the hotspot fraction over `dt` with the branch current held at
/// `current`.
pub fn nanowire_step(elem: &NanowireElement, current: f64, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    let f = elem.hotspot_fraction;
    let next = if elem.is_switching(current) {
        1.0 - (1.0 - f) * (-elem.growth_rate(current) * dt).exp()
    } else {
        f * (-elem.cooling_rate() * dt).exp()
    };
    next.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wire() -> NanowireElement {
        NanowireElement::new(25e-6)
    }

    #[test]
    fn heals_below_switching_current() {
        let mut w = wire();
        w.hotspot_fraction = 1.0;
        let dt = w.tau_thermal / 100.0;
        for _ in 0..1000 {
            w.hotspot_fraction = nanowire_step(&w, 0.5 * w.i_sw, dt);
        }
        assert!(w.hotspot_fraction < 1e-4);
        // Exactly at i_sw the wire is not switching.
        w.hotspot_fraction = 0.5;
        assert!(nanowire_step(&w, w.i_sw, dt) < 0.5);
    }

    #[test]
    fn thermal_coupling_speeds_decay() {
        let mut slow = wire();
        slow.hotspot_fraction = 1.0;
        let mut fast = slow;
        fast.g_thermal = 100.0;
        let dt = 1e-13;
        let decay_slow = -(nanowire_step(&slow, 0.0, dt)).ln();
        let decay_fast = -(nanowire_step(&fast, 0.0, dt)).ln();
        assert!(((decay_fast / decay_slow) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn grows_above_switching_current() {
        let w = wire();
        let dt = 1e-13;
        let mut f = w.hotspot_fraction;
        let mut elem = w;
        for _ in 0..50 {
            let next = nanowire_step(&elem, 3.0 * w.i_sw, dt);
            assert!(next > f && next <= 1.0);
            f = next;
            elem.hotspot_fraction = f;
        }
        // Single-step value of the exact relaxation from zero.
        let expected = 1.0 - (-w.growth_rate(3.0 * w.i_sw) * dt).exp();
        assert!((nanowire_step(&w, 3.0 * w.i_sw, dt) - expected).abs() < 1e-15);
        assert!((w.growth_rate(3.0 * w.i_sw) / w.growth_rate(1.5 * w.i_sw) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn stays_in_unit_interval_for_huge_steps() {
        let mut w = wire();
        w.hotspot_fraction = 0.3;
        assert!(nanowire_step(&w, 100.0 * w.i_sw, 1.0) <= 1.0);
        assert!(nanowire_step(&w, 0.0, 1.0) >= 0.0);
    }
}
