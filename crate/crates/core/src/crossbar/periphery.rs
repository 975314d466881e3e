use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input rescaling steps tried before a saturated output is accepted.
pub const MAX_BOUND_ROUNDS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeripheryConfig {
    pub dac_bits: u32,
    pub adc_bits: u32,
    /// Additive output noise, in units of the normalized output.
    pub noise_std: f64,
    /// Output saturation magnitude.
    pub signal_bound: f64,
    /// Pulse slots per update cycle.
    pub bit_length: u32,
    /// Apply DAC and ADC quantization.
    pub quantize: bool,
    /// Scale inputs by their largest magnitude before the DAC.
    pub noise_management: bool,
    /// Halve the inputs and repeat the read while any output saturates.
    pub bound_management: bool,
}

impl Default for PeripheryConfig {
    fn default() -> Self {
        Self {
            dac_bits: 5,
            adc_bits: 9,
            noise_std: 0.06,
            signal_bound: 12.0,
            bit_length: 10,
            quantize: true,
            noise_management: true,
            bound_management: true,
        }
    }
}

impl PeripheryConfig {
    /// No quantization, noise or rescaling.
    pub fn noiseless() -> Self {
        Self {
            noise_std: 0.0,
            quantize: false,
            noise_management: false,
            bound_management: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dac_bits < 1 || self.dac_bits > 52 {
            return Err(Error::param("dac_bits", "must lie in 1..=52"));
        }
        if self.adc_bits < 1 || self.adc_bits > 52 {
            return Err(Error::param("adc_bits", "must lie in 1..=52"));
        }
        if self.bit_length < 1 {
            return Err(Error::param("bit_length", "must be at least 1"));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::param("noise_std", "must be non-negative"));
        }
        if !(self.signal_bound > 0.0) || !self.signal_bound.is_finite() {
            return Err(Error::param("signal_bound", "must be positive"));
        }
        Ok(())
    }
}

/// Symmetric mid-tread quantizer with `2^bits - 1` levels spanning
/// `[-range, range]`; one bit degenerates to a sign quantizer. Inputs outside
/// the range saturate.
pub fn quantize(x: f64, bits: u32, range: f64) -> f64 {
    let x = x.clamp(-range, range);
    if bits == 1 {
        return if x >= 0.0 { range } else { -range };
    }
    let half = ((1u64 << (bits - 1)) - 1) as f64;
    let step = range / half;
    ((x / step).round() * step).clamp(-range, range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let p = PeripheryConfig::default();
        assert_eq!((p.dac_bits, p.adc_bits, p.bit_length), (5, 9, 10));
        assert_eq!((p.noise_std, p.signal_bound), (0.06, 12.0));
        p.validate().unwrap();
    }

    #[test]
    fn quantizer_levels() {
        assert_eq!(quantize(0.0, 5, 1.0), 0.0);
        assert_eq!(quantize(1.0, 5, 1.0), 1.0);
        assert_eq!(quantize(-3.0, 5, 1.0), -1.0);
        assert!((quantize(0.5 / 15.0 + 1e-9, 5, 1.0) - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(quantize(0.2, 1, 1.0), 1.0);
        assert_eq!(quantize(-0.2, 1, 1.0), -1.0);
        let step = 12.0 / 255.0;
        assert!((quantize(0.03, 9, 12.0) - step).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_config() {
        let mut p = PeripheryConfig::default();
        p.bit_length = 0;
        assert!(p.validate().is_err());
        let mut p = PeripheryConfig::default();
        p.signal_bound = 0.0;
        assert!(p.validate().is_err());
    }
}
