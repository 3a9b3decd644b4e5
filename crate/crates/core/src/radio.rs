//! Free-space link budget and Shannon capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Radio constants of a wireless hop. Gains are stored as linear ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub noise_dbm_per_hz: f64,
    pub carrier_hz: f64,
}

impl Default for LinkBudget {
    /// 40 MHz, 1 W, 5 dBi antennas, -174 dBm/Hz noise floor, 5.9 GHz carrier.
    fn default() -> Self {
        LinkBudget {
            bandwidth_hz: 40e6,
            tx_power_w: 1.0,
            tx_gain: db_to_linear(5.0),
            rx_gain: db_to_linear(5.0),
            noise_dbm_per_hz: -174.0,
            carrier_hz: 5.9e9,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.bandwidth_hz,
            self.tx_power_w,
            self.tx_gain,
            self.rx_gain,
            self.carrier_hz,
        ];
        if positive.iter().all(|v| v.is_finite() && *v > 0.0) && self.noise_dbm_per_hz.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("link budget has non-positive entries: {self:?}")))
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Noise power over the whole channel, in watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_dbm_per_hz) * self.bandwidth_hz
    }

    pub fn received_power(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::Domain(format!("free-space model needs d > 0, got {d}")));
        }
        let path = self.wavelength_m() / (4.0 * std::f64::consts::PI * d);
        Ok(self.tx_power_w * self.rx_gain * self.tx_gain * path * path)
    }

    pub fn snr(&self, d: f64) -> Result<f64> {
        Ok(self.received_power(d)? / self.noise_power_w())
    }

    /// Shannon capacity in bits per second at distance `d` meters.
    pub fn link_rate(&self, d: f64) -> Result<f64> {
        Ok(self.bandwidth_hz * (1.0 + self.snr(d)?).log2())
    }
}

pub fn transmission_delay(size_bits: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("transmission rate must be positive, got {rate}")));
    }
    if size_bits < 0.0 {
        return Err(Error::Domain(format!("negative size {size_bits}")));
    }
    Ok(size_bits / rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn unity_received_power() {
        let mut budget = LinkBudget {
            tx_gain: 1.0,
            rx_gain: 1.0,
            ..LinkBudget::default()
        };
        budget.tx_power_w = 1.0;
        let d = budget.wavelength_m() / (4.0 * std::f64::consts::PI);
        assert!(rel(budget.received_power(d).unwrap(), 1.0) < 1e-12);
    }

    #[test]
    fn default_budget_at_500m() {
        let b = LinkBudget::default();
        assert!(rel(b.wavelength_m(), 0.05081) < 1e-3);
        assert!(rel(b.received_power(500.0).unwrap(), 6.54e-10) < 2e-3);
        assert!(rel(b.snr(500.0).unwrap(), 4.11e3) < 2e-3);
        assert!(rel(b.link_rate(500.0).unwrap(), 4.80e8) < 1e-2);
        assert!(rel(b.link_rate(100.0).unwrap(), 6.66e8) < 1e-2);
    }

    #[test]
    fn inverse_square() {
        let b = LinkBudget::default();
        let near = b.received_power(120.0).unwrap();
        let far = b.received_power(240.0).unwrap();
        assert!(rel(near / far, 4.0) < 1e-12);
    }

    #[test]
    fn zero_distance_is_a_domain_error() {
        let b = LinkBudget::default();
        assert!(matches!(b.received_power(0.0), Err(Error::Domain(_))));
        assert!(matches!(b.link_rate(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn transmission_delay_examples() {
        assert_eq!(transmission_delay(0.0, 5e8).unwrap(), 0.0);
        assert!((transmission_delay(2.0e7, 4.80e8).unwrap() - 0.0417).abs() < 1e-4);
        assert_eq!(transmission_delay(1e9, 1e9).unwrap(), 1.0);
        assert!(transmission_delay(1.0, 0.0).is_err());
        assert!(transmission_delay(1.0, -3.0).is_err());
    }

    #[test]
    fn link_usable_everywhere_in_region() {
        let b = LinkBudget::default();
        for i in 1..=710 {
            assert!(b.snr(i as f64).unwrap() > 1.0);
        }
    }

    #[test]
    fn linear_units_match_db_domain() {
        let b = LinkBudget::default();
        for d in [1.0, 37.5, 500.0, 710.0] {
            // everything in dB, converted back once at the end
            let fspl_db = 20.0 * (4.0 * std::f64::consts::PI * d / b.wavelength_m()).log10();
            let pr_dbm = 30.0 + 5.0 + 5.0 - fspl_db;
            let noise_dbm = b.noise_dbm_per_hz + 10.0 * b.bandwidth_hz.log10();
            let snr_db = pr_dbm - noise_dbm;
            assert!(rel(b.snr(d).unwrap(), db_to_linear(snr_db)) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn rate_strictly_decreasing(a in 0.1f64..2000.0, b in 0.1f64..2000.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let budget = LinkBudget::default();
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(budget.link_rate(near).unwrap() > budget.link_rate(far).unwrap());
        }
    }
}
