//! DCF timing arithmetic, effective throughput and the α-fair utility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Utility assigned to links that cannot carry traffic (AP out of range,
/// zero rate, SINR below threshold). Finite so weight matrices stay finite.
pub const UNSERVABLE: f64 = -1e12;

/// Entries at or below this are treated as unservable.
pub const UNSERVABLE_CUTOFF: f64 = UNSERVABLE / 2.0;

pub fn is_unservable(w: f64) -> bool {
    w <= UNSERVABLE_CUTOFF
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacParams {
    pub payload_bits: f64,
    pub header_bits: f64,
    pub sifs_s: f64,
    pub slot_time_s: f64,
    pub ack_s: f64,
    pub difs_s: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Constellation size Π of the MCS.
    pub mcs_order: u32,
    /// RTS + CTS exchange time charged once per access attempt.
    pub rts_cts_s: f64,
}

impl Default for MacParams {
    fn default() -> Self {
        let sifs_s = 10e-6;
        let slot_time_s = 20e-6;
        Self {
            payload_bits: 1500.0 * 8.0,
            header_bits: 22.0 * 8.0,
            sifs_s,
            slot_time_s,
            ack_s: 64e-6,
            difs_s: sifs_s + 2.0 * slot_time_s,
            cw_min: 32,
            cw_max: 1024,
            mcs_order: 2,
            rts_cts_s: 100e-6,
        }
    }
}

impl MacParams {
    pub fn frame_bits(&self) -> f64 {
        self.payload_bits + self.header_bits
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("mac.sifs_us", self.sifs_s),
            ("mac.slot_us", self.slot_time_s),
            ("mac.ack_us", self.ack_s),
            ("mac.difs_us", self.difs_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, "must be > 0"));
            }
        }
        if !(self.rts_cts_s >= 0.0 && self.rts_cts_s.is_finite()) {
            return Err(Error::invalid("mac.rts_cts_us", "must be >= 0"));
        }
        if !(self.payload_bits > 0.0 && self.header_bits >= 0.0) {
            return Err(Error::invalid("mac.payload_bytes", "payload must be > 0"));
        }
        if self.cw_min == 0 {
            return Err(Error::invalid("mac.cw_min", "must be >= 1"));
        }
        if self.cw_min > self.cw_max {
            return Err(Error::invalid("mac.cw_max", "must be >= cw_min"));
        }
        if self.mcs_order < 2 || !self.mcs_order.is_power_of_two() {
            return Err(Error::invalid("mac.mcs_order", "must be a power of two >= 2"));
        }
        Ok(())
    }

    /// MAC delay used in link weights: [`mac_delay`] plus the RTS/CTS
    /// handshake.
    pub fn access_delay(&self) -> f64 {
        mac_delay(self) + self.rts_cts_s
    }
}

/// Frame airtime at `rate_bps`; a dead link takes forever.
pub fn frame_time(frame_bits: f64, rate_bps: f64) -> f64 {
    if frame_bits == 0.0 {
        return 0.0;
    }
    if rate_bps > 0.0 {
        frame_bits / rate_bps
    } else {
        f64::INFINITY
    }
}

/// `t_DIFS + t_SIFS + t_bf + t_ack` with the back-off term taken at the
/// given contention window: `t_bf = (cw / 2) · slot`.
pub fn mac_delay_for_window(mac: &MacParams, cw: f64) -> f64 {
    mac.difs_s + mac.sifs_s + cw / 2.0 * mac.slot_time_s + mac.ack_s
}

/// MAC-induced delay τ with the back-off term at `cw_max`.
pub fn mac_delay(mac: &MacParams) -> f64 {
    mac_delay_for_window(mac, f64::from(mac.cw_max))
}

/// Effective throughput β = log2(Π) / (t + τ). Zero for an unusable link.
pub fn effective_throughput(t_s: f64, tau_s: f64, mcs_order: u32) -> f64 {
    let total = t_s + tau_s;
    if !total.is_finite() {
        return 0.0;
    }
    f64::from(mcs_order).log2() / total
}

/// Payload goodput in bit/s for one frame exchange: `payload / (t + τ)`.
pub fn goodput_bps(payload_bits: f64, t_s: f64, tau_s: f64) -> f64 {
    let total = t_s + tau_s;
    if total.is_finite() && total > 0.0 {
        payload_bits / total
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessParams {
    pub delta: f64,
}

impl Default for FairnessParams {
    fn default() -> Self {
        Self { delta: 0.5 }
    }
}

impl FairnessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("association.delta", "must be >= 0"));
        }
        Ok(())
    }
}

/// α-fair utility: `ln β` at δ = 1, `β^(1-δ) / (1-δ)` otherwise.
///
/// A zero throughput is unservable; at δ = 1 the log would diverge and for
/// δ > 1 the power form would as well.
pub fn utility(beta: f64, fairness: &FairnessParams) -> f64 {
    if !(beta > 0.0) || !beta.is_finite() {
        return UNSERVABLE;
    }
    let d = fairness.delta;
    if d == 1.0 {
        beta.ln()
    } else {
        beta.powf(1.0 - d) / (1.0 - d)
    }
}

/// Full link chain from SINR to utility: rate, airtime, effective
/// throughput, utility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkFigures {
    pub sinr: f64,
    pub rate_bps: f64,
    pub airtime_s: f64,
    pub beta: f64,
    pub utility: f64,
}

pub fn link_figures(sinr: f64, bandwidth_hz: f64, mac: &MacParams, fairness: &FairnessParams) -> LinkFigures {
    let rate_bps = crate::phy::channel_rate(sinr, bandwidth_hz);
    let airtime_s = frame_time(mac.frame_bits(), rate_bps);
    let beta = effective_throughput(airtime_s, mac.access_delay(), mac.mcs_order);
    LinkFigures {
        sinr,
        rate_bps,
        airtime_s,
        beta,
        utility: utility(beta, fairness),
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn utility_strictly_increasing(delta in 0.0f64..3.0, a in 1e-3f64..1e4, f in 1.0001f64..10.0) {
            let p = FairnessParams { delta };
            prop_assert!(utility(a * f, &p) > utility(a, &p));
        }

        #[test]
        fn throughput_strictly_decreasing_in_tau(t in 0.0f64..1e-2, tau in 1e-6f64..1e-1, extra in 1e-6f64..1e-2) {
            prop_assert!(effective_throughput(t, tau + extra, 2) < effective_throughput(t, tau, 2));
        }

        #[test]
        fn rate_monotone_in_sinr(s in 0.0f64..1e4, ds in 0.0f64..1e3) {
            let b = 20e6;
            prop_assert!(crate::phy::channel_rate(s + ds, b) >= crate::phy::channel_rate(s, b));
        }
    }
}
