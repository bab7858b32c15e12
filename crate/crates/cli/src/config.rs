//! TOML scenario configuration. Every section is optional; missing keys
//! take the defaults, unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use densewlan::association::Scheme;
use densewlan::mac::{FairnessParams, MacParams};
use densewlan::phy::SinrMode;
use densewlan::scenario::{CapacityRule, ScenarioParams};
use densewlan::simcore::{DynamicParams, SimParams};
use densewlan::topology::{Area, CsrMode, Intensities, RadioParams};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Base seed; realization `k` of a point uses `seed + k`.
    pub seed: u64,
    pub out: PathBuf,
    pub schemes: Vec<Scheme>,
    pub topology: TopologySection,
    pub radio: RadioSection,
    pub antennas: AntennaSection,
    pub mac: MacSection,
    pub association: AssociationSection,
    pub traffic: TrafficSection,
    pub simulation: SimulationSection,
    pub sweep: SweepSection,
    pub dynamic: DynamicSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("results"),
            schemes: Scheme::STATIC.to_vec(),
            topology: TopologySection::default(),
            radio: RadioSection::default(),
            antennas: AntennaSection::default(),
            mac: MacSection::default(),
            association: AssociationSection::default(),
            traffic: TrafficSection::default(),
            simulation: SimulationSection::default(),
            sweep: SweepSection::default(),
            dynamic: DynamicSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologySection {
    pub width_m: f64,
    pub height_m: f64,
    pub eta_n: f64,
    pub eta_m: f64,
    pub n_ref: f64,
}

impl Default for TopologySection {
    fn default() -> Self {
        let i = Intensities::default();
        let a = Area::default();
        Self {
            width_m: a.width_m,
            height_m: a.height_m,
            eta_n: i.eta_n,
            eta_m: i.eta_m,
            n_ref: i.n_ref,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioSection {
    pub tx_power_dbm: f64,
    pub noise_floor_dbm_per_hz: f64,
    pub bandwidth_mhz: f64,
    pub pathloss_exponent: f64,
    pub reference_distance_m: f64,
    pub reference_loss_db: f64,
    pub cca_threshold_dbm: f64,
    pub receiver_sensitivity_dbm: f64,
    pub csr_m: f64,
    pub csr_mode: CsrMode,
}

impl Default for RadioSection {
    fn default() -> Self {
        let r = RadioParams::default();
        Self {
            tx_power_dbm: r.tx_power_dbm,
            noise_floor_dbm_per_hz: r.noise_floor_dbm_per_hz,
            bandwidth_mhz: r.bandwidth_hz / 1e6,
            pathloss_exponent: r.pathloss_exponent,
            reference_distance_m: r.reference_distance_m,
            reference_loss_db: r.reference_loss_db,
            cca_threshold_dbm: r.cca_threshold_dbm,
            receiver_sensitivity_dbm: r.receiver_sensitivity_dbm,
            csr_m: r.csr_m,
            csr_mode: r.csr_mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaSection {
    pub num_tx: usize,
    pub num_rx: usize,
    pub sinr_mode: SinrMode,
}

impl Default for AntennaSection {
    fn default() -> Self {
        let p = ScenarioParams::default();
        Self {
            num_tx: p.num_tx,
            num_rx: p.num_rx,
            sinr_mode: p.sinr_mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacSection {
    pub payload_bytes: f64,
    pub header_bytes: f64,
    pub sifs_us: f64,
    pub slot_us: f64,
    pub difs_us: f64,
    pub ack_us: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub mcs_order: u32,
    pub rts_cts_us: f64,
}

impl Default for MacSection {
    fn default() -> Self {
        let m = MacParams::default();
        Self {
            payload_bytes: m.payload_bits / 8.0,
            header_bytes: m.header_bits / 8.0,
            sifs_us: m.sifs_s * 1e6,
            slot_us: m.slot_time_s * 1e6,
            difs_us: m.difs_s * 1e6,
            ack_us: m.ack_s * 1e6,
            cw_min: m.cw_min,
            cw_max: m.cw_max,
            mcs_order: m.mcs_order,
            rts_cts_us: m.rts_cts_s * 1e6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssociationSection {
    pub delta: f64,
    pub gamma_db: f64,
    pub gamma_filter: bool,
    pub weight_iterations: usize,
    pub capacity_rule: CapacityRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrival_shuffle_seed: Option<u64>,
}

impl Default for AssociationSection {
    fn default() -> Self {
        let p = ScenarioParams::default();
        Self {
            delta: p.fairness.delta,
            gamma_db: p.gamma_db,
            gamma_filter: p.gamma_filter,
            weight_iterations: p.weight_iterations,
            capacity_rule: p.capacity_rule,
            arrival_shuffle_seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficSection {
    pub arrival_rate_per_slot: f64,
}

impl Default for TrafficSection {
    fn default() -> Self {
        Self {
            arrival_rate_per_slot: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub n_slots: u64,
    pub warmup_slots: u64,
    pub n_realizations: usize,
    pub retry_limit: u32,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let s = SimParams::default();
        Self {
            n_slots: s.n_slots,
            warmup_slots: s.warmup_slots,
            n_realizations: 200,
            retry_limit: s.retry_limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// STA densities η_n visited by `sweep`.
    pub densities: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            densities: (1..=10).map(|k| f64::from(k) / 10.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicSection {
    pub initial_stas: usize,
    pub final_stas: usize,
    pub max_arrivals_per_epoch: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<Vec<usize>>,
    pub epoch_slots: u64,
    pub mobile_fraction: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub n_realizations: usize,
    pub schemes: Vec<Scheme>,
}

impl Default for DynamicSection {
    fn default() -> Self {
        let d = DynamicParams::default();
        Self {
            initial_stas: d.initial_stas,
            final_stas: d.final_stas,
            max_arrivals_per_epoch: d.max_arrivals_per_epoch,
            arrivals: d.arrivals,
            epoch_slots: d.epoch_slots,
            mobile_fraction: d.mobile_fraction,
            speed_min_mps: d.speed_min_mps,
            speed_max_mps: d.speed_max_mps,
            n_realizations: 50,
            schemes: vec![Scheme::Gda, Scheme::Bpf, Scheme::SmartAssoc, Scheme::Greedy, Scheme::Ssf],
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid configuration")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    /// The fully resolved configuration, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn scenario_params(&self) -> ScenarioParams {
        let t = &self.topology;
        let r = &self.radio;
        let m = &self.mac;
        let a = &self.association;
        ScenarioParams {
            area: Area::new(t.width_m, t.height_m),
            intensities: Intensities {
                eta_n: t.eta_n,
                eta_m: t.eta_m,
                n_ref: t.n_ref,
            },
            radio: RadioParams {
                tx_power_dbm: r.tx_power_dbm,
                noise_floor_dbm_per_hz: r.noise_floor_dbm_per_hz,
                bandwidth_hz: r.bandwidth_mhz * 1e6,
                pathloss_exponent: r.pathloss_exponent,
                reference_distance_m: r.reference_distance_m,
                reference_loss_db: r.reference_loss_db,
                cca_threshold_dbm: r.cca_threshold_dbm,
                receiver_sensitivity_dbm: r.receiver_sensitivity_dbm,
                csr_m: r.csr_m,
                csr_mode: r.csr_mode,
            },
            num_tx: self.antennas.num_tx,
            num_rx: self.antennas.num_rx,
            sinr_mode: self.antennas.sinr_mode,
            mac: MacParams {
                payload_bits: m.payload_bytes * 8.0,
                header_bits: m.header_bytes * 8.0,
                sifs_s: m.sifs_us / 1e6,
                slot_time_s: m.slot_us / 1e6,
                ack_s: m.ack_us / 1e6,
                difs_s: m.difs_us / 1e6,
                cw_min: m.cw_min,
                cw_max: m.cw_max,
                mcs_order: m.mcs_order,
                rts_cts_s: m.rts_cts_us / 1e6,
            },
            fairness: FairnessParams { delta: a.delta },
            gamma_db: a.gamma_db,
            gamma_filter: a.gamma_filter,
            weight_iterations: a.weight_iterations,
            capacity_rule: a.capacity_rule,
            arrival_rate_per_slot: self.traffic.arrival_rate_per_slot,
            arrival_shuffle_seed: a.arrival_shuffle_seed,
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            n_slots: self.simulation.n_slots,
            warmup_slots: self.simulation.warmup_slots,
            retry_limit: self.simulation.retry_limit,
            trace: false,
        }
    }

    pub fn dynamic_params(&self) -> DynamicParams {
        let d = &self.dynamic;
        DynamicParams {
            initial_stas: d.initial_stas,
            final_stas: d.final_stas,
            max_arrivals_per_epoch: d.max_arrivals_per_epoch,
            arrivals: d.arrivals.clone(),
            epoch_slots: d.epoch_slots,
            mobile_fraction: d.mobile_fraction,
            speed_min_mps: d.speed_min_mps,
            speed_max_mps: d.speed_max_mps,
        }
    }

    /// Checks every derived parameter set; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        self.scenario_params().validate()?;
        self.sim_params().validate()?;
        self.dynamic_params().validate()?;
        if self.schemes.is_empty() {
            anyhow::bail!("invalid value for `schemes`: at least one scheme is required");
        }
        if self.simulation.n_realizations == 0 {
            anyhow::bail!("invalid value for `simulation.n_realizations`: must be >= 1");
        }
        if self.dynamic.n_realizations == 0 {
            anyhow::bail!("invalid value for `dynamic.n_realizations`: must be >= 1");
        }
        if let Some(d) = self.sweep.densities.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            anyhow::bail!("invalid value for `sweep.densities`: {d} is not a density");
        }
        Ok(())
    }
}

/// Parses a comma-separated scheme list such as `gaa,ssf`.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Scheme>().map_err(anyhow::Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        assert_eq!(c.scenario_params(), ScenarioParams::default());
        c.validate().unwrap();
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = ScenarioConfig::from_toml_str("seed = 9\n[mac]\ncw_min = 16\n").unwrap();
        let back = ScenarioConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(c, back);
        assert_eq!(back.scenario_params().mac.cw_min, 16);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ScenarioConfig::from_toml_str("[mac]\ncw_mix = 3\n").unwrap_err();
        assert!(format!("{e:#}").contains("cw_mix"));
    }

    #[test]
    fn scheme_lists() {
        assert_eq!(parse_schemes("gaa, ssf").unwrap(), vec![Scheme::Gaa, Scheme::Ssf]);
        assert!(parse_schemes("gaa,foo").is_err());
        let c = ScenarioConfig::from_toml_str("schemes = [\"ssf\", \"smartassoc\"]").unwrap();
        assert_eq!(c.schemes, vec![Scheme::Ssf, Scheme::SmartAssoc]);
    }
}
