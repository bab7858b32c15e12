//! Scenario parameters and a realized network.
//!
//! A [`Network`] holds the geometry, the small-scale channel of every
//! (STA, AP) pair, and for every candidate link the ZF receive filter with
//! its signal, noise and per-STA leakage powers. Leakage is what an STA `z`
//! contributes to the interference of link `(i, j)` when it transmits, so
//! SINR evaluation under any transmitter set is a table lookup.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::{FairnessParams, MacParams};
use crate::phy::{self, Beamformer, ChannelMatrix, PhyParams, SinrMode};
use crate::topology::{self, Area, Intensities, NetworkGeometry, Position, RadioParams};

/// How many replicated slots each AP receives in the association matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityRule {
    /// One slot per STA that can be served by the AP; never binding.
    #[default]
    Degree,
    /// A uniform `ceil(N/M)` slots, raised until every coverable STA fits.
    Balanced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub area: Area,
    pub intensities: Intensities,
    pub radio: RadioParams,
    /// Transmit antennas per STA (U).
    pub num_tx: usize,
    /// Receive antennas per AP (K).
    pub num_rx: usize,
    pub sinr_mode: SinrMode,
    pub mac: MacParams,
    pub fairness: FairnessParams,
    /// Minimum SINR γ in dB, used for edge filtering and frame decoding.
    pub gamma_db: f64,
    /// Drop association edges whose snapshot SINR is below γ.
    pub gamma_filter: bool,
    /// Rounds of snapshot → GAA → snapshot when building weights.
    pub weight_iterations: usize,
    pub capacity_rule: CapacityRule,
    /// Mean packet arrivals per STA per slot time.
    pub arrival_rate_per_slot: f64,
    /// Shuffles the arrival order of the sequential baselines.
    pub arrival_shuffle_seed: Option<u64>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            area: Area::default(),
            intensities: Intensities::default(),
            radio: RadioParams::default(),
            num_tx: 4,
            num_rx: 8,
            sinr_mode: SinrMode::PowerConsistent,
            mac: MacParams::default(),
            fairness: FairnessParams::default(),
            gamma_db: 0.0,
            gamma_filter: true,
            weight_iterations: 1,
            capacity_rule: CapacityRule::Degree,
            arrival_rate_per_slot: 1.0,
            arrival_shuffle_seed: None,
        }
    }
}

impl ScenarioParams {
    pub fn phy(&self) -> PhyParams {
        PhyParams {
            sinr_mode: self.sinr_mode,
            ..PhyParams::from_radio(&self.radio, self.num_tx, self.num_rx)
        }
    }

    /// γ as a linear power ratio.
    pub fn gamma(&self) -> f64 {
        10f64.powf(self.gamma_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.area.validate()?;
        self.intensities.validate()?;
        self.radio.validate()?;
        self.phy().validate()?;
        self.mac.validate()?;
        self.fairness.validate()?;
        if !self.gamma_db.is_finite() {
            return Err(Error::invalid("association.gamma_db", "must be finite"));
        }
        if self.weight_iterations == 0 {
            return Err(Error::invalid("association.weight_iterations", "must be >= 1"));
        }
        if !(self.arrival_rate_per_slot >= 0.0 && self.arrival_rate_per_slot.is_finite()) {
            return Err(Error::invalid("traffic.arrival_rate_per_slot", "must be >= 0"));
        }
        Ok(())
    }
}

/// A candidate (in-range) link with its receive filter and power terms.
#[derive(Clone, Debug)]
pub struct Link {
    pub ap: usize,
    pub beamformer: Beamformer,
    pub signal: f64,
    pub noise: f64,
    /// Interference power leaked by each STA through this link's filter;
    /// the entry of the link's own STA is zero.
    pub leakage: Vec<f64>,
}

impl Link {
    pub fn sinr(&self, interference: f64) -> f64 {
        phy::sinr_from_powers(self.signal, self.noise, interference)
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    params: ScenarioParams,
    phy: PhyParams,
    geometry: NetworkGeometry,
    seed: u64,
    /// `channels[i][j]`: STA `i` → AP `j`.
    channels: Vec<Vec<ChannelMatrix>>,
    /// Candidate links per STA, strongest RSS first.
    links: Vec<Vec<Link>>,
    /// STA–STA carrier-sense adjacency.
    csr: Vec<Vec<bool>>,
    forced_ap: bool,
}

impl Network {
    /// Draws a PPP topology and all channels from one seed.
    pub fn realize(params: &ScenarioParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let ppp = topology::generate_ppp(&params.intensities, params.area, seed)?;
        let mut net = Self::with_geometry(params, ppp.geometry, seed)?;
        net.forced_ap = ppp.forced_ap;
        Ok(net)
    }

    /// Builds channels and link tables for a fixed geometry.
    pub fn with_geometry(params: &ScenarioParams, geometry: NetworkGeometry, seed: u64) -> Result<Self> {
        params.validate()?;
        let phy = params.phy();
        let mut net = Self {
            params: params.clone(),
            phy,
            geometry: NetworkGeometry {
                area: geometry.area,
                ap_positions: geometry.ap_positions,
                sta_positions: Vec::new(),
            },
            seed,
            channels: Vec::new(),
            links: Vec::new(),
            csr: Vec::new(),
            forced_ap: false,
        };
        for pos in geometry.sta_positions {
            net.push_sta(pos);
        }
        net.rebuild_all_links();
        Ok(net)
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    pub fn phy(&self) -> &PhyParams {
        &self.phy
    }

    pub fn geometry(&self) -> &NetworkGeometry {
        &self.geometry
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Whether the PPP draw produced no AP and one was forced in.
    pub fn forced_ap(&self) -> bool {
        self.forced_ap
    }

    pub fn n_sta(&self) -> usize {
        self.geometry.n_sta()
    }

    pub fn n_ap(&self) -> usize {
        self.geometry.n_ap()
    }

    pub fn links(&self, sta: usize) -> &[Link] {
        &self.links[sta]
    }

    pub fn link(&self, sta: usize, ap: usize) -> Option<&Link> {
        self.links[sta].iter().find(|l| l.ap == ap)
    }

    /// Candidate APs of `sta`, strongest RSS first.
    pub fn candidates(&self, sta: usize) -> impl Iterator<Item = usize> + '_ {
        self.links[sta].iter().map(|l| l.ap)
    }

    pub fn is_covered(&self, sta: usize) -> bool {
        !self.links[sta].is_empty()
    }

    pub fn channel(&self, sta: usize, ap: usize) -> &ChannelMatrix {
        &self.channels[sta][ap]
    }

    pub fn rss_dbm(&self, sta: usize, ap: usize) -> f64 {
        topology::rss_dbm(self.params.radio.tx_power_dbm, self.geometry.link_distance(sta, ap), &self.params.radio)
    }

    pub fn stas_in_csr(&self, a: usize, b: usize) -> bool {
        self.csr[a][b]
    }

    /// Whether `sta` can decode frames sent by AP `ap`.
    pub fn hears_ap(&self, sta: usize, ap: usize) -> bool {
        self.rss_dbm(sta, ap) >= self.params.radio.receiver_sensitivity_dbm
    }

    /// Whether `a` can decode frames sent by STA `b`.
    pub fn hears_sta(&self, a: usize, b: usize) -> bool {
        let d = self.geometry.sta_positions[a].distance(&self.geometry.sta_positions[b]);
        topology::rss_dbm(self.params.radio.tx_power_dbm, d, &self.params.radio) >= self.params.radio.receiver_sensitivity_dbm
    }

    /// Adds an STA and returns its index. Channels of the new STA are drawn
    /// from the network seed and the STA index.
    pub fn add_sta(&mut self, pos: Position) -> Result<usize> {
        if !self.geometry.area.contains(&pos) {
            return Err(Error::invalid("sta position", format!("({}, {}) lies outside the area", pos.x, pos.y)));
        }
        let i = self.push_sta(pos);
        for link in self.links.iter_mut().flatten() {
            link.leakage.push(0.0);
        }
        self.links.push(Vec::new());
        self.refresh_sta(i);
        Ok(i)
    }

    /// Moves an STA and redraws its channels with `channel_epoch` mixed into
    /// the seed (block fading changes as the STA moves).
    pub fn relocate_sta(&mut self, sta: usize, pos: Position, channel_epoch: u64) -> Result<()> {
        if sta >= self.n_sta() {
            return Err(Error::OutOfRange {
                what: "STA list",
                index: sta,
                len: self.n_sta(),
            });
        }
        if !self.geometry.area.contains(&pos) {
            return Err(Error::invalid("sta position", format!("({}, {}) lies outside the area", pos.x, pos.y)));
        }
        self.geometry.sta_positions[sta] = pos;
        self.channels[sta] = self.draw_channels(sta, channel_epoch);
        for z in 0..self.n_sta() {
            let near = topology::in_csr(&pos, &self.geometry.sta_positions[z], &self.params.radio);
            self.csr[sta][z] = near;
            self.csr[z][sta] = near;
        }
        self.refresh_sta(sta);
        Ok(())
    }

    fn push_sta(&mut self, pos: Position) -> usize {
        let i = self.geometry.sta_positions.len();
        self.geometry.sta_positions.push(pos);
        let ch = self.draw_channels(i, 0);
        self.channels.push(ch);
        for (z, row) in self.csr.iter_mut().enumerate() {
            row.push(topology::in_csr(&pos, &self.geometry.sta_positions[z], &self.params.radio));
        }
        let row: Vec<bool> = self
            .geometry
            .sta_positions
            .iter()
            .map(|p| topology::in_csr(&pos, p, &self.params.radio))
            .collect();
        self.csr.push(row);
        i
    }

    fn draw_channels(&self, sta: usize, epoch: u64) -> Vec<ChannelMatrix> {
        let base = phy::link_seed(self.seed, usize::MAX - 1, epoch as usize);
        (0..self.n_ap())
            .map(|ap| {
                let gain = self.params.radio.path_gain_linear(self.geometry.link_distance(sta, ap));
                phy::draw_channel(gain, self.phy.num_tx, self.phy.num_rx, phy::link_seed(base, sta, ap))
            })
            .collect()
    }

    fn build_links(&self, sta: usize) -> Vec<Link> {
        topology::candidate_aps(sta, &self.geometry, &self.params.radio)
            .into_iter()
            .map(|ap| {
                let h = &self.channels[sta][ap];
                let w = phy::zf_beamformer(h);
                let leakage = (0..self.n_sta())
                    .map(|z| {
                        if z == sta {
                            0.0
                        } else {
                            phy::interference_power(&w, &self.channels[z][ap], &self.phy)
                        }
                    })
                    .collect();
                Link {
                    ap,
                    signal: phy::desired_power(&w, h, &self.phy),
                    noise: phy::noise_power(&w, &self.phy),
                    beamformer: w,
                    leakage,
                }
            })
            .collect()
    }

    fn rebuild_all_links(&mut self) {
        self.links = (0..self.n_sta()).map(|i| self.build_links(i)).collect();
    }

    /// Recomputes the links of `sta` and its leakage into everyone else.
    fn refresh_sta(&mut self, sta: usize) {
        self.links[sta] = self.build_links(sta);
        let phy = self.phy;
        for (i, links) in self.links.iter_mut().enumerate() {
            if i == sta {
                continue;
            }
            for link in links {
                link.leakage[sta] = phy::interference_power(&link.beamformer, &self.channels[sta][link.ap], &phy);
            }
        }
    }
}
