//! Node placement, large-scale path loss and carrier-sense geometry.
//!
//! STAs and APs are dropped as independent Poisson point processes over a
//! rectangle. Received power follows a log-distance model anchored at a
//! reference distance; everything else in the crate (candidate AP lists,
//! carrier-sense neighbourhoods, channel gains) is derived from here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the deployment plane, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rectangular deployment area anchored at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

impl Area {
    pub const fn new(width_m: f64, height_m: f64) -> Self {
        Self { width_m, height_m }
    }

    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }

    pub fn surface_m2(&self) -> f64 {
        self.width_m * self.height_m
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return Err(Error::invalid("area", "width and height must be positive"));
        }
        Ok(())
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        Position::new(
            rng.random::<f64>() * self.width_m,
            rng.random::<f64>() * self.height_m,
        )
    }
}

impl Default for Area {
    fn default() -> Self {
        Self::new(200.0, 200.0)
    }
}

/// Where the STAs and APs of one network realization sit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    pub area: Area,
    pub ap_positions: Vec<Position>,
    pub sta_positions: Vec<Position>,
}

impl NetworkGeometry {
    pub fn n_sta(&self) -> usize {
        self.sta_positions.len()
    }

    pub fn n_ap(&self) -> usize {
        self.ap_positions.len()
    }

    /// Distance between STA `sta` and AP `ap`.
    pub fn link_distance(&self, sta: usize, ap: usize) -> f64 {
        self.sta_positions[sta].distance(&self.ap_positions[ap])
    }

    /// Drops exactly `n_sta` STAs and `n_ap` APs uniformly over `area`.
    pub fn uniform(area: Area, n_sta: usize, n_ap: usize, rng_seed: u64) -> Result<Self> {
        area.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let ap_positions = (0..n_ap).map(|_| area.uniform_point(&mut rng)).collect();
        let sta_positions = (0..n_sta).map(|_| area.uniform_point(&mut rng)).collect();
        Ok(Self {
            area,
            ap_positions,
            sta_positions,
        })
    }
}

/// How the carrier-sensing range is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsrMode {
    /// Use `csr_m` as configured.
    #[default]
    Fixed,
    /// Distance at which the path-loss model puts the received power at the
    /// CCA threshold.
    Derived,
}

/// Large-scale radio parameters shared by every node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub noise_floor_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    pub pathloss_exponent: f64,
    pub reference_distance_m: f64,
    pub reference_loss_db: f64,
    pub cca_threshold_dbm: f64,
    pub receiver_sensitivity_dbm: f64,
    pub csr_m: f64,
    pub csr_mode: CsrMode,
}

/// Free-space loss at 1 m for a 2.4 GHz carrier, 20·log10(4π·d0/λ).
pub const FREE_SPACE_LOSS_1M_2G4_DB: f64 = 40.046_117_834_423_85;

impl Default for RadioParams {
    fn default() -> Self {
        let bandwidth_hz: f64 = 20e6;
        Self {
            tx_power_dbm: 12.0,
            // -100 dBm of in-band noise over the 20 MHz channel.
            noise_floor_dbm_per_hz: -100.0 - 10.0 * bandwidth_hz.log10(),
            bandwidth_hz,
            pathloss_exponent: 3.4,
            reference_distance_m: 1.0,
            reference_loss_db: FREE_SPACE_LOSS_1M_2G4_DB,
            cca_threshold_dbm: -70.0,
            receiver_sensitivity_dbm: -75.0,
            csr_m: 80.0,
            csr_mode: CsrMode::Fixed,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent >= 2.0) {
            return Err(Error::invalid("radio.pathloss_exponent", "must be >= 2"));
        }
        if !(self.csr_m > 0.0) {
            return Err(Error::invalid("radio.csr_m", "must be > 0"));
        }
        if !(self.reference_distance_m > 0.0) {
            return Err(Error::invalid("radio.reference_distance_m", "must be > 0"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("radio.bandwidth_hz", "must be > 0"));
        }
        for (field, v) in [
            ("radio.tx_power_dbm", self.tx_power_dbm),
            ("radio.noise_floor_dbm_per_hz", self.noise_floor_dbm_per_hz),
            ("radio.reference_loss_db", self.reference_loss_db),
            ("radio.cca_threshold_dbm", self.cca_threshold_dbm),
            ("radio.receiver_sensitivity_dbm", self.receiver_sensitivity_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        Ok(())
    }

    /// Path loss in dB at `distance_m`, clamped below the reference distance.
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(self.reference_distance_m);
        self.reference_loss_db + 10.0 * self.pathloss_exponent * (d / self.reference_distance_m).log10()
    }

    /// Linear power gain (≤ 1 beyond the reference distance) at `distance_m`.
    pub fn path_gain_linear(&self, distance_m: f64) -> f64 {
        10f64.powf(-self.path_loss_db(distance_m) / 10.0)
    }

    /// In-band noise power in milliwatts.
    pub fn noise_power_mw(&self) -> f64 {
        dbm_to_mw(self.noise_floor_dbm_per_hz + 10.0 * self.bandwidth_hz.log10())
    }

    pub fn tx_power_mw(&self) -> f64 {
        dbm_to_mw(self.tx_power_dbm)
    }

    /// Distance at which a transmission from a STA arrives at `level_dbm`.
    pub fn range_for_level_m(&self, level_dbm: f64) -> f64 {
        let budget = self.tx_power_dbm - level_dbm - self.reference_loss_db;
        self.reference_distance_m * 10f64.powf(budget / (10.0 * self.pathloss_exponent))
    }

    /// Carrier-sensing range in effect.
    pub fn effective_csr_m(&self) -> f64 {
        match self.csr_mode {
            CsrMode::Fixed => self.csr_m,
            CsrMode::Derived => self.range_for_level_m(self.cca_threshold_dbm),
        }
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// STA and AP densities. Expected node counts are `eta · n_ref`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intensities {
    pub eta_n: f64,
    pub eta_m: f64,
    pub n_ref: f64,
}

impl Default for Intensities {
    fn default() -> Self {
        Self {
            eta_n: 0.5,
            eta_m: 0.2,
            n_ref: 200.0,
        }
    }
}

impl Intensities {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_n >= 0.0 && self.eta_n.is_finite()) {
            return Err(Error::invalid("topology.eta_n", "must be >= 0"));
        }
        if !(self.eta_m >= 0.0 && self.eta_m.is_finite()) {
            return Err(Error::invalid("topology.eta_m", "must be >= 0"));
        }
        if !(self.n_ref > 0.0 && self.n_ref.is_finite()) {
            return Err(Error::invalid("topology.n_ref", "must be > 0"));
        }
        Ok(())
    }
}

/// One PPP draw plus a note on whether the AP count had to be bumped.
#[derive(Clone, Debug, PartialEq)]
pub struct PppRealization {
    pub geometry: NetworkGeometry,
    /// Set when the Poisson draw produced zero APs and one was added.
    pub forced_ap: bool,
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as usize
}

/// Draws a PPP realization: node counts are Poisson with mean `eta · n_ref`,
/// positions are i.i.d. uniform over the area.
pub fn generate_ppp(intensities: &Intensities, area: Area, rng_seed: u64) -> Result<PppRealization> {
    area.validate()?;
    intensities.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut n_ap = poisson_count(intensities.eta_m * intensities.n_ref, &mut rng);
    let n_sta = poisson_count(intensities.eta_n * intensities.n_ref, &mut rng);
    let forced_ap = n_ap == 0;
    if forced_ap {
        n_ap = 1;
    }
    let ap_positions = (0..n_ap).map(|_| area.uniform_point(&mut rng)).collect();
    let sta_positions = (0..n_sta).map(|_| area.uniform_point(&mut rng)).collect();
    Ok(PppRealization {
        geometry: NetworkGeometry {
            area,
            ap_positions,
            sta_positions,
        },
        forced_ap,
    })
}

/// Received power in dBm after log-distance path loss.
pub fn rss_dbm(tx_dbm: f64, distance_m: f64, radio: &RadioParams) -> f64 {
    tx_dbm - radio.path_loss_db(distance_m)
}

/// APs heard by `sta` at or above receiver sensitivity, strongest first.
/// Equal RSS keeps the lower AP index first.
pub fn candidate_aps(sta: usize, geometry: &NetworkGeometry, radio: &RadioParams) -> Vec<usize> {
    let mut heard: Vec<(usize, f64)> = (0..geometry.n_ap())
        .map(|ap| (ap, rss_dbm(radio.tx_power_dbm, geometry.link_distance(sta, ap), radio)))
        .filter(|&(_, rss)| rss >= radio.receiver_sensitivity_dbm)
        .collect();
    heard.sort_by(|a, b| b.1.total_cmp(&a.1));
    heard.into_iter().map(|(ap, _)| ap).collect()
}

/// True when `a` and `b` are within carrier-sensing range of each other.
pub fn in_csr(a: &Position, b: &Position, radio: &RadioParams) -> bool {
    a.distance(b) <= radio.effective_csr_m()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_radio() -> RadioParams {
        RadioParams {
            reference_loss_db: 40.05,
            ..RadioParams::default()
        }
    }

    #[test]
    fn rss_at_reference_distance_is_tx_minus_reference_loss() {
        let r = default_radio();
        assert!((rss_dbm(12.0, 1.0, &r) - (12.0 - 40.05)).abs() < 1e-12);
        // clamped below d0
        assert_eq!(rss_dbm(12.0, 0.2, &r), rss_dbm(12.0, 1.0, &r));
    }

    #[test]
    fn rss_direct_substitution() {
        let r = default_radio();
        assert!((rss_dbm(12.0, 10.0, &r) - (-62.05)).abs() < 1e-9);
        assert!((rss_dbm(12.0, 100.0, &r) - (-96.05)).abs() < 1e-9);
    }

    #[test]
    fn default_noise_is_minus_100_dbm_in_band() {
        let r = RadioParams::default();
        assert!((mw_to_dbm(r.noise_power_mw()) + 100.0).abs() < 1e-9);
    }

    #[test]
    fn zero_sta_intensity_gives_no_stas() {
        let i = Intensities {
            eta_n: 0.0,
            ..Intensities::default()
        };
        for seed in 0..20 {
            let p = generate_ppp(&i, Area::default(), seed).unwrap();
            assert_eq!(p.geometry.n_sta(), 0);
        }
    }

    #[test]
    fn zero_ap_draw_is_forced_to_one() {
        let i = Intensities {
            eta_n: 0.1,
            eta_m: 0.0,
            n_ref: 200.0,
        };
        let p = generate_ppp(&i, Area::default(), 3).unwrap();
        assert!(p.forced_ap);
        assert_eq!(p.geometry.n_ap(), 1);
    }

    #[test]
    fn ppp_is_reproducible_and_inside_area() {
        let i = Intensities::default();
        let a = generate_ppp(&i, Area::default(), 99).unwrap();
        let b = generate_ppp(&i, Area::default(), 99).unwrap();
        assert_eq!(a, b);
        let g = &a.geometry;
        assert!(g.sta_positions.iter().chain(&g.ap_positions).all(|p| g.area.contains(p)));
        assert!(g.n_ap() > 0 && g.n_sta() > 0);
    }

    #[test]
    fn degenerate_area_is_rejected() {
        let e = generate_ppp(&Intensities::default(), Area::new(0.0, 10.0), 1);
        assert!(matches!(e, Err(Error::InvalidConfig { .. })));
    }

    #[test]
    fn candidates_colocated_and_out_of_range() {
        let r = RadioParams::default();
        let g = NetworkGeometry {
            area: Area::default(),
            ap_positions: vec![Position::new(10.0, 10.0), Position::new(190.0, 190.0)],
            sta_positions: vec![Position::new(10.0, 10.0), Position::new(100.0, 100.0)],
        };
        assert_eq!(candidate_aps(0, &g, &r), vec![0]);
        assert!(candidate_aps(1, &g, &r).is_empty());
    }

    #[test]
    fn candidates_follow_distance_with_default_params() {
        let r = RadioParams::default();
        let sta = Position::new(100.0, 100.0);
        let g = NetworkGeometry {
            area: Area::default(),
            // 300 m is outside the area but only the distance matters here.
            ap_positions: vec![
                Position::new(100.0, 400.0),
                Position::new(120.0, 100.0),
                Position::new(100.0, 105.0),
            ],
            sta_positions: vec![sta],
        };
        // -75 dBm puts the range near 24 m: 5 m and 20 m are heard, 300 m is not.
        assert_eq!(candidate_aps(0, &g, &r), vec![2, 1]);
    }

    #[test]
    fn csr_boundaries() {
        let r = RadioParams::default();
        let o = Position::new(0.0, 0.0);
        assert!(in_csr(&o, &o, &r));
        assert!(in_csr(&o, &Position::new(79.9, 0.0), &r));
        assert!(!in_csr(&o, &Position::new(80.1, 0.0), &r));
    }

    #[test]
    fn derived_csr_matches_cca_level() {
        let r = RadioParams {
            csr_mode: CsrMode::Derived,
            ..RadioParams::default()
        };
        let d = r.effective_csr_m();
        assert!((rss_dbm(r.tx_power_dbm, d, &r) - r.cca_threshold_dbm).abs() < 1e-9);
        assert!(d < 20.0 && d > 15.0);
    }
}
