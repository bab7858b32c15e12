//! Narrowband MIMO uplink: channel draws, zero-forcing receive filters,
//! multi-access SINR and Shannon channel rate.
//!
//! Channels are stored receive-major (`K × U`: one row per AP antenna, one
//! column per STA antenna) so that `W = (HᴴH)⁻¹Hᴴ` inverts a `U × U` Gram
//! matrix and `W·H = I_U`. [`ChannelMatrix::entry`] still addresses gains
//! as `(u, k)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NetworkGeometry, RadioParams};

/// Gram matrices with a larger condition number are inverted with diagonal
/// loading instead.
pub const ZF_CONDITION_LIMIT: f64 = 1e10;

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    h: DMatrix<Complex64>,
}

impl ChannelMatrix {
    /// Wraps a `K × U` (receive × transmit) matrix.
    pub fn from_receive_major(h: DMatrix<Complex64>) -> Self {
        Self { h }
    }

    /// Builds from gains indexed `[u][k]`, transmit antenna first.
    pub fn from_tx_rows(rows: &[Vec<Complex64>]) -> Self {
        let u = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        Self {
            h: DMatrix::from_fn(k, u, |kk, uu| rows[uu][kk]),
        }
    }

    pub fn num_tx(&self) -> usize {
        self.h.ncols()
    }

    pub fn num_rx(&self) -> usize {
        self.h.nrows()
    }

    /// Gain from transmit antenna `u` to receive antenna `k`.
    pub fn entry(&self, u: usize, k: usize) -> Complex64 {
        self.h[(k, u)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Beamformer {
    weights: DMatrix<Complex64>,
    /// Condition number of HᴴH (infinite for a rank-deficient channel).
    pub conditioning: f64,
    /// Set when the inversion used diagonal loading.
    pub regularized: bool,
}

impl Beamformer {
    /// `U × K` receive filter.
    pub fn weights(&self) -> &DMatrix<Complex64> {
        &self.weights
    }

    /// Squared Frobenius norm ‖W‖².
    pub fn norm_sqr(&self) -> f64 {
        self.weights.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// How the SINR scales the desired and interfering terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrMode {
    /// Desired and interfering powers both scaled by `E_x / U`.
    #[default]
    PowerConsistent,
    /// Desired term scaled by `sqrt(E_x / U)`, interference unscaled.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhyParams {
    /// Transmit symbol energy scale `E_x`, in milliwatts.
    pub symbol_energy: f64,
    pub num_tx: usize,
    pub num_rx: usize,
    /// Per-antenna noise power σ², in milliwatts.
    pub noise_variance: f64,
    pub bandwidth_hz: f64,
    pub sinr_mode: SinrMode,
}

impl PhyParams {
    pub fn from_radio(radio: &RadioParams, num_tx: usize, num_rx: usize) -> Self {
        Self {
            symbol_energy: radio.tx_power_mw(),
            num_tx,
            num_rx,
            noise_variance: radio.noise_power_mw(),
            bandwidth_hz: radio.bandwidth_hz,
            sinr_mode: SinrMode::PowerConsistent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_tx == 0 {
            return Err(Error::invalid("antennas.num_tx", "need at least one transmit antenna"));
        }
        if self.num_rx < self.num_tx {
            return Err(Error::invalid(
                "antennas.num_rx",
                format!(
                    "zero-forcing needs num_rx >= num_tx (got K = {}, U = {})",
                    self.num_rx, self.num_tx
                ),
            ));
        }
        if !(self.noise_variance > 0.0) {
            return Err(Error::invalid("radio.noise_floor_dbm_per_hz", "noise power must be > 0"));
        }
        if !(self.symbol_energy > 0.0) {
            return Err(Error::invalid("radio.tx_power_dbm", "transmit power must be > 0 mW"));
        }
        Ok(())
    }

    /// Power scale applied to the desired signal term.
    pub fn desired_scale(&self) -> f64 {
        let s = self.symbol_energy / self.num_tx as f64;
        match self.sinr_mode {
            SinrMode::PowerConsistent => s,
            SinrMode::Literal => s.sqrt(),
        }
    }

    /// Power scale applied to each interference term.
    pub fn interference_scale(&self) -> f64 {
        match self.sinr_mode {
            SinrMode::PowerConsistent => self.symbol_energy / self.num_tx as f64,
            SinrMode::Literal => 1.0,
        }
    }
}

/// Mixes a base seed with a link identity so every (STA, AP) pair gets its
/// own independent stream regardless of how many nodes exist.
pub fn link_seed(seed: u64, sta: usize, ap: usize) -> u64 {
    let mut z = seed
        ^ (sta as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (ap as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(31);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rayleigh block-fading channel: i.i.d. CN(0, 1) entries scaled by the
/// square root of the large-scale power gain.
pub fn draw_channel(gain_linear: f64, num_tx: usize, num_rx: usize, rng_seed: u64) -> ChannelMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let amp = (gain_linear / 2.0).sqrt();
    let h = DMatrix::from_fn(num_rx, num_tx, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * amp, im * amp)
    });
    ChannelMatrix { h }
}

/// Channel between STA `sta` and AP `ap` of a realization.
pub fn draw_link_channel(
    sta: usize,
    ap: usize,
    geometry: &NetworkGeometry,
    radio: &RadioParams,
    phy: &PhyParams,
    rng_seed: u64,
) -> Result<ChannelMatrix> {
    if sta >= geometry.n_sta() {
        return Err(Error::OutOfRange {
            what: "STA list",
            index: sta,
            len: geometry.n_sta(),
        });
    }
    if ap >= geometry.n_ap() {
        return Err(Error::OutOfRange {
            what: "AP list",
            index: ap,
            len: geometry.n_ap(),
        });
    }
    let gain = radio.path_gain_linear(geometry.link_distance(sta, ap));
    Ok(draw_channel(gain, phy.num_tx, phy.num_rx, link_seed(rng_seed, sta, ap)))
}

/// Zero-forcing receive filter `W = (HᴴH)⁻¹Hᴴ`.
///
/// Ill-conditioned Gram matrices get ε = 1e-6·tr(HᴴH)/U of diagonal loading
/// and the result is flagged; an all-zero channel yields an all-zero filter.
pub fn zf_beamformer(h: &ChannelMatrix) -> Beamformer {
    let u = h.num_tx();
    let hh = h.h.adjoint();
    let gram = &hh * &h.h;
    let trace: f64 = (0..u).map(|i| gram[(i, i)].re).sum();
    if !(trace > 0.0) {
        return Beamformer {
            weights: DMatrix::zeros(u, h.num_rx()),
            conditioning: f64::INFINITY,
            regularized: true,
        };
    }
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let conditioning = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    let direct = if conditioning <= ZF_CONDITION_LIMIT {
        gram.clone().cholesky().map(|c| c.inverse())
    } else {
        None
    };
    let (inv, regularized) = match direct {
        Some(inv) => (inv, false),
        None => {
            let eps = 1e-6 * trace / u as f64;
            let loaded = gram + DMatrix::<Complex64>::identity(u, u) * Complex64::new(eps, 0.0);
            let inv = loaded
                .clone()
                .cholesky()
                .map(|c| c.inverse())
                .or_else(|| loaded.try_inverse())
                .unwrap_or_else(|| DMatrix::zeros(u, u));
            (inv, true)
        }
    };
    Beamformer {
        weights: inv * hh,
        conditioning,
        regularized,
    }
}

/// ‖W·H‖² (squared Frobenius norm), unscaled.
pub fn filtered_gain(w: &Beamformer, h: &ChannelMatrix) -> f64 {
    (&w.weights * &h.h).iter().map(|z| z.norm_sqr()).sum()
}

/// Desired-signal power after the receive filter.
pub fn desired_power(w: &Beamformer, h: &ChannelMatrix, phy: &PhyParams) -> f64 {
    phy.desired_scale() * filtered_gain(w, h)
}

/// Filtered noise power ‖W‖²σ².
pub fn noise_power(w: &Beamformer, phy: &PhyParams) -> f64 {
    w.norm_sqr() * phy.noise_variance
}

/// Power that an interferer with channel `h_z` (towards this AP) leaks
/// through the receive filter `w`.
pub fn interference_power(w: &Beamformer, h_z: &ChannelMatrix, phy: &PhyParams) -> f64 {
    phy.interference_scale() * filtered_gain(w, h_z)
}

/// SINR at the AP for a desired link `(W, H)` given the channels of the
/// concurrently transmitting STAs towards the same AP.
pub fn compute_sinr(desired: (&Beamformer, &ChannelMatrix), interferers: &[&ChannelMatrix], phy: &PhyParams) -> f64 {
    let (w, h) = desired;
    let interference: f64 = interferers.iter().map(|hz| interference_power(w, hz, phy)).sum();
    sinr_from_powers(desired_power(w, h, phy), noise_power(w, phy), interference)
}

pub fn sinr_from_powers(signal: f64, noise: f64, interference: f64) -> f64 {
    if signal == 0.0 {
        return 0.0;
    }
    signal / (noise + interference)
}

/// Shannon rate `B · log2(1 + SINR)` in bit/s.
pub fn channel_rate(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr.max(0.0)).log2()
}
