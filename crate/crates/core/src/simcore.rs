//! Event-driven CSMA/CA (DCF with RTS/CTS) simulator over a realized
//! [`Network`], plus Monte Carlo and dynamic-scenario drivers.
//!
//! Time is kept in integer nanoseconds. Each associated STA runs its own
//! DCF state machine: wait DIFS of idle medium, count down a uniform
//! back-off in `[0, CW)` slots, freeze while the medium is busy, transmit.
//! A transmission blocks every STA that senses the transmitter (inside its
//! carrier-sense range or able to decode the RTS) and, once the CTS is out,
//! every STA that decodes the AP. STAs starting at the same instant that
//! would block each other collide for the RTS/CTS time. Otherwise the data
//! exchange runs at the rate of its starting SINR and succeeds when the
//! lowest SINR seen during the exchange stays at or above γ.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{self, AssociationSet, GdaEngine, LinkSnapshot, Scheme};
use crate::error::{Error, Result};
use crate::phy;
use crate::scenario::{Network, ScenarioParams};
use crate::topology::{self, NetworkGeometry, Position};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Measured duration, in slot times.
    pub n_slots: u64,
    /// Unmeasured lead-in, in slot times.
    pub warmup_slots: u64,
    /// Retransmissions before a frame is dropped.
    pub retry_limit: u32,
    /// Record the concurrent-transmitter set at every change.
    pub trace: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_slots: 1000,
            warmup_slots: 500,
            retry_limit: 7,
            trace: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_slots == 0 {
            return Err(Error::invalid("simulation.n_slots", "must be >= 1"));
        }
        Ok(())
    }
}

/// STAs in their data exchange at one instant (𝒩_csma).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsmaSample {
    pub time_ns: u64,
    pub stas: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scheme: Scheme,
    pub seed: u64,
    pub n_slots: u64,
    pub duration_s: f64,
    pub n_sta: usize,
    pub n_ap: usize,
    pub association: Vec<Option<usize>>,
    /// STAs with at least one AP in range.
    pub covered: Vec<bool>,
    /// Payload bits delivered inside the measured window.
    pub delivered_bits: Vec<u64>,
    /// Payload bits that arrived over the whole run.
    pub offered_bits: Vec<u64>,
    pub aggregate_bits: u64,
    /// Σ edge weight of the association over servable chosen links.
    pub utility_sum: f64,
    pub attempts: u64,
    pub successes: u64,
    pub collisions: u64,
    pub sinr_failures: u64,
    pub drops: u64,
    pub trace: Option<Vec<CsmaSample>>,
}

impl RunMetrics {
    pub fn aggregate_mbps(&self) -> f64 {
        self.aggregate_bits as f64 / self.duration_s / 1e6
    }

    pub fn sta_mbps(&self, sta: usize) -> f64 {
        self.delivered_bits[sta] as f64 / self.duration_s / 1e6
    }

    /// Throughput of every covered STA, in STA order.
    pub fn per_user_mbps(&self) -> Vec<f64> {
        (0..self.n_sta).filter(|&i| self.covered[i]).map(|i| self.sta_mbps(i)).collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct Timing {
    slot: u64,
    difs: u64,
    sifs: u64,
    ack: u64,
    rts_cts: u64,
}

fn ns(seconds: f64) -> u64 {
    (seconds * 1e9).round() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    End(usize),
    Arrival(usize),
    Ready(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Event {
    time: u64,
    seq: u64,
    kind: EventKind,
    version: u64,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, kind class, seq)
        let class = |k: &EventKind| match k {
            EventKind::End(_) => 0,
            EventKind::Arrival(_) => 1,
            EventKind::Ready(_) => 2,
        };
        (other.time, class(&other.kind), other.seq).cmp(&(self.time, class(&self.kind), self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Phase {
    Idle,
    Contending { since: u64 },
    Frozen,
    Transmitting,
}

struct Station {
    link: usize,
    /// STAs that sense this STA's RTS.
    rts_block: Vec<usize>,
    /// `rts_block` plus the STAs that decode the AP's CTS.
    full_block: Vec<usize>,
    queue: u64,
    last_arrival_update: u64,
    cw: u32,
    retries: u32,
    backoff: u32,
    phase: Phase,
    version: u64,
    rng: ChaCha8Rng,
}

#[derive(Clone, Debug)]
struct Transmission {
    sta: usize,
    data: bool,
    min_sinr: f64,
}

struct Sim<'a> {
    net: &'a Network,
    timing: Timing,
    params: SimParams,
    gamma: f64,
    arrival_per_ns: f64,
    stations: Vec<Option<Station>>,
    blocked: Vec<u32>,
    /// `conflict[a][b]`: simultaneous starts of `a` and `b` collide.
    conflict: Vec<Vec<bool>>,
    active: Vec<Transmission>,
    events: BinaryHeap<Event>,
    seq: u64,
    window: (u64, u64),
    metrics: RunMetrics,
}

impl<'a> Sim<'a> {
    fn new(net: &'a Network, assoc: &AssociationSet, params: SimParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let p = net.params();
        let n = net.n_sta();
        if assoc.ap.len() != n {
            return Err(Error::dims(format!("{n} associations"), assoc.ap.len()));
        }
        let mac = &p.mac;
        let timing = Timing {
            slot: ns(mac.slot_time_s),
            difs: ns(mac.difs_s),
            sifs: ns(mac.sifs_s),
            ack: ns(mac.ack_s),
            rts_cts: ns(mac.rts_cts_s),
        };
        let mut conflict = vec![vec![false; n]; n];
        let mut stations = Vec::with_capacity(n);
        for i in 0..n {
            let Some(ap) = assoc.ap[i] else {
                stations.push(None);
                continue;
            };
            let link = net
                .links(i)
                .iter()
                .position(|l| l.ap == ap)
                .ok_or_else(|| Error::invalid("association", format!("STA {i} is not in range of AP {ap}")))?;
            let rts_block: Vec<usize> =
                (0..n).filter(|&z| z != i && (net.stas_in_csr(i, z) || net.hears_sta(z, i))).collect();
            let full_block: Vec<usize> = (0..n)
                .filter(|&z| z != i && (net.stas_in_csr(i, z) || net.hears_sta(z, i) || net.hears_ap(z, ap)))
                .collect();
            for &z in &full_block {
                conflict[i][z] = true;
                conflict[z][i] = true;
            }
            stations.push(Some(Station {
                link,
                rts_block,
                full_block,
                queue: 0,
                last_arrival_update: 0,
                cw: mac.cw_min,
                retries: 0,
                backoff: 0,
                phase: Phase::Idle,
                version: 0,
                rng: ChaCha8Rng::seed_from_u64(phy::link_seed(seed, i, usize::MAX - 3)),
            }));
        }
        let warmup = params.warmup_slots * timing.slot;
        let window = (warmup, warmup + params.n_slots * timing.slot);
        let metrics = RunMetrics {
            scheme: assoc.scheme,
            seed,
            n_slots: params.n_slots,
            duration_s: (window.1 - window.0) as f64 * 1e-9,
            n_sta: n,
            n_ap: net.n_ap(),
            association: assoc.ap.clone(),
            covered: (0..n).map(|i| net.is_covered(i)).collect(),
            delivered_bits: vec![0; n],
            offered_bits: vec![0; n],
            aggregate_bits: 0,
            utility_sum: assoc.served_utility(),
            attempts: 0,
            successes: 0,
            collisions: 0,
            sinr_failures: 0,
            drops: 0,
            trace: params.trace.then(Vec::new),
        };
        Ok(Self {
            net,
            timing,
            params,
            gamma: p.gamma(),
            arrival_per_ns: p.arrival_rate_per_slot / timing.slot as f64,
            stations,
            blocked: vec![0; n],
            conflict,
            active: Vec::new(),
            events: BinaryHeap::new(),
            seq: 0,
            window,
            metrics,
        })
    }

    fn push(&mut self, time: u64, kind: EventKind, version: u64) {
        self.seq += 1;
        self.events.push(Event {
            time,
            seq: self.seq,
            kind,
            version,
        });
    }

    fn payload_bits(&self) -> u64 {
        self.net.params().mac.payload_bits as u64
    }

    /// Adds the Poisson arrivals since the last update.
    fn refresh_queue(&mut self, i: usize, now: u64) {
        let rate = self.arrival_per_ns;
        let payload = self.payload_bits();
        let s = self.stations[i].as_mut().expect("associated");
        let mean = rate * (now - s.last_arrival_update) as f64;
        s.last_arrival_update = now;
        if mean > 0.0 {
            let k = Poisson::new(mean).expect("positive mean").sample(&mut s.rng) as u64;
            s.queue += k;
            self.metrics.offered_bits[i] += k * payload;
        }
    }

    fn schedule_arrival(&mut self, i: usize, now: u64) {
        if self.arrival_per_ns <= 0.0 {
            return;
        }
        let rate = self.arrival_per_ns;
        let s = self.stations[i].as_mut().expect("associated");
        let gap = Exp::new(rate).expect("positive rate").sample(&mut s.rng);
        let at = now + gap.ceil().max(1.0) as u64;
        s.version += 1;
        let v = s.version;
        self.push(at, EventKind::Arrival(i), v);
    }

    /// Starts (or restarts) the DIFS + back-off countdown if the medium is
    /// idle for `i`.
    fn contend(&mut self, i: usize, now: u64) {
        let blocked = self.blocked[i] > 0;
        let (slot, difs) = (self.timing.slot, self.timing.difs);
        let s = self.stations[i].as_mut().expect("associated");
        s.version += 1;
        if blocked {
            s.phase = Phase::Frozen;
            return;
        }
        s.phase = Phase::Contending { since: now };
        let at = now + difs + u64::from(s.backoff) * slot;
        let v = s.version;
        self.push(at, EventKind::Ready(i), v);
    }

    fn freeze(&mut self, i: usize, now: u64) {
        let (slot, difs) = (self.timing.slot, self.timing.difs);
        let Some(s) = self.stations[i].as_mut() else { return };
        if let Phase::Contending { since } = s.phase {
            let elapsed = now - since;
            if elapsed > difs {
                let done = ((elapsed - difs) / slot).min(u64::from(s.backoff)) as u32;
                s.backoff -= done;
            }
            s.phase = Phase::Frozen;
            s.version += 1;
        }
    }

    /// Draws a fresh back-off for the head-of-line frame, or idles.
    fn next_frame(&mut self, i: usize, now: u64) {
        self.refresh_queue(i, now);
        let s = self.stations[i].as_mut().expect("associated");
        if s.queue == 0 {
            s.phase = Phase::Idle;
            self.schedule_arrival(i, now);
            return;
        }
        s.backoff = s.rng.random_range(0..s.cw);
        self.contend(i, now);
    }

    fn sinr_of(&self, tx: &Transmission) -> f64 {
        let s = self.stations[tx.sta].as_ref().expect("associated");
        let link = &self.net.links(tx.sta)[s.link];
        let interference: f64 = self
            .active
            .iter()
            .filter(|o| o.sta != tx.sta)
            .map(|o| link.leakage[o.sta])
            .sum();
        link.sinr(interference)
    }

    fn record_trace(&mut self, now: u64) {
        if self.metrics.trace.is_none() {
            return;
        }
        let mut stas: Vec<usize> = self.active.iter().filter(|t| t.data).map(|t| t.sta).collect();
        stas.sort_unstable();
        if let Some(tr) = self.metrics.trace.as_mut() {
            tr.push(CsmaSample { time_ns: now, stas });
        }
    }

    fn start_batch(&mut self, now: u64, starters: Vec<usize>) {
        let mac = self.net.params().mac;
        let bandwidth = self.net.params().radio.bandwidth_hz;
        let mut new_tx = Vec::with_capacity(starters.len());
        for &s in &starters {
            let collides = starters.iter().any(|&z| z != s && self.conflict[s][z]);
            self.metrics.attempts += 1;
            let st = self.stations[s].as_mut().expect("associated");
            st.phase = Phase::Transmitting;
            st.version += 1;
            new_tx.push((s, !collides));
            self.active.push(Transmission {
                sta: s,
                data: !collides,
                min_sinr: f64::INFINITY,
            });
        }
        for k in 0..self.active.len() {
            let sinr = self.sinr_of(&self.active[k]);
            let t = &mut self.active[k];
            t.min_sinr = t.min_sinr.min(sinr);
        }
        for (s, data) in new_tx {
            let duration = if data {
                let sinr = self.active.iter().find(|t| t.sta == s).expect("just added").min_sinr;
                let rate = phy::channel_rate(sinr.max(self.gamma), bandwidth);
                self.timing.rts_cts + ns(mac.frame_bits() / rate) + self.timing.sifs + self.timing.ack
            } else {
                self.timing.rts_cts
            };
            let st = self.stations[s].as_ref().expect("associated");
            let blocks = if data { st.full_block.clone() } else { st.rts_block.clone() };
            let v = st.version;
            for z in blocks {
                self.blocked[z] += 1;
                if self.blocked[z] == 1 {
                    self.freeze(z, now);
                }
            }
            self.push(now + duration, EventKind::End(s), v);
        }
        self.record_trace(now);
    }

    fn end(&mut self, i: usize, now: u64) {
        let k = self.active.iter().position(|t| t.sta == i).expect("active transmission");
        let tx = self.active.swap_remove(k);
        let retry_limit = self.params.retry_limit;
        let (cw_min, cw_max) = (self.net.params().mac.cw_min, self.net.params().mac.cw_max);
        let payload = self.payload_bits();
        let st = self.stations[i].as_mut().expect("associated");
        let blocks = if tx.data { st.full_block.clone() } else { st.rts_block.clone() };
        let success = tx.data && tx.min_sinr >= self.gamma;
        if success {
            st.queue -= 1;
            st.cw = cw_min;
            st.retries = 0;
            self.metrics.successes += 1;
            if now > self.window.0 && now <= self.window.1 {
                self.metrics.delivered_bits[i] += payload;
                self.metrics.aggregate_bits += payload;
            }
        } else {
            if tx.data {
                self.metrics.sinr_failures += 1;
            } else {
                self.metrics.collisions += 1;
            }
            st.retries += 1;
            if st.retries > retry_limit {
                st.queue -= 1;
                st.cw = cw_min;
                st.retries = 0;
                self.metrics.drops += 1;
            } else {
                st.cw = (st.cw * 2).min(cw_max);
            }
        }
        st.phase = Phase::Idle;
        for z in blocks {
            self.blocked[z] -= 1;
            if self.blocked[z] == 0 {
                if let Some(Phase::Frozen) = self.stations[z].as_ref().map(|s| s.phase) {
                    self.contend(z, now);
                }
            }
        }
        self.next_frame(i, now);
        self.record_trace(now);
    }

    fn is_current(&self, e: &Event) -> bool {
        let i = match e.kind {
            EventKind::End(i) | EventKind::Arrival(i) | EventKind::Ready(i) => i,
        };
        self.stations[i].as_ref().is_some_and(|s| s.version == e.version)
    }

    fn run(mut self) -> RunMetrics {
        for i in 0..self.stations.len() {
            if self.stations[i].is_some() {
                self.next_frame(i, 0);
            }
        }
        while let Some(e) = self.events.pop() {
            if e.time > self.window.1 {
                break;
            }
            if !self.is_current(&e) {
                continue;
            }
            match e.kind {
                EventKind::End(i) => self.end(i, e.time),
                EventKind::Arrival(i) => {
                    let st = self.stations[i].as_mut().expect("associated");
                    st.queue += 1;
                    st.last_arrival_update = e.time;
                    self.metrics.offered_bits[i] += self.payload_bits();
                    let st = self.stations[i].as_mut().expect("associated");
                    st.backoff = st.rng.random_range(0..st.cw);
                    self.contend(i, e.time);
                }
                EventKind::Ready(first) => {
                    let mut starters = vec![first];
                    while let Some(next) = self.events.peek() {
                        if next.time != e.time || !matches!(next.kind, EventKind::Ready(_)) {
                            break;
                        }
                        let next = self.events.pop().expect("peeked");
                        if self.is_current(&next) {
                            if let EventKind::Ready(i) = next.kind {
                                starters.push(i);
                            }
                        }
                    }
                    starters.sort_unstable();
                    self.start_batch(e.time, starters);
                }
            }
        }
        self.metrics
    }
}

/// Simulates one association on a network.
pub fn simulate(net: &Network, assoc: &AssociationSet, params: &SimParams, seed: u64) -> Result<RunMetrics> {
    Ok(Sim::new(net, assoc, *params, seed)?.run())
}

/// Simulator seed derived from a realization seed; shared by every scheme
/// of that realization.
pub fn sim_seed(realization_seed: u64) -> u64 {
    phy::link_seed(realization_seed, usize::MAX - 2, 0)
}

/// Draws a network from `seed`, associates it with every scheme in
/// `schemes`, and simulates each on common random numbers.
pub fn run_realization_schemes(
    params: &ScenarioParams,
    schemes: &[Scheme],
    sim: &SimParams,
    seed: u64,
) -> Result<Vec<RunMetrics>> {
    let net = Network::realize(params, seed)?;
    run_on_network(&net, schemes, sim, seed)
}

pub fn run_realization(params: &ScenarioParams, scheme: Scheme, sim: &SimParams, seed: u64) -> Result<RunMetrics> {
    Ok(run_realization_schemes(params, &[scheme], sim, seed)?.remove(0))
}

fn run_on_network(net: &Network, schemes: &[Scheme], sim: &SimParams, seed: u64) -> Result<Vec<RunMetrics>> {
    let snap = association::build_snapshot(net)?;
    let order = association::arrival_order(net.n_sta(), net.params().arrival_shuffle_seed);
    schemes
        .iter()
        .map(|&k| {
            let a = association::associate(k, &snap, net.params().capacity_rule, &order)?;
            let mut m = simulate(net, &a, sim, sim_seed(seed))?;
            m.seed = seed;
            Ok(m)
        })
        .collect()
}

/// Mean with a normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
                n,
                ci_lo: f64::NAN,
                ci_hi: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = 1.96 * sd / (n as f64).sqrt();
        Self {
            mean,
            sd,
            n,
            ci_lo: mean - half,
            ci_hi: mean + half,
        }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }
}

/// Empirical CDF of per-user throughputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cdf {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

/// Nearest-rank percentile of sorted data, `p` in (0, 1].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub fn per_user_cdf(throughputs: &[f64]) -> Cdf {
    let mut values = throughputs.to_vec();
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Cdf {
        probabilities: (1..=n).map(|k| k as f64 / n as f64).collect(),
        p10: percentile(&values, 0.1),
        p50: percentile(&values, 0.5),
        p90: percentile(&values, 0.9),
        values,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub mean_n_sta: f64,
    pub mean_n_ap: f64,
    pub agg_mbps: Estimate,
    pub util_sum: Estimate,
    /// Per-realization percentiles of per-user throughput.
    pub p10: Estimate,
    pub p50: Estimate,
    pub p90: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub base_seed: u64,
    pub summaries: Vec<SchemeSummary>,
    /// `runs[k][s]`: realization `k`, scheme `s`.
    pub runs: Vec<Vec<RunMetrics>>,
}

impl MonteCarlo {
    pub fn summary(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.summaries.iter().find(|s| s.scheme == scheme)
    }

    /// Per-user throughputs of one scheme pooled over realizations.
    pub fn pooled_users(&self, scheme: Scheme) -> Vec<f64> {
        let Some(k) = self.summaries.iter().position(|s| s.scheme == scheme) else {
            return Vec::new();
        };
        self.runs.iter().flat_map(|r| r[k].per_user_mbps()).collect()
    }
}

pub fn summarize(scheme_runs: &[&RunMetrics]) -> Option<SchemeSummary> {
    let first = scheme_runs.first()?;
    let est = |f: &dyn Fn(&RunMetrics) -> f64| {
        let xs: Vec<f64> = scheme_runs.iter().map(|m| f(m)).filter(|x| x.is_finite()).collect();
        Estimate::from_samples(&xs)
    };
    let pct = |p: f64| {
        est(&|m| {
            let mut u = m.per_user_mbps();
            u.sort_by(f64::total_cmp);
            percentile(&u, p)
        })
    };
    let n = scheme_runs.len() as f64;
    Some(SchemeSummary {
        scheme: first.scheme,
        mean_n_sta: scheme_runs.iter().map(|m| m.n_sta as f64).sum::<f64>() / n,
        mean_n_ap: scheme_runs.iter().map(|m| m.n_ap as f64).sum::<f64>() / n,
        agg_mbps: est(&|m| m.aggregate_mbps()),
        util_sum: est(&|m| m.utility_sum),
        p10: pct(0.1),
        p50: pct(0.5),
        p90: pct(0.9),
    })
}

/// Independent realizations with seeds `base_seed + k`, run in parallel.
pub fn run_monte_carlo(
    params: &ScenarioParams,
    schemes: &[Scheme],
    sim: &SimParams,
    n_realizations: usize,
    base_seed: u64,
) -> Result<MonteCarlo> {
    params.validate()?;
    sim.validate()?;
    let runs: Vec<Vec<RunMetrics>> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|k| run_realization_schemes(params, schemes, sim, base_seed.wrapping_add(k)))
        .collect::<Result<_>>()?;
    let summaries = (0..schemes.len())
        .filter_map(|s| summarize(&runs.iter().map(|r| &r[s]).collect::<Vec<_>>()))
        .collect();
    Ok(MonteCarlo {
        base_seed,
        summaries,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicParams {
    pub initial_stas: usize,
    pub final_stas: usize,
    /// Arrivals per epoch are uniform in `1..=max_arrivals_per_epoch`.
    pub max_arrivals_per_epoch: usize,
    /// Explicit arrivals per epoch; overrides the random schedule.
    pub arrivals: Option<Vec<usize>>,
    /// Slots between association updates; also the measured span per epoch.
    pub epoch_slots: u64,
    pub mobile_fraction: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
}

impl Default for DynamicParams {
    fn default() -> Self {
        Self {
            initial_stas: 20,
            final_stas: 100,
            max_arrivals_per_epoch: 8,
            arrivals: None,
            epoch_slots: 100,
            mobile_fraction: 0.3,
            speed_min_mps: 0.5,
            speed_max_mps: 2.0,
        }
    }
}

impl DynamicParams {
    pub fn validate(&self) -> Result<()> {
        if self.arrivals.is_none() && self.final_stas < self.initial_stas {
            return Err(Error::invalid("dynamic.final_stas", "must be >= initial_stas"));
        }
        if self.arrivals.is_none() && self.max_arrivals_per_epoch == 0 {
            return Err(Error::invalid("dynamic.max_arrivals_per_epoch", "must be >= 1"));
        }
        if self.epoch_slots == 0 {
            return Err(Error::invalid("dynamic.epoch_slots", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.mobile_fraction) {
            return Err(Error::invalid("dynamic.mobile_fraction", "must lie in [0, 1]"));
        }
        if !(self.speed_min_mps > 0.0 && self.speed_min_mps <= self.speed_max_mps && self.speed_max_mps.is_finite()) {
            return Err(Error::invalid("dynamic.speed_min_mps", "need 0 < speed_min_mps <= speed_max_mps"));
        }
        Ok(())
    }

    /// Arrivals per epoch after the first; the first epoch holds the
    /// initial STAs.
    pub fn schedule(&self, seed: u64) -> Vec<usize> {
        if let Some(a) = &self.arrivals {
            return a.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n = self.initial_stas;
        let mut out = Vec::new();
        while n < self.final_stas {
            let k = rng.random_range(1..=self.max_arrivals_per_epoch).min(self.final_stas - n);
            out.push(k);
            n += k;
        }
        out
    }
}

/// Random-waypoint state of one mobile STA.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub sta: usize,
    pub target: Position,
    pub speed_mps: f64,
}

/// Moves `pos` towards its waypoint for `dt_s`, drawing new waypoints and
/// speeds on arrival (zero pause).
pub fn rwmm_step<R: Rng + ?Sized>(
    pos: Position,
    wp: &mut Waypoint,
    dt_s: f64,
    area: &topology::Area,
    speeds: (f64, f64),
    rng: &mut R,
) -> Position {
    let mut pos = pos;
    let mut left = dt_s;
    while left > 0.0 {
        let d = pos.distance(&wp.target);
        let reach = d / wp.speed_mps;
        if reach > left {
            let f = wp.speed_mps * left / d;
            pos = Position::new(pos.x + f * (wp.target.x - pos.x), pos.y + f * (wp.target.y - pos.y));
            break;
        }
        left -= reach;
        pos = wp.target;
        wp.target = area.uniform_point(rng);
        wp.speed_mps = rng.random_range(speeds.0..=speeds.1);
    }
    pos
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub n_sta: usize,
    pub n_ap: usize,
    pub gda_objective: f64,
    pub fresh_gaa_objective: f64,
    /// One run per requested scheme.
    pub runs: Vec<RunMetrics>,
}

impl EpochMetrics {
    pub fn gda_matches_gaa(&self) -> bool {
        self.gda_objective == self.fresh_gaa_objective
    }

    pub fn run(&self, scheme: Scheme) -> Option<&RunMetrics> {
        self.runs.iter().find(|r| r.scheme == scheme)
    }
}

/// Sequential baselines keep earlier choices that are still in range and
/// only place new or stranded STAs.
fn keep_prior(snap: &LinkSnapshot, prior: &[Option<usize>]) -> Vec<Option<usize>> {
    (0..snap.n_sta())
        .map(|i| prior.get(i).copied().flatten().filter(|&a| snap.is_candidate(i, a)))
        .collect()
}

/// Grows a network epoch by epoch; GDA follows it incrementally and every
/// other scheme is re-evaluated on the same snapshot.
pub fn run_dynamic(
    params: &ScenarioParams,
    dynamic: &DynamicParams,
    schemes: &[Scheme],
    sim: &SimParams,
    seed: u64,
    schedule: &[usize],
) -> Result<Vec<EpochMetrics>> {
    params.validate()?;
    dynamic.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(phy::link_seed(seed, usize::MAX - 4, 0));
    let ppp = topology::generate_ppp(&params.intensities, params.area, seed)?;
    let stas = (0..dynamic.initial_stas).map(|_| params.area.uniform_point(&mut rng)).collect();
    let geometry = NetworkGeometry {
        area: params.area,
        ap_positions: ppp.geometry.ap_positions,
        sta_positions: stas,
    };
    let mut net = Network::with_geometry(params, geometry, seed)?;
    let speeds = (dynamic.speed_min_mps, dynamic.speed_max_mps);
    let mut mobile: Vec<Waypoint> = Vec::new();
    let enlist = |sta: usize, rng: &mut ChaCha8Rng, mobile: &mut Vec<Waypoint>| {
        if rng.random_bool(dynamic.mobile_fraction) {
            mobile.push(Waypoint {
                sta,
                target: params.area.uniform_point(rng),
                speed_mps: rng.random_range(speeds.0..=speeds.1),
            });
        }
    };
    for i in 0..net.n_sta() {
        enlist(i, &mut rng, &mut mobile);
    }
    let epoch_s = dynamic.epoch_slots as f64 * params.mac.slot_time_s;
    let epoch_sim = SimParams {
        n_slots: dynamic.epoch_slots,
        ..*sim
    };
    let mut engine = GdaEngine::new(net.n_ap(), params.capacity_rule);
    let mut prior: Vec<Vec<Option<usize>>> = vec![Vec::new(); schemes.len()];
    let mut out = Vec::new();
    for epoch in 0..=schedule.len() {
        if epoch > 0 {
            for wp in mobile.iter_mut() {
                let pos = net.geometry().sta_positions[wp.sta];
                let next = rwmm_step(pos, wp, epoch_s, &params.area, speeds, &mut rng);
                net.relocate_sta(wp.sta, next, epoch as u64)?;
            }
            for _ in 0..schedule[epoch - 1] {
                let i = net.add_sta(params.area.uniform_point(&mut rng))?;
                enlist(i, &mut rng, &mut mobile);
            }
        }
        let snap = association::build_snapshot(&net)?;
        engine.sync(&snap)?;
        let fresh = association::gaa_with_capacities(&snap, engine.slots())?;
        let order = association::arrival_order(net.n_sta(), params.arrival_shuffle_seed);
        let seed_e = phy::link_seed(seed, usize::MAX - 5, epoch);
        let mut runs = Vec::with_capacity(schemes.len());
        for (k, &scheme) in schemes.iter().enumerate() {
            let kept = keep_prior(&snap, &prior[k]);
            let choice = match scheme {
                Scheme::Gda => engine.association(&snap),
                Scheme::Gaa => association::gaa(&snap, params.capacity_rule)?,
                Scheme::Ssf => AssociationSet::from_choice(scheme, association::ssf(&snap), &snap),
                Scheme::Greedy => {
                    AssociationSet::from_choice(scheme, association::greedy_from(&snap, &order, &kept), &snap)
                }
                Scheme::SmartAssoc => {
                    AssociationSet::from_choice(scheme, association::smartassoc_from(&snap, &order, &kept), &snap)
                }
                Scheme::Bpf => AssociationSet::from_choice(scheme, association::bpf_from(&snap, &order, &kept), &snap),
            };
            prior[k] = choice.ap.clone();
            let mut m = simulate(&net, &choice, &epoch_sim, seed_e)?;
            m.seed = seed;
            runs.push(m);
        }
        out.push(EpochMetrics {
            epoch,
            n_sta: net.n_sta(),
            n_ap: net.n_ap(),
            gda_objective: engine.objective(),
            fresh_gaa_objective: fresh.objective,
            runs,
        });
    }
    Ok(out)
}

/// Per-epoch summary over dynamic realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicSummary {
    pub epoch: usize,
    pub mean_n_sta: f64,
    pub per_scheme: Vec<SchemeSummary>,
    /// Epochs across realizations where GDA and fresh GAA disagreed.
    pub gda_mismatches: usize,
}

/// Dynamic runs with seeds `base_seed + k` sharing one arrival schedule.
pub fn run_dynamic_monte_carlo(
    params: &ScenarioParams,
    dynamic: &DynamicParams,
    schemes: &[Scheme],
    sim: &SimParams,
    n_realizations: usize,
    base_seed: u64,
) -> Result<Vec<DynamicSummary>> {
    let schedule = dynamic.schedule(base_seed);
    let all: Vec<Vec<EpochMetrics>> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|k| run_dynamic(params, dynamic, schemes, sim, base_seed.wrapping_add(k), &schedule))
        .collect::<Result<_>>()?;
    let epochs = schedule.len() + 1;
    Ok((0..epochs)
        .map(|e| {
            let at: Vec<&EpochMetrics> = all.iter().map(|r| &r[e]).collect();
            DynamicSummary {
                epoch: e,
                mean_n_sta: at.iter().map(|m| m.n_sta as f64).sum::<f64>() / at.len().max(1) as f64,
                per_scheme: (0..schemes.len())
                    .filter_map(|s| summarize(&at.iter().map(|m| &m.runs[s]).collect::<Vec<_>>()))
                    .collect(),
                gda_mismatches: at.iter().filter(|m| !m.gda_matches_gaa()).count(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac;
    use crate::topology::Area;

    fn single_link(distance: f64) -> Network {
        let g = NetworkGeometry {
            area: Area::default(),
            ap_positions: vec![Position::new(100.0, 100.0)],
            sta_positions: vec![Position::new(100.0 + distance, 100.0)],
        };
        Network::with_geometry(&ScenarioParams::default(), g, 5).unwrap()
    }

    fn gaa_on(net: &Network) -> AssociationSet {
        let snap = association::build_snapshot(net).unwrap();
        association::gaa(&snap, net.params().capacity_rule).unwrap()
    }

    #[test]
    fn single_link_matches_contention_free_cycle() {
        let net = single_link(10.0);
        let a = gaa_on(&net);
        let p = net.params();
        let sinr = net.links(0)[0].sinr(0.0);
        let rate = phy::channel_rate(sinr, p.radio.bandwidth_hz);
        let t = p.mac.frame_bits() / rate;
        let tau = mac::mac_delay_for_window(&p.mac, f64::from(p.mac.cw_min - 1)) + p.mac.rts_cts_s;
        let analytic = p.mac.payload_bits / (t + tau) / 1e6;
        let sim = SimParams::default();
        let xs: Vec<f64> = (0..200)
            .map(|s| simulate(&net, &a, &sim, s).unwrap().aggregate_mbps())
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - analytic).abs() / analytic < 0.02, "{mean} vs {analytic}");
    }

    #[test]
    fn zero_arrivals_deliver_nothing() {
        let p = ScenarioParams {
            arrival_rate_per_slot: 0.0,
            ..ScenarioParams::default()
        };
        let m = run_realization(&p, Scheme::Gaa, &SimParams::default(), 3).unwrap();
        assert_eq!(m.aggregate_bits, 0);
        assert_eq!(m.attempts, 0);
    }

    #[test]
    fn csma_members_never_share_a_carrier_sense_range() {
        let p = ScenarioParams::default();
        let net = Network::realize(&p, 11).unwrap();
        let a = gaa_on(&net);
        let sim = SimParams {
            trace: true,
            ..SimParams::default()
        };
        let m = simulate(&net, &a, &sim, 1).unwrap();
        let trace = m.trace.unwrap();
        assert!(trace.iter().any(|s| s.stas.len() > 1));
        for s in &trace {
            for (k, &x) in s.stas.iter().enumerate() {
                for &y in &s.stas[k + 1..] {
                    assert!(!net.stas_in_csr(x, y), "{x} and {y} at {}", s.time_ns);
                }
            }
        }
    }

    #[test]
    fn two_stas_in_range_alternate() {
        let g = NetworkGeometry {
            area: Area::default(),
            ap_positions: vec![Position::new(100.0, 100.0)],
            sta_positions: vec![Position::new(105.0, 100.0), Position::new(95.0, 100.0)],
        };
        let net = Network::with_geometry(&ScenarioParams::default(), g, 2).unwrap();
        let a = gaa_on(&net);
        let m = simulate(&net, &a, &SimParams { trace: true, ..SimParams::default() }, 4).unwrap();
        assert!(m.trace.unwrap().iter().all(|s| s.stas.len() <= 1));
        assert!(m.delivered_bits.iter().all(|&b| b > 0));
    }

    #[test]
    fn metrics_are_consistent_and_deterministic() {
        let p = ScenarioParams::default();
        let a = run_realization(&p, Scheme::Ssf, &SimParams::default(), 21).unwrap();
        let b = run_realization(&p, Scheme::Ssf, &SimParams::default(), 21).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.aggregate_bits, a.delivered_bits.iter().sum::<u64>());
        for i in 0..a.n_sta {
            assert!(a.delivered_bits[i] <= a.offered_bits[i]);
        }
    }

    #[test]
    fn percentiles_by_hand() {
        let v = [7.0, 1.0, 3.0, 9.0, 2.0, 10.0, 5.0, 4.0, 8.0, 6.0];
        let c = per_user_cdf(&v);
        assert_eq!((c.p10, c.p50, c.p90), (1.0, 5.0, 9.0));
        assert_eq!(c.values, (1..=10).map(f64::from).collect::<Vec<_>>());
        assert!(c.probabilities.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*c.probabilities.last().unwrap(), 1.0);
        let flat = per_user_cdf(&[4.0; 5]);
        assert_eq!((flat.p10, flat.p90), (4.0, 4.0));
    }

    #[test]
    fn monte_carlo_single_equals_realization() {
        let p = ScenarioParams::default();
        let sim = SimParams::default();
        let mc = run_monte_carlo(&p, &[Scheme::Gaa], &sim, 1, 40).unwrap();
        let r = run_realization(&p, Scheme::Gaa, &sim, 40).unwrap();
        assert_eq!(mc.runs[0][0], r);
        assert_eq!(mc.summaries[0].agg_mbps.mean, r.aggregate_mbps());
        assert_eq!(mc.summaries[0].agg_mbps.sd, 0.0);
    }

    #[test]
    fn rwmm_stays_in_area() {
        let area = Area::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut wp = Waypoint {
            sta: 0,
            target: area.uniform_point(&mut rng),
            speed_mps: 1.0,
        };
        let mut pos = Position::new(10.0, 10.0);
        for _ in 0..500 {
            let next = rwmm_step(pos, &mut wp, 7.0, &area, (0.5, 2.0), &mut rng);
            assert!(area.contains(&next));
            assert!(pos.distance(&next) <= 2.0 * 7.0 + 1e-9);
            assert!((0.5..=2.0).contains(&wp.speed_mps));
            pos = next;
        }
    }

    #[test]
    fn dynamic_gda_tracks_fresh_gaa() {
        let p = ScenarioParams::default();
        let d = DynamicParams {
            arrivals: Some(vec![1; 5]),
            ..DynamicParams::default()
        };
        let schedule = d.schedule(0);
        let sim = SimParams {
            warmup_slots: 50,
            ..SimParams::default()
        };
        let out = run_dynamic(&p, &d, &[Scheme::Gda, Scheme::Ssf], &sim, 9, &schedule).unwrap();
        assert_eq!(out.len(), 6);
        for (k, e) in out.iter().enumerate() {
            assert_eq!(e.n_sta, 20 + k);
            assert!(e.gda_matches_gaa(), "epoch {k}: {} vs {}", e.gda_objective, e.fresh_gaa_objective);
        }
    }

    #[test]
    fn static_dynamic_run_keeps_association() {
        let p = ScenarioParams::default();
        let d = DynamicParams {
            arrivals: Some(vec![0; 3]),
            mobile_fraction: 0.0,
            ..DynamicParams::default()
        };
        let out = run_dynamic(&p, &d, &Scheme::ALL, &SimParams::default(), 2, &d.schedule(0)).unwrap();
        for e in &out[1..] {
            for (a, b) in e.runs.iter().zip(&out[0].runs) {
                assert_eq!(a.association, b.association);
            }
        }
    }

    #[test]
    fn random_schedule_reaches_final_size() {
        let d = DynamicParams::default();
        let s = d.schedule(7);
        assert_eq!(d.initial_stas + s.iter().sum::<usize>(), d.final_stas);
        assert!(s.iter().all(|&k| (1..=d.max_arrivals_per_epoch).contains(&k)));
    }
}
