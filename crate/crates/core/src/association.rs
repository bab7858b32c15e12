//! STA→AP association: link snapshots, the matching-based GAA and its
//! incremental GDA engine, and the SSF / Greedy / SmartAssoc / BPF
//! baselines.
//!
//! Weights come from a [`LinkSnapshot`]: every candidate link's SINR under
//! the expected concurrent-transmitter set, pushed through rate, airtime,
//! effective throughput and utility. Links below γ become unservable when
//! filtering is on.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::{self, is_unservable, FairnessParams, LinkFigures, MacParams, UNSERVABLE};
use crate::matching::{self, Line, Matching, WeightMatrix};
use crate::scenario::{CapacityRule, Network};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Gaa,
    Gda,
    Ssf,
    Greedy,
    #[serde(rename = "smartassoc")]
    SmartAssoc,
    Bpf,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Gaa,
        Scheme::Gda,
        Scheme::Ssf,
        Scheme::Greedy,
        Scheme::SmartAssoc,
        Scheme::Bpf,
    ];

    /// The five schemes compared in the static experiments.
    pub const STATIC: [Scheme; 5] = [Scheme::Gaa, Scheme::Bpf, Scheme::SmartAssoc, Scheme::Greedy, Scheme::Ssf];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gaa => "gaa",
            Scheme::Gda => "gda",
            Scheme::Ssf => "ssf",
            Scheme::Greedy => "greedy",
            Scheme::SmartAssoc => "smartassoc",
            Scheme::Bpf => "bpf",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::invalid(
                    "schemes",
                    format!("unknown scheme `{s}` (expected one of gaa, gda, ssf, greedy, smartassoc, bpf)"),
                )
            })
    }
}

/// One candidate link in a snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkEntry {
    pub rss_dbm: f64,
    pub figures: LinkFigures,
}

/// Per-link SINR, rate, effective throughput and utility for every
/// (STA, AP) pair; non-candidates are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSnapshot {
    n_sta: usize,
    n_ap: usize,
    entries: Vec<Option<LinkEntry>>,
    /// Linear γ when edge filtering is enabled.
    gamma: Option<f64>,
}

impl LinkSnapshot {
    pub fn from_table(n_sta: usize, n_ap: usize, entries: Vec<Option<LinkEntry>>, gamma: Option<f64>) -> Result<Self> {
        if entries.len() != n_sta * n_ap {
            return Err(Error::dims(format!("{} entries", n_sta * n_ap), entries.len()));
        }
        Ok(Self {
            n_sta,
            n_ap,
            entries,
            gamma,
        })
    }

    /// Builds a snapshot from hand-set SINRs (RSS set to 0 dBm).
    pub fn from_sinr(
        n_sta: usize,
        n_ap: usize,
        sinr: &[Option<f64>],
        bandwidth_hz: f64,
        mac_params: &MacParams,
        fairness: &FairnessParams,
        gamma: Option<f64>,
    ) -> Result<Self> {
        let entries = sinr
            .iter()
            .map(|s| {
                s.map(|s| LinkEntry {
                    rss_dbm: 0.0,
                    figures: mac::link_figures(s, bandwidth_hz, mac_params, fairness),
                })
            })
            .collect();
        Self::from_table(n_sta, n_ap, entries, gamma)
    }

    pub fn n_sta(&self) -> usize {
        self.n_sta
    }

    pub fn n_ap(&self) -> usize {
        self.n_ap
    }

    pub fn entry(&self, sta: usize, ap: usize) -> Option<&LinkEntry> {
        self.entries[sta * self.n_ap + ap].as_ref()
    }

    pub fn is_candidate(&self, sta: usize, ap: usize) -> bool {
        self.entry(sta, ap).is_some()
    }

    /// Candidate APs of `sta` by descending RSS, ties to the lower index.
    pub fn candidates(&self, sta: usize) -> Vec<usize> {
        let mut c: Vec<usize> = (0..self.n_ap).filter(|&a| self.is_candidate(sta, a)).collect();
        c.sort_by(|&a, &b| {
            let (ra, rb) = (self.entry(sta, a).unwrap().rss_dbm, self.entry(sta, b).unwrap().rss_dbm);
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        c
    }

    pub fn sinr(&self, sta: usize, ap: usize) -> f64 {
        self.entry(sta, ap).map_or(0.0, |e| e.figures.sinr)
    }

    pub fn rate(&self, sta: usize, ap: usize) -> f64 {
        self.entry(sta, ap).map_or(0.0, |e| e.figures.rate_bps)
    }

    pub fn beta(&self, sta: usize, ap: usize) -> f64 {
        self.entry(sta, ap).map_or(0.0, |e| e.figures.beta)
    }

    /// Utility β̃ of the link, ignoring the γ filter.
    pub fn utility(&self, sta: usize, ap: usize) -> f64 {
        self.entry(sta, ap).map_or(UNSERVABLE, |e| e.figures.utility)
    }

    /// Edge weight: utility, or unservable for non-candidates and (when
    /// filtering) links below γ.
    pub fn weight(&self, sta: usize, ap: usize) -> f64 {
        match self.entry(sta, ap) {
            None => UNSERVABLE,
            Some(e) if self.gamma.is_some_and(|g| e.figures.sinr < g) => UNSERVABLE,
            Some(e) => e.figures.utility,
        }
    }

    pub fn weight_row(&self, sta: usize) -> Vec<f64> {
        (0..self.n_ap).map(|a| self.weight(sta, a)).collect()
    }

    pub fn is_servable(&self, sta: usize, ap: usize) -> bool {
        !is_unservable(self.weight(sta, ap))
    }

    pub fn is_coverable(&self, sta: usize) -> bool {
        (0..self.n_ap).any(|a| self.is_servable(sta, a))
    }

    pub fn weights(&self) -> WeightMatrix {
        let v = (0..self.n_sta).flat_map(|i| self.weight_row(i)).collect();
        WeightMatrix::new(self.n_sta, self.n_ap, v).expect("sizes agree")
    }

    /// Best achievable utility β^u of each STA (`None` when unservable).
    pub fn upper_bound(&self, sta: usize) -> Option<f64> {
        (0..self.n_ap)
            .map(|a| self.weight(sta, a))
            .filter(|w| !is_unservable(*w))
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |m| m.max(w))))
    }
}

/// Interference snapshot for a given association.
///
/// Each associated STA `z` transmits with probability `1/|D_z|`, where
/// `D_z` holds the associated STAs that contend with it (inside its
/// carrier-sense range or on its AP). A link `(i, j)` sees every such `z`
/// that could be concurrent: outside the CSR of `i`, unable to decode `i`'s
/// RTS, and unable to decode AP `j`'s CTS.
pub fn interference_snapshot(net: &Network, assoc: &[Option<usize>]) -> Result<LinkSnapshot> {
    let n = net.n_sta();
    let m = net.n_ap();
    if assoc.len() != n {
        return Err(Error::dims(format!("{n} associations"), assoc.len()));
    }
    let access: Vec<f64> = (0..n)
        .map(|z| match assoc[z] {
            None => 0.0,
            Some(az) => {
                let d = (0..n)
                    .filter(|&y| assoc[y].is_some() && (y == z || net.stas_in_csr(y, z) || assoc[y] == Some(az)))
                    .count();
                1.0 / d as f64
            }
        })
        .collect();
    let params = net.params();
    let gamma = params.gamma_filter.then(|| params.gamma());
    let mut entries = vec![None; n * m];
    for i in 0..n {
        for link in net.links(i) {
            let j = link.ap;
            let interference: f64 = (0..n)
                .filter(|&z| {
                    access[z] > 0.0 && z != i && !net.stas_in_csr(i, z) && !net.hears_sta(z, i) && !net.hears_ap(z, j)
                })
                .map(|z| access[z] * link.leakage[z])
                .sum();
            let sinr = link.sinr(interference);
            entries[i * m + j] = Some(LinkEntry {
                rss_dbm: net.rss_dbm(i, j),
                figures: mac::link_figures(sinr, params.radio.bandwidth_hz, &params.mac, &params.fairness),
            });
        }
    }
    LinkSnapshot::from_table(n, m, entries, gamma)
}

/// Snapshot used for association weights: start from SSF, then alternate
/// GAA and re-snapshot for `weight_iterations - 1` more rounds.
pub fn build_snapshot(net: &Network) -> Result<LinkSnapshot> {
    let mut assoc = ssf_network(net);
    let mut snap = interference_snapshot(net, &assoc)?;
    for _ in 1..net.params().weight_iterations {
        assoc = gaa(&snap, net.params().capacity_rule)?.ap;
        snap = interference_snapshot(net, &assoc)?;
    }
    Ok(snap)
}

/// An association together with per-STA figures read from a snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct AssociationSet {
    pub scheme: Scheme,
    /// Chosen AP per STA.
    pub ap: Vec<Option<usize>>,
    /// Edge weight of the chosen link.
    pub utility: Vec<Option<f64>>,
    pub sinr: Vec<Option<f64>>,
    pub rate_bps: Vec<Option<f64>>,
    /// β^u per STA.
    pub upper_bound: Vec<Option<f64>>,
    /// STAs with no servable link.
    pub uncovered: Vec<usize>,
    /// Σ of chosen edge weights, summed in STA order.
    pub objective: f64,
}

impl AssociationSet {
    pub fn from_choice(scheme: Scheme, ap: Vec<Option<usize>>, snap: &LinkSnapshot) -> Self {
        let n = snap.n_sta();
        let pick = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Option<f64>> {
            (0..n).map(|i| ap[i].map(|a| f(i, a))).collect()
        };
        let utility = pick(&|i, a| snap.weight(i, a));
        let sinr = pick(&|i, a| snap.sinr(i, a));
        let rate_bps = pick(&|i, a| snap.rate(i, a));
        let objective = utility.iter().flatten().sum();
        Self {
            scheme,
            utility,
            sinr,
            rate_bps,
            upper_bound: (0..n).map(|i| snap.upper_bound(i)).collect(),
            uncovered: (0..n).filter(|&i| !snap.is_coverable(i)).collect(),
            objective,
            ap,
        }
    }

    /// Number of STAs on each AP.
    pub fn loads(&self, n_ap: usize) -> Vec<usize> {
        let mut l = vec![0; n_ap];
        for a in self.ap.iter().flatten() {
            l[*a] += 1;
        }
        l
    }

    /// Σ of chosen edge weights, leaving out chosen edges that are
    /// unservable.
    pub fn served_utility(&self) -> f64 {
        self.utility.iter().flatten().filter(|w| !is_unservable(**w)).sum()
    }

    /// Σ utility of chosen links ignoring the γ filter, in STA order.
    pub fn raw_utility_sum(&self, snap: &LinkSnapshot) -> f64 {
        self.ap
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|a| snap.utility(i, a)))
            .sum()
    }
}

/// Per-AP slot counts for the association matrix.
pub fn capacities(snap: &LinkSnapshot, rule: CapacityRule) -> Vec<usize> {
    let (n, m) = (snap.n_sta(), snap.n_ap());
    let degree: Vec<usize> = (0..m).map(|a| (0..n).filter(|&i| snap.is_servable(i, a)).count()).collect();
    match rule {
        CapacityRule::Degree => degree,
        CapacityRule::Balanced => {
            let rows: Vec<Vec<usize>> = (0..n)
                .filter(|&i| snap.is_coverable(i))
                .map(|i| (0..m).filter(|&a| snap.is_servable(i, a)).collect())
                .collect();
            vec![balanced_capacity(&rows, m); m]
        }
    }
}

/// Smallest uniform slot count ≥ ceil(rows/M) under which every row can be
/// placed on one of its servable columns.
fn balanced_capacity(rows: &[Vec<usize>], m: usize) -> usize {
    if m == 0 || rows.is_empty() {
        return 0;
    }
    let (mut lo, mut hi) = (rows.len().div_ceil(m), rows.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if fits_with_capacity(rows, m, mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Bipartite b-matching feasibility by augmenting paths.
fn fits_with_capacity(rows: &[Vec<usize>], m: usize, cap: usize) -> bool {
    fn place(r: usize, rows: &[Vec<usize>], held: &mut [Vec<usize>], seen: &mut [bool], cap: usize) -> bool {
        for &a in &rows[r] {
            if seen[a] {
                continue;
            }
            seen[a] = true;
            if held[a].len() < cap {
                held[a].push(r);
                return true;
            }
            for k in 0..held[a].len() {
                let other = held[a][k];
                if place(other, rows, held, seen, cap) {
                    held[a][k] = r;
                    return true;
                }
            }
        }
        false
    }
    let mut held = vec![Vec::new(); m];
    (0..rows.len()).all(|r| place(r, rows, &mut held, &mut vec![false; m], cap))
}

/// Graph-based association: maximum-weight capped assignment of coverable
/// STAs to AP slots.
pub fn gaa(snap: &LinkSnapshot, rule: CapacityRule) -> Result<AssociationSet> {
    gaa_with_capacities(snap, &capacities(snap, rule))
}

pub fn gaa_with_capacities(snap: &LinkSnapshot, caps: &[usize]) -> Result<AssociationSet> {
    let (n, m) = (snap.n_sta(), snap.n_ap());
    let rows: Vec<usize> = (0..n).filter(|&i| snap.is_coverable(i)).collect();
    let mut ap = vec![None; n];
    if !rows.is_empty() && m > 0 {
        let values = rows.iter().flat_map(|&i| snap.weight_row(i)).collect();
        let w = WeightMatrix::new(rows.len(), m, values)?
            .with_labels(rows.iter().map(|&i| Some(i)).collect(), (0..m).map(Some).collect())?;
        let padded = matching::pad_and_replicate_per_column(&w, caps)?;
        let sol = matching::solve(&padded)?;
        for (r, &sta) in rows.iter().enumerate() {
            let col = sol.working_assignment()[r].expect("square matching is perfect");
            if let Some(a) = padded.col_labels()[col] {
                if !is_unservable(padded.get(r, col)) {
                    ap[sta] = Some(a);
                }
            }
        }
    }
    Ok(AssociationSet::from_choice(Scheme::Gaa, ap, snap))
}

/// Incremental association state: an optimal matching over STA rows and
/// replicated AP slot columns, updated one STA or AP at a time.
#[derive(Clone, Debug)]
pub struct GdaEngine {
    rule: CapacityRule,
    n_ap: usize,
    /// Weight row per admitted STA.
    weights: Vec<Option<Vec<f64>>>,
    row_of: Vec<Option<usize>>,
    row_sta: Vec<Option<usize>>,
    col_ap: Vec<Option<usize>>,
    slots: Vec<usize>,
    matching: Matching,
}

impl GdaEngine {
    pub fn new(n_ap: usize, rule: CapacityRule) -> Self {
        let empty = WeightMatrix::new(0, 0, Vec::new()).expect("empty matrix");
        Self {
            rule,
            n_ap,
            weights: Vec::new(),
            row_of: Vec::new(),
            row_sta: Vec::new(),
            col_ap: Vec::new(),
            slots: vec![0; n_ap],
            matching: matching::solve(&empty).expect("empty matrix solves"),
        }
    }

    /// Admits every coverable STA of `snap` in index order.
    pub fn from_snapshot(snap: &LinkSnapshot, rule: CapacityRule) -> Result<Self> {
        let mut e = Self::new(snap.n_ap(), rule);
        e.sync(snap)?;
        Ok(e)
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn dimension(&self) -> usize {
        self.row_sta.len()
    }

    pub fn is_admitted(&self, sta: usize) -> bool {
        self.row_of.get(sta).is_some_and(Option::is_some)
    }

    fn cell(&self, sta: Option<usize>, ap: Option<usize>) -> f64 {
        match (sta, ap) {
            (Some(s), Some(a)) => self.weights[s].as_ref().map_or(UNSERVABLE, |w| w[a]),
            _ => UNSERVABLE,
        }
    }

    /// Appends one row and one column and re-optimizes.
    fn grow(&mut self, sta: Option<usize>, ap: Option<usize>) -> Result<()> {
        let d = self.dimension();
        let old = self.matching.weights();
        let mut v = Vec::with_capacity((d + 1) * (d + 1));
        for r in 0..d {
            v.extend_from_slice(old.row(r));
            v.push(self.cell(self.row_sta[r], ap));
        }
        for c in 0..d {
            v.push(self.cell(sta, self.col_ap[c]));
        }
        v.push(self.cell(sta, ap));
        let ext = WeightMatrix::new(d + 1, d + 1, v)?;
        let m = std::mem::replace(&mut self.matching, matching::solve(&WeightMatrix::filled(0, 0, 0.0))?);
        self.matching = matching::add_vertex(m, &ext)?;
        self.row_sta.push(sta);
        self.col_ap.push(ap);
        if let Some(s) = sta {
            self.row_of[s] = Some(d);
        }
        Ok(())
    }

    fn target_slots(&self) -> Vec<usize> {
        let rows: Vec<&Vec<f64>> = self
            .weights
            .iter()
            .flatten()
            .filter(|w| w.iter().any(|x| !is_unservable(*x)))
            .collect();
        match self.rule {
            CapacityRule::Degree => (0..self.n_ap)
                .map(|a| rows.iter().filter(|w| !is_unservable(w[a])).count())
                .collect(),
            CapacityRule::Balanced => {
                let lists: Vec<Vec<usize>> = rows
                    .iter()
                    .map(|w| (0..self.n_ap).filter(|&a| !is_unservable(w[a])).collect())
                    .collect();
                vec![balanced_capacity(&lists, self.n_ap); self.n_ap]
            }
        }
    }

    fn ensure_slots(&mut self, target: &[usize]) -> Result<()> {
        for (a, &t) in target.iter().enumerate() {
            while self.slots[a] < t {
                self.grow(None, Some(a))?;
                self.slots[a] += 1;
            }
        }
        Ok(())
    }

    fn set_row(&mut self, sta: usize, row: Vec<f64>) -> Result<()> {
        if row.len() != self.n_ap {
            return Err(Error::dims(format!("{} AP weights", self.n_ap), row.len()));
        }
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteWeight { row: sta, col: i });
        }
        if self.weights.len() <= sta {
            self.weights.resize(sta + 1, None);
            self.row_of.resize(sta + 1, None);
        }
        // Slots are sized for the new weights but built from the old ones, so
        // the matching stays consistent until the row update below.
        let previous = self.weights[sta].replace(row.clone());
        let target = self.target_slots();
        self.weights[sta] = previous;
        self.ensure_slots(&target)?;

        let r = match self.row_of[sta] {
            Some(r) => r,
            None => match self.row_sta.iter().position(Option::is_none) {
                Some(r) => r,
                None => {
                    self.grow(None, None)?;
                    self.dimension() - 1
                }
            },
        };
        let values: Vec<f64> = self.col_ap.iter().map(|c| c.map_or(UNSERVABLE, |a| row[a])).collect();
        let m = std::mem::replace(&mut self.matching, matching::solve(&WeightMatrix::filled(0, 0, 0.0))?);
        self.matching = matching::update_weights(m, Line::Row(r), &values)?;
        self.row_sta[r] = Some(sta);
        self.row_of[sta] = Some(r);
        self.weights[sta] = Some(row);
        Ok(())
    }

    /// Adds a new STA with its AP weight row.
    pub fn admit(&mut self, sta: usize, row: Vec<f64>) -> Result<()> {
        if self.is_admitted(sta) {
            return Err(Error::Unsupported(format!("STA {sta} is already admitted")));
        }
        self.set_row(sta, row)
    }

    /// Replaces the weight row of an admitted STA (mobility, interference
    /// change). Identical weights leave the state untouched.
    pub fn update_sta(&mut self, sta: usize, row: Vec<f64>) -> Result<()> {
        if !self.is_admitted(sta) {
            return Err(Error::Unsupported(format!("STA {sta} has not been admitted")));
        }
        if self.weights[sta].as_deref() == Some(&row[..]) {
            return Ok(());
        }
        self.set_row(sta, row)
    }

    /// Replaces one AP's weights towards every admitted STA (`column[sta]`),
    /// updating each of its slot columns in turn.
    pub fn update_ap(&mut self, ap: usize, column: &[f64]) -> Result<()> {
        if ap >= self.n_ap {
            return Err(Error::OutOfRange {
                what: "AP list",
                index: ap,
                len: self.n_ap,
            });
        }
        let mut next = self.weights.clone();
        for (s, w) in next.iter_mut().enumerate() {
            if let Some(w) = w {
                w[ap] = *column.get(s).ok_or_else(|| Error::dims(format!("{} STA weights", self.weights.len()), column.len()))?;
            }
        }
        if next == self.weights {
            return Ok(());
        }
        let previous = std::mem::replace(&mut self.weights, next);
        let target = self.target_slots();
        let next = std::mem::replace(&mut self.weights, previous);
        self.ensure_slots(&target)?;
        self.weights = next;
        for c in 0..self.dimension() {
            if self.col_ap[c] != Some(ap) {
                continue;
            }
            let values: Vec<f64> = self.row_sta.iter().map(|&s| self.cell(s, Some(ap))).collect();
            let m = std::mem::replace(&mut self.matching, matching::solve(&WeightMatrix::filled(0, 0, 0.0))?);
            self.matching = matching::update_weights(m, Line::Col(c), &values)?;
        }
        Ok(())
    }

    /// Brings the engine in line with a new snapshot: admits newly
    /// coverable STAs and updates rows that changed.
    pub fn sync(&mut self, snap: &LinkSnapshot) -> Result<()> {
        if snap.n_ap() != self.n_ap {
            return Err(Error::dims(format!("{} APs", self.n_ap), snap.n_ap()));
        }
        for i in 0..snap.n_sta() {
            let row = snap.weight_row(i);
            if self.is_admitted(i) {
                self.update_sta(i, row)?;
            } else if snap.is_coverable(i) {
                self.admit(i, row)?;
            }
        }
        Ok(())
    }

    /// Chosen AP per STA for `n_sta` STAs.
    pub fn assignment(&self, n_sta: usize) -> Vec<Option<usize>> {
        let work = self.matching.working_assignment();
        (0..n_sta)
            .map(|s| {
                let r = (*self.row_of.get(s)?)?;
                let c = work[r]?;
                let a = self.col_ap[c]?;
                (!is_unservable(self.cell(Some(s), Some(a)))).then_some(a)
            })
            .collect()
    }

    /// Σ of chosen weights over admitted STAs, in STA order.
    pub fn objective(&self) -> f64 {
        self.assignment(self.weights.len())
            .iter()
            .enumerate()
            .filter_map(|(s, a)| a.map(|a| self.cell(Some(s), Some(a))))
            .sum()
    }

    pub fn association(&self, snap: &LinkSnapshot) -> AssociationSet {
        AssociationSet::from_choice(Scheme::Gda, self.assignment(snap.n_sta()), snap)
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }
}

/// Strongest-signal-first over a snapshot's candidates.
pub fn ssf(snap: &LinkSnapshot) -> Vec<Option<usize>> {
    (0..snap.n_sta()).map(|i| snap.candidates(i).first().copied()).collect()
}

/// Strongest-signal-first straight from the network geometry.
pub fn ssf_network(net: &Network) -> Vec<Option<usize>> {
    (0..net.n_sta()).map(|i| net.candidates(i).next()).collect()
}

/// Sequential least-load choice. Load of an AP is Σ 1/r over its STAs.
pub fn greedy(snap: &LinkSnapshot, order: &[usize]) -> Vec<Option<usize>> {
    greedy_from(snap, order, &[])
}

/// [`greedy`] starting from earlier choices in `prior`; only STAs without
/// one are placed.
pub fn greedy_from(snap: &LinkSnapshot, order: &[usize], prior: &[Option<usize>]) -> Vec<Option<usize>> {
    let (mut ap, mut load) = prior_loads(snap, prior, |i, a| 1.0 / snap.rate(i, a));
    for &i in order {
        if ap[i].is_some() {
            continue;
        }
        let cands: Vec<usize> = snap.candidates(i).into_iter().filter(|&a| snap.rate(i, a) > 0.0).collect();
        if let Some(a) = least_loaded(&cands, &load) {
            load[a] += 1.0 / snap.rate(i, a);
            ap[i] = Some(a);
        }
    }
    ap
}

fn prior_loads(
    snap: &LinkSnapshot,
    prior: &[Option<usize>],
    cost: impl Fn(usize, usize) -> f64,
) -> (Vec<Option<usize>>, Vec<f64>) {
    let mut ap = vec![None; snap.n_sta()];
    let mut load = vec![0.0; snap.n_ap()];
    for (i, a) in prior.iter().enumerate().take(snap.n_sta()) {
        if let Some(a) = *a {
            ap[i] = Some(a);
            load[a] += cost(i, a);
        }
    }
    (ap, load)
}

fn least_loaded(cands: &[usize], load: &[f64]) -> Option<usize> {
    cands
        .iter()
        .copied()
        .min_by(|&a, &b| load[a].total_cmp(&load[b]).then(a.cmp(&b)))
}

/// Sequential choice minimizing the L2 norm of the candidate APs' loads
/// after joining.
pub fn smartassoc(snap: &LinkSnapshot, order: &[usize]) -> Vec<Option<usize>> {
    smartassoc_from(snap, order, &[])
}

pub fn smartassoc_from(snap: &LinkSnapshot, order: &[usize], prior: &[Option<usize>]) -> Vec<Option<usize>> {
    let (mut ap, mut load) = prior_loads(snap, prior, |i, a| 1.0 / snap.rate(i, a));
    for &i in order {
        if ap[i].is_some() {
            continue;
        }
        let cands: Vec<usize> = snap.candidates(i).into_iter().filter(|&a| snap.rate(i, a) > 0.0).collect();
        let joins: Vec<f64> = cands.iter().map(|&a| 1.0 / snap.rate(i, a)).collect();
        if let Some(k) = min_norm_choice(&cands, &load, &joins) {
            load[cands[k]] += joins[k];
            ap[i] = Some(cands[k]);
        }
    }
    ap
}

/// Index into `cands` whose post-join load vector has the smallest norm.
fn min_norm_choice(cands: &[usize], load: &[f64], joins: &[f64]) -> Option<usize> {
    let norm_if = |k: usize| -> f64 {
        cands
            .iter()
            .enumerate()
            .map(|(q, &a)| {
                let l = load[a] + if q == k { joins[k] } else { 0.0 };
                l * l
            })
            .sum()
    };
    (0..cands.len()).min_by(|&x, &y| norm_if(x).total_cmp(&norm_if(y)).then(cands[x].cmp(&cands[y])))
}

/// Best-performance-first: each STA joins the AP that most increases the
/// revenue Σ_j n_j·log(1 / Σ_{k on j} 1/β_kj), i.e. the sum of log
/// throughputs when an AP's STAs share it with equal throughput.
pub fn bpf(snap: &LinkSnapshot, order: &[usize]) -> Vec<Option<usize>> {
    bpf_from(snap, order, &[])
}

pub fn bpf_from(snap: &LinkSnapshot, order: &[usize], prior: &[Option<usize>]) -> Vec<Option<usize>> {
    let (mut ap, mut inv) = prior_loads(snap, prior, |i, a| 1.0 / snap.beta(i, a));
    let mut count = vec![0usize; snap.n_ap()];
    for a in ap.iter().flatten() {
        count[*a] += 1;
    }
    for &i in order {
        if ap[i].is_some() {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for a in snap.candidates(i) {
            let b = snap.beta(i, a);
            if b <= 0.0 {
                continue;
            }
            let gain = bpf_gain(count[a], inv[a], 1.0 / b);
            if best.is_none_or(|(ba, bg)| gain > bg || (gain == bg && a < ba)) {
                best = Some((a, gain));
            }
        }
        if let Some((a, _)) = best {
            count[a] += 1;
            inv[a] += 1.0 / snap.beta(i, a);
            ap[i] = Some(a);
        }
    }
    ap
}

fn bpf_gain(n: usize, inv_sum: f64, inv_new: f64) -> f64 {
    let after = -((n + 1) as f64) * (inv_sum + inv_new).ln();
    let before = if n == 0 { 0.0 } else { -(n as f64) * inv_sum.ln() };
    after - before
}

/// Arrival order for the sequential baselines.
pub fn arrival_order(n_sta: usize, shuffle_seed: Option<u64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_sta).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

/// Runs one scheme on a snapshot. GDA admits the STAs one by one.
pub fn associate(scheme: Scheme, snap: &LinkSnapshot, rule: CapacityRule, order: &[usize]) -> Result<AssociationSet> {
    Ok(match scheme {
        Scheme::Gaa => gaa(snap, rule)?,
        Scheme::Gda => GdaEngine::from_snapshot(snap, rule)?.association(snap),
        Scheme::Ssf => AssociationSet::from_choice(scheme, ssf(snap), snap),
        Scheme::Greedy => AssociationSet::from_choice(scheme, greedy(snap, order), snap),
        Scheme::SmartAssoc => AssociationSet::from_choice(scheme, smartassoc(snap, order), snap),
        Scheme::Bpf => AssociationSet::from_choice(scheme, bpf(snap, order), snap),
    })
}
