//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

use std::time::Instant;

use densewlan::association::{self, LinkEntry, LinkSnapshot, Scheme};
use densewlan::mac::{self, FairnessParams, LinkFigures, MacParams};
use densewlan::matching::{self, Line, WeightMatrix};
use densewlan::phy::{self, PhyParams, SinrMode};
use densewlan::scenario::{CapacityRule, Network, ScenarioParams};
use densewlan::simcore::{self, DynamicParams, SimParams};
use densewlan::topology::{Area, NetworkGeometry, Position};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> WeightMatrix {
    let v = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    WeightMatrix::new(rows, cols, v).unwrap()
}

/// Best complete matching of the smaller side, by enumeration.
fn brute_force(w: &WeightMatrix) -> f64 {
    fn go(w: &WeightMatrix, r: usize, used: &mut Vec<bool>, transpose: bool) -> f64 {
        let (n_small, n_big) = if transpose { (w.cols(), w.rows()) } else { (w.rows(), w.cols()) };
        if r == n_small {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for c in 0..n_big {
            if used[c] {
                continue;
            }
            used[c] = true;
            let v = if transpose { w.get(c, r) } else { w.get(r, c) };
            best = best.max(v + go(w, r + 1, used, transpose));
            used[c] = false;
        }
        best
    }
    let transpose = w.rows() > w.cols();
    let n_big = w.rows().max(w.cols());
    go(w, 0, &mut vec![false; n_big], transpose)
}

fn matching_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    let trials = 600;
    let mut wrong = 0;
    for _ in 0..trials {
        let (r, c) = (rng.random_range(1..=7), rng.random_range(1..=7));
        let w = random_matrix(&mut rng, r, c, -5.0, 10.0);
        let got = matching::solve(&w).unwrap().objective();
        let best = brute_force(&w);
        if (got - best).abs() > 1e-9 * best.abs().max(1.0) {
            wrong += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        wrong == 0 && secs < 10.0,
        format!("{trials} matrices up to 7x7, {wrong} mismatches, {secs:.2} s"),
    )
}

fn incremental_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut inserts, mut changes, mut wrong) = (0, 0, 0);
    while inserts < 50 || changes < 100 {
        let mut w = random_matrix(&mut rng, 1, 1, 0.0, 10.0);
        let mut m = matching::solve(&w).unwrap();
        while w.rows() < 8 {
            let n = w.rows() + 1;
            let mut ext = random_matrix(&mut rng, n, n, 0.0, 10.0);
            for r in 0..n - 1 {
                for c in 0..n - 1 {
                    ext.set(r, c, w.get(r, c));
                }
            }
            w = ext;
            m = matching::add_vertex(m, &w).unwrap();
            inserts += 1;
            wrong += usize::from(m.objective() != matching::solve(&w).unwrap().objective());
            for _ in 0..2 {
                let n = w.rows();
                let k = rng.random_range(0..n);
                let vals: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
                let line = if rng.random_bool(0.5) {
                    for (c, &v) in vals.iter().enumerate() {
                        w.set(k, c, v);
                    }
                    Line::Row(k)
                } else {
                    for (r, &v) in vals.iter().enumerate() {
                        w.set(r, k, v);
                    }
                    Line::Col(k)
                };
                m = matching::update_weights(m, line, &vals).unwrap();
                changes += 1;
                wrong += usize::from(m.objective() != matching::solve(&w).unwrap().objective());
            }
        }
    }
    outcome(
        wrong == 0,
        format!("{inserts} insertions, {changes} line changes, {wrong} mismatches"),
    )
}

fn capped_brute_force(w: &WeightMatrix, cap: usize) -> f64 {
    fn go(w: &WeightMatrix, r: usize, load: &mut Vec<usize>, cap: usize) -> f64 {
        if r == w.rows() {
            return 0.0;
        }
        let mut best = go(w, r + 1, load, cap);
        for c in 0..w.cols() {
            if load[c] < cap {
                load[c] += 1;
                best = best.max(w.get(r, c) + go(w, r + 1, load, cap));
                load[c] -= 1;
            }
        }
        best
    }
    go(w, 0, &mut vec![0; w.cols()], cap)
}

fn capped_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut trials, mut wrong) = (0, 0);
    for (rows, cols) in [(5, 2), (6, 3)] {
        for _ in 0..120 {
            let w = random_matrix(&mut rng, rows, cols, 0.0, 10.0);
            let cap = rows.div_ceil(cols) + rng.random_range(0..=2);
            let padded = matching::pad_and_replicate(&w, cap).unwrap();
            let assignment = matching::solve(&padded).unwrap().assignment();
            let got: f64 = (0..rows)
                .filter_map(|r| assignment[r].and_then(|c| padded.col_labels()[c]).map(|a| w.get(r, a)))
                .sum();
            let best = capped_brute_force(&w, cap);
            trials += 1;
            if (got - best).abs() > 1e-9 * best.max(1.0) {
                wrong += 1;
            }
        }
    }
    outcome(wrong == 0, format!("{trials} instances (5x2, 6x3), {wrong} mismatches"))
}

fn zf_invariant() -> Outcome {
    let mut worst = 0f64;
    let mut n = 0;
    for u in [2, 4] {
        for s in 0..500u64 {
            let h = phy::draw_channel(1.0, u, 8, 40_000 + s * 7 + u as u64);
            let w = phy::zf_beamformer(&h);
            let wh = w.weights() * h.as_matrix();
            let err = (wh - DMatrix::<Complex64>::identity(u, u)).norm();
            worst = worst.max(err);
            n += 1;
        }
    }
    outcome(worst < 1e-8, format!("{n} channels, K = 8, max |WH - I|_F = {worst:.2e}"))
}

/// Straight-line SINR-to-utility evaluation for the chain oracle.
fn reference_chain(
    h: &DMatrix<Complex64>,
    interferers: &[DMatrix<Complex64>],
    p: &PhyParams,
    mac: &MacParams,
    delta: f64,
) -> [f64; 5] {
    let hh = h.adjoint();
    let w = (&hh * h).try_inverse().unwrap() * hh;
    let fro2 = |m: &DMatrix<Complex64>| m.iter().map(|z| z.re * z.re + z.im * z.im).sum::<f64>();
    let per_stream = p.symbol_energy / p.num_tx as f64;
    let (ds, is) = match p.sinr_mode {
        SinrMode::PowerConsistent => (per_stream, per_stream),
        SinrMode::Literal => (per_stream.sqrt(), 1.0),
    };
    let signal = ds * fro2(&(&w * h));
    let noise = fro2(&w) * p.noise_variance;
    let interference: f64 = interferers.iter().map(|hz| is * fro2(&(&w * hz))).sum();
    let sinr = signal / (noise + interference);
    let rate = p.bandwidth_hz * (1.0 + sinr).log2();
    let t = (mac.payload_bits + mac.header_bits) / rate;
    let tau = mac.difs_s + mac.sifs_s + f64::from(mac.cw_max) / 2.0 * mac.slot_time_s + mac.ack_s + mac.rts_cts_s;
    let beta = f64::from(mac.mcs_order).log2() / (t + tau);
    let util = if delta == 1.0 {
        beta.ln()
    } else {
        beta.powf(1.0 - delta) / (1.0 - delta)
    };
    [sinr, rate, t, beta, util]
}

fn utility_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0f64;
    for k in 0..100u64 {
        let u = rng.random_range(1..=4);
        let kk = rng.random_range(u..=8);
        let p = PhyParams {
            symbol_energy: rng.random_range(1.0..100.0),
            num_tx: u,
            num_rx: kk,
            noise_variance: 10f64.powf(rng.random_range(-13.0..-9.0)),
            bandwidth_hz: [20e6, 40e6][rng.random_range(0..2)],
            sinr_mode: if rng.random_bool(0.5) { SinrMode::PowerConsistent } else { SinrMode::Literal },
        };
        let mac = MacParams {
            payload_bits: 8.0 * rng.random_range(100.0..1500.0),
            cw_max: [256, 1024][rng.random_range(0..2)],
            mcs_order: [2, 4, 16][rng.random_range(0..3)],
            ..MacParams::default()
        };
        let delta = [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)];
        let gain = 10f64.powf(rng.random_range(-9.0..-5.0));
        let h = phy::draw_channel(gain, u, kk, 900 + k);
        let hz: Vec<_> = (0..rng.random_range(0..4))
            .map(|j| phy::draw_channel(10f64.powf(rng.random_range(-11.0..-7.0)), u, kk, 10_000 + 10 * k + j))
            .collect();

        let w = phy::zf_beamformer(&h);
        let refs: Vec<_> = hz.iter().collect();
        let sinr = phy::compute_sinr((&w, &h), &refs, &p);
        let f: LinkFigures = mac::link_figures(sinr, p.bandwidth_hz, &mac, &FairnessParams { delta });
        let got = [f.sinr, f.rate_bps, f.airtime_s, f.beta, f.utility];

        let hz_m: Vec<_> = hz.iter().map(|c| c.as_matrix().clone()).collect();
        let want = reference_chain(h.as_matrix(), &hz_m, &p, &mac, delta);
        for (g, r) in got.iter().zip(want) {
            worst = worst.max((g - r).abs() / r.abs());
        }
    }
    outcome(worst < 1e-12, format!("100 links, max relative deviation {worst:.2e}"))
}

fn random_snapshot(rng: &mut ChaCha8Rng) -> LinkSnapshot {
    let n = rng.random_range(1..=12);
    let m = rng.random_range(1..=5);
    let mac = MacParams::default();
    let fairness = FairnessParams::default();
    let entries = (0..n * m)
        .map(|_| {
            rng.random_bool(0.7).then(|| LinkEntry {
                rss_dbm: rng.random_range(-75.0..-30.0),
                figures: mac::link_figures(10f64.powf(rng.random_range(-2.0..3.0)), 20e6, &mac, &fairness),
            })
        })
        .collect();
    let gamma = rng.random_bool(0.5).then_some(1.0);
    LinkSnapshot::from_table(n, m, entries, gamma).unwrap()
}

fn objective_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut snaps: Vec<LinkSnapshot> = (0..50).map(|_| random_snapshot(&mut rng)).collect();
    let p = ScenarioParams::default();
    for seed in 0..50 {
        snaps.push(association::build_snapshot(&Network::realize(&p, 7_000 + seed).unwrap()).unwrap());
    }
    let mut violations = Vec::new();
    for (k, snap) in snaps.iter().enumerate() {
        let order = association::arrival_order(snap.n_sta(), Some(k as u64));
        let g = association::associate(Scheme::Gaa, snap, CapacityRule::Degree, &order).unwrap();
        for b in [Scheme::Ssf, Scheme::Greedy, Scheme::SmartAssoc, Scheme::Bpf] {
            let x = association::associate(b, snap, CapacityRule::Degree, &order).unwrap();
            if g.objective.partial_cmp(&x.objective).is_none_or(|o| o.is_lt()) {
                violations.push(format!("{b}@{k}"));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{} snapshots (50 synthetic, 50 realized) x 4 baselines, violations: {:?}",
            snaps.len(),
            violations
        ),
    )
}

fn single_link() -> Outcome {
    let p = ScenarioParams::default();
    let g = NetworkGeometry {
        area: Area::default(),
        ap_positions: vec![Position::new(100.0, 100.0)],
        sta_positions: vec![Position::new(110.0, 100.0)],
    };
    let net = Network::with_geometry(&p, g, 5).unwrap();
    let snap = association::build_snapshot(&net).unwrap();
    let a = association::gaa(&snap, p.capacity_rule).unwrap();
    let sinr = net.links(0)[0].sinr(0.0);
    let t = p.mac.frame_bits() / phy::channel_rate(sinr, p.radio.bandwidth_hz);
    // Alone on the medium the STA never leaves the minimum window.
    let tau = mac::mac_delay_for_window(&p.mac, f64::from(p.mac.cw_min - 1)) + p.mac.rts_cts_s;
    let analytic = p.mac.payload_bits / (t + tau) / 1e6;
    let sim = SimParams {
        n_slots: 1000,
        ..SimParams::default()
    };
    let runs = 200;
    let mean = (0..runs)
        .map(|s| simcore::simulate(&net, &a, &sim, s).unwrap().aggregate_mbps())
        .sum::<f64>()
        / runs as f64;
    let err = (mean - analytic).abs() / analytic;
    outcome(
        err < 0.02,
        format!("simulated {mean:.3} Mbps vs analytic {analytic:.3} Mbps ({runs} runs x 10^3 slots), error {:.2}%", 100.0 * err),
    )
}

fn throughput_ordering() -> Vec<(String, Outcome)> {
    let sim = SimParams {
        n_slots: 1000,
        ..SimParams::default()
    };
    let mut out = Vec::new();
    for eta in [0.2, 0.5, 0.8] {
        let start = Instant::now();
        let mut p = ScenarioParams::default();
        p.intensities.eta_n = eta;
        let mc = simcore::run_monte_carlo(&p, &Scheme::STATIC, &sim, 200, 1).unwrap();
        let s = |k: Scheme| mc.summary(k).unwrap().agg_mbps;
        let (gaa, bpf, smart, greedy, ssf) =
            (s(Scheme::Gaa), s(Scheme::Bpf), s(Scheme::SmartAssoc), s(Scheme::Greedy), s(Scheme::Ssf));
        let ordered = gaa.mean > bpf.mean && bpf.mean > smart.mean && smart.mean > greedy.mean.max(ssf.mean);
        let separated = gaa.ci_lo > ssf.ci_hi;
        let gain = gaa.mean / ssf.mean - 1.0;
        let in_band = (0.15..=0.60).contains(&gain);
        out.push((
            format!("throughput_ordering eta_n={eta}"),
            outcome(
                ordered && separated && in_band,
                format!(
                    "Mbps gaa {:.1} [{:.1}, {:.1}], bpf {:.1}, smartassoc {:.1}, greedy {:.1}, ssf {:.1} [{:.1}, {:.1}]; \
                     ordering {}, CI separation {}, gain {:+.1}% ({}); {:.0} s",
                    gaa.mean,
                    gaa.ci_lo,
                    gaa.ci_hi,
                    bpf.mean,
                    smart.mean,
                    greedy.mean,
                    ssf.mean,
                    ssf.ci_lo,
                    ssf.ci_hi,
                    if ordered { "ok" } else { "violated" },
                    if separated { "ok" } else { "violated" },
                    100.0 * gain,
                    if in_band { "in [15%, 60%]" } else { "outside [15%, 60%]" },
                    start.elapsed().as_secs_f64()
                ),
            ),
        ));
    }
    out
}

fn cdf_tail() -> Outcome {
    let mut p = ScenarioParams::default();
    p.intensities.eta_n = 0.5;
    p.intensities.eta_m = 0.1;
    let sim = SimParams {
        n_slots: 1000,
        ..SimParams::default()
    };
    let mc = simcore::run_monte_carlo(&p, &[Scheme::Gaa, Scheme::Ssf], &sim, 200, 1).unwrap();
    let g = mc.summary(Scheme::Gaa).unwrap();
    let s = mc.summary(Scheme::Ssf).unwrap();
    let ok = g.p10.mean >= s.p10.mean && g.p10.ci_lo > s.p10.ci_hi;
    outcome(
        ok,
        format!(
            "N {:.1}, M {:.1}; p10 gaa {:.3} [{:.3}, {:.3}] vs ssf {:.3} [{:.3}, {:.3}] Mbps, gain {:+.1}%",
            g.mean_n_sta,
            g.mean_n_ap,
            g.p10.mean,
            g.p10.ci_lo,
            g.p10.ci_hi,
            s.p10.mean,
            s.p10.ci_lo,
            s.p10.ci_hi,
            100.0 * (g.p10.mean / s.p10.mean - 1.0)
        ),
    )
}

fn dynamic_growth() -> Outcome {
    let p = ScenarioParams::default();
    let d = DynamicParams::default();
    let schemes = [Scheme::Gda, Scheme::Bpf, Scheme::SmartAssoc, Scheme::Greedy, Scheme::Ssf];
    let sim = SimParams::default();
    let out = simcore::run_dynamic_monte_carlo(&p, &d, &schemes, &sim, 50, 1).unwrap();
    let last = out.last().unwrap();
    let mismatches: usize = out.iter().map(|e| e.gda_mismatches).sum();
    let mean = |k: Scheme| last.per_scheme.iter().find(|s| s.scheme == k).unwrap().agg_mbps.mean;
    let gda = mean(Scheme::Gda);
    let best_other = schemes[1..].iter().map(|&k| (k, mean(k))).fold((Scheme::Ssf, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    outcome(
        gda >= best_other.1 && mismatches == 0,
        format!(
            "{} epochs, final N {:.0}; final Mbps gda {:.1} vs best baseline {} {:.1}; GDA/GAA objective mismatches {}",
            out.len(),
            last.mean_n_sta,
            gda,
            best_other.0,
            best_other.1,
            mismatches
        ),
    )
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(String, Outcome)> = vec![
        ("matching_optimality".into(), matching_optimality()),
        ("incremental_equivalence".into(), incremental_equivalence()),
        ("capped_many_to_one".into(), capped_oracle()),
        ("zf_invariant".into(), zf_invariant()),
        ("utility_chain".into(), utility_chain()),
        ("objective_dominance".into(), objective_dominance()),
        ("single_link_simulator".into(), single_link()),
    ];
    for (name, o) in &results {
        println!("{} {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
    }
    let shown = results.len();
    results.extend(throughput_ordering());
    results.push(("cdf_p10".into(), cdf_tail()));
    results.push(("dynamic_growth".into(), dynamic_growth()));
    for (name, o) in &results[shown..] {
        println!("{} {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.ok).map(|(n, _)| n.as_str()).collect();
    println!(
        "acceptance: {} passed, {} failed in {:.0} s",
        results.len() - failed.len(),
        failed.len(),
        total.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
