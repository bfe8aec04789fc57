//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria 1-3 share one 2 variants x 5 rates x 5 seeds x 400 s grid at
//! the default calibration; per-rate values are means over the five paired
//! seeds.

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;

use tsp_sim::config::{Scenario, OUTAGE_CALIBRATION_NOISE_DBM};
use tsp_sim::engine::{run, SimConfig};
use tsp_sim::flow_control::{FlowControlParams, FlowControlState};
use tsp_sim::metrics::MetricsReport;
use tsp_sim::oracle::{compare_with_sim, comparison_grid, solve, OracleModel, OracleVariant};
use tsp_sim::pdu::{FlowClass, Pdu};
use tsp_sim::radio::{combined_sinr_db, path_loss_db};
use tsp_sim::rlc_rnc::segment_packet;
use tsp_sim::rng::substream;
use tsp_sim::time::SimTime;
use tsp_sim::traffic::Packet;
use tsp_sim::tsp_buffer::{NrtAdmission, RtAdmission, TspBuffer, TspBufferConfig, TspVariant};

const RATES: [f64; 5] = [64.0, 128.0, 256.0, 512.0, 1024.0];

struct Grid {
    reports: Vec<MetricsReport>,
    wall_seconds: f64,
}

static GRID: OnceLock<Grid> = OnceLock::new();

fn grid() -> &'static Grid {
    GRID.get_or_init(|| {
        let scenario = Scenario::default();
        let mut cells: Vec<SimConfig> = Vec::new();
        for &variant in &[TspVariant::Original, TspVariant::Enhanced] {
            for &rate in &RATES {
                for seed in 1..=5u64 {
                    cells.push(scenario.sim_config(variant, rate, seed));
                }
            }
        }
        let started = Instant::now();
        let next = std::sync::atomic::AtomicUsize::new(0);
        let reports = std::sync::Mutex::new(Vec::new());
        let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4);
        std::thread::scope(|scope| {
            for _ in 0..workers.min(cells.len()) {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if idx >= cells.len() {
                        break;
                    }
                    let report = run(&cells[idx]).expect("default grid cell must run");
                    reports.lock().unwrap().push(report);
                });
            }
        });
        Grid {
            reports: reports.into_inner().unwrap(),
            wall_seconds: started.elapsed().as_secs_f64(),
        }
    })
}

fn mean_over_seeds(variant: TspVariant, rate: f64, f: impl Fn(&MetricsReport) -> f64) -> f64 {
    let values: Vec<f64> = grid()
        .reports
        .iter()
        .filter(|r| r.variant == variant && r.ftp_rate_kbps == rate)
        .map(f)
        .collect();
    assert_eq!(values.len(), 5, "expected 5 seeds per cell");
    values.iter().sum::<f64>() / values.len() as f64
}

fn nrt_loss_mean(variant: TspVariant, rate: f64) -> f64 {
    mean_over_seeds(variant, rate, |r| r.nrt_loss_prob.unwrap_or(0.0))
}

fn rt_loss_mean(variant: TspVariant, rate: f64) -> f64 {
    mean_over_seeds(variant, rate, |r| r.rt_loss_prob.unwrap_or(0.0))
}

fn throughput_mean_kbps(variant: TspVariant, rate: f64) -> f64 {
    mean_over_seeds(variant, rate, |r| r.nrt_throughput_bps / 1e3)
}

fn delay_mean_ms(variant: TspVariant, rate: f64) -> f64 {
    mean_over_seeds(variant, rate, |r| r.rt_mean_delay_s.unwrap_or(0.0) * 1e3)
}

// Criterion 1: enhanced NRT loss stays below 1e-3 at every rate while the
// original scheme's loss is non-decreasing in rate and at least 10x worse
// at 512 and 1024 kbps; the grid itself stays under the runtime target.
#[test]
fn criterion_1_nrt_loss_signature() {
    let g = grid();
    let mut ok = true;
    for &rate in &RATES {
        let e = nrt_loss_mean(TspVariant::Enhanced, rate);
        if e >= 1e-3 {
            ok = false;
            eprintln!("  enhanced loss {} at {} kbps exceeds 1e-3", e, rate);
        }
    }
    let originals: Vec<f64> = RATES.iter().map(|&r| nrt_loss_mean(TspVariant::Original, r)).collect();
    for w in originals.windows(2) {
        if w[1] + 1e-12 < w[0] {
            ok = false;
            eprintln!("  original loss not non-decreasing: {:?}", originals);
        }
    }
    for &rate in &[512.0, 1024.0] {
        let o = nrt_loss_mean(TspVariant::Original, rate);
        let e = nrt_loss_mean(TspVariant::Enhanced, rate);
        if !(o > 0.0 && o >= 10.0 * e) {
            ok = false;
            eprintln!("  at {} kbps original {} is not >= 10x enhanced {}", rate, o, e);
        }
    }
    if g.wall_seconds >= 300.0 {
        ok = false;
        eprintln!("  grid took {:.1} s, target < 300 s", g.wall_seconds);
    }
    println!(
        "criterion 1 ({}): enhanced<1e-3 at all rates, original non-decreasing and >=10x at 512/1024, grid {:.1}s",
        if ok { "PASS" } else { "FAIL" },
        g.wall_seconds
    );
    assert!(ok, "criterion 1 failed");
}

// Criterion 2: wherever NRT loss is below 1e-3, delivered NRT throughput
// equals offered x 1.05 (the 336/320 header factor) within 2%, and the two
// schemes agree within 2% at rates up to 256 kbps.
#[test]
fn criterion_2_throughput_signature() {
    let mut ok = true;
    for &variant in &[TspVariant::Original, TspVariant::Enhanced] {
        for &rate in &RATES {
            if nrt_loss_mean(variant, rate) >= 1e-3 {
                continue;
            }
            let thr = throughput_mean_kbps(variant, rate);
            let target = rate * 1.05;
            let rel = (thr - target) / target;
            if rel.abs() > 0.02 {
                ok = false;
                eprintln!(
                    "  {} at {} kbps: throughput {:.2} vs target {:.2} ({:+.2}%)",
                    variant.label(),
                    rate,
                    thr,
                    target,
                    rel * 100.0
                );
            }
        }
    }
    for &rate in &[64.0, 128.0, 256.0] {
        let o = throughput_mean_kbps(TspVariant::Original, rate);
        let e = throughput_mean_kbps(TspVariant::Enhanced, rate);
        let rel = (o - e).abs() / (0.5 * (o + e));
        if rel > 0.02 {
            ok = false;
            eprintln!("  variants disagree at {} kbps: {:.2} vs {:.2}", rate, o, e);
        }
    }
    println!(
        "criterion 2 ({}): throughput = offered x 1.05 +/- 2% where loss < 1e-3, variants agree <= 256 kbps",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion 2 failed");
}

// Criterion 3: VoIP loss is insensitive to the FTP rate (spread < 0.005
// within each variant), the variants agree per rate (< 0.005, paired
// seeds), and mean delay agrees within 10%. The absolute ~0.08 level is a
// documented calibration, checked separately below.
#[test]
fn criterion_3_voip_insensitivity() {
    let mut ok = true;
    for &variant in &[TspVariant::Original, TspVariant::Enhanced] {
        let losses: Vec<f64> = RATES.iter().map(|&r| rt_loss_mean(variant, r)).collect();
        let spread = losses.iter().cloned().fold(f64::MIN, f64::max)
            - losses.iter().cloned().fold(f64::MAX, f64::min);
        if spread >= 0.005 {
            ok = false;
            eprintln!("  {} rt loss spread {} across rates", variant.label(), spread);
        }
    }
    for &rate in &RATES {
        let o = rt_loss_mean(TspVariant::Original, rate);
        let e = rt_loss_mean(TspVariant::Enhanced, rate);
        if (o - e).abs() >= 0.005 {
            ok = false;
            eprintln!("  rt loss differs at {} kbps: {} vs {}", rate, o, e);
        }
        let od = delay_mean_ms(TspVariant::Original, rate);
        let ed = delay_mean_ms(TspVariant::Enhanced, rate);
        let scale = od.max(ed);
        if scale > 1e-9 && (od - ed).abs() > 0.10 * scale {
            ok = false;
            eprintln!("  rt delay differs at {} kbps: {:.3} vs {:.3} ms", rate, od, ed);
        }
    }
    println!(
        "criterion 3 ({}): rt loss flat in rate and equal across variants, delay within 10%",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion 3 failed");
}

// Criterion 3, calibration documentation: the documented outage constant
// puts the VoIP blocking probability in [0.06, 0.10] on the default
// mobility trace.
#[test]
fn criterion_3_documented_outage_calibration() {
    let mut scenario = Scenario::default();
    scenario.radio_noise_interference_dbm = OUTAGE_CALIBRATION_NOISE_DBM;
    let mut losses = Vec::new();
    for &variant in &[TspVariant::Original, TspVariant::Enhanced] {
        for seed in 1..=5u64 {
            let cfg = scenario.sim_config(variant, 128.0, seed);
            let report = run(&cfg).expect("calibration run");
            losses.push(report.rt_loss_prob.expect("voip arrivals present"));
        }
    }
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    let ok = (0.06..=0.10).contains(&mean);
    println!(
        "criterion 3 calibration ({}): noise {} dBm gives rt_loss {:.4} in [0.06, 0.10]",
        if ok { "PASS" } else { "FAIL" },
        OUTAGE_CALIBRATION_NOISE_DBM,
        mean
    );
    assert!(ok, "documented calibration out of band: {}", mean);
}

// Criterion 4: the event engine in degenerate slot mode reproduces the
// exact Markov-chain loss probabilities across the model grid, within
// 3 sigma of the exact (autocorrelation-aware) standard error, in under
// a minute.
#[test]
fn criterion_4_oracle_equivalence() {
    let started = Instant::now();
    let grid = comparison_grid(None, false);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for (idx, model) in grid.iter().enumerate() {
        let cell = compare_with_sim(model, 10_000_000, 1 + idx as u64).expect("cell solves");
        worst = worst.max(cell.max_abs_z());
        if !cell.within(3.0) {
            failures += 1;
            eprintln!(
                "  n={} r={} p=({},{}): z_rt {:.2} z_nrt {:.2}",
                model.n, model.r, model.p_rt, model.p_nrt, cell.z_rt, cell.z_nrt
            );
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = failures == 0 && elapsed < 60.0;
    println!(
        "criterion 4 ({}): {} cells within 3 sigma (worst |z| {:.2}) in {:.1} s",
        if ok { "PASS" } else { "FAIL" },
        grid.len(),
        worst,
        elapsed
    );
    assert!(ok, "criterion 4 failed: {} cells out, {:.1} s", failures, elapsed);
}

// An off-by-one in the RT cap must blow the oracle comparison up; the
// z-scores carry real statistical power.
#[test]
fn criterion_4_mutation_sanity() {
    let reference = OracleModel { n: 4, r: 2, p_rt: 0.5, p_nrt: 0.5, variant: OracleVariant::PushOut };
    let mutated = OracleModel { r: 1, ..reference };
    let wrong = solve(&mutated).unwrap();
    // Judging the simulated reference against the mutated chain's exact
    // value must produce a massive deviation.
    let cell = compare_with_sim(&reference, 1_000_000, 3).unwrap();
    let z_against_mutated = (cell.sim_rt_block.unwrap() - wrong.rt_block_prob) / cell.stderr_rt;
    println!(
        "criterion 4 mutation sanity (PASS): exact {:.4} vs mutated {:.4}, shift {:.0} sigma",
        cell.exact_rt_block,
        wrong.rt_block_prob,
        z_against_mutated.abs()
    );
    assert!(
        z_against_mutated.abs() > 10.0,
        "mutation must be detectable: {}",
        z_against_mutated
    );
}

// Criterion 5: the formula-level unit suite.
#[test]
fn criterion_5_formula_suite() {
    // Queue-average recurrence: for constant occupancy the gap decays by
    // exactly (1 - w_q) per TTI.
    let params = FlowControlParams {
        w_q: 0.7,
        c_factor: 0.5,
        lambda_nrt_bps: 134_400.0,
        pdu_size_bits: 336,
        tti_rlc: SimTime::from_millis(10),
        grant_interval: SimTime::from_millis(50),
        iub_latency: SimTime::from_millis(20),
        pdu_transfer_latency: SimTime::from_millis(20),
    };
    let mut state = FlowControlState::new(&params);
    state.aveq = 100.0;
    for t in 1..=48u32 {
        state.update_aveq(&params, 0);
        let expected = 100.0 * (1.0 - params.w_q).powi(t as i32);
        assert!(
            ((state.aveq - expected) / expected).abs() < 1e-12,
            "ewma convergence rate off at t={}",
            t
        );
    }

    // Rate levels are exact.
    state.aveq = 100.0;
    assert_eq!(state.select_rate(&params, 120, 240), 134_400.0);
    state.aveq = 150.0;
    assert_eq!(state.select_rate(&params, 120, 240), 67_200.0);
    state.aveq = 241.0;
    assert_eq!(state.select_rate(&params, 120, 240), 0.0);

    // Credit conservation: 1000 intervals at 128 kbps drift by at most one
    // PDU from the ideal 19.047619... per interval.
    let mut fc = FlowControlState::new(&params);
    fc.current_lambda_bps = 128_000.0;
    let mut granted = 0u64;
    for _ in 0..1000 {
        granted += fc.compute_grant(&params, SimTime::ZERO).max_pdus;
    }
    let ideal = 128_000.0 * 0.05 / 336.0 * 1000.0;
    assert!((granted as f64 - ideal).abs() <= 1.0, "granted {} vs ideal {}", granted, ideal);

    // Segmentation counts.
    let voip = Packet {
        id: 0,
        flow: FlowClass::Rt,
        size_bits: 304,
        generated_at: SimTime::ZERO,
        rnc_arrival_at: SimTime::ZERO,
    };
    let ftp = Packet {
        id: 1,
        flow: FlowClass::Nrt,
        size_bits: 3840,
        generated_at: SimTime::ZERO,
        rnc_arrival_at: SimTime::ZERO,
    };
    assert_eq!(segment_packet(&voip, 0).len(), 1);
    assert_eq!(segment_packet(&ftp, 0).len(), 12);

    // Path loss at the cell edge is exactly 148 dB.
    assert_eq!(path_loss_db(1000.0), 148.0);

    // Soft-combining gain of a second transmission.
    let gain = combined_sinr_db(0.0, 2);
    assert!((gain - 3.0102999566398120).abs() < 1e-6, "gain {}", gain);

    println!("criterion 5 (PASS): ewma rate, rate levels, credit conservation, segmentation, path loss, combining gain");
}

// Criterion 6a: structural invariants across one million randomized buffer
// operations (the buffer also self-asserts occupancy bounds on every
// mutation).
#[test]
fn criterion_6_randomized_buffer_invariants() {
    let mut rng = substream(2024, "acceptance-buffer-ops");
    let mut buffer = TspBuffer::new(TspBufferConfig {
        capacity_n: 12,
        rt_limit_r: 5,
        lower_l: 4,
        upper_h: 9,
        variant: TspVariant::Original,
    });
    let mut next_id = [0u64; 2];
    let mut accepted = [0u64; 2];
    let mut delivered = [0u64; 2];
    let mut last_delivered_id = [None::<u64>; 2];
    let ops = 1_000_000u64;
    for _ in 0..ops {
        match rng.gen_range(0..10) {
            0..=2 => {
                let pdu = Pdu::new(next_id[0], FlowClass::Rt, next_id[0], SimTime::ZERO);
                next_id[0] += 1;
                match buffer.enqueue_rt(pdu, SimTime::ZERO) {
                    RtAdmission::Accepted => accepted[0] += 1,
                    RtAdmission::AcceptedWithPushOut => accepted[0] += 1,
                    RtAdmission::Blocked => {}
                }
            }
            3..=6 => {
                let pdu = Pdu::new(next_id[1], FlowClass::Nrt, next_id[1], SimTime::ZERO);
                next_id[1] += 1;
                if buffer.enqueue_nrt(pdu, SimTime::ZERO) == NrtAdmission::Accepted {
                    accepted[1] += 1;
                }
            }
            _ => {
                let budget = rng.gen_range(0..4000u32);
                let block = buffer.dequeue_up_to(budget);
                // Never an NRT PDU ahead of an RT PDU.
                let first_nrt = block.iter().position(|p| p.flow == FlowClass::Nrt);
                if let Some(k) = first_nrt {
                    assert!(block[k..].iter().all(|p| p.flow == FlowClass::Nrt));
                }
                let bits: u32 = block.iter().map(|p| p.size_bits).sum();
                assert!(bits <= budget);
                for pdu in block {
                    let idx = usize::from(pdu.flow == FlowClass::Nrt);
                    delivered[idx] += 1;
                    if let Some(prev) = last_delivered_id[idx] {
                        assert!(pdu.id > prev, "per-class FIFO violated");
                    }
                    last_delivered_id[idx] = Some(pdu.id);
                }
            }
        }
        let occ = buffer.occupancy();
        assert!(occ.rt_count <= 5 && occ.total <= 12);
    }
    // Conservation per class.
    let c = buffer.counters;
    let occ = buffer.occupancy();
    assert_eq!(c.rt_arrivals, next_id[0]);
    assert_eq!(c.nrt_arrivals, next_id[1]);
    assert_eq!(c.rt_arrivals, accepted[0] + c.rt_blocked);
    assert_eq!(c.nrt_arrivals, accepted[1] + c.nrt_dropped_tail);
    assert_eq!(accepted[0], delivered[0] + occ.rt_count as u64);
    assert_eq!(accepted[1], delivered[1] + occ.nrt_count as u64 + c.nrt_pushed_out);
    println!(
        "criterion 6a (PASS): {} randomized ops, invariants and conservation hold (pushed out {})",
        ops, c.nrt_pushed_out
    );
}

// Criterion 6b: the enhanced scheme's push-out diagnostic stays at zero
// across the whole default grid, and reports are bit-stable across
// repeats.
#[test]
fn criterion_6_enhanced_pushout_and_determinism() {
    let g = grid();
    let pushouts: u64 = g
        .reports
        .iter()
        .filter(|r| r.variant == TspVariant::Enhanced)
        .map(|r| r.nrt_pushed_out)
        .sum();
    let cfg = Scenario::default().sim_config(TspVariant::Enhanced, 256.0, 3);
    let digests: Vec<u64> = (0..3).map(|_| run(&cfg).unwrap().digest()).collect();
    let stable = digests.windows(2).all(|w| w[0] == w[1]);
    let ok = pushouts == 0 && stable;
    println!(
        "criterion 6 ({}): enhanced push-outs {} across grid, digest stable over 3 repeats",
        if ok { "PASS" } else { "FAIL" },
        pushouts
    );
    assert_eq!(pushouts, 0, "enhanced variant pushed out PDUs");
    assert!(stable, "digest unstable: {:?}", digests);
}
