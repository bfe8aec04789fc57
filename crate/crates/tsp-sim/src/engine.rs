//! Deterministic discrete-event core.
//!
//! One run owns every component, executes events in (time, priority,
//! insertion) order and produces a metrics report that is bit-identical for
//! identical (config, seed).
//!
//! Same-instant ordering contract:
//!   1. packet arrivals at the RNC
//!   2. grant activations at the RNC
//!   3. Iub PDU arrivals entering the Node B buffer
//!   4. the TTI: channel step, then transmission/dequeue, then the queue
//!      average update
//!   5. the RNC frame transfer
//!   6. grant issuance
//! so a PDU landing exactly on a TTI boundary is eligible for that TTI and
//! the queue average always sees post-dequeue occupancy. Ties inside one
//! priority break by insertion order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::flow_control::{CapacityGrant, FlowControlParams, FlowControlState, RateLevel};
use crate::metrics::{summarize, EngineCounters, MetricsReport, ReplicationStats};
use crate::pdu::{FlowClass, Pdu, PDU_SIZE_BITS};
use crate::radio::{default_schemes, transmit_tti, AmcScheme, Channel, HarqProcess, RadioParams, TtiOutcome};
use crate::rlc_rnc::{CreditMode, DispatchMode, RncCounters, RncState};
use crate::rng::{labels, substream, Digest};
use crate::time::SimTime;
use crate::traffic::{apply_cn_delay, FtpParams, FtpSource, Packet, VoipParams, VoipSource};
use crate::tsp_buffer::{BufferCounters, NrtAdmission, RtAdmission, TspBuffer, TspBufferConfig, TspVariant};

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub duration: SimTime,
    pub warmup: SimTime,
    pub tti: SimTime,
    pub seed: u64,
    pub cn_delay: SimTime,
    pub buffer: TspBufferConfig,
    pub fc: FlowControlParams,
    pub voip: VoipParams,
    pub ftp: FtpParams,
    pub radio: RadioParams,
    pub dispatch_mode: DispatchMode,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.warmup > self.duration {
            return Err(format!(
                "warmup {} must not exceed duration {}",
                self.warmup, self.duration
            ));
        }
        if self.tti.is_zero() {
            return Err("tti must be positive".into());
        }
        if !self.fc.tti_rlc.is_multiple_of(self.tti) {
            return Err(format!(
                "frame length {} must be a whole number of {} TTIs",
                self.fc.tti_rlc, self.tti
            ));
        }
        if self.ftp.tti != self.tti || self.radio.tti != self.tti {
            return Err("component TTIs disagree with the engine TTI".into());
        }
        self.buffer.validate().map_err(|e| format!("buffer: {}", e))?;
        self.fc.validate().map_err(|e| format!("flow_control: {}", e))?;
        self.voip.validate().map_err(|e| format!("voip: {}", e))?;
        self.ftp.validate().map_err(|e| format!("ftp: {}", e))?;
        self.radio.validate().map_err(|e| format!("radio: {}", e))?;
        Ok(())
    }

    fn frames_per_grant_interval(&self) -> u64 {
        (self.fc.grant_interval.as_nanos() / self.fc.tti_rlc.as_nanos()).max(1)
    }
}

// Same-instant execution order; lower runs first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventPriority {
    PacketArrival = 0,
    GrantEffective = 1,
    NodeBArrival = 2,
    Tti = 3,
    IubFrame = 4,
    GrantIssue = 5,
}

#[derive(Debug)]
enum EventKind {
    PacketArrival { source: SourceId, packet: Packet },
    GrantEffective(CapacityGrant),
    NodeBArrival(Vec<Pdu>),
    Tti,
    IubFrame,
    GrantIssue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SourceId {
    Voip,
    Ftp,
}

#[derive(Debug)]
struct Event {
    time: SimTime,
    priority: EventPriority,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.priority == other.priority && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.priority, self.seq).cmp(&(other.time, other.priority, other.seq))
    }
}

/// Optional per-event CSV traces.
pub struct TraceWriters {
    grants: BufWriter<File>,
    radio: BufWriter<File>,
    iub: BufWriter<File>,
    packets: BufWriter<File>,
}

impl TraceWriters {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut grants = BufWriter::new(File::create(dir.join("grants.csv"))?);
        let mut radio = BufWriter::new(File::create(dir.join("radio.csv"))?);
        let mut iub = BufWriter::new(File::create(dir.join("iub.csv"))?);
        let mut packets = BufWriter::new(File::create(dir.join("packets.csv"))?);
        writeln!(grants, "time_s,aveq,level,max_pdus")?;
        writeln!(radio, "time_s,distance_m,sinr_actual_db,sinr_reported_db,scheme,tbs_bits,outcome")?;
        writeln!(iub, "time_s,rt_pdus,nrt_pdus,credits_remaining")?;
        writeln!(packets, "time_s,flow,bits")?;
        Ok(TraceWriters { grants, radio, iub, packets })
    }
}

struct Engine {
    cfg: SimConfig,
    clock: SimTime,
    events: BinaryHeap<Reverse<Event>>,
    seq: u64,

    buffer: TspBuffer,
    fc_state: FlowControlState,
    rnc: RncState,
    channel: Channel,
    schemes: Vec<AmcScheme>,
    harq: Option<HarqProcess>,
    voip: VoipSource,
    ftp: FtpSource,

    counters: EngineCounters,
    iub_inflight_rt: u64,
    iub_inflight_nrt: u64,
    warmup_snapped: bool,
    snap_engine: EngineCounters,
    snap_buffer: BufferCounters,
    traffic_digest: Digest,

    trace: Option<TraceWriters>,
    verbose_grants: bool,
}

impl Engine {
    fn new(cfg: SimConfig, trace: Option<TraceWriters>, verbose_grants: bool) -> Engine {
        let credit_mode = match cfg.buffer.variant {
            TspVariant::Original => CreditMode::Uncapped,
            TspVariant::Enhanced => CreditMode::Granted,
        };
        let voip = VoipSource::new(cfg.voip.clone(), substream(cfg.seed, labels::VOIP), SimTime::ZERO);
        let ftp = FtpSource::new(
            cfg.ftp.clone(),
            substream(cfg.seed, labels::FTP),
            substream(cfg.seed, labels::FTP_SIZE),
            SimTime::ZERO,
        );
        let channel = Channel::new(cfg.radio.clone(), substream(cfg.seed, labels::SHADOWING));
        let schemes = default_schemes(&cfg.radio.amc_thresholds_db);
        let frames = cfg.frames_per_grant_interval();
        Engine {
            buffer: TspBuffer::new(cfg.buffer),
            fc_state: FlowControlState::new(&cfg.fc),
            rnc: RncState::new(credit_mode, cfg.dispatch_mode, frames),
            channel,
            schemes,
            harq: None,
            voip,
            ftp,
            counters: EngineCounters::default(),
            iub_inflight_rt: 0,
            iub_inflight_nrt: 0,
            warmup_snapped: false,
            snap_engine: EngineCounters::default(),
            snap_buffer: BufferCounters::default(),
            traffic_digest: Digest::new(),
            clock: SimTime::ZERO,
            events: BinaryHeap::new(),
            seq: 0,
            trace,
            verbose_grants,
            cfg,
        }
    }

    fn schedule(&mut self, time: SimTime, priority: EventPriority, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.events.push(Reverse(Event { time, priority, seq, kind }));
    }

    fn pull_packet(&mut self, source: SourceId) {
        let packet = match source {
            SourceId::Voip => self.voip.next_packet(),
            SourceId::Ftp => self.ftp.next_packet(),
        };
        let packet = apply_cn_delay(packet, self.cfg.cn_delay);
        if packet.rnc_arrival_at >= self.cfg.duration {
            return;
        }
        self.traffic_digest.write_u64(match packet.flow {
            FlowClass::Rt => 0,
            FlowClass::Nrt => 1,
        });
        self.traffic_digest.write_u64(packet.generated_at.as_nanos());
        self.traffic_digest.write_u64(u64::from(packet.size_bits));
        self.schedule(packet.rnc_arrival_at, EventPriority::PacketArrival, EventKind::PacketArrival {
            source,
            packet,
        });
    }

    fn in_measurement_window(&self, t: SimTime) -> bool {
        t >= self.cfg.warmup
    }

    fn snapshot(&mut self) {
        self.snap_engine = self.counters;
        self.snap_buffer = self.buffer.counters;
        self.warmup_snapped = true;
    }

    fn on_packet_arrival(&mut self, source: SourceId, packet: Packet) {
        if let Some(t) = self.trace.as_mut() {
            let _ = writeln!(
                t.packets,
                "{},{},{}",
                packet.rnc_arrival_at,
                packet.flow.label(),
                packet.size_bits
            );
        }
        self.rnc.accept_packet(&packet);
        self.pull_packet(source);
    }

    fn on_grant_issue(&mut self, now: SimTime) {
        self.fc_state
            .select_rate(&self.cfg.fc, self.cfg.buffer.lower_l, self.cfg.buffer.upper_h);
        let grant = self.fc_state.compute_grant(&self.cfg.fc, now);
        if self.in_measurement_window(now) {
            match self.fc_state.level {
                RateLevel::Full => self.counters.grants_full += 1,
                RateLevel::Reduced => self.counters.grants_reduced += 1,
                RateLevel::Stopped => self.counters.grants_stopped += 1,
            }
        }
        if self.verbose_grants {
            eprintln!(
                "grant,{},{:.3},{},{}",
                now,
                self.fc_state.aveq,
                self.fc_state.level.label(),
                grant.max_pdus
            );
        }
        if let Some(t) = self.trace.as_mut() {
            let _ = writeln!(
                t.grants,
                "{},{:.4},{},{}",
                now,
                self.fc_state.aveq,
                self.fc_state.level.label(),
                grant.max_pdus
            );
        }
        self.schedule(grant.effective_at, EventPriority::GrantEffective, EventKind::GrantEffective(grant));
        self.schedule(now + self.cfg.fc.grant_interval, EventPriority::GrantIssue, EventKind::GrantIssue);
    }

    fn on_iub_frame(&mut self, now: SimTime) {
        let pdus = self.rnc.transfer_tick(now);
        if let Some(t) = self.trace.as_mut() {
            let rt = pdus.iter().filter(|p| p.flow == FlowClass::Rt).count();
            let _ = writeln!(
                t.iub,
                "{},{},{},{}",
                now,
                rt,
                pdus.len() - rt,
                self.rnc.grant_pdus_remaining()
            );
        }
        if !pdus.is_empty() {
            for p in &pdus {
                match p.flow {
                    FlowClass::Rt => self.iub_inflight_rt += 1,
                    FlowClass::Nrt => self.iub_inflight_nrt += 1,
                }
            }
            self.schedule(
                now + self.cfg.fc.iub_latency,
                EventPriority::NodeBArrival,
                EventKind::NodeBArrival(pdus),
            );
        }
        if self.in_measurement_window(now) {
            self.counters.rnc_backlog_samples += 1;
            self.counters.rnc_backlog_sum_pdus += self.rnc.nrt_backlog() as u64;
        }
        self.schedule(now + self.cfg.fc.tti_rlc, EventPriority::IubFrame, EventKind::IubFrame);
    }

    fn on_nodeb_arrival(&mut self, pdus: Vec<Pdu>, now: SimTime) {
        for pdu in pdus {
            match pdu.flow {
                FlowClass::Rt => {
                    self.iub_inflight_rt -= 1;
                    let _: RtAdmission = self.buffer.enqueue_rt(pdu, now);
                }
                FlowClass::Nrt => {
                    self.iub_inflight_nrt -= 1;
                    let _: NrtAdmission = self.buffer.enqueue_nrt(pdu, now);
                }
            }
        }
    }

    fn on_tti(&mut self, now: SimTime) {
        let actual = self.channel.step();
        let outcome = transmit_tti(&self.channel, &self.schemes, &mut self.buffer, &mut self.harq, now);
        match &outcome {
            TtiOutcome::Delivered(block) => {
                for pdu in block {
                    match pdu.flow {
                        FlowClass::Rt => {
                            self.counters.rt_delivered += 1;
                            self.counters.rt_delivered_bits += u64::from(PDU_SIZE_BITS);
                            let enq = pdu.nodeb_enqueued_at.expect("delivered PDUs were enqueued");
                            if self.in_measurement_window(enq) {
                                let first_tx = pdu.first_tx_at.expect("delivered PDUs were transmitted");
                                self.counters.rt_queue_delay_sum_s += (first_tx - enq).as_secs_f64();
                                self.counters.rt_queue_delay_samples += 1;
                                self.counters.rt_delivery_delay_sum_s += (now - enq).as_secs_f64();
                                self.counters.rt_delivery_delay_samples += 1;
                            }
                        }
                        FlowClass::Nrt => {
                            self.counters.nrt_delivered += 1;
                            self.counters.nrt_delivered_bits += u64::from(PDU_SIZE_BITS);
                        }
                    }
                }
            }
            TtiOutcome::BlockDiscarded(block) => {
                for pdu in block {
                    match pdu.flow {
                        FlowClass::Rt => self.counters.rt_discarded_air += 1,
                        FlowClass::Nrt => self.counters.nrt_discarded_air += 1,
                    }
                }
            }
            TtiOutcome::RetransmissionPending | TtiOutcome::Idle => {}
        }
        if let Some(t) = self.trace.as_mut() {
            let (label, tbs) = match &outcome {
                TtiOutcome::Delivered(b) => ("delivered", b.iter().map(|p| p.size_bits).sum::<u32>()),
                TtiOutcome::RetransmissionPending => ("retx", 0),
                TtiOutcome::BlockDiscarded(_) => ("discard", 0),
                TtiOutcome::Idle => ("idle", 0),
            };
            let _ = writeln!(
                t.radio,
                "{},{:.2},{:.3},{},{},{},{}",
                now,
                self.channel.distance_m(),
                actual,
                self.channel
                    .reported_sinr_db()
                    .map(|v| format!("{:.3}", v))
                    .unwrap_or_default(),
                "",
                tbs,
                label
            );
        }
        let q = self.buffer.occupancy().total;
        self.fc_state.update_aveq(&self.cfg.fc, q);
        self.schedule(now + self.cfg.tti, EventPriority::Tti, EventKind::Tti);
    }

    fn run_to_end(&mut self) {
        self.schedule(SimTime::ZERO, EventPriority::Tti, EventKind::Tti);
        self.schedule(SimTime::ZERO, EventPriority::IubFrame, EventKind::IubFrame);
        if self.cfg.buffer.variant == TspVariant::Enhanced {
            self.schedule(SimTime::ZERO, EventPriority::GrantIssue, EventKind::GrantIssue);
        }
        self.pull_packet(SourceId::Voip);
        self.pull_packet(SourceId::Ftp);

        while let Some(Reverse(event)) = self.events.pop() {
            if event.time >= self.cfg.duration {
                break;
            }
            debug_assert!(event.time >= self.clock, "virtual time must be non-decreasing");
            if !self.warmup_snapped && event.time >= self.cfg.warmup {
                self.snapshot();
            }
            self.clock = event.time;
            match event.kind {
                EventKind::PacketArrival { source, packet } => self.on_packet_arrival(source, packet),
                EventKind::GrantEffective(grant) => self.rnc.on_grant(grant, event.time),
                EventKind::NodeBArrival(pdus) => self.on_nodeb_arrival(pdus, event.time),
                EventKind::Tti => self.on_tti(event.time),
                EventKind::IubFrame => self.on_iub_frame(event.time),
                EventKind::GrantIssue => self.on_grant_issue(event.time),
            }
        }
        if !self.warmup_snapped {
            self.snapshot();
        }
        self.check_conservation();
    }

    /// Whole-run PDU accounting per flow; a violation is a simulator bug.
    fn check_conservation(&self) {
        let occ = self.buffer.occupancy();
        let harq_rt = self
            .harq
            .as_ref()
            .map(|h| h.block.iter().filter(|p| p.flow == FlowClass::Rt).count() as u64)
            .unwrap_or(0);
        let harq_nrt = self
            .harq
            .as_ref()
            .map(|h| h.block.iter().filter(|p| p.flow == FlowClass::Nrt).count() as u64)
            .unwrap_or(0);
        let rnc_counters: RncCounters = self.rnc.counters;
        assert_eq!(
            rnc_counters.rt_segmented,
            self.counters.rt_delivered
                + self.counters.rt_discarded_air
                + self.buffer.counters.rt_blocked
                + occ.rt_count as u64
                + self.rnc.rt_backlog() as u64
                + self.iub_inflight_rt
                + harq_rt,
            "RT PDU conservation violated"
        );
        assert_eq!(
            rnc_counters.nrt_segmented,
            self.counters.nrt_delivered
                + self.counters.nrt_discarded_air
                + self.buffer.counters.nrt_dropped_tail
                + self.buffer.counters.nrt_pushed_out
                + occ.nrt_count as u64
                + self.rnc.nrt_backlog() as u64
                + self.iub_inflight_nrt
                + harq_nrt,
            "NRT PDU conservation violated"
        );
    }

    fn report(&self) -> MetricsReport {
        let d = |a: u64, b: u64| a - b;
        let e = &self.counters;
        let se = &self.snap_engine;
        let b = &self.buffer.counters;
        let sb = &self.snap_buffer;

        let rt_arrivals = d(b.rt_arrivals, sb.rt_arrivals);
        let rt_blocked = d(b.rt_blocked, sb.rt_blocked);
        let nrt_arrivals = d(b.nrt_arrivals, sb.nrt_arrivals);
        let nrt_dropped_tail = d(b.nrt_dropped_tail, sb.nrt_dropped_tail);
        let nrt_pushed_out = d(b.nrt_pushed_out, sb.nrt_pushed_out);

        let measured_time_s = (self.cfg.duration - self.cfg.warmup).as_secs_f64();
        let ratio = |num: u64, den: u64| if den == 0 { None } else { Some(num as f64 / den as f64) };
        let delay_samples = d(e.rt_queue_delay_samples, se.rt_queue_delay_samples);
        let delivery_samples = d(e.rt_delivery_delay_samples, se.rt_delivery_delay_samples);
        let grants_total = d(e.grants_full, se.grants_full)
            + d(e.grants_reduced, se.grants_reduced)
            + d(e.grants_stopped, se.grants_stopped);
        let share = |n: u64| if grants_total == 0 { 0.0 } else { n as f64 / grants_total as f64 };
        let backlog_samples = d(e.rnc_backlog_samples, se.rnc_backlog_samples);

        MetricsReport {
            variant: self.cfg.buffer.variant,
            ftp_rate_kbps: self.cfg.ftp.offered_rate_bps / 1e3,
            seed: self.cfg.seed,
            measured_time_s,
            rt_arrivals,
            rt_blocked,
            nrt_arrivals,
            nrt_dropped_tail,
            nrt_pushed_out,
            rt_loss_prob: ratio(rt_blocked, rt_arrivals),
            nrt_loss_prob: ratio(nrt_dropped_tail + nrt_pushed_out, nrt_arrivals),
            rt_mean_delay_s: if delay_samples == 0 {
                None
            } else {
                Some((e.rt_queue_delay_sum_s - se.rt_queue_delay_sum_s) / delay_samples as f64)
            },
            rt_mean_delivery_delay_s: if delivery_samples == 0 {
                None
            } else {
                Some((e.rt_delivery_delay_sum_s - se.rt_delivery_delay_sum_s) / delivery_samples as f64)
            },
            nrt_throughput_bps: if measured_time_s > 0.0 {
                d(e.nrt_delivered_bits, se.nrt_delivered_bits) as f64 / measured_time_s
            } else {
                0.0
            },
            rt_delivered_pdus: d(e.rt_delivered, se.rt_delivered),
            nrt_delivered_pdus: d(e.nrt_delivered, se.nrt_delivered),
            air_discarded_rt: d(e.rt_discarded_air, se.rt_discarded_air),
            air_discarded_nrt: d(e.nrt_discarded_air, se.nrt_discarded_air),
            rnc_backlog_mean_pdus: if backlog_samples == 0 {
                0.0
            } else {
                d(e.rnc_backlog_sum_pdus, se.rnc_backlog_sum_pdus) as f64 / backlog_samples as f64
            },
            grant_share_full: share(d(e.grants_full, se.grants_full)),
            grant_share_reduced: share(d(e.grants_reduced, se.grants_reduced)),
            grant_share_stopped: share(d(e.grants_stopped, se.grants_stopped)),
            voip_duty_cycle: self.voip.duty_cycle(),
            traffic_digest: self.traffic_digest.finish(),
        }
    }
}

/// Execute one run.
pub fn run(cfg: &SimConfig) -> Result<MetricsReport, String> {
    run_traced(cfg, None, false)
}

/// Execute one run with optional trace output and grant lines on stderr.
pub fn run_traced(
    cfg: &SimConfig,
    trace_dir: Option<&Path>,
    verbose_grants: bool,
) -> Result<MetricsReport, String> {
    cfg.validate()?;
    let trace = match trace_dir {
        Some(dir) => Some(TraceWriters::create(dir).map_err(|e| format!("trace dir: {}", e))?),
        None => None,
    };
    let mut engine = Engine::new(cfg.clone(), trace, verbose_grants);
    engine.run_to_end();
    Ok(engine.report())
}

/// Per-metric replication summary over `n` runs with consecutive seeds.
#[derive(Debug, Clone)]
pub struct ReplicationReport {
    pub per_seed: Vec<MetricsReport>,
    pub rt_loss: Option<ReplicationStats>,
    pub nrt_loss: Option<ReplicationStats>,
    pub rt_mean_delay_s: Option<ReplicationStats>,
    pub nrt_throughput_bps: Option<ReplicationStats>,
    pub voip_duty_cycle: Option<ReplicationStats>,
}

pub fn run_replications(cfg: &SimConfig, n_seeds: u64) -> Result<ReplicationReport, String> {
    if n_seeds < 2 {
        return Err("replications need at least 2 seeds".into());
    }
    let mut per_seed = Vec::new();
    for k in 0..n_seeds {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(k);
        per_seed.push(run(&c)?);
    }
    let collect = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Vec<f64> {
        per_seed.iter().filter_map(|r| f(r)).collect()
    };
    Ok(ReplicationReport {
        rt_loss: summarize(&collect(&|r| r.rt_loss_prob)),
        nrt_loss: summarize(&collect(&|r| r.nrt_loss_prob)),
        rt_mean_delay_s: summarize(&collect(&|r| r.rt_mean_delay_s)),
        nrt_throughput_bps: summarize(&collect(&|r| Some(r.nrt_throughput_bps))),
        voip_duty_cycle: summarize(&collect(&|r| Some(r.voip_duty_cycle))),
        per_seed,
    })
}

/// Degenerate slot mode: Bernoulli arrivals straight into the buffer and a
/// deterministic one-PDU service per slot, with the same within-slot order
/// as the full engine (arrivals, RT before NRT, then service). This is the
/// bridge between the event engine's buffer mechanics and the exact chain.
#[derive(Debug, Clone, Copy)]
pub struct DegenerateConfig {
    pub capacity_n: usize,
    pub rt_limit_r: usize,
    pub p_rt: f64,
    pub p_nrt: f64,
    pub slots: u64,
    pub warmup_slots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct DegenerateOutcome {
    pub rt_arrivals: u64,
    pub rt_blocked: u64,
    pub nrt_arrivals: u64,
    pub nrt_dropped: u64,
}

impl DegenerateOutcome {
    pub fn rt_block_prob(&self) -> Option<f64> {
        (self.rt_arrivals > 0).then(|| self.rt_blocked as f64 / self.rt_arrivals as f64)
    }

    pub fn nrt_drop_prob(&self) -> Option<f64> {
        (self.nrt_arrivals > 0).then(|| self.nrt_dropped as f64 / self.nrt_arrivals as f64)
    }
}

pub fn run_degenerate(cfg: &DegenerateConfig) -> DegenerateOutcome {
    let mut buffer = TspBuffer::new(TspBufferConfig {
        capacity_n: cfg.capacity_n,
        rt_limit_r: cfg.rt_limit_r,
        lower_l: 1,
        upper_h: 2.max(cfg.capacity_n.saturating_sub(1)),
        variant: TspVariant::Original,
    });
    let mut rng = substream(cfg.seed, labels::ORACLE);
    let mut out = DegenerateOutcome { rt_arrivals: 0, rt_blocked: 0, nrt_arrivals: 0, nrt_dropped: 0 };
    let mut next_id: u64 = 0;
    for slot in 0..cfg.warmup_slots + cfg.slots {
        let measured = slot >= cfg.warmup_slots;
        if rng.gen::<f64>() < cfg.p_rt {
            let pdu = Pdu::new(next_id, FlowClass::Rt, next_id, SimTime::ZERO);
            next_id += 1;
            let blocked = buffer.enqueue_rt(pdu, SimTime::ZERO) == RtAdmission::Blocked;
            if measured {
                out.rt_arrivals += 1;
                out.rt_blocked += u64::from(blocked);
            }
        }
        if rng.gen::<f64>() < cfg.p_nrt {
            let pdu = Pdu::new(next_id, FlowClass::Nrt, next_id, SimTime::ZERO);
            next_id += 1;
            let dropped = buffer.enqueue_nrt(pdu, SimTime::ZERO) == NrtAdmission::DroppedTail;
            if measured {
                out.nrt_arrivals += 1;
                out.nrt_dropped += u64::from(dropped);
            }
        }
        buffer.dequeue_up_to(PDU_SIZE_BITS);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::DEFAULT_AMC_THRESHOLDS_DB;
    use crate::traffic::FtpSizeModel;

    pub(crate) fn test_config(variant: TspVariant, rate_kbps: f64, seed: u64) -> SimConfig {
        let tti = SimTime::from_millis(2);
        let frame = SimTime::from_millis(10);
        let iub = SimTime::from_millis(20);
        SimConfig {
            duration: SimTime::from_secs(40),
            warmup: SimTime::from_secs(5),
            tti,
            seed,
            cn_delay: SimTime::from_millis(50),
            buffer: TspBufferConfig {
                capacity_n: 300,
                rt_limit_r: 20,
                lower_l: 120,
                upper_h: 240,
                variant,
            },
            fc: FlowControlParams {
                w_q: 0.7,
                c_factor: 0.5,
                lambda_nrt_bps: rate_kbps * 1e3 * 336.0 / 320.0,
                pdu_size_bits: PDU_SIZE_BITS,
                tti_rlc: frame,
                grant_interval: SimTime::from_millis(50),
                iub_latency: iub,
                pdu_transfer_latency: iub,
            },
            voip: VoipParams {
                packet_bits: 304,
                rate_bps: 15_200.0,
                mean_phase: SimTime::from_secs(3),
            },
            ftp: FtpParams {
                mean_packet_bytes: 480,
                offered_rate_bps: rate_kbps * 1e3,
                size_model: FtpSizeModel::Fixed,
                tti,
            },
            radio: RadioParams {
                hs_pdsch_power_w: 7.0,
                noise_interference_dbm: -124.0,
                shadow_sigma_db: 8.0,
                shadow_rho: 0.5,
                shadow_update_interval: SimTime::from_millis(500),
                velocity_mps: 3000.0 / 3600.0,
                start_distance_m: 600.0,
                cell_radius_m: 1000.0,
                cqi_latency_ttis: 3,
                n_codes: 2,
                max_retx: 4,
                tti,
                amc_thresholds_db: DEFAULT_AMC_THRESHOLDS_DB,
            },
            dispatch_mode: DispatchMode::Spread,
        }
    }

    #[test]
    fn identical_seed_identical_report() {
        let cfg = test_config(TspVariant::Enhanced, 128.0, 11);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn zero_measurement_window_is_defined() {
        let mut cfg = test_config(TspVariant::Enhanced, 128.0, 3);
        cfg.duration = SimTime::from_secs(5);
        cfg.warmup = SimTime::from_secs(5);
        let r = run(&cfg).unwrap();
        assert_eq!(r.rt_arrivals, 0);
        assert_eq!(r.nrt_arrivals, 0);
        assert!(r.rt_loss_prob.is_none());
        assert!(r.nrt_loss_prob.is_none());
        assert!(r.rt_mean_delay_s.is_none());
        assert_eq!(r.nrt_throughput_bps, 0.0);
    }

    #[test]
    fn variants_see_identical_traffic() {
        let orig = run(&test_config(TspVariant::Original, 256.0, 21)).unwrap();
        let enh = run(&test_config(TspVariant::Enhanced, 256.0, 21)).unwrap();
        assert_eq!(orig.traffic_digest, enh.traffic_digest);
    }

    #[test]
    fn different_seeds_differ() {
        let a = run(&test_config(TspVariant::Enhanced, 128.0, 1)).unwrap();
        let b = run(&test_config(TspVariant::Enhanced, 128.0, 2)).unwrap();
        assert_ne!(a.traffic_digest, b.traffic_digest);
    }

    #[test]
    fn invalid_config_is_rejected_with_diagnostic() {
        let mut cfg = test_config(TspVariant::Enhanced, 128.0, 1);
        cfg.buffer.upper_h = 400;
        let err = run(&cfg).unwrap_err();
        assert!(err.contains("H"), "diagnostic should name the violated constraint: {}", err);
    }

    #[test]
    fn replications_zero_variance_on_empty_window() {
        let mut cfg = test_config(TspVariant::Enhanced, 128.0, 1);
        cfg.duration = SimTime::from_secs(5);
        cfg.warmup = SimTime::from_secs(5);
        let rep = run_replications(&cfg, 4).unwrap();
        let thr = rep.nrt_throughput_bps.unwrap();
        assert_eq!(thr.std, 0.0);
        assert_eq!(thr.mean, 0.0);
    }

    #[test]
    fn replications_duty_cycle_near_half() {
        let mut cfg = test_config(TspVariant::Enhanced, 64.0, 7);
        cfg.duration = SimTime::from_secs(100);
        cfg.warmup = SimTime::from_secs(2);
        let rep = run_replications(&cfg, 10).unwrap();
        let duty = rep.voip_duty_cycle.unwrap();
        assert!(
            (duty.mean - 0.5).abs() <= duty.half_width_95.max(0.05),
            "duty mean {} hw {}",
            duty.mean,
            duty.half_width_95
        );
    }

    // A PDU whose Iub arrival lands exactly on a TTI boundary is served in
    // that same TTI: NodeBArrival runs before Tti at equal timestamps.
    #[test]
    fn arrival_on_tti_boundary_is_eligible() {
        let mut cfg = test_config(TspVariant::Enhanced, 128.0, 1);
        cfg.radio.shadow_sigma_db = 0.0;
        cfg.radio.velocity_mps = 0.0;
        // Strong fixed channel so the first eligible TTI delivers.
        cfg.radio.noise_interference_dbm = -140.0;
        let mut engine = Engine::new(cfg, None, false);
        // Warm the CQI delay line: TTIs at 0,2,4,6 ms.
        engine.schedule(SimTime::ZERO, EventPriority::Tti, EventKind::Tti);
        let mut pdu = Pdu::new(0, FlowClass::Rt, 0, SimTime::ZERO);
        pdu.nodeb_enqueued_at = None;
        engine.iub_inflight_rt = 1;
        engine.schedule(SimTime::from_millis(8), EventPriority::NodeBArrival, EventKind::NodeBArrival(vec![pdu]));
        for _ in 0..6 {
            if let Some(Reverse(ev)) = engine.events.pop() {
                engine.clock = ev.time;
                match ev.kind {
                    EventKind::PacketArrival { source, packet } => engine.on_packet_arrival(source, packet),
                    EventKind::GrantEffective(g) => engine.rnc.on_grant(g, ev.time),
                    EventKind::NodeBArrival(p) => engine.on_nodeb_arrival(p, ev.time),
                    EventKind::Tti => engine.on_tti(ev.time),
                    EventKind::IubFrame => engine.on_iub_frame(ev.time),
                    EventKind::GrantIssue => engine.on_grant_issue(ev.time),
                }
            }
            if engine.counters.rt_delivered > 0 {
                break;
            }
        }
        assert_eq!(engine.counters.rt_delivered, 1);
        assert_eq!(engine.clock, SimTime::from_millis(8));
    }

    // With w_q = 1 the average equals the instantaneous occupancy, and it
    // must reflect the state after this TTI's dequeue.
    #[test]
    fn aveq_sees_post_dequeue_occupancy() {
        let mut cfg = test_config(TspVariant::Enhanced, 128.0, 1);
        cfg.fc.w_q = 1.0;
        cfg.radio.shadow_sigma_db = 0.0;
        cfg.radio.velocity_mps = 0.0;
        cfg.radio.noise_interference_dbm = -140.0;
        let mut engine = Engine::new(cfg, None, false);
        // Fill the delay line so the fourth TTI transmits.
        for k in 0..4u64 {
            engine.on_tti(SimTime::from_millis(2 * k));
        }
        let pdu = Pdu::new(0, FlowClass::Rt, 0, SimTime::ZERO);
        engine.iub_inflight_rt = 1;
        engine.on_nodeb_arrival(vec![pdu], SimTime::from_millis(8));
        assert_eq!(engine.buffer.occupancy().total, 1);
        engine.on_tti(SimTime::from_millis(8));
        assert_eq!(engine.buffer.occupancy().total, 0);
        assert_eq!(engine.fc_state.aveq, 0.0, "average must see the post-dequeue queue");
    }

    // A packet reaching the RNC at 3 ms rides the 10 ms frame and enters
    // the Node B buffer exactly one Iub latency later, at 30 ms.
    #[test]
    fn rt_iub_latency_is_exact() {
        let cfg = test_config(TspVariant::Enhanced, 128.0, 5);
        let mut engine = Engine::new(cfg, None, false);
        let packet = Packet {
            id: 0,
            flow: FlowClass::Rt,
            size_bits: 304,
            generated_at: SimTime::ZERO,
            rnc_arrival_at: SimTime::from_millis(3),
        };
        engine.rnc.accept_packet(&packet);
        engine.on_iub_frame(SimTime::from_millis(10));
        let mut saw_arrival = false;
        while let Some(Reverse(ev)) = engine.events.pop() {
            if let EventKind::NodeBArrival(pdus) = ev.kind {
                assert_eq!(ev.time, SimTime::from_millis(30));
                assert_eq!(pdus.len(), 1);
                assert_eq!(pdus[0].flow, FlowClass::Rt);
                saw_arrival = true;
            }
        }
        assert!(saw_arrival);
    }

    #[test]
    fn degenerate_zero_arrivals() {
        let out = run_degenerate(&DegenerateConfig {
            capacity_n: 4,
            rt_limit_r: 2,
            p_rt: 0.0,
            p_nrt: 0.0,
            slots: 10_000,
            warmup_slots: 100,
            seed: 1,
        });
        assert_eq!(out.rt_arrivals, 0);
        assert!(out.rt_block_prob().is_none());
    }

    #[test]
    fn degenerate_saturated_rt_never_blocks_with_service_each_slot() {
        // n=1, r=1, certain RT arrival, one served per slot: the arrival
        // always finds the buffer empty, so nothing is ever blocked.
        let out = run_degenerate(&DegenerateConfig {
            capacity_n: 1,
            rt_limit_r: 1,
            p_rt: 1.0,
            p_nrt: 0.0,
            slots: 10_000,
            warmup_slots: 100,
            seed: 1,
        });
        assert_eq!(out.rt_blocked, 0);
        assert_eq!(out.rt_arrivals, 10_000);
    }
}
