//! Traffic sources for the multimedia session.
//!
//! The voice source alternates exponentially distributed ON/OFF phases
//! (equiprobable at session start) and emits one fixed-size packet every
//! 20 ms while ON. The file-transfer source emits packets with
//! geometrically distributed inter-arrival gaps on the 2 ms TTI grid, the
//! discrete analogue of exponential spacing, with the gap mean derived from
//! the configured download rate. A fixed core-network delay shifts every
//! packet between generation and RNC arrival, without loss or reordering.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Exp, Geometric};

use crate::pdu::FlowClass;
use crate::time::SimTime;

#[derive(Debug, Clone)]
pub struct Packet {
    pub id: u64,
    pub flow: FlowClass,
    pub size_bits: u32,
    pub generated_at: SimTime,
    pub rnc_arrival_at: SimTime,
}

/// Fixed core-network delay; preserves spacing and order.
pub fn apply_cn_delay(mut packet: Packet, cn_delay: SimTime) -> Packet {
    packet.rnc_arrival_at = packet.generated_at + cn_delay;
    packet
}

#[derive(Debug, Clone)]
pub struct VoipParams {
    pub packet_bits: u32,
    pub rate_bps: f64,
    pub mean_phase: SimTime,
}

impl VoipParams {
    /// One packet per `packet_bits / rate_bps` seconds during ON phases;
    /// 304 bits at 15.2 kbps is exactly 20 ms.
    pub fn packet_interval(&self) -> SimTime {
        SimTime::from_secs_f64(f64::from(self.packet_bits) / self.rate_bps)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.packet_bits == 0 || self.rate_bps <= 0.0 {
            return Err("voip packet size and rate must be positive".into());
        }
        if self.mean_phase.is_zero() {
            return Err("voip mean phase must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoipPhase {
    On,
    Off,
}

#[derive(Debug)]
pub enum VoipEvent {
    Packet(Packet),
    PhaseChange { phase: VoipPhase, at: SimTime },
}

#[derive(Debug)]
pub struct VoipSource {
    params: VoipParams,
    rng: ChaCha8Rng,
    pub(crate) phase: VoipPhase,
    pub(crate) phase_ends_at: SimTime,
    pub(crate) next_emission_at: SimTime,
    packet_seq: u64,
    on_time: SimTime,
    off_time: SimTime,
    phase_count: u64,
}

impl VoipSource {
    pub fn new(params: VoipParams, mut rng: ChaCha8Rng, start: SimTime) -> Self {
        let start_on = Bernoulli::new(0.5).unwrap().sample(&mut rng);
        let mut src = VoipSource {
            params,
            rng,
            phase: VoipPhase::Off,
            phase_ends_at: start,
            next_emission_at: start,
            packet_seq: 0,
            on_time: SimTime::ZERO,
            off_time: SimTime::ZERO,
            phase_count: 0,
        };
        let phase = if start_on { VoipPhase::On } else { VoipPhase::Off };
        src.enter_phase(phase, start);
        src
    }

    fn draw_phase_duration(&mut self) -> SimTime {
        let rate = 1.0 / self.params.mean_phase.as_secs_f64();
        let secs = Exp::new(rate).unwrap().sample(&mut self.rng);
        // Zero-length phases would stall the state machine.
        SimTime::from_secs_f64(secs).max(SimTime::from_nanos(1))
    }

    fn enter_phase(&mut self, phase: VoipPhase, at: SimTime) {
        let duration = self.draw_phase_duration();
        self.phase = phase;
        self.phase_ends_at = at + duration;
        self.phase_count += 1;
        match phase {
            VoipPhase::On => {
                self.on_time += duration;
                // First packet of a phase goes out at the phase start.
                self.next_emission_at = at;
            }
            VoipPhase::Off => {
                self.off_time += duration;
            }
        }
    }

    /// Advance the state machine one step: either the next packet emission
    /// of the current ON phase, or a phase transition.
    pub fn next_event(&mut self) -> VoipEvent {
        if self.phase == VoipPhase::On && self.next_emission_at < self.phase_ends_at {
            let at = self.next_emission_at;
            self.next_emission_at = at + self.params.packet_interval();
            let id = self.packet_seq;
            self.packet_seq += 1;
            return VoipEvent::Packet(Packet {
                id,
                flow: FlowClass::Rt,
                size_bits: self.params.packet_bits,
                generated_at: at,
                rnc_arrival_at: at,
            });
        }
        let at = self.phase_ends_at;
        let next = match self.phase {
            VoipPhase::On => VoipPhase::Off,
            VoipPhase::Off => VoipPhase::On,
        };
        self.enter_phase(next, at);
        VoipEvent::PhaseChange { phase: next, at }
    }

    pub fn next_packet(&mut self) -> Packet {
        loop {
            if let VoipEvent::Packet(p) = self.next_event() {
                return p;
            }
        }
    }

    /// Fraction of generated phase time spent ON.
    pub fn duty_cycle(&self) -> f64 {
        let total = self.on_time + self.off_time;
        if total.is_zero() {
            return 0.0;
        }
        self.on_time.as_secs_f64() / total.as_secs_f64()
    }

    pub fn phase_count(&self) -> u64 {
        self.phase_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtpSizeModel {
    /// Every packet carries exactly the mean size; keeps the offered rate
    /// exact and segmentation counts deterministic.
    Fixed,
    /// Geometrically distributed byte count with the same mean.
    Geometric,
}

#[derive(Debug, Clone)]
pub struct FtpParams {
    pub mean_packet_bytes: u32,
    pub offered_rate_bps: f64,
    pub size_model: FtpSizeModel,
    pub tti: SimTime,
}

impl FtpParams {
    pub fn mean_packet_bits(&self) -> f64 {
        f64::from(self.mean_packet_bytes) * 8.0
    }

    /// Mean inter-arrival gap in seconds: mean packet bits over offered rate.
    pub fn mean_inter_arrival_s(&self) -> f64 {
        self.mean_packet_bits() / self.offered_rate_bps
    }

    fn mean_gap_ttis(&self) -> f64 {
        self.mean_inter_arrival_s() / self.tti.as_secs_f64()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.mean_packet_bytes == 0 || self.offered_rate_bps <= 0.0 {
            return Err("ftp packet size and rate must be positive".into());
        }
        if self.tti.is_zero() {
            return Err("ftp tti grid must be positive".into());
        }
        if self.mean_gap_ttis() < 1.0 {
            return Err(format!(
                "offered rate {} bps needs a mean gap below one TTI; not representable on the grid",
                self.offered_rate_bps
            ));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct FtpSource {
    params: FtpParams,
    rng: ChaCha8Rng,
    size_rng: ChaCha8Rng,
    gap_dist: Geometric,
    size_dist: Option<Geometric>,
    next_arrival_at: SimTime,
    packet_seq: u64,
}

impl FtpSource {
    pub fn new(params: FtpParams, rng: ChaCha8Rng, size_rng: ChaCha8Rng, start: SimTime) -> Self {
        // Gap = 1 + Geometric(p) TTIs has mean 1/p; p = 1/mean keeps the
        // sample mean equal to mean_packet_bits/offered_rate exactly.
        let p = (1.0 / params.mean_gap_ttis()).min(1.0);
        let size_dist = match params.size_model {
            FtpSizeModel::Fixed => None,
            FtpSizeModel::Geometric => {
                Some(Geometric::new(1.0 / f64::from(params.mean_packet_bytes)).unwrap())
            }
        };
        let mut src = FtpSource {
            gap_dist: Geometric::new(p).unwrap(),
            params,
            rng,
            size_rng,
            size_dist,
            next_arrival_at: start,
            packet_seq: 0,
        };
        let first_gap = src.draw_gap();
        src.next_arrival_at = start + first_gap;
        src
    }

    fn draw_gap(&mut self) -> SimTime {
        let ttis = 1 + self.gap_dist.sample(&mut self.rng);
        self.params.tti.mul(ttis)
    }

    fn draw_size_bits(&mut self) -> u32 {
        match &self.size_dist {
            None => self.params.mean_packet_bytes * 8,
            Some(d) => {
                let bytes = 1 + d.sample(&mut self.size_rng);
                (bytes * 8) as u32
            }
        }
    }

    pub fn next_packet(&mut self) -> Packet {
        let at = self.next_arrival_at;
        let gap = self.draw_gap();
        self.next_arrival_at = at + gap;
        let id = self.packet_seq;
        self.packet_seq += 1;
        Packet {
            id,
            flow: FlowClass::Nrt,
            size_bits: self.draw_size_bits(),
            generated_at: at,
            rnc_arrival_at: at,
        }
    }
}
