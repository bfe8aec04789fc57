//! Per-UE Node B buffer with time-space priority.
//!
//! Real-time PDUs are queued ahead of non-real-time PDUs and capped at R so
//! the loss-sensitive NRT flow keeps most of the space; NRT is served only
//! when no RT PDU waits. Two variants share the structure:
//!
//! * `Original` — drop-tail for NRT at a full buffer, and an RT arrival that
//!   meets a full buffer while the RT cap is not reached pushes out the
//!   newest queued NRT PDU.
//! * `Enhanced` — identical admission machinery, but upstream credit flow
//!   control is expected to keep NRT occupancy low enough that the push-out
//!   branch never fires. Push-outs still execute if reached and are surfaced
//!   through the same counter so a misbehaving control loop is visible.

use std::collections::VecDeque;

use crate::pdu::{FlowClass, Pdu, PDU_SIZE_BYTES};
use crate::time::SimTime;

/// Buffer scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TspVariant {
    Original,
    Enhanced,
}

impl TspVariant {
    pub fn label(self) -> &'static str {
        match self {
            TspVariant::Original => "original",
            TspVariant::Enhanced => "enhanced",
        }
    }
}

/// Capacity N, RT cap R and the flow-control thresholds L < H < N.
/// All values are PDU counts; byte-denominated settings divide by 42.
#[derive(Debug, Clone, Copy)]
pub struct TspBufferConfig {
    pub capacity_n: usize,
    pub rt_limit_r: usize,
    pub lower_l: usize,
    pub upper_h: usize,
    pub variant: TspVariant,
}

impl TspBufferConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rt_limit_r == 0 || self.rt_limit_r > self.capacity_n {
            return Err(format!(
                "rt_limit_r must satisfy 0 < R <= N (R={}, N={})",
                self.rt_limit_r, self.capacity_n
            ));
        }
        if self.variant == TspVariant::Enhanced {
            if self.lower_l == 0 || self.lower_l >= self.upper_h {
                return Err(format!(
                    "thresholds must satisfy 0 < L < H (L={}, H={})",
                    self.lower_l, self.upper_h
                ));
            }
            if self.upper_h >= self.capacity_n {
                return Err(format!(
                    "upper threshold must leave spare capacity, H < N (H={}, N={})",
                    self.upper_h, self.capacity_n
                ));
            }
        }
        Ok(())
    }
}

/// Bytes-to-PDUs conversion for byte-denominated thresholds.
pub fn pdus_from_bytes(bytes: u64) -> usize {
    (bytes / u64::from(PDU_SIZE_BYTES)) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtAdmission {
    Accepted,
    Blocked,
    AcceptedWithPushOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrtAdmission {
    Accepted,
    DroppedTail,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BufferCounters {
    pub rt_arrivals: u64,
    pub rt_blocked: u64,
    pub nrt_arrivals: u64,
    pub nrt_dropped_tail: u64,
    pub nrt_pushed_out: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occupancy {
    pub rt_count: usize,
    pub nrt_count: usize,
    pub total: usize,
}

#[derive(Debug)]
pub struct TspBuffer {
    config: TspBufferConfig,
    rt_fifo: VecDeque<Pdu>,
    nrt_fifo: VecDeque<Pdu>,
    pub counters: BufferCounters,
}

impl TspBuffer {
    pub fn new(config: TspBufferConfig) -> Self {
        TspBuffer {
            config,
            rt_fifo: VecDeque::new(),
            nrt_fifo: VecDeque::new(),
            counters: BufferCounters::default(),
        }
    }

    pub fn config(&self) -> &TspBufferConfig {
        &self.config
    }

    pub fn occupancy(&self) -> Occupancy {
        Occupancy {
            rt_count: self.rt_fifo.len(),
            nrt_count: self.nrt_fifo.len(),
            total: self.rt_fifo.len() + self.nrt_fifo.len(),
        }
    }

    /// Admit an RT PDU. Blocked at the RT cap; at a full buffer below the
    /// cap the newest NRT PDU is pushed out to make room.
    pub fn enqueue_rt(&mut self, mut pdu: Pdu, now: SimTime) -> RtAdmission {
        debug_assert_eq!(pdu.flow, FlowClass::Rt);
        self.counters.rt_arrivals += 1;
        let total = self.rt_fifo.len() + self.nrt_fifo.len();
        let outcome = if self.rt_fifo.len() >= self.config.rt_limit_r {
            self.counters.rt_blocked += 1;
            RtAdmission::Blocked
        } else if total < self.config.capacity_n {
            pdu.nodeb_enqueued_at = Some(now);
            self.rt_fifo.push_back(pdu);
            RtAdmission::Accepted
        } else {
            // Full buffer, RT cap not reached: push out from the NRT tail.
            // total == N and rt < R <= N imply the NRT queue is non-empty.
            self.nrt_fifo.pop_back().expect("nrt tail present at full buffer");
            self.counters.nrt_pushed_out += 1;
            pdu.nodeb_enqueued_at = Some(now);
            self.rt_fifo.push_back(pdu);
            RtAdmission::AcceptedWithPushOut
        };
        self.assert_invariants();
        outcome
    }

    /// Admit an NRT PDU, drop-tail at a full buffer.
    pub fn enqueue_nrt(&mut self, mut pdu: Pdu, now: SimTime) -> NrtAdmission {
        debug_assert_eq!(pdu.flow, FlowClass::Nrt);
        self.counters.nrt_arrivals += 1;
        let total = self.rt_fifo.len() + self.nrt_fifo.len();
        let outcome = if total >= self.config.capacity_n {
            self.counters.nrt_dropped_tail += 1;
            NrtAdmission::DroppedTail
        } else {
            pdu.nodeb_enqueued_at = Some(now);
            self.nrt_fifo.push_back(pdu);
            NrtAdmission::Accepted
        };
        self.assert_invariants();
        outcome
    }

    /// Remove and return head PDUs for one transport block: all queued RT
    /// first, then NRT, stopping before the block would exceed `max_bits`.
    /// PDUs are never fragmented; a budget below one PDU returns nothing.
    pub fn dequeue_up_to(&mut self, max_bits: u32) -> Vec<Pdu> {
        let mut out = Vec::new();
        let mut used: u32 = 0;
        loop {
            let next_bits = match self.rt_fifo.front().or_else(|| self.nrt_fifo.front()) {
                Some(pdu) => pdu.size_bits,
                None => break,
            };
            if used + next_bits > max_bits {
                break;
            }
            let pdu = self
                .rt_fifo
                .pop_front()
                .or_else(|| self.nrt_fifo.pop_front())
                .expect("front checked above");
            used += pdu.size_bits;
            out.push(pdu);
        }
        self.assert_invariants();
        out
    }

    /// Drain everything still queued; end-of-run accounting only.
    pub fn drain_remaining(&mut self) -> Vec<Pdu> {
        let mut out: Vec<Pdu> = self.rt_fifo.drain(..).collect();
        out.extend(self.nrt_fifo.drain(..));
        out
    }

    fn assert_invariants(&self) {
        assert!(
            self.rt_fifo.len() <= self.config.rt_limit_r,
            "rt occupancy {} exceeds R={}",
            self.rt_fifo.len(),
            self.config.rt_limit_r
        );
        assert!(
            self.rt_fifo.len() + self.nrt_fifo.len() <= self.config.capacity_n,
            "total occupancy {} exceeds N={}",
            self.rt_fifo.len() + self.nrt_fifo.len(),
            self.config.capacity_n
        );
    }
}
