//! RNC side: RLC segmentation into MAC-d PDUs, per-flow pending queues and
//! framed Iub transfer.
//!
//! RT PDUs leave at every frame boundary regardless of credit state. NRT
//! PDUs spend credits from the active grant; a fresh grant replaces any
//! unused remainder (credits do not accumulate across intervals), and the
//! remainder of an interval's credits is spread evenly over its frames
//! unless burst dispatch is configured. RNC queues are unbounded and
//! lossless; backlog under a stopped grant is a metric, not a loss.

use std::collections::VecDeque;

use crate::flow_control::CapacityGrant;
use crate::pdu::{FlowClass, Pdu, SDU_SIZE_BITS};
use crate::time::SimTime;
use crate::traffic::Packet;

/// How NRT credits are spent within a grant interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchMode {
    /// Up to ceil(remaining / frames-left) per frame.
    Spread,
    /// Everything the grant allows in the first frame that has traffic.
    Burst,
}

/// Whether NRT transfer is governed by credits at all; the original scheme
/// runs without flow control and forwards everything each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreditMode {
    Granted,
    Uncapped,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RncCounters {
    pub rt_segmented: u64,
    pub nrt_segmented: u64,
    pub rt_transferred: u64,
    pub nrt_transferred: u64,
    pub stale_grants_ignored: u64,
}

/// Split a packet into 336-bit PDUs: ceil(size / 320) SDUs, the last one
/// zero-padded, each carrying a 16-bit header. Ids are consecutive from
/// `first_id` and the PDUs inherit the packet's flow and RNC arrival time.
pub fn segment_packet(packet: &Packet, first_id: u64) -> Vec<Pdu> {
    assert!(packet.size_bits > 0, "cannot segment an empty packet");
    let n = packet.size_bits.div_ceil(SDU_SIZE_BITS) as u64;
    (0..n)
        .map(|k| Pdu::new(first_id + k, packet.flow, packet.id, packet.rnc_arrival_at))
        .collect()
}

#[derive(Debug)]
pub struct RncState {
    rt_pending: VecDeque<Pdu>,
    nrt_pending: VecDeque<Pdu>,
    active_grant: Option<CapacityGrant>,
    grant_pdus_remaining: u64,
    frames_left_in_grant: u64,
    dispatched_in_grant: u64,
    rt_next_id: u64,
    nrt_next_id: u64,
    credit_mode: CreditMode,
    dispatch_mode: DispatchMode,
    frames_per_interval: u64,
    pub counters: RncCounters,
}

impl RncState {
    pub fn new(credit_mode: CreditMode, dispatch_mode: DispatchMode, frames_per_interval: u64) -> Self {
        RncState {
            rt_pending: VecDeque::new(),
            nrt_pending: VecDeque::new(),
            active_grant: None,
            grant_pdus_remaining: 0,
            frames_left_in_grant: 0,
            dispatched_in_grant: 0,
            rt_next_id: 0,
            nrt_next_id: 0,
            credit_mode,
            dispatch_mode,
            frames_per_interval: frames_per_interval.max(1),
            counters: RncCounters::default(),
        }
    }

    /// Segment an arriving packet and queue its PDUs on the flow's pending
    /// queue.
    pub fn accept_packet(&mut self, packet: &Packet) {
        let (next_id, counter) = match packet.flow {
            FlowClass::Rt => (&mut self.rt_next_id, &mut self.counters.rt_segmented),
            FlowClass::Nrt => (&mut self.nrt_next_id, &mut self.counters.nrt_segmented),
        };
        let pdus = segment_packet(packet, *next_id);
        *next_id += pdus.len() as u64;
        *counter += pdus.len() as u64;
        match packet.flow {
            FlowClass::Rt => self.rt_pending.extend(pdus),
            FlowClass::Nrt => self.nrt_pending.extend(pdus),
        }
    }

    /// Install a newly arrived grant. The newest grant wins outright; a
    /// grant older than the active one is ignored and counted.
    pub fn on_grant(&mut self, grant: CapacityGrant, now: SimTime) {
        assert!(
            now >= grant.effective_at,
            "grant observed before its effective time"
        );
        if let Some(active) = &self.active_grant {
            if grant.effective_at < active.effective_at {
                self.counters.stale_grants_ignored += 1;
                return;
            }
        }
        self.grant_pdus_remaining = grant.max_pdus;
        self.frames_left_in_grant = self.frames_per_interval;
        self.dispatched_in_grant = 0;
        self.active_grant = Some(grant);
    }

    /// One HS-DSCH frame boundary: dispatch all pending RT PDUs, then NRT
    /// up to the per-frame share of the remaining credits.
    pub fn transfer_tick(&mut self, _now: SimTime) -> Vec<Pdu> {
        let mut out: Vec<Pdu> = self.rt_pending.drain(..).collect();
        self.counters.rt_transferred += out.len() as u64;

        let nrt_quota = match self.credit_mode {
            CreditMode::Uncapped => self.nrt_pending.len() as u64,
            CreditMode::Granted => {
                let per_frame = match self.dispatch_mode {
                    DispatchMode::Burst => self.grant_pdus_remaining,
                    DispatchMode::Spread => {
                        let frames = self.frames_left_in_grant.max(1);
                        self.grant_pdus_remaining.div_ceil(frames)
                    }
                };
                per_frame.min(self.grant_pdus_remaining)
            }
        };
        let take = nrt_quota.min(self.nrt_pending.len() as u64);
        for _ in 0..take {
            out.push(self.nrt_pending.pop_front().expect("pending checked"));
        }
        self.counters.nrt_transferred += take;

        if self.credit_mode == CreditMode::Granted {
            self.grant_pdus_remaining -= take;
            self.dispatched_in_grant += take;
            if let Some(g) = &self.active_grant {
                assert!(
                    self.dispatched_in_grant <= g.max_pdus,
                    "NRT dispatch exceeded the grant"
                );
            }
            self.frames_left_in_grant = self.frames_left_in_grant.saturating_sub(1);
        }
        out
    }

    pub fn nrt_backlog(&self) -> usize {
        self.nrt_pending.len()
    }

    pub fn grant_pdus_remaining(&self) -> u64 {
        self.grant_pdus_remaining
    }

    pub fn rt_backlog(&self) -> usize {
        self.rt_pending.len()
    }
}
