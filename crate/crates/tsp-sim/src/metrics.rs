//! Run-level metrics with warm-up exclusion.
//!
//! Counters accumulate from time zero; the collector snapshots them when
//! the clock crosses the warm-up boundary and the report is built from the
//! differences, so warm-up events shape state but never the numbers.

use crate::rng::Digest;
use crate::tsp_buffer::TspVariant;

/// Raw engine-side counters (the buffer and RNC keep their own).
#[derive(Debug, Clone, Copy, Default)]
pub struct EngineCounters {
    pub rt_delivered: u64,
    pub nrt_delivered: u64,
    pub rt_delivered_bits: u64,
    pub nrt_delivered_bits: u64,
    pub rt_discarded_air: u64,
    pub nrt_discarded_air: u64,
    /// Sum over delivered RT PDUs of (first transmission - enqueue), seconds.
    pub rt_queue_delay_sum_s: f64,
    pub rt_queue_delay_samples: u64,
    /// Same, but to successful delivery.
    pub rt_delivery_delay_sum_s: f64,
    pub rt_delivery_delay_samples: u64,
    pub grants_full: u64,
    pub grants_reduced: u64,
    pub grants_stopped: u64,
    pub rnc_backlog_samples: u64,
    pub rnc_backlog_sum_pdus: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub variant: TspVariant,
    pub ftp_rate_kbps: f64,
    pub seed: u64,
    pub measured_time_s: f64,

    pub rt_arrivals: u64,
    pub rt_blocked: u64,
    pub nrt_arrivals: u64,
    pub nrt_dropped_tail: u64,
    pub nrt_pushed_out: u64,

    /// Blocked RT fraction at the Node B; absent when nothing arrived.
    pub rt_loss_prob: Option<f64>,
    /// Dropped-or-pushed-out NRT fraction at the Node B.
    pub nrt_loss_prob: Option<f64>,
    /// Mean queueing delay of delivered RT PDUs, enqueue to first
    /// transmission.
    pub rt_mean_delay_s: Option<f64>,
    /// Alternate delay to successful delivery.
    pub rt_mean_delivery_delay_s: Option<f64>,
    /// Delivered NRT bits (336 per PDU, header included) over measured time.
    pub nrt_throughput_bps: f64,

    pub rt_delivered_pdus: u64,
    pub nrt_delivered_pdus: u64,
    pub air_discarded_rt: u64,
    pub air_discarded_nrt: u64,
    pub rnc_backlog_mean_pdus: f64,
    pub grant_share_full: f64,
    pub grant_share_reduced: f64,
    pub grant_share_stopped: f64,
    pub voip_duty_cycle: f64,
    /// FNV over the generated packet sequence; equal digests across variants
    /// demonstrate traffic-stream isolation for paired comparisons.
    pub traffic_digest: u64,
}

impl MetricsReport {
    pub fn air_discards_total(&self) -> u64 {
        self.air_discarded_rt + self.air_discarded_nrt
    }

    /// Stable digest over every field; used for determinism checks.
    pub fn digest(&self) -> u64 {
        let mut d = Digest::new();
        d.write_u64(match self.variant {
            TspVariant::Original => 0,
            TspVariant::Enhanced => 1,
        });
        d.write_f64(self.ftp_rate_kbps);
        d.write_u64(self.seed);
        d.write_f64(self.measured_time_s);
        for v in [
            self.rt_arrivals,
            self.rt_blocked,
            self.nrt_arrivals,
            self.nrt_dropped_tail,
            self.nrt_pushed_out,
            self.rt_delivered_pdus,
            self.nrt_delivered_pdus,
            self.air_discarded_rt,
            self.air_discarded_nrt,
            self.traffic_digest,
        ] {
            d.write_u64(v);
        }
        for v in [
            self.rt_loss_prob.unwrap_or(-1.0),
            self.nrt_loss_prob.unwrap_or(-1.0),
            self.rt_mean_delay_s.unwrap_or(-1.0),
            self.rt_mean_delivery_delay_s.unwrap_or(-1.0),
            self.nrt_throughput_bps,
            self.rnc_backlog_mean_pdus,
            self.grant_share_full,
            self.grant_share_reduced,
            self.grant_share_stopped,
            self.voip_duty_cycle,
        ] {
            d.write_f64(v);
        }
        d.finish()
    }

    /// Human-readable summary block.
    pub fn summary(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{:.6}", x)).unwrap_or_else(|| "absent".into())
        }
        let mut s = String::new();
        s.push_str(&format!(
            "variant={} ftp_rate_kbps={:.0} seed={}\n",
            self.variant.label(),
            self.ftp_rate_kbps,
            self.seed
        ));
        s.push_str(&format!("  measured_time_s      = {:.3}\n", self.measured_time_s));
        s.push_str(&format!("  rt_loss_prob         = {}\n", opt(self.rt_loss_prob)));
        s.push_str(&format!("  nrt_loss_prob        = {}\n", opt(self.nrt_loss_prob)));
        s.push_str(&format!(
            "  rt_mean_delay_ms     = {}\n",
            opt(self.rt_mean_delay_s.map(|v| v * 1e3))
        ));
        s.push_str(&format!(
            "  nrt_throughput_kbps  = {:.2}\n",
            self.nrt_throughput_bps / 1e3
        ));
        s.push_str(&format!(
            "  rt/nrt delivered     = {} / {}\n",
            self.rt_delivered_pdus, self.nrt_delivered_pdus
        ));
        s.push_str(&format!(
            "  nodeb counters       = rt_arr {} blocked {} / nrt_arr {} dropped {} pushed_out {}\n",
            self.rt_arrivals, self.rt_blocked, self.nrt_arrivals, self.nrt_dropped_tail, self.nrt_pushed_out
        ));
        s.push_str(&format!(
            "  rnc_backlog_mean     = {:.2} pdus\n",
            self.rnc_backlog_mean_pdus
        ));
        s.push_str(&format!(
            "  air_discards         = rt {} nrt {}\n",
            self.air_discarded_rt, self.air_discarded_nrt
        ));
        s.push_str(&format!(
            "  grant_level_shares   = full {:.3} reduced {:.3} stopped {:.3}\n",
            self.grant_share_full, self.grant_share_reduced, self.grant_share_stopped
        ));
        s.push_str(&format!("  voip_duty_cycle      = {:.3}\n", self.voip_duty_cycle));
        s.push_str(&format!("  digest               = {:016x}\n", self.digest()));
        s
    }
}

/// Mean, sample standard deviation and 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub half_width_95: f64,
}

pub fn summarize(values: &[f64]) -> Option<ReplicationStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Some(ReplicationStats { n, mean, std: 0.0, half_width_95: 0.0 });
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    let std = var.sqrt();
    Some(ReplicationStats {
        n,
        mean,
        std,
        half_width_95: 1.96 * std / (n as f64).sqrt(),
    })
}
