//! Node B side of the Iub credit loop.
//!
//! Every TTI the total buffer occupancy feeds an exponentially weighted
//! moving average; at each grant interval the average picks one of three
//! admitted NRT rates (full, reduced by the factor C, or stopped) against
//! the thresholds L and H, and the rate is converted into a PDU credit
//! grant that reaches the RNC one Iub latency later.
//!
//! Grant sizes are generally fractional; the remainder is carried in an
//! accumulator so the long-run granted rate equals the admitted rate
//! exactly instead of losing up to one PDU per interval to truncation.

use crate::time::SimTime;

#[derive(Debug, Clone)]
pub struct FlowControlParams {
    /// EWMA weight, 0 < w_q <= 1.
    pub w_q: f64,
    /// Rate-reduction factor, 0 < C < 1.
    pub c_factor: f64,
    /// Fully admitted NRT PDU rate in bits/second (PDU bits, header included).
    pub lambda_nrt_bps: f64,
    pub pdu_size_bits: u32,
    /// HS-DSCH frame length.
    pub tti_rlc: SimTime,
    pub grant_interval: SimTime,
    pub iub_latency: SimTime,
    pub pdu_transfer_latency: SimTime,
}

impl FlowControlParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.w_q > 0.0 && self.w_q <= 1.0) {
            return Err(format!("w_q must be in (0, 1], got {}", self.w_q));
        }
        if !(self.c_factor > 0.0 && self.c_factor < 1.0) {
            return Err(format!("c_factor must be in (0, 1), got {}", self.c_factor));
        }
        if self.lambda_nrt_bps < 0.0 {
            return Err(format!("lambda_nrt_bps must be >= 0, got {}", self.lambda_nrt_bps));
        }
        if self.tti_rlc.is_zero() || self.grant_interval.is_zero() {
            return Err("frame length and grant interval must be positive".into());
        }
        Ok(())
    }
}

/// Default grant allocation interval: Iub signalling latency plus PDU
/// transfer latency plus one HS-DSCH frame.
pub fn grant_interval_default(
    iub_latency: SimTime,
    pdu_transfer_latency: SimTime,
    tti_rlc: SimTime,
) -> SimTime {
    iub_latency + pdu_transfer_latency + tti_rlc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateLevel {
    Full,
    Reduced,
    Stopped,
}

impl RateLevel {
    pub fn label(self) -> &'static str {
        match self {
            RateLevel::Full => "full",
            RateLevel::Reduced => "reduced",
            RateLevel::Stopped => "stopped",
        }
    }
}

/// Credit message sent to the RNC: how many NRT PDUs may be sent over the
/// next interval, visible there only after the Iub latency.
#[derive(Debug, Clone, Copy)]
pub struct CapacityGrant {
    pub max_pdus: u64,
    pub issued_at: SimTime,
    pub effective_at: SimTime,
    pub valid_for: SimTime,
}

#[derive(Debug, Clone)]
pub struct FlowControlState {
    /// EWMA of total queued PDUs (RT + NRT), real-valued.
    pub aveq: f64,
    pub current_lambda_bps: f64,
    pub level: RateLevel,
    /// Fractional PDU credit carried between grants, in [0, 1).
    pub credit_fraction: f64,
}

impl FlowControlState {
    pub fn new(params: &FlowControlParams) -> Self {
        FlowControlState {
            aveq: 0.0,
            current_lambda_bps: params.lambda_nrt_bps,
            level: RateLevel::Full,
            credit_fraction: 0.0,
        }
    }

    /// EWMA update, once per TTI with the instantaneous total occupancy.
    pub fn update_aveq(&mut self, params: &FlowControlParams, q_tti: usize) -> f64 {
        self.aveq = params.w_q * q_tti as f64 + (1.0 - params.w_q) * self.aveq;
        self.aveq
    }

    /// Pick the admitted NRT rate from the current average. Thresholds
    /// trigger strictly above: aveq <= L keeps the full rate, aveq <= H
    /// keeps the reduced rate.
    pub fn select_rate(&mut self, params: &FlowControlParams, lower_l: usize, upper_h: usize) -> f64 {
        let (lambda, level) = if self.aveq <= lower_l as f64 {
            (params.lambda_nrt_bps, RateLevel::Full)
        } else if self.aveq <= upper_h as f64 {
            (params.c_factor * params.lambda_nrt_bps, RateLevel::Reduced)
        } else {
            (0.0, RateLevel::Stopped)
        };
        self.current_lambda_bps = lambda;
        self.level = level;
        lambda
    }

    /// Convert the admitted rate into whole-PDU credits for one grant
    /// interval, carrying the fractional remainder forward.
    pub fn compute_grant(&mut self, params: &FlowControlParams, now: SimTime) -> CapacityGrant {
        let ideal_pdus = self.current_lambda_bps * params.grant_interval.as_nanos() as f64
            / (1e9 * f64::from(params.pdu_size_bits));
        let total = ideal_pdus + self.credit_fraction;
        let max_pdus = total.floor() as u64;
        self.credit_fraction = total - max_pdus as f64;
        CapacityGrant {
            max_pdus,
            issued_at: now,
            effective_at: now + params.iub_latency,
            valid_for: params.grant_interval,
        }
    }
}
