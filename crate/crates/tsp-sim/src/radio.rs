//! Air interface: mobility, path loss, correlated lognormal shadowing,
//! delayed channel quality, AMC selection and stop-and-wait HARQ with soft
//! combining.
//!
//! The SINR constant bundle folds transmit power and every unmodelled gain
//! and interference term into a single configurable noise-and-interference
//! level, so absolute radio numbers are a calibration knob rather than a
//! prediction. Scheme selection uses the SINR reported three TTIs ago;
//! success is decided against the SINR of the current instant, which is
//! exactly where the CQI staleness bites and HARQ earns its keep.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::pdu::Pdu;
use crate::time::SimTime;
use crate::tsp_buffer::TspBuffer;

/// Free-space-plus-clutter path loss: 148 + 40*log10(d_km) dB.
pub fn path_loss_db(distance_m: f64) -> f64 {
    assert!(distance_m > 0.0, "path loss needs a positive distance");
    148.0 + 40.0 * (distance_m / 1000.0).log10()
}

/// One modulation-and-coding scheme. Transport block size scales with the
/// number of channelization codes: n_codes * 480 symbols/TTI.
#[derive(Debug, Clone)]
pub struct AmcScheme {
    pub name: &'static str,
    pub bits_per_symbol: u32,
    pub code_rate_num: u32,
    pub code_rate_den: u32,
    pub sinr_threshold_db: f64,
}

impl AmcScheme {
    pub fn tbs_bits(&self, n_codes: u32) -> u32 {
        n_codes * 480 * self.bits_per_symbol * self.code_rate_num / self.code_rate_den
    }
}

/// The six default schemes. QPSK 1/2 and 16QAM 1/4 carry the same block
/// size, so the table is validated for strictly increasing thresholds and
/// non-decreasing block sizes.
pub fn default_schemes(thresholds_db: &[f64; 6]) -> Vec<AmcScheme> {
    vec![
        AmcScheme { name: "qpsk-1/4", bits_per_symbol: 2, code_rate_num: 1, code_rate_den: 4, sinr_threshold_db: thresholds_db[0] },
        AmcScheme { name: "qpsk-1/2", bits_per_symbol: 2, code_rate_num: 1, code_rate_den: 2, sinr_threshold_db: thresholds_db[1] },
        AmcScheme { name: "16qam-1/4", bits_per_symbol: 4, code_rate_num: 1, code_rate_den: 4, sinr_threshold_db: thresholds_db[2] },
        AmcScheme { name: "qpsk-3/4", bits_per_symbol: 2, code_rate_num: 3, code_rate_den: 4, sinr_threshold_db: thresholds_db[3] },
        AmcScheme { name: "16qam-1/2", bits_per_symbol: 4, code_rate_num: 1, code_rate_den: 2, sinr_threshold_db: thresholds_db[4] },
        AmcScheme { name: "16qam-3/4", bits_per_symbol: 4, code_rate_num: 3, code_rate_den: 4, sinr_threshold_db: thresholds_db[5] },
    ]
}

pub const DEFAULT_AMC_THRESHOLDS_DB: [f64; 6] = [-2.0, 1.0, 3.0, 4.0, 7.0, 10.0];

pub fn validate_schemes(schemes: &[AmcScheme], n_codes: u32) -> Result<(), String> {
    if schemes.is_empty() {
        return Err("at least one AMC scheme is required".into());
    }
    for w in schemes.windows(2) {
        if w[1].sinr_threshold_db <= w[0].sinr_threshold_db {
            return Err(format!(
                "AMC thresholds must be strictly increasing ({} then {})",
                w[0].sinr_threshold_db, w[1].sinr_threshold_db
            ));
        }
        if w[1].tbs_bits(n_codes) < w[0].tbs_bits(n_codes) {
            return Err(format!(
                "AMC block sizes must be non-decreasing along thresholds ({} then {})",
                w[0].tbs_bits(n_codes),
                w[1].tbs_bits(n_codes)
            ));
        }
    }
    Ok(())
}

/// Highest-block-size scheme whose threshold the reported SINR meets
/// (boundary inclusive); `None` when even the most robust scheme is out of
/// reach and the TTI stays idle.
pub fn select_amc<'a>(schemes: &'a [AmcScheme], reported_sinr_db: f64, n_codes: u32) -> Option<&'a AmcScheme> {
    select_amc_idx(schemes, reported_sinr_db, n_codes).map(|i| &schemes[i])
}

fn select_amc_idx(schemes: &[AmcScheme], reported_sinr_db: f64, n_codes: u32) -> Option<usize> {
    let mut best: Option<(usize, u32)> = None;
    for (i, s) in schemes.iter().enumerate() {
        if reported_sinr_db < s.sinr_threshold_db {
            continue;
        }
        let tbs = s.tbs_bits(n_codes);
        // Ties go to the later (higher-threshold) scheme.
        if best.map_or(true, |(_, b)| tbs >= b) {
            best = Some((i, tbs));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone)]
pub struct RadioParams {
    pub hs_pdsch_power_w: f64,
    /// Single calibration constant bundling noise, interference and every
    /// unmodelled gain, in dBm.
    pub noise_interference_dbm: f64,
    pub shadow_sigma_db: f64,
    pub shadow_rho: f64,
    pub shadow_update_interval: SimTime,
    pub velocity_mps: f64,
    pub start_distance_m: f64,
    pub cell_radius_m: f64,
    pub cqi_latency_ttis: usize,
    pub n_codes: u32,
    pub max_retx: u32,
    pub tti: SimTime,
    pub amc_thresholds_db: [f64; 6],
}

impl RadioParams {
    pub fn tx_power_dbm(&self) -> f64 {
        10.0 * (self.hs_pdsch_power_w * 1000.0).log10()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.hs_pdsch_power_w <= 0.0 {
            return Err("hs_pdsch power must be positive".into());
        }
        if self.start_distance_m <= 0.0 || self.start_distance_m > self.cell_radius_m {
            return Err(format!(
                "start distance {} must lie inside the cell radius {}",
                self.start_distance_m, self.cell_radius_m
            ));
        }
        if !(0.0..1.0).contains(&self.shadow_rho) {
            return Err(format!("shadow correlation must be in [0, 1), got {}", self.shadow_rho));
        }
        if self.shadow_sigma_db < 0.0 {
            return Err("shadow sigma must be non-negative".into());
        }
        if self.max_retx == 0 {
            return Err("max_retx must be at least 1".into());
        }
        if self.shadow_update_interval.is_zero() || self.tti.is_zero() {
            return Err("shadow update interval and tti must be positive".into());
        }
        validate_schemes(&default_schemes(&self.amc_thresholds_db), self.n_codes)
    }
}

/// Per-TTI channel state: distance, shadowing and the reported-SINR delay
/// line.
#[derive(Debug)]
pub struct Channel {
    params: RadioParams,
    rng: ChaCha8Rng,
    distance_m: f64,
    shadow_db: f64,
    ttis_per_shadow_update: u64,
    tti_index: u64,
    sinr_history: Vec<f64>,
}

impl Channel {
    pub fn new(params: RadioParams, mut rng: ChaCha8Rng) -> Self {
        // Stationary start: shadow ~ N(0, sigma^2).
        let shadow_db = if params.shadow_sigma_db > 0.0 {
            Normal::new(0.0, params.shadow_sigma_db).unwrap().sample(&mut rng)
        } else {
            0.0
        };
        let ttis_per_shadow_update =
            (params.shadow_update_interval.as_nanos() / params.tti.as_nanos()).max(1);
        Channel {
            distance_m: params.start_distance_m,
            shadow_db,
            ttis_per_shadow_update,
            tti_index: 0,
            sinr_history: Vec::new(),
            params,
            rng,
        }
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn distance_m(&self) -> f64 {
        self.distance_m
    }

    pub fn shadow_db(&self) -> f64 {
        self.shadow_db
    }

    /// Advance one TTI: move the UE, refresh shadowing on its own clock and
    /// record the SINR of this instant.
    pub fn step(&mut self) -> f64 {
        self.distance_m = (self.distance_m + self.params.velocity_mps * self.params.tti.as_secs_f64())
            .min(self.params.cell_radius_m);
        if self.tti_index > 0
            && self.tti_index % self.ttis_per_shadow_update == 0
            && self.params.shadow_sigma_db > 0.0
        {
            // AR(1) with coefficient rho; innovation variance sigma^2(1-rho^2)
            // keeps the process stationary at sigma.
            let rho = self.params.shadow_rho;
            let innovation_sigma = self.params.shadow_sigma_db * (1.0 - rho * rho).sqrt();
            let eps = Normal::new(0.0, innovation_sigma).unwrap().sample(&mut self.rng);
            self.shadow_db = rho * self.shadow_db + eps;
        }
        let sinr = self.params.tx_power_dbm()
            - path_loss_db(self.distance_m)
            - self.shadow_db
            - self.params.noise_interference_dbm;
        self.sinr_history.push(sinr);
        // Only the delay line depth is ever needed.
        if self.sinr_history.len() > self.params.cqi_latency_ttis + 1 {
            self.sinr_history.remove(0);
        }
        self.tti_index += 1;
        sinr
    }

    /// SINR reported `cqi_latency_ttis` ago; `None` until the delay line is
    /// full.
    pub fn reported_sinr_db(&self) -> Option<f64> {
        let lag = self.params.cqi_latency_ttis;
        if self.sinr_history.len() < lag + 1 {
            return None;
        }
        Some(self.sinr_history[self.sinr_history.len() - 1 - lag])
    }

    pub fn current_sinr_db(&self) -> Option<f64> {
        self.sinr_history.last().copied()
    }
}

/// Soft-combined effective SINR after `tx_count` transmissions of the same
/// block: N times the linear SINR of the first attempt.
pub fn combined_sinr_db(sinr_init_db: f64, tx_count: u32) -> f64 {
    10.0 * (f64::from(tx_count) * 10f64.powf(sinr_init_db / 10.0)).log10()
}

#[derive(Debug)]
pub struct HarqProcess {
    pub block: Vec<Pdu>,
    pub tx_count: u32,
    pub sinr_init_db: f64,
    pub scheme_idx: usize,
}

#[derive(Debug)]
pub enum TtiOutcome {
    Delivered(Vec<Pdu>),
    RetransmissionPending,
    BlockDiscarded(Vec<Pdu>),
    Idle,
}

/// One TTI of the transmitter: service a pending HARQ process first,
/// otherwise pick a scheme from the stale report and send a fresh block.
/// Newly dequeued PDUs are stamped with their first transmission time.
pub fn transmit_tti(
    channel: &Channel,
    schemes: &[AmcScheme],
    buffer: &mut TspBuffer,
    harq: &mut Option<HarqProcess>,
    now: SimTime,
) -> TtiOutcome {
    let actual = match channel.current_sinr_db() {
        Some(s) => s,
        None => return TtiOutcome::Idle,
    };

    if let Some(process) = harq.as_mut() {
        process.tx_count += 1;
        let threshold = schemes[process.scheme_idx].sinr_threshold_db;
        if combined_sinr_db(process.sinr_init_db, process.tx_count) >= threshold {
            let block = harq.take().expect("process present").block;
            return TtiOutcome::Delivered(block);
        }
        if process.tx_count >= channel.params.max_retx {
            let block = harq.take().expect("process present").block;
            return TtiOutcome::BlockDiscarded(block);
        }
        return TtiOutcome::RetransmissionPending;
    }

    let reported = match channel.reported_sinr_db() {
        Some(s) => s,
        None => return TtiOutcome::Idle,
    };
    let scheme_idx = match select_amc_idx(schemes, reported, channel.params.n_codes) {
        Some(i) => i,
        None => return TtiOutcome::Idle,
    };
    let tbs = schemes[scheme_idx].tbs_bits(channel.params.n_codes);
    let mut block = buffer.dequeue_up_to(tbs);
    if block.is_empty() {
        return TtiOutcome::Idle;
    }
    for pdu in &mut block {
        pdu.first_tx_at = Some(now);
    }
    if actual >= schemes[scheme_idx].sinr_threshold_db {
        return TtiOutcome::Delivered(block);
    }
    *harq = Some(HarqProcess {
        block,
        tx_count: 1,
        sinr_init_db: actual,
        scheme_idx,
    });
    TtiOutcome::RetransmissionPending
}
