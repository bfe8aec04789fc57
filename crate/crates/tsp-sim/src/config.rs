//! Scenario configuration and results serialization.
//!
//! Config grammar (line oriented):
//!
//! ```text
//! # full-line or trailing comment
//! [section]            # keys below get the `section.` prefix
//! key = value
//! other.key = value    # dotted keys work anywhere
//! list = 64, 128, 256  # lists are comma separated
//! ```
//!
//! Every key is optional; an empty file is the default scenario. Unknown
//! keys, type mismatches and violated invariants are rejected with the key
//! and line number. The full key set with defaults is what
//! [`Scenario::defaults_text`] prints and `load` accepts, so the two round
//! trip.
//!
//! Results go to CSV with a fixed column order:
//! `scenario,variant,ftp_rate_kbps,seed,rt_loss,nrt_loss,rt_mean_delay_ms,`
//! `nrt_throughput_kbps,rnc_backlog_mean_pdus,air_discards`.
//! Probabilities carry 6 decimals, rates 2, delays 3; absent values are
//! empty fields. Identical inputs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::engine::SimConfig;
use crate::flow_control::{grant_interval_default, FlowControlParams};
use crate::metrics::MetricsReport;
use crate::pdu::{PDU_SIZE_BITS, SDU_SIZE_BITS};
use crate::radio::{RadioParams, DEFAULT_AMC_THRESHOLDS_DB};
use crate::rlc_rnc::DispatchMode;
use crate::time::SimTime;
use crate::traffic::{FtpParams, FtpSizeModel, VoipParams};
use crate::tsp_buffer::{pdus_from_bytes, TspBufferConfig, TspVariant};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: cannot parse `{key}`: {msg}")]
    Parse { key: String, line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: expected `key = value` or `[section]`")]
    Malformed { line: usize },
    #[error("`{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A fully resolved experiment: the cartesian product of variants, FTP
/// rates and seeds over one shared parameter set.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub variants: Vec<TspVariant>,
    pub rates_kbps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub duration: SimTime,
    pub warmup: SimTime,
    pub tti: SimTime,
    pub cn_delay: SimTime,
    pub buffer_capacity_n: usize,
    pub buffer_rt_limit_r: usize,
    pub buffer_lower_l: usize,
    pub buffer_upper_h: usize,
    pub w_q: f64,
    pub c_factor: f64,
    pub iub_latency: SimTime,
    pub pdu_transfer_latency: SimTime,
    pub hs_dsch_frame: SimTime,
    /// Explicit grant interval; when absent it derives from the latencies
    /// plus one frame.
    pub grant_interval: Option<SimTime>,
    pub nrt_dispatch: DispatchMode,
    pub voip_packet_bits: u32,
    pub voip_rate_kbps: f64,
    pub voip_mean_phase_s: f64,
    pub ftp_mean_packet_bytes: u32,
    pub ftp_size_model: FtpSizeModel,
    pub radio_hs_pdsch_power_w: f64,
    pub radio_noise_interference_dbm: f64,
    pub radio_shadow_sigma_db: f64,
    pub radio_shadow_rho: f64,
    pub radio_shadow_update_interval_ms: f64,
    pub radio_velocity_kmh: f64,
    pub radio_start_distance_m: f64,
    pub radio_cell_radius_m: f64,
    pub radio_cqi_latency_ttis: usize,
    pub radio_max_retx: u32,
    pub amc_count: usize,
    pub amc_n_codes: u32,
    pub amc_thresholds_db: [f64; 6],
}

/// Calibrated default for the bundled noise-and-interference constant; see
/// the README section on radio calibration.
pub const DEFAULT_NOISE_INTERFERENCE_DBM: f64 = -130.0;

/// Alternative calibration documented for the outage regime: with this
/// constant the default mobility trace yields a VoIP blocking probability
/// of about 0.08, flat across FTP rates and identical between variants.
pub const OUTAGE_CALIBRATION_NOISE_DBM: f64 = -111.0;

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "defaults".into(),
            variants: vec![TspVariant::Original, TspVariant::Enhanced],
            rates_kbps: vec![64.0, 128.0, 256.0, 512.0, 1024.0],
            seeds: vec![1, 2, 3, 4, 5],
            duration: SimTime::from_secs(400),
            warmup: SimTime::from_secs(10),
            tti: SimTime::from_millis(2),
            cn_delay: SimTime::from_millis(50),
            buffer_capacity_n: 300,
            buffer_rt_limit_r: 20,
            buffer_lower_l: 120,
            buffer_upper_h: 240,
            w_q: 0.7,
            c_factor: 0.5,
            iub_latency: SimTime::from_millis(20),
            pdu_transfer_latency: SimTime::from_millis(20),
            hs_dsch_frame: SimTime::from_millis(10),
            grant_interval: None,
            nrt_dispatch: DispatchMode::Spread,
            voip_packet_bits: 304,
            voip_rate_kbps: 15.2,
            voip_mean_phase_s: 3.0,
            ftp_mean_packet_bytes: 480,
            ftp_size_model: FtpSizeModel::Fixed,
            radio_hs_pdsch_power_w: 7.0,
            radio_noise_interference_dbm: DEFAULT_NOISE_INTERFERENCE_DBM,
            radio_shadow_sigma_db: 8.0,
            radio_shadow_rho: 0.5,
            radio_shadow_update_interval_ms: 500.0,
            radio_velocity_kmh: 3.0,
            radio_start_distance_m: 600.0,
            radio_cell_radius_m: 1000.0,
            radio_cqi_latency_ttis: 3,
            radio_max_retx: 4,
            amc_count: 6,
            amc_n_codes: 2,
            amc_thresholds_db: DEFAULT_AMC_THRESHOLDS_DB,
        }
    }
}

impl Scenario {
    pub fn effective_grant_interval(&self) -> SimTime {
        self.grant_interval.unwrap_or_else(|| {
            grant_interval_default(self.iub_latency, self.pdu_transfer_latency, self.hs_dsch_frame)
        })
    }

    /// Assemble the engine configuration for one run of the grid. The flow
    /// control rate is the PDU-level rate of the offered FTP stream, i.e.
    /// the offered rate scaled by the 336/320 segmentation overhead, so
    /// full-rate grants track the PDU arrival stream exactly.
    pub fn sim_config(&self, variant: TspVariant, rate_kbps: f64, seed: u64) -> SimConfig {
        let grant_interval = self.effective_grant_interval();
        SimConfig {
            duration: self.duration,
            warmup: self.warmup,
            tti: self.tti,
            seed,
            cn_delay: self.cn_delay,
            buffer: TspBufferConfig {
                capacity_n: self.buffer_capacity_n,
                rt_limit_r: self.buffer_rt_limit_r,
                lower_l: self.buffer_lower_l,
                upper_h: self.buffer_upper_h,
                variant,
            },
            fc: FlowControlParams {
                w_q: self.w_q,
                c_factor: self.c_factor,
                lambda_nrt_bps: rate_kbps * 1e3 * f64::from(PDU_SIZE_BITS) / f64::from(SDU_SIZE_BITS),
                pdu_size_bits: PDU_SIZE_BITS,
                tti_rlc: self.hs_dsch_frame,
                grant_interval,
                iub_latency: self.iub_latency,
                pdu_transfer_latency: self.pdu_transfer_latency,
            },
            voip: VoipParams {
                packet_bits: self.voip_packet_bits,
                rate_bps: self.voip_rate_kbps * 1e3,
                mean_phase: SimTime::from_secs_f64(self.voip_mean_phase_s),
            },
            ftp: FtpParams {
                mean_packet_bytes: self.ftp_mean_packet_bytes,
                offered_rate_bps: rate_kbps * 1e3,
                size_model: self.ftp_size_model,
                tti: self.tti,
            },
            radio: RadioParams {
                hs_pdsch_power_w: self.radio_hs_pdsch_power_w,
                noise_interference_dbm: self.radio_noise_interference_dbm,
                shadow_sigma_db: self.radio_shadow_sigma_db,
                shadow_rho: self.radio_shadow_rho,
                shadow_update_interval: SimTime::from_millis_f64(self.radio_shadow_update_interval_ms),
                velocity_mps: self.radio_velocity_kmh * 1000.0 / 3600.0,
                start_distance_m: self.radio_start_distance_m,
                cell_radius_m: self.radio_cell_radius_m,
                cqi_latency_ttis: self.radio_cqi_latency_ttis,
                n_codes: self.amc_n_codes,
                max_retx: self.radio_max_retx,
                tti: self.tti,
                amc_thresholds_db: self.amc_thresholds_db,
            },
            dispatch_mode: self.nrt_dispatch,
        }
    }

    /// Validate the whole grid before anything runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, msg: String| ConfigError::Invalid { key: key.into(), msg };
        if self.variants.is_empty() {
            return Err(invalid("sim.variants", "at least one variant".into()));
        }
        if self.rates_kbps.is_empty() {
            return Err(invalid("ftp.rates_kbps", "at least one rate".into()));
        }
        if self.seeds.is_empty() {
            return Err(invalid("sim.seeds", "at least one seed".into()));
        }
        if self.amc_count != 6 || self.amc_thresholds_db.len() != self.amc_count {
            return Err(invalid(
                "amc.count",
                format!("the scheme table has 6 entries, got {}", self.amc_count),
            ));
        }
        for &variant in &self.variants {
            for &rate in &self.rates_kbps {
                let cfg = self.sim_config(variant, rate, self.seeds[0]);
                cfg.validate().map_err(|msg| ConfigError::Invalid {
                    key: format!("{}@{}kbps", variant.label(), rate),
                    msg,
                })?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Scenario::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
        let mut scenario = Scenario::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(stripped) = line.strip_prefix('[') {
                let name = stripped.strip_suffix(']').ok_or(ConfigError::Malformed { line: line_no })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed { line: line_no })?;
            let key = key.trim();
            let value = value.trim();
            let full_key = if key.contains('.') || section.is_empty() {
                key.to_string()
            } else {
                format!("{}.{}", section, key)
            };
            scenario.apply(&full_key, value, line_no)?;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let parse_err = |msg: String| ConfigError::Parse { key: key.into(), line, msg };
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| e.to_string())
        }
        fn list(v: &str) -> Vec<&str> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
        }

        match key {
            "scenario.name" => self.name = value.to_string(),
            "sim.duration_s" => self.duration = SimTime::from_secs_f64(num(value).map_err(parse_err)?),
            "sim.warmup_s" => self.warmup = SimTime::from_secs_f64(num(value).map_err(parse_err)?),
            "sim.tti_ms" => self.tti = SimTime::from_millis_f64(num(value).map_err(parse_err)?),
            "sim.cn_delay_ms" => self.cn_delay = SimTime::from_millis_f64(num(value).map_err(parse_err)?),
            "sim.seeds" => {
                let mut seeds = Vec::new();
                for item in list(value) {
                    seeds.push(num::<u64>(item).map_err(&parse_err)?);
                }
                self.seeds = seeds;
            }
            "sim.variants" => {
                let mut variants = Vec::new();
                for item in list(value) {
                    variants.push(match item {
                        "original" => TspVariant::Original,
                        "enhanced" => TspVariant::Enhanced,
                        other => {
                            return Err(parse_err(format!(
                                "expected `original` or `enhanced`, got `{}`",
                                other
                            )))
                        }
                    });
                }
                self.variants = variants;
            }
            "buffer.capacity_n_pdus" => self.buffer_capacity_n = num(value).map_err(parse_err)?,
            "buffer.rt_limit_r_pdus" => self.buffer_rt_limit_r = num(value).map_err(parse_err)?,
            "buffer.lower_l_pdus" => self.buffer_lower_l = num(value).map_err(parse_err)?,
            "buffer.upper_h_pdus" => self.buffer_upper_h = num(value).map_err(parse_err)?,
            "buffer.capacity_n_bytes" => self.buffer_capacity_n = pdus_from_bytes(num(value).map_err(parse_err)?),
            "buffer.rt_limit_r_bytes" => self.buffer_rt_limit_r = pdus_from_bytes(num(value).map_err(parse_err)?),
            "buffer.lower_l_bytes" => self.buffer_lower_l = pdus_from_bytes(num(value).map_err(parse_err)?),
            "buffer.upper_h_bytes" => self.buffer_upper_h = pdus_from_bytes(num(value).map_err(parse_err)?),
            "flow_control.w_q" => self.w_q = num(value).map_err(parse_err)?,
            "flow_control.c_factor" => self.c_factor = num(value).map_err(parse_err)?,
            "flow_control.iub_latency_ms" => {
                self.iub_latency = SimTime::from_millis_f64(num(value).map_err(parse_err)?)
            }
            "flow_control.pdu_transfer_latency_ms" => {
                self.pdu_transfer_latency = SimTime::from_millis_f64(num(value).map_err(parse_err)?)
            }
            "flow_control.hs_dsch_frame_ms" => {
                self.hs_dsch_frame = SimTime::from_millis_f64(num(value).map_err(parse_err)?)
            }
            "flow_control.grant_interval_ms" => {
                self.grant_interval = Some(SimTime::from_millis_f64(num(value).map_err(parse_err)?))
            }
            "flow_control.nrt_dispatch" => {
                self.nrt_dispatch = match value {
                    "spread" => DispatchMode::Spread,
                    "burst" => DispatchMode::Burst,
                    other => return Err(parse_err(format!("expected `spread` or `burst`, got `{}`", other))),
                }
            }
            "voip.packet_bits" => self.voip_packet_bits = num(value).map_err(parse_err)?,
            "voip.rate_kbps" => self.voip_rate_kbps = num(value).map_err(parse_err)?,
            "voip.mean_phase_s" => self.voip_mean_phase_s = num(value).map_err(parse_err)?,
            "ftp.mean_packet_bytes" => self.ftp_mean_packet_bytes = num(value).map_err(parse_err)?,
            "ftp.rates_kbps" => {
                let mut rates = Vec::new();
                for item in list(value) {
                    rates.push(num::<f64>(item).map_err(&parse_err)?);
                }
                self.rates_kbps = rates;
            }
            "ftp.size_model" => {
                self.ftp_size_model = match value {
                    "fixed" => FtpSizeModel::Fixed,
                    "geometric" => FtpSizeModel::Geometric,
                    other => return Err(parse_err(format!("expected `fixed` or `geometric`, got `{}`", other))),
                }
            }
            "radio.hs_pdsch_power_w" => self.radio_hs_pdsch_power_w = num(value).map_err(parse_err)?,
            "radio.noise_interference_dbm" => {
                self.radio_noise_interference_dbm = num(value).map_err(parse_err)?
            }
            "radio.shadow_sigma_db" => self.radio_shadow_sigma_db = num(value).map_err(parse_err)?,
            "radio.shadow_rho" => self.radio_shadow_rho = num(value).map_err(parse_err)?,
            "radio.shadow_update_interval_ms" => {
                self.radio_shadow_update_interval_ms = num(value).map_err(parse_err)?
            }
            "radio.velocity_kmh" => self.radio_velocity_kmh = num(value).map_err(parse_err)?,
            "radio.start_distance_m" => self.radio_start_distance_m = num(value).map_err(parse_err)?,
            "radio.cell_radius_m" => self.radio_cell_radius_m = num(value).map_err(parse_err)?,
            "radio.cqi_latency_ttis" => self.radio_cqi_latency_ttis = num(value).map_err(parse_err)?,
            "radio.max_retx" => self.radio_max_retx = num(value).map_err(parse_err)?,
            "amc.count" => self.amc_count = num(value).map_err(parse_err)?,
            "amc.n_codes" => self.amc_n_codes = num(value).map_err(parse_err)?,
            "amc.thresholds_db" => {
                let items = list(value);
                if items.len() != 6 {
                    return Err(parse_err(format!("expected 6 thresholds, got {}", items.len())));
                }
                let mut thresholds = [0.0; 6];
                for (slot, item) in thresholds.iter_mut().zip(items) {
                    *slot = num::<f64>(item).map_err(&parse_err)?;
                }
                self.amc_thresholds_db = thresholds;
            }
            _ => return Err(ConfigError::UnknownKey { key: key.into(), line }),
        }
        Ok(())
    }

    /// The effective configuration in the config grammar, annotated and
    /// loadable; `load(defaults_text())` reproduces the same parameters.
    pub fn defaults_text(&self) -> String {
        let mut s = String::new();
        let variants = self
            .variants
            .iter()
            .map(|v| v.label())
            .collect::<Vec<_>>()
            .join(",");
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let rates = self.rates_kbps.iter().map(|r| format!("{}", r)).collect::<Vec<_>>().join(",");
        let thresholds = self
            .amc_thresholds_db
            .iter()
            .map(|t| format!("{}", t))
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(s, "scenario.name = {}", self.name);
        let _ = writeln!(s, "sim.duration_s = {}", self.duration.as_secs_f64());
        let _ = writeln!(s, "sim.warmup_s = {}  # excluded from every metric", self.warmup.as_secs_f64());
        let _ = writeln!(s, "sim.tti_ms = {}  # HS-PDSCH scheduling interval", self.tti.as_secs_f64() * 1e3);
        let _ = writeln!(s, "sim.cn_delay_ms = {}  # fixed core-network delay", self.cn_delay.as_secs_f64() * 1e3);
        let _ = writeln!(s, "sim.seeds = {}", seeds);
        let _ = writeln!(s, "sim.variants = {}", variants);
        let _ = writeln!(s, "buffer.capacity_n_pdus = {}  # 12600 bytes", self.buffer_capacity_n);
        let _ = writeln!(s, "buffer.rt_limit_r_pdus = {}  # 840 bytes", self.buffer_rt_limit_r);
        let _ = writeln!(s, "buffer.lower_l_pdus = {}  # 5040 bytes", self.buffer_lower_l);
        let _ = writeln!(s, "buffer.upper_h_pdus = {}  # 10080 bytes", self.buffer_upper_h);
        let _ = writeln!(s, "flow_control.w_q = {}  # queue-average weight", self.w_q);
        let _ = writeln!(s, "flow_control.c_factor = {}  # reduced-rate factor", self.c_factor);
        let _ = writeln!(s, "flow_control.iub_latency_ms = {}", self.iub_latency.as_secs_f64() * 1e3);
        let _ = writeln!(
            s,
            "flow_control.pdu_transfer_latency_ms = {}",
            self.pdu_transfer_latency.as_secs_f64() * 1e3
        );
        let _ = writeln!(s, "flow_control.hs_dsch_frame_ms = {}", self.hs_dsch_frame.as_secs_f64() * 1e3);
        let _ = writeln!(
            s,
            "flow_control.grant_interval_ms = {}  # iub + pdu transfer + frame",
            self.effective_grant_interval().as_secs_f64() * 1e3
        );
        let _ = writeln!(
            s,
            "flow_control.nrt_dispatch = {}",
            match self.nrt_dispatch {
                DispatchMode::Spread => "spread",
                DispatchMode::Burst => "burst",
            }
        );
        let _ = writeln!(s, "voip.packet_bits = {}", self.voip_packet_bits);
        let _ = writeln!(s, "voip.rate_kbps = {}  # constant bit rate while ON", self.voip_rate_kbps);
        let _ = writeln!(s, "voip.mean_phase_s = {}  # exponential ON/OFF", self.voip_mean_phase_s);
        let _ = writeln!(s, "ftp.mean_packet_bytes = {}", self.ftp_mean_packet_bytes);
        let _ = writeln!(s, "ftp.rates_kbps = {}", rates);
        let _ = writeln!(
            s,
            "ftp.size_model = {}",
            match self.ftp_size_model {
                FtpSizeModel::Fixed => "fixed",
                FtpSizeModel::Geometric => "geometric",
            }
        );
        let _ = writeln!(s, "radio.hs_pdsch_power_w = {}", self.radio_hs_pdsch_power_w);
        let _ = writeln!(
            s,
            "radio.noise_interference_dbm = {}  # calibration constant",
            self.radio_noise_interference_dbm
        );
        let _ = writeln!(s, "radio.shadow_sigma_db = {}", self.radio_shadow_sigma_db);
        let _ = writeln!(s, "radio.shadow_rho = {}", self.radio_shadow_rho);
        let _ = writeln!(
            s,
            "radio.shadow_update_interval_ms = {}",
            self.radio_shadow_update_interval_ms
        );
        let _ = writeln!(s, "radio.velocity_kmh = {}", self.radio_velocity_kmh);
        let _ = writeln!(s, "radio.start_distance_m = {}", self.radio_start_distance_m);
        let _ = writeln!(s, "radio.cell_radius_m = {}", self.radio_cell_radius_m);
        let _ = writeln!(s, "radio.cqi_latency_ttis = {}", self.radio_cqi_latency_ttis);
        let _ = writeln!(s, "radio.max_retx = {}", self.radio_max_retx);
        let _ = writeln!(s, "amc.count = {}", self.amc_count);
        let _ = writeln!(s, "amc.n_codes = {}  # of 15 channelization codes", self.amc_n_codes);
        let _ = writeln!(s, "amc.thresholds_db = {}", thresholds);
        s
    }
}

/// One result row: a report plus the scenario it belongs to.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub scenario: String,
    pub report: MetricsReport,
}

pub const RESULTS_HEADER: &str = "scenario,variant,ftp_rate_kbps,seed,rt_loss,nrt_loss,rt_mean_delay_ms,nrt_throughput_kbps,rnc_backlog_mean_pdus,air_discards";

pub fn results_to_csv(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then_with(|| a.report.variant.label().cmp(b.report.variant.label()))
            .then_with(|| a.report.ftp_rate_kbps.total_cmp(&b.report.ftp_rate_kbps))
            .then_with(|| a.report.seed.cmp(&b.report.seed))
    });
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for row in sorted {
        let r = &row.report;
        let prob = |v: Option<f64>| v.map(|x| format!("{:.6}", x)).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{:.2},{},{},{},{},{:.2},{:.2},{}",
            row.scenario,
            r.variant.label(),
            r.ftp_rate_kbps,
            r.seed,
            prob(r.rt_loss_prob),
            prob(r.nrt_loss_prob),
            r.rt_mean_delay_s.map(|v| format!("{:.3}", v * 1e3)).unwrap_or_default(),
            r.nrt_throughput_bps / 1e3,
            r.rnc_backlog_mean_pdus,
            r.air_discards_total(),
        );
    }
    out
}

pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<(), ConfigError> {
    if rows.is_empty() {
        return Err(ConfigError::Invalid {
            key: "results".into(),
            msg: "nothing to write".into(),
        });
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, results_to_csv(rows))?;
    Ok(())
}
