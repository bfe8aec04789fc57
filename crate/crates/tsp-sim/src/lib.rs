//! Discrete-event simulation of an HSDPA downlink data path for one
//! multimedia user: a time-space priority buffer at the Node B, threshold
//! driven credit flow control over the Iub toward the RNC, ON/OFF voice and
//! file-transfer sources, and a shadowed AMC/HARQ air interface. An exact
//! Markov-chain oracle validates the buffer mechanics end to end.

pub mod config;
pub mod engine;
pub mod flow_control;
pub mod metrics;
pub mod oracle;
pub mod pdu;
pub mod radio;
pub mod rlc_rnc;
pub mod rng;
pub mod time;
pub mod traffic;
pub mod tsp_buffer;

pub use engine::{run, run_replications, SimConfig};
pub use metrics::MetricsReport;
pub use time::SimTime;
pub use tsp_buffer::TspVariant;
