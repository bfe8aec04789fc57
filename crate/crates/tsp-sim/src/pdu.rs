use crate::time::SimTime;

/// MAC-d PDU payload plus header: 320-bit SDU + 16-bit header.
pub const PDU_SIZE_BITS: u32 = 336;
/// RLC SDU size produced by segmentation.
pub const SDU_SIZE_BITS: u32 = 320;
/// 336 bits = 42 bytes; byte-denominated thresholds divide by this.
pub const PDU_SIZE_BYTES: u32 = 42;

/// Traffic class of a flow: real-time (voice) or non-real-time (file
/// transfer). RT gets service priority, NRT gets space priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowClass {
    Rt,
    Nrt,
}

impl FlowClass {
    pub fn label(self) -> &'static str {
        match self {
            FlowClass::Rt => "rt",
            FlowClass::Nrt => "nrt",
        }
    }
}

/// The unit of queueing, granting and transmission. `id` is monotone within
/// its flow, which is what the FIFO-order checks key on.
#[derive(Debug, Clone)]
pub struct Pdu {
    pub id: u64,
    pub flow: FlowClass,
    pub size_bits: u32,
    pub source_packet_id: u64,
    /// Packet arrival instant at the RNC.
    pub created_at: SimTime,
    pub nodeb_enqueued_at: Option<SimTime>,
    pub first_tx_at: Option<SimTime>,
}

impl Pdu {
    pub fn new(id: u64, flow: FlowClass, source_packet_id: u64, created_at: SimTime) -> Self {
        Pdu {
            id,
            flow,
            size_bits: PDU_SIZE_BITS,
            source_packet_id,
            created_at,
            nodeb_enqueued_at: None,
            first_tx_at: None,
        }
    }
}
