//! Basic safety message model, its fixed binary layout, and UDP filler
//! packets.
//!
//! Wire layout (big-endian, 40-byte header, zero padding to `payload_size`):
//!
//! | offset | len | field                    |
//! |-------:|----:|--------------------------|
//! |      0 |   4 | magic `CVBM`             |
//! |      4 |   1 | version (1)              |
//! |      5 |   1 | sender code              |
//! |      6 |   2 | reserved                 |
//! |      8 |   8 | seq                      |
//! |     16 |   8 | generation time, µs      |
//! |     24 |   4 | latitude, micro-degrees  |
//! |     28 |   4 | longitude, micro-degrees |
//! |     32 |   4 | speed, cm/s              |
//! |     36 |   1 | braking (0/1)            |
//! |     37 |   3 | reserved                 |

use thiserror::Error;

use crate::kinematics::{VehicleId, VehicleState};
use crate::time::SimTime;

pub const MAGIC: [u8; 4] = *b"CVBM";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 40;
pub const BRAKING_OFFSET: usize = 36;

/// Metres of roadway per micro-degree of latitude. The roadway runs due
/// north from [`ROAD_ORIGIN_LAT`], so road position maps onto latitude.
pub const METRES_PER_MICRODEGREE: f64 = 0.111_32;
pub const ROAD_ORIGIN_LAT: i32 = 34_676_000;
pub const ROAD_ORIGIN_LON: i32 = -82_836_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MessageError {
    #[error("payload size {0} is below the {HEADER_LEN}-byte header")]
    PayloadTooSmall(usize),
    #[error("malformed BSM: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bsm {
    pub sender: VehicleId,
    pub seq: u64,
    pub gen_time: SimTime,
    pub latitude: i32,
    pub longitude: i32,
    pub speed_cm_s: u32,
    pub braking: bool,
    pub payload_size: usize,
}

impl Bsm {
    /// Road position encoded in the latitude field, in metres.
    pub fn road_position_m(&self) -> f64 {
        (self.latitude as i64 - ROAD_ORIGIN_LAT as i64) as f64 * METRES_PER_MICRODEGREE
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_cm_s as f64 / 100.0
    }
}

pub fn build_bsm(
    state: &VehicleState,
    seq: u64,
    gen_time: SimTime,
    payload_size: usize,
) -> Result<Bsm, MessageError> {
    if payload_size < HEADER_LEN {
        return Err(MessageError::PayloadTooSmall(payload_size));
    }
    let offset = (state.position_m() / METRES_PER_MICRODEGREE).round() as i64;
    let latitude = (ROAD_ORIGIN_LAT as i64 + offset).clamp(i32::MIN as i64, i32::MAX as i64) as i32;
    Ok(Bsm {
        sender: state.id,
        seq,
        gen_time,
        latitude,
        longitude: ROAD_ORIGIN_LON,
        speed_cm_s: (state.speed_mm_s() / 10).min(u32::MAX as u64) as u32,
        braking: state.braking,
        payload_size,
    })
}

pub fn encode(bsm: &Bsm) -> Vec<u8> {
    let mut out = Vec::with_capacity(bsm.payload_size.max(HEADER_LEN));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(bsm.sender.code());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&bsm.seq.to_be_bytes());
    out.extend_from_slice(&bsm.gen_time.as_micros().to_be_bytes());
    out.extend_from_slice(&bsm.latitude.to_be_bytes());
    out.extend_from_slice(&bsm.longitude.to_be_bytes());
    out.extend_from_slice(&bsm.speed_cm_s.to_be_bytes());
    out.push(bsm.braking as u8);
    out.extend_from_slice(&[0, 0, 0]);
    debug_assert_eq!(out.len(), HEADER_LEN);
    out.resize(bsm.payload_size.max(HEADER_LEN), 0);
    out
}

pub fn decode(bytes: &[u8]) -> Result<Bsm, MessageError> {
    if bytes.len() < HEADER_LEN {
        return Err(MessageError::Malformed("shorter than header"));
    }
    if bytes[0..4] != MAGIC {
        return Err(MessageError::Malformed("bad magic"));
    }
    if bytes[4] != VERSION {
        return Err(MessageError::Malformed("unsupported version"));
    }
    let sender = VehicleId::from_code(bytes[5]).ok_or(MessageError::Malformed("unknown sender"))?;
    let braking = match bytes[BRAKING_OFFSET] {
        0 => false,
        1 => true,
        _ => return Err(MessageError::Malformed("braking flag out of range")),
    };
    let u64_at = |o: usize| u64::from_be_bytes(bytes[o..o + 8].try_into().unwrap());
    let i32_at = |o: usize| i32::from_be_bytes(bytes[o..o + 4].try_into().unwrap());
    Ok(Bsm {
        sender,
        seq: u64_at(8),
        gen_time: SimTime::from_micros(u64_at(16)),
        latitude: i32_at(24),
        longitude: i32_at(28),
        speed_cm_s: u32::from_be_bytes(bytes[32..36].try_into().unwrap()),
        braking,
        payload_size: bytes.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Bsm,
    UdpFiller,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Legit,
    Attacker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    /// Run-unique identity, assigned when streams are composed.
    pub id: u64,
    pub kind: PacketKind,
    pub body: Vec<u8>,
    pub sent_at: SimTime,
    pub origin: Origin,
}

impl Packet {
    pub fn bsm(bsm: &Bsm, origin: Origin) -> Packet {
        Packet {
            id: bsm.seq,
            kind: PacketKind::Bsm,
            body: encode(bsm),
            sent_at: bsm.gen_time,
            origin,
        }
    }

    pub fn size(&self) -> usize {
        self.body.len()
    }
}

/// An all-zero datagram; never decodes as a BSM.
pub fn build_udp_filler(size: usize, seq: u64) -> Packet {
    Packet {
        id: seq,
        kind: PacketKind::UdpFiller,
        body: vec![0; size],
        sent_at: SimTime::ZERO,
        origin: Origin::Attacker,
    }
}
