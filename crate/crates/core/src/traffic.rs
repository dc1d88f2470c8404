//! Periodic packet streams: the legitimate BSM broadcast and the flood
//! schedules, plus the merge that forms the aggregate arrival process.

use std::iter::Peekable;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::Track;
use crate::messages::{build_bsm, build_udp_filler, MessageError, Origin, Packet};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficKind {
    LegitBsm,
    UdpFlood,
    BsmFlood,
}

impl TrafficKind {
    pub fn carries_bsm(self) -> bool {
        !matches!(self, TrafficKind::UdpFlood)
    }

    pub fn default_origin(self) -> Origin {
        match self {
            TrafficKind::LegitBsm => Origin::Legit,
            _ => Origin::Attacker,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSpec {
    pub kind: TrafficKind,
    pub rate_hz: f64,
    pub start: SimTime,
    pub duration: SimTime,
    pub payload_size: usize,
    pub origin: Origin,
}

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("{0:?} traffic needs a vehicle track")]
    MissingTrack(TrafficKind),
    #[error(transparent)]
    Message(#[from] MessageError),
}

impl TrafficSpec {
    pub fn new(kind: TrafficKind, rate_hz: f64, start: SimTime, duration: SimTime, payload_size: usize) -> Self {
        TrafficSpec {
            kind,
            rate_hz,
            start,
            duration,
            payload_size,
            origin: kind.default_origin(),
        }
    }

    /// `floor(rate * duration)`.
    pub fn packet_count(&self) -> u64 {
        let exact = self.rate_hz * self.duration.as_micros() as f64 / 1e6;
        (exact + 1e-9).floor() as u64
    }

    /// Emission instant of the `k`-th packet.
    pub fn emission_time(&self, k: u64) -> SimTime {
        let offset = (k as f64 * 1e6 / self.rate_hz).round() as u64;
        self.start + SimTime::from_micros(offset)
    }

    pub fn end(&self) -> SimTime {
        self.start + self.duration
    }
}

/// Lazily emits the packets of one stream in time order.
#[derive(Debug, Clone)]
pub struct TrafficSource {
    spec: TrafficSpec,
    track: Option<Track>,
    next: u64,
    count: u64,
}

impl TrafficSource {
    pub fn new(spec: TrafficSpec, track: Option<Track>) -> Result<Self, TrafficError> {
        if !spec.rate_hz.is_finite() || spec.rate_hz <= 0.0 {
            return Err(TrafficError::InvalidRate(spec.rate_hz));
        }
        if spec.kind.carries_bsm() {
            if track.is_none() {
                return Err(TrafficError::MissingTrack(spec.kind));
            }
            if spec.packet_count() > 0 {
                // Validates the payload size up front so iteration is infallible.
                build_bsm(&track.unwrap().initial, 0, spec.start, spec.payload_size)?;
            }
        }
        let count = spec.packet_count();
        Ok(TrafficSource {
            spec,
            track,
            next: 0,
            count,
        })
    }

    pub fn spec(&self) -> &TrafficSpec {
        &self.spec
    }
}

impl Iterator for TrafficSource {
    type Item = (SimTime, Packet);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.count {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let t = self.spec.emission_time(k);
        let mut packet = match self.track {
            Some(track) if self.spec.kind.carries_bsm() => {
                let bsm = build_bsm(&track.at(t), k, t, self.spec.payload_size)
                    .expect("payload size validated at construction");
                Packet::bsm(&bsm, self.spec.origin)
            }
            _ => build_udp_filler(self.spec.payload_size, k),
        };
        packet.sent_at = t;
        packet.origin = self.spec.origin;
        Some((t, packet))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for TrafficSource {}

pub type ArrivalSchedule = Vec<(SimTime, Packet)>;

pub fn generate(spec: &TrafficSpec, track: Option<Track>) -> Result<ArrivalSchedule, TrafficError> {
    Ok(TrafficSource::new(spec.clone(), track)?.collect())
}

/// K-way merge of time-ordered streams. Simultaneous packets are emitted
/// legitimate-first, then by input index. Output packets are renumbered
/// with consecutive ids.
pub struct Merge<I: Iterator<Item = (SimTime, Packet)>> {
    inputs: Vec<Peekable<I>>,
    next_id: u64,
}

impl<I: Iterator<Item = (SimTime, Packet)>> Merge<I> {
    pub fn new(inputs: Vec<I>) -> Self {
        Merge {
            inputs: inputs.into_iter().map(Iterator::peekable).collect(),
            next_id: 0,
        }
    }
}

impl<I: Iterator<Item = (SimTime, Packet)>> Iterator for Merge<I> {
    type Item = (SimTime, Packet);

    fn next(&mut self) -> Option<Self::Item> {
        let mut best: Option<(usize, (SimTime, Origin))> = None;
        for (i, input) in self.inputs.iter_mut().enumerate() {
            if let Some((t, p)) = input.peek() {
                let key = (*t, p.origin);
                if best.is_none_or(|(_, b)| key < b) {
                    best = Some((i, key));
                }
            }
        }
        let (i, _) = best?;
        let (t, mut packet) = self.inputs[i].next().expect("peeked");
        packet.id = self.next_id;
        self.next_id += 1;
        Some((t, packet))
    }
}

pub fn compose(schedules: Vec<ArrivalSchedule>) -> ArrivalSchedule {
    Merge::new(schedules.into_iter().map(Vec::into_iter).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{VehicleId, VehicleState};
    use crate::messages::{decode, PacketKind};
    use proptest::prelude::*;

    fn track() -> Track {
        Track::new(VehicleState::new(VehicleId::A, 0.0, 10.0).unwrap())
    }

    fn secs(s: u64) -> SimTime {
        SimTime::from_secs(s)
    }

    #[test]
    fn legit_ten_hz_two_seconds() {
        let spec = TrafficSpec::new(TrafficKind::LegitBsm, 10.0, SimTime::ZERO, secs(2), 200);
        let sched = generate(&spec, Some(track())).unwrap();
        assert_eq!(sched.len(), 20);
        let times: Vec<u64> = sched.iter().map(|(t, _)| t.as_micros()).collect();
        let expected: Vec<u64> = (0..20).map(|k| k * 100_000).collect();
        assert_eq!(times, expected);
        for (t, p) in &sched {
            let bsm = decode(&p.body).unwrap();
            assert_eq!(bsm.gen_time, *t);
            assert_eq!(p.sent_at, *t);
            assert_eq!(p.origin, Origin::Legit);
            assert!((bsm.road_position_m() - 10.0 * t.as_secs_f64()).abs() < 0.06);
        }
    }

    #[test]
    fn bsm_flood_500_hz() {
        let spec = TrafficSpec::new(TrafficKind::BsmFlood, 500.0, SimTime::ZERO, secs(1), 600);
        let attacker = Track::new(VehicleState::new(VehicleId::Attacker, 50.0, 0.0).unwrap());
        let sched = generate(&spec, Some(attacker)).unwrap();
        assert_eq!(sched.len(), 500);
        for w in sched.windows(2) {
            assert_eq!((w[1].0 - w[0].0).as_micros(), 2_000);
        }
        assert!(sched.iter().all(|(_, p)| p.size() == 600 && p.origin == Origin::Attacker));
    }

    #[test]
    fn udp_flood_two_minutes() {
        let spec = TrafficSpec::new(TrafficKind::UdpFlood, 2000.0, SimTime::ZERO, secs(120), 0);
        let source = TrafficSource::new(spec, None).unwrap();
        assert_eq!(source.len(), 240_000);
        assert_eq!(source.filter(|(_, p)| p.kind == PacketKind::UdpFiller).count(), 240_000);
    }

    #[test]
    fn bsm_kinds_need_a_track() {
        let spec = TrafficSpec::new(TrafficKind::LegitBsm, 10.0, SimTime::ZERO, secs(1), 200);
        assert_eq!(
            generate(&spec, None).unwrap_err(),
            TrafficError::MissingTrack(TrafficKind::LegitBsm)
        );
    }

    #[test]
    fn non_positive_rate_rejected() {
        let spec = TrafficSpec::new(TrafficKind::UdpFlood, 0.0, SimTime::ZERO, secs(1), 0);
        assert!(matches!(generate(&spec, None), Err(TrafficError::InvalidRate(_))));
    }

    #[test]
    fn compose_empty() {
        assert!(compose(vec![]).is_empty());
    }

    #[test]
    fn compose_counts_add_and_legit_wins_ties() {
        let legit = generate(
            &TrafficSpec::new(TrafficKind::LegitBsm, 10.0, SimTime::ZERO, secs(1), 200),
            Some(track()),
        )
        .unwrap();
        let attacker = Track::new(VehicleState::new(VehicleId::Attacker, 0.0, 0.0).unwrap());
        let flood = generate(
            &TrafficSpec::new(TrafficKind::BsmFlood, 500.0, SimTime::ZERO, secs(1), 600),
            Some(attacker),
        )
        .unwrap();
        // Attacker listed first so the tie-break is not an artefact of input order.
        let merged = compose(vec![flood, legit]);
        assert_eq!(merged.len(), 510);
        assert_eq!(merged[0].1.origin, Origin::Legit);
        assert_eq!(merged[1].1.origin, Origin::Attacker);
        assert!(merged.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(merged.iter().enumerate().all(|(i, (_, p))| p.id == i as u64));
    }

    #[test]
    fn regeneration_is_identical() {
        let spec = TrafficSpec::new(TrafficKind::LegitBsm, 10.0, SimTime::from_millis(37), secs(3), 200);
        assert_eq!(generate(&spec, Some(track())).unwrap(), generate(&spec, Some(track())).unwrap());
    }

    proptest! {
        #[test]
        fn count_is_floor_rate_times_duration(rate in 1u32..5000, dur_ms in 0u64..5000) {
            let spec = TrafficSpec::new(TrafficKind::UdpFlood, rate as f64, SimTime::ZERO, SimTime::from_millis(dur_ms), 0);
            let n = generate(&spec, None).unwrap().len() as u64;
            prop_assert_eq!(n, rate as u64 * dur_ms / 1000);
        }

        #[test]
        fn compose_preserves_multiset_and_order(
            specs in proptest::collection::vec((1u32..300, 0u64..500, 0u64..1500, any::<bool>()), 0..5)
        ) {
            let schedules: Vec<ArrivalSchedule> = specs
                .iter()
                .map(|&(rate, start, dur, legit)| {
                    let mut spec = TrafficSpec::new(
                        TrafficKind::UdpFlood,
                        rate as f64,
                        SimTime::from_millis(start),
                        SimTime::from_millis(dur),
                        8,
                    );
                    if legit {
                        spec.origin = Origin::Legit;
                    }
                    generate(&spec, None).unwrap()
                })
                .collect();
            let strip = |s: &[(SimTime, Packet)]| {
                let mut v: Vec<_> = s.iter().map(|(t, p)| (*t, p.origin, p.body.len(), p.sent_at)).collect();
                v.sort();
                v
            };
            let all: Vec<(SimTime, Packet)> = schedules.iter().flatten().cloned().collect();
            let merged = compose(schedules);
            prop_assert!(merged.windows(2).all(|w| (w[0].0, w[0].1.origin) <= (w[1].0, w[1].1.origin)));
            prop_assert_eq!(strip(&merged), strip(&all));
        }
    }
}
