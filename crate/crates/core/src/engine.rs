//! Deterministic discrete-event engine.
//!
//! Events fire in `(fire_at, seq)` order where `seq` is the insertion
//! counter, so simultaneous events run in the order they were scheduled.
//! Handlers receive the engine mutably and may schedule further events at
//! or after the current time.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::time::SimTime;

/// Identifier returned by [`Engine::schedule`]; equal to the event's `seq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("causality violation: cannot schedule at {at} when now is {now}")]
    Causality { at: SimTime, now: SimTime },
}

/// A scheduled event: firing time, insertion counter and payload.
#[derive(Debug)]
pub struct Event<E> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub kind: E,
}

struct Entry<E> {
    key: Reverse<(SimTime, u64)>,
    kind: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

pub struct Engine<E> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Entry<E>>,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn schedule(&mut self, fire_at: SimTime, kind: E) -> Result<EventId, EngineError> {
        if fire_at < self.now {
            return Err(EngineError::Causality {
                at: fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Entry {
            key: Reverse((fire_at, seq)),
            kind,
        });
        Ok(EventId(seq))
    }

    /// Processes every event with `fire_at <= t_end`, including events
    /// scheduled by handlers during the call, then advances the clock to
    /// `t_end`. Returns the number of events processed.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<u64, EngineError>
    where
        F: FnMut(&mut Engine<E>, Event<E>),
    {
        if t_end < self.now {
            return Err(EngineError::Causality {
                at: t_end,
                now: self.now,
            });
        }
        let mut processed = 0;
        while let Some(head) = self.queue.peek() {
            let Reverse((fire_at, _)) = head.key;
            if fire_at > t_end {
                break;
            }
            let Entry {
                key: Reverse((fire_at, seq)),
                kind,
            } = self.queue.pop().expect("peeked");
            self.now = fire_at;
            handler(self, Event { fire_at, seq, kind });
            processed += 1;
        }
        self.now = t_end;
        Ok(processed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fresh_engine_starts_at_zero() {
        let engine: Engine<()> = Engine::new();
        assert_eq!(engine.now(), SimTime::ZERO);
    }

    #[test]
    fn first_schedule_gets_id_zero() {
        let mut engine = Engine::new();
        assert_eq!(engine.schedule(SimTime::ZERO, 'a').unwrap(), EventId(0));
        let mut fired = vec![];
        engine
            .run_until(SimTime::from_secs(1), |_, ev| fired.push(ev.kind))
            .unwrap();
        assert_eq!(fired, vec!['a']);
    }

    #[test]
    fn ties_fire_in_insertion_order() {
        let mut engine = Engine::new();
        let t = SimTime::from_millis(5);
        for k in 0..5 {
            engine.schedule(t, k).unwrap();
        }
        let mut fired = vec![];
        engine.run_until(t, |_, ev| fired.push(ev.kind)).unwrap();
        assert_eq!(fired, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn scheduling_in_the_past_is_rejected() {
        let mut engine: Engine<()> = Engine::new();
        engine.run_until(SimTime::from_micros(10), |_, _| {}).unwrap();
        let err = engine.schedule(SimTime::from_micros(5), ()).unwrap_err();
        assert_eq!(
            err,
            EngineError::Causality {
                at: SimTime::from_micros(5),
                now: SimTime::from_micros(10)
            }
        );
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut engine: Engine<()> = Engine::new();
        let n = engine.run_until(SimTime::from_secs(1), |_, _| {}).unwrap();
        assert_eq!(n, 0);
        assert_eq!(engine.now(), SimTime::from_secs(1));
        engine.run_until(SimTime::from_secs(2), |_, _| {}).unwrap();
        assert_eq!(engine.now(), SimTime::from_secs(2));
    }

    #[test]
    fn run_until_boundary_is_inclusive() {
        let mut engine = Engine::new();
        for ms in 1..=3 {
            engine.schedule(SimTime::from_millis(ms), ms).unwrap();
        }
        let n = engine.run_until(SimTime::from_millis(2), |_, _| {}).unwrap();
        assert_eq!(n, 2);
        assert_eq!(engine.pending(), 1);
    }

    #[test]
    fn self_rescheduling_ticker_fires_ten_times_in_one_second() {
        // Oracle: a 10 Hz ticker started at 0 with an exclusive 1 s horizon
        // fires at 0, 100, ..., 900 ms.
        let period = SimTime::from_millis(100);
        let expected: Vec<SimTime> = (0..10).map(|k| SimTime::from_millis(100 * k)).collect();

        let mut engine = Engine::new();
        engine.schedule(SimTime::ZERO, ()).unwrap();
        let mut fired = vec![];
        engine
            .run_until(SimTime::from_millis(999), |eng, ev| {
                assert_eq!(eng.now(), ev.fire_at);
                fired.push(ev.fire_at);
                eng.schedule(ev.fire_at + period, ()).unwrap();
            })
            .unwrap();
        assert_eq!(fired, expected);
    }

    #[test]
    fn handler_cannot_schedule_in_its_past() {
        let mut engine = Engine::new();
        engine.schedule(SimTime::from_millis(10), ()).unwrap();
        let mut result = None;
        engine
            .run_until(SimTime::from_millis(20), |eng, _| {
                result = Some(eng.schedule(SimTime::from_millis(9), ()));
            })
            .unwrap();
        assert!(matches!(result, Some(Err(EngineError::Causality { .. }))));
    }

    #[test]
    fn zero_delay_reschedule_fires_in_same_call() {
        let mut engine = Engine::new();
        engine.schedule(SimTime::from_millis(1), 0u32).unwrap();
        let mut count = 0;
        engine
            .run_until(SimTime::from_millis(1), |eng, ev| {
                count += 1;
                if ev.kind < 3 {
                    eng.schedule(eng.now(), ev.kind + 1).unwrap();
                }
            })
            .unwrap();
        assert_eq!(count, 4);
    }

    fn replay(times: &[u64]) -> Vec<(SimTime, u64, usize)> {
        let mut engine = Engine::new();
        for (i, &t) in times.iter().enumerate() {
            engine.schedule(SimTime::from_micros(t), i).unwrap();
        }
        let mut out = vec![];
        engine
            .run_until(SimTime::MAX, |eng, ev| {
                assert_eq!(eng.now(), ev.fire_at);
                out.push((ev.fire_at, ev.seq, ev.kind));
            })
            .unwrap();
        out
    }

    proptest! {
        #[test]
        fn firing_order_is_total_and_deterministic(
            times in proptest::collection::vec(0u64..500, 1000)
        ) {
            let first = replay(&times);
            prop_assert_eq!(first.len(), times.len());
            for w in first.windows(2) {
                prop_assert!((w[0].0, w[0].1) < (w[1].0, w[1].1));
            }
            let second = replay(&times);
            prop_assert_eq!(first, second);
        }
    }
}
