//! End-to-end run of one scenario on the event engine.

use thiserror::Error;

use crate::channel::{Channel, ChannelError, ChannelWindowStats, Transmission};
use crate::engine::{Engine, EngineError};
use crate::fcw::{classify, AlertClass, Fcw, FcwAction};
use crate::kinematics::{Track, VehicleId};
use crate::messages::{decode, Origin, Packet, PacketKind};
use crate::metrics::{mean_ms, pdr, LogKind, MetricError, MetricsReport, RunLog};
use crate::receiver::{Admission, Dispatch, QueueError, ReceiverQueue};
use crate::scenario::{Scenario, ScenarioError};
use crate::time::SimTime;
use crate::traffic::{Merge, TrafficError, TrafficSource};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueEvent {
    Enqueue,
    Drop,
    Dispatch,
    Complete,
}

impl QueueEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            QueueEvent::Enqueue => "enqueue",
            QueueEvent::Drop => "drop",
            QueueEvent::Dispatch => "dispatch",
            QueueEvent::Complete => "complete",
        }
    }
}

/// Queue state right after an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueSample {
    pub t: SimTime,
    pub queued: u32,
    pub in_service: bool,
    pub event: QueueEvent,
}

pub fn queue_trace_csv(trace: &[QueueSample]) -> String {
    let mut out = String::from("t_s,queue_len,event\n");
    for s in trace {
        out.push_str(&format!("{:.6},{},{}\n", s.t.as_secs_f64(), s.queued, s.event.as_str()));
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub queue_trace: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub log: RunLog,
    pub queue_trace: Vec<QueueSample>,
}

impl RunOutput {
    pub fn windows(&self) -> &[ChannelWindowStats] {
        &self.log.windows
    }
}

enum SimEvent {
    Emit(Packet),
    Arrive(Packet),
    Complete,
}

struct World<S: Iterator<Item = (SimTime, Packet)>> {
    source: S,
    channel: Channel,
    queue: ReceiverQueue,
    in_service: Option<Dispatch>,
    fcw: Fcw,
    host: Track,
    log: RunLog,
    trace: Option<Vec<QueueSample>>,
    n_sent: u64,
    n_recv: u64,
    latency_us: u128,
    channel_drops: u64,
    queue_drops: u64,
}

impl<S: Iterator<Item = (SimTime, Packet)>> World<S> {
    fn sample(&mut self, t: SimTime, event: QueueEvent) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(QueueSample {
                t,
                queued: self.queue.len() as u32,
                in_service: self.in_service.is_some(),
                event,
            });
        }
    }

    fn schedule_next_emit(&mut self, engine: &mut Engine<SimEvent>) {
        if let Some((t, packet)) = self.source.next() {
            engine.schedule(t, SimEvent::Emit(packet)).expect("sources are time-ordered");
        }
    }

    fn start_service(&mut self, engine: &mut Engine<SimEvent>) {
        let now = engine.now();
        if self.in_service.is_some() {
            return;
        }
        if let Some(d) = self.queue.dispatch_next(now) {
            engine.schedule(d.completed_at, SimEvent::Complete).expect("service ends in the future");
            self.in_service = Some(d);
            self.sample(now, QueueEvent::Dispatch);
        }
    }

    fn handle(&mut self, engine: &mut Engine<SimEvent>, event: SimEvent) {
        let now = engine.now();
        match event {
            SimEvent::Emit(packet) => {
                if packet.origin == Origin::Legit {
                    self.n_sent += 1;
                }
                self.log.push(now, LogKind::Send, packet.id, packet.origin, packet.sent_at);
                match self.channel.transmit(&packet, now) {
                    Transmission::Delivered(at) => {
                        engine.schedule(at, SimEvent::Arrive(packet)).expect("delivery is causal");
                    }
                    Transmission::Dropped => {
                        self.channel_drops += 1;
                        self.log.push(now, LogKind::ChannelDrop, packet.id, packet.origin, packet.sent_at);
                    }
                }
                self.schedule_next_emit(engine);
            }
            SimEvent::Arrive(packet) => {
                self.log.push(now, LogKind::Deliver, packet.id, packet.origin, packet.sent_at);
                let (id, origin, sent_at) = (packet.id, packet.origin, packet.sent_at);
                match self.queue.enqueue(packet, now) {
                    Admission::Accepted => {
                        self.sample(now, QueueEvent::Enqueue);
                        self.start_service(engine);
                    }
                    Admission::Dropped => {
                        self.queue_drops += 1;
                        self.log.push(now, LogKind::QueueDrop, id, origin, sent_at);
                        self.sample(now, QueueEvent::Drop);
                    }
                }
            }
            SimEvent::Complete => {
                let done = self.in_service.take().expect("completion without service");
                self.sample(now, QueueEvent::Complete);
                self.process(now, &done.packet);
                self.start_service(engine);
            }
        }
        debug_assert!(self.queue.conserves());
    }

    fn process(&mut self, now: SimTime, packet: &Packet) {
        if packet.kind == PacketKind::Bsm {
            if let Ok(bsm) = decode(&packet.body) {
                let own = self.host.at(now);
                if self.fcw.on_bsm(&bsm, now, &own) == FcwAction::AlertRaised {
                    self.log.push(now, LogKind::Alert, packet.id, packet.origin, packet.sent_at);
                }
            }
        }
        if packet.origin == Origin::Legit {
            self.n_recv += 1;
            self.latency_us += (now - packet.sent_at).as_micros() as u128;
            self.log.push(now, LogKind::Dispatch, packet.id, packet.origin, packet.sent_at);
        }
    }
}

pub fn run_scenario(s: &Scenario) -> Result<(MetricsReport, RunLog), RunError> {
    let out = run_scenario_with(s, RunOptions::default())?;
    Ok((out.report, out.log))
}

pub fn run_scenario_with(s: &Scenario, opts: RunOptions) -> Result<RunOutput, RunError> {
    s.validate()?;
    let run_end = s.run_end();
    let follower = Track::new(s.follower());
    let host = Track::new(s.lead());

    let mut sources = vec![TrafficSource::new(s.legit.to_spec(), Some(follower))?];
    for attack in &s.attacks {
        sources.push(TrafficSource::new(attack.to_spec(), Some(s.attacker_track()))?);
    }

    let mut world = World {
        source: Merge::new(sources).take_while(move |(t, _)| *t <= run_end),
        channel: Channel::new(s.channel_params())?,
        queue: ReceiverQueue::new(s.queue_params())?,
        in_service: None,
        fcw: Fcw::new(s.fcw.clone(), VehicleId::A),
        host,
        log: RunLog::default(),
        trace: opts.queue_trace.then(Vec::new),
        n_sent: 0,
        n_recv: 0,
        latency_us: 0,
        channel_drops: 0,
        queue_drops: 0,
    };

    let mut engine = Engine::new();
    world.schedule_next_emit(&mut engine);
    engine.run_until(run_end, |eng, ev| world.handle(eng, ev.kind))?;

    let World {
        channel,
        fcw,
        mut log,
        trace,
        n_sent,
        n_recv,
        latency_us,
        channel_drops,
        queue_drops,
        ..
    } = world;
    log.windows = channel.finish(run_end);

    let record = fcw.record();
    let cross = s.ground_truth_cross();
    let classification = classify(&record, cross, run_end, &s.fcw);
    let report = MetricsReport {
        scenario: s.name.clone(),
        n_sent,
        n_recv,
        pdr_pct: pdr(n_sent, n_recv)?,
        mean_latency_ms: (n_recv > 0).then(|| mean_ms(latency_us, n_recv)),
        channel_drops,
        queue_drops,
        last_valid_bsm: record.last_valid_bsm_time,
        fcw_trigger: record.trigger_time,
        ground_truth_cross: cross,
        classification: classification.class,
        spurious_alert: classification.spurious,
        attack_success: classification.class != AlertClass::Timely,
        cbr_trace: log.windows.iter().map(|w| w.busy_fraction).collect(),
    };
    Ok(RunOutput {
        report,
        log,
        queue_trace: trace.unwrap_or_default(),
    })
}
