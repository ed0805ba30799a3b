use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::sync::Arc;

use geokv_core::{Configuration, DcId, History, Model, OpKind, OpRecord, Value};
use geokv_protocol::{
    Addr, Client, ClientOptions, Controller, Effect, Message, Nanos, OpOutcome, OpSpec, ReconfigPlan, Role, Server,
    ServerOptions, Sizing, Timer,
};
use geokv_workload::{arrivals, number_values, TimedOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::Scenario;
use crate::stats::{LinkStats, RunStats, StorageSample};
use crate::SimError;

/// Milliseconds to simulated nanoseconds.
pub fn ns(ms: f64) -> Nanos {
    (ms * 1e6).round().max(0.0) as Nanos
}

/// Simulated nanoseconds to milliseconds.
pub fn ms(t: Nanos) -> f64 {
    t as f64 / 1e6
}

#[derive(Debug)]
enum Event {
    Deliver { from: Addr, to: Addr, msg: Message },
    Timer { at: Addr, timer: Timer },
    Arrive(usize),
    Crash(DcId),
    Recover(DcId),
    Reconfig(Box<Configuration>),
    Sample,
}

#[derive(Debug)]
struct Scheduled {
    time: Nanos,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed so the max-heap pops the earliest event; ties go to the first scheduled.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

/// History and measurements of one run.
#[derive(Clone, Debug)]
pub struct Run {
    pub history: History,
    pub stats: RunStats,
}

struct World<'a> {
    scenario: &'a Scenario,
    model: Model,
    sizing: Sizing,
    now: Nanos,
    seq: u64,
    queue: BinaryHeap<Scheduled>,
    servers: Vec<Server>,
    clients: Vec<Client>,
    controller: Controller,
    down: Vec<bool>,
    jitter: ChaCha8Rng,
    ops: Vec<TimedOp>,
    invoked: BTreeMap<u64, Nanos>,
    outcomes: BTreeMap<u64, OpOutcome>,
    vm_dollars: f64,
    links: BTreeMap<(DcId, DcId), LinkStats>,
    paused: BTreeSet<u64>,
    restarted: BTreeSet<u64>,
    in_flight: BTreeSet<u64>,
    puts_in_flight: usize,
    stats: RunStats,
}

impl<'a> World<'a> {
    fn new(scenario: &'a Scenario, model: Model, base: Arc<Configuration>, ops: Vec<TimedOp>) -> Self {
        let o = &scenario.options;
        let d = model.d();
        let dcs: Vec<DcId> = model.dcs().collect();
        let client_opts = ClientOptions {
            abd_opt: o.abd_opt,
            cas_opt: o.cas_opt,
            timeout: ns(o.timeout_ms),
            cache_capacity: o.cache_capacity,
            controller: scenario.controller,
        };
        let initial_size = scenario
            .initial_size
            .or_else(|| scenario.workload.first().map(|s| s.spec.obj_size as u64))
            .or_else(|| ops.first().map(|op| op.size))
            .unwrap_or(1000);
        let server_opts =
            ServerOptions { initial_size, payload_cap: o.payload_cap, gc_threshold: ns(o.gc_threshold_ms) };
        World {
            scenario,
            sizing: Sizing { meta: o.meta_size, control: o.control_size },
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            servers: dcs.iter().map(|&dc| Server::new(dc, base.clone(), server_opts.clone())).collect(),
            clients: dcs.iter().map(|&dc| Client::new(dc, base.clone(), client_opts.clone())).collect(),
            controller: Controller::new(scenario.controller, base, dcs.clone()),
            down: vec![false; d],
            jitter: ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x6a09_e667_f3bc_c909),
            ops,
            invoked: BTreeMap::new(),
            outcomes: BTreeMap::new(),
            vm_dollars: 0.0,
            links: BTreeMap::new(),
            paused: BTreeSet::new(),
            restarted: BTreeSet::new(),
            in_flight: BTreeSet::new(),
            puts_in_flight: 0,
            stats: RunStats { seed: scenario.seed, ..RunStats::default() },
            model,
        }
    }

    fn schedule(&mut self, time: Nanos, event: Event) {
        self.seq += 1;
        self.queue.push(Scheduled { time, seq: self.seq, event });
    }

    fn send(&mut self, from: Addr, to: Addr, msg: Message) {
        let bytes = self.sizing.bytes(&msg);
        let dollars = bytes * self.model.price(from.dc, to.dc);
        let link = self.links.entry((from.dc, to.dc)).or_insert_with(|| LinkStats { from: from.dc, to: to.dc, ..LinkStats::default() });
        link.messages += 1;
        link.bytes += bytes;
        link.dollars += dollars;
        self.stats.messages += 1;
        let t = &mut self.stats.traffic;
        match &msg {
            Message::Request(r) => {
                t.op_bytes += bytes;
                t.op_dollars += dollars;
                let id = r.ticket.op_id;
                *self.stats.op_bytes.entry(id).or_default() += bytes;
                *self.stats.op_dollars.entry(id).or_default() += dollars;
                self.stats.op_epochs.entry(id).or_default().insert(r.epoch);
            }
            Message::Response(r) => {
                t.op_bytes += bytes;
                t.op_dollars += dollars;
                *self.stats.op_bytes.entry(r.ticket.op_id).or_default() += bytes;
                *self.stats.op_dollars.entry(r.ticket.op_id).or_default() += dollars;
            }
            Message::Reconfig(_) => {
                t.reconfig_bytes += bytes;
                t.reconfig_dollars += dollars;
            }
            Message::MetadataRequest { .. } | Message::MetadataReply { .. } | Message::ConfigInvalidate { .. } => {
                t.metadata_bytes += bytes;
                t.metadata_dollars += dollars;
            }
        }
        let mut delay = self.model.latency(from.dc, to.dc) + self.model.transfer_ms(from.dc, to.dc, bytes);
        let j = self.scenario.options.jitter_ms;
        if j > 0.0 {
            delay += self.jitter.random_range(0.0..=j);
        }
        self.schedule(self.now + ns(delay), Event::Deliver { from, to, msg });
    }

    fn apply(&mut self, me: Addr, effects: Vec<Effect>) {
        for e in effects {
            match e {
                Effect::Send { to, msg } => self.send(me, to, msg),
                Effect::Arm { delay, timer } => self.schedule(self.now + delay, Event::Timer { at: me, timer }),
                Effect::Done(o) => self.finish(o),
                Effect::Paused { op_id, .. } => {
                    self.paused.insert(op_id);
                }
                Effect::FailedOver { op_id, .. } => {
                    self.restarted.insert(op_id);
                }
                Effect::MetadataFetch { .. } => self.stats.metadata_fetches += 1,
                Effect::Reconfigured(r) => self.stats.reconfigurations.push(r),
            }
        }
    }

    fn finish(&mut self, o: OpOutcome) {
        if self.in_flight.remove(&o.op_id) && o.kind == OpKind::Put {
            self.puts_in_flight -= 1;
        }
        let config = self.clients[o.origin.0].config_for(&o.key);
        let theta = self.model.theta_v;
        if let Some(sets) = config.quorums.get(&o.origin) {
            self.vm_dollars += theta * sets.iter().flatten().map(|j| self.model.vm_price[j.0]).sum::<f64>();
        }
        self.outcomes.insert(o.op_id, o);
    }

    fn lose(&mut self, ids: Vec<u64>) {
        for id in ids {
            if self.in_flight.remove(&id) && self.ops[id as usize].kind == OpKind::Put {
                self.puts_in_flight -= 1;
            }
        }
    }

    fn arrive(&mut self, index: usize) {
        let op = &self.ops[index];
        let dc = op.origin;
        if self.down[dc.0] {
            self.stats.ops_skipped += 1;
            return;
        }
        let value = op.value.map(|id| Value::new(id, op.size, self.scenario.options.payload_cap));
        let spec = OpSpec { op_id: index as u64, kind: op.kind, key: op.key.clone(), value };
        let kind = op.kind;
        self.invoked.insert(index as u64, self.now);
        self.in_flight.insert(index as u64);
        if kind == OpKind::Put {
            self.puts_in_flight += 1;
        }
        self.stats.max_concurrency = self.stats.max_concurrency.max(self.in_flight.len());
        self.stats.max_concurrent_puts = self.stats.max_concurrent_puts.max(self.puts_in_flight);
        let fx = self.clients[dc.0].invoke(self.now, spec);
        self.apply(Addr::client(dc), fx);
    }

    fn deliver(&mut self, from: Addr, to: Addr, msg: Message) {
        if self.down[to.dc.0] {
            self.stats.messages_dropped += 1;
            return;
        }
        let now = self.now;
        let fx = match to.role {
            Role::Server => self.servers[to.dc.0].handle(now, from, msg),
            Role::Client => self.clients[to.dc.0].handle(now, msg),
            Role::Controller if to.dc == self.controller.dc() => self.controller.handle(now, from, msg),
            Role::Controller => Vec::new(),
        };
        self.apply(to, fx);
    }

    fn sample(&mut self) {
        let mut bytes = 0.0;
        let mut dollars = 0.0;
        for s in &self.servers {
            let b = s.stored_bytes();
            bytes += b;
            dollars += b * self.model.storage_price[s.dc().0];
        }
        self.stats.storage.push(StorageSample { t_s: ms(self.now) / 1e3, bytes, dollars_per_s: dollars });
    }

    fn step(&mut self, ev: Event) -> Result<(), SimError> {
        match ev {
            Event::Deliver { from, to, msg } => self.deliver(from, to, msg),
            Event::Timer { at, timer } => {
                if !self.down[at.dc.0] && at.role == Role::Client {
                    let fx = self.clients[at.dc.0].on_timer(self.now, timer);
                    self.apply(at, fx);
                }
            }
            Event::Arrive(i) => self.arrive(i),
            Event::Crash(dc) => {
                if !self.down[dc.0] {
                    self.down[dc.0] = true;
                    let lost = self.clients[dc.0].crash();
                    self.lose(lost);
                }
            }
            Event::Recover(dc) => self.down[dc.0] = false,
            Event::Reconfig(target) => {
                if self.down[self.controller.dc().0] {
                    self.stats.reconfigs_skipped += 1;
                } else {
                    let target = self.scenario.complete(&target, &self.model)?;
                    let plan = ReconfigPlan { key: self.scenario.key.clone(), target };
                    let fx = self.controller.reconfigure(self.now, plan);
                    self.apply(Addr::controller(self.controller.dc()), fx);
                }
            }
            Event::Sample => self.sample(),
        }
        Ok(())
    }
}

fn requests(scenario: &Scenario, d: usize) -> Result<Vec<TimedOp>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut ops = Vec::new();
    for seg in &scenario.workload {
        ops.extend(arrivals(&seg.spec, &scenario.key, &mut rng, seg.start_s, seg.end_s)?);
    }
    ops.extend(scenario.trace.iter().cloned());
    if let Some(bad) = ops.iter().find(|o| o.origin.0 >= d) {
        return Err(SimError::Invalid(format!("request origin {} is outside the model", bad.origin)));
    }
    ops.sort_by(|a, b| a.t.total_cmp(&b.t));
    number_values(&mut ops);
    Ok(ops)
}

/// Runs `scenario` to completion.
///
/// Requests arrive until the scenario duration; afterwards the run continues
/// for `options.drain_s` so pending operations can finish. Operations still
/// pending then appear in the history without a response.
pub fn run(scenario: &Scenario) -> Result<Run, SimError> {
    let model = scenario.model()?;
    let d = model.d();
    let base = Arc::new(scenario.complete(&scenario.config.clone().with_epoch(0), &model)?);
    if scenario.controller.0 >= d {
        return Err(SimError::Invalid(format!("controller DC {} is outside the model", scenario.controller)));
    }
    for f in &scenario.failures {
        if f.dc.0 >= d {
            return Err(SimError::Invalid(format!("failed DC {} is outside the model", f.dc)));
        }
    }
    let ops = requests(scenario, d)?;
    let duration = scenario.duration();
    let end = ns((duration + scenario.options.drain_s) * 1e3);

    let mut w = World::new(scenario, model, base, ops);
    w.stats.duration_s = duration;
    for s in &mut w.servers {
        s.install_base(&scenario.key);
    }
    for i in 0..w.ops.len() {
        let t = ns(w.ops[i].t * 1e3);
        if w.ops[i].t < duration || scenario.duration_s.is_none() {
            w.schedule(t, Event::Arrive(i));
        }
    }
    for f in &scenario.failures {
        w.schedule(ns(f.at_s * 1e3), Event::Crash(f.dc));
        if let Some(r) = f.recover_s {
            w.schedule(ns(r * 1e3), Event::Recover(f.dc));
        }
    }
    for r in &scenario.reconfigs {
        w.schedule(ns(r.at_s * 1e3), Event::Reconfig(Box::new(r.target.clone())));
    }
    let step = scenario.options.storage_sample_ms;
    if step > 0.0 {
        let count = (duration * 1e3 / step).floor() as u64;
        for i in 0..=count {
            w.schedule(ns(i as f64 * step), Event::Sample);
        }
    }

    while let Some(s) = w.queue.pop() {
        if s.time > end {
            break;
        }
        w.now = s.time;
        w.step(s.event)?;
    }

    let records = w
        .invoked
        .iter()
        .map(|(&id, &t)| {
            let op = &w.ops[id as usize];
            match w.outcomes.get(&id) {
                Some(o) => OpRecord {
                    op_id: id,
                    kind: o.kind,
                    key: o.key.clone(),
                    origin: o.origin,
                    t_invoke: ms(o.invoked),
                    t_respond: Some(ms(o.completed)),
                    value_written: o.value_written,
                    value_read: o.value_read,
                    epoch: Some(o.epoch),
                    epoch_started: o.epoch_started,
                    one_phase: o.one_phase,
                    restarts: o.restarts,
                },
                None => OpRecord {
                    op_id: id,
                    kind: op.kind,
                    key: op.key.clone(),
                    origin: op.origin,
                    t_invoke: ms(t),
                    t_respond: None,
                    value_written: op.value,
                    value_read: None,
                    epoch: None,
                    epoch_started: 0,
                    one_phase: false,
                    restarts: 0,
                },
            }
        })
        .collect();
    let history = History::new(records);
    let mut stats = w.stats;
    stats.links = w.links.into_values().collect();
    stats.blocked_ops = w.paused.len();
    stats.restarted_ops = w.restarted.len();
    if duration > 0.0 {
        stats.network_dollars_per_s = stats.traffic.op_dollars / duration;
        stats.vm_dollars_per_s = w.vm_dollars / duration;
    }
    stats.summarize(&history, d);
    Ok(Run { history, stats })
}
