//! Client library: one per DC, running GET and PUT operations against the
//! configuration it believes is current for each key.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use geokv_core::{ClientId, Configuration, DcId, Key, OpKind, Protocol, QuorumRole, Tag, Value, ValueId};
use serde::Serialize;

use crate::cache::ValueCache;
use crate::cas;
use crate::effect::{Effect, Nanos, Timer};
use crate::message::{Addr, Fragment, Message, Request, RequestBody, Response, ResponseBody, Ticket};

#[derive(Clone, Debug)]
pub struct ClientOptions {
    /// Let ABD reads finish in one phase when enough servers agree.
    pub abd_opt: bool,
    /// Let CAS reads finish in one phase on agreement plus a cache hit.
    pub cas_opt: bool,
    /// Time a phase waits for its quorum before contacting every server.
    pub timeout: Nanos,
    pub cache_capacity: usize,
    /// DC whose controller serves metadata.
    pub controller: DcId,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions { abd_opt: true, cas_opt: true, timeout: 900_000_000, cache_capacity: 1024, controller: DcId(0) }
    }
}

#[derive(Clone, Debug)]
pub struct OpSpec {
    pub op_id: u64,
    pub kind: OpKind,
    pub key: Key,
    /// Value to write; ignored for GETs.
    pub value: Option<Value>,
}

/// Result of a completed operation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpOutcome {
    pub op_id: u64,
    pub kind: OpKind,
    pub key: Key,
    pub origin: DcId,
    pub invoked: Nanos,
    pub completed: Nanos,
    pub value_written: Option<ValueId>,
    pub value_read: Option<ValueId>,
    /// Epoch the operation finished in.
    pub epoch: u64,
    /// Epoch of the first attempt.
    pub epoch_started: u64,
    pub one_phase: bool,
    pub restarts: u32,
    pub metadata_fetches: u32,
}

#[derive(Clone, Debug)]
enum Stage {
    AwaitMeta,
    AbdQuery { replies: BTreeMap<DcId, (Tag, Option<Value>)> },
    AbdWrite { tag: Tag, value: Value, acks: BTreeSet<DcId> },
    CasQuery { replies: BTreeMap<DcId, Tag> },
    CasPreWrite { tag: Tag, frags: Vec<Fragment>, acks: BTreeSet<DcId> },
    CasFinalize { tag: Tag, acks: BTreeSet<DcId> },
    CasRead { tag: Tag, replied: BTreeSet<DcId>, frags: BTreeMap<usize, Fragment> },
}

impl Stage {
    fn phase(&self) -> u8 {
        match self {
            Stage::AwaitMeta => 0,
            Stage::AbdQuery { .. } | Stage::CasQuery { .. } => 1,
            Stage::AbdWrite { .. } | Stage::CasPreWrite { .. } => 2,
            Stage::CasFinalize { .. } => 3,
            Stage::CasRead { .. } => 4,
        }
    }
}

#[derive(Clone, Debug)]
struct OpState {
    spec: OpSpec,
    invoked: Nanos,
    config: Arc<Configuration>,
    attempt: u32,
    epoch_started: Option<u64>,
    restarts: u32,
    fetches: u32,
    stage: Stage,
    contacted: BTreeSet<DcId>,
    broadcast: bool,
}

#[derive(Clone, Debug)]
struct Cached {
    config: Arc<Configuration>,
    /// Highest epoch announced by the controller.
    announced: u64,
}

impl Cached {
    fn stale(&self) -> bool {
        self.announced > self.config.epoch
    }
}

#[derive(Clone, Debug)]
pub struct Client {
    dc: DcId,
    base: Arc<Configuration>,
    opts: ClientOptions,
    configs: BTreeMap<Key, Cached>,
    ops: BTreeMap<u64, OpState>,
    awaiting_meta: BTreeMap<Key, Vec<u64>>,
    cache: ValueCache,
}

impl Client {
    pub fn new(dc: DcId, base: Arc<Configuration>, opts: ClientOptions) -> Self {
        let cache = ValueCache::new(opts.cache_capacity);
        Client { dc, base, opts, configs: BTreeMap::new(), ops: BTreeMap::new(), awaiting_meta: BTreeMap::new(), cache }
    }

    pub fn dc(&self) -> DcId {
        self.dc
    }

    /// Operations invoked here that have not completed.
    pub fn pending(&self) -> usize {
        self.ops.len()
    }

    /// Configuration the client would use for `key` right now.
    pub fn config_for(&self, key: &Key) -> Arc<Configuration> {
        self.configs.get(key).map(|c| c.config.clone()).unwrap_or_else(|| self.base.clone())
    }

    /// Forgets every in-flight operation, as if the process died. Returns their ids.
    pub fn crash(&mut self) -> Vec<u64> {
        self.awaiting_meta.clear();
        std::mem::take(&mut self.ops).into_keys().collect()
    }

    fn cached(&mut self, key: &Key) -> &mut Cached {
        let base = self.base.clone();
        self.configs.entry(key.clone()).or_insert_with(|| Cached { announced: base.epoch, config: base })
    }

    fn learn(&mut self, key: &Key, config: Arc<Configuration>) {
        let entry = self.cached(key);
        entry.announced = entry.announced.max(config.epoch);
        if config.epoch > entry.config.epoch {
            entry.config = config;
        }
    }

    pub fn invoke(&mut self, now: Nanos, spec: OpSpec) -> Vec<Effect> {
        let mut out = Vec::new();
        let op_id = spec.op_id;
        let key = spec.key.clone();
        let entry = self.cached(&key).clone();
        let mut op = OpState {
            spec,
            invoked: now,
            config: entry.config.clone(),
            attempt: 0,
            epoch_started: None,
            restarts: 0,
            fetches: 0,
            stage: Stage::AwaitMeta,
            contacted: BTreeSet::new(),
            broadcast: false,
        };
        if entry.stale() {
            op.fetches = 1;
            self.ops.insert(op_id, op);
            out.push(Effect::MetadataFetch { op_id, key: key.clone() });
            let waiters = self.awaiting_meta.entry(key.clone()).or_default();
            if waiters.is_empty() {
                out.push(Effect::Send {
                    to: Addr::controller(self.opts.controller),
                    msg: Message::MetadataRequest { key },
                });
            }
            waiters.push(op_id);
        } else {
            self.ops.insert(op_id, op);
            self.start(now, op_id, &mut out);
        }
        out
    }

    pub fn handle(&mut self, now: Nanos, msg: Message) -> Vec<Effect> {
        let mut out = Vec::new();
        match msg {
            Message::Response(resp) => self.on_response(now, resp, &mut out),
            Message::MetadataReply { key, config } => {
                self.learn(&key, config);
                let config = self.config_for(&key);
                for op_id in self.awaiting_meta.remove(&key).unwrap_or_default() {
                    if let Some(op) = self.ops.get_mut(&op_id) {
                        op.config = config.clone();
                        self.start(now, op_id, &mut out);
                    }
                }
            }
            Message::ConfigInvalidate { key, epoch } => {
                let entry = self.cached(&key);
                entry.announced = entry.announced.max(epoch);
            }
            _ => {}
        }
        out
    }

    pub fn on_timer(&mut self, now: Nanos, timer: Timer) -> Vec<Effect> {
        let mut out = Vec::new();
        if let Timer::Phase { op_id, attempt, phase } = timer {
            let current = self.ops.get(&op_id).is_some_and(|op| op.attempt == attempt && op.stage.phase() == phase);
            if current {
                self.widen(now, op_id, &mut out);
            }
        }
        out
    }

    /// Starts a fresh attempt with phase one under the op's current configuration.
    fn start(&mut self, now: Nanos, op_id: u64, out: &mut Vec<Effect>) {
        let (protocol, role) = {
            let op = self.ops.get_mut(&op_id).expect("live op");
            op.epoch_started.get_or_insert(op.config.epoch);
            let op = &self.ops[&op_id];
            (op.config.protocol, self.query_role(op))
        };
        let stage = match protocol {
            Protocol::Abd => Stage::AbdQuery { replies: BTreeMap::new() },
            Protocol::Cas => Stage::CasQuery { replies: BTreeMap::new() },
        };
        self.begin(now, op_id, stage, role, out);
    }

    /// Quorum used by phase one: the larger of the query and confirmation
    /// quorums when the one-phase read is enabled.
    fn query_role(&self, op: &OpState) -> QuorumRole {
        if op.spec.kind != OpKind::Get {
            return QuorumRole::Query;
        }
        let (enabled, other) = match op.config.protocol {
            Protocol::Abd => (self.opts.abd_opt, QuorumRole::AbdWrite),
            Protocol::Cas => (self.opts.cas_opt, QuorumRole::Read),
        };
        if enabled && op.config.q(other.index()) > op.config.q(QuorumRole::Query.index()) {
            other
        } else {
            QuorumRole::Query
        }
    }

    fn query_need(&self, op: &OpState) -> usize {
        let q1 = op.config.q(QuorumRole::Query.index());
        if op.spec.kind != OpKind::Get {
            return q1;
        }
        match op.config.protocol {
            Protocol::Abd if self.opts.abd_opt => q1.max(op.config.q(QuorumRole::AbdWrite.index())),
            Protocol::Cas if self.opts.cas_opt => q1.max(op.config.q(QuorumRole::Read.index())),
            _ => q1,
        }
    }

    fn begin(&mut self, now: Nanos, op_id: u64, stage: Stage, role: QuorumRole, out: &mut Vec<Effect>) {
        let dc = self.dc;
        let timeout = self.opts.timeout;
        let op = self.ops.get_mut(&op_id).expect("live op");
        op.stage = stage;
        let targets: Vec<DcId> = match op.config.quorum(dc, role.index()) {
            Some(q) => q.to_vec(),
            None => op.config.servers.clone(),
        };
        op.contacted = targets.iter().copied().collect();
        op.broadcast = op.contacted.len() >= op.config.n();
        for s in targets {
            send_request(op, s, out);
        }
        if !op.broadcast {
            out.push(Effect::Arm {
                delay: timeout,
                timer: Timer::Phase { op_id, attempt: op.attempt, phase: op.stage.phase() },
            });
        }
        self.advance(now, op_id, out);
    }

    /// Sends the current phase's request to every server not contacted yet.
    fn widen(&mut self, _now: Nanos, op_id: u64, out: &mut Vec<Effect>) {
        let op = self.ops.get_mut(&op_id).expect("live op");
        if op.broadcast {
            return;
        }
        op.broadcast = true;
        let rest: Vec<DcId> = op.config.servers.iter().copied().filter(|s| !op.contacted.contains(s)).collect();
        for s in rest {
            op.contacted.insert(s);
            send_request(op, s, out);
        }
    }

    fn on_response(&mut self, now: Nanos, resp: Response, out: &mut Vec<Effect>) {
        let op_id = resp.ticket.op_id;
        let Some(op) = self.ops.get_mut(&op_id) else { return };
        if resp.ticket.attempt != op.attempt || resp.ticket.phase != op.stage.phase() || resp.epoch != op.config.epoch {
            return;
        }
        let from = resp.from;
        if let ResponseBody::OperationFail { config } = resp.body {
            let old_epoch = op.config.epoch;
            let key = op.spec.key.clone();
            self.learn(&key, config);
            let config = self.config_for(&key);
            let op = self.ops.get_mut(&op_id).expect("live op");
            op.config = config;
            op.attempt += 1;
            op.restarts += 1;
            out.push(Effect::FailedOver { op_id, key, epoch: old_epoch });
            self.start(now, op_id, out);
            return;
        }
        match (&mut op.stage, resp.body) {
            (Stage::AbdQuery { replies }, ResponseBody::AbdTag { tag }) => {
                replies.insert(from, (tag, None));
            }
            (Stage::AbdQuery { replies }, ResponseBody::AbdTagValue { tag, value }) => {
                replies.insert(from, (tag, Some(value)));
            }
            (Stage::AbdWrite { acks, .. }, ResponseBody::Ack)
            | (Stage::CasPreWrite { acks, .. }, ResponseBody::Ack)
            | (Stage::CasFinalize { acks, .. }, ResponseBody::Ack) => {
                acks.insert(from);
            }
            (Stage::CasQuery { replies }, ResponseBody::CasTag { tag }) => {
                replies.insert(from, tag);
            }
            (Stage::CasRead { tag, replied, frags }, ResponseBody::CasChunk { tag: got, frag }) if *tag == got => {
                replied.insert(from);
                if let Some(f) = frag {
                    frags.insert(f.index, f);
                }
            }
            _ => return,
        }
        self.advance(now, op_id, out);
    }

    /// Moves the operation forward if its current phase has what it needs.
    fn advance(&mut self, now: Nanos, op_id: u64, out: &mut Vec<Effect>) {
        let Some(op) = self.ops.get(&op_id).cloned() else { return };
        let op = &op;
        let config = op.config.clone();
        let q = |role: QuorumRole| config.q(role.index());
        let writer = ClientId(op_id);
        let is_get = op.spec.kind == OpKind::Get;
        match &op.stage {
            Stage::AwaitMeta => {}
            Stage::AbdQuery { replies } => {
                if replies.len() < self.query_need(op) {
                    return;
                }
                let (tag, value) = max_reply(replies);
                if !is_get {
                    let value = op.spec.value.clone().expect("PUT carries a value");
                    let stage = Stage::AbdWrite { tag: tag.successor(writer), value, acks: BTreeSet::new() };
                    self.begin(now, op_id, stage, QuorumRole::AbdWrite, out);
                    return;
                }
                let value = value.expect("read query returns values");
                let agree = replies.values().filter(|(t, _)| *t == tag).count();
                if self.opts.abd_opt && agree >= q(QuorumRole::AbdWrite) {
                    self.complete(now, op_id, Some(value), true, out);
                } else {
                    let stage = Stage::AbdWrite { tag, value, acks: BTreeSet::new() };
                    self.begin(now, op_id, stage, QuorumRole::AbdWrite, out);
                }
            }
            Stage::AbdWrite { value, acks, .. } => {
                if acks.len() >= q(QuorumRole::AbdWrite) {
                    let read = is_get.then(|| value.clone());
                    self.complete(now, op_id, read, false, out);
                }
            }
            Stage::CasQuery { replies } => {
                if replies.len() < self.query_need(op) {
                    return;
                }
                let tag = replies.values().copied().max().expect("non-empty quorum");
                if !is_get {
                    let value = op.spec.value.as_ref().expect("PUT carries a value");
                    let frags = cas::encode(value, config.n(), config.k);
                    let stage = Stage::CasPreWrite { tag: tag.successor(writer), frags, acks: BTreeSet::new() };
                    self.begin(now, op_id, stage, QuorumRole::PreWrite, out);
                    return;
                }
                let agree = replies.values().filter(|&&t| t == tag).count();
                if self.opts.cas_opt && agree >= q(QuorumRole::Read) {
                    let key = op.spec.key.clone();
                    if let Some(v) = self.cache.get(&key, tag) {
                        self.complete(now, op_id, Some(v), true, out);
                        return;
                    }
                }
                let stage = Stage::CasRead { tag, replied: BTreeSet::new(), frags: BTreeMap::new() };
                self.begin(now, op_id, stage, QuorumRole::Read, out);
            }
            Stage::CasPreWrite { tag, acks, .. } => {
                if acks.len() >= q(QuorumRole::PreWrite) {
                    let stage = Stage::CasFinalize { tag: *tag, acks: BTreeSet::new() };
                    self.begin(now, op_id, stage, QuorumRole::Finalize, out);
                }
            }
            Stage::CasFinalize { acks, .. } => {
                if acks.len() >= q(QuorumRole::Finalize) {
                    self.complete(now, op_id, None, false, out);
                }
            }
            Stage::CasRead { tag, replied, frags } => {
                if replied.len() < q(QuorumRole::Read) {
                    return;
                }
                if frags.len() >= config.k {
                    let value = cas::decode(frags.values(), config.n(), config.k)
                        .expect("k distinct fragments of one tag decode");
                    let key = op.spec.key.clone();
                    self.cache.insert(key, *tag, value.clone());
                    self.complete(now, op_id, Some(value), false, out);
                } else {
                    // Quorum answered but too few chunks: ask everyone and keep waiting.
                    self.widen(now, op_id, out);
                }
            }
        }
    }

    fn complete(&mut self, now: Nanos, op_id: u64, read: Option<Value>, one_phase: bool, out: &mut Vec<Effect>) {
        let op = self.ops.remove(&op_id).expect("live op");
        let written = match op.spec.kind {
            OpKind::Put => op.spec.value.as_ref().map(|v| v.id),
            OpKind::Get => None,
        };
        out.push(Effect::Done(OpOutcome {
            op_id,
            kind: op.spec.kind,
            key: op.spec.key,
            origin: self.dc,
            invoked: op.invoked,
            completed: now,
            value_written: written,
            value_read: read.map(|v| v.id),
            epoch: op.config.epoch,
            epoch_started: op.epoch_started.unwrap_or(op.config.epoch),
            one_phase,
            restarts: op.restarts,
            metadata_fetches: op.fetches,
        }));
    }
}

fn max_reply(replies: &BTreeMap<DcId, (Tag, Option<Value>)>) -> (Tag, Option<Value>) {
    replies.values().max_by_key(|(t, _)| *t).cloned().expect("non-empty quorum")
}

fn send_request(op: &OpState, server: DcId, out: &mut Vec<Effect>) {
    let body = match &op.stage {
        Stage::AwaitMeta => return,
        Stage::AbdQuery { .. } => RequestBody::AbdQuery { with_value: op.spec.kind == OpKind::Get },
        Stage::AbdWrite { tag, value, .. } => RequestBody::AbdWrite { tag: *tag, value: value.clone() },
        Stage::CasQuery { .. } => RequestBody::CasQuery,
        Stage::CasPreWrite { tag, frags, .. } => {
            let Some(pos) = op.config.position(server) else { return };
            RequestBody::CasPreWrite { tag: *tag, frag: frags[pos].clone() }
        }
        Stage::CasFinalize { tag, .. } => RequestBody::CasFinalizeWrite { tag: *tag },
        Stage::CasRead { tag, .. } => RequestBody::CasFinalizeRead { tag: *tag },
    };
    out.push(Effect::Send {
        to: Addr::server(server),
        msg: Message::Request(Request {
            key: op.spec.key.clone(),
            epoch: op.config.epoch,
            ticket: Ticket { op_id: op.spec.op_id, attempt: op.attempt, phase: op.stage.phase() },
            body,
        }),
    });
}
