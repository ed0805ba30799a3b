//! Metadata owner and reconfiguration driver.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use geokv_core::{Configuration, DcId, Key, Protocol, QuorumRole, Tag, Value};

use crate::cas;
use crate::effect::{Effect, Nanos};
use crate::message::{Addr, Fragment, Message, Payload, ReconfigMsg};
use crate::reconfig::{ReconfigPlan, ReconfigReport};

/// Current configuration of every key; keys never reconfigured use the base.
#[derive(Clone, Debug)]
pub struct MetadataMap {
    base: Arc<Configuration>,
    entries: BTreeMap<Key, Arc<Configuration>>,
}

impl MetadataMap {
    pub fn new(base: Arc<Configuration>) -> Self {
        MetadataMap { base, entries: BTreeMap::new() }
    }

    pub fn get(&self, key: &Key) -> Arc<Configuration> {
        self.entries.get(key).cloned().unwrap_or_else(|| self.base.clone())
    }

    /// Records `config` for `key`. Epochs only move forward; stale updates are refused.
    pub fn set(&mut self, key: Key, config: Arc<Configuration>) -> bool {
        if config.epoch <= self.get(&key).epoch {
            return false;
        }
        self.entries.insert(key, config);
        true
    }
}

#[derive(Clone, Debug)]
enum Step {
    Query { replies: BTreeMap<DcId, (Tag, Option<Value>)> },
    Get { tag: Tag, replied: BTreeSet<DcId>, frags: BTreeMap<usize, Fragment> },
    Write { tag: Tag, acks: BTreeSet<DcId> },
}

#[derive(Clone, Debug)]
struct Running {
    old: Arc<Configuration>,
    new: Arc<Configuration>,
    started: Nanos,
    query_done: Nanos,
    get_done: Option<Nanos>,
    step: Step,
}

#[derive(Clone, Debug)]
pub struct Controller {
    dc: DcId,
    metadata: MetadataMap,
    /// Every DC with a client, told about new epochs.
    clients: Vec<DcId>,
    queue: BTreeMap<Key, VecDeque<Configuration>>,
    running: BTreeMap<Key, Running>,
}

impl Controller {
    pub fn new(dc: DcId, base: Arc<Configuration>, clients: Vec<DcId>) -> Self {
        Controller { dc, metadata: MetadataMap::new(base), clients, queue: BTreeMap::new(), running: BTreeMap::new() }
    }

    pub fn dc(&self) -> DcId {
        self.dc
    }

    pub fn metadata(&self) -> &MetadataMap {
        &self.metadata
    }

    pub fn is_busy(&self, key: &Key) -> bool {
        self.running.contains_key(key)
    }

    /// Queues a move of `plan.key` to `plan.target`; moves of one key run one at a time.
    pub fn reconfigure(&mut self, now: Nanos, plan: ReconfigPlan) -> Vec<Effect> {
        let mut out = Vec::new();
        self.queue.entry(plan.key.clone()).or_default().push_back(plan.target);
        if !self.running.contains_key(&plan.key) {
            self.start_next(now, plan.key, &mut out);
        }
        out
    }

    fn start_next(&mut self, now: Nanos, key: Key, out: &mut Vec<Effect>) {
        let Some(target) = self.queue.get_mut(&key).and_then(VecDeque::pop_front) else { return };
        let old = self.metadata.get(&key);
        let new = Arc::new(target.with_epoch(old.epoch + 1));
        for &s in &old.servers {
            out.push(Effect::Send {
                to: Addr::server(s),
                msg: Message::Reconfig(ReconfigMsg::Query { key: key.clone(), epoch: old.epoch }),
            });
        }
        let running =
            Running { old, new, started: now, query_done: now, get_done: None, step: Step::Query { replies: BTreeMap::new() } };
        self.running.insert(key, running);
    }

    pub fn handle(&mut self, now: Nanos, from: Addr, msg: Message) -> Vec<Effect> {
        let mut out = Vec::new();
        match msg {
            Message::MetadataRequest { key } => {
                let config = self.metadata.get(&key);
                out.push(Effect::Send { to: from, msg: Message::MetadataReply { key, config } });
            }
            Message::Reconfig(m) => self.on_reconfig(now, m, &mut out),
            _ => {}
        }
        out
    }

    fn on_reconfig(&mut self, now: Nanos, msg: ReconfigMsg, out: &mut Vec<Effect>) {
        let key = match &msg {
            ReconfigMsg::QueryReply { key, .. } | ReconfigMsg::GetReply { key, .. } | ReconfigMsg::WriteAck { key, .. } => {
                key.clone()
            }
            _ => return,
        };
        let Some(run) = self.running.get_mut(&key) else { return };
        match (&mut run.step, msg) {
            (Step::Query { replies }, ReconfigMsg::QueryReply { epoch, from, tag, value, .. }) if epoch == run.old.epoch => {
                replies.insert(from, (tag, value));
            }
            (Step::Get { tag, replied, frags }, ReconfigMsg::GetReply { epoch, from, tag: got, frag, .. })
                if epoch == run.old.epoch && got == *tag =>
            {
                replied.insert(from);
                if let Some(f) = frag {
                    frags.insert(f.index, f);
                }
            }
            (Step::Write { acks, .. }, ReconfigMsg::WriteAck { epoch, from, .. }) if epoch == run.new.epoch => {
                acks.insert(from);
            }
            _ => return,
        }
        self.advance(now, key, out);
    }

    fn advance(&mut self, now: Nanos, key: Key, out: &mut Vec<Effect>) {
        let run = self.running.get_mut(&key).expect("running");
        let old = run.old.clone();
        let new = run.new.clone();
        let q_old = |r: QuorumRole| old.q(r.index());
        match &run.step {
            Step::Query { replies } => {
                // Enough replies to intersect every completed write or read confirmation.
                let need = match old.protocol {
                    Protocol::Abd => old.n() - q_old(QuorumRole::AbdWrite) + 1,
                    Protocol::Cas => old.n() - q_old(QuorumRole::Finalize).min(q_old(QuorumRole::Read)) + 1,
                };
                if replies.len() < need {
                    return;
                }
                let (tag, value) = replies.values().max_by_key(|(t, _)| *t).cloned().expect("non-empty");
                run.query_done = now;
                match old.protocol {
                    Protocol::Abd => {
                        let value = value.expect("replicated servers return their value");
                        self.write_new(now, key, tag, value, out);
                    }
                    Protocol::Cas => {
                        run.step = Step::Get { tag, replied: BTreeSet::new(), frags: BTreeMap::new() };
                        for &s in &old.servers {
                            out.push(Effect::Send {
                                to: Addr::server(s),
                                msg: Message::Reconfig(ReconfigMsg::Get { key: key.clone(), epoch: old.epoch, tag }),
                            });
                        }
                    }
                }
            }
            Step::Get { tag, replied, frags } => {
                if replied.len() < q_old(QuorumRole::Read) || frags.len() < old.k {
                    return;
                }
                let tag = *tag;
                let value = cas::decode(frags.values(), old.n(), old.k).expect("k distinct fragments decode");
                run.get_done = Some(now);
                self.write_new(now, key, tag, value, out);
            }
            Step::Write { tag, acks } => {
                let need = match new.protocol {
                    Protocol::Abd => new.q(QuorumRole::AbdWrite.index()),
                    Protocol::Cas => new.q(QuorumRole::PreWrite.index()).max(new.q(QuorumRole::Finalize.index())),
                };
                if acks.len() < need {
                    return;
                }
                let tag = *tag;
                let run = self.running.remove(&key).expect("running");
                let write_done = now;
                self.metadata.set(key.clone(), new.clone());
                for &d in &self.clients {
                    out.push(Effect::Send {
                        to: Addr::client(d),
                        msg: Message::ConfigInvalidate { key: key.clone(), epoch: new.epoch },
                    });
                }
                for &s in &old.servers {
                    out.push(Effect::Send {
                        to: Addr::server(s),
                        msg: Message::Reconfig(ReconfigMsg::Finish {
                            key: key.clone(),
                            epoch: old.epoch,
                            tag,
                            next: new.clone(),
                        }),
                    });
                }
                out.push(Effect::Reconfigured(ReconfigReport {
                    key: key.clone(),
                    from_epoch: old.epoch,
                    to_epoch: new.epoch,
                    from_protocol: old.protocol,
                    to_protocol: new.protocol,
                    from_servers: old.servers.clone(),
                    to_servers: new.servers.clone(),
                    started: run.started,
                    query_done: run.query_done,
                    get_done: run.get_done,
                    write_done,
                    finished: now,
                }));
                self.start_next(now, key, out);
            }
        }
    }

    fn write_new(&mut self, _now: Nanos, key: Key, tag: Tag, value: Value, out: &mut Vec<Effect>) {
        let run = self.running.get_mut(&key).expect("running");
        let new = run.new.clone();
        let frags = match new.protocol {
            Protocol::Abd => Vec::new(),
            Protocol::Cas => cas::encode(&value, new.n(), new.k),
        };
        for (pos, &s) in new.servers.iter().enumerate() {
            let data = match new.protocol {
                Protocol::Abd => Payload::Full(value.clone()),
                Protocol::Cas => Payload::Coded(frags[pos].clone()),
            };
            out.push(Effect::Send {
                to: Addr::server(s),
                msg: Message::Reconfig(ReconfigMsg::Write { key: key.clone(), config: new.clone(), tag, data }),
            });
        }
        run.step = Step::Write { tag, acks: BTreeSet::new() };
    }
}
