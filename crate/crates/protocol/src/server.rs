//! Storage server: one per DC, holding a replica per `(key, epoch)` it serves.

use std::collections::BTreeMap;
use std::sync::Arc;

use geokv_core::{Configuration, DcId, Key, Protocol, Tag, Value, ValueId};

use crate::abd::AbdRegister;
use crate::cas::{self, CasRegister};
use crate::effect::{Effect, Nanos};
use crate::message::{
    Addr, Message, Payload, ReconfigMsg, Request, RequestBody, Response, ResponseBody,
};

#[derive(Clone, Debug)]
pub struct ServerOptions {
    /// Logical size of the initial value every key starts with.
    pub initial_size: u64,
    /// Physical byte cap for values built by the server.
    pub payload_cap: usize,
    /// Age after which superseded coded entries are dropped.
    pub gc_threshold: Nanos,
}

impl Default for ServerOptions {
    fn default() -> Self {
        ServerOptions { initial_size: 1000, payload_cap: 64, gc_threshold: 50 * 300_000_000 }
    }
}

#[derive(Clone, Debug)]
pub enum Register {
    Abd(AbdRegister),
    Cas(CasRegister),
    /// Data dropped after the epoch was retired.
    Empty,
}

impl Register {
    fn stored_bytes(&self) -> f64 {
        match self {
            Register::Abd(r) => r.stored_bytes(),
            Register::Cas(r) => r.stored_bytes(),
            Register::Empty => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Status {
    Active,
    /// A reconfiguration has queried this replica; client requests wait here.
    Paused(Vec<(Addr, Request)>),
    /// Handed over to `next`; `tag` is the highest tag carried across.
    Retired { tag: Tag, next: Arc<Configuration> },
}

#[derive(Clone, Debug)]
pub struct Replica {
    pub config: Arc<Configuration>,
    pub register: Register,
    pub status: Status,
}

#[derive(Clone, Debug)]
pub struct Server {
    dc: DcId,
    base: Arc<Configuration>,
    opts: ServerOptions,
    replicas: BTreeMap<(Key, u64), Replica>,
    /// Messages for epochs not installed here yet, replayed on install.
    waiting: BTreeMap<(Key, u64), Vec<(Addr, Message)>>,
}

impl Server {
    pub fn new(dc: DcId, base: Arc<Configuration>, opts: ServerOptions) -> Self {
        Server { dc, base, opts, replicas: BTreeMap::new(), waiting: BTreeMap::new() }
    }

    pub fn dc(&self) -> DcId {
        self.dc
    }

    pub fn replica(&self, key: &Key, epoch: u64) -> Option<&Replica> {
        self.replicas.get(&(key.clone(), epoch))
    }

    /// Bytes currently held across all replicas.
    pub fn stored_bytes(&self) -> f64 {
        self.replicas.values().map(|r| r.register.stored_bytes()).sum()
    }

    /// Creates the initial replica of `key` now instead of on first contact.
    pub fn install_base(&mut self, key: &Key) {
        let epoch = self.base.epoch;
        self.ensure_base(key, epoch);
    }

    /// Installs the epoch-0 replica of `key` on first touch.
    fn ensure_base(&mut self, key: &Key, epoch: u64) {
        if epoch != self.base.epoch || self.base.position(self.dc).is_none() {
            return;
        }
        let slot = (key.clone(), epoch);
        if self.replicas.contains_key(&slot) {
            return;
        }
        let v0 = Value::new(ValueId::INITIAL, self.opts.initial_size, self.opts.payload_cap);
        let register = match self.base.protocol {
            Protocol::Abd => Register::Abd(AbdRegister::new(Tag::INITIAL, v0)),
            Protocol::Cas => {
                let pos = self.base.position(self.dc).expect("checked above");
                let frag = cas::encode(&v0, self.base.n(), self.base.k).swap_remove(pos);
                Register::Cas(CasRegister::with_finalized(Tag::INITIAL, Some(frag), 0))
            }
        };
        self.replicas.insert(slot, Replica { config: self.base.clone(), register, status: Status::Active });
    }

    pub fn handle(&mut self, now: Nanos, from: Addr, msg: Message) -> Vec<Effect> {
        let mut out = Vec::new();
        self.dispatch(now, from, msg, &mut out);
        out
    }

    fn dispatch(&mut self, now: Nanos, from: Addr, msg: Message, out: &mut Vec<Effect>) {
        let slot = match &msg {
            Message::Request(r) => (r.key.clone(), r.epoch),
            Message::Reconfig(ReconfigMsg::Query { key, epoch })
            | Message::Reconfig(ReconfigMsg::Get { key, epoch, .. })
            | Message::Reconfig(ReconfigMsg::Finish { key, epoch, .. }) => (key.clone(), *epoch),
            Message::Reconfig(ReconfigMsg::Write { key, config, tag, data }) => {
                self.install(now, from, key.clone(), config.clone(), *tag, data.clone(), out);
                return;
            }
            _ => return,
        };
        self.ensure_base(&slot.0, slot.1);
        if !self.replicas.contains_key(&slot) {
            self.waiting.entry(slot).or_default().push((from, msg));
            return;
        }
        match msg {
            Message::Request(req) => self.on_request(now, from, req, out),
            Message::Reconfig(ReconfigMsg::Query { key, epoch }) => {
                let dc = self.dc;
                let replica = self.replicas.get_mut(&slot).expect("present");
                if let Status::Active = replica.status {
                    replica.status = Status::Paused(Vec::new());
                }
                let (tag, value) = match &replica.register {
                    Register::Abd(r) => (r.tag, Some(r.value.clone())),
                    Register::Cas(r) => (r.highest_fin(), None),
                    Register::Empty => return,
                };
                out.push(Effect::Send {
                    to: from,
                    msg: Message::Reconfig(ReconfigMsg::QueryReply { key, epoch, from: dc, tag, value }),
                });
            }
            Message::Reconfig(ReconfigMsg::Get { key, epoch, tag }) => {
                let dc = self.dc;
                let replica = self.replicas.get_mut(&slot).expect("present");
                let frag = match &mut replica.register {
                    Register::Cas(r) => r.finalize_read(tag, now),
                    Register::Abd(_) | Register::Empty => None,
                };
                out.push(Effect::Send {
                    to: from,
                    msg: Message::Reconfig(ReconfigMsg::GetReply { key, epoch, from: dc, tag, frag }),
                });
            }
            Message::Reconfig(ReconfigMsg::Finish { tag, next, .. }) => self.finish(now, slot, tag, next, out),
            _ => {}
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn install(
        &mut self,
        now: Nanos,
        from: Addr,
        key: Key,
        config: Arc<Configuration>,
        tag: Tag,
        data: Payload,
        out: &mut Vec<Effect>,
    ) {
        let epoch = config.epoch;
        let slot = (key.clone(), epoch);
        if !self.replicas.contains_key(&slot) {
            let register = match data {
                Payload::Full(v) => Register::Abd(AbdRegister::new(tag, v)),
                Payload::Coded(f) => Register::Cas(CasRegister::with_finalized(tag, Some(f), now)),
            };
            self.replicas.insert(slot.clone(), Replica { config, register, status: Status::Active });
        }
        out.push(Effect::Send {
            to: from,
            msg: Message::Reconfig(ReconfigMsg::WriteAck { key, epoch, from: self.dc }),
        });
        for (sender, msg) in self.waiting.remove(&slot).unwrap_or_default() {
            self.dispatch(now, sender, msg, out);
        }
    }

    fn finish(&mut self, now: Nanos, slot: (Key, u64), tag: Tag, next: Arc<Configuration>, out: &mut Vec<Effect>) {
        let replica = self.replicas.get_mut(&slot).expect("present");
        let deferred = match std::mem::replace(&mut replica.status, Status::Active) {
            Status::Paused(d) => d,
            Status::Active => Vec::new(),
            retired @ Status::Retired { .. } => {
                replica.status = retired;
                return;
            }
        };
        for (from, req) in deferred {
            match req.body.tag() {
                Some(t) if t <= tag => self.serve(now, from, req, out),
                _ => self.fail(from, req, next.clone(), out),
            }
        }
        let replica = self.replicas.get_mut(&slot).expect("present");
        replica.register = Register::Empty;
        replica.status = Status::Retired { tag, next };
    }

    fn on_request(&mut self, now: Nanos, from: Addr, req: Request, out: &mut Vec<Effect>) {
        let slot = (req.key.clone(), req.epoch);
        let replica = self.replicas.get_mut(&slot).expect("present");
        match &mut replica.status {
            Status::Active => self.serve(now, from, req, out),
            Status::Paused(deferred) => {
                out.push(Effect::Paused {
                    op_id: req.ticket.op_id,
                    key: req.key.clone(),
                    epoch: req.epoch,
                    server: self.dc,
                });
                deferred.push((from, req));
            }
            // A write at or below the handed-over tag is already superseded in
            // the new configuration; acknowledging it keeps its original tag.
            Status::Retired { tag, .. } if req.body.is_write() && req.body.tag().is_some_and(|t| t <= *tag) => {
                self.reply(from, &req, ResponseBody::Ack, out);
            }
            Status::Retired { next, .. } => {
                let next = next.clone();
                self.fail(from, req, next, out);
            }
        }
    }

    fn fail(&self, from: Addr, req: Request, config: Arc<Configuration>, out: &mut Vec<Effect>) {
        self.reply(from, &req, ResponseBody::OperationFail { config }, out);
    }

    fn reply(&self, to: Addr, req: &Request, body: ResponseBody, out: &mut Vec<Effect>) {
        out.push(Effect::Send {
            to,
            msg: Message::Response(Response {
                key: req.key.clone(),
                epoch: req.epoch,
                ticket: req.ticket,
                from: self.dc,
                body,
            }),
        });
    }

    /// Applies a request to the register regardless of status and replies.
    fn serve(&mut self, now: Nanos, from: Addr, req: Request, out: &mut Vec<Effect>) {
        let threshold = self.opts.gc_threshold;
        let replica = self.replicas.get_mut(&(req.key.clone(), req.epoch)).expect("present");
        let body = match (&mut replica.register, &req.body) {
            (Register::Abd(r), RequestBody::AbdQuery { with_value: true }) => {
                ResponseBody::AbdTagValue { tag: r.tag, value: r.value.clone() }
            }
            (Register::Abd(r), RequestBody::AbdQuery { with_value: false }) => ResponseBody::AbdTag { tag: r.tag },
            (Register::Abd(r), RequestBody::AbdWrite { tag, value }) => {
                r.write(*tag, value);
                ResponseBody::Ack
            }
            (Register::Cas(r), RequestBody::CasQuery) => ResponseBody::CasTag { tag: r.highest_fin() },
            (Register::Cas(r), RequestBody::CasPreWrite { tag, frag }) => {
                r.pre_write(*tag, frag.clone(), now);
                r.gc(now, threshold);
                ResponseBody::Ack
            }
            (Register::Cas(r), RequestBody::CasFinalizeWrite { tag }) => {
                r.finalize(*tag, now);
                r.gc(now, threshold);
                ResponseBody::Ack
            }
            (Register::Cas(r), RequestBody::CasFinalizeRead { tag }) => {
                let frag = r.finalize_read(*tag, now);
                r.gc(now, threshold);
                ResponseBody::CasChunk { tag: *tag, frag }
            }
            // A request for the other protocol is malformed; drop it.
            _ => return,
        };
        self.reply(from, &req, body, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{Ticket, Fragment};
    use geokv_core::ClientId;

    fn abd_base() -> Arc<Configuration> {
        Arc::new(Configuration::new(Protocol::Abd, vec![DcId(0), DcId(1), DcId(2)], 1, vec![2, 2]))
    }

    fn cas_base() -> Arc<Configuration> {
        Arc::new(Configuration::new(Protocol::Cas, vec![DcId(0), DcId(1), DcId(2), DcId(3)], 2, vec![2, 3, 3, 3]))
    }

    fn req(epoch: u64, op: u64, body: RequestBody) -> Message {
        Message::Request(Request {
            key: Key::new("k"),
            epoch,
            ticket: Ticket { op_id: op, attempt: 0, phase: 1 },
            body,
        })
    }

    fn only_response(effects: &[Effect]) -> &ResponseBody {
        match effects {
            [Effect::Send { msg: Message::Response(r), .. }] => &r.body,
            other => panic!("expected one response, got {other:?}"),
        }
    }

    const CLIENT: Addr = Addr { dc: DcId(1), role: crate::message::Role::Client };
    const CTRL: Addr = Addr { dc: DcId(0), role: crate::message::Role::Controller };

    #[test]
    fn lazily_serves_initial_value() {
        let mut s = Server::new(DcId(0), abd_base(), ServerOptions::default());
        let fx = s.handle(0, CLIENT, req(0, 1, RequestBody::AbdQuery { with_value: true }));
        match only_response(&fx) {
            ResponseBody::AbdTagValue { tag, value } => {
                assert_eq!(*tag, Tag::INITIAL);
                assert_eq!(value.id, ValueId::INITIAL);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cas_initial_chunks_decode_to_initial_value() {
        let base = cas_base();
        let mut frags = Vec::new();
        for dc in [DcId(3), DcId(1)] {
            let mut s = Server::new(dc, base.clone(), ServerOptions::default());
            let fx = s.handle(0, CLIENT, req(0, 1, RequestBody::CasFinalizeRead { tag: Tag::INITIAL }));
            match only_response(&fx) {
                ResponseBody::CasChunk { frag: Some(f), .. } => frags.push(f.clone()),
                other => panic!("{other:?}"),
            }
        }
        let v = cas::decode(&frags, 4, 2).unwrap();
        assert_eq!(v.id, ValueId::INITIAL);
        assert_eq!(v.size, ServerOptions::default().initial_size);
    }

    #[test]
    fn paused_requests_resolve_on_finish() {
        let mut s = Server::new(DcId(0), abd_base(), ServerOptions::default());
        let next = Arc::new((*abd_base()).clone().with_epoch(1));
        s.handle(0, CTRL, Message::Reconfig(ReconfigMsg::Query { key: Key::new("k"), epoch: 0 }));
        let v = Value::new(ValueId(9), 10, 10);
        let low = Tag::new(1, ClientId(1));
        let high = Tag::new(2, ClientId(1));
        let fx = s.handle(1, CLIENT, req(0, 1, RequestBody::AbdWrite { tag: low, value: v.clone() }));
        assert!(matches!(fx.as_slice(), [Effect::Paused { op_id: 1, .. }]));
        s.handle(2, CLIENT, req(0, 2, RequestBody::AbdWrite { tag: high, value: v.clone() }));
        s.handle(3, CLIENT, req(0, 3, RequestBody::AbdQuery { with_value: true }));
        let fx = s.handle(
            4,
            CTRL,
            Message::Reconfig(ReconfigMsg::Finish { key: Key::new("k"), epoch: 0, tag: low, next: next.clone() }),
        );
        let bodies: Vec<(u64, bool)> = fx
            .iter()
            .map(|e| match e {
                Effect::Send { msg: Message::Response(r), .. } => {
                    (r.ticket.op_id, matches!(r.body, ResponseBody::OperationFail { .. }))
                }
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(bodies, vec![(1, false), (2, true), (3, true)]);
        let fx = s.handle(5, CLIENT, req(0, 4, RequestBody::AbdQuery { with_value: false }));
        match only_response(&fx) {
            ResponseBody::OperationFail { config } => assert_eq!(config.epoch, 1),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.stored_bytes(), 0.0);
    }

    #[test]
    fn messages_for_new_epoch_wait_for_install() {
        let mut s = Server::new(DcId(2), abd_base(), ServerOptions::default());
        let next = Arc::new((*abd_base()).clone().with_epoch(1));
        let fx = s.handle(0, CLIENT, req(1, 1, RequestBody::AbdQuery { with_value: false }));
        assert!(fx.is_empty());
        let t = Tag::new(3, ClientId(5));
        let fx = s.handle(
            1,
            CTRL,
            Message::Reconfig(ReconfigMsg::Write {
                key: Key::new("k"),
                config: next,
                tag: t,
                data: Payload::Full(Value::new(ValueId(4), 10, 10)),
            }),
        );
        assert_eq!(fx.len(), 2);
        assert!(matches!(&fx[0], Effect::Send { msg: Message::Reconfig(ReconfigMsg::WriteAck { epoch: 1, .. }), .. }));
        match &fx[1] {
            Effect::Send { msg: Message::Response(r), .. } => {
                assert!(matches!(r.body, ResponseBody::AbdTag { tag } if tag == t))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cas_query_reports_highest_finalized_tag() {
        let mut s = Server::new(DcId(0), cas_base(), ServerOptions::default());
        let t = Tag::new(1, ClientId(7));
        let frag = Fragment { index: 0, data: Arc::from(vec![0u8; 4]), value_size: 100, byte_len: 8, k: 2 };
        s.handle(0, CLIENT, req(0, 1, RequestBody::CasPreWrite { tag: t, frag }));
        let fx = s.handle(1, CLIENT, req(0, 2, RequestBody::CasQuery));
        assert!(matches!(only_response(&fx), ResponseBody::CasTag { tag } if *tag == Tag::INITIAL));
        s.handle(2, CLIENT, req(0, 3, RequestBody::CasFinalizeWrite { tag: t }));
        let fx = s.handle(3, CLIENT, req(0, 4, RequestBody::CasQuery));
        assert!(matches!(only_response(&fx), ResponseBody::CasTag { tag } if *tag == t));
    }

    #[test]
    fn retired_replica_acks_superseded_writes_only() {
        let mut s = Server::new(DcId(0), cas_base(), ServerOptions::default());
        let next = Arc::new((*cas_base()).clone().with_epoch(1));
        let handed = Tag::new(5, ClientId(1));
        s.handle(0, CTRL, Message::Reconfig(ReconfigMsg::Query { key: Key::new("k"), epoch: 0 }));
        s.handle(1, CTRL, Message::Reconfig(ReconfigMsg::Finish { key: Key::new("k"), epoch: 0, tag: handed, next }));
        let old = Tag::new(3, ClientId(2));
        let fx = s.handle(2, CLIENT, req(0, 1, RequestBody::CasFinalizeWrite { tag: old }));
        assert!(matches!(only_response(&fx), ResponseBody::Ack));
        let fx = s.handle(3, CLIENT, req(0, 2, RequestBody::CasFinalizeWrite { tag: Tag::new(6, ClientId(2)) }));
        assert!(matches!(only_response(&fx), ResponseBody::OperationFail { .. }));
        // Reads still need data the replica no longer has.
        let fx = s.handle(4, CLIENT, req(0, 3, RequestBody::CasFinalizeRead { tag: old }));
        assert!(matches!(only_response(&fx), ResponseBody::OperationFail { .. }));
    }
}
