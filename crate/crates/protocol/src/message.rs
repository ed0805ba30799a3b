use std::sync::Arc;

use geokv_core::{Configuration, DcId, Key, Tag, Value};

/// Which actor inside a DC a message is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Server,
    Client,
    Controller,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Addr {
    pub dc: DcId,
    pub role: Role,
}

impl Addr {
    pub fn server(dc: DcId) -> Self {
        Addr { dc, role: Role::Server }
    }

    pub fn client(dc: DcId) -> Self {
        Addr { dc, role: Role::Client }
    }

    pub fn controller(dc: DcId) -> Self {
        Addr { dc, role: Role::Controller }
    }
}

/// A coded chunk together with what is needed to rebuild the value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub index: usize,
    pub data: Arc<[u8]>,
    /// Logical size of the whole value, for accounting.
    pub value_size: u64,
    /// Physical length of the encoded content.
    pub byte_len: usize,
    pub k: usize,
}

impl Fragment {
    /// Accounted size: the value size divided by the code dimension.
    pub fn size(&self) -> f64 {
        self.value_size as f64 / self.k as f64
    }
}

/// Identifies the attempt and phase a request belongs to, so stale replies are ignored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ticket {
    pub op_id: u64,
    pub attempt: u32,
    pub phase: u8,
}

#[derive(Clone, Debug)]
pub struct Request {
    pub key: Key,
    pub epoch: u64,
    pub ticket: Ticket,
    pub body: RequestBody,
}

#[derive(Clone, Debug)]
pub enum RequestBody {
    /// ABD phase one; `with_value` for GETs.
    AbdQuery { with_value: bool },
    /// ABD write-value or read write-back.
    AbdWrite { tag: Tag, value: Value },
    /// CAS phase one: highest finalized tag.
    CasQuery,
    CasPreWrite { tag: Tag, frag: Fragment },
    CasFinalizeWrite { tag: Tag },
    CasFinalizeRead { tag: Tag },
}

impl RequestBody {
    /// Tag carried by the request; `None` for the tag queries of phase one.
    pub fn tag(&self) -> Option<Tag> {
        match self {
            RequestBody::AbdQuery { .. } | RequestBody::CasQuery => None,
            RequestBody::AbdWrite { tag, .. }
            | RequestBody::CasPreWrite { tag, .. }
            | RequestBody::CasFinalizeWrite { tag }
            | RequestBody::CasFinalizeRead { tag } => Some(*tag),
        }
    }

    /// Whether the request stores a tag on behalf of a writer or a read write-back.
    pub fn is_write(&self) -> bool {
        matches!(self, RequestBody::AbdWrite { .. } | RequestBody::CasPreWrite { .. } | RequestBody::CasFinalizeWrite { .. })
    }
}

#[derive(Clone, Debug)]
pub struct Response {
    pub key: Key,
    pub epoch: u64,
    pub ticket: Ticket,
    pub from: DcId,
    pub body: ResponseBody,
}

#[derive(Clone, Debug)]
pub enum ResponseBody {
    AbdTag { tag: Tag },
    AbdTagValue { tag: Tag, value: Value },
    Ack,
    CasTag { tag: Tag },
    CasChunk { tag: Tag, frag: Option<Fragment> },
    /// The epoch was retired; retry under `config`.
    OperationFail { config: Arc<Configuration> },
}

/// Payload written into a new configuration.
#[derive(Clone, Debug)]
pub enum Payload {
    Full(Value),
    Coded(Fragment),
}

#[derive(Clone, Debug)]
pub enum ReconfigMsg {
    Query { key: Key, epoch: u64 },
    QueryReply { key: Key, epoch: u64, from: DcId, tag: Tag, value: Option<Value> },
    Get { key: Key, epoch: u64, tag: Tag },
    GetReply { key: Key, epoch: u64, from: DcId, tag: Tag, frag: Option<Fragment> },
    Write { key: Key, config: Arc<Configuration>, tag: Tag, data: Payload },
    WriteAck { key: Key, epoch: u64, from: DcId },
    Finish { key: Key, epoch: u64, tag: Tag, next: Arc<Configuration> },
}

#[derive(Clone, Debug)]
pub enum Message {
    Request(Request),
    Response(Response),
    Reconfig(ReconfigMsg),
    MetadataRequest { key: Key },
    MetadataReply { key: Key, config: Arc<Configuration> },
    ConfigInvalidate { key: Key, epoch: u64 },
}

impl Message {
    /// Client operation the message belongs to, if any.
    pub fn op_id(&self) -> Option<u64> {
        match self {
            Message::Request(r) => Some(r.ticket.op_id),
            Message::Response(r) => Some(r.ticket.op_id),
            _ => None,
        }
    }
}

/// Byte sizes charged for each message kind.
///
/// Values and chunks are charged at their logical size, tags and labels at
/// `meta`, and bare requests and acknowledgements at `control`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sizing {
    pub meta: f64,
    pub control: f64,
}

impl Default for Sizing {
    fn default() -> Self {
        Sizing { meta: 100.0, control: 0.0 }
    }
}

impl Sizing {
    pub fn bytes(&self, msg: &Message) -> f64 {
        match msg {
            Message::Request(r) => match &r.body {
                RequestBody::AbdQuery { .. } | RequestBody::CasQuery => self.control,
                RequestBody::AbdWrite { value, .. } => value.size as f64,
                RequestBody::CasPreWrite { frag, .. } => frag.size(),
                RequestBody::CasFinalizeWrite { .. } | RequestBody::CasFinalizeRead { .. } => self.meta,
            },
            Message::Response(r) => match &r.body {
                ResponseBody::AbdTag { .. } | ResponseBody::CasTag { .. } => self.meta,
                ResponseBody::AbdTagValue { value, .. } => value.size as f64,
                ResponseBody::Ack => self.control,
                ResponseBody::CasChunk { frag: Some(f), .. } => f.size(),
                ResponseBody::CasChunk { frag: None, .. } => self.control,
                ResponseBody::OperationFail { .. } => self.meta,
            },
            Message::Reconfig(m) => match m {
                ReconfigMsg::Query { .. } | ReconfigMsg::WriteAck { .. } => self.control,
                ReconfigMsg::QueryReply { value: Some(v), .. } => v.size as f64,
                ReconfigMsg::QueryReply { value: None, .. } => self.meta,
                ReconfigMsg::Get { .. } | ReconfigMsg::Finish { .. } => self.meta,
                ReconfigMsg::GetReply { frag: Some(f), .. } => f.size(),
                ReconfigMsg::GetReply { frag: None, .. } => self.control,
                ReconfigMsg::Write { data: Payload::Full(v), .. } => v.size as f64,
                ReconfigMsg::Write { data: Payload::Coded(f), .. } => f.size(),
            },
            Message::MetadataRequest { .. } => self.control,
            Message::MetadataReply { .. } | Message::ConfigInvalidate { .. } => self.meta,
        }
    }
}
