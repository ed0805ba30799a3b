use geokv_core::{DcId, Key};

use crate::client::OpOutcome;
use crate::message::{Addr, Message};
use crate::reconfig::ReconfigReport;

/// Simulated time in nanoseconds.
pub type Nanos = u64;

/// Timers an actor can arm; they come back through the actor's timer handler.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Timer {
    /// A client phase has waited too long for its quorum.
    Phase { op_id: u64, attempt: u32, phase: u8 },
    /// Periodic garbage collection on a server.
    Gc,
}

/// Something an actor asks its driver to do or record.
#[derive(Clone, Debug)]
pub enum Effect {
    Send { to: Addr, msg: Message },
    Arm { delay: Nanos, timer: Timer },
    /// A client operation finished.
    Done(OpOutcome),
    /// A server deferred a request because its epoch is being reconfigured.
    Paused { op_id: u64, key: Key, epoch: u64, server: DcId },
    /// A client restarted an operation after `epoch` was retired.
    FailedOver { op_id: u64, key: Key, epoch: u64 },
    /// A client fetched fresh metadata before running an operation.
    MetadataFetch { op_id: u64, key: Key },
    /// The controller finished moving a key to a new configuration.
    Reconfigured(ReconfigReport),
}
