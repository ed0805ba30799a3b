//! Worst-case GET and PUT latency seen from one origin.
//!
//! Each phase costs the slowest member's round trip plus transfer time; reads
//! are always charged both phases.

use geokv_core::{ClusterModel, Configuration, DcId, Protocol, Scalar, WorkloadSpec};

use crate::OptimizerError;

/// Per-member phase latencies in milliseconds, shared with the search.
pub(crate) struct PhaseTimes<S> {
    pub om: S,
    pub og: S,
    pub k: S,
}

impl<S: Scalar> PhaseTimes<S> {
    pub fn new(spec: &WorkloadSpec<S>, k: usize) -> Self {
        PhaseTimes { om: spec.meta_size, og: spec.obj_size, k: S::of_usize(k) }
    }

    fn rtt(model: &ClusterModel<S>, i: DcId, j: DcId) -> S {
        model.latency(i, j) + model.latency(j, i)
    }

    /// ABD query round trip with the reply carrying `bytes`.
    pub fn abd_query(&self, m: &ClusterModel<S>, i: DcId, j: DcId, bytes: S) -> S {
        Self::rtt(m, i, j) + m.transfer_ms(j, i, bytes)
    }

    /// ABD write round trip pushing `bytes`.
    pub fn abd_write(&self, m: &ClusterModel<S>, i: DcId, k: DcId, bytes: S) -> S {
        Self::rtt(m, i, k) + m.transfer_ms(i, k, bytes)
    }

    pub fn abd_get_query(&self, m: &ClusterModel<S>, i: DcId, j: DcId) -> S {
        self.abd_query(m, i, j, self.om + self.og)
    }

    pub fn abd_get_write(&self, m: &ClusterModel<S>, i: DcId, k: DcId) -> S {
        self.abd_write(m, i, k, self.om + self.og)
    }

    pub fn abd_put_query(&self, m: &ClusterModel<S>, i: DcId, j: DcId) -> S {
        self.abd_query(m, i, j, self.om)
    }

    pub fn abd_put_write(&self, m: &ClusterModel<S>, i: DcId, k: DcId) -> S {
        self.abd_write(m, i, k, self.og)
    }

    /// CAS tag query, used by both GET and PUT.
    pub fn cas_query(&self, m: &ClusterModel<S>, i: DcId, j: DcId) -> S {
        Self::rtt(m, i, j) + m.transfer_ms(j, i, self.om)
    }

    pub fn cas_prewrite(&self, m: &ClusterModel<S>, i: DcId, j: DcId) -> S {
        Self::rtt(m, i, j) + m.transfer_ms(i, j, self.og / self.k)
    }

    pub fn cas_finalize(&self, m: &ClusterModel<S>, i: DcId, k: DcId) -> S {
        Self::rtt(m, i, k) + m.transfer_ms(i, k, self.om)
    }

    pub fn cas_read(&self, m: &ClusterModel<S>, i: DcId, k: DcId) -> S {
        Self::rtt(m, i, k) + m.transfer_ms(i, k, self.om) + m.transfer_ms(k, i, self.og / self.k)
    }
}

fn slowest<S: Scalar>(set: &[DcId], f: impl Fn(DcId) -> S) -> S {
    set.iter().map(|&j| f(j)).fold(S::zero(), S::max)
}

/// `(get_ms, put_ms)` for requests issued at `origin`.
pub fn latency_worstcase<S: Scalar>(
    config: &Configuration,
    origin: DcId,
    spec: &WorkloadSpec<S>,
    model: &ClusterModel<S>,
) -> Result<(S, S), OptimizerError> {
    let q = config
        .quorums
        .get(&origin)
        .filter(|q| q.len() == config.protocol.quorum_count())
        .ok_or(OptimizerError::MissingQuorums(origin))?;
    let t = PhaseTimes::new(spec, config.k);
    let i = origin;
    Ok(match config.protocol {
        Protocol::Abd => {
            let get = slowest(&q[0], |j| t.abd_get_query(model, i, j)) + slowest(&q[1], |k| t.abd_get_write(model, i, k));
            let put = slowest(&q[0], |j| t.abd_put_query(model, i, j)) + slowest(&q[1], |k| t.abd_put_write(model, i, k));
            (get, put)
        }
        Protocol::Cas => {
            let query = slowest(&q[0], |j| t.cas_query(model, i, j));
            let get = query + slowest(&q[3], |k| t.cas_read(model, i, k));
            let put = query
                + slowest(&q[1], |j| t.cas_prewrite(model, i, j))
                + slowest(&q[2], |k| t.cas_finalize(model, i, k));
            (get, put)
        }
    })
}
