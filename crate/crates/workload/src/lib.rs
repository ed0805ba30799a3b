//! Request streams for one key: synthetic Poisson arrivals, CSV traces, and
//! statistics measured from a finished history.

mod measure;
mod trace;

use geokv_core::{CoreError, DcId, Key, OpKind, ValueId, Workload};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use measure::{measure, predicted_one_phase_fraction, MeasureOptions, OriginStats, ViolationWindow, WorkloadStats};
pub use trace::{read_trace, write_trace, TRACE_HEADER};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("{file}: line {line}: {message}")]
    Trace { file: String, line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Spec(#[from] CoreError),
}

/// One request, `t` seconds after the start of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedOp {
    pub t: f64,
    pub kind: OpKind,
    pub key: Key,
    pub origin: DcId,
    pub size: u64,
    /// Written value; PUTs only, unique within a stream.
    pub value: Option<ValueId>,
}

/// Numbers PUT values `1, 2, ...` in stream order; `0` is the initial value.
pub fn number_values(ops: &mut [TimedOp]) {
    let mut next = 0;
    for op in ops {
        op.value = match op.kind {
            OpKind::Put => {
                next += 1;
                Some(ValueId(next))
            }
            OpKind::Get => None,
        };
    }
}

/// Poisson arrivals at rate `spec.lambda` over `[start_s, end_s)`, each a GET
/// with probability `spec.read_ratio` from an origin drawn from `spec.origin_dist`.
/// Values are left unnumbered.
pub fn arrivals(spec: &Workload, key: &Key, rng: &mut impl Rng, start_s: f64, end_s: f64) -> Result<Vec<TimedOp>, WorkloadError> {
    spec.validate(spec.origin_dist.len())?;
    let gap = Exp::new(spec.lambda).map_err(|e| CoreError::InvalidWorkload(e.to_string()))?;
    let origin = WeightedIndex::new(&spec.origin_dist).map_err(|e| CoreError::InvalidWorkload(e.to_string()))?;
    let mut out = Vec::new();
    let mut t = start_s;
    loop {
        t += gap.sample(rng);
        if t >= end_s {
            return Ok(out);
        }
        let kind = if rng.random_bool(spec.read_ratio) { OpKind::Get } else { OpKind::Put };
        out.push(TimedOp { t, kind, key: key.clone(), origin: DcId(origin.sample(rng)), size: spec.obj_size as u64, value: None });
    }
}

/// A seeded stream over `[0, duration_s)` with PUT values numbered.
pub fn generate(spec: &Workload, key: &Key, seed: u64, duration_s: f64) -> Result<Vec<TimedOp>, WorkloadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = arrivals(spec, key, &mut rng, 0.0, duration_s)?;
    number_values(&mut ops);
    Ok(ops)
}
