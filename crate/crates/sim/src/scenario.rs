use std::path::Path;

use geokv_core::{Configuration, CoreError, DcId, Key, Model, ModelFile, Workload};
use geokv_workload::TimedOp;
use serde::{Deserialize, Serialize};

use crate::SimError;

/// Requests generated at `spec.lambda` over `[start_s, end_s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    pub spec: Workload,
}

/// A DC that stops at `at_s` and, optionally, comes back at `recover_s`.
///
/// A crashed DC neither sends nor receives. Its server keeps its stored state
/// across a recovery; its client loses every pending operation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Failure {
    pub dc: DcId,
    pub at_s: f64,
    #[serde(default)]
    pub recover_s: Option<f64>,
}

/// A reconfiguration the controller starts at `at_s`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduledReconfig {
    pub at_s: f64,
    /// Origins without explicit quorums get the nearest servers.
    pub target: Configuration,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub abd_opt: bool,
    pub cas_opt: bool,
    /// Phase timeout before a client widens to every server.
    pub timeout_ms: f64,
    pub cache_capacity: usize,
    /// Bytes charged for tags and labels.
    pub meta_size: f64,
    /// Bytes charged for bare requests and acknowledgements.
    pub control_size: f64,
    /// Bytes of value payload actually materialized; sizes are still accounted in full.
    pub payload_cap: usize,
    pub gc_threshold_ms: f64,
    /// Extra delay drawn uniformly from `[0, jitter_ms]` per message.
    pub jitter_ms: f64,
    /// Interval between storage samples; zero disables sampling.
    pub storage_sample_ms: f64,
    /// How long the run continues after the last arrival to let operations finish.
    pub drain_s: f64,
    /// Fault tolerance every configuration is checked against.
    pub f: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            abd_opt: true,
            cas_opt: true,
            timeout_ms: 900.0,
            cache_capacity: 1024,
            meta_size: 100.0,
            control_size: 0.0,
            payload_cap: 64,
            gc_threshold_ms: 60_000.0,
            jitter_ms: 0.0,
            storage_sample_ms: 1000.0,
            drain_s: 30.0,
            f: 1,
        }
    }
}

fn default_key() -> Key {
    Key::new("key")
}

/// Everything a run needs. Loaded from JSON; `trace` is filled in by callers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub model: ModelFile,
    /// Starting configuration; epoch 0.
    pub config: Configuration,
    #[serde(default = "default_key")]
    pub key: Key,
    #[serde(default)]
    pub workload: Vec<Segment>,
    /// Explicit requests, merged with the generated ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TimedOp>,
    #[serde(default)]
    pub failures: Vec<Failure>,
    #[serde(default)]
    pub reconfigs: Vec<ScheduledReconfig>,
    #[serde(default)]
    pub controller: DcId,
    #[serde(default)]
    pub seed: u64,
    /// Arrivals stop here; defaults to the end of the last segment or trace entry.
    #[serde(default)]
    pub duration_s: Option<f64>,
    /// Size of the value every key starts with.
    #[serde(default)]
    pub initial_size: Option<u64>,
    #[serde(default)]
    pub options: SimOptions,
}

impl Scenario {
    /// A scenario with one workload segment and no failures or reconfigurations.
    pub fn steady(model: ModelFile, config: Configuration, spec: Workload, duration_s: f64, seed: u64) -> Self {
        Scenario {
            model,
            config,
            key: default_key(),
            workload: vec![Segment { start_s: 0.0, end_s: duration_s, spec }],
            trace: Vec::new(),
            failures: Vec::new(),
            reconfigs: Vec::new(),
            controller: DcId(0),
            seed,
            duration_s: Some(duration_s),
            initial_size: None,
            options: SimOptions::default(),
        }
    }

    pub fn from_json(text: &str, file: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| CoreError::Parse { file: file.into(), message: e.to_string() }.into())
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io { file: path.display().to_string(), source: e })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn duration(&self) -> f64 {
        self.duration_s.unwrap_or_else(|| {
            let seg = self.workload.iter().map(|s| s.end_s).fold(0.0, f64::max);
            let tr = self.trace.iter().map(|o| o.t).fold(0.0, f64::max);
            seg.max(tr)
        })
    }

    pub(crate) fn model(&self) -> Result<Model, SimError> {
        let m: Model = self.model.clone().into_model()?;
        m.validate()?;
        Ok(m)
    }

    /// Fills in missing per-origin quorums and checks the result.
    pub(crate) fn complete(&self, config: &Configuration, model: &Model) -> Result<Configuration, SimError> {
        let mut c = config.clone();
        let nearest = config.clone().with_nearest_quorums(model);
        for (origin, sets) in nearest.quorums {
            c.quorums.entry(origin).or_insert(sets);
        }
        c.validate(self.options.f)?;
        Ok(c)
    }
}
