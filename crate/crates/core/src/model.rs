use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::ids::DcId;
use crate::scalar::Scalar;

pub const BYTES_PER_GB: f64 = 1e9;
pub const SECONDS_PER_MONTH: f64 = 30.0 * 24.0 * 3600.0;
pub const SECONDS_PER_HOUR: f64 = 3600.0;
/// 1 Gbit/s in bytes per second.
pub const DEFAULT_BANDWIDTH: f64 = 1.25e8;

/// Inter-DC latency, bandwidth and the three price tables, in internal units.
///
/// Latencies are one-way milliseconds, bandwidth is bytes per second, network
/// prices are dollars per byte charged at the sender, storage is dollars per
/// byte-second and VM price is dollars per second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ClusterModel<S> {
    pub names: Vec<String>,
    pub latency_ms: Vec<Vec<S>>,
    pub bandwidth: Vec<Vec<S>>,
    pub net_price: Vec<Vec<S>>,
    pub storage_price: Vec<S>,
    pub vm_price: Vec<S>,
    pub theta_v: S,
}

impl<S: Scalar> ClusterModel<S> {
    pub fn d(&self) -> usize {
        self.names.len()
    }

    pub fn dcs(&self) -> impl Iterator<Item = DcId> {
        (0..self.d()).map(DcId)
    }

    /// One-way latency in milliseconds.
    pub fn latency(&self, from: DcId, to: DcId) -> S {
        self.latency_ms[from.0][to.0]
    }

    /// Round trip `from -> to -> from` in milliseconds.
    pub fn rtt(&self, a: DcId, b: DcId) -> S {
        self.latency_ms[a.0][b.0] + self.latency_ms[b.0][a.0]
    }

    /// Milliseconds needed to push `bytes` over the link.
    pub fn transfer_ms(&self, from: DcId, to: DcId, bytes: S) -> S {
        bytes / self.bandwidth[from.0][to.0] * S::of(1000.0)
    }

    /// Dollars per byte sent from `from` to `to`.
    pub fn price(&self, from: DcId, to: DcId) -> S {
        self.net_price[from.0][to.0]
    }

    pub fn max_rtt(&self) -> S {
        let mut m = S::zero();
        for a in self.dcs() {
            for b in self.dcs() {
                m = m.max(self.rtt(a, b));
            }
        }
        m
    }

    pub fn index_of(&self, name: &str) -> Option<DcId> {
        self.names.iter().position(|n| n.eq_ignore_ascii_case(name)).map(DcId)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let d = self.d();
        let bad = |m: String| Err(CoreError::InvalidModel(m));
        if d == 0 {
            return bad("no data centers".into());
        }
        for (name, m) in [("latency", &self.latency_ms), ("bandwidth", &self.bandwidth), ("net_price", &self.net_price)]
        {
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                return bad(format!("{name} matrix is not {d}x{d}"));
            }
        }
        if self.storage_price.len() != d || self.vm_price.len() != d {
            return bad(format!("per-DC price vectors must have length {d}"));
        }
        let finite_nonneg = |x: &S| x.is_finite() && *x >= S::zero();
        if !self.latency_ms.iter().flatten().all(finite_nonneg) {
            return bad("latencies must be finite and non-negative".into());
        }
        if !self.bandwidth.iter().flatten().all(|b| b.is_finite() && *b > S::zero()) {
            return bad("bandwidth must be positive".into());
        }
        if !self.net_price.iter().flatten().chain(&self.storage_price).chain(&self.vm_price).all(finite_nonneg)
            || !finite_nonneg(&self.theta_v)
        {
            return bad("prices must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Converts to another scalar type.
    pub fn cast<T: Scalar>(&self) -> ClusterModel<T> {
        let m = |v: &Vec<Vec<S>>| v.iter().map(|r| r.iter().map(|x| T::of(x.as_f64())).collect()).collect();
        let v = |v: &Vec<S>| v.iter().map(|x| T::of(x.as_f64())).collect();
        ClusterModel {
            names: self.names.clone(),
            latency_ms: m(&self.latency_ms),
            bandwidth: m(&self.bandwidth),
            net_price: m(&self.net_price),
            storage_price: v(&self.storage_price),
            vm_price: v(&self.vm_price),
            theta_v: T::of(self.theta_v.as_f64()),
        }
    }

    /// Every DC `rtt_ms` apart from every other (local round trip `local_rtt_ms`),
    /// with one network price everywhere and free storage and VMs.
    pub fn uniform(d: usize, rtt_ms: f64, local_rtt_ms: f64, price_per_gb: f64) -> Self {
        ModelFile::uniform(d, rtt_ms, local_rtt_ms, price_per_gb).into_model().expect("uniform model is well formed")
    }
}

/// On-disk form of a cluster model, in the units cloud price sheets use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dcs: Vec<String>,
    /// Round-trip times in milliseconds.
    pub rtt_ms: Vec<Vec<f64>>,
    /// Outbound transfer price in $/GB, row = sender.
    pub net_price_per_gb: Vec<Vec<f64>>,
    #[serde(default)]
    pub storage_price_per_gb_month: Vec<f64>,
    #[serde(default)]
    pub vm_price_per_hour: Vec<f64>,
    /// Defaults to 1 Gbit/s on every link.
    #[serde(default)]
    pub bandwidth_bytes_per_sec: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub theta_v: f64,
}

impl ModelFile {
    /// File form of [`ClusterModel::uniform`].
    pub fn uniform(d: usize, rtt_ms: f64, local_rtt_ms: f64, price_per_gb: f64) -> Self {
        ModelFile {
            dcs: (0..d).map(|i| format!("dc{i}")).collect(),
            rtt_ms: (0..d).map(|i| (0..d).map(|j| if i == j { local_rtt_ms } else { rtt_ms }).collect()).collect(),
            net_price_per_gb: vec![vec![price_per_gb; d]; d],
            storage_price_per_gb_month: vec![0.0; d],
            vm_price_per_hour: vec![0.0; d],
            bandwidth_bytes_per_sec: None,
            theta_v: 0.0,
        }
    }

    pub fn from_json(text: &str, file: &str) -> Result<Self, CoreError> {
        serde_json::from_str(text).map_err(|e| CoreError::Parse { file: file.into(), message: e.to_string() })
    }

    /// Reads an RTT matrix and a network price matrix, each a CSV whose header row is
    /// `dc,<name>,...` and whose rows are `<name>,<value>,...`.
    pub fn from_csv(rtt: impl Read, prices: impl Read) -> Result<Self, CoreError> {
        let (dcs, rtt_ms) = read_matrix(rtt, "rtt csv")?;
        let (names, net_price_per_gb) = read_matrix(prices, "price csv")?;
        if names != dcs {
            return Err(CoreError::Parse { file: "price csv".into(), message: "DC names differ from rtt csv".into() });
        }
        let d = dcs.len();
        Ok(ModelFile {
            dcs,
            rtt_ms,
            net_price_per_gb,
            storage_price_per_gb_month: vec![0.0; d],
            vm_price_per_hour: vec![0.0; d],
            bandwidth_bytes_per_sec: None,
            theta_v: 0.0,
        })
    }

    pub fn into_model<S: Scalar>(self) -> Result<ClusterModel<S>, CoreError> {
        let d = self.dcs.len();
        let pad = |v: Vec<f64>| if v.is_empty() { vec![0.0; d] } else { v };
        let conv = |m: &Vec<Vec<f64>>, f: &dyn Fn(f64) -> f64| -> Vec<Vec<S>> {
            m.iter().map(|r| r.iter().map(|&x| S::of(f(x))).collect()).collect()
        };
        let bandwidth = match &self.bandwidth_bytes_per_sec {
            Some(b) => conv(b, &|x| x),
            None => vec![vec![S::of(DEFAULT_BANDWIDTH); d]; d],
        };
        let model = ClusterModel {
            names: self.dcs.clone(),
            latency_ms: conv(&self.rtt_ms, &|x| x / 2.0),
            bandwidth,
            net_price: conv(&self.net_price_per_gb, &|x| x / BYTES_PER_GB),
            storage_price: pad(self.storage_price_per_gb_month)
                .into_iter()
                .map(|x| S::of(x / BYTES_PER_GB / SECONDS_PER_MONTH))
                .collect(),
            vm_price: pad(self.vm_price_per_hour).into_iter().map(|x| S::of(x / SECONDS_PER_HOUR)).collect(),
            theta_v: S::of(self.theta_v),
        };
        model.validate()?;
        Ok(model)
    }
}

fn read_matrix(r: impl Read, file: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CoreError> {
    let err = |line: usize, message: String| CoreError::Parse { file: file.into(), message: format!("line {line}: {message}") };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        if rec.len() != names.len() + 1 {
            return Err(err(line, format!("expected {} columns, got {}", names.len() + 1, rec.len())));
        }
        match names.get(i) {
            None => return Err(err(line, "more rows than columns".into())),
            Some(n) if rec.get(0) != Some(n.as_str()) => {
                return Err(err(line, format!("row label should be `{n}`")));
            }
            _ => {}
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| err(line, format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.len() != names.len() {
        return Err(err(rows.len() + 2, format!("expected {} rows", names.len())));
    }
    Ok((names, rows))
}
