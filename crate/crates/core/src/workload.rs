use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::scalar::Scalar;

fn default_meta<S: Scalar>() -> S {
    S::of(100.0)
}

fn default_f() -> usize {
    1
}

/// Per-key demand and service targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct WorkloadSpec<S> {
    /// Requests per second.
    pub lambda: S,
    /// Fraction of requests that are GETs.
    pub read_ratio: S,
    /// Fraction of requests issued from each DC.
    pub origin_dist: Vec<S>,
    /// Object size in bytes.
    pub obj_size: S,
    /// Metadata (tag, label) size in bytes.
    #[serde(default = "default_meta")]
    pub meta_size: S,
    /// Latency targets in milliseconds.
    pub slo_get: S,
    pub slo_put: S,
    /// Number of DC failures to tolerate.
    #[serde(default = "default_f")]
    pub f: usize,
}

impl<S: Scalar> WorkloadSpec<S> {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, d: usize) -> Result<(), CoreError> {
        let bad = |m: String| Err(CoreError::InvalidWorkload(m));
        if self.origin_dist.len() != d {
            return bad(format!("origin_dist has {} entries, model has {d} DCs", self.origin_dist.len()));
        }
        if self.origin_dist.iter().any(|a| !a.is_finite() || *a < S::zero()) {
            return bad("origin_dist entries must be non-negative".into());
        }
        let total: f64 = self.origin_dist.iter().map(|a| a.as_f64()).sum();
        let tol = if std::mem::size_of::<S>() < 8 { 1e-6 } else { 1e-9 };
        if (total - 1.0).abs() > tol {
            return bad(format!("origin_dist sums to {total}, not 1"));
        }
        if !(self.lambda > S::zero()) {
            return bad("lambda must be positive".into());
        }
        if !(self.read_ratio >= S::zero() && self.read_ratio <= S::one()) {
            return bad("read_ratio must lie in [0, 1]".into());
        }
        if !(self.obj_size > S::zero()) || !(self.meta_size >= S::zero()) {
            return bad("sizes must be positive".into());
        }
        if !(self.slo_get > S::zero()) || !(self.slo_put > S::zero()) {
            return bad("SLOs must be positive".into());
        }
        if self.f == 0 {
            return bad("f must be at least 1".into());
        }
        Ok(())
    }

    /// All demand from one DC.
    pub fn single_origin(d: usize, origin: usize) -> Vec<S> {
        (0..d).map(|i| if i == origin { S::one() } else { S::zero() }).collect()
    }

    /// Demand spread evenly over `origins`.
    pub fn spread(d: usize, origins: &[usize]) -> Vec<S> {
        let share = S::one() / S::of_usize(origins.len());
        (0..d).map(|i| if origins.contains(&i) { share } else { S::zero() }).collect()
    }

    pub fn cast<T: Scalar>(&self) -> WorkloadSpec<T> {
        WorkloadSpec {
            lambda: T::of(self.lambda.as_f64()),
            read_ratio: T::of(self.read_ratio.as_f64()),
            origin_dist: self.origin_dist.iter().map(|a| T::of(a.as_f64())).collect(),
            obj_size: T::of(self.obj_size.as_f64()),
            meta_size: T::of(self.meta_size.as_f64()),
            slo_get: T::of(self.slo_get.as_f64()),
            slo_put: T::of(self.slo_put.as_f64()),
            f: self.f,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_size_defaults_to_100() {
        let w: WorkloadSpec<f64> = serde_json::from_str(
            r#"{"lambda":10,"read_ratio":0.5,"origin_dist":[0.5,0.5],"obj_size":1000,"slo_get":500,"slo_put":500}"#,
        )
        .unwrap();
        assert_eq!(w.meta_size, 100.0);
        assert_eq!(w.f, 1);
        assert!(w.validate(2).is_ok());
        assert!(w.validate(3).is_err());
    }

    #[test]
    fn rejects_bad_distribution() {
        let mut w = WorkloadSpec::<f64> {
            lambda: 1.0,
            read_ratio: 0.5,
            origin_dist: vec![0.4, 0.4],
            obj_size: 1.0,
            meta_size: 100.0,
            slo_get: 1.0,
            slo_put: 1.0,
            f: 1,
        };
        assert!(w.validate(2).is_err());
        w.origin_dist = vec![0.5, 0.5];
        w.read_ratio = 1.5;
        assert!(w.validate(2).is_err());
    }
}
