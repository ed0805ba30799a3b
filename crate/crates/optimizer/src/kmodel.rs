//! Closed-form cost of a coded configuration as a function of the code dimension `K`.
//!
//! `cost(K) = c1*lambda*K + c2*o*lambda*f/K + c3*o*2f/K + c4`: the first term grows
//! with the number of servers contacted, the others shrink with the chunk size.

use geokv_core::{Model, Scalar, Workload};
use serde::{Deserialize, Serialize};

#[allow(clippy::too_many_arguments)]
pub fn analytic_cost_k<S: Scalar>(k: S, o: S, lambda: S, f: S, c1: S, c2: S, c3: S, c4: S) -> S {
    let two = S::of(2.0);
    c1 * lambda * k + c2 * o * lambda * f / k + c3 * o * two * f / k + c4
}

/// Real-valued minimiser of [`analytic_cost_k`].
pub fn k_opt<S: Scalar>(o: S, lambda: S, f: S, c1: S, c2: S, c3: S) -> S {
    (o * f * (c2 * lambda + S::of(2.0) * c3) / (c1 * lambda)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl KCoefficients {
    pub fn cost(&self, k: f64, spec: &Workload) -> f64 {
        analytic_cost_k(k, spec.obj_size, spec.lambda, spec.f as f64, self.c1, self.c2, self.c3, self.c4)
    }

    pub fn k_opt(&self, spec: &Workload) -> f64 {
        k_opt(spec.obj_size, spec.lambda, spec.f as f64, self.c1, self.c2, self.c3)
    }

    /// The better of the two integers around [`Self::k_opt`], clamped to `[1, k_max]`.
    pub fn k_opt_integer(&self, spec: &Workload, k_max: usize) -> usize {
        let k = self.k_opt(spec);
        let lo = (k.floor() as usize).clamp(1, k_max.max(1));
        let hi = (k.ceil() as usize).clamp(1, k_max.max(1));
        if self.cost(hi as f64, spec) < self.cost(lo as f64, spec) {
            hi
        } else {
            lo
        }
    }

    /// Coefficients for a spatially uniform cluster: one network price on every
    /// link (including within a DC), one storage and one VM price, requests spread
    /// evenly and half of them reads, with the cheapest code-`K` layout on
    /// `N = K + 2f` servers. Returns `None` if the inputs are not of that form.
    pub fn uniform(model: &Model, spec: &Workload) -> Option<Self> {
        let d = model.d();
        let p = model.net_price[0][0];
        let ps = model.storage_price[0];
        let pv = model.vm_price[0];
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        let uniform = model.net_price.iter().flatten().all(|&x| same(x, p))
            && model.storage_price.iter().all(|&x| same(x, ps))
            && model.vm_price.iter().all(|&x| same(x, pv))
            && spec.origin_dist.iter().all(|&a| same(a, 1.0 / d as f64))
            && same(spec.read_ratio, 0.5);
        if !uniform {
            return None;
        }
        let (o, om, lambda, f, theta) = (spec.obj_size, spec.meta_size, spec.lambda, spec.f as f64, model.theta_v);
        Some(KCoefficients {
            c1: p * om + 3.0 * theta * pv,
            c2: p,
            c3: ps,
            c4: lambda * p * om * (2.0 * f + 1.0) + lambda * p * o + theta * pv * lambda * (4.0 * f + 1.0) + ps * o,
        })
    }
}
