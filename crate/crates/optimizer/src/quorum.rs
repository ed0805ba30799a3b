//! Cheapest per-origin quorums under the latency targets.
//!
//! A quorum's contribution to cost is a sum over members and its
//! contribution to latency is a maximum, so for any bound on the maximum the
//! cheapest quorum is the `q` cheapest members that respect the bound. The
//! solvers enumerate the bounds actually attained by members, which makes
//! them exact.

use geokv_core::{DcId, Model, Protocol, Workload};

use crate::latency::PhaseTimes;

/// Slack for comparing latencies built from sums and differences.
pub(crate) const LAT_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
struct Cand {
    dc: DcId,
    w: f64,
    x: f64,
    y: f64,
}

#[derive(Clone, Debug)]
struct Pick {
    members: Vec<DcId>,
    w: f64,
    max_x: f64,
    max_y: f64,
}

fn sorted(mut c: Vec<Cand>) -> Vec<Cand> {
    c.sort_by(|a, b| a.w.total_cmp(&b.w).then(a.x.total_cmp(&b.x)).then(a.y.total_cmp(&b.y)).then(a.dc.cmp(&b.dc)));
    c
}

/// The `q` cheapest candidates with `x <= cap_x` and `y <= cap_y`.
fn pick(c: &[Cand], q: usize, cap_x: f64, cap_y: f64) -> Option<Pick> {
    let mut p = Pick { members: Vec::with_capacity(q), w: 0.0, max_x: 0.0, max_y: 0.0 };
    if q == 0 {
        return Some(p);
    }
    for m in c.iter().filter(|m| m.x <= cap_x + LAT_EPS && m.y <= cap_y + LAT_EPS) {
        p.members.push(m.dc);
        p.w += m.w;
        p.max_x = p.max_x.max(m.x);
        p.max_y = p.max_y.max(m.y);
        if p.members.len() == q {
            p.members.sort();
            return Some(p);
        }
    }
    None
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Quorums and their cost (network plus VM) for one origin.
#[derive(Clone, Debug)]
pub(crate) struct OriginChoice {
    pub quorums: Vec<Vec<DcId>>,
    pub cost: f64,
}

pub(crate) struct OriginProblem<'a> {
    pub model: &'a Model,
    pub spec: &'a Workload,
    pub origin: DcId,
    pub alpha: f64,
    pub servers: &'a [DcId],
    pub k: usize,
}

impl OriginProblem<'_> {
    fn vm(&self, j: DcId) -> f64 {
        self.model.theta_v * self.model.vm_price[j.0] * self.spec.lambda * self.alpha
    }

    fn cands(&self, f: impl Fn(DcId) -> (f64, f64, f64)) -> Vec<Cand> {
        sorted(
            self.servers
                .iter()
                .map(|&j| {
                    let (w, x, y) = f(j);
                    Cand { dc: j, w: w + self.vm(j), x, y }
                })
                .collect(),
        )
    }

    /// Cheapest quorums ignoring latency; a lower bound on [`Self::solve`].
    pub fn relaxed(&self, protocol: Protocol, sizes: &[usize]) -> OriginChoice {
        self.solve_inner(protocol, sizes, f64::INFINITY, f64::INFINITY).expect("unconstrained choice exists")
    }

    pub fn solve(&self, protocol: Protocol, sizes: &[usize]) -> Option<OriginChoice> {
        self.solve_inner(protocol, sizes, self.spec.slo_get, self.spec.slo_put)
    }

    fn solve_inner(&self, protocol: Protocol, sizes: &[usize], lg: f64, lp: f64) -> Option<OriginChoice> {
        match protocol {
            Protocol::Abd => self.abd(sizes[0], sizes[1], lg, lp),
            Protocol::Cas => self.cas(sizes, lg, lp),
        }
    }

    fn abd(&self, q1: usize, q2: usize, lg: f64, lp: f64) -> Option<OriginChoice> {
        let (m, s, i) = (self.model, self.spec, self.origin);
        let t = PhaseTimes::new(s, 1);
        let la = s.lambda * self.alpha;
        let rho = s.read_ratio;
        let c1 = self.cands(|j| {
            let w = la * (rho * s.obj_size + (1.0 - rho) * s.meta_size) * m.price(j, i);
            (w, t.abd_get_query(m, i, j), t.abd_put_query(m, i, j))
        });
        let c2 = self.cands(|k| (la * s.obj_size * m.price(i, k), t.abd_get_write(m, i, k), t.abd_put_write(m, i, k)));
        let done = |p1: Pick, p2: Pick| OriginChoice { cost: p1.w + p2.w, quorums: vec![p1.members, p2.members] };

        let p1 = pick(&c1, q1, f64::INFINITY, f64::INFINITY)?;
        let p2 = pick(&c2, q2, f64::INFINITY, f64::INFINITY)?;
        if p1.max_x + p2.max_x <= lg + LAT_EPS && p1.max_y + p2.max_y <= lp + LAT_EPS {
            return Some(done(p1, p2));
        }
        let mut best: Option<(Pick, Pick)> = None;
        for &ax in &distinct(c1.iter().map(|c| c.x)) {
            for &ay in &distinct(c1.iter().map(|c| c.y)) {
                let Some(p1) = pick(&c1, q1, ax, ay) else { continue };
                let Some(p2) = pick(&c2, q2, lg - p1.max_x, lp - p1.max_y) else { continue };
                if best.as_ref().is_none_or(|(b1, b2)| p1.w + p2.w < b1.w + b2.w) {
                    best = Some((p1, p2));
                }
            }
        }
        best.map(|(p1, p2)| done(p1, p2))
    }

    fn cas(&self, sizes: &[usize], lg: f64, lp: f64) -> Option<OriginChoice> {
        let (m, s, i) = (self.model, self.spec, self.origin);
        let t = PhaseTimes::new(s, self.k);
        let la = s.lambda * self.alpha;
        let rho = s.read_ratio;
        let chunk = s.obj_size / self.k as f64;
        let c1 = self.cands(|j| (la * s.meta_size * m.price(j, i), t.cas_query(m, i, j), 0.0));
        let c2 = self.cands(|j| ((1.0 - rho) * la * chunk * m.price(i, j), t.cas_prewrite(m, i, j), 0.0));
        let c3 = self.cands(|k| ((1.0 - rho) * la * s.meta_size * m.price(i, k), t.cas_finalize(m, i, k), 0.0));
        let c4 = self.cands(|k| {
            let w = rho * la * (s.meta_size * m.price(i, k) + chunk * m.price(k, i));
            (w, t.cas_read(m, i, k), 0.0)
        });
        let (q1, q2, q3, q4) = (sizes[0], sizes[1], sizes[2], sizes[3]);
        let inf = f64::INFINITY;
        let done = |p: [Pick; 4]| OriginChoice {
            cost: p.iter().map(|x| x.w).sum(),
            quorums: p.into_iter().map(|x| x.members).collect(),
        };

        let p1 = pick(&c1, q1, inf, inf)?;
        let p2 = pick(&c2, q2, inf, inf)?;
        let p3 = pick(&c3, q3, inf, inf)?;
        let p4 = pick(&c4, q4, inf, inf)?;
        if p1.max_x + p4.max_x <= lg + LAT_EPS && p1.max_x + p2.max_x + p3.max_x <= lp + LAT_EPS {
            return Some(done([p1, p2, p3, p4]));
        }
        let mut best: Option<[Pick; 4]> = None;
        let caps2 = distinct(c2.iter().map(|c| c.x));
        for &ax in &distinct(c1.iter().map(|c| c.x)) {
            let Some(p1) = pick(&c1, q1, ax, inf) else { continue };
            let a = p1.max_x;
            let Some(p4) = pick(&c4, q4, lg - a, inf) else { continue };
            for &bx in &caps2 {
                let Some(p2) = pick(&c2, q2, bx, inf) else { continue };
                let Some(p3) = pick(&c3, q3, lp - a - p2.max_x, inf) else { continue };
                let w = p1.w + p2.w + p3.w + p4.w;
                if best.as_ref().is_none_or(|b| w < b.iter().map(|x| x.w).sum::<f64>()) {
                    best = Some([p1.clone(), p2, p3, p4.clone()]);
                }
            }
        }
        best.map(done)
    }
}
