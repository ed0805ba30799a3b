use geokv_core::config::{size_violations, valid_size_tuples};
use geokv_core::{Configuration, DcId, Protocol};
use proptest::prelude::*;

/// Restatement of the intersection rules, written independently of the library.
fn oracle_ok(protocol: Protocol, n: usize, k: usize, q: &[usize], f: usize) -> bool {
    let cap = n as i64 - f as i64;
    let fits = q.iter().all(|&x| x >= 1 && (x as i64) <= cap);
    match protocol {
        Protocol::Abd => k == 1 && fits && q[0] + q[1] > n,
        Protocol::Cas => {
            fits && k >= 1
                && k <= n
                && q[0] + q[2] > n
                && q[0] + q[3] > n
                && q[1] + q[3] >= n + k
                && q[3] >= k
                && n >= k + 2 * f
        }
    }
}

/// Same as [`oracle_ok`] for CAS but without the explicit redundancy rule.
fn cas_intersections_only(n: usize, k: usize, q: &[usize], f: usize) -> bool {
    let cap = n - f.min(n);
    q.iter().all(|&x| x >= 1 && x <= cap)
        && q[0] + q[2] > n
        && q[0] + q[3] > n
        && q[1] + q[3] >= n + k
        && q[3] >= k
}

fn tuples(len: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (1..=n).map(move |x| {
                    let mut p = p.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

#[test]
fn validator_agrees_with_brute_force_up_to_seven_servers() {
    for n in 1..=7 {
        for f in 0..=2 {
            for q in tuples(2, n) {
                let lib = size_violations(Protocol::Abd, n, 1, &q, f).is_empty();
                assert_eq!(lib, oracle_ok(Protocol::Abd, n, 1, &q, f), "abd n={n} f={f} q={q:?}");
            }
            for k in 1..=n {
                for q in tuples(4, n) {
                    let lib = size_violations(Protocol::Cas, n, k, &q, f).is_empty();
                    assert_eq!(lib, oracle_ok(Protocol::Cas, n, k, &q, f), "cas n={n} k={k} f={f} q={q:?}");
                }
            }
        }
    }
}

#[test]
fn redundancy_rule_is_the_exact_feasibility_boundary() {
    for n in 1..=7 {
        for f in 0..=2 {
            for k in 1..=n {
                let feasible = tuples(4, n).iter().any(|q| cas_intersections_only(n, k, q, f));
                assert_eq!(feasible, n >= k + 2 * f, "n={n} k={k} f={f}");
                assert_eq!(!valid_size_tuples(Protocol::Cas, n, k, f).is_empty(), feasible);
            }
        }
    }
}

#[test]
fn assignments_exist_whenever_the_bounds_allow() {
    for n in 1..=9 {
        for f in 1..=3 {
            assert_eq!(!valid_size_tuples(Protocol::Abd, n, 1, f).is_empty(), n > 2 * f, "abd n={n} f={f}");
            for k in 1..=n {
                let exists = !valid_size_tuples(Protocol::Cas, n, k, f).is_empty();
                assert_eq!(exists, n >= k + 2 * f, "cas n={n} k={k} f={f}");
            }
        }
    }
}

#[test]
fn every_violation_is_named() {
    let c = Configuration::new(Protocol::Abd, vec![DcId(0), DcId(1)], 1, vec![1, 1]);
    let names: Vec<String> = c.violations(1).iter().map(|v| v.to_string()).collect();
    assert!(names.iter().any(|s| s.contains("q1+q2 > N")), "{names:?}");
}

proptest! {
    #[test]
    fn valid_tuples_are_exactly_the_oracle_set(n in 1usize..=6, k in 1usize..=6, f in 0usize..=2) {
        prop_assume!(k <= n);
        let lib = valid_size_tuples(Protocol::Cas, n, k, f);
        let brute: Vec<Vec<usize>> =
            tuples(4, n).into_iter().filter(|q| oracle_ok(Protocol::Cas, n, k, q, f)).collect();
        prop_assert_eq!(lib, brute);
    }
}
