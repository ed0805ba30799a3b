use approx::assert_relative_eq;
use geokv_core::presets::nine_regions;
use geokv_core::{Configuration, DcId, Model, Protocol, Workload};
use geokv_optimizer::{cost, cost_get, cost_put, cost_storage, cost_vm, latency_worstcase};
use proptest::prelude::*;

fn spec(d: usize, read_ratio: f64, origin: usize, meta: f64, obj: f64) -> Workload {
    Workload {
        lambda: 1.0,
        read_ratio,
        origin_dist: Workload::single_origin(d, origin),
        obj_size: obj,
        meta_size: meta,
        slo_get: 1e9,
        slo_put: 1e9,
        f: 1,
    }
}

fn two_dc_abd() -> (Configuration, Model) {
    let model = Model::uniform(2, 100.0, 2.0, 0.08);
    let config = Configuration::new(Protocol::Abd, vec![DcId(1)], 1, vec![1, 1])
        .with_quorums(DcId(0), vec![vec![DcId(1)], vec![DcId(1)]]);
    (config, model)
}

#[test]
fn two_dc_put_by_hand() {
    let (config, model) = two_dc_abd();
    let s = spec(2, 0.0, 0, 100.0, 1000.0);
    assert_relative_eq!(cost_put(&config, &s, &model).unwrap(), (100.0 + 1000.0) * 8e-11, max_relative = 1e-12);
    assert_relative_eq!(cost_put(&config, &s, &model).unwrap(), 8.8e-8, max_relative = 1e-12);
    assert_eq!(cost_get(&config, &s, &model).unwrap(), 0.0);
}

#[test]
fn two_dc_get_by_hand() {
    let (config, model) = two_dc_abd();
    let s = spec(2, 1.0, 0, 100.0, 1000.0);
    assert_relative_eq!(cost_get(&config, &s, &model).unwrap(), 2.0 * 1000.0 * 8e-11, max_relative = 1e-12);
    assert_eq!(cost_put(&config, &s, &model).unwrap(), 0.0);
}

fn cas(k: usize, servers: &[usize], sets: [&[usize]; 4]) -> Configuration {
    let dcs = |v: &[usize]| v.iter().map(|&i| DcId(i)).collect::<Vec<_>>();
    let sizes = sets.iter().map(|s| s.len()).collect();
    Configuration::new(Protocol::Cas, dcs(servers), k, sizes).with_quorums(DcId(0), sets.iter().map(|s| dcs(s)).collect())
}

#[test]
fn code_dimension_scales_payload_term() {
    let model = Model::uniform(5, 100.0, 2.0, 0.1);
    let s = spec(5, 0.0, 0, 0.0, 6000.0);
    let sets: [&[usize]; 4] = [&[1, 2, 3], &[1, 2, 3, 4], &[1, 2, 3], &[1, 2, 3, 4]];
    let one = cost_put(&cas(1, &[0, 1, 2, 3, 4], sets), &s, &model).unwrap();
    let two = cost_put(&cas(2, &[0, 1, 2, 3, 4], sets), &s, &model).unwrap();
    assert_relative_eq!(two, one / 2.0, max_relative = 1e-12);
}

#[test]
fn storage_ratios() {
    let mut model = Model::uniform(5, 100.0, 2.0, 0.1);
    model.storage_price = vec![1e-12; 5];
    let gb = 1e9;
    let s = spec(5, 0.5, 0, 100.0, gb);
    let abd3 = Configuration::new(Protocol::Abd, vec![DcId(0), DcId(1), DcId(2)], 1, vec![2, 2]);
    assert_relative_eq!(cost_storage(&abd3, &s, &model), 3.0 * gb * 1e-12, max_relative = 1e-12);
    let cas53 = Configuration::new(Protocol::Cas, (0..5).map(DcId).collect(), 3, vec![2, 4, 4, 4]);
    assert_relative_eq!(cost_storage(&cas53, &s, &model) / cost_storage(&abd3, &s, &model), 5.0 / 9.0, max_relative = 1e-12);
    let abd5 = Configuration::new(Protocol::Abd, (0..5).map(DcId).collect(), 1, vec![3, 3]);
    assert_relative_eq!(cost_storage(&cas53, &s, &model) / cost_storage(&abd5, &s, &model), 1.0 / 3.0, max_relative = 1e-12);
}

#[test]
fn vm_cost_counts_memberships() {
    let mut model = Model::uniform(5, 100.0, 2.0, 0.1);
    model.vm_price = vec![0.0, 0.0, 0.0, 7.0, 0.0];
    model.theta_v = 1e-5;
    let mut s = spec(5, 0.5, 0, 100.0, 1000.0);
    let c = cas(1, &[0, 1, 2, 3, 4], [&[1, 3], &[1, 2, 3, 4], &[2, 3], &[3, 4]]);
    let one = cost_vm(&c, &s, &model).unwrap();
    assert_relative_eq!(one, 4.0 * 7.0 * 1e-5, max_relative = 1e-12);
    s.lambda = 2.0;
    assert_relative_eq!(cost_vm(&c, &s, &model).unwrap(), 2.0 * one, max_relative = 1e-12);
    model.theta_v = 0.0;
    assert_eq!(cost_vm(&c, &s, &model).unwrap(), 0.0);
}

#[test]
fn breakdown_total_is_sum() {
    let model: Model = nine_regions().into_model().unwrap();
    let s = spec(9, 0.7, 2, 100.0, 4096.0);
    let c = Configuration::new(Protocol::Cas, (0..6).map(DcId).collect(), 2, vec![3, 5, 3, 3]).with_nearest_quorums(&model);
    let b = cost(&c, &s, &model).unwrap();
    assert_relative_eq!(b.total, b.c_get + b.c_put + b.c_storage + b.c_vm, max_relative = 1e-12);
    assert!(b.c_get > 0.0 && b.c_put > 0.0 && b.c_storage > 0.0 && b.c_vm > 0.0);
}

#[test]
fn missing_quorums_is_an_error() {
    let model = Model::uniform(3, 100.0, 2.0, 0.1);
    let s = spec(3, 0.5, 2, 100.0, 1000.0);
    let c = Configuration::new(Protocol::Abd, (0..3).map(DcId).collect(), 1, vec![2, 2]);
    assert!(cost(&c, &s, &model).is_err());
    assert!(latency_worstcase(&c, DcId(2), &s, &model).is_err());
}

#[test]
fn tokyo_virginia_read() {
    let model: Model = nine_regions().into_model().unwrap();
    let tokyo = model.index_of("tokyo").unwrap();
    let virginia = model.index_of("virginia").unwrap();
    let s = spec(9, 0.5, tokyo.0, 1.0, 1.0);
    let q = vec![tokyo, virginia];
    let c = Configuration::new(Protocol::Abd, q.clone(), 1, vec![2, 2]).with_quorums(tokyo, vec![q.clone(), q]);
    let (get, _) = latency_worstcase(&c, tokyo, &s, &model).unwrap();
    // Two round trips over a 148/146 ms link.
    assert!((get - 296.0).abs() <= 3.0, "{get}");
    assert_relative_eq!(get, 2.0 * model.rtt(tokyo, virginia), max_relative = 1e-3);
}

#[test]
fn local_quorum_costs_two_local_round_trips() {
    let model = Model::uniform(3, 100.0, 2.0, 0.1);
    let mut s = spec(3, 0.5, 1, 0.0, 1.0);
    s.obj_size = 1e-9;
    let me = vec![DcId(1)];
    let c = Configuration::new(Protocol::Abd, me.clone(), 1, vec![1, 1]).with_quorums(DcId(1), vec![me.clone(), me]);
    let (get, put) = latency_worstcase(&c, DcId(1), &s, &model).unwrap();
    assert_relative_eq!(get, 2.0 * model.rtt(DcId(1), DcId(1)), max_relative = 1e-6);
    assert_relative_eq!(put, 2.0 * model.rtt(DcId(1), DcId(1)), max_relative = 1e-6);
}

#[test]
fn coded_write_has_an_extra_round_trip() {
    let model = Model::uniform(5, 100.0, 2.0, 0.1);
    let mut s = spec(5, 0.5, 0, 0.0, 1e-9);
    s.meta_size = 0.0;
    let c = cas(1, &[1, 2, 3, 4], [&[1, 2], &[1, 2, 3], &[2, 3], &[3, 4]]);
    let (get, put) = latency_worstcase(&c, DcId(0), &s, &model).unwrap();
    assert_relative_eq!(put - get, 100.0, max_relative = 1e-6);
}

#[test]
fn single_precision_matches_double() {
    let model: Model = nine_regions().into_model().unwrap();
    let s = spec(9, 0.7, 2, 100.0, 4096.0);
    let c = Configuration::new(Protocol::Cas, (0..6).map(DcId).collect(), 2, vec![3, 5, 3, 3]).with_nearest_quorums(&model);
    let b64 = cost(&c, &s, &model).unwrap();
    let b32 = cost(&c, &s.cast::<f32>(), &model.cast::<f32>()).unwrap();
    assert_relative_eq!(b32.total as f64, b64.total, max_relative = 1e-5);
    let l64 = latency_worstcase(&c, DcId(2), &s, &model).unwrap();
    let l32 = latency_worstcase(&c, DcId(2), &s.cast::<f32>(), &model.cast::<f32>()).unwrap();
    assert_relative_eq!(l32.0 as f64, l64.0, max_relative = 1e-5);
}

proptest! {
    /// With symmetric prices and the same quorums, coded reads are cheaper once objects
    /// outweigh metadata: with K = 2, `om*(A+B) + og*B/2 < og*(A+B)` whenever `og > 2*om`.
    #[test]
    fn coded_reads_beat_replicated_reads(
        prices in prop::collection::vec(0.01f64..0.2, 15),
        om in 1.0f64..500.0,
        ratio in 2.01f64..50.0,
    ) {
        let d = 6;
        let mut model = Model::uniform(d, 100.0, 2.0, 0.0);
        let mut it = prices.iter();
        for a in 0..d {
            for b in (a + 1)..d {
                let p = it.next().unwrap() / 1e9;
                model.net_price[a][b] = p;
                model.net_price[b][a] = p;
            }
        }
        let s = spec(d, 1.0, 0, om, om * ratio);
        let q1: &[usize] = &[1, 2, 3];
        let q4: &[usize] = &[2, 3, 4, 5];
        let coded = cas(2, &[1, 2, 3, 4, 5], [q1, &[1, 2, 3, 4], q1, q4]);
        let dcs = |v: &[usize]| v.iter().map(|&i| DcId(i)).collect::<Vec<_>>();
        let rep = Configuration::new(Protocol::Abd, dcs(&[1, 2, 3, 4, 5]), 1, vec![3, 4])
            .with_quorums(DcId(0), vec![dcs(q1), dcs(q4)]);
        prop_assert!(cost_get(&coded, &s, &model).unwrap() < cost_get(&rep, &s, &model).unwrap());
    }
}
