//! Built-in cluster descriptions.

use crate::model::ModelFile;

/// Names of the nine regions of [`nine_regions`], in index order.
pub const REGIONS: [&str; 9] =
    ["tokyo", "sydney", "singapore", "frankfurt", "london", "virginia", "sao_paulo", "los_angeles", "oregon"];

const RTT_MS: [[f64; 9]; 9] = [
    [2.0, 115.0, 70.0, 226.0, 218.0, 148.0, 253.0, 100.0, 90.0],
    [115.0, 2.0, 94.0, 289.0, 277.0, 204.0, 291.0, 139.0, 162.0],
    [72.0, 94.0, 2.0, 202.0, 203.0, 214.0, 319.0, 165.0, 166.0],
    [229.0, 289.0, 201.0, 2.0, 15.0, 89.0, 202.0, 153.0, 139.0],
    [222.0, 280.0, 204.0, 15.0, 2.0, 79.0, 192.0, 141.0, 131.0],
    [146.0, 204.0, 214.0, 90.0, 79.0, 2.0, 116.0, 68.0, 58.0],
    [252.0, 292.0, 317.0, 202.0, 192.0, 117.0, 1.0, 155.0, 172.0],
    [101.0, 139.0, 180.0, 153.0, 142.0, 67.0, 155.0, 2.0, 26.0],
    [95.0, 164.0, 165.0, 142.0, 131.0, 58.0, 173.0, 26.0, 2.0],
];

const STORAGE_PER_GB_MONTH: [f64; 9] = [0.052, 0.054, 0.044, 0.048, 0.048, 0.044, 0.06, 0.048, 0.04];
const VM_PER_HOUR: [f64; 9] = [0.0261, 0.0283, 0.0253, 0.0262, 0.0262, 0.0226, 0.0310, 0.0248, 0.0215];

/// Outbound price in $/GB from `from` to `to`. Traffic between a region and
/// clients near it is billed at the region's own egress rate.
fn outbound(from: usize, to: usize) -> f64 {
    const SYDNEY: usize = 1;
    match (from, to) {
        (a, b) if a == b => [0.12, 0.15, 0.09, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08][a],
        (SYDNEY, _) | (_, SYDNEY) => 0.15,
        (0, _) => 0.12,
        (2, _) => 0.09,
        _ => 0.08,
    }
}

/// Nine public-cloud regions spanning Asia-Pacific, Europe and the Americas, with measured
/// round trips, egress prices, storage and VM prices.
///
/// `theta_v` is set to `1e-5` VM-seconds per request.
pub fn nine_regions() -> ModelFile {
    ModelFile {
        dcs: REGIONS.iter().map(|s| s.to_string()).collect(),
        rtt_ms: RTT_MS.iter().map(|r| r.to_vec()).collect(),
        net_price_per_gb: (0..9).map(|i| (0..9).map(|j| outbound(i, j)).collect()).collect(),
        storage_price_per_gb_month: STORAGE_PER_GB_MONTH.to_vec(),
        vm_price_per_hour: VM_PER_HOUR.to_vec(),
        bandwidth_bytes_per_sec: None,
        theta_v: 1e-5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{DcId, Model};

    #[test]
    fn nine_regions_loads() {
        let m: Model = nine_regions().into_model().unwrap();
        assert_eq!(m.d(), 9);
        let tokyo = m.index_of("tokyo").unwrap();
        let virginia = m.index_of("virginia").unwrap();
        assert_eq!(m.rtt(tokyo, virginia), 147.0);
        assert_eq!(m.latency(tokyo, virginia), 74.0);
        assert!((m.price(DcId(4), DcId(0)) * 1e9 - 0.08).abs() < 1e-12);
        assert!((m.price(DcId(0), DcId(1)) * 1e9 - 0.15).abs() < 1e-12);
        assert!((m.price(DcId(2), DcId(5)) * 1e9 - 0.09).abs() < 1e-12);
    }
}
