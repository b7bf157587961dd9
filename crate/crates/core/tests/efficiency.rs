use spikeid::efficiency::*;
use spikeid::estimators::*;
fn record(sizes: &[usize], steps: usize, fire: impl Fn(usize, usize, usize) -> bool) -> SpikeRecord {
    let raster = sizes
        .iter()
        .enumerate()
        .map(|(l, &h)| (0..steps).map(|k| (0..h as u32).filter(|&n| fire(l, k, n as usize)).collect()).collect())
        .collect();
    SpikeRecord::from_raster(sizes.to_vec(), raster).unwrap()
}

#[test]
fn sparsity_extremes() {
    let silent = record(&[4, 4], 5, |_, _, _| false);
    let busy = record(&[4, 4], 5, |_, _, _| true);
    assert_eq!(sparsity(&silent).unwrap(), 1.0);
    assert_eq!(sparsity(&busy).unwrap(), 0.0);
    assert!(sparsity(&SpikeRecord::new(vec![4])).is_err());
}

#[test]
fn mac_counts() {
    assert_eq!(count_macs(&[200, 128, 128, 128, 3]), 58_752);
    assert_eq!(count_macs(&[2, 3]), 6);
    assert_eq!(count_macs(&[7, 5, 3]), 35 + 15);
}

#[test]
fn sop_definition() {
    let one = record(&[128, 128, 128], 1, |l, _, n| l == 0 && n == 3);
    assert_eq!(count_sops(&one, &[128, 128, 3]).unwrap(), 128);
    let zero = record(&[128, 128, 128], 100, |_, _, _| false);
    assert_eq!(count_sops(&zero, &[128, 128, 3]).unwrap(), 0);
    assert!(count_sops(&zero, &[128, 3]).is_err());
}

#[test]
fn all_fire_bound() {
    let all = record(&[128, 128, 128], 100, |_, _, _| true);
    let fo = fanouts(all.layer_sizes(), 3);
    assert_eq!(fo, vec![128, 128, 3]);
    assert_eq!(count_sops(&all, &fo).unwrap(), 3_315_200);
    assert_eq!(all_fire_sops(&[128, 128, 128], &fo, 100), 3_315_200);
    assert_eq!(input_projection_ops(&all, 2), 25_600);
}

#[test]
fn rates_are_consistent_with_sparsity() {
    let rec = record(&[5, 3, 2], 7, |l, k, n| (l + 2 * k + 3 * n) % 4 == 0);
    let p = rate_profiles(&rec);
    let weighted: f64 = p.layer_means.iter().zip(rec.layer_sizes()).map(|(r, h)| r * *h as f64).sum::<f64>() / 10.0;
    assert!((1.0 - weighted - sparsity(&rec).unwrap()).abs() < 1e-15);
    let all = rate_profiles(&record(&[2, 2], 3, |_, _, _| true));
    assert!(all.series.iter().flatten().chain(&all.layer_means).all(|r| *r == 1.0));
}

#[test]
fn table_energies() {
    let r = energy_report(58_752, 333_470, &EnergyCatalog::default());
    assert!((r.ff_energy * 1e6 - 881.28).abs() < 1e-9);
    assert!((r.snn_energy * 1e6 - 3.3013530).abs() < 1e-6);
    assert!((r.ratio.unwrap() - 266.95).abs() < 0.01);
    assert!((r.always_on_power(1.0).1 * 1e6 - 3.30).abs() < 0.01);
    assert_eq!(energy_report(10, 0, &EnergyCatalog::default()).ratio, None);
}

#[test]
fn raster_lists_every_spike() {
    let rec = record(&[3, 2], 2, |l, k, n| l == k && n == 1);
    assert_eq!(raster_csv(&rec), "layer,neuron,timestep\n1,1,0\n2,1,1\n");
}

#[test]
fn metrics_have_all_rows() {
    let rec = record(&[128, 128, 128], 100, |l, k, n| (n + k) % (5 * (l + 1)) == 0);
    let rows = efficiency_metrics(&rec, &[200, 128, 128, 128, 3], 3, 2, &EnergyCatalog::default(), 1.0).unwrap();
    let csv = metrics_csv(&rows);
    for m in ["sparsity", "rate_layer1", "macs", "sops", "ff_energy_uJ", "snn_energy_uJ", "ratio", "always_on_uW"] {
        assert!(csv.lines().any(|l| l.starts_with(&format!("{m},"))), "{m}");
    }
    assert!(csv.contains(",uJ,estimated"));
}
