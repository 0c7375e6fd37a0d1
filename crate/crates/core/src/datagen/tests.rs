use super::*;
use crate::ndmath::matmul;

fn appendix_cfg(samples_per_segment: usize, seed: u64) -> TclConfig {
    TclConfig::new(5, 20, samples_per_segment, 4, seed)
}

#[test]
fn sources_have_expected_shape_and_labels() {
    let cfg = appendix_cfg(100, 1);
    let mut rng = RngStream::new(1, 0);
    let (s, u, params) = generate_sources(&cfg, &mut rng).unwrap();
    assert_eq!(s.shape(), (2000, 5));
    assert_eq!(u.len(), 2000);
    let distinct: std::collections::BTreeSet<usize> = u.iter().copied().collect();
    assert_eq!(distinct.len(), 20);
    assert_eq!(params.means.shape(), (20, 5));
}

#[test]
fn degenerate_stds_cluster_at_segment_means() {
    let mut cfg = appendix_cfg(50, 2);
    cfg.std_range = (1e-9, 2e-9);
    let mut rng = RngStream::new(2, 0);
    let (s, u, params) = generate_sources(&cfg, &mut rng).unwrap();
    for (row, &seg) in u.iter().enumerate() {
        for dim in 0..cfg.d {
            assert!((s.at(row, dim) - params.means.at(seg, dim)).abs() < 1e-6);
        }
    }
}

#[test]
fn per_segment_empirical_mean_is_consistent() {
    let mut cfg = appendix_cfg(2000, 3);
    cfg.n_segments = 4;
    let mut rng = RngStream::new(3, 0);
    let (s, u, params) = generate_sources(&cfg, &mut rng).unwrap();
    for seg in 0..cfg.n_segments {
        let rows: Vec<usize> = u
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == seg).then_some(i))
            .collect();
        let n = rows.len() as f64;
        for dim in 0..cfg.d {
            let mean: f64 = rows.iter().map(|&r| s.at(r, dim)).sum::<f64>() / n;
            let bound = 4.0 * params.stds.at(seg, dim) / n.sqrt();
            assert!(
                (mean - params.means.at(seg, dim)).abs() < bound,
                "segment {seg} dim {dim}"
            );
        }
    }
}

#[test]
fn segment_moments_pass_six_sigma_consistency() {
    // z-test of per-segment mean and variance against stored parameters.
    let cfg = appendix_cfg(1000, 17);
    let mut rng = RngStream::new(17, 0);
    let (s, u, params) = generate_sources(&cfg, &mut rng).unwrap();
    for seg in 0..cfg.n_segments {
        let rows: Vec<usize> = u
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == seg).then_some(i))
            .collect();
        let n = rows.len() as f64;
        for dim in 0..cfg.d {
            let mu = params.means.at(seg, dim);
            let sd = params.stds.at(seg, dim);
            let mean: f64 = rows.iter().map(|&r| s.at(r, dim)).sum::<f64>() / n;
            let var: f64 =
                rows.iter().map(|&r| (s.at(r, dim) - mean).powi(2)).sum::<f64>() / (n - 1.0);
            // Mean: SE = sd/sqrt(n). Variance: SE ~ sd^2 sqrt(2/(n-1)).
            assert!((mean - mu).abs() <= 6.0 * sd / n.sqrt());
            assert!((var - sd * sd).abs() <= 6.0 * sd * sd * (2.0 / (n - 1.0)).sqrt());
        }
    }
}

#[test]
fn mixing_layers_respect_singular_value_floor() {
    let cfg = appendix_cfg(10, 4);
    let mut rng = RngStream::new(4, 0);
    let mixing = sample_mixing_mlp(&cfg, &mut rng).unwrap();
    assert_eq!(mixing.layers.len(), 4);
    for layer in &mixing.layers {
        assert_eq!(layer.weight.shape(), (5, 5));
        let smin = svd(&layer.weight).unwrap().s.last().copied().unwrap();
        assert!(smin >= cfg.min_singular_value);
        assert!(layer.bias.iter().all(|&b| b == 0.0));
    }
}

#[test]
fn single_layer_mixing_is_invertible_linear_map() {
    let mut cfg = appendix_cfg(10, 5);
    cfg.n_mixing_layers = 1;
    let mut rng = RngStream::new(5, 0);
    let mixing = sample_mixing_mlp(&cfg, &mut rng).unwrap();
    assert_eq!(mixing.layers.len(), 1);
    let cn = crate::ndmath::condition_number(&mixing.layers[0].weight).unwrap();
    assert!(cn.is_finite());
    // Linear: mixing(S) == S * W exactly (final layer has no activation).
    let mut srng = RngStream::new(6, 0);
    let s = crate::ndmath::sample_gaussian(&mut srng, 7, 5, 0.0, 1.0).unwrap();
    let x = mix_sources(&cfg, &mixing, &s).unwrap();
    let expected = matmul(&s, &mixing.layers[0].weight).unwrap();
    assert_eq!(x, expected);
}

#[test]
fn impossible_floor_errors_after_rejections() {
    let mut cfg = appendix_cfg(10, 6);
    cfg.min_singular_value = 1e6;
    let mut rng = RngStream::new(6, 0);
    match sample_mixing_mlp(&cfg, &mut rng) {
        Err(Error::RejectionFailed { attempts, .. }) => assert_eq!(attempts, 100),
        other => panic!("expected rejection failure, got {other:?}"),
    }
}

#[test]
fn identity_mixing_reproduces_sources() {
    let cfg = TclConfig::new(3, 2, 4, 1, 7);
    let identity = MlpParams {
        layers: vec![Layer {
            weight: Matrix::identity(3),
            bias: vec![0.0; 3],
        }],
    };
    let ds = generate_tcl_dataset_with_mixing(&cfg, &identity).unwrap();
    assert_eq!(ds.x, ds.s.unwrap());
}

#[test]
fn appendix_scale_dataset_shape() {
    let cfg = appendix_cfg(500, 8);
    let ds = generate_tcl_dataset(&cfg).unwrap();
    assert_eq!(ds.x.shape(), (10_000, 5));
    assert_eq!(ds.s.as_ref().unwrap().shape(), (10_000, 5));
    assert!(ds.x.is_finite());
}

#[test]
fn distinct_sources_map_to_distinct_observations() {
    let cfg = appendix_cfg(50, 9);
    let ds = generate_tcl_dataset(&cfg).unwrap();
    let n = 1000.min(ds.len());
    for i in 0..n {
        for j in (i + 1)..n {
            let same = (0..cfg.d).all(|d| ds.x.at(i, d) == ds.x.at(j, d));
            assert!(!same, "rows {i} and {j} collide");
        }
    }
}

#[test]
fn regeneration_is_bit_identical() {
    let cfg = appendix_cfg(100, 10);
    let a = generate_tcl_dataset(&cfg).unwrap();
    let b = generate_tcl_dataset(&cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mixing_applied_to_stored_sources_reproduces_x() {
    let cfg = appendix_cfg(100, 11);
    let mut mix_rng = RngStream::new(cfg.seed, 0x6);
    let mixing = sample_mixing_mlp(&cfg, &mut mix_rng).unwrap();
    let ds = generate_tcl_dataset(&cfg).unwrap();
    let x = mix_sources(&cfg, &mixing, ds.s.as_ref().unwrap()).unwrap();
    assert_eq!(x, ds.x);
}

#[test]
fn split_is_balanced_disjoint_and_exhaustive() {
    let cfg = appendix_cfg(100, 12);
    let ds = generate_tcl_dataset(&cfg).unwrap();
    let mut rng = RngStream::new(12, 1);
    let (first, second) = stratified_split_indices(&ds.u, ds.n_segments, 0.5, &mut rng).unwrap();
    assert_eq!(first.len(), 1000);
    assert_eq!(second.len(), 1000);
    let mut all: Vec<usize> = first.iter().chain(&second).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..2000).collect::<Vec<_>>());
    // Per-segment balance off by at most one.
    for seg in 0..20 {
        let a = first.iter().filter(|&&i| ds.u[i] == seg).count();
        let b = second.iter().filter(|&&i| ds.u[i] == seg).count();
        assert!(a.abs_diff(b) <= 1);
    }
}

#[test]
fn split_is_deterministic_per_seed() {
    let cfg = appendix_cfg(50, 13);
    let ds = generate_tcl_dataset(&cfg).unwrap();
    let mut r1 = RngStream::new(99, 5);
    let mut r2 = RngStream::new(99, 5);
    let s1 = stratified_split_indices(&ds.u, ds.n_segments, 0.3, &mut r1).unwrap();
    let s2 = stratified_split_indices(&ds.u, ds.n_segments, 0.3, &mut r2).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn split_rejects_tiny_segments() {
    let ds = LabeledDataset {
        x: Matrix::zeros(3, 2),
        u: vec![0, 0, 1],
        s: None,
        n_segments: 2,
    };
    let mut rng = RngStream::new(1, 0);
    assert!(split_dataset(&ds, 0.5, &mut rng).is_err());
}

#[test]
fn dataset_io_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TclConfig::new(3, 4, 5, 2, 21);
    let ds = generate_tcl_dataset(&cfg).unwrap();
    save_dataset(dir.path(), &ds, Some(&cfg)).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(ds, back);
    let cfg_text = std::fs::read_to_string(dir.path().join("config.json")).unwrap();
    let cfg_back: TclConfig = serde_json::from_str(&cfg_text).unwrap();
    assert_eq!(cfg, cfg_back);
}
