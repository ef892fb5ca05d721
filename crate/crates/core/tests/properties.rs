use proptest::collection::vec;
use proptest::prelude::*;

use imgts::evalkit::{remetrics_with, tsi_rescale, EvalConfig, PerturbationSpec};
use imgts::forecast::{forecast, make_mask, Registry};
use imgts::imgspace::pgm::{image_files, load_image, AnyImage, ImageMeta};
use imgts::imgspace::{decode, emd_column, encode, kld, loss, SoftImage, SpaceParams, DEFAULT_KLD_EPS};
use imgts::realts::{generate_batch, GeneratorConfig};
use imgts::se_theory::mc_system_error;
use imgts::{Exec, RngStream, TimeSeries};

fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(0.0f64..1.0, len).prop_map(|mut v| {
        if v.iter().sum::<f64>() == 0.0 {
            v[0] = 1.0;
        }
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    })
}

proptest! {
    #[test]
    fn emd_is_a_metric(a in distribution(12), b in distribution(12), c in distribution(12)) {
        prop_assert_eq!(emd_column(&a, &a), 0.0);
        prop_assert!((emd_column(&a, &b) - emd_column(&b, &a)).abs() < 1e-12);
        prop_assert!(emd_column(&a, &c) <= emd_column(&a, &b) + emd_column(&b, &c) + 1e-12);
    }

    #[test]
    fn point_masses_are_row_distance(i in 0usize..16, j in 0usize..16) {
        let mut a = vec![0.0; 16];
        let mut b = vec![0.0; 16];
        a[i] = 1.0;
        b[j] = 1.0;
        prop_assert_eq!(emd_column(&a, &b), (i as f64 - j as f64).abs());
    }

    #[test]
    fn loss_is_nonnegative_and_zero_on_self(p in distribution(8 * 5), q in distribution(8 * 5)) {
        let params = SpaceParams::new(8, 2.0).unwrap();
        // renormalize each column of the flat draw
        let cols = |v: Vec<f64>| -> Vec<f64> {
            v.chunks(8).flat_map(|c| {
                let s: f64 = c.iter().sum();
                if s == 0.0 { let mut u = vec![0.0; 8]; u[0] = 1.0; u } else { c.iter().map(|x| x / s).collect() }
            }).collect()
        };
        let pi = SoftImage::from_columns(params, 1, 5, cols(p)).unwrap();
        let qi = SoftImage::from_columns(params, 1, 5, cols(q)).unwrap();
        prop_assert!(kld(&pi, &qi, DEFAULT_KLD_EPS).unwrap() >= 0.0);
        prop_assert!(loss(&pi, &qi, 0.2).unwrap() >= 0.0);
        prop_assert_eq!(loss(&pi, &pi, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn series_roundtrip_and_row_shift(
        xs in vec(-3.0f64..3.0, 2..200),
        eps in 0.0f64..0.5,
        h in 4usize..300,
    ) {
        let params = SpaceParams::new(h, 3.5).unwrap();
        let s = TimeSeries::univariate(xs.clone()).unwrap();
        let img = encode(&s, params).unwrap();
        let back = decode(&img).unwrap();
        for (a, b) in xs.iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 3.5 / h as f64);
        }
        let shifted: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x + if i % 2 == 0 { eps } else { -eps }).collect();
        let img2 = encode(&TimeSeries::univariate(shifted).unwrap(), params).unwrap();
        let allowed = (eps * h as f64 / 7.0).floor() as i64 + 1;
        for (r1, r2) in img.channel_rows(0).iter().zip(img2.channel_rows(0)) {
            prop_assert!((r1.unwrap() as i64 - r2.unwrap() as i64).abs() <= allowed);
        }
    }

    #[test]
    fn unit_rescale_is_identity(xs in vec(-100.0f64..100.0, 2..300)) {
        let s = TimeSeries::univariate(xs).unwrap();
        prop_assert_eq!(tsi_rescale(&s, 1.0).unwrap(), s);
    }

    #[test]
    fn forecast_keeps_visible_columns(xs in vec(-3.0f64..3.0, 20..60), lookback_frac in 0.3f64..0.9) {
        let params = SpaceParams::default();
        let registry = Registry::new(params);
        let img = encode(&TimeSeries::univariate(xs.clone()).unwrap(), params).unwrap();
        let lookback = ((xs.len() as f64 * lookback_frac) as usize).max(1);
        let mask = make_mask(xs.len(), lookback).unwrap();
        for id in ["persistence-img", "seasonal-naive-img", "linear-trend-img"] {
            let out = forecast(registry.get(id).unwrap(), &mask.apply(&img).unwrap(), &mask, None).unwrap();
            prop_assert_eq!(out.len(), xs.len());
            for k in 0..lookback {
                prop_assert_eq!(out.argmax_row(0, k) as u32, img.row(0, k).unwrap());
            }
            // predicted columns are one-hot
            for k in lookback..xs.len() {
                let col = out.column(0, k);
                prop_assert_eq!(col.iter().filter(|v| **v == 1.0).count(), 1);
            }
        }
    }
}

#[test]
fn parallel_matches_sequential() {
    let params = SpaceParams::new(64, 2.5).unwrap();
    let a = mc_system_error(params, 1.5, 300_000, RngStream::new(5, 1), Exec::Sequential).unwrap();
    let b = mc_system_error(params, 1.5, 300_000, RngStream::new(5, 1), Exec::Parallel).unwrap();
    assert_eq!(a, b);

    let cfg = GeneratorConfig::default().with_length(256);
    let s = generate_batch(&cfg, 3, 10, 40, Exec::Sequential).unwrap();
    let p = generate_batch(&cfg, 3, 10, 40, Exec::Parallel).unwrap();
    assert_eq!(s, p);
}

#[test]
fn rescale_order_does_not_change_scores() {
    let cfg = GeneratorConfig::default().with_length(600);
    let series = generate_batch(&cfg, 4, 0, 1, Exec::Sequential).unwrap().remove(0).series;
    let registry = Registry::default();
    let model = registry.get("persistence").unwrap();
    let scenarios = [PerturbationSpec::GaussianNoise { std: 0.3 }, PerturbationSpec::Missing { p: 0.2 }];
    let run = |rescale: Vec<f64>| {
        let eval = EvalConfig {
            lookback: 64,
            horizons: vec![16, 32],
            rescale,
            stride: None,
        };
        remetrics_with(&series, model, &eval, &scenarios, RngStream::new(8, 0), Exec::default()).unwrap()
    };
    let a = run(vec![0.5, 0.66, 1.0, 1.5, 2.0]);
    let b = run(vec![2.0, 1.0, 0.5, 1.5, 0.66]);
    for agg in &a.aggregates {
        let other = b.aggregate(agg.horizon, &agg.scenario).unwrap();
        assert_eq!(agg.remse.to_bits(), other.remse.to_bits());
        assert_eq!(agg.remae.to_bits(), other.remae.to_bits());
    }
}

#[test]
fn graymap_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let params = SpaceParams::new(32, 3.0).unwrap();
    let s = TimeSeries::from_channels(vec![
        (0..40).map(|t| (t as f64 / 5.0).sin() * 2.0).collect(),
        (0..40).map(|t| t as f64 / 10.0 - 2.0).collect(),
    ])
    .unwrap();
    let img = AnyImage::Binary(encode(&s, params).unwrap());
    let meta = ImageMeta::for_image(&img);
    let stem = dir.path().join("two");
    for (path, bytes) in image_files(&stem, &img, &meta) {
        std::fs::write(path, bytes).unwrap();
    }
    let (back, back_meta) = load_image(&stem).unwrap();
    assert_eq!(back_meta, meta);
    assert_eq!(back, img);
}
