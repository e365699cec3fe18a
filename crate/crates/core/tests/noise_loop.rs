//! Noise injection measured back through the metrics.

use std::f64::consts::PI;

use arpam::metrics::{psnr_db, snr_db, Region};
use arpam::phantom::add_noise;
use arpam::*;
use ndarray::Array3;

/// Unit point in a single-sample volume, so the MAP is `|signal + noise|`.
fn point_volume(n: usize) -> RfVolume {
    let mut s = Array3::zeros((n, n, 1));
    s[[n / 2, n / 2, 0]] = 1.0;
    RfVolume::new(AcquisitionGeometry::default(), s).unwrap()
}

#[test]
fn injected_psnr_reads_back() {
    let clean = point_volume(201);
    for (target, seed) in [(20.0, 1), (14.0, 2), (30.0, 3)] {
        let noisy = add_noise(&clean, &NoiseSpec { target_psnr: target, seed }).unwrap();
        let got = psnr_db(clean.samples().as_slice().unwrap(), noisy.samples().as_slice().unwrap()).unwrap();
        assert!((got - target).abs() <= 1.0, "{got} dB for {target} dB");
        // independent estimate of the same quantity
        let d: Vec<f64> = noisy.samples().iter().zip(clean.samples()).map(|(a, b)| a - b).collect();
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        assert!((20.0 * (1.0 / sd).log10() - got).abs() <= 0.05);
    }
}

#[test]
fn map_snr_of_rectified_noise() {
    // the MAP takes |n|, whose spread is sigma * sqrt(1 - 2/pi)
    let expected = 20.0 - 20.0 * (1.0 - 2.0 / PI).sqrt().log10();
    assert!((expected - 24.4).abs() < 0.05);
    let n = 201;
    let c = n / 2;
    let signal = Region::Rect { ix0: c, ix1: c + 1, iy0: c, iy1: c + 1 };
    let background = Region::Frame { thickness: 40 };
    let sigma = 0.1;
    let mut total = 0.0;
    let seeds = 10;
    for seed in 0..seeds {
        let noisy = add_noise(&point_volume(n), &NoiseSpec { target_psnr: 20.0, seed }).unwrap();
        let map = map_projection(&noisy, None).unwrap();
        let snr = snr_db(&map, &signal, &background).unwrap();
        // the peak pixel carries its own noise draw
        let oracle = 20.0 * (map.pixels()[[c, c]] / (sigma * (1.0 - 2.0 / PI).sqrt())).log10();
        assert!((snr - oracle).abs() <= 0.2, "seed {seed}: {snr} dB vs {oracle:.2}");
        total += snr;
    }
    let mean = total / seeds as f64;
    assert!((mean - expected).abs() <= 1.0, "{mean} dB, expected {expected:.2}");
}
