mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavesal::imagedata::{load_image, write_map};
use wavesal::saliency::{compute_map, Mode, SaliencyConfig, ScaleRule};
use wavesal::wavelet::TransformKind;
use wavesal::{Error, Image, SaliencyMap};

/// Four Gaussian blobs, shifted right by `shift` pixels.
fn blobs(seed: u64, shift: f64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spots: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| (rng.random::<f64>() * 64.0, rng.random::<f64>() * 64.0, 2.0 + rng.random::<f64>() * 6.0, rng.random::<f64>()))
        .collect();
    Image::from_fn(64, 64, |x, y| {
        let v: f64 = spots
            .iter()
            .map(|&(cx, cy, r, a)| a * (-((x as f64 - cx - shift).powi(2) + (y as f64 - cy).powi(2)) / (2.0 * r * r)).exp())
            .sum();
        v.min(1.0)
    })
    .unwrap()
}

fn shift_difference(a: &SaliencyMap, b: &SaliencyMap) -> f64 {
    let mut d: f64 = 0.0;
    for y in 0..64 {
        for x in 8..56 {
            d = d.max((a.get(x, y) - b.get(x + 1, y)).abs());
        }
    }
    d
}

#[test]
fn quaternion_maps_move_less_under_a_one_pixel_shift() {
    for rule in [ScaleRule::Wss, ScaleRule::Dis] {
        let mean = |kind| {
            let cfg = SaliencyConfig { transform_kind: kind, scale_rule: rule, levels: 3, smoothing_sigma: 4.0, ..Default::default() };
            (0..20)
                .map(|seed| {
                    let (a, _) = compute_map(&blobs(seed, 0.0), &cfg).unwrap();
                    let (b, _) = compute_map(&blobs(seed, 1.0), &cfg).unwrap();
                    shift_difference(&a, &b)
                })
                .sum::<f64>()
                / 20.0
        };
        let (q, d) = (mean(TransformKind::Qwt), mean(TransformKind::Dwt));
        assert!(q < d, "{rule}: QWT {q:.3} vs DWT {d:.3}");
    }
}

#[test]
fn bright_square_saliency_stays_near_the_square() {
    let img = Image::from_fn(128, 128, |x, y| if (56..72).contains(&x) && (56..72).contains(&y) { 1.0 } else { 0.0 }).unwrap();
    let levels = 4;
    let (map, _) = compute_map(&img, &SaliencyConfig { levels, ..Default::default() }).unwrap();
    let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
    for ((y, x), &v) in map.values().indexed_iter() {
        if v > best {
            best = v;
            at = (x, y);
        }
    }
    let reach = 1usize << levels;
    let near = |c: usize| (56 - reach..72 + reach).contains(&c);
    assert!(near(at.0) && near(at.1), "maximum at {at:?}");
}

#[test]
fn searcher_mode_needs_fittable_sub_bands() {
    let flat = Image::from_fn(32, 32, |_, _| 0.0).unwrap();
    let cfg = SaliencyConfig { mode: Mode::Searcher, levels: 3, ..Default::default() };
    let r = compute_map(&flat, &cfg);
    assert!(matches!(r, Err(Error::Config(_))), "{:?}", r.map(|_| ()));
}

#[test]
fn best_basis_root_gives_zero_map() {
    let black = Image::from_fn(16, 16, |_, _| 0.0).unwrap();
    for kind in [TransformKind::Dwptbb, TransformKind::Qwptbb] {
        let (map, field) = compute_map(&black, &SaliencyConfig { transform_kind: kind, levels: 2, ..Default::default() }).unwrap();
        assert!(map.values().iter().all(|&v| v == 0.0));
        assert!(field.s_p.iter().all(|&s| s == 0));
    }
}

#[test]
fn odd_sized_images_work_with_every_backend() {
    let img = common::random_image(37, 29, 3);
    for kind in TransformKind::ALL {
        let (map, field) = compute_map(&img, &SaliencyConfig { transform_kind: kind, levels: 3, ..Default::default() }).unwrap();
        assert_eq!((map.width(), map.height()), (37, 29));
        assert_eq!(field.to_csv().lines().count(), 1 + 37 * 29);
    }
}

#[test]
fn written_map_has_sidecar_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let img = common::random_image(32, 32, 8);
    let cfg = SaliencyConfig { transform_kind: TransformKind::Qwt, scale_rule: ScaleRule::Dis, levels: 3, ..Default::default() };
    let (map, _) = compute_map(&img, &cfg).unwrap();
    let path = dir.path().join("out.pgm");
    write_map(&map, &path).unwrap();
    let side = std::fs::read_to_string(dir.path().join("out.txt")).unwrap();
    assert!(side.contains("method_tag=qwt.dis\n"));
    assert!(side.contains(&format!("params_digest={}\n", cfg.params_digest())));
    assert_eq!(load_image(&path).unwrap().width(), 32);
}
