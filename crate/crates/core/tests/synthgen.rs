use cellshape::descriptors::scalar_features;
use cellshape::geometry::signed_area;
use cellshape::preprocess::normalize;
use cellshape::synthgen::{generate, GenConfig, MAX_POINTS, MIN_POINTS};
use cellshape::ShapeClass;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_contours_are_valid_and_registrable(
        seed in any::<u64>(),
        noise in 0.0f64..0.15,
        harmonics in 1u32..10,
        jitter in 0.0f64..0.02,
    ) {
        let cfg = GenConfig {
            n_per_class: 4,
            seed,
            noise_amplitude: noise,
            noise_harmonics: harmonics,
            jitter,
            ..GenConfig::default()
        };
        let cs = generate(&cfg).unwrap();
        prop_assert_eq!(cs.len(), 20);
        for (i, c) in cs.iter().enumerate() {
            prop_assert_eq!(c.id, i as i64);
            prop_assert!((MIN_POINTS..=MAX_POINTS).contains(&c.points.len()));
            let area = signed_area(&c.points).abs();
            prop_assert!(area > 0.0);
            prop_assert!(normalize(c).is_ok());
        }
        for class in ShapeClass::ALL {
            prop_assert_eq!(cs.iter().filter(|c| c.class_label == Some(class)).count(), 4);
        }
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let cfg = GenConfig {
        n_per_class: 8,
        seed: 21,
        ..GenConfig::default()
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let threaded = pool.install(|| generate(&cfg)).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| generate(&cfg))
        .unwrap();
    assert_eq!(threaded, single);
}

fn circularity_by_class(seed: u64) -> Vec<Vec<f64>> {
    let cs = generate(&GenConfig {
        n_per_class: 1000,
        seed,
        ..GenConfig::default()
    })
    .unwrap();
    let mut out = vec![Vec::new(); ShapeClass::COUNT];
    for c in &cs {
        let reg = normalize(c).unwrap();
        let f = scalar_features(&reg.points).unwrap();
        out[c.class_label.unwrap().index()].push(f.get("circularity").unwrap());
    }
    out
}

#[test]
fn circles_and_multipolar_shapes_separate_and_are_stable_across_seeds() {
    let a = circularity_by_class(1);
    let frac = |v: &[f64], pred: fn(f64) -> bool| v.iter().filter(|&&x| pred(x)).count() as f64 / v.len() as f64;
    assert!(frac(&a[0], |x| x > 0.9) >= 0.95);
    assert!(frac(&a[4], |x| x < 0.75) >= 0.95, "{}", frac(&a[4], |x| x < 0.75));

    let b = circularity_by_class(2);
    for k in 0..ShapeClass::COUNT {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&a[k]) - mean(&b[k])).abs() < 0.02, "class {k}");
    }
}
