//! Oracles shared by the integration test targets.

#![allow(dead_code)]

use cellshape::features::FeatureMatrix;
use cellshape::gbt::TreeNode;
use cellshape::ShapeClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive depth-1 search written independently of the crate: every
/// feature, every midpoint between consecutive distinct values, sums taken
/// directly over the rows.
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left: f64,
    pub right: f64,
}

pub fn brute_force_stump(data: &[f64], d: usize, gh: &[[f64; 2]], lambda: f64, mcw: f64) -> Option<Stump> {
    let n = gh.len();
    let g: f64 = gh.iter().map(|v| v[0]).sum();
    let h: f64 = gh.iter().map(|v| v[1]).sum();
    let mut best: Option<Stump> = None;
    for f in 0..d {
        let mut vals: Vec<f64> = (0..n).map(|i| data[i * d + f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..n {
                if data[i * d + f] < thr {
                    gl += gh[i][0];
                    hl += gh[i][1];
                }
            }
            let (gr, hr) = (g - gl, h - hl);
            if hl < mcw || hr < mcw {
                continue;
            }
            let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
            let better = match &best {
                None => true,
                Some(b) => gain > b.gain * (1.0 + 1e-12) + 1e-300,
            };
            if better {
                best = Some(Stump {
                    feature: f,
                    threshold: thr,
                    gain,
                    left: -gl / (hl + lambda),
                    right: -gr / (hr + lambda),
                });
            }
        }
    }
    best.filter(|b| b.gain > 0.0)
}

pub fn random_data(rng: &mut ChaCha8Rng) -> (Vec<f64>, usize, usize) {
    let n = rng.gen_range(10..=200);
    let d = rng.gen_range(1..=10);
    let discrete = rng.gen_bool(0.5);
    let data = (0..n * d)
        .map(|_| {
            if discrete {
                f64::from(rng.gen_range(0..6))
            } else {
                rng.gen_range(-3.0..3.0)
            }
        })
        .collect();
    (data, n, d)
}

pub fn check_stump(tree: &TreeNode, oracle: Option<Stump>) {
    match (tree, oracle) {
        (
            TreeNode::Split {
                feature,
                threshold,
                gain,
                left,
                right,
            },
            Some(o),
        ) => {
            assert_eq!(*feature, o.feature);
            assert_eq!(*threshold, o.threshold);
            assert!((gain - o.gain).abs() <= 1e-9 * o.gain.abs(), "{gain} vs {}", o.gain);
            let (TreeNode::Leaf { weight: l }, TreeNode::Leaf { weight: r }) = (&**left, &**right) else {
                panic!("depth-1 tree has non-leaf children");
            };
            assert!((l - o.left).abs() <= 1e-12 * o.left.abs().max(1.0));
            assert!((r - o.right).abs() <= 1e-12 * o.right.abs().max(1.0));
        }
        (TreeNode::Leaf { .. }, None) => {}
        (t, o) => panic!("tree {t:?} vs oracle split {:?}", o.map(|s| (s.feature, s.threshold))),
    }
}

/// 5 classes in 2-D: class k occupies the vertical band k ≤ x < k + 1.
pub fn separable_toy(seed: u64, noise_feature: bool) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names = vec!["x".to_string(), "y".to_string()];
    if noise_feature {
        names.push("noise".to_string());
    }
    let mut m = FeatureMatrix::new(names);
    for i in 0..200 {
        let k = i % 5;
        let mut row = vec![k as f64 + rng.gen_range(0.05..0.95), rng.gen_range(0.0..1.0)];
        if noise_feature {
            row.push(rng.gen_range(0.0..1.0));
        }
        m.push_row(i as i64, ShapeClass::from_index(k), &row).unwrap();
    }
    m
}
