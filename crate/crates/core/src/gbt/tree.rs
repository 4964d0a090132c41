//! Exact greedy regression-tree growth on gradient/hessian pairs.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        weight: f64,
    },
}

impl TreeNode {
    /// Raw leaf weight reached by `row` (left when `x < threshold`).
    pub fn eval(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if row[*feature] < *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Visits every split as `(feature, threshold, gain)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64, f64)) {
        if let TreeNode::Split {
            feature,
            threshold,
            gain,
            left,
            right,
        } = self
        {
            f(*feature, *threshold, *gain);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
    pub gamma: f64,
}

/// Relative margin a candidate must beat the incumbent by. Gains that agree
/// to this precision count as ties, so the tie-break does not depend on
/// summation order.
const TIE_EPS: f64 = 1e-12;
const NONE: u32 = u32::MAX;

/// Every column sorted once: `vals[f]` ascending, `rows[f]` the matching row
/// ids (ties by row id).
pub(crate) struct Presorted {
    pub vals: Vec<Vec<f64>>,
    pub rows: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(data: &[f64], n_cols: usize) -> Self {
        let n = data.len().checked_div(n_cols).unwrap_or(0);
        let (vals, rows) = (0..n_cols)
            .map(|f| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                let v = |r: u32| data[r as usize * n_cols + f];
                idx.sort_by(|&a, &b| v(a).total_cmp(&v(b)).then(a.cmp(&b)));
                (idx.iter().map(|&r| v(r)).collect(), idx)
            })
            .unzip();
        Presorted { vals, rows }
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Running state of one node during a column scan.
#[derive(Clone, Copy)]
struct Scan {
    gl: f64,
    hl: f64,
    last: f64,
    seen: bool,
    g: f64,
    h: f64,
    /// Smallest raw score that would replace the incumbent split.
    bar: f64,
}

#[derive(Clone, Copy)]
struct Best {
    raw: f64,
    feature: usize,
    threshold: f64,
}

enum Slot {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

fn build(arena: &[Slot], i: usize) -> TreeNode {
    match arena[i] {
        Slot::Leaf(weight) => TreeNode::Leaf { weight },
        Slot::Split {
            feature,
            threshold,
            gain,
            left,
            right,
        } => TreeNode::Split {
            feature,
            threshold,
            gain,
            left: Box::new(build(arena, left)),
            right: Box::new(build(arena, right)),
        },
    }
}

/// Grows `k` trees at once, tree `c` fitted to `gh[row * k + c]`.
///
/// Growth is level-wise. At each level every column is scanned once in
/// sorted order, and each row updates the running left sums of the node it
/// sits in for every tree. A candidate threshold is the midpoint between a
/// node's consecutive distinct values. Larger gain wins; ties keep the lower
/// feature, then the lower threshold. Only rows with `in_bag` set and
/// only the listed `features` (ascending) are used.
#[allow(clippy::too_many_arguments)]
pub(crate) fn grow_forest(
    data: &[f64],
    n_cols: usize,
    sorted: &Presorted,
    gh: &[[f64; 2]],
    k: usize,
    in_bag: &[bool],
    features: &[usize],
    p: &TreeParams,
) -> Vec<TreeNode> {
    let n = in_bag.len();
    let mut arenas: Vec<Vec<Slot>> = (0..k).map(|_| vec![Slot::Leaf(0.0)]).collect();
    // per live node of the current level: (tree, arena slot)
    let mut live: Vec<(usize, usize)> = (0..k).map(|c| (c, 0)).collect();
    let mut node_of = vec![NONE; n * k];
    for row in (0..n).filter(|&r| in_bag[r]) {
        for c in 0..k {
            node_of[row * k + c] = c as u32;
        }
    }

    for depth in 0.. {
        let mut totals = vec![(0.0f64, 0.0f64, 0usize); live.len()];
        for (q, gh) in node_of.iter().zip(gh) {
            if *q != NONE {
                let t = &mut totals[*q as usize];
                t.0 += gh[0];
                t.1 += gh[1];
                t.2 += 1;
            }
        }
        let mut open = vec![false; live.len()];
        for (i, &(c, slot)) in live.iter().enumerate() {
            let (g, h, count) = totals[i];
            arenas[c][slot] = Slot::Leaf(-g / (h + p.lambda));
            open[i] = depth < p.max_depth && count >= 2 && h >= 2.0 * p.min_child_weight;
        }
        if !open.iter().any(|&o| o) {
            break;
        }
        for q in node_of.iter_mut() {
            if *q != NONE && !open[*q as usize] {
                *q = NONE;
            }
        }

        let mut best: Vec<Option<Best>> = vec![None; live.len()];
        let mut scan: Vec<Scan> = totals
            .iter()
            .map(|&(g, h, _)| Scan {
                gl: 0.0,
                hl: 0.0,
                last: 0.0,
                seen: false,
                g,
                h,
                bar: f64::NEG_INFINITY,
            })
            .collect();
        let (mcw, lambda) = (p.min_child_weight, p.lambda);
        for &f in features {
            for s in scan.iter_mut() {
                s.gl = 0.0;
                s.hl = 0.0;
                s.seen = false;
            }
            for (&row, &v) in sorted.rows[f].iter().zip(&sorted.vals[f]) {
                let base = row as usize * k;
                let nodes = &node_of[base..base + k];
                let pairs = &gh[base..base + k];
                for (&q, &[g, h]) in nodes.iter().zip(pairs) {
                    if q == NONE {
                        continue;
                    }
                    let s = &mut scan[q as usize];
                    if s.seen & (v != s.last) {
                        let hr = s.h - s.hl;
                        if (s.hl >= mcw) & (hr >= mcw) {
                            // compare num/den against the bar without dividing
                            let (dl, dr) = (s.hl + lambda, hr + lambda);
                            let gr = s.g - s.gl;
                            let num = s.gl * s.gl * dr + gr * gr * dl;
                            if num > s.bar * (dl * dr) {
                                let raw = score(s.gl, s.hl, lambda) + score(gr, hr, lambda);
                                let mut threshold = 0.5 * (s.last + v);
                                if threshold <= s.last {
                                    threshold = v;
                                }
                                best[q as usize] = Some(Best {
                                    raw,
                                    feature: f,
                                    threshold,
                                });
                                s.bar = raw + TIE_EPS * raw.abs();
                            }
                        }
                    }
                    s.gl += g;
                    s.hl += h;
                    s.last = v;
                    s.seen = true;
                }
            }
        }

        // children of each live node, as indices into the next level
        let mut next: Vec<(usize, usize)> = Vec::new();
        let mut children: Vec<Option<(u32, usize, f64)>> = vec![None; live.len()];
        for (i, &(c, slot)) in live.iter().enumerate() {
            let Some(b) = best[i] else { continue };
            let (g, h, _) = totals[i];
            let gain = 0.5 * (b.raw - score(g, h, p.lambda)) - p.gamma;
            if gain <= 0.0 {
                continue;
            }
            let arena = &mut arenas[c];
            let (left, right) = (arena.len(), arena.len() + 1);
            arena.push(Slot::Leaf(0.0));
            arena.push(Slot::Leaf(0.0));
            arena[slot] = Slot::Split {
                feature: b.feature,
                threshold: b.threshold,
                gain,
                left,
                right,
            };
            children[i] = Some((next.len() as u32, b.feature, b.threshold));
            next.push((c, left));
            next.push((c, right));
        }
        for (i, q) in node_of.iter_mut().enumerate() {
            if *q == NONE {
                continue;
            }
            *q = match children[*q as usize] {
                Some((left, f, thr)) => {
                    let row = i / k;
                    if data[row * n_cols + f] < thr {
                        left
                    } else {
                        left + 1
                    }
                }
                None => NONE,
            };
        }
        live = next;
        if live.is_empty() {
            break;
        }
    }
    arenas.iter().map(|a| build(a, 0)).collect()
}
