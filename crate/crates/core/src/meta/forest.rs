//! Bagged CART trees with Gini splits and per-node feature subsampling.
//!
//! Every tree gets its own seeded generator, so growing trees in parallel
//! changes nothing about the forest. Node growth is depth-first and all
//! tie-breaks are scan-order, which makes a forest a pure function of
//! `(data, seed, hyper)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::{mix, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Forest {
    pub trees: Vec<Node>,
    pub n_classes: usize,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

/// Majority class of a node; ties fall to the class more frequent in the
/// whole training set, then to the lower class index.
fn majority(counts: &[usize], global: &[usize]) -> usize {
    let mut best = 0;
    for c in 1..counts.len() {
        let better = counts[c] > counts[best]
            || (counts[c] == counts[best] && global[c] > global[best]);
        if better {
            best = c;
        }
    }
    best
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    global_counts: &'a [usize],
    max_depth: usize,
    n_candidates: usize,
}

impl Grower<'_> {
    fn class_counts(&self, idxs: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idxs {
            counts[self.y[i]] += 1;
        }
        counts
    }

    fn grow(&self, idxs: &mut Vec<usize>, depth: usize, r: &mut impl Rng) -> Node {
        let counts = self.class_counts(idxs);
        let node_gini = gini(&counts, idxs.len());
        let leaf = Node::Leaf {
            class: majority(&counts, self.global_counts),
        };
        if depth >= self.max_depth || idxs.len() < 2 || node_gini == 0.0 {
            return leaf;
        }
        let dim = self.x[0].len();
        if dim == 0 {
            return leaf;
        }

        // Partial Fisher-Yates draws the candidate features in place.
        let mut features: Vec<usize> = (0..dim).collect();
        let m = self.n_candidates.clamp(1, dim);
        for i in 0..m {
            let j = r.gen_range(i..dim);
            features.swap(i, j);
        }
        features.truncate(m);
        features.sort_unstable();

        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = Vec::with_capacity(idxs.len());
        for &feature in &features {
            order.clone_from(idxs);
            order.sort_by(|&a, &b| {
                self.x[a][feature]
                    .partial_cmp(&self.x[b][feature])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut left_counts = vec![0usize; self.n_classes];
            let mut right_counts = counts.clone();
            for cut in 1..order.len() {
                let moved = self.y[order[cut - 1]];
                left_counts[moved] += 1;
                right_counts[moved] -= 1;
                let lo = self.x[order[cut - 1]][feature];
                let hi = self.x[order[cut]][feature];
                if lo == hi {
                    continue;
                }
                let w = (cut as f64 * gini(&left_counts, cut)
                    + (order.len() - cut) as f64 * gini(&right_counts, order.len() - cut))
                    / order.len() as f64;
                if best.map_or(true, |(bw, _, _)| w < bw) {
                    best = Some((w, feature, lo + (hi - lo) / 2.0));
                }
            }
        }
        let Some((split_gini, feature, threshold)) = best else {
            return leaf;
        };
        if split_gini >= node_gini - 1e-12 {
            return leaf;
        }
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = idxs
            .drain(..)
            .partition(|&i| self.x[i][feature] <= threshold);
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.grow(&mut left, depth + 1, r)),
            right: Box::new(self.grow(&mut right, depth + 1, r)),
        }
    }
}

pub(crate) fn train_forest(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    n_trees: usize,
    max_depth: usize,
    seed: u64,
) -> Forest {
    let n = x.len();
    let dim = x[0].len();
    let mut global_counts = vec![0usize; n_classes];
    for &c in y {
        global_counts[c] += 1;
    }
    let grower = Grower {
        x,
        y,
        n_classes,
        global_counts: &global_counts,
        max_depth,
        n_candidates: (dim as f64).sqrt().floor().max(1.0) as usize,
    };
    let trees: Vec<Node> = (0..n_trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng(mix(seed, t));
            let mut bootstrap: Vec<usize> = (0..n).map(|_| r.gen_range(0..n)).collect();
            grower.grow(&mut bootstrap, 0, &mut r)
        })
        .collect();
    Forest { trees, n_classes }
}

fn walk<'a>(mut node: &'a Node, f: &[f64]) -> usize {
    loop {
        match node {
            Node::Leaf { class } => return *class,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                node = if f[*feature] <= *threshold { left } else { right };
            }
        }
    }
}

/// Fraction of trees voting for each class.
pub(crate) fn forest_votes(forest: &Forest, f: &[f64]) -> Vec<f64> {
    let mut votes = vec![0.0; forest.n_classes];
    for tree in &forest.trees {
        votes[walk(tree, f)] += 1.0;
    }
    let t = forest.trees.len() as f64;
    votes.iter_mut().for_each(|v| *v /= t);
    votes
}
