use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Feature, FeatureSchema, Predictor};
use crate::data::ScadaRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            min_samples_split: 3,
            min_samples_leaf: 30,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                Node::Leaf { value, .. } => return value,
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf { value, count } => Some((value, count)),
            Node::Split { .. } => None,
        })
    }
}

/// Bagged CART regression trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub schema: FeatureSchema,
    pub trees: Vec<Tree>,
    pub seed: u64,
}

impl Predictor for ForestModel {
    fn features(&self) -> &[Feature] {
        &self.schema.features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    cfg: &'a ForestConfig,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
    left_len: usize,
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let value = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf {
            value,
            count: rows.len(),
        });
        self.nodes.len() - 1
    }

    /// Split maximising `S_L²/n_L + S_R²/n_R`, i.e. the largest reduction of
    /// squared error, among those leaving `min_samples_leaf` rows per side.
    fn best_split(&self, rows: &mut [usize]) -> Option<BestSplit> {
        let n = rows.len();
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let total: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let parent = total * total / n as f64;
        let mut best: Option<BestSplit> = None;
        for f in 0..self.x.first().map_or(0, Vec::len) {
            rows.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for s in 1..n {
                left_sum += self.y[rows[s - 1]];
                if s < min_leaf || n - s < min_leaf {
                    continue;
                }
                let (lo, hi) = (self.x[rows[s - 1]][f], self.x[rows[s]][f]);
                if lo >= hi {
                    continue;
                }
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / s as f64 + right_sum * right_sum / (n - s) as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = 0.5 * (lo + hi);
                    best = Some(BestSplit {
                        feature: f,
                        threshold: if mid < hi { mid } else { lo },
                        score,
                        left_len: s,
                    });
                }
            }
        }
        best.filter(|b| b.score > parent + 1e-12 * parent.abs().max(1.0))
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let n = rows.len();
        let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
        if n < self.cfg.min_samples_split || n < 2 * self.cfg.min_samples_leaf.max(1) || !depth_ok {
            return self.leaf(rows);
        }
        let Some(split) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        let f = split.feature;
        rows.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0, count: 0 });
        let (left_rows, right_rows) = rows.split_at_mut(split.left_len);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: f,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn build_tree(x: &[Vec<f64>], y: &[f64], cfg: &ForestConfig, seed: u64, index: usize) -> Tree {
    let mut rng = crate::rng::sub_stream(seed, 11, index as u64);
    let n = y.len();
    let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut b = Builder {
        x,
        y,
        cfg,
        nodes: Vec::new(),
    };
    b.grow(&mut rows, 0);
    Tree { nodes: b.nodes }
}

/// Fits `n_trees` CART trees on bootstrap resamples, in parallel with one
/// random stream per tree index.
pub fn rf_train(
    config: &ForestConfig,
    schema: &FeatureSchema,
    train: &[ScadaRecord],
    seed: u64,
) -> Result<ForestModel> {
    if train.len() < config.min_samples_split.max(1) {
        return Err(Error::EmptyData(format!(
            "forest needs at least {} rows, got {}",
            config.min_samples_split,
            train.len()
        )));
    }
    if config.n_trees == 0 {
        return Err(Error::InvalidInput("forest needs at least one tree".into()));
    }
    let x = schema.rows(train);
    let y: Vec<f64> = train.iter().map(|r| r.power).collect();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| build_tree(&x, &y, config, seed, t))
        .collect();
    Ok(ForestModel {
        schema: schema.clone(),
        trees,
        seed,
    })
}
