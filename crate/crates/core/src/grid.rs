//! Accept/reject grids over a rectangle of two state coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub x_name: String,
    pub y_name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major: entry `i * ys.len() + j` is the point `(xs[i], ys[j])`.
    pub accept: Vec<bool>,
}

impl RegionGrid {
    pub fn at(&self, i: usize, j: usize) -> bool {
        self.accept[i * self.ys.len() + j]
    }

    /// Nearest grid value to an arbitrary point.
    pub fn nearest(&self, x: f64, y: f64) -> bool {
        let idx = |v: &[f64], p: f64| {
            (0..v.len())
                .min_by(|&a, &b| (v[a] - p).abs().total_cmp(&(v[b] - p).abs()))
                .unwrap_or(0)
        };
        self.at(idx(&self.xs, x), idx(&self.ys, y))
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn fill<F>(x_name: &str, y_name: &str, xs: Vec<f64>, ys: Vec<f64>, f: F) -> RegionGrid
where
    F: Fn(f64, f64) -> bool + Sync,
{
    let accept = xs
        .par_iter()
        .flat_map_iter(|&x| ys.iter().map(move |&y| (x, y)).collect::<Vec<_>>())
        .map(|(x, y)| f(x, y))
        .collect();
    RegionGrid { x_name: x_name.into(), y_name: y_name.into(), xs, ys, accept }
}
