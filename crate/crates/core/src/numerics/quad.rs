//! Globally adaptive Gauss-Kronrod (G7/K15) quadrature for vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    f(c, buf);
    for d in 0..dim {
        k[d] = WGK[7] * buf[d];
        g[d] = WG[3] * buf[d];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        for x in [c - dx, c + dx] {
            f(x, buf);
            for d in 0..dim {
                k[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    g[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    Segment { a, b, value: k, error: err }
}

/// Integrate `f` over the union of consecutive intervals `[p_i, p_{i+1}]`.
/// Breakpoints let callers split at known kinks of the integrand.
pub fn integrate_pieces<F>(mut f: F, points: &[f64], dim: usize, opts: QuadOptions) -> QuadResult
where
    F: FnMut(f64, &mut [f64]),
{
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&mut f, w[0], w[1], dim, &mut buf));
        }
    }
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for s in heap.iter() {
            for d in 0..dim {
                total[d] += s.value[d];
            }
            err += s.error;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let done = err <= opts.abs_tol.max(opts.rel_tol * scale);
        if done || heap.len() >= opts.max_intervals || heap.is_empty() {
            return QuadResult { value: total, error: err, intervals: heap.len() };
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            let stuck = Segment { error: 0.0, ..worst };
            heap.push(stuck);
            continue;
        }
        heap.push(kronrod(&mut f, worst.a, mid, dim, &mut buf));
        heap.push(kronrod(&mut f, mid, worst.b, dim, &mut buf));
    }
}

pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    integrate_pieces(|x, out| out[0] = f(x), &[a, b], 1, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, QuadOptions::default());
        assert!((r.value[0] - 8.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let r = integrate(crate::numerics::normal::pdf, -12.0, 12.0, QuadOptions::default());
        assert!((r.value[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn kink_handled_by_adaptivity() {
        let r = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, QuadOptions::default());
        assert!((r.value[0] - 4.0 / 3.0).abs() < 1e-10, "{:?}", r);
    }

    #[test]
    fn vector_valued_with_breakpoints() {
        let r = integrate_pieces(
            |x, out| {
                out[0] = if x < 0.5 { 1.0 } else { 0.0 };
                out[1] = x;
            },
            &[0.0, 0.5, 1.0],
            2,
            QuadOptions::default(),
        );
        assert!((r.value[0] - 0.5).abs() < 1e-14);
        assert!((r.value[1] - 0.5).abs() < 1e-14);
    }
}
