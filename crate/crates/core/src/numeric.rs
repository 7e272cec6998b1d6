//! Small numeric helpers shared by the integrators and solvers.

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length of the input, so results are bit-stable for a given ordering.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n`.
pub fn pairwise_sum_by<F: FnMut(usize) -> f64>(n: usize, f: F) -> f64 {
    let terms: Vec<f64> = (0..n).map(f).collect();
    pairwise_sum(&terms)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `q(x) = ½‖x‖²`.
pub fn quad(x: &[f64]) -> f64 {
    0.5 * norm_sq(x)
}

/// Nodes of a uniform grid with `n` points on `[lo, hi]` (`n >= 2`), or the
/// midpoint when `n == 1`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
                .collect()
        }
    }
}

/// Iterate over all multi-indices of a tensor grid with the given shape,
/// last axis fastest.
pub fn tensor_indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; shape.len()];
        for ax in (0..shape.len()).rev() {
            idx[ax] = flat % shape[ax];
            flat /= shape[ax];
        }
        idx
    })
}

/// Points of a `per_axis`-node cube grid on `[-r, r]^dim` that lie in the
/// closed ball of radius `r`.
pub fn ball_grid(dim: usize, r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let axis = linspace(-r, r, per_axis);
    let shape = vec![per_axis; dim];
    tensor_indices(&shape)
        .map(|idx| idx.iter().map(|&i| axis[i]).collect::<Vec<f64>>())
        .filter(|p| norm(p) <= r * (1.0 + 1e-12))
        .collect()
}
