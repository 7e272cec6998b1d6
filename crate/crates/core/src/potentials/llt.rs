//! Linear-time discrete Legendre transform.
//!
//! The transform `out[j] = max_i (y_j x_i - z_i)` only sees the lower convex
//! hull of the points `(x_i, z_i)`. Hull edge slopes are increasing, so the
//! maximizer index is monotone in `y` and a single merge pass over the sorted
//! slope grid visits every hull vertex at most once.

use crate::error::{Error, Result};

/// Lower convex hull of `(x_i, z_i)` for strictly increasing `x`.
#[derive(Clone, Debug)]
pub struct LowerHull {
    /// Indices of hull vertices into the original arrays, increasing.
    pub vertices: Vec<usize>,
    /// `slopes[k]` is the slope of the edge from vertex `k` to `k + 1`.
    pub slopes: Vec<f64>,
}

impl LowerHull {
    /// Collinear interior points are dropped, so the leftmost point of a flat
    /// run is always a vertex (lowest-index tie-breaking).
    pub fn new(x: &[f64], z: &[f64]) -> Self {
        let mut v: Vec<usize> = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            while v.len() >= 2 {
                let a = v[v.len() - 2];
                let b = v[v.len() - 1];
                let cross = (x[b] - x[a]) * (z[i] - z[a]) - (z[b] - z[a]) * (x[i] - x[a]);
                if cross <= 0.0 {
                    v.pop();
                } else {
                    break;
                }
            }
            v.push(i);
        }
        let slopes = v
            .windows(2)
            .map(|w| (z[w[1]] - z[w[0]]) / (x[w[1]] - x[w[0]]))
            .collect();
        Self { vertices: v, slopes }
    }

    /// Index (into the original arrays) maximizing `y x_i - z_i`; ties go to
    /// the lowest index.
    pub fn argmax(&self, y: f64) -> usize {
        let k = self.slopes.partition_point(|&s| s < y);
        self.vertices[k]
    }
}

fn check_increasing(v: &[f64], strict: bool) -> Result<()> {
    let bad = v.windows(2).any(|w| {
        if strict {
            !(w[0] < w[1])
        } else {
            !(w[0] <= w[1])
        }
    });
    if bad {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

fn validate(slopes: &[f64], x: &[f64], z: &[f64]) -> Result<()> {
    if x.len() != z.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty x-grid".into()));
    }
    if z.iter().chain(x).chain(slopes).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("grids and values must be finite".into()));
    }
    check_increasing(x, true)?;
    check_increasing(slopes, false)
}

/// Discrete Legendre transform with maximizer indices.
pub fn llt_1d_argmax(slopes: &[f64], x: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    validate(slopes, x, z)?;
    let hull = LowerHull::new(x, z);
    let mut out = Vec::with_capacity(slopes.len());
    let mut arg = Vec::with_capacity(slopes.len());
    let mut k = 0;
    for &y in slopes {
        while k < hull.slopes.len() && hull.slopes[k] < y {
            k += 1;
        }
        let i = hull.vertices[k];
        out.push(y * x[i] - z[i]);
        arg.push(i);
    }
    Ok((out, arg))
}

/// Discrete Legendre transform `out[j] = max_i (slopes[j] x_i - z_i)` in
/// `O(n + m)`. For non-convex `z` this is the transform of its convex hull,
/// which coincides with the transform of `z`.
pub fn llt_1d(slopes: &[f64], x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    llt_1d_argmax(slopes, x, z).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use proptest::prelude::*;

    fn brute(slopes: &[f64], x: &[f64], z: &[f64]) -> Vec<f64> {
        slopes
            .iter()
            .map(|&y| {
                x.iter()
                    .zip(z)
                    .map(|(xi, zi)| y * xi - zi)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn quadratic_at_zero_slope() {
        let x = [-1.0, 0.0, 1.0];
        let z: Vec<f64> = x.iter().map(|v| 0.5 * v * v).collect();
        assert_eq!(llt_1d(&[0.0], &x, &z).unwrap(), vec![0.0]);
    }

    #[test]
    fn zero_on_box_gives_abs() {
        let x = linspace(-1.0, 1.0, 11);
        let z = vec![0.0; 11];
        let ys = [-2.0, -0.3, 0.0, 0.7, 1.5];
        let out = llt_1d(&ys, &x, &z).unwrap();
        for (y, o) in ys.iter().zip(out) {
            assert_eq!(o, y.abs());
        }
    }

    #[test]
    fn ties_pick_lowest_index() {
        let x = linspace(-1.0, 1.0, 5);
        let z = vec![0.0; 5];
        let (_, arg) = llt_1d_argmax(&[0.0], &x, &z).unwrap();
        assert_eq!(arg, vec![0]);
    }

    #[test]
    fn rejects_unsorted() {
        let x = [0.0, 1.0];
        assert!(matches!(
            llt_1d(&[1.0, 0.0], &x, &[0.0, 0.0]),
            Err(Error::UnsortedGrid)
        ));
        assert!(matches!(
            llt_1d(&[0.0], &[1.0, 0.0], &[0.0, 0.0]),
            Err(Error::UnsortedGrid)
        ));
    }

    #[test]
    fn random_convex_twenty_points_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut x: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
            x.sort_by(f64::total_cmp);
            x.dedup();
            let c: f64 = rng.random_range(0.1..2.0);
            let s: f64 = rng.random_range(-1.0..1.0);
            let z: Vec<f64> = x.iter().map(|v| c * v * v + s * v + (v * 0.3).abs()).collect();
            let mut ys: Vec<f64> = (0..37).map(|_| rng.random_range(-8.0..8.0)).collect();
            ys.sort_by(f64::total_cmp);
            assert_eq!(llt_1d(&ys, &x, &z).unwrap(), brute(&ys, &x, &z));
        }
    }

    proptest! {
        #[test]
        fn arbitrary_inputs_match_brute_force(
            zs in proptest::collection::vec(-5.0f64..5.0, 1..40),
            mut ys in proptest::collection::vec(-10.0f64..10.0, 1..30),
        ) {
            let x = linspace(-2.0, 2.0, zs.len().max(2));
            let z: Vec<f64> = if zs.len() == 1 { vec![zs[0], zs[0]] } else { zs };
            ys.sort_by(f64::total_cmp);
            let fast = llt_1d(&ys, &x, &z).unwrap();
            let slow = brute(&ys, &x, &z);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{} vs {}", a, b);
            }
        }
    }
}
