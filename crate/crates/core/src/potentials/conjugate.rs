//! Tabulated Fenchel conjugates for potentials without a closed form.
//!
//! The potential is sampled on a tensor grid and its conjugate is the exact
//! discrete transform `z*(y) = max_i y·x_i - z(x_i)` evaluated at arbitrary
//! `y`. In 1-D this is a binary search on the lower hull; in 2-D every row
//! (fixed first coordinate) keeps its own hull over the second coordinate and
//! the outer maximum scans the rows.

use crate::error::{Error, Result};
use crate::numeric::norm;

use super::llt::LowerHull;

#[derive(Debug)]
pub(crate) struct ConjugateTable {
    axes: Vec<Vec<f64>>,
    /// Potential values, row-major with the last axis fastest.
    values: Vec<f64>,
    hulls: Vec<LowerHull>,
    radius: f64,
}

impl ConjugateTable {
    pub(crate) fn build(axes: Vec<Vec<f64>>, values: Vec<f64>, radius: f64) -> Result<Self> {
        let hulls = match axes.len() {
            1 => vec![LowerHull::new(&axes[0], &values)],
            2 => {
                let n2 = axes[1].len();
                values
                    .chunks_exact(n2)
                    .map(|row| LowerHull::new(&axes[1], row))
                    .collect()
            }
            d => {
                return Err(Error::Unsupported(format!(
                    "tabulated conjugates need dimension <= 2, got {d}"
                )))
            }
        };
        Ok(Self {
            axes,
            values,
            hulls,
            radius,
        })
    }

    pub(crate) fn radius(&self) -> f64 {
        self.radius
    }

    fn check_range(&self, y: &[f64]) -> Result<()> {
        let r = norm(y);
        if !(r <= self.radius * (1.0 + 1e-12) + 1e-12) {
            return Err(Error::ConjugateRangeExceeded {
                norm: r,
                radius: self.radius,
            });
        }
        Ok(())
    }

    /// Value and maximizer of the discrete transform at `y`.
    pub(crate) fn eval(&self, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        if y.len() != self.axes.len() {
            return Err(Error::LengthMismatch {
                expected: self.axes.len(),
                got: y.len(),
            });
        }
        self.check_range(y)?;
        Ok(self.eval_unchecked(y))
    }

    pub(crate) fn eval_unchecked(&self, y: &[f64]) -> (f64, Vec<f64>) {
        match self.axes.len() {
            1 => {
                let x = &self.axes[0];
                let i = self.hulls[0].argmax(y[0]);
                (y[0] * x[i] - self.values[i], vec![x[i]])
            }
            _ => {
                let (x1, x2) = (&self.axes[0], &self.axes[1]);
                let n2 = x2.len();
                let mut best = f64::NEG_INFINITY;
                let mut arg = (0, 0);
                for (i1, hull) in self.hulls.iter().enumerate() {
                    let i2 = hull.argmax(y[1]);
                    let v = (y[0] * x1[i1] + y[1] * x2[i2]) - self.values[i1 * n2 + i2];
                    if v > best {
                        best = v;
                        arg = (i1, i2);
                    }
                }
                (best, vec![x1[arg.0], x2[arg.1]])
            }
        }
    }

    /// Brute-force maximum over every node; test oracle for [`eval`](Self::eval).
    #[cfg(test)]
    pub(crate) fn eval_brute(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = Vec::new();
        match self.axes.len() {
            1 => {
                for (i, &x) in self.axes[0].iter().enumerate() {
                    let v = y[0] * x - self.values[i];
                    if v > best {
                        best = v;
                        arg = vec![x];
                    }
                }
            }
            _ => {
                let n2 = self.axes[1].len();
                for (i1, &a) in self.axes[0].iter().enumerate() {
                    for (i2, &b) in self.axes[1].iter().enumerate() {
                        let v = (y[0] * a + y[1] * b) - self.values[i1 * n2 + i2];
                        if v > best {
                            best = v;
                            arg = vec![a, b];
                        }
                    }
                }
            }
        }
        (best, arg)
    }
}
