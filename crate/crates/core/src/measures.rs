//! Weighted point clouds in R^d (d <= 3), density samplers and seeding.
//!
//! A [`DiscreteMeasure`] stores unnormalized nonnegative weights so that
//! positive measures (tilted measures, generated targets) are first-class.
//! Every integral against a measure is a pairwise-summed weighted sum, so
//! results depend only on point order, never on scheduling.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{linspace, norm, pairwise_sum, pairwise_sum_by, tensor_indices};

pub const MAX_DIM: usize = 3;

/// Proposal budget per accepted point for the rejection samplers.
pub const MAX_PROPOSALS: u64 = 1_000_000;

const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension must be in 1..={MAX_DIM}, got {dim}"
        )));
    }
    Ok(())
}

impl DiscreteMeasure {
    /// Build from row-major coordinates (`points.len() == dim * weights.len()`).
    pub fn from_flat(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if points.len() != dim * weights.len() {
            return Err(Error::LengthMismatch {
                expected: dim * weights.len(),
                got: points.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index: i / dim });
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weight {i} must be finite and nonnegative, got {}",
                weights[i]
            )));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    pub fn new(points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| p.len() != dim) {
            return Err(Error::InvalidArgument(format!(
                "point {i} has length {}, expected {dim}",
                points[i].len()
            )));
        }
        Self::from_flat(dim, points.concat(), weights)
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty point set".into()));
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn dirac(point: &[f64], mass: f64) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec(), vec![mass])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn flat_points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= PROBABILITY_TOL
    }

    /// Largest Euclidean norm of a support point (atoms of zero weight included).
    pub fn max_norm(&self) -> f64 {
        self.points().map(norm).fold(0.0, f64::max)
    }

    /// Error if some point lies outside the closed ball of radius `radius`.
    pub fn check_in_ball(&self, radius: f64) -> Result<()> {
        let slack = radius * (1.0 + 1e-12) + 1e-12;
        match self.points().position(|p| norm(p) > slack) {
            Some(index) => Err(Error::OutsideSupport { index, radius }),
            None => Ok(()),
        }
    }

    /// Image measure under `map`; weights are copied unchanged.
    pub fn pushforward<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut out = Vec::with_capacity(self.points.len());
        for (i, p) in self.points().enumerate() {
            let y = map(p);
            if y.len() != self.dim {
                return Err(Error::LengthMismatch {
                    expected: self.dim,
                    got: y.len(),
                });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            out.extend_from_slice(&y);
        }
        Ok(Self {
            dim: self.dim,
            points: out,
            weights: self.weights.clone(),
        })
    }

    /// Multiply weights pointwise by `factors`.
    pub fn reweight(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: factors.len(),
            });
        }
        if let Some(i) = factors.iter().position(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "factor {i} must be finite and nonnegative, got {}",
                factors[i]
            )));
        }
        Ok(Self {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.iter().zip(factors).map(|(w, f)| w * f).collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.reweight(&vec![c; self.len()])
    }

    /// `Σ w_i f(x_i)`; a NaN or infinite integrand value is reported with its index.
    pub fn integrate<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut terms = Vec::with_capacity(self.len());
        for (i, p) in self.points().enumerate() {
            let v = f(p);
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            terms.push(self.weights[i] * v);
        }
        Ok(pairwise_sum(&terms))
    }

    /// Fallible variant of [`integrate`](Self::integrate).
    pub fn try_integrate<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(usize, &[f64]) -> Result<f64>,
    {
        let mut terms = Vec::with_capacity(self.len());
        for (i, p) in self.points().enumerate() {
            let v = f(i, p)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            terms.push(self.weights[i] * v);
        }
        Ok(pairwise_sum(&terms))
    }

    /// Write as CSV with header `x1[,x2[,x3]],w` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        header.push("w".into());
        wtr.write_record(&header).map_err(csv_err)?;
        for (p, w) in self.points().zip(&self.weights) {
            let mut row: Vec<String> = p.iter().map(|v| fmt17(*v)).collect();
            row.push(fmt17(*w));
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let cols = header.len();
        let dim = cols.saturating_sub(1);
        let expected: Vec<String> = (1..=dim)
            .map(|k| format!("x{k}"))
            .chain(std::iter::once("w".to_string()))
            .collect();
        if header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(Error::InvalidArgument(format!(
                "bad measure CSV header {:?}, expected {}",
                header,
                expected.join(",")
            )));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("row {}: {e}", row + 1)))?;
            points.extend_from_slice(&vals[..dim]);
            weights.push(vals[dim]);
        }
        Self::from_flat(dim, points, weights)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// 17 significant digits, round-trip exact.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

fn splitmix64(k: u64) -> u64 {
    let mut z = k.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Root seed; replica `k` draws from `value ^ splitmix64(k)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn derive(self, k: u64) -> Seed {
        Seed(self.0 ^ splitmix64(k))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Densities supported in the centered ball `B_R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    UniformBall {
        radius: f64,
        dim: usize,
    },
    /// Independent Gaussian coordinates conditioned on the ball.
    TruncatedGaussian {
        radius: f64,
        mean: Vec<f64>,
        var: Vec<f64>,
    },
    /// Multilinear interpolation of nonnegative values on a regular grid over
    /// `[lo, hi]^d`, restricted to the ball.
    GridDensity {
        radius: f64,
        lo: f64,
        hi: f64,
        shape: Vec<usize>,
        values: Vec<f64>,
    },
}

impl DensitySpec {
    pub fn radius(&self) -> f64 {
        match self {
            Self::UniformBall { radius, .. }
            | Self::TruncatedGaussian { radius, .. }
            | Self::GridDensity { radius, .. } => *radius,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UniformBall { dim, .. } => *dim,
            Self::TruncatedGaussian { mean, .. } => mean.len(),
            Self::GridDensity { shape, .. } => shape.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.radius();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        check_dim(self.dim())?;
        match self {
            Self::UniformBall { .. } => Ok(()),
            Self::TruncatedGaussian { mean, var, .. } => {
                if mean.len() != var.len() {
                    return Err(Error::LengthMismatch {
                        expected: mean.len(),
                        got: var.len(),
                    });
                }
                if var.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::InvalidArgument("variances must be positive".into()));
                }
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidArgument("mean must be finite".into()));
                }
                Ok(())
            }
            Self::GridDensity {
                lo,
                hi,
                shape,
                values,
                ..
            } => {
                if !(lo < hi) {
                    return Err(Error::InvalidArgument("grid box must have lo < hi".into()));
                }
                if shape.iter().any(|&s| s < 2) {
                    return Err(Error::InvalidArgument("grid needs >= 2 nodes per axis".into()));
                }
                let n: usize = shape.iter().product();
                if values.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: values.len(),
                    });
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidArgument("grid values must be >= 0".into()));
                }
                if self.grid_trapezoid() <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "grid density has zero trapezoidal integral".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn grid_trapezoid(&self) -> f64 {
        let Self::GridDensity {
            lo,
            hi,
            shape,
            values,
            ..
        } = self
        else {
            return f64::NAN;
        };
        let cell: f64 = shape.iter().map(|&s| (hi - lo) / (s - 1) as f64).product();
        pairwise_sum_by(values.len(), |flat| {
            let mut rem = flat;
            let mut w = 1.0;
            for ax in (0..shape.len()).rev() {
                let i = rem % shape[ax];
                rem /= shape[ax];
                if i == 0 || i == shape[ax] - 1 {
                    w *= 0.5;
                }
            }
            w * values[flat]
        }) * cell
    }

    /// Unnormalized density at `x`; zero outside the ball.
    pub fn density(&self, x: &[f64]) -> f64 {
        if norm(x) > self.radius() {
            return 0.0;
        }
        match self {
            Self::UniformBall { .. } => 1.0,
            Self::TruncatedGaussian { mean, var, .. } => {
                let e: f64 = x
                    .iter()
                    .zip(mean.iter().zip(var))
                    .map(|(xi, (m, v))| (xi - m) * (xi - m) / v)
                    .sum();
                (-0.5 * e).exp()
            }
            Self::GridDensity {
                lo,
                hi,
                shape,
                values,
                ..
            } => multilinear(*lo, *hi, shape, values, x).unwrap_or(0.0),
        }
    }

    /// `n` i.i.d. draws, each with weight `1/n`.
    pub fn sample(&self, n: usize, seed: Seed) -> Result<DiscreteMeasure> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be >= 1".into()));
        }
        let dim = self.dim();
        let r = self.radius();
        let mut rng = seed.rng();
        let mut points = Vec::with_capacity(n * dim);
        let mut x = vec![0.0; dim];
        // bounding box of the support and an upper bound of the density on it
        let (box_lo, box_hi, dmax) = match self {
            Self::GridDensity { lo, hi, values, .. } => (
                lo.max(-r),
                hi.min(r),
                values.iter().copied().fold(0.0, f64::max),
            ),
            _ => (-r, r, 1.0),
        };
        for _ in 0..n {
            let mut accepted = false;
            for _ in 0..MAX_PROPOSALS {
                match self {
                    Self::TruncatedGaussian { mean, var, .. } => {
                        for k in 0..dim {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            x[k] = mean[k] + var[k].sqrt() * z;
                        }
                        if norm(&x) <= r {
                            accepted = true;
                        }
                    }
                    Self::UniformBall { .. } => {
                        for xk in x.iter_mut() {
                            *xk = rng.random_range(-r..=r);
                        }
                        if norm(&x) <= r {
                            accepted = true;
                        }
                    }
                    Self::GridDensity { .. } => {
                        if box_lo >= box_hi {
                            break;
                        }
                        for xk in x.iter_mut() {
                            *xk = rng.random_range(box_lo..=box_hi);
                        }
                        let u: f64 = rng.random::<f64>() * dmax;
                        if norm(&x) <= r && u < self.density(&x) {
                            accepted = true;
                        }
                    }
                }
                if accepted {
                    break;
                }
            }
            if !accepted {
                return Err(Error::DegenerateDensity {
                    proposals: MAX_PROPOSALS,
                });
            }
            points.extend_from_slice(&x);
        }
        DiscreteMeasure::from_flat(dim, points, vec![1.0 / n as f64; n])
    }

    /// Deterministic midpoint-rule discretization: cell centers of a
    /// `nodes`-per-axis grid on `[-R, R]^d` inside the ball, weighted by the
    /// density and normalized to a probability measure.
    pub fn quadrature(&self, nodes: usize) -> Result<DiscreteMeasure> {
        self.validate()?;
        if nodes == 0 {
            return Err(Error::InvalidArgument("quadrature needs >= 1 node".into()));
        }
        let dim = self.dim();
        let r = self.radius();
        let h = 2.0 * r / nodes as f64;
        let axis: Vec<f64> = (0..nodes).map(|i| -r + h * (i as f64 + 0.5)).collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for idx in tensor_indices(&vec![nodes; dim]) {
            let p: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
            let d = self.density(&p);
            if d > 0.0 {
                points.extend_from_slice(&p);
                weights.push(d);
            }
        }
        let total = pairwise_sum(&weights);
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("density vanishes on the quadrature grid".into()));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        DiscreteMeasure::from_flat(dim, points, weights)
    }
}

/// Multilinear interpolation on a regular grid over `[lo, hi]^d`; `None`
/// outside the box.
pub(crate) fn multilinear(lo: f64, hi: f64, shape: &[usize], values: &[f64], x: &[f64]) -> Option<f64> {
    let d = shape.len();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for k in 0..d {
        if !(x[k] >= lo && x[k] <= hi) {
            return None;
        }
        let h = (hi - lo) / (shape[k] - 1) as f64;
        let t = (x[k] - lo) / h;
        let i = (t.floor() as usize).min(shape[k] - 2);
        base[k] = i;
        frac[k] = t - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut flat = 0;
        for k in 0..d {
            let bit = (corner >> (d - 1 - k)) & 1;
            w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            flat = flat * shape[k] + base[k] + bit;
        }
        if w != 0.0 {
            acc += w * values[flat];
        }
    }
    Some(acc)
}

/// Grid axis nodes used by [`DensitySpec::GridDensity`].
pub fn grid_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo, hi, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> DiscreteMeasure {
        DiscreteMeasure::new(&[vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn uniform_ball_small_sample() {
        let spec = DensitySpec::UniformBall { radius: 1.0, dim: 1 };
        let m = spec.sample(4, Seed(7)).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.points().all(|p| (-1.0..=1.0).contains(&p[0])));
        assert!(m.weights().iter().all(|&w| w == 0.25));
        assert!(m.is_probability());
    }

    #[test]
    fn single_sample_has_unit_weight() {
        let spec = DensitySpec::TruncatedGaussian {
            radius: 2.0,
            mean: vec![0.0, 0.0],
            var: vec![1.0, 1.0],
        };
        let m = spec.sample(1, Seed(3)).unwrap();
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn zero_samples_rejected() {
        let spec = DensitySpec::UniformBall { radius: 1.0, dim: 2 };
        assert!(spec.sample(0, Seed(0)).is_err());
    }

    #[test]
    fn truncated_gaussian_mean_within_clt_band() {
        // The truncated law is symmetric, so its mean is 0 and its variance
        // is below the untruncated variance 1.
        let spec = DensitySpec::TruncatedGaussian {
            radius: 2.0,
            mean: vec![0.0],
            var: vec![1.0],
        };
        let n = 100_000;
        let m = spec.sample(n, Seed(1)).unwrap();
        let mean = m.integrate(|x| x[0]).unwrap();
        assert!(mean.abs() <= 3.0 / (n as f64).sqrt(), "mean {mean}");
        assert!(m.max_norm() <= 2.0);
    }

    #[test]
    fn degenerate_density_reports_error() {
        // density vanishes inside the ball
        let spec = DensitySpec::GridDensity {
            radius: 1.0,
            lo: -1.0,
            hi: 1.0,
            shape: vec![3],
            values: vec![1e-300, 0.0, 1e-300],
        };
        // not degenerate in the trapezoid sense, but tiny: acceptance still possible
        assert!(spec.validate().is_ok());
        let zero = DensitySpec::GridDensity {
            radius: 1.0,
            lo: -1.0,
            hi: 1.0,
            shape: vec![3],
            values: vec![0.0, 0.0, 0.0],
        };
        assert!(zero.validate().is_err());
        // all mass outside the support ball
        let outside = DensitySpec::GridDensity {
            radius: 0.1,
            lo: 0.5,
            hi: 1.0,
            shape: vec![2],
            values: vec![1.0, 1.0],
        };
        assert!(matches!(
            outside.sample(1, Seed(0)),
            Err(Error::DegenerateDensity { .. })
        ));
    }

    #[test]
    fn pushforward_examples() {
        let m = two_point();
        assert_eq!(m.pushforward(|x| x.to_vec()).unwrap(), m);
        let d = DiscreteMeasure::dirac(&[0.0], 1.0).unwrap();
        let t = d.pushforward(|x| vec![x[0] + 0.7]).unwrap();
        assert_eq!(t.point(0), &[0.7]);
        assert_eq!(t.weights(), &[1.0]);
        let doubled = m.pushforward(|x| vec![2.0 * x[0]]).unwrap();
        assert_eq!(doubled.point(0), &[-2.0]);
        assert_eq!(doubled.point(1), &[2.0]);
        assert_eq!(doubled.weights(), &[0.5, 0.5]);
        assert!(m.pushforward(|_| vec![f64::NAN]).is_err());
    }

    #[test]
    fn reweight_examples() {
        let m = two_point();
        assert_eq!(m.reweight(&[1.0, 1.0]).unwrap(), m);
        assert_eq!(m.reweight(&[0.0, 1.0]).unwrap().weights()[0], 0.0);
        let r = m.reweight(&[2.0, 4.0]).unwrap();
        assert_eq!(r.weights(), &[1.0, 2.0]);
        assert_eq!(r.total_mass(), 3.0);
        assert!(matches!(
            m.reweight(&[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn integrate_examples() {
        let m = two_point();
        assert_eq!(m.integrate(|_| 1.0).unwrap(), 1.0);
        let d = DiscreteMeasure::dirac(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(d.integrate(crate::numeric::quad).unwrap(), 0.0);
        assert_eq!(m.integrate(|x| x[0]).unwrap(), 0.0);
        match m.integrate(|x| if x[0] > 0.0 { f64::NAN } else { 0.0 }) {
            Err(Error::NonFinite { index }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = DiscreteMeasure::new(
            &[vec![0.1, -1.0 / 3.0], vec![std::f64::consts::PI, 2.0]],
            vec![0.25, 0.75],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,w\n"));
        assert_eq!(DiscreteMeasure::read_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn derived_seeds_differ() {
        let s = Seed(42);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(5), s.derive(5));
    }

    #[test]
    fn quadrature_is_probability() {
        let spec = DensitySpec::UniformBall { radius: 1.0, dim: 2 };
        let q = spec.quadrature(20).unwrap();
        assert!(q.is_probability());
        assert!(q.max_norm() <= 1.0);
    }
}
