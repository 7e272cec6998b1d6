//! Strongly convex potentials and their Fenchel conjugates.
//!
//! Three families share one parameter-vector interface:
//!
//! - `quad_shift`: `z(x) = ½λ‖x‖² + a·x + b`, conjugate in closed form
//!   `z*(y) = ‖y - a‖²/2λ - b`.
//! - `max_quad`: `z(x) = ½λ‖x‖² + max_k (a_k·x + b_k)`, parameters laid out
//!   piece by piece as `[a_1, b_1, a_2, b_2, ...]`.
//! - `grid`: values on a tensor grid (the parameters), multilinear in between,
//!   `+∞` outside the box.
//!
//! For the last two the conjugate is the exact discrete transform over a
//! sampling grid. For `max_quad` that grid covers the ball where maximizers
//! can live: both `G(R)` from the class bounds and `(R + max‖a_k‖)/λ` bound
//! `‖∇z*‖` on `B_R`, and the smaller one is used.

mod class;
mod conjugate;
mod llt;

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use class::{
    bound_g, bound_mprime, grid_is_convex, GridSpec, PotentialClass, PotentialKind, DEFAULT_CONJ_NODES,
    DEFAULT_PIECES,
};
pub use llt::{llt_1d, llt_1d_argmax, LowerHull};

use crate::error::{Error, Result};
use crate::measures::multilinear;
use crate::numeric::{ball_grid, dot, linspace, norm, norm_sq, tensor_indices};
use conjugate::ConjugateTable;

/// Sparse derivative of `z(x)` with respect to the parameter vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamGrad {
    pub entries: Vec<(usize, f64)>,
    /// Set when `x` sits exactly on a kink between two pieces.
    pub tie: bool,
}

#[derive(Clone, Debug)]
pub struct Potential {
    class: Arc<PotentialClass>,
    theta: Vec<f64>,
    table: OnceLock<Arc<ConjugateTable>>,
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        self.class == other.class && self.theta == other.theta
    }
}

impl Potential {
    pub fn new(class: Arc<PotentialClass>, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != class.n_params() {
            return Err(Error::LengthMismatch {
                expected: class.n_params(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("potential parameters must be finite".into()));
        }
        Ok(Self {
            class,
            theta,
            table: OnceLock::new(),
        })
    }

    /// `½λ‖x‖² + a·x + b` in a class just large enough to hold it.
    pub fn quad_shift(lambda: f64, a: &[f64], b: f64, radius: f64) -> Result<Self> {
        let class = PotentialClass::quad_shift(a.len(), lambda, norm(a), b.abs(), radius)?;
        let mut theta = a.to_vec();
        theta.push(b);
        Self::new(Arc::new(class), theta)
    }

    /// `½λ‖x‖² + max_k (a_k·x + b_k)` in a class just large enough to hold it.
    pub fn max_quad(lambda: f64, pieces: &[(Vec<f64>, f64)], radius: f64) -> Result<Self> {
        let dim = pieces.first().map_or(0, |p| p.0.len());
        if pieces.iter().any(|p| p.0.len() != dim) {
            return Err(Error::InvalidArgument("pieces must share a dimension".into()));
        }
        let a_max = pieces.iter().map(|p| norm(&p.0)).fold(0.0, f64::max);
        let b_max = pieces.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let class = PotentialClass::max_quad(dim, lambda, pieces.len(), a_max, b_max, radius)?;
        let theta = pieces
            .iter()
            .flat_map(|(a, b)| a.iter().copied().chain(std::iter::once(*b)))
            .collect();
        Self::new(Arc::new(class), theta)
    }

    /// Grid potential with a class whose bounds are read off the values.
    pub fn grid(grid: GridSpec, lambda: f64, values: Vec<f64>, radius: f64) -> Result<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let class = PotentialClass::grid(grid, lambda, lo, [hi.max(lo), 0.0, 0.0], radius)?;
        Self::new(Arc::new(class), values)
    }

    /// Another member of the same class.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.class.clone(), theta)
    }

    pub fn class(&self) -> &PotentialClass {
        &self.class
    }

    pub fn class_arc(&self) -> Arc<PotentialClass> {
        self.class.clone()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn kind(&self) -> PotentialKind {
        self.class.kind()
    }

    pub fn dim(&self) -> usize {
        self.class.dim()
    }

    pub fn lambda(&self) -> f64 {
        self.class.lambda()
    }

    fn piece(&self, k: usize) -> (&[f64], f64) {
        let d = self.dim();
        let p = &self.theta[k * (d + 1)..(k + 1) * (d + 1)];
        (&p[..d], p[d])
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("point must be finite".into()));
        }
        Ok(())
    }

    /// Active piece of a `max_quad` potential (lowest index on ties) and
    /// whether another piece ties with it.
    fn active_piece(&self, x: &[f64]) -> (usize, f64, bool) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        let mut tie = false;
        for k in 0..self.class.pieces() {
            let (a, b) = self.piece(k);
            let v = dot(a, x) + b;
            if v > best {
                best = v;
                arg = k;
                tie = false;
            } else if v == best {
                tie = true;
            }
        }
        (arg, best, tie)
    }

    /// `z(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let lam = self.lambda();
        Ok(match self.kind() {
            PotentialKind::QuadShift => {
                let (a, b) = self.piece(0);
                0.5 * lam * norm_sq(x) + dot(a, x) + b
            }
            PotentialKind::MaxQuad => 0.5 * lam * norm_sq(x) + self.active_piece(x).1,
            PotentialKind::Grid => {
                let g = self.class.grid_spec().expect("grid class");
                multilinear(g.lo, g.hi, &g.shape, &self.theta, x).ok_or(Error::OutsideGrid)?
            }
        })
    }

    /// `∂z(x)/∂θ`.
    pub fn param_grad(&self, x: &[f64]) -> Result<ParamGrad> {
        self.check_point(x)?;
        let d = self.dim();
        Ok(match self.kind() {
            PotentialKind::QuadShift => ParamGrad {
                entries: x.iter().copied().chain(std::iter::once(1.0)).enumerate().collect(),
                tie: false,
            },
            PotentialKind::MaxQuad => {
                let (k, _, tie) = self.active_piece(x);
                let off = k * (d + 1);
                ParamGrad {
                    entries: x
                        .iter()
                        .copied()
                        .chain(std::iter::once(1.0))
                        .enumerate()
                        .map(|(i, v)| (off + i, v))
                        .collect(),
                    tie,
                }
            }
            PotentialKind::Grid => {
                let g = self.class.grid_spec().expect("grid class");
                ParamGrad {
                    entries: multilinear_weights(g, x).ok_or(Error::OutsideGrid)?,
                    tie: false,
                }
            }
        })
    }

    fn table(&self) -> Result<&Arc<ConjugateTable>> {
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        let built = Arc::new(self.build_table()?);
        Ok(self.table.get_or_init(|| built))
    }

    /// Radius of the ball containing every maximizer `∇z*(y)`, `‖y‖ <= R`.
    pub fn argmax_radius(&self) -> Result<f64> {
        let r = self.class.radius();
        let g = self.class.bound_g(r)?;
        let own = match self.kind() {
            PotentialKind::QuadShift | PotentialKind::MaxQuad => {
                let a = (0..self.class.pieces())
                    .map(|k| norm(self.piece(k).0))
                    .fold(0.0, f64::max);
                (r + a) / self.lambda()
            }
            PotentialKind::Grid => f64::INFINITY,
        };
        Ok(g.min(own))
    }

    fn build_table(&self) -> Result<ConjugateTable> {
        let d = self.dim();
        if d > 2 {
            return Err(Error::Unsupported(format!(
                "tabulated conjugates need dimension <= 2, got {d}"
            )));
        }
        match self.kind() {
            PotentialKind::Grid => {
                let g = self.class.grid_spec().expect("grid class");
                let axes = (0..d).map(|k| g.axis(k)).collect();
                ConjugateTable::build(axes, self.theta.clone(), self.class.radius())
            }
            _ => {
                let n = self.class.conj_nodes();
                // two extra cells of slack around the certified ball
                let rho = self.argmax_radius()? * (1.0 + 4.0 / n as f64) + 1e-9;
                let axis = linspace(-rho, rho, n);
                let shape = vec![n; d];
                let mut values = Vec::with_capacity(n.pow(d as u32));
                let mut x = vec![0.0; d];
                for idx in tensor_indices(&shape) {
                    for k in 0..d {
                        x[k] = axis[idx[k]];
                    }
                    values.push(self.eval(&x)?);
                }
                ConjugateTable::build(vec![axis; d], values, self.class.radius())
            }
        }
    }

    /// `z*(y) = sup_x x·y - z(x)`.
    pub fn conjugate_eval(&self, y: &[f64]) -> Result<f64> {
        self.check_point(y)?;
        match self.kind() {
            PotentialKind::QuadShift => {
                let (a, b) = self.piece(0);
                let diff: Vec<f64> = y.iter().zip(a).map(|(yi, ai)| yi - ai).collect();
                Ok(norm_sq(&diff) / (2.0 * self.lambda()) - b)
            }
            _ => Ok(self.table()?.eval(y)?.0),
        }
    }

    /// `∇z*(y) = argmax_x x·y - z(x)`; tabulated kinds break ties by the
    /// lowest lexicographic grid index.
    pub fn conjugate_grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.conjugate_eval_grad(y).map(|(_, g)| g)
    }

    /// Value and gradient of the conjugate from a single maximization.
    pub fn conjugate_eval_grad(&self, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_point(y)?;
        match self.kind() {
            PotentialKind::QuadShift => {
                let (a, b) = self.piece(0);
                let lam = self.lambda();
                let diff: Vec<f64> = y.iter().zip(a).map(|(yi, ai)| yi - ai).collect();
                let v = norm_sq(&diff) / (2.0 * lam) - b;
                Ok((v, diff.iter().map(|v| v / lam).collect()))
            }
            _ => self.table()?.eval(y),
        }
    }

    /// Certified conjugate range (`None` when the conjugate is closed-form).
    pub fn conjugate_range(&self) -> Option<f64> {
        match self.kind() {
            PotentialKind::QuadShift => None,
            _ => Some(self.class.radius()),
        }
    }

    /// Restrict queries of tabulated conjugates to the certified ball.
    #[doc(hidden)]
    pub fn conjugate_table_radius(&self) -> Result<f64> {
        Ok(self.table()?.radius())
    }

    pub fn to_spec(&self) -> PotentialSpec {
        let (theta, grid_box, shape, values) = match self.kind() {
            PotentialKind::Grid => {
                let g = self.class.grid_spec().expect("grid class");
                (Vec::new(), Some([g.lo, g.hi]), Some(g.shape.clone()), Some(self.theta.clone()))
            }
            _ => (self.theta.clone(), None, None, None),
        };
        PotentialSpec {
            kind: self.kind(),
            lambda: self.lambda(),
            theta,
            dim: Some(self.dim()),
            grid_box,
            shape,
            values,
        }
    }
}

fn multilinear_weights(g: &GridSpec, x: &[f64]) -> Option<Vec<(usize, f64)>> {
    let d = g.shape.len();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for k in 0..d {
        if !(x[k] >= g.lo && x[k] <= g.hi) {
            return None;
        }
        let t = (x[k] - g.lo) / g.step(k);
        let i = (t.floor() as usize).min(g.shape[k] - 2);
        base[k] = i;
        frac[k] = t - i as f64;
    }
    let mut out = Vec::with_capacity(1 << d);
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut flat = 0;
        for k in 0..d {
            let bit = (corner >> (d - 1 - k)) & 1;
            w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            flat = flat * g.shape[k] + base[k] + bit;
        }
        if w != 0.0 {
            out.push((flat, w));
        }
    }
    Some(out)
}

/// JSON form: `{"kind", "lambda", "theta"}`, grids add `box`, `shape`, `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub lambda: f64,
    #[serde(default)]
    pub theta: Vec<f64>,
    /// Needed for `max_quad` in dimension > 1; inferred otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub grid_box: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl PotentialSpec {
    /// Build a potential in the smallest class of its kind that contains it,
    /// certified on `B_radius`.
    pub fn build(&self, radius: f64) -> Result<Potential> {
        match self.kind {
            PotentialKind::QuadShift => {
                let d = self.theta.len().checked_sub(1).filter(|&d| d >= 1).ok_or_else(|| {
                    Error::InvalidArgument("quad_shift theta needs at least 2 entries".into())
                })?;
                if let Some(dim) = self.dim {
                    if dim != d {
                        return Err(Error::LengthMismatch { expected: dim + 1, got: self.theta.len() });
                    }
                }
                Potential::quad_shift(self.lambda, &self.theta[..d], self.theta[d], radius)
            }
            PotentialKind::MaxQuad => {
                let d = self.dim.unwrap_or(1);
                if d == 0 || self.theta.is_empty() || !self.theta.len().is_multiple_of(d + 1) {
                    return Err(Error::InvalidArgument(format!(
                        "max_quad theta length {} is not a multiple of dim + 1 = {}",
                        self.theta.len(),
                        d + 1
                    )));
                }
                let pieces: Vec<(Vec<f64>, f64)> = self
                    .theta
                    .chunks_exact(d + 1)
                    .map(|c| (c[..d].to_vec(), c[d]))
                    .collect();
                Potential::max_quad(self.lambda, &pieces, radius)
            }
            PotentialKind::Grid => {
                let (Some([lo, hi]), Some(shape), Some(values)) = (self.grid_box, &self.shape, &self.values)
                else {
                    return Err(Error::InvalidArgument(
                        "grid potentials need box, shape and values".into(),
                    ));
                };
                Potential::grid(
                    GridSpec {
                        lo,
                        hi,
                        shape: shape.clone(),
                    },
                    self.lambda,
                    values.clone(),
                    radius,
                )
            }
        }
    }

    /// Build inside an existing class (parameters must fit its layout).
    pub fn build_in(&self, class: Arc<PotentialClass>) -> Result<Potential> {
        if self.kind != class.kind() {
            return Err(Error::InvalidArgument(format!(
                "potential kind {:?} does not match class kind {:?}",
                self.kind,
                class.kind()
            )));
        }
        let theta = match self.kind {
            PotentialKind::Grid => self.values.clone().unwrap_or_default(),
            _ => self.theta.clone(),
        };
        Potential::new(class, theta)
    }
}

/// Outcome of the sup-norm Lipschitz check for conjugation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjLipschitzReport {
    /// `sup_{B_R} |z1* - z2*|` on a dense grid.
    pub lhs: f64,
    /// `sup_{B_G(R)} |z1 - z2|` on a dense grid.
    pub rhs: f64,
    /// Grid tolerance: largest jump of `z1 - z2` between neighbouring nodes.
    pub tol: f64,
    pub ok: bool,
}

fn dense_nodes(dim: usize) -> usize {
    match dim {
        1 => 801,
        2 => 81,
        _ => 25,
    }
}

/// Check `‖z1* - z2*‖_{L∞(B_R)} <= ‖z1 - z2‖_{L∞(B_G(R))}` on dense grids,
/// with `G` taken from the class of `z1`.
pub fn check_conj_lipschitz(z1: &Potential, z2: &Potential, radius: f64) -> Result<ConjLipschitzReport> {
    if z1.dim() != z2.dim() {
        return Err(Error::InvalidArgument("potentials must share a dimension".into()));
    }
    let d = z1.dim();
    let n = dense_nodes(d);
    let mut lhs: f64 = 0.0;
    for y in ball_grid(d, radius, n) {
        lhs = lhs.max((z1.conjugate_eval(&y)? - z2.conjugate_eval(&y)?).abs());
    }
    let g = z1.class().bound_g(radius)?;
    let axis = linspace(-g, g, n);
    let shape = vec![n; d];
    let strides: Vec<usize> = (0..d).map(|k| n.pow((d - 1 - k) as u32)).collect();
    let mut diff = vec![f64::NAN; n.pow(d as u32)];
    let mut rhs: f64 = 0.0;
    for (flat, idx) in tensor_indices(&shape).enumerate() {
        let x: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        // grid potentials are +∞ outside their box; skip those nodes
        let (Ok(a), Ok(b)) = (z1.eval(&x), z2.eval(&x)) else {
            continue;
        };
        diff[flat] = a - b;
        if norm(&x) <= g {
            rhs = rhs.max((a - b).abs());
        }
    }
    let mut tol: f64 = 0.0;
    for (flat, idx) in tensor_indices(&shape).enumerate() {
        for k in 0..d {
            if idx[k] + 1 < n {
                let jump = (diff[flat + strides[k]] - diff[flat]).abs();
                if jump.is_finite() {
                    tol = tol.max(jump);
                }
            }
        }
    }
    tol += 1e-12 * rhs.max(1.0);
    Ok(ConjLipschitzReport {
        lhs,
        rhs,
        tol,
        ok: lhs <= rhs + tol,
    })
}
