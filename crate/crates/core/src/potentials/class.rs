use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{linspace, norm, tensor_indices};

use super::llt::llt_1d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// `½λ‖x‖² + a·x + b`
    QuadShift,
    /// `½λ‖x‖² + max_k (a_k·x + b_k)`
    MaxQuad,
    /// Values on a tensor grid, multilinear in between.
    Grid,
}

/// Regular tensor grid over `[lo, hi]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub shape: Vec<usize>,
}

impl GridSpec {
    pub fn axis(&self, k: usize) -> Vec<f64> {
        linspace(self.lo, self.hi, self.shape[k])
    }

    pub fn step(&self, k: usize) -> f64 {
        (self.hi - self.lo) / (self.shape[k] - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.shape.len()).map(|k| self.axis(k)).collect();
        tensor_indices(&self.shape)
            .map(|idx| idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.shape.is_empty() || self.shape.len() > 2 {
            return Err(Error::Unsupported(format!(
                "grid potentials need dimension 1 or 2, got {}",
                self.shape.len()
            )));
        }
        if !(self.lo < self.hi) || self.shape.iter().any(|&s| s < 3) {
            return Err(Error::InvalidArgument(
                "grid needs lo < hi and at least 3 nodes per axis".into(),
            ));
        }
        Ok(())
    }
}

/// A family of λ-strongly convex potentials with uniform bounds
/// `z >= l` and `sup_{B_r} |z| <= M(r)`, where `M(r) = m0 + m1 r + m2 r²`.
///
/// `radius` is the range `B_R` on which conjugates are certified.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialClass {
    kind: PotentialKind,
    dim: usize,
    lambda: f64,
    lower: f64,
    m: [f64; 3],
    radius: f64,
    a_max: f64,
    b_max: f64,
    pieces: usize,
    grid: Option<GridSpec>,
    conj_nodes: usize,
}

pub const DEFAULT_PIECES: usize = 8;
pub const DEFAULT_CONJ_NODES: usize = 1 << 10;

impl PotentialClass {
    /// Quadratic-shift class with `‖a‖ <= a_max`, `|b| <= b_max`. Such members
    /// satisfy `l = -(b_max + a_max²/2λ)` and
    /// `M(r) = b_max + a_max²/2λ + a_max r + ½λ r²`.
    pub fn quad_shift(dim: usize, lambda: f64, a_max: f64, b_max: f64, radius: f64) -> Result<Self> {
        Self::affine_family(PotentialKind::QuadShift, dim, lambda, 1, a_max, b_max, radius)
    }

    /// Max-of-quadratics class with `pieces` affine parts, each clamped like
    /// [`quad_shift`](Self::quad_shift).
    pub fn max_quad(
        dim: usize,
        lambda: f64,
        pieces: usize,
        a_max: f64,
        b_max: f64,
        radius: f64,
    ) -> Result<Self> {
        if pieces == 0 {
            return Err(Error::InvalidArgument("max_quad needs >= 1 piece".into()));
        }
        Self::affine_family(PotentialKind::MaxQuad, dim, lambda, pieces, a_max, b_max, radius)
    }

    fn affine_family(
        kind: PotentialKind,
        dim: usize,
        lambda: f64,
        pieces: usize,
        a_max: f64,
        b_max: f64,
        radius: f64,
    ) -> Result<Self> {
        check_common(dim, lambda, radius)?;
        if !(a_max >= 0.0 && b_max >= 0.0 && a_max.is_finite() && b_max.is_finite()) {
            return Err(Error::InvalidArgument("a_max and b_max must be finite and >= 0".into()));
        }
        let s = b_max + a_max * a_max / (2.0 * lambda);
        Ok(Self {
            kind,
            dim,
            lambda,
            lower: -s,
            m: [s, a_max, 0.5 * lambda],
            radius,
            a_max,
            b_max,
            pieces,
            grid: None,
            conj_nodes: DEFAULT_CONJ_NODES,
        })
    }

    /// Derive the parameter box of an affine family from `(λ, l, M)`: with
    /// `s = min(m0, -l)`, take `a_max = min(m1, √(λ s))` and
    /// `b_max = s - a_max²/2λ`. Requires `m2 >= λ/2`.
    pub fn from_bounds(
        kind: PotentialKind,
        dim: usize,
        lambda: f64,
        lower: f64,
        m: [f64; 3],
        radius: f64,
    ) -> Result<Self> {
        check_common(dim, lambda, radius)?;
        if m[0] < lower {
            return Err(Error::InconsistentClassBounds { m0: m[0], lower });
        }
        if kind == PotentialKind::Grid {
            return Err(Error::InvalidArgument("use PotentialClass::grid for grid classes".into()));
        }
        if m[2] < 0.5 * lambda || m[1] < 0.0 {
            return Err(Error::InvalidArgument(
                "M(r) must dominate ½λr² (m2 >= λ/2, m1 >= 0)".into(),
            ));
        }
        let s = m[0].min(-lower);
        if s < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "no affine-family member satisfies l = {lower} and M(0) = {}",
                m[0]
            )));
        }
        let a_max = m[1].min((lambda * s).sqrt());
        let b_max = (s - a_max * a_max / (2.0 * lambda)).max(0.0);
        Ok(Self {
            kind,
            dim,
            lambda,
            lower,
            m,
            radius,
            a_max,
            b_max,
            pieces: if kind == PotentialKind::MaxQuad { DEFAULT_PIECES } else { 1 },
            grid: None,
            conj_nodes: DEFAULT_CONJ_NODES,
        })
    }

    /// Grid class: values on `grid`, discretely λ-convex along axes, bounded
    /// below by `lower` and by `M(‖x‖)` in absolute value.
    pub fn grid(grid: GridSpec, lambda: f64, lower: f64, m: [f64; 3], radius: f64) -> Result<Self> {
        grid.validate()?;
        check_common(grid.shape.len(), lambda, radius)?;
        if m[0] < lower {
            return Err(Error::InconsistentClassBounds { m0: m[0], lower });
        }
        Ok(Self {
            kind: PotentialKind::Grid,
            dim: grid.shape.len(),
            lambda,
            lower,
            m,
            radius,
            a_max: 0.0,
            b_max: 0.0,
            pieces: 1,
            grid: Some(grid),
            conj_nodes: DEFAULT_CONJ_NODES,
        })
    }

    /// Override the number of nodes per axis used to tabulate conjugates.
    pub fn with_conj_nodes(mut self, nodes: usize) -> Self {
        self.conj_nodes = nodes.max(3);
        self
    }

    /// Same class with a different certified conjugate range.
    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn lower(&self) -> f64 {
        self.lower
    }
    pub fn m_coeffs(&self) -> [f64; 3] {
        self.m
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn a_max(&self) -> f64 {
        self.a_max
    }
    pub fn b_max(&self) -> f64 {
        self.b_max
    }
    pub fn pieces(&self) -> usize {
        self.pieces
    }
    pub fn grid_spec(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }
    pub fn conj_nodes(&self) -> usize {
        self.conj_nodes
    }

    /// `M(r)`.
    pub fn m_at(&self, r: f64) -> f64 {
        self.m[0] + self.m[1] * r + self.m[2] * r * r
    }

    /// Length of the parameter vector.
    pub fn n_params(&self) -> usize {
        match self.kind {
            PotentialKind::QuadShift => self.dim + 1,
            PotentialKind::MaxQuad => self.pieces * (self.dim + 1),
            PotentialKind::Grid => self.grid.as_ref().map_or(0, GridSpec::len),
        }
    }

    /// Direction in parameter space that adds a constant to the potential.
    pub fn offset_direction(&self) -> Vec<f64> {
        let mut dir = vec![0.0; self.n_params()];
        match self.kind {
            PotentialKind::QuadShift | PotentialKind::MaxQuad => {
                for k in 0..self.pieces {
                    dir[k * (self.dim + 1) + self.dim] = 1.0;
                }
            }
            PotentialKind::Grid => dir.iter_mut().for_each(|v| *v = 1.0),
        }
        dir
    }

    /// `G(r) = r/λ + √(2(M(0) - l)/λ)`, a bound on `‖∇z*‖` over `B_r`.
    pub fn bound_g(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be >= 0, got {r}")));
        }
        bound_g(self.lambda, self.m_at(0.0), self.lower, r)
    }

    /// `M'(r) = r G(r) + M(G(r))`, a bound on `|z*|` over `B_r`.
    pub fn bound_mprime(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be >= 0, got {r}")));
        }
        bound_mprime(self.lambda, self.m, self.lower, r)
    }

    /// Whether `theta` satisfies the class constraints (up to `tol`).
    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        if theta.len() != self.n_params() {
            return false;
        }
        match self.kind {
            PotentialKind::QuadShift | PotentialKind::MaxQuad => {
                theta.chunks_exact(self.dim + 1).all(|piece| {
                    norm(&piece[..self.dim]) <= self.a_max + tol
                        && piece[self.dim].abs() <= self.b_max + tol
                })
            }
            PotentialKind::Grid => {
                let grid = self.grid.as_ref().expect("grid class");
                grid_is_convex(grid, self.lambda, theta, tol) && self.grid_bound_violation(theta) <= tol
            }
        }
    }

    /// Nearest point of the class for the affine families (radial clamp of
    /// each slope, interval clamp of each offset). Grid parameters are first
    /// replaced by their discrete convex minorant, then blended towards the
    /// member `½λ‖x‖² + c` just enough to meet the value bounds.
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = theta.to_vec();
        match self.kind {
            PotentialKind::QuadShift | PotentialKind::MaxQuad => {
                for piece in out.chunks_exact_mut(self.dim + 1) {
                    let (a, b) = piece.split_at_mut(self.dim);
                    let na = norm(a);
                    if na > self.a_max {
                        let s = if na > 0.0 { self.a_max / na } else { 0.0 };
                        a.iter_mut().for_each(|v| *v *= s);
                    }
                    b[0] = b[0].clamp(-self.b_max, self.b_max);
                }
            }
            PotentialKind::Grid => {
                let grid = self.grid.as_ref().expect("grid class");
                if !grid_is_convex(grid, self.lambda, &out, GRID_CONVEXITY_TOL) {
                    out = grid_convex_minorant(grid, self.lambda, &out);
                }
                if self.grid_bound_violation(&out) > 0.0 {
                    out = self.blend_into_bounds(grid, &out);
                }
            }
        }
        out
    }

    /// Largest violation of `l <= v <= M(‖x‖)`, `-v <= M(‖x‖)` at grid nodes.
    fn grid_bound_violation(&self, values: &[f64]) -> f64 {
        let grid = self.grid.as_ref().expect("grid class");
        grid.nodes()
            .iter()
            .zip(values)
            .map(|(x, &v)| {
                let m = self.m_at(norm(x));
                (self.lower - v).max(v - m).max(-v - m)
            })
            .fold(0.0, f64::max)
    }

    fn blend_into_bounds(&self, grid: &GridSpec, values: &[f64]) -> Vec<f64> {
        let nodes = grid.nodes();
        let c = self.lower.max(-self.m[0]);
        let reference: Vec<f64> = nodes
            .iter()
            .map(|x| 0.5 * self.lambda * crate::numeric::norm_sq(x) + c)
            .collect();
        // smallest t with (1-t) v + t ref inside every node constraint
        let mut t: f64 = 0.0;
        for ((x, &v), &r) in nodes.iter().zip(values).zip(&reference) {
            let m = self.m_at(norm(x));
            let lo = self.lower.max(-m);
            let hi = m;
            for (bound, below) in [(lo, true), (hi, false)] {
                let viol = if below { v < bound } else { v > bound };
                if viol {
                    let denom = r - v;
                    let need = if denom.abs() > 0.0 { (bound - v) / denom } else { 1.0 };
                    t = t.max(need.clamp(0.0, 1.0));
                }
            }
        }
        values
            .iter()
            .zip(&reference)
            .map(|(v, r)| (1.0 - t) * v + t * r)
            .collect()
    }

    /// Uniformly spread member, for initializations and randomized tests.
    pub fn random_member<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> Vec<f64> {
        match self.kind {
            PotentialKind::QuadShift | PotentialKind::MaxQuad => {
                let mut theta = Vec::with_capacity(self.n_params());
                for _ in 0..self.pieces {
                    let a: Vec<f64> = loop {
                        let c: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
                        if norm(&c) <= 1.0 {
                            break c;
                        }
                    };
                    theta.extend(a.iter().map(|v| v * self.a_max * scale));
                    theta.push(rng.random_range(-1.0..=1.0) * self.b_max * scale);
                }
                theta
            }
            PotentialKind::Grid => {
                let grid = self.grid.as_ref().expect("grid class");
                let slope: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..=1.0) * scale).collect();
                let curv = rng.random_range(0.0..=scale);
                let raw: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .map(|x| {
                        0.5 * (self.lambda + curv) * crate::numeric::norm_sq(x)
                            + crate::numeric::dot(&slope, x)
                    })
                    .collect();
                self.project(&raw)
            }
        }
    }
}

fn check_common(dim: usize, lambda: f64, radius: f64) -> Result<()> {
    if dim == 0 || dim > crate::measures::MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension must be in 1..=3, got {dim}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    Ok(())
}

/// `G(r) = r/λ + √(2(M(0) - l)/λ)`.
pub fn bound_g(lambda: f64, m0: f64, lower: f64, r: f64) -> Result<f64> {
    if m0 < lower {
        return Err(Error::InconsistentClassBounds { m0, lower });
    }
    Ok(r / lambda + (2.0 * (m0 - lower) / lambda).sqrt())
}

/// `M'(r) = r G(r) + M(G(r))` with `M(r) = m0 + m1 r + m2 r²`.
pub fn bound_mprime(lambda: f64, m: [f64; 3], lower: f64, r: f64) -> Result<f64> {
    let g = bound_g(lambda, m[0], lower, r)?;
    Ok(r * g + m[0] + m[1] * g + m[2] * g * g)
}

pub(crate) const GRID_CONVEXITY_TOL: f64 = 1e-9;

/// Discrete λ-convexity along every axis: second differences `>= λ h²`.
pub fn grid_is_convex(grid: &GridSpec, lambda: f64, values: &[f64], tol: f64) -> bool {
    min_axis_excess(grid, lambda, values) >= -tol
}

/// Minimum over axes and interior nodes of `Δ²v - λh²`, scaled by the value range.
fn min_axis_excess(grid: &GridSpec, lambda: f64, values: &[f64]) -> f64 {
    let shape = &grid.shape;
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst = f64::INFINITY;
    let strides: Vec<usize> = (0..shape.len())
        .map(|k| shape[k + 1..].iter().product())
        .collect();
    for idx in tensor_indices(shape) {
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        for k in 0..shape.len() {
            if idx[k] == 0 || idx[k] + 1 == shape[k] {
                continue;
            }
            let h = grid.step(k);
            let d2 = values[flat - strides[k]] + values[flat + strides[k]] - 2.0 * values[flat];
            worst = worst.min((d2 - lambda * h * h) / scale);
        }
    }
    worst
}

/// Convex minorant of `values - ½λ‖x‖²` by a discrete double Legendre
/// transform, with `½λ‖x‖²` added back.
fn grid_convex_minorant(grid: &GridSpec, lambda: f64, values: &[f64]) -> Vec<f64> {
    let nodes = grid.nodes();
    let g: Vec<f64> = values
        .iter()
        .zip(&nodes)
        .map(|(v, x)| v - 0.5 * lambda * crate::numeric::norm_sq(x))
        .collect();
    let axes: Vec<Vec<f64>> = (0..grid.shape.len()).map(|k| grid.axis(k)).collect();
    let hull = match axes.len() {
        1 => {
            // exact: the lower hull interpolated back onto the nodes
            let h = super::llt::LowerHull::new(&axes[0], &g);
            let mut out = vec![0.0; g.len()];
            for w in h.vertices.windows(2) {
                let (i, j) = (w[0], w[1]);
                for k in i..=j {
                    let t = (axes[0][k] - axes[0][i]) / (axes[0][j] - axes[0][i]);
                    out[k] = (1.0 - t) * g[i] + t * g[j];
                }
            }
            if h.vertices.len() == 1 {
                out[h.vertices[0]] = g[h.vertices[0]];
            }
            out
        }
        _ => double_transform_2d(&axes, &g),
    };
    hull.iter()
        .zip(&nodes)
        .map(|(v, x)| v + 0.5 * lambda * crate::numeric::norm_sq(x))
        .collect()
}

/// `g**` on the nodes, using slope grids spanning the finite-difference slopes.
fn double_transform_2d(axes: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let (n1, n2) = (axes[0].len(), axes[1].len());
    let slope_range = |k: usize| -> (f64, f64) {
        let h = axes[k][1] - axes[k][0];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let (j1, j2) = if k == 0 { (i1 + 1, i2) } else { (i1, i2 + 1) };
                if j1 < n1 && j2 < n2 {
                    let s = (g[j1 * n2 + j2] - g[i1 * n2 + i2]) / h;
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
            }
        }
        (lo, hi)
    };
    let (s1lo, s1hi) = slope_range(0);
    let (s2lo, s2hi) = slope_range(1);
    let ys1 = linspace(s1lo, s1hi, 4 * n1);
    let ys2 = linspace(s2lo, s2hi, 4 * n2);
    let conj = separable_transform(&axes[0], &axes[1], g, &ys1, &ys2);
    separable_transform(&ys1, &ys2, &conj, &axes[0], &axes[1])
}

/// `out(p, q) = max_{a, b} p a + q b - v(a, b)` on tensor grids.
fn separable_transform(a: &[f64], b: &[f64], v: &[f64], p: &[f64], q: &[f64]) -> Vec<f64> {
    let (na, nb) = (a.len(), b.len());
    let (np, nq) = (p.len(), q.len());
    // inner over b for each a-row
    let mut inner = vec![0.0; na * nq];
    for ia in 0..na {
        let row = &v[ia * nb..(ia + 1) * nb];
        let t = llt_1d(q, b, row).expect("sorted grids");
        inner[ia * nq..(ia + 1) * nq].copy_from_slice(&t);
    }
    // outer over a for each q
    let mut out = vec![0.0; np * nq];
    let mut col = vec![0.0; na];
    for iq in 0..nq {
        for ia in 0..na {
            col[ia] = -inner[ia * nq + iq];
        }
        let t = llt_1d(p, a, &col).expect("sorted grids");
        for ip in 0..np {
            out[ip * nq + iq] = t[ip];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn bound_g_examples() {
        let g = bound_g(1.0, 1.0, 0.0, 2.0).unwrap();
        assert!((g - (2.0 + 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(bound_g(1.0, 0.3, 0.3, 0.0).unwrap(), 0.0);
        assert_eq!(bound_g(2.0, 1.0, 0.0, 4.0).unwrap(), 3.0);
        assert!(matches!(
            bound_g(1.0, 0.0, 1.0, 1.0),
            Err(Error::InconsistentClassBounds { .. })
        ));
    }

    #[test]
    fn bound_mprime_examples() {
        // M ≡ 1, l = 0, r = 0 ⇒ 0·G + M(G) = 1
        assert!((bound_mprime(1.0, [1.0, 0.0, 0.0], 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        // M(r) = r², l = 0 ⇒ G(r) = r, M'(r) = 2r²
        assert!((bound_mprime(1.0, [0.0, 0.0, 1.0], 0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        // λ = 1, M ≡ 1, l = 0, r = 2 ⇒ 2(2 + √2) + 1
        let v = bound_mprime(1.0, [1.0, 0.0, 0.0], 0.0, 2.0).unwrap();
        assert!((v - (2.0 * (2.0 + 2f64.sqrt()) + 1.0)).abs() < 1e-12);
        assert!((v - 7.8284).abs() < 1e-4);
    }

    #[test]
    fn projection_examples() {
        let c = PotentialClass::quad_shift(2, 1.0, 1.0, 0.5, 1.0).unwrap();
        let inside = vec![0.3, -0.2, 0.1];
        assert_eq!(c.project(&inside), inside);
        let out = c.project(&[2.0, 0.0, 0.1]);
        assert!((norm(&out[..2]) - 1.0).abs() < 1e-15);
        assert_eq!(out[0], 1.0);
        assert_eq!(c.project(&[0.0, 0.0, -3.0])[2], -0.5);
    }

    #[test]
    fn grid_repair_restores_convexity() {
        let grid = GridSpec { lo: -1.0, hi: 1.0, shape: vec![21] };
        let c = PotentialClass::grid(grid.clone(), 1.0, -5.0, [5.0, 0.0, 1.0], 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let noisy: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| 0.5 * x[0] * x[0] + 0.05 * rng.random_range(-1.0..1.0))
            .collect();
        assert!(!grid_is_convex(&grid, 1.0, &noisy, GRID_CONVEXITY_TOL));
        let fixed = c.project(&noisy);
        assert!(c.contains(&fixed, 1e-9));
        // convex inputs are left alone
        assert_eq!(c.project(&fixed), fixed);
    }

    #[test]
    fn grid_repair_two_dimensional() {
        let grid = GridSpec { lo: -1.0, hi: 1.0, shape: vec![9, 11] };
        let c = PotentialClass::grid(grid.clone(), 0.5, -5.0, [5.0, 0.0, 2.0], 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let noisy: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| 0.5 * crate::numeric::norm_sq(x) + 0.1 * rng.random_range(-1.0..1.0))
            .collect();
        let fixed = c.project(&noisy);
        assert!(grid_is_convex(&grid, 0.5, &fixed, 1e-9));
        assert!(c.contains(&fixed, 1e-9));
    }

    #[test]
    fn grid_blend_enforces_bounds() {
        let grid = GridSpec { lo: -1.0, hi: 1.0, shape: vec![11] };
        let c = PotentialClass::grid(grid.clone(), 1.0, 0.0, [1.0, 0.0, 1.0], 1.0).unwrap();
        // convex but violates the lower bound l = 0
        let v: Vec<f64> = grid.nodes().iter().map(|x| 0.5 * x[0] * x[0] - 2.0).collect();
        let fixed = c.project(&v);
        assert!(c.contains(&fixed, 1e-12), "{fixed:?}");
    }

    #[test]
    fn from_bounds_members_satisfy_bounds() {
        let c = PotentialClass::from_bounds(PotentialKind::QuadShift, 1, 2.0, -3.0, [4.0, 1.0, 1.0], 1.0).unwrap();
        // extreme member: ‖a‖ = a_max, b = -b_max
        let l = -c.b_max() - c.a_max().powi(2) / (2.0 * c.lambda());
        assert!(l >= c.lower() - 1e-12);
        for r in [0.0, 0.5, 1.0, 3.0] {
            let sup = 0.5 * c.lambda() * r * r + c.a_max() * r + c.b_max();
            assert!(sup <= c.m_at(r) + 1e-12);
        }
        assert!(matches!(
            PotentialClass::from_bounds(PotentialKind::QuadShift, 1, 1.0, 2.0, [1.0, 0.0, 1.0], 1.0),
            Err(Error::InconsistentClassBounds { .. })
        ));
    }
}
