//! Discrete primal UOT over couplings, used as an independent oracle.
//!
//! Minimizes `D_F(γ₀ | μ) + D_F(γ₁ | ν) + Σ c_ij γ_ij` over `γ >= 0` on the
//! product of the supports, `c(x, y) = ½‖x - y‖²`. Smooth entropies go
//! through monotone accelerated projected gradient with backtracking. The
//! balanced problem is approached by KL with `τ ∈ {10², 10³, 10⁴}` and the
//! three values are extrapolated to `τ = ∞` as a quadratic in `1/τ`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy::{Entropy, EntropyKind};
use crate::error::{Error, Result};
use crate::measures::{fmt17, DiscreteMeasure};
use crate::numeric::{dot, pairwise_sum};
use crate::potentials::Potential;
use crate::semidual::{semidual_value, SemiDualProblem};

#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    /// Row-major `rows × cols`.
    values: Vec<f64>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
}

impl Coupling {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("coupling entries must be finite and >= 0".into()));
        }
        let (row_marginal, col_marginal) = marginals(rows, cols, &values);
        Ok(Self {
            rows,
            cols,
            values,
            row_marginal,
            col_marginal,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_marginal(&self) -> &[f64] {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &[f64] {
        &self.col_marginal
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.row_marginal)
    }

    /// CSV with header `i,j,value`, one line per nonzero entry.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(["i", "j", "value"]).map_err(io)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if v > 0.0 {
                    w.write_record([i.to_string(), j.to_string(), fmt17(v)]).map_err(io)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn marginals(rows: usize, cols: usize, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let row = (0..rows)
        .map(|i| pairwise_sum(&values[i * cols..(i + 1) * cols]))
        .collect();
    let mut column = vec![0.0; rows];
    let col = (0..cols)
        .map(|j| {
            for i in 0..rows {
                column[i] = values[i * cols + j];
            }
            pairwise_sum(&column)
        })
        .collect();
    (row, col)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimalOptions {
    pub max_iters: usize,
    /// Lower clamp for entries that stay in the iterate's support.
    pub floor: f64,
    pub armijo: f64,
    pub kkt_tol: f64,
    /// Stop when the objective's relative decrease over `stall_window`
    /// iterations falls below this.
    pub stall_tol: f64,
    pub stall_window: usize,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            floor: 1e-300,
            armijo: 1e-4,
            kkt_tol: 1e-8,
            stall_tol: 1e-10,
            stall_window: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimalSolution {
    #[serde(skip)]
    pub coupling: Option<Coupling>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Set for balanced problems, whose objective is the `τ → ∞` extrapolation
    /// rather than the value of the returned coupling.
    #[serde(default)]
    pub extrapolated: bool,
}

impl PrimalSolution {
    pub fn coupling(&self) -> &Coupling {
        self.coupling.as_ref().expect("solution carries its coupling")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The smooth objective restricted to positive-weight atoms.
struct Objective<'a> {
    mu: Vec<f64>,
    nu: Vec<f64>,
    cost: Vec<f64>,
    e: &'a Entropy,
}

impl Objective<'_> {
    fn n(&self) -> usize {
        self.mu.len()
    }

    fn m(&self) -> usize {
        self.nu.len()
    }

    fn divergence(&self, marg: &[f64], base: &[f64]) -> f64 {
        let terms: Vec<f64> = marg
            .iter()
            .zip(base)
            .map(|(&g, &w)| match self.e.kind {
                EntropyKind::Kl => {
                    let t = self.e.tau;
                    if g > 0.0 {
                        t * (g * (g / w).ln() - g + w)
                    } else {
                        t * w
                    }
                }
                EntropyKind::Chi2 => self.e.tau * (g - w) * (g - w) / w,
                EntropyKind::Balanced => {
                    if g == w {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
            })
            .collect();
        pairwise_sum(&terms)
    }

    fn value(&self, g: &[f64]) -> f64 {
        let (r, c) = marginals(self.n(), self.m(), g);
        let transport: Vec<f64> = g.iter().zip(&self.cost).map(|(a, b)| a * b).collect();
        self.divergence(&r, &self.mu) + self.divergence(&c, &self.nu) + pairwise_sum(&transport)
    }

    fn marginal_slope(&self, g: f64, w: f64) -> f64 {
        let t = self.e.tau;
        match self.e.kind {
            // entries are floored, so marginals of an iterate stay positive
            EntropyKind::Kl => t * (g.max(f64::MIN_POSITIVE) / w).ln(),
            EntropyKind::Chi2 => 2.0 * t * (g / w - 1.0),
            EntropyKind::Balanced => unreachable!("balanced problems go through continuation"),
        }
    }

    fn gradient(&self, g: &[f64]) -> Vec<f64> {
        let (r, c) = marginals(self.n(), self.m(), g);
        let dr: Vec<f64> = r.iter().zip(&self.mu).map(|(&a, &w)| self.marginal_slope(a, w)).collect();
        let dc: Vec<f64> = c.iter().zip(&self.nu).map(|(&a, &w)| self.marginal_slope(a, w)).collect();
        let m = self.m();
        (0..g.len())
            .map(|k| dr[k / m] + dc[k % m] + self.cost[k])
            .collect()
    }
}

fn kkt_residual(g: &[f64], grad: &[f64]) -> f64 {
    g.iter()
        .zip(grad)
        .map(|(&x, &d)| x.min(d).abs())
        .fold(0.0, f64::max)
}

fn project(x: &mut [f64], floor: f64) {
    for v in x.iter_mut() {
        // exact zeros stay zero; tiny positive entries are kept representable
        *v = if *v > 0.0 { v.max(floor) } else { 0.0 };
    }
}

struct RunResult {
    gamma: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    kkt: f64,
}

/// Monotone FISTA with backtracking on the descent-lemma condition.
fn run(obj: &Objective, start: Vec<f64>, opts: &PrimalOptions) -> RunResult {
    let mut x = start;
    let mut fx = obj.value(&x);
    let mut y = x.clone();
    let mut t_mom: f64 = 1.0;
    let mut step = 1.0;
    let mut history = vec![fx];
    let mut kkt = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iters {
        iterations = it;
        let fy = obj.value(&y);
        let gy = obj.gradient(&y);
        let mut cand;
        let mut fc;
        loop {
            cand = y.iter().zip(&gy).map(|(a, b)| a - step * b).collect::<Vec<f64>>();
            project(&mut cand, opts.floor);
            fc = obj.value(&cand);
            let d: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let model = fy + dot(&gy, &d) + dot(&d, &d) / (2.0 * step);
            let decrease = dot(&gy, &d);
            if fc.is_finite() && fc <= model && fc <= fy + opts.armijo * decrease.min(0.0) {
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                break;
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_mom * t_mom).sqrt());
        let x_prev = x.clone();
        if fc <= fx {
            x = cand.clone();
            fx = fc;
            let beta = (t_mom - 1.0) / t_next;
            y = x.iter().zip(&x_prev).map(|(a, b)| a + beta * (a - b)).collect();
            t_mom = t_next;
        } else {
            // keep the better point and restart the momentum from it
            y = x.clone();
            t_mom = 1.0;
        }
        project(&mut y, opts.floor);
        step *= 2.0;

        history.push(fx);
        if it % 10 == 0 || it == opts.max_iters {
            kkt = kkt_residual(&x, &obj.gradient(&x));
            if kkt < opts.kkt_tol {
                converged = true;
                break;
            }
        }
        if history.len() > opts.stall_window {
            let old = history[history.len() - 1 - opts.stall_window];
            if (old - fx) <= opts.stall_tol * fx.abs().max(1e-300) && it > opts.stall_window {
                kkt = kkt_residual(&x, &obj.gradient(&x));
                converged = true;
                break;
            }
        }
    }
    if !kkt.is_finite() {
        kkt = kkt_residual(&x, &obj.gradient(&x));
    }
    RunResult {
        gamma: x,
        objective: fx,
        iterations,
        converged,
        kkt,
    }
}

fn cost_matrix(mu: &DiscreteMeasure, rows: &[usize], nu: &DiscreteMeasure, cols: &[usize]) -> Vec<f64> {
    let mut c = Vec::with_capacity(rows.len() * cols.len());
    for &i in rows {
        for &j in cols {
            let x = mu.point(i);
            let y = nu.point(j);
            c.push(0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        }
    }
    c
}

fn expand(rows: &[usize], cols: &[usize], n: usize, m: usize, g: &[f64]) -> Result<Coupling> {
    let mut full = vec![0.0; n * m];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            full[i * m + j] = g[a * cols.len() + b];
        }
    }
    Coupling::new(n, m, full)
}

/// Solve the discrete primal problem.
pub fn solve_primal(mu: &DiscreteMeasure, nu: &DiscreteMeasure, e: &Entropy, opts: &PrimalOptions) -> Result<PrimalSolution> {
    e.validate()?;
    if mu.dim() != nu.dim() {
        return Err(Error::InvalidArgument("mu and nu dimensions differ".into()));
    }
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu.weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&j| nu.weights()[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidArgument("both measures need positive mass".into()));
    }
    let cost = cost_matrix(mu, &rows, nu, &cols);
    let wmu: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
    let wnu: Vec<f64> = cols.iter().map(|&j| nu.weights()[j]).collect();
    let scale = (pairwise_sum(&wmu) * pairwise_sum(&wnu)).max(1.0);
    let start: Vec<f64> = wmu
        .iter()
        .flat_map(|a| wnu.iter().map(move |b| a * b / scale))
        .collect();

    if !e.is_balanced() {
        let obj = Objective {
            mu: wmu,
            nu: wnu,
            cost,
            e,
        };
        let r = run(&obj, start, opts);
        return Ok(PrimalSolution {
            coupling: Some(expand(&rows, &cols, mu.len(), nu.len(), &r.gamma)?),
            objective: r.objective,
            iterations: r.iterations,
            converged: r.converged,
            kkt_residual: r.kkt,
            extrapolated: false,
        });
    }

    let taus = [1e2, 1e3, 1e4];
    let mut values = Vec::with_capacity(3);
    let mut gamma = start;
    let mut iterations = 0;
    let mut converged = true;
    let mut kkt = 0.0;
    for &tau in &taus {
        let kl = Entropy::kl(tau);
        let obj = Objective {
            mu: wmu.clone(),
            nu: wnu.clone(),
            cost: cost.clone(),
            e: &kl,
        };
        let r = run(&obj, gamma, opts);
        values.push(r.objective);
        iterations += r.iterations;
        converged &= r.converged;
        kkt = r.kkt;
        gamma = r.gamma;
    }
    Ok(PrimalSolution {
        coupling: Some(expand(&rows, &cols, mu.len(), nu.len(), &gamma)?),
        objective: extrapolate_to_zero(&taus.map(|t| 1.0 / t), &values),
        iterations,
        converged,
        kkt_residual: kkt,
        extrapolated: true,
    })
}

/// Value at `h = 0` of the interpolating polynomial through `(h_i, v_i)`.
fn extrapolate_to_zero(h: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let n = p.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (h[i + k] * p[i] - h[i] * p[i + 1]) / (h[i + k] - h[i]);
        }
    }
    p[0]
}

/// Balanced 1-D optimal transport cost by monotone matching of sorted atoms.
pub fn monotone_matching_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(Error::Unsupported("monotone matching is one-dimensional".into()));
    }
    let (ma, mb) = (mu.total_mass(), nu.total_mass());
    if (ma - mb).abs() > 1e-12 * ma.max(mb) {
        return Err(Error::InvalidArgument(format!(
            "balanced transport needs equal masses, got {ma} and {mb}"
        )));
    }
    let sorted = |m: &DiscreteMeasure| {
        let mut v: Vec<(f64, f64)> = m.points().map(|p| p[0]).zip(m.weights().iter().copied()).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (a, b) = (sorted(mu), sorted(nu));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut terms = Vec::new();
    while i < a.len() && j < b.len() {
        let t = ra.min(rb);
        terms.push(0.5 * (a[i].0 - b[j].0).powi(2) * t);
        ra -= t;
        rb -= t;
        if ra <= 0.0 {
            i += 1;
            ra = a.get(i).map_or(0.0, |p| p.1);
        }
        if rb <= 0.0 {
            j += 1;
            rb = b.get(j).map_or(0.0, |p| p.1);
        }
    }
    Ok(pairwise_sum(&terms))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub max_violation: f64,
}

/// `max z₀(x) + z₁(y) - c(x, y)` over grid pairs, where `z₀ = q - z` and
/// `z₁ = q - z*`; this simplifies to `x·y - z(x) - z*(y)`.
pub fn dual_feasibility(z: &Potential, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<FeasibilityReport> {
    dual_feasibility_with(z, |y| z.conjugate_eval(y), xs, ys)
}

/// As [`dual_feasibility`] with a caller-supplied conjugate.
pub fn dual_feasibility_with<F>(z: &Potential, conj: F, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<FeasibilityReport>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let zx = xs.iter().map(|x| z.eval(x)).collect::<Result<Vec<_>>>()?;
    let zy = ys.iter().map(|y| conj(y)).collect::<Result<Vec<_>>>()?;
    let mut worst = f64::NEG_INFINITY;
    for (x, a) in xs.iter().zip(&zx) {
        for (y, b) in ys.iter().zip(&zy) {
            worst = worst.max(dot(x, y) - a - b);
        }
    }
    Ok(FeasibilityReport { max_violation: worst })
}

/// `primal - (-J(z))`; nonnegative by weak duality.
pub fn duality_gap(p: &SemiDualProblem, z: &Potential, ps: &PrimalSolution) -> Result<f64> {
    Ok(ps.objective + semidual_value(p, z)?)
}
