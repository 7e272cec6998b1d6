//! The empirical potential `ẑ = argmin_{z ∈ C} Ĵ(z)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::entropy::Entropy;
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, Seed};
use crate::numeric::{dot, norm, norm_sq};
use crate::potentials::{Potential, PotentialClass, PotentialKind};
use crate::semidual::{semidual_grad, semidual_value, SemiDualProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Tolerance on the norm of the unit-step gradient mapping.
    pub grad_tol: f64,
    pub initial_step: f64,
    /// Step multiplier on a failed line-search trial.
    pub shrink: f64,
    /// Step multiplier after an accepted iteration.
    pub grow: f64,
    pub restarts: usize,
    /// Scale of random starting points relative to the class box.
    pub init_scale: f64,
    pub seed: Seed,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-8,
            initial_step: 1.0,
            shrink: 0.5,
            grow: 2.0,
            restarts: 3,
            init_scale: 0.5,
            seed: Seed(0),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.grad_tol > 0.0
            && self.initial_step > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.grow >= 1.0
            && self.restarts >= 1
            && self.init_scale >= 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid fit configuration: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub potential: Potential,
    /// `Ĵ(ẑ)`.
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Restart index of the returned potential.
    pub winner: usize,
    /// The winner hit `max_iters` before meeting `grad_tol`.
    pub capped: bool,
    /// Kinks met by the gradient oracle over the winner's run.
    pub kinks: usize,
}

struct Run {
    theta: Vec<f64>,
    objective: f64,
    grad_norm: f64,
    iterations: usize,
    capped: bool,
    kinks: usize,
}

/// Pinned coordinates and the direction removed from gradients.
struct Gauge {
    offset: Option<Vec<f64>>,
    pin_b: Option<usize>,
}

impl Gauge {
    fn new(cls: &PotentialClass, e: &Entropy) -> Self {
        if !e.is_balanced() {
            return Self {
                offset: None,
                pin_b: None,
            };
        }
        Self {
            offset: Some(cls.offset_direction()),
            pin_b: (cls.kind() == PotentialKind::QuadShift).then_some(cls.dim()),
        }
    }

    fn apply(&self, g: &mut [f64]) {
        if let Some(u) = &self.offset {
            let c = dot(g, u) / norm_sq(u);
            g.iter_mut().zip(u).for_each(|(gi, ui)| *gi -= c * ui);
        }
        if let Some(k) = self.pin_b {
            g[k] = 0.0;
        }
    }

    fn pin(&self, theta: &mut [f64]) {
        if let Some(k) = self.pin_b {
            theta[k] = 0.0;
        }
    }
}

fn objective_and_grad(p: &SemiDualProblem, z: &Potential, gauge: &Gauge) -> Result<(f64, Vec<f64>, usize)> {
    let v = semidual_value(p, z)?;
    let mut g = semidual_grad(p, z)?;
    gauge.apply(&mut g.grad);
    Ok((v, g.grad, g.kinks))
}

fn mapping_norm(cls: &PotentialClass, theta: &[f64], g: &[f64], gauge: &Gauge) -> f64 {
    let mut trial: Vec<f64> = theta.iter().zip(g).map(|(t, d)| t - d).collect();
    gauge.pin(&mut trial);
    let trial = cls.project(&trial);
    let d: Vec<f64> = trial.iter().zip(theta).map(|(a, b)| a - b).collect();
    norm(&d)
}

fn descend(
    p: &SemiDualProblem,
    cls: &Arc<PotentialClass>,
    start: Vec<f64>,
    gauge: &Gauge,
    cfg: &FitConfig,
) -> Result<Run> {
    let mut z = Potential::new(cls.clone(), start)?;
    let (mut fx, mut g, mut kinks) = objective_and_grad(p, &z, gauge)?;
    let mut step = cfg.initial_step;
    let mut gnorm = mapping_norm(cls, z.theta(), &g, gauge);
    let mut iterations = 0;
    while gnorm > cfg.grad_tol && iterations < cfg.max_iters {
        iterations += 1;
        let mut accepted = None;
        while step > 1e-20 {
            let mut trial: Vec<f64> = z.theta().iter().zip(&g).map(|(t, d)| t - step * d).collect();
            gauge.pin(&mut trial);
            let trial = cls.project(&trial);
            let d: Vec<f64> = trial.iter().zip(z.theta()).map(|(a, b)| a - b).collect();
            let cand = z.with_theta(trial)?;
            // a conjugate overflow on the trial point just means the step is too long
            let (fc, gc, kc) = match objective_and_grad(p, &cand, gauge) {
                Ok(v) => v,
                Err(Error::ConjugateOverflowAt { .. }) => {
                    step *= cfg.shrink;
                    continue;
                }
                Err(e) => return Err(e),
            };
            // J is resolved only to a few ulps; at that level the trapezoid
            // rule on the gradients measures the change without cancellation
            let mut change = fc - fx;
            if change.abs() <= 64.0 * f64::EPSILON * fx.abs().max(1.0) {
                change = 0.5 * (dot(&g, &d) + dot(&gc, &d));
            }
            if change <= dot(&g, &d) + norm_sq(&d) / (2.0 * step) && change <= 0.0 {
                accepted = Some((cand, fc, gc, kc));
                break;
            }
            step *= cfg.shrink;
        }
        let Some((cand, fc, gc, kc)) = accepted else {
            // no decrease at any step length: numerically stationary
            break;
        };
        z = cand;
        fx = fc;
        g = gc;
        kinks += kc;
        gnorm = mapping_norm(cls, z.theta(), &g, gauge);
        step = (step * cfg.grow).min(1e6);
    }
    Ok(Run {
        theta: z.theta().to_vec(),
        objective: fx,
        grad_norm: gnorm,
        iterations,
        capped: gnorm > cfg.grad_tol && iterations >= cfg.max_iters,
        kinks,
    })
}

fn starting_point(cls: &PotentialClass, e: &Entropy, restart: usize, cfg: &FitConfig) -> Vec<f64> {
    let theta = if restart == 0 && cls.kind() == PotentialKind::QuadShift {
        vec![0.0; cls.n_params()]
    } else {
        let mut rng = cfg.seed.derive(restart as u64).rng();
        cls.random_member(&mut rng, cfg.init_scale)
    };
    let mut theta = cls.project(&theta);
    if e.is_balanced() && cls.kind() == PotentialKind::QuadShift {
        theta[cls.dim()] = 0.0;
    }
    theta
}

/// Minimize the empirical semi-dual over `cls` by projected gradient.
pub fn fit(
    mu_hat: &DiscreteMeasure,
    nu_hat: &DiscreteMeasure,
    cls: Arc<PotentialClass>,
    e: &Entropy,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    if mu_hat.is_empty() || nu_hat.is_empty() {
        return Err(Error::InvalidArgument("samples must be nonempty".into()));
    }
    let p = SemiDualProblem::new(mu_hat.clone(), nu_hat.clone(), *e, cls.radius())?;
    let gauge = Gauge::new(&cls, e);
    let restarts = if cls.kind() == PotentialKind::QuadShift { 1 } else { cfg.restarts };
    let mut best: Option<(usize, Run)> = None;
    let mut all_capped = true;
    let mut diagnostics = Vec::new();
    for r in 0..restarts {
        let run = descend(&p, &cls, starting_point(&cls, e, r, cfg), &gauge, cfg)?;
        diagnostics.push(format!(
            "restart {r}: J = {:.6e}, |G| = {:.3e}, iterations = {}",
            run.objective, run.grad_norm, run.iterations
        ));
        all_capped &= run.capped && run.grad_norm > 1e3 * cfg.grad_tol;
        if best.as_ref().is_none_or(|(_, b)| run.objective < b.objective) {
            best = Some((r, run));
        }
    }
    if all_capped {
        return Err(Error::OptimizationFailed(diagnostics.join("; ")));
    }
    let (winner, run) = best.expect("at least one restart");
    Ok(FitResult {
        potential: Potential::new(cls, run.theta)?,
        objective: run.objective,
        grad_norm: run.grad_norm,
        iterations: run.iterations,
        winner,
        capped: run.capped,
        kinks: run.kinks,
    })
}

/// `ÛOT = -Ĵ(ẑ)`.
pub fn uot_estimate(fit: &FitResult) -> f64 {
    -fit.objective
}
