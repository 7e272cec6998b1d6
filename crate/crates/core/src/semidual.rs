//! The semi-dual objective `J(z) = ⟨φ*(z - q), μ⟩ + ⟨φ*(z* - q), ν⟩`.
//!
//! Sums over sample points run in parallel, but every reduction is a
//! pairwise sum over terms collected in index order, so values do not
//! depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::Entropy;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::numeric::{norm_sq, pairwise_sum, quad};
use crate::potentials::Potential;

#[derive(Clone, Debug)]
pub struct SemiDualProblem {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub entropy: Entropy,
    pub radius: f64,
}

impl SemiDualProblem {
    pub fn new(mu: DiscreteMeasure, nu: DiscreteMeasure, entropy: Entropy, radius: f64) -> Result<Self> {
        entropy.validate()?;
        if mu.dim() != nu.dim() {
            return Err(Error::InvalidArgument(format!(
                "mu has dimension {} but nu has {}",
                mu.dim(),
                nu.dim()
            )));
        }
        mu.check_in_ball(radius)?;
        nu.check_in_ball(radius)?;
        Ok(Self {
            mu,
            nu,
            entropy,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    fn check_potential(&self, z: &Potential) -> Result<()> {
        if z.dim() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "potential has dimension {} but the problem has {}",
                z.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// `z(x) - q(x)` at every support point of `m`.
fn primal_args(m: &DiscreteMeasure, z: &Potential) -> Result<Vec<f64>> {
    (0..m.len())
        .into_par_iter()
        .map(|i| {
            let x = m.point(i);
            Ok(z.eval(x)? - quad(x))
        })
        .collect()
}

/// `z*(y) - q(y)` and `∇z*(y)` at every support point of `m`.
fn conj_args(m: &DiscreteMeasure, z: &Potential) -> Result<Vec<(f64, Vec<f64>)>> {
    // build any lazy conjugate table once, before fanning out
    if !m.is_empty() {
        z.conjugate_eval(m.point(0))?;
    }
    (0..m.len())
        .into_par_iter()
        .map(|i| {
            let y = m.point(i);
            let (v, g) = z.conjugate_eval_grad(y)?;
            Ok((v - quad(y), g))
        })
        .collect()
}

fn conj_terms(e: &Entropy, weights: &[f64], args: &[f64], offset: usize) -> Result<Vec<f64>> {
    weights
        .iter()
        .zip(args)
        .enumerate()
        .map(|(i, (&w, &s))| {
            let v = e.eval_conj(s).map_err(|err| match err {
                Error::ConjugateOverflow { s } => Error::ConjugateOverflowAt { index: offset + i, s },
                other => other,
            })?;
            Ok(if w == 0.0 { 0.0 } else { w * v })
        })
        .collect()
}

/// `J(z)`. Overflow errors carry the sample index, counting μ's atoms first
/// and then ν's.
pub fn semidual_value(p: &SemiDualProblem, z: &Potential) -> Result<f64> {
    p.check_potential(z)?;
    let s_mu = primal_args(&p.mu, z)?;
    let s_nu: Vec<f64> = conj_args(&p.nu, z)?.into_iter().map(|(v, _)| v).collect();
    let t_mu = conj_terms(&p.entropy, p.mu.weights(), &s_mu, 0)?;
    let t_nu = conj_terms(&p.entropy, p.nu.weights(), &s_nu, p.mu.len())?;
    Ok(pairwise_sum(&t_mu) + pairwise_sum(&t_nu))
}

/// Gradient of `θ ↦ J(z_θ)` with a count of exact kinks met.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiDualGrad {
    pub grad: Vec<f64>,
    /// Points where a `max_quad` potential had tied pieces; the lowest-index
    /// piece supplied the subgradient.
    pub kinks: usize,
}

const CHUNK: usize = 256;

/// Dense sum of sparse contributions, chunked and then reduced pairwise.
fn accumulate(n_params: usize, items: &[(f64, Vec<(usize, f64)>)]) -> Vec<f64> {
    let partial: Vec<Vec<f64>> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n_params];
            for (w, entries) in chunk {
                for &(k, v) in entries {
                    acc[k] += w * v;
                }
            }
            acc
        })
        .collect();
    reduce_pairwise(&partial, n_params)
}

fn reduce_pairwise(parts: &[Vec<f64>], n: usize) -> Vec<f64> {
    match parts.len() {
        0 => vec![0.0; n],
        1 => parts[0].clone(),
        len => {
            let (a, b) = parts.split_at(len / 2);
            let (a, b) = (reduce_pairwise(a, n), reduce_pairwise(b, n));
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        }
    }
}

/// `∇_θ J(z_θ)` using `∂_θ z*(y) = -∂_θ z(∇z*(y))`.
pub fn semidual_grad(p: &SemiDualProblem, z: &Potential) -> Result<SemiDualGrad> {
    p.check_potential(z)?;
    let e = &p.entropy;
    let s_mu = primal_args(&p.mu, z)?;
    let c_nu = conj_args(&p.nu, z)?;
    let mut items = Vec::with_capacity(p.mu.len() + p.nu.len());
    let mut kinks = 0;
    for (i, (&w, &s)) in p.mu.weights().iter().zip(&s_mu).enumerate() {
        if w == 0.0 {
            continue;
        }
        let g = z.param_grad(p.mu.point(i))?;
        kinks += g.tie as usize;
        items.push((w * e.conj_grad(s)?, g.entries));
    }
    for (&w, (s, x)) in p.nu.weights().iter().zip(&c_nu) {
        if w == 0.0 {
            continue;
        }
        let g = z.param_grad(x)?;
        kinks += g.tie as usize;
        items.push((-w * e.conj_grad(*s)?, g.entries));
    }
    Ok(SemiDualGrad {
        grad: accumulate(z.theta().len(), &items),
        kinks,
    })
}

/// Tilted measures `μ̃ = (φ*)'(z0 - q) μ` and `ν̃ = (φ*)'(z0* - q) ν`.
pub fn tilt(p: &SemiDualProblem, z0: &Potential) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    p.check_potential(z0)?;
    let e = &p.entropy;
    let f_mu = primal_args(&p.mu, z0)?
        .into_iter()
        .map(|s| e.conj_grad(s))
        .collect::<Result<Vec<_>>>()?;
    let f_nu = conj_args(&p.nu, z0)?
        .into_iter()
        .map(|(s, _)| e.conj_grad(s))
        .collect::<Result<Vec<_>>>()?;
    Ok((p.mu.reweight(&f_mu)?, p.nu.reweight(&f_nu)?))
}

/// Squared pseudo-distance
/// `(1/2λ) ∫‖∇(z* - z0*)‖² dν̃ + C' (∫(z* - z0*)² dν + ∫(z - z0)² dμ)`,
/// with unnormalized integrals.
pub fn h_circ_sq(p: &SemiDualProblem, z: &Potential, z0: &Potential, lambda: f64, cp: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(cp >= 0.0 && cp.is_finite()) {
        return Err(Error::InvalidArgument(format!("C' must be >= 0, got {cp}")));
    }
    p.check_potential(z)?;
    let (_, nu_t) = tilt(p, z0)?;
    let c = conj_args(&p.nu, z)?;
    let c0 = conj_args(&p.nu, z0)?;
    let grad_terms: Vec<f64> = nu_t
        .weights()
        .iter()
        .zip(c.iter().zip(&c0))
        .map(|(&w, ((_, g), (_, g0)))| {
            let diff: Vec<f64> = g.iter().zip(g0).map(|(a, b)| a - b).collect();
            w * norm_sq(&diff)
        })
        .collect();
    let mut total = pairwise_sum(&grad_terms) / (2.0 * lambda);
    if cp > 0.0 {
        // z* - z0* = (z* - q) - (z0* - q), same for z - z0
        let conj_terms: Vec<f64> = p
            .nu
            .weights()
            .iter()
            .zip(c.iter().zip(&c0))
            .map(|(&w, ((a, _), (b, _)))| w * (a - b) * (a - b))
            .collect();
        let s = primal_args(&p.mu, z)?;
        let s0 = primal_args(&p.mu, z0)?;
        let prim_terms: Vec<f64> = p
            .mu
            .weights()
            .iter()
            .zip(s.iter().zip(&s0))
            .map(|(&w, (a, b))| w * (a - b) * (a - b))
            .collect();
        total += cp * (pairwise_sum(&conj_terms) + pairwise_sum(&prim_terms));
    }
    Ok(total)
}

/// `d_H°(z, z0)`.
pub fn h_circ_distance(p: &SemiDualProblem, z: &Potential, z0: &Potential, lambda: f64, cp: f64) -> Result<f64> {
    h_circ_sq(p, z, z0, lambda, cp).map(f64::sqrt)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `J(z) - J(z0)`.
    pub lhs: f64,
    /// `(1/2λ) ∫‖∇(z0* - z*)‖² dν̃`.
    pub grad_term: f64,
    /// `C_{z*} ∫(z0* - z*)² dν`.
    pub l2_conj_term: f64,
    /// `C_z ∫(z0 - z)² dμ`.
    pub l2_term: f64,
    pub c_z: f64,
    pub c_zstar: f64,
    pub satisfied: bool,
}

/// Half the smallest curvature of `φ*` between the two arguments, over all
/// atoms with positive weight. The half is the Taylor remainder factor.
fn half_min_modulus(e: &Entropy, weights: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let m = weights
        .iter()
        .zip(a.iter().zip(b))
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, (x, y))| e.convexity_modulus(*x, *y))
        .fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        0.5 * m
    } else {
        0.0
    }
}

/// Evaluate both sides of the stability inequality for `z` against the
/// optimal potential `z0`.
pub fn stability_report(p: &SemiDualProblem, z: &Potential, z0: &Potential) -> Result<StabilityReport> {
    p.check_potential(z)?;
    p.check_potential(z0)?;
    let e = &p.entropy;
    let lambda = z.lambda();
    let lhs = semidual_value(p, z)? - semidual_value(p, z0)?;

    let s = primal_args(&p.mu, z)?;
    let s0 = primal_args(&p.mu, z0)?;
    let c = conj_args(&p.nu, z)?;
    let c0 = conj_args(&p.nu, z0)?;
    let t: Vec<f64> = c.iter().map(|(v, _)| *v).collect();
    let t0: Vec<f64> = c0.iter().map(|(v, _)| *v).collect();

    let c_z = half_min_modulus(e, p.mu.weights(), &s, &s0);
    let c_zstar = half_min_modulus(e, p.nu.weights(), &t, &t0);

    let f_nu = t0.iter().map(|&v| e.conj_grad(v)).collect::<Result<Vec<_>>>()?;
    let grad_terms: Vec<f64> = (0..p.nu.len())
        .map(|j| {
            let diff: Vec<f64> = c[j].1.iter().zip(&c0[j].1).map(|(a, b)| a - b).collect();
            p.nu.weights()[j] * f_nu[j] * norm_sq(&diff)
        })
        .collect();
    let grad_term = pairwise_sum(&grad_terms) / (2.0 * lambda);
    let sq = |w: &[f64], a: &[f64], b: &[f64]| -> f64 {
        let terms: Vec<f64> = w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y) * (x - y)).collect();
        pairwise_sum(&terms)
    };
    let l2_conj_term = c_zstar * sq(p.nu.weights(), &t, &t0);
    let l2_term = c_z * sq(p.mu.weights(), &s, &s0);
    let rhs = grad_term + l2_conj_term + l2_term;
    let satisfied = lhs + 1e-8 * lhs.abs().max(1.0) >= rhs;
    Ok(StabilityReport {
        lhs,
        grad_term,
        l2_conj_term,
        l2_term,
        c_z,
        c_zstar,
        satisfied,
    })
}

/// Target measure making `z0` optimal for `(μ, ν)`:
/// `ν = (∇z0)_# μ̃ / (φ*)'(z0* - q)`.
pub fn make_consistent_instance(mu: &DiscreteMeasure, z0: &Potential, e: &Entropy) -> Result<DiscreteMeasure> {
    e.validate()?;
    if z0.dim() != mu.dim() {
        return Err(Error::InvalidArgument("potential and measure dimensions differ".into()));
    }
    let mut weights = Vec::with_capacity(mu.len());
    let mut images = Vec::with_capacity(mu.len() * mu.dim());
    for (i, x) in mu.points().enumerate() {
        let (y, w) = consistent_weight(z0, e, x).map_err(|err| match err {
            Error::NotConstructible { .. } => Error::NotConstructible { index: i },
            other => other,
        })?;
        weights.push(mu.weights()[i] * w);
        images.extend(y);
    }
    DiscreteMeasure::from_flat(mu.dim(), images, weights)
}

/// Image `y = ∇z0(x)` and the density ratio
/// `(φ*)'(z0(x) - q(x)) / (φ*)'(z0*(y) - q(y))` carried to it.
pub fn consistent_weight(z0: &Potential, e: &Entropy, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let f = e.conj_grad(z0.eval(x)? - quad(x))?;
    let y = image_point(z0, x)?;
    let back = e.conj_grad(z0.conjugate_eval(&y)? - quad(&y))?;
    if back == 0.0 {
        return Err(Error::NotConstructible { index: 0 });
    }
    Ok((y, f / back))
}

/// `∇z0(x)` for the affine families (lowest-index active piece).
pub fn image_point(z0: &Potential, x: &[f64]) -> Result<Vec<f64>> {
    use crate::potentials::PotentialKind;
    let d = z0.dim();
    match z0.kind() {
        PotentialKind::QuadShift | PotentialKind::MaxQuad => {
            let g = z0.param_grad(x)?;
            // the active piece's first entry locates its slope block
            let off = g.entries[0].0;
            let a = &z0.theta()[off..off + d];
            Ok(x.iter().zip(a).map(|(xi, ai)| z0.lambda() * xi + ai).collect())
        }
        PotentialKind::Grid => Err(Error::Unsupported(
            "consistent instances need a differentiable potential (quad_shift or max_quad)".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qs(a: &[f64], b: f64) -> Potential {
        Potential::quad_shift(1.0, a, b, 4.0).unwrap()
    }

    fn delta(x: f64) -> DiscreteMeasure {
        DiscreteMeasure::dirac(&[x], 1.0).unwrap()
    }

    #[test]
    fn value_examples() {
        let p = SemiDualProblem::new(delta(0.0), delta(0.0), Entropy::balanced(), 2.0).unwrap();
        assert_eq!(semidual_value(&p, &qs(&[0.0], 0.0)).unwrap(), 0.0);
        let p = SemiDualProblem::new(delta(0.0), delta(0.0), Entropy::kl(1.0), 2.0).unwrap();
        assert_eq!(semidual_value(&p, &qs(&[0.0], 0.0)).unwrap(), 0.0);
        let p = SemiDualProblem::new(delta(0.0), delta(1.0), Entropy::balanced(), 2.0).unwrap();
        assert_eq!(semidual_value(&p, &qs(&[1.0], 0.0)).unwrap(), -0.5);
    }

    #[test]
    fn overflow_reports_sample_index() {
        let mu = DiscreteMeasure::new(&[vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let p = SemiDualProblem::new(mu, delta(0.0), Entropy::kl(1.0), 2.0).unwrap();
        let z = qs(&[0.0], 800.0);
        assert!(matches!(
            semidual_value(&p, &z),
            Err(Error::ConjugateOverflowAt { index: 0, .. })
        ));
    }

    #[test]
    fn tilt_examples() {
        let mu = DiscreteMeasure::new(&[vec![0.3], vec![-0.5]], vec![0.4, 0.6]).unwrap();
        let p = SemiDualProblem::new(mu.clone(), mu.clone(), Entropy::balanced(), 2.0).unwrap();
        let (a, b) = tilt(&p, &qs(&[0.2], 0.1)).unwrap();
        assert_eq!((a, b), (mu.clone(), mu.clone()));

        let p = SemiDualProblem::new(delta(0.0), delta(0.0), Entropy::kl(1.0), 2.0).unwrap();
        let (a, b) = tilt(&p, &qs(&[0.0], 0.0)).unwrap();
        assert_eq!((a.weights()[0], b.weights()[0]), (1.0, 1.0));

        let p = SemiDualProblem::new(mu, delta(0.0), Entropy::kl(1.0), 2.0).unwrap();
        let (a, _) = tilt(&p, &qs(&[0.0], 2f64.ln())).unwrap();
        assert!((a.total_mass() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn h_circ_examples() {
        let mu = DiscreteMeasure::new(&[vec![0.3], vec![-0.5]], vec![0.4, 0.6]).unwrap();
        let p = SemiDualProblem::new(mu.clone(), mu, Entropy::balanced(), 2.0).unwrap();
        let z0 = qs(&[0.2], 0.1);
        assert_eq!(h_circ_distance(&p, &z0, &z0, 1.0, 0.0).unwrap(), 0.0);
        let z = qs(&[0.2], -0.3);
        assert_eq!(h_circ_distance(&p, &z, &z0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn consistent_instance_examples() {
        let mu = DiscreteMeasure::uniform(&[vec![-1.0], vec![-0.2], vec![0.5], vec![1.0]]).unwrap();
        let nu = make_consistent_instance(&mu, &qs(&[0.0], 0.0), &Entropy::kl(1.0)).unwrap();
        assert_eq!(nu, mu);
        let nu = make_consistent_instance(&mu, &qs(&[0.4], 0.0), &Entropy::balanced()).unwrap();
        for (x, y) in mu.points().zip(nu.points()) {
            assert_eq!(y[0], x[0] + 0.4);
        }
        assert_eq!(nu.weights(), mu.weights());
    }

    #[test]
    fn stability_at_optimum_is_zero() {
        let mu = DiscreteMeasure::uniform(&[vec![-0.7], vec![0.1], vec![0.6]]).unwrap();
        let z0 = qs(&[0.3], 0.05);
        let e = Entropy::kl(1.0);
        let nu = make_consistent_instance(&mu, &z0, &e).unwrap();
        let p = SemiDualProblem::new(mu, nu, e, 2.0).unwrap();
        let r = stability_report(&p, &z0, &z0).unwrap();
        assert_eq!((r.lhs, r.grad_term, r.l2_conj_term, r.l2_term), (0.0, 0.0, 0.0, 0.0));
        assert!(r.satisfied);
        let pb = SemiDualProblem::new(p.mu.clone(), p.nu.clone(), Entropy::balanced(), 2.0).unwrap();
        let r = stability_report(&pb, &qs(&[0.1], 0.0), &z0).unwrap();
        assert_eq!((r.c_z, r.c_zstar), (0.0, 0.0));
    }
}
