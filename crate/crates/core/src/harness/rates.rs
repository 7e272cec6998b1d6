//! Monte Carlo rate experiments and the theoretical rate exponents.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::Entropy;
use crate::error::{Error, Result};
use crate::estimator::{fit, FitConfig};
use crate::measures::{fmt17, DensitySpec, DiscreteMeasure, Seed, MAX_PROPOSALS};
use crate::numeric::{norm, pairwise_sum};
use crate::potentials::{Potential, PotentialClass, PotentialSpec};
use crate::semidual::{consistent_weight, h_circ_sq, make_consistent_instance, SemiDualProblem};

use super::config::ClassSpec;

/// Exponent `e` of the rate `n^{-e}` for the plug-in estimator over a
/// smoothness-`α` class in dimension `d`.
pub fn rate_exponent_ours(alpha: f64, d: f64) -> f64 {
    let s = alpha + 2.0;
    if s < d / 2.0 {
        s / d
    } else {
        1.0 / (1.0 + d / (2.0 * s))
    }
}

/// Exponent `(α + 1)/(α + d/2)` of the wavelet estimator of Hutter and Rigollet.
pub fn rate_exponent_hr(alpha: f64, d: f64) -> f64 {
    (alpha + 1.0) / (alpha + d / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// `1.96` standard errors of the slope.
    pub half_width: f64,
}

/// Least squares of `log mean` on `log n`.
pub fn slope_fit(pairs: &[(f64, f64)]) -> Result<SlopeFit> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs >= 2 points".into()));
    }
    if let Some(p) = pairs.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs positive n and means, got ({}, {})",
            p.0, p.1
        )));
    }
    let k = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = pairwise_sum(&xs) / k;
    let my = pairwise_sum(&ys) / k;
    let sxx = pairwise_sum(&xs.iter().map(|x| (x - mx) * (x - mx)).collect::<Vec<_>>());
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct n".into()));
    }
    let sxy = pairwise_sum(&xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect::<Vec<_>>());
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half_width = if pairs.len() > 2 {
        let ssr = pairwise_sum(
            &xs.iter()
                .zip(&ys)
                .map(|(x, y)| (y - intercept - slope * x).powi(2))
                .collect::<Vec<_>>(),
        );
        1.96 * (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        half_width,
    })
}

/// `C'` given as a number or derived from the class (`"auto"`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CPrime {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

impl Default for CPrime {
    fn default() -> Self {
        CPrime::Keyword(AutoKeyword::Auto)
    }
}

fn default_n_grid() -> Vec<usize> {
    (6..=13).map(|k| 1usize << k).collect()
}

fn default_replicas() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub mu: DensitySpec,
    pub z0: PotentialSpec,
    pub entropy: Entropy,
    pub class: ClassSpec,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// `λ` of the pseudo-distance; defaults to the class's `λ`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub c_prime: CPrime,
    #[serde(default)]
    pub seed: Seed,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Quadrature nodes per axis for the population measures.
    #[serde(default)]
    pub population_nodes: Option<usize>,
    /// Smoothness index used for the reported theoretical exponent.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub fit: FitConfig,
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.len() < 2 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(Error::InvalidArgument(
                "n_grid must hold >= 2 strictly increasing positive sizes".into(),
            ));
        }
        if self.replicas < 8 {
            return Err(Error::InvalidArgument("slope fits need >= 8 replicas".into()));
        }
        if let CPrime::Value(c) = self.c_prime {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("c_prime must be >= 0, got {c}")));
            }
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidArgument("alpha must be >= 0".into()));
        }
        self.entropy.validate()?;
        self.mu.validate()?;
        self.fit.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub mean_d2: f64,
    pub stderr_d2: f64,
    pub replicas_ok: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub slope: f64,
    pub intercept: f64,
    pub half_width: f64,
    /// Predicted slope `-1/(1 + α/2)`.
    pub theoretical_slope: f64,
    pub c_prime: f64,
    pub radius: f64,
    pub nu_mass: f64,
    /// `d_H°²` per `(n, replica)`, `NaN` for failed replicas.
    #[serde(skip)]
    pub replicas: Vec<Vec<f64>>,
}

/// Everything a replica needs, built once per experiment.
pub struct Instance {
    pub mu: DensitySpec,
    pub entropy: Entropy,
    pub class: Arc<PotentialClass>,
    pub z0: Potential,
    pub population: SemiDualProblem,
    pub radius: f64,
    pub lambda: f64,
    pub c_prime: f64,
    nu_mass: f64,
    w_max: f64,
}

impl Instance {
    pub fn new(cfg: &RateConfig) -> Result<Self> {
        cfg.validate()?;
        let dim = cfg.mu.dim();
        let r_mu = cfg.mu.radius();
        // ‖∇z0(x)‖ <= λ‖x‖ + max‖a_k‖ bounds the support of ν
        let probe = cfg.z0.build(r_mu)?;
        let a_max = probe
            .theta()
            .chunks_exact(dim + 1)
            .map(|c| norm(&c[..dim]))
            .fold(0.0, f64::max);
        let radius = r_mu.max(probe.lambda() * r_mu + a_max);
        let class = Arc::new(cfg.class.build(dim, probe.lambda(), radius)?);
        let z0 = cfg.z0.build_in(class.clone())?;
        if !class.contains(z0.theta(), 1e-12) {
            return Err(Error::InvalidArgument("z0 must belong to the configured class".into()));
        }
        let nodes = cfg.population_nodes.unwrap_or(match dim {
            1 => 4096,
            2 => 128,
            _ => 32,
        });
        let mu_pop = cfg.mu.quadrature(nodes)?;
        let nu_pop = make_consistent_instance(&mu_pop, &z0, &cfg.entropy)?;
        let nu_mass = nu_pop.total_mass();
        let w_max = mu_pop
            .points()
            .map(|x| consistent_weight(&z0, &cfg.entropy, x).map(|(_, w)| w))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max)
            * 1.05;
        let population = SemiDualProblem::new(mu_pop, nu_pop, cfg.entropy, radius)?;
        let lambda = cfg.lambda.unwrap_or(class.lambda());
        let c_prime = match cfg.c_prime {
            CPrime::Value(c) => c,
            CPrime::Keyword(AutoKeyword::Auto) => auto_c_prime(&class, &cfg.entropy, radius)?,
        };
        Ok(Self {
            mu: cfg.mu.clone(),
            entropy: cfg.entropy,
            class,
            z0,
            population,
            radius,
            lambda,
            c_prime,
            nu_mass,
            w_max,
        })
    }

    /// `n` i.i.d. draws from `ν / mass(ν)` by rejection from `μ`, each
    /// weighted `mass(ν)/n` so the ν-term of `Ĵ` stays unbiased.
    pub fn sample_nu(&self, n: usize, seed: Seed) -> Result<DiscreteMeasure> {
        let dim = self.mu.dim();
        let mut rng = seed.derive(u64::MAX).rng();
        let mut points = Vec::with_capacity(n * dim);
        let mut accepted = 0;
        let mut proposals: u64 = 0;
        let mut batch = 0u64;
        while accepted < n {
            let xs = self.mu.sample(n, seed.derive(batch))?;
            batch += 1;
            for x in xs.points() {
                proposals += 1;
                let (y, w) = consistent_weight(&self.z0, &self.entropy, x)?;
                if rng.random::<f64>() * self.w_max <= w {
                    points.extend(y);
                    accepted += 1;
                    if accepted == n {
                        break;
                    }
                }
            }
            if accepted < n && proposals >= MAX_PROPOSALS {
                return Err(Error::DegenerateDensity { proposals });
            }
        }
        DiscreteMeasure::from_flat(dim, points, vec![self.nu_mass / n as f64; n])
    }

    /// One replica: sample, fit, and measure `d_H°²` on the population.
    pub fn replica(&self, n: usize, replica: usize, root: Seed, fit_cfg: &FitConfig) -> Result<f64> {
        let base = root.derive(n as u64).derive(replica as u64);
        let mu_hat = self.mu.sample(n, base.derive(0))?;
        let nu_hat = self.sample_nu(n, base.derive(1))?;
        let cfg = FitConfig {
            seed: base.derive(2),
            ..fit_cfg.clone()
        };
        let f = fit(&mu_hat, &nu_hat, self.class.clone(), &self.entropy, &cfg)?;
        h_circ_sq(&self.population, &f.potential, &self.z0, self.lambda, self.c_prime)
    }
}

/// Half the smallest curvature of `φ*` over the value ranges any class member
/// can produce on `B_R`: `z - q ∈ [-M(R) - R²/2, M(R)]` and likewise with
/// `M'(R)` for conjugates.
pub fn auto_c_prime(class: &PotentialClass, e: &Entropy, radius: f64) -> Result<f64> {
    let q = 0.5 * radius * radius;
    let m = class.m_at(radius);
    let mp = class.bound_mprime(radius)?;
    Ok(0.5 * e.convexity_modulus(-m - q, m).min(e.convexity_modulus(-mp - q, mp)))
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = pairwise_sum(xs) / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = pairwise_sum(&xs.iter().map(|x| (x - mean) * (x - mean)).collect::<Vec<_>>()) / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Run the experiment; results do not depend on the worker count.
pub fn rate_experiment(cfg: &RateConfig) -> Result<RateReport> {
    let inst = Instance::new(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|i| (0..cfg.replicas).map(move |r| (i, r)))
        .collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(i, r)| inst.replica(cfg.n_grid[i], r, cfg.seed, &cfg.fit))
        .collect();

    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    let mut replicas = Vec::with_capacity(cfg.n_grid.len());
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let chunk = &results[i * cfg.replicas..(i + 1) * cfg.replicas];
        let mut ok = Vec::new();
        let mut row = Vec::new();
        let mut first_err = None;
        for r in chunk {
            match r {
                Ok(v) if v.is_finite() => {
                    ok.push(*v);
                    row.push(*v);
                }
                Ok(_) => row.push(f64::NAN),
                Err(e) => {
                    first_err.get_or_insert_with(|| e.to_string());
                    row.push(f64::NAN);
                }
            }
        }
        let failures = cfg.replicas - ok.len();
        if failures * 5 > cfg.replicas {
            return Err(Error::Experiment(format!(
                "{failures} of {} replicas failed at n = {n}: {}",
                cfg.replicas,
                first_err.unwrap_or_else(|| "non-finite distance".into())
            )));
        }
        let (mean, se) = mean_and_stderr(&ok);
        rows.push(RateRow {
            n,
            mean_d2: mean,
            stderr_d2: se,
            replicas_ok: ok.len(),
            failures,
        });
        replicas.push(row);
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.mean_d2)).collect();
    let s = slope_fit(&pairs)?;
    Ok(RateReport {
        rows,
        slope: s.slope,
        intercept: s.intercept,
        half_width: s.half_width,
        theoretical_slope: -1.0 / (1.0 + cfg.alpha / 2.0),
        c_prime: inst.c_prime,
        radius: inst.radius,
        nu_mass: inst.nu_mass,
        replicas,
    })
}

/// Write `rates.csv`, `replicas.csv` and `rates.json` into `dir`.
pub fn write_rate_outputs(report: &RateReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let io = |e: csv::Error| Error::Io(e.into());
    let mut w = csv::Writer::from_path(dir.join("rates.csv")).map_err(io)?;
    w.write_record(["n", "mean_d2", "stderr_d2", "replicas_ok"]).map_err(io)?;
    for r in &report.rows {
        w.write_record([r.n.to_string(), fmt17(r.mean_d2), fmt17(r.stderr_d2), r.replicas_ok.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("replicas.csv")).map_err(io)?;
    w.write_record(["n", "replica", "d2"]).map_err(io)?;
    for (row, values) in report.rows.iter().zip(&report.replicas) {
        for (k, v) in values.iter().enumerate() {
            w.write_record([row.n.to_string(), k.to_string(), fmt17(*v)]).map_err(io)?;
        }
    }
    w.flush()?;
    std::fs::write(dir.join("rates.json"), serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_examples() {
        assert_eq!(rate_exponent_ours(4.0, 12.0), 0.5);
        assert!((rate_exponent_ours(60.0, 100.0) - 124.0 / 224.0).abs() < 1e-15);
        assert!((rate_exponent_ours(1.0, 100.0) - 0.03).abs() < 1e-15);
        assert_eq!(rate_exponent_hr(0.0, 2.0), 1.0);
        assert!((rate_exponent_hr(60.0, 100.0) - 61.0 / 110.0).abs() < 1e-15);
        assert!((rate_exponent_hr(1.0, 100.0) - 2.0 / 51.0).abs() < 1e-15);
    }

    #[test]
    fn slope_examples() {
        let exact: Vec<(f64, f64)> = [64.0, 128.0, 256.0, 512.0].iter().map(|&n| (n, 3.0 / n)).collect();
        let s = slope_fit(&exact).unwrap();
        assert!((s.slope + 1.0).abs() < 1e-12 && s.half_width < 1e-12);
        let flat: Vec<(f64, f64)> = [64.0, 128.0, 256.0].iter().map(|&n| (n, 0.7)).collect();
        assert!(slope_fit(&flat).unwrap().slope.abs() < 1e-15);
        assert!(slope_fit(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn c_prime_deserializes() {
        let v: CPrime = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(v, CPrime::Keyword(AutoKeyword::Auto));
        let v: CPrime = serde_json::from_str("0.25").unwrap();
        assert_eq!(v, CPrime::Value(0.25));
    }
}
