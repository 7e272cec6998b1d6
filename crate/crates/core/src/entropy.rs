//! Csiszár entropy functions and their Legendre conjugates.
//!
//! | kind       | `F(x)`                  | `φ*(s)`                                   |
//! |------------|-------------------------|-------------------------------------------|
//! | `balanced` | `ι_{1}(x)`              | `s`                                       |
//! | `kl`       | `x log x - x + 1`       | `e^s - 1`                                 |
//! | `chi2`     | `(x - 1)²`              | `(max(0, 1 + s/2))² - 1`, or `-1` below `-2` |
//!
//! A scale `τ > 0` turns `F` into `τF`, whose conjugate is `τφ*(s/τ)`.
//! Large `τ` pushes the KL penalty towards the balanced constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyKind {
    Balanced,
    Kl,
    Chi2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entropy {
    pub kind: EntropyKind,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_tau() -> f64 {
    1.0
}

// exp overflows past ln(f64::MAX) ≈ 709.78
const EXP_LIMIT: f64 = 709.0;

impl Entropy {
    pub fn new(kind: EntropyKind, tau: f64) -> Result<Self> {
        let e = Self { kind, tau };
        e.validate()?;
        Ok(e)
    }

    pub fn balanced() -> Self {
        Self {
            kind: EntropyKind::Balanced,
            tau: 1.0,
        }
    }

    pub fn kl(tau: f64) -> Self {
        Self {
            kind: EntropyKind::Kl,
            tau,
        }
    }

    pub fn chi2(tau: f64) -> Self {
        Self {
            kind: EntropyKind::Chi2,
            tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "entropy scale must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn is_balanced(&self) -> bool {
        self.kind == EntropyKind::Balanced
    }

    /// `τF(x)`, `+∞` outside the effective domain.
    pub fn eval_f(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "entropy argument must be >= 0, got {x}"
            )));
        }
        let t = self.tau;
        Ok(match self.kind {
            EntropyKind::Balanced => {
                if x == 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            EntropyKind::Kl => {
                if x == f64::INFINITY {
                    f64::INFINITY
                } else if x == 0.0 {
                    t
                } else {
                    t * (x * x.ln() - x + 1.0)
                }
            }
            EntropyKind::Chi2 => t * (x - 1.0) * (x - 1.0),
        })
    }

    /// `φ*(s) = sup_{x >= 0} s x - τF(x)`.
    pub fn eval_conj(&self, s: f64) -> Result<f64> {
        if s.is_nan() {
            return Err(Error::InvalidArgument("conjugate argument is NaN".into()));
        }
        let t = self.tau;
        match self.kind {
            EntropyKind::Balanced => Ok(s),
            EntropyKind::Kl => {
                let u = s / t;
                if u > EXP_LIMIT {
                    return Err(Error::ConjugateOverflow { s });
                }
                Ok(t * u.exp_m1())
            }
            EntropyKind::Chi2 => {
                let u = 1.0 + s / (2.0 * t);
                if u > 0.0 {
                    let v = t * (u * u - 1.0);
                    if !v.is_finite() {
                        return Err(Error::ConjugateOverflow { s });
                    }
                    Ok(v)
                } else {
                    Ok(-t)
                }
            }
        }
    }

    /// `(φ*)'(s)`, the optimal `x` in the conjugate's supremum.
    pub fn conj_grad(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::OutsideDomain { s });
        }
        let t = self.tau;
        match self.kind {
            EntropyKind::Balanced => Ok(1.0),
            EntropyKind::Kl => {
                let u = s / t;
                if u > EXP_LIMIT {
                    return Err(Error::ConjugateOverflow { s });
                }
                Ok(u.exp())
            }
            EntropyKind::Chi2 => Ok((1.0 + s / (2.0 * t)).max(0.0)),
        }
    }

    /// Infimum of `(φ*)''` over the interval spanned by `a` and `b`.
    pub fn convexity_modulus(&self, a: f64, b: f64) -> f64 {
        let t = self.tau;
        let lo = a.min(b);
        match self.kind {
            EntropyKind::Balanced => 0.0,
            EntropyKind::Kl => (lo / t).exp() / t,
            EntropyKind::Chi2 => {
                if 1.0 + lo / (2.0 * t) > 0.0 {
                    1.0 / (2.0 * t)
                } else {
                    0.0
                }
            }
        }
    }

    /// `sup |(φ*)'|` over `[-m, m]`, the local Lipschitz constant of the conjugate.
    pub fn conj_lipschitz(&self, m: f64) -> Result<f64> {
        let m = m.abs();
        Ok(self.conj_grad(m)?.max(self.conj_grad(-m)?.abs()))
    }

    /// Recession constant `F'_∞ = lim F(r)/r`.
    pub fn recession(&self) -> f64 {
        // every entropy in the catalog is superlinear
        f64::INFINITY
    }
}
