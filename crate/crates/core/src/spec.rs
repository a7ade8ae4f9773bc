//! Structural parameters and prior hyperparameters of a model.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::design::{min_length, LaggedDesign};
use crate::error::{LrmarError, Result};

/// Weakly informative default for every prior shape and rate.
pub const DEFAULT_HYPER: f64 = 1e-3;

/// Rate hyperparameters of a Gamma prior family: one value shared by every
/// member, or one value per member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Uniform(f64),
    PerMember(Vec<f64>),
}

impl Rates {
    /// Expands to a vector of `len` members.
    pub fn resolve(&self, len: usize, what: &str) -> Result<DVector<f64>> {
        let v = match self {
            Rates::Uniform(r) => DVector::from_element(len, *r),
            Rates::PerMember(v) => {
                if v.len() != len {
                    return Err(LrmarError::Dimension(format!(
                        "{what}: expected {len} prior rates, got {}",
                        v.len()
                    )));
                }
                DVector::from_column_slice(v)
            }
        };
        if v.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(LrmarError::Validation(format!(
                "{what}: prior rates must be finite and strictly positive"
            )));
        }
        Ok(v)
    }
}

/// How the variational posterior is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InitMethod {
    /// Truncated SVD of the targets; the seed is only used by the random fallback.
    #[default]
    Svd,
    /// Seeded Gaussian draws.
    Random,
}

/// Structural parameters `(p, q, l)`, prior hyperparameters and loop controls.
///
/// * noise precisions: `Gamma(iota, a_n)`, one per target column (`n * l`)
/// * regressor-row precisions of `W`: `Gamma(kappa, b_{in})`, laid out `p x n` row-major (lag-major)
/// * latent-row precisions of `V`: `Gamma(nu, c_j)`, one per latent component (`q`)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: usize,
    pub q: usize,
    pub l: usize,
    pub iota: f64,
    pub a: Rates,
    pub kappa: f64,
    pub b: Rates,
    pub nu: f64,
    pub c: Rates,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    #[serde(default)]
    pub init: InitMethod,
    /// Try an over-relaxed step after every cycle and keep it only when it
    /// lowers the free energy.
    #[serde(default)]
    pub accelerate: bool,
}

impl ModelSpec {
    pub fn new(p: usize, q: usize) -> Self {
        ModelSpec {
            p,
            q,
            l: 1,
            iota: DEFAULT_HYPER,
            a: Rates::Uniform(DEFAULT_HYPER),
            kappa: DEFAULT_HYPER,
            b: Rates::Uniform(DEFAULT_HYPER),
            nu: DEFAULT_HYPER,
            c: Rates::Uniform(DEFAULT_HYPER),
            max_iter: 500,
            tol: 1e-8,
            seed: 0,
            init: InitMethod::Svd,
            accelerate: false,
        }
    }

    pub fn with_lags(mut self, l: usize) -> Self {
        self.l = l;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_init(mut self, init: InitMethod) -> Self {
        self.init = init;
        self
    }

    pub fn with_acceleration(mut self, accelerate: bool) -> Self {
        self.accelerate = accelerate;
        self
    }

    /// Sets every shape and every rate to the same value.
    pub fn with_all_hyper(mut self, value: f64) -> Self {
        self.iota = value;
        self.kappa = value;
        self.nu = value;
        self.a = Rates::Uniform(value);
        self.b = Rates::Uniform(value);
        self.c = Rates::Uniform(value);
        self
    }

    /// Checks the structural parameters against a series of `t` points and `n` channels.
    pub fn validate_for(&self, t: usize, n: usize) -> Result<()> {
        if self.p == 0 || self.q == 0 || self.l == 0 {
            return Err(LrmarError::Validation(format!(
                "P, Q and L must be positive (P={}, Q={}, L={})",
                self.p, self.q, self.l
            )));
        }
        if self.q > n * self.l {
            return Err(LrmarError::Validation(format!(
                "Q={} exceeds the target dimension N*L={}",
                self.q,
                n * self.l
            )));
        }
        if t < min_length(self.p, self.l) {
            return Err(LrmarError::Dimension(format!(
                "series of length {t} too short for P={}, L={}: need T >= {}",
                self.p,
                self.l,
                min_length(self.p, self.l)
            )));
        }
        for (name, v) in [("iota", self.iota), ("kappa", self.kappa), ("nu", self.nu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LrmarError::Validation(format!(
                    "prior shape {name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(LrmarError::Validation("max_iter must be positive".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(LrmarError::Validation(format!(
                "tol must be finite and positive, got {}",
                self.tol
            )));
        }
        self.a.resolve(n * self.l, "a")?;
        self.b.resolve(n * self.p, "b")?;
        self.c.resolve(self.q, "c")?;
        Ok(())
    }

    /// Checks the spec against an already built design.
    pub fn validate_for_design(&self, design: &LaggedDesign) -> Result<()> {
        if design.p != self.p || design.l != self.l {
            return Err(LrmarError::Dimension(format!(
                "design built with P={}, L={} but spec has P={}, L={}",
                design.p, design.l, self.p, self.l
            )));
        }
        self.validate_for(design.m + self.p + self.l - 1, design.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_weakly_informative() {
        let s = ModelSpec::new(2, 3);
        assert_eq!(s.l, 1);
        assert_eq!(s.iota, 1e-3);
        assert_eq!(s.a.resolve(4, "a").unwrap(), DVector::from_element(4, 1e-3));
        assert_eq!(s.max_iter, 500);
        assert_eq!(s.tol, 1e-8);
    }

    #[test]
    fn rejects_nonpositive_hyper() {
        let mut s = ModelSpec::new(1, 1);
        s.kappa = 0.0;
        assert!(s.validate_for(10, 2).is_err());
        let mut s = ModelSpec::new(1, 1);
        s.c = Rates::PerMember(vec![-1.0]);
        assert!(s.validate_for(10, 2).is_err());
    }

    #[test]
    fn rejects_rank_above_target_dimension() {
        assert!(ModelSpec::new(1, 3).validate_for(10, 2).is_err());
        assert!(ModelSpec::new(1, 3).with_lags(2).validate_for(10, 2).is_ok());
    }

    #[test]
    fn per_member_length_checked() {
        let mut s = ModelSpec::new(2, 1);
        s.b = Rates::PerMember(vec![1.0; 3]);
        let err = s.validate_for(10, 2).unwrap_err();
        assert!(matches!(err, LrmarError::Dimension(_)));
    }
}
