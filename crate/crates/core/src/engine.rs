//! Uniform access to the approximation engines.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lp::{LpEvaluator, SimplexOptions, Strategy};
use crate::scheme::{CoefficientVector, Scheme};
use crate::weights::{admissibility_report, Method};
use crate::{mls, scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Mls,
    Shepard,
    OneNorm(Strategy),
}

impl Engine {
    pub fn method(&self) -> Method {
        match self {
            Engine::Mls | Engine::Shepard => Method::Mls,
            Engine::OneNorm(_) => Method::OneNorm,
        }
    }

    pub const ALL: [Engine; 5] = [
        Engine::Mls,
        Engine::Shepard,
        Engine::OneNorm(Strategy::Cold),
        Engine::OneNorm(Strategy::Warm),
        Engine::OneNorm(Strategy::ColumnGeneration),
    ];
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Engine::Mls => f.write_str("mls"),
            Engine::Shepard => f.write_str("shepard"),
            Engine::OneNorm(s) => write!(f, "l1-{s}"),
        }
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mls" => Ok(Engine::Mls),
            "shepard" => Ok(Engine::Shepard),
            other => match other.strip_prefix("l1-") {
                Some(strategy) => Ok(Engine::OneNorm(strategy.parse()?)),
                None => Err(Error::InvalidArgument(format!(
                    "unknown engine '{other}' (expected mls, shepard, l1-cold, l1-warm or l1-colgen)"
                ))),
            },
        }
    }
}

/// A scheme bound to an engine.
#[derive(Debug, Clone)]
pub struct Approximant {
    scheme: Scheme,
    engine: Engine,
}

impl Approximant {
    /// Shepard requires degree zero. Admissibility of algebraic weights is not enforced
    /// here; see [`Approximant::admissible`].
    pub fn new(scheme: Scheme, engine: Engine) -> Result<Self> {
        if engine == Engine::Shepard && scheme.basis().degree() != 0 {
            return Err(Error::InvalidArgument(format!(
                "shepard requires degree 0, got {}",
                scheme.basis().degree()
            )));
        }
        Ok(Self { scheme, engine })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn admissible(&self) -> bool {
        let b = self.scheme.basis();
        admissibility_report(self.scheme.weights(), b.dim(), b.degree(), self.engine.method()).admissible
    }

    pub fn evaluator(&self) -> Evaluator<'_> {
        match self.engine {
            Engine::Mls => Evaluator::Mls(&self.scheme),
            Engine::Shepard => Evaluator::Shepard(&self.scheme),
            Engine::OneNorm(s) => Evaluator::OneNorm(Box::new(LpEvaluator::new(&self.scheme, s))),
        }
    }

    pub fn evaluator_with(&self, options: SimplexOptions) -> Evaluator<'_> {
        match self.engine {
            Engine::OneNorm(s) => Evaluator::OneNorm(Box::new(LpEvaluator::with_options(&self.scheme, s, options))),
            _ => self.evaluator(),
        }
    }

    /// One-shot evaluation; prefer an [`Evaluator`] for sweeps.
    pub fn coefficients(&self, x: &[f64]) -> Result<CoefficientVector> {
        self.evaluator().coefficients(x)
    }
}

/// Mutable per-worker evaluation state.
#[derive(Debug)]
pub enum Evaluator<'a> {
    Mls(&'a Scheme),
    Shepard(&'a Scheme),
    OneNorm(Box<LpEvaluator<'a>>),
}

impl Evaluator<'_> {
    pub fn coefficients(&mut self, x: &[f64]) -> Result<CoefficientVector> {
        match self {
            Evaluator::Mls(s) => mls::coefficients(s, x),
            Evaluator::Shepard(s) => mls::shepard_coefficients(s, x),
            Evaluator::OneNorm(lp) => lp.coefficients(x),
        }
    }

    /// Simplex pivots so far; zero for the closed-form engines.
    pub fn pivots(&self) -> usize {
        match self {
            Evaluator::OneNorm(lp) => lp.total_pivots(),
            _ => 0,
        }
    }

    pub fn scheme(&self) -> &scheme::Scheme {
        match self {
            Evaluator::Mls(s) | Evaluator::Shepard(s) => s,
            Evaluator::OneNorm(lp) => lp.scheme(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_names_round_trip() {
        for e in Engine::ALL {
            assert_eq!(e.to_string().parse::<Engine>().unwrap(), e);
        }
        assert!("l1-fast".parse::<Engine>().is_err());
        assert!("simplex".parse::<Engine>().is_err());
    }
}
