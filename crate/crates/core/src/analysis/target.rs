use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::basis::{dimension, multi_indices};
use crate::error::{Error, Result};

/// Functions sampled at the nodes in convergence studies.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// `prod_i sin(pi x_i)`
    SinPi,
    /// Franke's bivariate test surface on the unit square:
    ///
    /// ```text
    /// 0.75 exp(-((9x-2)^2 + (9y-2)^2) / 4) + 0.75 exp(-(9x+1)^2 / 49 - (9y+1) / 10)
    ///   + 0.5 exp(-((9x-7)^2 + (9y-3)^2) / 4) - 0.2 exp(-(9x-4)^2 - (9y-7)^2)
    /// ```
    Franke,
    /// Monomial coefficients in graded lexicographic order.
    Polynomial(Vec<f64>),
}

pub fn franke(x: f64, y: f64) -> f64 {
    let (a, b) = (9.0 * x, 9.0 * y);
    0.75 * (-((a - 2.0).powi(2) + (b - 2.0).powi(2)) / 4.0).exp()
        + 0.75 * (-(a + 1.0).powi(2) / 49.0 - (b + 1.0) / 10.0).exp()
        + 0.5 * (-((a - 7.0).powi(2) + (b - 3.0).powi(2)) / 4.0).exp()
        - 0.2 * (-(a - 4.0).powi(2) - (b - 7.0).powi(2)).exp()
}

impl Target {
    /// Checks the target is defined in dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Target::SinPi => Ok(()),
            Target::Franke if dim == 2 => Ok(()),
            Target::Franke => Err(Error::InvalidArgument(format!(
                "franke is bivariate, got dimension {dim}"
            ))),
            Target::Polynomial(c) => self.polynomial_degree(dim).map(|_| ()).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "{} polynomial coefficients do not fill a graded-lex space in dimension {dim}",
                    c.len()
                ))
            }),
        }
    }

    /// Degree `m` with `dim(pi_m) = coefficient count`, for polynomial targets.
    pub fn polynomial_degree(&self, dim: usize) -> Option<usize> {
        let Target::Polynomial(c) = self else {
            return None;
        };
        (0..64).find(|&m| dimension(m, dim) == c.len())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Target::SinPi => x.iter().map(|v| (PI * v).sin()).product(),
            Target::Franke => franke(x[0], x[1]),
            Target::Polynomial(c) => {
                let m = self.polynomial_degree(x.len()).expect("validated polynomial target");
                multi_indices(m, x.len())
                    .iter()
                    .zip(c)
                    .map(|(alpha, ck)| ck * alpha.iter().zip(x).map(|(&e, v)| v.powi(e as i32)).product::<f64>())
                    .sum()
            }
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::SinPi => f.write_str("sin-pi"),
            Target::Franke => f.write_str("franke"),
            Target::Polynomial(c) => {
                f.write_str("polynomial:")?;
                for (i, v) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sin-pi" => Ok(Target::SinPi),
            "franke" => Ok(Target::Franke),
            other => {
                let coeffs = other
                    .strip_prefix("polynomial:")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown target '{other}'")))?;
                let c = coeffs
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidArgument(format!("target '{other}': {e}")))?;
                Ok(Target::Polynomial(c))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn franke_reference_values() {
        // Independent evaluation of the four-term formula.
        let f = |x: f64, y: f64| {
            0.75 * f64::exp(-(9.0 * x - 2.0).powi(2) / 4.0 - (9.0 * y - 2.0).powi(2) / 4.0)
                + 0.75 * f64::exp(-(9.0 * x + 1.0).powi(2) / 49.0 - (9.0 * y + 1.0) / 10.0)
                + 0.5 * f64::exp(-(9.0 * x - 7.0).powi(2) / 4.0 - (9.0 * y - 3.0).powi(2) / 4.0)
                - 0.2 * f64::exp(-(9.0 * x - 4.0).powi(2) - (9.0 * y - 7.0).powi(2))
        };
        for (x, y) in [(0.0, 0.0), (0.5, 0.5), (0.2, 0.9), (1.0, 1.0)] {
            assert_relative_eq!(franke(x, y), f(x, y), max_relative = 1e-15);
        }
        assert_relative_eq!(franke(0.0, 0.0), 0.76642059128, epsilon = 1e-10);
    }

    #[test]
    fn polynomial_target() {
        let t: Target = "polynomial:1,2,3,4,5,6".parse().unwrap();
        t.validate(2).unwrap();
        assert!(t.validate(3).is_err());
        // 1 + 2x + 3y + 4x^2 + 5xy + 6y^2
        assert_relative_eq!(t.eval(&[0.5, -1.0]), 1.0 + 1.0 - 3.0 + 1.0 - 2.5 + 6.0);
        assert_eq!(t.to_string(), "polynomial:1,2,3,4,5,6");
        assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
    }

    #[test]
    fn sin_pi() {
        assert_relative_eq!(Target::SinPi.eval(&[0.5]), 1.0);
        assert_relative_eq!(Target::SinPi.eval(&[0.5, 0.25]), 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(Target::Franke.validate(1).is_err());
    }
}
