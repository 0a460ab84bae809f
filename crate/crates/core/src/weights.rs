//! Decay profiles `phi` and the radial weights `w(x, y) = phi(|x - y| / scale)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::dist;

/// Weights are clamped into `[WEIGHT_FLOOR, 1 / WEIGHT_FLOOR]` so reciprocals stay finite.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `exp(-nu t^2)`
    Gaussian { nu: f64 },
    /// `exp(-nu t)`
    Exponential { nu: f64 },
    /// `t^(-k)`, divergent at the origin.
    Algebraic { k: f64 },
}

impl Profile {
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile argument must be nonnegative, got {t}"
            )));
        }
        let v = match *self {
            Profile::Gaussian { nu } => (-nu * t * t).exp(),
            Profile::Exponential { nu } => (-nu * t).exp(),
            Profile::Algebraic { k } => {
                if t == 0.0 {
                    return Err(Error::DivergentAtZero);
                }
                t.powf(-k)
            }
        };
        Ok(v.clamp(WEIGHT_FLOOR, 1.0 / WEIGHT_FLOOR))
    }

    pub fn divergent_at_zero(&self) -> bool {
        matches!(self, Profile::Algebraic { .. })
    }

    /// `lim phi(n + 1) / phi(n)`.
    pub fn ratio_limit(&self) -> f64 {
        match *self {
            Profile::Gaussian { .. } => 0.0,
            Profile::Exponential { nu } => (-nu).exp(),
            Profile::Algebraic { .. } => 1.0,
        }
    }

    pub fn passes_ratio_test(&self) -> bool {
        self.ratio_limit() < 1.0
    }

    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            Profile::Gaussian { nu } => ("nu", nu),
            Profile::Exponential { nu } => ("nu", nu),
            Profile::Algebraic { k } => ("k", k),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleSource {
    Delta,
    SeparationRadius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub profile: Profile,
    pub scale: ScaleSource,
}

impl WeightSpec {
    /// Algebraic weights default to the separation radius, the others to delta.
    pub fn new(profile: Profile) -> Result<Self> {
        profile.validate()?;
        let scale = match profile {
            Profile::Algebraic { .. } => ScaleSource::SeparationRadius,
            _ => ScaleSource::Delta,
        };
        Ok(Self { profile, scale })
    }

    pub fn gaussian(nu: f64) -> Result<Self> {
        Self::new(Profile::Gaussian { nu })
    }

    pub fn exponential(nu: f64) -> Result<Self> {
        Self::new(Profile::Exponential { nu })
    }

    pub fn algebraic(k: f64) -> Result<Self> {
        Self::new(Profile::Algebraic { k })
    }

    pub fn with_scale(mut self, scale: ScaleSource) -> Self {
        self.scale = scale;
        self
    }

    /// Picks the scale length this spec uses given delta and `q_X`.
    pub fn resolve_scale(&self, delta: f64, separation: f64) -> f64 {
        match self.scale {
            ScaleSource::Delta => delta,
            ScaleSource::SeparationRadius => separation,
        }
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        self.profile.value(t)
    }

    pub fn eval(&self, x: &[f64], y: &[f64], scale: f64) -> Result<f64> {
        eval_weight(self, x, y, scale)
    }
}

pub fn phi(spec: &WeightSpec, t: f64) -> Result<f64> {
    spec.profile.value(t)
}

pub fn eval_weight(spec: &WeightSpec, x: &[f64], y: &[f64], scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "weight scale must be positive, got {scale}"
        )));
    }
    spec.profile.value(dist(x, y) / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mls,
    OneNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Distance to the exponent threshold; infinite for profiles passing the ratio test.
    pub margin: f64,
}

/// Exponent check for algebraic profiles: `d + m - k/2 < -1` for moving least squares,
/// `d + m - k < -1` for the 1-norm scheme. Gaussian and exponential profiles always pass.
pub fn admissibility_report(spec: &WeightSpec, dim: usize, degree: usize, method: Method) -> Admissibility {
    match spec.profile {
        Profile::Algebraic { k } => {
            let effective = match method {
                Method::Mls => k / 2.0,
                Method::OneNorm => k,
            };
            let margin = -1.0 - (dim as f64 + degree as f64 - effective);
            Admissibility {
                admissible: margin > 0.0,
                margin,
            }
        }
        _ => Admissibility {
            admissible: true,
            margin: f64::INFINITY,
        },
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.profile {
            Profile::Gaussian { nu } => write!(f, "gaussian:nu={nu}")?,
            Profile::Exponential { nu } => write!(f, "exponential:nu={nu}")?,
            Profile::Algebraic { k } => write!(f, "algebraic:k={k}")?,
        }
        let default = WeightSpec::new(self.profile).map(|s| s.scale).unwrap_or(self.scale);
        if self.scale != default {
            let s = match self.scale {
                ScaleSource::Delta => "delta",
                ScaleSource::SeparationRadius => "q",
            };
            write!(f, ",scale={s}")?;
        }
        Ok(())
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    /// Parses `gaussian:nu=1`, `exponential:nu=0.5`, `algebraic:k=6.2`, each optionally
    /// followed by `,scale=delta` or `,scale=q`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidArgument(format!("weight '{s}': {msg}"));
        let (family, params) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| bad("expected <family>:<param>=<value>"))?;
        let mut value = None;
        let mut scale = None;
        for item in params.split(',') {
            let (key, v) = item.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            match key.trim() {
                "nu" | "k" => {
                    value = Some((key.trim(), v.trim().parse::<f64>().map_err(|e| bad(&e.to_string()))?));
                }
                "scale" => {
                    scale = Some(match v.trim() {
                        "delta" => ScaleSource::Delta,
                        "q" | "separation" => ScaleSource::SeparationRadius,
                        other => return Err(bad(&format!("unknown scale '{other}'"))),
                    })
                }
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
        let profile = match (family.trim(), value) {
            ("gaussian", Some(("nu", nu))) => Profile::Gaussian { nu },
            ("exponential", Some(("nu", nu))) => Profile::Exponential { nu },
            ("algebraic", Some(("k", k))) => Profile::Algebraic { k },
            _ => return Err(bad("unknown family or missing parameter")),
        };
        let spec = WeightSpec::new(profile)?;
        Ok(match scale {
            Some(sc) => spec.with_scale(sc),
            None => spec,
        })
    }
}
