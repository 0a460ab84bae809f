//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fdpr::analysis::{Sweep, Target};
use fdpr::basis::Family;
use fdpr::engine::Engine;
use fdpr::geometry::{DeltaMode, DeltaRule, Domain};
use fdpr::weights::{admissibility_report, WeightSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Basis,
    Converge,
    Lebesgue,
    Theory,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Basis => "basis",
            Command::Converge => "converge",
            Command::Lebesgue => "lebesgue",
            Command::Theory => "theory",
        })
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "basis" => Ok(Command::Basis),
            "converge" => Ok(Command::Converge),
            "lebesgue" => Ok(Command::Lebesgue),
            "theory" => Ok(Command::Theory),
            other => Err(format!(
                "unknown command '{other}' (expected basis, converge, lebesgue or theory)"
            )),
        }
    }
}

/// Every key accepted in a config file, in serialization order.
pub const KEYS: [&str; 19] = [
    "command",
    "domain",
    "nodes",
    "perturb",
    "seed",
    "degree",
    "family",
    "weight",
    "delta_factor",
    "delta_mode",
    "engine",
    "target",
    "grid",
    "out",
    "theta",
    "radius",
    "c_qu",
    "gamma",
    "c_gamma",
];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub domain: Domain,
    /// Nodes per axis at each refinement level.
    pub nodes: Vec<usize>,
    /// Jitter as a fraction of the grid spacing; zero keeps the grid.
    pub perturb: f64,
    pub seed: u64,
    pub degree: usize,
    pub family: Family,
    pub weight: WeightSpec,
    pub delta: DeltaRule,
    pub engine: Engine,
    pub target: Target,
    /// Evaluation points per axis; `None` uses the analysis default.
    pub grid: Option<usize>,
    /// `None` writes to standard output.
    pub out: Option<PathBuf>,
    pub theta: f64,
    pub radius: f64,
    pub c_qu: f64,
    pub gamma: f64,
    pub c_gamma: f64,
    /// Source line of each key read from a file, for error messages.
    lines: BTreeMap<&'static str, usize>,
}

impl PartialEq for ExperimentConfig {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::Converge,
            domain: Domain::cube(1, -1.0, 1.0).expect("valid default domain"),
            nodes: vec![8, 16, 32, 64],
            perturb: 0.0,
            seed: 0,
            degree: 1,
            family: Family::Chebyshev,
            weight: WeightSpec::gaussian(1.0).expect("valid default weight"),
            delta: DeltaRule::fill(5.0).expect("valid default delta"),
            engine: Engine::Mls,
            target: Target::SinPi,
            grid: None,
            out: None,
            theta: PI / 5.0,
            radius: 1.0,
            c_qu: 1.0,
            gamma: 1.0,
            c_gamma: 1.0,
            lines: BTreeMap::new(),
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| format!("'{}': {e}", v.trim())))
        .collect()
}

fn parse_positive(value: &str) -> Result<f64, String> {
    let v: f64 = value.parse().map_err(|e| format!("'{value}': {e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn parse_domain(value: &str) -> Result<Domain, String> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for axis in value.split(',') {
        let (lo, hi) = axis
            .split_once(':')
            .ok_or_else(|| format!("axis '{}' must be written lo:hi", axis.trim()))?;
        lower.push(lo.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", lo.trim()))?);
        upper.push(hi.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", hi.trim()))?);
    }
    Domain::new(lower, upper).map_err(|e| e.to_string())
}

fn key_slot(key: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|k| *k == key)
}

impl ExperimentConfig {
    /// Parses and validates a config file. Blank lines and `#` comments are ignored; later
    /// keys override earlier ones.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg = Self::parse_unchecked(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without the cross-key checks, so that overrides can still be applied.
    pub fn parse_unchecked(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::config(Some(line), format!("expected 'key = value', got '{content}'")))?;
            cfg.set(key.trim(), value.trim(), Some(line))?;
        }
        Ok(cfg)
    }

    /// Sets one key; `line` is reported in errors and kept for later validation messages.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), CliError> {
        let slot = key_slot(key).ok_or_else(|| CliError::config(line, format!("unknown key '{key}'")))?;
        let err = |msg: String| CliError::config(line, format!("key '{slot}': {msg}"));
        match slot {
            "command" => self.command = value.parse().map_err(err)?,
            "domain" => self.domain = parse_domain(value).map_err(err)?,
            "nodes" => {
                let nodes: Vec<usize> = parse_list(value).map_err(err)?;
                if nodes.is_empty() || nodes.contains(&0) {
                    return Err(err("node counts must be positive".into()));
                }
                self.nodes = nodes;
            }
            "perturb" => {
                let v: f64 = value.parse().map_err(|e| err(format!("'{value}': {e}")))?;
                if !(0.0..0.5).contains(&v) {
                    return Err(err(format!("fraction must lie in [0, 0.5), got {v}")));
                }
                self.perturb = v;
            }
            "seed" => self.seed = value.parse().map_err(|e| err(format!("'{value}': {e}")))?,
            "degree" => self.degree = value.parse().map_err(|e| err(format!("'{value}': {e}")))?,
            "family" => self.family = value.parse().map_err(|e: fdpr::Error| err(e.to_string()))?,
            "weight" => self.weight = value.parse().map_err(|e: fdpr::Error| err(e.to_string()))?,
            "delta_factor" => {
                self.delta = DeltaRule::new(self.delta.mode, parse_positive(value).map_err(err)?)
                    .map_err(|e| err(e.to_string()))?
            }
            "delta_mode" => {
                self.delta.mode = match value {
                    "fill" => DeltaMode::FillDistance,
                    "separation" => DeltaMode::SeparationRadius,
                    other => return Err(err(format!("unknown mode '{other}' (expected fill or separation)"))),
                }
            }
            "engine" => self.engine = value.parse().map_err(|e: fdpr::Error| err(e.to_string()))?,
            "target" => self.target = value.parse().map_err(|e: fdpr::Error| err(e.to_string()))?,
            "grid" => {
                self.grid = match value {
                    "default" => None,
                    v => {
                        let n: usize = v.parse().map_err(|e| err(format!("'{v}': {e}")))?;
                        if n < 2 {
                            return Err(err(format!("need at least 2 points per axis, got {n}")));
                        }
                        Some(n)
                    }
                }
            }
            "out" => {
                self.out = match value {
                    "" | "-" => None,
                    v => Some(PathBuf::from(v)),
                }
            }
            "theta" => self.theta = parse_positive(value).map_err(err)?,
            "radius" => self.radius = parse_positive(value).map_err(err)?,
            "c_qu" => self.c_qu = parse_positive(value).map_err(err)?,
            "gamma" => self.gamma = parse_positive(value).map_err(err)?,
            "c_gamma" => self.c_gamma = parse_positive(value).map_err(err)?,
            _ => unreachable!("every key in KEYS is handled"),
        }
        match line {
            Some(l) => {
                self.lines.insert(slot, l);
            }
            None => {
                self.lines.remove(slot);
            }
        }
        Ok(())
    }

    fn line_of(&self, keys: &[&str]) -> Option<usize> {
        keys.iter().filter_map(|k| self.lines.get(k).copied()).max()
    }

    /// Cross-key checks. Inadmissible weight exponents are refusals, everything else is a
    /// config error.
    pub fn validate(&self) -> Result<(), CliError> {
        let dim = self.domain.dim();
        if self.engine == Engine::Shepard && self.degree != 0 {
            return Err(CliError::config(
                self.line_of(&["engine", "degree"]),
                format!("shepard requires degree 0, got {}", self.degree),
            ));
        }
        if let Err(e) = self.target.validate(dim) {
            return Err(CliError::config(self.line_of(&["target", "domain"]), e.to_string()));
        }
        if self.command != Command::Theory {
            let report = admissibility_report(&self.weight, dim, self.degree, self.engine.method());
            if !report.admissible {
                return Err(CliError::Refused(format!(
                    "{}weight {} is not admissible for {} with d={dim}, m={} (margin {:.3})",
                    self.line_of(&["weight", "engine", "degree", "domain"])
                        .map(|l| format!("line {l}: "))
                        .unwrap_or_default(),
                    self.weight,
                    self.engine,
                    self.degree,
                    report.margin
                )));
            }
        }
        Ok(())
    }

    pub fn sweep(&self) -> Sweep {
        Sweep {
            domain: self.domain.clone(),
            levels: self.nodes.clone(),
            perturbation: (self.perturb > 0.0).then_some((self.perturb, self.seed)),
            family: self.family,
            degree: self.degree,
            weights: self.weight,
            delta: self.delta,
            engine: self.engine,
            grid: self.grid,
        }
    }

    fn value_of(&self, key: &str) -> String {
        let list = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        match key {
            "command" => self.command.to_string(),
            "domain" => (0..self.domain.dim())
                .map(|i| format!("{}:{}", self.domain.lower()[i], self.domain.upper()[i]))
                .collect::<Vec<_>>()
                .join(","),
            "nodes" => list(&self.nodes),
            "perturb" => self.perturb.to_string(),
            "seed" => self.seed.to_string(),
            "degree" => self.degree.to_string(),
            "family" => self.family.to_string(),
            "weight" => self.weight.to_string(),
            "delta_factor" => self.delta.factor.to_string(),
            "delta_mode" => match self.delta.mode {
                DeltaMode::FillDistance => "fill".into(),
                DeltaMode::SeparationRadius => "separation".into(),
            },
            "engine" => self.engine.to_string(),
            "target" => self.target.to_string(),
            "grid" => self.grid.map(|g| g.to_string()).unwrap_or_else(|| "default".into()),
            "out" => self
                .out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into()),
            "theta" => self.theta.to_string(),
            "radius" => self.radius.to_string(),
            "c_qu" => self.c_qu.to_string(),
            "gamma" => self.gamma.to_string(),
            "c_gamma" => self.c_gamma.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().map(|k| (*k, self.value_of(k))).collect()
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let text = c.to_string();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn full_file_round_trip() {
        let text = "\
# Franke study
command = converge
domain = 0:1, 0:1
nodes = 26,27,28
perturb = 0.1
seed = 7
degree = 2
family = monomial
weight = algebraic:k=20,scale=delta
delta_factor = 30
delta_mode = separation
engine = l1-colgen
target = franke
grid = 51
out = results/franke.csv
theta = 0.5
radius = 2
c_qu = 1.5
gamma = 0.5
c_gamma = 3
";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.nodes, vec![26, 27, 28]);
        assert_eq!(c.domain.dim(), 2);
        assert_eq!(c.engine, Engine::OneNorm(fdpr::lp::Strategy::ColumnGeneration));
        assert_eq!(c.delta.mode, DeltaMode::SeparationRadius);
        let again = ExperimentConfig::parse(&c.to_string()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_string(), c.to_string());
    }

    #[test]
    fn errors_name_the_line() {
        let e = ExperimentConfig::parse("degree = 1\n\nweight = gaussian:sigma=2\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().starts_with("line 3:"), "{e}");

        let e = ExperimentConfig::parse("nodes = 4\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().starts_with("line 2: unknown key 'bogus'"), "{e}");

        let e = ExperimentConfig::parse("just text\n").unwrap_err();
        assert!(e.to_string().starts_with("line 1:"), "{e}");
    }

    #[test]
    fn shepard_needs_degree_zero() {
        let e = ExperimentConfig::parse("engine = shepard\ndegree = 2\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().starts_with("line 2:"), "{e}");
        ExperimentConfig::parse("engine = shepard\ndegree = 0\n").unwrap();
    }

    #[test]
    fn inadmissible_weight_is_refused() {
        // d + m - k/2 = 1 + 1 - 2 = 0, not below -1.
        let e = ExperimentConfig::parse("weight = algebraic:k=4\n").unwrap_err();
        assert_eq!(e.exit_code(), 4);
        // The same exponent is fine for the 1-norm scheme: 1 + 1 - 4 = -2.
        ExperimentConfig::parse("weight = algebraic:k=4\nengine = l1-warm\n").unwrap();
    }

    #[test]
    fn franke_needs_two_dimensions() {
        let e = ExperimentConfig::parse("target = franke\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
