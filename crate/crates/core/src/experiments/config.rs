//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph_gen::{default_case1_range, GeometricParams, DEFAULT_CASE1_ATTEMPTS};
use crate::lqcost::TruncationRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentKind {
    EpsilonSweep,
    Cayley,
    Geometric,
    Analyze,
    Validate,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::EpsilonSweep => "epsilon-sweep",
            ExperimentKind::Cayley => "cayley",
            ExperimentKind::Geometric => "geometric",
            ExperimentKind::Analyze => "analyze",
            ExperimentKind::Validate => "validate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon-sweep" => Ok(ExperimentKind::EpsilonSweep),
            "cayley" => Ok(ExperimentKind::Cayley),
            "geometric" => Ok(ExperimentKind::Geometric),
            "analyze" => Ok(ExperimentKind::Analyze),
            "validate" => Ok(ExperimentKind::Validate),
            other => Err(Error::Config(format!("unknown experiment {other:?}"))),
        }
    }
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", k + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", k + 1)));
        }
        if map
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::Config(format!(
                "line {}: duplicate key {key:?}",
                k + 1
            )));
        }
    }
    Ok(map)
}

/// Splits a `key=value` override.
pub fn parse_override(text: &str) -> Result<(String, String)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {text:?} is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Configuration of one experiment run: file values, then overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
        }
    }

    /// Builds from config-file text plus overrides. A file-level
    /// `experiment` key must agree with `kind`.
    pub fn from_text(
        kind: ExperimentKind,
        text: &str,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut params = parse_key_values(text)?;
        if let Some(declared) = params.remove("experiment") {
            if declared.parse::<ExperimentKind>()? != kind {
                return Err(Error::Config(format!(
                    "config declares experiment {declared:?}, running {kind}"
                )));
            }
        }
        for (k, v) in overrides {
            params.insert(k.clone(), v.clone());
        }
        Ok(Self { kind, params })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown key {key:?} for {}; allowed: {}",
                    self.kind,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.params.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse {key} = {raw:?}"))),
        }
    }

    fn get_list(&self, key: &str, default: Vec<usize>) -> Result<Vec<usize>> {
        match self.params.get(key) {
            None => Ok(default),
            Some(raw) => {
                let list: std::result::Result<Vec<usize>, _> = raw
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect();
                match list {
                    Ok(v) if !v.is_empty() => Ok(v),
                    _ => Err(Error::Config(format!(
                        "{key} must be a comma-separated list of sizes"
                    ))),
                }
            }
        }
    }

    fn rule(&self) -> Result<TruncationRule> {
        let d = TruncationRule::default();
        let rule = TruncationRule {
            t_max: self.get("t_max", d.t_max)?,
            delta: self.get("delta", d.delta)?,
            window: self.get("window", d.window)?,
        };
        if rule.t_max == 0 || !(rule.delta > 0.0) || rule.window == 0 {
            return Err(Error::Config(format!("invalid truncation rule {rule:?}")));
        }
        Ok(rule)
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed", DEFAULT_SEED)
    }
}

pub const DEFAULT_SEED: u64 = 20240601;

const RULE_KEYS: [&str; 3] = ["t_max", "delta", "window"];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    let mut all: Vec<&'static str> = vec!["seed", "svg"];
    all.extend(RULE_KEYS);
    all.extend(extra);
    all
}

fn range_error(what: String) -> Error {
    Error::Config(what)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSweepSettings {
    pub eps_min: f64,
    pub eps_max: f64,
    pub points: usize,
    pub rule: TruncationRule,
    pub svg: bool,
}

impl EpsilonSweepSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.check_keys(&keys(&["eps_min", "eps_max", "points"]))?;
        let s = Self {
            eps_min: cfg.get("eps_min", 0.001)?,
            eps_max: cfg.get("eps_max", 0.5)?,
            points: cfg.get("points", 100)?,
            rule: cfg.rule()?,
            svg: cfg.get("svg", false)?,
        };
        if !(s.eps_min > 0.0 && s.eps_min <= s.eps_max && s.eps_max <= 0.5) || s.points == 0 {
            return Err(range_error(format!(
                "epsilon grid needs 0 < eps_min <= eps_max <= 0.5 and points >= 1, got [{}, {}] x {}",
                s.eps_min, s.eps_max, s.points
            )));
        }
        Ok(s)
    }

    /// Log-spaced grid with both endpoints exact.
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.eps_max];
        }
        let (a, b) = (self.eps_min.ln(), self.eps_max.ln());
        let last = self.points - 1;
        (0..self.points)
            .map(|i| match i {
                0 => self.eps_min,
                i if i == last => self.eps_max,
                i => (a + (b - a) * i as f64 / last as f64).exp(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CayleySettings {
    pub case: u8,
    pub d: usize,
    pub sizes: Vec<usize>,
    pub instances: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub attempts: usize,
    pub exact_max_nodes: usize,
    pub rule: TruncationRule,
    pub seed: u64,
    pub svg: bool,
}

impl CayleySettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.check_keys(&keys(&[
            "case",
            "d",
            "sizes",
            "instances",
            "p_min",
            "p_max",
            "attempts",
            "exact_max_nodes",
        ]))?;
        let case: u8 = cfg.get("case", 2)?;
        let d: usize = cfg.get("d", 2)?;
        if case != 1 && case != 2 {
            return Err(range_error(format!("case must be 1 or 2, got {case}")));
        }
        let window = default_case1_range(d);
        if case == 1 && window.is_none() {
            return Err(range_error(format!("case 1 needs d in {{2, 3}}, got {d}")));
        }
        if !(1..=3).contains(&d) {
            return Err(range_error(format!("d must be 1, 2 or 3, got {d}")));
        }
        let default_sizes = match d {
            1 => vec![3, 5, 10, 20, 40],
            2 => vec![8, 12, 16, 20, 24],
            _ => vec![4, 6, 8],
        };
        let (dmin, dmax) = window.unwrap_or((0.0, 1.0));
        let s = Self {
            case,
            d,
            sizes: cfg.get_list("sizes", default_sizes)?,
            instances: cfg.get("instances", if case == 1 { 20 } else { 1 })?,
            p_min: cfg.get("p_min", dmin)?,
            p_max: cfg.get("p_max", dmax)?,
            attempts: cfg.get("attempts", DEFAULT_CASE1_ATTEMPTS)?,
            exact_max_nodes: cfg.get("exact_max_nodes", 200)?,
            rule: cfg.rule()?,
            seed: cfg.seed()?,
            svg: cfg.get("svg", false)?,
        };
        if s.sizes.iter().any(|&n| n < 3) {
            return Err(range_error("torus sides must be at least 3".into()));
        }
        if s.instances == 0 || s.attempts == 0 {
            return Err(range_error(
                "instances and attempts must be positive".into(),
            ));
        }
        if case == 1 && !(s.p_min > 0.0 && s.p_min < s.p_max && s.p_max <= 1.0) {
            return Err(range_error(format!(
                "invalid window [{}, {}]",
                s.p_min, s.p_max
            )));
        }
        Ok(s)
    }
}

/// Node counts per dimension for the geometric experiment.
pub fn geometric_sizes(d: usize, full_scale: bool) -> Vec<usize> {
    match (d, full_scale) {
        (2, _) => (1..=12).map(|k| 25 * k).collect(),
        (3, true) => vec![50, 150, 250, 350, 450, 550, 600, 650, 700, 750, 800],
        (3, false) => vec![50, 150, 250],
        _ => vec![25, 50, 100],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricSettings {
    pub d: usize,
    pub sizes: Vec<usize>,
    pub instances: usize,
    pub params: GeometricParams,
    pub exact_max_nodes: usize,
    pub export_instances: bool,
    pub full_scale: bool,
    pub rule: TruncationRule,
    pub seed: u64,
    pub svg: bool,
}

impl GeometricSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.check_keys(&keys(&[
            "d",
            "sizes",
            "instances",
            "full_scale",
            "exact_max_nodes",
            "export_instances",
            "s",
            "r",
            "gamma",
            "rho",
            "p_e",
            "p_d",
            "c",
            "b",
            "pi_bar_min",
            "pi_bar_max",
            "gamma_divisions",
            "max_attempts",
            "max_node_attempts",
            "literal_pi_check",
        ]))?;
        let d: usize = cfg.get("d", 2)?;
        if !(1..=3).contains(&d) {
            return Err(range_error(format!("d must be 1, 2 or 3, got {d}")));
        }
        let full_scale: bool = cfg.get("full_scale", false)?;
        let p = GeometricParams::default();
        let params = GeometricParams {
            s: cfg.get("s", p.s)?,
            r: cfg.get("r", p.r)?,
            gamma: cfg.get("gamma", p.gamma)?,
            rho: cfg.get("rho", p.rho)?,
            p_e: cfg.get("p_e", p.p_e)?,
            p_d: cfg.get("p_d", p.p_d)?,
            c: cfg.get("c", p.c)?,
            b: cfg.get("b", p.b)?,
            pi_bar_min: cfg.get("pi_bar_min", p.pi_bar_min)?,
            pi_bar_max: cfg.get("pi_bar_max", p.pi_bar_max)?,
            gamma_divisions: cfg.get("gamma_divisions", p.gamma_divisions)?,
            max_attempts: cfg.get("max_attempts", p.max_attempts)?,
            max_node_attempts: cfg.get("max_node_attempts", p.max_node_attempts)?,
            literal_pi_check: cfg.get("literal_pi_check", p.literal_pi_check)?,
        };
        params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let s = Self {
            d,
            sizes: cfg.get_list("sizes", geometric_sizes(d, full_scale))?,
            instances: cfg.get("instances", 15)?,
            params,
            exact_max_nodes: cfg.get("exact_max_nodes", 200)?,
            export_instances: cfg.get("export_instances", false)?,
            full_scale,
            rule: cfg.rule()?,
            seed: cfg.seed()?,
            svg: cfg.get("svg", false)?,
        };
        if s.sizes.iter().any(|&n| n < 2) || s.instances == 0 {
            return Err(range_error(
                "sizes must be at least 2 and instances positive".into(),
            ));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateSettings {
    pub instances: usize,
    pub inject: bool,
    pub seed: u64,
}

impl ValidateSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.check_keys(&["seed", "instances", "inject"])?;
        let s = Self {
            instances: cfg.get("instances", 50)?,
            inject: cfg.get("inject", false)?,
            seed: cfg.seed()?,
        };
        if s.instances == 0 {
            return Err(range_error("instances must be positive".into()));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSettings {
    pub rule: TruncationRule,
}

impl AnalyzeSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.check_keys(&RULE_KEYS)?;
        Ok(Self { rule: cfg.rule()? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let map = parse_key_values("# c\na = 1\n b=2 # tail\n\n").unwrap();
        assert_eq!(map["a"], "1");
        assert_eq!(map["b"], "2");
        assert!(parse_key_values("a 1").is_err());
        assert!(parse_key_values("a=1\na=2").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg =
            ExperimentConfig::from_text(ExperimentKind::EpsilonSweep, "bogus = 1", &[]).unwrap();
        assert!(matches!(
            EpsilonSweepSettings::from_config(&cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn experiment_key_must_match() {
        assert!(
            ExperimentConfig::from_text(ExperimentKind::Cayley, "experiment = geometric", &[])
                .is_err()
        );
        assert!(
            ExperimentConfig::from_text(ExperimentKind::Cayley, "experiment = cayley", &[]).is_ok()
        );
    }

    #[test]
    fn overrides_win() {
        let cfg = ExperimentConfig::from_text(
            ExperimentKind::EpsilonSweep,
            "points = 10",
            &[("points".into(), "5".into())],
        )
        .unwrap();
        let s = EpsilonSweepSettings::from_config(&cfg).unwrap();
        assert_eq!(s.points, 5);
    }

    #[test]
    fn epsilon_grid() {
        let s =
            EpsilonSweepSettings::from_config(&ExperimentConfig::new(ExperimentKind::EpsilonSweep))
                .unwrap();
        let g = s.grid();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.001);
        assert_eq!(g[99], 0.5);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let mut cfg = ExperimentConfig::new(ExperimentKind::EpsilonSweep);
        cfg.set("eps_max", 0.6);
        assert!(EpsilonSweepSettings::from_config(&cfg).is_err());
    }

    #[test]
    fn range_checks() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Cayley);
        cfg.set("case", 1);
        cfg.set("d", 1);
        assert!(CayleySettings::from_config(&cfg).is_err());
        let mut cfg = ExperimentConfig::new(ExperimentKind::Geometric);
        cfg.set("p_d", 0.7);
        assert!(GeometricSettings::from_config(&cfg).is_err());
        let cfg = ExperimentConfig::new(ExperimentKind::Geometric);
        assert_eq!(
            GeometricSettings::from_config(&cfg).unwrap().sizes.len(),
            12
        );
        let mut cfg = ExperimentConfig::new(ExperimentKind::Geometric);
        cfg.set("d", 3);
        assert_eq!(
            GeometricSettings::from_config(&cfg).unwrap().sizes,
            vec![50, 150, 250]
        );
        cfg.set("full_scale", true);
        assert_eq!(
            GeometricSettings::from_config(&cfg).unwrap().sizes.len(),
            11
        );
    }
}
