//! Run configuration: sectioned key-value text, numbers as decimals or `p/q`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ini::Ini;
use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("[{section}] {key}: {reason}")]
    Invalid { section: String, key: String, reason: String },
    #[error("no analyses requested")]
    NoAnalyses,
    #[error("{0}")]
    Other(String),
}

fn invalid(section: &str, key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { section: section.into(), key: key.into(), reason: reason.into() }
}

/// Parses `p/q` exactly or a decimal literal.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s.contains('/') {
        let r: Ratio<i64> = s.parse().map_err(|e| format!("bad rational {s:?}: {e}"))?;
        return Ok(*r.numer() as f64 / *r.denom() as f64);
    }
    let v: f64 = s.parse().map_err(|_| format!("bad number {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite number {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    A,
    B,
    ScalarLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Analysis {
    Averaging,
    Bifurcation,
    Stability,
    Orbit,
    Torus,
    Findings,
}

impl Analysis {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "averaging" => Analysis::Averaging,
            "bifurcation" => Analysis::Bifurcation,
            "stability" => Analysis::Stability,
            "orbit" => Analysis::Orbit,
            "torus" => Analysis::Torus,
            "findings" => Analysis::Findings,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Averaging => "averaging",
            Analysis::Bifurcation => "bifurcation",
            Analysis::Stability => "stability",
            Analysis::Orbit => "orbit",
            Analysis::Torus => "torus",
            Analysis::Findings => "findings",
        }
    }

    fn allowed(self, case: Case) -> bool {
        match case {
            Case::ScalarLinear => self == Analysis::Averaging,
            Case::A => self != Analysis::Bifurcation,
            Case::B => self != Analysis::Torus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parameters {
    A { abar: f64, alpha: f64, beta: f64, gamma: f64 },
    B { omega: f64, alpha: [Option<f64>; 5], beta: [f64; 5], gamma: [f64; 5] },
    ScalarLinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub newton: f64,
    /// Engine against oracle for `g_1..g_3`.
    pub oracle_low: f64,
    /// Engine against oracle for `g_4, g_5`.
    pub oracle_high: f64,
    /// Sup of `f_1` on the chart.
    pub chart: f64,
    pub zero: f64,
    pub closure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { newton: 1e-12, oracle_low: 1e-6, oracle_high: 1e-4, chart: 1e-9, zero: 1e-10, closure: 1e-3 }
    }
}

impl Tolerances {
    fn set(&mut self, key: &str, v: f64) -> Result<(), ConfigError> {
        let slot = match key {
            "newton" => &mut self.newton,
            "oracle_low" => &mut self.oracle_low,
            "oracle_high" => &mut self.oracle_high,
            "chart" => &mut self.chart,
            "zero" => &mut self.zero,
            "closure" => &mut self.closure,
            _ => return Err(invalid("tolerances", key, "unknown tolerance")),
        };
        if !(v > 0.0) {
            return Err(invalid("tolerances", key, format!("tolerance must be > 0, got {v}")));
        }
        *slot = v;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragingConfig {
    pub point: Vec<f64>,
    pub order: u32,
    pub oracle_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitConfig {
    pub seeds: Vec<[f64; 2]>,
    pub crossings: usize,
    pub trajectory_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusConfig {
    pub grid: Vec<f64>,
    pub transient: usize,
    pub iterates: usize,
    pub seed_offsets: Vec<[f64; 2]>,
    pub guess: [f64; 2],
    pub boundary_resolution: f64,
    pub escape_ratio: f64,
    pub hopf_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: Case,
    pub parameters: Parameters,
    pub analyses: BTreeSet<Analysis>,
    pub epsilon: f64,
    pub ladder: Vec<f64>,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
    pub averaging: AveragingConfig,
    pub orbit: OrbitConfig,
    pub torus: TorusConfig,
}

struct Reader<'a> {
    ini: &'a Ini,
    used: BTreeSet<(String, String)>,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, section: &str, key: &str) -> Option<&'a str> {
        let v = self.ini.section(Some(section)).and_then(|p| p.get(key))?;
        self.used.insert((section.into(), key.into()));
        Some(v)
    }

    fn number(&mut self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(section, key)
            .map(|s| parse_number(s).map_err(|e| invalid(section, key, e)))
            .transpose()
    }

    fn require(&mut self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.number(section, key)?.ok_or_else(|| invalid(section, key, "missing"))
    }

    fn list(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(s) = self.raw(section, key) else { return Ok(None) };
        split_list(s)
            .map(|t| parse_number(t).map_err(|e| invalid(section, key, e)))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn pairs(&mut self, section: &str, key: &str) -> Result<Option<Vec<[f64; 2]>>, ConfigError> {
        let Some(s) = self.raw(section, key) else { return Ok(None) };
        s.split(';')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                let v: Vec<f64> = t
                    .split_whitespace()
                    .map(parse_number)
                    .collect::<Result<_, _>>()
                    .map_err(|e| invalid(section, key, e))?;
                <[f64; 2]>::try_from(v).map_err(|_| invalid(section, key, "expected pairs `x y; x y`"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn count(&mut self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.raw(section, key)
            .map(|s| s.trim().parse::<usize>().map_err(|_| invalid(section, key, format!("bad count {s:?}"))))
            .transpose()
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split([',', ' ', '\t']).filter(|t| !t.is_empty())
}

fn quintic(r: &mut Reader, key: &str) -> Result<[f64; 5], ConfigError> {
    let v = r.list("parameters", key)?.ok_or_else(|| invalid("parameters", key, "missing"))?;
    <[f64; 5]>::try_from(v).map_err(|_| invalid("parameters", key, "expected five coefficients"))
}

fn check_eps(section: &str, key: &str, e: f64) -> Result<(), ConfigError> {
    if e > 0.0 && e < 0.5 {
        Ok(())
    } else {
        Err(invalid(section, key, format!("epsilon must lie in (0, 0.5), got {e}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Unreadable { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Other(format!("config syntax: {e}")))?;
        let mut r = Reader { ini: &ini, used: BTreeSet::new() };

        let case = match r.raw("run", "case").map(str::trim) {
            Some("A") => Case::A,
            Some("B") => Case::B,
            Some("scalar-linear") => Case::ScalarLinear,
            Some(other) => return Err(invalid("run", "case", format!("unknown case {other:?} (A, B, scalar-linear)"))),
            None => return Err(invalid("run", "case", "missing")),
        };
        let mut analyses = BTreeSet::new();
        for name in r.raw("run", "analyses").map(split_list).into_iter().flatten() {
            let a = Analysis::parse(name).ok_or_else(|| invalid("run", "analyses", format!("unknown analysis {name:?}")))?;
            if !a.allowed(case) {
                return Err(invalid("run", "analyses", format!("{name} is not available for this case")));
            }
            analyses.insert(a);
        }
        if analyses.is_empty() {
            return Err(ConfigError::NoAnalyses);
        }
        let out = r.raw("run", "out").map(|s| PathBuf::from(s.trim()));

        let parameters = match case {
            Case::A => {
                let abar = r.require("parameters", "abar")?;
                if !(abar != 0.0 && abar * abar < 2.0) {
                    return Err(invalid("parameters", "abar", "need abar != 0 and abar^2 < 2"));
                }
                Parameters::A {
                    abar,
                    alpha: r.require("parameters", "alpha")?,
                    beta: r.require("parameters", "beta")?,
                    gamma: r.require("parameters", "gamma")?,
                }
            }
            Case::B => {
                let omega = r.require("parameters", "omega")?;
                // `auto` in the first two slots applies the branch constraints
                let raw = r.raw("parameters", "alpha").ok_or_else(|| invalid("parameters", "alpha", "missing"))?;
                let toks: Vec<&str> = split_list(raw).collect();
                if toks.len() != 5 {
                    return Err(invalid("parameters", "alpha", "expected five coefficients"));
                }
                let mut alpha = [None; 5];
                for (i, t) in toks.iter().enumerate() {
                    alpha[i] = if *t == "auto" && i < 2 {
                        None
                    } else {
                        Some(parse_number(t).map_err(|e| invalid("parameters", "alpha", e))?)
                    };
                }
                Parameters::B { omega, alpha, beta: quintic(&mut r, "beta")?, gamma: quintic(&mut r, "gamma")? }
            }
            Case::ScalarLinear => Parameters::ScalarLinear,
        };

        let epsilon = r.number("epsilon", "value")?.unwrap_or(0.02);
        check_eps("epsilon", "value", epsilon)?;
        let ladder = r.list("epsilon", "ladder")?.unwrap_or_else(|| vec![epsilon]);
        for &e in &ladder {
            check_eps("epsilon", "ladder", e)?;
        }

        let mut tolerances = Tolerances::default();
        if let Some(p) = ini.section(Some("tolerances")) {
            for (k, v) in p.iter() {
                r.used.insert(("tolerances".into(), k.into()));
                tolerances.set(k, parse_number(v).map_err(|e| invalid("tolerances", k, e))?)?;
            }
        }

        let default_point = match case {
            Case::ScalarLinear => vec![1.0],
            _ => vec![1.5, 0.25],
        };
        let point = r.list("averaging", "point")?.unwrap_or(default_point);
        let dim = if case == Case::ScalarLinear { 1 } else { 2 };
        if point.len() != dim {
            return Err(invalid("averaging", "point", format!("expected {dim} coordinates")));
        }
        let order = r.count("averaging", "order")?.unwrap_or(match case {
            Case::A => 1,
            _ => 5,
        }) as u32;
        if !(1..=5).contains(&order) {
            return Err(invalid("averaging", "order", "must be in 1..=5"));
        }
        let oracle_half_width = r.number("averaging", "oracle_half_width")?.unwrap_or(0.02);
        if !(oracle_half_width > 0.0) {
            return Err(invalid("averaging", "oracle_half_width", "must be > 0"));
        }

        let orbit = OrbitConfig {
            seeds: r.pairs("orbit", "seeds")?.unwrap_or_default(),
            crossings: r.count("orbit", "crossings")?.unwrap_or(50),
            trajectory_samples: r.count("orbit", "trajectory_samples")?.unwrap_or(1000),
        };
        let grid = match r.raw("torus", "grid") {
            Some(s) if s.contains(':') => {
                let p: Vec<f64> = s.split(':').map(parse_number).collect::<Result<_, _>>().map_err(|e| invalid("torus", "grid", e))?;
                let [lo, hi, step] = <[f64; 3]>::try_from(p).map_err(|_| invalid("torus", "grid", "expected lo:hi:step"))?;
                if !(step > 0.0 && hi >= lo) {
                    return Err(invalid("torus", "grid", "need step > 0 and hi >= lo"));
                }
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                (0..=n).map(|k| lo + step * k as f64).collect()
            }
            Some(_) => r.list("torus", "grid")?.unwrap_or_default(),
            None => (0..13).map(|k| 1.5 + 0.25 * k as f64).collect(),
        };
        let torus = TorusConfig {
            grid,
            transient: r.count("torus", "transient")?.unwrap_or(200_000),
            iterates: r.count("torus", "iterates")?.unwrap_or(400),
            seed_offsets: r.pairs("torus", "seed_offsets")?.unwrap_or_else(|| vec![[-0.0009, -0.0033], [-0.0028, 0.0052]]),
            guess: r.pairs("torus", "guess")?.and_then(|v| v.first().copied()).unwrap_or([0.0469, -0.0052]),
            boundary_resolution: r.number("torus", "boundary_resolution")?.unwrap_or(1e-3),
            escape_ratio: r.number("torus", "escape_ratio")?.unwrap_or(1e3),
            hopf_half_width: r.number("torus", "hopf_half_width")?.unwrap_or(1.0),
        };
        for (k, v) in [
            ("boundary_resolution", torus.boundary_resolution),
            ("escape_ratio", torus.escape_ratio),
            ("hopf_half_width", torus.hopf_half_width),
        ] {
            if !(v > 0.0) {
                return Err(invalid("torus", k, "must be > 0"));
            }
        }

        for (sec, props) in ini.iter() {
            let sec = sec.unwrap_or("");
            for (k, _) in props.iter() {
                if !r.used.contains(&(sec.to_string(), k.to_string())) {
                    return Err(invalid(sec, k, "unknown key"));
                }
            }
        }

        Ok(Self {
            case,
            parameters,
            analyses,
            epsilon,
            ladder,
            tolerances,
            out,
            averaging: AveragingConfig { point, order, oracle_half_width },
            orbit,
            torus,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_and_decimals() {
        assert_eq!(parse_number("39/32").unwrap(), 39.0 / 32.0);
        assert_eq!(parse_number("-177/10").unwrap(), -17.7);
        assert_eq!(parse_number(" 1e-3 ").unwrap(), 1e-3);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("abc").is_err());
    }

    #[test]
    fn empty_analyses() {
        let e = RunConfig::parse("[run]\ncase = B\nanalyses =\n").unwrap_err();
        assert_eq!(e.to_string(), "no analyses requested");
    }

    #[test]
    fn negative_tolerance_is_rejected() {
        let e = RunConfig::parse("[run]\ncase = scalar-linear\nanalyses = averaging\n[tolerances]\nnewton = -1e-9\n").unwrap_err();
        assert!(e.to_string().contains("tolerance must be > 0"), "{e}");
    }

    #[test]
    fn epsilon_range() {
        let e = RunConfig::parse("[run]\ncase = scalar-linear\nanalyses = averaging\n[epsilon]\nvalue = 1/2\n").unwrap_err();
        assert!(e.to_string().contains("(0, 0.5)"), "{e}");
    }

    #[test]
    fn case_completeness() {
        let e = RunConfig::parse("[run]\ncase = A\nanalyses = torus\n[parameters]\nabar = -1\nalpha = 41\n").unwrap_err();
        assert!(e.to_string().contains("beta: missing"), "{e}");
        let e = RunConfig::parse("[run]\ncase = A\nanalyses = bifurcation\n").unwrap_err();
        assert!(e.to_string().contains("not available"), "{e}");
    }

    #[test]
    fn unknown_key() {
        let e = RunConfig::parse("[run]\ncase = scalar-linear\nanalyses = averaging\nfoo = 1\n").unwrap_err();
        assert!(e.to_string().contains("unknown key"), "{e}");
    }

    #[test]
    fn case_b_with_auto_alpha() {
        let c = RunConfig::parse(
            "[run]\ncase = B\nanalyses = bifurcation, findings\n[parameters]\nomega = 39/32\n\
             alpha = auto, auto, 55, 37/40, 57/5\nbeta = -1, -1, -177/10, -1, 18\ngamma = 1, -1, 0, 193/10, -247/10\n\
             [torus]\ngrid = 1:2:0.5\n",
        )
        .unwrap();
        match c.parameters {
            Parameters::B { alpha, beta, .. } => {
                assert_eq!(alpha[0], None);
                assert_eq!(alpha[3], Some(0.925));
                assert_eq!(beta[2], -17.7);
            }
            _ => panic!(),
        }
        assert_eq!(c.torus.grid, vec![1.0, 1.5, 2.0]);
    }
}
