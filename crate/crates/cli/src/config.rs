//! `RunConfig` and its `key = value` file format.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use qdinf::verify::{Tolerances, SUITES};
use qdinf::FragmentCount;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Bound,
    Figure,
    Gaussian,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    Fig2,
    Fig3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn parse_enum<T: ValueEnum>(key: &str, s: &str) -> Result<T, CliError> {
    T::from_str(s, false).map_err(|_| CliError::Usage(format!("invalid value '{s}' for {key}")))
}

/// Decimal-exponent grid `lo:hi:points`, e.g. `12:60:13` for `10^12 … 10^60`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn counts(&self) -> Result<Vec<FragmentCount>, CliError> {
        Ok(qdinf::optimizer::log_grid(self.lo, self.hi, self.points)?)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.points)
    }
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("grid must look like lo:hi:points, got '{s}'"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [lo, hi, points] = parts[..] else { return Err(bad()) };
        let g = GridSpec {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
            points: points.parse().map_err(|_| bad())?,
        };
        if !(g.lo.is_finite() && g.hi.is_finite() && g.lo >= 0.0 && g.lo <= g.hi && g.points >= 2) {
            return Err(bad());
        }
        Ok(g)
    }
}

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub theorem: Option<u8>,
    pub figure: Option<FigureId>,
    pub suite: Option<String>,
    pub nbar: Option<f64>,
    pub delta: f64,
    pub epsilon: Option<f64>,
    /// `Ω`.
    pub cap: Option<f64>,
    pub omega: Option<f64>,
    pub n: Option<FragmentCount>,
    pub grid: Option<GridSpec>,
    pub d: Option<u64>,
    pub m: Option<u64>,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub thermal: f64,
    pub squeeze: f64,
    pub certify: bool,
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub tolerances: Tolerances,
}

pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_SEED: u64 = 1;
pub const SEED_ENV: &str = "QDINF_SEED";

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            theorem: None,
            figure: None,
            suite: None,
            nbar: None,
            delta: DEFAULT_DELTA,
            epsilon: None,
            cap: None,
            omega: None,
            n: None,
            grid: None,
            d: None,
            m: None,
            alpha_re: 0.0,
            alpha_im: 0.0,
            thermal: 0.0,
            squeeze: 0.0,
            certify: false,
            samples: 10_000,
            trials: 200,
            seed: DEFAULT_SEED,
            output: None,
            format: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn format(&self) -> OutputFormat {
        self.format.unwrap_or(match self.command {
            Command::Figure => OutputFormat::Csv,
            _ => OutputFormat::Json,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |s: &str| Err(CliError::Usage(s.to_string()));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return usage("delta must be positive");
        }
        if matches!(self.nbar, Some(x) if !(x >= 0.0 && x.is_finite())) {
            return usage("nbar must be non-negative");
        }
        if !(self.tolerances.inequality >= 0.0 && self.tolerances.identity >= 0.0) {
            return usage("tolerances must be non-negative");
        }
        match self.command {
            Command::Bound => {
                match self.theorem {
                    Some(1 | 2) => {}
                    _ => return usage("bound needs --thm 1 or --thm 2"),
                }
                if self.n.is_none() {
                    return usage("bound needs --N");
                }
                if self.theorem == Some(1) && self.nbar.is_none() {
                    return usage("theorem 1 needs --nbar");
                }
                if self.theorem == Some(2) {
                    if self.omega.is_some() != self.cap.is_some() && self.epsilon.is_none() {
                        return usage("--omega and --Omega go together");
                    }
                    if self.omega.is_none() && self.nbar.is_none() {
                        return usage("theorem 2 needs --nbar or --omega with --Omega");
                    }
                }
            }
            Command::Figure => {
                if self.figure.is_none() {
                    return usage("figure needs fig2 or fig3");
                }
            }
            Command::Gaussian => {
                if self.omega.is_none() && self.epsilon.is_none() {
                    return usage("gaussian needs --omega or --eps with --nbar and --Omega");
                }
                if self.epsilon.is_some() && (self.nbar.is_none() || self.cap.is_none()) {
                    return usage("--eps needs --nbar and --Omega");
                }
                if self.certify && self.epsilon.is_none() {
                    return usage("--certify needs --eps");
                }
                if self.certify && self.samples == 0 {
                    return usage("samples must be positive");
                }
            }
            Command::Verify => {
                let suite = self.suite.as_deref().unwrap_or("all");
                if suite != "all" && !SUITES.contains(&suite) {
                    return Err(CliError::Usage(format!(
                        "unknown suite '{suite}', expected all or one of {}",
                        SUITES.join(", ")
                    )));
                }
                if self.trials == 0 {
                    return usage("trials must be positive");
                }
            }
        }
        Ok(())
    }

    /// `key = value` lines in a fixed order; unset options are omitted.
    pub fn to_config_string(&self) -> String {
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push(format!("{k} = {v}"));
        put("command", enum_name(&self.command));
        if let Some(t) = self.theorem {
            put("theorem", t.to_string());
        }
        if let Some(f) = self.figure {
            put("figure", enum_name(&f));
        }
        if let Some(s) = &self.suite {
            put("suite", s.clone());
        }
        if let Some(x) = self.nbar {
            put("nbar", x.to_string());
        }
        put("delta", self.delta.to_string());
        if let Some(x) = self.epsilon {
            put("epsilon", x.to_string());
        }
        if let Some(x) = self.cap {
            put("Omega", x.to_string());
        }
        if let Some(x) = self.omega {
            put("omega", x.to_string());
        }
        if let Some(n) = self.n {
            put("N", n.to_string());
        }
        if let Some(g) = self.grid {
            put("grid", g.to_string());
        }
        if let Some(d) = self.d {
            put("d", d.to_string());
        }
        if let Some(m) = self.m {
            put("m", m.to_string());
        }
        put("alpha_re", self.alpha_re.to_string());
        put("alpha_im", self.alpha_im.to_string());
        put("thermal", self.thermal.to_string());
        put("squeeze", self.squeeze.to_string());
        put("certify", self.certify.to_string());
        put("samples", self.samples.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        if let Some(p) = &self.output {
            put("output", p.display().to_string());
        }
        if let Some(f) = self.format {
            put("format", enum_name(&f));
        }
        put("tol_inequality", self.tolerances.inequality.to_string());
        put("tol_identity", self.tolerances.identity.to_string());
        out.join("\n") + "\n"
    }

    /// Parses the format written by [`RunConfig::to_config_string`]. Blank
    /// lines and `#` comments are ignored; unknown or repeated keys are errors.
    pub fn from_config_str(text: &str) -> Result<Self, CliError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("line {}: expected key = value", i + 1)));
            };
            let k = k.trim().to_string();
            if pairs.iter().any(|(p, _)| *p == k) {
                return Err(CliError::Usage(format!("line {}: repeated key '{k}'", i + 1)));
            }
            pairs.push((k, v.trim().to_string()));
        }
        let command = match pairs.iter().find(|(k, _)| k == "command") {
            Some((_, v)) => parse_enum::<Command>("command", v)?,
            None => return Err(CliError::Usage("config has no command".into())),
        };
        let mut cfg = RunConfig::new(command);
        for (k, v) in &pairs {
            let num = |v: &str| -> Result<f64, CliError> {
                v.parse().map_err(|_| CliError::Usage(format!("invalid number '{v}' for {k}")))
            };
            let int = |v: &str| -> Result<u64, CliError> {
                v.parse().map_err(|_| CliError::Usage(format!("invalid integer '{v}' for {k}")))
            };
            match k.as_str() {
                "command" => {}
                "theorem" => {
                    cfg.theorem = Some(v.parse().map_err(|_| CliError::Usage(format!("invalid theorem '{v}'")))?)
                }
                "figure" => cfg.figure = Some(parse_enum(k, v)?),
                "suite" => cfg.suite = Some(v.clone()),
                "nbar" => cfg.nbar = Some(num(v)?),
                "delta" => cfg.delta = num(v)?,
                "epsilon" => cfg.epsilon = Some(num(v)?),
                "Omega" => cfg.cap = Some(num(v)?),
                "omega" => cfg.omega = Some(num(v)?),
                "N" => cfg.n = Some(v.parse()?),
                "grid" => cfg.grid = Some(v.parse()?),
                "d" => cfg.d = Some(int(v)?),
                "m" => cfg.m = Some(int(v)?),
                "alpha_re" => cfg.alpha_re = num(v)?,
                "alpha_im" => cfg.alpha_im = num(v)?,
                "thermal" => cfg.thermal = num(v)?,
                "squeeze" => cfg.squeeze = num(v)?,
                "certify" => {
                    cfg.certify = v.parse().map_err(|_| CliError::Usage(format!("invalid boolean '{v}'")))?
                }
                "samples" => cfg.samples = int(v)? as usize,
                "trials" => cfg.trials = int(v)? as usize,
                "seed" => cfg.seed = int(v)?,
                "output" => cfg.output = Some(PathBuf::from(v)),
                "format" => cfg.format = Some(parse_enum(k, v)?),
                "tol_inequality" => cfg.tolerances.inequality = num(v)?,
                "tol_identity" => cfg.tolerances.identity = num(v)?,
                other => return Err(CliError::Usage(format!("unknown config key '{other}'"))),
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_a_full_config() {
        let mut cfg = RunConfig::new(Command::Bound);
        cfg.theorem = Some(2);
        cfg.nbar = Some(1.0 / 3.0);
        cfg.delta = 0.01;
        cfg.epsilon = Some(0.1 + 0.2);
        cfg.cap = Some(4.0);
        cfg.n = Some("2.5e29".parse().unwrap());
        cfg.grid = Some("5:29:13".parse().unwrap());
        cfg.seed = u64::MAX;
        cfg.output = Some("out dir/x.json".into());
        cfg.format = Some(OutputFormat::Json);
        cfg.tolerances.inequality = 3e-11;
        let text = cfg.to_config_string();
        assert_eq!(RunConfig::from_config_str(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        assert!(RunConfig::from_config_str("command = bound\nfoo = 1\n").is_err());
        assert!(RunConfig::from_config_str("command = bound\nseed = 1\nseed = 2\n").is_err());
        assert!(RunConfig::from_config_str("seed = 1\n").is_err());
    }

    #[test]
    fn grid_spec_parses() {
        let g: GridSpec = "12:60:13".parse().unwrap();
        assert_eq!(g.counts().unwrap().len(), 13);
        assert!("60:12:13".parse::<GridSpec>().is_err());
        assert!("1:2".parse::<GridSpec>().is_err());
    }

    #[test]
    fn bad_suite_is_usage_error() {
        let mut cfg = RunConfig::new(Command::Verify);
        cfg.suite = Some("nope".into());
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
    }
}
