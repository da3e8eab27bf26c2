//! Run configuration: command-line flags, optional `key=value` config file,
//! and documented defaults, resolved and validated before any computation.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use nhbose_core::fock::GridSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NHBOSE_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact operator identities
    VerifyAlgebra,
    /// Truncated spectrum against the closed-form eigenvalues
    Spectrum,
    /// Numerical-range support lines and boundary
    Numrange,
    /// Smallest singular value of zI − H over a grid
    Pseudo,
    /// Gram matrix ⟨Ψ_mn, Ψ̃_pq⟩
    Biorth,
    /// Norm growth ‖Ψ_mm‖²
    Norms,
    /// Resolvent bound and Rayleigh-quotient containment
    Accretive,
    /// Semiclassical overlap integrals
    Wkb,
    /// Amplitudes of a finite combination of eigenfunctions
    Expand,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyAlgebra => "verify-algebra",
            Command::Spectrum => "spectrum",
            Command::Numrange => "numrange",
            Command::Pseudo => "pseudo",
            Command::Biorth => "biorth",
            Command::Norms => "norms",
            Command::Accretive => "accretive",
            Command::Wkb => "wkb",
            Command::Expand => "expand",
        }
    }

    /// Commands whose output concerns the spectrum of the truncated operator.
    pub fn is_spectral(self) -> bool {
        matches!(
            self,
            Command::Spectrum | Command::Numrange | Command::Pseudo | Command::Accretive
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolicTag {
    Symbolic,
}

/// A numeric coupling, or the keyword `symbolic` for exact algebra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Named(SymbolicTag),
}

impl GammaSpec {
    pub fn value(self) -> Option<f64> {
        match self {
            GammaSpec::Value(g) => Some(g),
            GammaSpec::Named(_) => None,
        }
    }
}

/// Which decoupled summand the WKB integrals use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Summand {
    /// `P²/8 + 2X² + iXP`
    X,
    /// `p²/2 + x²/2 + ixp`
    #[serde(rename = "x")]
    Lower,
}

#[derive(Parser, Debug, Default)]
#[command(name = "nhbose", version, about = "Spectral diagnostics for a non-self-adjoint two-boson oscillator")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Coupling γ, or `symbolic` (verify-algebra only) [default: 0.5; symbolic for verify-algebra]
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Fock truncation N, modes m,n ≤ N [default: 60 for numrange, 40 otherwise]
    #[arg(long)]
    pub truncation: Option<String>,
    /// Number of θ samples [default: 57]
    #[arg(long = "theta-steps")]
    pub theta_steps: Option<String>,
    /// θ range is [−θmax, θmax], θmax < π/2 [default: 1.4]
    #[arg(long = "theta-max")]
    pub theta_max: Option<String>,
    /// Pseudospectrum rectangle `re_min,re_max,im_min,im_max` [default: -1,8,-4,4]
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Grid resolution `n` or `nx,ny` [default: 161]
    #[arg(long)]
    pub res: Option<String>,
    /// Mode cutoff M [default: 6 for biorth, 8 for norms, 4 for expand]
    #[arg(long)]
    pub cutoff: Option<String>,
    /// Comma-separated ℏ values [default: 0.01,0.02,0.05,0.1,0.2,0.5,1]
    #[arg(long)]
    pub hbar: Option<String>,
    /// Quadrature nodes per axis [default: 96]
    #[arg(long)]
    pub nodes: Option<String>,
    /// WKB energy E [default: 1]
    #[arg(long)]
    pub energy: Option<String>,
    /// WKB summand, `X` or `x` [default: X]
    #[arg(long)]
    pub summand: Option<String>,
    /// Resolvent sample points, e.g. `-0.5,-1+1i,-2+3i,-4` [default: that list]
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Number of random Rayleigh quotients [default: 1000]
    #[arg(long)]
    pub samples: Option<String>,
    /// Expansion coefficients `m:n:c,...` [default: 0:0:√½,1:1:√½]
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
    /// Seed for random vectors [default: 1]
    #[arg(long)]
    pub seed: Option<String>,
    /// Output file, `-` for stdout [default: $NHBOSE_OUT_DIR/<command>.<format>, else ./]
    #[arg(long)]
    pub out: Option<String>,
    /// Output format [default: json for verify-algebra, csv otherwise]
    #[arg(long)]
    pub format: Option<String>,
    /// File of `key=value` lines using the flag names; flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 18] = [
    "command",
    "gamma",
    "truncation",
    "theta-steps",
    "theta-max",
    "grid",
    "res",
    "cutoff",
    "hbar",
    "nodes",
    "energy",
    "summand",
    "points",
    "samples",
    "coeffs",
    "seed",
    "out",
    "format",
];

impl Cli {
    /// Flag values keyed by flag name.
    pub fn flag_map(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("command", self.command.map(|c| c.name().to_string())),
            ("gamma", self.gamma.clone()),
            ("truncation", self.truncation.clone()),
            ("theta-steps", self.theta_steps.clone()),
            ("theta-max", self.theta_max.clone()),
            ("grid", self.grid.clone()),
            ("res", self.res.clone()),
            ("cutoff", self.cutoff.clone()),
            ("hbar", self.hbar.clone()),
            ("nodes", self.nodes.clone()),
            ("energy", self.energy.clone()),
            ("summand", self.summand.clone()),
            ("points", self.points.clone()),
            ("samples", self.samples.clone()),
            ("coeffs", self.coeffs.clone()),
            ("seed", self.seed.clone()),
            ("out", self.out.clone()),
            ("format", self.format.clone()),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect()
    }
}

/// Parses `key=value` lines; `#` starts a comment, keys may use `_` or `-`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Validation(format!(
                "config line {}: expected key=value, got {raw:?}",
                lineno + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Validation(format!("config line {}: unknown key {k:?}", lineno + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config_text(&text)
}

/// Fully resolved parameters of one run; serialized as the `params` block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub gamma: GammaSpec,
    pub truncation: usize,
    pub theta_steps: usize,
    pub theta_max: f64,
    pub grid: GridSpec,
    pub cutoff: usize,
    pub hbar: Vec<f64>,
    pub nodes: usize,
    pub energy: f64,
    pub summand: Summand,
    /// Resolvent samples as `[re, im]`.
    pub points: Vec<[f64; 2]>,
    pub samples: usize,
    pub coeffs: Vec<(usize, usize, f64)>,
    pub seed: u64,
    pub format: OutputFormat,
    pub out: PathBuf,
}

pub const MAX_TRUNCATION: usize = 1000;
pub const MAX_CUTOFF: usize = 60;
pub const MAX_SAMPLES: usize = 1_000_000;

fn invalid(key: &str, value: &str, why: &str) -> CliError {
    CliError::Validation(format!("--{key} {value:?}: {why}"))
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| invalid(key, s, "not a number"))?;
    if !v.is_finite() {
        return Err(invalid(key, s, "must be finite"));
    }
    Ok(v)
}

fn parse_usize(key: &str, s: &str, range: std::ops::RangeInclusive<usize>) -> Result<usize, CliError> {
    let v: usize = s.trim().parse().map_err(|_| invalid(key, s, "not a non-negative integer"))?;
    if !range.contains(&v) {
        return Err(invalid(key, s, &format!("must be within {}..={}", range.start(), range.end())));
    }
    Ok(v)
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|p| parse_f64(key, p)).collect()
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also with `j`).
pub fn parse_complex(s: &str) -> Option<[f64; 2]> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse().ok().map(|re| [re, 0.0]);
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse().ok()?,
    };
    Some([re.parse().ok()?, im])
}

fn default_hbar() -> Vec<f64> {
    vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]
}

fn default_points() -> Vec<[f64; 2]> {
    vec![[-0.5, 0.0], [-1.0, 1.0], [-2.0, 3.0], [-4.0, 0.0]]
}

impl RunConfig {
    /// Resolves flags over config-file values over defaults.
    ///
    /// `out_dir` is the default output directory (normally from
    /// [`OUT_DIR_ENV`]).
    pub fn resolve(
        flags: &BTreeMap<String, String>,
        file: &BTreeMap<String, String>,
        out_dir: Option<&Path>,
    ) -> Result<Self, CliError> {
        let get = |k: &str| flags.get(k).or_else(|| file.get(k)).map(String::as_str);
        let command = match get("command") {
            Some(c) => Command::from_str(c, true).map_err(|_| CliError::Usage(format!("unknown command {c:?}")))?,
            None => return Err(CliError::Usage("missing command".into())),
        };

        let gamma = match get("gamma") {
            Some(s) if s.trim().eq_ignore_ascii_case("symbolic") => {
                if command != Command::VerifyAlgebra {
                    return Err(invalid("gamma", s, "symbolic coupling is only supported by verify-algebra"));
                }
                GammaSpec::Named(SymbolicTag::Symbolic)
            }
            Some(s) => GammaSpec::Value(parse_f64("gamma", s)?),
            None if command == Command::VerifyAlgebra => GammaSpec::Named(SymbolicTag::Symbolic),
            None => GammaSpec::Value(0.5),
        };

        let truncation = match get("truncation") {
            Some(s) => parse_usize("truncation", s, 0..=MAX_TRUNCATION)?,
            None if command == Command::Numrange => 60,
            None => 40,
        };
        let theta_steps = get("theta-steps").map_or(Ok(57), |s| parse_usize("theta-steps", s, 1..=100_000))?;
        let theta_max = get("theta-max").map_or(Ok(1.4), |s| parse_f64("theta-max", s))?;
        if !(0.0..FRAC_PI_2).contains(&theta_max) {
            return Err(invalid("theta-max", &theta_max.to_string(), "must lie in [0, π/2)"));
        }

        let mut grid = GridSpec::DEFAULT;
        if let Some(s) = get("grid") {
            let b = parse_list("grid", s)?;
            let [re_min, re_max, im_min, im_max] = b[..] else {
                return Err(invalid("grid", s, "expected re_min,re_max,im_min,im_max"));
            };
            if !(re_min < re_max && im_min < im_max) {
                return Err(invalid("grid", s, "bounds must satisfy min < max"));
            }
            grid = GridSpec {
                re_min,
                re_max,
                im_min,
                im_max,
                ..grid
            };
        }
        if let Some(s) = get("res") {
            let parts: Vec<&str> = s.split(',').collect();
            let (nx, ny) = match parts[..] {
                [n] => {
                    let n = parse_usize("res", n, 1..=512)?;
                    (n, n)
                }
                [a, b] => (parse_usize("res", a, 1..=512)?, parse_usize("res", b, 1..=512)?),
                _ => return Err(invalid("res", s, "expected n or nx,ny")),
            };
            grid.nx = nx;
            grid.ny = ny;
        }

        let cutoff = match get("cutoff") {
            Some(s) => parse_usize("cutoff", s, 0..=MAX_CUTOFF)?,
            None => match command {
                Command::Norms => 8,
                Command::Expand => 4,
                _ => 6,
            },
        };
        let hbar = get("hbar").map_or(Ok(default_hbar()), |s| parse_list("hbar", s))?;
        if hbar.iter().any(|&h| h <= 0.0) {
            return Err(invalid("hbar", get("hbar").unwrap_or(""), "every ℏ must be positive"));
        }
        let nodes = get("nodes").map_or(Ok(96), |s| parse_usize("nodes", s, 1..=512))?;
        let energy = get("energy").map_or(Ok(1.0), |s| parse_f64("energy", s))?;
        if energy <= 0.0 {
            return Err(invalid("energy", &energy.to_string(), "must be positive"));
        }
        let summand = match get("summand").map(str::trim) {
            None | Some("X") => Summand::X,
            Some("x") => Summand::Lower,
            Some(s) => return Err(invalid("summand", s, "expected X or x")),
        };

        let points = match get("points") {
            Some(s) => s
                .split(',')
                .map(|p| parse_complex(p).filter(|z| z.iter().all(|v| v.is_finite())))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| invalid("points", s, "expected complex numbers like -1+2i"))?,
            None => default_points(),
        };
        if command == Command::Accretive {
            if let Some(z) = points.iter().find(|z| !(z[0] < 0.0)) {
                return Err(invalid(
                    "points",
                    &format!("{}{:+}i", z[0], z[1]),
                    "resolvent samples need a negative real part",
                ));
            }
        }
        let samples = get("samples").map_or(Ok(1000), |s| parse_usize("samples", s, 0..=MAX_SAMPLES))?;

        let coeffs = match get("coeffs") {
            Some(s) => s
                .split(',')
                .map(|t| {
                    let f: Vec<&str> = t.split(':').collect();
                    let [m, n, c] = f[..] else {
                        return Err(invalid("coeffs", t, "expected m:n:c"));
                    };
                    Ok((
                        parse_usize("coeffs", m, 0..=MAX_CUTOFF)?,
                        parse_usize("coeffs", n, 0..=MAX_CUTOFF)?,
                        parse_f64("coeffs", c)?,
                    ))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                vec![(0, 0, r), (1, 1, r)]
            }
        };

        let seed: u64 = match get("seed") {
            Some(s) => s.trim().parse().map_err(|_| invalid("seed", s, "not an unsigned integer"))?,
            None => 1,
        };
        let format = match get("format") {
            Some(s) => OutputFormat::from_str(s.trim(), true).map_err(|_| invalid("format", s, "expected csv or json"))?,
            None if command == Command::VerifyAlgebra => OutputFormat::Json,
            None => OutputFormat::Csv,
        };
        let out = match get("out") {
            Some(s) if !s.trim().is_empty() => PathBuf::from(s.trim()),
            Some(s) => return Err(invalid("out", s, "empty path")),
            None => out_dir
                .unwrap_or(Path::new("."))
                .join(format!("{}.{}", command.name(), format.extension())),
        };

        Ok(RunConfig {
            command,
            gamma,
            truncation,
            theta_steps,
            theta_max,
            grid,
            cutoff,
            hbar,
            nodes,
            energy,
            summand,
            points,
            samples,
            coeffs,
            seed,
            format,
            out,
        })
    }

    /// Numeric coupling; every command except verify-algebra has one.
    pub fn gamma_value(&self) -> f64 {
        self.gamma.value().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("-0.5"), Some([-0.5, 0.0]));
        assert_eq!(parse_complex("-1+1i"), Some([-1.0, 1.0]));
        assert_eq!(parse_complex("-2-3i"), Some([-2.0, -3.0]));
        assert_eq!(parse_complex("2i"), Some([0.0, 2.0]));
        assert_eq!(parse_complex("-i"), Some([0.0, -1.0]));
        assert_eq!(parse_complex("1e-3+2e+1j"), Some([1e-3, 20.0]));
        assert_eq!(parse_complex("abc"), None);
    }

    #[test]
    fn defaults_per_command() {
        let c = RunConfig::resolve(&flags(&[("command", "numrange")]), &BTreeMap::new(), None).unwrap();
        assert_eq!((c.truncation, c.theta_steps, c.theta_max), (60, 57, 1.4));
        assert_eq!(c.out, PathBuf::from("./numrange.csv"));
        let v = RunConfig::resolve(&flags(&[("command", "verify-algebra")]), &BTreeMap::new(), Some(Path::new("/tmp/o")))
            .unwrap();
        assert_eq!(v.gamma, GammaSpec::Named(SymbolicTag::Symbolic));
        assert_eq!(v.format, OutputFormat::Json);
        assert_eq!(v.out, PathBuf::from("/tmp/o/verify-algebra.json"));
    }

    #[test]
    fn flags_override_config_file() {
        let file = parse_config_text("# comment\ngamma = 0.25\ntheta_steps=9\n\ntruncation=7 # trailing\n").unwrap();
        let c = RunConfig::resolve(&flags(&[("command", "numrange"), ("truncation", "12")]), &file, None).unwrap();
        assert_eq!(c.gamma, GammaSpec::Value(0.25));
        assert_eq!(c.theta_steps, 9);
        assert_eq!(c.truncation, 12);
    }

    #[test]
    fn validation_errors() {
        let none = BTreeMap::new();
        let bad = [
            vec![("command", "spectrum"), ("gamma", "symbolic")],
            vec![("command", "spectrum"), ("gamma", "nan")],
            vec![("command", "numrange"), ("theta-max", "1.6")],
            vec![("command", "pseudo"), ("res", "600")],
            vec![("command", "pseudo"), ("grid", "1,0,-1,1")],
            vec![("command", "wkb"), ("hbar", "0.1,-0.2")],
            vec![("command", "wkb"), ("summand", "Y")],
            vec![("command", "accretive"), ("points", "0.5+1i")],
            vec![("command", "expand"), ("coeffs", "1:2")],
            vec![("command", "spectrum"), ("format", "xml")],
        ];
        for case in bad {
            let r = RunConfig::resolve(&flags(&case), &none, None);
            assert!(matches!(r, Err(CliError::Validation(_))), "{case:?} gave {r:?}");
        }
        assert!(matches!(
            RunConfig::resolve(&flags(&[("command", "bogus")]), &none, None),
            Err(CliError::Usage(_))
        ));
        assert!(parse_config_text("frobnicate=1").is_err());
        assert!(parse_config_text("gamma").is_err());
    }

    #[test]
    fn params_round_trip_through_json() {
        let c = RunConfig::resolve(
            &flags(&[("command", "accretive"), ("points", "-0.1+0.3i,-7"), ("gamma", "0.1"), ("seed", "99")]),
            &BTreeMap::new(),
            None,
        )
        .unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let v = RunConfig::resolve(&flags(&[("command", "verify-algebra")]), &BTreeMap::new(), None).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("\"gamma\":\"symbolic\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), v);
    }
}
