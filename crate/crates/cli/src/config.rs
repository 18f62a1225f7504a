//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cgpcox::constraints::ConstraintSpec;
use cgpcox::cox::{HyperSearch, MhConfig};
use cgpcox::point_process::IntensitySpec;
use cgpcox::{KernelParams, KnotGrid};

use crate::error::{CliError, CliResult};
use crate::io::read_table_intensity;

/// Raw settings: file entries first, overrides replacing them key by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str, origin: &Path) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Parse {
                path: origin.to_path_buf(),
                line: i as u64 + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            values.insert(normalise_key(k), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(normalise_key(key), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key).ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    fn parsed<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::Config(format!("cannot parse `{key}` value {v:?}"))))
            .transpose()
    }

    fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn flag(&self, key: &str) -> CliResult<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(CliError::Config(format!("`{key}` must be true or false, got {v:?}"))),
        }
    }
}

fn normalise_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

/// `"0:5"` or `"0:1,0:1"`.
pub fn parse_domain(s: &str) -> CliResult<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (a, b) = part
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("domain interval {part:?} is not of the form a:b")))?;
            let a: f64 = parse_number(a)?;
            let b: f64 = parse_number(b)?;
            if !(a < b) {
                return Err(CliError::Config(format!("domain interval [{a}, {b}] is empty")));
            }
            Ok((a, b))
        })
        .collect()
}

/// `"lo:hi"` bounds, one pair per comma-separated entry.
fn parse_bounds(s: &str) -> CliResult<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| match part.split_once(':') {
            Some((a, b)) => Ok((parse_number(a)?, parse_number(b)?)),
            None => {
                let v = parse_number(part)?;
                Ok((v, v))
            }
        })
        .collect()
}

fn parse_number(s: &str) -> CliResult<f64> {
    s.trim().parse().map_err(|_| CliError::Config(format!("not a number: {s:?}")))
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}

/// Broadcasts a single entry to `dim` entries.
fn broadcast<T: Clone>(mut v: Vec<T>, dim: usize, what: &str) -> CliResult<Vec<T>> {
    if v.len() == 1 && dim > 1 {
        v = vec![v[0].clone(); dim];
    }
    if v.len() != dim {
        return Err(CliError::Config(format!("{what} has {} entries for {dim} dimensions", v.len())));
    }
    Ok(v)
}

pub fn intensity_from(settings: &Settings) -> CliResult<IntensitySpec> {
    let family = settings.require("intensity")?;
    let domain = settings.get("domain").map(parse_domain).transpose()?;
    let one_dim = |default: (f64, f64)| -> CliResult<(f64, f64)> {
        match &domain {
            None => Ok(default),
            Some(d) if d.len() == 1 => Ok(d[0]),
            Some(_) => Err(CliError::Config(format!("{family} is one-dimensional"))),
        }
    };
    let shape = || -> CliResult<(f64, f64)> {
        let a = settings.parsed("alpha")?.ok_or_else(|| CliError::Config(format!("{family} needs `alpha`")))?;
        let b = settings.parsed("beta")?.ok_or_else(|| CliError::Config(format!("{family} needs `beta`")))?;
        Ok((a, b))
    };
    let spec = match family {
        "toy1" | "toy2" | "toy3" => {
            let id = family[3..].parse().expect("matched digit");
            let spec = IntensitySpec::toy(id)?;
            if let Some(d) = &domain {
                if d != &spec.domain {
                    return Err(CliError::Config(format!(
                        "{family} is defined on [{}, {}]",
                        spec.domain[0].0, spec.domain[0].1
                    )));
                }
            }
            spec
        }
        "weibull" => {
            let (a, b) = shape()?;
            IntensitySpec::weibull(a, b, one_dim((0.0, 100.0))?)?
        }
        "gamma" => {
            let (a, b) = shape()?;
            IntensitySpec::gamma(a, b, one_dim((0.0, 5.0))?)?
        }
        "constant" => {
            let d = domain.ok_or_else(|| CliError::Config("constant intensity needs `domain`".into()))?;
            let rate =
                settings.parsed("rate")?.ok_or_else(|| CliError::Config("constant intensity needs `rate`".into()))?;
            IntensitySpec::constant(&d, rate)?
        }
        "table" => {
            let path = settings.require("table")?;
            let (grid, values) = read_table_intensity(Path::new(path))?;
            IntensitySpec::table(grid, values)?
        }
        other => return Err(CliError::Config(format!("unknown intensity family {other:?}"))),
    };
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub intensity: IntensitySpec,
    pub n_obs: usize,
    pub seed: u64,
    pub lambda_max: Option<f64>,
    pub out: PathBuf,
    pub replicates: usize,
}

impl SimulateConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        Ok(Self {
            intensity: intensity_from(s)?,
            n_obs: s.parsed_or("n_obs", 1)?,
            seed: s.parsed_or("seed", 0)?,
            lambda_max: s.parsed("lambda_max")?,
            out: PathBuf::from(s.get("out").unwrap_or("events.csv")),
            replicates: s.parsed_or("replicates", 1)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KnotChoice {
    Auto,
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone)]
pub enum KernelChoice {
    Fixed(KernelParams),
    Estimate(HyperSearch),
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub events: PathBuf,
    pub n_obs: Option<usize>,
    pub domain: Vec<(f64, f64)>,
    pub knots: KnotChoice,
    pub constraints: Vec<ConstraintSpec>,
    pub kernel: KernelChoice,
    pub mh: MhConfig,
    pub out_dir: PathBuf,
    pub write_chain: bool,
    pub eval_points: Vec<usize>,
    pub replicates: usize,
}

impl FitConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        let domain = parse_domain(s.require("domain")?)?;
        let dim = domain.len();
        let knots = match s.get("m").unwrap_or("auto") {
            "auto" => KnotChoice::Auto,
            v => {
                let m = v
                    .split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Config(format!("cannot parse `m` value {v:?}")))?;
                KnotChoice::Fixed(broadcast(m, dim, "m")?)
            }
        };
        let constraints = ConstraintSpec::parse_list(s.get("constraints").unwrap_or("nonnegative"))?;
        let estimate = s.flag("estimate")? || s.get("variance").is_none() || s.get("lengthscales").is_none();
        let kernel = if estimate {
            let variance = match s.get("variance_bounds") {
                Some(v) => *parse_bounds(v)?.first().ok_or_else(|| CliError::Config("empty variance_bounds".into()))?,
                None => (0.1, 100.0),
            };
            let lengthscales = match s.get("lengthscale_bounds") {
                Some(v) => broadcast(parse_bounds(v)?, dim, "lengthscale_bounds")?,
                None => domain.iter().map(|(a, b)| (0.02 * (b - a), 0.5 * (b - a))).collect(),
            };
            let mut search = HyperSearch::new(variance, lengthscales);
            search.budget = s.parsed_or("budget", search.budget)?;
            search.n_prior = s.parsed_or("n_prior", search.n_prior)?;
            search.starts = s.parsed_or("starts", search.starts)?;
            KernelChoice::Estimate(search)
        } else {
            let variance = s.parsed::<f64>("variance")?.expect("checked above");
            let ls = broadcast(parse_list(s.require("lengthscales")?)?, dim, "lengthscales")?;
            KernelChoice::Fixed(KernelParams::new(variance, ls)?)
        };
        let defaults = MhConfig::default();
        let mh = MhConfig {
            eta: s.parsed_or("eta", defaults.eta)?,
            n_samples: s.parsed_or("samples", defaults.n_samples)?,
            burn_in: s.parsed_or("burnin", defaults.burn_in)?,
            orthant_mc: s.parsed_or("orthant_mc", defaults.orthant_mc)?,
            seed: s.parsed_or("seed", defaults.seed)?,
            init: None,
            proposal_steps: s.parsed_or("proposal_steps", defaults.proposal_steps)?,
        };
        let default_eval = if dim == 1 { 1000 } else { 32 };
        let eval_points = match s.get("eval_points") {
            Some(v) => {
                let n = v
                    .split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Config(format!("cannot parse `eval_points` value {v:?}")))?;
                broadcast(n, dim, "eval_points")?
            }
            None => vec![default_eval; dim],
        };
        if eval_points.iter().any(|&n| n < 2) {
            return Err(CliError::Config("eval_points must be at least 2 per dimension".into()));
        }
        Ok(Self {
            events: PathBuf::from(s.require("events")?),
            n_obs: s.parsed("n_obs")?,
            domain,
            knots,
            constraints,
            kernel,
            mh,
            out_dir: PathBuf::from(s.get("out_dir").unwrap_or(".")),
            write_chain: s.flag("chain")?,
            eval_points,
            replicates: s.parsed_or("replicates", 1)?,
        })
    }

    /// The knot grid for the given lengthscales (used by the `auto` rule).
    pub fn grid(&self, lengthscales: &[f64]) -> CliResult<KnotGrid> {
        let m = match &self.knots {
            KnotChoice::Fixed(m) => m.clone(),
            KnotChoice::Auto => cgpcox::cox::default_knot_counts(&self.domain, lengthscales)?,
        };
        Ok(KnotGrid::new(&self.domain, &m)?)
    }
}

#[derive(Debug, Clone)]
pub struct EvaluateConfig {
    pub intensity: IntensitySpec,
    pub summary: Option<PathBuf>,
    pub summary_dir: Option<PathBuf>,
    pub out: PathBuf,
}

impl EvaluateConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        let summary = s.get("summary").map(PathBuf::from);
        let summary_dir = s.get("summary_dir").map(PathBuf::from);
        if summary.is_none() == summary_dir.is_none() {
            return Err(CliError::Config("give exactly one of `summary` or `summary_dir`".into()));
        }
        Ok(Self {
            intensity: intensity_from(s)?,
            summary,
            summary_dir,
            out: PathBuf::from(s.get("out").unwrap_or("metrics.csv")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments() {
        let s = Settings::parse("# fit\ndomain = 0:5\nm=100  # knots\n\nEta = 1e-3\n", Path::new("c")).unwrap();
        assert_eq!(s.get("domain"), Some("0:5"));
        assert_eq!(s.get("m"), Some("100"));
        assert_eq!(s.get("eta"), Some("1e-3"));
    }

    #[test]
    fn reports_line_numbers() {
        let err = Settings::parse("a = 1\nbroken\n", Path::new("cfg.txt")).unwrap_err();
        assert!(err.to_string().starts_with("cfg.txt:2:"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn domains() {
        assert_eq!(parse_domain("0:5").unwrap(), vec![(0.0, 5.0)]);
        assert_eq!(parse_domain("0:1, -1:1").unwrap(), vec![(0.0, 1.0), (-1.0, 1.0)]);
        assert!(parse_domain("1:0").is_err());
        assert!(parse_domain("0-1").is_err());
    }

    #[test]
    fn fit_config_overrides_and_broadcast() {
        let mut s = Settings::parse(
            "domain = 0:1,0:1\nm = 15\nvariance = 2\nlengthscales = 0.1\nevents = e.csv\n",
            Path::new("c"),
        )
        .unwrap();
        s.set("eta", "1e-4");
        let cfg = FitConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.knots, KnotChoice::Fixed(vec![15, 15]));
        assert_eq!(cfg.mh.eta, 1e-4);
        assert_eq!(cfg.eval_points, vec![32, 32]);
        match cfg.kernel {
            KernelChoice::Fixed(p) => assert_eq!(p.lengthscales(), &[0.1, 0.1]),
            KernelChoice::Estimate(_) => panic!("expected fixed kernel"),
        }
    }

    #[test]
    fn missing_kernel_means_estimate() {
        let s = Settings::parse("domain = 0:5\nevents = e.csv\n", Path::new("c")).unwrap();
        let cfg = FitConfig::from_settings(&s).unwrap();
        assert!(matches!(cfg.kernel, KernelChoice::Estimate(_)));
        assert_eq!(cfg.knots, KnotChoice::Auto);
    }

    #[test]
    fn intensity_families() {
        let s = Settings::parse("intensity = weibull\nalpha = 1\nbeta = 0.7\n", Path::new("c")).unwrap();
        assert_eq!(intensity_from(&s).unwrap().domain, vec![(0.0, 100.0)]);
        let s = Settings::parse("intensity = toy2\ndomain = 0:4\n", Path::new("c")).unwrap();
        assert!(intensity_from(&s).is_err());
        let s = Settings::parse("intensity = gamma\nalpha = 5\n", Path::new("c")).unwrap();
        assert!(intensity_from(&s).is_err());
        let s = Settings::parse("intensity = bogus\n", Path::new("c")).unwrap();
        assert!(intensity_from(&s).is_err());
    }
}
