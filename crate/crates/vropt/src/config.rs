//! Experiment configuration files.
//!
//! Grammar (one entry per line):
//!
//! ```text
//! file    := line*
//! line    := ws* (entry)? ws* ("#" any*)? newline
//! entry   := key ws* "=" ws* value
//! key     := [a-z0-9_]+
//! value   := any character except "#", trimmed
//! ```
//!
//! Keys may appear at most once; unknown keys are rejected. See
//! [`ExperimentConfig::KEYS`] for the accepted keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vropt_core::schedule::Preset;

use crate::error::{Result, VroptError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    ZeroSarah,
    Sarah,
    Gd,
    DZeroSarah,
    DSarah,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ZeroSarah => "zerosarah",
            Algorithm::Sarah => "sarah",
            Algorithm::Gd => "gd",
            Algorithm::DZeroSarah => "d-zerosarah",
            Algorithm::DSarah => "d-sarah",
        }
    }

    pub fn is_distributed(self) -> bool {
        matches!(self, Algorithm::DZeroSarah | Algorithm::DSarah)
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "zerosarah" => Algorithm::ZeroSarah,
            "sarah" => Algorithm::Sarah,
            "gd" => Algorithm::Gd,
            "d-zerosarah" => Algorithm::DZeroSarah,
            "d-sarah" => Algorithm::DSarah,
            _ => return Err(format!("unknown algorithm `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticFamily {
    Regression,
    Classification,
    /// Random quadratic components with exactly known `L` and `f*`.
    Quadratic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Named(String),
    File(PathBuf),
    Synthetic { family: SyntheticFamily, n: usize, d: usize, noise: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveChoice {
    /// Robust regression for real-valued targets, sigmoid-squared for labels.
    Auto,
    Robust,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Iterations(u64),
    PaperCount(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub objective: ObjectiveChoice,
    /// Sigmoid-squared regularizer; defaults to `0.15405e-6 max ||a_i||^2`.
    pub objective_lambda: Option<f64>,
    pub algorithm: Algorithm,
    pub preset: Preset,
    pub eta: Option<f64>,
    pub scale: Option<f64>,
    pub epsilon: Option<f64>,
    pub g0: Option<f64>,
    pub batch0: Option<usize>,
    pub batch: Option<usize>,
    pub clients0: Option<usize>,
    pub clients: Option<usize>,
    pub schedule_lambda: Option<f64>,
    pub epoch_len: Option<usize>,
    pub n_clients: Option<usize>,
    pub budget: Budget,
    pub cadence: Option<u64>,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    pub report_bound: bool,
    pub label: Option<String>,
    pub output_csv: Option<PathBuf>,
    pub output_svg: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Every accepted key with a one-line description.
    pub const KEYS: &'static [(&'static str, &'static str)] = &[
        ("dataset", "registered dataset name, read from $VROPT_DATA_DIR"),
        ("dataset_file", "path to a LIBSVM file"),
        ("synthetic", "regression | classification | quadratic"),
        ("synthetic_n", "synthetic sample count"),
        ("synthetic_d", "synthetic dimension"),
        ("synthetic_noise", "synthetic noise scale (default 0.1)"),
        ("synthetic_seed", "synthetic generator seed (default: seed)"),
        ("objective", "auto | robust | sigmoid (default auto)"),
        ("objective_lambda", "sigmoid regularizer"),
        ("algorithm", "zerosarah | sarah | gd | d-zerosarah | d-sarah"),
        ("preset", "cor1 | cor2 | cor3 | custom (d-suffixed names accepted; default cor2)"),
        ("eta", "stepsize override"),
        ("scale", "multiplier on the theoretical stepsize, e.g. 1, 3, 9"),
        ("epsilon", "target accuracy for cor3"),
        ("g0", "G0 for cor3 (computed at x0 when omitted)"),
        ("batch0", "custom: first minibatch"),
        ("batch", "custom: minibatch; sarah / d-sarah: minibatch"),
        ("clients0", "custom distributed: first client sample"),
        ("clients", "custom distributed / d-sarah: client sample"),
        ("schedule_lambda", "custom: mixing weight for k >= 1"),
        ("epoch_len", "sarah / d-sarah epoch length"),
        ("n_clients", "number of simulated clients"),
        ("max_iterations", "budget in iterations or rounds"),
        ("max_paper_count", "budget in sum of minibatch sizes"),
        ("cadence", "iterations between measurements"),
        ("seed", "master seed (default 0)"),
        ("x0", "`zeros` or comma-separated coordinates"),
        ("report_bound", "true | false"),
        ("label", "legend entry for plots"),
        ("output_csv", "trace destination (stdout when omitted)"),
        ("output_svg", "plot destination"),
    ];

    /// Minimal config: everything else at its default.
    pub fn new(dataset: DatasetSource, algorithm: Algorithm, budget: Budget) -> Self {
        ExperimentConfig {
            dataset,
            objective: ObjectiveChoice::Auto,
            objective_lambda: None,
            algorithm,
            preset: Preset::Cor2,
            eta: None,
            scale: None,
            epsilon: None,
            g0: None,
            batch0: None,
            batch: None,
            clients0: None,
            clients: None,
            schedule_lambda: None,
            epoch_len: None,
            n_clients: None,
            budget,
            cadence: None,
            seed: 0,
            x0: None,
            report_bound: false,
            label: None,
            output_csv: None,
            output_svg: None,
        }
    }

    /// Reads a config file; relative paths inside it resolve against its
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| VroptError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DatasetSource::File(p) = &mut cfg.dataset {
            resolve(p);
        }
        cfg.output_csv.as_mut().map(resolve);
        cfg.output_svg.as_mut().map(resolve);
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| VroptError::Config { line, msg: format!("expected `key = value`, got `{content}`") })?;
            let key = key.trim();
            if key.is_empty() || !key.bytes().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == b'_') {
                return Err(VroptError::Config { line, msg: format!("bad key `{key}`") });
            }
            if !Self::KEYS.iter().any(|(k, _)| *k == key) {
                return Err(VroptError::Config { line, msg: format!("unknown key `{key}`") });
            }
            if entries.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(VroptError::Config { line, msg: format!("duplicate key `{key}`") });
            }
        }
        Entries(entries).build()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(VroptError::InvalidConfig(msg.to_string()));
        match self.budget {
            Budget::Iterations(0) | Budget::PaperCount(0) => return bad("budget must be > 0"),
            _ => {}
        }
        if self.cadence == Some(0) {
            return bad("cadence must be >= 1");
        }
        if self.eta.is_some() && self.scale.is_some() {
            return bad("eta and scale are exclusive");
        }
        if self.algorithm.is_distributed() {
            match self.n_clients {
                None => return bad("distributed algorithms need n_clients"),
                Some(0) => return bad("n_clients must be >= 1"),
                _ => {}
            }
        } else if self.n_clients.is_some() || self.clients.is_some() || self.clients0.is_some() {
            return bad("client settings apply to distributed algorithms only");
        }
        let custom_keys = self.batch0.is_some() || self.schedule_lambda.is_some() || self.clients0.is_some();
        match self.algorithm {
            Algorithm::ZeroSarah | Algorithm::DZeroSarah => {
                if self.preset == Preset::Custom {
                    if self.eta.is_none()
                        || self.batch0.is_none()
                        || self.batch.is_none()
                        || self.schedule_lambda.is_none()
                    {
                        return bad("custom preset needs eta, batch0, batch and schedule_lambda");
                    }
                    if self.algorithm == Algorithm::DZeroSarah && (self.clients0.is_none() || self.clients.is_none()) {
                        return bad("custom distributed preset needs clients0 and clients");
                    }
                } else if custom_keys || self.batch.is_some() || self.clients.is_some() {
                    return bad("batch, clients and schedule_lambda overrides need preset = custom");
                }
                if self.epoch_len.is_some() {
                    return bad("epoch_len applies to sarah / d-sarah only");
                }
            }
            Algorithm::Sarah | Algorithm::DSarah | Algorithm::Gd => {
                if custom_keys || self.preset == Preset::Custom {
                    return bad("batch0, clients0, schedule_lambda and preset = custom apply to zerosarah only");
                }
                if self.algorithm == Algorithm::Gd && (self.batch.is_some() || self.epoch_len.is_some()) {
                    return bad("gd takes no minibatch or epoch settings");
                }
            }
        }
        if self.report_bound && !matches!(self.algorithm, Algorithm::ZeroSarah | Algorithm::DZeroSarah) {
            return bad("report_bound is available for zerosarah and d-zerosarah");
        }
        Ok(())
    }
}

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.0.remove(key)
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| VroptError::Config { line, msg: format!("{key}: {e}") }),
        }
    }

    fn build(mut self) -> Result<ExperimentConfig> {
        let seed = self.parsed::<u64>("seed")?.unwrap_or(0);
        let named = self.take("dataset");
        let file = self.take("dataset_file");
        let synthetic = self.take("synthetic");
        let sources = [named.is_some(), file.is_some(), synthetic.is_some()].iter().filter(|b| **b).count();
        if sources != 1 {
            return Err(VroptError::InvalidConfig(
                "exactly one of dataset, dataset_file, synthetic is required".into(),
            ));
        }
        let synth_n = self.parsed::<usize>("synthetic_n")?;
        let synth_d = self.parsed::<usize>("synthetic_d")?;
        let synth_noise = self.parsed::<f64>("synthetic_noise")?;
        let synth_seed = self.parsed::<u64>("synthetic_seed")?;
        let dataset = if let Some((_, name)) = named {
            DatasetSource::Named(name)
        } else if let Some((_, path)) = file {
            DatasetSource::File(PathBuf::from(path))
        } else {
            let (line, family) = synthetic.expect("one source is present");
            let family = match family.as_str() {
                "regression" => SyntheticFamily::Regression,
                "classification" => SyntheticFamily::Classification,
                "quadratic" => SyntheticFamily::Quadratic,
                other => return Err(VroptError::Config { line, msg: format!("unknown synthetic family `{other}`") }),
            };
            let (Some(n), Some(d)) = (synth_n, synth_d) else {
                return Err(VroptError::InvalidConfig("synthetic data needs synthetic_n and synthetic_d".into()));
            };
            DatasetSource::Synthetic {
                family,
                n,
                d,
                noise: synth_noise.unwrap_or(0.1),
                seed: synth_seed.unwrap_or(seed),
            }
        };
        if !matches!(dataset, DatasetSource::Synthetic { .. })
            && (synth_n.is_some() || synth_d.is_some() || synth_noise.is_some() || synth_seed.is_some())
        {
            return Err(VroptError::InvalidConfig("synthetic_* keys need synthetic".into()));
        }

        let algorithm = match self.take("algorithm") {
            None => return Err(VroptError::InvalidConfig("algorithm is required".into())),
            Some((line, v)) => v.parse().map_err(|msg| VroptError::Config { line, msg })?,
        };
        let iterations = self.parsed::<u64>("max_iterations")?;
        let paper = self.parsed::<u64>("max_paper_count")?;
        let budget = match (iterations, paper) {
            (Some(k), None) => Budget::Iterations(k),
            (None, Some(p)) => Budget::PaperCount(p),
            _ => {
                return Err(VroptError::InvalidConfig(
                    "exactly one of max_iterations, max_paper_count is required".into(),
                ))
            }
        };
        let mut cfg = ExperimentConfig::new(dataset, algorithm, budget);
        cfg.seed = seed;
        if let Some((line, v)) = self.take("objective") {
            cfg.objective = match v.as_str() {
                "auto" => ObjectiveChoice::Auto,
                "robust" => ObjectiveChoice::Robust,
                "sigmoid" => ObjectiveChoice::Sigmoid,
                other => return Err(VroptError::Config { line, msg: format!("unknown objective `{other}`") }),
            };
        }
        cfg.objective_lambda = self.parsed("objective_lambda")?;
        if let Some((line, v)) = self.take("preset") {
            cfg.preset = v.parse().map_err(|e: vropt_core::Error| VroptError::Config { line, msg: e.to_string() })?;
        }
        cfg.eta = self.parsed("eta")?;
        cfg.scale = self.parsed("scale")?;
        cfg.epsilon = self.parsed("epsilon")?;
        cfg.g0 = self.parsed("g0")?;
        cfg.batch0 = self.parsed("batch0")?;
        cfg.batch = self.parsed("batch")?;
        cfg.clients0 = self.parsed("clients0")?;
        cfg.clients = self.parsed("clients")?;
        cfg.schedule_lambda = self.parsed("schedule_lambda")?;
        cfg.epoch_len = self.parsed("epoch_len")?;
        cfg.n_clients = self.parsed("n_clients")?;
        cfg.cadence = self.parsed("cadence")?;
        cfg.report_bound = self.parsed("report_bound")?.unwrap_or(false);
        cfg.label = self.take("label").map(|(_, v)| v);
        cfg.output_csv = self.take("output_csv").map(|(_, v)| PathBuf::from(v));
        cfg.output_svg = self.take("output_svg").map(|(_, v)| PathBuf::from(v));
        if let Some((line, v)) = self.take("x0") {
            if v != "zeros" {
                let coords = v
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| VroptError::Config { line, msg: format!("x0: {e}") })?;
                cfg.x0 = Some(coords);
            }
        }
        debug_assert!(self.0.is_empty(), "unhandled keys: {:?}", self.0.keys());
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
# robust regression on a mg-shaped fixture
synthetic = regression
synthetic_n = 100
synthetic_d = 6
algorithm = zerosarah   # the default preset is cor2
eta = 0.1
max_paper_count = 5000
seed = 3
";

    #[test]
    fn parses_basic_config() {
        let cfg = ExperimentConfig::parse(BASIC).unwrap();
        assert_eq!(cfg.algorithm, Algorithm::ZeroSarah);
        assert_eq!(cfg.budget, Budget::PaperCount(5000));
        assert_eq!(cfg.eta, Some(0.1));
        assert_eq!(cfg.preset, Preset::Cor2);
        assert_eq!(
            cfg.dataset,
            DatasetSource::Synthetic { family: SyntheticFamily::Regression, n: 100, d: 6, noise: 0.1, seed: 3 }
        );
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let next = BASIC.lines().count() + 1;
        let err = ExperimentConfig::parse(&format!("{BASIC}colour = red\n")).unwrap_err();
        assert!(matches!(err, VroptError::Config { line, .. } if line == next), "{err}");
        let err = ExperimentConfig::parse(&format!("{BASIC}seed = 4\n")).unwrap_err();
        assert!(matches!(err, VroptError::Config { line, .. } if line == next), "{err}");
    }

    #[test]
    fn requires_exactly_one_source_and_budget() {
        let two = BASIC.replace("synthetic = regression", "synthetic = regression\ndataset = mg");
        assert!(ExperimentConfig::parse(&two).is_err());
        let none = BASIC.replace("max_paper_count = 5000", "");
        assert!(ExperimentConfig::parse(&none).is_err());
        let zero = BASIC.replace("5000", "0");
        assert!(ExperimentConfig::parse(&zero).is_err());
    }

    #[test]
    fn invalid_combinations() {
        assert!(ExperimentConfig::parse(&format!("{BASIC}batch = 3\n")).is_err());
        assert!(ExperimentConfig::parse(&format!("{BASIC}n_clients = 3\n")).is_err());
        assert!(ExperimentConfig::parse(&format!("{BASIC}scale = 3\n")).is_err());
        assert!(ExperimentConfig::parse(&format!("{BASIC}cadence = 0\n")).is_err());
        let dist = BASIC.replace("algorithm = zerosarah", "algorithm = d-zerosarah");
        assert!(ExperimentConfig::parse(&dist).is_err());
        assert!(ExperimentConfig::parse(&format!("{dist}n_clients = 4\n")).is_ok());
    }

    #[test]
    fn custom_schedule_needs_all_parts() {
        let custom = format!("{BASIC}preset = custom\nbatch0 = 100\nbatch = 10\n");
        assert!(ExperimentConfig::parse(&custom).is_err());
        let cfg = ExperimentConfig::parse(&format!("{custom}schedule_lambda = 1\n")).unwrap();
        assert_eq!(cfg.schedule_lambda, Some(1.0));
    }

    #[test]
    fn explicit_start_point() {
        let cfg = ExperimentConfig::parse(&format!("{BASIC}x0 = 1, -2.5,0\n")).unwrap();
        assert_eq!(cfg.x0, Some(vec![1.0, -2.5, 0.0]));
        assert!(ExperimentConfig::parse(&format!("{BASIC}x0 = 1,a\n")).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(&path, "dataset_file = data/x.txt\nalgorithm = gd\nmax_iterations = 3\noutput_csv = out.csv\n")
            .unwrap();
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(cfg.dataset, DatasetSource::File(dir.path().join("data/x.txt")));
        assert_eq!(cfg.output_csv, Some(dir.path().join("out.csv")));
    }
}
