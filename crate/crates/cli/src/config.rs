//! Experiment configuration: built-in defaults, an optional TOML file, and
//! command-line flags, in increasing order of precedence.
//!
//! ```toml
//! out = "results"
//! modes = ["static", "focal"]
//! seeds = "1..20"
//!
//! [synthesis]
//! tau = 1.0
//! temperature = 10.0
//!
//! [rubric]
//! s_max = 10
//! criteria = [
//!   { id = "hard", kind = "principle", base_weight = 0.5 },
//!   { id = "easy", kind = "principle", base_weight = 0.5 },
//! ]
//!
//! [sim]
//! steps = 200
//!
//! [verify]
//! seed = 7
//! mc_samples = 1000000
//! ```
//!
//! `[rubric]` may instead be `{ file = "rubric.json" }`, a JSON document
//! with the same `s_max` and `criteria` fields. Relative paths are resolved
//! against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use focal_core::rubric::{Criterion, Rubric, SynthesisConfig, DEFAULT_S_MAX};
use focal_core::sim::{Mode, SimSpec};
use focal_core::verify::VerifyOptions;
use serde::Deserialize;

use crate::args::{CommonArgs, SynthesisArgs};
use crate::seeds::{SeedList, SeedSpec};

pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_VERIFY_SEED: u64 = 7;
pub const DEFAULT_SEEDS: &str = "1..20";

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RubricSource {
    File {
        file: PathBuf,
    },
    Inline {
        #[serde(default)]
        s_max: Option<f64>,
        criteria: Vec<Criterion>,
    },
}

#[derive(Debug, Clone, Deserialize)]
struct RubricDocument {
    #[serde(default)]
    s_max: Option<f64>,
    criteria: Vec<Criterion>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct VerifySection {
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub options: VerifyOptions,
}

/// The on-disk config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub out: Option<PathBuf>,
    pub modes: Option<Vec<Mode>>,
    pub seeds: Option<SeedSpec>,
    pub synthesis: SynthesisConfig,
    pub rubric: Option<RubricSource>,
    pub sim: Option<SimSpec>,
    pub verify: VerifySection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ConfigFile =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(out) = &cfg.out {
            cfg.out = Some(base.join(out));
        }
        if let Some(RubricSource::File { file }) = &cfg.rubric {
            cfg.rubric = Some(RubricSource::File {
                file: base.join(file),
            });
        }
        Ok(cfg)
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub synthesis: SynthesisConfig,
    pub rubric: Option<Rubric>,
    pub modes: Vec<Mode>,
    pub sim: SimSpec,
    pub seeds: SeedList,
    pub out: PathBuf,
    pub json_report: bool,
    pub verify_seed: u64,
    pub verify: VerifyOptions,
}

fn load_rubric(source: &RubricSource) -> Result<Rubric> {
    let (s_max, criteria) = match source {
        RubricSource::Inline { s_max, criteria } => (*s_max, criteria.clone()),
        RubricSource::File { file } => {
            let text = fs::read_to_string(file)
                .with_context(|| format!("reading rubric {}", file.display()))?;
            let doc: RubricDocument = serde_json::from_str(&text)
                .with_context(|| format!("parsing rubric {}", file.display()))?;
            (doc.s_max, doc.criteria)
        }
    };
    Ok(Rubric::new(criteria, s_max.unwrap_or(DEFAULT_S_MAX))?)
}

impl ExperimentConfig {
    /// Merges defaults, the `--config` file and the flags.
    pub fn resolve(common: &CommonArgs, flags: &SynthesisArgs) -> Result<Self> {
        let file = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };

        let mut synthesis = file.synthesis;
        if let Some(v) = flags.tau {
            synthesis.tau = v;
        }
        if let Some(v) = flags.temp {
            synthesis.temperature = v;
        }
        if let Some(v) = flags.gamma {
            synthesis.gamma = v;
        }
        if let Some(v) = flags.epsilon {
            synthesis.epsilon = v;
        }
        synthesis.validate().context("invalid synthesis parameters")?;

        let seeds = match &file.seeds {
            Some(spec) => spec.resolve().context("invalid seeds in config")?,
            None => DEFAULT_SEEDS.parse().expect("default seeds parse"),
        };
        let modes = match file.modes {
            Some(m) if m.is_empty() => bail!("config lists no modes"),
            Some(m) => m,
            None => vec![Mode::Static, Mode::Focal],
        };

        Ok(Self {
            synthesis,
            rubric: file.rubric.as_ref().map(load_rubric).transpose()?,
            modes,
            sim: file.sim.unwrap_or_default(),
            seeds,
            out: common
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            json_report: common.json_report,
            verify_seed: file.verify.seed.unwrap_or(DEFAULT_VERIFY_SEED),
            verify: file.verify.options,
        })
    }

    /// The rubric for simulation runs: the configured one, or equal weights
    /// over criteria named after the default difficulty profile.
    pub fn sim_rubric(&self) -> Result<Rubric> {
        let k = self.sim.num_criteria();
        if let Some(r) = &self.rubric {
            if r.len() != k {
                bail!(
                    "rubric has {} criteria but the simulator profile has {k}",
                    r.len()
                );
            }
            return Ok(r.clone());
        }
        let default_profile = SimSpec::default().profile;
        if self.sim.profile == default_profile {
            let w = 1.0 / k as f64;
            return Ok(Rubric::new(
                ["hard", "medium", "easy"]
                    .iter()
                    .map(|id| Criterion::principle(*id, w))
                    .collect(),
                DEFAULT_S_MAX,
            )?);
        }
        Ok(Rubric::uniform(k, DEFAULT_S_MAX)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        fs::write(
            &path,
            "out = \"res\"\nseeds = [3, 4]\n[synthesis]\ntau = 2.0\ntemperature = 5.0\n",
        )
        .unwrap();
        let common = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        let flags = SynthesisArgs {
            temp: Some(7.0),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(&common, &flags).unwrap();
        assert_eq!(cfg.synthesis.tau, 2.0);
        assert_eq!(cfg.synthesis.temperature, 7.0);
        assert_eq!(cfg.synthesis.gamma, 2.0);
        assert_eq!(cfg.seeds.as_slice(), &[3, 4]);
        assert_eq!(cfg.out, dir.path().join("res"));

        let cfg = ExperimentConfig::resolve(&CommonArgs::default(), &SynthesisArgs::default()).unwrap();
        assert_eq!(cfg.synthesis, SynthesisConfig::default());
        assert_eq!(cfg.seeds.as_slice().len(), 20);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        fs::write(&path, "tua = 1\n").unwrap();
        let common = CommonArgs {
            config: Some(path.clone()),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(&common, &SynthesisArgs::default()).is_err());

        fs::write(&path, "[synthesis]\ngamma = -1.0\n").unwrap();
        assert!(ExperimentConfig::resolve(&common, &SynthesisArgs::default()).is_err());
    }

    #[test]
    fn rubric_from_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("r.json"),
            r#"{"criteria": [{"id": "a", "kind": "principle", "base_weight": 1.0}]}"#,
        )
        .unwrap();
        let path = dir.path().join("exp.toml");
        fs::write(&path, "[rubric]\nfile = \"r.json\"\n").unwrap();
        let common = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(&common, &SynthesisArgs::default()).unwrap();
        assert_eq!(cfg.rubric.unwrap().len(), 1);
    }
}
