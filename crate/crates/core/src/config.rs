//! Run configuration: an INI-style file with `[section]` headers and
//! `key = value` lines. Every key can be overridden from the command line
//! before the typed configuration is built.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::generators::GraphModel;
use crate::harness::{ExperimentConfig, OracleSource};
use crate::samplers::{SampleConfig, SampleMethod};

/// Every key the configuration understands, as `section.key`.
pub const KNOWN_KEYS: &[&str] = &[
    "oracle.source",
    "oracle.path",
    "oracle.n",
    "oracle.p",
    "oracle.m",
    "oracle.k",
    "oracle.avg_degree",
    "oracle.max_cc",
    "oracle.target_cc",
    "sample.method",
    "sample.edge_fraction",
    "sample.tolerance",
    "sample.jump_prob",
    "policy.name",
    "policy.epsilon",
    "policy.decay",
    "learner.alpha",
    "learner.subsamples",
    "learner.lambda",
    "run.budget",
    "run.trials",
    "run.base_seed",
    "run.output_dir",
];

/// Flat `section.key -> value` map. Later writes win, so command-line
/// overrides are applied by writing on top of the parsed file.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::InvalidConfig(format!("unknown configuration key {:?}", key)));
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("key {} has unparseable value {:?}", key, raw))
            }),
        }
    }

    fn parsed_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::InvalidConfig(format!("missing required key {}", key)))
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(Error::InvalidConfig(format!(
                "key {} must be true or false, got {:?}",
                key, other
            ))),
        }
    }
}

/// Parses an INI-style file: `[section]` headers, `key = value` lines,
/// `#` comments, blank lines ignored. Keys must belong to a section.
pub fn parse_config_file(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut raw = RawConfig::default();
    let mut section: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fail = |msg: String| Error::ConfigParse {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(fail(format!("unterminated section header {:?}", line)));
            };
            let name = name.trim();
            if name.is_empty() {
                return Err(fail("empty section name".to_string()));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(fail(format!("expected key = value, got {:?}", line)));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(fail("empty key".to_string()));
        }
        let Some(section) = &section else {
            return Err(fail(format!("key {:?} appears before any [section]", key)));
        };
        let full = format!("{}.{}", section, key);
        raw.set(&full, value)
            .map_err(|_| fail(format!("unknown key {:?}", full)))?;
    }
    Ok(raw)
}

/// Fully resolved run: the oracle to probe, the experiment to run on it,
/// and where the CSV outputs go.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub oracle: OracleSource,
    pub experiment: ExperimentConfig,
    pub output_dir: PathBuf,
}

/// Reads the `oracle.*` keys into a source description.
pub fn build_oracle(raw: &RawConfig) -> Result<OracleSource> {
    let source: String = raw.required("oracle.source")?;
    match source.as_str() {
        "file" => {
            let path: String = raw.required("oracle.path")?;
            Ok(OracleSource::File(PathBuf::from(path)))
        }
        "er" => Ok(OracleSource::Model(GraphModel::Er {
            n: raw.required("oracle.n")?,
            p: raw.required("oracle.p")?,
        })),
        "ba" => Ok(OracleSource::Model(GraphModel::Ba {
            n: raw.required("oracle.n")?,
            m: raw.required("oracle.m")?,
        })),
        "kregular" => Ok(OracleSource::Model(GraphModel::KRegular {
            n: raw.required("oracle.n")?,
            k: raw.required("oracle.k")?,
        })),
        "bter" => Ok(OracleSource::Model(GraphModel::Bter {
            n: raw.required("oracle.n")?,
            avg_degree: raw.required("oracle.avg_degree")?,
            max_cc: raw.parsed_or("oracle.max_cc", 0.95)?,
            global_cc: raw.required("oracle.target_cc")?,
        })),
        other => Err(Error::InvalidConfig(format!(
            "oracle.source must be file, er, ba, kregular, or bter, got {:?}",
            other
        ))),
    }
}

fn build_sample(raw: &RawConfig) -> Result<SampleConfig> {
    let defaults = SampleConfig::default();
    let method = match raw.get("sample.method") {
        None | Some("induction") => SampleMethod::NodeInduction,
        Some("walk") => SampleMethod::RandomWalk,
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "sample.method must be induction or walk, got {:?}",
                other
            )))
        }
    };
    Ok(SampleConfig {
        method,
        edge_fraction: raw.parsed_or("sample.edge_fraction", defaults.edge_fraction)?,
        tolerance: raw.parsed_or("sample.tolerance", defaults.tolerance)?,
        jump_prob: raw.parsed_or("sample.jump_prob", defaults.jump_prob)?,
    })
}

/// Assembles the typed run description, applying defaults for absent keys.
pub fn build_run_spec(raw: &RawConfig) -> Result<RunSpec> {
    let defaults = ExperimentConfig::default();
    let experiment = ExperimentConfig {
        policy: raw.parsed_or("policy.name", defaults.policy)?,
        budget: raw.parsed_or("run.budget", defaults.budget)?,
        trials: raw.parsed_or("run.trials", defaults.trials)?,
        base_seed: raw.parsed_or("run.base_seed", defaults.base_seed)?,
        epsilon: raw.parsed_or("policy.epsilon", defaults.epsilon)?,
        epsilon_decay: raw.bool_or("policy.decay", defaults.epsilon_decay)?,
        alpha: raw.parsed_or("learner.alpha", defaults.alpha)?,
        k_policy: raw.parsed_or("learner.subsamples", defaults.k_policy)?,
        lambda: raw.parsed_or("learner.lambda", defaults.lambda)?,
        sample: build_sample(raw)?,
    };
    if experiment.budget == 0 {
        return Err(Error::InvalidConfig("run.budget must be positive".to_string()));
    }
    if experiment.trials == 0 {
        return Err(Error::InvalidConfig("run.trials must be positive".to_string()));
    }
    if !(0.0..=1.0).contains(&experiment.epsilon) {
        return Err(Error::InvalidConfig(format!(
            "policy.epsilon {} not in [0, 1]",
            experiment.epsilon
        )));
    }
    if experiment.alpha < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "learner.alpha {} must not be negative",
            experiment.alpha
        )));
    }
    if experiment.lambda < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "learner.lambda {} must not be negative",
            experiment.lambda
        )));
    }
    Ok(RunSpec {
        oracle: build_oracle(raw)?,
        experiment,
        output_dir: PathBuf::from(
            raw.get("run.output_dir").unwrap_or("out").to_string(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::KPolicy;
    use crate::policies::PolicyKind;
    use std::io::Write as _;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const FULL: &str = "\
# experiment on a preferential-attachment graph
[oracle]
source = ba
n = 2000
m = 3

[sample]
method = induction
edge_fraction = 0.05

[policy]
name = NOL_HTR
epsilon = 0.2
decay = false

[learner]
alpha = 0.02
subsamples = log2
lambda = 0.5

[run]
budget = 300
trials = 5
base_seed = 11
output_dir = results
";

    #[test]
    fn full_config_round_trip() {
        let f = write_temp(FULL);
        let raw = parse_config_file(f.path()).unwrap();
        let spec = build_run_spec(&raw).unwrap();
        assert_eq!(spec.oracle, OracleSource::Model(GraphModel::Ba { n: 2000, m: 3 }));
        assert_eq!(spec.experiment.policy, PolicyKind::NolHtr);
        assert_eq!(spec.experiment.epsilon, 0.2);
        assert!(!spec.experiment.epsilon_decay);
        assert_eq!(spec.experiment.alpha, 0.02);
        assert_eq!(spec.experiment.k_policy, KPolicy::Log2);
        assert_eq!(spec.experiment.lambda, 0.5);
        assert_eq!(spec.experiment.budget, 300);
        assert_eq!(spec.experiment.trials, 5);
        assert_eq!(spec.experiment.base_seed, 11);
        assert_eq!(spec.experiment.sample.edge_fraction, 0.05);
        assert_eq!(spec.output_dir, PathBuf::from("results"));
    }

    #[test]
    fn defaults_fill_absent_keys() {
        let f = write_temp("[oracle]\nsource = er\nn = 100\np = 0.05\n");
        let spec = build_run_spec(&parse_config_file(f.path()).unwrap()).unwrap();
        assert_eq!(spec.experiment.budget, 500);
        assert_eq!(spec.experiment.trials, 10);
        assert_eq!(spec.experiment.epsilon, 0.3);
        assert!(spec.experiment.epsilon_decay);
        assert_eq!(spec.experiment.k_policy, KPolicy::Ln);
        assert_eq!(spec.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn overrides_replace_file_values() {
        let f = write_temp(FULL);
        let mut raw = parse_config_file(f.path()).unwrap();
        raw.set("run.budget", "42").unwrap();
        raw.set("policy.name", "RANDOM").unwrap();
        let spec = build_run_spec(&raw).unwrap();
        assert_eq!(spec.experiment.budget, 42);
        assert_eq!(spec.experiment.policy, PolicyKind::Random);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let f = write_temp("[oracle]\nsource er\n");
        match parse_config_file(f.path()) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }

        let f = write_temp("budget = 5\n");
        assert!(matches!(
            parse_config_file(f.path()),
            Err(Error::ConfigParse { line: 1, .. })
        ));

        let f = write_temp("[oracle\nsource = er\n");
        assert!(matches!(
            parse_config_file(f.path()),
            Err(Error::ConfigParse { line: 1, .. })
        ));

        let f = write_temp("[run]\nbudge = 5\n");
        assert!(matches!(
            parse_config_file(f.path()),
            Err(Error::ConfigParse { line: 2, .. })
        ));
    }

    #[test]
    fn unknown_override_key_rejected() {
        let mut raw = RawConfig::default();
        assert!(raw.set("run.bogus", "1").is_err());
        assert!(raw.set("run.budget", "1").is_ok());
    }

    #[test]
    fn missing_required_keys_are_named() {
        let f = write_temp("[oracle]\nsource = ba\nn = 10\n");
        let err = build_run_spec(&parse_config_file(f.path()).unwrap()).unwrap_err();
        assert!(err.to_string().contains("oracle.m"), "{}", err);

        let f = write_temp("[sample]\nedge_fraction = 0.5\n");
        let err = build_run_spec(&parse_config_file(f.path()).unwrap()).unwrap_err();
        assert!(err.to_string().contains("oracle.source"), "{}", err);
    }

    #[test]
    fn validation_catches_out_of_range_values() {
        let base = "[oracle]\nsource = er\nn = 10\np = 0.1\n";
        for (key, value) in [
            ("policy.epsilon", "1.5"),
            ("learner.alpha", "-0.1"),
            ("learner.lambda", "-1"),
            ("run.budget", "0"),
            ("run.trials", "0"),
        ] {
            let f = write_temp(base);
            let mut raw = parse_config_file(f.path()).unwrap();
            raw.set(key, value).unwrap();
            assert!(build_run_spec(&raw).is_err(), "{}={} accepted", key, value);
        }
    }

    #[test]
    fn file_source_and_walk_method() {
        let f = write_temp(
            "[oracle]\nsource = file\npath = g.txt\n[sample]\nmethod = walk\njump_prob = 0.2\n",
        );
        let spec = build_run_spec(&parse_config_file(f.path()).unwrap()).unwrap();
        assert_eq!(spec.oracle, OracleSource::File(PathBuf::from("g.txt")));
        assert_eq!(spec.experiment.sample.method, SampleMethod::RandomWalk);
        assert_eq!(spec.experiment.sample.jump_prob, 0.2);
    }
}
