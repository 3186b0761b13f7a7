//! Experiment configuration: a flat `key = value` text format with
//! section-prefixed keys, plus command-line overrides.
//!
//! Unknown keys, malformed values, and bound violations are reported with
//! the file line they came from. `#` starts a comment; blank lines are
//! ignored. The same `key=value` grammar backs `--set` overrides and
//! `--sweep` values.

use std::fmt;
use std::path::PathBuf;

use dobench_core::clustering::CfcConfig;
use dobench_core::db::DatabaseGenConfig;
use dobench_core::protocols::{DependencyConfig, RegionalConfig, RegionalKind};
use dobench_core::regions::AssignMethod;
use dobench_core::store::StoreConfig;

use crate::CliError;

/// Which operation every transaction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpChoice {
    SimpleTraversal,
    SetTraversal,
    HierarchicalTraversal,
    StochasticTraversal,
    RandomAccess,
    Scan,
    RangeLookup,
    AttributeUpdate,
    SequentialUpdate,
    ObjectInsert,
    ObjectDelete,
    ClassInsert,
    ClassDelete,
}

impl fmt::Display for OpChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            OpChoice::SimpleTraversal => "simple_traversal",
            OpChoice::SetTraversal => "set_traversal",
            OpChoice::HierarchicalTraversal => "hierarchical_traversal",
            OpChoice::StochasticTraversal => "stochastic_traversal",
            OpChoice::RandomAccess => "random_access",
            OpChoice::Scan => "scan",
            OpChoice::RangeLookup => "range_lookup",
            OpChoice::AttributeUpdate => "attribute_update",
            OpChoice::SequentialUpdate => "sequential_update",
            OpChoice::ObjectInsert => "object_insert",
            OpChoice::ObjectDelete => "object_delete",
            OpChoice::ClassInsert => "class_insert",
            OpChoice::ClassDelete => "class_delete",
        };
        f.write_str(name)
    }
}

/// Clustering policy selection.
#[derive(Debug, Clone, PartialEq)]
pub enum ClusteringChoice {
    None,
    Cfc(CfcConfig),
}

/// Workload section: operation shape plus the root-selection protocols.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    pub transactions: u64,
    pub operation: OpChoice,
    pub depth: u32,
    pub reversed: bool,
    pub ref_type: u8,
    pub random_count: u32,
    pub test_attributes: u32,
    pub update_count: u32,
    pub regional: RegionalConfig,
    pub dependency: DependencyConfig,
    pub integrated: bool,
}

/// A full experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub database: DatabaseGenConfig,
    pub store: StoreConfig,
    pub workload: WorkloadConfig,
    pub clustering: ClusteringChoice,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output: None,
            database: DatabaseGenConfig::default(),
            store: StoreConfig::default(),
            workload: WorkloadConfig {
                transactions: 10_000,
                operation: OpChoice::SimpleTraversal,
                depth: 2,
                reversed: false,
                ref_type: 0,
                random_count: 25,
                test_attributes: 1,
                update_count: 25,
                regional: RegionalConfig {
                    kind: RegionalKind::MovingWindow,
                    h: 0.001,
                    hr_size: 0.003,
                    lowest_weight: 0.0006,
                    highest_weight: 0.80,
                    assign: AssignMethod::Random,
                },
                dependency: DependencyConfig::default(),
                integrated: false,
            },
            clustering: ClusteringChoice::None,
        }
    }
}

/// Builder tracking which defaults were overridden.
#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    config: ExperimentConfig,
    cfc: CfcConfig,
    policy_is_cfc: bool,
    clocref_set: bool,
    olocref_set: bool,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        ConfigBuilder {
            config: ExperimentConfig::default(),
            cfc: CfcConfig::default(),
            policy_is_cfc: false,
            clocref_set: false,
            olocref_set: false,
        }
    }
}

fn parse<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("expected {what}, got `{value}`"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(format!("expected a boolean, got `{other}`")),
    }
}

impl ConfigBuilder {
    /// Applies one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let c = &mut self.config;
        match key {
            "seed" => c.seed = parse(value, "an unsigned integer")?,
            "output" => c.output = Some(PathBuf::from(value.trim())),

            "database.classes" => c.database.nc = parse(value, "a class count")?,
            "database.max_refs" => c.database.maxnref = parse(value, "a reference count")?,
            "database.base_size" => c.database.basesize = parse(value, "a byte size")?,
            "database.objects" => c.database.no = parse(value, "an object count")?,
            "database.ref_types" => c.database.nreft = parse(value, "a type count")?,
            "database.attributes" => c.database.attrange = parse(value, "an attribute count")?,
            "database.class_locality" => {
                c.database.clocref = parse(value, "a class window")?;
                self.clocref_set = true;
            }
            "database.object_locality" => {
                c.database.olocref = parse(value, "an object window")?;
                self.olocref_set = true;
            }
            "database.size_factor_max" => {
                c.database.size_factor_max = parse(value, "a size factor")?
            }
            "database.size_skew" => c.database.size_skew = parse(value, "a skew exponent")?,

            "store.page_size" => c.store.page_size = parse(value, "a byte size")?,
            "store.cache_size" => c.store.cache_size = parse(value, "a byte size")?,

            "workload.transactions" => {
                c.workload.transactions = parse(value, "a transaction count")?
            }
            "workload.operation" => {
                c.workload.operation = match value.trim() {
                    "simple_traversal" => OpChoice::SimpleTraversal,
                    "set_traversal" => OpChoice::SetTraversal,
                    "hierarchical_traversal" => OpChoice::HierarchicalTraversal,
                    "stochastic_traversal" => OpChoice::StochasticTraversal,
                    "random_access" => OpChoice::RandomAccess,
                    "scan" => OpChoice::Scan,
                    "range_lookup" => OpChoice::RangeLookup,
                    "attribute_update" => OpChoice::AttributeUpdate,
                    "sequential_update" => OpChoice::SequentialUpdate,
                    "object_insert" => OpChoice::ObjectInsert,
                    "object_delete" => OpChoice::ObjectDelete,
                    "class_insert" => OpChoice::ClassInsert,
                    "class_delete" => OpChoice::ClassDelete,
                    other => return Err(format!("unknown operation `{other}`")),
                };
            }
            "workload.depth" => c.workload.depth = parse(value, "a depth")?,
            "workload.reversed" => c.workload.reversed = parse_bool(value)?,
            "workload.ref_type" => c.workload.ref_type = parse(value, "a reference type")?,
            "workload.random_count" => c.workload.random_count = parse(value, "a count")?,
            "workload.test_attributes" => {
                c.workload.test_attributes = parse(value, "a count")?
            }
            "workload.update_count" => c.workload.update_count = parse(value, "a count")?,
            "workload.regional" => {
                c.workload.regional.kind = match value.trim() {
                    "moving_window" => RegionalKind::MovingWindow,
                    "gradual_moving_window" => {
                        let step = match c.workload.regional.kind {
                            RegionalKind::GradualMovingWindow { weight_step } => weight_step,
                            _ => 0.02,
                        };
                        RegionalKind::GradualMovingWindow { weight_step: step }
                    }
                    "cycles" => RegionalKind::Cycles,
                    "static" => RegionalKind::Static,
                    "uniform" => RegionalKind::Uniform,
                    other => return Err(format!("unknown regional protocol `{other}`")),
                };
            }
            "workload.h" => c.workload.regional.h = parse(value, "a rate in (0, 1]")?,
            "workload.hr_size" => c.workload.regional.hr_size = parse(value, "a fraction")?,
            "workload.highest_weight" => {
                c.workload.regional.highest_weight = parse(value, "a weight")?
            }
            "workload.lowest_weight" => {
                c.workload.regional.lowest_weight = parse(value, "a weight")?
            }
            "workload.weight_step" => {
                let step = parse(value, "a weight step")?;
                c.workload.regional.kind = RegionalKind::GradualMovingWindow { weight_step: step };
            }
            "workload.assign" => {
                c.workload.regional.assign = match value.trim() {
                    "random" => AssignMethod::Random,
                    "by_class" => AssignMethod::ByClass,
                    other => return Err(format!("unknown assignment method `{other}`")),
                };
            }
            "workload.integrated" => c.workload.integrated = parse_bool(value)?,

            "dependency.r" => c.workload.dependency.r = parse(value, "a phase length")?,
            "dependency.d" => c.workload.dependency.d = parse(value, "a reference count")?,
            "dependency.c" => c.workload.dependency.c = parse(value, "a fraction")?,
            "dependency.u" => c.workload.dependency.u = parse(value, "a fraction")?,
            "dependency.random_prob" => {
                c.workload.dependency.random_prob = parse(value, "a probability")?
            }
            "dependency.sref_prob" => {
                c.workload.dependency.sref_prob = parse(value, "a probability")?
            }
            "dependency.dref_prob" => {
                c.workload.dependency.dref_prob = parse(value, "a probability")?
            }
            "dependency.traversed_prob" => {
                c.workload.dependency.traversed_prob = parse(value, "a probability")?
            }
            "dependency.class_prob" => {
                c.workload.dependency.class_prob = parse(value, "a probability")?
            }

            "clustering.policy" => match value.trim() {
                "none" => self.policy_is_cfc = false,
                "cfc" => self.policy_is_cfc = true,
                other => return Err(format!("unknown clustering policy `{other}`")),
            },
            "clustering.stat_window" => self.cfc.stat_window = parse(value, "a window")?,
            "clustering.trigger_period" => {
                self.cfc.trigger_period = parse(value, "a period")?
            }
            "clustering.min_heat" => self.cfc.min_heat = parse(value, "a count")?,
            "clustering.badness_threshold" => {
                self.cfc.badness_threshold = parse(value, "a fraction")?
            }
            "clustering.max_pages_per_round" => {
                self.cfc.max_pages_per_round = parse(value, "a page count")?
            }

            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Resolves derived defaults and validates every section.
    pub fn finalize(mut self) -> Result<ExperimentConfig, String> {
        if !self.clocref_set {
            self.config.database.clocref = self.config.database.nc;
        }
        if !self.olocref_set {
            self.config.database.olocref = self.config.database.no;
        }
        self.config.database.drefs_per_object = self.config.workload.dependency.d;
        self.config.clustering = if self.policy_is_cfc {
            if self.cfc.trigger_period == 0 {
                return Err("clustering.trigger_period must be > 0".into());
            }
            if self.cfc.stat_window == 0 {
                return Err("clustering.stat_window must be > 0".into());
            }
            if !(0.0..=1.0).contains(&self.cfc.badness_threshold) {
                return Err("clustering.badness_threshold must be in [0, 1]".into());
            }
            ClusteringChoice::Cfc(self.cfc.clone())
        } else {
            ClusteringChoice::None
        };
        if self.config.workload.transactions < 1 {
            return Err("workload.transactions must be >= 1".into());
        }
        self.config.database.validate().map_err(|e| e.to_string())?;
        self.config.store.validate().map_err(|e| e.to_string())?;
        self.config
            .workload
            .regional
            .validate()
            .map_err(|e| e.to_string())?;
        self.config
            .workload
            .dependency
            .validate()
            .map_err(|e| e.to_string())?;
        Ok(self.config)
    }
}

/// Splits a `key=value` token.
pub fn split_assignment(token: &str) -> Result<(&str, &str), String> {
    match token.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim(), v)),
        _ => Err(format!("expected key=value, got `{token}`")),
    }
}

/// Parses config text, then applies `sets` overrides in order.
pub fn parse_config(
    text: &str,
    path: &str,
    sets: &[String],
    seed_override: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let mut builder = ConfigBuilder::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = split_assignment(line).map_err(|message| CliError::Config {
            path: path.to_string(),
            line: idx + 1,
            message,
        })?;
        builder
            .apply(key, value)
            .map_err(|message| CliError::Config {
                path: path.to_string(),
                line: idx + 1,
                message,
            })?;
    }
    for token in sets {
        let (key, value) = split_assignment(token).map_err(|message| CliError::Config {
            path: "--set".to_string(),
            line: 0,
            message,
        })?;
        builder
            .apply(key, value)
            .map_err(|message| CliError::Config {
                path: format!("--set {key}"),
                line: 0,
                message,
            })?;
    }
    if let Some(seed) = seed_override {
        builder.config.seed = seed;
    }
    builder.finalize().map_err(|message| CliError::Config {
        path: path.to_string(),
        line: 0,
        message,
    })
}
