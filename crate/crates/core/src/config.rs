//! Hyperparameter configurations: a set of namespace-interaction terms plus
//! a learning rate, with a stable canonical string id.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Default learning rate for an initial configuration.
pub const DEFAULT_LEARNING_RATE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigError {
    /// An interaction pair names a namespace outside the base set.
    UnknownNamespace(String),
    /// A pair must cross two distinct namespaces.
    SelfInteraction(String),
    /// Learning rate must be a positive finite real.
    InvalidLearningRate,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownNamespace(ns) => {
                write!(f, "interaction references unknown namespace `{ns}`")
            }
            ConfigError::SelfInteraction(ns) => {
                write!(f, "interaction pairs namespace `{ns}` with itself")
            }
            ConfigError::InvalidLearningRate => write!(f, "learning rate must be positive finite"),
        }
    }
}

/// An unordered pair of distinct namespace ids, stored sorted so that
/// `{a,b}` and `{b,a}` compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct InteractionPair {
    first: String,
    second: String,
}

impl InteractionPair {
    pub fn new(u: impl Into<String>, v: impl Into<String>) -> Result<Self, ConfigError> {
        let u = u.into();
        let v = v.into();
        if u == v {
            return Err(ConfigError::SelfInteraction(u));
        }
        let (first, second) = if u < v { (u, v) } else { (v, u) };
        Ok(InteractionPair { first, second })
    }

    pub fn first(&self) -> &str {
        &self.first
    }

    pub fn second(&self) -> &str {
        &self.second
    }
}

impl fmt::Display for InteractionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*{}", self.first, self.second)
    }
}

/// Stable canonical key of a configuration, a deterministic function of the
/// interaction set and the learning rate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConfigId(String);

impl ConfigId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A hyperparameter configuration: base namespaces, a set of pairwise
/// namespace interactions over them, and a learning rate.
#[derive(Clone, Debug)]
pub struct Config {
    base_namespaces: BTreeSet<String>,
    interactions: BTreeSet<InteractionPair>,
    learning_rate: f64,
    id: ConfigId,
}

impl Config {
    pub fn new(
        base_namespaces: impl IntoIterator<Item = impl Into<String>>,
        interactions: impl IntoIterator<Item = InteractionPair>,
        learning_rate: f64,
    ) -> Result<Self, ConfigError> {
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(ConfigError::InvalidLearningRate);
        }
        let base_namespaces: BTreeSet<String> =
            base_namespaces.into_iter().map(Into::into).collect();
        let interactions: BTreeSet<InteractionPair> = interactions.into_iter().collect();
        for pair in &interactions {
            for ns in [pair.first(), pair.second()] {
                if !base_namespaces.contains(ns) {
                    return Err(ConfigError::UnknownNamespace(ns.to_string()));
                }
            }
        }
        let id = Self::canonical_id(&interactions, learning_rate);
        Ok(Config {
            base_namespaces,
            interactions,
            learning_rate,
            id,
        })
    }

    /// Plain configuration: no interactions, default learning rate.
    pub fn plain(base_namespaces: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Config::new(
            base_namespaces,
            core::iter::empty::<InteractionPair>(),
            DEFAULT_LEARNING_RATE,
        )
        .expect("plain config is always valid")
    }

    fn canonical_id(interactions: &BTreeSet<InteractionPair>, learning_rate: f64) -> ConfigId {
        let mut ints = String::new();
        for (i, pair) in interactions.iter().enumerate() {
            if i > 0 {
                ints.push(',');
            }
            ints.push_str(&pair.to_string());
        }
        ConfigId(format!("lr={learning_rate};int={ints}"))
    }

    /// Returns a copy with one interaction pair added.
    pub fn with_interaction(&self, pair: InteractionPair) -> Result<Self, ConfigError> {
        let mut interactions = self.interactions.clone();
        interactions.insert(pair);
        Config::new(self.base_namespaces.clone(), interactions, self.learning_rate)
    }

    /// Returns a copy with a different learning rate.
    pub fn with_learning_rate(&self, learning_rate: f64) -> Result<Self, ConfigError> {
        Config::new(
            self.base_namespaces.clone(),
            self.interactions.clone(),
            learning_rate,
        )
    }

    pub fn base_namespaces(&self) -> &BTreeSet<String> {
        &self.base_namespaces
    }

    pub fn interactions(&self) -> &BTreeSet<InteractionPair> {
        &self.interactions
    }

    /// All unordered namespace pairs not yet present as interactions.
    pub fn missing_pairs(&self) -> Vec<InteractionPair> {
        let ids: Vec<&String> = self.base_namespaces.iter().collect();
        let mut out = Vec::new();
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                let pair = InteractionPair::new(ids[i].clone(), ids[j].clone())
                    .expect("distinct namespaces");
                if !self.interactions.contains(&pair) {
                    out.push(pair);
                }
            }
        }
        out
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn id(&self) -> &ConfigId {
        &self.id
    }
}

impl PartialEq for Config {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Config {}
