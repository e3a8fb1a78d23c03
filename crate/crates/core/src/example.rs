//! Labeled streaming instances: a target value plus features grouped into
//! namespaces.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

/// A single named feature with a real value.
#[derive(Clone, Debug, PartialEq)]
pub struct Feature {
    pub name: String,
    pub value: f64,
}

impl Feature {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Feature {
            name: name.into(),
            value,
        }
    }
}

/// A named group of features. Interaction terms cross the features of two
/// namespaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Namespace {
    pub id: String,
    pub features: Vec<Feature>,
}

impl Namespace {
    pub fn new(id: impl Into<String>, features: Vec<Feature>) -> Self {
        Namespace {
            id: id.into(),
            features,
        }
    }
}

/// One labeled instance of the stream.
///
/// Invariants: namespace ids are distinct within one example and all feature
/// values are finite. [`Example::validate`] checks both; the hot path assumes
/// they hold.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub label: f64,
    pub namespaces: Vec<Namespace>,
}

impl Example {
    pub fn new(label: f64, namespaces: Vec<Namespace>) -> Self {
        Example { label, namespaces }
    }

    /// Checks the example invariants: distinct namespace ids, finite label
    /// and feature values.
    pub fn validate(&self) -> bool {
        if !self.label.is_finite() {
            return false;
        }
        let mut seen = BTreeSet::new();
        for ns in &self.namespaces {
            if !seen.insert(ns.id.as_str()) {
                return false;
            }
            if ns.features.iter().any(|f| !f.value.is_finite()) {
                return false;
            }
        }
        true
    }

    /// Namespace lookup by id.
    pub fn namespace(&self, id: &str) -> Option<&Namespace> {
        self.namespaces.iter().find(|ns| ns.id == id)
    }
}
