//! Name-keyed registries of interchangeable strategies.
//!
//! Each family (VAR priors, interpolation rules, shock aggregators, covariance
//! estimators) exposes a trait; concrete variants register a factory under a
//! stable name and are selected at runtime from configuration.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

pub type Factory<T, C> = fn(&C) -> Result<Box<T>>;

pub struct Registry<T: ?Sized, C> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<T, C>>,
}

impl<T: ?Sized, C> Registry<T, C> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: Factory<T, C>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn with(mut self, name: &'static str, factory: Factory<T, C>) -> Self {
        self.register(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn build(&self, name: &str, ctx: &C) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(factory) => factory(ctx),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

impl<T: ?Sized, C> fmt::Debug for Registry<T, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}
