//! Name-keyed registries of strategy factories.
//!
//! Configuration refers to strategies by descriptor, `name` or
//! `name(arg, arg, ...)` with numeric arguments. A [`Registry`] maps each
//! name to a factory that validates the arguments and builds a trait object.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::strategies::{
    allocation::{self, ControlAllocation},
    delay::{self, DelayFunction},
    multiplier::{self, MultiplierProfile},
    nonlinearity::{self, Nonlinearity},
    shape::{self, StateShape},
};

/// A parsed strategy reference: a name and its numeric arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub name: String,
    pub args: Vec<f64>,
}

impl Descriptor {
    pub fn new(name: impl Into<String>, args: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            args,
        }
    }

    pub fn bare(name: impl Into<String>) -> Self {
        Self::new(name, Vec::new())
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FromStr for Descriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::BadDescriptor(s.to_string());
        let (name, args) = match s.find('(') {
            None => (s, Vec::new()),
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let args = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(',')
                        .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                        .collect::<Result<Vec<_>>>()?
                };
                (s[..open].trim(), args)
            }
        };
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(bad());
        }
        Ok(Self::new(name, args))
    }
}

/// Splits a comma-separated list of descriptors, respecting parentheses.
pub fn split_descriptor_list(s: &str) -> Result<Vec<Descriptor>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].parse()?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::BadDescriptor(s.to_string()));
    }
    if !s[start..].trim().is_empty() {
        out.push(s[start..].parse()?);
    } else if !out.is_empty() {
        return Err(Error::BadDescriptor(s.to_string()));
    }
    Ok(out)
}

pub type Factory<T> = Box<dyn Fn(&[f64]) -> Result<Arc<T>> + Send + Sync>;

struct Entry<T: ?Sized> {
    summary: &'static str,
    factory: Factory<T>,
}

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Entry<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    /// Registers (or replaces) a named factory.
    pub fn register<F>(&mut self, name: &str, summary: &'static str, factory: F) -> &mut Self
    where
        F: Fn(&[f64]) -> Result<Arc<T>> + Send + Sync + 'static,
    {
        self.entries.insert(
            name.to_string(),
            Entry {
                summary,
                factory: Box::new(factory),
            },
        );
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn summaries(&self) -> impl Iterator<Item = (&str, &'static str)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.summary))
    }

    pub fn create(&self, d: &Descriptor) -> Result<Arc<T>> {
        match self.entries.get(&d.name) {
            Some(e) => (e.factory)(&d.args),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: d.name.clone(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }

    pub fn create_str(&self, s: &str) -> Result<Arc<T>> {
        self.create(&s.parse()?)
    }
}

impl<T: ?Sized> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.names().collect::<Vec<_>>())
            .finish()
    }
}

/// Checks the argument count of a descriptor.
pub fn expect_args(name: &str, args: &[f64], min: usize, max: usize) -> Result<()> {
    if args.len() < min || args.len() > max {
        let want = if min == max {
            format!("{min}")
        } else {
            format!("{min}..={max}")
        };
        return Err(Error::BadDescriptor(format!(
            "{name} takes {want} argument(s), got {}",
            args.len()
        )));
    }
    if let Some(bad) = args.iter().find(|a| !a.is_finite()) {
        return Err(Error::BadDescriptor(format!("{name}: non-finite argument {bad}")));
    }
    Ok(())
}

/// Every strategy family, preloaded with the built-in implementations.
#[derive(Debug)]
pub struct Registries {
    pub delays: Registry<dyn DelayFunction>,
    pub nonlinearities: Registry<dyn Nonlinearity>,
    pub multipliers: Registry<dyn MultiplierProfile>,
    pub shapes: Registry<dyn StateShape>,
    pub allocations: Registry<dyn ControlAllocation>,
}

impl Registries {
    pub fn builtin() -> Self {
        Self {
            delays: delay::registry(),
            nonlinearities: nonlinearity::registry(),
            multipliers: multiplier::registry(),
            shapes: shape::registry(),
            allocations: allocation::registry(),
        }
    }
}

impl Default for Registries {
    fn default() -> Self {
        Self::builtin()
    }
}
