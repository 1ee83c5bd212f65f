//! Flat `key = value` configuration files. Command-line flags override file
//! values, which override built-in defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Self::parse(&text).with_context(|| format!("in config {}", p.display()))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                bail!("line {}: empty key", no + 1);
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("line {}: duplicate key {key}", no + 1);
            }
        }
        Ok(ConfigFile {
            values,
            used: RefCell::default(),
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    pub fn value<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|s| s.parse::<T>().map_err(|e| anyhow!("config key {key}: {e}")))
            .transpose()
    }

    pub fn choice<T: ValueEnum>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|s| T::from_str(s, true).map_err(|e| anyhow!("config key {key}: {e}")))
            .transpose()
    }

    /// Flag, then file, then default.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        let file = self.value(key)?;
        Ok(flag.or(file).unwrap_or(default))
    }

    pub fn pick_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let file = self.value(key)?;
        Ok(flag.or(file))
    }

    pub fn pick_choice<T: ValueEnum>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        let file = self.choice(key)?;
        Ok(flag.or(file).unwrap_or(default))
    }

    /// Fails on keys that no option consumed.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            bail!("unknown config keys: {}", unknown.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let f = ConfigFile::parse("# comment\nbeta = 3.5\nrestarts=4 # trailing\n\nseed-node = 2\n").unwrap();
        assert_eq!(f.pick(None, "beta", 1.0).unwrap(), 3.5);
        assert_eq!(f.pick(Some(9usize), "restarts", 1).unwrap(), 9);
        assert_eq!(f.pick(None, "seed_node", 0usize).unwrap(), 2);
        assert_eq!(f.pick(None, "steps", 300usize).unwrap(), 300);
        f.finish().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigFile::parse("beta 3").is_err());
        assert!(ConfigFile::parse("a=1\na=2").is_err());
        let f = ConfigFile::parse("betta = 3").unwrap();
        assert!(f.finish().is_err());
        let f = ConfigFile::parse("beta = x").unwrap();
        assert!(f.pick(None, "beta", 1.0f64).is_err());
    }
}
