//! Flat `key = value` experiment files. Command-line flags take precedence.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected key = value, got {line:?}", i + 1);
            };
            let key = k.trim().replace('_', "-");
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("line {}: duplicate key {key:?}", i + 1);
            }
        }
        Ok(Self {
            values,
            used: RefCell::default(),
        })
    }

    /// The flag value if given, else the config value, else `default`.
    pub fn get<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get_opt(key, flag)?.unwrap_or(default))
    }

    pub fn get_opt<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("invalid value {v:?} for field `{key}`: {e}")),
        }
    }

    /// Fails on keys no parameter asked for, which catches typos.
    pub fn check_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.values.keys().filter(|k| !used.contains(*k)).collect();
        if !unknown.is_empty() {
            bail!("unknown config field(s) for this experiment: {unknown:?}");
        }
        Ok(())
    }
}

/// A comma-separated list.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|e| format!("{t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_and_typos_fail() {
        let c = Config::parse("# run\nr_max = 7\nseed=3\n").unwrap();
        assert_eq!(c.get("r-max", None, 1usize).unwrap(), 7);
        assert_eq!(c.get("r-max", Some(2usize), 1).unwrap(), 2);
        assert!(c.check_unused().is_err());
        assert_eq!(c.get("seed", None, 0u64).unwrap(), 3);
        c.check_unused().unwrap();
        assert!(Config::parse("oops").is_err());
        assert!(Config::parse("a=1\na=2").is_err());
        let bad = Config::parse("r-max = x").unwrap();
        let err = bad.get("r-max", None, 1usize).unwrap_err().to_string();
        assert!(err.contains("r-max"));
        assert_eq!("1, 2,3".parse::<List<usize>>().unwrap(), List(vec![1, 2, 3]));
    }
}
