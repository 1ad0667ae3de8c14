//! Plain-text `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear at
//! most once; keys the command does not read are rejected.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {line}: expected 'key = value', got '{t}'"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                bail!("config line {line}: empty key or value");
            }
            if let Some((_, first)) = values.insert(k.to_string(), (v.to_string(), line)) {
                bail!("config line {line}: key '{k}' already set on line {first}");
            }
        }
        Ok(Config {
            values,
            used: RefCell::default(),
        })
    }

    fn raw(&self, key: &str) -> Option<&(String, usize)> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<T>().map_err(|e| anyhow!("{}: '{v}': {e}", where_(key, *line))),
        }
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(|(v, _)| v.clone())
    }

    /// A positive tolerance or factor.
    pub fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if !(v > 0.0) {
            bail!("{key} = {v} must be positive");
        }
        Ok(v)
    }

    /// Inclusive range from `<prefix>_min` and `<prefix>_max`.
    pub fn range(&self, prefix: &str, lo: u32, hi: u32) -> Result<(u32, u32)> {
        let a = self.get(&format!("{prefix}_min"), lo)?;
        let b = self.get(&format!("{prefix}_max"), hi)?;
        if a > b {
            bail!("{prefix}_min = {a} exceeds {prefix}_max = {b}");
        }
        Ok((a, b))
    }

    /// Rejects keys that no getter asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        for (k, (_, line)) in &self.values {
            if !used.contains(k) {
                bail!("{}: unknown key for this command", where_(k, *line));
            }
        }
        Ok(())
    }
}

fn where_(key: &str, line: usize) -> String {
    format!("config line {line}, key '{key}'")
}

pub fn read(path: Option<&std::path::Path>) -> Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            Config::parse(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks_keys() {
        let c = Config::parse("# comment\n s = 3\n\np=inf\n").unwrap();
        assert_eq!(c.get("s", 0.0).unwrap(), 3.0);
        assert_eq!(c.get("p", 0.0).unwrap(), f64::INFINITY);
        assert_eq!(c.get("q", 2.0).unwrap(), 2.0);
        c.finish().unwrap();
        let c = Config::parse("s = 3\nbogus = 1\n").unwrap();
        c.get("s", 0.0).unwrap();
        assert!(c.finish().unwrap_err().to_string().contains("line 2"));
    }

    #[test]
    fn errors_name_lines() {
        assert!(Config::parse("a = 1\nnonsense\n").unwrap_err().to_string().contains("line 2"));
        assert!(Config::parse("a = 1\na = 2\n").unwrap_err().to_string().contains("line 2"));
        let c = Config::parse("\nn = two\n").unwrap();
        assert!(c.get("n", 0usize).unwrap_err().to_string().contains("line 2"));
        let c = Config::parse("tol = -1\n").unwrap();
        assert!(c.positive("tol", 1.0).is_err());
    }
}
