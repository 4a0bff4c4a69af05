//! Plain-text experiment configuration: `key = value` lines grouped under
//! `[section]` headers. `#` starts a comment.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| Error::Config(format!("line {line_no}: malformed section header {line:?}")))?;
                cfg.sections.entry(name.to_string()).or_default();
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key")));
            }
            let sec = section
                .as_ref()
                .ok_or_else(|| Error::Config(format!("line {line_no}: key {key:?} outside any section")))?;
            let entries = cfg.sections.get_mut(sec).expect("section exists");
            if entries.insert(key.to_string(), (value.to_string(), line_no)).is_some() {
                return Err(Error::Config(format!("line {line_no}: duplicate key [{sec}] {key}")));
            }
        }
        Ok(cfg)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.sections.get(section).and_then(|s| s.get(key)) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("line {line}: [{section}] {key} = {v:?}: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    /// Fails on any section or key not listed in `allowed`.
    pub fn check_keys(&self, allowed: &[(&str, &[&str])]) -> Result<()> {
        for (sec, entries) in &self.sections {
            let Some((_, keys)) = allowed.iter().find(|(s, _)| s == sec) else {
                return Err(Error::Config(format!("unknown section [{sec}]")));
            };
            for (key, (_, line)) in entries {
                if !keys.contains(&key.as_str()) {
                    return Err(Error::Config(format!("line {line}: unknown key [{sec}] {key}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg = Config::parse("# top\n[solver]\nbeta = 0.5 # weight\n\n[pipeline]\nkind=denoise\n").unwrap();
        assert_eq!(cfg.get::<f64>("solver", "beta").unwrap(), Some(0.5));
        assert_eq!(cfg.raw("pipeline", "kind"), Some("denoise"));
        assert_eq!(cfg.get::<f64>("solver", "rho").unwrap(), None);
        assert_eq!(cfg.get_or("solver", "rho", 2.0).unwrap(), 2.0);
    }

    #[test]
    fn reports_line_numbers() {
        let err = Config::parse("[solver]\nbeta 0.5\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let cfg = Config::parse("[solver]\n\nbeta = x\n").unwrap();
        let err = cfg.get::<f64>("solver", "beta").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(Config::parse("beta = 1\n").is_err());
        assert!(Config::parse("[a]\nk = 1\nk = 2\n").is_err());
        assert!(Config::parse("[]\n").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let cfg = Config::parse("[solver]\nbeta = 1\nbetta = 2\n").unwrap();
        assert!(cfg.check_keys(&[("solver", &["beta"])]).is_err());
        assert!(cfg.check_keys(&[("solver", &["beta", "betta"])]).is_ok());
        assert!(cfg.check_keys(&[("pipeline", &["kind"])]).is_err());
    }
}
