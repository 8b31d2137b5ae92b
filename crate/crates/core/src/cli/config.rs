//! `key = value` run configuration with flag > file > default precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::CliError;

/// Keys accepted in a config file.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha", "b0", "b1", "base", "batch", "classes", "d", "flops", "input", "logits", "metric", "miou", "mode",
    "n", "nu", "out", "plot", "prune", "scale", "seed", "sigma", "size", "sizes", "spec", "t0", "t1", "taps",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("config line {}: expected `key = value`", lineno + 1)));
            };
            let key = key.trim().to_ascii_lowercase().replace(['_', '-'], "");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key {key:?}", lineno + 1)));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    /// Flag value if given, else the config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.parsed(key),
        }
    }

    /// Boolean switch: a set flag wins, otherwise `key = true|false`.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        Ok(self.parsed::<bool>(key)?.unwrap_or(false))
    }

    /// Comma-separated list.
    pub fn pick_list<T: FromStr>(&self, flag: Option<&str>, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match flag.or_else(|| self.raw(key)) {
            None => Ok(None),
            Some(text) => parse_list(text).map(Some),
        }
    }
}

pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("cannot parse list item {s:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_precedence() {
        let cfg = ConfigFile::parse("# comment\nseed = 7\nnu = 2, 4,8\nplot = true\n\nalpha=2.5 # trailing\n").unwrap();
        assert_eq!(cfg.pick::<u64>(None, "seed", 0).unwrap(), 7);
        assert_eq!(cfg.pick(Some(9u64), "seed", 0).unwrap(), 9);
        assert_eq!(cfg.pick::<usize>(None, "classes", 3).unwrap(), 3);
        assert_eq!(cfg.pick_list::<usize>(None, "nu").unwrap(), Some(vec![2, 4, 8]));
        assert_eq!(cfg.pick_list::<usize>(Some("1"), "nu").unwrap(), Some(vec![1]));
        assert!(cfg.switch(false, "plot").unwrap());
        assert_eq!(cfg.pick::<f64>(None, "alpha", 1.0).unwrap(), 2.5);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("seed 7").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        let cfg = ConfigFile::parse("seed = x").unwrap();
        assert!(cfg.pick::<u64>(None, "seed", 0).is_err());
    }
}
