//! Flat `key = value` text files with dotted keys. Used for experiment
//! configs and instance files; no nesting, `#` starts a comment.

use crate::error::{Error, Result};

/// Parse into ordered `(key, value)` pairs. Duplicate keys are rejected.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                line_no + 1
            )));
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", line_no + 1)));
        }
        if pairs.iter().any(|(k, _)| k == key) {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", line_no + 1)));
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Accessor over parsed pairs that tracks which keys were consumed, so
/// callers can reject typos.
pub struct KvMap {
    pairs: Vec<(String, String)>,
    used: Vec<bool>,
}

impl KvMap {
    pub fn from_text(text: &str) -> Result<Self> {
        let pairs = parse(text)?;
        let used = vec![false; pairs.len()];
        Ok(KvMap { pairs, used })
    }

    pub fn get(&mut self, key: &str) -> Option<&str> {
        for (i, (k, v)) in self.pairs.iter().enumerate() {
            if k == key {
                self.used[i] = true;
                return Some(v.as_str());
            }
        }
        None
    }

    pub fn require(&mut self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn get_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn require_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.require(key)?.to_string();
        v.parse::<T>()
            .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{v}`")))
    }

    /// Keys whose prefix matches `prefix.` (used to enumerate method blocks).
    pub fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        let dotted = format!("{prefix}.");
        self.pairs
            .iter()
            .filter(|(k, _)| k.starts_with(&dotted))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn reject_unused(&self) -> Result<()> {
        let stray: Vec<&str> = self
            .pairs
            .iter()
            .zip(&self.used)
            .filter(|(_, used)| !**used)
            .map(|((k, _), _)| k.as_str())
            .collect();
        if stray.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys: {}", stray.join(", "))))
        }
    }
}

/// Comma-separated list of floats.
pub fn parse_f64_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse float `{tok}`")))
        })
        .collect()
}

pub fn parse_usize_list(value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("cannot parse integer `{tok}`")))
        })
        .collect()
}

/// Floats are written with 17 significant digits so that parsing recovers the
/// exact bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn join_f64_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}
