//! Tiny flag parser: `--flag value` pairs, repeatable flags, and bare
//! boolean switches.

use fast_core::{Error, Result};
use std::collections::HashMap;

pub struct Args {
    values: HashMap<String, Vec<String>>,
    switches: Vec<String>,
}

impl Args {
    /// `switch_names` take no value; every other `--flag` consumes one.
    pub fn parse(raw: &[String], switch_names: &[&str]) -> Result<Args> {
        let mut values: HashMap<String, Vec<String>> = HashMap::new();
        let mut switches = Vec::new();
        let mut it = raw.iter().peekable();
        while let Some(token) = it.next() {
            let Some(name) = token.strip_prefix("--") else {
                return Err(Error::Usage(format!("unexpected argument `{token}`")));
            };
            if switch_names.contains(&name) {
                switches.push(name.to_string());
                continue;
            }
            // a flag value may itself start with '-' only for negatives
            match it.next() {
                Some(v) => values.entry(name.to_string()).or_default().push(v.clone()),
                None => return Err(Error::Usage(format!("flag --{name} needs a value"))),
            }
        }
        Ok(Args { values, switches })
    }

    pub fn has(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).and_then(|v| v.last()).map(|s| s.as_str())
    }

    pub fn get_all(&self, name: &str) -> &[String] {
        self.values.get(name).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn require(&self, name: &str) -> Result<&str> {
        self.get(name)
            .ok_or_else(|| Error::Usage(format!("missing required flag --{name}")))
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, name: &str, default: T) -> Result<T> {
        match self.get(name) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Usage(format!("cannot parse --{name} value `{raw}`"))),
        }
    }

    /// Comma-separated f64 list.
    pub fn get_f64_list(&self, name: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(name) {
            None => Ok(default.to_vec()),
            Some(raw) => raw
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse()
                        .map_err(|_| Error::Usage(format!("bad number `{part}` in --{name}")))
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(parts: &[&str]) -> Vec<String> {
        parts.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_pairs_switches_and_repeats() {
        let args = Args::parse(
            &v(&["--config", "tiny", "--wav", "a.wav", "--wav", "b.wav", "--multilabel"]),
            &["multilabel"],
        )
        .unwrap();
        assert_eq!(args.get("config"), Some("tiny"));
        assert_eq!(args.get_all("wav").len(), 2);
        assert!(args.has("multilabel"));
    }

    #[test]
    fn missing_value_is_usage_error() {
        assert!(Args::parse(&v(&["--config"]), &[]).is_err());
    }

    #[test]
    fn lr_list() {
        let args = Args::parse(&v(&["--lrs", "0.001,0.01"]), &[]).unwrap();
        assert_eq!(args.get_f64_list("lrs", &[]).unwrap(), vec![0.001, 0.01]);
    }
}
