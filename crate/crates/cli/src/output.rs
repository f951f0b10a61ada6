//! CSV and JSON writers with stable formatting.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_rational::BigRational;
use serde::Serialize;
use winnowgale_core::gale::CapitalTrace;
use winnowgale_core::learn::MistakeLog;
use winnowgale_core::rational::log2;

/// `x` with 12 significant digits, trailing zeros trimmed.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&magnitude) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - magnitude).max(0) as usize;
    let text = format!("{x:.decimals$}");
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

pub fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

pub fn opt_bit(b: Option<bool>) -> &'static str {
    match b {
        None => "",
        Some(true) => "1",
        Some(false) => "0",
    }
}

/// Collects the files a run writes, relative to its output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }
}

pub const TRACE_HEADER: [&str; 7] = [
    "prefix_length",
    "capital_log2",
    "capital_num",
    "capital_den",
    "bet_direction",
    "learner_predicted",
    "mistake_flag",
];

pub fn trace_rows(trace: &CapitalTrace) -> impl Iterator<Item = Vec<String>> + '_ {
    trace.entries.iter().map(|e| {
        vec![
            e.prefix_length.to_string(),
            float(log2(&e.capital)),
            e.capital.numer().to_string(),
            e.capital.denom().to_string(),
            e.bet.to_string(),
            opt_bit(e.learner_predicted).to_string(),
            opt_bit(e.mistake).to_string(),
        ]
    })
}

pub const MISTAKE_HEADER: [&str; 5] = ["example_id", "popcount", "prediction", "truth", "cumulative_mistakes"];

pub fn mistake_rows(log: &MistakeLog) -> impl Iterator<Item = Vec<String>> + '_ {
    log.records.iter().map(|r| {
        vec![
            r.example_id.to_string(),
            r.popcount.to_string(),
            opt_bit(Some(r.prediction)).to_string(),
            opt_bit(Some(r.truth)).to_string(),
            r.cumulative_mistakes.to_string(),
        ]
    })
}

/// Exact rational as `num/den`.
pub fn exact(v: &BigRational) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(float(0.0), "0");
        assert_eq!(float(1.0), "1");
        assert_eq!(float(-2.5), "-2.5");
        assert_eq!(float(1.0 / 3.0), "0.333333333333");
        assert_eq!(float(123456.789), "123456.789");
        assert_eq!(float(86.96700219058), "86.9670021906");
        assert_eq!(float(f64::NEG_INFINITY), "-inf");
        assert_eq!(float(1e-9), "1.00000000000e-9");
    }
}
