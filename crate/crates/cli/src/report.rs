//! Line-oriented run reports.
//!
//! The default rendering is one `key=value` pair per line:
//!
//! ```text
//! command=dist a.csv b.csv
//! version=0.1.0
//! status=ok
//! config.gamma=0.1857...
//! result.squared_distance=0.0123...
//! time.total_s=0.0004...
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so parsing a reported
//! value gives back the library's result bit for bit.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ValidationFailed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::ValidationFailed => "validation_failed",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ValidationFailed => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub version: &'static str,
    pub status: Status,
    pub config: Vec<(String, String)>,
    pub results: Vec<(String, String)>,
    pub timings: Vec<(String, f64)>,
}

/// Formats a float so that it parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> RunReport {
        RunReport {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            status: Status::Ok,
            config: Vec::new(),
            results: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    pub fn result(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.results.push((key.to_string(), value.to_string()));
        self
    }

    pub fn result_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.result(key, fmt_f64(value))
    }

    pub fn timing(&mut self, key: &str, seconds: f64) -> &mut Self {
        self.timings.push((key.to_string(), seconds));
        self
    }

    /// Looks up a result value by key.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.results
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "version={}", self.version);
        let _ = writeln!(s, "status={}", self.status.as_str());
        for (k, v) in &self.config {
            let _ = writeln!(s, "config.{k}={v}");
        }
        for (k, v) in &self.results {
            let _ = writeln!(s, "result.{k}={v}");
        }
        for (k, v) in &self.timings {
            let _ = writeln!(s, "time.{k}_s={}", fmt_f64(*v));
        }
        s
    }

    /// Sectioned rendering with `[run]`, `[config]`, `[results]` and
    /// `[timings]` headers.
    pub fn to_sections(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "status = {}", self.status.as_str());
        let _ = writeln!(s, "\n[config]");
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n[results]");
        for (k, v) in &self.results {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n[timings]");
        for (k, v) in &self.timings {
            let _ = writeln!(s, "{k}_s = {}", fmt_f64(*v));
        }
        s
    }
}
