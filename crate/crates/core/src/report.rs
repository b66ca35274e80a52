//! Serializable run reports shared by the command-line front end.

use serde::Serialize;

/// One named check with its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Full result of one command execution. Everything except `wall_time_ms` is
/// deterministic for a fixed (spec, seed).
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: serde_json::Value,
    pub results: serde_json::Value,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new(command: &str, inputs: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            results: serde_json::Value::Null,
            assertions: vec![],
            pass: true,
            wall_time_ms: 0.0,
        }
    }

    pub fn assert(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.pass &= pass;
        self.assertions.push(Assertion::new(name, pass, detail));
    }
}
