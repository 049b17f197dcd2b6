//! Shared result types for numerical certificates. Every certificate
//! produces a named verdict plus the measured quantities that back it, so
//! runs can be serialized to JSON and compared across configurations.

use serde::Serialize;

/// Outcome of one numerical certificate.
#[derive(Debug, Clone, Serialize)]
pub struct CertResult {
    pub name: String,
    pub passed: bool,
    /// Measured scalars backing the verdict (key, value).
    pub details: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl CertResult {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), passed: true, details: Vec::new(), notes: Vec::new() }
    }

    pub fn detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.push((key.into(), value));
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn require(mut self, ok: bool, what: impl Into<String>) -> Self {
        if !ok {
            self.passed = false;
            self.notes.push(format!("FAILED: {}", what.into()));
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}
