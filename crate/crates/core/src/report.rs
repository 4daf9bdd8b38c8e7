//! Verification report records: named check, measured violation, tolerance,
//! pass flag and a config fingerprint for traceability.

use std::fmt;

/// Outcome of one inequality/identity check. `violation` is signed: positive
/// means the asserted relation was broken by that amount; `pass` holds iff
/// violation ≤ tolerance.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub name: String,
    pub violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub fingerprint: String,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>, violation: f64, tolerance: f64, fingerprint: impl Into<String>) -> Self {
        VerificationReport {
            name: name.into(),
            violation,
            tolerance,
            pass: violation <= tolerance,
            fingerprint: fingerprint.into(),
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "check: {}", self.name)?;
        writeln!(f, "violation: {:.17e}", self.violation)?;
        writeln!(f, "tolerance: {:.17e}", self.tolerance)?;
        writeln!(f, "pass: {}", self.pass)?;
        writeln!(f, "fingerprint: {}", self.fingerprint)?;
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Deterministic 64-bit FNV-1a fingerprint of a canonical config string.
pub fn fingerprint(input: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in input.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
