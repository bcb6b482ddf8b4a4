//! Validation findings shared by the bundle members.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Finding {
    pub member: &'static str,
    pub code: &'static str,
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    pub fn error(member: &'static str, code: &'static str, message: impl Into<String>) -> Self {
        Finding {
            member,
            code,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(member: &'static str, code: &'static str, message: impl Into<String>) -> Self {
        Finding {
            member,
            code,
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}
