use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Rejected input: unreadable or malformed file, or an invalid setting.
#[derive(Debug)]
pub struct InputError {
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for InputError {}

impl InputError {
    pub fn config(message: String) -> Self {
        Self { message }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn toml(path: &Path, e: toml::de::Error) -> Self {
        Self {
            message: format!("{}: {e}", path.display()),
        }
    }

    fn json(path: &Path, text: &str, what: &str, e: serde_json::Error) -> Self {
        let line = e.line();
        let source = text.lines().nth(line.saturating_sub(1)).unwrap_or("").trim_end();
        let excerpt: String = source.chars().take(120).collect();
        Self {
            message: format!(
                "{}:{}:{}: malformed {what}: {e}\n  | {excerpt}",
                path.display(),
                line,
                e.column()
            ),
        }
    }
}

/// Reads a JSON document, reporting the line and column of any error.
pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| InputError::json(path, &text, what, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}
