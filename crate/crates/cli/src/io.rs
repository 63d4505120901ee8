//! File plumbing shared by the subcommands: error-to-exit-code mapping and
//! JSON/OBJ load/save helpers. Domain failures are reported as structured
//! diagnostics, never panics.

use std::path::Path;
use std::process::ExitCode;

use dentalscan_core::annotation::parse_annotation;
use dentalscan_core::obj::parse_obj;
use dentalscan_core::{Diagnostic, ScanAnnotation, Severity, TriMesh};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Domain errors exit 1; usage errors exit 2.
#[derive(Debug)]
pub enum CliError {
    Domain(Vec<Diagnostic>),
    Usage(String),
}

impl CliError {
    pub fn domain(code: &str, message: impl Into<String>) -> Self {
        CliError::Domain(vec![Diagnostic::new(Severity::Error, code, message)])
    }

    pub fn report(self) -> ExitCode {
        match self {
            CliError::Domain(diags) => {
                for d in diags {
                    eprintln!(
                        "{}",
                        serde_json::to_string(&d).unwrap_or_else(|_| d.to_string())
                    );
                }
                ExitCode::from(1)
            }
            CliError::Usage(message) => {
                eprintln!("error: {message}");
                ExitCode::from(2)
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path)
        .map_err(|e| CliError::domain("IO_READ", format!("{}: {e}", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::domain("IO_WRITE", format!("{}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, bytes)
        .map_err(|e| CliError::domain("IO_WRITE", format!("{}: {e}", path.display())))
}

pub fn load_mesh(path: &Path) -> CliResult<TriMesh> {
    let bytes = read_bytes(path)?;
    parse_obj(&bytes)
        .map_err(|e| CliError::domain("OBJ_PARSE", format!("{}: {e}", path.display())))
}

pub fn load_annotation(path: &Path, vertex_count: usize) -> CliResult<ScanAnnotation> {
    let bytes = read_bytes(path)?;
    parse_annotation(&bytes, vertex_count)
        .map_err(|e| CliError::domain("ANNOTATION_PARSE", format!("{}: {e}", path.display())))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::domain("JSON_PARSE", format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline; the fixed formatting keeps reports
/// byte-stable.
pub fn to_json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::domain("JSON_WRITE", e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Write JSON to `path`, or to stdout when no path is given.
pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let bytes = to_json_bytes(value)?;
    match path {
        Some(p) => write_bytes(p, &bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| CliError::domain("IO_WRITE", e.to_string()))
        }
    }
}
