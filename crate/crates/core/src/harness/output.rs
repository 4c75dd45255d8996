use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::ExperimentSpec;
use crate::error::{Error, Result};

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

/// Provenance block at the top of every output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputHeader {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub spec_sha256: String,
    pub master_seed: u64,
    pub experiment: String,
}

const KEYS: [&str; 6] = ["tool", "version", "schema_version", "spec_sha256", "master_seed", "experiment"];

impl OutputHeader {
    pub fn new(spec: &ExperimentSpec) -> Self {
        OutputHeader {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema_version: OUTPUT_SCHEMA_VERSION,
            spec_sha256: spec.hash(),
            master_seed: spec.master_seed,
            experiment: spec.experiment.name().into(),
        }
    }

    fn values(&self) -> [String; 6] {
        [
            self.tool.clone(),
            self.version.clone(),
            self.schema_version.to_string(),
            self.spec_sha256.clone(),
            self.master_seed.to_string(),
            self.experiment.clone(),
        ]
    }

    /// `# key: value` lines, one per field.
    pub fn to_csv_comment(&self) -> String {
        KEYS.iter()
            .zip(self.values())
            .map(|(k, v)| format!("# {k}: {v}\n"))
            .collect()
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut found: [Option<String>; 6] = Default::default();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let Some((k, v)) = line[1..].trim().split_once(':') else {
                continue;
            };
            if let Some(i) = KEYS.iter().position(|&key| key == k.trim()) {
                found[i] = Some(v.trim().to_string());
            }
        }
        let get = |i: usize| {
            found[i]
                .clone()
                .ok_or_else(|| Error::Format(format!("header field {} missing", KEYS[i])))
        };
        let num = |i: usize| -> Result<u64> {
            get(i)?
                .parse()
                .map_err(|_| Error::Format(format!("header field {} is not an integer", KEYS[i])))
        };
        Ok(OutputHeader {
            tool: get(0)?,
            version: get(1)?,
            schema_version: num(2)? as u32,
            spec_sha256: get(3)?,
            master_seed: num(4)?,
            experiment: get(5)?,
        })
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let h = v
            .get("header")
            .ok_or_else(|| Error::Format("no header object".into()))?;
        Ok(serde_json::from_value(h.clone())?)
    }
}

/// Header comment lines followed by the CSV body.
pub fn csv_document(header: &OutputHeader, body: &[u8]) -> Vec<u8> {
    let mut out = header.to_csv_comment().into_bytes();
    out.extend_from_slice(body);
    out
}

/// The CSV body of a document, without the header lines.
pub fn csv_body(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map_or("", |(_, r)| r);
    }
    rest
}

pub fn json_document(header: &OutputHeader, data: serde_json::Value) -> Result<String> {
    let doc = serde_json::json!({
        "schema_version": OUTPUT_SCHEMA_VERSION,
        "header": header,
        "data": data,
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
