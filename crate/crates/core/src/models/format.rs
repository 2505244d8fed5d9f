//! Versioned model file container.
//!
//! ```text
//! COMPSENT-MODEL
//! version 1
//! type <gbdt|logreg|naive-bayes|majority|pipeline>
//! length <payload bytes>
//! checksum <FNV-1a 64 of the payload, 16 hex digits>
//!
//! <payload: one line of JSON>
//! ```
//!
//! Floats in the payload are written in shortest round-trip form and parsed
//! exactly, so a reloaded model predicts bit-identically.

use super::{Model, ModelKind};
use crate::error::{Error, Result};
use crate::features::fnv1a64;

pub const FORMAT_MAGIC: &str = "COMPSENT-MODEL";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_container(kind: &str, payload: &[u8]) -> Vec<u8> {
    let mut out = format!(
        "{FORMAT_MAGIC}\nversion {FORMAT_VERSION}\ntype {kind}\nlength {}\nchecksum {:016x}\n\n",
        payload.len(),
        fnv1a64(payload)
    )
    .into_bytes();
    out.extend_from_slice(payload);
    out
}

/// Validates the header and returns `(type, payload)`.
pub fn read_container(bytes: &[u8]) -> Result<(String, &[u8])> {
    let bad = |m: String| Error::ModelFormat(m);
    let mut rest = bytes;
    let mut header = Vec::new();
    for _ in 0..6 {
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("truncated header".into()))?;
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| bad("header is not UTF-8".into()))?;
        header.push(line.to_string());
        rest = &rest[nl + 1..];
    }
    if header[0] != FORMAT_MAGIC {
        return Err(bad(format!("bad magic `{}`", header[0])));
    }
    let field = |i: usize, name: &str| -> Result<String> {
        header[i]
            .strip_prefix(name)
            .and_then(|v| v.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(format!("expected `{name}` on header line {}", i + 1)))
    };
    let version: u32 = field(1, "version")?
        .parse()
        .map_err(|_| bad("unreadable version".into()))?;
    if version != FORMAT_VERSION {
        return Err(bad(format!(
            "version mismatch: file has {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let kind = field(2, "type")?;
    let length: usize = field(3, "length")?
        .parse()
        .map_err(|_| bad("unreadable length".into()))?;
    let checksum = u64::from_str_radix(&field(4, "checksum")?, 16).map_err(|_| bad("unreadable checksum".into()))?;
    if !header[5].is_empty() {
        return Err(bad("missing blank line after header".into()));
    }
    if rest.len() < length {
        return Err(bad(format!("truncated payload: {} of {length} bytes", rest.len())));
    }
    if rest.len() > length {
        return Err(bad(format!("{} trailing bytes after payload", rest.len() - length)));
    }
    if fnv1a64(rest) != checksum {
        return Err(bad("checksum mismatch".into()));
    }
    Ok((kind, rest))
}

pub fn serialize_model(model: &Model) -> Result<Vec<u8>> {
    let payload = match model {
        Model::Gbdt(m) => serde_json::to_vec(m)?,
        Model::Logreg(m) => serde_json::to_vec(m)?,
        Model::NaiveBayes(m) => serde_json::to_vec(m)?,
        Model::Majority(m) => serde_json::to_vec(m)?,
    };
    Ok(write_container(model.kind().as_str(), &payload))
}

pub fn deserialize_model(bytes: &[u8]) -> Result<Model> {
    let (kind, payload) = read_container(bytes)?;
    let kind: ModelKind = kind
        .parse()
        .map_err(|_| Error::ModelFormat(format!("type mismatch: `{kind}` is not a model type")))?;
    Ok(match kind {
        ModelKind::Gbdt => Model::Gbdt(serde_json::from_slice(payload)?),
        ModelKind::Logreg => Model::Logreg(serde_json::from_slice(payload)?),
        ModelKind::NaiveBayes => Model::NaiveBayes(serde_json::from_slice(payload)?),
        ModelKind::Majority => Model::Majority(serde_json::from_slice(payload)?),
    })
}

/// Like [`deserialize_model`] but rejects any other model type.
pub fn deserialize_model_as(bytes: &[u8], expected: ModelKind) -> Result<Model> {
    let (kind, _) = read_container(bytes)?;
    if kind != expected.as_str() {
        return Err(Error::ModelFormat(format!(
            "type mismatch: expected {expected}, file holds {kind}"
        )));
    }
    deserialize_model(bytes)
}
