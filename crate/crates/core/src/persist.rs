//! Versioned JSON envelopes for persisted models.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format_version: u32,
    kind: &'a str,
    payload: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    format_version: u32,
    kind: String,
    payload: T,
}

pub fn to_json<T: Serialize>(kind: &str, value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&EnvelopeOut {
        format_version: FORMAT_VERSION,
        kind,
        payload: value,
    })?)
}

pub fn from_json<T: DeserializeOwned>(kind: &str, s: &str) -> Result<T> {
    let env: EnvelopeIn<T> = serde_json::from_str(s)?;
    if env.format_version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(env.format_version));
    }
    if env.kind != kind {
        return Err(Error::InvalidConfig(format!(
            "expected a `{kind}` file, found `{}`",
            env.kind
        )));
    }
    Ok(env.payload)
}
