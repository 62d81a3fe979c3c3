//! File formats: signal and observation JSON, dense-matrix CSV, run manifests.
//!
//! ```text
//! signal.json        {"n":50,"s":5,"freqs":[[f1,f2],...],"coeffs":[[re,im],...]}
//! observations.json  {"n":50,"m":500,"entries":[[j,k,re,im],...]}
//! dense.csv          one row per matrix row, cells formatted "re+imi"
//! ```

use std::fs;
use std::path::Path;

use faer::MatRef;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::signal::{FrequencyPair, ObservationSet, SpectralSignal};
use crate::{c64, CMat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalFile {
    pub n: usize,
    pub s: usize,
    pub freqs: Vec<[f64; 2]>,
    pub coeffs: Vec<[f64; 2]>,
}

impl From<&SpectralSignal> for SignalFile {
    fn from(sig: &SpectralSignal) -> Self {
        Self {
            n: sig.n(),
            s: sig.s(),
            freqs: sig.freqs().iter().map(|f| [f.f1, f.f2]).collect(),
            coeffs: sig.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<SignalFile> for SpectralSignal {
    type Error = Error;

    fn try_from(file: SignalFile) -> Result<Self> {
        if file.s != file.freqs.len() {
            return Err(Error::Parse(format!("s={} but {} frequencies listed", file.s, file.freqs.len())));
        }
        let freqs = file
            .freqs
            .iter()
            .map(|&[f1, f2]| FrequencyPair::new(f1, f2))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = file.coeffs.iter().map(|&[re, im]| c64::new(re, im)).collect();
        SpectralSignal::new(file.n, freqs, coeffs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationFile {
    pub n: usize,
    pub m: usize,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl From<&ObservationSet> for ObservationFile {
    fn from(obs: &ObservationSet) -> Self {
        Self {
            n: obs.n(),
            m: obs.m(),
            entries: obs.iter().map(|(j, k, v)| (j, k, v.re, v.im)).collect(),
        }
    }
}

impl TryFrom<ObservationFile> for ObservationSet {
    type Error = Error;

    fn try_from(file: ObservationFile) -> Result<Self> {
        if file.m != file.entries.len() {
            return Err(Error::Parse(format!("m={} but {} entries listed", file.m, file.entries.len())));
        }
        let entries = file
            .entries
            .into_iter()
            .map(|(j, k, re, im)| (j, k, c64::new(re, im)))
            .collect();
        ObservationSet::new(file.n, entries)
    }
}

pub fn signal_to_json(sig: &SpectralSignal) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SignalFile::from(sig))?)
}

pub fn signal_from_json(text: &str) -> Result<SpectralSignal> {
    serde_json::from_str::<SignalFile>(text)?.try_into()
}

pub fn observations_to_json(obs: &ObservationSet) -> Result<String> {
    Ok(serde_json::to_string(&ObservationFile::from(obs))?)
}

pub fn observations_from_json(text: &str) -> Result<ObservationSet> {
    serde_json::from_str::<ObservationFile>(text)?.try_into()
}

/// Formats a complex number as `re+imi` / `re-imi`.
pub fn format_complex(z: c64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub fn parse_complex(cell: &str) -> Result<c64> {
    let bad = || Error::Parse(format!("malformed complex cell '{cell}'"));
    let body = cell.trim().strip_suffix('i').ok_or_else(bad)?;
    // The separating sign is the last '+'/'-' that does not start the number
    // or follow an exponent marker.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im: f64 = body[split..].parse().map_err(|_| bad())?;
    Ok(c64::new(re, im))
}

/// Row-major CSV of a dense complex matrix.
pub fn dense_to_csv(x: MatRef<'_, c64>) -> String {
    let mut out = String::new();
    for i in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols()).map(|j| format_complex(x[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn dense_from_csv(text: &str) -> Result<CMat> {
    let rows: Vec<Vec<c64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(parse_complex).collect())
        .collect::<Result<_>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("ragged matrix CSV".into()));
    }
    Ok(CMat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// A reproducibility record: the payload plus a SHA-256 of its canonical JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub payload: serde_json::Value,
    pub content_hash: String,
}

impl Manifest {
    pub fn new(command: &str, payload: &impl Serialize) -> Result<Self> {
        let payload = serde_json::to_value(payload)?;
        let content_hash = content_hash(&payload)?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            payload,
            content_hash,
        })
    }

    /// Recomputes the hash and compares.
    pub fn verify(&self) -> Result<bool> {
        Ok(content_hash(&self.payload)? == self.content_hash)
    }
}

/// Hex SHA-256 of the compact JSON encoding (object keys sorted by serde_json's map).
pub fn content_hash(value: &serde_json::Value) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
