use std::fs;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::DenseMatrix;
use crate::scalar::{format_rational64, parse_rational64, C64};

use super::{compute_propagators, CausalPropagators, LatticeError, LatticeSpacetime, PropagatorSet};

pub const DOCUMENT_VERSION: u32 = 1;

/// Versioned JSON form of a lattice and its kernels. Spacings are rational
/// strings; kernels are base64 little-endian `f64` arrays in row-major
/// order. The complex two-point kernel interleaves real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDocument {
    pub version: u32,
    pub nt: usize,
    pub nx: usize,
    pub dt: String,
    pub dx: String,
    pub mass: String,
    pub kernels: Option<KernelBlobs>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlobs {
    pub retarded: String,
    pub advanced: String,
    pub commutator: String,
    pub two_point: String,
}

fn encode(values: impl Iterator<Item = f64>) -> String {
    let bytes: Vec<u8> = values.flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(s: &str, expected: usize) -> Result<Vec<f64>, LatticeError> {
    let bytes = STANDARD.decode(s).map_err(|e| LatticeError::Document(format!("base64: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(LatticeError::Document(format!(
            "kernel has {} bytes, expected {}",
            bytes.len(),
            expected * 8
        )));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

impl LatticeDocument {
    pub fn from_lattice(lat: &LatticeSpacetime, props: Option<&PropagatorSet>) -> Self {
        let kernels = props.map(|p| KernelBlobs {
            retarded: encode(p.retarded().data().iter().copied()),
            advanced: encode(p.advanced().data().iter().copied()),
            commutator: encode(p.commutator().data().iter().copied()),
            two_point: encode(p.two_point.data().iter().flat_map(|c| [c.re, c.im])),
        });
        Self {
            version: DOCUMENT_VERSION,
            nt: lat.nt(),
            nx: lat.nx(),
            dt: format_rational64(&lat.dt()),
            dx: format_rational64(&lat.dx()),
            mass: format_rational64(&lat.mass()),
            kernels,
        }
    }

    pub fn lattice(&self) -> Result<LatticeSpacetime, LatticeError> {
        if self.version != DOCUMENT_VERSION {
            return Err(LatticeError::Document(format!("unsupported version {}", self.version)));
        }
        let parse = |name: &str, s: &str| {
            parse_rational64(s).ok_or_else(|| LatticeError::Document(format!("{name}: not a rational: {s:?}")))
        };
        LatticeSpacetime::new(self.nt, self.nx, parse("dt", &self.dt)?, parse("dx", &self.dx)?, parse("mass", &self.mass)?)
    }

    pub fn propagators(&self) -> Result<Option<PropagatorSet>, LatticeError> {
        let lat = self.lattice()?;
        let Some(k) = &self.kernels else { return Ok(None) };
        let n = lat.n_sites();
        let real = |s: &str| decode(s, n * n).map(|v| DenseMatrix::from_vec(n, n, v));
        let tp = decode(&k.two_point, 2 * n * n)?;
        let two_point = DenseMatrix::from_vec(n, n, tp.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect());
        Ok(Some(PropagatorSet {
            causal: CausalPropagators {
                retarded: real(&k.retarded)?,
                advanced: real(&k.advanced)?,
                commutator: real(&k.commutator)?,
            },
            two_point,
        }))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LatticeError> {
        serde_json::from_str(s).map_err(|e| LatticeError::Document(e.to_string()))
    }
}

/// On-disk cache of propagator sets keyed by a hash of the lattice
/// parameters.
#[derive(Clone, Debug)]
pub struct KernelCache {
    dir: PathBuf,
}

impl KernelCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(lat: &LatticeSpacetime) -> String {
        let doc = LatticeDocument::from_lattice(lat, None);
        let mut h = Sha256::new();
        h.update(format!("v{}:{}:{}:{}:{}:{}", doc.version, doc.nt, doc.nx, doc.dt, doc.dx, doc.mass));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn path_for(&self, lat: &LatticeSpacetime) -> PathBuf {
        self.dir.join(format!("{}.json", Self::key(lat)))
    }

    /// Cached kernels if present and readable, otherwise computed and stored.
    pub fn load_or_compute(&self, lat: &LatticeSpacetime) -> Result<PropagatorSet, LatticeError> {
        let path = self.path_for(lat);
        if let Some(p) = read_cached(&path, lat) {
            return Ok(p);
        }
        let props = compute_propagators(lat)?;
        fs::create_dir_all(&self.dir).map_err(|e| LatticeError::Document(e.to_string()))?;
        fs::write(&path, LatticeDocument::from_lattice(lat, Some(&props)).to_json())
            .map_err(|e| LatticeError::Document(e.to_string()))?;
        Ok(props)
    }
}

fn read_cached(path: &Path, lat: &LatticeSpacetime) -> Option<PropagatorSet> {
    let text = fs::read_to_string(path).ok()?;
    let doc = LatticeDocument::from_json(&text).ok()?;
    if doc.lattice().ok()? != *lat {
        return None;
    }
    doc.propagators().ok()?
}
