//! Raw little-endian `f64` arrays with a JSON sidecar `<file>.json`.
//!
//! Samples are stored with axis 0 varying fastest. Complex data is stored
//! as interleaved `(re, im)` pairs and flagged in the sidecar.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use framesmith::analysis::{PeriodLattice, Signal};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub shape: Vec<usize>,
    pub levels: usize,
    /// Period lattice basis when it is not `diag(shape)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub complex: bool,
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_signal(path: &Path) -> Result<(Signal, Sidecar)> {
    let side_path = sidecar_path(path);
    let sidecar: Sidecar = serde_json::from_str(
        &std::fs::read_to_string(&side_path)
            .with_context(|| format!("reading {}", side_path.display()))?,
    )
    .with_context(|| format!("parsing {}", side_path.display()))?;
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() % 8 != 0 {
        bail!("{} is not a whole number of f64 values", path.display());
    }
    let raw: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let lattice = match &sidecar.period {
        Some(b) => PeriodLattice::new(b.clone())?,
        None => PeriodLattice::diagonal(&sidecar.shape)?,
    };
    let values: Vec<Complex64> = if sidecar.complex {
        raw.chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect()
    } else {
        raw.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    };
    Ok((Signal::new(lattice, values)?, sidecar))
}

pub fn write_signal(path: &Path, signal: &Signal, levels: usize) -> Result<()> {
    let lattice = &signal.lattice;
    let diag: Vec<usize> = (0..lattice.dim())
        .map(|i| lattice.basis()[i][i] as usize)
        .collect();
    let is_diagonal = lattice == &PeriodLattice::diagonal(&diag)?;
    let complex = signal.values.iter().any(|v| v.im != 0.0);
    let sidecar = Sidecar {
        shape: diag,
        levels,
        period: (!is_diagonal).then(|| lattice.basis().to_vec()),
        complex,
    };
    let mut bytes = Vec::with_capacity(signal.values.len() * if complex { 16 } else { 8 });
    for v in &signal.values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        if complex {
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    std::fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    Ok(())
}
