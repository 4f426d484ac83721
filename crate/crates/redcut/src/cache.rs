//! Parallel similarity construction and an on-disk cache for it.
//!
//! Cache files are named by the SHA-256 of the discretized codes, the labels
//! and the redundancy measure, so a model is reused only for identical
//! inputs. The file layout is `RCSM` + version byte, `M` as little-endian
//! `u64`, then `Q` row-major and `s`, all little-endian `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use redcut_core::dataset::DiscretizedDataset;
use redcut_core::infotheory::{PairwiseMi, Redundancy, SimilarityModel};
use redcut_core::linalg::Matrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"RCSM\x01";

/// Environment variable that, when set, overrides the cache directory.
pub const CACHE_ENV: &str = "REDCUT_CACHE";

/// Same result as [`redcut_core::infotheory::build_similarity`], with rows
/// computed in parallel.
pub fn build_similarity(
    dd: &DiscretizedDataset,
    labels: &[usize],
    kind: Redundancy,
) -> Result<SimilarityModel> {
    if labels.len() != dd.n_instances() {
        return Err(Error::Core(redcut_core::Error::Shape(format!(
            "{} labels for {} instances",
            labels.len(),
            dd.n_instances()
        ))));
    }
    let m = dd.n_features();
    let pw = PairwiseMi::new(dd);
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| (i..m).map(|j| pw.redundancy(i, j, kind)).collect())
        .collect();
    let mut q = vec![0.0; m * m];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            q[i * m + j] = v;
            q[j * m + i] = v;
        }
    }
    let s = (0..m)
        .into_par_iter()
        .map(|i| pw.relevance(i, labels))
        .collect();
    Ok(SimilarityModel::from_parts(
        Matrix::from_row_major(m, m, q),
        s,
    )?)
}

/// Content hash identifying a similarity model.
pub fn similarity_key(dd: &DiscretizedDataset, labels: &[usize], kind: Redundancy) -> String {
    let mut h = Sha256::new();
    h.update(MAGIC);
    h.update((dd.n_features() as u64).to_le_bytes());
    h.update((dd.n_instances() as u64).to_le_bytes());
    h.update(dd.codes());
    for &l in labels {
        h.update((l as u64).to_le_bytes());
    }
    h.update(match kind {
        Redundancy::MutualInformation => b"mi",
        Redundancy::NormalizedSimilarity => b"ns",
    });
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Default)]
pub struct SimilarityCache {
    dir: Option<PathBuf>,
}

impl SimilarityCache {
    /// A cache rooted at `dir`, or a pass-through when `None`.
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    /// `$REDCUT_CACHE` when set and non-empty, otherwise `dir`.
    pub fn from_env_or(dir: Option<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => Self::new(Some(PathBuf::from(v))),
            _ => Self::new(dir),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Returns the cached model or builds and stores it. The flag reports a
    /// cache hit. Unreadable cache entries are rebuilt.
    pub fn get_or_build(
        &self,
        dd: &DiscretizedDataset,
        labels: &[usize],
        kind: Redundancy,
    ) -> Result<(SimilarityModel, bool)> {
        let Some(dir) = &self.dir else {
            return Ok((build_similarity(dd, labels, kind)?, false));
        };
        let path = dir.join(format!("{}.rcsm", similarity_key(dd, labels, kind)));
        if let Ok(bytes) = fs::read(&path) {
            if let Some(sm) = decode(&bytes, dd.n_features()) {
                return Ok((sm, true));
            }
        }
        let sm = build_similarity(dd, labels, kind)?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, encode(&sm)).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok((sm, false))
    }
}

fn encode(sm: &SimilarityModel) -> Vec<u8> {
    let m = sm.n_features();
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + 8 * (m * m + m));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m as u64).to_le_bytes());
    for v in sm.q().as_slice().iter().chain(sm.s()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8], expect_m: usize) -> Option<SimilarityModel> {
    let rest = bytes.strip_prefix(MAGIC)?;
    let (m, rest) = rest.split_first_chunk::<8>()?;
    let m = usize::try_from(u64::from_le_bytes(*m)).ok()?;
    if m != expect_m || rest.len() != 8 * (m * m + m) {
        return None;
    }
    let vals: Vec<f64> = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (q, s) = vals.split_at(m * m);
    SimilarityModel::from_parts(Matrix::from_row_major(m, m, q.to_vec()), s.to_vec()).ok()
}
