//! Versioned on-disk graph snapshot keyed by the source document's content
//! hash.
//!
//! Layout: 8-byte magic, little-endian `u32` format version, 32-byte SHA-256
//! of the source OSM file, 32-byte SHA-256 of the payload, `u32` length of
//! the tool version string followed by its bytes, then the bincode payload.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{GraphError, GraphParts, RoadGraph};

pub const CACHE_MAGIC: &[u8; 8] = b"RSPGRAPH";
pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("not a graph cache (bad magic)")]
    BadMagic,
    #[error("cache format version {found} does not match {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("cache was built from a different source file")]
    HashMismatch,
    #[error("cache payload is corrupted")]
    Corrupted,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Encode(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type ContentHash = [u8; 32];

pub fn content_hash(bytes: &[u8]) -> ContentHash {
    Sha256::digest(bytes).into()
}

pub fn file_hash(path: &Path) -> Result<ContentHash, CacheError> {
    let mut hasher = Sha256::new();
    let mut file = std::fs::File::open(path)?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().into())
}

pub fn encode_snapshot(
    graph: &RoadGraph,
    source_hash: &ContentHash,
    tool_version: &str,
) -> Result<Vec<u8>, CacheError> {
    let payload = bincode::serialize(&graph.to_parts()).map_err(|e| CacheError::Encode(e.to_string()))?;
    let mut out = Vec::with_capacity(payload.len() + 128);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(source_hash);
    out.extend_from_slice(&content_hash(&payload));
    out.extend_from_slice(&(tool_version.len() as u32).to_le_bytes());
    out.extend_from_slice(tool_version.as_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Header fields of a snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub source_hash: ContentHash,
    pub tool_version: String,
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8], CacheError> {
    if bytes.len() < n {
        return Err(CacheError::Corrupted);
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

/// Decodes a snapshot, refusing it unless the version and source hash match.
pub fn decode_snapshot(bytes: &[u8], expected_source: &ContentHash) -> Result<(SnapshotHeader, RoadGraph), CacheError> {
    let mut rest = bytes;
    if take(&mut rest, 8).map_err(|_| CacheError::BadMagic)? != CACHE_MAGIC {
        return Err(CacheError::BadMagic);
    }
    let version = u32::from_le_bytes(take(&mut rest, 4)?.try_into().expect("4 bytes"));
    if version != CACHE_FORMAT_VERSION {
        return Err(CacheError::VersionMismatch {
            found: version,
            expected: CACHE_FORMAT_VERSION,
        });
    }
    let source_hash: ContentHash = take(&mut rest, 32)?.try_into().expect("32 bytes");
    if &source_hash != expected_source {
        return Err(CacheError::HashMismatch);
    }
    let payload_hash: ContentHash = take(&mut rest, 32)?.try_into().expect("32 bytes");
    let tool_len = u32::from_le_bytes(take(&mut rest, 4)?.try_into().expect("4 bytes")) as usize;
    let tool_version = String::from_utf8(take(&mut rest, tool_len)?.to_vec()).map_err(|_| CacheError::Corrupted)?;
    if content_hash(rest) != payload_hash {
        return Err(CacheError::Corrupted);
    }
    let parts: GraphParts = bincode::deserialize(rest).map_err(|_| CacheError::Corrupted)?;
    let graph = RoadGraph::from_parts(parts)?;
    Ok((
        SnapshotHeader {
            format_version: version,
            source_hash,
            tool_version,
        },
        graph,
    ))
}

pub fn write_snapshot(
    path: &Path,
    graph: &RoadGraph,
    source_hash: &ContentHash,
    tool_version: &str,
) -> Result<(), CacheError> {
    let bytes = encode_snapshot(graph, source_hash, tool_version)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    Ok(())
}

pub fn read_snapshot(path: &Path, expected_source: &ContentHash) -> Result<RoadGraph, CacheError> {
    let bytes = std::fs::read(path)?;
    decode_snapshot(&bytes, expected_source).map(|(_, g)| g)
}
