//! Packed binary haplotypes.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "DTTB" | version u32 | n u64 | p u64 | id_bytes u64
//! site ids joined by tabs, zero padded to a multiple of 8 bytes
//! n rows of ceil(p / 64) u64 words; site j is bit j % 64 of word j / 64
//! ```

use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::dataset::HaplotypeFile;
use crate::error::{Error, Result};

pub const PACKED_MAGIC: &[u8; 4] = b"DTTB";
const VERSION: u32 = 1;

pub(crate) fn is_packed(path: &Path) -> Result<bool> {
    let mut head = [0u8; 4];
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let got = f.read(&mut head).map_err(|e| Error::io(path, e))?;
    Ok(got == 4 && &head == PACKED_MAGIC)
}

fn words_per_row(p: usize) -> usize {
    p.div_ceil(64)
}

/// Writes the haplotype rows only; the index is written by the caller.
pub fn write_packed_haplotypes(path: impl AsRef<Path>, file: &HaplotypeFile) -> Result<()> {
    let path = path.as_ref();
    let p = file.site_ids.len();
    let ids = file.site_ids.join("\t");
    let pad = (8 - ids.len() % 8) % 8;
    let words = words_per_row(p);
    let mut out = Vec::with_capacity(32 + ids.len() + pad + 8 * words * file.rows.len());
    out.extend_from_slice(PACKED_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(file.rows.len() as u64).to_le_bytes());
    out.extend_from_slice(&(p as u64).to_le_bytes());
    out.extend_from_slice(&(ids.len() as u64).to_le_bytes());
    out.extend_from_slice(ids.as_bytes());
    out.resize(out.len() + pad, 0);
    for row in &file.rows {
        if row.len() != p {
            return Err(Error::input(
                "haplotype row length differs from the site count",
            ));
        }
        let mut packed = vec![0u64; words];
        for (j, &a) in row.iter().enumerate() {
            if a > 1 {
                return Err(Error::input(format!("allele {a} is not 0 or 1")));
            }
            packed[j / 64] |= u64::from(a) << (j % 64);
        }
        for w in packed {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Site ids and rows of a packed haplotype file.
pub fn read_packed_haplotypes(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<u8>>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |field: &str, message: String| Error::parse(path, 0, field, message);
    let mut pos = 0usize;
    let mut take = |len: usize, field: &str| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + len).ok_or_else(|| {
            bad(
                field,
                format!("file ends at byte {} while reading {field}", bytes.len()),
            )
        })?;
        pos += len;
        Ok(s)
    };
    if take(4, "magic")? != PACKED_MAGIC {
        return Err(bad("magic", "not a packed haplotype file".into()));
    }
    let version = u32::from_le_bytes(take(4, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(bad("version", format!("unsupported version {version}")));
    }
    let mut u64_field = |field: &str| -> Result<usize> {
        let v = u64::from_le_bytes(take(8, field)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| bad(field, format!("{v} is too large")))
    };
    let n = u64_field("n")?;
    let p = u64_field("p")?;
    let id_bytes = u64_field("id_bytes")?;
    let ids =
        std::str::from_utf8(take(id_bytes, "sites")?).map_err(|e| bad("sites", e.to_string()))?;
    let site_ids: Vec<String> = if p == 0 {
        Vec::new()
    } else {
        ids.split('\t').map(String::from).collect()
    };
    if site_ids.len() != p {
        return Err(bad(
            "sites",
            format!("header declares {p} sites, found {}", site_ids.len()),
        ));
    }
    take((8 - id_bytes % 8) % 8, "padding")?;
    let words = words_per_row(p);
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let raw = take(8 * words, &format!("row {r}"))?;
        let packed: Vec<u64> = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        rows.push(
            (0..p)
                .map(|j| ((packed[j / 64] >> (j % 64)) & 1) as u8)
                .collect(),
        );
    }
    if pos != bytes.len() {
        return Err(bad("rows", format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok((site_ids, rows))
}
