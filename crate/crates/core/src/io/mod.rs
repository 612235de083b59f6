//! File formats.
//!
//! All text formats are tab-separated with a header line, and every number
//! is written in a locale-independent form so that saving a loaded file
//! reproduces it byte for byte. Malformed input is reported with the file,
//! line and field at fault and nothing is partially loaded.
//!
//! A dataset is five files:
//!
//! | file | content |
//! |------|---------|
//! | map | `site_id chrom bp cM`, one site per line |
//! | haplotypes | one haplotype per line as `0`/`1` tokens, or the packed binary variant |
//! | haplotype index | `row individual role` for every haplotype row |
//! | pedigree | `individual mother father`, `0` for an ungenotyped parent |
//! | phenotype | `individual binary` or `individual continuous` |
//!
//! Haplotype roles are `offspring_m`, `offspring_f`, `mother_a`,
//! `mother_b`, `father_a` and `father_b`; parental rows are keyed by the
//! offspring they belong to.

mod dataset;
mod gwas;
mod packed;
mod results;

pub use dataset::{
    load_dataset, read_haplotypes, read_map, read_pedigree, read_phenotype, save_dataset,
    write_haplotypes, write_map, write_pedigree, write_phenotype, DatasetPaths, HaplotypeFile,
    HaplotypeRole, IndexEntry, PedigreeEntry,
};
pub use gwas::{read_gwas, read_model, write_gwas, write_model};
pub use packed::{read_packed_haplotypes, write_packed_haplotypes, PACKED_MAGIC};
pub use results::{
    format_p, load_groups, read_groups, read_result_table, write_groups, write_manhattan_csv,
    write_result_table, GroupSpec, Manifest, ResultRow, ResultTable,
};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Tab-separated records after a required header, with 1-based line numbers.
pub(crate) struct Table<'a> {
    path: &'a Path,
    pub rows: Vec<(usize, Vec<&'a str>)>,
}

impl<'a> Table<'a> {
    pub fn parse(path: &'a Path, text: &'a str, header: &[&str]) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "header", "file is empty"))?;
        let found: Vec<&str> = first.split('\t').collect();
        if found != header {
            return Err(Error::parse(
                path,
                1,
                "header",
                format!("expected `{}`, found `{}`", header.join("\t"), first),
            ));
        }
        let mut rows = Vec::new();
        for (line, l) in lines {
            if l.is_empty() {
                continue;
            }
            let fields: Vec<&str> = l.split('\t').collect();
            if fields.len() != header.len() {
                return Err(Error::parse(
                    path,
                    line,
                    "row",
                    format!("expected {} fields, found {}", header.len(), fields.len()),
                ));
            }
            rows.push((line, fields));
        }
        Ok(Table { path, rows })
    }

    pub fn error(&self, line: usize, field: &str, message: impl Into<String>) -> Error {
        Error::parse(self.path, line, field, message)
    }

    pub fn field<T: std::str::FromStr>(&self, line: usize, name: &str, value: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        value
            .parse()
            .map_err(|e: T::Err| self.error(line, name, format!("cannot parse `{value}`: {e}")))
    }
}
