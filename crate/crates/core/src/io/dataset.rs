use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::packed::{is_packed, read_packed_haplotypes, write_packed_haplotypes};
use super::{read_text, write_text, Table};
use crate::data::{Phenotype, PhenotypeKind, Side, TrioDataset, TrioRecord};
use crate::error::{Error, Result};
use crate::hmm::{GeneticMap, HaplotypePair, HmmParams, Site};

const HAPLOTYPE_MAGIC: &str = "#dtt-haplotypes";
const HAPLOTYPE_VERSION: u32 = 1;
const MAP_HEADER: [&str; 4] = ["site_id", "chrom", "bp", "cM"];
const INDEX_HEADER: [&str; 3] = ["row", "individual", "role"];
const PEDIGREE_HEADER: [&str; 3] = ["individual", "mother", "father"];
const MISSING_PARENT: &str = "0";

/// Which haplotype of a family a row holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HaplotypeRole {
    OffspringMaternal,
    OffspringPaternal,
    MotherA,
    MotherB,
    FatherA,
    FatherB,
}

impl HaplotypeRole {
    pub const ALL: [HaplotypeRole; 6] = [
        HaplotypeRole::OffspringMaternal,
        HaplotypeRole::OffspringPaternal,
        HaplotypeRole::MotherA,
        HaplotypeRole::MotherB,
        HaplotypeRole::FatherA,
        HaplotypeRole::FatherB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HaplotypeRole::OffspringMaternal => "offspring_m",
            HaplotypeRole::OffspringPaternal => "offspring_f",
            HaplotypeRole::MotherA => "mother_a",
            HaplotypeRole::MotherB => "mother_b",
            HaplotypeRole::FatherA => "father_a",
            HaplotypeRole::FatherB => "father_b",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexEntry {
    /// Offspring the row belongs to.
    pub individual: String,
    pub role: HaplotypeRole,
}

/// Haplotype rows with their site order and index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaplotypeFile {
    pub site_ids: Vec<String>,
    pub rows: Vec<Vec<u8>>,
    pub index: Vec<IndexEntry>,
}

impl HaplotypeFile {
    /// All haplotypes of `records`, six rows per trio and four per duo.
    pub fn from_records(records: &[TrioRecord], map: &GeneticMap) -> Self {
        let mut rows = Vec::new();
        let mut index = Vec::new();
        for r in records {
            let mut push = |role, row: &[u8]| {
                rows.push(row.to_vec());
                index.push(IndexEntry {
                    individual: r.id.clone(),
                    role,
                });
            };
            push(HaplotypeRole::OffspringMaternal, &r.x_m);
            push(HaplotypeRole::OffspringPaternal, &r.x_f);
            if let Some(m) = &r.mother {
                push(HaplotypeRole::MotherA, &m.strand_a);
                push(HaplotypeRole::MotherB, &m.strand_b);
            }
            if let Some(f) = &r.father {
                push(HaplotypeRole::FatherA, &f.strand_a);
                push(HaplotypeRole::FatherB, &f.strand_b);
            }
        }
        HaplotypeFile {
            site_ids: map.sites().iter().map(|s| s.id.clone()).collect(),
            rows,
            index,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PedigreeEntry {
    pub individual: String,
    pub mother: Option<String>,
    pub father: Option<String>,
}

/// Locations of the files making up a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetPaths {
    pub map: PathBuf,
    /// Text haplotypes, or packed binary when the name ends in `.dttb`.
    pub haplotypes: PathBuf,
    pub pedigree: PathBuf,
    pub phenotype: PathBuf,
}

impl DatasetPaths {
    /// `map.tsv`, `haplotypes.txt`, `pedigree.tsv` and `phenotype.tsv` in `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DatasetPaths {
            map: dir.join("map.tsv"),
            haplotypes: dir.join("haplotypes.txt"),
            pedigree: dir.join("pedigree.tsv"),
            phenotype: dir.join("phenotype.tsv"),
        }
    }

    pub fn packed(mut self) -> Self {
        self.haplotypes.set_extension("dttb");
        self
    }

    /// The haplotype index, stored next to the haplotypes with `.idx` appended.
    pub fn index(&self) -> PathBuf {
        index_path(&self.haplotypes)
    }
}

fn index_path(haplotypes: &Path) -> PathBuf {
    let mut s = haplotypes.as_os_str().to_owned();
    s.push(".idx");
    PathBuf::from(s)
}

fn format_cm(morgans: f64) -> String {
    // a neighbouring float of the scaled value may be needed for the
    // division by 100 on reading to give back the exact Morgan value
    let cm = morgans * 100.0;
    let bits = cm.to_bits() as i64;
    (0..8i64)
        .flat_map(|k| [k, -k])
        .map(|k| f64::from_bits((bits + k) as u64))
        .find(|c| c / 100.0 == morgans)
        .map_or_else(|| cm.to_string(), |c| c.to_string())
}

pub fn write_map(path: impl AsRef<Path>, map: &GeneticMap) -> Result<()> {
    let mut out = MAP_HEADER.join("\t");
    out.push('\n');
    for s in map.sites() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            s.id,
            s.chromosome,
            s.physical_pos,
            format_cm(s.genetic_pos)
        )
        .unwrap();
    }
    write_text(path.as_ref(), &out)
}

/// Reads a map in centiMorgans and converts it to Morgans.
pub fn read_map(path: impl AsRef<Path>) -> Result<GeneticMap> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let t = Table::parse(path, &text, &MAP_HEADER)?;
    let mut sites = Vec::with_capacity(t.rows.len());
    let mut seen = HashMap::new();
    for (line, f) in &t.rows {
        if f[0].is_empty() {
            return Err(t.error(*line, "site_id", "empty site id"));
        }
        if let Some(prev) = seen.insert(f[0], *line) {
            return Err(t.error(
                *line,
                "site_id",
                format!("`{}` already defined on line {prev}", f[0]),
            ));
        }
        let cm: f64 = t.field(*line, "cM", f[3])?;
        if !cm.is_finite() {
            return Err(t.error(*line, "cM", "not finite"));
        }
        let site = Site {
            id: f[0].to_string(),
            chromosome: t.field(*line, "chrom", f[1])?,
            physical_pos: t.field(*line, "bp", f[2])?,
            genetic_pos: cm / 100.0,
        };
        if let Some(prev) = sites
            .last()
            .filter(|p: &&Site| p.chromosome == site.chromosome)
        {
            if site.genetic_pos < prev.genetic_pos {
                return Err(t.error(
                    *line,
                    "cM",
                    "genetic position decreases along the chromosome",
                ));
            }
            if site.physical_pos < prev.physical_pos {
                return Err(t.error(
                    *line,
                    "bp",
                    "physical position decreases along the chromosome",
                ));
            }
        }
        sites.push(site);
    }
    GeneticMap::new(sites).map_err(|e| Error::parse(path, 0, "map", e.to_string()))
}

pub fn write_haplotypes(path: impl AsRef<Path>, file: &HaplotypeFile) -> Result<()> {
    let path = path.as_ref();
    if file.rows.len() != file.index.len() {
        return Err(Error::input("every haplotype row needs an index entry"));
    }
    if path.extension().is_some_and(|e| e == "dttb") {
        write_packed_haplotypes(path, file)?;
    } else {
        let p = file.site_ids.len();
        let mut out = String::with_capacity(file.rows.len() * (2 * p + 1) + 64);
        writeln!(
            out,
            "{HAPLOTYPE_MAGIC}\tversion={HAPLOTYPE_VERSION}\tn={}\tp={p}",
            file.rows.len()
        )
        .unwrap();
        out.push_str("#sites");
        for id in &file.site_ids {
            out.push('\t');
            out.push_str(id);
        }
        out.push('\n');
        for row in &file.rows {
            if row.len() != p {
                return Err(Error::input(
                    "haplotype row length differs from the site count",
                ));
            }
            for (j, &a) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                out.push(if a == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        write_text(path, &out)?;
    }
    let mut idx = INDEX_HEADER.join("\t");
    idx.push('\n');
    for (k, e) in file.index.iter().enumerate() {
        writeln!(idx, "{k}\t{}\t{}", e.individual, e.role.name()).unwrap();
    }
    write_text(&index_path(path), &idx)
}

fn header_value<'a>(path: &Path, token: Option<&'a str>, key: &str) -> Result<&'a str> {
    token
        .and_then(|t| t.strip_prefix(key)?.strip_prefix('='))
        .ok_or_else(|| Error::parse(path, 1, key, format!("expected `{key}=...`")))
}

fn read_text_haplotypes(path: &Path) -> Result<(Vec<String>, Vec<Vec<u8>>)> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let head = lines.next().unwrap_or("");
    let mut tokens = head.split('\t');
    if tokens.next() != Some(HAPLOTYPE_MAGIC) {
        return Err(Error::parse(
            path,
            1,
            "header",
            format!("missing `{HAPLOTYPE_MAGIC}` header"),
        ));
    }
    let version = header_value(path, tokens.next(), "version")?;
    if version != HAPLOTYPE_VERSION.to_string() {
        return Err(Error::parse(
            path,
            1,
            "version",
            format!("unsupported version {version}"),
        ));
    }
    let parse_count = |key: &str, v: &str| {
        v.parse::<usize>()
            .map_err(|e| Error::parse(path, 1, key, format!("cannot parse `{v}`: {e}")))
    };
    let n = parse_count("n", header_value(path, tokens.next(), "n")?)?;
    let p = parse_count("p", header_value(path, tokens.next(), "p")?)?;
    let sites_line = lines.next().unwrap_or("");
    let mut sites = sites_line.split('\t');
    if sites.next() != Some("#sites") {
        return Err(Error::parse(path, 2, "sites", "missing `#sites` line"));
    }
    let site_ids: Vec<String> = sites.map(String::from).collect();
    if site_ids.len() != p {
        return Err(Error::parse(
            path,
            2,
            "sites",
            format!("header declares {p} sites, found {}", site_ids.len()),
        ));
    }
    let mut rows = Vec::with_capacity(n);
    for (k, l) in lines.enumerate() {
        let line = k + 3;
        if l.is_empty() {
            continue;
        }
        let row = l
            .split(' ')
            .enumerate()
            .map(|(j, tok)| match tok {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(Error::parse(
                    path,
                    line,
                    format!("site {}", j + 1),
                    format!("allele `{tok}` is not 0 or 1"),
                )),
            })
            .collect::<Result<Vec<u8>>>()?;
        if row.len() != p {
            return Err(Error::parse(
                path,
                line,
                "row",
                format!("expected {p} alleles, found {}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::parse(
            path,
            1,
            "n",
            format!("header declares {n} haplotypes, found {}", rows.len()),
        ));
    }
    Ok((site_ids, rows))
}

/// Reads text or packed haplotypes and their index.
pub fn read_haplotypes(path: impl AsRef<Path>) -> Result<HaplotypeFile> {
    let path = path.as_ref();
    let (site_ids, rows) = if is_packed(path)? {
        read_packed_haplotypes(path)?
    } else {
        read_text_haplotypes(path)?
    };
    let idx_path = index_path(path);
    let text = read_text(&idx_path)?;
    let t = Table::parse(&idx_path, &text, &INDEX_HEADER)?;
    let mut index = Vec::with_capacity(t.rows.len());
    let mut seen = HashMap::new();
    for (k, (line, f)) in t.rows.iter().enumerate() {
        let row: usize = t.field(*line, "row", f[0])?;
        if row != k {
            return Err(t.error(*line, "row", format!("expected row {k}, found {row}")));
        }
        let role = HaplotypeRole::from_name(f[2])
            .ok_or_else(|| t.error(*line, "role", format!("unknown role `{}`", f[2])))?;
        if seen.insert((f[1], role), *line).is_some() {
            return Err(t.error(
                *line,
                "role",
                format!("{} of `{}` appears twice", f[2], f[1]),
            ));
        }
        index.push(IndexEntry {
            individual: f[1].to_string(),
            role,
        });
    }
    if index.len() != rows.len() {
        return Err(Error::parse(
            &idx_path,
            0,
            "row",
            format!(
                "{} index entries for {} haplotype rows",
                index.len(),
                rows.len()
            ),
        ));
    }
    Ok(HaplotypeFile {
        site_ids,
        rows,
        index,
    })
}

pub fn write_pedigree(path: impl AsRef<Path>, entries: &[PedigreeEntry]) -> Result<()> {
    let mut out = PEDIGREE_HEADER.join("\t");
    out.push('\n');
    for e in entries {
        let m = e.mother.as_deref().unwrap_or(MISSING_PARENT);
        let f = e.father.as_deref().unwrap_or(MISSING_PARENT);
        writeln!(out, "{}\t{m}\t{f}", e.individual).unwrap();
    }
    write_text(path.as_ref(), &out)
}

pub fn read_pedigree(path: impl AsRef<Path>) -> Result<Vec<PedigreeEntry>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let t = Table::parse(path, &text, &PEDIGREE_HEADER)?;
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, f) in &t.rows {
        if f[0].is_empty() || f[0] == MISSING_PARENT {
            return Err(t.error(*line, "individual", format!("invalid id `{}`", f[0])));
        }
        if let Some(prev) = seen.insert(f[0], *line) {
            return Err(t.error(
                *line,
                "individual",
                format!("`{}` already listed on line {prev}", f[0]),
            ));
        }
        let parent = |v: &str| (v != MISSING_PARENT && !v.is_empty()).then(|| v.to_string());
        let e = PedigreeEntry {
            individual: f[0].to_string(),
            mother: parent(f[1]),
            father: parent(f[2]),
        };
        if e.mother.is_none() && e.father.is_none() {
            return Err(t.error(*line, "mother", "at least one parent must be genotyped"));
        }
        out.push(e);
    }
    Ok(out)
}

fn format_value(v: f64) -> String {
    format!("{v}")
}

pub fn write_phenotype(
    path: impl AsRef<Path>,
    ids: &[String],
    phenotype: &Phenotype,
) -> Result<()> {
    if ids.len() != phenotype.len() {
        return Err(Error::input("one id per phenotype value is needed"));
    }
    let kind = match phenotype.kind() {
        PhenotypeKind::Binary => "binary",
        PhenotypeKind::Continuous => "continuous",
    };
    let mut out = format!("individual\t{kind}\n");
    for (i, id) in ids.iter().enumerate() {
        writeln!(out, "{id}\t{}", format_value(phenotype.value(i))).unwrap();
    }
    write_text(path.as_ref(), &out)
}

/// Phenotype values keyed by individual.
pub fn read_phenotype(path: impl AsRef<Path>) -> Result<(PhenotypeKind, Vec<(String, f64)>)> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let second = text
        .lines()
        .next()
        .and_then(|l| l.split('\t').nth(1))
        .unwrap_or("");
    let kind = match second {
        "binary" => PhenotypeKind::Binary,
        "continuous" => PhenotypeKind::Continuous,
        other => {
            return Err(Error::parse(
                path,
                1,
                "header",
                format!("second column must be `binary` or `continuous`, found `{other}`"),
            ))
        }
    };
    let t = Table::parse(path, &text, &["individual", second])?;
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, f) in &t.rows {
        if let Some(prev) = seen.insert(f[0], *line) {
            return Err(t.error(
                *line,
                "individual",
                format!("`{}` already listed on line {prev}", f[0]),
            ));
        }
        let v: f64 = t.field(*line, second, f[1])?;
        let ok = match kind {
            PhenotypeKind::Binary => v == 0.0 || v == 1.0,
            PhenotypeKind::Continuous => v.is_finite(),
        };
        if !ok {
            return Err(t.error(*line, second, format!("invalid {second} value `{}`", f[1])));
        }
        out.push((f[0].to_string(), v));
    }
    Ok((kind, out))
}

/// Reads and cross-checks the files of a dataset. Records follow the
/// pedigree order.
pub fn load_dataset(paths: &DatasetPaths, params: HmmParams) -> Result<TrioDataset> {
    let map = read_map(&paths.map)?;
    let haps = read_haplotypes(&paths.haplotypes)?;
    let pedigree = read_pedigree(&paths.pedigree)?;
    let (kind, values) = read_phenotype(&paths.phenotype)?;

    let map_ids: Vec<&str> = map.sites().iter().map(|s| s.id.as_str()).collect();
    if let Some(j) = (0..map_ids.len().max(haps.site_ids.len()))
        .find(|&j| map_ids.get(j).copied() != haps.site_ids.get(j).map(|s| s.as_str()))
    {
        return Err(Error::parse(
            &paths.haplotypes,
            2,
            "sites",
            format!(
                "site {} is `{}` but the map has `{}`",
                j + 1,
                haps.site_ids.get(j).map_or("<none>", |s| s.as_str()),
                map_ids.get(j).copied().unwrap_or("<none>")
            ),
        ));
    }

    let mut by_family: HashMap<&str, [Option<usize>; 6]> = HashMap::new();
    for (k, e) in haps.index.iter().enumerate() {
        let slot = HaplotypeRole::ALL
            .iter()
            .position(|&r| r == e.role)
            .unwrap();
        by_family.entry(e.individual.as_str()).or_default()[slot] = Some(k);
    }
    let idx_path = paths.index();
    let pedigree_lines: HashMap<&str, usize> = pedigree
        .iter()
        .enumerate()
        .map(|(k, e)| (e.individual.as_str(), k + 2))
        .collect();
    for (k, e) in haps.index.iter().enumerate() {
        if !pedigree_lines.contains_key(e.individual.as_str()) {
            return Err(Error::parse(
                &idx_path,
                k + 2,
                "individual",
                format!("`{}` is not in the pedigree", e.individual),
            ));
        }
    }

    let phenotype_of: HashMap<&str, f64> = values.iter().map(|(id, v)| (id.as_str(), *v)).collect();
    for (k, (id, _)) in values.iter().enumerate() {
        if !pedigree_lines.contains_key(id.as_str()) {
            return Err(Error::parse(
                &paths.phenotype,
                k + 2,
                "individual",
                format!("`{id}` is not in the pedigree"),
            ));
        }
    }

    let mut records = Vec::with_capacity(pedigree.len());
    let mut y = Vec::with_capacity(pedigree.len());
    for e in &pedigree {
        let line = pedigree_lines[e.individual.as_str()];
        let missing = |what: &str| {
            Error::parse(
                &paths.pedigree,
                line,
                "individual",
                format!("`{}` has no {what} haplotypes", e.individual),
            )
        };
        let slots = by_family
            .get(e.individual.as_str())
            .ok_or_else(|| missing("offspring"))?;
        let row =
            |r: HaplotypeRole| slots[HaplotypeRole::ALL.iter().position(|&x| x == r).unwrap()];
        let take = |r: HaplotypeRole| row(r).map(|k| haps.rows[k].clone());
        let (Some(x_m), Some(x_f)) = (
            take(HaplotypeRole::OffspringMaternal),
            take(HaplotypeRole::OffspringPaternal),
        ) else {
            return Err(missing("offspring"));
        };
        let parent =
            |side: Side, a: HaplotypeRole, b: HaplotypeRole| -> Result<Option<HaplotypePair>> {
                let (listed, field) = match side {
                    Side::Maternal => (e.mother.is_some(), "mother"),
                    Side::Paternal => (e.father.is_some(), "father"),
                };
                match (listed, take(a), take(b)) {
                    (true, Some(a), Some(b)) => Ok(Some(HaplotypePair::new(a, b)?)),
                    (false, None, None) => Ok(None),
                    (true, _, _) => Err(missing(field)),
                    (false, _, _) => Err(Error::parse(
                        &paths.pedigree,
                        line,
                        field,
                        format!(
                            "`{}` has {field} haplotypes but no {field} listed",
                            e.individual
                        ),
                    )),
                }
            };
        let mother = parent(
            Side::Maternal,
            HaplotypeRole::MotherA,
            HaplotypeRole::MotherB,
        )?;
        let father = parent(
            Side::Paternal,
            HaplotypeRole::FatherA,
            HaplotypeRole::FatherB,
        )?;
        records.push(TrioRecord::new(
            e.individual.clone(),
            x_m,
            x_f,
            mother,
            father,
        )?);
        let v = phenotype_of.get(e.individual.as_str()).ok_or_else(|| {
            Error::parse(
                &paths.pedigree,
                line,
                "individual",
                format!("`{}` has no phenotype", e.individual),
            )
        })?;
        y.push(*v);
    }
    let phenotype = match kind {
        PhenotypeKind::Binary => Phenotype::binary(y.iter().map(|&v| v as u8).collect())?,
        PhenotypeKind::Continuous => Phenotype::continuous(y)?,
    };
    TrioDataset::new(records, phenotype, map, params)
}

/// Writes every file of `data`. Parents are named `<id>_mother` and
/// `<id>_father` in the pedigree.
pub fn save_dataset(paths: &DatasetPaths, data: &TrioDataset) -> Result<()> {
    write_map(&paths.map, &data.map)?;
    write_haplotypes(
        &paths.haplotypes,
        &HaplotypeFile::from_records(&data.records, &data.map),
    )?;
    let pedigree: Vec<PedigreeEntry> = data
        .records
        .iter()
        .map(|r| PedigreeEntry {
            individual: r.id.clone(),
            mother: r.mother.as_ref().map(|_| format!("{}_mother", r.id)),
            father: r.father.as_ref().map(|_| format!("{}_father", r.id)),
        })
        .collect();
    write_pedigree(&paths.pedigree, &pedigree)?;
    let ids: Vec<String> = data.records.iter().map(|r| r.id.clone()).collect();
    write_phenotype(&paths.phenotype, &ids, &data.phenotype)
}
