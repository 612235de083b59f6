use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{read_text, write_text, Table};
use crate::data::GroupPartition;
use crate::error::{Error, Result};
use crate::hmm::{GeneticMap, Interval};
use crate::multiple_testing::DiscoverySet;
use crate::twin_tests::PValueTable;

const GROUP_HEADER: [&str; 4] = ["group_id", "chrom", "start_bp", "end_bp"];
const RESULT_HEADER: [&str; 8] = [
    "group_id",
    "chrom",
    "start_bp",
    "end_bp",
    "p_value",
    "weight",
    "rejected",
    "procedure",
];

/// `x` with 12 significant digits, in positional notation down to `1e-5`
/// and in scientific notation below.
pub fn format_p(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-5..12).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = mantissa
        .strip_prefix('-')
        .map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exp < 0 {
        format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        let split = exp as usize + 1;
        format!("{sign}{}.{}", &digits[..split], &digits[split..])
    }
}

/// Where the test groups come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSpec {
    File(PathBuf),
    /// Windows of this many base pairs along every chromosome.
    Width(u64),
}

pub fn load_groups(spec: &GroupSpec, map: &GeneticMap) -> Result<GroupPartition> {
    match spec {
        GroupSpec::File(path) => read_groups(path, map),
        GroupSpec::Width(bp) => GroupPartition::by_physical_width(map, *bp),
    }
}

pub fn write_groups(
    path: impl AsRef<Path>,
    partition: &GroupPartition,
    map: &GeneticMap,
) -> Result<()> {
    let mut out = GROUP_HEADER.join("\t");
    out.push('\n');
    for (k, g) in partition.groups().iter().enumerate() {
        let (a, b) = (map.site(g.first), map.site(g.last));
        writeln!(
            out,
            "g{}\t{}\t{}\t{}",
            k + 1,
            a.chromosome,
            a.physical_pos,
            b.physical_pos
        )
        .unwrap();
    }
    write_text(path.as_ref(), &out)
}

/// Reads `group_id chrom start_bp end_bp` windows; each group holds the
/// sites of its chromosome inside the closed window. Groups must be
/// nonempty and must not overlap.
pub fn read_groups(path: impl AsRef<Path>, map: &GeneticMap) -> Result<GroupPartition> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let t = Table::parse(path, &text, &GROUP_HEADER)?;
    let mut groups: Vec<(usize, Interval)> = Vec::with_capacity(t.rows.len());
    for (line, f) in &t.rows {
        let chrom: u32 = t.field(*line, "chrom", f[1])?;
        let start: u64 = t.field(*line, "start_bp", f[2])?;
        let end: u64 = t.field(*line, "end_bp", f[3])?;
        if end < start {
            return Err(t.error(*line, "end_bp", "window ends before it starts"));
        }
        let range = map.chromosome_range(chrom).ok_or_else(|| {
            t.error(
                *line,
                "chrom",
                format!("chromosome {chrom} is not in the map"),
            )
        })?;
        let inside: Vec<usize> = (range.start..range.end)
            .filter(|&j| (start..=end).contains(&map.site(j).physical_pos))
            .collect();
        let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
            return Err(t.error(*line, "start_bp", "window contains no sites"));
        };
        groups.push((*line, Interval { first, last }));
    }
    groups.sort_by_key(|(_, g)| *g);
    for w in groups.windows(2) {
        if w[1].1.first <= w[0].1.last {
            return Err(t.error(
                w[1].0,
                "start_bp",
                format!("overlaps the group on line {}", w[0].0),
            ));
        }
    }
    GroupPartition::new(groups.into_iter().map(|(_, g)| g).collect(), map)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub group_id: String,
    pub chrom: u32,
    pub start_bp: u64,
    pub end_bp: u64,
    pub p_value: f64,
    pub weight: f64,
    pub rejected: bool,
    pub procedure: String,
}

/// One row per tested group, sorted by chromosome and start.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Rows for `table`, marking the groups in `discoveries` as rejected.
    pub fn from_pvalues(
        table: &PValueTable,
        map: &GeneticMap,
        discoveries: Option<&DiscoverySet>,
    ) -> Self {
        let procedure = discoveries.map_or("none", |d| d.procedure.name());
        let rows = table
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let (a, b) = (map.site(e.group.first), map.site(e.group.last));
                ResultRow {
                    group_id: format!("g{}", e.group_index + 1),
                    chrom: a.chromosome,
                    start_bp: a.physical_pos,
                    end_bp: b.physical_pos,
                    p_value: e.p_value,
                    weight: e.weight,
                    rejected: discoveries.is_some_and(|d| d.contains(k)),
                    procedure: procedure.to_string(),
                }
            })
            .collect();
        let mut t = ResultTable { rows };
        t.sort();
        t
    }

    pub fn sort(&mut self) {
        self.rows.sort_by_key(|r| (r.chrom, r.start_bp, r.end_bp));
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.p_value).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.weight).collect()
    }

    /// Marks the rows in `discoveries` and records the procedure.
    pub fn apply(&mut self, discoveries: &DiscoverySet) {
        for (k, r) in self.rows.iter_mut().enumerate() {
            r.rejected = discoveries.contains(k);
            r.procedure = discoveries.procedure.name().to_string();
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = RESULT_HEADER.join("\t");
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.group_id,
                r.chrom,
                r.start_bp,
                r.end_bp,
                format_p(r.p_value),
                format_p(r.weight),
                u8::from(r.rejected),
                r.procedure
            )
            .unwrap();
        }
        out
    }
}

pub fn write_result_table(path: impl AsRef<Path>, table: &ResultTable) -> Result<()> {
    write_text(path.as_ref(), &table.to_tsv())
}

pub fn read_result_table(path: impl AsRef<Path>) -> Result<ResultTable> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let t = Table::parse(path, &text, &RESULT_HEADER)?;
    let mut rows = Vec::with_capacity(t.rows.len());
    for (line, f) in &t.rows {
        let p_value: f64 = t.field(*line, "p_value", f[4])?;
        if !(p_value > 0.0 && p_value <= 1.0) {
            return Err(t.error(*line, "p_value", format!("{p_value} is not in (0, 1]")));
        }
        let rejected = match f[6] {
            "0" => false,
            "1" => true,
            other => return Err(t.error(*line, "rejected", format!("`{other}` is not 0 or 1"))),
        };
        rows.push(ResultRow {
            group_id: f[0].to_string(),
            chrom: t.field(*line, "chrom", f[1])?,
            start_bp: t.field(*line, "start_bp", f[2])?,
            end_bp: t.field(*line, "end_bp", f[3])?,
            p_value,
            weight: t.field(*line, "weight", f[5])?,
            rejected,
            procedure: f[7].to_string(),
        });
    }
    Ok(ResultTable { rows })
}

/// Writes `chrom,pos,neg_log10_p` rows sorted by position.
pub fn write_manhattan_csv(path: impl AsRef<Path>, points: &[(u32, u64, f64)]) -> Result<()> {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|&(c, pos, _)| (c, pos));
    let mut out = String::from("chrom,pos,neg_log10_p\n");
    for (c, pos, p) in sorted {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::input(format!("p-value {p} is not in (0, 1]")));
        }
        // p = 1 prints as 0 rather than -0
        writeln!(out, "{c},{pos},{:.6}", -p.log10() + 0.0).unwrap();
    }
    write_text(path.as_ref(), &out)
}

/// Machine-readable record of one command run.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, threads: usize) -> Self {
        Manifest {
            tool: "dtt".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            threads,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(
            key.into(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| Error::input(e.to_string()))?;
        text.push('\n');
        write_text(path.as_ref(), &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(1.0), "1.00000000000");
        assert_eq!(format_p(0.01), "0.0100000000000");
        assert_eq!(format_p(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_p(37.0 / 100.0), "0.370000000000");
        assert_eq!(format_p(5e-8), "5.00000000000e-8");
        assert_eq!(format_p(12.5), "12.5000000000");
        assert_eq!(format_p(0.0), "0");
        assert_eq!(format_p(-0.25), "-0.250000000000");
        for k in 1..=100u32 {
            let p = f64::from(k) / 100.0;
            let back: f64 = format_p(p).parse().unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn physical_width_groups() {
        // 63 sites at 1 Mb spacing: 63 Mb span
        let map = GeneticMap::uniform(&[(1, 64, 0.63, 63_000_001)]).unwrap();
        let g = load_groups(&GroupSpec::Width(5_000_000), &map).unwrap();
        assert_eq!(g.len(), 13);
        let last = g.groups()[12];
        assert!(last.len() < g.groups()[0].len());
        let one = load_groups(&GroupSpec::Width(100_000_000), &map).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn group_file_round_trip_and_overlap() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("groups.tsv");
        let map = GeneticMap::uniform(&[(1, 20, 0.2, 20_000), (2, 10, 0.1, 10_000)]).unwrap();
        let part = GroupPartition::equal_count(&map, 3).unwrap();
        write_groups(&path, &part, &map).unwrap();
        let back = load_groups(&GroupSpec::File(path.clone()), &map).unwrap();
        assert_eq!(back, part);
        std::fs::write(
            &path,
            "group_id\tchrom\tstart_bp\tend_bp\na\t1\t1\t5000\nb\t1\t4000\t9000\n",
        )
        .unwrap();
        assert!(matches!(
            read_groups(&path, &map),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn manhattan_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_manhattan_csv(&path, &[(2, 5, 1.0), (1, 9, 5e-8), (1, 3, 0.1)]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "chrom,pos,neg_log10_p\n1,3,1.000000\n1,9,7.301030\n2,5,0.000000\n"
        );
    }

    #[test]
    fn result_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.tsv");
        let table = ResultTable {
            rows: vec![ResultRow {
                group_id: "g1".into(),
                chrom: 1,
                start_bp: 10,
                end_bp: 20,
                p_value: 0.03,
                weight: 0.5,
                rejected: true,
                procedure: "bh".into(),
            }],
        };
        write_result_table(&path, &table).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = read_result_table(&path).unwrap();
        assert_eq!(back, table);
        write_result_table(&path, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }
}
