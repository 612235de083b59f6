use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text};
use crate::data::{Phenotype, PhenotypeKind};
use crate::error::{Error, Result};
use crate::statistics::{Family, FittedModel, GwasDataset};

/// Writes an external association study as
/// `individual <binary|continuous> <site ids...>` with genotypes 0, 1 or 2.
pub fn write_gwas(path: impl AsRef<Path>, site_ids: &[String], data: &GwasDataset) -> Result<()> {
    if site_ids.len() != data.p() {
        return Err(Error::input(format!(
            "{} site ids for {} columns",
            site_ids.len(),
            data.p()
        )));
    }
    let y = data.phenotype();
    let kind = match y.kind() {
        PhenotypeKind::Binary => "binary",
        PhenotypeKind::Continuous => "continuous",
    };
    let mut out = format!("individual\t{kind}");
    for id in site_ids {
        out.push('\t');
        out.push_str(id);
    }
    out.push('\n');
    for i in 0..data.n() {
        write!(out, "ind{}\t{}", i + 1, y.value(i)).unwrap();
        for j in 0..data.p() {
            out.push('\t');
            out.push(char::from(b'0' + data.get(i, j)));
        }
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

/// Site ids and data of an external association study.
pub fn read_gwas(path: impl AsRef<Path>) -> Result<(Vec<String>, GwasDataset)> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, head) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "header", "file is empty"))?;
    let header: Vec<&str> = head.split('\t').collect();
    if header.len() < 3 || header[0] != "individual" {
        return Err(Error::parse(
            path,
            1,
            "header",
            "expected `individual`, the trait type and at least one site",
        ));
    }
    let kind = match header[1] {
        "binary" => PhenotypeKind::Binary,
        "continuous" => PhenotypeKind::Continuous,
        other => {
            return Err(Error::parse(
                path,
                1,
                "header",
                format!("trait type must be `binary` or `continuous`, found `{other}`"),
            ))
        }
    };
    let site_ids: Vec<String> = header[2..].iter().map(|s| s.to_string()).collect();
    let p = site_ids.len();
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut y = Vec::new();
    for (line, l) in lines {
        if l.is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != p + 2 {
            return Err(Error::parse(
                path,
                line,
                "row",
                format!("expected {} fields, found {}", p + 2, f.len()),
            ));
        }
        let v: f64 = f[1].parse().map_err(|e| {
            Error::parse(
                path,
                line,
                header[1],
                format!("cannot parse `{}`: {e}", f[1]),
            )
        })?;
        let ok = match kind {
            PhenotypeKind::Binary => v == 0.0 || v == 1.0,
            PhenotypeKind::Continuous => v.is_finite(),
        };
        if !ok {
            return Err(Error::parse(
                path,
                line,
                header[1],
                format!("invalid value `{}`", f[1]),
            ));
        }
        y.push(v);
        let row = f[2..]
            .iter()
            .enumerate()
            .map(|(j, tok)| match *tok {
                "0" => Ok(0u8),
                "1" => Ok(1),
                "2" => Ok(2),
                _ => Err(Error::parse(
                    path,
                    line,
                    site_ids[j].clone(),
                    format!("genotype `{tok}` is not 0, 1 or 2"),
                )),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 2, "row", "no individuals"));
    }
    let phenotype = match kind {
        PhenotypeKind::Binary => Phenotype::binary(y.iter().map(|&v| v as u8).collect())?,
        PhenotypeKind::Continuous => Phenotype::continuous(y)?,
    };
    Ok((site_ids, GwasDataset::from_rows(&rows, phenotype)?))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    family: Family,
    lambda: f64,
    cv_score: Option<f64>,
    intercept: f64,
    sites: Vec<String>,
    coefficients: Vec<f64>,
}

/// Writes a fitted model as JSON, with the site id of every coefficient.
pub fn write_model(path: impl AsRef<Path>, site_ids: &[String], model: &FittedModel) -> Result<()> {
    if site_ids.len() != model.coefficients.len() {
        return Err(Error::input(format!(
            "{} site ids for {} coefficients",
            site_ids.len(),
            model.coefficients.len()
        )));
    }
    let file = ModelFile {
        family: model.family,
        lambda: model.lambda,
        cv_score: model.cv_score.is_finite().then_some(model.cv_score),
        intercept: model.intercept,
        sites: site_ids.to_vec(),
        coefficients: model.coefficients.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::input(e.to_string()))?;
    text.push('\n');
    write_text(path.as_ref(), &text)
}

/// Site ids and model of a JSON model file.
pub fn read_model(path: impl AsRef<Path>) -> Result<(Vec<String>, FittedModel)> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line(), "model", e.to_string()))?;
    if file.sites.len() != file.coefficients.len() {
        return Err(Error::parse(
            path,
            0,
            "coefficients",
            "one coefficient per site is needed",
        ));
    }
    if file
        .coefficients
        .iter()
        .chain([&file.intercept])
        .any(|b| !b.is_finite())
    {
        return Err(Error::parse(
            path,
            0,
            "coefficients",
            "coefficients must be finite",
        ));
    }
    Ok((
        file.sites,
        FittedModel {
            intercept: file.intercept,
            coefficients: file.coefficients,
            family: file.family,
            lambda: file.lambda,
            cv_score: file.cv_score.unwrap_or(f64::NAN),
        },
    ))
}
