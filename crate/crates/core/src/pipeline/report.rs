use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{file_hashes, list_files, sha256_hex, write_bytes, write_json, Settings};
use crate::error::{Error, Result};
use crate::formats::{self, FileDocument, Format};
use crate::geometry::kabsch_rmsd;
use crate::metrics::{molecule_key, MetricsReport, SCHEMA_VERSION};
use crate::structure::Molecule;

const MISSING: &str = "—";
const HISTOGRAM_BINS: usize = 20;

struct Input {
    name: String,
    dir: Option<PathBuf>,
    report: MetricsReport,
    report_hash: String,
}

fn load_input(path: &Path, name: String) -> Result<Input> {
    let (file, dir) = if path.is_dir() {
        (path.join("report.json"), Some(path.to_path_buf()))
    } else {
        (path.to_path_buf(), path.parent().map(Path::to_path_buf))
    };
    let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    if version != Some(SCHEMA_VERSION as u64) {
        return Err(Error::Invalid(format!(
            "{}: report schema version {} is not {SCHEMA_VERSION}",
            file.display(),
            version.map_or("missing".to_string(), |v| v.to_string())
        )));
    }
    Ok(Input {
        name,
        dir,
        report: serde_json::from_value(value)?,
        report_hash: sha256_hex(text.as_bytes()),
    })
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

fn fmt_opt(v: Option<f64>, places: usize) -> String {
    v.map_or(MISSING.to_string(), |x| format!("{x:.places$}"))
}

/// Aligned text table with one column per report.
pub fn render_table(columns: &[(String, MetricsReport)]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    let mut row = |label: &str, f: &dyn Fn(&MetricsReport) -> String| {
        rows.push((label.to_string(), columns.iter().map(|(_, r)| f(r)).collect()));
    };
    row("kind", &|r| format!("{:?}", r.kind).to_lowercase());
    row("samples", &|r| r.n_samples.to_string());
    row("decode failed", &|r| r.n_decode_failed.to_string());
    row("valid %", &|r| format!("{:.2}", r.valid_pct));
    row("unique %", &|r| fmt_opt(r.unique_pct, 2));
    row("novel %", &|r| fmt_opt(r.novel_pct, 2));
    row("struct. valid %", &|r| fmt_opt(r.struct_valid_pct, 2));
    row("comp. valid %", &|r| fmt_opt(r.comp_valid_pct, 2));
    row("residue valid %", &|r| fmt_opt(r.residue_valid_pct, 2));
    row("overlap valid %", &|r| fmt_opt(r.overlap_valid_pct, 2));
    row("QED", &|r| fmt_opt(r.qed, 3));
    row("SA", &|r| fmt_opt(r.sa, 3));
    row("COV-R", &|r| fmt_opt(r.cov_r, 3));
    row("COV-P", &|r| fmt_opt(r.cov_p, 3));
    let mut props: Vec<&String> = columns
        .iter()
        .flat_map(|(_, r)| r.emd.keys().chain(r.train_half_emd.keys()))
        .collect();
    props.sort();
    props.dedup();
    for p in &props {
        row(&format!("EMD {p}"), &|r| fmt_opt(r.emd.get(*p).copied(), 4));
        row(&format!("EMD {p} (train halves)"), &|r| fmt_opt(r.train_half_emd.get(*p).copied(), 4));
    }

    let header: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
    let label_w = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns.len())
        .map(|c| {
            rows.iter()
                .map(|(_, v)| v[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let pad = |s: &str, w: usize| format!("{}{s}", " ".repeat(w - s.chars().count()));
    let mut out = " ".repeat(label_w);
    for (h, w) in header.iter().zip(&widths) {
        out.push_str("  ");
        out.push_str(&pad(h, *w));
    }
    out.push('\n');
    for (label, values) in &rows {
        out.push_str(label);
        out.push_str(&" ".repeat(label_w - label.chars().count()));
        for (v, w) in values.iter().zip(&widths) {
            out.push_str("  ");
            out.push_str(&pad(v, *w));
        }
        out.push('\n');
    }
    out
}

#[derive(serde::Deserialize)]
struct PropertyLine {
    source: String,
    #[allow(dead_code)]
    index: usize,
    property: String,
    value: f64,
}

#[derive(serde::Deserialize, serde::Serialize)]
struct PairLine {
    index: usize,
    nearest: f64,
    farthest: f64,
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    rdr.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn csv_bytes(mut w: csv::Writer<Vec<u8>>, rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::Invalid(format!("csv: {}", e.error())))
}

/// Shared-bin histograms per property so models line up.
fn histogram_rows(per_model: &[(String, Vec<PropertyLine>)]) -> Vec<Vec<String>> {
    let mut ranges: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for (_, lines) in per_model {
        for l in lines {
            let e = ranges.entry(&l.property).or_insert((l.value, l.value));
            e.0 = e.0.min(l.value);
            e.1 = e.1.max(l.value);
        }
    }
    let mut rows = Vec::new();
    for (model, lines) in per_model {
        for (prop, &(lo, hi)) in &ranges {
            let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
            for source in ["sample", "train"] {
                let mut counts = [0usize; HISTOGRAM_BINS];
                let mut any = false;
                for l in lines.iter().filter(|l| l.property == *prop && l.source == source) {
                    let b = (((l.value - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
                    counts[b] += 1;
                    any = true;
                }
                if !any {
                    continue;
                }
                for (b, c) in counts.iter().enumerate() {
                    rows.push(vec![
                        model.clone(),
                        prop.to_string(),
                        source.to_string(),
                        format!("{:?}", lo + b as f64 * width),
                        format!("{:?}", lo + (b + 1) as f64 * width),
                        c.to_string(),
                    ]);
                }
            }
        }
    }
    rows
}

fn read_molecules(dir: &Path) -> Result<Vec<(String, Molecule)>> {
    let mut out = Vec::new();
    for path in list_files(dir)? {
        if path.extension().and_then(|e| e.to_str()).and_then(Format::from_extension) != Some(Format::Xyz) {
            continue;
        }
        if let Ok(crate::structure::Structure::Molecule(m)) = formats::parse(&FileDocument::read(&path)?) {
            out.push((super::file_name(&path), m));
        }
    }
    Ok(out)
}

/// For each generated molecule, the lowest RMSD to a reference conformer
/// with the same bond graph and the same atom order.
fn rmsd_rows(model: &str, generated: &[(String, Molecule)], reference: &[(String, Molecule)]) -> Vec<Vec<String>> {
    let ref_keys: Vec<String> = reference.iter().map(|(_, m)| molecule_key(m)).collect();
    let mut rows = Vec::new();
    for (name, m) in generated {
        let key = molecule_key(m);
        let elements: Vec<_> = m.atoms.iter().map(|a| a.element).collect();
        let mut best: Option<(f64, &str)> = None;
        for ((rname, r), rkey) in reference.iter().zip(&ref_keys) {
            if *rkey != key || r.atoms.iter().map(|a| a.element).ne(elements.iter().copied()) {
                continue;
            }
            let a: Vec<_> = m.atoms.iter().map(|x| x.position).collect();
            let b: Vec<_> = r.atoms.iter().map(|x| x.position).collect();
            if let Ok(d) = kabsch_rmsd(&a, &b) {
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, rname));
                }
            }
        }
        if let Some((d, rname)) = best {
            rows.push(vec![model.to_string(), name.clone(), rname.to_string(), format!("{d:?}")]);
        }
    }
    rows
}

/// Renders one or more evaluation reports side by side and writes
/// plot-ready CSVs. Returns the table text.
pub fn cmd_report(settings: &Settings, out: &Path) -> Result<String> {
    let inputs = split_list(&settings.require::<String>("input")?);
    if inputs.is_empty() {
        return Err(Error::Invalid("report needs at least one input".into()));
    }
    let names = settings.raw("names").map(split_list).unwrap_or_default();
    if !names.is_empty() && names.len() != inputs.len() {
        return Err(Error::Invalid(format!(
            "{} names given for {} inputs",
            names.len(),
            inputs.len()
        )));
    }
    let loaded: Vec<Input> = inputs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let name = names.get(i).cloned().unwrap_or_else(|| format!("model{}", i + 1));
            load_input(Path::new(p), name)
        })
        .collect::<Result<_>>()?;

    let columns: Vec<(String, MetricsReport)> =
        loaded.iter().map(|i| (i.name.clone(), i.report.clone())).collect();
    let table = render_table(&columns);
    write_bytes(&out.join("table.txt"), table.as_bytes())?;

    let mut per_model_props = Vec::new();
    let mut pair_rows = Vec::new();
    for input in &loaded {
        let Some(dir) = &input.dir else { continue };
        let props = dir.join("properties.csv");
        if props.is_file() {
            per_model_props.push((input.name.clone(), read_csv::<PropertyLine>(&props)?));
        }
        let pairs = dir.join("pair_stats.csv");
        if pairs.is_file() {
            for p in read_csv::<PairLine>(&pairs)? {
                pair_rows.push(vec![
                    input.name.clone(),
                    p.index.to_string(),
                    format!("{:?}", p.nearest),
                    format!("{:?}", p.farthest),
                ]);
            }
        }
    }
    let header = |h: &[&str]| {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(h).map(|_| w)
    };
    let csv_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    let hist = header(&["model", "property", "source", "bin_lo", "bin_hi", "count"]).map_err(csv_err)?;
    write_bytes(&out.join("histograms.csv"), &csv_bytes(hist, histogram_rows(&per_model_props))?)?;
    let pairs = header(&["model", "index", "nearest", "farthest"]).map_err(csv_err)?;
    write_bytes(&out.join("pairs.csv"), &csv_bytes(pairs, pair_rows)?)?;

    let mut outputs = vec!["table.txt", "histograms.csv", "pairs.csv"];
    if let Some(reference) = settings.raw("reference") {
        let reference = read_molecules(Path::new(reference))?;
        let conformers = split_list(settings.raw("conformers").unwrap_or(""));
        if conformers.len() != loaded.len() {
            return Err(Error::Invalid(
                "reference needs one conformers directory per input".into(),
            ));
        }
        let mut rows = Vec::new();
        for (input, dir) in loaded.iter().zip(&conformers) {
            rows.extend(rmsd_rows(&input.name, &read_molecules(Path::new(dir))?, &reference));
        }
        let w = header(&["model", "sample", "reference", "rmsd"]).map_err(csv_err)?;
        write_bytes(&out.join("rmsd.csv"), &csv_bytes(w, rows)?)?;
        outputs.push("rmsd.csv");
    }

    let manifest = json!({
        "command": "report",
        "status": "ok",
        "models": loaded.iter().map(|i| json!({"name": i.name, "report_hash": i.report_hash})).collect::<Vec<_>>(),
        "outputs": file_hashes(out, &outputs)?,
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_values_render_as_dash() {
        let report: MetricsReport = serde_json::from_value(json!({
            "schema_version": 1, "kind": "molecule", "n_samples": 10, "n_decode_failed": 1,
            "n_invalid": 2, "n_valid": 7, "valid_pct": 70.0, "unique_pct": 100.0, "novel_pct": 50.0,
            "struct_valid_pct": null, "comp_valid_pct": null, "residue_valid_pct": null,
            "overlap_valid_pct": null, "emd": {"mw": 1.5}, "train_half_emd": {"mw": 0.5},
            "n_train": 20, "train_valid_pct": 100.0, "decode_failures": {}, "invalid_reasons": {},
            "qed": null, "sa": null, "cov_r": null, "cov_p": null
        }))
        .unwrap();
        let table = render_table(&[("a".into(), report.clone()), ("b".into(), report)]);
        let qed = table.lines().find(|l| l.starts_with("QED")).unwrap();
        assert_eq!(qed.matches(MISSING).count(), 2);
        assert!(table.lines().next().unwrap().trim_end().ends_with('b'));
        let widths: Vec<usize> = table.lines().map(|l| l.chars().count()).collect();
        assert!(widths.iter().all(|&w| w == widths[0]));
    }
}
