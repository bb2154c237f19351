//! Mulan dataset ingestion: an ARFF data file plus an XML file naming the
//! label attributes.
//!
//! Supported ARFF subset: `@relation`, `@attribute` with numeric
//! (`numeric`/`real`/`integer`) or nominal (`{a,b,c}`) types, `@data` with
//! dense or sparse rows, `%` comment lines, and case-insensitive keywords.
//! Missing values (`?`) are rejected.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::{InputKind, MultiLabelDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone)]
struct Attribute {
    name: String,
    kind: AttrType,
}

/// Where each ARFF attribute lands in the dataset.
#[derive(Debug, Clone, Copy)]
enum Slot {
    /// numeric feature at column
    Feature(usize),
    /// nominal feature occupying columns `start..start + arity`
    OneHot(usize),
    Label(usize),
}

/// Reads a Mulan dataset from its ARFF and XML files.
pub fn load_mulan(
    arff_path: impl AsRef<Path>,
    xml_path: impl AsRef<Path>,
) -> Result<MultiLabelDataset> {
    let xml_path = xml_path.as_ref();
    let xml = fs::read_to_string(xml_path).map_err(|e| Error::io(xml_path, e))?;
    let labels = parse_label_xml(&xml, xml_path)?;
    let arff_path = arff_path.as_ref();
    let text = fs::read_to_string(arff_path).map_err(|e| Error::io(arff_path, e))?;
    parse_arff(&text, arff_path, &labels)
}

/// Extracts the `name` attribute of every `<label>` element, in document
/// order. Nested (hierarchical) label elements are flattened.
pub fn parse_label_xml(text: &str, path: &Path) -> Result<Vec<String>> {
    let err = |message: String| Error::LabelXml {
        path: path.to_path_buf(),
        message,
    };
    let doc = roxmltree::Document::parse(text).map_err(|e| err(e.to_string()))?;
    let names: Vec<String> = doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "label")
        .map(|n| {
            n.attribute("name")
                .map(str::to_string)
                .ok_or_else(|| err("<label> element without a name attribute".into()))
        })
        .collect::<Result<_>>()?;
    if names.is_empty() {
        return Err(err("no <label> elements found".into()));
    }
    Ok(names)
}

/// Parses ARFF text, splitting the attributes named in `label_names` off as
/// label columns. Label columns keep their ARFF header order.
pub fn parse_arff(text: &str, path: &Path, label_names: &[String]) -> Result<MultiLabelDataset> {
    let fail = |line: usize, message: String| Error::Arff {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut attributes: Vec<Attribute> = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut saw_data = false;
    for (no, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let (keyword, rest) = split_keyword(line);
        match keyword.to_ascii_lowercase().as_str() {
            "@relation" => {}
            "@attribute" => attributes.push(parse_attribute(rest).map_err(|m| fail(no, m))?),
            "@data" => {
                saw_data = true;
                break;
            }
            _ => return Err(fail(no, format!("unexpected header line `{line}`"))),
        }
    }
    if !saw_data {
        return Err(fail(text.lines().count(), "missing @data section".into()));
    }
    if attributes.is_empty() {
        return Err(fail(1, "no @attribute declarations".into()));
    }

    let by_name: HashMap<&str, usize> = attributes
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    if by_name.len() != attributes.len() {
        return Err(fail(1, "duplicate attribute names".into()));
    }
    for name in label_names {
        if !by_name.contains_key(name.as_str()) {
            return Err(Error::LabelXml {
                path: path.to_path_buf(),
                message: format!("label `{name}` is not an attribute of the ARFF file"),
            });
        }
    }
    let is_label: std::collections::HashSet<&str> =
        label_names.iter().map(String::as_str).collect();

    let mut slots = Vec::with_capacity(attributes.len());
    let mut feature_names = Vec::new();
    let mut out_labels = Vec::new();
    let mut nominal_inputs = false;
    let mut input_attributes = 0;
    for a in &attributes {
        if is_label.contains(a.name.as_str()) {
            slots.push(Slot::Label(out_labels.len()));
            out_labels.push(a.name.clone());
            continue;
        }
        input_attributes += 1;
        match &a.kind {
            AttrType::Numeric => {
                slots.push(Slot::Feature(feature_names.len()));
                feature_names.push(a.name.clone());
            }
            AttrType::Nominal(values) => {
                nominal_inputs = true;
                slots.push(Slot::OneHot(feature_names.len()));
                feature_names.extend(values.iter().map(|v| format!("{}={}", a.name, v)));
            }
        }
    }
    let d = feature_names.len();
    let q = out_labels.len();

    let mut feats: Vec<f64> = Vec::new();
    let mut labs: Vec<u8> = Vec::new();
    let mut rows = 0usize;
    let mut row_values: Vec<Option<String>> = vec![None; attributes.len()];
    for (no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        row_values.iter_mut().for_each(|v| *v = None);
        if let Some(body) = line.strip_prefix('{') {
            let body = body
                .strip_suffix('}')
                .ok_or_else(|| fail(no, "unterminated sparse row".into()))?;
            for entry in split_fields(body).map_err(|m| fail(no, m))? {
                let entry = entry.trim();
                if entry.is_empty() {
                    continue;
                }
                let (idx, value) = entry
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| fail(no, format!("sparse entry `{entry}` lacks a value")))?;
                let idx: usize = idx
                    .parse()
                    .map_err(|_| fail(no, format!("bad sparse index `{idx}`")))?;
                if idx >= attributes.len() {
                    return Err(fail(no, format!("sparse index {idx} out of range")));
                }
                row_values[idx] = Some(unquote(value.trim()).map_err(|m| fail(no, m))?);
            }
        } else {
            let fields = split_fields(line).map_err(|m| fail(no, m))?;
            if fields.len() != attributes.len() {
                return Err(fail(
                    no,
                    format!(
                        "expected {} values, found {}",
                        attributes.len(),
                        fields.len()
                    ),
                ));
            }
            for (slot, f) in row_values.iter_mut().zip(fields) {
                *slot = Some(unquote(f.trim()).map_err(|m| fail(no, m))?);
            }
        }

        let base_f = feats.len();
        feats.resize(base_f + d, 0.0);
        let base_l = labs.len();
        labs.resize(base_l + q, 0);
        for (i, (a, slot)) in attributes.iter().zip(&slots).enumerate() {
            let value = row_values[i].as_deref();
            if value == Some("?") {
                return Err(fail(no, format!("missing value for `{}`", a.name)));
            }
            match (&a.kind, *slot) {
                (AttrType::Numeric, Slot::Feature(col)) => {
                    if let Some(v) = value {
                        feats[base_f + col] = parse_number(v).map_err(|m| fail(no, m))?;
                    }
                }
                (AttrType::Nominal(values), Slot::OneHot(start)) => {
                    let pos = nominal_index(values, value).map_err(|m| fail(no, m))?;
                    feats[base_f + start + pos] = 1.0;
                }
                (kind, Slot::Label(col)) => {
                    let bit = match (kind, value) {
                        (AttrType::Numeric, None) => 0.0,
                        (AttrType::Numeric, Some(v)) => parse_number(v).map_err(|m| fail(no, m))?,
                        (AttrType::Nominal(values), v) => {
                            let pos = nominal_index(values, v).map_err(|m| fail(no, m))?;
                            parse_number(&values[pos]).map_err(|m| fail(no, m))?
                        }
                    };
                    labs[base_l + col] = match bit {
                        0.0 => 0,
                        1.0 => 1,
                        other => {
                            return Err(fail(
                                no,
                                format!("label `{}` has non-binary value {other}", a.name),
                            ))
                        }
                    };
                }
                _ => unreachable!("slot kinds follow attribute kinds"),
            }
        }
        rows += 1;
    }

    if rows == 0 {
        return Err(fail(text.lines().count(), "no data rows".into()));
    }
    let features = Array2::from_shape_vec((rows, d), feats).expect("row-major buffer");
    let labels = Array2::from_shape_vec((rows, q), labs).expect("row-major buffer");
    let kind = if nominal_inputs {
        InputKind::Nominal
    } else {
        InputKind::Numeric
    };
    MultiLabelDataset::with_schema(
        features,
        labels,
        feature_names,
        out_labels,
        kind,
        input_attributes,
    )
    .map_err(|e| fail(1, e.to_string()))
}

fn split_keyword(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], line[i..].trim()),
        None => (line, ""),
    }
}

fn parse_attribute(rest: &str) -> std::result::Result<Attribute, String> {
    let (name, tail) = take_name(rest)?;
    let tail = tail.trim();
    let kind = if let Some(body) = tail.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| "unterminated nominal value list".to_string())?;
        let values = split_fields(body)?
            .iter()
            .map(|v| unquote(v.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(format!("nominal attribute `{name}` has no values"));
        }
        AttrType::Nominal(values)
    } else {
        match tail.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttrType::Numeric,
            other => return Err(format!("unsupported attribute type `{other}` for `{name}`")),
        }
    };
    Ok(Attribute { name, kind })
}

/// Reads a possibly quoted attribute name off the front of `s`.
fn take_name(s: &str) -> std::result::Result<(String, &str), String> {
    let s = s.trim_start();
    let first = s.chars().next().ok_or("attribute without a name")?;
    if first == '\'' || first == '"' {
        let mut out = String::new();
        let mut escaped = false;
        for (i, c) in s.char_indices().skip(1) {
            if escaped {
                out.push(c);
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == first {
                return Ok((out, &s[i + 1..]));
            } else {
                out.push(c);
            }
        }
        Err("unterminated quoted attribute name".into())
    } else {
        let end = s
            .find(char::is_whitespace)
            .ok_or("attribute without a type")?;
        Ok((s[..end].to_string(), &s[end..]))
    }
}

/// Splits on commas outside quotes. Quotes are kept for [`unquote`].
fn split_fields(s: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for c in s.chars() {
        if escaped {
            cur.push(c);
            escaped = false;
            continue;
        }
        match (quote, c) {
            (Some(_), '\\') => {
                cur.push(c);
                escaped = true;
            }
            (Some(q), c) if c == q => {
                cur.push(c);
                quote = None;
            }
            (None, '\'' | '"') => {
                cur.push(c);
                quote = Some(c);
            }
            (None, ',') => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    if quote.is_some() {
        return Err("unterminated quoted value".into());
    }
    out.push(cur);
    Ok(out)
}

fn unquote(v: &str) -> std::result::Result<String, String> {
    match v.chars().next() {
        Some(q @ ('\'' | '"')) => {
            let (name, rest) = take_name(v)?;
            if !rest.trim().is_empty() {
                return Err(format!("trailing text after quoted value `{v}`"));
            }
            debug_assert!(v.starts_with(q));
            Ok(name)
        }
        _ => Ok(v.to_string()),
    }
}

fn parse_number(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{v}` is not finite"));
    }
    Ok(x)
}

/// Sparse rows leave nominal values out when they equal the first declared
/// value.
fn nominal_index(values: &[String], v: Option<&str>) -> std::result::Result<usize, String> {
    match v {
        None => Ok(0),
        Some(v) => values
            .iter()
            .position(|x| x == v)
            .ok_or_else(|| format!("`{v}` is not a declared nominal value")),
    }
}

fn quote_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 2);
    out.push('\'');
    for c in name.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
    out
}

/// Writes `ds` as dense ARFF: features as numeric attributes, labels as
/// `{0,1}` nominal attributes after them. Values use the shortest decimal
/// form that parses back to the same `f64`.
pub fn write_arff(ds: &MultiLabelDataset, relation: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, arff_string(ds, relation)).map_err(|e| Error::io(path, e))
}

/// The text [`write_arff`] writes.
pub fn arff_string(ds: &MultiLabelDataset, relation: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "@relation {}", quote_name(relation));
    s.push('\n');
    for name in ds.feature_names() {
        let _ = writeln!(s, "@attribute {} numeric", quote_name(name));
    }
    for name in ds.label_names() {
        let _ = writeln!(s, "@attribute {} {{0,1}}", quote_name(name));
    }
    s.push_str("\n@data\n");
    for (x, y) in ds.features().rows().into_iter().zip(ds.labels().rows()) {
        let mut first = true;
        for v in x.iter() {
            if !first {
                s.push(',');
            }
            first = false;
            let _ = write!(s, "{v}");
        }
        for v in y.iter() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn write_label_xml(label_names: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, label_xml_string(label_names)).map_err(|e| Error::io(path, e))
}

/// Mulan label file listing `label_names` in order.
pub fn label_xml_string(label_names: &[String]) -> String {
    let mut s = String::from(
        "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<labels xmlns=\"http://mulan.sourceforge.net/labels\">\n",
    );
    for name in label_names {
        let _ = writeln!(s, "<label name=\"{}\"></label>", xml_escape(name));
    }
    s.push_str("</labels>\n");
    s
}

/// Writes `<dir>/<name>.arff` and `<dir>/<name>.xml`, returning both paths.
pub fn write_mulan(ds: &MultiLabelDataset, dir: &Path, name: &str) -> Result<(PathBuf, PathBuf)> {
    let arff = dir.join(format!("{name}.arff"));
    let xml = dir.join(format!("{name}.xml"));
    write_arff(ds, name, &arff)?;
    write_label_xml(ds.label_names(), &xml)?;
    Ok((arff, xml))
}
