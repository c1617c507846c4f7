use std::collections::{BTreeMap, BTreeSet};

use crate::data::{Cell, Dataset, FeatureKind, FeatureSchema, FeatureSpec, RawTable};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Text pairs recognised for binary columns without declared codes, as
/// (code for 1, code for 0).
const KNOWN_BINARY_PAIRS: &[(&str, &str)] = &[
    ("yes", "no"),
    ("y", "n"),
    ("true", "false"),
    ("t", "f"),
    ("positive", "negative"),
    ("pos", "neg"),
    ("+", "-"),
];

/// Turn a raw table into a numeric dataset.
///
/// * rows whose label is missing are dropped; any other label must be an
///   integer in `0..n_classes`
/// * binary columns map to {0, 1} through declared codes, a recognised text
///   pair, or the order of their (at most two) observed values
/// * ordinal and continuous columns must be numeric (ordinal columns may use
///   declared level names)
/// * missing continuous cells take the column median, missing binary and
///   ordinal cells the column mode (lowest value on ties)
pub fn clean_and_encode(raw: &RawTable, schema: &FeatureSchema) -> Result<Dataset> {
    schema.validate()?;
    let label_col = raw
        .column_index(&schema.label_name)
        .ok_or_else(|| Error::MissingColumn(schema.label_name.clone()))?;

    let mut kept = Vec::new();
    let mut y = Vec::new();
    for (r, row) in raw.rows.iter().enumerate() {
        let line = raw.lines.get(r).copied().unwrap_or(r + 2);
        match &row[label_col] {
            Cell::Missing => continue,
            cell => {
                y.push(parse_label(cell, line, schema.n_classes)?);
                kept.push(r);
            }
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut x = Matrix::zeros(kept.len(), schema.len());
    for (j, spec) in schema.features.iter().enumerate() {
        let col = raw
            .column_index(&spec.name)
            .ok_or_else(|| Error::MissingColumn(spec.name.clone()))?;
        let cells: Vec<(&Cell, usize)> = kept
            .iter()
            .map(|&r| (&raw.rows[r][col], raw.lines.get(r).copied().unwrap_or(r + 2)))
            .collect();
        let values = encode_column(spec, &cells)?;
        for (i, v) in values.into_iter().enumerate() {
            x.set(i, j, v);
        }
    }
    Dataset::new(schema.clone(), x, y)
}

fn parse_label(cell: &Cell, line: usize, n_classes: usize) -> Result<usize> {
    let bad = |value: String| Error::InvalidLabel {
        row: line,
        value,
        n_classes,
    };
    match cell {
        Cell::Num(v) if v.fract() == 0.0 && *v >= 0.0 && (*v as usize) < n_classes => Ok(*v as usize),
        Cell::Num(v) => Err(bad(v.to_string())),
        Cell::Text(t) => Err(bad(t.clone())),
        Cell::Missing => unreachable!("missing labels are dropped before parsing"),
    }
}

fn encode_column(spec: &FeatureSpec, cells: &[(&Cell, usize)]) -> Result<Vec<f64>> {
    let observed: Vec<Option<f64>> = match spec.kind {
        FeatureKind::Binary => encode_binary(spec, cells)?,
        FeatureKind::Ordinal => cells
            .iter()
            .map(|&(c, line)| encode_ordinal(spec, c, line))
            .collect::<Result<_>>()?,
        FeatureKind::Continuous => cells
            .iter()
            .map(|&(c, line)| match c {
                Cell::Missing => Ok(None),
                Cell::Num(v) => finite(spec, *v, line).map(Some),
                Cell::Text(t) => Err(invalid(spec, line, format!("expected a number, found {t:?}"))),
            })
            .collect::<Result<_>>()?,
    };

    let present: Vec<f64> = observed.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::EmptyColumn(spec.name.clone()));
    }
    let fill = match spec.kind {
        FeatureKind::Continuous => median(&present),
        FeatureKind::Binary | FeatureKind::Ordinal => mode(&present),
    };
    Ok(observed.into_iter().map(|v| v.unwrap_or(fill)).collect())
}

fn invalid(spec: &FeatureSpec, line: usize, reason: String) -> Error {
    Error::InvalidCell {
        row: line,
        column: spec.name.clone(),
        reason,
    }
}

fn finite(spec: &FeatureSpec, v: f64, line: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(spec, line, format!("non-finite value {v}")))
    }
}

fn encode_ordinal(spec: &FeatureSpec, cell: &Cell, line: usize) -> Result<Option<f64>> {
    match cell {
        Cell::Missing => Ok(None),
        Cell::Num(v) => finite(spec, *v, line).map(Some),
        Cell::Text(t) => match &spec.levels {
            Some(levels) => levels
                .iter()
                .position(|l| l.eq_ignore_ascii_case(t))
                .map(|p| Some(p as f64))
                .ok_or_else(|| invalid(spec, line, format!("{t:?} is not a declared level"))),
            None => Err(invalid(spec, line, format!("expected a number, found {t:?}"))),
        },
    }
}

fn encode_binary(spec: &FeatureSpec, cells: &[(&Cell, usize)]) -> Result<Vec<Option<f64>>> {
    if let Some(codes) = &spec.codes {
        return cells
            .iter()
            .map(|&(c, line)| match c {
                Cell::Missing => Ok(None),
                Cell::Num(v) if *v == 0.0 || *v == 1.0 => Ok(Some(*v)),
                other => {
                    let token = cell_token(other);
                    codes
                        .iter()
                        .find(|(k, _)| k.eq_ignore_ascii_case(&token))
                        .map(|(_, &v)| Some(f64::from(v)))
                        .ok_or_else(|| {
                            invalid(spec, line, format!("{token:?} is not one of the declared codes"))
                        })
                }
            })
            .collect();
    }

    // No declared codes: infer the mapping from what is observed.
    let mut numbers = BTreeSet::new();
    let mut texts = BTreeMap::new();
    for &(c, line) in cells {
        match c {
            Cell::Num(v) => {
                numbers.insert(finite(spec, *v, line)?.to_bits());
            }
            Cell::Text(t) => {
                texts.entry(t.to_ascii_lowercase()).or_insert(line);
            }
            Cell::Missing => {}
        }
    }
    if !numbers.is_empty() && !texts.is_empty() {
        let line = *texts.values().min().unwrap_or(&0);
        return Err(invalid(
            spec,
            line,
            "binary column mixes numeric and text codes".into(),
        ));
    }

    let mapping: Box<dyn Fn(&Cell) -> f64> = if !numbers.is_empty() {
        let mut vals: Vec<f64> = numbers.iter().map(|&b| f64::from_bits(b)).collect();
        vals.sort_by(f64::total_cmp);
        if vals.len() > 2 {
            let line = first_line_outside(cells, |c| matches!(c, Cell::Num(v) if *v == vals[2]));
            return Err(invalid(
                spec,
                line,
                format!("binary column has more than two codes: {vals:?}"),
            ));
        }
        if vals.iter().all(|&v| v == 0.0 || v == 1.0) {
            Box::new(|c| match c {
                Cell::Num(v) => *v,
                _ => unreachable!(),
            })
        } else {
            let low = vals[0];
            Box::new(move |c| match c {
                Cell::Num(v) if *v == low => 0.0,
                _ => 1.0,
            })
        }
    } else {
        let keys: Vec<String> = texts.keys().cloned().collect();
        if keys.len() > 2 {
            let line = texts[&keys[2]];
            return Err(invalid(
                spec,
                line,
                format!("binary column has more than two codes: {keys:?}"),
            ));
        }
        let one = KNOWN_BINARY_PAIRS
            .iter()
            .find(|(yes, no)| keys.iter().all(|k| k == yes || k == no))
            .map(|(yes, _)| yes.to_string())
            .unwrap_or_else(|| keys.last().cloned().unwrap_or_default());
        let zero_if_single = keys.len() == 1 && KNOWN_BINARY_PAIRS.iter().all(|(yes, _)| *yes != keys[0]);
        Box::new(move |c| match c {
            Cell::Text(t) if !zero_if_single && t.eq_ignore_ascii_case(&one) => 1.0,
            _ => 0.0,
        })
    };
    Ok(cells
        .iter()
        .map(|&(c, _)| if c.is_missing() { None } else { Some(mapping(c)) })
        .collect())
}

fn first_line_outside(cells: &[(&Cell, usize)], pred: impl Fn(&Cell) -> bool) -> usize {
    cells.iter().find(|(c, _)| pred(c)).map_or(0, |&(_, l)| l)
}

fn cell_token(c: &Cell) -> String {
    match c {
        Cell::Num(v) => v.to_string(),
        Cell::Text(t) => t.clone(),
        Cell::Missing => String::new(),
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mode(values: &[f64]) -> f64 {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for v in values {
        // +0.0 and -0.0 share a bucket
        *counts.entry((v + 0.0).to_bits()).or_default() += 1;
    }
    let mut best: Option<(f64, usize)> = None;
    for (bits, c) in counts {
        let v = f64::from_bits(bits);
        match best {
            Some((bv, bc)) if c < bc || (c == bc && v >= bv) => {}
            _ => best = Some((v, c)),
        }
    }
    best.map_or(0.0, |(v, _)| v)
}
