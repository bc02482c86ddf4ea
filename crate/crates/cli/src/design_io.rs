//! Design files.
//!
//! Wide layout, one row per sample: `z,z_pf,aux_1..aux_m` for Pick-Freeze
//! designs or `x,z,aux_1..aux_m` for rank designs, all scalar.
//!
//! Long layout for distribution-valued outputs, one row per draw:
//! `replicate_id,branch,draw_index,value[,x]`. `branch` is `plain`, `pf`,
//! `aux_<l>` (distribution-valued parameter row `l`) or `par_<l>` (scalar
//! parameter, a single draw). The optional `x` column turns the file into a
//! rank design and must be constant within a replicate.
//!
//! Error rows count data records from 1, not counting the header.

use std::collections::BTreeMap;
use std::path::Path;

use gsa_core::{Design, EmpiricalDistribution, OutputPoint, PickFreezeDesign, RankDesign};

use crate::error::CliError;
use crate::report::fmt17;

const LONG_HEADER: [&str; 4] = ["replicate_id", "branch", "draw_index", "value"];

fn design_error(message: impl Into<String>, row: Option<usize>, column: Option<&str>) -> CliError {
    CliError::Design {
        message: message.into(),
        row,
        column: column.map(str::to_string),
    }
}

pub fn load_design(path: &Path) -> Result<Design, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| design_error(e.to_string(), None, None))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| design_error(e.to_string(), Some(row), None))?;
        if record.len() != header.len() {
            return Err(design_error(
                format!("row {row} has {} fields, the header has {}", record.len(), header.len()),
                Some(row),
                None,
            ));
        }
        rows.push(record.iter().map(str::to_string).collect::<Vec<_>>());
    }
    if rows.is_empty() {
        return Err(design_error("design file has no data rows", None, None));
    }
    if header.len() >= 4 && header[..4] == LONG_HEADER {
        load_long(&header, &rows)
    } else {
        load_wide(&header, &rows)
    }
}

fn number(cell: &str, row: usize, column: &str) -> Result<f64, CliError> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(design_error(
            format!("row {row}, column {column}: '{cell}' is not a finite number"),
            Some(row),
            Some(column),
        )),
    }
}

fn aux_count(names: &[String]) -> Result<usize, CliError> {
    for (l, name) in names.iter().enumerate() {
        if *name != format!("aux_{}", l + 1) {
            return Err(design_error(
                format!("unexpected column '{name}', expected aux_{}", l + 1),
                None,
                Some(name),
            ));
        }
    }
    Ok(names.len())
}

fn load_wide(header: &[String], rows: &[Vec<String>]) -> Result<Design, CliError> {
    let rank = match header {
        [a, b, ..] if a == "z" && b == "z_pf" => false,
        [a, b, ..] if a == "x" && b == "z" => true,
        _ => {
            return Err(design_error(
                format!(
                    "unrecognized header {:?}: expected z,z_pf[,aux_l] or x,z[,aux_l] or {}",
                    header,
                    LONG_HEADER.join(",")
                ),
                None,
                None,
            ))
        }
    };
    let m = aux_count(&header[2..])?;
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); header.len()];
    for (k, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            cols[c].push(number(cell, k + 1, &header[c])?);
        }
    }
    let scalars = |v: &[f64]| v.iter().map(|&x| OutputPoint::Scalar(x)).collect::<Vec<_>>();
    let aux: Vec<Vec<OutputPoint>> = (0..m).map(|l| scalars(&cols[2 + l])).collect();
    Ok(if rank {
        Design::Rank(RankDesign::new(cols[0].clone(), scalars(&cols[1]), aux)?)
    } else {
        Design::PickFreeze(PickFreezeDesign::new(scalars(&cols[0]), scalars(&cols[1]), aux)?)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Branch {
    Plain,
    Pf,
    Aux(usize),
    Par(usize),
}

fn parse_branch(s: &str, row: usize) -> Result<Branch, CliError> {
    let indexed = |prefix: &str| {
        s.strip_prefix(prefix)
            .and_then(|rest| rest.parse::<usize>().ok())
            .filter(|&l| l >= 1)
    };
    match s {
        "plain" => Ok(Branch::Plain),
        "pf" => Ok(Branch::Pf),
        _ => indexed("aux_")
            .map(Branch::Aux)
            .or_else(|| indexed("par_").map(Branch::Par))
            .ok_or_else(|| {
                design_error(
                    format!("row {row}: unknown branch '{s}' (expected plain, pf, aux_<l> or par_<l>)"),
                    Some(row),
                    Some("branch"),
                )
            }),
    }
}

fn load_long(header: &[String], rows: &[Vec<String>]) -> Result<Design, CliError> {
    let has_x = match &header[4..] {
        [] => false,
        [x] if x == "x" => true,
        other => {
            return Err(design_error(
                format!("unexpected columns {other:?} after 'value'"),
                None,
                None,
            ))
        }
    };
    // branch -> replicate -> draws
    let mut draws: BTreeMap<Branch, BTreeMap<usize, Vec<(usize, f64)>>> = BTreeMap::new();
    let mut xs: BTreeMap<usize, f64> = BTreeMap::new();
    for (k, row) in rows.iter().enumerate() {
        let r = k + 1;
        let id = row[0].parse::<usize>().map_err(|_| {
            design_error(
                format!("row {r}: bad replicate_id '{}'", row[0]),
                Some(r),
                Some("replicate_id"),
            )
        })?;
        let branch = parse_branch(&row[1], r)?;
        let index = row[2].parse::<usize>().map_err(|_| {
            design_error(
                format!("row {r}: bad draw_index '{}'", row[2]),
                Some(r),
                Some("draw_index"),
            )
        })?;
        let value = number(&row[3], r, "value")?;
        draws
            .entry(branch)
            .or_default()
            .entry(id)
            .or_default()
            .push((index, value));
        if has_x {
            let x = number(&row[4], r, "x")?;
            if branch == Branch::Plain {
                if let Some(prev) = xs.insert(id, x) {
                    if prev.to_bits() != x.to_bits() {
                        return Err(design_error(
                            format!("row {r}: x differs within replicate {id}"),
                            Some(r),
                            Some("x"),
                        ));
                    }
                }
            }
        }
    }
    let plain = draws
        .get(&Branch::Plain)
        .ok_or_else(|| design_error("long design has no 'plain' rows", None, Some("branch")))?;
    let ids: Vec<usize> = plain.keys().copied().collect();
    let collect = |branch: Branch| -> Result<Vec<OutputPoint>, CliError> {
        let reps = draws.get(&branch);
        ids.iter()
            .map(|id| {
                let mut d = reps.and_then(|r| r.get(id)).cloned().ok_or_else(|| {
                    design_error(
                        format!("replicate {id} has no rows in branch {branch:?}"),
                        None,
                        Some("branch"),
                    )
                })?;
                d.sort_by_key(|&(i, _)| i);
                let values: Vec<f64> = d.into_iter().map(|(_, v)| v).collect();
                Ok(match branch {
                    Branch::Par(_) if values.len() == 1 => OutputPoint::Scalar(values[0]),
                    Branch::Par(l) => {
                        return Err(design_error(
                            format!(
                                "scalar parameter row par_{l} of replicate {id} has {} draws",
                                values.len()
                            ),
                            None,
                            Some("branch"),
                        ))
                    }
                    _ => OutputPoint::Distribution(EmpiricalDistribution::new(values)?),
                })
            })
            .collect()
    };
    if let Some((branch, reps)) = draws.iter().find(|(_, reps)| reps.len() != ids.len()) {
        return Err(design_error(
            format!(
                "branch {branch:?} has {} replicates, 'plain' has {}",
                reps.len(),
                ids.len()
            ),
            None,
            Some("replicate_id"),
        ));
    }
    let z = collect(Branch::Plain)?;
    let mut aux = Vec::new();
    for l in 1.. {
        let branch = if draws.contains_key(&Branch::Aux(l)) {
            Branch::Aux(l)
        } else if draws.contains_key(&Branch::Par(l)) {
            Branch::Par(l)
        } else {
            break;
        };
        aux.push(collect(branch)?);
    }
    let known = 1 + usize::from(draws.contains_key(&Branch::Pf)) + aux.len();
    if draws.len() != known {
        return Err(design_error(
            "parameter rows must be numbered aux_1/par_1, aux_2/par_2, ... without gaps",
            None,
            Some("branch"),
        ));
    }
    if has_x {
        if draws.contains_key(&Branch::Pf) {
            return Err(design_error(
                "a rank design (x column) cannot have 'pf' rows",
                None,
                Some("branch"),
            ));
        }
        let x = ids.iter().map(|id| xs[id]).collect();
        Ok(Design::Rank(RankDesign::new(x, z, aux)?))
    } else {
        let z_pf = collect(Branch::Pf)?;
        Ok(Design::PickFreeze(PickFreezeDesign::new(z, z_pf, aux)?))
    }
}

fn all_scalar<'a>(mut points: impl Iterator<Item = &'a OutputPoint>) -> bool {
    points.all(|p| matches!(p, OutputPoint::Scalar(_)))
}

/// Writes a design in the wide layout when every value is scalar, in the
/// long layout otherwise.
pub fn write_design(path: &Path, design: &Design) -> Result<(), CliError> {
    let (first, first_name, z, aux): (Vec<OutputPoint>, &str, &[OutputPoint], &[Vec<OutputPoint>]) = match design {
        Design::PickFreeze(d) => (d.z_pf().to_vec(), "z_pf", d.z(), d.aux()),
        Design::Rank(d) => (
            d.x().iter().map(|&x| OutputPoint::Scalar(x)).collect(),
            "x",
            d.z(),
            d.aux(),
        ),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    let io = |e: csv::Error| CliError::io(path, e);
    let scalars = all_scalar(z.iter().chain(&first).chain(aux.iter().flatten()));
    if scalars {
        let mut header: Vec<String> = match design {
            Design::PickFreeze(_) => vec!["z".into(), first_name.into()],
            Design::Rank(_) => vec![first_name.into(), "z".into()],
        };
        header.extend((1..=aux.len()).map(|l| format!("aux_{l}")));
        w.write_record(&header).map_err(io)?;
        let value = |p: &OutputPoint| fmt17(p.as_scalar().expect("scalar design"));
        for j in 0..z.len() {
            let mut row = match design {
                Design::PickFreeze(_) => vec![value(&z[j]), value(&first[j])],
                Design::Rank(_) => vec![value(&first[j]), value(&z[j])],
            };
            row.extend(aux.iter().map(|a| value(&a[j])));
            w.write_record(&row).map_err(io)?;
        }
    } else {
        let rank = matches!(design, Design::Rank(_));
        let mut header: Vec<&str> = LONG_HEADER.to_vec();
        if rank {
            header.push("x");
        }
        w.write_record(&header).map_err(io)?;
        let mut emit = |branch: &str, points: &[OutputPoint], x: Option<&[OutputPoint]>| -> Result<(), CliError> {
            for (j, p) in points.iter().enumerate() {
                let values: Vec<f64> = match p {
                    OutputPoint::Scalar(v) => vec![*v],
                    OutputPoint::Distribution(d) => d.atoms().to_vec(),
                };
                for (k, v) in values.iter().enumerate() {
                    let mut row = vec![j.to_string(), branch.to_string(), k.to_string(), fmt17(*v)];
                    if let Some(x) = x {
                        row.push(fmt17(x[j].as_scalar().expect("scalar ranking input")));
                    } else if rank {
                        row.push(fmt17(first[j].as_scalar().expect("scalar ranking input")));
                    }
                    w.write_record(&row).map_err(io)?;
                }
            }
            Ok(())
        };
        if rank {
            emit("plain", z, Some(&first))?;
        } else {
            emit("plain", z, None)?;
            emit("pf", &first, None)?;
        }
        for (l, a) in aux.iter().enumerate() {
            let scalar = all_scalar(a.iter());
            let name = if scalar {
                format!("par_{}", l + 1)
            } else {
                format!("aux_{}", l + 1)
            };
            emit(&name, a, None)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
