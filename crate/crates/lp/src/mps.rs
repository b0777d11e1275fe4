//! Fixed-column MPS export (and a tolerant reader) for cross-checking a
//! model against external solvers. Row and column names are replaced by
//! 8-character ordinals; the objective constant is written as the negated
//! right-hand side of the objective row.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{LpError, Result};
use crate::model::{LpModel, Sense, VarId};

const OBJ: &str = "COST";

fn row_name(i: usize) -> String {
    format!("R{i:07}")
}

fn col_name(j: usize) -> String {
    format!("C{j:07}")
}

/// Formats `v` in at most 12 characters.
fn num(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for prec in (0..=8).rev() {
        let s = format!("{v:.prec$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

fn field_line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str, more: Option<(&str, &str)>) {
    let _ = write!(out, " {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}");
    if let Some((f5, f6)) = more {
        let _ = write!(out, "   {f5:<8}  {f6:>12}");
    }
    out.push('\n');
}

/// Renders `model` as fixed-format MPS text.
pub fn write_mps(model: &LpModel, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", &name[..name.len().min(8)]);
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ}");
    for (i, c) in model.constraints.iter().enumerate() {
        let t = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {}", row_name(i));
    }

    let mut by_col: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.num_vars()];
    for (j, v) in model.variables.iter().enumerate() {
        if v.cost != 0.0 {
            by_col[j].push((OBJ.to_string(), v.cost));
        }
    }
    for (i, c) in model.constraints.iter().enumerate() {
        for &(VarId(j), a) in &c.terms {
            by_col[j].push((row_name(i), a));
        }
    }
    out.push_str("COLUMNS\n");
    for (j, entries) in by_col.iter().enumerate() {
        let cn = col_name(j);
        if entries.is_empty() {
            field_line(&mut out, "", &cn, OBJ, "0", None);
        }
        for pair in entries.chunks(2) {
            let second = pair.get(1).map(|(r, a)| (r.as_str(), num(*a)));
            field_line(
                &mut out,
                "",
                &cn,
                &pair[0].0,
                &num(pair[0].1),
                second.as_ref().map(|(r, s)| (*r, s.as_str())),
            );
        }
    }

    out.push_str("RHS\n");
    if model.objective_offset != 0.0 {
        field_line(&mut out, "", "RHS", OBJ, &num(-model.objective_offset), None);
    }
    for (i, c) in model.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            field_line(&mut out, "", "RHS", &row_name(i), &num(c.rhs), None);
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in model.variables.iter().enumerate() {
        let cn = col_name(j);
        let (lo, up) = (v.lower, v.upper);
        if lo == up {
            field_line(&mut out, "FX", "BND", &cn, &num(lo), None);
            continue;
        }
        match (lo.is_finite(), up.is_finite()) {
            (false, false) => field_line(&mut out, "FR", "BND", &cn, "", None),
            (false, true) => {
                field_line(&mut out, "MI", "BND", &cn, "", None);
                field_line(&mut out, "UP", "BND", &cn, &num(up), None);
            }
            (true, up_finite) => {
                if lo != 0.0 {
                    field_line(&mut out, "LO", "BND", &cn, &num(lo), None);
                }
                if up_finite {
                    field_line(&mut out, "UP", "BND", &cn, &num(up), None);
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Parses MPS text into a model. Fields are split on whitespace, so names
/// must not contain blanks.
pub fn read_mps(text: &str) -> Result<LpModel> {
    #[derive(PartialEq)]
    enum Section {
        Head,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }
    let err = |line: usize, message: &str| LpError::Mps {
        line,
        message: message.to_string(),
    };
    let parse = |line: usize, s: &str| s.parse::<f64>().map_err(|_| err(line, "bad number"));

    let mut model = LpModel::new();
    let mut section = Section::Head;
    let mut obj_row: Option<String> = None;
    let mut rows: HashMap<String, usize> = HashMap::new();
    let mut cols: HashMap<String, VarId> = HashMap::new();
    let mut pending_terms: Vec<Vec<(VarId, f64)>> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        if !raw.starts_with(' ') {
            let key = raw.split_whitespace().next().unwrap_or("");
            section = match key {
                "NAME" => Section::Head,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                "RANGES" => return Err(err(ln, "RANGES section is not supported")),
                _ => return Err(err(ln, "unknown section")),
            };
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        match section {
            Section::Rows => {
                let [kind, name] = f[..] else {
                    return Err(err(ln, "expected row type and name"));
                };
                let sense = match kind {
                    "N" => {
                        obj_row.get_or_insert_with(|| name.to_string());
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(err(ln, "unknown row type")),
                };
                let id = model.add_constraint(name, [], sense, 0.0);
                rows.insert(name.to_string(), id.0);
                pending_terms.push(Vec::new());
            }
            Section::Columns => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "expected 3 or 5 fields"));
                }
                let var = *cols
                    .entry(f[0].to_string())
                    .or_insert_with(|| model.add_var(f[0], 0.0, f64::INFINITY, 0.0));
                for pair in f[1..].chunks(2) {
                    let a = parse(ln, pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        model.variables[var.0].cost += a;
                    } else {
                        let &r = rows.get(pair[0]).ok_or_else(|| err(ln, "unknown row"))?;
                        pending_terms[r].push((var, a));
                    }
                }
            }
            Section::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "expected 3 or 5 fields"));
                }
                for pair in f[1..].chunks(2) {
                    let v = parse(ln, pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        model.objective_offset = -v;
                    } else {
                        let &r = rows.get(pair[0]).ok_or_else(|| err(ln, "unknown row"))?;
                        model.constraints[r].rhs = v;
                    }
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(err(ln, "short bound line"));
                }
                let &var = cols.get(f[2]).ok_or_else(|| err(ln, "unknown column"))?;
                let v = &mut model.variables[var.0];
                let value = || f.get(3).ok_or_else(|| err(ln, "missing bound value")).and_then(|s| parse(ln, s));
                match f[0] {
                    "UP" => v.upper = value()?,
                    "LO" => v.lower = value()?,
                    "FX" => {
                        let x = value()?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    _ => return Err(err(ln, "unknown bound type")),
                }
            }
            Section::Head | Section::Done => return Err(err(ln, "unexpected data line")),
        }
    }
    for (c, terms) in model.constraints.iter_mut().zip(pending_terms) {
        c.terms = terms;
    }
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_fits_field() {
        for v in [1.0, -123456.789012345, 1e-12, 6.02214076e23, -0.000123456789] {
            let s = num(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-6 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn columns_start_at_fixed_positions() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, 2.5);
        m.add_constraint("c", [(x, 1.0)], Sense::Le, 4.0);
        let text = write_mps(&m, "t");
        let line = text.lines().find(|l| l.contains("C0000000") && l.contains(OBJ)).unwrap();
        assert_eq!(&line[4..12], "C0000000");
        assert_eq!(&line[14..18], OBJ);
        assert_eq!(line[24..36].trim(), "2.5");
        assert_eq!(&line[39..47], "R0000000");
    }
}
