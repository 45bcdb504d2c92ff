//! MPS export and import for problems whose cone blocks are all diagonal
//! (plain linear programs). Semidefinite blocks have no MPS encoding and
//! are rejected.
//!
//! MPS files are minimization problems over variables that default to
//! nonnegative, so the writer emits the objective negated and marks every
//! variable free; the reader undoes both. Each nonnegative row
//! `f0[r] + Σ y_i fi[r] >= 0` becomes a `G` row with right-hand side
//! `-f0[r]`. The writer lays fields out on the traditional fixed columns
//! but lets long values overflow their field, and the reader tokenizes on
//! whitespace, so overflowing fields round-trip fine.

use super::{ConeBlock, ConicError, LinBlock, StandardConicProblem};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Traditional field start columns (0-indexed) for MPS data lines.
const FIELD_COLS: [usize; 6] = [1, 4, 14, 24, 39, 49];

fn mps_line(out: &mut String, fields: &[(usize, String)]) {
    let mut line = String::new();
    for (field, text) in fields {
        let target = FIELD_COLS[*field];
        while line.len() < target {
            line.push(' ');
        }
        if !line.is_empty() && !line.ends_with(' ') {
            line.push(' ');
        }
        line.push_str(text);
    }
    let _ = writeln!(out, "{line}");
}

/// Section headers sit flush at column 0; the reader keys on that.
fn mps_header(out: &mut String, name: &str, title: Option<&str>) {
    match title {
        Some(t) => {
            let mut line = name.to_string();
            while line.len() < FIELD_COLS[2] {
                line.push(' ');
            }
            let _ = writeln!(out, "{line}{t}");
        }
        None => {
            let _ = writeln!(out, "{name}");
        }
    }
}

pub fn export_mps(p: &StandardConicProblem) -> Result<String, ConicError> {
    let rows: Vec<&LinBlock> = p
        .blocks
        .iter()
        .map(|b| match b {
            ConeBlock::Nonneg(lb) => Ok(lb),
            ConeBlock::Psd(_) => Err(ConicError::Unsupported(
                "MPS cannot express semidefinite blocks; export SDPA format instead".into(),
            )),
        })
        .collect::<Result<_, _>>()?;
    let m = p.num_vars();

    // Global row numbering across blocks, in block order.
    let mut row_offset = Vec::with_capacity(rows.len());
    let mut total_rows = 0usize;
    for lb in &rows {
        row_offset.push(total_rows);
        total_rows += lb.size;
    }

    let mut out = String::new();
    mps_header(&mut out, "NAME", Some("CONIC_LP"));
    mps_header(&mut out, "ROWS", None);
    mps_line(&mut out, &[(0, "N".into()), (1, "OBJ".into())]);
    for r in 1..=total_rows {
        mps_line(&mut out, &[(0, "G".into()), (1, format!("R{r}"))]);
    }

    mps_header(&mut out, "COLUMNS", None);
    for i in 0..m {
        let name = format!("Y{}", i + 1);
        if p.objective[i] != 0.0 {
            mps_line(
                &mut out,
                &[
                    (1, name.clone()),
                    (2, "OBJ".into()),
                    (3, (-p.objective[i]).to_string()),
                ],
            );
        }
        for (lb, off) in rows.iter().zip(&row_offset) {
            for &(r, v) in &lb.fi[i] {
                mps_line(
                    &mut out,
                    &[
                        (1, name.clone()),
                        (2, format!("R{}", off + r as usize + 1)),
                        (3, v.to_string()),
                    ],
                );
            }
        }
    }

    mps_header(&mut out, "RHS", None);
    for (lb, off) in rows.iter().zip(&row_offset) {
        for (r, &v) in lb.f0.iter().enumerate() {
            if v != 0.0 {
                mps_line(
                    &mut out,
                    &[
                        (1, "RHS".into()),
                        (2, format!("R{}", off + r + 1)),
                        (3, (-v).to_string()),
                    ],
                );
            }
        }
    }

    mps_header(&mut out, "BOUNDS", None);
    for i in 0..m {
        mps_line(
            &mut out,
            &[
                (0, "FR".into()),
                (1, "BND".into()),
                (2, format!("Y{}", i + 1)),
            ],
        );
    }
    mps_header(&mut out, "ENDATA", None);
    Ok(out)
}

pub fn import_mps(text: &str) -> Result<StandardConicProblem, ConicError> {
    let fail = |line: usize, msg: &str| ConicError::Format {
        line,
        msg: msg.to_string(),
    };

    #[derive(Clone, Copy, PartialEq)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }
    #[derive(Clone, Copy)]
    enum RowKind {
        Ge,
        Le,
    }

    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut row_kind: HashMap<String, RowKind> = HashMap::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut var_names: Vec<String> = Vec::new();
    // (var, row, value) triples and per-row rhs, resolved after the scan.
    let mut col_entries: Vec<(usize, String, f64)> = Vec::new();
    let mut obj_entries: Vec<(usize, f64)> = Vec::new();
    let mut rhs: HashMap<String, f64> = HashMap::new();
    let mut free_vars: Vec<bool> = Vec::new();

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_header {
            section = match toks[0] {
                "NAME" => section,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                "RANGES" => {
                    return Err(fail(ln, "RANGES section is not supported"));
                }
                other => return Err(fail(ln, &format!("unknown section header {other}"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(fail(ln, "row line must be: type name"));
                }
                let (kind, name) = (toks[0], toks[1].to_string());
                match kind {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name);
                        }
                    }
                    "G" | "L" => {
                        let k = if kind == "G" { RowKind::Ge } else { RowKind::Le };
                        row_index.insert(name.clone(), row_names.len());
                        row_kind.insert(name.clone(), k);
                        row_names.push(name);
                    }
                    "E" => return Err(fail(ln, "equality rows are not supported")),
                    other => return Err(fail(ln, &format!("unknown row type {other}"))),
                }
            }
            Section::Columns => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(fail(ln, "column line must be: var row value [row value]"));
                }
                let var = toks[0].to_string();
                let vi = *var_index.entry(var.clone()).or_insert_with(|| {
                    var_names.push(var);
                    free_vars.push(false);
                    var_names.len() - 1
                });
                for pair in toks[1..].chunks(2) {
                    let row = pair[0].to_string();
                    let v: f64 = pair[1]
                        .parse()
                        .map_err(|_| fail(ln, "bad numeric value"))?;
                    if Some(&row) == obj_row.as_ref() {
                        obj_entries.push((vi, v));
                    } else if row_index.contains_key(&row) {
                        col_entries.push((vi, row, v));
                    } else {
                        return Err(fail(ln, &format!("unknown row {row}")));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(fail(ln, "rhs line must be: set row value [row value]"));
                }
                for pair in toks[1..].chunks(2) {
                    let row = pair[0].to_string();
                    let v: f64 = pair[1]
                        .parse()
                        .map_err(|_| fail(ln, "bad numeric value"))?;
                    if !row_index.contains_key(&row) {
                        return Err(fail(ln, &format!("unknown row {row}")));
                    }
                    rhs.insert(row, v);
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(fail(ln, "bound line must be: type set var [value]"));
                }
                let var = toks[2];
                let Some(&vi) = var_index.get(var) else {
                    return Err(fail(ln, &format!("unknown variable {var}")));
                };
                match toks[0] {
                    "FR" => free_vars[vi] = true,
                    "LO" if toks.len() == 4 && toks[3].parse::<f64>() == Ok(0.0) => {}
                    other => {
                        return Err(fail(ln, &format!("unsupported bound type {other}")));
                    }
                }
            }
            Section::None | Section::Done => {
                return Err(fail(ln, "data line outside any section"));
            }
        }
    }
    if obj_row.is_none() {
        return Err(fail(0, "no objective (N) row found"));
    }

    let m = var_names.len();
    // Default-nonnegative variables get an explicit y_i >= 0 row appended so
    // the in-memory problem keeps MPS semantics with all-free variables.
    let extra: Vec<usize> = (0..m).filter(|&i| !free_vars[i]).collect();
    let nrows = row_names.len() + extra.len();
    let mut block = LinBlock::new(nrows, m);
    for (name, &idx) in &row_index {
        let b = rhs.get(name).copied().unwrap_or(0.0);
        block.f0[idx] = match row_kind[name] {
            RowKind::Ge => -b,
            RowKind::Le => b,
        };
    }
    for (vi, row, v) in col_entries {
        let idx = row_index[&row];
        let signed = match row_kind[&row] {
            RowKind::Ge => v,
            RowKind::Le => -v,
        };
        block.add_fi(vi, idx, signed);
    }
    for (k, &vi) in extra.iter().enumerate() {
        block.add_fi(vi, row_names.len() + k, 1.0);
    }
    let mut c = vec![0.0; m];
    for (vi, v) in obj_entries {
        c[vi] = -v;
    }
    Ok(StandardConicProblem::new(
        c,
        vec![ConeBlock::Nonneg(block)],
    ))
}

#[cfg(test)]
mod tests {
    use super::super::{solve, ConeBlock, LinBlock, PsdBlock, SolveOptions, SolveStatus, StandardConicProblem};
    use super::{export_mps, import_mps};

    fn small_lp() -> StandardConicProblem {
        // max y1 + 2 y2  s.t.  y1 <= 1, y2 <= 1, y1 + y2 <= 1.5 (as >= rows).
        let mut b = LinBlock::new(3, 2);
        b.f0 = vec![1.0, 1.0, 1.5];
        b.add_fi(0, 0, -1.0);
        b.add_fi(1, 1, -1.0);
        b.add_fi(0, 2, -1.0);
        b.add_fi(1, 2, -1.0);
        StandardConicProblem::new(vec![1.0, 2.0], vec![ConeBlock::Nonneg(b)])
    }

    #[test]
    fn golden_export_layout() {
        let text = export_mps(&small_lp()).unwrap();
        let expected = "\
NAME          CONIC_LP
ROWS
 N  OBJ
 G  R1
 G  R2
 G  R3
COLUMNS
    Y1        OBJ       -1
    Y1        R1        -1
    Y1        R3        -1
    Y2        OBJ       -2
    Y2        R2        -1
    Y2        R3        -1
RHS
    RHS       R1        -1
    RHS       R2        -1
    RHS       R3        -1.5
BOUNDS
 FR BND       Y1
 FR BND       Y2
ENDATA
";
        assert_eq!(text, expected);
    }

    #[test]
    fn round_trip_preserves_problem_and_solution() {
        let p = small_lp();
        let text = export_mps(&p).unwrap();
        let q = import_mps(&text).unwrap();
        assert_eq!(q.objective, p.objective);
        let again = export_mps(&q).unwrap();
        assert_eq!(again, text);

        let tight = SolveOptions {
            tol_gap: 1e-9,
            ..SolveOptions::default()
        };
        let rp = solve(&p, &tight);
        let rq = solve(&q, &tight);
        assert_eq!(rp.status, SolveStatus::Optimal);
        assert_eq!(rq.status, SolveStatus::Optimal);
        // Optimum: y2 = 1, y1 = 0.5, objective 2.5.
        assert!((rp.primal_objective - 2.5).abs() < 1e-7);
        assert!((rq.primal_objective - rp.primal_objective).abs() < 1e-9);
    }

    #[test]
    fn psd_blocks_are_rejected() {
        let mut b = PsdBlock::new(2, 1);
        b.set_f0(0, 0, 1.0);
        b.add_fi(0, 0, 1, 1.0);
        let p = StandardConicProblem::new(vec![1.0], vec![ConeBlock::Psd(b)]);
        match export_mps(&p) {
            Err(super::super::ConicError::Unsupported(_)) => {}
            other => panic!("expected unsupported error, got {other:?}"),
        }
    }

    #[test]
    fn default_nonnegative_variables_gain_a_row() {
        // No BOUNDS section: MPS variables default to >= 0.
        let text = "\
NAME          T
ROWS
 N  OBJ
 L  R1
COLUMNS
    X         OBJ       -1
    X         R1        1
RHS
    RHS       R1        3
ENDATA
";
        let p = import_mps(text).unwrap();
        // max x s.t. x <= 3, x >= 0.
        let tight = SolveOptions {
            tol_gap: 1e-9,
            ..SolveOptions::default()
        };
        let r = solve(&p, &tight);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_objective - 3.0).abs() < 1e-7);
    }
}
