//! SDPA sparse format (`.dat-s`) export and import.
//!
//! The on-disk convention minimizes `c·x` subject to
//! `Σ x_i F_i - F0 ⪰ 0`, while this crate maximizes `c·y` with slack
//! `F0 + Σ y_i F_i`. The two line up under `c_file = -c`, `F0_file = -F0`,
//! `F_i_file = F_i`, which is what the writer emits and the reader undoes.
//! Values are printed with Rust's shortest-roundtrip float formatting, so
//! export → import is exact and byte-stable.

use super::{ConeBlock, ConicError, LinBlock, PsdBlock, StandardConicProblem};
use std::fmt::Write as _;

pub fn export_sdpa(p: &StandardConicProblem) -> String {
    let m = p.num_vars();
    let mut out = String::new();
    let _ = writeln!(out, "{m}");
    let _ = writeln!(out, "{}", p.blocks.len());
    let sizes: Vec<String> = p
        .blocks
        .iter()
        .map(|b| match b {
            ConeBlock::Psd(pb) => pb.size.to_string(),
            ConeBlock::Nonneg(lb) => format!("-{}", lb.size),
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c_line: Vec<String> = p.objective.iter().map(|c| (-c).to_string()).collect();
    let _ = writeln!(out, "{}", c_line.join(" "));

    // Entries ordered by (matrix, block, row, col); matrix 0 is F0.
    for (bno, b) in p.blocks.iter().enumerate() {
        match b {
            ConeBlock::Psd(pb) => {
                for &(r, c, v) in &pb.f0 {
                    let _ = writeln!(out, "0 {} {} {} {}", bno + 1, r + 1, c + 1, -v);
                }
            }
            ConeBlock::Nonneg(lb) => {
                for (r, &v) in lb.f0.iter().enumerate() {
                    if v != 0.0 {
                        let _ = writeln!(out, "0 {} {} {} {}", bno + 1, r + 1, r + 1, -v);
                    }
                }
            }
        }
    }
    for i in 0..m {
        for (bno, b) in p.blocks.iter().enumerate() {
            match b {
                ConeBlock::Psd(pb) => {
                    for &(r, c, v) in &pb.fi[i] {
                        let _ = writeln!(out, "{} {} {} {} {}", i + 1, bno + 1, r + 1, c + 1, v);
                    }
                }
                ConeBlock::Nonneg(lb) => {
                    for &(r, v) in &lb.fi[i] {
                        let _ =
                            writeln!(out, "{} {} {} {} {}", i + 1, bno + 1, r + 1, r + 1, v);
                    }
                }
            }
        }
    }
    out
}

pub fn import_sdpa(text: &str) -> Result<StandardConicProblem, ConicError> {
    let fail = |line: usize, msg: &str| ConicError::Format {
        line,
        msg: msg.to_string(),
    };
    // Comment lines start with '*' or '"'; blank lines are skipped too.
    let mut data = text.lines().enumerate().filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('*') && !t.starts_with('"')
    });
    let mut next_line = |what: &str| {
        data.next()
            .ok_or_else(|| fail(0, &format!("unexpected end of file, expected {what}")))
    };

    let (ln, l) = next_line("variable count")?;
    let m: usize = first_token(l)
        .parse()
        .map_err(|_| fail(ln + 1, "expected variable count"))?;
    let (ln, l) = next_line("block count")?;
    let nblocks: usize = first_token(l)
        .parse()
        .map_err(|_| fail(ln + 1, "expected block count"))?;
    let (ln, l) = next_line("block sizes")?;
    let sizes = numbers::<i64>(l).map_err(|_| fail(ln + 1, "malformed block sizes"))?;
    if sizes.len() != nblocks {
        return Err(fail(
            ln + 1,
            &format!("expected {nblocks} block sizes, found {}", sizes.len()),
        ));
    }
    let (ln, l) = next_line("objective row")?;
    let c_file = numbers::<f64>(l).map_err(|_| fail(ln + 1, "malformed objective row"))?;
    if c_file.len() != m {
        return Err(fail(
            ln + 1,
            &format!("expected {m} objective values, found {}", c_file.len()),
        ));
    }

    let mut blocks: Vec<ConeBlock> = sizes
        .iter()
        .map(|&s| {
            if s >= 0 {
                ConeBlock::Psd(PsdBlock::new(s as usize, m))
            } else {
                ConeBlock::Nonneg(LinBlock::new((-s) as usize, m))
            }
        })
        .collect();

    for (ln, l) in data {
        let toks: Vec<&str> = l.split(|ch: char| ch.is_whitespace() || ch == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if toks.len() != 5 {
            return Err(fail(ln + 1, "entry must have 5 fields: mat blk i j value"));
        }
        let matno: usize = toks[0].parse().map_err(|_| fail(ln + 1, "bad matrix index"))?;
        let blkno: usize = toks[1].parse().map_err(|_| fail(ln + 1, "bad block index"))?;
        let i: usize = toks[2].parse().map_err(|_| fail(ln + 1, "bad row index"))?;
        let j: usize = toks[3].parse().map_err(|_| fail(ln + 1, "bad column index"))?;
        let v: f64 = toks[4].parse().map_err(|_| fail(ln + 1, "bad value"))?;
        if matno > m {
            return Err(fail(ln + 1, "matrix index exceeds variable count"));
        }
        if blkno == 0 || blkno > nblocks {
            return Err(fail(ln + 1, "block index out of range"));
        }
        let signed = if matno == 0 { -v } else { v };
        match &mut blocks[blkno - 1] {
            ConeBlock::Psd(pb) => {
                if i == 0 || j == 0 || i > pb.size || j > pb.size {
                    return Err(fail(ln + 1, "matrix entry out of range for block"));
                }
                if matno == 0 {
                    pb.set_f0(i - 1, j - 1, signed);
                } else {
                    pb.add_fi(matno - 1, i - 1, j - 1, signed);
                }
            }
            ConeBlock::Nonneg(lb) => {
                if i != j {
                    return Err(fail(ln + 1, "off-diagonal entry in diagonal block"));
                }
                if i == 0 || i > lb.size {
                    return Err(fail(ln + 1, "matrix entry out of range for block"));
                }
                if matno == 0 {
                    lb.f0[i - 1] = signed;
                } else {
                    lb.add_fi(matno - 1, i - 1, signed);
                }
            }
        }
    }

    let c: Vec<f64> = c_file.into_iter().map(|v| -v).collect();
    Ok(StandardConicProblem::new(c, blocks))
}

fn first_token(line: &str) -> &str {
    line.split_whitespace().next().unwrap_or("")
}

/// SDPA headers allow any mix of spaces, commas, and bracket characters.
fn numbers<T: std::str::FromStr>(line: &str) -> Result<Vec<T>, ()> {
    line.split(|ch: char| ch.is_whitespace() || matches!(ch, ',' | '(' | ')' | '{' | '}'))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| ()))
        .collect()
}
