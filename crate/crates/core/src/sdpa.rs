//! SDPA sparse format (".dat-s") and SDPA-style result logs.
//!
//! Files use SDPA's sign convention: minimise c.x with c = -b, where b is the
//! maximisation objective of [`SdpData`]. Diagonal blocks carry negative sizes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::real::Real;
use crate::solver::{BlockMat, BlockSpec, Entry, Provenance, SdpData, SolveStatus, Solution};

/// Significant digits written for every coefficient.
pub const WRITE_DIGITS: usize = 45;
/// Minimum significant digits of external objectives accepted in certified mode.
pub const CERTIFIED_DIGITS: usize = 30;

pub fn format_sdpa(data: &SdpData) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", data.num_vars());
    let _ = writeln!(s, "{}", data.blocks.len());
    let sizes: Vec<String> =
        data.blocks.iter().map(|b| if b.diagonal { format!("-{}", b.size) } else { b.size.to_string() }).collect();
    let _ = writeln!(s, "{}", sizes.join(" "));
    let c: Vec<String> = data.objective.iter().map(|b| (-b.clone()).to_decimal(WRITE_DIGITS)).collect();
    let _ = writeln!(s, "{}", c.join(" "));
    for (idx, list) in data.constraints.iter().enumerate() {
        for e in list {
            if e.value.is_zero() {
                continue;
            }
            let _ = writeln!(s, "{} {} {} {} {}", idx, e.block + 1, e.row + 1, e.col + 1, e.value.to_decimal(WRITE_DIGITS));
        }
    }
    s
}

pub fn write_sdpa(data: &SdpData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_sdpa(data)).map_err(|e| Error::io(path, e))
}

fn numbers(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')')).filter(|t| !t.is_empty())
}

/// Parse a ".dat-s" file. Variable scales default to one.
pub fn parse_sdpa(text: &str, prec: u32) -> Result<SdpData> {
    let mut lines = text.lines().filter(|l| {
        let t = l.trim_start();
        !(t.is_empty() || t.starts_with('"') || t.starts_with('*'))
    });
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("missing {what}")));
    let parse_usize = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer {t:?}")));
    let m = parse_usize(numbers(next("variable count")?).next().unwrap_or(""))?;
    let nb = parse_usize(numbers(next("block count")?).next().unwrap_or(""))?;
    let mut blocks = Vec::new();
    for t in numbers(next("block structure")?).take(nb) {
        let v: i64 = t.parse().map_err(|_| Error::Parse(format!("bad block size {t:?}")))?;
        blocks.push(BlockSpec { size: v.unsigned_abs() as usize, diagonal: v < 0 });
    }
    if blocks.len() != nb {
        return Err(Error::Parse("block structure too short".into()));
    }
    let mut objective = Vec::new();
    while objective.len() < m {
        for t in numbers(next("objective")?) {
            objective.push(-Real::parse(t, prec)?);
        }
    }
    objective.truncate(m);
    let mut constraints = vec![Vec::new(); m + 1];
    for line in lines {
        let toks: Vec<&str> = numbers(line).collect();
        if toks.len() < 5 {
            return Err(Error::Parse(format!("short entry line {line:?}")));
        }
        let idx = parse_usize(toks[0])?;
        let block = parse_usize(toks[1])?;
        let (r, c) = (parse_usize(toks[2])?, parse_usize(toks[3])?);
        if idx > m || block == 0 || block > nb || r == 0 || c == 0 {
            return Err(Error::Parse(format!("entry out of range {line:?}")));
        }
        let (row, col) = if r <= c { (r - 1, c - 1) } else { (c - 1, r - 1) };
        constraints[idx].push(Entry { block: block - 1, row, col, value: Real::parse(toks[4], prec)? });
    }
    let data = SdpData { blocks, objective, constraints, var_scale: vec![Real::one(prec); m] };
    data.validate()?;
    Ok(data)
}

pub fn read_sdpa(path: impl AsRef<Path>, prec: u32) -> Result<SdpData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sdpa(&text, prec)
}

fn status_word(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "pdOPT",
        SolveStatus::NearOptimal => "pdFEAS",
        SolveStatus::Infeasible => "pINF_dFEAS",
        SolveStatus::Unbounded => "pFEAS_dINF",
        SolveStatus::Stalled => "noINFO",
    }
}

fn parse_status(word: &str) -> Result<SolveStatus> {
    Ok(match word {
        "pdOPT" => SolveStatus::Optimal,
        "pdFEAS" | "pFEAS" | "dFEAS" => SolveStatus::NearOptimal,
        "pINF_dFEAS" | "pINF" | "pdINF" | "dUNBD" => SolveStatus::Infeasible,
        "pFEAS_dINF" | "dINF" | "pUNBD" => SolveStatus::Unbounded,
        "noINFO" => SolveStatus::Stalled,
        other => return Err(Error::Parse(format!("unknown phase value {other:?}"))),
    })
}

fn write_block(s: &mut String, b: &BlockMat, digits: usize) {
    match b {
        BlockMat::Diag(d) => {
            let v: Vec<String> = d.iter().map(|x| x.to_decimal(digits)).collect();
            let _ = writeln!(s, "{{{} }}", v.join(","));
        }
        BlockMat::Dense(m) => {
            let _ = writeln!(s, "{{");
            for r in 0..m.rows() {
                let v: Vec<String> = (0..m.cols()).map(|c| m.get(r, c).to_decimal(digits)).collect();
                let _ = writeln!(s, "{{{} }}", v.join(","));
            }
            let _ = writeln!(s, "}}");
        }
    }
}

/// Result log in the layout printed by SDPA-family solvers.
pub fn format_log(sol: &Solution, digits: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "phase.value  = {}", status_word(sol.status));
    let _ = writeln!(s, "   Iteration = {}", sol.iterations);
    let _ = writeln!(s, "objValPrimal = {}", (-sol.primal_objective.clone()).to_decimal(digits));
    let _ = writeln!(s, "objValDual   = {}", (-sol.dual_objective.clone()).to_decimal(digits));
    let _ = writeln!(s, "p.feas.error = {}", sol.primal_residual.to_decimal(6));
    let _ = writeln!(s, "d.feas.error = {}", sol.dual_residual.to_decimal(6));
    let x: Vec<String> = sol.x.iter().map(|v| v.to_decimal(digits)).collect();
    let _ = writeln!(s, "xVec = \n{{{}}}", x.join(","));
    if let Some(y) = &sol.y {
        let _ = writeln!(s, "yMat = \n{{");
        for b in y {
            write_block(&mut s, b, digits);
        }
        let _ = writeln!(s, "}}");
    }
    s
}

/// Significant digits in a decimal literal such as "-3.8822e+02".
pub fn significant_digits(lit: &str) -> usize {
    let mantissa = lit.split(['e', 'E']).next().unwrap_or("");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let trimmed = digits.trim_start_matches('0');
    if trimmed.is_empty() {
        1
    } else {
        trimmed.len()
    }
}

#[derive(Debug)]
enum Tree {
    Num(String),
    List(Vec<Tree>),
}

fn parse_tree(toks: &[String], pos: &mut usize) -> Result<Tree> {
    match toks.get(*pos).map(|s| s.as_str()) {
        Some("{") => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match toks.get(*pos).map(|s| s.as_str()) {
                    Some("}") => {
                        *pos += 1;
                        return Ok(Tree::List(items));
                    }
                    Some(_) => items.push(parse_tree(toks, pos)?),
                    None => return Err(Error::Parse("unbalanced braces in matrix".into())),
                }
            }
        }
        Some("}") | None => Err(Error::Parse("unexpected end of matrix".into())),
        Some(t) => {
            *pos += 1;
            Ok(Tree::Num(t.to_string()))
        }
    }
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '{' | '}' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            ',' | ' ' | '\n' | '\t' | '\r' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(ch),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn tree_block(t: &Tree, prec: u32) -> Result<BlockMat> {
    let Tree::List(items) = t else { return Err(Error::Parse("expected a block".into())) };
    if items.iter().all(|i| matches!(i, Tree::Num(_))) {
        let d = items
            .iter()
            .map(|i| match i {
                Tree::Num(s) => Real::parse(s, prec),
                _ => unreachable!(),
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(BlockMat::Diag(d));
    }
    let n = items.len();
    let mut m = Mat::zeros(n, n, prec);
    for (r, row) in items.iter().enumerate() {
        let Tree::List(vals) = row else { return Err(Error::Parse("expected a matrix row".into())) };
        if vals.len() != n {
            return Err(Error::Parse("matrix block is not square".into()));
        }
        for (c, v) in vals.iter().enumerate() {
            let Tree::Num(s) = v else { return Err(Error::Parse("nested value in matrix row".into())) };
            m.set(r, c, Real::parse(s, prec)?);
        }
    }
    Ok(BlockMat::Dense(m))
}

/// Parse a result log. With `certified` set, objectives must carry at least
/// [`CERTIFIED_DIGITS`] significant digits.
pub fn parse_log(text: &str, prec: u32, certified: bool) -> Result<Solution> {
    let field = |key: &str| -> Option<String> {
        text.lines().find_map(|l| {
            let (k, v) = l.split_once('=')?;
            (k.trim() == key).then(|| v.trim().to_string())
        })
    };
    let phase = field("phase.value").ok_or_else(|| Error::Parse("log has no phase.value line".into()))?;
    let status = parse_status(&phase)?;
    let pv = field("objValPrimal").ok_or_else(|| Error::Parse("log has no objValPrimal line".into()))?;
    let dv = field("objValDual").ok_or_else(|| Error::Parse("log has no objValDual line".into()))?;
    let digits = significant_digits(&pv).min(significant_digits(&dv));
    if certified && digits < CERTIFIED_DIGITS {
        return Err(Error::Numerical(format!(
            "log objectives carry {digits} significant digits, certified mode needs {CERTIFIED_DIGITS}"
        )));
    }
    let iterations = field("Iteration").and_then(|v| v.parse().ok()).unwrap_or(0);
    let residual = |k: &str| -> Result<Real> {
        match field(k) {
            Some(v) => Real::parse(&v, prec),
            None => Ok(Real::zero(prec)),
        }
    };
    let section = |key: &str| -> Option<&str> {
        let start = text.find(key)?;
        let rest = &text[start + key.len()..];
        let rest = &rest[rest.find('=')? + 1..];
        let open = rest.find('{')?;
        let mut depth = 0i32;
        for (i, ch) in rest[open..].char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(&rest[open..open + i + 1]);
                    }
                }
                _ => {}
            }
        }
        None
    };
    for key in ["xVec", "yMat"] {
        if text.contains(key) && section(key).is_none() {
            return Err(Error::Parse(format!("{key} section is truncated")));
        }
    }
    let x = match section("xVec") {
        Some(s) => tokenize(s)
            .into_iter()
            .filter(|t| t != "{" && t != "}")
            .map(|t| Real::parse(&t, prec))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let y = match section("yMat") {
        Some(s) => {
            let toks = tokenize(s);
            let mut pos = 0;
            let Tree::List(blocks) = parse_tree(&toks, &mut pos)? else { unreachable!() };
            Some(blocks.iter().map(|b| tree_block(b, prec)).collect::<Result<Vec<_>>>()?)
        }
        None => None,
    };
    Ok(Solution {
        status,
        primal_objective: -Real::parse(&pv, prec)?,
        dual_objective: -Real::parse(&dv, prec)?,
        x,
        y,
        primal_residual: residual("p.feas.error")?,
        dual_residual: residual("d.feas.error")?,
        iterations,
        provenance: Provenance::External { digits },
        note: String::new(),
    })
}

pub fn read_log(path: impl AsRef<Path>, prec: u32, certified: bool) -> Result<Solution> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text, prec, certified)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits() {
        assert_eq!(significant_digits("-3.882240000000000000e+02"), 19);
        assert_eq!(significant_digits("0.00125"), 3);
        assert_eq!(significant_digits("0"), 1);
    }

    #[test]
    fn tree_blocks() {
        let toks = tokenize("{ {1,2,3} { {1,0}, {0,2} } }");
        let mut pos = 0;
        let Tree::List(b) = parse_tree(&toks, &mut pos).unwrap() else { panic!() };
        assert!(matches!(tree_block(&b[0], 64).unwrap(), BlockMat::Diag(_)));
        assert!(matches!(tree_block(&b[1], 64).unwrap(), BlockMat::Dense(_)));
    }

    #[test]
    fn truncated_log() {
        assert!(parse_log("phase.value  = pdOPT\nobjValPrimal = -1.0\n", 128, false).is_err());
    }
}
