//! CPLEX-LP text export of the model and a parser for the same layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_traits::{One, Signed, Zero};

use super::MilpModel;
use crate::error::{Error, Result};
use crate::model::{FairnessSpec, LinearInequality};
use crate::rational::{self, Q};

fn number(x: &Q) -> Result<String> {
    rational::exact_decimal_string(x)
        .ok_or_else(|| Error::Validation(format!("coefficient {} has no exact decimal form", rational::display(x))))
}

/// Renders `sum coef * var`, dropping zero terms.
fn expression(terms: &[(Q, String)]) -> Result<String> {
    let mut out = String::new();
    for (coef, var) in terms.iter().filter(|(c, _)| !c.is_zero()) {
        let sign = if coef.is_negative() { "-" } else { "+" };
        if !out.is_empty() || coef.is_negative() {
            out.push_str(sign);
            out.push(' ');
        }
        let magnitude = coef.abs();
        if !magnitude.is_one() {
            out.push_str(&number(&magnitude)?);
            out.push(' ');
        }
        out.push_str(var);
        out.push(' ');
    }
    if out.is_empty() {
        let first = terms.first().map(|(_, v)| v.as_str()).unwrap_or("lam");
        out = format!("0 {first} ");
    }
    Ok(out)
}

fn w_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("w{i}")).collect()
}

pub fn to_lp_string(m: &MilpModel) -> Result<String> {
    let ws = w_names(m.d);
    let ds: Vec<String> = (0..m.n()).map(|i| format!("d{i}")).collect();
    let mut s = String::new();
    s.push_str("\\ fair top-k feasibility model\n");
    let ids: Vec<String> = m.ids.iter().map(|id| id.to_string()).collect();
    writeln!(s, "\\ candidates: {}", ids.join(" ")).expect("string write");
    s.push_str("Minimize\n obj: 0\nSubject To\n");
    for (i, row) in m.scores.iter().enumerate() {
        let mut terms: Vec<(Q, String)> = row.iter().cloned().zip(ws.iter().cloned()).collect();
        terms.push((-Q::one(), "lam".into()));
        terms.push((-Q::one(), ds[i].clone()));
        let e = expression(&terms)?;
        writeln!(s, " win_lo_{i}: {e}>= -1").expect("string write");
        writeln!(s, " win_hi_{i}: {e}<= 0").expect("string write");
    }
    let all: Vec<(Q, String)> = ds.iter().map(|v| (Q::one(), v.clone())).collect();
    writeln!(s, " card: {}= {}", expression(&all)?, m.k).expect("string write");
    let g1: Vec<(Q, String)> = ds
        .iter()
        .zip(&m.protected)
        .map(|(v, &p)| (if p { Q::one() } else { Q::zero() }, v.clone()))
        .collect();
    let g1e = expression(&g1)?;
    writeln!(s, " fair_lo: {g1e}>= {}", m.lower).expect("string write");
    writeln!(s, " fair_hi: {g1e}<= {}", m.upper).expect("string write");
    let simplex: Vec<(Q, String)> = ws.iter().map(|v| (Q::one(), v.clone())).collect();
    writeln!(s, " simplex: {}= 1", expression(&simplex)?).expect("string write");
    for (j, h) in m.box_rows.iter().enumerate() {
        let terms: Vec<(Q, String)> = h.coeffs.iter().cloned().zip(ws.iter().cloned()).collect();
        writeln!(s, " box_{j}: {}<= {}", expression(&terms)?, number(&h.bound)?).expect("string write");
    }
    s.push_str("Bounds\n");
    for w in &ws {
        writeln!(s, " 0 <= {w} <= 1").expect("string write");
    }
    s.push_str(" 0 <= lam <= 1\nBinaries\n");
    writeln!(s, " {}", ds.join(" ")).expect("string write");
    s.push_str("End\n");
    Ok(s)
}

pub fn export_lp_file(m: &MilpModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_lp_string(m)?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug)]
struct Row {
    line: usize,
    coeffs: BTreeMap<String, Q>,
    relation: Relation,
    rhs: Q,
}

fn parse_row(line: usize, body: &str) -> Result<Row> {
    let err = |reason: String| Error::LpParse { line, reason };
    let mut coeffs: BTreeMap<String, Q> = BTreeMap::new();
    let mut sign = Q::one();
    let mut coef: Option<Q> = None;
    let mut tokens = body.split_whitespace().peekable();
    let mut relation = None;
    while let Some(tok) = tokens.next() {
        match tok {
            "+" => sign = Q::one(),
            "-" => sign = -Q::one(),
            "<=" | "=<" | "<" => relation = Some(Relation::Le),
            ">=" | "=>" | ">" => relation = Some(Relation::Ge),
            "=" => relation = Some(Relation::Eq),
            _ if rational::parse_decimal(tok).is_ok() => {
                coef = Some(rational::parse_decimal(tok)?);
            }
            _ if tok.starts_with(|c: char| c.is_ascii_alphabetic()) => {
                let c = coef.take().unwrap_or_else(Q::one) * &sign;
                *coeffs.entry(tok.to_string()).or_insert_with(Q::zero) += c;
                sign = Q::one();
            }
            _ => return Err(err(format!("unexpected token {tok:?}"))),
        }
        if let Some(relation) = relation {
            let rest: Vec<&str> = tokens.collect();
            let rhs = rational::parse_decimal(&rest.concat()).map_err(|e| err(e.to_string()))?;
            return Ok(Row { line, coeffs, relation, rhs });
        }
    }
    Err(err("constraint without a relation".into()))
}

fn count(line: usize, q: &Q) -> Result<usize> {
    if !q.is_integer() || q.is_negative() {
        return Err(Error::LpParse { line, reason: format!("expected a count, got {}", rational::display(q)) });
    }
    q.to_integer()
        .try_into()
        .map_err(|_| Error::LpParse { line, reason: "count out of range".into() })
}

/// Rebuilds the structured model from the export layout.
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Objective,
        Constraints,
        Bounds,
        Binaries,
        Done,
    }
    let mut section = Section::Preamble;
    let mut ids: Option<Vec<usize>> = None;
    let mut rows: BTreeMap<String, Row> = BTreeMap::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut pending = String::new();
    let mut pending_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('\\') {
            if let Some(list) = comment.trim().strip_prefix("candidates:") {
                let parsed = list
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::LpParse { line, reason: e.to_string() })?;
                ids = Some(parsed);
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.to_ascii_lowercase().as_str() {
            "minimize" | "maximize" | "min" | "max" => {
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." | "such that" => {
                section = Section::Constraints;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "binaries" | "binary" | "bin" => {
                section = Section::Binaries;
                continue;
            }
            "end" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line;
                }
                pending.push(' ');
                pending.push_str(trimmed);
                if trimmed.contains(['<', '>', '=']) {
                    let (name, body) = pending
                        .split_once(':')
                        .ok_or(Error::LpParse { line: pending_line, reason: "unnamed constraint".into() })?;
                    let row = parse_row(pending_line, body)?;
                    rows.insert(name.trim().to_string(), row);
                    pending.clear();
                }
            }
            Section::Binaries => binaries.extend(trimmed.split_whitespace().map(String::from)),
            Section::Preamble | Section::Objective | Section::Bounds | Section::Done => {}
        }
    }
    if section != Section::Done {
        return Err(Error::LpParse { line: text.lines().count(), reason: "missing End".into() });
    }

    let n = binaries.len();
    let take = |name: &str| -> Result<&Row> {
        rows.get(name).ok_or(Error::LpParse { line: 0, reason: format!("missing row {name}") })
    };
    let simplex = take("simplex")?;
    let d = simplex.coeffs.keys().filter(|v| v.starts_with('w')).count();
    let ws = w_names(d);
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let row = take(&format!("win_lo_{i}"))?;
        let dv = row.coeffs.get(&format!("d{i}")).cloned().unwrap_or_else(Q::zero);
        if !dv.is_negative() {
            return Err(Error::LpParse { line: row.line, reason: format!("window row of d{i} has no indicator") });
        }
        let scale = -dv;
        scores.push(
            ws.iter()
                .map(|w| row.coeffs.get(w).cloned().unwrap_or_else(Q::zero) / &scale)
                .collect::<Vec<Q>>(),
        );
        take(&format!("win_hi_{i}"))?;
    }
    let card = take("card")?;
    let fair_lo = take("fair_lo")?;
    let fair_hi = take("fair_hi")?;
    let protected = (0..n)
        .map(|i| fair_lo.coeffs.get(&format!("d{i}")).is_some_and(|c| !c.is_zero()))
        .collect();
    let spec = FairnessSpec {
        k: count(card.line, &card.rhs)?,
        lower: count(fair_lo.line, &fair_lo.rhs)?,
        upper: count(fair_hi.line, &fair_hi.rhs)?,
    };
    let mut box_rows = Vec::new();
    let mut j = 0;
    while let Some(row) = rows.get(&format!("box_{j}")) {
        let mut coeffs: Vec<Q> = ws.iter().map(|w| row.coeffs.get(w).cloned().unwrap_or_else(Q::zero)).collect();
        let mut bound = row.rhs.clone();
        match row.relation {
            Relation::Le => {}
            Relation::Ge => {
                coeffs = coeffs.into_iter().map(|c| -c).collect();
                bound = -bound;
            }
            Relation::Eq => {
                return Err(Error::LpParse { line: row.line, reason: "box rows must be inequalities".into() })
            }
        }
        box_rows.push(LinearInequality { coeffs, bound });
        j += 1;
    }
    let ids = ids.unwrap_or_else(|| (0..n).collect());
    MilpModel::from_parts(d, ids, scores, protected, spec, box_rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dataset, WeightBox, WeightVector};

    fn t1_model(wbox: &WeightBox) -> MilpModel {
        let ds = Dataset::from_scores(
            6,
            &[(vec![1.0, 0.0], true), (vec![0.0, 1.0], false), (vec![0.5, 0.5], false)],
        )
        .unwrap();
        MilpModel::build(&ds, &FairnessSpec::new(1, 1, 1).unwrap(), wbox).unwrap()
    }

    #[test]
    fn export_layout() {
        let text = to_lp_string(&t1_model(&WeightBox::simplex(2))).unwrap();
        let expected = "\\ fair top-k feasibility model
\\ candidates: 0 1 2
Minimize
 obj: 0
Subject To
 win_lo_0: w1 - lam - d0 >= -1
 win_hi_0: w1 - lam - d0 <= 0
 win_lo_1: w2 - lam - d1 >= -1
 win_hi_1: w2 - lam - d1 <= 0
 win_lo_2: 0.5 w1 + 0.5 w2 - lam - d2 >= -1
 win_hi_2: 0.5 w1 + 0.5 w2 - lam - d2 <= 0
 card: d0 + d1 + d2 = 1
 fair_lo: d0 >= 1
 fair_hi: d0 <= 1
 simplex: w1 + w2 = 1
Bounds
 0 <= w1 <= 1
 0 <= w2 <= 1
 0 <= lam <= 1
Binaries
 d0 d1 d2
End
";
        assert_eq!(text, expected);
    }

    #[test]
    fn round_trip() {
        let w0 = WeightVector::from_f64s(&[0.45, 0.55]).unwrap();
        for wbox in [
            WeightBox::simplex(2),
            WeightBox::from_epsilon_box_f64(&w0, 0.05).unwrap(),
            WeightBox::from_epsilon_box(&WeightVector::parse("1/3,2/3").unwrap(), &Q::zero()).unwrap(),
        ] {
            let m = t1_model(&wbox);
            let back = parse_lp(&to_lp_string(&m).unwrap()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_lp("Minimize\n obj: 0\nSubject To\n c1: 2 x ?? <= 3\nEnd\n").unwrap_err();
        assert!(matches!(err, Error::LpParse { line: 4, .. }), "{err}");
        assert!(parse_lp("Minimize\n obj: 0\n").is_err());
    }
}
