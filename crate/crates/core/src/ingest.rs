//! CSV ingestion: derived columns, row filtering, min-max normalization and
//! grid snapping.

use std::collections::HashMap;
use std::io::Read;
use std::path::PathBuf;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CandidateRow, Dataset, Grid};

/// `name = expression` over other columns. Expressions use `+ - * /`,
/// parentheses, numeric literals, column names and `days(column)`, which
/// reads a date or timestamp as fractional days since 1970-01-01.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedColumn {
    pub name: String,
    pub expr: String,
}

impl DerivedColumn {
    /// Parses `name=expr`.
    pub fn parse(def: &str) -> Result<Self> {
        let (name, expr) = def
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("derived column {def:?} is not of the form name=expr")))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::Parameter(format!("derived column {def:?} has an empty name")));
        }
        Expr::parse(expr)?;
        Ok(Self { name: name.to_string(), expr: expr.trim().to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestionSpec {
    pub path: PathBuf,
    pub score_columns: Vec<String>,
    pub group_column: String,
    pub protected_value: String,
    #[serde(default)]
    pub derived_columns: Vec<DerivedColumn>,
    #[serde(default = "default_places")]
    pub snap_places: u32,
    #[serde(default = "default_delimiter")]
    pub delimiter: u8,
}

fn default_places() -> u32 {
    6
}

fn default_delimiter() -> u8 {
    b','
}

impl IngestionSpec {
    pub fn new(
        path: impl Into<PathBuf>,
        score_columns: Vec<String>,
        group_column: impl Into<String>,
        protected_value: impl Into<String>,
    ) -> Self {
        Self {
            path: path.into(),
            score_columns,
            group_column: group_column.into(),
            protected_value: protected_value.into(),
            derived_columns: Vec::new(),
            snap_places: default_places(),
            delimiter: default_delimiter(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.score_columns.is_empty() {
            return Err(Error::Parameter("at least one score column is required".into()));
        }
        if self.score_columns.contains(&self.group_column) {
            return Err(Error::Parameter(format!(
                "group column {:?} cannot also be a score column",
                self.group_column
            )));
        }
        Grid::new(self.snap_places)?;
        Ok(())
    }
}

/// What happened during ingestion besides the dataset itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestionReport {
    pub column_names: Vec<String>,
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct Ingested {
    pub dataset: Dataset,
    pub report: IngestionReport,
}

pub fn ingest_csv(spec: &IngestionSpec) -> Result<Ingested> {
    let file = std::fs::File::open(&spec.path)
        .map_err(|e| Error::Ingestion(format!("cannot open {}: {e}", spec.path.display())))?;
    ingest_reader(spec, file)
}

/// Same as [`ingest_csv`] but reads from `input`; `spec.path` is ignored.
pub fn ingest_reader<R: Read>(spec: &IngestionSpec, input: R) -> Result<Ingested> {
    spec.validate()?;
    let grid = Grid::new(spec.snap_places)?;
    let mut reader = csv::ReaderBuilder::new().delimiter(spec.delimiter).has_headers(true).from_reader(input);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();

    let group_idx = *index
        .get(spec.group_column.as_str())
        .ok_or_else(|| Error::Ingestion(format!("missing group column {:?}", spec.group_column)))?;
    let mut derived: HashMap<&str, Expr> = HashMap::new();
    for def in &spec.derived_columns {
        let expr = Expr::parse(&def.expr)?;
        for col in expr.columns() {
            if !index.contains_key(col.as_str()) {
                return Err(Error::Ingestion(format!(
                    "derived column {:?} refers to missing column {col:?}",
                    def.name
                )));
            }
        }
        derived.insert(def.name.as_str(), expr);
    }
    enum Source<'a> {
        Raw(usize),
        Derived(&'a Expr),
    }
    let sources: Vec<Source> = spec
        .score_columns
        .iter()
        .map(|c| {
            if let Some(e) = derived.get(c.as_str()) {
                Ok(Source::Derived(e))
            } else if let Some(&i) = index.get(c.as_str()) {
                Ok(Source::Raw(i))
            } else {
                Err(Error::Ingestion(format!("missing score column {c:?}")))
            }
        })
        .collect::<Result<_>>()?;

    let mut groups: Vec<String> = vec![spec.protected_value.clone()];
    let mut raw_rows: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    let mut report = IngestionReport { column_names: spec.score_columns.clone(), ..Default::default() };
    for (row_no, record) in reader.records().enumerate() {
        report.rows_read += 1;
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                report.rows_dropped += 1;
                continue;
            }
        };
        let row = Row { index: &index, record: &record };
        let values: Option<Vec<f64>> = sources
            .iter()
            .map(|s| match s {
                Source::Raw(i) => record.get(*i).and_then(parse_number),
                Source::Derived(e) => e.eval(&row),
            })
            .map(|v| v.filter(|x| x.is_finite()))
            .collect();
        let Some(values) = values else {
            report.rows_dropped += 1;
            continue;
        };
        let label = record.get(group_idx).unwrap_or("").trim();
        let group = match groups.iter().position(|g| g == label) {
            Some(g) => g,
            None => {
                groups.push(label.to_string());
                groups.len() - 1
            }
        };
        raw_rows.push((row_no, values, group));
    }
    if report.rows_dropped > 0 {
        let msg = format!("dropped {} rows with missing or non-numeric scores", report.rows_dropped);
        log::warn!("{msg}");
        report.warnings.push(msg);
    }
    if raw_rows.is_empty() {
        return Err(Error::Ingestion("no usable rows".into()));
    }

    let d = sources.len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (_, values, _) in &raw_rows {
        for (j, &v) in values.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    for j in 0..d {
        if lo[j] == hi[j] {
            let msg = format!("column {:?} is constant; normalized to 0", spec.score_columns[j]);
            log::warn!("{msg}");
            report.warnings.push(msg);
        }
    }
    let rows = raw_rows
        .into_iter()
        .map(|(id, values, group)| {
            let units = values
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let x = if lo[j] == hi[j] { 0.0 } else { ((v - lo[j]) / (hi[j] - lo[j])).clamp(0.0, 1.0) };
                    grid.snap(x)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CandidateRow { id, units, group })
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset::new(grid, groups, 0, rows)?;
    Ok(Ingested { dataset, report })
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    s.parse::<f64>().ok()
}

fn parse_days(s: &str) -> Option<f64> {
    let s = s.trim();
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1)?.and_hms_opt(0, 0, 0)?;
    let ts = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| {
            ["%Y-%m-%d", "%m/%d/%Y"]
                .iter()
                .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })?;
    Some((ts - epoch).num_seconds() as f64 / 86_400.0)
}

struct Row<'a> {
    index: &'a HashMap<&'a str, usize>,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn get(&self, name: &str) -> &str {
        self.index.get(name).and_then(|&i| self.record.get(i)).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(f64),
    Col(String),
    Days(String),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let bad = |msg: String| Error::Parameter(format!("derived column expression {src:?}: {msg}"));
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if "+-*/()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Num(text.parse().map_err(|_| bad(format!("bad number {text:?}")))?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            return Err(bad(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parameter(format!("derived column expression {:?}: {msg}", self.src))
    }

    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {op:?}")))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.toks.get(self.pos).cloned().ok_or_else(|| self.err("unexpected end"))?;
        self.pos += 1;
        match tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "days" && self.peek_op() == Some('(') => {
                self.pos += 1;
                let col = match self.toks.get(self.pos) {
                    Some(Tok::Ident(c)) => c.clone(),
                    _ => return Err(self.err("days() takes a column name")),
                };
                self.pos += 1;
                self.expect(')')?;
                Ok(Expr::Days(col))
            }
            Tok::Ident(name) => Ok(Expr::Col(name)),
            Tok::Op(c) => Err(self.err(&format!("unexpected {c:?}"))),
        }
    }
}

impl Expr {
    fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src, toks: tokenize(src)?, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.toks.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }

    fn columns(&self) -> Vec<String> {
        match self {
            Expr::Num(_) => Vec::new(),
            Expr::Col(c) | Expr::Days(c) => vec![c.clone()],
            Expr::Neg(e) => e.columns(),
            Expr::Bin(_, a, b) => {
                let mut v = a.columns();
                v.extend(b.columns());
                v
            }
        }
    }

    fn eval(&self, row: &Row) -> Option<f64> {
        match self {
            Expr::Num(x) => Some(*x),
            Expr::Col(c) => parse_number(row.get(c)),
            Expr::Days(c) => parse_days(row.get(c)),
            Expr::Neg(e) => e.eval(row).map(|x| -x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(row)?, b.eval(row)?);
                match op {
                    '+' => Some(a + b),
                    '-' => Some(a - b),
                    '*' => Some(a * b),
                    _ if b == 0.0 => None,
                    _ => Some(a / b),
                }
            }
        }
    }
}
