//! Comma-separated study files.
//!
//! ```text
//! # category 1 low
//! # category 2 high
//! unit_id,w,y,x1
//! a,0,1,0.5
//! b,1,2,-1.25
//! ```
//!
//! Lines starting with `#` are comments. A comment of the form
//! `# category <index> <label>` names a level; when present the labels must
//! cover `1..=m` and the scale has `max(m, largest y)` levels. Columns are
//! `unit_id`, `w` (0 or 1), `y` (1-based level) and optional covariates
//! `x1..xd` in that order.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Category, ObservedStudy, Unit};

/// A study together with the unit identifiers and covariate text it was
/// read from, so it can be written back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyFile {
    pub ids: Vec<String>,
    pub study: ObservedStudy,
    covariate_text: Vec<Vec<String>>,
}

impl StudyFile {
    /// Wrap a study, numbering units from 1 and formatting covariates with
    /// the shortest round-trip representation.
    pub fn from_study(study: ObservedStudy) -> Self {
        let ids = (1..=study.len()).map(|i| i.to_string()).collect();
        let covariate_text = study.units().iter().map(|u| u.x.iter().map(|v| v.to_string()).collect()).collect();
        StudyFile { ids, study, covariate_text }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut dictionary: Vec<(u32, String, u64)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n as u64 + 1;
            let Some(rest) = line.trim_start().strip_prefix('#') else { continue };
            let mut parts = rest.trim().splitn(3, char::is_whitespace);
            if parts.next() != Some("category") {
                continue;
            }
            let index = parts
                .next()
                .and_then(|s| s.parse::<u32>().ok())
                .filter(|&i| i >= 1)
                .ok_or_else(|| parse_err(line_no, "category entry needs a positive integer index"))?;
            let label = parts.next().map(str::trim).unwrap_or("");
            if label.is_empty() {
                return Err(parse_err(line_no, format!("category {index} has no label")));
            }
            dictionary.push((index, label.to_string(), line_no));
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(csv_err)?.clone();
        let header_line = headers.position().map_or(1, |p| p.line());
        let names: Vec<&str> = headers.iter().collect();
        if names.len() < 3 || names[..3] != ["unit_id", "w", "y"] {
            return Err(parse_err(header_line, "header must start with unit_id,w,y"));
        }
        let d = names.len() - 3;
        for (c, name) in names[3..].iter().enumerate() {
            if *name != format!("x{}", c + 1) {
                return Err(parse_err(header_line, format!("covariate column {} must be named x{}", c + 4, c + 1)));
            }
        }

        let mut ids = Vec::new();
        let mut seen = HashSet::new();
        let mut raw = Vec::new();
        let mut covariate_text = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            let id = record[0].to_string();
            if id.is_empty() {
                return Err(parse_err(line, "empty unit_id"));
            }
            if !seen.insert(id.clone()) {
                return Err(parse_err(line, format!("duplicate unit_id {id:?}")));
            }
            let treated = match &record[1] {
                "0" => false,
                "1" => true,
                other => return Err(parse_err(line, format!("w must be 0 or 1, got {other:?}"))),
            };
            let y: u32 = record[2]
                .parse()
                .ok()
                .filter(|&y| y >= 1)
                .ok_or_else(|| parse_err(line, format!("y must be a level 1, 2, ..., got {:?}", &record[2])))?;
            let x = (3..3 + d)
                .map(|c| {
                    record[c]
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(line, format!("x{} is not a finite number: {:?}", c - 2, &record[c])))
                })
                .collect::<Result<Vec<_>>>()?;
            covariate_text.push(record.iter().skip(3).map(str::to_string).collect());
            ids.push(id);
            raw.push((y, treated, x, line));
        }
        if raw.is_empty() {
            return Err(parse_err(header_line, "no units"));
        }

        dictionary.sort_by_key(|e| e.0);
        for (pos, (index, _, line)) in dictionary.iter().enumerate() {
            if *index as usize != pos + 1 {
                return Err(parse_err(*line, format!("category dictionary must list 1, 2, ... in full; found {index} at position {}", pos + 1)));
            }
        }
        let max_y = raw.iter().map(|r| r.0).max().unwrap_or(1) as usize;
        let k = max_y.max(dictionary.len());
        if !dictionary.is_empty() && dictionary.len() < k {
            let line = raw.iter().find(|r| r.0 as usize > dictionary.len()).map_or(0, |r| r.3);
            return Err(parse_err(line, format!("y exceeds the {} declared categories", dictionary.len())));
        }
        let units = raw
            .into_iter()
            .map(|(y, treated, x, _)| Unit { y: Category::from_slot(y as usize - 1), treated, x })
            .collect();
        let mut study = ObservedStudy::new(k, units)?;
        if !dictionary.is_empty() {
            study = study.with_labels(dictionary.into_iter().map(|e| e.1).collect())?;
        }
        Ok(StudyFile { ids, study, covariate_text })
    }

    /// Canonical text: dictionary comments, header, one line per unit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(labels) = self.study.labels() {
            for (i, l) in labels.iter().enumerate() {
                let _ = writeln!(out, "# category {} {}", i + 1, l);
            }
        }
        out.push_str("unit_id,w,y");
        for c in 1..=self.study.covariate_dim() {
            let _ = write!(out, ",x{c}");
        }
        out.push('\n');
        for ((id, u), xs) in self.ids.iter().zip(self.study.units()).zip(&self.covariate_text) {
            let _ = write!(out, "{},{},{}", id, u.treated as u8, u.y);
            for x in xs {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

/// Read a study file.
pub fn load_study(path: impl AsRef<Path>) -> Result<ObservedStudy> {
    Ok(load_study_file(path)?.study)
}

/// Read a study file keeping identifiers and covariate text.
pub fn load_study_file(path: impl AsRef<Path>) -> Result<StudyFile> {
    StudyFile::parse(&std::fs::read_to_string(path)?)
}

/// Write a study file in canonical form.
pub fn save_study(path: impl AsRef<Path>, file: &StudyFile) -> Result<()> {
    std::fs::write(path, file.to_text())?;
    Ok(())
}
