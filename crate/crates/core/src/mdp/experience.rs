//! Experience log: one `(s, a, r, s')` record per line.
//!
//! ```text
//! {"version":1}
//! {"s":{"tilt_deg":7,"coverage":0.9,"capacity":0.4,"quality":0.8},"a":"uptilt","r":0.71,"s_next":{...}}
//! ```
//!
//! The version header is optional; when present it must be the first
//! non-blank line.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Action, Feature};

pub const EXPERIENCE_VERSION: u64 = 1;

/// Undiscretized observation of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawState {
    pub tilt_deg: f64,
    pub coverage: f64,
    pub capacity: f64,
    pub quality: f64,
}

impl RawState {
    pub fn get(&self, f: Feature) -> f64 {
        match f {
            Feature::Tilt => self.tilt_deg,
            Feature::Coverage => self.coverage,
            Feature::Capacity => self.capacity,
            Feature::Quality => self.quality,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperienceRecord {
    pub s: RawState,
    pub a: Action,
    pub r: f64,
    pub s_next: RawState,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperienceError {
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("experience source contains no records")]
    EmptySource,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered experience records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperienceBuffer {
    records: Vec<ExperienceRecord>,
}

impl ExperienceBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: ExperienceRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[ExperienceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = format!("{{\"version\":{EXPERIENCE_VERSION}}}\n");
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

impl FromIterator<ExperienceRecord> for ExperienceBuffer {
    fn from_iter<I: IntoIterator<Item = ExperienceRecord>>(iter: I) -> Self {
        ExperienceBuffer {
            records: iter.into_iter().collect(),
        }
    }
}

/// Reads and validates an experience log. `tilt_range` bounds `tilt_deg`.
pub fn ingest_experience(source: impl BufRead, tilt_range: (f64, f64)) -> Result<ExperienceBuffer, ExperienceError> {
    let mut buf = ExperienceBuffer::new();
    let mut seen_content = false;
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let schema = |field: &str, message: String| ExperienceError::Schema {
            line: line_no,
            field: field.to_string(),
            message,
        };
        let value: Value = serde_json::from_str(text).map_err(|e| schema("<record>", e.to_string()))?;
        let first = !seen_content;
        seen_content = true;
        if first {
            if let Some(v) = value.get("version") {
                if v.as_u64() != Some(EXPERIENCE_VERSION) {
                    return Err(schema("version", format!("expected {EXPERIENCE_VERSION}")));
                }
                continue;
            }
        }
        buf.push(parse_record(&value, tilt_range).map_err(|(field, msg)| schema(&field, msg))?);
    }
    if buf.is_empty() {
        return Err(ExperienceError::EmptySource);
    }
    Ok(buf)
}

fn parse_record(v: &Value, tilt_range: (f64, f64)) -> Result<ExperienceRecord, (String, String)> {
    let obj = v
        .as_object()
        .ok_or_else(|| ("<record>".to_string(), "expected an object".to_string()))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "s" | "a" | "r" | "s_next") {
            return Err((key.clone(), "unknown field".into()));
        }
    }
    let s = parse_state(obj.get("s"), "s", tilt_range)?;
    let s_next = parse_state(obj.get("s_next"), "s_next", tilt_range)?;
    let a = obj
        .get("a")
        .and_then(Value::as_str)
        .ok_or_else(|| ("a".to_string(), "missing or not a string".to_string()))?
        .parse::<Action>()
        .map_err(|e| ("a".to_string(), e))?;
    let r = obj
        .get("r")
        .and_then(Value::as_f64)
        .filter(|r| r.is_finite())
        .ok_or_else(|| ("r".to_string(), "missing or not a finite number".to_string()))?;
    Ok(ExperienceRecord { s, a, r, s_next })
}

fn parse_state(v: Option<&Value>, name: &str, tilt_range: (f64, f64)) -> Result<RawState, (String, String)> {
    let obj = v
        .and_then(Value::as_object)
        .ok_or_else(|| (name.to_string(), "missing or not an object".to_string()))?;
    let num = |key: &str| -> Result<f64, (String, String)> {
        obj.get(key)
            .and_then(Value::as_f64)
            .filter(|x| x.is_finite())
            .ok_or_else(|| (format!("{name}.{key}"), "missing or not a finite number".into()))
    };
    let state = RawState {
        tilt_deg: num("tilt_deg")?,
        coverage: num("coverage")?,
        capacity: num("capacity")?,
        quality: num("quality")?,
    };
    for f in [Feature::Coverage, Feature::Capacity, Feature::Quality] {
        let x = state.get(f);
        if !(0.0..=1.0).contains(&x) {
            return Err((format!("{name}.{f}"), format!("{x} outside [0, 1]")));
        }
    }
    let (lo, hi) = tilt_range;
    if !(lo..=hi).contains(&state.tilt_deg) {
        return Err((
            format!("{name}.tilt_deg"),
            format!("{} outside [{lo}, {hi}]", state.tilt_deg),
        ));
    }
    Ok(state)
}
