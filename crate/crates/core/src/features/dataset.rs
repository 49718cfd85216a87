//! Two-axis labeled feature dataset and its CSV form
//! (`window_start,f00..f95,arousal_label,valence_label`, labels as -1/0/1).

use super::{AffectClass, Axis, FeatureError, FeatureVector, Result};
use crate::signal::N_FEATURES;
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub window_start: f64,
    pub values: Vec<f64>,
    pub arousal: Option<AffectClass>,
    pub valence: Option<AffectClass>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub windows: Vec<LabeledWindow>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Feature vectors labeled for one axis, in dataset order.
    pub fn for_axis(&self, axis: Axis) -> Vec<FeatureVector> {
        self.windows
            .iter()
            .map(|w| FeatureVector {
                window_start: w.window_start,
                values: w.values.clone(),
                label: match axis {
                    Axis::Arousal => w.arousal,
                    Axis::Valence => w.valence,
                },
            })
            .collect()
    }

    pub fn sort_chronologically(&mut self) {
        self.windows.sort_by(|a, b| a.window_start.total_cmp(&b.window_start));
    }

    pub fn header() -> Vec<String> {
        std::iter::once("window_start".to_string())
            .chain((0..N_FEATURES).map(|i| format!("f{i:02}")))
            .chain(["arousal_label".to_string(), "valence_label".to_string()])
            .collect()
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| FeatureError::Parse(e.to_string());
        w.write_record(Self::header()).map_err(io)?;
        for win in &self.windows {
            let label = |c: Option<AffectClass>| c.map(|c| c.code().to_string()).unwrap_or_default();
            let row: Vec<String> = std::iter::once(win.window_start.to_string())
                .chain(win.values.iter().map(f64::to_string))
                .chain([label(win.arousal), label(win.valence)])
                .collect();
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| FeatureError::Parse(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| FeatureError::Parse(e.to_string()))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }

    pub fn read_csv_from<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut windows = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| FeatureError::Parse(e.to_string()))?;
            let err = |what: &str| FeatureError::Parse(format!("row {}: {what}", line + 1));
            if record.len() != N_FEATURES + 3 {
                return Err(err(&format!("expected {} columns, got {}", N_FEATURES + 3, record.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(&format!("bad number {s:?}")));
            let label = |s: &str| -> Result<Option<AffectClass>> {
                let s = s.trim();
                if s.is_empty() {
                    return Ok(None);
                }
                let code: i64 = s.parse().map_err(|_| err(&format!("bad label {s:?}")))?;
                AffectClass::from_code(code).map(Some).ok_or_else(|| err(&format!("bad label {s:?}")))
            };
            let window_start = num(&record[0])?;
            let values = (1..=N_FEATURES).map(|i| num(&record[i])).collect::<Result<Vec<_>>>()?;
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::NonFinite(i));
            }
            windows.push(LabeledWindow {
                window_start,
                values,
                arousal: label(&record[N_FEATURES + 1])?,
                valence: label(&record[N_FEATURES + 2])?,
            });
        }
        Ok(Self { windows })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| FeatureError::Parse(e.to_string()))?;
        Self::read_csv_from(file)
    }
}
