//! Epoch replay files: CSV with header `time,ch01..ch32` (seconds, µV).

use super::{EegFrame, Result, N_CHANNELS};
use std::io::{Read, Write};
use std::path::Path;

pub fn replay_header() -> Vec<String> {
    std::iter::once("time".to_string())
        .chain((1..=N_CHANNELS).map(|i| format!("ch{i:02}")))
        .collect()
}

/// Frames parsed from a replay file and the number of rows that were skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayData {
    pub frames: Vec<EegFrame>,
    pub malformed: usize,
}

pub fn parse_replay_row(record: &csv::StringRecord) -> Option<EegFrame> {
    if record.len() != N_CHANNELS + 1 {
        return None;
    }
    let mut values = record.iter().map(|s| s.trim().parse::<f64>().ok());
    let timestamp = values.next()??;
    let mut samples = [0.0; N_CHANNELS];
    for slot in samples.iter_mut() {
        *slot = values.next()??;
    }
    let frame = EegFrame::new(timestamp, samples);
    frame.is_finite().then_some(frame)
}

pub fn read_replay_from<R: Read>(reader: R) -> Result<ReplayData> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(reader);
    let mut data = ReplayData::default();
    for record in reader.records() {
        match record.ok().as_ref().and_then(parse_replay_row) {
            Some(frame) => data.frames.push(frame),
            None => data.malformed += 1,
        }
    }
    if data.malformed > 0 {
        tracing::warn!(malformed = data.malformed, "skipped malformed replay rows");
    }
    Ok(data)
}

pub fn read_replay(path: impl AsRef<Path>) -> Result<ReplayData> {
    read_replay_from(std::fs::File::open(path)?)
}

pub fn write_replay_to<W: Write>(writer: W, frames: &[EegFrame]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(writer);
    writer.write_record(replay_header())?;
    let mut row = Vec::with_capacity(N_CHANNELS + 1);
    for frame in frames {
        row.clear();
        row.push(frame.timestamp.to_string());
        row.extend(frame.samples.iter().map(f64::to_string));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_replay(path: impl AsRef<Path>, frames: &[EegFrame]) -> Result<()> {
    write_replay_to(std::io::BufWriter::new(std::fs::File::create(path)?), frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let frames: Vec<EegFrame> = (0..5)
            .map(|i| EegFrame::new(i as f64 / 250.0, std::array::from_fn(|c| (c as f64).sqrt() * 0.1 + i as f64)))
            .collect();
        let mut buf = Vec::new();
        write_replay_to(&mut buf, &frames).unwrap();
        let back = read_replay_from(buf.as_slice()).unwrap();
        assert_eq!(back.frames, frames);
        assert_eq!(back.malformed, 0);
    }

    #[test]
    fn malformed_rows_counted() {
        let mut text = replay_header().join(",") + "\n";
        text += &format!("0.0,{}\n", vec!["1.0"; 32].join(","));
        text += &format!("0.004,{}\n", vec!["1.0"; 31].join(","));
        text += &format!("0.008,{},abc\n", vec!["1.0"; 31].join(","));
        text += &format!("0.012,{}\n", vec!["NaN"; 32].join(","));
        let data = read_replay_from(text.as_bytes()).unwrap();
        assert_eq!(data.frames.len(), 1);
        assert_eq!(data.malformed, 3);
    }

    #[test]
    fn empty_file_is_empty() {
        let data = read_replay_from("".as_bytes()).unwrap();
        assert!(data.frames.is_empty());
    }
}
