use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use lanefusion_core::fusion::{FeedbackError, FeedbackSample, FeedbackSink};
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// JSON-lines writer, one compact object per line.
pub struct JsonlSink<W: Write> {
    writer: W,
    lines: u64,
}

impl JsonlSink<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(HarnessError::io(path))?;
        Ok(Self::new(BufWriter::new(file)))
    }
}

impl<W: Write> JsonlSink<W> {
    pub fn new(writer: W) -> Self {
        Self { writer, lines: 0 }
    }

    pub fn lines(&self) -> u64 {
        self.lines
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.writer, value)?;
        self.writer.write_all(b"\n")?;
        self.lines += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.writer.flush()
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> FeedbackSink for JsonlSink<W> {
    fn emit(&mut self, sample: &FeedbackSample) -> Result<(), FeedbackError> {
        self.write(sample).map_err(|e| FeedbackError::Sink(e.to_string()))
    }
}

/// Feedback sink for runs without an advisor; receiving anything is a logic error upstream.
pub struct NoFeedback;

impl FeedbackSink for NoFeedback {
    fn emit(&mut self, sample: &FeedbackSample) -> Result<(), FeedbackError> {
        Err(FeedbackError::Sink(format!(
            "feedback sample for episode {} step {} without an advisor",
            sample.episode, sample.step
        )))
    }
}

pub fn read_jsonl<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(HarnessError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(HarnessError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| HarnessError::format(path, format!("line {}: {e}", i + 1)))?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_feedback_log(path: &Path) -> Result<Vec<FeedbackSample>> {
    read_jsonl(path)
}
