use alloc::string::String;
use alloc::vec::Vec;

use super::FeedbackSample;

#[derive(Debug, thiserror::Error)]
pub enum FeedbackError {
    #[error("feedback sample at episode {episode} step {step} is not a disagreement")]
    NotADisagreement { episode: u64, step: u32 },
    #[error("feedback sink failed: {0}")]
    Sink(String),
}

/// Destination for completed (return back-filled) feedback samples.
pub trait FeedbackSink {
    fn emit(&mut self, sample: &FeedbackSample) -> Result<(), FeedbackError>;
}

impl FeedbackSink for Vec<FeedbackSample> {
    fn emit(&mut self, sample: &FeedbackSample) -> Result<(), FeedbackError> {
        self.push(sample.clone());
        Ok(())
    }
}

impl<S: FeedbackSink + ?Sized> FeedbackSink for &mut S {
    fn emit(&mut self, sample: &FeedbackSample) -> Result<(), FeedbackError> {
        (**self).emit(sample)
    }
}

/// Appends a mismatch sample to the sink; agreeing pairs are refused.
pub fn emit_feedback<S: FeedbackSink + ?Sized>(sample: &FeedbackSample, sink: &mut S) -> Result<(), FeedbackError> {
    if sample.executed == sample.recommended {
        return Err(FeedbackError::NotADisagreement { episode: sample.episode, step: sample.step });
    }
    sink.emit(sample)
}
