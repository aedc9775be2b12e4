use std::path::PathBuf;

use crate::geometry::Timestamp;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub timestamp: Timestamp,
    /// Image file, when the sequence is backed by files on disk.
    pub image: Option<PathBuf>,
}

/// Timestamped camera frames at a nominal rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<FrameRecord>,
    rate_hz: f64,
}

impl FrameSequence {
    /// Fails with the index of the first timestamp that does not increase.
    pub fn new(frames: Vec<FrameRecord>, rate_hz: f64) -> Result<Self, usize> {
        if let Some(i) = (1..frames.len()).find(|&i| frames[i].timestamp <= frames[i - 1].timestamp) {
            return Err(i);
        }
        Ok(FrameSequence { frames, rate_hz })
    }

    /// Frames at exact multiples of `1 / rate_hz` starting at `start`.
    pub fn uniform(start: Timestamp, count: usize, rate_hz: f64) -> Self {
        let period = Timestamp::NANOS_PER_SEC as f64 / rate_hz;
        let frames = (0..count)
            .map(|i| FrameRecord { timestamp: Timestamp(start.0 + (i as f64 * period).round() as i64), image: None })
            .collect();
        FrameSequence { frames, rate_hz }
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn timestamps(&self) -> Vec<Timestamp> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    pub fn get(&self, index: usize) -> Option<&FrameRecord> {
        self.frames.get(index)
    }

    /// Rate estimated from the median frame spacing.
    pub fn estimated_rate_hz(&self) -> Option<f64> {
        let mut gaps: Vec<i64> = self.frames.windows(2).map(|w| w[1].timestamp.0 - w[0].timestamp.0).collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_unstable();
        Some(Timestamp::NANOS_PER_SEC as f64 / gaps[gaps.len() / 2] as f64)
    }

    pub fn with_images(mut self, images: impl IntoIterator<Item = Option<PathBuf>>) -> Self {
        for (frame, image) in self.frames.iter_mut().zip(images) {
            frame.image = image;
        }
        self
    }

    pub(crate) fn subset(&self, indices: &[usize], rate_hz: f64) -> FrameSequence {
        FrameSequence { frames: indices.iter().map(|&i| self.frames[i].clone()).collect(), rate_hz }
    }
}
