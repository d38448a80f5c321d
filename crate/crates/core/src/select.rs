//! Checkpoint selection from a transfer-score series.
//!
//! The saturation level at position `m` is the coefficient of variation
//! (population standard deviation over mean) of the trailing window of
//! `tau` scores ending at `m`. Scanning forward, the first window whose
//! saturation level is strictly below `zeta` triggers selection of its
//! highest-scoring epoch. If no window saturates, the best epoch of the final
//! window is returned instead.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectError {
    #[error("series is empty")]
    EmptySeries,
    #[error("{epochs} epochs but {scores} scores")]
    LengthMismatch { epochs: usize, scores: usize },
    #[error("epoch indices must be strictly increasing: {next} follows {previous}")]
    NonIncreasingEpochs { previous: u64, next: u64 },
    #[error("non-finite score {value} at position {position}")]
    NonFiniteScore { position: usize, value: f64 },
    #[error("window size tau must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("threshold zeta must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("series of length {len} is shorter than the window tau = {tau}")]
    SeriesTooShort { len: usize, tau: usize },
    #[error("window of size {tau} ending at position {position} is out of range for a series of length {len}")]
    WindowOutOfRange { position: usize, tau: usize, len: usize },
    #[error("window ending at position {position} has zero mean; saturation level undefined")]
    ZeroMean { position: usize },
    #[error("window ending at position {position} has negative mean {mean}; saturation level undefined")]
    NegativeMean { position: usize, mean: f64 },
}

/// Transfer scores indexed by epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    epochs: Vec<u64>,
    scores: Vec<f64>,
}

impl ScoreSeries {
    pub fn new(epochs: Vec<u64>, scores: Vec<f64>) -> Result<Self, SelectError> {
        if epochs.len() != scores.len() {
            return Err(SelectError::LengthMismatch { epochs: epochs.len(), scores: scores.len() });
        }
        if epochs.is_empty() {
            return Err(SelectError::EmptySeries);
        }
        if let Some(w) = epochs.windows(2).find(|w| w[1] <= w[0]) {
            return Err(SelectError::NonIncreasingEpochs { previous: w[0], next: w[1] });
        }
        if let Some((position, &value)) = scores.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SelectError::NonFiniteScore { position, value });
        }
        Ok(Self { epochs, scores })
    }

    /// Series over epochs `0..scores.len()`.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self, SelectError> {
        Self::new((0..scores.len() as u64).collect(), scores)
    }

    pub fn epochs(&self) -> &[u64] {
        &self.epochs
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub tau: usize,
    pub zeta: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { tau: 3, zeta: 0.01 }
    }
}

impl SelectionConfig {
    pub fn new(tau: usize, zeta: f64) -> Result<Self, SelectError> {
        let cfg = Self { tau, zeta };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), SelectError> {
        if self.tau < 2 {
            return Err(SelectError::WindowTooSmall(self.tau));
        }
        if self.zeta <= 0.0 || self.zeta.is_nan() {
            return Err(SelectError::NonPositiveThreshold(self.zeta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected_epoch: u64,
    /// Position of the selected epoch within the series.
    pub selected_position: usize,
    /// Saturation level per position; `None` for the first `tau - 1`.
    pub saturation_trace: Vec<Option<f64>>,
    pub saturated: bool,
    /// Position where the triggering (or final) window starts.
    pub window_start: usize,
}

/// Coefficient of variation of `scores[position + 1 - tau ..= position]`,
/// using the population standard deviation.
pub fn saturation_level(series: &ScoreSeries, position: usize, tau: usize) -> Result<f64, SelectError> {
    if tau < 2 {
        return Err(SelectError::WindowTooSmall(tau));
    }
    let len = series.len();
    if position >= len || position + 1 < tau {
        return Err(SelectError::WindowOutOfRange { position, tau, len });
    }
    let window = &series.scores[position + 1 - tau..=position];
    let n = tau as f64;
    let mean = window.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(SelectError::ZeroMean { position });
    }
    if mean < 0.0 {
        return Err(SelectError::NegativeMean { position, mean });
    }
    let variance = window.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(variance.sqrt() / mean)
}

/// Earliest position holding the maximum score in `start..=end`.
fn best_in_window(scores: &[f64], start: usize, end: usize) -> usize {
    (start..=end).fold(start, |best, i| if scores[i] > scores[best] { i } else { best })
}

pub fn select_checkpoint(series: &ScoreSeries, config: &SelectionConfig) -> Result<SelectionResult, SelectError> {
    config.validate()?;
    let tau = config.tau;
    let len = series.len();
    if len < tau {
        return Err(SelectError::SeriesTooShort { len, tau });
    }
    let mut trace = vec![None; len];
    let mut trigger = None;
    for position in tau - 1..len {
        let s = saturation_level(series, position, tau)?;
        trace[position] = Some(s);
        if trigger.is_none() && s < config.zeta {
            trigger = Some(position);
        }
    }
    let (end, saturated) = match trigger {
        Some(p) => (p, true),
        None => (len - 1, false),
    };
    let window_start = end + 1 - tau;
    let selected_position = best_in_window(&series.scores, window_start, end);
    Ok(SelectionResult {
        selected_epoch: series.epochs[selected_position],
        selected_position,
        saturation_trace: trace,
        saturated,
        window_start,
    })
}
