use ndarray::{Array2, ArrayView2};

use crate::error::Result;
use crate::rewards::RewardBreakdown;
use crate::terrain::TerrainType;

/// Converts a batch of concatenated `(s_t, s_{t+1})` transitions into style
/// rewards in [0, 1], one per row.
pub trait StyleScorer {
    fn score(&mut self, transitions: ArrayView2<f64>) -> Result<Vec<f64>>;
}

/// Scorer for reward sets without a style term; never called.
pub struct NoStyle;

impl StyleScorer for NoStyle {
    fn score(&mut self, transitions: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(vec![0.0; transitions.nrows()])
    }
}

/// Statistics of one finished episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub env: usize,
    pub length: usize,
    pub episode_return: f64,
    /// Mean raw linear-velocity tracking term over the episode.
    pub tracking_fraction: f64,
    /// Fraction of steps whose foot contacts agreed with the schedule.
    pub gait_adherence: f64,
    /// True for failure terminations, false for time limits.
    pub terminated: bool,
    pub terrain: Option<(TerrainType, u8)>,
}

/// Result of stepping every environment once.
#[derive(Clone, Debug, Default)]
pub struct StepOutput {
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Per-env reward terms; empty for environments without a reward table.
    pub breakdowns: Vec<RewardBreakdown>,
    /// Concatenated `(s_t, s_{t+1})` motion states, one row per env.
    pub amp_transitions: Option<Array2<f64>>,
    pub finished: Vec<EpisodeSummary>,
    /// Environments reset because the simulation produced non-finite values.
    pub non_finite_resets: usize,
}

/// A batch of environments stepped in lockstep.
pub trait VectorEnv {
    fn num_envs(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Current observations, one row per env.
    fn observe(&self) -> Array2<f64>;
    fn step(&mut self, actions: ArrayView2<f64>, scorer: &mut dyn StyleScorer) -> Result<StepOutput>;
}
