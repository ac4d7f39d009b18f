use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ExperienceDataset;
use crate::env::{EnvConfig, LocomotionEnv};
use crate::error::{Error, Result};
use crate::ppo::{NoStyle, VectorEnv};

/// One constant-command stretch of a recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandSegment {
    pub name: String,
    /// `(vx, vy, ωz)`.
    pub command: [f64; 3],
    pub duration: f64,
}

impl CommandSegment {
    fn new(name: &str, command: [f64; 3], duration: f64) -> Self {
        Self { name: name.into(), command, duration }
    }
}

pub const SEGMENT_SECONDS: f64 = 1.6;

/// Forward, backward, both side steps and both turns, 1.6 s each.
pub fn basic_script() -> Vec<CommandSegment> {
    let d = SEGMENT_SECONDS;
    vec![
        CommandSegment::new("forward", [0.5, 0.0, 0.0], d),
        CommandSegment::new("backward", [-0.5, 0.0, 0.0], d),
        CommandSegment::new("step-left", [0.0, 0.3, 0.0], d),
        CommandSegment::new("step-right", [0.0, -0.3, 0.0], d),
        CommandSegment::new("turn-left", [0.0, 0.0, 0.6], d),
        CommandSegment::new("turn-right", [0.0, 0.0, -0.6], d),
    ]
}

/// Drives one flat-ground env through `script` with `controller` (observation
/// rows to action rows) and records the motion state after every control step.
pub fn record_experience<F>(mut cfg: EnvConfig, script: &[CommandSegment], mut controller: F) -> Result<ExperienceDataset>
where
    F: FnMut(ArrayView2<f64>) -> Result<Array2<f64>>,
{
    if script.is_empty() {
        return Err(Error::InvalidArgument("empty command script".into()));
    }
    let dt = cfg.sim.control_dt;
    let counts: Vec<usize> = script.iter().map(|s| (s.duration / dt).round() as usize).collect();
    let total: usize = counts.iter().sum();
    cfg.num_envs = 1;
    cfg.max_episode_steps = cfg.max_episode_steps.max(total + 1);
    let mut env = LocomotionEnv::new(cfg)?;
    let width = env.amp_states().ncols();
    let mut data = Vec::with_capacity(total * width);
    for (seg, &steps) in script.iter().zip(&counts) {
        env.set_command(0, Some(seg.command));
        for step in 0..steps {
            let abort = |reason: String| Error::RecordingAborted { segment: seg.name.clone(), step, reason };
            let actions = controller(env.observe().view()).map_err(|e| abort(e.to_string()))?;
            let out = env.step(actions.view(), &mut NoStyle)?;
            if out.dones[0] {
                let why = match out.finished.first() {
                    Some(e) if e.terminated => "robot fell or collided",
                    _ => "episode ended",
                };
                return Err(abort(why.into()));
            }
            data.extend(env.amp_states().iter());
        }
    }
    let states = Array2::from_shape_vec((total, width), data).expect("recorded width");
    ExperienceDataset::from_f64(states.view(), 1.0 / dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RobotModel;

    #[test]
    fn script_is_six_segments_of_eighty_steps() {
        let s = basic_script();
        assert_eq!(s.len(), 6);
        let total: f64 = s.iter().map(|c| c.duration).sum();
        assert!((total - 9.6).abs() < 1e-12);
    }

    #[test]
    fn standing_controller_records_480_states() {
        let cfg = EnvConfig::stage1(RobotModel::hexapod(), 4, 3);
        let d = record_experience(cfg, &basic_script(), |obs| Ok(Array2::zeros((obs.nrows(), 18)))).unwrap();
        assert_eq!(d.len(), 480);
        assert_eq!(d.width(), 42);
        assert_eq!(d.transition_count(), 479);
        assert_eq!(d.rate(), 50.0);
    }

    #[test]
    fn fall_aborts_with_segment_name() {
        let cfg = EnvConfig::stage1(RobotModel::hexapod(), 1, 3);
        let mut t = 0usize;
        let err = record_experience(cfg, &basic_script(), |obs| {
            t += 1;
            let s = if t > 100 { ((t % 7) as f64 - 3.0) * 10.0 } else { 0.0 };
            Ok(Array2::from_shape_fn((obs.nrows(), 18), |(_, j)| if j % 2 == 0 { s } else { -s }))
        });
        match err {
            Err(Error::RecordingAborted { segment, .. }) => assert_ne!(segment, "forward"),
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
