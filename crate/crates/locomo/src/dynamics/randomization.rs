use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-episode physical parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRandomization {
    pub link_mass_scale: f64,
    pub payload_mass: f64,
    pub payload_offset: [f64; 3],
    pub ground_friction: f64,
    pub motor_strength_scale: f64,
    pub kp_scale: f64,
    pub kd_scale: f64,
    pub joint_position_scale: f64,
}

impl Default for DynamicsRandomization {
    fn default() -> Self {
        Self {
            link_mass_scale: 1.0,
            payload_mass: 0.0,
            payload_offset: [0.0; 3],
            ground_friction: 1.0,
            motor_strength_scale: 1.0,
            kp_scale: 1.0,
            kd_scale: 1.0,
            joint_position_scale: 1.0,
        }
    }
}

/// Inclusive sampling range for each randomized parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomizationRanges {
    pub link_mass_scale: [f64; 2],
    pub payload_mass: [f64; 2],
    pub payload_offset: [f64; 2],
    pub ground_friction: [f64; 2],
    pub motor_strength_scale: [f64; 2],
    pub kp_scale: [f64; 2],
    pub kd_scale: [f64; 2],
    pub joint_position_scale: [f64; 2],
}

impl Default for RandomizationRanges {
    fn default() -> Self {
        Self::training()
    }
}

impl RandomizationRanges {
    pub fn training() -> Self {
        Self {
            link_mass_scale: [0.8, 1.2],
            payload_mass: [0.0, 5.0],
            payload_offset: [-0.1, 0.1],
            ground_friction: [0.05, 2.75],
            motor_strength_scale: [0.8, 1.2],
            kp_scale: [0.8, 1.2],
            kd_scale: [0.8, 1.2],
            joint_position_scale: [0.5, 1.5],
        }
    }

    /// Every range collapsed onto the nominal value.
    pub fn nominal() -> Self {
        let n = DynamicsRandomization::default();
        Self {
            link_mass_scale: [n.link_mass_scale; 2],
            payload_mass: [n.payload_mass; 2],
            payload_offset: [0.0; 2],
            ground_friction: [n.ground_friction; 2],
            motor_strength_scale: [1.0; 2],
            kp_scale: [1.0; 2],
            kd_scale: [1.0; 2],
            joint_position_scale: [1.0; 2],
        }
    }

    fn all(&self) -> [(&'static str, [f64; 2]); 8] {
        [
            ("link_mass_scale", self.link_mass_scale),
            ("payload_mass", self.payload_mass),
            ("payload_offset", self.payload_offset),
            ("ground_friction", self.ground_friction),
            ("motor_strength_scale", self.motor_strength_scale),
            ("kp_scale", self.kp_scale),
            ("kd_scale", self.kd_scale),
            ("joint_position_scale", self.joint_position_scale),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in self.all() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("randomization range {name} = [{lo}, {hi}]")));
            }
        }
        if self.ground_friction[0] < 0.0 || self.payload_mass[0] < 0.0 || self.link_mass_scale[0] <= 0.0 {
            return Err(Error::InvalidArgument("friction, payload and mass scale must be non-negative".into()));
        }
        Ok(())
    }

    pub fn contains(&self, r: &DynamicsRandomization) -> bool {
        let inside = |v: f64, [lo, hi]: [f64; 2]| v >= lo && v <= hi;
        inside(r.link_mass_scale, self.link_mass_scale)
            && inside(r.payload_mass, self.payload_mass)
            && r.payload_offset.iter().all(|&v| inside(v, self.payload_offset))
            && inside(r.ground_friction, self.ground_friction)
            && inside(r.motor_strength_scale, self.motor_strength_scale)
            && inside(r.kp_scale, self.kp_scale)
            && inside(r.kd_scale, self.kd_scale)
            && inside(r.joint_position_scale, self.joint_position_scale)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DynamicsRandomization {
        let mut u = |[lo, hi]: [f64; 2]| if lo == hi { lo } else { rng.random_range(lo..=hi) };
        DynamicsRandomization {
            link_mass_scale: u(self.link_mass_scale),
            payload_mass: u(self.payload_mass),
            payload_offset: [u(self.payload_offset), u(self.payload_offset), u(self.payload_offset)],
            ground_friction: u(self.ground_friction),
            motor_strength_scale: u(self.motor_strength_scale),
            kp_scale: u(self.kp_scale),
            kd_scale: u(self.kd_scale),
            joint_position_scale: u(self.joint_position_scale),
        }
    }
}

/// Draws every parameter uniformly from the training ranges.
pub fn sample_randomization<R: Rng + ?Sized>(rng: &mut R) -> DynamicsRandomization {
    RandomizationRanges::training().sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_in_range_and_payload_mean_is_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ranges = RandomizationRanges::training();
        let mut payload = 0.0;
        for _ in 0..10_000 {
            let r = sample_randomization(&mut rng);
            assert!(ranges.contains(&r));
            assert!((0.05..=2.75).contains(&r.ground_friction));
            payload += r.payload_mass;
        }
        assert!((payload / 10_000.0 - 2.5).abs() < 0.1);
    }

    #[test]
    fn collapsed_ranges_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(RandomizationRanges::nominal().sample(&mut rng), DynamicsRandomization::default());
    }

    #[test]
    fn inverted_range_rejected() {
        let mut r = RandomizationRanges::training();
        r.kp_scale = [1.2, 0.8];
        assert!(r.validate().is_err());
    }
}
