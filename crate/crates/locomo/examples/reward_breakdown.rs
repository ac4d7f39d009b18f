//! Steps a small Stage-I batch with random actions and prints the mean raw and
//! scaled value of every reward term.
//!
//! `cargo run --release --example reward_breakdown`

use locomo::dynamics::RobotModel;
use locomo::env::{EnvConfig, LocomotionEnv};
use locomo::ppo::{NoStyle, VectorEnv};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> locomo::Result<()> {
    let mut env = LocomotionEnv::new(EnvConfig::stage1(RobotModel::hexapod(), 16, 3))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let steps = 100;
    let mut sums: Vec<(&'static str, f64, f64)> = Vec::new();
    let mut count = 0.0;
    for _ in 0..steps {
        let a = Array2::from_shape_fn((env.num_envs(), env.action_dim()), |_| rng.random_range(-0.2..0.2));
        let out = env.step(a.view(), &mut NoStyle)?;
        for br in &out.breakdowns {
            let named = br.named();
            if sums.is_empty() {
                sums = named.iter().map(|(n, _, _)| (*n, 0.0, 0.0)).collect();
            }
            for (acc, (_, raw, scaled)) in sums.iter_mut().zip(named) {
                acc.1 += raw;
                acc.2 += scaled;
            }
            count += 1.0;
        }
    }
    println!("{:<32} {:>12} {:>12}", "term", "raw", "scaled");
    for (name, raw, scaled) in &sums {
        println!("{name:<32} {:>12.4e} {:>12.4e}", raw / count, scaled / count);
    }
    println!("{:<32} {:>12} {:>12.4e}", "total", "", sums.iter().map(|s| s.2).sum::<f64>() / count);
    Ok(())
}
