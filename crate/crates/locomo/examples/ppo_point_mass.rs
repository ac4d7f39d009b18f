//! PPO on a 2-d point mass that must track a random target velocity.
//!
//! `cargo run --release --example ppo_point_mass -- [iterations]`

use locomo::nets::{Activation, Adam, Mlp, MlpSpec};
use locomo::ppo::{ppo_iteration, ActorCritic, NoStyle, PointMassEnv, PpoConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> locomo::Result<()> {
    let iterations: usize = std::env::args().nth(1).map(|s| s.parse().expect("iterations")).unwrap_or(60);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let actor = Mlp::<f64>::new(MlpSpec::new(4, &[32, 32], 2, Activation::Identity), 0.01, &mut rng)?;
    let critic = Mlp::<f64>::new(MlpSpec::new(4, &[32, 32], 1, Activation::Identity), 1.0, &mut rng)?;
    let mut policy = ActorCritic::new(actor, critic)?;
    let mut adam = Adam::new(&policy, 3e-3);
    let cfg = PpoConfig { num_envs: 16, steps_per_iteration: 32, gamma: 0.9, ..PpoConfig::default() };
    let mut env = PointMassEnv::new(16, 32, 1);
    for it in 0..iterations {
        let (roll, stats) = ppo_iteration(&mut policy, &mut adam, &mut env, &mut NoStyle, &cfg, &mut rng)?;
        if it % 10 == 0 || it + 1 == iterations {
            let r = roll.buffer.rewards.iter().sum::<f64>() / roll.buffer.len() as f64;
            println!("iter {it:3}  mean reward {r:+.4}  kl {:.4}  lr {:.1e}", stats.loss.approx_kl, stats.learning_rate);
        }
    }
    Ok(())
}
