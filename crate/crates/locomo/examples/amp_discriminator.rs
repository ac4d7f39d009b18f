//! Trains the full-size transition discriminator to tell two Gaussian
//! clouds apart and prints scores and style rewards as it learns.
//!
//! `cargo run --release --example amp_discriminator`

use locomo::amp::{style_reward, Discriminator, DiscriminatorConfig};
use locomo::nets::NetworkTable;
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cloud(rows: usize, shift: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, 84), |_| shift + 0.3 * rng.sample::<f64, _>(StandardNormal))
}

fn main() -> locomo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let real = cloud(2048, 0.5, &mut rng);
    let fake = cloud(2048, -0.5, &mut rng);
    let mean = real.mean_axis(Axis(0)).unwrap().to_vec();
    let std = real.std_axis(Axis(0), 0.0).to_vec();
    let mut disc = Discriminator::<f32>::new(NetworkTable::paper().discriminator(42), mean, std, DiscriminatorConfig::default(), &mut rng)?;
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for round in 0..=30 {
        if round % 5 == 0 {
            let sr = disc.scores(real.view())?;
            let sf = disc.scores(fake.view())?;
            let rr: Vec<f64> = sr.iter().map(|d| style_reward(*d)).collect();
            let rf: Vec<f64> = sf.iter().map(|d| style_reward(*d)).collect();
            println!("round {round:2}  D(real) {:+.3}  D(fake) {:+.3}  r^e real {:.3}  r^e fake {:.3}", avg(&sr), avg(&sf), avg(&rr), avg(&rf));
        }
        let stats = disc.train_step(real.view(), fake.view(), &mut rng)?;
        if round % 5 == 4 {
            println!("          loss {:.4}  penalty {:.4}", stats.loss.lsgan, stats.loss.penalty);
        }
    }
    Ok(())
}
