//! Distills a teacher whose latent is a linear function of the last three
//! observations into an LSTM student that only sees the current one.

use locomo::distill::{distill_update, init_student_from_teacher, DaggerCollector, DistillConfig, SyntheticSystem};
use locomo::nets::{Adam, NetworkTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> locomo::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().unwrap()).collect();
    let updates = args.first().copied().unwrap_or(400);
    let hidden = args.get(1).copied().unwrap_or(64);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sys = SyntheticSystem::new(32, 4, 200, 7);
    let teacher = sys.teacher::<f32, _>(&[32], &mut rng)?;
    let table = NetworkTable { memory: vec![hidden], memory_head: vec![hidden], ..NetworkTable::paper() };
    let mut student = init_student_from_teacher(&teacher, &table, &mut rng)?;
    let cfg = DistillConfig::default();
    let mut adam = Adam::new(&student, cfg.learning_rate);
    let mut dagger = DaggerCollector::new(&student, 32);
    let start = std::time::Instant::now();
    for it in 0..updates {
        let batch = dagger.collect(&student, &teacher, &mut sys, cfg.window)?;
        if let Some(loss) = distill_update(&mut student, &mut adam, &batch, &cfg)? {
            if it % 50 == 0 || it + 1 == updates {
                println!("{it:5} {:6.1}s imitation {:.2e} reconstruction {:.2e}", start.elapsed().as_secs_f64(), loss.imitation, loss.reconstruction);
            }
        }
    }
    Ok(())
}
