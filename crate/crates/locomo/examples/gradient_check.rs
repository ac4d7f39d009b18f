//! Central finite-difference check of every network layout at full width, in
//! 64-bit arithmetic.
//!
//! `cargo run --release --example gradient_check`

use locomo::amp::disc_loss;
use locomo::nets::gradcheck::check_parameters;
use locomo::nets::{Lstm, LstmState, Mlp, MlpSpec, NetworkTable, ParamSet};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

fn mlp(name: &str, spec: MlpSpec, rng: &mut ChaCha8Rng) {
    let net = Mlp::<f64>::new(spec, 1.0, rng).unwrap();
    let x = randn(4, net.spec().input_dim, rng);
    let w = randn(4, net.spec().output_dim, rng);
    let (_, cache) = net.forward(x.view()).unwrap();
    let (grads, _) = net.backward(&cache, w.view()).unwrap();
    let rep = check_parameters(&net, &grads, |n: &Mlp<f64>| (n.predict(x.view()).unwrap() * &w).sum(), 1e-5, 30, rng);
    println!("{name:<16} {:<28} {:>5} entries  max rel error {:.2e}", net.spec().describe(), rep.checked, rep.max_rel_error);
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let t = NetworkTable::paper();
    mlp("stage1 actor", t.stage1_actor(65, 18), &mut rng);
    mlp("stage1 critic", t.stage1_critic(65), &mut rng);
    mlp("low-level", t.stage2_low_level(60, 18), &mut rng);
    mlp("stage2 critic", t.stage2_critic(289), &mut rng);
    mlp("g_p", t.privileged_encoder(42), &mut rng);
    mlp("g_e", t.terrain_encoder(), &mut rng);
    mlp("g_m", t.memory_head(), &mut rng);

    let lstm = Lstm::<f64>::new(t.memory(60), &mut rng).unwrap();
    let xs: Vec<_> = (0..5).map(|_| randn(2, 60, &mut rng)).collect();
    let ws: Vec<_> = (0..5).map(|_| randn(2, lstm.spec().output_dim(), &mut rng)).collect();
    let resets = vec![vec![false; 2]; 5];
    let init = LstmState::zeros(lstm.spec(), 2);
    let (_, _, cache) = lstm.forward_sequence(&xs, &init, &resets).unwrap();
    let mut grads = lstm.zeros_like();
    lstm.backward_sequence(&cache, &ws, &mut grads).unwrap();
    let loss = |n: &Lstm<f64>| n.forward_sequence(&xs, &init, &resets).unwrap().0.iter().zip(&ws).map(|(o, w)| (o * w).sum()).sum::<f64>();
    let rep = check_parameters(&lstm, &grads, loss, 1e-5, 30, &mut rng);
    println!("{:<16} {:<28} {:>5} entries  max rel error {:.2e}", "memory", lstm.spec().describe(), rep.checked, rep.max_rel_error);

    let disc = Mlp::<f64>::new(t.discriminator(42), 1.0, &mut rng).unwrap();
    let (real, fake) = (randn(8, 84, &mut rng), randn(8, 84, &mut rng));
    let (_, g) = disc_loss(&disc, real.view(), fake.view(), 10.0).unwrap();
    let rep = check_parameters(&disc, &g, |n: &Mlp<f64>| disc_loss(n, real.view(), fake.view(), 10.0).unwrap().0.total, 1e-5, 30, &mut rng);
    println!("{:<16} {:<28} {:>5} entries  max rel error {:.2e}", "discriminator", disc.spec().describe(), rep.checked, rep.max_rel_error);
}
