//! Drops the hexapod from 10 cm above its standing height onto flat ground
//! with zero actions (PD hold at the nominal pose) and writes the trajectory.
//!
//! `cargo run --release --example pd_drop -- [out.csv]`

use locomo::dynamics::{step, write_trajectory_csv, DynamicsRandomization, FlatGround, RobotModel, RobotState, SimConfig};

fn main() -> locomo::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "pd_drop.csv".into());
    let model = RobotModel::hexapod();
    let sim = SimConfig::default();
    let ground = FlatGround { height: 0.0 };
    let mut state = RobotState::standing(&model, 0.0, 0.0, 0.1, 0.0);
    let zeros = vec![0.0; model.action_dim()];
    let mut states = vec![state.clone()];
    for k in 1..=150 {
        state = step(&model, &state, &zeros, &ground, &DynamicsRandomization::default(), &sim)?;
        if k % 25 == 0 {
            let contacts = state.foot_contacts.iter().filter(|c| **c).count();
            let fz: f64 = state.foot_contact_forces.iter().map(|f| f.z).sum();
            println!("t={:.2}s  base z={:.4} m  feet in contact {contacts}  total normal force {fz:.1} N", state.time, state.base_position.z);
        }
        states.push(state.clone());
    }
    println!("standing height {:.4} m, weight {:.1} N", model.nominal_standing_height(), model.base_mass * sim.gravity);
    write_trajectory_csv(out.as_ref(), &model, &states)?;
    println!("wrote {out}");
    Ok(())
}
