//! Floating-base simulator with massless PD-driven legs and penalty contact
//! against a heightfield.

mod model;
mod randomization;
mod sim;
mod state;
mod trajectory;

pub use model::RobotModel;
pub use randomization::{sample_randomization, DynamicsRandomization, RandomizationRanges};
pub use sim::{contact_force, count_collisions, pd_torque, projected_gravity, step, FlatGround, FootContact, Heightfield, SimConfig};
pub use state::RobotState;
pub use trajectory::{trajectory_csv, trajectory_header, trajectory_row, write_trajectory_csv};
