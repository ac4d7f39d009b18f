//! Teacher-student distillation with DAgger over a recurrent student.

pub mod dagger;
pub mod student;
pub mod synthetic;
pub mod teacher;

pub use dagger::{distill_loss_and_grad, distill_update, DaggerCollector, DistillBatch, DistillConfig, DistillEnv, DistillLoss};
pub use student::{init_student_from_teacher, StudentPolicy};
pub use synthetic::SyntheticSystem;
pub use teacher::{TeacherActor, TeacherCache};
