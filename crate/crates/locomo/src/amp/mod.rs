//! Experience datasets, the transition discriminator and the style reward.

pub mod dataset;
pub mod discriminator;
pub mod record;

pub use dataset::{amp_labels, ExperienceDataset};
pub use discriminator::{disc_loss, lsgan_loss, style_reward, DiscLoss, DiscStats, Discriminator, DiscriminatorConfig};
pub use record::{basic_script, record_experience, CommandSegment, SEGMENT_SECONDS};
