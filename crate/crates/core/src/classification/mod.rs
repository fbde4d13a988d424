//! Detection and mitigation are interchangeable for classification. This
//! module holds both reductions and a small lookup task to run them on.

pub mod bridge;
pub mod toy;

pub use bridge::{dbd_to_dbm, dbm_to_dbd, DetectorAsMitigator, MitigatorAsDetector};
pub use toy::{
    toy_detect, toy_train, GuessingMitigator, OutsiderAttack, ToyClassificationInstance, ToyConfig, ToyDetector,
    ToyModel, ToyPrivate, ToyTrainer, DEFAULT_LABEL,
};
