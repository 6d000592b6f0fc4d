//! Training procedures: CEM and REINFORCE tool builders, the mask selector,
//! success detectors, and the grasp/manipulation policies.

pub mod arch;
pub mod builder;
pub mod cem;
pub mod convnet;
pub mod dataset;
pub mod detector;
pub mod envs;
pub mod persist;
pub mod policy;
pub mod probe_control;
pub mod reinforce;
pub mod selector;
pub mod train;

pub use arch::Role;
pub use builder::{
    search_tool_sequence, BuildPgEnv, BuilderArtifact, ToolSearchConfig, ToolSearchOutcome,
};
pub use cem::{cem_optimize, CemConfig, CemOutcome};
pub use dataset::{gen_selector_dataset, SelectorDataset, SelectorSample};
pub use detector::{train_detector, DetectorKind, DetectorModel};
pub use envs::{GraspEnv, ManipEnv};
pub use policy::{HeadLayout, PolicyNet, RawSample};
pub use reinforce::{reinforce_train, EpisodeTrace, PgEnv, ReinforceConfig};
pub use selector::{train_selector, SelectorModel, SelectorTrainConfig};
pub use train::{train_grasp_policy, train_manip_policy, GraspTrainConfig, ManipTrainConfig};
