//! Seeded instance generation and verification campaigns.

mod campaign;
mod generate;
mod rng;

pub use campaign::{
    run_campaign, run_instance, CampaignConfig, CampaignResult, FailureRecord, IdentityStats, IDENTITY_IDS,
};
pub use generate::{
    canonical_n1_frame, canonical_n1_frame_with, free_points, generate_case, permute_labels, random_angles,
    random_frame, random_frame_with, CaseInstance, DimLimits,
};
pub use rng::{fnv1a, instance_rng, instance_seed, splitmix64};
