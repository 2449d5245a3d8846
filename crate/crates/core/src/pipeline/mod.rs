//! End-to-end workflows built from the inference, counterfactual and
//! transport operations.

pub mod debug;
pub mod privacy;

pub use debug::{
    backdoor_from_data, backdoor_from_model, backdoor_predict, debug_query, integrate_sandbox, optimize_policy,
    DebugAnswer, DebugQuery, Policy, PolicySpace, Utility,
};
pub use privacy::{pick_shared_context, predict_outcome, ContextChoice, Prediction, StakeholderDisclosure};
