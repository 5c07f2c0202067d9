//! Executable counterparts of the equivalent characterizations of forward
//! completeness: exhaustion-based detection, maximum principles, the sharp
//! θ-Liouville witness, capacity candidates and Ekeland points.

mod capacity;
mod ekeland;
mod exhaustion;
mod maximum;
mod report;
mod theta;

pub use capacity::{candidate, candidate_search, capacity, slope_sup, CandidateSearch, CapacityEstimate, CapacityRow};
pub use ekeland::{ekeland_point, verify_ekeland, Certificate, EkelandPoint};
pub use exhaustion::{
    detect_completeness, CompletenessConfig, CompletenessReport, ExhaustionFamily, Truncation, Verdict,
};
pub use maximum::{eikonal_wmp_check, local_lipschitz_check, wmp_check, LocalLipReport, WmpReport};
pub use report::{number, Report, Row};
pub use theta::{
    theta_liouville_check, theta_refinement, theta_scheme, theta_witness, RefinementStudy, EXACT_FLOOR, ThetaCase,
    ThetaReport,
};
