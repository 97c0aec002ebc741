//! Reference computations that do not share code paths with the estimators
//! they check: finite differences for the reverse pass, and closed-form or
//! quadrature values for the learning-coefficient sampler on toy models.

pub mod fixtures;
pub mod gradcheck;
pub mod posterior;
pub mod suite;
pub mod toys;
