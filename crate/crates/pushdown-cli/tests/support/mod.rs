//! Instance generators shared by the acceptance checks.

pub mod implicants;
pub mod micro;
