//! Single-population baselines: standard tree GP and M3GP.

pub mod gp;
pub mod m3gp;
pub mod mahalanobis;
