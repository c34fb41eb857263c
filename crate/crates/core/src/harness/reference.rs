//! Published distortion values used as comparison lines.
//!
//! These are analytical reference values, not computed by this crate.

use serde::Serialize;

pub const REFERENCE_TABLE_VERSION: u32 = 1;
pub const REFERENCE_LABEL: &str = "analytical reference, not computed";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceEntry {
    pub alpha: f64,
    pub rho: f64,
    pub sigma_xi2: f64,
    pub sigma_x2: f64,
    /// l1-relaxed solution inserted into the distortion.
    pub eps_l1: f64,
    /// Least-squares refit on the l1 support.
    pub eps_l1_ls: f64,
    /// Minimum achievable distortion.
    pub eps_limit: f64,
}

pub const ANALYTICAL_REFERENCES: &[ReferenceEntry] = &[ReferenceEntry {
    alpha: 0.5,
    rho: 0.2,
    sigma_xi2: 1.0,
    sigma_x2: 0.0,
    eps_l1: 0.214,
    eps_l1_ls: 0.0966,
    eps_limit: 0.00919,
}];

pub fn lookup(alpha: f64, rho: f64, sigma_xi2: f64, sigma_x2: f64) -> Option<&'static ReferenceEntry> {
    const TOL: f64 = 1e-12;
    ANALYTICAL_REFERENCES.iter().find(|e| {
        (e.alpha - alpha).abs() < TOL
            && (e.rho - rho).abs() < TOL
            && (e.sigma_xi2 - sigma_xi2).abs() < TOL
            && (e.sigma_x2 - sigma_x2).abs() < TOL
    })
}
