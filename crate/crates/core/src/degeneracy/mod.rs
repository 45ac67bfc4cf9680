//! Condition-number degeneracy factors and their online outlier sensing.

mod dbscan;
mod eigen;
mod eps;
mod sensing;

pub use dbscan::{dbscan, DbscanLabeling, DbscanParams, PointLabel};
pub use eigen::{eig3_sym, eig3_sym_vectors, SymmetricEigen3};
pub use eps::{
    determine_eps, determine_eps_with, eps_from_k_distances, k_distance_list, Point2, DEFAULT_EPS_FLOOR,
    DEFAULT_EPS_GAP,
};
pub use sensing::{Channel, DegeneracySensor, FactorWindow, SensingOptions, SensingResult};

use crate::error::Result;
use crate::geometry::Mat3;
use crate::registration::HessianBlocks;

/// Smallest eigenvalue floor, relative to the largest, used when forming
/// the condition number.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegeneracyFactor {
    pub frame_index: u64,
    pub timestamp: f64,
    pub s_rot: f64,
    pub s_trans: f64,
    /// Set when a block was identically zero and its factor defaulted to 1.
    pub no_constraints: bool,
}

impl DegeneracyFactor {
    pub fn at(self, frame_index: u64, timestamp: f64) -> Self {
        Self {
            frame_index,
            timestamp,
            ..self
        }
    }
}

/// `λ1 / max(λ3, rel_floor·λ1)`, or `None` for a block without positive
/// curvature.
pub fn condition_number(m: &Mat3, rel_floor: f64) -> Result<Option<f64>> {
    let [l1, _, l3] = eig3_sym(m)?;
    if !(l1 > 0.0) {
        return Ok(None);
    }
    Ok(Some((l1 / l3.max(rel_floor * l1)).max(1.0)))
}

pub fn degeneracy_factors(blocks: &HessianBlocks, rel_floor: f64) -> Result<DegeneracyFactor> {
    let rot = condition_number(&blocks.h_rr, rel_floor)?;
    let trans = condition_number(&blocks.h_tt, rel_floor)?;
    Ok(DegeneracyFactor {
        frame_index: 0,
        timestamp: 0.0,
        s_rot: rot.unwrap_or(1.0),
        s_trans: trans.unwrap_or(1.0),
        no_constraints: rot.is_none() || trans.is_none(),
    })
}
