//! The `analyze` JSON report for one weight.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::grid::{enumerate_cubes, CubePolicy, DyadicCube, WeightGrid};
use crate::indices::{acks_index, family_index, IndexEstimate, IndexFamily};
use crate::weights::*;

/// Levels removed when probing whether a constant grows with resolution.
pub const GROWTH_COARSENING: u32 = 4;

#[derive(Clone, Debug)]
pub struct AnalyzeConfig {
    pub ps: Vec<f64>,
    pub qs: Vec<f64>,
    pub policy: CubePolicy,
    pub index: IndexConfig,
    pub radius: Option<f64>,
}

#[derive(Serialize)]
pub struct GridInfo {
    pub d: u8,
    #[serde(rename = "L")]
    pub level: u32,
}

#[derive(Serialize)]
pub struct Indices {
    pub family: IndexEstimate,
    pub acks: IndexEstimate,
    pub cap: f64,
    pub gamma: Vec<f64>,
}

#[derive(Serialize)]
pub struct Classifications {
    /// keyed by `p`: index above `1/p′`
    pub rh_p: BTreeMap<String, bool>,
    pub a_inf: bool,
    /// keyed by `p`: constant grew by 5% or more against the grid coarsened by four levels
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub rh_p_growing: BTreeMap<String, bool>,
}

#[derive(Serialize)]
pub struct TheoremEntry {
    pub id: String,
    pub pass: bool,
    pub details: Vec<CaseOutcome>,
}

#[derive(Serialize)]
pub struct Report {
    pub schema: u32,
    pub weight: String,
    pub grid: GridInfo,
    pub cube_policy: String,
    pub constants: Vec<ClassConstant>,
    pub indices: Indices,
    pub classifications: Classifications,
    pub theorems: Vec<TheoremEntry>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.theorems.iter().all(|t| t.pass)
    }
}

pub fn analyze(w: &WeightGrid, cfg: &AnalyzeConfig) -> Result<Report> {
    let fam = enumerate_cubes(w, &cfg.policy)?;
    let mut constants = Vec::new();
    for &p in &cfg.ps {
        constants.push(rh_p_constant(w, p, &fam)?);
    }
    for &p in &cfg.ps {
        constants.push(a_p_constant(w, p, &fam)?);
    }
    constants.push(a_p_constant(w, 1.0, &fam)?);
    constants.push(rh_llogl_constant(w, &fam)?);
    for &p in &cfg.ps {
        for &q in &cfg.qs {
            constants.push(rh_lorentz_constant(w, p, q, &fam)?);
        }
    }
    constants.push(fujii_constant(w, &fam)?);

    let ix = &cfg.index;
    let family = family_index(&IndexFamily::k_curves(w, &fam)?, 0.0, 1.0, ix.cap, &ix.gammas)?;
    let acks = acks_index(w, &fam, ix.cap, &ix.gammas)?;

    let key = |p: f64| format!("{p}");
    let mut rh_p = BTreeMap::new();
    let mut rh_p_growing = BTreeMap::new();
    let coarse = if w.level() > GROWTH_COARSENING { Some(w.coarsen(GROWTH_COARSENING)?) } else { None };
    for &p in &cfg.ps {
        rh_p.insert(key(p), family.delta_hat > 1.0 - 1.0 / p);
        if let Some(c) = &coarse {
            let cf = enumerate_cubes(c, &CubePolicy::AllDyadic)?;
            let fine = rh_p_constant(w, p, &enumerate_cubes(w, &CubePolicy::AllDyadic)?)?.value;
            rh_p_growing.insert(key(p), !stable_drift(&[rh_p_constant(c, p, &cf)?.value, fine], 0.05));
        }
    }
    let classifications = Classifications { rh_p, a_inf: family.delta_hat > ix.margin, rh_p_growing };

    let radius = cfg.radius.unwrap_or(if w.dim() == 1 { 8.0 } else { 32.0 });
    let mut reports = Vec::new();
    for &p in &cfg.ps {
        reports.push(verify_rhp_equivalence(w, p, &fam, radius)?);
    }
    reports.push(verify_llogl_equivalence(w, &fam, radius)?);
    reports.push(verify_fujii(w, &fam, 4.0)?);
    reports.push(verify_extrapolation_bound(w, &DyadicCube::base(w.dim()), 4.0)?);
    let theorems = reports.into_iter().map(|r| TheoremEntry { id: r.id, pass: r.pass, details: r.cases }).collect();

    Ok(Report {
        schema: 1,
        weight: w.label().to_string(),
        grid: GridInfo { d: w.dim(), level: w.level() },
        cube_policy: fam.policy.to_string(),
        constants,
        indices: Indices { family, acks, cap: ix.cap, gamma: ix.gammas.clone() },
        classifications,
        theorems,
    })
}
