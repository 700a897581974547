//! Weight-class constants and the theorem verifiers.

mod theorems;

pub use theorems::*;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::grid::{integrate, CubeFamily, DyadicCube, Pyramid, WeightGrid};
use crate::indices::argmax;
use crate::kcalc::{llogl_of_step, lorentz_of_step};
use crate::rearrange::{dyadic_maximal, rearrangement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassKind {
    #[serde(rename = "RH_p")]
    RhP,
    #[serde(rename = "A_p")]
    Ap,
    #[serde(rename = "A_1")]
    A1,
    #[serde(rename = "RH_LLogL")]
    RhLlogl,
    #[serde(rename = "RH_Lorentz")]
    RhLorentz,
    #[serde(rename = "Fujii")]
    Fujii,
    #[serde(rename = "RH_p_weighted")]
    RhPWeighted,
}

/// A sup over a cube family together with the cube attaining it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassConstant {
    pub kind: ClassKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub value: f64,
    pub witness: DyadicCube,
    pub cube_policy: String,
}

fn sup_over(
    family: &CubeFamily,
    kind: ClassKind,
    p: Option<f64>,
    q: Option<f64>,
    f: impl Fn(&DyadicCube) -> Result<f64> + Sync,
) -> Result<ClassConstant> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty cube family".into()));
    }
    let vals = family.cubes.par_iter().map(&f).collect::<Result<Vec<f64>>>()?;
    let (i, value) = argmax(&vals);
    Ok(ClassConstant { kind, p, q, value, witness: family.cubes[i], cube_policy: family.policy.to_string() })
}

fn need_p_gt_1(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
    }
    Ok(())
}

/// `sup_Q (avg_Q w^p)^{1/p} / avg_Q w`.
pub fn rh_p_constant(w: &WeightGrid, p: f64, family: &CubeFamily) -> Result<ClassConstant> {
    need_p_gt_1(p)?;
    let pw = Pyramid::new(w);
    let pp = Pyramid::new(&w.powf(p)?);
    sup_over(family, ClassKind::RhP, Some(p), None, |q| {
        w.check_cube(q)?;
        Ok(pp.mean(q).powf(1.0 / p) / pw.mean(q))
    })
}

/// `p > 1`: `sup_Q avg_Q w · (avg_Q w^{−1/(p−1)})^{p−1}`; `p = 1`: `max (M_d w)/w` over cells
/// of the base cube (the family is not used).
pub fn a_p_constant(w: &WeightGrid, p: f64, family: &CubeFamily) -> Result<ClassConstant> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} < 1")));
    }
    if p == 1.0 {
        let base = DyadicCube::base(w.dim());
        let m = dyadic_maximal(w, &base)?;
        let ratios: Vec<f64> = m.cells().iter().zip(w.cells()).map(|(a, b)| a / b).collect();
        let (i, value) = argmax(&ratios);
        let side = w.side() as u32;
        let (x, y) = if w.dim() == 1 { (i as u32, 0) } else { (i as u32 / side, i as u32 % side) };
        return Ok(ClassConstant {
            kind: ClassKind::A1,
            p: Some(1.0),
            q: None,
            value,
            witness: DyadicCube::new(w.dim(), w.level(), [x, y]),
            cube_policy: "cells".into(),
        });
    }
    let pw = Pyramid::new(w);
    let pd = Pyramid::new(&w.powf(-1.0 / (p - 1.0))?);
    sup_over(family, ClassKind::Ap, Some(p), None, |q| {
        w.check_cube(q)?;
        Ok(pw.mean(q) * pd.mean(q).powf(p - 1.0))
    })
}

/// `sup_Q ‖w‖_{LLogL(Q, dx/|Q|)} / avg_Q w`.
pub fn rh_llogl_constant(w: &WeightGrid, family: &CubeFamily) -> Result<ClassConstant> {
    sup_over(family, ClassKind::RhLlogl, None, None, |q| {
        let r = rearrangement(w, q)?;
        Ok(llogl_of_step(&r).value / (r.mass() / r.total_measure()))
    })
}

/// `sup_Q ‖wχ_Q‖_{L(p,q)} |Q|^{−1/p} / avg_Q w`.
pub fn rh_lorentz_constant(w: &WeightGrid, p: f64, q: f64, family: &CubeFamily) -> Result<ClassConstant> {
    need_p_gt_1(p)?;
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q = {q} < 1")));
    }
    sup_over(family, ClassKind::RhLorentz, Some(p), Some(q), |c| {
        let r = rearrangement(w, c)?;
        let n = r.total_measure();
        Ok(lorentz_of_step(&r, p, q) / n.powf(1.0 / p) / (r.mass() / n))
    })
}

/// `sup_Q ∫_Q M_Q w / ∫_Q w`.
pub fn fujii_constant(w: &WeightGrid, family: &CubeFamily) -> Result<ClassConstant> {
    sup_over(family, ClassKind::Fujii, None, None, |q| {
        let m = dyadic_maximal(w, q)?;
        let local = w.restrict(q)?;
        let b = DyadicCube::base(w.dim());
        Ok(integrate(&m, &b)? / integrate(&local, &b)?)
    })
}

/// `sup_Q ((1/w(Q))∫_Q g^p w)^{1/p} / ((1/w(Q))∫_Q g w)`.
pub fn rh_p_weighted_constant(g: &WeightGrid, w: &WeightGrid, p: f64, family: &CubeFamily) -> Result<ClassConstant> {
    need_p_gt_1(p)?;
    if g.dim() != w.dim() || g.level() != w.level() {
        return Err(Error::InvalidParameter("g and w live on different grids".into()));
    }
    sup_over(family, ClassKind::RhPWeighted, Some(p), None, |q| {
        w.check_cube(q)?;
        let (mut num, mut den, mut ws) = (ExactSum::new(), ExactSum::new(), ExactSum::new());
        for i in w.cube_indices(q) {
            let (gv, wv) = (g.cells()[i], w.cells()[i]);
            num.add_product(gv.powf(p), wv);
            den.add_product(gv, wv);
            ws.add(wv);
        }
        let ws = ws.value();
        Ok((num.value() / ws).powf(1.0 / p) / (den.value() / ws))
    })
}

#[cfg(test)]
mod tests;
