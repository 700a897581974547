//! Verification routines. Each returns a [`TheoremReport`] whose pass flag is
//! the conjunction of its asserted cases; borderline cases are recorded with
//! `asserted: false`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{fujii_constant, rh_llogl_constant, rh_p_constant, rh_p_weighted_constant};
use crate::error::{Error, Result};
use crate::grid::{integrate, CubeFamily, DyadicCube, Generator, WeightGrid};
use crate::indices::{
    acks_index, argmax, family_hardy_residual, family_index, hardy_residual, IndexEstimate, IndexFamily, Profile,
    DEFAULT_CAP, DEFAULT_GAMMAS,
};
use crate::kcalc::{extrapolation_norm, holmstedt_curve, k_l1_linf, k_over_s_integral, k_weighted, ConcaveCurve, PackingFamily};
use crate::rearrange::{dyadic_maximal, iterated_maximal, rearrangement};

/// Estimator settings shared by the classification routines.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexConfig {
    pub cap: f64,
    pub gammas: Vec<f64>,
    /// an index must exceed this to count as positive
    pub margin: f64,
    /// estimates this close to a threshold are reported, not asserted
    pub band: f64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig { cap: DEFAULT_CAP, gammas: DEFAULT_GAMMAS.to_vec(), margin: 0.02, band: 0.05 }
    }
}

/// One verified case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub label: String,
    pub pass: bool,
    pub asserted: bool,
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CaseOutcome {
    pub fn new(label: impl Into<String>, pass: bool) -> Self {
        CaseOutcome { label: label.into(), pass, asserted: true, values: BTreeMap::new(), note: None }
    }
    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }
    pub fn flag(mut self, v: bool, key: &str) -> Self {
        self.values.insert(key.to_string(), if v { 1.0 } else { 0.0 });
        self
    }
    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
    pub fn unasserted(mut self) -> Self {
        self.asserted = false;
        self
    }
}

/// Outcome of one theorem check over a corpus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremReport {
    pub id: String,
    pub corpus: String,
    pub pass: bool,
    pub cases: Vec<CaseOutcome>,
    pub constants: BTreeMap<String, f64>,
}

impl TheoremReport {
    pub fn new(id: impl Into<String>, corpus: impl Into<String>) -> Self {
        TheoremReport { id: id.into(), corpus: corpus.into(), pass: true, cases: Vec::new(), constants: BTreeMap::new() }
    }

    pub fn push(&mut self, c: CaseOutcome) {
        if c.asserted && !c.pass {
            self.pass = false;
        }
        self.cases.push(c);
    }

    pub fn extend(&mut self, other: TheoremReport) {
        for c in other.cases {
            self.push(c);
        }
        for (k, v) in other.constants {
            self.constants.insert(k, v);
        }
    }

    pub fn constant(&mut self, k: &str, v: f64) {
        self.constants.insert(k.to_string(), v);
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseOutcome> {
        self.cases.iter().filter(|c| c.asserted && !c.pass)
    }
}

/// Whether a sequence of constants over increasing resolutions drifts by less than `tol` (relative).
pub fn stable_drift(seq: &[f64], tol: f64) -> bool {
    seq.last().unwrap() / seq[0] < 1.0 + tol
}

/// Whether three constants at equally spaced resolutions converge geometrically:
/// increments shrink (`Δ₂ < Δ₁`) or vanish.
pub fn aitken_bounded(seq: [f64; 3]) -> bool {
    let d1 = seq[1] - seq[0];
    let d2 = seq[2] - seq[1];
    let scale = seq[2].abs();
    if d1.abs() <= 1e-9 * scale && d2.abs() <= 1e-9 * scale {
        return true;
    }
    d2 <= 0.0 || (d1 > 0.0 && d2 < d1)
}

/// `sup_{T < |Q|} {∫_0^T [s^{−1/p′}K(s)]^p ds/s}^{1/p} / (T^{−1/p′}K(T))` over breakpoints
/// and the geometric midpoint of every piece.
pub fn k_side_ratio(k: &ConcaveCurve, p: f64) -> Result<f64> {
    let theta = 1.0 - 1.0 / p;
    let h = holmstedt_curve(k, theta, p)?;
    let mut best: f64 = 0.0;
    let mut check = |t: f64| {
        let r = h.integral_to(t).powf(1.0 / p) / (t.powf(-theta) * k.eval(t));
        best = best.max(r);
    };
    for pc in k.pieces() {
        if pc.t0 > 0.0 {
            check((pc.t0 * pc.t1).sqrt());
        } else {
            check(0.5 * pc.t1);
        }
        check(pc.t1);
    }
    Ok(best)
}

/// `sup_Q` of [`k_side_ratio`] with the binding cube.
pub fn k_side_constant(w: &WeightGrid, p: f64, family: &CubeFamily) -> Result<(f64, DyadicCube)> {
    let vals = family
        .cubes
        .par_iter()
        .map(|q| k_side_ratio(&k_l1_linf(w, q)?, p))
        .collect::<Result<Vec<f64>>>()?;
    let (i, v) = argmax(&vals);
    Ok((v, family.cubes[i]))
}

fn within(ratio: f64, radius: f64) -> bool {
    ratio >= 1.0 / radius && ratio <= radius
}

/// `‖w‖_{RH_p}` against the K-side (Holmstedt) constant, comparable within `radius`.
pub fn verify_rhp_equivalence(w: &WeightGrid, p: f64, family: &CubeFamily, radius: f64) -> Result<TheoremReport> {
    let rh = rh_p_constant(w, p, family)?;
    let (ks, kq) = k_side_constant(w, p, family)?;
    let ratio = rh.value / ks;
    let mut rep = TheoremReport::new("rhp-equivalence", w.label());
    rep.push(
        CaseOutcome::new(format!("{} p={p}", w.label()), within(ratio, radius))
            .with("rh_p", rh.value)
            .with("k_side", ks)
            .with("ratio", ratio)
            .with("radius", radius)
            .note(format!("rh witness {}, k witness {kq}", rh.witness)),
    );
    Ok(rep)
}

/// `RH_{LLogL}` constant against `sup_Q` of the Hardy residual of the K-curves.
pub fn verify_llogl_equivalence(w: &WeightGrid, family: &CubeFamily, radius: f64) -> Result<TheoremReport> {
    let rl = rh_llogl_constant(w, family)?;
    let (hr, hq) = family_hardy_residual(w, family)?;
    let ratio = rl.value / hr;
    let mut rep = TheoremReport::new("llogl-equivalence", w.label());
    rep.push(
        CaseOutcome::new(w.label(), within(ratio, radius))
            .with("rh_llogl", rl.value)
            .with("hardy_residual", hr)
            .with("ratio", ratio)
            .with("radius", radius)
            .note(format!("rh witness {}, hardy witness {hq}", rl.witness)),
    );
    Ok(rep)
}

fn all_dyadic(w: &WeightGrid) -> Result<CubeFamily> {
    crate::grid::enumerate_cubes(w, &crate::grid::CubePolicy::AllDyadic)
}

/// K-curve index over all dyadic cubes.
pub fn k_family_index(w: &WeightGrid, cfg: &IndexConfig) -> Result<IndexEstimate> {
    family_index(&IndexFamily::k_curves(w, &all_dyadic(w)?)?, 0.0, 1.0, cfg.cap, &cfg.gammas)
}

/// ACKS index `λ̂ < 1` against K-index `> 0`, both with margin.
pub fn verify_acks(w: &WeightGrid, cfg: &IndexConfig) -> Result<TheoremReport> {
    let fam = all_dyadic(w)?;
    let k = family_index(&IndexFamily::k_curves(w, &fam)?, 0.0, 1.0, cfg.cap, &cfg.gammas)?;
    let a = acks_index(w, &fam, cfg.cap, &cfg.gammas)?;
    let lambda = a.lambda_hat.unwrap();
    let in_k = k.delta_hat > cfg.margin;
    let in_acks = lambda < 1.0 - cfg.margin;
    let borderline = (k.delta_hat - cfg.margin).abs() < cfg.band || (lambda - (1.0 - cfg.margin)).abs() < cfg.band;
    let mut case = CaseOutcome::new(w.label(), in_k == in_acks)
        .with("delta_hat", k.delta_hat)
        .with("lambda_hat", lambda)
        .flag(in_k, "in_k")
        .flag(in_acks, "in_acks");
    if borderline {
        case = case.unasserted().note("borderline: estimate within the band of the threshold");
    }
    let mut rep = TheoremReport::new("acks", w.label());
    rep.push(case);
    Ok(rep)
}

/// `w ∈ RH_p` (K-index `> 1/p′`) against `w^p ∈ A_∞` (K-index of `w^p` `> margin`).
///
/// Power weights with `ap ≤ −1` are out of domain: `w^p` is not locally
/// integrable, hence not in `A_∞`. A truncated grid would still report a
/// small positive index, so the generator exponent decides.
pub fn verify_stromberg_wheeden(w: &WeightGrid, p: f64, cfg: &IndexConfig) -> Result<TheoremReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
    }
    let k = k_family_index(w, cfg)?;
    let threshold = 1.0 - 1.0 / p;
    let in_rh = k.delta_hat > threshold;
    let pow_a = match Generator::parse(w.label()) {
        Ok(Generator::Pow(a)) => Some(a),
        _ => None,
    };
    let mut case = CaseOutcome::new(format!("{} p={p}", w.label()), true).with("delta_hat", k.delta_hat).with("threshold", threshold);
    let (in_ainf, near) = match pow_a {
        Some(a) if a * p <= -1.0 => {
            case = case.note("out-of-domain: w^p not locally integrable");
            (false, false)
        }
        _ => {
            let kp = k_family_index(&w.powf(p)?, cfg)?;
            case = case.with("delta_hat_wp", kp.delta_hat);
            if let Some(a) = pow_a {
                case = case.with("expected_wp", 1.0 + a * p);
            }
            (kp.delta_hat > cfg.margin, (kp.delta_hat - cfg.margin).abs() < cfg.band)
        }
    };
    case.pass = in_rh == in_ainf;
    case = case.flag(in_rh, "in_rh_p").flag(in_ainf, "wp_in_a_inf");
    if near || (k.delta_hat - threshold).abs() < cfg.band {
        case = case.unasserted();
    }
    let mut rep = TheoremReport::new("stromberg-wheeden", w.label());
    rep.push(case);
    Ok(rep)
}

/// (a) `fujii ≤ c(k² + k + 1)`, `k = ‖w‖_{RH_{LLogL}}`; (b) reports `max M(Mw)/Mw` on the base cube.
pub fn verify_fujii(w: &WeightGrid, family: &CubeFamily, c: f64) -> Result<TheoremReport> {
    let fj = fujii_constant(w, family)?;
    let k = rh_llogl_constant(w, family)?.value;
    let bound = c * (k * k + k + 1.0);
    let base = DyadicCube::base(w.dim());
    let m = dyadic_maximal(w, &base)?;
    let mm = iterated_maximal(w, &base)?;
    let ratio = mm.cells().iter().zip(m.cells()).map(|(a, b)| a / b).fold(0.0, f64::max);
    let mut rep = TheoremReport::new("fujii", w.label());
    rep.push(
        CaseOutcome::new(w.label(), fj.value <= bound)
            .with("fujii", fj.value)
            .with("k", k)
            .with("bound", bound)
            .with("iterated_ratio", ratio),
    );
    rep.constant("c", c);
    Ok(rep)
}

/// `∫_r^∞ K(s)/s² ds` with `K` constant past its domain.
fn k_over_s2_tail(k: &ConcaveCurve, r: f64) -> f64 {
    let mut acc = 0.0;
    for pc in k.pieces() {
        if pc.t1 <= r {
            continue;
        }
        let s0 = pc.t0.max(r);
        acc += pc.a * (1.0 / s0 - 1.0 / pc.t1) + pc.b * (pc.t1 / s0).ln();
    }
    let n = k.domain_end();
    acc + k.total() / n.max(r)
}

/// Extrapolation bound for `M_Q` on `(L¹(Q), L∞(Q))` plus the weak-type hypothesis residual.
pub fn verify_extrapolation_bound(w: &WeightGrid, q: &DyadicCube, c: f64) -> Result<TheoremReport> {
    let local = w.restrict(q)?;
    let base = DyadicCube::base(w.dim());
    let m = dyadic_maximal(w, q)?;
    let lhs = extrapolation_norm(&m, &base)?;
    let kf = k_l1_linf(&local, &base)?;
    let k = hardy_residual(&Profile::from_curve(&kf, 0.0)?, kf.domain_end())?.value;
    let l1 = integrate(&local, &base)?;
    let rhs = c * l1 * (k * k + k + 1.0);
    let mut rep = TheoremReport::new("extrapolation", w.label());
    rep.push(
        CaseOutcome::new(format!("{} Q={q}", w.label()), lhs.value() <= rhs && lhs.relative_gap() < 1e-8)
            .with("lhs", lhs.value())
            .with("rhs", rhs)
            .with("k", k)
            .with("l1", l1),
    );
    let residual = weak_type_residual(&local)?;
    rep.push(CaseOutcome::new(format!("{} Q={q} weak-type", w.label()), residual <= 1.0 + 1e-9).with("residual", residual));
    rep.constant("c", c);
    Ok(rep)
}

/// `sup_r (Mf)**(r) / [(1/r)∫_0^r K(s,f)/s ds + ∫_r^∞ K(s,f)/s² ds]` at the
/// breakpoints of both curves, their midpoints, and past the support.
pub fn weak_type_residual(f: &WeightGrid) -> Result<f64> {
    let base = DyadicCube::base(f.dim());
    let kf = k_l1_linf(f, &base)?;
    let km = k_l1_linf(&dyadic_maximal(f, &base)?, &base)?;
    let mut ts: Vec<f64> = kf.breakpoints().chain(km.breakpoints()).map(|(t, _)| t).filter(|t| *t > 0.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut pts = Vec::with_capacity(2 * ts.len() + 2);
    let mut prev = 0.0;
    for &t in &ts {
        pts.push(if prev > 0.0 { (prev * t).sqrt() } else { 0.5 * t });
        pts.push(t);
        prev = t;
    }
    pts.extend([2.0 * prev, 10.0 * prev]);
    let mut worst: f64 = 0.0;
    for r in pts {
        let lhs = km.eval(r) / r;
        let rhs = k_over_s_integral(&kf, r) / r + k_over_s2_tail(&kf, r);
        worst = worst.max(lhs / rhs);
    }
    Ok(worst)
}

/// Weighted reverse Hölder implies the K-inequality between `k_weighted` at
/// exponents `p` and `1`, at `t = w(Q)` for every cube of the family.
pub fn verify_weighted_rh(g: &WeightGrid, w: &WeightGrid, p: f64, family: &CubeFamily) -> Result<TheoremReport> {
    let norm = rh_p_weighted_constant(g, w, p, family)?.value;
    let mut rep = TheoremReport::new("weighted-rh", format!("g={} w={}", g.label(), w.label()));
    rep.constant("rh_p_weighted", norm);
    let p_conj = p / (p - 1.0);
    for q in family.iter() {
        let packs = PackingFamily::all_levels(w, q)?;
        let t = integrate(w, q)?;
        let lhs = k_weighted(g, w, p, t, &packs)?.value;
        let rhs = norm * t.powf(-1.0 / p_conj) * k_weighted(g, w, 1.0, t, &packs)?.value;
        rep.push(CaseOutcome::new(format!("Q={q}"), lhs <= rhs * (1.0 + 1e-12)).with("lhs", lhs).with("rhs", rhs));
    }
    Ok(rep)
}

/// Self-improvement of `RH_p` read off the index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GehringResult {
    pub index: IndexEstimate,
    pub p: f64,
    pub p_max: f64,
    pub p0: f64,
    /// `ind̂ > 1/p₀′` holds
    pub certified: bool,
}

/// Cap on the improved exponent when the index is essentially one.
pub const GEHRING_P_MAX: f64 = 64.0;

pub fn gehring_improve(w: &WeightGrid, p: f64, cfg: &IndexConfig) -> Result<GehringResult> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
    }
    let index = k_family_index(w, cfg)?;
    let ind = index.delta_hat;
    if ind <= 1.0 - 1.0 / p {
        return Err(Error::Precondition(format!(
            "not in RH_{p} at this resolution/cap: index {ind} ≤ 1/p′ = {}",
            1.0 - 1.0 / p
        )));
    }
    let p_max = if ind >= 1.0 - 1.0 / GEHRING_P_MAX { GEHRING_P_MAX } else { 1.0 / (1.0 - ind) };
    let p0 = 0.5 * (p + p_max);
    let certified = ind > 1.0 - 1.0 / p0;
    Ok(GehringResult { index, p, p_max, p0, certified })
}

/// Both Herz bounds at the plateau points of `w` and `M_d w` on `q0`.
/// Returns the worst upper ratio `(M w)* / w**` and lower ratio `w** / ((2^d+1)(M w)*(t(1−h)))`.
pub fn herz_ratios(w: &WeightGrid, q0: &DyadicCube) -> Result<(f64, f64, bool)> {
    let local = w.restrict(q0)?;
    let base = DyadicCube::base(w.dim());
    let r = rearrangement(&local, &base)?;
    let m = dyadic_maximal(w, q0)?;
    let rm = rearrangement(&m, &base)?;
    let eps = local.cell_measure();
    let c = (1u32 << w.dim()) as f64 + 1.0;
    let mut upper: f64 = 0.0;
    let mut lower: f64 = 0.0;
    for (j, pl) in rm.plateaus().iter().enumerate() {
        let t = rm.ends()[j];
        upper = upper.max(pl.value / (r.integral_to(t) / t));
    }
    let avg = r.mass();
    let above_avg = m.cells().iter().all(|&v| v >= avg * (1.0 - 1e-15));
    for t in r.ends().iter().chain(rm.ends()) {
        let ds = r.integral_to(*t) / t;
        lower = lower.max(ds / (c * rm.value_at(t * (1.0 - eps))));
    }
    Ok((upper, lower, above_avg))
}
