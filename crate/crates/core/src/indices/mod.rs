//! Almost-increasing constants and the indices built on them.
//!
//! A profile is a piecewise-linear function `φ(s) = a + b·s` on consecutive
//! pieces, possibly with jumps between pieces (the curves `t·w*(t)` are only
//! càdlàg). On each piece `g(s) = φ(s)s^{−δ}` is unimodal, so the sup of
//! `max_{s≤t} g(s) / g(t)` is attained at piece ends or at the single
//! interior critical point, and one left-to-right sweep finds it exactly.
//!
//! # Index estimator
//!
//! On a grid every profile is a.i. with some finite constant, so the index
//! is estimated relative to a cap `C`: the largest `δ` with
//! `sup_Q ai(φ_Q, δ) ≤ C` on windows `[h, γ|Q|)`, where `h` is the
//! resolution floor (one cell). For a profile behaving like `s^α` the raw
//! answer is `α + log C / log(γ|Q|/h)`, biased by the reciprocal of the
//! window span. Repeating the search on the upper half (in log scale) of each
//! window doubles the bias, and `2·δ_full − δ_half` cancels it. The raw
//! cap-relative value is kept as `delta_cap` together with its bracketing
//! certificate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{enumerate_cubes, CubeFamily, CubePolicy, DyadicCube, WeightGrid};
use crate::kcalc::{k_l1_linf, ConcaveCurve, Piece};
use crate::rearrange::{rearrangement, DecreasingStep};

/// Default cap on the a.i. constant.
pub const DEFAULT_CAP: f64 = 16.0;
/// Default menu of window fractions.
pub const DEFAULT_GAMMAS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
/// Bisection tolerance on `δ`.
pub const DELTA_TOL: f64 = 1e-6;
/// Step used for the bracketing certificate.
pub const CERT_STEP: f64 = 1e-3;

/// Piecewise-linear, possibly discontinuous, positive function on `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pieces: Vec<Piece>,
    floor: f64,
}

impl Profile {
    /// Pieces must be contiguous; `floor` is the smallest scale windows may reach.
    pub fn new(pieces: Vec<Piece>, floor: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter("empty profile".into()));
        }
        if pieces.windows(2).any(|w| w[0].t1 != w[1].t0) || pieces.iter().any(|p| !(p.t1 > p.t0)) {
            return Err(Error::InvalidParameter("profile pieces are not contiguous".into()));
        }
        if !(floor >= pieces[0].t0) || floor > pieces.last().unwrap().t1 {
            return Err(Error::InvalidParameter(format!("floor {floor} outside the profile")));
        }
        Ok(Profile { pieces, floor })
    }

    /// A K-curve (or any concave curve through the origin) with resolution floor `floor`.
    pub fn from_curve(k: &ConcaveCurve, floor: f64) -> Result<Self> {
        Profile::new(k.pieces().collect(), floor)
    }

    /// `t ↦ t·f*(t)`, càdlàg, linear through the origin on every plateau.
    pub fn acks(r: &DecreasingStep, floor: f64) -> Result<Self> {
        let pieces = r
            .plateaus()
            .iter()
            .enumerate()
            .map(|(j, p)| Piece { t0: r.start(j), t1: r.ends()[j], a: 0.0, b: p.value })
            .collect();
        Profile::new(pieces, floor)
    }

    /// Linear interpolation of samples `(s, φ(s))` with increasing `s > 0`.
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        let pieces = samples
            .windows(2)
            .map(|w| {
                let (s0, v0) = w[0];
                let (s1, v1) = w[1];
                let b = (v1 - v0) / (s1 - s0);
                Piece { t0: s0, t1: s1, a: v0 - b * s0, b }
            })
            .collect();
        Profile::new(pieces, samples[0].0)
    }

    /// Samples `f` at `n` geometrically spaced points of `[lo, hi]`.
    pub fn sample(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let r = (hi / lo).ln();
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let s = if i + 1 == n { hi } else { lo * (r * i as f64 / (n - 1) as f64).exp() };
                (s, f(s))
            })
            .collect();
        Profile::from_samples(&pts)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }
    pub fn floor(&self) -> f64 {
        self.floor
    }
    pub fn start(&self) -> f64 {
        self.pieces[0].t0
    }
    pub fn end(&self) -> f64 {
        self.pieces.last().unwrap().t1
    }

    /// Right-continuous evaluation inside `[start, end)`; the last piece extends to `end`.
    pub fn eval(&self, s: f64) -> f64 {
        let j = self.pieces.partition_point(|p| p.t1 <= s).min(self.pieces.len() - 1);
        self.pieces[j].at(s)
    }
}

/// A.i. constant with the pair `(s, t)`, `s ≤ t`, attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AiResult {
    pub constant: f64,
    pub s: f64,
    pub t: f64,
}

fn ln_g(pc: &Piece, s: f64, delta: f64) -> f64 {
    let v = pc.at(s);
    if v <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if delta == 0.0 {
        v.ln()
    } else {
        v.ln() - delta * s.ln()
    }
}

/// `sup_{s≤t in [lo,hi)} φ(s)s^{−δ} / (φ(t)t^{−δ})`, computed in log scale.
/// With `lo = 0` the first piece must pass through the origin.
pub fn ai_window(phi: &Profile, delta: f64, lo: f64, hi: f64) -> Result<AiResult> {
    if !(hi > lo) || lo < phi.start() || hi > phi.end() * (1.0 + 1e-12) {
        return Err(Error::EmptyDomain(format!("window [{lo}, {hi}) in profile [{}, {})", phi.start(), phi.end())));
    }
    let hi = hi.min(phi.end());
    // running max of ln g and where it was attained
    let mut m = f64::NEG_INFINITY;
    let mut m_at = lo;
    let mut best = AiResult { constant: 1.0, s: lo, t: lo };
    let mut best_ln = 0.0;
    let mut consider = |t: f64, lg: f64, m: f64, m_at: f64, best: &mut AiResult| {
        if lg == f64::NEG_INFINITY {
            return;
        }
        let r = m - lg;
        if r > best_ln {
            best_ln = r;
            *best = AiResult { constant: r.exp(), s: m_at, t };
        }
    };
    for pc in &phi.pieces {
        if pc.t1 <= lo {
            continue;
        }
        if pc.t0 >= hi {
            break;
        }
        let u0 = pc.t0.max(lo);
        let u1 = pc.t1.min(hi);
        if u0 == 0.0 {
            // g(s) = b s^{1−δ} near the origin
            if pc.a != 0.0 && delta > 0.0 {
                return Ok(AiResult { constant: f64::INFINITY, s: 0.0, t: u1 });
            }
            if pc.a == 0.0 && delta > 1.0 {
                return Ok(AiResult { constant: f64::INFINITY, s: 0.0, t: u1 });
            }
            if pc.a == 0.0 && delta == 1.0 && pc.b > m.exp() {
                m = pc.b.ln();
                m_at = 0.0;
            }
        } else {
            let lg0 = ln_g(pc, u0, delta);
            if lg0 > m {
                m = lg0;
                m_at = u0;
            }
            consider(u0, lg0, m, m_at, &mut best);
        }
        let slope = pc.b * (1.0 - delta);
        if pc.a != 0.0 && slope != 0.0 {
            let s_star = delta * pc.a / slope;
            if s_star > u0 && s_star < u1 {
                let lgs = ln_g(pc, s_star, delta);
                if slope > 0.0 {
                    consider(s_star, lgs, m, m_at, &mut best);
                } else if lgs > m {
                    m = lgs;
                    m_at = s_star;
                }
            }
        }
        let lg1 = ln_g(pc, u1, delta);
        if lg1 > m {
            m = lg1;
            m_at = u1;
        }
        consider(u1, lg1, m, m_at, &mut best);
    }
    Ok(best)
}

/// `C` such that `φ(s)s^{−δ} ≤ C φ(t)t^{−δ}` for `s ≤ t` in `(start, γ·domain_end)`.
pub fn ai_constant(phi: &Profile, delta: f64, gamma: f64, domain_end: f64) -> Result<AiResult> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("γ = {gamma} not in (0,1]")));
    }
    let hi = gamma * domain_end;
    if hi <= phi.start() {
        return Err(Error::EmptyDomain(format!("γ·domain_end = {hi} below the first breakpoint")));
    }
    ai_window(phi, delta, phi.start(), hi)
}

/// A.i. constant of `φ_{β,q}(s) = (s^{−β}φ(s))^q` at exponent `δ`,
/// via `ai(φ_{β,q}, δ) = ai(φ, β + δ/q)^q`.
pub fn ai_transformed(phi: &Profile, beta: f64, q: f64, delta: f64, lo: f64, hi: f64) -> Result<AiResult> {
    let r = ai_window(phi, beta + delta / q, lo, hi)?;
    Ok(AiResult { constant: r.constant.powf(q), ..r })
}

/// Profiles of one weight indexed by cubes.
#[derive(Clone, Debug)]
pub struct IndexFamily {
    pub label: String,
    pub cubes: Vec<DyadicCube>,
    pub profiles: Vec<Profile>,
    pub domain_ends: Vec<f64>,
    pub level: Option<u32>,
}

impl IndexFamily {
    /// K-curves of `w` over `F`, floored at one cell.
    pub fn k_curves(w: &WeightGrid, family: &CubeFamily) -> Result<Self> {
        let h = w.cell_measure();
        let profiles = family
            .cubes
            .par_iter()
            .map(|q| Profile::from_curve(&k_l1_linf(w, q)?, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(w, family, profiles))
    }

    /// `t·(wχ_Q)*(t)` over `F`, floored at one cell.
    pub fn acks_curves(w: &WeightGrid, family: &CubeFamily) -> Result<Self> {
        let h = w.cell_measure();
        let profiles = family
            .cubes
            .par_iter()
            .map(|q| Profile::acks(&rearrangement(w, q)?, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(w, family, profiles))
    }

    fn assemble(w: &WeightGrid, family: &CubeFamily, profiles: Vec<Profile>) -> Self {
        IndexFamily {
            label: w.label().to_string(),
            cubes: family.cubes.clone(),
            domain_ends: family.cubes.iter().map(|q| q.measure()).collect(),
            profiles,
            level: Some(w.level()),
        }
    }

    /// One profile on `(0, l)`.
    pub fn single(phi: Profile, l: f64) -> Self {
        IndexFamily {
            label: "profile".into(),
            cubes: vec![DyadicCube::base(1)],
            profiles: vec![phi],
            domain_ends: vec![l],
            level: None,
        }
    }
}

/// Cube, pair and constant binding an a.i. sup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub cube: DyadicCube,
    pub s: f64,
    pub t: f64,
    pub constant: f64,
}

/// Output of the cap-relative index estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexEstimate {
    /// resolution-extrapolated index, clamped to `[0, q(1−β)]`
    pub delta_hat: f64,
    /// `1 − delta_hat` for the ACKS family
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hat: Option<f64>,
    /// raw largest `δ` with `sup_Q ai ≤ cap` on the full windows
    pub delta_cap: f64,
    /// the same on the upper half of each window
    pub delta_half: f64,
    pub cap: f64,
    pub gamma: f64,
    pub beta: f64,
    pub q: f64,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    /// octaves spanned by the widest window
    pub span: f64,
    pub witness: Witness,
    /// `sup_Q ai` at `delta_cap` and at `delta_cap + 1e−3`
    pub ai_at: f64,
    pub ai_above: f64,
    /// the bracketing certificate `ai_at ≤ cap < ai_above` holds
    pub monotone: bool,
}

#[derive(Clone, Copy)]
enum Half {
    Full,
    Upper,
}

struct Search<'a> {
    fam: &'a IndexFamily,
    beta: f64,
    q: f64,
    gamma: f64,
    half: Half,
}

impl Search<'_> {
    fn window(&self, i: usize) -> Option<(f64, f64)> {
        let p = &self.fam.profiles[i];
        let hi = (self.gamma * self.fam.domain_ends[i]).min(p.end());
        let lo = p.floor();
        if !(hi > lo * (1.0 + 1e-9)) {
            return None;
        }
        Some(match self.half {
            Half::Full => (lo, hi),
            Half::Upper => ((lo * hi).sqrt(), hi),
        })
    }

    /// `sup_Q ai(φ_{Q,β,q}, δ)`, first cube on ties.
    fn sup(&self, delta: f64) -> Option<Witness> {
        let n = self.fam.profiles.len();
        let results: Vec<Option<Witness>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (lo, hi) = self.window(i)?;
                let r = ai_transformed(&self.fam.profiles[i], self.beta, self.q, delta, lo, hi).ok()?;
                Some(Witness { cube: self.fam.cubes[i], s: r.s, t: r.t, constant: r.constant })
            })
            .collect();
        results.into_iter().flatten().fold(None, |acc: Option<Witness>, w| match acc {
            Some(a) if a.constant >= w.constant => Some(a),
            _ => Some(w),
        })
    }

    fn span(&self) -> f64 {
        (0..self.fam.profiles.len())
            .filter_map(|i| self.window(i).map(|(lo, hi)| (hi / lo).log2()))
            .fold(0.0, f64::max)
    }

    /// Largest `δ ≥ 0` with `sup ≤ cap`, to [`DELTA_TOL`].
    fn largest(&self, cap: f64) -> Result<f64> {
        let ok = |d: f64| -> Result<bool> {
            let w = self.sup(d).ok_or_else(|| Error::EmptyDomain("no cube has a nonempty window".into()))?;
            Ok(w.constant <= cap)
        };
        if !ok(0.0)? {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = self.q * (1.0 - self.beta) + 1.0;
        let mut guard = 0;
        while ok(hi)? {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 40 {
                return Err(Error::EmptyDomain("a.i. constant never exceeds the cap".into()));
            }
        }
        while hi - lo > DELTA_TOL {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

fn check_index_params(beta: f64, q: f64, cap: f64, gammas: &[f64]) -> Result<()> {
    if !(0.0..1.0).contains(&beta) || !(q >= 1.0) || !(cap > 1.0) || gammas.is_empty() {
        return Err(Error::InvalidParameter(format!("β={beta}, q={q}, cap={cap}, γ-menu {gammas:?}")));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return Err(Error::InvalidParameter(format!("γ = {g} not in (0,1]")));
    }
    Ok(())
}

/// Index of the family `{φ_{Q,β,q} = (s^{−β}φ_Q)^q}`; see the module docs.
pub fn family_index(fam: &IndexFamily, beta: f64, q: f64, cap: f64, gammas: &[f64]) -> Result<IndexEstimate> {
    check_index_params(beta, q, cap, gammas)?;
    let top = q * (1.0 - beta);
    let mut best: Option<IndexEstimate> = None;
    for &gamma in gammas {
        let full = Search { fam, beta, q, gamma, half: Half::Full };
        let upper = Search { fam, beta, q, gamma, half: Half::Upper };
        let span = full.span();
        if span == 0.0 {
            continue;
        }
        let d_full = full.largest(cap)?;
        let d_half = upper.largest(cap)?;
        let delta_hat = (2.0 * d_full - d_half).clamp(0.0, top);
        if best.as_ref().is_some_and(|b| b.delta_hat >= delta_hat) {
            continue;
        }
        let at = full.sup(d_full).expect("nonempty");
        let above = full.sup(d_full + CERT_STEP).expect("nonempty");
        best = Some(IndexEstimate {
            delta_hat,
            lambda_hat: None,
            delta_cap: d_full,
            delta_half: d_half,
            cap,
            gamma,
            beta,
            q,
            level: fam.level,
            span,
            witness: at,
            ai_at: at.constant,
            ai_above: above.constant,
            monotone: at.constant <= cap && above.constant > cap,
        });
    }
    best.ok_or_else(|| Error::EmptyDomain("every window is empty".into()))
}

/// Index of one function on `(0, l)`: a one-member family with `γ = 1`.
pub fn single_index(phi: &Profile, l: f64, cap: f64) -> Result<IndexEstimate> {
    family_index(&IndexFamily::single(phi.clone(), l), 0.0, 1.0, cap, &[1.0])
}

/// ACKS index `λ̂ = 1 − δ̂` of the family `{t·(wχ_Q)*(t)}`.
pub fn acks_index(w: &WeightGrid, family: &CubeFamily, cap: f64, gammas: &[f64]) -> Result<IndexEstimate> {
    let fam = IndexFamily::acks_curves(w, family)?;
    let mut e = family_index(&fam, 0.0, 1.0, cap, gammas)?;
    e.lambda_hat = Some(1.0 - e.delta_hat);
    Ok(e)
}

/// K-curve index of `w` over all dyadic cubes.
pub fn k_index(w: &WeightGrid, cap: f64, gammas: &[f64]) -> Result<IndexEstimate> {
    let fam = enumerate_cubes(w, &CubePolicy::AllDyadic)?;
    family_index(&IndexFamily::k_curves(w, &fam)?, 0.0, 1.0, cap, gammas)
}

/// `α̂ = max_x ln(min_h φ(xh)/φ(h)) / ln x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamkoEstimate {
    pub alpha: f64,
    pub x: f64,
    pub h: f64,
}

pub fn samko_alpha(phi: &Profile, h_grid: &[f64], x_grid: &[f64]) -> Result<SamkoEstimate> {
    if x_grid.iter().any(|x| !(*x > 1.0)) {
        return Err(Error::InvalidParameter("x grid must lie in (1, ∞)".into()));
    }
    let mut best: Option<SamkoEstimate> = None;
    for &x in x_grid {
        let mut worst: Option<(f64, f64)> = None;
        for &h in h_grid {
            if h < phi.floor() || x * h > phi.end() {
                continue;
            }
            let r = (phi.eval(x * h) / phi.eval(h)).ln();
            if worst.is_none_or(|(w, _)| r < w) {
                worst = Some((r, h));
            }
        }
        if let Some((r, h)) = worst {
            let a = r / x.ln();
            if best.is_none_or(|b| a > b.alpha) {
                best = Some(SamkoEstimate { alpha: a, x, h });
            }
        }
    }
    best.ok_or_else(|| Error::EmptyDomain("no (x, h) pair fits in the profile".into()))
}

/// Decade-spaced `h` from `floor` while `x_max·h` stays in the domain.
pub fn decade_grid(floor: f64, end: f64, x_max: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut h = floor;
    while h * x_max <= end {
        v.push(h);
        h *= 10.0;
    }
    v
}

/// Default `x` menu for [`samko_alpha`].
pub const SAMKO_X: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

/// `α̂` with the default grids: `h` from four cells (or the first sample) by decades.
pub fn samko_default(phi: &Profile, floor: f64) -> Result<SamkoEstimate> {
    let xs = SAMKO_X;
    samko_alpha(phi, &decade_grid(floor, phi.end(), xs[xs.len() - 1]), &xs)
}

/// `sup_t (∫_0^t φ(s) ds/s) / φ(t)` with the argmax.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardyResidual {
    pub value: f64,
    pub t: f64,
}

/// Below the first piece (for sampled profiles) `φ` is taken linear through
/// the origin, which makes the head integral `φ(start)`.
pub fn hardy_residual(phi: &Profile, end: f64) -> Result<HardyResidual> {
    let end = end.min(phi.end());
    let mut f = 0.0;
    let mut best = HardyResidual { value: 1.0, t: phi.start().max(phi.pieces[0].t1.min(end)) };
    let first = &phi.pieces[0];
    if first.t0 == 0.0 {
        if first.a != 0.0 {
            return Err(Error::DivergentHead(format!("φ(0+) = {} > 0", first.a)));
        }
    } else {
        f = first.at(first.t0);
    }
    for pc in &phi.pieces {
        if pc.t0 >= end {
            break;
        }
        let t0 = pc.t0;
        let t1 = pc.t1.min(end);
        let big_f = |t: f64| {
            if t0 == 0.0 {
                pc.b * t
            } else {
                f + pc.a * (t / t0).ln() + pc.b * (t - t0)
            }
        };
        let ratio = |t: f64| big_f(t) / pc.at(t);
        let mut consider = |t: f64| {
            let r = ratio(t);
            if r > best.value {
                best = HardyResidual { value: r, t };
            }
        };
        if t0 > 0.0 {
            consider(t0);
        }
        consider(t1);
        // interior max where φ²/t − bF changes sign from + to −
        let h = |t: f64| pc.at(t).powi(2) / t - pc.b * big_f(t);
        if t0 > 0.0 && h(t0) > 0.0 && h(t1) < 0.0 {
            let (mut lo, mut hi) = (t0, t1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if h(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            consider(0.5 * (lo + hi));
        }
        f = big_f(t1);
    }
    Ok(best)
}

/// `sup_Q` of the Hardy residual of the K-curves, with the binding cube.
pub fn family_hardy_residual(w: &WeightGrid, family: &CubeFamily) -> Result<(f64, DyadicCube)> {
    let vals = family
        .cubes
        .par_iter()
        .map(|q| {
            let k = k_l1_linf(w, q)?;
            Ok(hardy_residual(&Profile::from_curve(&k, 0.0)?, k.domain_end())?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (i, v) = argmax(&vals);
    Ok((v, family.cubes[i]))
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> (usize, f64) {
    let mut best = (0, v[0]);
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

#[cfg(test)]
mod tests;
