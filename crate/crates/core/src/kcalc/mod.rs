//! K-functional curves and the norms built from them.
//!
//! Everything here works on the rearrangement of `wχ_Q`, so a cube-local
//! quantity only needs the plateaus `(v_j, m_j)` and their cumulative sums.
//! Integrals of powers of `f*` are exact per plateau; integrals of powers of
//! `f**` use Gauss–Kronrod on each plateau where no antiderivative is handy.

mod packing;

pub use packing::{
    k_weighted, packing_average, packing_maximal, weighted_rearrangement, KWeighted, Packing, PackingFamily,
    PackingPolicy, PackedFunction,
};

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::grid::{CubeFamily, DyadicCube, WeightGrid};
use crate::quad;
use crate::rearrange::{rearrangement, DecreasingStep};

/// Relative tolerance for per-piece quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// A nondecreasing concave piecewise-linear curve through the origin,
/// constant past its last breakpoint (`domain_end`).
#[derive(Clone, Debug, PartialEq)]
pub struct ConcaveCurve {
    ts: Vec<f64>,
    vals: Vec<f64>,
    slopes: Vec<f64>,
}

/// A linear piece `a + b·s` on `[t0, t1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub a: f64,
    pub b: f64,
}

impl Piece {
    pub fn at(&self, s: f64) -> f64 {
        self.a + self.b * s
    }
}

impl ConcaveCurve {
    /// `t ↦ ∫_0^t f*` for a decreasing step `f*`.
    pub fn from_step(r: &DecreasingStep) -> Self {
        let mut ts = vec![0.0];
        ts.extend_from_slice(r.ends());
        let mut vals = vec![0.0];
        vals.extend_from_slice(r.cumulative_masses());
        let slopes = r.plateaus().iter().map(|p| p.value).collect();
        let c = ConcaveCurve { ts, vals, slopes };
        debug_assert!(c.check().is_ok());
        c
    }

    /// Verifies the curve invariants.
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("curve invariant: {m}")));
        if self.ts[0] != 0.0 || self.vals[0] != 0.0 {
            return bad("does not start at the origin");
        }
        if self.ts.windows(2).any(|w| w[1] <= w[0]) {
            return bad("breakpoints not increasing");
        }
        if self.vals.windows(2).any(|w| w[1] < w[0]) {
            return bad("decreasing");
        }
        if self.slopes.windows(2).any(|w| w[1] > w[0]) || self.slopes.iter().any(|s| *s < 0.0) {
            return bad("not concave");
        }
        Ok(())
    }

    pub fn domain_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    /// Value at and past `domain_end`.
    pub fn total(&self) -> f64 {
        *self.vals.last().unwrap()
    }

    /// Breakpoints `(t, K(t))`, starting at the origin.
    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().copied().zip(self.vals.iter().copied())
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let j = self.ts.partition_point(|&x| x <= t);
        if j >= self.ts.len() {
            return self.total();
        }
        self.vals[j - 1] + self.slopes[j - 1] * (t - self.ts[j - 1])
    }

    pub fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        (0..self.slopes.len()).map(|j| {
            let b = self.slopes[j];
            let a = if j == 0 { 0.0 } else { self.vals[j] - b * self.ts[j] };
            Piece { t0: self.ts[j], t1: self.ts[j + 1], a, b }
        })
    }

    pub fn scale(&self, c: f64) -> ConcaveCurve {
        ConcaveCurve {
            ts: self.ts.clone(),
            vals: self.vals.iter().map(|v| c * v).collect(),
            slopes: self.slopes.iter().map(|v| c * v).collect(),
        }
    }
}

/// `K(t, wχ_Q; L¹, L∞) = ∫_0^t (wχ_Q)*`.
pub fn k_l1_linf(w: &WeightGrid, q: &DyadicCube) -> Result<ConcaveCurve> {
    Ok(ConcaveCurve::from_step(&rearrangement(w, q)?))
}

/// `G(t) = {∫_0^t (w*)^p}^{1/p}`, the exact side of `K(t^{1/p}; Lᵖ, L∞)`.
#[derive(Clone, Debug)]
pub struct LpCurve {
    pub p: f64,
    /// `t ↦ ∫_0^t (w*)^p`
    pub power: ConcaveCurve,
}

impl LpCurve {
    pub fn eval(&self, t: f64) -> f64 {
        self.power.eval(t).powf(1.0 / self.p)
    }
}

pub fn k_lp_linf(w: &WeightGrid, q: &DyadicCube, p: f64) -> Result<LpCurve> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} < 1")));
    }
    let r = rearrangement(w, q)?;
    let r = if p == 1.0 { r } else { r.map_values(|v| v.powf(p))? };
    Ok(LpCurve { p, power: ConcaveCurve::from_step(&r) })
}

/// `∫_{s0}^{s1} (a + b s)^q s^{-θq-1} ds` on one linear piece of `K`.
fn holmstedt_piece(pc: &Piece, s0: f64, s1: f64, theta: f64, q: f64) -> f64 {
    if s1 <= s0 {
        return 0.0;
    }
    let e = theta * q;
    if pc.a == 0.0 {
        let k = q * (1.0 - theta);
        return pc.b.powf(q) * (s1.powf(k) - s0.powf(k)) / k;
    }
    if pc.b == 0.0 {
        return pc.a.powf(q) * (s0.powf(-e) - s1.powf(-e)) / e;
    }
    if q == 1.0 {
        return pc.a * (s0.powf(-theta) - s1.powf(-theta)) / theta
            + pc.b * (s1.powf(1.0 - theta) - s0.powf(1.0 - theta)) / (1.0 - theta);
    }
    quad::integrate(|s| pc.at(s).powf(q) * s.powf(-e - 1.0), s0, s1, QUAD_TOL)
}

/// `H(t) = {∫_0^{t^{1/(1−θ)}} [s^{−θ}K(s)]^q ds/s}^{1/q}` for a K-curve.
#[derive(Clone, Debug)]
pub struct HolmstedtCurve {
    k: ConcaveCurve,
    theta: f64,
    q: f64,
    /// integral up to each breakpoint of `k`
    cum: Vec<f64>,
}

pub fn holmstedt_curve(k: &ConcaveCurve, theta: f64, q: f64) -> Result<HolmstedtCurve> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("θ = {theta} not in (0,1)")));
    }
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q = {q} < 1")));
    }
    let mut cum = vec![0.0];
    let mut acc = 0.0;
    for pc in k.pieces() {
        acc += holmstedt_piece(&pc, pc.t0, pc.t1, theta, q);
        cum.push(acc);
    }
    Ok(HolmstedtCurve { k: k.clone(), theta, q, cum })
}

impl HolmstedtCurve {
    /// `∫_0^T [s^{−θ}K(s)]^q ds/s` in the inner variable `T`.
    pub fn integral_to(&self, big_t: f64) -> f64 {
        if big_t <= 0.0 {
            return 0.0;
        }
        let n = self.k.domain_end();
        if big_t >= n {
            let m = self.k.total();
            let e = self.theta * self.q;
            return self.cum.last().unwrap() + m.powf(self.q) * (n.powf(-e) - big_t.powf(-e)) / e;
        }
        let j = self.k.ts.partition_point(|&x| x <= big_t) - 1;
        let pc = self.k.pieces().nth(j).unwrap();
        self.cum[j] + holmstedt_piece(&pc, pc.t0, big_t, self.theta, self.q)
    }

    /// `H(t)`; the inner variable is `t^{1/(1−θ)}`.
    pub fn eval(&self, t: f64) -> f64 {
        self.integral_to(t.powf(1.0 / (1.0 - self.theta))).powf(1.0 / self.q)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn k(&self) -> &ConcaveCurve {
        &self.k
    }
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() || !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("need p > 1, q ≥ 1; got p={p}, q={q}")));
    }
    Ok(())
}

/// `‖wχ_Q‖_{L(p,q)} = {∫_0^∞ f**(t)^q t^{q/p−1} dt}^{1/q}`, with `f** = mass/t` past `|Q|`.
pub fn lorentz_norm(w: &WeightGrid, q_cube: &DyadicCube, p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    let r = rearrangement(w, q_cube)?;
    Ok(lorentz_of_step(&r, p, q))
}

/// Same as [`lorentz_norm`] for an arbitrary decreasing step.
pub fn lorentz_of_step(r: &DecreasingStep, p: f64, q: f64) -> f64 {
    let e = q / p;
    let mut acc = 0.0;
    for (j, pl) in r.plateaus().iter().enumerate() {
        let (t0, t1) = (r.start(j), r.ends()[j]);
        let v = pl.value;
        if j == 0 {
            acc += v.powf(q) * t1.powf(e) / e;
            continue;
        }
        // f** = v + A/t on this plateau
        let a = r.cumulative_masses()[j - 1] - v * t0;
        acc += if q == 1.0 {
            v * p * (t1.powf(1.0 / p) - t0.powf(1.0 / p)) + a * (t1.powf(1.0 / p - 1.0) - t0.powf(1.0 / p - 1.0)) / (1.0 / p - 1.0)
        } else {
            quad::integrate(|t| (v + a / t).powf(q) * t.powf(e - 1.0), t0, t1, QUAD_TOL)
        };
    }
    let n = r.total_measure();
    let m = r.mass();
    let p_conj = p / (p - 1.0);
    acc += m.powf(q) * n.powf(e - q) * p_conj / q;
    acc.powf(1.0 / q)
}

/// `{∫_0^{t^p} [w*(s) s^{1/p}]^q ds/s}^{1/q}`.
pub fn k_lorentz_linf(w: &WeightGrid, q_cube: &DyadicCube, p: f64, q: f64, t: f64) -> Result<f64> {
    check_pq(p, q)?;
    if !(t > 0.0) {
        return Err(Error::TimeOutOfRange(t));
    }
    let r = rearrangement(w, q_cube)?;
    let big_t = t.powf(p);
    let e = q / p;
    let mut acc = 0.0;
    for (j, pl) in r.plateaus().iter().enumerate() {
        let s0 = r.start(j);
        if s0 >= big_t {
            break;
        }
        let s1 = r.ends()[j].min(big_t);
        acc += pl.value.powf(q) * (s1.powf(e) - s0.powf(e)) / e;
    }
    Ok(acc.powf(1.0 / q))
}

/// `(1/|Q|)∫_Q (f/r) log(e + f/r)`, the Luxemburg functional of `LLogL(Q, dx/|Q|)`.
pub fn luxemburg_functional(r_step: &DecreasingStep, r: f64) -> f64 {
    let n = r_step.total_measure();
    r_step
        .plateaus()
        .iter()
        .map(|p| {
            let u = p.value / r;
            p.measure * u * (E + u).ln()
        })
        .sum::<f64>()
        / n
}

/// The Luxemburg norm of `wχ_Q` in `LLogL(Q, dx/|Q|)` with the defining residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LlogLNorm {
    pub value: f64,
    /// defining functional at `value` minus one
    pub residual: f64,
}

/// Bisection on `r` between the average (a lower bound) and a doubled upper bracket.
pub fn llogl_norm(w: &WeightGrid, q: &DyadicCube) -> Result<LlogLNorm> {
    let r = rearrangement(w, q)?;
    Ok(llogl_of_step(&r))
}

pub fn llogl_of_step(r: &DecreasingStep) -> LlogLNorm {
    let avg = r.mass() / r.total_measure();
    let phi = |x: f64| luxemburg_functional(r, x);
    let mut lo = avg;
    let mut hi = 2.0 * avg;
    while phi(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo) > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    LlogLNorm { value, residual: phi(value) - 1.0 }
}

/// `(A, B)`: `A = (1/|Q|)∫_Q f log(e + f/avg)`, `B = (1/|Q|)∫_0^{|Q|} f*(s) log(e + |Q|/s) ds`.
pub fn llogl_integral_forms(w: &WeightGrid, q: &DyadicCube) -> Result<(f64, f64)> {
    let r = rearrangement(w, q)?;
    let n = r.total_measure();
    let avg = r.mass() / n;
    let a = r.plateaus().iter().map(|p| p.measure * p.value * (E + p.value / avg).ln()).sum::<f64>() / n;
    // antiderivative of log(e + n/s)
    let g = |s: f64| {
        let u = E * s + n;
        let sl = if s > 0.0 { s * s.ln() } else { 0.0 };
        u * u.ln() / E - sl
    };
    let b = r
        .plateaus()
        .iter()
        .enumerate()
        .map(|(j, p)| p.value * (g(r.ends()[j]) - g(r.start(j))))
        .sum::<f64>()
        / n;
    Ok((a, b))
}

/// `∫_0^{|Q|} K(s)/s ds` by two independent routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtrapolationNorm {
    /// per linear piece of `K`: `a log(s1/s0) + b (s1 − s0)`
    pub k_integral: f64,
    /// per plateau: `∫ f*(s) log(|Q|/s) ds`
    pub log_weighted: f64,
}

impl ExtrapolationNorm {
    pub fn value(&self) -> f64 {
        self.log_weighted
    }
    pub fn relative_gap(&self) -> f64 {
        (self.k_integral - self.log_weighted).abs() / self.log_weighted.abs()
    }
}

pub fn extrapolation_norm(w: &WeightGrid, q: &DyadicCube) -> Result<ExtrapolationNorm> {
    Ok(extrapolation_of_step(&rearrangement(w, q)?))
}

pub fn extrapolation_of_step(r: &DecreasingStep) -> ExtrapolationNorm {
    let k = ConcaveCurve::from_step(r);
    let k_integral = k_over_s_integral(&k, k.domain_end());
    let n = r.total_measure();
    let h = |s: f64| if s > 0.0 { s * (1.0 + (n / s).ln()) } else { 0.0 };
    let log_weighted = r
        .plateaus()
        .iter()
        .enumerate()
        .map(|(j, p)| p.value * (h(r.ends()[j]) - h(r.start(j))))
        .sum();
    ExtrapolationNorm { k_integral, log_weighted }
}

/// `∫_0^t K(s)/s ds` for `t` up to `domain_end`, exact per piece.
pub fn k_over_s_integral(k: &ConcaveCurve, t: f64) -> f64 {
    let mut acc = 0.0;
    for pc in k.pieces() {
        if pc.t0 >= t {
            break;
        }
        let s1 = pc.t1.min(t);
        acc += if pc.a == 0.0 {
            pc.b * (s1 - pc.t0)
        } else {
            pc.a * (s1 / pc.t0).ln() + pc.b * (s1 - pc.t0)
        };
    }
    if t > k.domain_end() {
        acc += k.total() * (t / k.domain_end()).ln();
    }
    acc
}

/// K-curves of one weight over a cube family.
#[derive(Clone, Debug)]
pub struct CurveFamily {
    pub label: String,
    pub cubes: Vec<DyadicCube>,
    pub curves: Vec<ConcaveCurve>,
    /// `(β, q)` when the family stands for `φ_{β,q} = (s^{−β}K)^q`
    pub params: Option<(f64, f64)>,
}

impl CurveFamily {
    pub fn k_curves(w: &WeightGrid, family: &CubeFamily) -> Result<Self> {
        use rayon::prelude::*;
        let curves = family.cubes.par_iter().map(|q| k_l1_linf(w, q)).collect::<Result<Vec<_>>>()?;
        Ok(CurveFamily { label: w.label().to_string(), cubes: family.cubes.clone(), curves, params: None })
    }
}

#[cfg(test)]
mod tests;
