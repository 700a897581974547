//! Packings `π = {Q_i}` and the averaging operators `S_π`.

use std::fmt;

use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::grid::{subcubes, DyadicCube, WeightGrid};
use crate::rearrange::DecreasingStep;

/// A set of pairwise disjoint dyadic cubes.
#[derive(Clone, Debug, PartialEq)]
pub struct Packing {
    cubes: Vec<DyadicCube>,
}

fn interleave(x: u32, y: u32) -> u64 {
    let spread = |v: u32| {
        let mut v = v as u64;
        v = (v | (v << 16)) & 0x0000_FFFF_0000_FFFF;
        v = (v | (v << 8)) & 0x00FF_00FF_00FF_00FF;
        v = (v | (v << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
        v = (v | (v << 2)) & 0x3333_3333_3333_3333;
        (v | (v << 1)) & 0x5555_5555_5555_5555
    };
    (spread(x) << 1) | spread(y)
}

/// The cells of a dyadic cube form one interval in Z-order.
fn z_range(q: &DyadicCube, level: u32) -> (u64, u64) {
    let d = q.dim as u32;
    let z = if d == 1 { q.coords[0] as u64 } else { interleave(q.coords[0], q.coords[1]) };
    let k = d * (level - q.level);
    (z << k, (z + 1) << k)
}

impl Packing {
    /// Validates disjointness against the grid's finest level.
    pub fn new(grid: &WeightGrid, mut cubes: Vec<DyadicCube>) -> Result<Self> {
        for q in &cubes {
            grid.check_cube(q)?;
        }
        cubes.sort_by_key(|q| (q.level, q.coords));
        let mut spans: Vec<(u64, u64, usize)> =
            cubes.iter().enumerate().map(|(i, q)| {
                let (a, b) = z_range(q, grid.level());
                (a, b, i)
            }).collect();
        spans.sort();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::OverlappingCubes(cubes[w[0].2], cubes[w[1].2]));
            }
        }
        Ok(Packing { cubes })
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }
    pub fn len(&self) -> usize {
        self.cubes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PackingPolicy {
    AllLevels,
    CzStopping,
    Explicit,
    Union,
}

impl fmt::Display for PackingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PackingPolicy::AllLevels => "all-levels",
            PackingPolicy::CzStopping => "cz-stopping",
            PackingPolicy::Explicit => "explicit",
            PackingPolicy::Union => "union",
        })
    }
}

/// A finite set of packings over which the sup defining the weighted
/// K-functional is taken.
#[derive(Clone, Debug, PartialEq)]
pub struct PackingFamily {
    pub packings: Vec<Packing>,
    pub policy: PackingPolicy,
}

impl PackingFamily {
    pub fn explicit(packings: Vec<Packing>) -> Self {
        PackingFamily { packings, policy: PackingPolicy::Explicit }
    }

    /// For each level from `ℓ(Q)` to `L`, the packing of all cubes of that level inside `Q`.
    pub fn all_levels(grid: &WeightGrid, within: &DyadicCube) -> Result<Self> {
        grid.check_cube(within)?;
        let subs = subcubes(grid, within);
        let packings = (within.level..=grid.level())
            .map(|l| Packing { cubes: subs.iter().filter(|c| c.level == l).copied().collect() })
            .collect();
        Ok(PackingFamily { packings, policy: PackingPolicy::AllLevels })
    }

    /// Calderón–Zygmund stopping-time packings of `h = f^p` inside `Q`: for each
    /// distinct `w`-weighted cube average `λ`, the maximal subcubes with average `≥ λ`.
    pub fn cz_stopping(f: &WeightGrid, w: &WeightGrid, p: f64, within: &DyadicCube) -> Result<Self> {
        let h = f.powf(p)?;
        let subs = subcubes(w, within);
        let avgs: Vec<f64> = subs.iter().map(|q| weighted_average(&h, w, q).0).collect();
        let mut thresholds = avgs.clone();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let mut packings = Vec::with_capacity(thresholds.len());
        for lam in thresholds {
            let mut chosen: Vec<DyadicCube> = Vec::new();
            // level-major order: a cube is maximal iff no chosen ancestor
            for (q, &a) in subs.iter().zip(&avgs) {
                if a >= lam && !chosen.iter().any(|c| c.contains(q)) {
                    chosen.push(*q);
                }
            }
            packings.push(Packing::new(w, chosen)?);
        }
        Ok(PackingFamily { packings, policy: PackingPolicy::CzStopping })
    }

    pub fn union(&self, other: &PackingFamily) -> PackingFamily {
        let mut packings = self.packings.clone();
        packings.extend(other.packings.iter().cloned());
        PackingFamily { packings, policy: PackingPolicy::Union }
    }
}

/// `((1/w(Q))∫_Q f w, w(Q))`.
fn weighted_average(f: &WeightGrid, w: &WeightGrid, q: &DyadicCube) -> (f64, f64) {
    let mut fw = ExactSum::new();
    let mut ws = ExactSum::new();
    for i in w.cube_indices(q) {
        fw.add_product(f.cells()[i], w.cells()[i]);
        ws.add(w.cells()[i]);
    }
    let ws = ws.value();
    (fw.value() / ws, ws * w.cell_measure())
}

/// `S_π f` on the union of the packing: one value per cube, with the cube's `w`-measure.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedFunction {
    pub cubes: Vec<DyadicCube>,
    pub values: Vec<f64>,
    pub w_measures: Vec<f64>,
}

pub fn packing_average(f: &WeightGrid, w: &WeightGrid, pi: &Packing) -> Result<PackedFunction> {
    if f.dim() != w.dim() || f.level() != w.level() {
        return Err(Error::InvalidParameter("f and w live on different grids".into()));
    }
    let mut values = Vec::with_capacity(pi.len());
    let mut w_measures = Vec::with_capacity(pi.len());
    for q in pi.cubes() {
        w.check_cube(q)?;
        let (v, m) = weighted_average(f, w, q);
        values.push(v);
        w_measures.push(m);
    }
    Ok(PackedFunction { cubes: pi.cubes.clone(), values, w_measures })
}

/// Rearrangement of `S_π f` with respect to `w(x)dx`.
pub fn weighted_rearrangement(s: &PackedFunction) -> Result<DecreasingStep> {
    DecreasingStep::from_pairs(s.values.iter().copied().zip(s.w_measures.iter().copied()).collect())
}

/// A packing-sup value with the index of the packing that attains it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KWeighted {
    pub value: f64,
    pub witness: usize,
}

fn sup_over<F: Fn(&DecreasingStep) -> f64>(
    f: &WeightGrid,
    w: &WeightGrid,
    p: f64,
    t: f64,
    family: &PackingFamily,
    eval: F,
) -> Result<KWeighted> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} < 1")));
    }
    if family.packings.iter().all(|p| p.is_empty()) {
        return Err(Error::InvalidParameter("empty packing family".into()));
    }
    let total = crate::grid::integrate(w, &DyadicCube::base(w.dim()))?;
    if !(t > 0.0) || t > total * (1.0 + 1e-12) {
        return Err(Error::TimeOutOfRange(t));
    }
    let h = if p == 1.0 { f.clone() } else { f.powf(p)? };
    let mut best = KWeighted { value: f64::NEG_INFINITY, witness: 0 };
    for (i, pi) in family.packings.iter().enumerate() {
        if pi.is_empty() {
            continue;
        }
        let r = weighted_rearrangement(&packing_average(&h, w, pi)?)?;
        let v = eval(&r);
        if v > best.value {
            best = KWeighted { value: v, witness: i };
        }
    }
    Ok(best)
}

/// `sup_π {∫_0^t (S_π|f|^p)^*_w}^{1/p}` over the family.
///
/// For `w ≡ 1`, `p = 1` and a family containing the finest packing this is
/// exactly `K(t, f; L¹, L∞)`: averaging is a contraction, so no coarser
/// packing can carry more mass on a set of measure `t`.
pub fn k_weighted(f: &WeightGrid, w: &WeightGrid, p: f64, t: f64, family: &PackingFamily) -> Result<KWeighted> {
    sup_over(f, w, p, t, family, |r| r.integral_to(t).powf(1.0 / p))
}

/// `sup_π (S_π|f|^p)^*_w(t)`: the pointwise packing profile.
pub fn packing_maximal(f: &WeightGrid, w: &WeightGrid, p: f64, t: f64, family: &PackingFamily) -> Result<KWeighted> {
    sup_over(f, w, p, t, family, |r| r.value_at(t))
}
