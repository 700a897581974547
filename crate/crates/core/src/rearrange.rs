//! Decreasing rearrangements, `f**`, and the local dyadic maximal operator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::grid::{DyadicCube, Pyramid, WeightGrid};

/// One level set of a rearrangement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Plateau {
    pub value: f64,
    pub measure: f64,
}

/// A decreasing step function on `(0, total_measure)`: plateaus with
/// strictly decreasing values. Beyond `total_measure` the function is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DecreasingStep {
    plateaus: Vec<Plateau>,
    /// `ends[j]` = measure of plateaus `0..=j`
    ends: Vec<f64>,
    /// `masses[j]` = `∫_0^{ends[j]} f*`, correctly rounded
    masses: Vec<f64>,
}

impl DecreasingStep {
    /// Sorts `(value, measure)` pairs descending and merges bit-equal values.
    /// Cumulative measures and masses are summed exactly and rounded once.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("rearrangement of an empty set".into()));
        }
        if let Some(p) = pairs.iter().find(|(v, m)| !(*v >= 0.0 && v.is_finite() && *m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParameter(format!("bad plateau {p:?}")));
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut plateaus = Vec::new();
        let mut ends = Vec::new();
        let mut masses = Vec::new();
        let mut meas = ExactSum::new();
        let mut mass = ExactSum::new();
        let mut i = 0;
        while i < pairs.len() {
            let v = pairs[i].0;
            let mut here = ExactSum::new();
            while i < pairs.len() && pairs[i].0 == v {
                here.add(pairs[i].1);
                meas.add(pairs[i].1);
                mass.add_product(v, pairs[i].1);
                i += 1;
            }
            plateaus.push(Plateau { value: v, measure: here.value() });
            ends.push(meas.value());
            masses.push(mass.value());
        }
        Ok(DecreasingStep { plateaus, ends, masses })
    }

    pub fn plateaus(&self) -> &[Plateau] {
        &self.plateaus
    }

    /// Right endpoints of the plateaus.
    pub fn ends(&self) -> &[f64] {
        &self.ends
    }

    /// `∫_0^{ends[j]} f*` for each plateau end.
    pub fn cumulative_masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_measure(&self) -> f64 {
        *self.ends.last().unwrap()
    }

    pub fn mass(&self) -> f64 {
        *self.masses.last().unwrap()
    }

    /// Left endpoint of plateau `j`.
    pub fn start(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.ends[j - 1]
        }
    }

    fn mass_before(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.masses[j - 1]
        }
    }

    /// Index of the plateau containing `t` (right-continuous), `None` past the end.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let j = self.ends.partition_point(|&e| e <= t);
        (j < self.ends.len()).then_some(j)
    }

    /// `f*(t)`, right-continuous; zero from `total_measure` on.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.locate(t) {
            Some(j) => self.plateaus[j].value,
            None => 0.0,
        }
    }

    /// `∫_0^t f*`.
    pub fn integral_to(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.locate(t) {
            Some(j) => self.mass_before(j) + self.plateaus[j].value * (t - self.start(j)),
            None => self.mass(),
        }
    }

    /// Maps values through an increasing function, keeping measures.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<DecreasingStep> {
        DecreasingStep::from_pairs(self.plateaus.iter().map(|p| (f(p.value), p.measure)).collect())
    }
}

/// `(wχ_Q)*` as plateaus: sorted cell values, equal values merged.
pub fn rearrangement(w: &WeightGrid, q: &DyadicCube) -> Result<DecreasingStep> {
    w.check_cube(q)?;
    let h = w.cell_measure();
    let mut vals = w.cube_values(q);
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < vals.len() {
        let v = vals[i];
        let j = i + vals[i..].partition_point(|x| *x == v);
        pairs.push((v, (j - i) as f64 * h));
        i = j;
    }
    DecreasingStep::from_pairs(pairs)
}

/// `f**(t) = (1/t)∫_0^t f*`; past the support this is `mass/t`.
pub fn double_star(r: &DecreasingStep, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::TimeOutOfRange(t));
    }
    Ok(r.integral_to(t) / t)
}

/// `M_{Q₀}w`: each cell gets the largest average over dyadic cubes between
/// the cell and `Q₀`. The result is the restriction to `Q₀`, rescaled to a
/// grid on the whole base cube at level `L − ℓ(Q₀)`.
pub fn dyadic_maximal(w: &WeightGrid, q0: &DyadicCube) -> Result<WeightGrid> {
    let g = w.restrict(q0)?;
    let label = format!("M({})", g.label());
    maximal_of_local(&g, label)
}

fn maximal_of_local(g: &WeightGrid, label: String) -> Result<WeightGrid> {
    let (d, top) = (g.dim(), g.level());
    let pyr = Pyramid::new(g);
    let mut run = vec![pyr.sums(0)[0] / (1u64 << (d as u32 * top)) as f64];
    for l in 1..=top {
        let n = (1u64 << (d as u32 * (top - l))) as f64;
        let sums = pyr.sums(l);
        let side = 1usize << l;
        let next: Vec<f64> = (0..sums.len())
            .map(|i| {
                let parent = if d == 1 { i / 2 } else { ((i / side) / 2) * (side / 2) + (i % side) / 2 };
                run[parent].max(sums[i] / n)
            })
            .collect();
        run = next;
    }
    WeightGrid::new(d, top, run, label)
}

/// `M_{Q₀}(M_{Q₀}(wχ_{Q₀}))`, on the same rescaled grid as [`dyadic_maximal`].
pub fn iterated_maximal(w: &WeightGrid, q0: &DyadicCube) -> Result<WeightGrid> {
    let m = dyadic_maximal(w, q0)?;
    let label = format!("M({})", m.label());
    maximal_of_local(&m, label)
}
