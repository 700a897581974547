//! Weights on dyadic grids over the base cube `[0,1)^d`, dyadic cube
//! addressing, exact integration, generators and file formats.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSum;

/// A dyadic subcube of `[0,1)^d`: level `ℓ` and `d` integer coordinates in `[0, 2^ℓ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub dim: u8,
    pub level: u32,
    pub coords: [u32; 2],
}

impl DyadicCube {
    pub fn base(dim: u8) -> Self {
        DyadicCube { dim, level: 0, coords: [0, 0] }
    }

    pub fn new(dim: u8, level: u32, coords: [u32; 2]) -> Self {
        let coords = if dim == 1 { [coords[0], 0] } else { coords };
        DyadicCube { dim, level, coords }
    }

    /// Lebesgue measure `2^{-dℓ}`.
    pub fn measure(&self) -> f64 {
        (-(self.dim as i32 * self.level as i32) as f64).exp2()
    }

    /// Whether `other` is contained in `self` (a cube contains itself).
    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.level < self.level || other.dim != self.dim {
            return false;
        }
        let shift = other.level - self.level;
        (0..self.dim as usize).all(|i| other.coords[i] >> shift == self.coords[i])
    }

    pub fn overlaps(&self, other: &DyadicCube) -> bool {
        self.contains(other) || other.contains(self)
    }

    /// The `2^d` children in lexicographic order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let l = self.level + 1;
        let [x, y] = self.coords;
        if self.dim == 1 {
            vec![Self::new(1, l, [2 * x, 0]), Self::new(1, l, [2 * x + 1, 0])]
        } else {
            let mut v = Vec::with_capacity(4);
            for i in 0..2 {
                for j in 0..2 {
                    v.push(Self::new(2, l, [2 * x + i, 2 * y + j]));
                }
            }
            v
        }
    }

    /// Parses `ℓ:c0` (d=1) or `ℓ:c0:c1` (d=2).
    pub fn parse(s: &str, dim: u8) -> Result<Self> {
        let bad = || Error::BadCubeAddress(s.to_string());
        let parts: Vec<u32> = s
            .split(':')
            .map(|p| p.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if parts.len() != dim as usize + 1 {
            return Err(bad());
        }
        let level = parts[0];
        if level >= 32 {
            return Err(bad());
        }
        let c1 = if dim == 2 { parts[2] } else { 0 };
        let q = Self::new(dim, level, [parts[1], c1]);
        if q.coords.iter().take(dim as usize).any(|&c| c >= 1u32 << level) {
            return Err(bad());
        }
        Ok(q)
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "{}:{}", self.level, self.coords[0])
        } else {
            write!(f, "{}:{}:{}", self.level, self.coords[0], self.coords[1])
        }
    }
}

impl Serialize for DyadicCube {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A strictly positive piecewise-constant function on the `2^{dL}` cells of
/// the base cube, stored row-major (first coordinate is the row).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightGrid {
    dim: u8,
    level: u32,
    cells: Vec<f64>,
    label: String,
}

impl WeightGrid {
    pub fn new(dim: u8, level: u32, cells: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1,2}}")));
        }
        if dim as u32 * level > 28 {
            return Err(Error::InvalidGrid(format!("level {level} too fine for d={dim}")));
        }
        let expected = 1usize << (dim as u32 * level);
        if cells.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "expected {expected} cells, got {}",
                cells.len()
            )));
        }
        if let Some((i, v)) = cells.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidGrid(format!("cell {i} = {v} is not finite positive")));
        }
        Ok(WeightGrid { dim, level, cells, label: label.into() })
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }
    pub fn level(&self) -> u32 {
        self.level
    }
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Cells per axis, `2^L`.
    pub fn side(&self) -> usize {
        1usize << self.level
    }

    /// Measure of one cell, `2^{-dL}`.
    pub fn cell_measure(&self) -> f64 {
        (-((self.dim as u32 * self.level) as f64)).exp2()
    }

    pub fn check_cube(&self, q: &DyadicCube) -> Result<()> {
        let ok = q.dim == self.dim
            && q.level <= self.level
            && q.coords.iter().take(self.dim as usize).all(|&c| (c as u64) < (1u64 << q.level));
        if ok {
            Ok(())
        } else {
            Err(Error::CubeOutsideGrid(*q))
        }
    }

    /// Number of cells inside a cube at level `ℓ`.
    pub fn cells_in(&self, q: &DyadicCube) -> usize {
        1usize << (self.dim as u32 * (self.level - q.level))
    }

    /// Cell indices covered by `q`, in row-major order.
    pub fn cube_indices(&self, q: &DyadicCube) -> Vec<usize> {
        let s = 1usize << (self.level - q.level);
        let x0 = q.coords[0] as usize * s;
        if self.dim == 1 {
            (x0..x0 + s).collect()
        } else {
            let n = self.side();
            let y0 = q.coords[1] as usize * s;
            let mut v = Vec::with_capacity(s * s);
            for x in x0..x0 + s {
                v.extend((y0..y0 + s).map(|y| x * n + y));
            }
            v
        }
    }

    /// Cell values covered by `q`, row-major.
    pub fn cube_values(&self, q: &DyadicCube) -> Vec<f64> {
        self.cube_indices(q).into_iter().map(|i| self.cells[i]).collect()
    }

    /// The restriction to `q`, rescaled to a grid over the whole base cube at level `L − ℓ`.
    pub fn restrict(&self, q: &DyadicCube) -> Result<WeightGrid> {
        self.check_cube(q)?;
        WeightGrid::new(
            self.dim,
            self.level - q.level,
            self.cube_values(q),
            format!("{}|{}", self.label, q),
        )
    }

    /// Cellwise transform; the result must stay strictly positive.
    pub fn map(&self, f: impl Fn(f64) -> f64, label: impl Into<String>) -> Result<WeightGrid> {
        WeightGrid::new(self.dim, self.level, self.cells.iter().map(|&v| f(v)).collect(), label)
    }

    pub fn scale(&self, c: f64) -> Result<WeightGrid> {
        self.map(|v| c * v, format!("{}*{}", c, self.label))
    }

    /// Cellwise power `w^p` (of cell values, not averages of powers).
    pub fn powf(&self, p: f64) -> Result<WeightGrid> {
        self.map(|v| v.powf(p), format!("({})^{}", self.label, p))
    }

    /// Averages `k` levels away; exact in the sense that cell masses are summed exactly.
    pub fn coarsen(&self, k: u32) -> Result<WeightGrid> {
        if k > self.level {
            return Err(Error::InvalidParameter(format!("cannot coarsen L={} by {k}", self.level)));
        }
        let pyr = Pyramid::new(self);
        let l = self.level - k;
        let n = (1u64 << (self.dim as u32 * k)) as f64;
        let cells = pyr.sums(l).iter().map(|s| s / n).collect();
        WeightGrid::new(self.dim, l, cells, self.label.clone())
    }
}

/// `∫_Q w` as an unrounded exact sum of cell values (not yet scaled by the cell measure).
pub fn integrate_exact(w: &WeightGrid, q: &DyadicCube) -> Result<ExactSum> {
    w.check_cube(q)?;
    Ok(w.cube_indices(q).into_iter().map(|i| w.cells[i]).collect())
}

/// `∫_Q w`, correctly rounded. Independent of summation order, so any two
/// decompositions of the same mass agree to the last bit.
pub fn integrate(w: &WeightGrid, q: &DyadicCube) -> Result<f64> {
    Ok(integrate_exact(w, q)?.value() * w.cell_measure())
}

/// Correctly rounded cube sums of a cell array at every level, built
/// bottom-up along the dyadic tree without intermediate rounding.
#[derive(Clone, Debug)]
pub struct Pyramid {
    dim: u8,
    levels: Vec<Vec<f64>>,
}

impl Pyramid {
    pub fn new(w: &WeightGrid) -> Self {
        Self::from_cells(w.dim, w.level, &w.cells)
    }

    pub fn from_cells(dim: u8, level: u32, cells: &[f64]) -> Self {
        let mut levels = vec![Vec::new(); level as usize + 1];
        levels[level as usize] = cells.to_vec();
        let mut cur: Vec<ExactSum> = cells
            .iter()
            .map(|&v| {
                let mut s = ExactSum::new();
                s.add(v);
                s
            })
            .collect();
        for l in (0..level).rev() {
            let n = 1usize << l;
            let next: Vec<ExactSum> = if dim == 1 {
                (0..n)
                    .map(|i| {
                        let mut s = cur[2 * i].clone();
                        s.merge(&cur[2 * i + 1]);
                        s
                    })
                    .collect()
            } else {
                let m = 2 * n;
                let mut v = Vec::with_capacity(n * n);
                for x in 0..n {
                    for y in 0..n {
                        let mut s = cur[2 * x * m + 2 * y].clone();
                        s.merge(&cur[2 * x * m + 2 * y + 1]);
                        s.merge(&cur[(2 * x + 1) * m + 2 * y]);
                        s.merge(&cur[(2 * x + 1) * m + 2 * y + 1]);
                        v.push(s);
                    }
                }
                v
            };
            levels[l as usize] = next.iter().map(ExactSum::value).collect();
            cur = next;
        }
        Pyramid { dim, levels }
    }

    /// Rounded cell sums of every cube at level `ℓ`, row-major.
    pub fn sums(&self, level: u32) -> &[f64] {
        &self.levels[level as usize]
    }

    pub fn sum(&self, q: &DyadicCube) -> f64 {
        self.levels[q.level as usize][cube_slot(q)]
    }

    /// Average of the cell values over `q`.
    pub fn mean(&self, q: &DyadicCube) -> f64 {
        let top = self.levels.len() as u32 - 1;
        let n = (1u64 << (self.dim as u32 * (top - q.level))) as f64;
        self.sum(q) / n
    }
}

/// Row-major index of a cube among the cubes of its level.
pub fn cube_slot(q: &DyadicCube) -> usize {
    if q.dim == 1 {
        q.coords[0] as usize
    } else {
        ((q.coords[0] as usize) << q.level) + q.coords[1] as usize
    }
}

/// Which cubes the suprema range over.
#[derive(Clone, Debug, PartialEq)]
pub enum CubePolicy {
    AllDyadic,
    SingleLevel(u32),
    Custom(Vec<DyadicCube>),
}

impl CubePolicy {
    /// Accepts `all`, `all-dyadic`, `level:<ℓ>`, or a `;`-separated list of cube addresses.
    pub fn parse(s: &str, dim: u8) -> Result<Self> {
        let s = s.trim();
        if s == "all" || s == "all-dyadic" {
            return Ok(CubePolicy::AllDyadic);
        }
        if let Some(l) = s.strip_prefix("level:") {
            return l
                .parse()
                .map(CubePolicy::SingleLevel)
                .map_err(|_| Error::MalformedSpec(s.to_string()));
        }
        let list = s.strip_prefix("custom:").unwrap_or(s);
        list.split(';')
            .map(|a| DyadicCube::parse(a, dim))
            .collect::<Result<Vec<_>>>()
            .map(CubePolicy::Custom)
    }
}

impl fmt::Display for CubePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CubePolicy::AllDyadic => write!(f, "all-dyadic"),
            CubePolicy::SingleLevel(l) => write!(f, "level:{l}"),
            CubePolicy::Custom(v) => {
                write!(f, "custom:")?;
                for (i, q) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{q}")?;
                }
                Ok(())
            }
        }
    }
}

/// A finite list of cubes standing in for "all cubes Q".
#[derive(Clone, Debug, PartialEq)]
pub struct CubeFamily {
    pub cubes: Vec<DyadicCube>,
    pub policy: CubePolicy,
}

impl CubeFamily {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
    pub fn iter(&self) -> std::slice::Iter<'_, DyadicCube> {
        self.cubes.iter()
    }
}

fn level_cubes(dim: u8, l: u32) -> impl Iterator<Item = DyadicCube> {
    let n = 1u32 << l;
    let m = if dim == 1 { 1 } else { n };
    (0..n).flat_map(move |x| (0..m).map(move |y| DyadicCube::new(dim, l, [x, y])))
}

/// Cubes of `grid` selected by `policy`, level-major then lexicographic.
pub fn enumerate_cubes(grid: &WeightGrid, policy: &CubePolicy) -> Result<CubeFamily> {
    let cubes = match policy {
        CubePolicy::AllDyadic => (0..=grid.level).flat_map(|l| level_cubes(grid.dim, l)).collect(),
        CubePolicy::SingleLevel(l) => {
            if *l > grid.level {
                return Err(Error::InvalidParameter(format!("level {l} > L = {}", grid.level)));
            }
            level_cubes(grid.dim, *l).collect()
        }
        CubePolicy::Custom(list) => {
            let mut v = list.clone();
            for q in &v {
                grid.check_cube(q)?;
            }
            v.sort_by_key(|q| (q.level, q.coords));
            if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateCube(w[0]));
            }
            v
        }
    };
    Ok(CubeFamily { cubes, policy: policy.clone() })
}

/// Dyadic subcubes of `q` down to the cell level, level-major.
pub fn subcubes(grid: &WeightGrid, q: &DyadicCube) -> Vec<DyadicCube> {
    let mut out = vec![*q];
    let mut frontier = vec![*q];
    for _ in q.level..grid.level {
        frontier = frontier.iter().flat_map(|c| c.children()).collect();
        frontier.sort_by_key(|c| c.coords);
        out.extend_from_slice(&frontier);
    }
    out
}

/// Parsed weight generator descriptor.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Const(f64),
    Pow(f64),
    Step(Vec<f64>),
    RandLognormal { seed: u64, sigma: f64 },
    File(PathBuf),
}

impl Generator {
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::MalformedSpec(spec.to_string());
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad()).and_then(|v| if v.is_finite() { Ok(v) } else { Err(bad()) });
        let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
        match kind {
            "const" => {
                let c = num(rest)?;
                if c <= 0.0 {
                    return Err(Error::NonpositiveSpecValue(c));
                }
                Ok(Generator::Const(c))
            }
            "pow" => {
                let a = num(rest)?;
                if a <= -1.0 {
                    return Err(Error::NotIntegrable(a));
                }
                Ok(Generator::Pow(a))
            }
            "step" => {
                let vals = rest.split(',').map(num).collect::<Result<Vec<_>>>()?;
                if let Some(&v) = vals.iter().find(|v| **v <= 0.0) {
                    return Err(Error::NonpositiveSpecValue(v));
                }
                Ok(Generator::Step(vals))
            }
            "rand" => {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() != 3 || parts[1] != "lognormal" {
                    return Err(bad());
                }
                let seed = parts[0].trim().parse::<u64>().map_err(|_| bad())?;
                let sigma = num(parts[2])?;
                if sigma < 0.0 {
                    return Err(bad());
                }
                Ok(Generator::RandLognormal { seed, sigma })
            }
            "file" if !rest.is_empty() => Ok(Generator::File(PathBuf::from(rest))),
            _ => Err(bad()),
        }
    }
}

/// Exact average of `x^a` over the cell `[k, k+1)·2^{-L}`.
pub fn pow_cell(a: f64, level: u32, k: usize) -> f64 {
    let b = a + 1.0;
    // ((k+1)^b − k^b)/b without cancellation
    let diff = if k == 0 {
        1.0 / b
    } else {
        let kf = k as f64;
        kf.powf(b) * (b * (1.0 / kf).ln_1p()).exp_m1() / b
    };
    diff * (-(level as f64) * a).exp2()
}

/// Builds a grid from a generator descriptor.
///
/// `rand:seed:lognormal:σ` draws cell `i` (row-major) as `exp(σ·Z_i)` with
/// `Z_i` the `i`-th standard normal from a ChaCha8 stream seeded with
/// `seed` through `seed_from_u64`; the stream is platform independent.
pub fn make_grid(dim: u8, level: u32, spec: &str) -> Result<WeightGrid> {
    let gen = Generator::parse(spec)?;
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1,2}}")));
    }
    if dim as u32 * level > 28 {
        return Err(Error::InvalidGrid(format!("level {level} too fine for d={dim}")));
    }
    let n = 1usize << (dim as u32 * level);
    let cells = match &gen {
        Generator::Const(c) => vec![*c; n],
        Generator::Pow(a) => {
            if dim != 1 {
                return Err(Error::MalformedSpec(format!("{spec}: pow is one-dimensional")));
            }
            (0..n).map(|k| pow_cell(*a, level, k)).collect()
        }
        Generator::Step(vals) => {
            let m = vals.len();
            let l = (0..=level)
                .find(|&l| 1usize << (dim as u32 * l) == m)
                .ok_or_else(|| Error::MalformedSpec(format!("{spec}: {m} values is not 2^(d·ℓ) for ℓ ≤ {level}")))?;
            let shift = level - l;
            let side = 1usize << level;
            (0..n)
                .map(|i| {
                    if dim == 1 {
                        vals[i >> shift]
                    } else {
                        let (x, y) = (i / side, i % side);
                        vals[((x >> shift) << l) + (y >> shift)]
                    }
                })
                .collect()
        }
        Generator::RandLognormal { seed, sigma } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    (sigma * z).exp()
                })
                .collect()
        }
        Generator::File(path) => {
            let g = load_weight(path, Format::from_path(path))?;
            if g.dim != dim || g.level != level {
                return Err(Error::HeaderMismatch {
                    path: path.clone(),
                    detail: format!("file has d={} L={}, requested d={dim} L={level}", g.dim, g.level),
                });
            }
            return Ok(g);
        }
    };
    WeightGrid::new(dim, level, cells, spec)
}

/// On-disk weight formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// JSON for `.json`, CSV otherwise.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GridFile {
    d: u8,
    #[serde(rename = "L")]
    level: u32,
    cells: Vec<f64>,
    label: String,
}

fn check_loaded(path: &Path, d: u8, level: u32, cells: &[f64]) -> Result<()> {
    if d != 1 && d != 2 || d as u32 * level > 28 {
        return Err(Error::HeaderMismatch { path: path.into(), detail: format!("unsupported d={d} L={level}") });
    }
    let expected = 1usize << (d as u32 * level);
    if cells.len() != expected {
        return Err(Error::CellCountMismatch { path: path.into(), expected, found: cells.len() });
    }
    if let Some((index, &value)) = cells.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::NonpositiveCell { path: path.into(), index, value });
    }
    Ok(())
}

fn parse_header(path: &Path, line: &str) -> Result<(u8, u32)> {
    let mismatch = || Error::HeaderMismatch { path: path.into(), detail: format!("bad header `{line}`") };
    let rest = line.trim().strip_prefix('#').ok_or_else(mismatch)?;
    let mut it = rest.split_whitespace();
    if it.next() != Some("rhlab") {
        return Err(mismatch());
    }
    let d = it.next().and_then(|s| s.strip_prefix("d=")).and_then(|s| s.parse().ok()).ok_or_else(mismatch)?;
    let l = it.next().and_then(|s| s.strip_prefix("L=")).and_then(|s| s.parse().ok()).ok_or_else(mismatch)?;
    if it.next().is_some() {
        return Err(mismatch());
    }
    Ok((d, l))
}

/// Reads a weight file.
pub fn load_weight(path: impl AsRef<Path>, format: Format) -> Result<WeightGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let (d, level, cells, label) = match format {
        Format::Csv => {
            let mut lines = text.lines().filter(|l| !l.trim().is_empty());
            let header = lines.next().ok_or_else(|| Error::HeaderMismatch { path: path.into(), detail: "empty file".into() })?;
            let (d, level) = parse_header(path, header)?;
            let cells = lines
                .enumerate()
                .map(|(i, l)| {
                    l.trim().parse::<f64>().map_err(|e| Error::Parse { path: path.into(), detail: format!("line {}: {e}", i + 2) })
                })
                .collect::<Result<Vec<_>>>()?;
            (d, level, cells, format!("file:{}", path.display()))
        }
        Format::Json => {
            let f: GridFile =
                serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), detail: e.to_string() })?;
            (f.d, f.level, f.cells, f.label)
        }
    };
    check_loaded(path, d, level, &cells)?;
    WeightGrid::new(d, level, cells, label)
}

/// Writes a weight file. Values use the shortest decimal that reads back to the same double.
pub fn save_weight(grid: &WeightGrid, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        Format::Csv => {
            let mut s = format!("# rhlab d={} L={}\n", grid.dim, grid.level);
            for v in &grid.cells {
                s.push_str(&format!("{v}\n"));
            }
            s
        }
        Format::Json => {
            let f = GridFile { d: grid.dim, level: grid.level, cells: grid.cells.clone(), label: grid.label.clone() };
            serde_json::to_string(&f).expect("grid serializes") + "\n"
        }
    };
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}
