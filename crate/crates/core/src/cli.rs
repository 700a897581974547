//! The `rhlab` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 I/O or ingestion error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::grid::{load_weight, make_grid, save_weight, CubePolicy, DyadicCube, Format, Generator, WeightGrid};
use crate::kcalc::{holmstedt_curve, k_l1_linf, k_weighted, PackingFamily};
use crate::rearrange::rearrangement;
use crate::report::{analyze, AnalyzeConfig};
use crate::suites::{run_suite, SuiteConfig, SuiteOutcome};
use crate::weights::IndexConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rhlab", version, about = "Reverse Hölder weights on dyadic grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Constants, indices, classifications and theorem checks for one weight (JSON)
    Analyze(RunConfig),
    /// Run a verification suite
    Verify(RunConfig),
    /// Dump a curve as two-column CSV
    Curve(RunConfig),
    /// Convert a weight file between CSV and JSON (`--weight file:in --out out`)
    Convert(RunConfig),
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// generator: const:c | pow:a | step:v0,v1,.. | rand:seed:lognormal:σ | file:path
    #[arg(long)]
    pub weight: Option<String>,
    /// dimension, 1 or 2 [default: 1, or the file header]
    #[arg(long)]
    pub dim: Option<u8>,
    /// refinement level L [default: 10, or the file header]
    #[arg(long)]
    pub level: Option<u32>,
    /// exponents p
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// secondary Lorentz exponents q
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// a.i. constant cap of the index estimator
    #[arg(long, default_value_t = crate::indices::DEFAULT_CAP)]
    pub cap: f64,
    /// window fractions γ tried by the index estimator
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// cube family: all | level:ℓ | ℓ:x[:y];ℓ:x[:y];...
    #[arg(long, default_value = "all")]
    pub cubes: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// random cases per suite (suite default if absent)
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// comparability radius R for two-sided equivalences
    #[arg(long)]
    pub radius: Option<f64>,
    /// rearrange | herz | rhp | llogl | lorentz | acks | stromberg | fujii | extrapolation | packing | gehring | all
    #[arg(long)]
    pub suite: Option<String>,
    /// k | rearr | holmstedt:θ:q | weighted-k
    #[arg(long)]
    pub kind: Option<String>,
    /// cube address ℓ:x[:y]
    #[arg(long)]
    pub cube: Option<String>,
}

impl RunConfig {
    fn index(&self) -> Result<IndexConfig> {
        let mut ix = IndexConfig { cap: self.cap, ..IndexConfig::default() };
        if let Some(g) = &self.gamma {
            ix.gammas = g.clone();
        }
        if !(ix.cap > 1.0) || ix.gammas.is_empty() || ix.gammas.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return Err(Error::InvalidParameter(format!("cap {} / gamma {:?}", ix.cap, ix.gammas)));
        }
        Ok(ix)
    }

    fn weight_spec(&self) -> Result<&str> {
        self.weight.as_deref().ok_or_else(|| Error::InvalidParameter("--weight is required".into()))
    }

    /// The weight grid; `file:` specs take their shape from the header unless `--dim`/`--level` are given.
    pub fn grid(&self) -> Result<WeightGrid> {
        let spec = self.weight_spec()?;
        if let Generator::File(path) = Generator::parse(spec)? {
            let g = load_weight(&path, Format::from_path(&path))?;
            if self.dim.is_some_and(|d| d != g.dim()) || self.level.is_some_and(|l| l != g.level()) {
                return Err(Error::HeaderMismatch {
                    path,
                    detail: format!("file has d={} L={}, requested {:?}/{:?}", g.dim(), g.level(), self.dim, self.level),
                });
            }
            return Ok(g);
        }
        make_grid(self.dim.unwrap_or(1), self.level.unwrap_or(10), spec)
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let res = match &cli.command {
        Command::Analyze(c) => cmd_analyze(c),
        Command::Verify(c) => cmd_verify(c),
        Command::Curve(c) => cmd_curve(c),
        Command::Convert(c) => cmd_convert(c),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rhlab: error[{}]: {e}", e.code());
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).and_then(|_| so.flush()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

pub fn cmd_analyze(c: &RunConfig) -> Result<i32> {
    let w = c.grid()?;
    let cfg = AnalyzeConfig {
        ps: c.p.clone().unwrap_or_else(|| vec![1.5, 2.0, 3.0]),
        qs: c.q.clone().unwrap_or_else(|| vec![2.0]),
        policy: CubePolicy::parse(&c.cubes, w.dim())?,
        index: c.index()?,
        radius: c.radius,
    };
    let rep = analyze(&w, &cfg)?;
    let mut text = serde_json::to_string_pretty(&rep).expect("report serializes");
    text.push('\n');
    emit(c.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn fmt_case_line(suite: &str, id: &str, case: &crate::weights::CaseOutcome) -> String {
    let tag = match (case.asserted, case.pass) {
        (false, _) => "NOTE",
        (true, true) => "PASS",
        (true, false) => "FAIL",
    };
    let mut s = format!("{tag} {suite}/{id} {}", case.label);
    for (k, v) in &case.values {
        let _ = write!(s, " {k}={v}");
    }
    if let Some(n) = &case.note {
        let _ = write!(s, " # {n}");
    }
    s
}

/// The text stream printed by `verify`.
pub fn render_outcomes(outcomes: &[SuiteOutcome]) -> String {
    let mut s = String::new();
    let (mut n, mut failed, mut notes) = (0usize, 0usize, 0usize);
    for o in outcomes {
        for r in &o.reports {
            for c in &r.cases {
                n += 1;
                if !c.asserted {
                    notes += 1;
                } else if !c.pass {
                    failed += 1;
                }
                s.push_str(&fmt_case_line(&o.suite, &r.id, c));
                s.push('\n');
            }
        }
        let _ = writeln!(s, "suite {} {}", o.suite, if o.pass { "PASS" } else { "FAIL" });
    }
    let _ = writeln!(s, "total {n} cases, {failed} failed, {notes} not asserted");
    s
}

pub fn cmd_verify(c: &RunConfig) -> Result<i32> {
    let suite = c.suite.as_deref().ok_or_else(|| Error::InvalidParameter("--suite is required".into()))?;
    let cfg = SuiteConfig { seed: c.seed, cases: c.cases, radius: c.radius, index: c.index()? };
    let outcomes = run_suite(suite, &cfg)?;
    let text = render_outcomes(&outcomes);
    match &c.out {
        Some(p) => {
            let mut json = serde_json::to_string_pretty(&outcomes).expect("outcomes serialize");
            json.push('\n');
            emit(Some(p), &json)?;
            emit(None, &text)?;
        }
        None => emit(None, &text)?,
    }
    Ok(if outcomes.iter().all(|o| o.pass) { EXIT_OK } else { EXIT_FAILED })
}

/// Rows `(t, value)` of a named curve on `cube`.
pub fn curve_rows(w: &WeightGrid, kind: &str, cube: &DyadicCube, p: f64) -> Result<Vec<(f64, f64)>> {
    match kind {
        "k" => Ok(k_l1_linf(w, cube)?.breakpoints().collect()),
        "rearr" => {
            let r = rearrangement(w, cube)?;
            let mut rows: Vec<(f64, f64)> = r.plateaus().iter().enumerate().map(|(j, pl)| (r.start(j), pl.value)).collect();
            rows.push((r.total_measure(), 0.0));
            Ok(rows)
        }
        "weighted-k" => {
            // f = w against Lebesgue measure, all-level packings of the cube, t at cell multiples
            let one = make_grid(w.dim(), w.level(), "const:1")?;
            let fam = PackingFamily::all_levels(&one, cube)?;
            let n = w.cells_in(cube);
            let h = w.cell_measure();
            let mut rows = vec![(0.0, 0.0)];
            for i in 1..=n {
                let t = i as f64 * h;
                rows.push((t, k_weighted(w, &one, p, t, &fam)?.value));
            }
            Ok(rows)
        }
        _ => {
            let bad = || Error::InvalidParameter(format!("unknown curve kind {kind:?}"));
            let rest = kind.strip_prefix("holmstedt:").ok_or_else(bad)?;
            let (th, q) = rest.split_once(':').ok_or_else(bad)?;
            let theta: f64 = th.parse().map_err(|_| bad())?;
            let q: f64 = q.parse().map_err(|_| bad())?;
            let k = k_l1_linf(w, cube)?;
            let h = holmstedt_curve(&k, theta, q)?;
            Ok(k.breakpoints().map(|(t, _)| {
                let outer = t.powf(1.0 - theta);
                (outer, h.eval(outer))
            }).collect())
        }
    }
}

pub fn cmd_curve(c: &RunConfig) -> Result<i32> {
    let w = c.grid()?;
    let kind = c.kind.as_deref().unwrap_or("k");
    let cube = match &c.cube {
        Some(s) => DyadicCube::parse(s, w.dim())?,
        None => DyadicCube::base(w.dim()),
    };
    w.check_cube(&cube)?;
    let p = c.p.as_ref().and_then(|v| v.first().copied()).unwrap_or(1.0);
    let rows = curve_rows(&w, kind, &cube, p)?;
    let mut s = format!("# curve kind={kind} cube={cube}\n");
    for (t, v) in rows {
        let _ = writeln!(s, "{t},{v}");
    }
    emit(c.out.as_deref(), &s)?;
    Ok(EXIT_OK)
}

pub fn cmd_convert(c: &RunConfig) -> Result<i32> {
    let out = c.out.as_deref().ok_or_else(|| Error::InvalidParameter("--out is required".into()))?;
    if !c.weight_spec()?.starts_with("file:") {
        return Err(Error::InvalidParameter("convert expects --weight file:<path>".into()));
    }
    let w = c.grid()?;
    save_weight(&w, out, Format::from_path(out))?;
    Ok(EXIT_OK)
}

/// Builds the global thread pool from `RHLAB_THREADS` if set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RHLAB_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| Error::InvalidParameter(format!("RHLAB_THREADS={v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    Ok(())
}
