//! End-to-end runs: two weighted graphs are reduced to `H0` diagrams, their
//! difference becomes a virtual diagram on the union ground space, and the
//! heat invariants and bound reports of the induced walk are written out as
//! CSV and JSON tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    covering_bound, lipschitz_bound, lipschitz_witnesses, mass_tail_bound, sobolev_bound, sobolev_extremizer,
    BoundReport,
};
use crate::diagram::{h0_persistence, union_space, PointDiagram, VpdElement, WeightedGraph};
use crate::error::{Error, Result};
use crate::lattice::LatticeMap;
use crate::levy::{build_nu, JumpMeasure, JumpSampler, Profile};
use crate::metric::BirthDeathPoint;
use crate::mixtures::lipschitz_precondition;
use crate::spectral::heat::{heat_series_multi, HeatKernel, SeriesOptions};
use crate::spectral::invariants::{invariants_from_kernels, InvariantOptions, InvariantReport};
use crate::spectral::quadrature::{QuadratureSpec, GRID_MAX_RANK};
use crate::spectral::symbol::Symbol;
use crate::transport::rho_norm;

/// `steps` evenly spaced values from `start` to `stop`.
///
/// Serialized as `[start, stop, steps]`; parsed from `start:stop:steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64, usize)", into = "(f64, f64, usize)")]
pub struct Grid {
    start: f64,
    stop: f64,
    steps: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && start > 0.0 && stop > start) {
            return Err(Error::InvalidArgument(format!(
                "grid needs 0 < start < stop, got {start}:{stop}"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 steps, got {steps}"
            )));
        }
        Ok(Self { start, stop, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + h * i as f64
                }
            })
            .collect()
    }
}

impl TryFrom<(f64, f64, usize)> for Grid {
    type Error = Error;

    fn try_from((a, b, n): (f64, f64, usize)) -> Result<Self> {
        Grid::new(a, b, n)
    }
}

impl From<Grid> for (f64, f64, usize) {
    fn from(g: Grid) -> Self {
        (g.start, g.stop, g.steps)
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected start:stop:steps, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(bad());
        };
        Grid::new(
            a.parse().map_err(|_| bad())?,
            b.parse().map_err(|_| bad())?,
            n.parse().map_err(|_| bad())?,
        )
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.steps)
    }
}

/// Parameters of a Watts-Strogatz small-world graph with integer weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WattsStrogatz {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    /// Inclusive range of the uniform integer weights.
    pub weights: (u32, u32),
    pub seed: u64,
}

/// Ring lattice on `n` vertices joined to their `k` nearest neighbours, each
/// edge rewired with probability `p` to a uniform vertex (avoiding
/// self-loops and duplicates), with uniform integer weights.
pub fn generate_ws_graph(n: usize, k: usize, p: f64, weights: (u32, u32), seed: u64) -> Result<WeightedGraph> {
    if !(k >= 2 && k % 2 == 0 && n > k) {
        return Err(Error::InvalidArgument(format!(
            "need n > k ≥ 2 with k even, got n = {n}, k = {k}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "rewiring probability {p} outside [0, 1]"
        )));
    }
    let (lo, hi) = weights;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!(
            "weight range [{lo}, {hi}] must be positive and ordered"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![std::collections::BTreeSet::new(); n];
    let mut edges = Vec::with_capacity(n * k / 2);
    for j in 1..=k / 2 {
        for i in 0..n {
            let v = (i + j) % n;
            adj[i].insert(v);
            adj[v].insert(i);
            edges.push((i, v));
        }
    }
    for e in edges.iter_mut() {
        let (u, v) = *e;
        if !rng.random_bool(p) || adj[u].len() >= n - 1 {
            continue;
        }
        let mut w = rng.random_range(0..n);
        while w == u || adj[u].contains(&w) {
            w = rng.random_range(0..n);
        }
        adj[u].remove(&v);
        adj[v].remove(&u);
        adj[u].insert(w);
        adj[w].insert(u);
        *e = (u, w);
    }
    let weighted = edges
        .into_iter()
        .map(|(u, v)| (u, v, rng.random_range(lo..=hi) as f64))
        .collect();
    WeightedGraph::new(n, weighted)
}

/// Where a pipeline input graph comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File(PathBuf),
    Generated { watts_strogatz: WattsStrogatz },
}

impl GraphSource {
    pub fn load(&self) -> Result<WeightedGraph> {
        match self {
            GraphSource::File(path) => read_json(path),
            GraphSource::Generated { watts_strogatz: w } => generate_ws_graph(w.n, w.k, w.p, w.weights, w.seed),
        }
    }
}

/// Numerical knobs of a pipeline run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    /// Quadrature samples when the rank forces Monte Carlo.
    pub mc_samples: usize,
    pub series_tol: f64,
    pub resolvent_tol: f64,
    /// Radius `R` of the mass-tail report.
    pub tail_radius: f64,
    pub tail_samples: usize,
    pub covering_alpha: f64,
    /// Largest kernel values kept in the Lipschitz test function.
    pub lipschitz_support: usize,
    /// Random jump sums added to the Lipschitz witnesses.
    pub lipschitz_extra: usize,
    /// Depth of the resolvent section in the Sobolev extremizer report.
    pub sobolev_depth: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            mc_samples: 200_000,
            series_tol: 1e-6,
            resolvent_tol: 1e-5,
            tail_radius: 4.0,
            tail_samples: 100_000,
            covering_alpha: 0.01,
            lipschitz_support: 64,
            lipschitz_extra: 64,
            sobolev_depth: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub graph_a: GraphSource,
    pub graph_b: GraphSource,
    #[serde(default)]
    pub profile: Profile,
    pub t_grid: Grid,
    pub s_grid: Grid,
    /// `None` picks a 64-node grid up to rank 4 and Monte Carlo above.
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub trunc_radii: Vec<f64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: PipelineOptions,
}

impl PipelineConfig {
    /// Reads a config, resolving relative graph paths against the config's
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for src in [&mut cfg.graph_a, &mut cfg.graph_b] {
            if let GraphSource::File(p) = src {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if let Some(q) = &self.quadrature {
            q.validate()?;
        }
        if let Some(r) = self.trunc_radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "truncation radius must be positive, got {r}"
            )));
        }
        let o = &self.options;
        let positive = [
            ("series_tol", o.series_tol),
            ("resolvent_tol", o.resolvent_tol),
            ("tail_radius", o.tail_radius),
            ("covering_alpha", o.covering_alpha),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if o.tail_samples == 0 {
            return Err(Error::InvalidArgument("tail_samples must be positive".into()));
        }
        Ok(())
    }

    fn quadrature_for(&self, rank: usize) -> QuadratureSpec {
        self.quadrature.unwrap_or(if rank <= GRID_MAX_RANK {
            QuadratureSpec::Grid { nodes: 64 }
        } else {
            QuadratureSpec::MonteCarlo {
                samples: self.options.mc_samples,
                seed: self.seed,
            }
        })
    }
}

/// The virtual diagram `A - B` in both coordinate systems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VpdFile {
    /// Generators of the ground space, in index order.
    pub generators: Vec<BirthDeathPoint>,
    pub coefficients: Vec<i64>,
    pub diagram: PointDiagram,
    pub mass: f64,
    pub rho_to_zero: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestCheck {
    pub name: String,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub seed: u64,
    pub rank: usize,
    pub total_rate: f64,
    pub quadrature: QuadratureSpec,
    pub quadrature_converged: bool,
    /// Whether `ν(e_x - e_y) d1(x,y)² ≥ 1` holds for every pair.
    pub lipschitz_precondition: bool,
    pub cross_checks: Vec<ManifestCheck>,
    pub cross_checks_pass: bool,
    /// Pass flag of every bound report, keyed `theorem@t=...` or
    /// `theorem@s=...`.
    pub bounds: BTreeMap<String, bool>,
    /// Every bound whose hypotheses hold passed.
    pub bounds_pass: bool,
    /// Reports whose hypotheses fail for this measure; their flags are
    /// recorded but not required.
    pub bounds_without_hypotheses: Vec<String>,
    pub files: Vec<String>,
    pub config: PipelineConfig,
}

/// Everything a run produced, as written to disk.
#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub diagram_a: PointDiagram,
    pub diagram_b: PointDiagram,
    pub vpd: VpdFile,
    pub report: InvariantReport,
    pub bounds: BTreeMap<String, Vec<BoundReport>>,
    pub manifest: Manifest,
}

/// A CSV table of floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// 17 significant digits, `.` decimal point.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&x| format_float(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{}: bad number {f:?}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn emit_json<T: Serialize>(dir: &Path, name: &str, files: &mut Vec<String>, value: &T) -> Result<()> {
    write_json(&dir.join(name), value)?;
    files.push(name.to_string());
    Ok(())
}

const INVARIANT_COLUMNS: [&str; 5] = ["t", "return", "collision", "energy", "scale"];

fn invariant_row(k: &HeatKernel, levy_q: &crate::lattice::LevyMeasure) -> [f64; 4] {
    let ret = k.return_probability();
    let energy = k.energy(levy_q);
    [ret, k.collision(), energy, energy / ret]
}

/// Columns `t, return, collision, energy, scale`, one row per kernel.
pub fn invariant_table(kernels: &[HeatKernel], levy: &crate::lattice::LevyMeasure) -> Table {
    Table {
        header: INVARIANT_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows: kernels
            .iter()
            .map(|k| {
                let mut row = vec![k.t()];
                row.extend(invariant_row(k, levy));
                row
            })
            .collect(),
    }
}

/// Columns `s, resolvent`, from the time-integration route.
pub fn resolvent_table(report: &InvariantReport) -> Table {
    Table {
        header: vec!["s".into(), "resolvent".into()],
        rows: report
            .resolvents
            .iter()
            .map(|r| vec![r.s, r.resolvent.kernel])
            .collect(),
    }
}

/// The kernel's largest `keep` values (ties broken by lattice point), as a
/// finitely supported test function.
fn top_values(kernel: &HeatKernel, keep: usize) -> Vec<(Vec<i32>, f64)> {
    let mut pts: Vec<(Vec<i32>, f64)> = kernel.masses().iter().map(|(h, &v)| (h.clone(), v)).collect();
    pts.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    pts.truncate(keep);
    pts.sort_by(|a, b| a.0.cmp(&b.0));
    pts
}

/// Every bound report for a walk, grouped by theorem: Lipschitz, mass tail
/// and covering at the time of each kernel, Sobolev and its extremizer at
/// each `s`.
pub fn bound_reports(
    nu: &JumpMeasure,
    kernels: &[HeatKernel],
    ss: &[f64],
    quad: QuadratureSpec,
    o: &PipelineOptions,
    seed: u64,
) -> Result<BTreeMap<String, Vec<BoundReport>>> {
    let sym = Symbol::new(nu);
    let mut out = BTreeMap::new();

    let mut lip = Vec::new();
    let mut tail = Vec::new();
    let mut cover = Vec::new();
    for (i, k) in kernels.iter().enumerate() {
        let f = top_values(k, o.lipschitz_support);
        let support: LatticeMap = f.iter().cloned().collect();
        // Streams counted down from the top stay clear of the sampler's.
        let mut rng = JumpSampler::stream(seed, u64::MAX - i as u64);
        let mut gammas = lipschitz_witnesses(nu, &support, o.lipschitz_extra, &mut rng);
        gammas.shuffle(&mut rng);
        lip.push(lipschitz_bound(nu, &f, k.t(), &gammas, quad)?);
        tail.push(mass_tail_bound(nu, k.t(), o.tail_radius, Some((o.tail_samples, seed)))?);
        cover.push(covering_bound(k, o.covering_alpha, nu.space())?);
    }
    let rank = sym.rank();
    let mut sob = Vec::new();
    for &s in ss {
        sob.push(sobolev_bound(&sym, &[(vec![0; rank], 1.0)], s, quad)?);
        sob.push(sobolev_extremizer(&sym, s, o.sobolev_depth, quad)?);
    }
    out.insert("lipschitz".to_string(), lip);
    out.insert("mass_tail".to_string(), tail);
    out.insert("covering".to_string(), cover);
    out.insert("sobolev".to_string(), sob);
    Ok(out)
}

/// Manifest key of a report, such as `lipschitz@t=0.5` or `sobolev@s=2`.
pub fn bound_key(r: &BoundReport) -> String {
    match r.theorem.as_str() {
        "covering" => format!("covering@t={}", r.values.get("t").copied().unwrap_or(f64::NAN)),
        "sobolev" | "sobolev_extremizer" => format!("{}@s={}", r.theorem, r.parameter),
        _ => format!("{}@t={}", r.theorem, r.parameter),
    }
}

/// Runs the full chain and writes every output file into `output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let o = &cfg.options;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir.join("bounds"))?;

    let diagram_a = h0_persistence(&cfg.graph_a.load()?);
    let diagram_b = h0_persistence(&cfg.graph_b.load()?);
    let bd = union_space([&diagram_a, &diagram_b])?;
    let space = bd.ground();
    let rank = space.rank();
    let g: VpdElement = &diagram_a.to_vpd(&bd)? - &diagram_b.to_vpd(&bd)?;
    let vpd = VpdFile {
        generators: bd.points().to_vec(),
        coefficients: (0..rank).map(|i| g.coeff(i)).collect(),
        diagram: PointDiagram::from_vpd(&g, &bd),
        mass: g.mass(space),
        rho_to_zero: rho_norm(&g, space),
    };

    let nu = build_nu(space, &cfg.profile)?;
    let sym = Symbol::new(&nu);
    let levy = nu.levy_measure();
    let quad = cfg.quadrature_for(rank);
    quad.check_rank(rank)?;
    let ts = cfg.t_grid.values();
    let ss = cfg.s_grid.values();
    let series = SeriesOptions::with_tol(o.series_tol);
    let kernels = heat_series_multi(&levy, &ts, series)?;
    let inv_opts = InvariantOptions {
        series,
        resolvent_tol: o.resolvent_tol,
    };
    let report = invariants_from_kernels(&sym, &kernels, &ss, quad, inv_opts)?;

    let mut files = Vec::new();
    emit_json(dir, "diagrams_a.json", &mut files, &diagram_a)?;
    emit_json(dir, "diagrams_b.json", &mut files, &diagram_b)?;
    emit_json(dir, "vpd.json", &mut files, &vpd)?;

    write_table(&dir.join("invariants.csv"), &invariant_table(&kernels, &levy))?;
    files.push("invariants.csv".into());
    write_table(&dir.join("resolvent.csv"), &resolvent_table(&report))?;
    files.push("resolvent.csv".into());

    let mut radii = cfg.trunc_radii.clone();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii.push(f64::INFINITY);
    let mut trunc = Table {
        header: std::iter::once("radius")
            .chain(INVARIANT_COLUMNS)
            .map(String::from)
            .collect(),
        rows: Vec::new(),
    };
    for &r in &radii {
        let lv = if r.is_finite() {
            nu.truncate(r).levy_measure()
        } else {
            levy.clone()
        };
        // Truncation only removes atoms, so an equal count means nothing was cut.
        let ks = if lv.atoms().len() == levy.atoms().len() {
            kernels.clone()
        } else {
            heat_series_multi(&lv, &ts, series)?
        };
        for k in &ks {
            let mut row = vec![r, k.t()];
            row.extend(invariant_row(k, &lv));
            trunc.rows.push(row);
        }
    }
    write_table(&dir.join("truncation.csv"), &trunc)?;
    files.push("truncation.csv".into());

    let bounds = bound_reports(&nu, &kernels, &ss, quad, o, cfg.seed)?;
    let mut bound_flags = BTreeMap::new();
    let mut unconditioned = Vec::new();
    for (name, reports) in &bounds {
        emit_json(dir, &format!("bounds/{name}.json"), &mut files, reports)?;
        for r in reports {
            let key = bound_key(r);
            if !r.precondition {
                unconditioned.push(key.clone());
            }
            bound_flags.insert(key, r.pass);
        }
    }

    let cross_checks: Vec<ManifestCheck> = report
        .checks()
        .map(|(name, c)| ManifestCheck {
            name,
            discrepancy: c.discrepancy,
            tolerance: c.tolerance,
            pass: c.pass,
        })
        .collect();
    files.push("manifest.json".into());
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        rank,
        total_rate: nu.total_rate(),
        quadrature: quad,
        quadrature_converged: report.quadrature_converged,
        lipschitz_precondition: lipschitz_precondition(&nu),
        cross_checks_pass: cross_checks.iter().all(|c| c.pass),
        cross_checks,
        bounds_pass: bound_flags.iter().all(|(k, &p)| p || unconditioned.contains(k)),
        bounds: bound_flags,
        bounds_without_hypotheses: unconditioned,
        files,
        config: cfg.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;

    Ok(PipelineOutcome {
        diagram_a,
        diagram_b,
        vpd,
        report,
        bounds,
        manifest,
    })
}
