//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use vpdheat::bounds::BoundReport;
use vpdheat::diagram::{h0_persistence, PointDiagram, VpdElement, WeightedGraph};
use vpdheat::mixtures::{lipschitz_precondition, majorization_suite, MixtureMeasure};
use vpdheat::montecarlo::{endpoint_histogram, estimate_collision, estimate_return, tail_estimates, EstimatorResult};
use vpdheat::pipeline::{
    bound_key, bound_reports, format_float, generate_ws_graph, invariant_table, read_json, resolvent_table,
    run_pipeline, write_table, Grid, PipelineConfig, PipelineOptions, VpdFile,
};
use vpdheat::spectral::invariants::CrossCheck;
use vpdheat::spectral::{
    heat_fourier, heat_series, heat_series_multi, invariants_from_kernels, Estimate, InvariantOptions, QuadratureSpec,
    SeriesOptions, Symbol,
};
use vpdheat::transport::{rho as rho_distance, rho_norm};

use crate::input::{diagram_pair, WalkArgs};
use crate::CliError;

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(vpdheat::Error::from)?;
            }
            fs::write(path, text).map_err(vpdheat::Error::from)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(vpdheat::Error::from)?;
    text.push('\n');
    emit(out, &text)
}

fn lattice_header(rank: usize) -> Vec<String> {
    (0..rank).map(|i| format!("h{i}")).collect()
}

fn lattice_cells(h: &[i32]) -> Vec<String> {
    h.iter().map(|c| c.to_string()).collect()
}

pub fn persist(graph: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let g: WeightedGraph = read_json(graph)?;
    emit_json(out, &h0_persistence(&g))
}

pub fn vpd(a: &Path, b: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let (space, ga, gb) = diagram_pair(a, b)?;
    let g = &ga - &gb;
    let ground = space.ground();
    let file = VpdFile {
        generators: space.points().to_vec(),
        coefficients: (0..ground.rank()).map(|i| g.coeff(i)).collect(),
        diagram: PointDiagram::from_vpd(&g, &space),
        mass: g.mass(ground),
        rho_to_zero: rho_norm(&g, ground),
    };
    emit_json(out, &file)
}

pub fn rho(a: &Path, b: &Path) -> Result<(), CliError> {
    let (space, ga, gb) = diagram_pair(a, b)?;
    println!("{}", rho_distance(&ga, &gb, space.ground()));
    Ok(())
}

pub fn symbol(walk: &WalkArgs, thetas: &[String]) -> Result<(), CliError> {
    let w = walk.load()?;
    let sym = Symbol::new(&w.nu);
    let mut values = Vec::new();
    for text in thetas {
        let theta = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CliError::Invalid(format!("bad angle list {text:?}: {e}")))?;
        values.push(json!({ "theta": theta, "lambda": sym.eval(&theta)? }));
    }
    let jumps: Vec<_> =
        w.nu.jumps()
            .iter()
            .map(|j| json!({ "plus": j.plus, "minus": j.minus, "rate": j.rate, "size": j.size, "mass": j.mass }))
            .collect();
    emit_json(
        None,
        &json!({
            "rank": w.nu.rank(),
            "generators": w.space.points(),
            "total_rate": w.nu.total_rate(),
            "upper_bound": sym.upper_bound(),
            "lipschitz_precondition": lipschitz_precondition(&w.nu),
            "jumps": jumps,
            "values": values,
        }),
    )
}

pub fn heat(
    walk: &WalkArgs,
    t: f64,
    series_tol: f64,
    check: Option<QuadratureSpec>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let w = walk.load()?;
    let rank = w.nu.rank();
    let k = heat_series(&w.nu.levy_measure(), t, SeriesOptions::with_tol(series_tol))?;
    let mut pts: Vec<(&Vec<i32>, f64)> = k.masses().iter().map(|(h, &p)| (h, p)).collect();
    pts.sort_by(|a, b| a.0.cmp(b.0));
    let mut text = lattice_header(rank);
    text.push("probability".into());
    let mut csv = text.join(",") + "\n";
    for (h, p) in &pts {
        let mut row = lattice_cells(h);
        row.push(format_float(*p));
        writeln!(csv, "{}", row.join(",")).unwrap();
    }
    emit(out, &csv)?;
    eprintln!("support {}, deficit {:e}", pts.len(), k.deficit());

    if let Some(quad) = check {
        quad.check_rank(rank)?;
        let sym = Symbol::new(&w.nu);
        pts.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut failed = 0;
        for (h, p) in pts.iter().take(16) {
            let f = heat_fourier(&sym, h, t, quad)?;
            let series = Estimate {
                value: *p,
                error: k.deficit(),
            };
            let c = CrossCheck::new(f, series, &quad);
            if !c.pass {
                failed += 1;
                eprintln!(
                    "point {h:?}: series {p:e}, fourier {:e}, tolerance {:e}",
                    f.value, c.tolerance
                );
            }
        }
        if failed > 0 {
            return Err(CliError::CheckFailed(format!(
                "{failed} points disagree between routes"
            )));
        }
    }
    Ok(())
}

pub fn invariants(
    walk: &WalkArgs,
    t_grid: &Grid,
    s_grid: &Grid,
    quad: QuadratureSpec,
    series_tol: f64,
    out: &Path,
) -> Result<(), CliError> {
    let w = walk.load()?;
    quad.check_rank(w.nu.rank())?;
    let sym = Symbol::new(&w.nu);
    let levy = w.nu.levy_measure();
    let series = SeriesOptions::with_tol(series_tol);
    let kernels = heat_series_multi(&levy, &t_grid.values(), series)?;
    let opts = InvariantOptions {
        series,
        ..Default::default()
    };
    let report = invariants_from_kernels(&sym, &kernels, &s_grid.values(), quad, opts)?;
    fs::create_dir_all(out).map_err(vpdheat::Error::from)?;
    write_table(&out.join("invariants.csv"), &invariant_table(&kernels, &levy))?;
    write_table(&out.join("resolvent.csv"), &resolvent_table(&report))?;
    emit_json(Some(&out.join("cross_checks.json")), &report)?;
    let failed: Vec<String> = report.checks().filter(|(_, c)| !c.pass).map(|(n, _)| n).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "cross-checks failed: {}",
            failed.join(", ")
        )))
    }
}

fn failing(reports: &[BoundReport]) -> Vec<String> {
    reports
        .iter()
        .filter(|r| r.precondition && !r.pass)
        .map(bound_key)
        .collect()
}

pub fn bounds(
    walk: &WalkArgs,
    t_grid: &Grid,
    s_grid: &Grid,
    quad: QuadratureSpec,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let w = walk.load()?;
    quad.check_rank(w.nu.rank())?;
    let opts = PipelineOptions::default();
    let kernels = heat_series_multi(
        &w.nu.levy_measure(),
        &t_grid.values(),
        SeriesOptions::with_tol(opts.series_tol),
    )?;
    let reports = bound_reports(&w.nu, &kernels, &s_grid.values(), quad, &opts, seed)?;
    fs::create_dir_all(out).map_err(vpdheat::Error::from)?;
    let mut failed = Vec::new();
    for (name, list) in &reports {
        emit_json(Some(&out.join(format!("{name}.json"))), list)?;
        failed.extend(failing(list));
        for r in list {
            let status = match (r.precondition, r.pass) {
                (_, true) => "pass",
                (false, false) => "fail (hypotheses not met)",
                (true, false) => "FAIL",
            };
            eprintln!(
                "{}: bound {:e}, achieved {:e}, {status}",
                bound_key(r),
                r.bound,
                r.achieved
            );
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("bounds failed: {}", failed.join(", "))))
    }
}

pub fn mixture(
    walk: &WalkArgs,
    eta1: &MixtureMeasure,
    eta2: &MixtureMeasure,
    elements: &Path,
    quad: QuadratureSpec,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let w = walk.load()?;
    let diagrams: Vec<PointDiagram> = read_json(elements)?;
    let elems = diagrams
        .iter()
        .map(|d| d.to_vpd(&w.space))
        .collect::<Result<Vec<VpdElement>, _>>()?;
    let report = majorization_suite(&w.nu, eta1, eta2, &elems, quad)?;
    emit_json(out, &report)?;
    if report.all_pass() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::CheckFailed(format!(
            "majorization checks failed: {}",
            failed.join(", ")
        )))
    }
}

pub struct SimulateOptions {
    pub samples: usize,
    pub seed: u64,
    pub radius: f64,
}

pub fn simulate(
    walk: &WalkArgs,
    t_grid: &Grid,
    o: SimulateOptions,
    out: Option<&Path>,
    histogram: Option<&Path>,
) -> Result<(), CliError> {
    let w = walk.load()?;
    let levy = w.nu.levy_measure();
    let ground = w.space.ground();
    let ts = t_grid.values();
    let kernels = heat_series_multi(&levy, &ts, SeriesOptions::with_tol(1e-9))?;
    // Mass and ρ of every lattice point the kernels reach.
    let mut sizes = std::collections::BTreeMap::new();
    for k in &kernels {
        for h in k.masses().keys() {
            sizes.entry(h.clone()).or_insert_with(|| {
                let g = VpdElement::from_lattice(h);
                (g.mass(ground), rho_norm(&g, ground))
            });
        }
    }
    let n = o.samples;
    let mut rows = Vec::new();
    for (i, (&t, k)) in ts.iter().zip(&kernels).enumerate() {
        // One stream family per grid point.
        let seed = o.seed.wrapping_add(i as u64);
        let tail_ref = |pick: fn(&(f64, f64)) -> f64| -> f64 {
            k.masses()
                .iter()
                .filter(|(h, _)| pick(&sizes[*h]) > o.radius)
                .map(|(_, p)| p)
                .sum()
        };
        let tails = tail_estimates(&w.nu, t, o.radius, n, seed)?;
        rows.push(EstimatorResult::new(
            "return",
            t,
            estimate_return(&levy, t, n, seed)?,
            n,
            k.return_probability(),
        ));
        rows.push(EstimatorResult::new(
            "collision",
            t,
            estimate_collision(&levy, t, n, seed)?,
            n,
            k.collision(),
        ));
        rows.push(EstimatorResult::new("mass_tail", t, tails.mass, n, tail_ref(|s| s.0)));
        rows.push(EstimatorResult::new("rho_tail", t, tails.rho, n, tail_ref(|s| s.1)));
    }
    let mut csv = String::from("quantity,t,estimate,std_error,reference,z\n");
    for r in &rows {
        let nums = [r.t, r.estimate, r.std_error, r.reference, r.z_score].map(format_float);
        writeln!(csv, "{},{}", r.quantity, nums.join(",")).unwrap();
    }
    emit(out, &csv)?;

    if let Some(path) = histogram {
        let (t, k) = (ts[ts.len() - 1], &kernels[kernels.len() - 1]);
        let hist = endpoint_histogram(&levy, t, n, o.seed)?;
        let mut header = lattice_header(levy.rank());
        header.extend(["count", "frequency", "series"].map(String::from));
        let mut text = header.join(",") + "\n";
        for (h, &c) in &hist {
            let mut row = lattice_cells(h);
            row.push(c.to_string());
            row.push(format_float(c as f64 / n as f64));
            row.push(format_float(k.get(h)));
            writeln!(text, "{}", row.join(",")).unwrap();
        }
        emit(Some(path), &text)?;
    }
    Ok(())
}

pub fn pipeline(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::from_file(config)?;
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    let outcome = run_pipeline(&cfg)?;
    let m = &outcome.manifest;
    println!(
        "rank {}, total rate {}, quadrature {}",
        m.rank, m.total_rate, m.quadrature
    );
    let worst = m
        .cross_checks
        .iter()
        .map(|c| c.discrepancy / c.tolerance)
        .fold(0.0, f64::max);
    println!(
        "cross-checks: {} (worst discrepancy/tolerance {worst:.3})",
        m.cross_checks.len()
    );
    if !m.bounds_without_hypotheses.is_empty() {
        println!("hypotheses not met: {}", m.bounds_without_hypotheses.join(", "));
    }
    println!("wrote {} files to {}", m.files.len(), cfg.output_dir.display());
    if !m.cross_checks_pass {
        return Err(CliError::CheckFailed("cross-checks failed; see manifest.json".into()));
    }
    if !m.bounds_pass {
        return Err(CliError::CheckFailed("bounds failed; see manifest.json".into()));
    }
    Ok(())
}

pub fn gen_graph(n: usize, k: usize, p: f64, weights: &str, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let range = weights
        .split_once(':')
        .and_then(|(lo, hi)| Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?)))
        .ok_or_else(|| CliError::Invalid(format!("weights must be lo:hi, got {weights:?}")))?;
    emit_json(out, &generate_ws_graph(n, k, p, range, seed)?)
}
