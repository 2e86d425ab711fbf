use std::fs;
use std::path::Path;

use vpdheat::diagram::{PointDiagram, WeightedGraph};
use vpdheat::pipeline::{
    read_json, read_table, run_pipeline, write_json, GraphSource, Grid, Manifest, PipelineConfig, PipelineOptions,
    VpdFile, WattsStrogatz,
};

fn ws(n: usize, k: usize, weights: (u32, u32), seed: u64) -> GraphSource {
    GraphSource::Generated {
        watts_strogatz: WattsStrogatz {
            n,
            k,
            p: 0.3,
            weights,
            seed,
        },
    }
}

fn config(a: GraphSource, b: GraphSource, out: &Path) -> PipelineConfig {
    PipelineConfig {
        graph_a: a,
        graph_b: b,
        profile: Default::default(),
        t_grid: Grid::new(0.1, 1.0, 4).unwrap(),
        s_grid: Grid::new(2.0, 6.0, 3).unwrap(),
        quadrature: None,
        trunc_radii: vec![1.0, 2.0],
        output_dir: out.to_path_buf(),
        seed: 3,
        options: PipelineOptions {
            mc_samples: 20_000,
            tail_samples: 20_000,
            ..Default::default()
        },
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn check_outputs(dir: &Path, manifest: &Manifest, ts: &[f64]) {
    for f in &manifest.files {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    for f in [
        "diagrams_a.json",
        "diagrams_b.json",
        "vpd.json",
        "invariants.csv",
        "resolvent.csv",
        "truncation.csv",
        "bounds/covering.json",
        "bounds/lipschitz.json",
        "bounds/mass_tail.json",
        "bounds/sobolev.json",
        "manifest.json",
    ] {
        assert!(manifest.files.iter().any(|g| g == f), "{f} not listed");
    }
    let on_disk: Manifest = read_json(&dir.join("manifest.json")).unwrap();
    assert_eq!(&on_disk, manifest);
    let _: PointDiagram = read_json(&dir.join("diagrams_a.json")).unwrap();
    let _: VpdFile = read_json(&dir.join("vpd.json")).unwrap();

    let inv = read_table(&dir.join("invariants.csv")).unwrap();
    assert_eq!(inv.header, ["t", "return", "collision", "energy", "scale"]);
    assert_eq!(inv.column("t").unwrap(), ts);

    let trunc = read_table(&dir.join("truncation.csv")).unwrap();
    assert_eq!(trunc.header[0], "radius");
    let full: Vec<Vec<f64>> = trunc
        .rows
        .iter()
        .filter(|r| r[0].is_infinite())
        .map(|r| r[1..].to_vec())
        .collect();
    assert_eq!(full, inv.rows);

    let res = read_table(&dir.join("resolvent.csv")).unwrap();
    assert_eq!(res.header, ["s", "resolvent"]);
}

#[test]
fn small_run_is_complete_and_reproducible() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let cfg = config(ws(10, 2, (1, 3), 1), ws(12, 4, (1, 3), 2), d1.path());
    let out = run_pipeline(&cfg).unwrap();
    assert!(out.manifest.rank <= 3);
    assert!(out.manifest.cross_checks_pass, "{:?}", out.manifest.cross_checks);
    assert!(out.manifest.bounds_pass, "{:?}", out.manifest.bounds);
    assert!(!out.manifest.lipschitz_precondition);
    for (k, pass) in &out.manifest.bounds {
        assert!(*pass || out.manifest.bounds_without_hypotheses.contains(k), "{k}");
        if !k.starts_with("lipschitz") {
            assert!(*pass, "{k}");
        }
    }
    check_outputs(d1.path(), &out.manifest, &cfg.t_grid.values());

    let inv = read_table(&d1.path().join("invariants.csv")).unwrap();
    for col in ["return", "collision", "energy"] {
        let v = inv.column(col).unwrap();
        assert!(strictly_decreasing(&v), "{col}: {v:?}");
    }

    let mut cfg2 = cfg.clone();
    cfg2.output_dir = d2.path().to_path_buf();
    run_pipeline(&cfg2).unwrap();
    for f in [
        "invariants.csv",
        "resolvent.csv",
        "truncation.csv",
        "vpd.json",
        "bounds/lipschitz.json",
    ] {
        assert_eq!(
            fs::read(d1.path().join(f)).unwrap(),
            fs::read(d2.path().join(f)).unwrap(),
            "{f} differs between runs"
        );
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
    write_json(&dir.path().join("g.json"), &g).unwrap();
    let mut cfg = config(
        GraphSource::File("g.json".into()),
        ws(8, 2, (1, 2), 5),
        &dir.path().join("out"),
    );
    cfg.t_grid = Grid::new(0.5, 1.0, 2).unwrap();
    write_json(&dir.path().join("run.json"), &cfg).unwrap();
    let loaded = PipelineConfig::from_file(&dir.path().join("run.json")).unwrap();
    assert_eq!(loaded.graph_a, GraphSource::File(dir.path().join("g.json")));
    assert_eq!(loaded.graph_a.load().unwrap(), g);
    assert_eq!(loaded.t_grid, cfg.t_grid);
}

#[test]
fn identical_graphs_give_zero_vpd() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(ws(9, 2, (1, 2), 4), ws(9, 2, (1, 2), 4), dir.path());
    let out = run_pipeline(&cfg).unwrap();
    assert!(out.vpd.coefficients.iter().all(|&c| c == 0));
    assert_eq!(out.vpd.mass, 0.0);
    assert_eq!(out.vpd.rho_to_zero, 0.0);
    assert!(out.vpd.diagram.is_empty());
}

#[test]
fn edgeless_graphs_give_trivial_walk() {
    let dir = tempfile::tempdir().unwrap();
    let g = WeightedGraph::new(4, vec![]).unwrap();
    write_json(&dir.path().join("g.json"), &g).unwrap();
    let path = GraphSource::File(dir.path().join("g.json"));
    let cfg = config(path.clone(), path, &dir.path().join("out"));
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.manifest.rank, 0);
    let inv = read_table(&dir.path().join("out/invariants.csv")).unwrap();
    assert!(inv.column("return").unwrap().iter().all(|&p| p == 1.0));
    assert!(inv.column("collision").unwrap().iter().all(|&p| p == 1.0));
    assert!(inv.column("energy").unwrap().iter().all(|&e| e == 0.0));
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ws(8, 2, (1, 2), 1), ws(8, 2, (1, 2), 2), dir.path());
    cfg.trunc_radii = vec![-1.0];
    assert!(run_pipeline(&cfg).is_err());
    assert!("1:0.5:3".parse::<Grid>().is_err());
    assert!(serde_json::from_str::<Grid>("[0.1, 1.0, 1]").is_err());
}
