use serde::Serialize;

use germlab::entropy::{hessian_experiment, ray_scan, EntropyOptions, HessianReport, RayScan, ScanOptions};
use germlab::germ::{jacobi_min_eig, solve_ray, validate, Classification, SolverOptions};
use germlab::group::{build_octagon_group, PresentationReport, SurfaceGroupRep};
use germlab::io::write_mesh;
use germlab::limits::{
    box_dimension, bowen_check, delta_estimate, limit_set_sample, orbit_count, plane_fit, BowenOptions, BowenTable,
    DeltaEstimate, COUNT_STEP,
};
use germlab::mesh::{build_cotan, triangulate_domain, CotanOperator, GluedMesh};
use germlab::quaddiff::{poincare_series, QuadDiff, Seed, SeriesOptions};
use germlab::rigidity::{rigidity_bounds, RigidityBounds, CHI_NOTE};
use germlab::svg::{limit_set_plot, line_chart, Band, Series};
use num_complex::Complex64 as C64;

use crate::config::RunConfig;
use crate::output::{OutDir, OutputError, SCHEMA_VERSION};

const PRESENTATION_SAMPLES: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] germlab::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
}

/// What a command produced. `terminated` is set when a germ ray stopped
/// early; the rows before it are still written.
pub struct Outcome {
    pub terminated: Option<String>,
}

struct Setup {
    rep: SurfaceGroupRep,
    mesh: GluedMesh,
    op: CotanOperator,
    qd: QuadDiff,
}

fn setup(cfg: &RunConfig) -> Result<Setup, RunError> {
    let rep = build_octagon_group()?;
    let mesh = triangulate_domain(&rep, cfg.mesh_level)?;
    let op = build_cotan(&mesh)?;
    let opts = SeriesOptions {
        depth: cfg.series_depth,
        ..SeriesOptions::default()
    };
    let w0 = C64::new(cfg.seed_w0[0], cfg.seed_w0[1]);
    let qd = poincare_series(&rep, &mesh, Seed::Pole { w0 }, &opts)?;
    Ok(Setup { rep, mesh, op, qd })
}

fn solver(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        tol: cfg.solver_tol,
        max_newton: cfg.max_newton,
        continuation_step: cfg.continuation_step,
    }
}

fn scan_options(cfg: &RunConfig) -> ScanOptions {
    ScanOptions {
        solver: solver(cfg),
        entropy: EntropyOptions {
            depth: cfg.entropy_depth,
            window: cfg.window(),
        },
        with_entropy: true,
        tolerance: cfg.chain_tolerance,
        monotone_tolerance: cfg.monotone_tolerance,
    }
}

fn bowen_options(cfg: &RunConfig) -> BowenOptions {
    BowenOptions {
        depth: cfg.census_depth,
        limit_depth: cfg.limit_depth,
        max_elements: cfg.max_elements,
        tolerance: cfg.bowen_tolerance,
    }
}

#[derive(Serialize)]
struct Header<'a> {
    schema_version: u32,
    command: &'a str,
    config_hash: String,
    germlab_version: &'static str,
    cli_version: &'static str,
}

fn header<'a>(cfg: &RunConfig, command: &'a str) -> Header<'a> {
    Header {
        schema_version: SCHEMA_VERSION,
        command,
        config_hash: cfg.hash(),
        germlab_version: germlab::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
    }
}

#[derive(Serialize)]
struct SeriesInfo {
    depth: usize,
    w0: [f64; 2],
    scale: f64,
    tail: f64,
    automorphy_residual: f64,
    converged: bool,
    terms: usize,
}

fn series_info(cfg: &RunConfig, qd: &QuadDiff) -> SeriesInfo {
    SeriesInfo {
        depth: qd.depth,
        w0: cfg.seed_w0,
        scale: qd.scale,
        tail: qd.tail,
        automorphy_residual: qd.automorphy_residual,
        converged: qd.converged,
        terms: qd.terms,
    }
}

#[derive(Serialize)]
struct QuadDiffRow {
    vertex: usize,
    class: usize,
    x: f64,
    y: f64,
    a_re: f64,
    a_im: f64,
}

#[derive(Serialize)]
struct GermRow {
    t: f64,
    class: usize,
    x: f64,
    y: f64,
    u: f64,
    half_b_sq: f64,
    curvature: f64,
    lambda1: f64,
}

#[derive(Serialize)]
struct GermSummary {
    t: f64,
    status: &'static str,
    manning: Option<f64>,
    classification: Option<Classification>,
    sup_b_sq: Option<f64>,
    volume: Option<f64>,
    residual: Option<f64>,
    newton_steps: Option<usize>,
    gauss_bonnet_rel_err: Option<f64>,
    lambda_min: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    mesh_level: usize,
    vertices: usize,
    classes: usize,
    series: SeriesInfo,
    presentation: PresentationReport,
    rows: Vec<GermSummary>,
}

pub fn solve_germ(cfg: &RunConfig, out: &mut OutDir) -> Result<Outcome, RunError> {
    let s = setup(cfg)?;
    let reps = s.mesh.representatives();
    out.text("mesh.txt", &write_mesh(&s.mesh))?;
    let qrows: Vec<QuadDiffRow> = (0..s.mesh.vertices.len())
        .map(|v| {
            let z = s.mesh.vertices[v];
            let a = s.qd.sample(v);
            QuadDiffRow {
                vertex: v,
                class: s.mesh.class_of[v],
                x: z.re,
                y: z.im,
                a_re: a.re,
                a_im: a.im,
            }
        })
        .collect();
    out.csv("quaddiff.csv", &qrows)?;

    let q = s.qd.norm_sq_h(&s.mesh);
    let results = solve_ray(&s.op, &q, &cfg.t_scan, &solver(cfg));
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut terminated = None;
    for (&t, r) in cfg.t_scan.iter().zip(results) {
        match r {
            Ok(g) => {
                let half = g.half_b_sq();
                let k = g.curvature();
                for c in 0..g.n() {
                    let z = s.mesh.vertices[reps[c]];
                    rows.push(GermRow {
                        t,
                        class: c,
                        x: z.re,
                        y: z.im,
                        u: g.u[c],
                        half_b_sq: half[c],
                        curvature: k[c],
                        lambda1: half[c].sqrt(),
                    });
                }
                let v = validate(&g, &s.op, cfg.solver_tol);
                summary.push(GermSummary {
                    t,
                    status: "ok",
                    manning: Some(germlab::entropy::manning_bound(&g)),
                    classification: Some(g.classification()),
                    sup_b_sq: Some(g.sup_b_sq()),
                    volume: Some(g.volume()),
                    residual: Some(g.residual),
                    newton_steps: Some(g.newton_steps),
                    gauss_bonnet_rel_err: Some(v.gauss_bonnet_rel_err),
                    lambda_min: jacobi_min_eig(&g, &s.op, 1e-8).ok().map(|j| j.lambda_min),
                    error: None,
                });
            }
            Err(e) => {
                terminated.get_or_insert_with(|| e.to_string());
                summary.push(GermSummary {
                    t,
                    status: "ray-terminated",
                    manning: None,
                    classification: None,
                    sup_b_sq: None,
                    volume: None,
                    residual: None,
                    newton_steps: None,
                    gauss_bonnet_rel_err: None,
                    lambda_min: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    out.csv("germ.csv", &rows)?;
    out.json(
        "solve_germ.json",
        &SolveReport {
            header: header(cfg, "solve-germ"),
            mesh_level: cfg.mesh_level,
            vertices: s.mesh.vertices.len(),
            classes: s.mesh.n_classes,
            series: series_info(cfg, &s.qd),
            presentation: s.rep.verify_presentation(PRESENTATION_SAMPLES, cfg.seed),
            rows: summary,
        },
    )?;
    Ok(Outcome { terminated })
}

fn scan_terminated(scan: &RayScan) -> Option<String> {
    scan.rows
        .iter()
        .find(|r| r.status != "ok")
        .map(|r| format!("ray terminated at t = {}", r.t))
}

fn scan_chart(scan: &RayScan) -> String {
    let ok: Vec<_> = scan.rows.iter().filter(|r| r.status == "ok").collect();
    let series = [
        Series {
            name: "M(t)",
            color: "#c0392b",
            points: ok.iter().filter_map(|r| Some((r.t, r.manning?))).collect(),
        },
        Series {
            name: "Ê(t)",
            color: "#1f4e9c",
            points: ok.iter().filter_map(|r| Some((r.t, r.entropy?))).collect(),
        },
    ];
    let band = Band {
        name: "curvature brackets",
        color: "#7f8c8d",
        points: ok.iter().filter_map(|r| Some((r.t, r.lo?, r.hi?))).collect(),
    };
    line_chart("Manning bound and volume entropy along the ray", "t", &series, Some(&band))
}

#[derive(Serialize)]
struct EntropyReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    series: SeriesInfo,
    manning_increasing: bool,
    entropy_monotone: bool,
    chain_holds: bool,
    tolerance: f64,
    monotone_tolerance: f64,
    hessian: Option<HessianReport>,
}

pub fn entropy(cfg: &RunConfig, out: &mut OutDir) -> Result<Outcome, RunError> {
    let s = setup(cfg)?;
    let opts = scan_options(cfg);
    let scan = ray_scan(&s.rep, &s.mesh, &s.op, &s.qd, &cfg.t_scan, &opts)?;
    out.csv("entropy_scan.csv", &scan.rows)?;
    out.text("entropy_scan.svg", &scan_chart(&scan))?;
    let terminated = scan_terminated(&scan);
    let hessian = if terminated.is_none() {
        Some(hessian_experiment(&s.rep, &s.mesh, &s.op, &s.qd, cfg.hessian_dt, true, &opts)?)
    } else {
        None
    };
    out.json(
        "entropy.json",
        &EntropyReport {
            header: header(cfg, "entropy"),
            series: series_info(cfg, &s.qd),
            manning_increasing: scan.manning_increasing,
            entropy_monotone: scan.entropy_monotone,
            chain_holds: scan.chain_holds,
            tolerance: scan.tolerance,
            monotone_tolerance: scan.monotone_tolerance,
            hessian,
        },
    )?;
    Ok(Outcome { terminated })
}

#[derive(Serialize)]
struct SphereRow {
    theta: f64,
    word_length: usize,
    sphere_size: usize,
}

#[derive(Serialize)]
struct CountRow {
    theta: f64,
    radius: f64,
    count: usize,
}

#[derive(Serialize)]
struct CensusSummary {
    theta: f64,
    depth: usize,
    elements: usize,
    safe_radius: f64,
    delta: DeltaEstimate,
}

#[derive(Serialize)]
struct CensusReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    rows: Vec<CensusSummary>,
}

pub fn orbit_count_cmd(cfg: &RunConfig, out: &mut OutDir) -> Result<Outcome, RunError> {
    let base = build_octagon_group()?;
    let mut spheres = Vec::new();
    let mut counts = Vec::new();
    let mut rows = Vec::new();
    for &theta in &cfg.thetas {
        let census = orbit_count(&base.bend(theta)?, cfg.census_depth, cfg.max_elements)?;
        for (n, &k) in census.sphere_sizes.iter().enumerate() {
            spheres.push(SphereRow {
                theta,
                word_length: n,
                sphere_size: k,
            });
        }
        let steps = (census.safe_radius / COUNT_STEP).floor() as usize;
        for i in 1..=steps {
            let r = i as f64 * COUNT_STEP;
            counts.push(CountRow {
                theta,
                radius: r,
                count: census.count_below(r),
            });
        }
        rows.push(CensusSummary {
            theta,
            depth: census.depth,
            elements: census.total(),
            safe_radius: census.safe_radius,
            delta: delta_estimate(&census)?,
        });
    }
    out.csv("orbit_spheres.csv", &spheres)?;
    out.csv("orbit_count.csv", &counts)?;
    out.json(
        "orbit_count.json",
        &CensusReport {
            header: header(cfg, "orbit-count"),
            rows,
        },
    )?;
    Ok(Outcome { terminated: None })
}

#[derive(Serialize)]
struct PointRow {
    theta: f64,
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Serialize)]
struct LimitRow {
    theta: f64,
    points: usize,
    plane_distance: f64,
    box_dimension: Option<f64>,
    box_stderr: Option<f64>,
    delta: DeltaEstimate,
}

#[derive(Serialize)]
struct LimitReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    census_depth: usize,
    limit_depth: usize,
    rows: Vec<LimitRow>,
}

fn theta_tag(theta: f64) -> String {
    format!("{theta:+.3}").replace('+', "p").replace('-', "m").replace('.', "_")
}

pub fn limit_set(cfg: &RunConfig, out: &mut OutDir) -> Result<Outcome, RunError> {
    let base = build_octagon_group()?;
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for &theta in &cfg.thetas {
        let rep = base.bend(theta)?;
        let sample = limit_set_sample(&rep, cfg.limit_depth, cfg.max_elements)?;
        let plane = plane_fit(&sample.points);
        let bd = box_dimension(&sample, None).ok();
        let title = format!("limit set, θ = {theta}");
        out.text(&format!("limit_set_{}.svg", theta_tag(theta)), &limit_set_plot(&title, &sample.points))?;
        points.extend(sample.points.iter().map(|p| PointRow {
            theta,
            x: p[0],
            y: p[1],
            z: p[2],
        }));
        let delta = delta_estimate(&orbit_count(&rep, cfg.census_depth, cfg.max_elements)?)?;
        rows.push(LimitRow {
            theta,
            points: sample.points.len(),
            plane_distance: plane.max_distance,
            box_dimension: bd.as_ref().map(|b| b.value),
            box_stderr: bd.as_ref().map(|b| b.stderr),
            delta,
        });
    }
    out.csv("limit_set.csv", &points)?;
    out.json(
        "limit_set.json",
        &LimitReport {
            header: header(cfg, "limit-set"),
            census_depth: cfg.census_depth,
            limit_depth: cfg.limit_depth,
            rows,
        },
    )?;
    Ok(Outcome { terminated: None })
}

fn epsilon_grid(cfg: &RunConfig) -> Result<Vec<RigidityBounds>, RunError> {
    let n = cfg.epsilon_points;
    (0..n)
        .map(|i| Ok(rigidity_bounds(cfg.epsilon_max * i as f64 / (n - 1) as f64)?))
        .collect()
}

#[derive(Serialize)]
struct RigidityReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    note: &'static str,
    quarter: RigidityBounds,
    monotone: bool,
}

fn monotone(grid: &[RigidityBounds]) -> bool {
    grid.windows(2).all(|w| {
        w[1].diam_bound > w[0].diam_bound && w[1].teich_bound > w[0].teich_bound && w[1].vol_bound > w[0].vol_bound
    })
}

pub fn rigidity(cfg: &RunConfig, out: &mut OutDir) -> Result<Outcome, RunError> {
    let grid = epsilon_grid(cfg)?;
    out.csv("rigidity.csv", &grid)?;
    out.json(
        "rigidity.json",
        &RigidityReport {
            header: header(cfg, "rigidity"),
            note: CHI_NOTE,
            quarter: rigidity_bounds(0.25)?,
            monotone: monotone(&grid),
        },
    )?;
    Ok(Outcome { terminated: None })
}

#[derive(Serialize)]
struct EntropySection {
    rows: Vec<germlab::entropy::RayScanRow>,
    manning_at_least_one: bool,
    chain_holds: bool,
    manning_increasing: bool,
    pass: bool,
}

#[derive(Serialize)]
struct MonotoneSection {
    entropy_monotone: bool,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ManningDeltaRow {
    theta: f64,
    manning_fuchsian: f64,
    slope: f64,
    critical: f64,
    holds: bool,
}

#[derive(Serialize)]
struct ManningDeltaSection {
    rows: Vec<ManningDeltaRow>,
    strict_away_from_zero: bool,
    pass: bool,
}

#[derive(Serialize)]
struct RigiditySection {
    note: &'static str,
    zero_is_zero: bool,
    quarter: RigidityBounds,
    monotone: bool,
    /// Angles whose `δ̂ − 1` is below the configured threshold.
    near_fuchsian_thetas: Vec<f64>,
    suite: Vec<RigidityBounds>,
    pass: bool,
}

#[derive(Serialize)]
struct BowenSection {
    table: BowenTable,
    pass: bool,
}

#[derive(Serialize)]
struct HessianSection {
    report: HessianReport,
    pass: bool,
}

#[derive(Serialize)]
struct FullReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    config: &'a RunConfig,
    series: SeriesInfo,
    presentation: PresentationReport,
    entropy_bound: EntropySection,
    entropy_monotonicity: MonotoneSection,
    manning_against_delta: ManningDeltaSection,
    rigidity: RigiditySection,
    bowen: BowenSection,
    hessian: Option<HessianSection>,
    pass: bool,
}

pub fn report(cfg: &RunConfig, out: &mut OutDir) -> Result<Outcome, RunError> {
    let s = setup(cfg)?;
    let opts = scan_options(cfg);
    let scan = ray_scan(&s.rep, &s.mesh, &s.op, &s.qd, &cfg.t_scan, &opts)?;
    let terminated = scan_terminated(&scan);
    let manning_at_least_one = scan.rows.iter().filter_map(|r| r.manning).all(|m| m >= 1.0 - 1e-9);
    let entropy_bound = EntropySection {
        manning_at_least_one,
        chain_holds: scan.chain_holds,
        manning_increasing: scan.manning_increasing,
        pass: manning_at_least_one && scan.chain_holds && scan.manning_increasing,
        rows: scan.rows.clone(),
    };
    let entropy_monotonicity = MonotoneSection {
        entropy_monotone: scan.entropy_monotone,
        tolerance: scan.monotone_tolerance,
        pass: scan.entropy_monotone,
    };

    let table = bowen_check(&s.rep, &cfg.thetas, &bowen_options(cfg))?;
    let base_crit = table.rows.iter().find(|r| r.theta == 0.0).map(|r| r.delta.critical).unwrap_or(f64::NAN);
    let md_rows: Vec<ManningDeltaRow> = table
        .rows
        .iter()
        .map(|r| ManningDeltaRow {
            theta: r.theta,
            manning_fuchsian: r.manning_fuchsian,
            slope: r.delta.slope,
            critical: r.delta.critical,
            holds: r.manning_fuchsian <= r.delta.slope.min(r.delta.critical) + cfg.bowen_tolerance,
        })
        .collect();
    let strict = table.rows.iter().filter(|r| r.theta != 0.0).all(|r| r.delta.critical > base_crit);
    let manning_against_delta = ManningDeltaSection {
        pass: md_rows.iter().all(|r| r.holds) && strict,
        strict_away_from_zero: strict,
        rows: md_rows,
    };

    let grid = epsilon_grid(cfg)?;
    let zero = rigidity_bounds(0.0)?;
    let zero_is_zero = zero.diam_bound == 0.0 && zero.teich_bound == 0.0 && zero.vol_bound == 0.0;
    let near: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r.delta.slope.max(r.delta.critical) - 1.0 < cfg.delta_threshold)
        .map(|r| r.theta)
        .collect();
    let mono = monotone(&grid);
    let rigidity = RigiditySection {
        note: CHI_NOTE,
        zero_is_zero,
        quarter: rigidity_bounds(0.25)?,
        monotone: mono,
        suite: if near.is_empty() { Vec::new() } else { grid },
        near_fuchsian_thetas: near,
        pass: zero_is_zero && mono,
    };
    let bowen = BowenSection {
        pass: table.fuchsian_near_one && table.all_below_two && table.manning_inequality,
        table,
    };
    let hessian = if terminated.is_none() {
        let h = hessian_experiment(&s.rep, &s.mesh, &s.op, &s.qd, cfg.hessian_dt, true, &opts)?;
        Some(HessianSection {
            pass: h.second_diff_m >= 0.0,
            report: h,
        })
    } else {
        None
    };
    let pass = entropy_bound.pass
        && entropy_monotonicity.pass
        && manning_against_delta.pass
        && rigidity.pass
        && bowen.pass
        && hessian.as_ref().is_some_and(|h| h.pass);
    out.json(
        "report.json",
        &FullReport {
            header: header(cfg, "report"),
            config: cfg,
            series: series_info(cfg, &s.qd),
            presentation: s.rep.verify_presentation(PRESENTATION_SAMPLES, cfg.seed),
            entropy_bound,
            entropy_monotonicity,
            manning_against_delta,
            rigidity,
            bowen,
            hessian,
            pass,
        },
    )?;
    Ok(Outcome { terminated })
}
