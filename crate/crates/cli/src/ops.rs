//! Command implementations. Each file-producing command writes its primary
//! output plus a manifest; formats are plain JSON and CSV meant for plotting
//! tools, not for human eyes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use vertflex_core::aggregation::{
    compute_for_with_solver, loss_map, random_sampling_for, AggConfig, AggError, BoundaryPoint,
    ForResult,
};
use vertflex_core::grid::{build_cigre_mv_grid, BenchmarkConfig, Grid};
use vertflex_core::monetization::{
    classify_zone, epf_cost, reactive_cost_factor, EpfCurve, EpfKind, LikelihoodTier,
    MonetizationError, ZoneConfig, ZoneId,
};
use vertflex_core::power_flow::{ConstraintKind, SolverOptions};
use vertflex_core::scenario::{
    build_scenario, derive_ev_fleet, load_scenario_file, EvPenetrationSpec, Scenario,
    ScenarioError,
};

use crate::manifest::ManifestBuilder;
use crate::{EpfArgs, FleetArgs, ForArgs, Globals, LossMapArgs, SampleArgs};

pub enum CliError {
    /// Bad flags or unusable input data.
    Usage(String),
    /// The computation itself failed: no feasible start, solver breakdown.
    Compute(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Compute(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

fn map_agg(e: AggError) -> CliError {
    match e {
        AggError::NoFeasibleStart => {
            CliError::Compute("the scenario operating point admits no feasible power flow".into())
        }
        AggError::Pf(e) => CliError::Compute(format!("power flow failed: {e}")),
        AggError::BadConfig(m) => CliError::Usage(m.into()),
        AggError::Grid(e) => CliError::Usage(format!("grid rejected: {e}")),
    }
}

fn map_scenario(e: ScenarioError) -> CliError {
    match e {
        ScenarioError::Io(e) => CliError::Io(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn solver_options(globals: &Globals) -> SolverOptions<f64> {
    SolverOptions { tol: globals.pf_tol, max_iter: globals.pf_max_iter, warm_start: None }
}

/// Loads `--grid` when given, otherwise builds the benchmark network.
fn resolve_grid(
    path: Option<&PathBuf>,
    manifest: &mut ManifestBuilder,
) -> Result<Grid<f64>, CliError> {
    let grid = match path {
        Some(p) => {
            let bytes = read_bytes(p)?;
            manifest.input(p, &bytes);
            let grid: Grid<f64> = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            grid
        }
        None => build_cigre_mv_grid(BenchmarkConfig::default()),
    };
    grid.validate().map_err(|e| CliError::Usage(format!("grid rejected: {e}")))?;
    Ok(grid)
}

/// Builds a ladder scenario or loads one from file, then applies `--ith`.
fn resolve_scenario(
    id: Option<&str>,
    file: Option<&PathBuf>,
    ith: Option<f64>,
    grid: &Grid<f64>,
    manifest: &mut ManifestBuilder,
) -> Result<Scenario<f64>, CliError> {
    let mut scenario = match (id, file) {
        (Some(id), None) => build_scenario(id, grid).map_err(map_scenario)?,
        (None, Some(p)) => {
            let bytes = read_bytes(p)?;
            manifest.input(p, &bytes);
            load_scenario_file(p).map_err(map_scenario)?
        }
        _ => unreachable!("clap enforces exactly one scenario source"),
    };
    if let Some(a) = ith {
        scenario.line_rating_override = Some(a);
    }
    Ok(scenario)
}

// ---------------------------------------------------------------- build-grid

#[derive(Serialize)]
struct BuildGridConfig {
    ith: f64,
}

pub fn cmd_build_grid(globals: &Globals, ith: f64, out: &Path) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::new("build-grid", globals.seed);
    manifest.config(BuildGridConfig { ith });
    let grid = build_cigre_mv_grid(BenchmarkConfig { i_rated: ith, ..BenchmarkConfig::default() });
    let text = serde_json::to_string_pretty(&grid).expect("grid serializes");
    write_text(out, &text)?;
    manifest.write_beside(out)
}

// ----------------------------------------------------------------------- for

/// On-disk region file. The internal result carries the sweep config as
/// well; here only the data a plotting or disaggregation step needs.
#[derive(Serialize, Deserialize)]
struct ForFile {
    scenario: String,
    area_mw_mvar: f64,
    operating_point: [f64; 2],
    boundary: Vec<ForFilePoint>,
}

#[derive(Serialize, Deserialize)]
struct ForFilePoint {
    theta_rad: f64,
    p_mw: f64,
    q_mvar: f64,
    binding: ConstraintKind,
    margin: f64,
    dispatch: Vec<[f64; 2]>,
}

fn to_for_file(r: &ForResult<f64>) -> ForFile {
    ForFile {
        scenario: r.scenario_id.clone(),
        area_mw_mvar: r.area_mw_mvar,
        operating_point: r.operating_point_pq,
        boundary: r
            .boundary
            .iter()
            .map(|b| ForFilePoint {
                theta_rad: b.theta_rad,
                p_mw: b.pq[0],
                q_mvar: b.pq[1],
                binding: b.binding,
                margin: b.margin,
                dispatch: b.dispatch.clone(),
            })
            .collect(),
    }
}

fn from_for_file(f: ForFile, config: AggConfig<f64>) -> ForResult<f64> {
    ForResult {
        scenario_id: f.scenario,
        area_mw_mvar: f.area_mw_mvar,
        operating_point_pq: f.operating_point,
        boundary: f
            .boundary
            .into_iter()
            .map(|p| BoundaryPoint {
                theta_rad: p.theta_rad,
                pq: [p.p_mw, p.q_mvar],
                binding: p.binding,
                margin: p.margin,
                dispatch: p.dispatch,
            })
            .collect(),
        config,
    }
}

pub fn binding_label(kind: ConstraintKind) -> &'static str {
    match kind {
        ConstraintKind::Undervoltage => "undervoltage",
        ConstraintKind::Overvoltage => "overvoltage",
        ConstraintKind::LineCurrent => "line_current",
        ConstraintKind::TransformerLoading => "transformer_loading",
        ConstraintKind::FpuLimit => "fpu_limit",
    }
}

fn boundary_csv(r: &ForResult<f64>) -> String {
    let mut csv = String::from("theta_rad,p_mw,q_mvar,binding,margin\n");
    for b in &r.boundary {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            b.theta_rad,
            b.pq[0],
            b.pq[1],
            binding_label(b.binding),
            b.margin
        ));
    }
    csv
}

#[derive(Serialize)]
struct ForRunConfig<'a> {
    scenario: Option<&'a str>,
    scenario_file: Option<String>,
    ith: Option<f64>,
    #[serde(flatten)]
    agg: &'a AggConfig<f64>,
    pf_tol: f64,
    pf_max_iter: usize,
}

fn agg_config(globals: &Globals, directions: usize, swarm: usize, iters: usize) -> AggConfig<f64> {
    AggConfig {
        directions,
        swarm_size: swarm,
        iterations: iters,
        seed: globals.seed,
        ..AggConfig::default()
    }
}

pub fn cmd_for(globals: &Globals, args: &ForArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::new("for", globals.seed);
    let grid = resolve_grid(args.grid.as_ref(), &mut manifest)?;
    let scenario = resolve_scenario(
        args.scenario.as_deref(),
        args.scenario_file.as_ref(),
        args.ith,
        &grid,
        &mut manifest,
    )?;
    let config = agg_config(globals, args.directions, args.swarm_size, args.iterations);
    manifest.config(ForRunConfig {
        scenario: args.scenario.as_deref(),
        scenario_file: args.scenario_file.as_ref().map(|p| p.display().to_string()),
        ith: args.ith,
        agg: &config,
        pf_tol: globals.pf_tol,
        pf_max_iter: globals.pf_max_iter,
    });

    let result = compute_for_with_solver(&scenario, &grid, &config, &solver_options(globals))
        .map_err(map_agg)?;

    let json = serde_json::to_string_pretty(&to_for_file(&result)).expect("region serializes");
    write_text(&args.out, &json)?;
    let csv_path = args.out.with_extension("csv");
    if csv_path == args.out {
        return Err(CliError::Usage("--out must not end in .csv; it names the JSON file".into()));
    }
    write_text(&csv_path, &boundary_csv(&result))?;
    manifest.write_beside(&args.out)
}

// -------------------------------------------------------------------- sample

#[derive(Serialize)]
struct SampleFile {
    scenario: String,
    cloud: Vec<[f64; 2]>,
    hull: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct SampleRunConfig<'a> {
    scenario: Option<&'a str>,
    scenario_file: Option<String>,
    ith: Option<f64>,
    samples: usize,
    seed: u64,
}

pub fn cmd_sample(globals: &Globals, args: &SampleArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::new("sample", globals.seed);
    let grid = resolve_grid(args.grid.as_ref(), &mut manifest)?;
    let scenario = resolve_scenario(
        args.scenario.as_deref(),
        args.scenario_file.as_ref(),
        args.ith,
        &grid,
        &mut manifest,
    )?;
    manifest.config(SampleRunConfig {
        scenario: args.scenario.as_deref(),
        scenario_file: args.scenario_file.as_ref().map(|p| p.display().to_string()),
        ith: args.ith,
        samples: args.samples,
        seed: globals.seed,
    });

    let (cloud, hull) =
        random_sampling_for(&scenario, &grid, args.samples, globals.seed).map_err(map_agg)?;
    let file = SampleFile { scenario: scenario.id.clone(), cloud, hull };
    let json = serde_json::to_string_pretty(&file).expect("sample cloud serializes");
    write_text(&args.out, &json)?;
    manifest.write_beside(&args.out)
}

// ------------------------------------------------------------------ loss-map

#[derive(Serialize)]
struct LossMapRunConfig<'a> {
    scenario: Option<&'a str>,
    scenario_file: Option<String>,
    for_file: Option<String>,
    ith: Option<f64>,
    resolution: usize,
    #[serde(flatten)]
    agg: &'a AggConfig<f64>,
    pf_tol: f64,
    pf_max_iter: usize,
}

pub fn cmd_loss_map(globals: &Globals, args: &LossMapArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::new("loss-map", globals.seed);
    let grid = resolve_grid(args.grid.as_ref(), &mut manifest)?;
    let scenario = resolve_scenario(
        args.scenario.as_deref(),
        args.scenario_file.as_ref(),
        args.ith,
        &grid,
        &mut manifest,
    )?;
    let config = agg_config(globals, args.directions, args.swarm_size, args.iterations);
    manifest.config(LossMapRunConfig {
        scenario: args.scenario.as_deref(),
        scenario_file: args.scenario_file.as_ref().map(|p| p.display().to_string()),
        for_file: args.for_file.as_ref().map(|p| p.display().to_string()),
        ith: args.ith,
        resolution: args.resolution,
        agg: &config,
        pf_tol: globals.pf_tol,
        pf_max_iter: globals.pf_max_iter,
    });

    let region = match &args.for_file {
        Some(p) => {
            let bytes = read_bytes(p)?;
            manifest.input(p, &bytes);
            let file: ForFile = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            from_for_file(file, config)
        }
        None => compute_for_with_solver(&scenario, &grid, &config, &solver_options(globals))
            .map_err(map_agg)?,
    };

    let map = loss_map(&scenario, &grid, &region, args.resolution).map_err(map_agg)?;
    let mut csv = String::from("p_mw,q_mvar,loss_mw,feasible\n");
    for cell in &map.cells {
        let loss = cell.loss_mw.map(|l| l.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            cell.target[0], cell.target[1], loss, cell.feasible
        ));
    }
    write_text(&args.out, &csv)?;
    manifest.write_beside(&args.out)
}

// ----------------------------------------------------------------------- epf

fn zone_label(zone: ZoneId) -> &'static str {
    match zone {
        ZoneId::I => "i",
        ZoneId::II => "ii",
        ZoneId::III => "iii",
        ZoneId::IV => "iv",
        ZoneId::V => "v",
        ZoneId::VI => "vi",
        ZoneId::VII => "vii",
    }
}

fn tier_label(tier: LikelihoodTier) -> &'static str {
    match tier {
        LikelihoodTier::Low => "low",
        LikelihoodTier::Mid => "mid",
        LikelihoodTier::High => "high",
    }
}

fn map_monetization(e: MonetizationError) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Serialize)]
struct EpfRunConfig {
    curve: String,
    cp: f64,
    cq: f64,
    p: Option<f64>,
    sweep: Option<usize>,
}

pub fn cmd_epf(globals: &Globals, args: &EpfArgs) -> Result<(), CliError> {
    let kind = match args.curve {
        crate::CurveArg::Linear => EpfKind::Linear,
        crate::CurveArg::Quadratic => EpfKind::Quadratic,
        crate::CurveArg::Cubic => EpfKind::Cubic,
    };
    let curve = EpfCurve::new(kind, args.cp).map_err(map_monetization)?;

    if let Some(p) = args.p {
        let cost = epf_cost(&curve, p).map_err(map_monetization)?;
        println!("{cost}");
        return Ok(());
    }

    let n = args.sweep.expect("clap enforces --p or --sweep");
    if n == 0 {
        return Err(CliError::Usage("--sweep must be at least 1".into()));
    }
    let zones = ZoneConfig::equal_width();
    let mut csv = String::from("p_norm,cost,zone,tier\n");
    for k in 0..n {
        let p = if n == 1 { -1.0 } else { -1.0 + 2.0 * k as f64 / (n - 1) as f64 };
        let cost = epf_cost(&curve, p).map_err(map_monetization)?;
        let zone = classify_zone(p, &zones).map_err(map_monetization)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            p,
            cost,
            zone_label(zone.zone),
            tier_label(zone.tier)
        ));
    }

    match &args.out {
        Some(out) => {
            let mut manifest = ManifestBuilder::new("epf", globals.seed);
            manifest.config(EpfRunConfig {
                curve: format!("{:?}", args.curve).to_lowercase(),
                cp: args.cp,
                cq: reactive_cost_factor(args.cp),
                p: args.p,
                sweep: args.sweep,
            });
            write_text(out, &csv)?;
            manifest.write_beside(out)
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

// -------------------------------------------------------------- derive-fleet

pub fn cmd_derive_fleet(args: &FleetArgs) -> Result<(), CliError> {
    let spec = EvPenetrationSpec {
        simultaneity: args.simultaneity,
        peak_household_power_kw: args.peak_household_kw,
        max_node_load_mw: args.max_node_load_mw,
        ev_share: args.share,
        ev_ac_rating_kva: args.ac_rating_kva,
    };
    let fleet = derive_ev_fleet(&spec).map_err(map_scenario)?;
    println!("households {}", fleet.households);
    println!("evs {}", fleet.evs);
    println!("total_ac_rating_kva {}", fleet.total_ac_rating_kva);
    Ok(())
}
