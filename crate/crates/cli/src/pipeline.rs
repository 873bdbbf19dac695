//! Planning pipeline and artifact writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use tetherplan_core::planner::{PlanResult, Planner, RewardMode};
use tetherplan_core::risk::RiskElement;
use tetherplan_core::tether::write_trace;
use tetherplan_core::viewpoint::reward_field;
use tetherplan_core::workspace::{VoxelGrid, WorldPoint};

use crate::scenario::{Scenario, ScenarioSpec};
use crate::CliError;

pub const PLAN_SCHEMA: &str = "tetherplan/plan@1";
pub const PLAN_FILE: &str = "plan.json";
pub const RISK_REPORT_FILE: &str = "risk_report.csv";
pub const TETHER_TRACE_FILE: &str = "tether_trace.jsonl";
pub const GEOMETRY_FILE: &str = "geometry.txt";

/// Command-line overrides for one run.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Reserved; nothing in the pipeline is random.
    pub seed: Option<u64>,
    pub rays: Option<usize>,
    pub no_inflate: bool,
    pub reward_mode: Option<RewardMode>,
    pub timestamps: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub plan: PlanResult,
    /// Planning grid after inflation.
    pub flight_grid: VoxelGrid,
    pub files: Vec<PathBuf>,
}

/// Settings in force after command-line overrides.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Effective {
    pub inflation_radius: f64,
    pub isovist_rays: usize,
    pub reward_mode: RewardMode,
}

#[derive(Serialize)]
struct TetherSummary {
    contact_count: usize,
    /// Contacts after the reel, in chain order.
    contacts: Vec<[f64; 3]>,
    static_length: f64,
    effective_length: f64,
    commanded_length: f64,
}

#[derive(Serialize)]
struct PlanDocument<'a> {
    schema: &'static str,
    scenario: &'a ScenarioSpec,
    effective: Effective,
    goal: [usize; 3],
    path: Vec<[usize; 3]>,
    waypoints: Vec<[f64; 3]>,
    path_length: f64,
    reward: f64,
    utility: f64,
    exact_risk: f64,
    search_cost: f64,
    tether: TetherSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
}

fn arr(p: &WorldPoint) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Plan, then write every artifact into `opts.out_dir`.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let spec = &scenario.spec;
    let mut risk = spec.risk.clone();
    if let Some(r) = opts.rays {
        if r == 0 {
            return Err(CliError::Invalid {
                path: "--rays".into(),
                field: "isovist_rays".into(),
                message: "must be at least 1".into(),
            });
        }
        risk.isovist_rays = r;
    }
    let inflation = if opts.no_inflate { 0.0 } else { spec.inflation_radius };
    let mode = opts.reward_mode.unwrap_or(spec.reward_mode);
    if let Some(seed) = opts.seed {
        log::debug!("seed {seed} ignored: the pipeline is deterministic");
    }

    let grid = &scenario.grid;
    let flight = if inflation > 0.0 { grid.inflate(inflation).map_err(plan_err)? } else { grid.clone() };
    let start = scenario.start();
    if flight.is_occupied(&start) {
        return Err(CliError::Invalid {
            path: scenario.source.display().to_string(),
            field: "start".into(),
            message: format!("cell {:?} is occupied after inflation by {inflation} m", spec.start),
        });
    }
    let field = reward_field(&scenario.models, spec.affordance, &spec.task, &flight).map_err(|e| CliError::Invalid {
        path: scenario.source.display().to_string(),
        field: "task".into(),
        message: e.to_string(),
    })?;
    log::info!("{} shell cells, {} rewarding", field.shell_cells(&flight).count(), field.rewarding_cells(&flight).count());

    let planner = Planner::with_options(&flight, grid, scenario.reel(), risk.clone(), spec.allow_contacts)?;
    let plan = planner.select_viewpoint(&start, &field, &spec.candidates.to_candidates(), mode)?;
    log::info!("goal {:?}: risk {:.6}, utility {:.6}", plan.goal().as_array(), plan.exact_risk, plan.utility);

    let effective = Effective { inflation_radius: inflation, isovist_rays: risk.isovist_rays, reward_mode: mode };
    let stamp = opts.timestamps.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
    let outputs = [
        (PLAN_FILE, plan_document(spec, &plan, effective, stamp)),
        (RISK_REPORT_FILE, risk_report(&plan)),
        (TETHER_TRACE_FILE, write_trace(&plan.tether)),
        (GEOMETRY_FILE, geometry_export(grid, &flight, &plan)),
    ];
    fs::create_dir_all(&opts.out_dir).map_err(|e| io_err(&opts.out_dir, e))?;
    let mut files = Vec::new();
    for (name, text) in outputs {
        let p = opts.out_dir.join(name);
        fs::write(&p, text).map_err(|e| io_err(&p, e))?;
        files.push(p);
    }
    Ok(RunOutput { plan, flight_grid: flight, files })
}

fn plan_err(e: tetherplan_core::workspace::WorkspaceError) -> CliError {
    CliError::Plan(e.into())
}

fn io_err(p: &Path, e: std::io::Error) -> CliError {
    CliError::Io { path: p.display().to_string(), source: e }
}

/// The plan document; field order is fixed.
pub fn plan_document(
    spec: &ScenarioSpec,
    plan: &PlanResult,
    effective: Effective,
    generated_at_unix: Option<u64>,
) -> String {
    let t = plan.final_tether();
    let doc = PlanDocument {
        schema: PLAN_SCHEMA,
        scenario: spec,
        effective,
        goal: plan.goal().as_array(),
        path: plan.path.iter().map(|c| c.as_array()).collect(),
        waypoints: plan.waypoints.iter().map(arr).collect(),
        path_length: plan.length(),
        reward: plan.reward,
        utility: plan.utility,
        exact_risk: plan.exact_risk,
        search_cost: plan.search_cost,
        tether: TetherSummary {
            contact_count: t.contact_count(),
            contacts: t.contacts()[1..].iter().map(arr).collect(),
            static_length: t.static_length(),
            effective_length: t.effective_length(),
            commanded_length: t.commanded_length(),
        },
        generated_at_unix,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plan document serializes");
    s.push('\n');
    s
}

/// Per-state risk table; the last `risk` equals the plan's exact risk.
pub fn risk_report(plan: &PlanResult) -> String {
    let mut out = String::from("state,i,j,k");
    for e in RiskElement::ALL {
        out.push(',');
        out.push_str(e.name());
    }
    out.push_str(",survival,risk\n");
    let survival = plan.profile.running_survival();
    for (i, (c, row)) in plan.path.iter().zip(&plan.profile.states).enumerate() {
        write!(out, "{i},{},{},{}", c.x, c.y, c.z).unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{},{}", survival[i], 1.0 - survival[i]).unwrap();
    }
    out
}

/// Line records for plotting: a type word followed by coordinates.
pub fn geometry_export(raw: &VoxelGrid, flight: &VoxelGrid, plan: &PlanResult) -> String {
    let mut out = String::new();
    let mut point = |kind: &str, p: &WorldPoint| writeln!(out, "{kind} {} {} {}", p.x, p.y, p.z).unwrap();
    for c in raw.occupied_cells() {
        point("obstacle", &raw.cell_center(&c));
    }
    for c in flight.occupied_cells().filter(|c| raw.is_free(c)) {
        point("inflated", &flight.cell_center(&c));
    }
    for w in &plan.waypoints {
        point("waypoint", w);
    }
    let t = plan.final_tether();
    for c in &t.contacts()[1..] {
        point("contact", c);
    }
    for (a, b) in t.segments() {
        writeln!(out, "tether_segment {} {} {} {} {} {}", a.x, a.y, a.z, b.x, b.y, b.z).unwrap();
    }
    out
}
