//! Scenario documents.
//!
//! A scenario is a JSON object with a `schema` field. Paths inside it are
//! relative to the scenario file. Unknown keys are rejected at every level.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use tetherplan_core::planner::{Candidates, RewardMode};
use tetherplan_core::risk::{RiskConfig, RiskError};
use tetherplan_core::viewpoint::{load_default_manifolds, read_models, Affordance, AffordanceModel, TaskPose};
use tetherplan_core::workspace::{read_binary_grid, read_text_map, Cell, VoxelGrid, WorldPoint, DEFAULT_RESOLUTION};

use crate::CliError;

pub const SCENARIO_SCHEMA: &str = "tetherplan/scenario@1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapFormat {
    /// ASCII layers, one per z-slice.
    Text,
    /// Flat occupancy dump with a header.
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub path: PathBuf,
    /// Inferred from the extension when absent: `.grid` and `.bin` are binary.
    #[serde(default)]
    pub format: Option<MapFormat>,
    /// Defaults to 0.25 m for text maps; binary grids carry their own.
    #[serde(default)]
    pub resolution: Option<f64>,
    #[serde(default)]
    pub origin: Option<[f64; 3]>,
}

/// Goal candidates: every rewarding shell cell, or a fixed list.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum CandidateSpec {
    #[default]
    Auto,
    List(Vec<[usize; 3]>),
}

impl CandidateSpec {
    pub fn to_candidates(&self) -> Candidates {
        match self {
            CandidateSpec::Auto => Candidates::Auto,
            CandidateSpec::List(l) => Candidates::List(l.iter().map(|&c| Cell::from(c)).collect()),
        }
    }
}

impl Serialize for CandidateSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CandidateSpec::Auto => s.serialize_str("auto"),
            CandidateSpec::List(l) => l.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for CandidateSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = CandidateSpec;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"auto\" or a list of [i, j, k] cells")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<CandidateSpec, E> {
                if v == "auto" {
                    Ok(CandidateSpec::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<CandidateSpec, A::Error> {
                let mut out = Vec::new();
                while let Some(c) = seq.next_element::<[usize; 3]>()? {
                    out.push(c);
                }
                Ok(CandidateSpec::List(out))
            }
        }
        d.deserialize_any(V)
    }
}

mod affordance_name {
    use super::*;

    pub fn serialize<S: Serializer>(a: &Affordance, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&a.to_string().to_lowercase())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Affordance, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| {
            de::Error::custom(format!(
                "unknown affordance {s:?}, expected one of reachability, passability, manipulability, traversability"
            ))
        })
    }
}

fn default_true() -> bool {
    true
}

/// The scenario document as written, with defaults filled in once loaded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema: String,
    pub map: MapSpec,
    /// Tether reel position, m.
    pub reel: [f64; 3],
    pub start: [usize; 3],
    pub task: TaskPose,
    #[serde(with = "affordance_name")]
    pub affordance: Affordance,
    #[serde(default)]
    pub candidates: CandidateSpec,
    #[serde(default = "default_true")]
    pub allow_contacts: bool,
    /// Flight clearance, m.
    #[serde(default)]
    pub inflation_radius: f64,
    #[serde(default)]
    pub reward_mode: RewardMode,
    /// Manifold document; the built-in published manifolds when absent.
    #[serde(default)]
    pub manifolds: Option<PathBuf>,
    #[serde(default)]
    pub risk: RiskConfig,
}

/// A validated scenario with its map and manifolds loaded.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub source: PathBuf,
    pub grid: VoxelGrid,
    pub models: Vec<AffordanceModel>,
}

impl Scenario {
    pub fn reel(&self) -> WorldPoint {
        WorldPoint::from(self.spec.reel)
    }

    pub fn start(&self) -> Cell {
        Cell::from(self.spec.start)
    }

    /// Resolved scenario as pretty JSON.
    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("scenario serializes")
    }
}

fn invalid(source: &Path, field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Invalid { path: source.display().to_string(), field: field.into(), message: message.into() }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, CliError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    parse_scenario(&text, path)
}

/// Parse and validate scenario text; relative paths resolve against the
/// directory of `source`.
pub fn parse_scenario(text: &str, source: &Path) -> Result<Scenario, CliError> {
    let mut spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: source.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if spec.schema != SCENARIO_SCHEMA {
        return Err(invalid(source, "schema", format!("must be {SCENARIO_SCHEMA:?}, got {:?}", spec.schema)));
    }
    let base = source.parent().unwrap_or(Path::new("."));
    let grid = load_map(&mut spec.map, base, source)?;

    if !spec.reel.iter().all(|v| v.is_finite()) || !grid.contains_point(&WorldPoint::from(spec.reel)) {
        return Err(invalid(source, "reel", format!("{:?} lies outside the map", spec.reel)));
    }
    if !grid.in_bounds(&Cell::from(spec.start)) {
        return Err(invalid(source, "start", format!("cell {:?} lies outside the map {:?}", spec.start, grid.dims())));
    }
    if !grid.contains_point(&WorldPoint::from(spec.task.position)) {
        return Err(invalid(source, "task.position", format!("{:?} lies outside the map", spec.task.position)));
    }
    if !spec.task.heading.is_finite() {
        return Err(invalid(source, "task.heading", "must be finite"));
    }
    if let CandidateSpec::List(list) = &spec.candidates {
        if list.is_empty() {
            return Err(invalid(source, "candidates", "list is empty"));
        }
        if let Some((i, c)) = list.iter().enumerate().find(|(_, c)| !grid.in_bounds(&Cell::from(**c))) {
            return Err(invalid(source, format!("candidates[{i}]"), format!("cell {c:?} lies outside the map")));
        }
    }
    if !(spec.inflation_radius >= 0.0 && spec.inflation_radius.is_finite()) {
        return Err(invalid(source, "inflation_radius", "must be non-negative and finite"));
    }
    if let Err(RiskError::InvalidConfig { field, reason }) = spec.risk.validate() {
        return Err(invalid(source, format!("risk.{field}"), reason));
    }

    let models = match &spec.manifolds {
        None => load_default_manifolds(),
        Some(p) => {
            let full = base.join(p);
            let text = fs::read_to_string(&full)
                .map_err(|e| invalid(source, "manifolds", format!("cannot read {}: {e}", full.display())))?;
            read_models(&text).map_err(|e| invalid(source, "manifolds", e.to_string()))?
        }
    };
    if !models.iter().any(|m| m.affordance == spec.affordance) {
        return Err(invalid(source, "manifolds", format!("no model for {}", spec.affordance)));
    }
    Ok(Scenario { spec, source: source.to_path_buf(), grid, models })
}

fn load_map(map: &mut MapSpec, base: &Path, source: &Path) -> Result<VoxelGrid, CliError> {
    let full = base.join(&map.path);
    let format = *map.format.get_or_insert_with(|| match full.extension().and_then(|e| e.to_str()) {
        Some("grid" | "bin") => MapFormat::Binary,
        _ => MapFormat::Text,
    });
    let unreadable = |e: std::io::Error| invalid(source, "map.path", format!("cannot read {}: {e}", full.display()));
    let grid = match format {
        MapFormat::Text => {
            let res = *map.resolution.get_or_insert(DEFAULT_RESOLUTION);
            let origin = *map.origin.get_or_insert([0.0; 3]);
            if !(res > 0.0 && res.is_finite()) {
                return Err(invalid(source, "map.resolution", "must be positive and finite"));
            }
            if !origin.iter().all(|v| v.is_finite()) {
                return Err(invalid(source, "map.origin", "must be finite"));
            }
            let text = fs::read_to_string(&full).map_err(unreadable)?;
            read_text_map(&text, res, WorldPoint::from(origin))
                .map_err(|e| invalid(source, "map.path", format!("{}: {e}", full.display())))
        }
        MapFormat::Binary => {
            let file = fs::File::open(&full).map_err(unreadable)?;
            let grid = read_binary_grid(std::io::BufReader::new(file))
                .map_err(|e| invalid(source, "map.path", format!("{}: {e}", full.display())))?;
            // an echoed scenario repeats the header values, anything else conflicts
            if map.resolution.is_some_and(|r| r != grid.resolution()) {
                return Err(invalid(source, "map.resolution", "differs from the binary grid header"));
            }
            let o = grid.origin();
            if map.origin.is_some_and(|v| v != [o.x, o.y, o.z]) {
                return Err(invalid(source, "map.origin", "differs from the binary grid header"));
            }
            Ok(grid)
        }
    }?;
    map.resolution = Some(grid.resolution());
    let o = grid.origin();
    map.origin = Some([o.x, o.y, o.z]);
    Ok(grid)
}
