//! JSON documents for instances and plans.
//!
//! Units are fixed and declared in every document: hours, km, kWh, kW,
//! kg CO₂ per kWh. An instance document has the top-level keys `nodes`,
//! `edges`, `stations` and `params` (plus the informational `units`):
//!
//! ```json
//! {
//!   "nodes": [{"id": 0}, {"id": 1}, {"id": 2}],
//!   "edges": [{"id": 0, "from": 0, "to": 1, "length_km": 120.0,
//!              "speed_min_kmh": 50.0, "speed_max_kmh": 100.0,
//!              "power_coeffs": [5.0, 0.59, 0.0005, 7.7e-5]}],
//!   "stations": [{"node": 1,
//!                 "charge_curve": {"minutes": [0, 48, 52, 57, 65, 77],
//!                                  "soc_fraction": [0, 0.8, 0.85, 0.9, 0.95, 1]},
//!                 "intensity": {"hours": [0, 12, 24], "kg_per_kwh": [0.4, 0.2, 0.4]}}],
//!   "params": {"origin": 0, "destination": 2, "deadline_h": 10.0,
//!              "battery_kwh": 1000.0, "initial_soc_kwh": 1000.0,
//!              "max_stops": 2, "reservation": 0.05, "wait_min_h": 0.25,
//!              "wait_max_h": 3.0, "charge_max_h": 1.5,
//!              "efficiency": 1.0, "objective": "carbon"}
//! }
//! ```
//!
//! `charge_curve` is optional (default curve scaled to the battery).
//! `intensity` is one of `{"constant": v}` (optionally with `horizon_h`),
//! inline `hours`/`kg_per_kwh` points, or `{"trace": "file.txt"}` naming a
//! two-column text file (hours, kg/kWh) relative to the instance file.

use std::fs;
use std::path::{Path, PathBuf};

use greenhaul_core::charging::{ChargeCurve, IntensitySignal};
use greenhaul_core::network::Node;
use greenhaul_core::plan::{Arrival, Summary};
use greenhaul_core::{
    validate_instance, EdgeId, Instance, NodeId, ObjectiveMode, Params, Plan, RoadSegment, Stage,
    StationData, Stop, TransportGraph,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub time: String,
    pub distance: String,
    pub energy: String,
    pub power: String,
    pub intensity: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            time: "h".into(),
            distance: "km".into(),
            energy: "kWh".into(),
            power: "kW".into(),
            intensity: "kg/kWh".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    pub length_km: f64,
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    /// `[a0, a1, a2, a3]` of the power fit `a0 + a1·r + a2·r² + a3·r³` (kW).
    pub power_coeffs: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDoc {
    pub minutes: Vec<f64>,
    pub soc_fraction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntensityDoc {
    Constant {
        constant: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon_h: Option<f64>,
    },
    Points {
        hours: Vec<f64>,
        kg_per_kwh: Vec<f64>,
    },
    Trace {
        trace: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationDoc {
    pub node: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_curve: Option<CurveDoc>,
    pub intensity: IntensityDoc,
}

fn default_efficiency() -> f64 {
    1.0
}

fn default_objective() -> String {
    "carbon".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub origin: u32,
    pub destination: u32,
    pub deadline_h: f64,
    pub battery_kwh: f64,
    pub initial_soc_kwh: f64,
    pub max_stops: usize,
    pub reservation: f64,
    pub wait_min_h: f64,
    pub wait_max_h: f64,
    pub charge_max_h: f64,
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    #[serde(default = "default_objective")]
    pub objective: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    #[serde(default)]
    pub units: Units,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
    pub stations: Vec<StationDoc>,
    pub params: ParamsDoc,
}

/// Reads a two-column (hours, kg/kWh) trace. Blank lines, `#` comments
/// and a non-numeric header line are skipped; columns may be separated by
/// commas or whitespace.
pub fn read_trace(path: &Path) -> Result<IntensitySignal> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_trace(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn parse_trace(text: &str) -> std::result::Result<IntensitySignal, String> {
    let mut hours = Vec::new();
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                hours.push(v[0]);
                values.push(v[1]);
            }
            None if hours.is_empty() => continue, // header
            _ => return Err(format!("line {}: expected `hours intensity`", n + 1)),
        }
    }
    IntensitySignal::new(hours, values).map_err(|e| e.to_string())
}

fn curve_from_doc(doc: Option<&CurveDoc>, battery: f64) -> Result<ChargeCurve> {
    match doc {
        None => Ok(ChargeCurve::default_for(battery)),
        Some(c) => {
            if c.minutes.len() != c.soc_fraction.len() {
                return Err(Error::Format("charge curve columns differ in length".into()));
            }
            Ok(ChargeCurve::new(
                c.minutes.iter().map(|m| m / 60.0).collect(),
                c.soc_fraction.iter().map(|f| f * battery).collect(),
            )?)
        }
    }
}

impl InstanceDoc {
    /// Builds and validates the instance; traces resolve against `base`.
    pub fn to_instance(&self, base: Option<&Path>) -> Result<Instance> {
        let p = &self.params;
        let objective: ObjectiveMode = p.objective.parse()?;
        let station_nodes: Vec<u32> = self.stations.iter().map(|s| s.node).collect();
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                id: NodeId(n.id),
                station: station_nodes.contains(&n.id),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| RoadSegment {
                id: EdgeId(e.id),
                from: NodeId(e.from),
                to: NodeId(e.to),
                length_km: e.length_km,
                speed_min_kmh: e.speed_min_kmh,
                speed_max_kmh: e.speed_max_kmh,
                power_coeffs: e.power_coeffs,
            })
            .collect();
        let mut stations = Vec::with_capacity(self.stations.len());
        for s in &self.stations {
            let intensity = match &s.intensity {
                IntensityDoc::Constant { constant, horizon_h } => {
                    IntensitySignal::constant(*constant, horizon_h.unwrap_or(p.deadline_h))?
                }
                IntensityDoc::Points { hours, kg_per_kwh } => {
                    IntensitySignal::new(hours.clone(), kg_per_kwh.clone())?
                }
                IntensityDoc::Trace { trace } => {
                    let path = match base {
                        Some(dir) if trace.is_relative() => dir.join(trace),
                        _ => trace.clone(),
                    };
                    read_trace(&path)?
                }
            };
            stations.push(StationData {
                node: NodeId(s.node),
                curve: curve_from_doc(s.charge_curve.as_ref(), p.battery_kwh)?,
                intensity,
            });
        }
        let instance = Instance {
            graph: TransportGraph::new(nodes, edges, stations)?,
            origin: NodeId(p.origin),
            destination: NodeId(p.destination),
            params: Params {
                deadline_h: p.deadline_h,
                battery_kwh: p.battery_kwh,
                initial_soc_kwh: p.initial_soc_kwh,
                max_stops: p.max_stops,
                reservation: p.reservation,
                wait_min_h: p.wait_min_h,
                wait_max_h: p.wait_max_h,
                charge_max_h: p.charge_max_h,
                efficiency: p.efficiency,
                objective,
            },
        };
        validate_instance(&instance).into_result()?;
        Ok(instance)
    }

    /// Document with every signal written inline.
    pub fn from_instance(instance: &Instance) -> Self {
        let g = &instance.graph;
        let p = &instance.params;
        let stations = g
            .stations()
            .iter()
            .map(|s| {
                let default = ChargeCurve::default_for(p.battery_kwh);
                let charge_curve = (s.curve != default).then(|| {
                    let bp = s.curve.breakpoints();
                    CurveDoc {
                        minutes: bp.xs().iter().map(|t| t * 60.0).collect(),
                        soc_fraction: bp.ys().iter().map(|v| v / p.battery_kwh).collect(),
                    }
                });
                let sig = s.intensity.breakpoints();
                let intensity = if s.intensity.is_constant() && sig.len() == 2 && sig.xs()[0] == 0.0 {
                    IntensityDoc::Constant {
                        constant: sig.first_y(),
                        horizon_h: Some(sig.xs()[1]),
                    }
                } else {
                    IntensityDoc::Points {
                        hours: sig.xs().to_vec(),
                        kg_per_kwh: sig.ys().to_vec(),
                    }
                };
                StationDoc {
                    node: s.node.0,
                    charge_curve,
                    intensity,
                }
            })
            .collect();
        Self {
            units: Units::default(),
            nodes: g.nodes().iter().map(|n| NodeDoc { id: n.id.0 }).collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeDoc {
                    id: e.id.0,
                    from: e.from.0,
                    to: e.to.0,
                    length_km: e.length_km,
                    speed_min_kmh: e.speed_min_kmh,
                    speed_max_kmh: e.speed_max_kmh,
                    power_coeffs: e.power_coeffs,
                })
                .collect(),
            stations,
            params: ParamsDoc {
                origin: instance.origin.0,
                destination: instance.destination.0,
                deadline_h: p.deadline_h,
                battery_kwh: p.battery_kwh,
                initial_soc_kwh: p.initial_soc_kwh,
                max_stops: p.max_stops,
                reservation: p.reservation,
                wait_min_h: p.wait_min_h,
                wait_max_h: p.wait_max_h,
                charge_max_h: p.charge_max_h,
                efficiency: p.efficiency,
                objective: p.objective.name().into(),
            },
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let doc: InstanceDoc = read_json(path)?;
    doc.to_instance(path.parent())
}

pub fn save_instance(path: &Path, instance: &Instance) -> Result<()> {
    write_json(path, &InstanceDoc::from_instance(instance))
}

pub fn instance_to_string(instance: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceDoc::from_instance(instance)).expect("plain data")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDoc {
    pub edges: Vec<u32>,
    pub times_h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopDoc {
    pub station: u32,
    pub arrival_h: f64,
    pub soc_kwh: f64,
    pub wait_h: f64,
    pub charge_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalDoc {
    pub arrival_h: f64,
    pub soc_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub objective: f64,
    pub carbon_kg: f64,
    pub energy_kwh: f64,
    pub distance_km: f64,
    pub time_h: f64,
    pub feasible: bool,
    pub min_soc_kwh: f64,
}

impl From<&Summary> for SummaryDoc {
    fn from(s: &Summary) -> Self {
        Self {
            objective: s.objective,
            carbon_kg: s.carbon_kg,
            energy_kwh: s.energy_kwh,
            distance_km: s.distance_km,
            time_h: s.time_h,
            feasible: s.feasible,
            min_soc_kwh: s.min_soc,
        }
    }
}

/// A plan with optional summary and solver metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDoc {
    #[serde(default)]
    pub units: Units,
    pub stages: Vec<StageDoc>,
    pub stops: Vec<StopDoc>,
    pub destination: ArrivalDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummaryDoc>,
    /// Upper bound on the distance to the optimum, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

impl PlanDoc {
    pub fn from_plan(plan: &Plan) -> Self {
        Self {
            units: Units::default(),
            stages: plan
                .stages
                .iter()
                .map(|s| StageDoc {
                    edges: s.edges.iter().map(|e| e.0).collect(),
                    times_h: s.times.clone(),
                })
                .collect(),
            stops: plan
                .stops
                .iter()
                .map(|s| StopDoc {
                    station: s.station.0,
                    arrival_h: s.arrival,
                    soc_kwh: s.soc,
                    wait_h: s.wait,
                    charge_h: s.charge,
                })
                .collect(),
            destination: ArrivalDoc {
                arrival_h: plan.destination.time,
                soc_kwh: plan.destination.soc,
            },
            summary: None,
            gap_bound: None,
            status: None,
        }
    }

    pub fn to_plan(&self) -> Plan {
        Plan {
            stages: self
                .stages
                .iter()
                .map(|s| Stage {
                    edges: s.edges.iter().map(|e| EdgeId(*e)).collect(),
                    times: s.times_h.clone(),
                })
                .collect(),
            stops: self
                .stops
                .iter()
                .map(|s| Stop {
                    station: NodeId(s.station),
                    arrival: s.arrival_h,
                    soc: s.soc_kwh,
                    wait: s.wait_h,
                    charge: s.charge_h,
                })
                .collect(),
            destination: Arrival {
                time: self.destination.arrival_h,
                soc: self.destination.soc_kwh,
            },
        }
    }
}

pub fn load_plan(path: &Path) -> Result<PlanDoc> {
    read_json(path)
}

pub fn save_plan(path: &Path, doc: &PlanDoc) -> Result<()> {
    write_json(path, doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use greenhaul_core::scenario::{generate, IntensityFamily, ScenarioSpec};

    #[test]
    fn trace_with_header_and_comments() {
        let s = parse_trace("hours,intensity\n# note\n0, 0.5\n1 0.25\n\n2,0.5 # end\n").unwrap();
        assert_eq!(s.breakpoints().xs(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.breakpoints().ys(), &[0.5, 0.25, 0.5]);
        assert!(parse_trace("0 1\nx y\n").is_err());
        assert!(parse_trace("0 1 2\n").is_err());
    }

    #[test]
    fn instance_round_trip() {
        for family in [
            IntensityFamily::Constant(0.39),
            IntensityFamily::Diurnal {
                mean: 0.4,
                amplitude: 0.2,
            },
        ] {
            let inst = generate(&ScenarioSpec {
                stations: 2,
                intensity: family,
                ..ScenarioSpec::default()
            })
            .unwrap();
            let text = instance_to_string(&inst);
            let doc: InstanceDoc = serde_json::from_str(&text).unwrap();
            assert_eq!(doc.to_instance(None).unwrap(), inst);
        }
    }

    #[test]
    fn bad_objective_is_rejected() {
        let inst = generate(&ScenarioSpec::default()).unwrap();
        let mut doc = InstanceDoc::from_instance(&inst);
        doc.params.objective = "speed".into();
        assert!(doc.to_instance(None).is_err());
    }
}
