//! Scenario files: the JSON description of an experiment.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use bfv_core::domain::{Link, Server, ServerGraph, UserDevice};
use bfv_core::{
    validate_instance, BlockchainParams, CostTable, DeviceClass, Instance, MmSettings, ServerId,
    UserId, ValidationErrors,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sweep::SweepSpec;

/// Servers assumed when a scenario lists none.
pub const DEFAULT_SERVER_COUNT: u32 = 50;
/// Miners generated when a scenario lists no users.
pub const DEFAULT_MINER_COUNT: u32 = 50;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at `{field}` (line {line}, column {column}): {message}")]
    Parse {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Validation(#[from] ValidationErrors),
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerEntry {
    pub id: ServerId,
    #[serde(default = "mec_capacity")]
    pub capacity_hz: f64,
    #[serde(default = "mec_power")]
    pub power_w: f64,
}

fn mec_capacity() -> f64 {
    Server::<f64>::mec(0).capacity_hz
}

fn mec_power() -> f64 {
    Server::<f64>::mec(0).power_w
}

/// A user as written in a scenario; omitted fields take the device-class
/// defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub id: UserId,
    pub class: DeviceClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_capacity_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uplink_rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_miner: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_tx_generator: Option<bool>,
}

impl UserEntry {
    pub fn device(&self) -> UserDevice<f64> {
        let mut u = UserDevice::new(self.id, self.class);
        if let Some(v) = self.local_capacity_hz {
            u.local_capacity_hz = v;
        }
        if let Some(v) = self.local_power_w {
            u.local_power_w = v;
        }
        if let Some(v) = self.tx_power_w {
            u.tx_power_w = v;
        }
        if let Some(v) = self.uplink_rate_bps {
            u.uplink_rate_bps = v;
        }
        if let Some(v) = self.is_miner {
            u.is_miner = v;
        }
        if let Some(v) = self.is_tx_generator {
            u.is_tx_generator = v;
        }
        u
    }
}

/// Either an explicit user list or a generated population of miners, one
/// third IoT sensors and the rest mobile users.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Users {
    List(Vec<UserEntry>),
    Population { miner_count: u32 },
}

impl Default for Users {
    fn default() -> Self {
        Users::Population {
            miner_count: DEFAULT_MINER_COUNT,
        }
    }
}

impl Users {
    pub fn devices(&self) -> Vec<UserDevice<f64>> {
        match self {
            Users::List(entries) => entries.iter().map(UserEntry::device).collect(),
            Users::Population { miner_count } => UserDevice::population(*miner_count),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PopulationDoc {
    #[serde(alias = "count")]
    miner_count: u32,
}

/// Overrides for the solver defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl SolverSpec {
    /// Fields set in `overrides` win.
    pub fn merged(&self, overrides: &SolverSpec) -> SolverSpec {
        SolverSpec {
            mu: overrides.mu.or(self.mu),
            max_iter: overrides.max_iter.or(self.max_iter),
            tol: overrides.tol.or(self.tol),
        }
    }

    pub fn settings(&self) -> MmSettings {
        let mut s = MmSettings {
            mu: self.mu,
            ..MmSettings::default()
        };
        if let Some(n) = self.max_iter {
            s.max_iter = n;
        }
        if let Some(t) = self.tol {
            s.conv_tol = t;
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    servers: Option<Vec<ServerEntry>>,
    #[serde(default)]
    links: Vec<Link<f64>>,
    #[serde(default)]
    users: Option<serde_json::Value>,
    #[serde(default)]
    params: BlockchainParams,
    #[serde(default)]
    costs: CostTable,
    #[serde(default)]
    solver: SolverSpec,
    #[serde(default)]
    sweep: Option<SweepSpec>,
    #[serde(default)]
    output: OutputSpec,
}

/// A parsed and validated scenario. The raw inputs are kept so that sweeps
/// can rebuild the instance at each grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub servers: Vec<ServerEntry>,
    pub links: Vec<Link<f64>>,
    pub users: Users,
    pub params: BlockchainParams,
    pub costs: CostTable,
    pub solver: SolverSpec,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
    #[serde(skip)]
    pub instance: Instance,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} servers, {} users, {} demands",
            self.instance.graph().servers.len(),
            self.instance.users().len(),
            self.instance.demands().len()
        )
    }
}

impl Scenario {
    /// Builds the instance for the given inputs.
    pub fn build(
        servers: &[ServerEntry],
        links: &[Link<f64>],
        users: &Users,
        params: &BlockchainParams,
        costs: &CostTable,
    ) -> Result<Instance, ValidationErrors> {
        let graph = ServerGraph {
            servers: servers
                .iter()
                .map(|s| Server {
                    id: s.id,
                    capacity_hz: s.capacity_hz,
                    power_w: s.power_w,
                })
                .collect(),
            links: links.to_vec(),
        };
        validate_instance(graph, users.devices(), params.clone(), costs.clone())
    }

    pub fn settings(&self) -> MmSettings {
        self.solver.settings()
    }
}

fn parse_error(path: String, e: serde_json::Error) -> ScenarioError {
    ScenarioError::Parse {
        field: if path.is_empty() || path == "." {
            "<root>".into()
        } else {
            path
        },
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn from_str_tracked<T: DeserializeOwned>(text: &str) -> Result<T, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        parse_error(path, e.into_inner())
    })
}

fn from_value_tracked<T: DeserializeOwned>(
    prefix: &str,
    value: serde_json::Value,
) -> Result<T, ScenarioError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner.is_empty() || inner == "." {
            prefix.to_string()
        } else if inner.starts_with('[') {
            format!("{prefix}{inner}")
        } else {
            format!("{prefix}.{inner}")
        };
        parse_error(path, e.into_inner())
    })
}

/// Parses a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = from_str_tracked(text)?;
    let users = match doc.users {
        None => Users::default(),
        Some(v @ serde_json::Value::Array(_)) => Users::List(from_value_tracked("users", v)?),
        Some(v) => {
            let p: PopulationDoc = from_value_tracked("users", v)?;
            Users::Population {
                miner_count: p.miner_count,
            }
        }
    };
    let servers = doc.servers.unwrap_or_else(|| {
        (0..DEFAULT_SERVER_COUNT)
            .map(|id| ServerEntry {
                id,
                capacity_hz: mec_capacity(),
                power_w: mec_power(),
            })
            .collect()
    });
    if let Some(sweep) = &doc.sweep {
        sweep.check().map_err(ScenarioError::Sweep)?;
    }
    let instance = Scenario::build(&servers, &doc.links, &users, &doc.params, &doc.costs)?;
    Ok(Scenario {
        servers,
        links: doc.links,
        users,
        params: doc.params,
        costs: doc.costs,
        solver: doc.solver,
        sweep: doc.sweep,
        output: doc.output,
        instance,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = read_file(path)?;
    parse_scenario(&text)
}

pub fn read_file(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses any JSON document with field-path error reporting.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, ScenarioError> {
    from_str_tracked(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bfv_core::Violation;

    #[test]
    fn population_only_uses_defaults() {
        let s = parse_scenario(r#"{"users": {"miner_count": 50}}"#).unwrap();
        assert_eq!(s.instance.graph().servers.len(), 50);
        assert_eq!(s.instance.users().len(), 50);
        assert_eq!(s.params, BlockchainParams::default());
        assert_eq!(s.costs, CostTable::default());
        assert_eq!(s.instance.graph().servers[0].capacity_hz, 5e9);
        assert_eq!(s.settings(), MmSettings::default());
    }

    #[test]
    fn partial_params_keep_other_defaults() {
        let s = parse_scenario(r#"{"users": {"miner_count": 3}, "params": {"n_trans": 1000}}"#)
            .unwrap();
        assert_eq!(s.params.n_trans, 1000);
        assert_eq!(s.params.t_th_s, 1.0);
    }

    #[test]
    fn malformed_number_names_the_field() {
        let err = parse_scenario(r#"{"params": {"t_th_s": "fast"}}"#).unwrap_err();
        match err {
            ScenarioError::Parse { field, .. } => assert_eq!(field, "params.t_th_s"),
            e => panic!("{e}"),
        }
        let err = parse_scenario(r#"{"users": [{"id": 0, "class": "mobile_user", "tx_power_w": []}]}"#)
            .unwrap_err();
        match err {
            ScenarioError::Parse { field, .. } => assert_eq!(field, "users[0].tx_power_w"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn negative_capacity_is_a_validation_error() {
        let err = parse_scenario(
            r#"{"servers": [{"id": 0, "capacity_hz": -1, "power_w": 125}], "users": {"miner_count": 2}}"#,
        )
        .unwrap_err();
        match err {
            ScenarioError::Validation(v) => {
                assert!(v.contains(|x| matches!(x, Violation::NonPositiveQuantity { .. })))
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn empty_user_list_has_no_miners() {
        let err = parse_scenario(r#"{"users": []}"#).unwrap_err();
        match err {
            ScenarioError::Validation(v) => {
                assert!(v.contains(|x| matches!(x, Violation::NoMiners)))
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn explicit_users_override_class_defaults() {
        let s = parse_scenario(
            r#"{"users": [{"id": 4, "class": "iot_sensor", "local_power_w": 0.5, "is_tx_generator": false}]}"#,
        )
        .unwrap();
        let u = &s.instance.users()[0];
        assert_eq!(u.local_power_w, 0.5);
        assert_eq!(u.local_capacity_hz, 0.01e9);
        assert!(u.is_miner && !u.is_tx_generator);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            parse_scenario(r#"{"userz": []}"#),
            Err(ScenarioError::Parse { .. })
        ));
    }
}
