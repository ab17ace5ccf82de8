//! Scenario files: one human-editable TOML document per scenario holding
//! the network, default sensors, noise levels, truth-generation knobs and
//! run parameters. Loading validates everything; the parsed scenario can
//! be serialized back to an equivalent document.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lstm::SyntheticLoadConfig;
use crate::measurement::{NoiseConfig, SensorConfig};
use crate::network::*;

/// Time grid of a tracking or simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dt_seconds: f64,
    pub steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dt_seconds: 300.0,
            steps: 288,
        }
    }
}

/// Filter tuning: smoothing indices, process noise and initialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterConfig {
    pub alpha: f64,
    pub beta: f64,
    pub process_sigma_electric: f64,
    pub process_sigma_density: f64,
    pub process_sigma_flow: f64,
    pub init_sigma_electric: f64,
    pub init_sigma_density: f64,
    pub init_sigma_flow: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            alpha: 0.8,
            beta: 0.5,
            process_sigma_electric: 1e-4,
            process_sigma_density: 1e-3,
            process_sigma_flow: 1e-3,
            init_sigma_electric: 0.01,
            init_sigma_density: 0.1,
            init_sigma_flow: 0.5,
        }
    }
}

/// Parameters of the synthetic electric ground-truth process: smooth
/// daily modulation around a seeded per-bus operating point with AR(1)
/// roughness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectricTruthConfig {
    pub voltage_spread: f64,
    pub angle_spread: f64,
    pub daily_amplitude: f64,
    pub angle_daily_amplitude: f64,
    pub noise_sigma: f64,
    pub noise_rho: f64,
}

impl Default for ElectricTruthConfig {
    fn default() -> Self {
        ElectricTruthConfig {
            voltage_spread: 0.04,
            angle_spread: 0.25,
            daily_amplitude: 0.01,
            angle_daily_amplitude: 0.02,
            noise_sigma: 2e-4,
            noise_rho: 0.95,
        }
    }
}

/// Synthetic gas-load generation horizon and shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadGenConfig {
    pub days: usize,
    #[serde(flatten)]
    pub shape: SyntheticLoadConfig,
}

impl Default for LoadGenConfig {
    fn default() -> Self {
        LoadGenConfig {
            days: 30,
            shape: SyntheticLoadConfig::default(),
        }
    }
}

/// LSTM architecture and training budget for this scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LstmScenarioConfig {
    pub layers: usize,
    pub hidden: usize,
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch: usize,
    pub max_train_pairs: Option<usize>,
    /// Training budget for grid cells (smaller than the main budget).
    pub grid_epochs: usize,
    pub grid_max_train_pairs: Option<usize>,
}

impl Default for LstmScenarioConfig {
    fn default() -> Self {
        LstmScenarioConfig {
            layers: 3,
            hidden: 80,
            window: 5,
            epochs: 200,
            learning_rate: 1e-3,
            batch: 64,
            max_train_pairs: None,
            grid_epochs: 8,
            grid_max_train_pairs: Some(1200),
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub network: IesNetwork,
    pub sensors: SensorConfig,
    /// Synthetic mean load per gas node id (kg/s); nodes absent here have
    /// zero intrinsic draw.
    pub mean_loads: BTreeMap<usize, f64>,
    /// Constant electric power setpoint per GTU link (W), aligned with
    /// `network.gtu_links`.
    pub gtu_powers: Vec<f64>,
    pub run: RunConfig,
    pub noise: NoiseConfig,
    pub filter: FilterConfig,
    pub electric_truth: ElectricTruthConfig,
    pub load_gen: LoadGenConfig,
    pub lstm: LstmScenarioConfig,
}

// ---------------------------------------------------------------------
// On-disk representation.

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    #[serde(default = "default_schema_version")]
    schema_version: u32,
    #[serde(default)]
    name: String,
    #[serde(default)]
    run: Option<RunConfig>,
    electric: ElectricSection,
    gas: GasSection,
    #[serde(default)]
    gtus: Vec<GtuEntry>,
    noise: NoiseSection,
    #[serde(default)]
    filter: Option<FilterConfig>,
    #[serde(default)]
    loads: Option<LoadGenConfig>,
    #[serde(default)]
    lstm: Option<LstmScenarioConfig>,
}

fn default_schema_version() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ElectricSection {
    #[serde(default)]
    truth: Option<ElectricTruthConfig>,
    buses: Vec<BusEntry>,
    branches: Vec<BranchEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BusEntry {
    id: usize,
    #[serde(default)]
    shunt_conductance: f64,
    #[serde(default)]
    shunt_susceptance: f64,
    #[serde(default)]
    pmu: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BranchEntry {
    from: usize,
    to: usize,
    conductance: f64,
    susceptance: f64,
    #[serde(default)]
    current_metered: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GasSection {
    #[serde(default = "default_sound_speed")]
    sound_speed: f64,
    nodes: Vec<GasNodeEntry>,
    pipelines: Vec<PipelineEntry>,
    #[serde(default)]
    compressors: Vec<CompressorEntry>,
}

fn default_sound_speed() -> f64 {
    350.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GasNodeEntry {
    id: usize,
    kind: String,
    #[serde(default)]
    density: Option<f64>,
    #[serde(default)]
    mean_load: Option<f64>,
    #[serde(default)]
    pressure_metered: bool,
    #[serde(default)]
    flow_metered: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PipelineEntry {
    from: usize,
    to: usize,
    length_km: f64,
    diameter: f64,
    #[serde(default = "default_friction")]
    friction: f64,
    #[serde(default = "one")]
    ratio_from: f64,
    #[serde(default = "one")]
    ratio_to: f64,
}

fn default_friction() -> f64 {
    0.01
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CompressorEntry {
    from: usize,
    to: usize,
    ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GtuEntry {
    gas_node: usize,
    bus: usize,
    efficiency: f64,
    power_mw: f64,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        if file.schema_version != 1 {
            return Err(Error::Parse(format!(
                "unsupported scenario schema version {}",
                file.schema_version
            )));
        }
        Scenario::from_file(file)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Scenario::from_toml_str(&text)
    }

    /// The bundled desk-scale 3-bus/4-node scenario.
    pub fn small() -> Self {
        Scenario::from_toml_str(include_str!("../../../scenarios/small.toml"))
            .expect("bundled small scenario must parse")
    }

    /// The bundled IEEE-39 + GasLib-40 reference scenario.
    pub fn reference() -> Self {
        Scenario::from_toml_str(include_str!("../../../scenarios/ieee39_gaslib40.toml"))
            .expect("bundled reference scenario must parse")
    }

    fn from_file(file: ScenarioFile) -> Result<Self> {
        let mut mean_loads = BTreeMap::new();
        let mut gas_nodes = Vec::with_capacity(file.gas.nodes.len());
        for n in &file.gas.nodes {
            let kind = match n.kind.as_str() {
                "source" => {
                    let density = n.density.ok_or_else(|| {
                        Error::Parse(format!("gas node {}: source needs a density", n.id))
                    })?;
                    GasNodeKind::Source { density }
                }
                "load" => GasNodeKind::Load,
                other => {
                    return Err(Error::Parse(format!(
                        "gas node {}: unknown kind {other:?} (expected source or load)",
                        n.id
                    )))
                }
            };
            if let Some(m) = n.mean_load {
                if m < 0.0 {
                    return Err(Error::NonpositiveParameter {
                        location: format!("gas node {}", n.id),
                        quantity: "mean load",
                        value: m,
                    });
                }
                if m > 0.0 {
                    mean_loads.insert(n.id, m);
                }
            }
            gas_nodes.push(GasNode {
                id: n.id,
                kind,
                pressure_metered: n.pressure_metered,
                flow_metered: n.flow_metered,
            });
        }

        let network = IesNetwork {
            buses: file
                .electric
                .buses
                .iter()
                .map(|b| ElectricBus {
                    id: b.id,
                    shunt_conductance: b.shunt_conductance,
                    shunt_susceptance: b.shunt_susceptance,
                    has_pmu: b.pmu,
                })
                .collect(),
            branches: file
                .electric
                .branches
                .iter()
                .map(|b| Branch {
                    from_bus: b.from,
                    to_bus: b.to,
                    series_conductance: b.conductance,
                    series_susceptance: b.susceptance,
                    current_metered: b.current_metered,
                })
                .collect(),
            gas_nodes,
            pipelines: file
                .gas
                .pipelines
                .iter()
                .map(|p| Pipeline {
                    node_i: p.from,
                    node_j: p.to,
                    length: p.length_km * 1000.0,
                    diameter: p.diameter,
                    friction: p.friction,
                    ratio_i: p.ratio_from,
                    ratio_j: p.ratio_to,
                })
                .collect(),
            compressor_links: file
                .gas
                .compressors
                .iter()
                .map(|c| CompressorLink {
                    from: c.from,
                    to: c.to,
                    ratio: c.ratio,
                })
                .collect(),
            gtu_links: file
                .gtus
                .iter()
                .map(|g| GtuLink {
                    gas_node: g.gas_node,
                    bus: g.bus,
                    efficiency: g.efficiency,
                })
                .collect(),
            gas_constants: GasConstants {
                sound_speed: file.gas.sound_speed,
            },
        };
        network.validate()?;

        for g in &file.gtus {
            if g.power_mw < 0.0 {
                return Err(Error::NonpositiveParameter {
                    location: format!("GTU at gas node {}", g.gas_node),
                    quantity: "power",
                    value: g.power_mw,
                });
            }
        }
        let gtu_powers = file.gtus.iter().map(|g| g.power_mw * 1e6).collect();

        let noise = NoiseConfig {
            voltage_variance: file.noise.voltage_variance,
            current_variance: file.noise.current_variance,
            pressure_variance: file.noise.pressure_variance_mpa2 * 1e12,
            mass_flow_variance: file.noise.mass_flow_variance,
        };
        noise.validate()?;

        let sensors = SensorConfig::from_network(&network);
        sensors.validate(&network)?;

        Ok(Scenario {
            name: file.name,
            network,
            sensors,
            mean_loads,
            gtu_powers,
            run: file.run.unwrap_or_default(),
            noise,
            filter: file.filter.unwrap_or_default(),
            electric_truth: file.electric.truth.unwrap_or_default(),
            load_gen: file.loads.unwrap_or_default(),
            lstm: file.lstm.unwrap_or_default(),
        })
    }

    fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            schema_version: 1,
            name: self.name.clone(),
            run: Some(self.run.clone()),
            electric: ElectricSection {
                truth: Some(self.electric_truth.clone()),
                buses: self
                    .network
                    .buses
                    .iter()
                    .map(|b| BusEntry {
                        id: b.id,
                        shunt_conductance: b.shunt_conductance,
                        shunt_susceptance: b.shunt_susceptance,
                        pmu: b.has_pmu,
                    })
                    .collect(),
                branches: self
                    .network
                    .branches
                    .iter()
                    .map(|b| BranchEntry {
                        from: b.from_bus,
                        to: b.to_bus,
                        conductance: b.series_conductance,
                        susceptance: b.series_susceptance,
                        current_metered: b.current_metered,
                    })
                    .collect(),
            },
            gas: GasSection {
                sound_speed: self.network.gas_constants.sound_speed,
                nodes: self
                    .network
                    .gas_nodes
                    .iter()
                    .map(|n| GasNodeEntry {
                        id: n.id,
                        kind: if n.is_source() { "source" } else { "load" }.into(),
                        density: n.source_density(),
                        mean_load: self.mean_loads.get(&n.id).copied(),
                        pressure_metered: n.pressure_metered,
                        flow_metered: n.flow_metered,
                    })
                    .collect(),
                pipelines: self
                    .network
                    .pipelines
                    .iter()
                    .map(|p| PipelineEntry {
                        from: p.node_i,
                        to: p.node_j,
                        length_km: p.length / 1000.0,
                        diameter: p.diameter,
                        friction: p.friction,
                        ratio_from: p.ratio_i,
                        ratio_to: p.ratio_j,
                    })
                    .collect(),
                compressors: self
                    .network
                    .compressor_links
                    .iter()
                    .map(|c| CompressorEntry {
                        from: c.from,
                        to: c.to,
                        ratio: c.ratio,
                    })
                    .collect(),
            },
            gtus: self
                .network
                .gtu_links
                .iter()
                .zip(&self.gtu_powers)
                .map(|(g, p)| GtuEntry {
                    gas_node: g.gas_node,
                    bus: g.bus,
                    efficiency: g.efficiency,
                    power_mw: p / 1e6,
                })
                .collect(),
            noise: NoiseSection {
                voltage_variance: self.noise.voltage_variance,
                current_variance: self.noise.current_variance,
                pressure_variance_mpa2: self.noise.pressure_variance / 1e12,
                mass_flow_variance: self.noise.mass_flow_variance,
            },
            filter: Some(self.filter.clone()),
            loads: Some(self.load_gen.clone()),
            lstm: Some(self.lstm.clone()),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(&self.to_file())
            .map_err(|e| Error::Parse(format!("scenario serialization: {e}")))
    }

    /// Stable content hash of the network and physical parameters, used
    /// to cross-check artifacts produced from the same scenario.
    pub fn network_hash(&self) -> String {
        let canonical = serde_json::to_string(&self.network).expect("network serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        hex_string(&digest)
    }

    /// Load nodes that receive a synthetic series and an LSTM forecast:
    /// non-source, non-GTU nodes with a configured mean load.
    pub fn forecast_nodes(&self) -> Vec<usize> {
        self.network
            .gas_nodes
            .iter()
            .filter(|n| {
                !n.is_source()
                    && self.network.gtu_at(n.id).is_none()
                    && self.mean_loads.contains_key(&n.id)
            })
            .map(|n| n.id)
            .collect()
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NoiseSection {
    voltage_variance: f64,
    current_variance: f64,
    /// Pressure variance in MPa^2 (converted to Pa^2 internally).
    pressure_variance_mpa2: f64,
    mass_flow_variance: f64,
}
