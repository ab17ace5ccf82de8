//! Static description of the coupled electricity-gas network.
//!
//! The electric side is a bus/branch model with per-unit series and shunt
//! admittances. The gas side is a node/pipeline model where every pipeline
//! carries two mass-flow states (one per end) and every node carries a
//! density state. Compressor stations appear in two forms: as density
//! ratios attached to pipeline ends, and as standalone ratio links that tie
//! the density of a boosted node to its feed node without adding flow
//! states.

use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Electric bus with per-unit shunt admittance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectricBus {
    pub id: usize,
    /// Shunt conductance g_i0 (per-unit).
    #[serde(default)]
    pub shunt_conductance: f64,
    /// Shunt susceptance b_i0 (per-unit).
    #[serde(default)]
    pub shunt_susceptance: f64,
    /// True when the default sensor set places a PMU here.
    #[serde(default)]
    pub has_pmu: bool,
}

/// Transmission branch with per-unit series admittance g + jb.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series conductance g_ij (per-unit).
    pub series_conductance: f64,
    /// Series susceptance b_ij (per-unit).
    pub series_susceptance: f64,
    /// True when the default sensor set meters this branch current.
    #[serde(default)]
    pub current_metered: bool,
}

/// Role of a gas node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GasNodeKind {
    /// Source node: density held at a constant value (kg/m^3).
    Source { density: f64 },
    /// Load node: node mass balance ties incident pipe flows to the draw.
    Load,
}

/// Gas network node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GasNode {
    pub id: usize,
    #[serde(flatten)]
    pub kind: GasNodeKind,
    #[serde(default)]
    pub pressure_metered: bool,
    #[serde(default)]
    pub flow_metered: bool,
}

impl GasNode {
    pub fn is_source(&self) -> bool {
        matches!(self.kind, GasNodeKind::Source { .. })
    }

    pub fn source_density(&self) -> Option<f64> {
        match self.kind {
            GasNodeKind::Source { density } => Some(density),
            GasNodeKind::Load => None,
        }
    }
}

/// Gas pipeline between two nodes.
///
/// Flow states `phi_ij` (measured at the i end) and `phi_ji` (at the j end)
/// are both positive for gas moving from `node_i` towards `node_j`. The
/// density ratios model compressors mounted directly at a pipe end and are
/// exactly 1.0 for a plain pipe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pipeline {
    pub node_i: usize,
    pub node_j: usize,
    /// Length (m).
    pub length: f64,
    /// Diameter (m).
    pub diameter: f64,
    /// Dimensionless friction factor.
    pub friction: f64,
    /// Density ratio at the i end (>= 1, exactly 1 without a compressor).
    #[serde(default = "one")]
    pub ratio_i: f64,
    /// Density ratio at the j end.
    #[serde(default = "one")]
    pub ratio_j: f64,
}

fn one() -> f64 {
    1.0
}

impl Pipeline {
    /// Cross-section area, always derived from the diameter.
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.diameter * self.diameter / 4.0
    }
}

/// Standalone compressor station: pins the density of `to` at
/// `ratio * density(from)` without carrying flow states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressorLink {
    pub from: usize,
    pub to: usize,
    pub ratio: f64,
}

/// Gas turbine unit coupling a gas node to an electric bus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtuLink {
    pub gas_node: usize,
    pub bus: usize,
    /// Energy conversion coefficient eta (W per kg/s).
    pub efficiency: f64,
}

/// Scenario-level gas constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GasConstants {
    /// Isothermal sound speed c_s (m/s).
    pub sound_speed: f64,
}

impl Default for GasConstants {
    fn default() -> Self {
        GasConstants { sound_speed: 350.0 }
    }
}

/// Validated static description of the coupled network.
///
/// Immutable after validation; shared freely across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IesNetwork {
    pub buses: Vec<ElectricBus>,
    pub branches: Vec<Branch>,
    pub gas_nodes: Vec<GasNode>,
    pub pipelines: Vec<Pipeline>,
    #[serde(default)]
    pub compressor_links: Vec<CompressorLink>,
    #[serde(default)]
    pub gtu_links: Vec<GtuLink>,
    #[serde(default)]
    pub gas_constants: GasConstants,
}

impl IesNetwork {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_gas_nodes(&self) -> usize {
        self.gas_nodes.len()
    }

    pub fn n_pipelines(&self) -> usize {
        self.pipelines.len()
    }

    /// Zero-based index of a 1-based bus id.
    pub fn bus_index(&self, id: usize) -> usize {
        id - 1
    }

    /// Zero-based index of a 1-based gas node id.
    pub fn node_index(&self, id: usize) -> usize {
        id - 1
    }

    pub fn source_ids(&self) -> Vec<usize> {
        self.gas_nodes
            .iter()
            .filter(|n| n.is_source())
            .map(|n| n.id)
            .collect()
    }

    /// Non-source node ids in ascending order. These are the nodes whose
    /// draws appear in the gas input vector.
    pub fn load_ids(&self) -> Vec<usize> {
        self.gas_nodes
            .iter()
            .filter(|n| !n.is_source())
            .map(|n| n.id)
            .collect()
    }

    /// Compressor link feeding `node`, if any.
    pub fn feeding_link(&self, node: usize) -> Option<&CompressorLink> {
        self.compressor_links.iter().find(|l| l.to == node)
    }

    pub fn gtu_at(&self, gas_node: usize) -> Option<&GtuLink> {
        self.gtu_links.iter().find(|g| g.gas_node == gas_node)
    }

    /// Validates all structural invariants. Called by the loaders; kept
    /// public so hand-built networks in tests go through the same checks.
    pub fn validate(&self) -> Result<()> {
        validate(self)
    }

    /// Bus admittance matrix G + jB from branch and shunt parameters.
    pub fn admittance_matrix(&self) -> DMatrix<Complex64> {
        let n = self.n_buses();
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        for br in &self.branches {
            let ys = Complex64::new(br.series_conductance, br.series_susceptance);
            let (f, t) = (self.bus_index(br.from_bus), self.bus_index(br.to_bus));
            y[(f, f)] += ys;
            y[(t, t)] += ys;
            y[(f, t)] -= ys;
            y[(t, f)] -= ys;
        }
        for (i, bus) in self.buses.iter().enumerate() {
            y[(i, i)] += Complex64::new(bus.shunt_conductance, bus.shunt_susceptance);
        }
        y
    }

    pub fn state_layout(&self) -> StateLayout {
        StateLayout::new(self)
    }
}

fn validate(net: &IesNetwork) -> Result<()> {
    if net.buses.is_empty() {
        return Err(Error::InvalidNetwork("no electric buses".into()));
    }
    if net.gas_nodes.is_empty() {
        return Err(Error::InvalidNetwork("no gas nodes".into()));
    }

    check_contiguous_ids("bus", net.buses.iter().map(|b| b.id))?;
    check_contiguous_ids("gas node", net.gas_nodes.iter().map(|n| n.id))?;

    let n_b = net.buses.len();
    let n_g = net.gas_nodes.len();

    for (k, br) in net.branches.iter().enumerate() {
        if br.from_bus == br.to_bus {
            return Err(Error::InvalidNetwork(format!(
                "branch {k} connects bus {} to itself",
                br.from_bus
            )));
        }
        for id in [br.from_bus, br.to_bus] {
            if id == 0 || id > n_b {
                return Err(Error::DanglingReference {
                    entity: format!("branch {k}"),
                    referent: "bus",
                    id,
                });
            }
        }
    }

    for node in &net.gas_nodes {
        if let Some(d) = node.source_density() {
            if d <= 0.0 {
                return Err(Error::NonpositiveParameter {
                    location: format!("gas node {}", node.id),
                    quantity: "source density",
                    value: d,
                });
            }
        }
    }

    let mut seen_pairs = HashSet::new();
    for (k, p) in net.pipelines.iter().enumerate() {
        let loc = format!("pipeline {} ({},{})", k, p.node_i, p.node_j);
        if p.node_i == p.node_j {
            return Err(Error::InvalidNetwork(format!("{loc} is a self-loop")));
        }
        for id in [p.node_i, p.node_j] {
            if id == 0 || id > n_g {
                return Err(Error::DanglingReference {
                    entity: format!("pipeline {k}"),
                    referent: "gas node",
                    id,
                });
            }
        }
        for (q, v) in [
            ("length", p.length),
            ("diameter", p.diameter),
            ("friction", p.friction),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::NonpositiveParameter {
                    location: loc.clone(),
                    quantity: match q {
                        "length" => "length",
                        "diameter" => "diameter",
                        _ => "friction",
                    },
                    value: v,
                });
            }
        }
        for r in [p.ratio_i, p.ratio_j] {
            if r < 1.0 || !r.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "{loc}: compressor ratio {r} must be >= 1"
                )));
            }
        }
        let key = (p.node_i.min(p.node_j), p.node_i.max(p.node_j));
        if !seen_pairs.insert(key) {
            return Err(Error::InvalidNetwork(format!(
                "{loc}: duplicate pipeline between nodes {} and {}",
                key.0, key.1
            )));
        }
    }

    let mut fed: HashSet<usize> = HashSet::new();
    for (k, l) in net.compressor_links.iter().enumerate() {
        for id in [l.from, l.to] {
            if id == 0 || id > n_g {
                return Err(Error::DanglingReference {
                    entity: format!("compressor link {k}"),
                    referent: "gas node",
                    id,
                });
            }
        }
        if l.ratio < 1.0 || !l.ratio.is_finite() {
            return Err(Error::InvalidNetwork(format!(
                "compressor link {}-{}: ratio {} must be >= 1",
                l.from, l.to, l.ratio
            )));
        }
        if net.gas_nodes[net.node_index(l.to)].is_source() {
            return Err(Error::InvalidNetwork(format!(
                "compressor link {}-{}: boosted node {} is a source",
                l.from, l.to, l.to
            )));
        }
        if !fed.insert(l.to) {
            return Err(Error::InvalidNetwork(format!(
                "gas node {} is fed by more than one compressor link",
                l.to
            )));
        }
    }
    // Ratio links must form chains that terminate, never cycles.
    for node in &net.gas_nodes {
        let mut cur = node.id;
        let mut hops = 0;
        while let Some(link) = net.feeding_link(cur) {
            cur = link.from;
            hops += 1;
            if hops > n_g {
                return Err(Error::InvalidNetwork(
                    "compressor links form a cycle".into(),
                ));
            }
        }
    }

    for (k, g) in net.gtu_links.iter().enumerate() {
        if g.gas_node == 0 || g.gas_node > n_g {
            return Err(Error::DanglingReference {
                entity: format!("GTU link {k}"),
                referent: "gas node",
                id: g.gas_node,
            });
        }
        if g.bus == 0 || g.bus > n_b {
            return Err(Error::DanglingReference {
                entity: format!("GTU link {k}"),
                referent: "bus",
                id: g.bus,
            });
        }
        if g.efficiency <= 0.0 {
            return Err(Error::NonpositiveParameter {
                location: format!("GTU link {k}"),
                quantity: "efficiency",
                value: g.efficiency,
            });
        }
        if net.gas_nodes[net.node_index(g.gas_node)].is_source() {
            return Err(Error::InvalidNetwork(format!(
                "GTU link {k}: gas node {} is a source, expected a load node",
                g.gas_node
            )));
        }
    }

    if net.gas_constants.sound_speed <= 0.0 {
        return Err(Error::NonpositiveParameter {
            location: "gas constants".into(),
            quantity: "sound speed",
            value: net.gas_constants.sound_speed,
        });
    }

    check_connected(
        "electric",
        n_b,
        net.branches
            .iter()
            .map(|b| (b.from_bus - 1, b.to_bus - 1)),
    )?;
    check_connected(
        "gas",
        n_g,
        net.pipelines
            .iter()
            .map(|p| (p.node_i - 1, p.node_j - 1))
            .chain(net.compressor_links.iter().map(|l| (l.from - 1, l.to - 1))),
    )?;

    // Every gas component must contain a source; with connectivity already
    // established this reduces to the existence of at least one source.
    if !net.gas_nodes.iter().any(|n| n.is_source()) {
        return Err(Error::InvalidNetwork("gas network has no source node".into()));
    }

    Ok(())
}

fn check_contiguous_ids(what: &str, ids: impl Iterator<Item = usize>) -> Result<()> {
    let mut seen = HashMap::new();
    let mut count = 0usize;
    for (pos, id) in ids.enumerate() {
        if let Some(prev) = seen.insert(id, pos) {
            return Err(Error::InvalidNetwork(format!(
                "duplicate {what} id {id} (entries {prev} and {pos})"
            )));
        }
        count += 1;
    }
    for id in 1..=count {
        if !seen.contains_key(&id) {
            return Err(Error::InvalidNetwork(format!(
                "{what} ids must be contiguous from 1: missing id {id}"
            )));
        }
    }
    Ok(())
}

fn check_connected(
    which: &'static str,
    n: usize,
    edges: impl Iterator<Item = (usize, usize)>,
) -> Result<()> {
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    let missing: Vec<usize> = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| !**s)
        .map(|(i, _)| i + 1)
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Disconnected {
            network: which,
            detail: format!("unreachable ids {missing:?}"),
        })
    }
}

/// Identity of a single entry of the joint state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateComponent {
    /// Voltage real part at a bus (1-based id).
    VoltageReal(usize),
    /// Voltage imaginary part at a bus.
    VoltageImag(usize),
    /// Density at a gas node.
    Density(usize),
    /// Mass flow at the i end of a pipeline (index into the pipeline list).
    FlowFrom(usize),
    /// Mass flow at the j end of a pipeline.
    FlowTo(usize),
}

/// Deterministic mapping between network components and positions in the
/// joint state vector: interleaved (e, f) per bus, then node densities,
/// then (phi_ij, phi_ji) per pipeline.
#[derive(Debug, Clone)]
pub struct StateLayout {
    n_b: usize,
    n_g: usize,
    n_p: usize,
    names: Vec<String>,
}

impl StateLayout {
    fn new(net: &IesNetwork) -> Self {
        let (n_b, n_g, n_p) = (net.n_buses(), net.n_gas_nodes(), net.n_pipelines());
        let mut names = Vec::with_capacity(2 * n_b + n_g + 2 * n_p);
        for b in 1..=n_b {
            names.push(format!("e_{b}"));
            names.push(format!("f_{b}"));
        }
        for n in 1..=n_g {
            names.push(format!("rho_{n}"));
        }
        for p in &net.pipelines {
            names.push(format!("phi_{}_{}", p.node_i, p.node_j));
            names.push(format!("phi_{}_{}", p.node_j, p.node_i));
        }
        StateLayout { n_b, n_g, n_p, names }
    }

    pub fn n_x(&self) -> usize {
        2 * self.n_b + self.n_g + 2 * self.n_p
    }

    pub fn n_electric(&self) -> usize {
        2 * self.n_b
    }

    pub fn n_gas(&self) -> usize {
        self.n_g + 2 * self.n_p
    }

    pub fn e_index(&self, bus: usize) -> usize {
        2 * (bus - 1)
    }

    pub fn f_index(&self, bus: usize) -> usize {
        2 * (bus - 1) + 1
    }

    pub fn rho_index(&self, node: usize) -> usize {
        2 * self.n_b + (node - 1)
    }

    /// Index of phi_ij for pipeline `p` (zero-based pipeline index).
    pub fn flow_from_index(&self, p: usize) -> usize {
        2 * self.n_b + self.n_g + 2 * p
    }

    /// Index of phi_ji for pipeline `p`.
    pub fn flow_to_index(&self, p: usize) -> usize {
        2 * self.n_b + self.n_g + 2 * p + 1
    }

    /// Gas-block-local index of a node density (for vectors holding only
    /// the gas state).
    pub fn gas_rho_index(&self, node: usize) -> usize {
        node - 1
    }

    pub fn gas_flow_from_index(&self, p: usize) -> usize {
        self.n_g + 2 * p
    }

    pub fn gas_flow_to_index(&self, p: usize) -> usize {
        self.n_g + 2 * p + 1
    }

    pub fn component(&self, index: usize) -> StateComponent {
        let ne = 2 * self.n_b;
        if index < ne {
            let bus = index / 2 + 1;
            if index % 2 == 0 {
                StateComponent::VoltageReal(bus)
            } else {
                StateComponent::VoltageImag(bus)
            }
        } else if index < ne + self.n_g {
            StateComponent::Density(index - ne + 1)
        } else {
            let k = index - ne - self.n_g;
            if k % 2 == 0 {
                StateComponent::FlowFrom(k / 2)
            } else {
                StateComponent::FlowTo(k / 2)
            }
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testnets;

    #[test]
    fn two_bus_admittance() {
        let net = testnets::two_bus_one_pipe();
        let y = net.admittance_matrix();
        assert_eq!(y[(0, 0)].re, 1.0);
        assert_eq!(y[(0, 1)].re, -1.0);
        assert_eq!(y[(0, 0)].im, -5.0);
        assert_eq!(y[(0, 1)].im, 5.0);
        assert_eq!(y[(1, 1)], y[(0, 0)]);
    }

    #[test]
    fn empty_branch_list_gives_shunt_diagonal() {
        let mut net = testnets::two_bus_one_pipe();
        net.branches.clear();
        net.buses[0].shunt_conductance = 0.3;
        net.buses[0].shunt_susceptance = -0.7;
        let y = net.admittance_matrix();
        assert_eq!(y[(0, 0)], Complex64::new(0.3, -0.7));
        assert_eq!(y[(0, 1)], Complex64::new(0.0, 0.0));
        assert_eq!(y[(1, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn admittance_row_sums_match_per_branch_accumulation() {
        // Independent oracle: off-diagonal row sum equals the negated
        // diagonal minus the shunt, bus by bus.
        let net = testnets::small_network();
        let y = net.admittance_matrix();
        for (i, bus) in net.buses.iter().enumerate() {
            let mut off = Complex64::new(0.0, 0.0);
            for j in 0..net.n_buses() {
                if j != i {
                    off += y[(i, j)];
                }
            }
            let shunt = Complex64::new(bus.shunt_conductance, bus.shunt_susceptance);
            let expected = -(y[(i, i)] - shunt);
            assert!((off - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn admittance_pattern_matches_adjacency() {
        let net = testnets::small_network();
        let y = net.admittance_matrix();
        let mut adjacent = vec![vec![false; net.n_buses()]; net.n_buses()];
        for br in &net.branches {
            adjacent[br.from_bus - 1][br.to_bus - 1] = true;
            adjacent[br.to_bus - 1][br.from_bus - 1] = true;
        }
        for i in 0..net.n_buses() {
            for j in 0..net.n_buses() {
                if i != j {
                    assert_eq!(y[(i, j)].norm() > 0.0, adjacent[i][j], "entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn small_network_layout_dimensions() {
        let net = testnets::small_network();
        let layout = net.state_layout();
        assert_eq!(layout.n_x(), 6 + 4 + 6);
        assert_eq!(layout.n_electric(), 6);
        assert_eq!(layout.n_gas(), 10);
    }

    #[test]
    fn layout_is_a_bijection() {
        let net = testnets::small_network();
        let layout = net.state_layout();
        let mut seen = vec![false; layout.n_x()];
        for bus in 1..=3 {
            for ix in [layout.e_index(bus), layout.f_index(bus)] {
                assert!(!seen[ix]);
                seen[ix] = true;
            }
        }
        for node in 1..=4 {
            let ix = layout.rho_index(node);
            assert!(!seen[ix]);
            seen[ix] = true;
        }
        for p in 0..3 {
            for ix in [layout.flow_from_index(p), layout.flow_to_index(p)] {
                assert!(!seen[ix]);
                seen[ix] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
        // And back: component() inverts every index.
        for ix in 0..layout.n_x() {
            let back = match layout.component(ix) {
                StateComponent::VoltageReal(b) => layout.e_index(b),
                StateComponent::VoltageImag(b) => layout.f_index(b),
                StateComponent::Density(n) => layout.rho_index(n),
                StateComponent::FlowFrom(p) => layout.flow_from_index(p),
                StateComponent::FlowTo(p) => layout.flow_to_index(p),
            };
            assert_eq!(back, ix);
        }
    }

    #[test]
    fn dangling_pipeline_reference_rejected() {
        let mut net = testnets::small_network();
        net.pipelines[0].node_j = 99;
        let err = net.validate().unwrap_err();
        assert!(matches!(err, Error::DanglingReference { id: 99, .. }));
    }

    #[test]
    fn disconnected_gas_network_rejected() {
        let mut net = testnets::small_network();
        net.pipelines.pop();
        let err = net.validate().unwrap_err();
        assert!(matches!(err, Error::Disconnected { network: "gas", .. }));
    }

    #[test]
    fn nonpositive_length_rejected() {
        let mut net = testnets::small_network();
        net.pipelines[1].length = -3.0;
        let err = net.validate().unwrap_err();
        assert!(matches!(
            err,
            Error::NonpositiveParameter { quantity: "length", .. }
        ));
    }

    #[test]
    fn area_derived_from_diameter() {
        let p = Pipeline {
            node_i: 1,
            node_j: 2,
            length: 13_070.0,
            diameter: 1.0,
            friction: 0.01,
            ratio_i: 1.0,
            ratio_j: 1.0,
        };
        assert!((p.area() - std::f64::consts::PI / 4.0).abs() < 1e-15);
    }
}
