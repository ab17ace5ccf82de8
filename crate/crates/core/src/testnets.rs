//! Small hand-built networks used by unit tests and quick experiments.

use crate::network::*;

/// Two buses joined by one branch (g=1, b=-5, no shunts); two gas nodes
/// (source and load) joined by one 10 km pipe.
pub fn two_bus_one_pipe() -> IesNetwork {
    let net = IesNetwork {
        buses: vec![
            ElectricBus {
                id: 1,
                shunt_conductance: 0.0,
                shunt_susceptance: 0.0,
                has_pmu: true,
            },
            ElectricBus {
                id: 2,
                shunt_conductance: 0.0,
                shunt_susceptance: 0.0,
                has_pmu: true,
            },
        ],
        branches: vec![Branch {
            from_bus: 1,
            to_bus: 2,
            series_conductance: 1.0,
            series_susceptance: -5.0,
            current_metered: true,
        }],
        gas_nodes: vec![
            GasNode {
                id: 1,
                kind: GasNodeKind::Source { density: 50.0 },
                pressure_metered: true,
                flow_metered: false,
            },
            GasNode {
                id: 2,
                kind: GasNodeKind::Load,
                pressure_metered: true,
                flow_metered: true,
            },
        ],
        pipelines: vec![Pipeline {
            node_i: 1,
            node_j: 2,
            length: 10_000.0,
            diameter: 0.6,
            friction: 0.01,
            ratio_i: 1.0,
            ratio_j: 1.0,
        }],
        compressor_links: vec![],
        gtu_links: vec![],
        gas_constants: GasConstants::default(),
    };
    net.validate().expect("fixture must validate");
    net
}

/// The bundled desk-scale network: 3 buses / 3 branches on the electric
/// side, 4 gas nodes on a 3-pipe chain with one GTU, 16 states total.
pub fn small_network() -> IesNetwork {
    let net = IesNetwork {
        buses: vec![
            ElectricBus {
                id: 1,
                shunt_conductance: 0.0,
                shunt_susceptance: 0.02,
                has_pmu: true,
            },
            ElectricBus {
                id: 2,
                shunt_conductance: 0.0,
                shunt_susceptance: 0.015,
                has_pmu: true,
            },
            ElectricBus {
                id: 3,
                shunt_conductance: 0.0,
                shunt_susceptance: 0.01,
                has_pmu: true,
            },
        ],
        branches: vec![
            Branch {
                from_bus: 1,
                to_bus: 2,
                series_conductance: 1.2,
                series_susceptance: -9.6,
                current_metered: true,
            },
            Branch {
                from_bus: 2,
                to_bus: 3,
                series_conductance: 0.9,
                series_susceptance: -7.1,
                current_metered: true,
            },
            Branch {
                from_bus: 1,
                to_bus: 3,
                series_conductance: 0.7,
                series_susceptance: -5.8,
                current_metered: false,
            },
        ],
        gas_nodes: vec![
            GasNode {
                id: 1,
                kind: GasNodeKind::Source { density: 48.0 },
                pressure_metered: true,
                flow_metered: false,
            },
            GasNode {
                id: 2,
                kind: GasNodeKind::Load,
                pressure_metered: true,
                flow_metered: true,
            },
            GasNode {
                id: 3,
                kind: GasNodeKind::Load,
                pressure_metered: true,
                flow_metered: true,
            },
            GasNode {
                id: 4,
                kind: GasNodeKind::Load,
                pressure_metered: true,
                flow_metered: true,
            },
        ],
        pipelines: vec![
            Pipeline {
                node_i: 1,
                node_j: 2,
                length: 8_000.0,
                diameter: 0.8,
                friction: 0.01,
                ratio_i: 1.0,
                ratio_j: 1.0,
            },
            Pipeline {
                node_i: 2,
                node_j: 3,
                length: 12_000.0,
                diameter: 0.6,
                friction: 0.01,
                ratio_i: 1.0,
                ratio_j: 1.0,
            },
            Pipeline {
                node_i: 3,
                node_j: 4,
                length: 6_000.0,
                diameter: 0.6,
                friction: 0.012,
                ratio_i: 1.0,
                ratio_j: 1.0,
            },
        ],
        compressor_links: vec![],
        gtu_links: vec![GtuLink {
            gas_node: 4,
            bus: 3,
            efficiency: 2.5e7,
        }],
        gas_constants: GasConstants::default(),
    };
    net.validate().expect("fixture must validate");
    net
}
