//! Measurement model: maps a joint state to the stacked measurement
//! vector, synthesizes noisy measurements and exposes the (constant)
//! measurement Jacobian.
//!
//! Block order is fixed: voltage real, voltage imaginary, branch current
//! real, branch current imaginary, injected current real, injected
//! current imaginary, pressures, node mass flows.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::IesNetwork;

/// Which devices are installed for a given run.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct SensorConfig {
    /// Buses with a PMU delivering e and f.
    pub pmu_buses: Vec<usize>,
    /// Indices into the branch list with a branch-current meter.
    pub branch_current_meters: Vec<usize>,
    /// Buses with injected-current measurements.
    pub injection_current_buses: Vec<usize>,
    /// Gas nodes with a pressure meter.
    pub pressure_nodes: Vec<usize>,
    /// Gas nodes with a mass-flow meter.
    pub flow_nodes: Vec<usize>,
}

impl SensorConfig {
    /// Default sensor set recorded on the network itself.
    pub fn from_network(net: &IesNetwork) -> Self {
        SensorConfig {
            pmu_buses: net
                .buses
                .iter()
                .filter(|b| b.has_pmu)
                .map(|b| b.id)
                .collect(),
            branch_current_meters: net
                .branches
                .iter()
                .enumerate()
                .filter(|(_, b)| b.current_metered)
                .map(|(k, _)| k)
                .collect(),
            injection_current_buses: net
                .buses
                .iter()
                .filter(|b| b.has_pmu)
                .map(|b| b.id)
                .collect(),
            pressure_nodes: net
                .gas_nodes
                .iter()
                .filter(|n| n.pressure_metered)
                .map(|n| n.id)
                .collect(),
            flow_nodes: net
                .gas_nodes
                .iter()
                .filter(|n| n.flow_metered)
                .map(|n| n.id)
                .collect(),
        }
    }

    pub fn validate(&self, net: &IesNetwork) -> Result<()> {
        for &b in self.pmu_buses.iter().chain(&self.injection_current_buses) {
            if b == 0 || b > net.n_buses() {
                return Err(Error::DanglingReference {
                    entity: "sensor config".into(),
                    referent: "bus",
                    id: b,
                });
            }
        }
        for &k in &self.branch_current_meters {
            if k >= net.branches.len() {
                return Err(Error::DanglingReference {
                    entity: "sensor config".into(),
                    referent: "branch",
                    id: k,
                });
            }
        }
        for &n in self.pressure_nodes.iter().chain(&self.flow_nodes) {
            if n == 0 || n > net.n_gas_nodes() {
                return Err(Error::DanglingReference {
                    entity: "sensor config".into(),
                    referent: "gas node",
                    id: n,
                });
            }
        }
        Ok(())
    }
}

/// Per-block measurement noise variances, in the channel's native units
/// squared (per-unit for electric channels, Pa for pressures, kg/s for
/// mass flows).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NoiseConfig {
    pub voltage_variance: f64,
    pub current_variance: f64,
    pub pressure_variance: f64,
    pub mass_flow_variance: f64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("voltage_variance", self.voltage_variance),
            ("current_variance", self.current_variance),
            ("pressure_variance", self.pressure_variance),
            ("mass_flow_variance", self.mass_flow_variance),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Parse(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Identity of one measurement channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Channel {
    VoltageReal(usize),
    VoltageImag(usize),
    BranchCurrentReal { branch: usize, from: usize, to: usize },
    BranchCurrentImag { branch: usize, from: usize, to: usize },
    InjectedCurrentReal(usize),
    InjectedCurrentImag(usize),
    Pressure(usize),
    NodeFlow(usize),
}

impl Channel {
    pub fn name(&self) -> String {
        match self {
            Channel::VoltageReal(b) => format!("zE_{b}"),
            Channel::VoltageImag(b) => format!("zF_{b}"),
            Channel::BranchCurrentReal { from, to, .. } => format!("zBR_{from}_{to}"),
            Channel::BranchCurrentImag { from, to, .. } => format!("zBI_{from}_{to}"),
            Channel::InjectedCurrentReal(b) => format!("zIR_{b}"),
            Channel::InjectedCurrentImag(b) => format!("zII_{b}"),
            Channel::Pressure(n) => format!("zP_{n}"),
            Channel::NodeFlow(n) => format!("zM_{n}"),
        }
    }

    /// Noise class of the channel (Table-style grouping: voltage,
    /// current, pressure, mass).
    pub fn class(&self) -> ChannelClass {
        match self {
            Channel::VoltageReal(_) | Channel::VoltageImag(_) => ChannelClass::Voltage,
            Channel::BranchCurrentReal { .. }
            | Channel::BranchCurrentImag { .. }
            | Channel::InjectedCurrentReal(_)
            | Channel::InjectedCurrentImag(_) => ChannelClass::Current,
            Channel::Pressure(_) => ChannelClass::Pressure,
            Channel::NodeFlow(_) => ChannelClass::MassFlow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelClass {
    Voltage,
    Current,
    Pressure,
    MassFlow,
}

/// Measurement values together with their per-entry noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub values: DVector<f64>,
    pub variances: DVector<f64>,
}

/// Signed pipe-end flow coefficients whose sum is the mass flow delivered
/// at `node`: arrivals (phi_ji of pipes ending here) minus departures
/// (phi_ij of pipes starting here). Indices are into the joint state.
pub fn node_flow_terms(
    net: &IesNetwork,
    layout: &crate::network::StateLayout,
    node: usize,
) -> Vec<(usize, f64)> {
    let mut terms = Vec::new();
    for (p, pipe) in net.pipelines.iter().enumerate() {
        if pipe.node_j == node {
            terms.push((layout.flow_to_index(p), 1.0));
        }
        if pipe.node_i == node {
            terms.push((layout.flow_from_index(p), -1.0));
        }
    }
    terms
}

/// Linear measurement model: `h(x) = C x` with a constant Jacobian `C`.
pub struct MeasurementModel {
    channels: Vec<Channel>,
    c: DMatrix<f64>,
    variances: DVector<f64>,
}

impl MeasurementModel {
    pub fn new(net: &IesNetwork, sensors: &SensorConfig, noise: &NoiseConfig) -> Result<Self> {
        sensors.validate(net)?;
        noise.validate()?;
        let layout = net.state_layout();
        let mut channels = Vec::new();

        for &b in &sensors.pmu_buses {
            channels.push(Channel::VoltageReal(b));
        }
        for &b in &sensors.pmu_buses {
            channels.push(Channel::VoltageImag(b));
        }
        for &k in &sensors.branch_current_meters {
            let br = &net.branches[k];
            channels.push(Channel::BranchCurrentReal {
                branch: k,
                from: br.from_bus,
                to: br.to_bus,
            });
        }
        for &k in &sensors.branch_current_meters {
            let br = &net.branches[k];
            channels.push(Channel::BranchCurrentImag {
                branch: k,
                from: br.from_bus,
                to: br.to_bus,
            });
        }
        for &b in &sensors.injection_current_buses {
            channels.push(Channel::InjectedCurrentReal(b));
        }
        for &b in &sensors.injection_current_buses {
            channels.push(Channel::InjectedCurrentImag(b));
        }
        for &n in &sensors.pressure_nodes {
            channels.push(Channel::Pressure(n));
        }
        for &n in &sensors.flow_nodes {
            channels.push(Channel::NodeFlow(n));
        }

        let y = net.admittance_matrix();
        let c_s2 = net.gas_constants.sound_speed.powi(2);
        let mut c = DMatrix::<f64>::zeros(channels.len(), layout.n_x());
        for (row, ch) in channels.iter().enumerate() {
            match ch {
                Channel::VoltageReal(b) => c[(row, layout.e_index(*b))] = 1.0,
                Channel::VoltageImag(b) => c[(row, layout.f_index(*b))] = 1.0,
                Channel::BranchCurrentReal { branch, from, to } => {
                    let br = &net.branches[*branch];
                    let bus_i = &net.buses[from - 1];
                    let (g, b_) = (br.series_conductance, br.series_susceptance);
                    let (g0, b0) = (bus_i.shunt_conductance, bus_i.shunt_susceptance);
                    c[(row, layout.e_index(*from))] = g + g0;
                    c[(row, layout.f_index(*from))] = -(b_ + b0);
                    c[(row, layout.e_index(*to))] = -g;
                    c[(row, layout.f_index(*to))] = b_;
                }
                Channel::BranchCurrentImag { branch, from, to } => {
                    let br = &net.branches[*branch];
                    let bus_i = &net.buses[from - 1];
                    let (g, b_) = (br.series_conductance, br.series_susceptance);
                    let (g0, b0) = (bus_i.shunt_conductance, bus_i.shunt_susceptance);
                    c[(row, layout.e_index(*from))] = b_ + b0;
                    c[(row, layout.f_index(*from))] = g + g0;
                    c[(row, layout.e_index(*to))] = -b_;
                    c[(row, layout.f_index(*to))] = -g;
                }
                Channel::InjectedCurrentReal(b) => {
                    for i in 1..=net.n_buses() {
                        let ybi = y[(b - 1, i - 1)];
                        if ybi.re != 0.0 || ybi.im != 0.0 {
                            c[(row, layout.e_index(i))] = ybi.re;
                            c[(row, layout.f_index(i))] = -ybi.im;
                        }
                    }
                }
                Channel::InjectedCurrentImag(b) => {
                    for i in 1..=net.n_buses() {
                        let ybi = y[(b - 1, i - 1)];
                        if ybi.re != 0.0 || ybi.im != 0.0 {
                            c[(row, layout.e_index(i))] = ybi.im;
                            c[(row, layout.f_index(i))] = ybi.re;
                        }
                    }
                }
                Channel::Pressure(n) => c[(row, layout.rho_index(*n))] = c_s2,
                Channel::NodeFlow(n) => {
                    for (ix, coeff) in node_flow_terms(net, &layout, *n) {
                        c[(row, ix)] += coeff;
                    }
                }
            }
        }

        let variances = DVector::from_fn(channels.len(), |r, _| match channels[r].class() {
            ChannelClass::Voltage => noise.voltage_variance,
            ChannelClass::Current => noise.current_variance,
            ChannelClass::Pressure => noise.pressure_variance,
            ChannelClass::MassFlow => noise.mass_flow_variance,
        });

        Ok(MeasurementModel {
            channels,
            c,
            variances,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_name(&self, k: usize) -> String {
        self.channels[k].name()
    }

    pub fn variances(&self) -> &DVector<f64> {
        &self.variances
    }

    /// Noise-free measurement h(x).
    pub fn measure(&self, x: &DVector<f64>) -> MeasurementVector {
        MeasurementVector {
            values: &self.c * x,
            variances: self.variances.clone(),
        }
    }

    /// Batched h over point-matrix columns.
    pub fn measure_matrix(&self, points: &DMatrix<f64>) -> DMatrix<f64> {
        &self.c * points
    }

    /// The measurement Jacobian; constant because every measurement
    /// equation is linear in the state.
    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Lower-triangular (diagonal) noise factor for the filter.
    pub fn noise_sqrt(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.variances.map(f64::sqrt))
    }

    /// Adds independent zero-mean Gaussian noise with each entry's
    /// variance. Deterministic for a fixed generator state.
    pub fn synthesize(&self, z_true: &MeasurementVector, rng: &mut impl Rng) -> MeasurementVector {
        let values = DVector::from_fn(z_true.values.len(), |r, _| {
            let sigma = z_true.variances[r].sqrt();
            let xi: f64 = StandardNormal.sample(rng);
            z_true.values[r] + sigma * xi
        });
        MeasurementVector {
            values,
            variances: z_true.variances.clone(),
        }
    }
}

/// Scales the targeted entries by `(1 + deviation)`.
pub fn inject_bad_data(
    z: &MeasurementVector,
    targets: &[usize],
    deviation: f64,
) -> Result<MeasurementVector> {
    let mut out = z.clone();
    for &t in targets {
        if t >= out.values.len() {
            return Err(Error::DimensionMismatch {
                expected: out.values.len(),
                got: t,
                context: "bad-data target index",
            });
        }
        out.values[t] *= 1.0 + deviation;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testnets;
    use nalgebra::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn default_noise() -> NoiseConfig {
        NoiseConfig {
            voltage_variance: 4e-4,
            current_variance: 4e-4,
            pressure_variance: 1e8,
            mass_flow_variance: 4e-4,
        }
    }

    fn model(net: &IesNetwork) -> MeasurementModel {
        let sensors = SensorConfig::from_network(net);
        MeasurementModel::new(net, &sensors, &default_noise()).unwrap()
    }

    fn random_state(net: &IesNetwork, seed: u64) -> DVector<f64> {
        let layout = net.state_layout();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DVector::from_fn(layout.n_x(), |ix, _| {
            if ix < layout.n_electric() {
                rng.gen_range(-1.2..1.2)
            } else if ix < layout.n_electric() + net.n_gas_nodes() {
                rng.gen_range(30.0..60.0)
            } else {
                rng.gen_range(-20.0..20.0)
            }
        })
    }

    #[test]
    fn flat_profile_gives_zero_branch_currents() {
        let mut net = testnets::small_network();
        for b in &mut net.buses {
            b.shunt_conductance = 0.0;
            b.shunt_susceptance = 0.0;
        }
        let m = model(&net);
        let layout = net.state_layout();
        let mut x = DVector::zeros(layout.n_x());
        for bus in 1..=net.n_buses() {
            x[layout.e_index(bus)] = 1.0;
        }
        let z = m.measure(&x);
        for (k, ch) in m.channels().iter().enumerate() {
            if matches!(
                ch,
                Channel::BranchCurrentReal { .. } | Channel::BranchCurrentImag { .. }
            ) {
                assert!(z.values[k].abs() < 1e-14, "{}", ch.name());
            }
        }
    }

    #[test]
    fn pressure_is_sound_speed_squared_times_density() {
        let net = testnets::small_network();
        let m = model(&net);
        let layout = net.state_layout();
        let mut x = DVector::zeros(layout.n_x());
        x[layout.rho_index(1)] = 1.0;
        let z = m.measure(&x);
        let k = m
            .channels()
            .iter()
            .position(|c| *c == Channel::Pressure(1))
            .unwrap();
        assert!((z.values[k] - 122_500.0).abs() < 1e-9);
    }

    #[test]
    fn injected_currents_match_admittance_oracle() {
        // Independent oracle: complex multiply I = Y V.
        let net = testnets::small_network();
        let m = model(&net);
        let layout = net.state_layout();
        let x = random_state(&net, 21);
        let y = net.admittance_matrix();
        let v = nalgebra::DVector::from_fn(net.n_buses(), |b, _| {
            Complex::new(x[layout.e_index(b + 1)], x[layout.f_index(b + 1)])
        });
        let current = &y * &v;
        let z = m.measure(&x);
        for (k, ch) in m.channels().iter().enumerate() {
            match ch {
                Channel::InjectedCurrentReal(b) => {
                    assert!((z.values[k] - current[b - 1].re).abs() < 1e-12)
                }
                Channel::InjectedCurrentImag(b) => {
                    assert!((z.values[k] - current[b - 1].im).abs() < 1e-12)
                }
                _ => {}
            }
        }
    }

    #[test]
    fn voltage_row_is_a_single_one() {
        let net = testnets::small_network();
        let m = model(&net);
        let layout = net.state_layout();
        let c = m.jacobian();
        let k = m
            .channels()
            .iter()
            .position(|ch| *ch == Channel::VoltageReal(2))
            .unwrap();
        for col in 0..c.ncols() {
            let expect = if col == layout.e_index(2) { 1.0 } else { 0.0 };
            assert_eq!(c[(k, col)], expect);
        }
    }

    #[test]
    fn jacobian_matches_central_finite_differences() {
        let net = testnets::small_network();
        let m = model(&net);
        let x = random_state(&net, 33);
        let c = m.jacobian();
        let h = 1e-4;
        let scale = c.amax();
        for col in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += h;
            xm[col] -= h;
            let fp = m.measure(&xp).values;
            let fm = m.measure(&xm).values;
            for row in 0..m.n_channels() {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                let rel = (c[(row, col)] - fd).abs() / scale;
                assert!(rel < 1e-6, "row {row} col {col}: {} vs {}", c[(row, col)], fd);
            }
        }
    }

    #[test]
    fn jacobian_constant_across_states() {
        let net = testnets::small_network();
        let m = model(&net);
        let x1 = random_state(&net, 1);
        let x2 = random_state(&net, 2);
        // h is linear: h(x1) - h(x2) == C (x1 - x2) exactly.
        let lhs = m.measure(&x1).values - m.measure(&x2).values;
        let rhs = m.jacobian() * (&x1 - &x2);
        let scale = lhs.amax().max(1.0);
        assert!((lhs - rhs).amax() / scale < 1e-12);
    }

    #[test]
    fn measurement_is_affine_in_the_state() {
        let net = testnets::small_network();
        let m = model(&net);
        let x1 = random_state(&net, 5);
        let x2 = random_state(&net, 6);
        for &a in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let blend = a * &x1 + (1.0 - a) * &x2;
            let lhs = m.measure(&blend).values;
            let rhs = a * m.measure(&x1).values + (1.0 - a) * m.measure(&x2).values;
            let scale = lhs.amax().max(1.0);
            assert!((lhs - rhs).amax() / scale < 1e-12);
        }
    }

    #[test]
    fn zero_variance_synthesis_is_identity() {
        let net = testnets::small_network();
        let sensors = SensorConfig::from_network(&net);
        let noise = NoiseConfig {
            voltage_variance: 0.0,
            current_variance: 0.0,
            pressure_variance: 0.0,
            mass_flow_variance: 0.0,
        };
        let m = MeasurementModel::new(&net, &sensors, &noise).unwrap();
        let x = random_state(&net, 7);
        let z = m.measure(&x);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let zn = m.synthesize(&z, &mut rng);
        assert_eq!(z.values, zn.values);
    }

    #[test]
    fn synthesis_is_deterministic_per_seed() {
        let net = testnets::small_network();
        let m = model(&net);
        let x = random_state(&net, 8);
        let z = m.measure(&x);
        let a = m.synthesize(&z, &mut ChaCha12Rng::seed_from_u64(99));
        let b = m.synthesize(&z, &mut ChaCha12Rng::seed_from_u64(99));
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn sample_variance_matches_configuration() {
        let net = testnets::two_bus_one_pipe();
        let sensors = SensorConfig {
            pmu_buses: vec![1],
            branch_current_meters: vec![],
            injection_current_buses: vec![],
            pressure_nodes: vec![],
            flow_nodes: vec![],
        };
        let noise = NoiseConfig {
            voltage_variance: 9e-4,
            current_variance: 0.0,
            pressure_variance: 0.0,
            mass_flow_variance: 0.0,
        };
        let m = MeasurementModel::new(&net, &sensors, &noise).unwrap();
        let x = DVector::zeros(net.state_layout().n_x());
        let z = m.measure(&x);
        let mut rng = ChaCha12Rng::seed_from_u64(123);
        let n = 100_000;
        let mut sumsq = 0.0f64;
        for _ in 0..n {
            let zn = m.synthesize(&z, &mut rng);
            sumsq += zn.values[0] * zn.values[0];
        }
        let var = sumsq / n as f64;
        assert!((var - 9e-4).abs() / 9e-4 < 0.05, "sample variance {var}");
    }

    #[test]
    fn bad_data_scales_selected_entries() {
        let net = testnets::small_network();
        let m = model(&net);
        let x = random_state(&net, 9);
        let z = m.measure(&x);
        let k = m
            .channels()
            .iter()
            .position(|c| matches!(c, Channel::Pressure(_)))
            .unwrap();
        let zb = inject_bad_data(&z, &[k], 0.5).unwrap();
        assert!((zb.values[k] - 1.5 * z.values[k]).abs() < 1e-12);
        for j in 0..z.values.len() {
            if j != k {
                assert_eq!(zb.values[j], z.values[j]);
            }
        }
        let z0 = inject_bad_data(&z, &[k], 0.0).unwrap();
        assert_eq!(z0.values, z.values);
        let zz = inject_bad_data(&z, &[k], -1.0).unwrap();
        assert_eq!(zz.values[k], 0.0);
    }

    #[test]
    fn absent_device_is_rejected() {
        let net = testnets::small_network();
        let sensors = SensorConfig {
            pmu_buses: vec![17],
            ..Default::default()
        };
        assert!(MeasurementModel::new(&net, &sensors, &default_noise()).is_err());
    }

    #[test]
    fn node_flow_matches_delivered_load_at_steady_state() {
        use crate::gas;
        let net = testnets::small_network();
        let sys = gas::build_step_system(&net, 300.0).unwrap();
        let u = gas::GasInput {
            source_densities: vec![48.0],
            draws: vec![6.0, 4.0, 8.0],
        };
        let xg = gas::solve_steady_state(&sys, &u).unwrap();
        let layout = net.state_layout();
        let mut x = DVector::zeros(layout.n_x());
        for k in 0..xg.len() {
            x[layout.n_electric() + k] = xg[k];
        }
        let m = model(&net);
        let z = m.measure(&x);
        for (k, ch) in m.channels().iter().enumerate() {
            if let Channel::NodeFlow(n) = ch {
                let expected = u.draws[n - 2]; // loads are nodes 2..4
                assert!(
                    (z.values[k] - expected).abs() < 1e-8,
                    "node {n}: {} vs {expected}",
                    z.values[k]
                );
            }
        }
    }
}
