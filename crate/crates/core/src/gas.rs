//! Euler-discretized pipeline dynamics, boundary conditions and the
//! ground-truth gas simulator.
//!
//! The gas state vector stacks node densities (kg/m^3) followed by one
//! flow pair (phi_ij, phi_ji) per pipeline (kg/s), both flows positive for
//! gas moving from `node_i` towards `node_j`. One semi-implicit step
//! solves `A_G x_{t+1} = f_G(x_t, u_{t+1})` where `A_G` collects the
//! time-(t+1) coefficients of the per-pipe continuity and momentum
//! difference equations plus one boundary row per node; `f_G` carries the
//! time-t terms, with friction evaluated at time t only, so `A_G` is
//! constant and is factorized once per scenario.
//!
//! The wave-coupling terms (flows in continuity, pressures in momentum)
//! are split between the two time levels with weight `THETA` on t+1.
//! An even split leaves the high-CFL ringing modes undamped, and the
//! explicit friction term then pushes them outside the unit circle;
//! `THETA = 0.75` keeps the one-step map a strict contraction on every
//! network in the test suite while leaving all fixed points unchanged.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{GasNodeKind, IesNetwork};

/// Implicit weight of the wave-coupling terms; 0.5 would be the even
/// two-level split, which is not stable together with explicit friction.
const THETA: f64 = 0.75;

/// Exogenous gas input: constant source densities plus one draw per
/// non-source node, ordered sources first, then loads by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct GasInput {
    /// Densities at source nodes (kg/m^3), ascending node id.
    pub source_densities: Vec<f64>,
    /// Draws at non-source nodes (kg/s, positive for withdrawal),
    /// ascending node id.
    pub draws: Vec<f64>,
}

impl GasInput {
    pub fn len(&self) -> usize {
        self.source_densities.len() + self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
struct PipeCoeffs {
    i: usize, // zero-based node index
    j: usize,
    length: f64,
    area: f64,
    diameter: f64,
    friction: f64,
    ratio_i: f64,
    ratio_j: f64,
    /// Constant implicit friction coefficient (kg m / s per kg/s). Added
    /// to both time levels of the momentum flow term, it leaves every
    /// fixed point untouched while keeping the explicit friction update
    /// stable on pipes whose friction relaxes faster than the time step.
    stabilizer: f64,
}

#[derive(Debug, Clone, Copy)]
enum NodeRow {
    /// rho_s = source density (index into GasInput.source_densities).
    Source { source_ordinal: usize },
    /// rho_to = ratio * rho_from.
    Ratio,
    /// Net pipe inflow of the node cluster equals the cluster draw.
    Balance,
}

/// Constant one-step system for the gas network: the factorized matrix
/// `A_G` plus everything needed to evaluate the right-hand side.
pub struct GasStepSystem {
    n_g: usize,
    n_p: usize,
    n: usize,
    dt: f64,
    c_s2: f64,
    pipes: Vec<PipeCoeffs>,
    /// One entry per node-row slot (row `2*n_p + slot`).
    node_rows: Vec<NodeRow>,
    /// Zero-based node index owning each node-row slot.
    row_node: Vec<usize>,
    /// For ratio rows: (feed node index, ratio).
    ratio_feed: Vec<Option<(usize, f64)>>,
    /// For balance rows: cluster members (zero-based node indices) whose
    /// incident pipe flows and draws fold into this row.
    clusters: Vec<Vec<usize>>,
    /// Draw ordinal (index into GasInput.draws) per gas node; usize::MAX
    /// for sources.
    draw_ordinal: Vec<usize>,
    a: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl GasStepSystem {
    pub fn n_gas_states(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rho_index(&self, node_id: usize) -> usize {
        node_id - 1
    }

    pub fn flow_from_index(&self, pipe: usize) -> usize {
        self.n_g + 2 * pipe
    }

    pub fn flow_to_index(&self, pipe: usize) -> usize {
        self.n_g + 2 * pipe + 1
    }
}

/// Builds and factorizes the constant step matrix for time step `dt`.
pub fn build_step_system(net: &IesNetwork, dt: f64) -> Result<GasStepSystem> {
    if dt <= 0.0 {
        return Err(Error::NonpositiveParameter {
            location: "gas step system".into(),
            quantity: "dt",
            value: dt,
        });
    }
    let pipes: Vec<PipeCoeffs> = net
        .pipelines
        .iter()
        .map(|p| PipeCoeffs {
            i: p.node_i - 1,
            j: p.node_j - 1,
            length: p.length,
            area: p.area(),
            diameter: p.diameter,
            friction: p.friction,
            ratio_i: p.ratio_i,
            ratio_j: p.ratio_j,
            stabilizer: 0.0,
        })
        .collect();
    build_with_pipes(net, dt, pipes)
}

fn build_with_pipes(net: &IesNetwork, dt: f64, pipes: Vec<PipeCoeffs>) -> Result<GasStepSystem> {
    let n_g = net.n_gas_nodes();
    let n_p = net.n_pipelines();
    let n = n_g + 2 * n_p;
    let c_s2 = net.gas_constants.sound_speed.powi(2);

    // Sources first, then remaining nodes in id order; ratio rows replace
    // balance rows at compressor-fed nodes, whose flows and draws fold
    // into the balance of their feed chain's root (if that root is a load).
    let mut draw_ordinal = vec![usize::MAX; n_g];
    for (ord, id) in net.load_ids().iter().enumerate() {
        draw_ordinal[id - 1] = ord;
    }

    let mut row_of_node = vec![0usize; n_g];
    let mut node_rows = vec![NodeRow::Balance; n_g];
    let mut row_node = vec![0usize; n_g];
    let mut ratio_feed: Vec<Option<(usize, f64)>> = vec![None; n_g];
    let mut next_row = 2 * n_p;
    for (ord, id) in net.source_ids().iter().enumerate() {
        row_of_node[id - 1] = next_row;
        node_rows[next_row - 2 * n_p] = NodeRow::Source { source_ordinal: ord };
        row_node[next_row - 2 * n_p] = id - 1;
        next_row += 1;
    }
    for node in &net.gas_nodes {
        if node.is_source() {
            continue;
        }
        let slot = next_row - 2 * n_p;
        row_of_node[node.id - 1] = next_row;
        row_node[slot] = node.id - 1;
        node_rows[slot] = if let Some(link) = net.feeding_link(node.id) {
            ratio_feed[slot] = Some((link.from - 1, link.ratio));
            NodeRow::Ratio
        } else {
            NodeRow::Balance
        };
        next_row += 1;
    }
    debug_assert_eq!(next_row, n);

    // Cluster assignment: every node folds into the root of its feed
    // chain; roots that are sources absorb their cluster silently.
    let mut clusters_by_row = vec![Vec::new(); n_g];
    for node in &net.gas_nodes {
        let mut root = node.id;
        while let Some(link) = net.feeding_link(root) {
            root = link.from;
        }
        if !net.gas_nodes[root - 1].is_source() {
            clusters_by_row[row_of_node[root - 1] - 2 * n_p].push(node.id - 1);
        }
    }
    let clusters: Vec<Vec<usize>> = (0..n_g)
        .map(|k| {
            let mut c = clusters_by_row[k].clone();
            c.sort_unstable();
            c
        })
        .collect();

    let mut a = DMatrix::<f64>::zeros(n, n);
    let rho = |k: usize| k;
    let ffrom = |p: usize| n_g + 2 * p;
    let fto = |p: usize| n_g + 2 * p + 1;

    for (p, pc) in pipes.iter().enumerate() {
        let la = pc.length * pc.area;
        // Continuity: L*A*(c_ri*rho_i + c_rj*rho_j) - 2*theta*dt*(phi_ij - phi_ji)
        a[(p, rho(pc.i))] += la * pc.ratio_i;
        a[(p, rho(pc.j))] += la * pc.ratio_j;
        a[(p, ffrom(p))] = -2.0 * THETA * dt;
        a[(p, fto(p))] = 2.0 * THETA * dt;
        // Momentum: L*(phi_ij + phi_ji) - 2*theta*A*dt*c_s^2*(c_ri*rho_i - c_rj*rho_j)
        let m = n_p + p;
        a[(m, ffrom(p))] = pc.length + pc.stabilizer;
        a[(m, fto(p))] = pc.length + pc.stabilizer;
        a[(m, rho(pc.i))] -= 2.0 * THETA * pc.area * dt * c_s2 * pc.ratio_i;
        a[(m, rho(pc.j))] += 2.0 * THETA * pc.area * dt * c_s2 * pc.ratio_j;
    }

    for node in &net.gas_nodes {
        let k = node.id - 1;
        let row = row_of_node[k];
        match node.kind {
            GasNodeKind::Source { .. } => {
                a[(row, rho(k))] = 1.0;
            }
            GasNodeKind::Load => {
                if let Some(link) = net.feeding_link(node.id) {
                    a[(row, rho(k))] = 1.0;
                    a[(row, rho(link.from - 1))] = -link.ratio;
                } else {
                    for member in &clusters[row - 2 * n_p] {
                        for (p, pc) in pipes.iter().enumerate() {
                            if pc.i == *member {
                                a[(row, ffrom(p))] -= 1.0; // departure
                            }
                            if pc.j == *member {
                                a[(row, fto(p))] += 1.0; // arrival
                            }
                        }
                    }
                }
            }
        }
    }

    let lu = a.clone().lu();
    // A singular matrix signals an ill-posed network (e.g. no source).
    // The determinant itself overflows for networks of this scale, so
    // inspect the U diagonal directly.
    let diag = lu.u().diagonal();
    let max_pivot = diag.amax();
    if diag
        .iter()
        .any(|d| !d.is_finite() || d.abs() <= max_pivot * 1e-300)
    {
        return Err(Error::SingularSystem(format!(
            "gas step matrix ({n}x{n}) could not be factorized"
        )));
    }

    Ok(GasStepSystem {
        n_g,
        n_p,
        n,
        dt,
        c_s2,
        pipes,
        node_rows,
        row_node,
        ratio_feed,
        clusters,
        draw_ordinal,
        a,
        lu,
    })
}

/// Right-hand side `f_G(x_t, u_{t+1})` of the one-step system.
pub fn gas_rhs(sys: &GasStepSystem, x: &DVector<f64>, u: &GasInput) -> Result<DVector<f64>> {
    debug_assert_eq!(x.len(), sys.n);
    let n_g = sys.n_g;
    let mut f = DVector::<f64>::zeros(sys.n);

    for (p, pc) in sys.pipes.iter().enumerate() {
        let rho_i = x[pc.i];
        let rho_j = x[pc.j];
        let phi_ij = x[n_g + 2 * p];
        let phi_ji = x[n_g + 2 * p + 1];
        let weighted = pc.ratio_i * rho_i + pc.ratio_j * rho_j;
        if weighted <= 0.0 {
            return Err(Error::NonpositiveDensity {
                pipeline: format!("({},{})", pc.i + 1, pc.j + 1),
                value: weighted,
            });
        }
        let la = pc.length * pc.area;
        let explicit = 2.0 * (1.0 - THETA) * sys.dt;
        f[p] = la * weighted + explicit * (phi_ij - phi_ji);

        // Signed friction phi*|phi| so the loss always opposes the flow;
        // it still scales quadratically with the flow magnitude.
        let flow_sum = phi_ij + phi_ji;
        let friction = sys.dt * pc.length * pc.friction * flow_sum * flow_sum.abs()
            / (4.0 * pc.diameter * pc.area * weighted);
        f[sys.n_p + p] = (pc.length + pc.stabilizer) * flow_sum
            + explicit * pc.area * sys.c_s2 * (pc.ratio_i * rho_i - pc.ratio_j * rho_j)
            - friction;
    }

    for (k, row) in sys.node_rows.iter().enumerate() {
        let r = 2 * sys.n_p + k;
        match row {
            NodeRow::Source { source_ordinal } => {
                f[r] = u.source_densities[*source_ordinal];
            }
            NodeRow::Ratio => f[r] = 0.0,
            NodeRow::Balance => {
                let mut draw = 0.0;
                for member in &sys.clusters[k] {
                    let ord = sys.draw_ordinal[*member];
                    if ord != usize::MAX {
                        draw += u.draws[ord];
                    }
                }
                f[r] = draw;
            }
        }
    }
    Ok(f)
}

/// One semi-implicit step: `x_{t+1} = A_G^{-1} f_G(x_t, u_{t+1})`.
pub fn gas_predict(sys: &GasStepSystem, x: &DVector<f64>, u: &GasInput) -> Result<DVector<f64>> {
    let f = gas_rhs(sys, x, u)?;
    sys.lu
        .solve(&f)
        .ok_or_else(|| Error::SingularSystem("triangular solve failed".into()))
}

/// Batched variant: each column of `x` is stepped independently under the
/// same input. Used for cubature-point propagation.
pub fn gas_predict_matrix(
    sys: &GasStepSystem,
    x: &DMatrix<f64>,
    u: &GasInput,
) -> Result<DMatrix<f64>> {
    let mut f = DMatrix::<f64>::zeros(x.nrows(), x.ncols());
    for c in 0..x.ncols() {
        let col = x.column(c).into_owned();
        let rhs = gas_rhs(sys, &col, u).map_err(|e| Error::CubaturePoint {
            point: c,
            reason: e.to_string(),
        })?;
        f.set_column(c, &rhs);
    }
    if !sys.lu.solve_mut(&mut f) {
        return Err(Error::SingularSystem("triangular solve failed".into()));
    }
    Ok(f)
}

/// Jacobian of `f_G` with respect to the state (boundary rows are zero).
fn rhs_jacobian(sys: &GasStepSystem, x: &DVector<f64>) -> DMatrix<f64> {
    let n_g = sys.n_g;
    let mut j = DMatrix::<f64>::zeros(sys.n, sys.n);
    for (p, pc) in sys.pipes.iter().enumerate() {
        let rho_i = x[pc.i];
        let rho_j = x[pc.j];
        let phi_ij = x[n_g + 2 * p];
        let phi_ji = x[n_g + 2 * p + 1];
        let weighted = pc.ratio_i * rho_i + pc.ratio_j * rho_j;
        let la = pc.length * pc.area;

        let explicit = 2.0 * (1.0 - THETA) * sys.dt;
        j[(p, pc.i)] = la * pc.ratio_i;
        j[(p, pc.j)] = la * pc.ratio_j;
        j[(p, n_g + 2 * p)] = explicit;
        j[(p, n_g + 2 * p + 1)] = -explicit;

        let m = sys.n_p + p;
        let flow_sum = phi_ij + phi_ji;
        let fric_base = sys.dt * pc.length * pc.friction / (4.0 * pc.diameter * pc.area);
        let dfric_dflow = fric_base * 2.0 * flow_sum.abs() / weighted;
        let dfric_drho = -fric_base * flow_sum * flow_sum.abs() / (weighted * weighted);
        j[(m, n_g + 2 * p)] = pc.length + pc.stabilizer - dfric_dflow;
        j[(m, n_g + 2 * p + 1)] = pc.length + pc.stabilizer - dfric_dflow;
        j[(m, pc.i)] =
            explicit * pc.area * sys.c_s2 * pc.ratio_i - dfric_drho * pc.ratio_i;
        j[(m, pc.j)] =
            -explicit * pc.area * sys.c_s2 * pc.ratio_j - dfric_drho * pc.ratio_j;
    }
    j
}

const STEADY_TOL: f64 = 1e-8;
const STEADY_MAX_ITER: usize = 100;
const STEADY_MAX_HALVINGS: usize = 6;

/// Physically motivated starting point: densities propagated from the
/// sources through pipes and ratio links, flows from a spanning-tree
/// routing of every balance cluster's draw towards its nearest root.
/// Loop pipes start at zero flow; Newton resolves the loop split.
fn initial_guess(sys: &GasStepSystem, u: &GasInput) -> DVector<f64> {
    let n_g = sys.n_g;
    let mut x = DVector::<f64>::zeros(sys.n);

    // Roots: nodes without a balance row (sources and ratio-fed nodes).
    let mut is_root = vec![false; n_g];
    let mut rho = vec![f64::NAN; n_g];
    for (slot, row) in sys.node_rows.iter().enumerate() {
        match row {
            NodeRow::Source { source_ordinal } => {
                is_root[sys.row_node[slot]] = true;
                rho[sys.row_node[slot]] = u.source_densities[*source_ordinal];
            }
            NodeRow::Ratio => is_root[sys.row_node[slot]] = true,
            NodeRow::Balance => {}
        }
    }
    // Resolve ratio-fed densities by chasing the feed chains until fixed.
    for _ in 0..n_g {
        for (slot, row) in sys.node_rows.iter().enumerate() {
            if let NodeRow::Ratio = row {
                if let Some((feed, ratio)) = sys.ratio_feed[slot] {
                    if rho[feed].is_finite() {
                        rho[sys.row_node[slot]] = ratio * rho[feed];
                    }
                }
            }
        }
    }
    // Propagate densities through pipes by BFS from known nodes.
    let mut queue: Vec<usize> = (0..n_g).filter(|k| rho[*k].is_finite()).collect();
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for pc in &sys.pipes {
            for (a, b) in [(pc.i, pc.j), (pc.j, pc.i)] {
                if a == v && !rho[b].is_finite() {
                    rho[b] = rho[v] * pc.ratio_i / pc.ratio_j;
                    queue.push(b);
                }
            }
        }
    }
    let fallback = if u.source_densities.is_empty() {
        40.0
    } else {
        u.source_densities.iter().sum::<f64>() / u.source_densities.len() as f64
    };
    for k in 0..n_g {
        x[k] = if rho[k].is_finite() { rho[k] } else { fallback };
    }

    // Max-capacity spanning forest over pipes from the roots, so bulk
    // flow is routed through short, fat pipes in the initial guess.
    let capacity = |pc: &PipeCoeffs| {
        pc.diameter * pc.area * pc.area / (pc.length * pc.friction)
    };
    let mut parent_pipe: Vec<Option<(usize, bool)>> = vec![None; n_g]; // (pipe, node_is_j_end)
    let mut order = Vec::with_capacity(n_g);
    let mut visited = vec![false; n_g];
    for k in 0..n_g {
        if is_root[k] {
            visited[k] = true;
            order.push(k);
        }
    }
    loop {
        let mut best: Option<(f64, usize, usize, bool)> = None; // (cap, pipe, node, is_j)
        for (p, pc) in sys.pipes.iter().enumerate() {
            let cap = capacity(pc);
            if visited[pc.i] && !visited[pc.j] {
                if best.map(|b| cap > b.0).unwrap_or(true) {
                    best = Some((cap, p, pc.j, true));
                }
            } else if visited[pc.j] && !visited[pc.i] {
                if best.map(|b| cap > b.0).unwrap_or(true) {
                    best = Some((cap, p, pc.i, false));
                }
            }
        }
        match best {
            Some((_, p, node, is_j)) => {
                visited[node] = true;
                parent_pipe[node] = Some((p, is_j));
                order.push(node);
            }
            None => break,
        }
    }
    // Cluster draw attributed to the balance root node.
    let mut draw = vec![0.0; n_g];
    for (slot, row) in sys.node_rows.iter().enumerate() {
        if let NodeRow::Balance = row {
            let mut total = 0.0;
            for member in &sys.clusters[slot] {
                let ord = sys.draw_ordinal[*member];
                if ord != usize::MAX {
                    total += u.draws[ord];
                }
            }
            draw[sys.row_node[slot]] += total;
        }
    }
    // Accumulate subtree draws from the leaves up: the parent-edge flow
    // of every node carries its whole subtree demand.
    let mut subtree = draw.clone();
    for &v in order.iter().rev() {
        if let Some((p, node_is_j)) = parent_pipe[v] {
            let flow = subtree[v];
            // Flows are positive from i to j; a child at the j end is
            // supplied by positive flow.
            let sign = if node_is_j { 1.0 } else { -1.0 };
            x[n_g + 2 * p] += sign * flow;
            x[n_g + 2 * p + 1] += sign * flow;
            let parent = if node_is_j {
                sys.pipes[p].i
            } else {
                sys.pipes[p].j
            };
            subtree[parent] += flow;
        }
    }
    x
}

/// Solves for a state that is a fixed point of [`gas_predict`] under the
/// given boundary input, by damped Newton iteration on the step residual.
/// Falls back to continuation on the draw magnitude when the direct solve
/// stalls.
pub fn solve_steady_state(sys: &GasStepSystem, u: &GasInput) -> Result<DVector<f64>> {
    match newton_steady(sys, u, initial_guess(sys, u)) {
        Ok(x) => Ok(x),
        Err(_) => {
            let mut x = initial_guess(
                sys,
                &GasInput {
                    source_densities: u.source_densities.clone(),
                    draws: u.draws.iter().map(|d| d * 0.1).collect(),
                },
            );
            for scale in [0.1, 0.3, 0.6, 1.0] {
                let scaled = GasInput {
                    source_densities: u.source_densities.clone(),
                    draws: u.draws.iter().map(|d| d * scale).collect(),
                };
                x = newton_steady(sys, &scaled, x)?;
            }
            Ok(x)
        }
    }
}

fn newton_steady(
    sys: &GasStepSystem,
    u: &GasInput,
    start: DVector<f64>,
) -> Result<DVector<f64>> {
    let mut x = start;

    let step_residual = |x: &DVector<f64>| -> Result<(DVector<f64>, f64)> {
        let next = gas_predict(sys, x, u)?;
        let r = &next - x;
        let norm = r.amax();
        Ok((r, norm))
    };

    let (_, mut res_norm) = step_residual(&x)?;
    for iter in 0..STEADY_MAX_ITER {
        if res_norm < STEADY_TOL {
            return Ok(x);
        }
        // Newton on F(x) = A_G x - f_G(x): J = A_G - df_G/dx.
        let f = gas_rhs(sys, &x, u)?;
        let big_f = &sys.a * &x - f;
        let jac = &sys.a - rhs_jacobian(sys, &x);
        let delta = jac.lu().solve(&(-&big_f)).ok_or_else(|| {
            Error::SteadyStateDiverged {
                iterations: iter,
                residual: res_norm,
            }
        })?;

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=STEADY_MAX_HALVINGS {
            let candidate = &x + scale * &delta;
            match step_residual(&candidate) {
                Ok((_, cand_norm)) if cand_norm < res_norm => {
                    x = candidate;
                    res_norm = cand_norm;
                    accepted = true;
                    break;
                }
                _ => scale *= 0.5,
            }
        }
        if !accepted {
            // Take the most damped step that still evaluates; Newton close
            // to the solution recovers on the next iteration.
            let candidate = &x + scale * &delta;
            if let Ok((_, cand_norm)) = step_residual(&candidate) {
                x = candidate;
                res_norm = cand_norm;
            } else {
                return Err(Error::SteadyStateDiverged {
                    iterations: iter,
                    residual: res_norm,
                });
            }
        }
    }
    if res_norm < STEADY_TOL {
        Ok(x)
    } else {
        Err(Error::SteadyStateDiverged {
            iterations: STEADY_MAX_ITER,
            residual: res_norm,
        })
    }
}

/// Simulates the ground-truth gas trajectory: starts at the steady state
/// of the first input and applies one [`gas_predict`] per step.
///
/// `inputs[t]` is the boundary input applied between step t and t+1, so
/// `inputs.len() == steps` and the returned trajectory has `steps + 1`
/// states.
pub fn simulate(sys: &GasStepSystem, inputs: &[GasInput]) -> Result<Vec<DVector<f64>>> {
    let first = inputs.first().ok_or_else(|| Error::Inconsistent(
        "simulate requires at least one boundary input".into(),
    ))?;
    let mut x = solve_steady_state(sys, first)?;
    let mut out = Vec::with_capacity(inputs.len() + 1);
    out.push(x.clone());
    for u in inputs {
        x = gas_predict(sys, &x, u)?;
        out.push(x.clone());
    }
    Ok(out)
}

/// GTU coupling: gas draw needed to generate `power` W at conversion
/// coefficient `eta` W per kg/s.
pub fn gtu_load(power: f64, eta: f64) -> Result<f64> {
    if eta <= 0.0 {
        return Err(Error::NonpositiveParameter {
            location: "GTU".into(),
            quantity: "efficiency",
            value: eta,
        });
    }
    Ok(power / eta)
}
