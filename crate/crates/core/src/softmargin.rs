//! 1-norm soft margin optimisation over a compressed sample.
//!
//! Positive and negative instances are compressed separately and hung under
//! a common root. A path through the positive branch spells the features of
//! one positive instance plus the bias feature `n`; every edge of a branch
//! carries that branch's sign.
//!
//! Repeated instances are folded into a single path. A path standing for `c`
//! copies additionally carries a marker element (ids `n + 1` and up) that
//! tells every dynamic program to weigh it by `c`.

use std::collections::BTreeMap;

use crate::build::{compress, ElementOrder};
use crate::error::{Error, Result};
use crate::family::SubsetFamily;
use crate::lp::{solve_lp, LpSolution, LpStatus};
use crate::nzdd::{Edge, EdgeId, NodeId, Nzdd, LEAF, ROOT};
use crate::sample::Sample;
use crate::system::{ConstraintSystem, Direction, Row, Sense, VarKind};

#[derive(Clone, Debug)]
struct Branch {
    g: Nzdd,
    // Branch edge id -> joined edge id.
    edge_map: Vec<EdgeId>,
    root_edge: EdgeId,
}

#[derive(Clone, Debug)]
pub struct SampleNzdd {
    pub g: Nzdd,
    /// `+1` on the positive branch, `-1` on the negative one.
    pub sign: Vec<f64>,
    /// Weighted number of instances whose path uses each edge.
    pub mult: Vec<f64>,
    /// Copy count attached to each edge through a marker label (1 if none).
    pub omega: Vec<f64>,
    pub n: usize,
    pub m: usize,
    /// Copy count of marker element `n + 1 + k`.
    pub marker_counts: Vec<usize>,
    branches: [Option<Branch>; 2],
}

fn class_index(y: i8) -> usize {
    usize::from(y < 0)
}

impl SampleNzdd {
    pub fn build(sample: &Sample, order: &ElementOrder) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidParameter("empty sample".into()));
        }
        let n = sample.n();
        let mut counts: [BTreeMap<&[u32], usize>; 2] = [BTreeMap::new(), BTreeMap::new()];
        for (x, &y) in sample.instances().iter().zip(sample.labels()) {
            *counts[class_index(y)].entry(x.as_slice()).or_insert(0) += 1;
        }
        if counts.iter().any(BTreeMap::is_empty) {
            log::warn!("sample has instances of one class only");
        }
        let mut marker_counts: Vec<usize> = counts
            .iter()
            .flat_map(|c| c.values().copied())
            .filter(|&c| c > 1)
            .collect();
        marker_counts.sort_unstable();
        marker_counts.dedup();
        let ground = n + 1 + marker_counts.len();
        let marker_of = |c: usize| (n + 1 + marker_counts.binary_search(&c).unwrap()) as u32;

        let mut edges = Vec::new();
        let mut node_count = 2;
        let mut branches: [Option<Branch>; 2] = [None, None];
        for (k, class) in counts.iter().enumerate() {
            if class.is_empty() {
                continue;
            }
            let sets = class
                .iter()
                .map(|(x, &c)| {
                    let mut s = x.to_vec();
                    s.push(n as u32);
                    if c > 1 {
                        s.push(marker_of(c));
                    }
                    s
                })
                .collect();
            let family = SubsetFamily::new(ground, sets)?;
            let (bg, _) = compress(&family, order)?;
            let base = node_count;
            // Branch root -> base, branch leaf -> LEAF, others shifted.
            let map_node = |v: NodeId| match v {
                ROOT => base,
                LEAF => LEAF,
                v => base + v - 1,
            };
            node_count += bg.node_count() - 1;
            let root_edge = edges.len();
            edges.push(Edge::new(ROOT, base, vec![]));
            let mut edge_map = Vec::with_capacity(bg.num_edges());
            for e in bg.edges() {
                edge_map.push(edges.len());
                edges.push(Edge::new(map_node(e.from), map_node(e.to), e.labels.clone()));
            }
            branches[k] = Some(Branch {
                g: bg,
                edge_map,
                root_edge,
            });
        }
        let g = Nzdd::new(node_count, ground, edges)?;

        let mut sign = vec![1.0; g.num_edges()];
        if let Some(b) = &branches[1] {
            sign[b.root_edge] = -1.0;
            for &e in &b.edge_map {
                sign[e] = -1.0;
            }
        }
        let omega: Vec<f64> = g
            .edges()
            .iter()
            .map(|e| {
                e.labels
                    .iter()
                    .filter(|&&l| l as usize > n)
                    .map(|&l| marker_counts[l as usize - n - 1] as f64)
                    .product()
            })
            .collect();
        let mut sn = SampleNzdd {
            g,
            sign,
            mult: Vec::new(),
            omega,
            n,
            m: sample.len(),
            marker_counts,
            branches,
        };
        sn.mult = sn.weighted_multiplicities();
        Ok(sn)
    }

    fn weighted_multiplicities(&self) -> Vec<f64> {
        let g = &self.g;
        let mut fwd = vec![0.0; g.node_count()];
        let mut bwd = vec![0.0; g.node_count()];
        fwd[ROOT] = 1.0;
        bwd[LEAF] = 1.0;
        let order = g.topological_order();
        for &u in order {
            for &e in g.out_edges(u) {
                fwd[g.edge(e).to] += fwd[u] * self.omega[e];
            }
        }
        for &v in order.iter().rev() {
            for &e in g.out_edges(v) {
                bwd[v] += self.omega[e] * bwd[g.edge(e).to];
            }
        }
        g.edges()
            .iter()
            .enumerate()
            .map(|(i, e)| fwd[e.from] * self.omega[i] * bwd[e.to])
            .collect()
    }

    /// Features plus the bias: `n + 1`.
    pub fn num_features(&self) -> usize {
        self.n + 1
    }

    pub fn num_edges(&self) -> usize {
        self.g.num_edges()
    }

    pub fn depth(&self) -> usize {
        self.g.depth()
    }

    /// `+1` for ordinary features, `-1` for the bias.
    pub fn feature_sign(&self, j: usize) -> f64 {
        if j == self.n {
            -1.0
        } else {
            1.0
        }
    }

    /// Feature labels of an edge (markers filtered out).
    pub fn features(&self, e: EdgeId) -> impl Iterator<Item = usize> + '_ {
        self.g
            .edge(e)
            .labels
            .iter()
            .map(|&l| l as usize)
            .filter(move |&l| l <= self.n)
    }

    /// `d^0_e = m_e / m`.
    pub fn initial_flow(&self) -> Vec<f64> {
        self.mult.iter().map(|&me| me / self.m as f64).collect()
    }

    /// `m_e / (nu m)`.
    pub fn capacities(&self, nu: f64) -> Vec<f64> {
        self.mult.iter().map(|&me| me / (nu * self.m as f64)).collect()
    }

    /// `sign(j) * sum over edges labelled j of sign(e) d_e`, for every `j`.
    pub fn edge_scores(&self, d: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n + 1];
        for (e, &de) in d.iter().enumerate() {
            if de == 0.0 {
                continue;
            }
            for j in self.features(e) {
                acc[j] += self.sign[e] * de;
            }
        }
        acc[self.n] = -acc[self.n];
        acc
    }

    pub fn edge_score(&self, d: &[f64], j: usize) -> f64 {
        let s: f64 = (0..self.num_edges())
            .filter(|&e| self.features(e).any(|l| l == j))
            .map(|e| self.sign[e] * d[e])
            .sum();
        self.feature_sign(j) * s
    }

    /// `sign(e) * sum of w_j over the features on e`.
    pub fn edge_weights(&self, w: &[f64]) -> Vec<f64> {
        (0..self.num_edges())
            .map(|e| self.sign[e] * self.features(e).map(|j| w[j]).sum::<f64>())
            .collect()
    }

    /// Largest violation of flow conservation, unit flow out of the root and
    /// into the leaf, and the capacity box.
    pub fn flow_violation(&self, d: &[f64], nu: f64) -> f64 {
        let g = &self.g;
        let mut net = vec![0.0; g.node_count()];
        for (e, edge) in g.edges().iter().enumerate() {
            net[edge.from] -= d[e];
            net[edge.to] += d[e];
        }
        let mut worst: f64 = (net[ROOT] + 1.0).abs().max((net[LEAF] - 1.0).abs());
        for &x in &net[2..] {
            worst = worst.max(x.abs());
        }
        for (de, cap) in d.iter().zip(self.capacities(nu)) {
            worst = worst.max(-de).max(de - cap);
        }
        worst
    }

    /// The edges spelling instance `x` with label `y` occurring `count` times.
    pub fn path_of(&self, x: &[u32], y: i8, count: usize) -> Option<Vec<EdgeId>> {
        let b = self.branches[class_index(y)].as_ref()?;
        let mut set = x.to_vec();
        set.push(self.n as u32);
        if count > 1 {
            let k = self.marker_counts.binary_search(&count).ok()?;
            set.push((self.n + 1 + k) as u32);
        }
        let p = b.g.find_path(&set)?;
        let mut path = vec![b.root_edge];
        path.extend(p.into_iter().map(|e| b.edge_map[e]));
        Some(path)
    }

    /// Path of every instance of `sample` (which must be the sample the
    /// diagram was built from).
    pub fn instance_paths(&self, sample: &Sample) -> Result<Vec<Vec<EdgeId>>> {
        let mut counts: BTreeMap<(&[u32], i8), usize> = BTreeMap::new();
        for (x, &y) in sample.instances().iter().zip(sample.labels()) {
            *counts.entry((x.as_slice(), y)).or_insert(0) += 1;
        }
        sample
            .instances()
            .iter()
            .zip(sample.labels())
            .map(|(x, &y)| {
                self.path_of(x, y, counts[&(x.as_slice(), y)])
                    .ok_or(Error::LanguageMismatch)
            })
            .collect()
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("nu must lie in (0, 1], got {nu}")))
    }
}

/// Solution of the compressed soft margin problem.
#[derive(Clone, Debug)]
pub struct MarginSolution {
    pub rho: f64,
    /// Feature weights, then `w[n] = -bias`.
    pub w: Vec<f64>,
    /// Slack per edge.
    pub beta: Vec<f64>,
    /// Node potentials, `s[root] = 0`.
    pub s: Vec<f64>,
    pub objective: f64,
}

impl MarginSolution {
    pub fn bias(&self) -> f64 {
        -self.w[self.w.len() - 1]
    }

    /// Maps the solution to the uncompressed problem: `xi_i` is the slack
    /// summed along the path of instance `i`.
    pub fn to_original(&self, sn: &SampleNzdd, sample: &Sample, nu: f64) -> Result<OriginalSolution> {
        let paths = sn.instance_paths(sample)?;
        let xi: Vec<f64> = paths
            .iter()
            .map(|p| p.iter().map(|&e| self.beta[e]).sum())
            .collect();
        let value = self.rho - xi.iter().sum::<f64>() / (nu * sn.m as f64);
        Ok(OriginalSolution {
            rho: self.rho,
            w: self.w[..sn.n].to_vec(),
            b: self.bias(),
            xi,
            value,
        })
    }
}

/// Objective `rho - (1 / (nu m)) sum_e m_e beta_e`.
pub fn margin_objective(sn: &SampleNzdd, nu: f64, rho: f64, beta: &[f64]) -> f64 {
    let slack: f64 = sn.mult.iter().zip(beta).map(|(m, b)| m * b).sum();
    rho - slack / (nu * sn.m as f64)
}

/// Best `rho` and potentials for fixed `w` and `beta`: shortest root-to-node
/// distances under `sign(e) sum w_j + beta_e`.
pub fn potentials(sn: &SampleNzdd, w: &[f64], beta: &[f64]) -> Vec<f64> {
    let g = &sn.g;
    let weights = sn.edge_weights(w);
    let mut dist = vec![f64::INFINITY; g.node_count()];
    dist[ROOT] = 0.0;
    for &u in g.topological_order() {
        for &e in g.out_edges(u) {
            let v = g.edge(e).to;
            dist[v] = dist[v].min(dist[u] + weights[e] + beta[e]);
        }
    }
    dist
}

/// Index layout of the variables of [`build_primal`].
#[derive(Clone, Debug)]
pub struct PrimalLayout {
    pub rho: usize,
    /// `w_0 .. w_n`.
    pub w: usize,
    /// One slack per edge.
    pub beta: usize,
    /// Potential variable of each node, `None` for the root.
    pub s: Vec<Option<usize>>,
}

/// The compressed soft margin LP:
///
/// ```text
/// max  rho - (1/(nu m)) sum_e m_e beta_e
/// s.t. s_u - s_v + sign(e) sum_{j in e} w_j + beta_e >= 0   for e = (u, v)
///      sum_{j < n} w_j - w_n = 1
///      s_leaf - rho >= 0,  s_root = 0
///      w_j >= 0 (j < n),  w_n <= 0,  beta >= 0
/// ```
pub fn build_primal(sn: &SampleNzdd, nu: f64) -> Result<(ConstraintSystem, PrimalLayout)> {
    check_nu(nu)?;
    let n = sn.n;
    let mut sys = ConstraintSystem::default();
    let rho = sys.add_named_var("rho".into(), VarKind::Real, f64::NEG_INFINITY, f64::INFINITY);
    let w = sys.num_vars();
    for j in 0..n {
        sys.add_named_var(format!("w{j}"), VarKind::Real, 0.0, f64::INFINITY);
    }
    sys.add_named_var(format!("w{n}"), VarKind::Real, f64::NEG_INFINITY, 0.0);
    let beta = sys.num_vars();
    for e in 0..sn.num_edges() {
        sys.add_named_var(format!("beta{e}"), VarKind::Real, 0.0, f64::INFINITY);
    }
    let mut s = vec![None; sn.g.node_count()];
    for (v, slot) in s.iter_mut().enumerate().skip(1) {
        *slot = Some(sys.add_named_var(
            format!("s{v}"),
            VarKind::Real,
            f64::NEG_INFINITY,
            f64::INFINITY,
        ));
    }
    for (e, edge) in sn.g.edges().iter().enumerate() {
        let mut coeffs = vec![(beta + e, 1.0)];
        if let Some(su) = s[edge.from] {
            coeffs.push((su, 1.0));
        }
        coeffs.push((s[edge.to].expect("edges never enter the root"), -1.0));
        for j in sn.features(e) {
            coeffs.push((w + j, sn.sign[e]));
        }
        sys.add_row(Row::ge(coeffs, 0.0));
    }
    let mut norm: Vec<(usize, f64)> = (0..n).map(|j| (w + j, 1.0)).collect();
    norm.push((w + n, -1.0));
    sys.add_row(Row::new(norm, Sense::Eq, 1.0));
    sys.add_row(Row::ge(vec![(s[LEAF].unwrap(), 1.0), (rho, -1.0)], 0.0));
    let scale = 1.0 / (nu * sn.m as f64);
    let mut obj = vec![(rho, 1.0)];
    obj.extend(sn.mult.iter().enumerate().map(|(e, &me)| (beta + e, -me * scale)));
    sys.set_objective(Direction::Max, obj);
    Ok((
        sys,
        PrimalLayout { rho, w, beta, s },
    ))
}

fn require_optimal(sol: &LpSolution) -> Result<()> {
    match sol.status {
        LpStatus::Optimal => Ok(()),
        LpStatus::Infeasible => Err(Error::SubproblemInfeasible),
        LpStatus::Unbounded => Err(Error::Numerical("LP reported unbounded".into())),
        LpStatus::NumericalFailure => Err(Error::Numerical("simplex did not converge".into())),
    }
}

/// Solves [`build_primal`] directly with the simplex kernel.
pub fn solve_extended(sn: &SampleNzdd, nu: f64) -> Result<MarginSolution> {
    let (sys, lay) = build_primal(sn, nu)?;
    let sol = solve_lp(&sys)?;
    require_optimal(&sol)?;
    let w = sol.x[lay.w..=lay.w + sn.n].to_vec();
    let beta = sol.x[lay.beta..lay.beta + sn.num_edges()].to_vec();
    let s = lay
        .s
        .iter()
        .map(|v| v.map_or(0.0, |i| sol.x[i]))
        .collect();
    Ok(MarginSolution {
        rho: sol.x[lay.rho],
        w,
        beta,
        s,
        objective: sol.value,
    })
}

/// Restricted dual over hypotheses `hyps`:
///
/// ```text
/// min  gamma
/// s.t. gamma - sign(j) sum_{e labelled j} sign(e) d_e >= 0   for j in hyps
///      d is a unit root-to-leaf flow, 0 <= d_e <= m_e / (nu m)
/// ```
///
/// Variables are `d_0 .. d_{|E|-1}` then `gamma`; the hypothesis rows come
/// first.
pub fn build_restricted_dual(sn: &SampleNzdd, nu: f64, hyps: &[usize]) -> Result<ConstraintSystem> {
    check_nu(nu)?;
    let ne = sn.num_edges();
    let mut sys = ConstraintSystem::default();
    for (e, cap) in sn.capacities(nu).into_iter().enumerate() {
        sys.add_named_var(format!("d{e}"), VarKind::Real, 0.0, cap);
    }
    let gamma = sys.add_named_var("gamma".into(), VarKind::Real, f64::NEG_INFINITY, f64::INFINITY);
    for &j in hyps {
        let sj = sn.feature_sign(j);
        let mut coeffs = vec![(gamma, 1.0)];
        for e in 0..ne {
            if sn.features(e).any(|l| l == j) {
                coeffs.push((e, -sj * sn.sign[e]));
            }
        }
        sys.add_row(Row::ge(coeffs, 0.0));
    }
    let g = &sn.g;
    for v in 2..g.node_count() {
        let mut coeffs: Vec<(usize, f64)> = g.in_edges(v).iter().map(|&e| (e, 1.0)).collect();
        coeffs.extend(g.out_edges(v).iter().map(|&e| (e, -1.0)));
        sys.add_row(Row::new(coeffs, Sense::Eq, 0.0));
    }
    sys.add_row(Row::new(
        g.out_edges(ROOT).iter().map(|&e| (e, 1.0)).collect(),
        Sense::Eq,
        1.0,
    ));
    sys.set_objective(Direction::Min, vec![(gamma, 1.0)]);
    Ok(sys)
}

/// Solved restricted dual with the primal solution read off its multipliers.
#[derive(Clone, Debug)]
pub struct RestrictedSolution {
    pub gamma: f64,
    pub d: Vec<f64>,
    pub primal: MarginSolution,
}

/// Solves the restricted dual and recovers `(rho, w, beta)`: `w_j` is
/// `sign(j)` times the multiplier of row `j`, `beta_e` is the multiplier of
/// the capacity bound of `d_e`, and `rho` comes from a shortest path.
pub fn solve_restricted(sn: &SampleNzdd, nu: f64, hyps: &[usize]) -> Result<RestrictedSolution> {
    let sys = build_restricted_dual(sn, nu, hyps)?;
    let sol = solve_lp(&sys)?;
    require_optimal(&sol)?;
    let ne = sn.num_edges();
    let mut w = vec![0.0; sn.n + 1];
    for (k, &j) in hyps.iter().enumerate() {
        w[j] = sn.feature_sign(j) * sol.duals[k].max(0.0);
    }
    let beta: Vec<f64> = sol.reduced_costs[..ne].iter().map(|&r| (-r).max(0.0)).collect();
    let s = potentials(sn, &w, &beta);
    let rho = s[LEAF];
    let objective = margin_objective(sn, nu, rho, &beta);
    let gamma = sol.x[ne];
    if (objective - gamma).abs() > 1e-6 * (1.0 + gamma.abs()) {
        log::warn!("recovered primal value {objective} differs from dual value {gamma}");
    }
    Ok(RestrictedSolution {
        gamma,
        d: sol.x[..ne].to_vec(),
        primal: MarginSolution {
            rho,
            w,
            beta,
            s,
            objective,
        },
    })
}

/// Index of the largest score; ties go to the smallest index.
pub fn best_hypothesis(scores: &[f64]) -> (usize, f64) {
    let mut best = (0, scores[0]);
    for (j, &s) in scores.iter().enumerate().skip(1) {
        if s > best.1 {
            best = (j, s);
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct CgResult {
    pub solution: MarginSolution,
    /// Value of the last restricted dual.
    pub gamma: f64,
    pub iterations: usize,
    pub hypotheses: Vec<usize>,
    pub flow: Vec<f64>,
}

/// Column generation: repeatedly add the feature with the largest edge score
/// under the current flow and re-solve the restricted dual, until that score
/// exceeds the restricted optimum by at most `eps`.
pub fn column_generation(sn: &SampleNzdd, nu: f64, eps: f64) -> Result<CgResult> {
    check_nu(nu)?;
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let mut d = sn.initial_flow();
    let mut gamma = f64::NEG_INFINITY;
    let mut hyps: Vec<usize> = Vec::new();
    let mut last: Option<RestrictedSolution> = None;
    let mut iterations = 0;
    loop {
        let (j, h) = best_hypothesis(&sn.edge_scores(&d));
        if h <= gamma + eps {
            break;
        }
        if hyps.contains(&j) {
            log::warn!("feature {j} selected twice; stopping with gap {}", h - gamma);
            break;
        }
        hyps.push(j);
        iterations += 1;
        let sol = solve_restricted(sn, nu, &hyps)?;
        log::debug!("cg iteration {iterations}: feature {j}, score {h}, gamma {}", sol.gamma);
        gamma = sol.gamma;
        d.clone_from(&sol.d);
        last = Some(sol);
    }
    let last = last.expect("first iteration always adds a feature");
    Ok(CgResult {
        solution: last.primal,
        gamma,
        iterations,
        hypotheses: hyps,
        flow: d,
    })
}

/// Solution of the uncompressed soft margin LP.
#[derive(Clone, Debug)]
pub struct OriginalSolution {
    pub rho: f64,
    pub w: Vec<f64>,
    pub b: f64,
    pub xi: Vec<f64>,
    pub value: f64,
}

impl OriginalSolution {
    /// Largest violation of the uncompressed constraints.
    pub fn violation(&self, sample: &Sample) -> f64 {
        let mut worst = (self.w.iter().sum::<f64>() + self.b - 1.0).abs();
        worst = worst.max(-self.b);
        for &wj in &self.w {
            worst = worst.max(-wj);
        }
        for i in 0..sample.len() {
            let margin: f64 = sample.instance(i).iter().map(|&j| self.w[j as usize]).sum::<f64>() - self.b;
            let lhs = f64::from(sample.label(i)) * margin + self.xi[i];
            worst = worst.max(self.rho - lhs).max(-self.xi[i]);
        }
        worst
    }
}

/// The uncompressed LP: `max rho - (1/(nu m)) sum xi_i` subject to
/// `y_i (w . x_i - b) >= rho - xi_i`, `sum w + b = 1`, `w, b, xi >= 0`.
pub fn solve_original_softmargin(sample: &Sample, nu: f64) -> Result<OriginalSolution> {
    check_nu(nu)?;
    let (n, m) = (sample.n(), sample.len());
    let mut sys = ConstraintSystem::default();
    let rho = sys.add_named_var("rho".into(), VarKind::Real, f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..n {
        sys.add_named_var(format!("w{j}"), VarKind::Real, 0.0, f64::INFINITY);
    }
    let b = sys.add_named_var("b".into(), VarKind::Real, 0.0, f64::INFINITY);
    let xi0 = sys.num_vars();
    for i in 0..m {
        sys.add_named_var(format!("xi{i}"), VarKind::Real, 0.0, f64::INFINITY);
    }
    for i in 0..m {
        let y = f64::from(sample.label(i));
        let mut coeffs: Vec<(usize, f64)> = sample.instance(i).iter().map(|&j| (1 + j as usize, y)).collect();
        coeffs.push((b, -y));
        coeffs.push((xi0 + i, 1.0));
        coeffs.push((rho, -1.0));
        sys.add_row(Row::ge(coeffs, 0.0));
    }
    let mut norm: Vec<(usize, f64)> = (0..n).map(|j| (1 + j, 1.0)).collect();
    norm.push((b, 1.0));
    sys.add_row(Row::new(norm, Sense::Eq, 1.0));
    let scale = 1.0 / (nu * m as f64);
    let mut obj = vec![(rho, 1.0)];
    obj.extend((0..m).map(|i| (xi0 + i, -scale)));
    sys.set_objective(Direction::Max, obj);
    let sol = solve_lp(&sys)?;
    require_optimal(&sol)?;
    Ok(OriginalSolution {
        rho: sol.x[rho],
        w: sol.x[1..=n].to_vec(),
        b: sol.x[b],
        xi: sol.x[xi0..xi0 + m].to_vec(),
        value: sol.value,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_sample(rng: &mut impl Rng, n: usize, m: usize) -> Sample {
        let mut instances = Vec::with_capacity(m);
        let mut labels = Vec::with_capacity(m);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..m {
            let x: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(0.4)).collect();
            let score: f64 = x.iter().map(|&j| w[j as usize]).sum::<f64>() + rng.gen_range(-0.5..0.5);
            labels.push(if score >= 0.0 { 1 } else { -1 });
            instances.push(x);
        }
        Sample::new(n, instances, labels).unwrap()
    }

    fn toy() -> Sample {
        Sample::from_dense(&[(vec![1, 0], 1), (vec![0, 1], -1)]).unwrap()
    }

    #[test]
    fn two_point_diagram() {
        let sn = SampleNzdd::build(&toy(), &ElementOrder::Frequency).unwrap();
        let paths = sn.g.paths(100).unwrap();
        assert_eq!(paths.len(), 2);
        let mut sets: Vec<(Vec<u32>, f64)> = paths
            .iter()
            .map(|p| (sn.g.path_set(p), sn.sign[p[0]]))
            .collect();
        sets.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(sets, vec![(vec![0, 2], 1.0), (vec![1, 2], -1.0)]);
        for p in &paths {
            assert!(p.iter().all(|&e| sn.sign[e] == sn.sign[p[0]]));
            assert!(sn.g.edge(p[0]).labels.is_empty());
        }
        assert_eq!(sn.mult.iter().filter(|&&m| m == 1.0).count(), sn.num_edges());
    }

    #[test]
    fn duplicates_fold_into_multiplicity() {
        let rows: Vec<(Vec<u8>, i8)> = (0..5).map(|_| (vec![1, 1, 0], 1)).collect();
        let s = Sample::from_dense(&rows).unwrap();
        let sn = SampleNzdd::build(&s, &ElementOrder::Frequency).unwrap();
        assert_eq!(sn.g.num_paths(), 1);
        assert!(sn.mult.iter().all(|&m| m == 5.0));
        let leaf_in: f64 = sn.g.in_edges(LEAF).iter().map(|&e| sn.mult[e]).sum();
        assert_eq!(leaf_in, 5.0);
    }

    #[test]
    fn scores_of_uniform_flow() {
        // Symmetric sample: feature 2 is on for everyone.
        let s = Sample::from_dense(&[(vec![1, 0, 1], 1), (vec![0, 1, 1], -1)]).unwrap();
        let sn = SampleNzdd::build(&s, &ElementOrder::Frequency).unwrap();
        let d0 = sn.initial_flow();
        assert!(sn.edge_scores(&d0)[2].abs() < 1e-15);
        assert!((sn.edge_scores(&d0)[0] - 0.5).abs() < 1e-15);

        let pos = Sample::from_dense(&[(vec![1, 0], 1), (vec![1, 1], 1)]).unwrap();
        let sn = SampleNzdd::build(&pos, &ElementOrder::Frequency).unwrap();
        assert!((sn.edge_scores(&sn.initial_flow())[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn initial_flow_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_sample(&mut rng, 6, 40);
        let sn = SampleNzdd::build(&s, &ElementOrder::Frequency).unwrap();
        for nu in [0.1, 0.5, 1.0] {
            assert!(sn.flow_violation(&sn.initial_flow(), nu) < 1e-12);
        }
    }

    #[test]
    fn separable_pair() {
        let s = toy();
        let sn = SampleNzdd::build(&s, &ElementOrder::Frequency).unwrap();
        let ext = solve_extended(&sn, 1.0).unwrap();
        let orig = solve_original_softmargin(&s, 1.0).unwrap();
        assert!((ext.objective - orig.value).abs() < 1e-9);
        assert!(orig.value >= 0.0);
        assert!((orig.rho - 1.0).abs() < 1e-9);
        let cg = column_generation(&sn, 1.0, 1e-4).unwrap();
        assert!((cg.solution.objective - ext.objective).abs() <= 1e-4);
    }

    #[test]
    fn extended_matches_original_and_cg() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..12 {
            let n = rng.gen_range(2..8);
            let m = rng.gen_range(5..60);
            let s = random_sample(&mut rng, n, m);
            let sn = SampleNzdd::build(&s, &ElementOrder::Frequency).unwrap();
            for nu in [0.2, 0.5, 1.0] {
                let ext = solve_extended(&sn, nu).unwrap();
                let orig = solve_original_softmargin(&s, nu).unwrap();
                // Slacks are shared by edges, so this is a restriction.
                assert!(
                    ext.objective <= orig.value + 1e-7,
                    "round {round} nu {nu}: {} vs {}",
                    ext.objective,
                    orig.value
                );
                let mapped = ext.to_original(&sn, &s, nu).unwrap();
                assert!(mapped.violation(&s) < 1e-7);
                assert!((mapped.value - ext.objective).abs() < 1e-7);

                let cg = column_generation(&sn, nu, 1e-4).unwrap();
                assert!((cg.solution.objective - cg.gamma).abs() < 1e-7);
                assert!((cg.solution.objective - ext.objective).abs() <= 1e-4);
                let full = solve_restricted(&sn, nu, &(0..=n).collect::<Vec<_>>()).unwrap();
                assert!((full.gamma - ext.objective).abs() < 1e-7);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scores_match_per_instance_sums(seed in any::<u64>(), n in 2usize..6, m in 2usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_sample(&mut rng, n, m);
            let sn = SampleNzdd::build(&s, &ElementOrder::Frequency).unwrap();
            // Under d0 every instance carries 1/m; the score of j is the
            // label-weighted fraction of instances with x_j = 1.
            let d0 = sn.initial_flow();
            let scores = sn.edge_scores(&d0);
            for j in 0..=n {
                let direct: f64 = (0..m)
                    .filter(|&i| j == n || s.instance(i).contains(&(j as u32)))
                    .map(|i| f64::from(s.label(i)) / m as f64)
                    .sum::<f64>()
                    * sn.feature_sign(j);
                prop_assert!((scores[j] - direct).abs() < 1e-12);
                prop_assert!((sn.edge_score(&d0, j) - scores[j]).abs() < 1e-12);
            }
            // Any mixture of paths induces a flow; its scores must match
            // the same mixture applied to the instances directly.
            let paths = sn.g.paths(10_000).unwrap();
            let q: Vec<f64> = (0..paths.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut d = vec![0.0; sn.num_edges()];
            for (p, &qp) in paths.iter().zip(&q) {
                for &e in p {
                    d[e] += qp;
                }
            }
            let scores = sn.edge_scores(&d);
            for j in 0..=n {
                let direct: f64 = paths
                    .iter()
                    .zip(&q)
                    .filter(|(p, _)| sn.g.path_set(p).contains(&(j as u32)))
                    .map(|(p, &qp)| sn.sign[p[0]] * qp)
                    .sum::<f64>()
                    * sn.feature_sign(j);
                prop_assert!((scores[j] - direct).abs() < 1e-9);
            }
            let leaf_in: f64 = sn.g.in_edges(LEAF).iter().map(|&e| sn.mult[e]).sum();
            prop_assert_eq!(leaf_in, m as f64);
        }
    }
}
