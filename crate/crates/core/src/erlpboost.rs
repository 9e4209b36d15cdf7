//! Entropy regularised LPBoost over a compressed sample.
//!
//! Round `t` picks the feature with the largest edge score under the current
//! flow `d^{t-1}` and then moves to the flow minimising
//!
//! ```text
//! P^t(d) = max_{j in J_t} score_j(d) + (1/eta) sum_e [d_e ln(d_e / d0_e) - d_e + d0_e]
//! ```
//!
//! over the capped unit flows. The subproblem is solved through its concave
//! dual in the feature weights `w` (a simplex over `J_t`) and the node
//! potentials `s`; the edge slacks have a closed form, which leaves
//! `d_e = min(d0_e exp(-eta a_e), cap_e)` with
//! `a_e = sign(e) sum_j sign(j) w_j [j in e] + s_u - s_v`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::nzdd::{EdgeId, LEAF, ROOT};
use crate::softmargin::{best_hypothesis, solve_restricted, MarginSolution, SampleNzdd};

/// `(4 / eps) depth max(1, ln(1/nu))`.
pub fn default_eta(depth: usize, nu: f64, eps: f64) -> f64 {
    4.0 / eps * depth as f64 * (1.0f64).max((1.0 / nu).ln())
}

/// `(144 / eps^2) depth^2 max(1, ln(1/nu))`.
pub fn iteration_bound(depth: usize, nu: f64, eps: f64) -> f64 {
    144.0 / (eps * eps) * (depth * depth) as f64 * (1.0f64).max((1.0 / nu).ln())
}

/// Unnormalised relative entropy of `d` with respect to `d0`.
pub fn relative_entropy(d: &[f64], d0: &[f64]) -> f64 {
    d.iter()
        .zip(d0)
        .map(|(&x, &x0)| {
            let t = if x > 0.0 { x * (x / x0).ln() } else { 0.0 };
            t - x + x0
        })
        .sum()
}

/// `P(d)` for the hypothesis set `hyps`.
pub fn regularized_objective(sn: &SampleNzdd, hyps: &[usize], eta: f64, d: &[f64]) -> f64 {
    let scores = sn.edge_scores(d);
    let worst = hyps.iter().map(|&j| scores[j]).fold(f64::NEG_INFINITY, f64::max);
    worst + relative_entropy(d, &sn.initial_flow()) / eta
}

#[derive(Clone, Debug)]
pub struct SubproblemSolution {
    pub d: Vec<f64>,
    /// `P(d)`.
    pub objective: f64,
    /// Value of the dual at the returned multipliers; a lower bound on the
    /// optimum up to the flow residual.
    pub dual: f64,
    pub residual: f64,
    pub newton_steps: usize,
}

struct Dual<'a> {
    sn: &'a SampleNzdd,
    d0: Vec<f64>,
    cap: Vec<f64>,
    ln_d0: Vec<f64>,
    ln_cap: Vec<f64>,
    // Per edge: (slot in w, coefficient).
    terms: Vec<Vec<(usize, f64)>>,
    k: usize,
}

#[derive(Clone)]
struct Point {
    w: Vec<f64>,
    s: Vec<f64>,
}

fn s_slot(v: usize) -> usize {
    if v == ROOT {
        0
    } else {
        v - 1
    }
}

impl<'a> Dual<'a> {
    fn new(sn: &'a SampleNzdd, nu: f64, hyps: &[usize]) -> Self {
        let d0 = sn.initial_flow();
        let cap = sn.capacities(nu);
        let terms = (0..sn.num_edges())
            .map(|e| {
                hyps.iter()
                    .enumerate()
                    .filter(|&(_, &j)| sn.features(e).any(|l| l == j))
                    .map(|(k, &j)| (k, sn.sign[e] * sn.feature_sign(j)))
                    .collect()
            })
            .collect();
        Dual {
            sn,
            ln_d0: d0.iter().map(|x| x.ln()).collect(),
            ln_cap: cap.iter().map(|x| x.ln()).collect(),
            d0,
            cap,
            terms,
            k: hyps.len(),
        }
    }

    fn arg(&self, p: &Point, e: EdgeId) -> f64 {
        let edge = self.sn.g.edge(e);
        let lin: f64 = self.terms[e].iter().map(|&(k, c)| c * p.w[k]).sum();
        lin + p.s[edge.from] - p.s[edge.to]
    }

    /// Log of the uncapped flow on every edge.
    fn log_flows(&self, p: &Point, eta: f64) -> Vec<f64> {
        (0..self.sn.num_edges())
            .map(|e| self.ln_d0[e] - eta * self.arg(p, e))
            .collect()
    }

    fn flows(&self, lf: &[f64]) -> Vec<f64> {
        lf.iter()
            .zip(&self.ln_cap)
            .zip(&self.cap)
            .map(|((&l, &lc), &c)| if l >= lc { c } else { l.exp() })
            .collect()
    }

    /// Negated dual objective without the barrier.
    fn neg_dual(&self, p: &Point, eta: f64) -> f64 {
        let lf = self.log_flows(p, eta);
        let mut acc = p.s[ROOT] - p.s[LEAF];
        for (e, &l) in lf.iter().enumerate() {
            if l >= self.ln_cap[e] {
                let beta = (l - self.ln_cap[e]) / eta;
                acc += (self.cap[e] - self.d0[e]) / eta + self.cap[e] * beta;
            } else {
                acc += (l.exp() - self.d0[e]) / eta;
            }
        }
        acc
    }

    fn barrier_objective(&self, p: &Point, eta: f64, mu: f64) -> f64 {
        if p.w.iter().any(|&x| x <= 0.0) {
            return f64::INFINITY;
        }
        self.neg_dual(p, eta) - mu * p.w.iter().map(|x| x.ln()).sum::<f64>()
    }

    /// Net outflow minus supply at every node; minus the gradient in `s`.
    fn imbalance(&self, d: &[f64]) -> Vec<f64> {
        let g = &self.sn.g;
        let mut r = vec![0.0; g.node_count()];
        for (e, edge) in g.edges().iter().enumerate() {
            r[edge.from] += d[e];
            r[edge.to] -= d[e];
        }
        r[ROOT] -= 1.0;
        r[LEAF] += 1.0;
        r
    }

    fn dim(&self) -> usize {
        self.k + self.sn.g.node_count() - 1
    }

    /// Flows, their logs, the gradient of the barrier objective and the
    /// flow residual at `p`.
    fn gradient(&self, p: &Point, eta: f64, mu: f64) -> (Vec<f64>, Vec<f64>, DVector<f64>, f64) {
        let g = &self.sn.g;
        let k = self.k;
        let lf = self.log_flows(p, eta);
        let d = self.flows(&lf);
        let imb = self.imbalance(&d);
        let mut grad = DVector::<f64>::zeros(self.dim());
        for (kk, &wk) in p.w.iter().enumerate() {
            grad[kk] -= mu / wk;
        }
        let mut residual: f64 = 0.0;
        for v in (0..g.node_count()).filter(|&v| v != LEAF) {
            grad[k + s_slot(v)] = -imb[v];
            residual = residual.max(imb[v].abs());
        }
        for (e, &de) in d.iter().enumerate() {
            for &(kk, c) in &self.terms[e] {
                grad[kk] -= c * de;
            }
        }
        (lf, d, grad, residual)
    }

    /// Size of the gradient projected onto `sum w = 0`.
    fn stationarity(&self, grad: &DVector<f64>) -> f64 {
        let k = self.k;
        let mean = grad.rows(0, k).sum() / k as f64;
        let gw = (0..k).fold(0.0f64, |a, i| a.max((grad[i] - mean).abs()));
        grad.rows(k, grad.len() - k).amax().max(gw)
    }

    /// One damped Newton step on the barrier objective restricted to
    /// `sum w = 1`. Returns the Newton decrement, the flow residual before
    /// the step, and whether the step was taken.
    fn newton_step(&self, p: &mut Point, eta: f64, mu: f64) -> Result<(f64, f64, bool)> {
        let g = &self.sn.g;
        let k = self.k;
        let dim = self.dim();
        let (lf, d, grad, residual) = self.gradient(p, eta, mu);

        let mut hess = DMatrix::<f64>::zeros(dim + 1, dim + 1);
        for (kk, &wk) in p.w.iter().enumerate() {
            hess[(kk, kk)] += mu / (wk * wk);
        }
        let mut idx: Vec<(usize, f64)> = Vec::new();
        for (e, edge) in g.edges().iter().enumerate() {
            if lf[e] >= self.ln_cap[e] {
                continue;
            }
            let curv = eta * d[e];
            if curv == 0.0 {
                continue;
            }
            idx.clear();
            idx.extend(self.terms[e].iter().copied());
            if edge.from != LEAF {
                idx.push((k + s_slot(edge.from), 1.0));
            }
            if edge.to != LEAF {
                idx.push((k + s_slot(edge.to), -1.0));
            }
            for &(a, ca) in &idx {
                for &(b, cb) in &idx {
                    hess[(a, b)] += curv * ca * cb;
                }
            }
        }
        let gnorm = grad.amax();
        let scale = (0..dim).fold(0.0f64, |a, i| a.max(hess[(i, i)]));
        let reg = 1e-3 * gnorm.min(1.0) + 1e-13 * scale.max(1.0);
        for i in 0..dim {
            hess[(i, i)] += reg;
        }
        for kk in 0..k {
            hess[(kk, dim)] = 1.0;
            hess[(dim, kk)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(dim + 1);
        rhs.rows_mut(0, dim).copy_from(&(-&grad));
        let step = hess
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular Newton system".into()))?;
        let dir = step.rows(0, dim);
        let decrement = -grad.dot(&dir);
        if !decrement.is_finite() {
            return Err(Error::Numerical("non-finite Newton step".into()));
        }

        let mut t: f64 = 1.0;
        for kk in 0..k {
            if dir[kk] < 0.0 {
                t = t.min(-0.99 * p.w[kk] / dir[kk]);
            }
        }
        let f0 = self.barrier_objective(p, eta, mu);
        let stat0 = self.stationarity(&grad);
        let trial = |t: f64| Point {
            w: (0..k).map(|kk| p.w[kk] + t * dir[kk]).collect(),
            s: (0..g.node_count())
                .map(|v| if v == LEAF { 0.0 } else { p.s[v] + t * dir[k + s_slot(v)] })
                .collect(),
        };
        while t > 1e-16 {
            let q = trial(t);
            let f = self.barrier_objective(&q, eta, mu);
            let armijo = f < f0 && f <= f0 - 0.25 * t * decrement.max(0.0);
            // Near the optimum the objective stops resolving progress; fall
            // back to asking for a smaller gradient.
            let flat = f.is_finite() && (f - f0).abs() <= 1e-13 * (1.0 + f0.abs());
            if armijo || (flat && self.stationarity(&self.gradient(&q, eta, mu).2) < stat0) {
                *p = q;
                return Ok((decrement, residual, true));
            }
            t *= 0.5;
        }
        Ok((decrement, residual, false))
    }
}

/// Minimises `P(d)` over hypotheses `hyps` on the capped flow polytope to
/// objective accuracy about `tol`, with flow residual below `1e-9`.
pub fn solve_subproblem(
    sn: &SampleNzdd,
    nu: f64,
    hyps: &[usize],
    eta: f64,
    tol: f64,
    max_steps: usize,
) -> Result<SubproblemSolution> {
    if hyps.is_empty() || !(tol > 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidParameter(
            "subproblem needs hypotheses, tol > 0 and eta > 0".into(),
        ));
    }
    if nu >= 1.0 {
        // The capacities equal d0, which is then the only feasible flow.
        let d = sn.initial_flow();
        let objective = regularized_objective(sn, hyps, eta, &d);
        return Ok(SubproblemSolution {
            residual: sn.flow_violation(&d, nu),
            dual: objective,
            objective,
            d,
            newton_steps: 0,
        });
    }
    let dual = Dual::new(sn, nu, hyps);
    let k = hyps.len();
    let mut p = Point {
        w: vec![1.0 / k as f64; k],
        s: vec![0.0; sn.g.node_count()],
    };
    let mu_final = tol / (10.0 * k as f64);
    let mut cur_eta = eta.min(1.0);
    let mut mu: f64 = 0.1;
    let mut steps = 0;
    let mut residual = f64::INFINITY;
    loop {
        let last = cur_eta >= eta && mu <= mu_final;
        let (dec_tol, res_tol) = if last { (1e-3 * tol, 1e-9) } else { (1e-6, 1e-6) };
        loop {
            if steps >= max_steps {
                return Err(Error::SubproblemNotConverged { steps, residual });
            }
            let before = p.clone();
            let (dec, res, moved) = dual.newton_step(&mut p, cur_eta, mu)?;
            steps += 1;
            residual = res;
            if (dec <= dec_tol && res <= res_tol) || !moved {
                // The decision is about the point the step started from.
                p = before;
                break;
            }
        }
        if last {
            break;
        }
        if cur_eta < eta {
            cur_eta = (cur_eta * 4.0).min(eta);
            mu = (mu * 0.25).max(mu_final);
        } else {
            mu = (mu * 0.1).max(mu_final);
        }
    }
    let d = dual.flows(&dual.log_flows(&p, eta));
    let residual = sn.flow_violation(&d, nu);
    if residual > 1e-8 {
        return Err(Error::SubproblemNotConverged { steps, residual });
    }
    Ok(SubproblemSolution {
        objective: regularized_objective(sn, hyps, eta, &d),
        dual: -dual.neg_dual(&p, eta),
        d,
        residual,
        newton_steps: steps,
    })
}

#[derive(Clone, Debug)]
pub struct ErlpOptions {
    /// Overrides [`default_eta`].
    pub eta: Option<f64>,
    /// Newton step budget per subproblem.
    pub max_newton_steps: usize,
}

impl Default for ErlpOptions {
    fn default() -> Self {
        ErlpOptions {
            eta: None,
            max_newton_steps: 100_000,
        }
    }
}

/// One completed round.
#[derive(Clone, Debug)]
pub struct ErlpRecord {
    pub t: usize,
    pub hypothesis: usize,
    pub delta: f64,
    /// Relative entropy of `d^t` to `d0`.
    pub entropy: f64,
    /// `P^t(d^t)`.
    pub objective: f64,
    /// [`SampleNzdd::flow_violation`] of `d^t`.
    pub flow_violation: f64,
    pub total_flow: f64,
    pub newton_steps: usize,
}

impl ErlpRecord {
    pub const TSV_HEADER: &'static str = "t\tj\tdelta\tentropy\tobjective\tresidual";

    pub fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.3e}",
            self.t, self.hypothesis, self.delta, self.entropy, self.objective, self.flow_violation
        )
    }
}

#[derive(Clone, Debug)]
pub struct ErlpResult {
    pub solution: MarginSolution,
    /// Optimum of the restricted dual over the chosen hypotheses.
    pub gamma: f64,
    /// Number of completed rounds `T`.
    pub iterations: usize,
    pub hypotheses: Vec<usize>,
    pub eta: f64,
    /// The gap that triggered the stop.
    pub final_delta: f64,
    pub records: Vec<ErlpRecord>,
}

/// Runs the boosting loop until `delta^t <= eps / 2`, then solves the
/// restricted soft margin dual over the chosen features for the weights.
///
/// `P^0(d^0)` is taken as 0, so `delta^1` is the best edge score under `d0`.
pub fn run(sn: &SampleNzdd, nu: f64, eps: f64, opts: &ErlpOptions) -> Result<ErlpResult> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidParameter(format!("nu must lie in (0, 1], got {nu}")));
    }
    let eta = opts.eta.unwrap_or_else(|| default_eta(sn.depth(), nu, eps));
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let tol = (eps / 100.0).min(1e-6);
    let d0 = sn.initial_flow();
    let mut d = d0.clone();
    let mut hyps: Vec<usize> = Vec::new();
    let mut p_prev = 0.0;
    let mut best = f64::INFINITY;
    let mut records = Vec::new();
    let final_delta = loop {
        let t = records.len() + 1;
        let scores = sn.edge_scores(&d);
        let (j, h) = best_hypothesis(&scores);
        let old = hyps.iter().map(|&i| scores[i]).fold(f64::NEG_INFINITY, f64::max);
        best = best.min(old.max(h) + relative_entropy(&d, &d0) / eta);
        let delta = best - p_prev;
        if delta <= eps / 2.0 || hyps.contains(&j) {
            if hyps.is_empty() {
                hyps.push(j);
            }
            break delta;
        }
        hyps.push(j);
        let sub = solve_subproblem(sn, nu, &hyps, eta, tol, opts.max_newton_steps)?;
        d = sub.d;
        p_prev = sub.objective;
        let rec = ErlpRecord {
            t,
            hypothesis: j,
            delta,
            entropy: relative_entropy(&d, &d0),
            objective: sub.objective,
            flow_violation: sub.residual,
            total_flow: d.iter().sum(),
            newton_steps: sub.newton_steps,
        };
        log::debug!("erlp {}", rec.tsv());
        records.push(rec);
    };
    let restricted = solve_restricted(sn, nu, &hyps)?;
    Ok(ErlpResult {
        solution: restricted.primal,
        gamma: restricted.gamma,
        iterations: records.len(),
        hypotheses: hyps,
        eta,
        final_delta,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::ElementOrder;
    use crate::sample::Sample;
    use crate::softmargin::tests::random_sample;
    use crate::softmargin::{build_restricted_dual, solve_extended};
    use crate::lp::solve_lp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sn_of(sample: &Sample) -> SampleNzdd {
        SampleNzdd::build(sample, &ElementOrder::Frequency).unwrap()
    }

    /// A random point of the capped flow polytope: instance weights in
    /// `[0, 1/(nu m)]` summing to one, pushed along the instance paths.
    pub(crate) fn random_feasible_flow(
        sn: &SampleNzdd,
        sample: &Sample,
        nu: f64,
        rng: &mut impl Rng,
    ) -> Vec<f64> {
        let m = sample.len();
        let cap = 1.0 / (nu * m as f64);
        let mut q = vec![1.0 / m as f64; m];
        for _ in 0..4 * m {
            let (a, b) = (rng.gen_range(0..m), rng.gen_range(0..m));
            let room = (q[a]).min(cap - q[b]);
            if room > 0.0 {
                let x = rng.gen::<f64>() * room;
                q[a] -= x;
                q[b] += x;
            }
        }
        let mut d = vec![0.0; sn.num_edges()];
        for (i, path) in sn.instance_paths(sample).unwrap().iter().enumerate() {
            for &e in path {
                d[e] += q[i];
            }
        }
        d
    }

    fn lp_value(sn: &SampleNzdd, nu: f64, hyps: &[usize]) -> f64 {
        let sol = solve_lp(&build_restricted_dual(sn, nu, hyps).unwrap()).unwrap();
        sol.value
    }

    #[test]
    fn eta_and_bound_formulas() {
        assert!((default_eta(3, 1.0, 0.1) - 120.0).abs() < 1e-12);
        let e = default_eta(2, 0.1, 0.5);
        assert!((e - 16.0 * 10f64.ln()).abs() < 1e-12);
        assert!((iteration_bound(2, 0.5, 1.0) - 576.0).abs() < 1e-9);
    }

    #[test]
    fn entropy_of_reference_is_zero() {
        let d0 = [0.2, 0.3, 0.5];
        assert_eq!(relative_entropy(&d0, &d0), 0.0);
        assert!((relative_entropy(&[0.0, 0.3, 0.5], &d0) - 0.2).abs() < 1e-15);
        assert!(relative_entropy(&[0.4, 0.3, 0.5], &d0) > 0.0);
    }

    #[test]
    fn uncovered_hypotheses_keep_initial_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sample = random_sample(&mut rng, 4, 30);
        // Feature 3 switched off everywhere, so its score is identically zero.
        let inst: Vec<Vec<u32>> = sample
            .instances()
            .iter()
            .map(|x| x.iter().copied().filter(|&j| j != 3).collect())
            .collect();
        sample = Sample::new(4, inst, sample.labels().to_vec()).unwrap();
        let sn = sn_of(&sample);
        let sub = solve_subproblem(&sn, 0.3, &[3], 50.0, 1e-8, 10_000).unwrap();
        let d0 = sn.initial_flow();
        for (a, b) in sub.d.iter().zip(&d0) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(sub.objective.abs() < 1e-12);
    }

    #[test]
    fn large_eta_approaches_the_lp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let sample = random_sample(&mut rng, 5, 40);
            let sn = sn_of(&sample);
            let nu = 0.4;
            for hyps in [vec![0], vec![5], vec![1, 2, 5]] {
                let eta = 1e4;
                let sub = solve_subproblem(&sn, nu, &hyps, eta, 1e-9, 100_000).unwrap();
                let lp = lp_value(&sn, nu, &hyps);
                let slack = sn.depth() as f64 * (1.0 / nu).ln() / eta;
                assert!(sub.objective >= lp - 1e-7, "{} < {lp}", sub.objective);
                assert!(sub.objective <= lp + slack + 1e-7);
                assert!(sub.objective - lp < 1e-3);
                assert!(sub.residual <= 1e-8);
            }
        }
    }

    #[test]
    fn beats_random_feasible_flows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let sample = random_sample(&mut rng, 5, 25);
            let sn = sn_of(&sample);
            let nu = rng.gen_range(0.2..0.9);
            let hyps = [0, 2, 5];
            let eta = rng.gen_range(1.0..200.0);
            let sub = solve_subproblem(&sn, nu, &hyps, eta, 1e-9, 100_000).unwrap();
            assert!(sub.objective - sub.dual <= 1e-7, "gap {}", sub.objective - sub.dual);
            for _ in 0..1000 {
                let d = random_feasible_flow(&sn, &sample, nu, &mut rng);
                assert!(sn.flow_violation(&d, nu) < 1e-12);
                let p = regularized_objective(&sn, &hyps, eta, &d);
                assert!(sub.objective <= p + 1e-9, "{} > {p}", sub.objective);
            }
        }
    }

    #[test]
    fn feasible_flows_total_at_most_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let sample = random_sample(&mut rng, 6, 30);
            let sn = sn_of(&sample);
            let nu = rng.gen_range(0.05..1.0);
            let d = random_feasible_flow(&sn, &sample, nu, &mut rng);
            assert!(d.iter().sum::<f64>() <= sn.depth() as f64 + 1e-12);
            let ent = relative_entropy(&d, &sn.initial_flow());
            assert!(ent <= sn.depth() as f64 * (1.0 / nu).ln() + 1e-9);
        }
    }

    #[test]
    fn separable_sample_reaches_the_lp() {
        let sample = Sample::from_dense(&[
            (vec![1, 0, 1], 1),
            (vec![1, 1, 0], 1),
            (vec![0, 1, 0], -1),
            (vec![0, 0, 1], -1),
        ])
        .unwrap();
        let sn = sn_of(&sample);
        let res = run(&sn, 1.0, 0.1, &ErlpOptions::default()).unwrap();
        let opt = solve_extended(&sn, 1.0).unwrap().objective;
        assert!(res.gamma >= opt - 0.1);
        assert!(res.gamma <= opt + 1e-9);
    }

    #[test]
    fn runs_respect_guarantees() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..6 {
            let sample = random_sample(&mut rng, 6, 40);
            let sn = sn_of(&sample);
            for nu in [0.2, 0.5] {
                let eps = 0.05;
                let res = run(&sn, nu, eps, &ErlpOptions::default()).unwrap();
                let opt = solve_extended(&sn, nu).unwrap().objective;
                assert!(res.gamma >= opt - eps, "{} vs {opt}", res.gamma);
                assert!((res.iterations as f64) <= iteration_bound(sn.depth(), nu, eps));
                assert!(res.final_delta <= eps / 2.0);
                let ent_bound = sn.depth() as f64 * (1.0 / nu).ln();
                for (i, r) in res.records.iter().enumerate() {
                    assert!(r.flow_violation <= 1e-8);
                    assert!(r.entropy <= ent_bound + 1e-9);
                    assert!(r.total_flow <= sn.depth() as f64 + 1e-8 * sn.num_edges() as f64);
                    if i > 0 {
                        assert!(r.objective >= res.records[i - 1].objective - 1e-6);
                    }
                    // P^0 = 0 may exceed P^1(d^1), so the gap only shrinks
                    // from the third round on.
                    if i > 1 {
                        assert!(r.delta <= res.records[i - 1].delta + 1e-6, "{:?}", res.records);
                    }
                }
            }
        }
    }
}
