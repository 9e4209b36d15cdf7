//! Smoothed soft margin objective over a compressed sample.
//!
//! With path lengths `L(P) = sum_{e in P} (sign(e) sum_{j in e} w_j + beta_e)`
//! the exact objective is
//!
//! ```text
//! F(w, beta) = min_P L(P) - (1/(nu m)) sum_e m_e beta_e
//! ```
//!
//! and `Theta` replaces the minimum over the `m` instance paths by the soft
//! minimum `-(1/eta) ln((1/m) sum_i exp(-eta L(P_i)))`. Both are evaluated on
//! the diagram: a min-plus pass for `F`, a log-sum-exp pass for `Theta`, and a
//! forward/backward pass for the edge marginals of the path distribution
//! `q(P) ~ omega(P) exp(-eta L(P))`, which give the gradient.

use crate::error::{Error, Result};
use crate::nzdd::{LEAF, ROOT};
use crate::softmargin::{potentials, SampleNzdd};

/// Smallest `eta` whose sandwich width `ln(m) / eta` is `eps / 2`.
pub fn eta_for_accuracy(eps: f64, m: usize) -> f64 {
    2.0 / eps * (m as f64).ln()
}

fn check(sn: &SampleNzdd, w: &[f64], beta: &[f64], eta: f64, nu: f64) -> Result<()> {
    if w.len() != sn.n + 1 || beta.len() != sn.num_edges() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} weights and {} slacks, got {} and {}",
            sn.n + 1,
            sn.num_edges(),
            w.len(),
            beta.len()
        )));
    }
    if !(eta > 0.0) || !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidParameter(format!("need eta > 0 and nu in (0, 1], got {eta}, {nu}")));
    }
    Ok(())
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + (-(a - b).abs()).exp().ln_1p()
}

fn slack_penalty(sn: &SampleNzdd, beta: &[f64], nu: f64) -> f64 {
    sn.mult.iter().zip(beta).map(|(m, b)| m * b).sum::<f64>() / (nu * sn.m as f64)
}

struct Passes {
    log_w: Vec<f64>,
    fwd: Vec<f64>,
    bwd: Vec<f64>,
}

impl Passes {
    fn new(sn: &SampleNzdd, w: &[f64], beta: &[f64], eta: f64) -> Self {
        let g = &sn.g;
        let len = sn.edge_weights(w);
        let log_w: Vec<f64> = (0..sn.num_edges())
            .map(|e| sn.omega[e].ln() - eta * (len[e] + beta[e]))
            .collect();
        let order = g.topological_order();
        let mut fwd = vec![f64::NEG_INFINITY; g.node_count()];
        fwd[ROOT] = 0.0;
        for &u in order {
            for &e in g.out_edges(u) {
                let v = g.edge(e).to;
                fwd[v] = log_add(fwd[v], fwd[u] + log_w[e]);
            }
        }
        let mut bwd = vec![f64::NEG_INFINITY; g.node_count()];
        bwd[LEAF] = 0.0;
        for &u in order.iter().rev() {
            for &e in g.out_edges(u) {
                bwd[u] = log_add(bwd[u], log_w[e] + bwd[g.edge(e).to]);
            }
        }
        Passes { log_w, fwd, bwd }
    }

    fn log_z(&self) -> f64 {
        self.fwd[LEAF]
    }
}

/// `Theta(w, beta)`.
pub fn theta(sn: &SampleNzdd, w: &[f64], beta: &[f64], eta: f64, nu: f64) -> Result<f64> {
    check(sn, w, beta, eta, nu)?;
    let p = Passes::new(sn, w, beta, eta);
    Ok(-(p.log_z() - (sn.m as f64).ln()) / eta - slack_penalty(sn, beta, nu))
}

/// `sum_{P through e} q(P)` for every edge.
pub fn edge_marginals(sn: &SampleNzdd, w: &[f64], beta: &[f64], eta: f64) -> Result<Vec<f64>> {
    check(sn, w, beta, eta, 1.0)?;
    let p = Passes::new(sn, w, beta, eta);
    let z = p.log_z();
    Ok(sn
        .g
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| (p.fwd[edge.from] + p.log_w[e] + p.bwd[edge.to] - z).exp())
        .collect())
}

/// Partial derivatives of `Theta` in `w` and in `beta`.
pub fn grad_theta(
    sn: &SampleNzdd,
    w: &[f64],
    beta: &[f64],
    eta: f64,
    nu: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check(sn, w, beta, eta, nu)?;
    let q = edge_marginals(sn, w, beta, eta)?;
    let mut gw = vec![0.0; sn.n + 1];
    for (e, &qe) in q.iter().enumerate() {
        for j in sn.features(e) {
            gw[j] += sn.sign[e] * qe;
        }
    }
    let scale = 1.0 / (nu * sn.m as f64);
    let gb = q.iter().zip(&sn.mult).map(|(qe, me)| qe - me * scale).collect();
    Ok((gw, gb))
}

/// The exact objective `F(w, beta)`.
pub fn margin_value(sn: &SampleNzdd, w: &[f64], beta: &[f64], nu: f64) -> Result<f64> {
    check(sn, w, beta, 1.0, nu)?;
    Ok(potentials(sn, w, beta)[LEAF] - slack_penalty(sn, beta, nu))
}
